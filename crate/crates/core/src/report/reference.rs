//! Published absolute errors of `B*` for `g(t) = t² e^{2t}` on the default
//! grid, for `u_n = n`, `n^{3/2}` and `n²`.

use super::{ErrorTable, DEFAULT_NS, DEFAULT_XS};
use crate::operator::SequenceRule;

pub const GLOBAL_REL_TOL: f64 = 1e-3;
pub const SPOT_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct ReferenceTable {
    pub index: usize,
    pub xs: [f64; 7],
    pub ns: [u64; 7],
    /// Rows follow `xs`, columns follow `ns`.
    pub values: [[f64; 7]; 7],
}

const TABLE_N: [[f64; 7]; 7] = [
    [0.202522, 0.0156053, 0.0069326, 0.00326665, 0.00258244, 0.00126086, 0.000622967],
    [3.82396, 0.325365, 0.148479, 0.0710035, 0.0563036, 0.0276615, 0.0137104],
    [27.2622, 2.13631, 0.969982, 0.462837, 0.366865, 0.180094, 0.0892291],
    [42.1618, 3.22439, 1.46137, 0.696735, 0.552174, 0.270979, 0.134238],
    [310.724, 20.8491, 9.3538, 4.43876, 3.51461, 1.72172, 0.852162],
    [1888.96, 110.236, 48.9145, 23.0939, 18.2677, 8.93151, 4.4164],
    [10237.6, 516.742, 226.689, 106.464, 84.1292, 41.0503, 20.2783],
];

const TABLE_N15: [[f64; 7]; 7] = [
    [0.0282979, 0.0018008, 0.000622967, 0.000218562, 0.000156203, 0.0000551185, 0.0000194739],
    [0.574288, 0.0394044, 0.0137104, 0.0048201, 0.00344596, 0.0012166, 0.000429916],
    [3.79761, 0.256632, 0.0892291, 0.0313623, 0.0224205, 0.00791509, 0.00279694],
    [5.74555, 0.386191, 0.134238, 0.0471774, 0.033726, 0.011906, 0.00420715],
    [37.6466, 2.45554, 0.852162, 0.299321, 0.213959, 0.0755213, 0.0266852],
    [201.92, 12.7484, 4.4164, 1.55031, 1.10808, 0.391058, 0.138172],
    [960.667, 58.6418, 20.2783, 7.11386, 5.08411, 1.79398, 0.633827],
];

const TABLE_N2: [[f64; 7]; 7] = [
    [0.0069326, 0.000247412, 0.0000616321, 0.0000153943, 9.85127e-6, 2.462477e-6, 6.15594e-7],
    [0.148479, 0.00545553, 0.00136032, 0.000339859, 0.000217493, 0.0000543675, 0.0000135915],
    [0.969982, 0.0354973, 0.00885019, 0.00221104, 0.00141495, 0.000353699, 0.0000884224],
    [1.46137, 0.053398, 0.0133126, 0.00332584, 0.00212836, 0.000532032, 0.000133004],
    [9.3538, 0.338802, 0.0844444, 0.0210951, 0.0134997, 0.00337451, 0.000843601],
    [48.9145, 1.75487, 0.437267, 0.109226, 0.069898, 0.0174722, 0.0043679],
    [226.689, 8.0529, 2.00598, 0.501045, 0.320634, 0.080147, 0.020036],
];

/// `(table index, x, n, printed value)` cells held to [`SPOT_REL_TOL`].
pub const SPOT_CHECKS: [(usize, f64, u64, f64); 4] = [
    (1, 1.0, 100, 1.46137),
    (1, 2.5, 1000, 20.2783),
    (2, 0.1, 100, 0.000622967),
    (3, 1.0, 10, 1.46137),
];

/// Tables 1, 2, 3 correspond to `u_n = n`, `n^{3/2}`, `n²`.
pub fn reference_table(index: usize) -> Option<ReferenceTable> {
    let values = match index {
        1 => TABLE_N,
        2 => TABLE_N15,
        3 => TABLE_N2,
        _ => return None,
    };
    Some(ReferenceTable { index, xs: DEFAULT_XS, ns: DEFAULT_NS, values })
}

impl ReferenceTable {
    pub fn rule(&self) -> SequenceRule {
        match self.index {
            1 => SequenceRule::Identity,
            2 => SequenceRule::Power(1.5),
            _ => SequenceRule::Power(2.0),
        }
    }

    /// Index of the reference table matching `rule`, if any.
    pub fn index_for(rule: &SequenceRule) -> Option<usize> {
        (1..=3).find(|&i| reference_table(i).map(|t| t.rule()) == Some(rule.clone()))
    }

    pub fn value(&self, x: f64, n: u64) -> Option<f64> {
        let i = self.xs.iter().position(|&v| v == x)?;
        let k = self.ns.iter().position(|&v| v == n)?;
        Some(self.values[i][k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub table: usize,
    pub x: f64,
    pub n: u64,
    pub computed: f64,
    pub printed: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceCheck {
    /// Every computed cell that has a printed counterpart.
    pub cells: Vec<CellComparison>,
    /// Spot cells present in the computed table, at the tighter tolerance.
    pub spot: Vec<CellComparison>,
}

impl ReferenceCheck {
    pub fn violations(&self) -> impl Iterator<Item = &CellComparison> {
        self.cells.iter().chain(&self.spot).filter(|c| !c.passes)
    }

    pub fn passed(&self) -> bool {
        !self.cells.is_empty() && self.violations().next().is_none()
    }

    pub fn max_rel_error(&self) -> f64 {
        self.cells.iter().map(|c| c.rel_error).fold(0.0, f64::max)
    }

    pub fn merge(&mut self, other: ReferenceCheck) {
        self.cells.extend(other.cells);
        self.spot.extend(other.spot);
    }
}

fn compare(table: usize, x: f64, n: u64, computed: f64, printed: f64, tolerance: f64) -> CellComparison {
    let rel_error = ((computed - printed) / printed).abs();
    CellComparison { table, x, n, computed, printed, rel_error, tolerance, passes: rel_error <= tolerance }
}

/// Compares the absolute errors in `computed` with the printed values of
/// reference table `index`. Cells that failed to evaluate count as
/// violations.
pub fn reference_check(computed: &ErrorTable, index: usize) -> ReferenceCheck {
    let mut out = ReferenceCheck::default();
    let Some(reference) = reference_table(index) else {
        return out;
    };
    for c in &computed.cells {
        if let Some(printed) = reference.value(c.x, c.n) {
            out.cells.push(compare(index, c.x, c.n, c.abs_error, printed, GLOBAL_REL_TOL));
        }
    }
    for &(t, x, n, printed) in SPOT_CHECKS.iter().filter(|s| s.0 == index) {
        if let Some(c) = computed.cell(x, n) {
            out.spot.push(compare(t, x, n, c.abs_error, printed, SPOT_REL_TOL));
        }
    }
    out
}
