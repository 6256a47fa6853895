use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smd_core::bounds::{
    dbv_bound, dbv_empirical_check, lip_space_bound, lipschitz_bound_check, kfunctional_bound, DbvSpec,
};
use smd_core::moments::{central_moment_poly, central_moments_by_recurrence, raw_moment_poly};
use smd_core::report::{
    self, linspace, make_curves, make_error_table, reference_check, sig6, write_curves_csv, ReferenceCheck,
    ReferenceTable, VerificationConfig, DEFAULT_NS, DEFAULT_XS,
};
use smd_core::{apply, Error, QuadratureConfig, RecurrenceForm, Result, SequenceRule, TargetFunction, TruncationSpec};

#[derive(Parser)]
#[command(name = "smd", version, about = "Generalized Szász–Mirakjan–Durrmeyer operators B*(g;x)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate B*(g;x) at one point
    Eval(EvalArgs),
    /// Error tables |B*(g;x) - g(x)| over an (x, n) grid
    Table(TableArgs),
    /// Operator curves over an x grid
    Curve(CurveArgs),
    /// Raw and central moment polynomials
    Moments(MomentArgs),
    /// Error-bound components at a point
    Bounds(BoundArgs),
    /// Run the verification suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Trunc {
    /// Tail epsilon for the series truncation
    #[arg(long, conflicts_with = "j")]
    eps: Option<f64>,
    /// Fixed truncation index
    #[arg(long = "J", id = "j")]
    j: Option<u64>,
}

impl Trunc {
    fn spec(&self) -> TruncationSpec {
        match (self.j, self.eps) {
            (Some(j), _) => TruncationSpec::FixedJ(j),
            (None, Some(e)) => TruncationSpec::TailEpsilon(e),
            (None, None) => TruncationSpec::default(),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Built-in target name or `coeff:power:rate[;...]` literal
    #[arg(long, default_value = "x2e2x")]
    g: String,
    /// Operator parameter u (or give --n with --rule)
    #[arg(long, required_unless_present = "n")]
    u: Option<f64>,
    #[arg(long, conflicts_with = "u")]
    n: Option<u64>,
    #[arg(long, default_value = "n")]
    rule: String,
    #[arg(long)]
    x: f64,
    #[command(flatten)]
    trunc: Trunc,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value = "x2e2x")]
    g: String,
    /// Sequence rule `n`, `n1.5`, `n2`, `n^p` or `explicit:u1,u2,...`; repeatable
    #[arg(long)]
    rule: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    xs: Option<Vec<f64>>,
    #[command(flatten)]
    trunc: Trunc,
    /// CSV destination; several rules write one file each with a numeric suffix
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against the embedded reference tables
    #[arg(long)]
    paper_check: bool,
    /// Skip the pretty table on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value = "negx3e5x")]
    g: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![15.0, 35.0, 50.0])]
    us: Vec<f64>,
    /// Explicit x grid; otherwise `--points` values on [0, --xmax]
    #[arg(long, value_delimiter = ',')]
    xs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = 2.5)]
    xmax: f64,
    /// Fixed truncation indices paired with --us
    #[arg(long = "J", value_delimiter = ',')]
    j: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Corrected,
    Printed,
}

impl From<Form> for RecurrenceForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Corrected => RecurrenceForm::Corrected,
            Form::Printed => RecurrenceForm::AsPrinted,
        }
    }
}

#[derive(Args)]
struct MomentArgs {
    /// Highest order
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Also evaluate at this u (needs --x)
    #[arg(long, requires = "x")]
    u: Option<f64>,
    #[arg(long, requires = "u")]
    x: Option<f64>,
    /// Build central moments by the recurrence in this form instead of the binomial expansion
    #[arg(long)]
    recurrence: Option<Form>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Kfunctional,
    Lipschitz,
    LipSpace,
    Dbv,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    kind: BoundKind,
    #[arg(long, default_value = "expneg")]
    g: String,
    #[arg(long)]
    u: f64,
    #[arg(long)]
    x: f64,
    /// Lipschitz order
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Constant multiplying the second-modulus component
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Lipschitz-class constant and weights
    #[arg(long = "M", default_value_t = 1.0)]
    big_m: f64,
    #[arg(long, default_value_t = 1.0)]
    m1: f64,
    #[arg(long, default_value_t = 1.0)]
    m2: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "corrected")]
    recurrence: Form,
    /// Also recompute and check the reference tables
    #[arg(long)]
    tables: bool,
}

fn main() -> ExitCode {
    // `smd table | head` closes stdout early; that is not an error.
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(move |info| {
        let msg = info.payload().downcast_ref::<String>().map(String::as_str).unwrap_or("");
        if msg.contains("Broken pipe") {
            std::process::exit(0);
        }
        default_hook(info)
    }));
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Table(a) => table(a),
        Command::Curve(a) => curve(a),
        Command::Moments(a) => moments(a),
        Command::Bounds(a) => bounds(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn eval(a: EvalArgs) -> Result<bool> {
    let g = TargetFunction::parse(&a.g)?;
    let u = match (a.u, a.n) {
        (Some(u), _) => u,
        (None, Some(n)) => SequenceRule::parse(&a.rule)?.value(n)?,
        (None, None) => unreachable!("clap requires one of --u, --n"),
    };
    let v = apply(&g, u, a.x, a.trunc.spec(), &QuadratureConfig::default())?;
    let gx = g.eval(a.x);
    println!("g            {}", g.label());
    println!("u            {u}");
    println!("x            {}", a.x);
    println!("B*(g;x)      {}", v.value);
    println!("g(x)         {gx}");
    println!("abs_error    {}", (v.value - gx).abs());
    println!("terms        {}", v.series_terms_used);
    println!("last_index   {}", v.last_index);
    println!("tail_bound   {:e}", v.tail_bound);
    println!("quad_error   {:e}", v.inner_integral_error);
    Ok(true)
}

fn csv_path(out: &Path, i: usize, total: usize) -> PathBuf {
    if total == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i}.{ext}"),
        None => format!("{stem}_{i}"),
    };
    out.with_file_name(name)
}

fn table(a: TableArgs) -> Result<bool> {
    let g = TargetFunction::parse(&a.g)?;
    let rules = if a.rule.is_empty() {
        if a.paper_check {
            vec![SequenceRule::Identity, SequenceRule::Power(1.5), SequenceRule::Power(2.0)]
        } else {
            vec![SequenceRule::Identity]
        }
    } else {
        a.rule.iter().map(|r| SequenceRule::parse(r)).collect::<Result<Vec<_>>>()?
    };
    let xs = a.xs.unwrap_or_else(|| DEFAULT_XS.to_vec());
    let ns = a.ns.unwrap_or_else(|| DEFAULT_NS.to_vec());
    let mut ok = true;
    let mut check = ReferenceCheck::default();
    let stdout = io::stdout();
    for (i, rule) in rules.iter().enumerate() {
        let t = make_error_table(&g, rule, &xs, &ns, a.trunc.spec())?;
        for c in t.failed_cells() {
            eprintln!("cell x={} n={}: {}", c.x, c.n, c.error.as_deref().unwrap_or_default());
            ok = false;
        }
        if !a.quiet {
            writeln!(stdout.lock(), "{}", t.pretty())?;
        }
        if let Some(out) = &a.out {
            let path = csv_path(out, i + 1, rules.len());
            t.write_csv(BufWriter::new(File::create(&path)?))?;
            eprintln!("wrote {}", path.display());
        }
        if a.paper_check {
            match ReferenceTable::index_for(rule) {
                Some(idx) => check.merge(reference_check(&t, idx)),
                None => eprintln!("no reference table for rule {}", rule.label()),
            }
        }
    }
    if a.paper_check {
        if g.label() != TargetFunction::exp_poly(1.0, 2, 2.0).label() {
            eprintln!("reference tables are for g = t^2 e^(2t); got {}", g.label());
            return Ok(false);
        }
        for v in check.violations() {
            println!(
                "VIOLATION table {} x={} n={}: computed {} printed {} rel {:.3e} > {:.0e}",
                v.table,
                v.x,
                v.n,
                sig6(v.computed),
                sig6(v.printed),
                v.rel_error,
                v.tolerance
            );
        }
        let bad = check.violations().count();
        println!(
            "reference check: {} cells, {} spot cells, max relative error {:.3e}, {} violations",
            check.cells.len(),
            check.spot.len(),
            check.max_rel_error(),
            bad
        );
        ok &= check.passed();
    }
    Ok(ok)
}

fn curve(a: CurveArgs) -> Result<bool> {
    let g = TargetFunction::parse(&a.g)?;
    let xs = a.xs.unwrap_or_else(|| linspace(0.0, a.xmax, a.points));
    let curves = make_curves(&g, &a.us, &xs, a.j.as_deref())?;
    match &a.out {
        Some(p) => {
            write_curves_csv(&curves, BufWriter::new(File::create(p)?))?;
            eprintln!("wrote {}", p.display());
        }
        None => write_curves_csv(&curves, io::stdout().lock())?,
    }
    if a.out.is_some() {
        let target = curves.last().expect("target curve is always present");
        for c in &curves[..curves.len() - 1] {
            println!("{:<24} max |B* - g| = {}", c.label, sig6(c.max_deviation_from(target)));
        }
    }
    Ok(true)
}

fn moments(a: MomentArgs) -> Result<bool> {
    let central = match a.recurrence {
        Some(f) => central_moments_by_recurrence(a.m, f.into())?,
        None => (0..=a.m).map(central_moment_poly).collect::<Result<Vec<_>>>()?,
    };
    for (m, omega) in central.iter().enumerate() {
        let raw = raw_moment_poly(m)?;
        println!("B*(t^{m}) = {raw}");
        println!("Omega_{m}  = {omega}");
        if let (Some(u), Some(x)) = (a.u, a.x) {
            println!("  at u={u}, x={x}: raw {}  central {}", raw.eval(u, x), omega.eval(u, x));
        }
    }
    Ok(true)
}

fn bounds(a: BoundArgs) -> Result<bool> {
    let g = TargetFunction::parse(&a.g)?;
    match a.kind {
        BoundKind::Kfunctional => {
            let b = kfunctional_bound(&g, a.u, a.x, None)?;
            let v = apply(&g, a.u, a.x, TruncationSpec::default(), &QuadratureConfig::default())?;
            println!("delta_n             {}", b.delta_n);
            println!("gamma_n             {}", b.gamma_n);
            println!("omega2(g, sqrt(delta_n)/2)  {}", b.omega2_component);
            println!("omega(g, gamma_n)   {}", b.omega_component);
            println!("C*omega2 + omega    {}  (C = {})", b.combined(a.c), a.c);
            println!("|B*(g;x) - g(x)|    {}", (v.value - g.eval(a.x)).abs());
            Ok(true)
        }
        BoundKind::Lipschitz => {
            let c = lipschitz_bound_check(&g, a.s, a.u, a.x)?;
            println!("|B*(g;x) - g(x)|    {}", c.lhs);
            println!("tau_s * Omega_2^(s/2)  {}", c.rhs);
            println!("holds               {}", c.holds);
            Ok(c.holds)
        }
        BoundKind::LipSpace => {
            let b = lip_space_bound(a.big_m, a.m1, a.m2, a.s, a.u, a.x)?;
            println!("M (Omega_2 / (x (x m1 + m2)))^(s/2)  {b}");
            Ok(true)
        }
        BoundKind::Dbv => {
            let spec = dbv_spec(&a.g, g)?;
            let b = dbv_bound(&spec, a.u, a.x)?;
            for (i, t) in b.terms.iter().enumerate() {
                println!("term {}              {t}", i + 1);
            }
            println!("total               {}", b.total);
            let c = dbv_empirical_check(&spec, a.u, a.x)?;
            println!("|B*(g;x) - g(x)|    {}", c.lhs);
            println!("holds               {}", c.holds);
            Ok(c.holds)
        }
    }
}

fn dbv_spec(name: &str, g: TargetFunction) -> Result<DbvSpec> {
    if name == "abs1" {
        return Ok(DbvSpec::abs_kink(1.0));
    }
    DbvSpec::smooth(g).map_err(|_| {
        Error::Domain(format!("no derivative available for `{name}`; use abs1 or an exponential-polynomial target"))
    })
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let r = report::run_verification_suite(&VerificationConfig { recurrence: a.recurrence.into(), reference_tables: a.tables });
    let width = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &r.checks {
        println!(
            "{}  {:<width$}  measured {:<12.4e} tolerance {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        );
    }
    let failed = r.failures().count();
    println!("{} checks, {} failed", r.checks.len(), failed);
    Ok(failed == 0)
}
