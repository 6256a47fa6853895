//! Generalized Szász–Mirakjan–Durrmeyer operators
//! `B*(g; x) = u Σ_j s_{u,j}(x) ∫_0^∞ s_{u,j}(t) g(t) dt`, with
//! `s_{u,j}(x) = e^{-ux} (ux)^j / j!`: evaluation, moments, error bounds and
//! convergence tables.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod basis;
pub mod bounds;
pub mod error;
pub mod moments;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod target;

pub use basis::{szasz_weight, truncation_index, BasisPoint, TruncationSpec};
pub use error::{Error, Result};
pub use moments::{central_moment, raw_moment, RecurrenceForm};
pub use operator::{apply, apply_truncated, kernel_cdf, kernel_sf, kernel_value, OperatorValue, SequenceRule};
pub use quadrature::QuadratureConfig;
pub use target::TargetFunction;
