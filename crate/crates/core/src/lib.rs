//! Pollicott-Ruelle resonances of rational Anosov maps of the two-torus.
//!
//! Maps are words in a small set of rational generators ([`map_algebra`]).
//! For maps that expand a quadrant cone, the resonances are monomials in the
//! multipliers of four attracting fixed points in the bidisks `D^σ`
//! ([`fixed_points`], [`resonance_theory`]). The prediction is checked by
//! diagonalising truncated composition-operator matrices on weighted Fourier
//! bases ([`operator_numerics`]).
//!
//! ```
//! use torus_resonances::prelude::*;
//!
//! let word = parse_word("U(1, 0.5) . U(1, 0.3)").unwrap();
//! let report = predict(&word, 8).unwrap();
//! let top: Vec<f64> = report.eigenvalues.iter().map(|e| e.value.re).collect();
//! assert_eq!(top[0], 1.0);
//! assert!((top[1] - 0.5).abs() < 1e-12);
//! ```

pub mod cone_geometry;
pub mod dynamics_checks;
pub mod fixed_points;
pub mod gl2z;
pub mod map_algebra;
pub mod operator_numerics;
pub mod resonance_theory;

pub mod prelude {
    pub use crate::cone_geometry::{sigma_of, weight, QuadrantWeight, Sigma};
    pub use crate::dynamics_checks::{check_psec, classify_mapping, Case, MappingCase};
    pub use crate::fixed_points::{all_fixed_point_data, attracting_fixed_point};
    pub use crate::gl2z::{build_homotopic_map, reduce_to_standard, DecayTarget};
    pub use crate::map_algebra::{evaluate, inverse, linear_part, parse_word, Atom, Ext, MapWord, C64};
    pub use crate::operator_numerics::{assemble_operator, match_spectra, spectrum, OperatorKind};
    pub use crate::resonance_theory::{predict, resonance_set, trace_power, Multipliers};
    pub use crate::{Error, Result};
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("Moebius parameter at byte {pos} lies outside the unit disk (|a| = {value})")]
    OutsideDisk { pos: usize, value: f64 },
    #[error("indeterminate form 0·∞ at atom {atom}")]
    Indeterminate { atom: usize },
    #[error("pole encountered (atom {atom})")]
    Pole { atom: usize },
    #[error("point is not on the torus")]
    NotOnTorus,
    #[error("lifted Jacobian is singular at x = {x:?}")]
    NonInvertible { x: [f64; 2] },
    #[error("grid resolution {0} is too small (need at least {1})")]
    GridTooSmall(usize, usize),
    #[error("iteration left the closed bidisk: the map does not contract D^σ")]
    NoContraction,
    #[error("fixed-point iteration did not converge after {0} steps")]
    NonConvergence(usize),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("mapping case could not be certified: {0}")]
    CertificationFailed(String),
    #[error("matrix {0:?} is not hyperbolic")]
    NotHyperbolic([[i64; 2]; 2]),
    #[error("matrix {0:?} has determinant other than ±1")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("reduction failed for {0:?}")]
    ReductionFailed([[i64; 2]; 2]),
    #[error("integer overflow")]
    Overflow,
    #[error("target infeasible: {0}")]
    TargetInfeasible(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("band N = {0} exceeds the dense limit {1}")]
    BandTooLarge(usize, usize),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("empty parameter list")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;

/// Concept chapters of the guide, compiled so that their snippets run as
/// doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/words.md")]
    pub mod words {}
    #[doc = include_str!("../../../book/src/cones.md")]
    pub mod cones {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    pub mod certificates {}
    #[doc = include_str!("../../../book/src/resonances.md")]
    pub mod resonances {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    pub mod numerics {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    pub mod reduction {}
}
