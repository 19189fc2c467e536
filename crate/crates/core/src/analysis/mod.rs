//! Index-based oracle on finite truncations of the configuration space, and
//! the checks that run against it: lemma suite, telescoping identity,
//! oracle equivalence with the sparse simulator, and the Heisenberg-picture
//! (QND) suite.

mod checks;
mod heisenberg;
mod model;

pub use checks::{
    lemma_suite, oracle_equivalence, telescoping_check, EquivalenceReport, LemmaReport, TelescopingReport,
};
pub use heisenberg::{
    e_label, e_zero, heisenberg_monitored_distribution, heisenberg_observable, projection_relations_check, qnd_check,
    CommutatorReport, DenseMatrix, HeisenbergDistributions, RelationsReport, DENSE_CAP,
};
pub use model::{
    build_truncated, dinner, dmax_abs, dnorm_sq, dsub, sinner, smax_abs, snorm_sq, ssub, window_configurations,
    BasisKind, DVec, GramCheck, SVec, TruncatedModel, Truncation, DEFAULT_BASIS_CAP, UNBOUNDED,
};

/// Tolerance for identities that hold exactly by construction.
pub const EXACT_TOL: f64 = 1e-12;

/// Tolerance for identities that go through products of `U`.
pub const PRODUCT_TOL: f64 = 1e-10;
