//! Coherence analysis of random Euclidean distance matrices.
//!
//! Node clouds are drawn from bounded atomless laws, their EDMs are factored
//! through the structural matrix `X = [1, P, diag(PPᵀ)]`, and the exact
//! subspace coherence is compared with closed-form bounds built from the
//! coordinate moments. Partial EDMs can be completed by singular value
//! thresholding.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod completion;
pub mod distributions;
pub mod edm;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
mod quadrature;
pub mod rng;
pub mod theory;

pub use nalgebra;

pub use coherence::{coherence_qr_path, coherence_svd_path, CoherencePath, CoherenceReport};
pub use completion::{
    complete_from_truth, recovery_error, sample_mask, svt_complete, CompletionResult, MaskMode,
    SampleMask, SvtParams,
};
pub use distributions::{
    make_distribution, sample_coordinates, Distribution, DistributionSpec, Law, MomentSet,
};
pub use edm::{build_edm, factor_edm, numerical_rank, EdmFactorization, EdmMatrix, NodeCloud};
pub use error::{Error, Result};
pub use experiments::{
    run_chernoff_mc, run_coherence_mc, run_completion_sweep, section4_checks, McConfig, McReport,
    Section4Report, SweepConfig, SweepReport,
};
pub use theory::{TheoryBounds, TheoryParams};
