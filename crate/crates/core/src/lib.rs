//! Random linear coding networks modelled as discrete memoryless channels whose
//! inputs and outputs are subspaces of F_q^T.
//!
//! The crate is `no_std` and only needs `alloc`. Modules, bottom up:
//!
//! - [`gf`]: arithmetic in GF(q), q ≤ 256.
//! - [`matrix`]: dense matrices over GF(q), RREF, rank, rank-constrained sampling.
//! - [`grassmann`]: canonical subspaces, Grassmannian enumeration, Gaussian coefficients.
//! - [`channel`]: the subspace channel, its exact transition law and component structure.
//! - [`capacity`]: closed-form capacity and a Blahut–Arimoto solver for arbitrary DMCs.
//! - [`mc`]: Monte Carlo verification of the transition law.
#![no_std]

extern crate alloc;

pub mod capacity;
pub mod channel;
pub mod gf;
pub mod grassmann;
pub mod matrix;
pub mod mc;
pub mod rng;

pub use capacity::{
    blahut_arimoto, capacity_closed_form, component_capacity, mutual_information, BaSolution,
    CapacityError, CapacityReport, LogBase, TransitionMatrix,
};
pub use channel::{
    build_dmc, components, simulate_one_use, transition_prob, ChannelError, ChannelSpec, Dmc,
    RankDefDist,
};
pub use gf::{field_new, FieldElement, FieldSpec, GfError};
pub use grassmann::{
    count_ordered_bases, enumerate_grassmannian, gaussian_coefficient, GrassmannError,
    GrassmannianIndex, Subspace, DEFAULT_ENUMERATION_CAP,
};
pub use matrix::{sample_full_rank, sample_matrix_with_rank, Mat, MatrixError};
pub use mc::{empirical_capacity_pipeline, run_mc, McError, McReport};
pub use rng::RandomSource;
