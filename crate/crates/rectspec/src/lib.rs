//! Perron-Frobenius machinery for nonnegative rectangular tensors.
//!
//! An (r,s)-order (n,m)-dimensional rectangular tensor acts on a vector
//! pair (x, y) through the bi-homogeneous form `A x^r y^s` and its two
//! partial contractions. This crate computes the weak and strong
//! (p,q)-eigenvalue-eigenvector triples of such tensors by fixed-point
//! iteration, classifies when each kind is guaranteed to exist via the
//! contraction factor `xi = r/p + s/q` together with partial symmetry and
//! weak irreducibility, and applies the machinery to (r,s)-uniform
//! directed hypergraphs and to matrix singular values.
//!
//! Modules:
//!
//! * [`tensor`] — storage, the form, contractions, symmetrization,
//!   transpose, Gram product, and the `rect-tensor v1` text format.
//! * [`solver`] — regime classification, the projective log-ratio
//!   distance, the phi/psi fixed-point maps, and the weak, strong and
//!   boundary solvers with convergence reports.
//! * [`structure`] — the induced bipartite graph and weak irreducibility.
//! * [`hypergraph`] — (r,s)-uniform directed hypergraphs, their adjacency
//!   tensors, degrees, and the `dhg v1` text format.
//! * [`verify`] — independent oracles: grid maximization, central
//!   differences, power iteration, and the boundary counterexample
//!   certificate.
//! * [`cli`] — the `rectspec` command-line front-end.

pub mod cli;
pub mod error;
pub mod hypergraph;
pub mod solver;
pub mod structure;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use hypergraph::{parse_hypergraph, Degrees, DirectedHypergraph, Edge};
pub use solver::{
    boundary_solve, classify_regime, log_distance, phi_step, psi_step, residual_strong,
    residual_weak, strong_solve, weak_solve, EigenTriple, FailureReason, PQNorms, PhiStep,
    Regime, RestartRecord, SolverConfig, SolverReport, TripleKind,
};
pub use structure::{induced_bipartite, is_weakly_irreducible, BipartiteGraph};
pub use tensor::{parse_rect_tensor, MultiIndex, RectTensor, VectorPair};
pub use verify::{
    brute_force_max, case2_crosscheck, example21_analysis, example21_tensor,
    gradient_identity_check, gram_spectral_radii, pq_midpoint, power_iteration_rho,
    svd_crosscheck, CounterexampleReport,
};
