//! Solver toolkit for variational inequalities `VI(C, F)`: find `u ∈ C` with
//! `⟨F(u), z − u⟩ ≥ 0` for every `z ∈ C`, where `F` is quasimonotone and
//! Lipschitz continuous.
//!
//! The core is the self-adaptive Tseng extragradient iteration
//!
//! ```text
//! z_n     = P_C(u_n − λ_n F(u_n))
//! u_{n+1} = z_n + λ_n (F(u_n) − F(z_n))
//! λ_{n+1} = min{ μ‖u_n − z_n‖ / ‖F(u_n) − F(z_n)‖, λ_n + ξ_n }
//! ```
//!
//! with a summable perturbation sequence `ξ_n` that lets the step grow
//! non-monotonically. Around it sit:
//!
//! * [`geometry`]: feasible sets and (relaxed) metric projections,
//! * [`operators`]: the test mappings and sampling checks for quasimonotonicity
//!   and Lipschitz constants,
//! * [`solver`]: the iteration itself with full tracing,
//! * [`diagnostics`]: ratio series, separation certificates, rate fits and
//!   per-iteration inequality audits,
//! * [`experiments`]: scalar table runners and sparse signal recovery,
//! * [`cli`]: configuration, CSV and SVG output for the `qvi` binary.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{FeasibleSet, ProjectionContext};
pub use operators::{Mapping, MappingKind, Operator};
pub use solver::{
    solve, SolveResult, SolveStatus, SolveTrace, SolverConfig, StoppingRule, TraceLevel, XiSequence,
};
