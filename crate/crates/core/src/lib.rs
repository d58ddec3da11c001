//! Asymptotic-preserving conservative semi-Lagrangian DG solver for the 1D1V
//! Vlasov-Poisson system with a reformulated Poisson equation.

pub mod cli_bench;
pub mod csldg1d;
pub mod diagnostics;
pub mod error;
pub mod field_solver;
pub mod limiter;
pub mod moments;
pub mod par;
pub mod phase_space;
pub mod quad_basis;
pub mod scenarios;
pub mod splitting;
pub mod vn_stability;

pub use error::{Error, Result};
pub use par::Parallelism;
pub use phase_space::{Grid1D, PhaseField, SliceField};
pub use quad_basis::NodalBasis;
