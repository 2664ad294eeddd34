//! Conic-programming substrate: a canonical sparse program form
//! `min c'v + c0 : b - Av in K`, structural validation, an interior-point
//! backend contract with a Clarabel reference implementation, symbolic
//! dualization, and deterministic branch-and-bound over mixed-binary conic
//! sets.
//!
//! Cone products are ordered lists over Zero, NonnegativeOrthant,
//! SecondOrder, and PositiveSemidefinite factors; PSD support is gated by
//! the backend capability flag.

mod bb;
mod cone;
mod dual;
mod expr;
mod program;
mod solve;

pub use bb::{
    push_unit_box, solve_micp, solve_micp_with, BbError, BbOptions, BbResult, BbStatus,
    MixedBinaryConicProgram,
};
pub use cone::{product_dim, Cone, ConeKind, DualCone};
pub use dual::dualize;
pub use expr::{LinExpr, VarId};
pub use program::{ConicProgram, ProgramBuilder, Sense, SparseMatrix, ValidationIssue};
pub use solve::{
    check_primal_feasibility, solve, solve_with, BackendError, ClarabelBackend, ConicBackend,
    SolveOptions, SolveResult, SolveStatus,
};
