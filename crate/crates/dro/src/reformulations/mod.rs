//! Exact reformulations of the distributionally robust two-stage problem:
//! per-sample mixed-binary sets in dual variables, the exact penalty
//! parameter, master assembly over convex relaxations, tractable special
//! cases, and the conditional value-at-risk extension.

mod cvar;
mod master;
mod rho;
mod special;
mod zset;

pub use cvar::{cvar_inner_micp, cvar_solve, empirical_cvar, CvarSolution};
pub use master::{
    assemble_master, solve_master, solve_master_with, MasterLayout, MasterOptions,
    MasterSolution, RelaxationMode,
};
pub(crate) use master::{embed_dual_fragment, relaxed_set};
pub use rho::{
    compute_penalty_rho, default_route, penalty_loss, PenaltyCertificate, PenaltyRoute,
    RhoOptions, SupportSuperset,
};
pub use special::{ideal_lp_solve, vertex_enumeration_solve, IdealLpSolution, IdealMode};
pub use zset::{
    build_zset, GammaObjective, MetricHandling, ZLayout, ZSetSpec, ZVariant,
};
