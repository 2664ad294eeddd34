//! Single-stage master assembly.
//!
//! Each per-sample inner maximization `sup { gamma(x, alpha)' z : z in R_i }`
//! over a convex relaxation `R_i` described as an [`ExplicitSet`] is folded
//! into the minimization by conic duality:
//!
//! ```text
//!   sup { g'z : z >= 0, M1 z + M2 w + m0 in K }
//!     = min { m0' zeta : zeta in K*, M1' zeta + g <= 0, M2' zeta = 0 }
//! ```
//!
//! so the assembled master is one conic program in `(x, alpha, zeta_1, ...,
//! zeta_N)` whose value upper-bounds the exact reformulation for any outer
//! relaxation of the hulls, and matches it when the relaxations are exact.

use crate::error::DroError;
use crate::lift::{lift_set, ExplicitSet, LiftOptions};
use crate::reformulations::zset::ZSetSpec;
use crate::two_stage::{require_optimal, TwoStageProblem};
use conic::{
    Cone, ConeKind, ConicBackend, ConicProgram, LinExpr, ProgramBuilder, SolveOptions, VarId,
};
use serde::{Deserialize, Serialize};

/// How the convex hulls are outer-approximated inside the master.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RelaxationMode {
    /// Continuous relaxation of each set.
    Continuous,
    /// Full level-1 lift with symmetry rows; optional PSD strengthening.
    FullLift { psd: bool },
    /// Per-sample partial lifts without symmetry rows (the iterative
    /// heuristic's working sets).
    Partial { lifted: Vec<Vec<usize>> },
    /// Level-2 lift: the combinator applied twice. Size-guarded.
    LiftSquared,
}

#[derive(Debug, Clone, Copy)]
pub struct MasterOptions {
    /// Per-sample cap on lifted description variables.
    pub size_cap: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions { size_cap: 200_000 }
    }
}

pub struct MasterLayout {
    pub x_vars: Vec<VarId>,
    pub alpha: VarId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MasterSolution {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub value: f64,
}

/// Relaxation set for one sample under a mode.
pub(crate) fn relaxed_set(
    spec: &ZSetSpec,
    mode: &RelaxationMode,
    sample_index: usize,
    options: &MasterOptions,
) -> Result<ExplicitSet, DroError> {
    let binaries = spec.binary_indices();
    let set = match mode {
        RelaxationMode::Continuous => spec.set.clone(),
        RelaxationMode::FullLift { psd } => lift_set(
            &spec.set,
            &binaries,
            &binaries,
            LiftOptions { symmetry: true, psd: *psd },
        )?,
        RelaxationMode::Partial { lifted } => lift_set(
            &spec.set,
            &lifted[sample_index],
            &binaries,
            LiftOptions { symmetry: false, psd: false },
        )?,
        RelaxationMode::LiftSquared => {
            let level1 =
                lift_set(&spec.set, &binaries, &binaries, LiftOptions { symmetry: true, psd: false })?;
            if level1.total_vars() * 2 * binaries.len() > options.size_cap {
                return Err(DroError::SizeCapExceeded {
                    vars: level1.total_vars() * 2 * binaries.len(),
                    cap: options.size_cap,
                });
            }
            lift_set(&level1, &binaries, &binaries, LiftOptions { symmetry: true, psd: false })?
        }
    };
    if set.total_vars() > options.size_cap {
        return Err(DroError::SizeCapExceeded { vars: set.total_vars(), cap: options.size_cap });
    }
    Ok(set)
}

/// Append the dual embedding of `sup gamma' z` over `set` to the builder,
/// returning the fragment's objective expression (to be weighted by the
/// caller). `gamma` rows couple the multipliers with `(x, alpha)`.
pub(crate) fn embed_dual_fragment(
    b: &mut ProgramBuilder,
    set: &ExplicitSet,
    spec: &ZSetSpec,
    x_vars: &[VarId],
    alpha: VarId,
    tag: &str,
) -> LinExpr {
    // Multipliers per cone row of the set description.
    let zeta = b.add_vars(&format!("zeta{tag}"), set.rows(), 0.0);
    // Membership in the dual cone, blockwise.
    let mut at = 0usize;
    for cone in &set.cones {
        let d = cone.slack_dim();
        match cone.kind {
            ConeKind::Zero => {}
            _ => {
                let block: Vec<LinExpr> =
                    (0..d).map(|i| LinExpr::var(zeta[at + i])).collect();
                b.add_block(block, *cone);
            }
        }
        at += d;
    }

    // M1' zeta + gamma(x, alpha) <= 0.
    let g = &spec.gamma;
    let mut rows: Vec<LinExpr> = (0..set.n_z).map(|k| LinExpr::constant(g.g_const[k])).collect();
    for k in 0..set.m1.vals.len() {
        rows[set.m1.cols[k]].add_term(zeta[set.m1.rows[k]], set.m1.vals[k]);
    }
    for k in 0..g.g_x.vals.len() {
        rows[g.g_x.rows[k]].add_term(x_vars[g.g_x.cols[k]], g.g_x.vals[k]);
    }
    for (k, &a) in g.g_alpha.iter().enumerate() {
        if a != 0.0 {
            rows[k].add_term(alpha, a);
        }
    }
    for row in rows {
        b.leq(row, LinExpr::constant(0.0));
    }
    // M2' zeta = 0.
    let mut wrows: Vec<LinExpr> = (0..set.n_w).map(|_| LinExpr::default()).collect();
    for k in 0..set.m2.vals.len() {
        wrows[set.m2.cols[k]].add_term(zeta[set.m2.rows[k]], set.m2.vals[k]);
    }
    for row in wrows {
        b.eq(row, LinExpr::constant(0.0));
    }

    // Fragment objective m0' zeta + offsets.
    let mut obj = LinExpr::constant(g.offset_const);
    for (r, &c) in set.m0.iter().enumerate() {
        if c != 0.0 {
            obj.add_term(zeta[r], c);
        }
    }
    obj.add_term(alpha, g.offset_alpha);
    obj.compact()
}

/// Assemble the full master program for the given relaxation mode.
pub fn assemble_master(
    prob: &TwoStageProblem,
    zspecs: &[ZSetSpec],
    epsilon: f64,
    mode: &RelaxationMode,
    options: &MasterOptions,
) -> Result<(ConicProgram, MasterLayout), DroError> {
    let n = zspecs.len();
    if n == 0 {
        return Err(DroError::EmptySample);
    }
    if let RelaxationMode::Partial { lifted } = mode {
        if lifted.len() != n {
            return Err(DroError::Invalid("one lift index set per sample required".into()));
        }
    }
    let mut b = ProgramBuilder::minimize();
    let x_vars = b.add_vars("x", prob.n1, 0.0);
    for (j, &c) in prob.cost.iter().enumerate() {
        b.set_objective(x_vars[j], c);
    }
    b.add_offset(prob.cost_offset);
    prob.first_stage.append_rows(&mut b, &x_vars);
    let alpha = b.add_var("alpha", epsilon);
    b.nonneg(LinExpr::var(alpha));

    let weight = 1.0 / n as f64;
    for (i, spec) in zspecs.iter().enumerate() {
        let set = relaxed_set(spec, mode, i, options)?;
        let frag = embed_dual_fragment(&mut b, &set, spec, &x_vars, alpha, &format!("_{i}"));
        for (v, c) in &frag.terms {
            b.add_objective(*v, c * weight);
        }
        b.add_offset(frag.constant * weight);
    }
    Ok((b.build(), MasterLayout { x_vars, alpha }))
}

/// Assemble and solve; errors when a PSD mode meets a backend without PSD
/// support.
pub fn solve_master(
    prob: &TwoStageProblem,
    zspecs: &[ZSetSpec],
    epsilon: f64,
    mode: &RelaxationMode,
    options: &MasterOptions,
) -> Result<MasterSolution, DroError> {
    solve_master_with(
        prob,
        zspecs,
        epsilon,
        mode,
        options,
        &conic::ClarabelBackend,
        &SolveOptions::default(),
    )
}

pub fn solve_master_with(
    prob: &TwoStageProblem,
    zspecs: &[ZSetSpec],
    epsilon: f64,
    mode: &RelaxationMode,
    options: &MasterOptions,
    backend: &dyn ConicBackend,
    solve_options: &SolveOptions,
) -> Result<MasterSolution, DroError> {
    if matches!(mode, RelaxationMode::FullLift { psd: true }) && !backend.supports_psd() {
        return Err(DroError::CapabilityMismatch("psd mode without a psd backend"));
    }
    let (program, layout) = assemble_master(prob, zspecs, epsilon, mode, options)?;
    let res = require_optimal(backend.solve(&program, solve_options)?)?;
    Ok(MasterSolution {
        x: layout.x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[layout.alpha.0],
        value: res.objective,
    })
}

#[allow(unused)]
fn _cone(c: Cone) {}
