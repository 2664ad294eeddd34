//! Exact solution methods for the distributionally robust problem: the
//! enumeration oracle, Benders decomposition over the reformulated sets,
//! column-and-constraint generation, and the reduced discrete-metric solve.

mod benders;
mod ccg;
mod enumerate;

pub use benders::{benders_solve, BendersOptions, CutPool, IterationLog, IterationRecord};
pub use ccg::ccg_solve;
pub use enumerate::{enumerate_solve, DroSolution, SUPPORT_CAP};

use crate::error::DroError;
use crate::two_stage::{
    append_scenario_copy, require_optimal, worst_case_shortcut, SampleSet, TwoStageProblem, XRef,
};
use conic::{solve, LinExpr, ProgramBuilder};

pub(crate) const DEFAULT_MAX_ITER: usize = 200;

/// Reduced solve for the discrete ground metric. The inner regularized
/// maximum collapses to `max { Q(x, sample_i), max_xi Q(x, xi) - alpha }`,
/// so one shared worst-case copy next to the per-sample copies is exact.
/// The worst-case point comes from the monotone shortcut.
pub fn discrete_metric_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
) -> Result<DroSolution, DroError> {
    if samples.is_empty() {
        return Err(DroError::EmptySample);
    }
    let worst = worst_case_shortcut(prob)?;
    let n = samples.len() as f64;

    let mut b = ProgramBuilder::minimize();
    let x_vars = b.add_vars("x", prob.n1, 0.0);
    for (j, &c) in prob.cost.iter().enumerate() {
        b.set_objective(x_vars[j], c);
    }
    b.add_offset(prob.cost_offset);
    prob.first_stage.append_rows(&mut b, &x_vars);
    let alpha = b.add_var("alpha", epsilon);
    b.nonneg(LinExpr::var(alpha));
    let sigmas = b.add_vars("sigma", samples.len(), 1.0 / n);

    let worst_copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), &worst, "_worst");
    for (i, sample) in samples.iter().enumerate() {
        let copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), sample, &format!("_{i}"));
        b.geq(LinExpr::var(sigmas[i]), copy.cost);
        // sigma_i >= worst-copy cost - alpha
        b.geq(LinExpr::var(sigmas[i]) + LinExpr::var(alpha), worst_copy.cost.clone());
    }

    let res = require_optimal(solve(&b.build())?)?;
    Ok(DroSolution {
        x: x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[alpha.0],
        value: res.objective,
    })
}
