//! Exhaustive reference solver: one monolithic conic program over the full
//! enumerated support. Exact for any metric, used as the oracle every other
//! method is tested against. Guarded by a support-size cap.

use crate::ambiguity::{distance, Metric};
use crate::error::DroError;
use crate::two_stage::{
    append_scenario_copy, require_optimal, SampleSet, TwoStageProblem, XRef,
};
use conic::{solve, LinExpr, ProgramBuilder};
use serde::{Deserialize, Serialize};

pub const SUPPORT_CAP: usize = 1 << 12;

/// First-stage decision with the regularizer multiplier and optimal value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DroSolution {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub value: f64,
}

/// Solve
///
/// ```text
///   min  c(x) + alpha eps + (1/N) sum_i sigma_i
///   s.t. sigma_i >= Q-copy(x, s) - alpha d(s, sample_i)   for all support s
/// ```
///
/// with one shared second-stage copy per support point. Exact because every
/// scenario of the inner maximization is materialized.
pub fn enumerate_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    metric: Metric,
) -> Result<DroSolution, DroError> {
    if samples.is_empty() {
        return Err(DroError::EmptySample);
    }
    let points = prob.support.enumerate(SUPPORT_CAP)?;
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

    for (s, point) in points.iter().enumerate() {
        let copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), point, &format!("_{s}"));
        for (i, sample) in samples.iter().enumerate() {
            let d = distance(metric, point, sample)?;
            // sigma_i + alpha d >= q(s)' y_s
            b.geq(
                LinExpr::var(sigmas[i]) + LinExpr::term(alpha, d),
                copy.cost.clone(),
            );
        }
    }

    let res = require_optimal(solve(&b.build())?)?;
    Ok(DroSolution {
        x: x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[alpha.0],
        value: res.objective,
    })
}
