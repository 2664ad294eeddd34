//! Column-and-constraint generation. The master models the loss of every
//! identified scenario with explicit second-stage variables,
//!
//! ```text
//!   sigma_i >= q(s)' y^{i,s} - alpha d(s, sample_i),  W(s) y^{i,s} >= T0 s + h(x),
//! ```
//!
//! while the subproblem is the same mixed-binary maximization Benders uses;
//! its argmax scenario joins the list. Requires fixed recourse.

use crate::ambiguity::{distance, Metric};
use crate::error::DroError;
use crate::exact::benders::{BendersOptions, BendersOutcome, CutPool, IterationLog, IterationRecord};
use crate::exact::DroSolution;
use crate::reformulations::ZSetSpec;
use crate::two_stage::{append_scenario_copy, require_optimal, SampleSet, TwoStageProblem, XRef};
use conic::{solve, BbOptions, LinExpr, ProgramBuilder};
use rayon::prelude::*;
use std::time::Instant;

pub fn ccg_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    metric: Metric,
    zspecs: &[ZSetSpec],
    options: &BendersOptions,
) -> Result<BendersOutcome, DroError> {
    assert_eq!(zspecs.len(), samples.len());
    if metric == Metric::Discrete {
        return Err(DroError::UnsupportedMetric("discrete (use the reduced solve)"));
    }
    if !prob.second_stage.has_fixed_recourse() {
        return Err(DroError::FixedRecourseViolated);
    }
    let start = Instant::now();
    let n = samples.len();
    // Scenario lists start at the samples themselves.
    let mut scenarios: Vec<Vec<Vec<u8>>> =
        samples.iter().map(|s| vec![s.clone()]).collect();
    let mut log = IterationLog::default();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);

    for iter in 0..options.max_iter {
        let mut b = ProgramBuilder::minimize();
        let x = b.add_vars("x", prob.n1, 0.0);
        for (j, &c) in prob.cost.iter().enumerate() {
            b.set_objective(x[j], c);
        }
        b.add_offset(prob.cost_offset);
        prob.first_stage.append_rows(&mut b, &x);
        let alpha = b.add_var("alpha", epsilon);
        b.nonneg(LinExpr::var(alpha));
        let sigma = b.add_vars("sigma", n, 1.0 / n as f64);
        for (i, sample) in samples.iter().enumerate() {
            for (s, scenario) in scenarios[i].iter().enumerate() {
                let copy = append_scenario_copy(
                    &mut b,
                    prob,
                    XRef::Vars(&x),
                    scenario,
                    &format!("_{i}_{s}"),
                );
                let d = distance(metric, scenario, sample)?;
                b.geq(LinExpr::var(sigma[i]) + LinExpr::term(alpha, d), copy.cost);
            }
        }
        let res = require_optimal(solve(&b.build())?)?;
        let x_star: Vec<f64> = x.iter().map(|v| res.primal[v.0]).collect();
        let alpha_star = res.primal[alpha.0].max(0.0);
        let sigma_star: Vec<f64> = sigma.iter().map(|v| res.primal[v.0]).collect();
        let lower = res.objective;

        let margin: Vec<f64> = sigma_star.iter().map(|s| 1e-6 * (1.0 + s.abs())).collect();
        let subs: Vec<_> = zspecs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let (micp, _) = spec.micp_at(&x_star, alpha_star);
                let opts = BbOptions { cutoff: Some(sigma_star[i] + margin[i]), ..options.bb };
                conic::solve_micp(&micp, &opts)
            })
            .collect();

        let mut updated = false;
        let mut upper_terms = 0.0;
        for (i, sub) in subs.into_iter().enumerate() {
            let sub = sub?;
            upper_terms += sigma_star[i].max(sub.bound);
            if sub.best_value > sigma_star[i] + margin[i] {
                let xi: Vec<u8> =
                    (0..zspecs[i].layout.m).map(|j| sub.incumbent[j].round() as u8).collect();
                if !scenarios[i].contains(&xi) {
                    scenarios[i].push(xi);
                    updated = true;
                }
            }
        }
        let upper = prob.first_stage_cost(&x_star)
            + alpha_star * epsilon
            + upper_terms / n as f64;
        best = (lower.max(best.0), upper.min(best.1));
        log.records.push(IterationRecord {
            iter,
            lower,
            upper,
            seconds: start.elapsed().as_secs_f64(),
        });

        let gap_closed = best.1 - best.0 <= options.gap_tol * (1.0 + best.0.abs());
        if !updated || gap_closed {
            return Ok(BendersOutcome {
                solution: DroSolution { x: x_star, alpha: alpha_star, value: lower },
                log,
                pool: CutPool { z_points: vec![Vec::new(); n], scenarios },
            });
        }
    }
    Err(DroError::MaxIterReached { lower: best.0, upper: best.1 })
}
