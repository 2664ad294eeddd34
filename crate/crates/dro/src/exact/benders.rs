//! Benders decomposition over the reformulated sets: the master keeps one
//! explicit second-stage copy per sample (so it is always bounded) plus an
//! inner approximation of each `Z_i` built from stored points; subproblems
//! maximize `gamma(x*, alpha*)' z` over the mixed-binary sets by
//! branch-and-bound with an early-stop cutoff.

use crate::error::DroError;
use crate::exact::DroSolution;
use crate::reformulations::ZSetSpec;
use crate::two_stage::{
    append_scenario_copy, require_optimal, SampleSet, TwoStageProblem, XRef,
};
use conic::{solve, BbOptions, BbStatus, LinExpr, ProgramBuilder, VarId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Stored generators: fixed points of each `Z_i` for Benders cuts, explicit
/// scenario lists for column-and-constraint generation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CutPool {
    pub z_points: Vec<Vec<Vec<f64>>>,
    pub scenarios: Vec<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub lower: f64,
    pub upper: f64,
    pub seconds: f64,
}

/// Per-iteration bounds; master values form a nondecreasing sequence of
/// lower bounds on the exact optimum.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,lb,ub,time\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.iter, r.lower, r.upper, r.seconds));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BendersOptions {
    pub gap_tol: f64,
    pub max_iter: usize,
    pub bb: BbOptions,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions { gap_tol: 1e-6, max_iter: super::DEFAULT_MAX_ITER, bb: BbOptions::default() }
    }
}

pub struct BendersOutcome {
    pub solution: DroSolution,
    pub log: IterationLog,
    pub pool: CutPool,
}

struct MasterVars {
    x: Vec<VarId>,
    alpha: VarId,
    sigma: Vec<VarId>,
}

fn build_master(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    zspecs: &[ZSetSpec],
    pool: &CutPool,
) -> (conic::ConicProgram, MasterVars) {
    let n = samples.len() as f64;
    let mut b = ProgramBuilder::minimize();
    let x = b.add_vars("x", prob.n1, 0.0);
    for (j, &c) in prob.cost.iter().enumerate() {
        b.set_objective(x[j], c);
    }
    b.add_offset(prob.cost_offset);
    prob.first_stage.append_rows(&mut b, &x);
    let alpha = b.add_var("alpha", epsilon);
    b.nonneg(LinExpr::var(alpha));
    let sigma = b.add_vars("sigma", samples.len(), 1.0 / n);

    for (i, sample) in samples.iter().enumerate() {
        // sigma_i >= Q(x, sample_i) via an explicit copy: keeps the master
        // bounded from the first iteration.
        let copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x), sample, &format!("_{i}"));
        b.geq(LinExpr::var(sigma[i]), copy.cost);
        // sigma_i >= gamma(x, alpha)' z for each stored point.
        for z in &pool.z_points[i] {
            let g = &zspecs[i].gamma;
            let mut row = LinExpr::constant(
                g.g_const.iter().zip(z).map(|(c, zv)| c * zv).sum::<f64>() + g.offset_const,
            );
            let gxz = g.g_x.mul_transpose_vec(z);
            for (j, &c) in gxz.iter().enumerate() {
                row.add_term(x[j], c);
            }
            let a_coef: f64 =
                g.g_alpha.iter().zip(z).map(|(c, zv)| c * zv).sum::<f64>() + g.offset_alpha;
            row.add_term(alpha, a_coef);
            b.geq(LinExpr::var(sigma[i]), row);
        }
    }
    (b.build(), MasterVars { x, alpha, sigma })
}

pub fn benders_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    zspecs: &[ZSetSpec],
    options: &BendersOptions,
) -> Result<BendersOutcome, DroError> {
    assert_eq!(zspecs.len(), samples.len(), "one reformulated set per sample");
    let start = Instant::now();
    let mut pool = CutPool {
        z_points: vec![Vec::new(); samples.len()],
        scenarios: vec![Vec::new(); samples.len()],
    };
    let mut log = IterationLog::default();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);

    for iter in 0..options.max_iter {
        let (master, vars) = build_master(prob, samples, epsilon, zspecs, &pool);
        let res = require_optimal(solve(&master)?)?;
        let x_star: Vec<f64> = vars.x.iter().map(|v| res.primal[v.0]).collect();
        let alpha_star = res.primal[vars.alpha.0].max(0.0);
        let sigma_star: Vec<f64> = vars.sigma.iter().map(|v| res.primal[v.0]).collect();
        let lower = res.objective;

        // Subproblems, in parallel; early stop just above the incumbent
        // sigma so any returned improvement is a genuine cut.
        let margin: Vec<f64> =
            sigma_star.iter().map(|s| 1e-6 * (1.0 + s.abs())).collect();
        let subs: Vec<_> = zspecs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let (micp, _) = spec.micp_at(&x_star, alpha_star);
                let opts =
                    BbOptions { cutoff: Some(sigma_star[i] + margin[i]), ..options.bb };
                conic::solve_micp(&micp, &opts)
            })
            .collect();

        let mut updated = false;
        let mut upper_terms = 0.0;
        for (i, sub) in subs.into_iter().enumerate() {
            let sub = sub?;
            upper_terms += sigma_star[i].max(sub.bound);
            let violated = sub.best_value > sigma_star[i] + margin[i];
            if violated {
                debug_assert!(matches!(sub.status, BbStatus::CutoffReached | BbStatus::Optimal));
                pool.z_points[i].push(sub.incumbent[..zspecs[i].layout.n()].to_vec());
                let xi: Vec<u8> =
                    (0..zspecs[i].layout.m).map(|j| sub.incumbent[j].round() as u8).collect();
                if !pool.scenarios[i].contains(&xi) {
                    pool.scenarios[i].push(xi);
                }
                updated = true;
            }
        }
        let upper = prob.first_stage_cost(&x_star)
            + alpha_star * epsilon
            + upper_terms / samples.len() as f64;
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
                pool,
            });
        }
    }
    Err(DroError::MaxIterReached { lower: best.0, upper: best.1 })
}
