//! Risk-averse extension: worst-case conditional value-at-risk of the loss.
//!
//! For tail level `p in (0, 1]`,
//!
//! ```text
//!   CVaR_p[Q] = inf_w  w + (1/p) E[ max(Q - w, 0) ]
//! ```
//!
//! and the worst-case-over-the-ball master gains the scalar `w` plus
//! per-scenario positive-part epigraphs. The master here materializes the
//! enumerated support (exact, guarded); the mixed-binary representation with
//! a per-sample `theta in [0, 1/p]` and exact McCormick products
//! `omega_j = theta xi_j` is also built for subproblem use.

use crate::ambiguity::{distance, norm1_regularizer_coefficients, Metric};
use crate::error::DroError;
use crate::exact::SUPPORT_CAP;
use crate::two_stage::{
    append_scenario_copy, require_optimal, SampleSet, TwoStageProblem, XRef,
};
use conic::{
    push_unit_box, solve, LinExpr, MixedBinaryConicProgram, ProgramBuilder,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvarSolution {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub w: f64,
    pub value: f64,
}

/// Exact worst-case CVaR master over the enumerated support.
pub fn cvar_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    metric: Metric,
    p: f64,
) -> Result<CvarSolution, DroError> {
    if !(0.0 < p && p <= 1.0) {
        return Err(DroError::BadCvarLevel(p));
    }
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
    let w = b.add_var("w", 1.0);
    let sigmas = b.add_vars("sigma", samples.len(), 1.0 / n);

    for (s, point) in points.iter().enumerate() {
        let copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), point, &format!("_{s}"));
        // t_s >= q' y_s - w, t_s >= 0: the positive part of the excess loss.
        let t = b.add_var(format!("t_{s}"), 0.0);
        b.nonneg(LinExpr::var(t));
        b.geq(LinExpr::var(t) + LinExpr::var(w), copy.cost);
        for (i, sample) in samples.iter().enumerate() {
            let d = distance(metric, point, sample)?;
            b.geq(
                LinExpr::var(sigmas[i]) + LinExpr::term(alpha, d),
                LinExpr::term(t, 1.0 / p),
            );
        }
    }

    let res = require_optimal(solve(&b.build())?)?;
    Ok(CvarSolution {
        x: x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[alpha.0],
        w: res.primal[w.0],
        value: res.objective,
    })
}

/// In-sample CVaR of given losses at tail level `p` by the direct formula:
/// minimize over `w` of `w + (1/p) mean[(loss - w)+]`. The optimum sits at a
/// sample quantile, so scanning the losses as candidate `w` values is exact.
pub fn empirical_cvar(losses: &[f64], p: f64) -> f64 {
    let n = losses.len() as f64;
    let eval = |w: f64| w + losses.iter().map(|&l| (l - w).max(0.0)).sum::<f64>() / (p * n);
    losses
        .iter()
        .map(|&w| eval(w))
        .fold(f64::INFINITY, f64::min)
}

/// Mixed-binary representation of one sample's inner CVaR maximization at a
/// fixed `(x, alpha, w)`: variables `(xi, lambda, tau?, theta, omega)` with
/// `omega_j = theta xi_j` by exact McCormick rows over `theta in [0, 1/p]`.
/// Requires objective-only uncertainty.
pub fn cvar_inner_micp(
    prob: &TwoStageProblem,
    sample: &[u8],
    metric: Metric,
    p: f64,
    x: &[f64],
    alpha: f64,
    w: f64,
) -> Result<MixedBinaryConicProgram, DroError> {
    if !(0.0 < p && p <= 1.0) {
        return Err(DroError::BadCvarLevel(p));
    }
    let ss = &prob.second_stage;
    if ss.t0.nnz() != 0 || !ss.has_fixed_recourse() || prob.indicator_spec.is_some() {
        return Err(DroError::Invalid(
            "the cvar inner set needs objective-only uncertainty".into(),
        ));
    }
    if metric != Metric::Norm1 {
        return Err(DroError::UnsupportedMetric("cvar inner set uses the 1-norm path"));
    }
    let m = prob.m;
    let l = ss.row_count();
    let inv_p = 1.0 / p;

    let mut b = ProgramBuilder::maximize();
    let xi = b.add_vars("xi", m, 0.0);
    let lambda = b.add_vars("lambda", l, 0.0);
    let theta = b.add_var("theta", -w);
    let omega = b.add_vars("omega", m, 0.0);
    push_unit_box(&mut b, &xi);
    for &v in &lambda {
        b.nonneg(LinExpr::var(v));
    }
    b.nonneg(LinExpr::var(theta));
    b.leq(LinExpr::var(theta), LinExpr::constant(inv_p));
    // Support rows.
    for (coeffs, f) in &prob.support.rows {
        let mut e = LinExpr::default();
        for &(j, c) in coeffs {
            e.add_term(xi[j], c as f64);
        }
        b.leq(e, LinExpr::constant(*f as f64));
    }
    // McCormick: omega = theta xi, exact for binary xi.
    for j in 0..m {
        b.nonneg(LinExpr::var(omega[j]));
        b.leq(LinExpr::var(omega[j]), LinExpr::term(xi[j], inv_p));
        b.leq(LinExpr::var(omega[j]), LinExpr::var(theta));
        b.geq(
            LinExpr::var(omega[j]),
            LinExpr::var(theta) + LinExpr::term(xi[j], inv_p) - inv_p,
        );
    }
    // Dual feasibility: q0 theta + Q omega - W0' lambda >= 0 (orthant Y).
    let mut rows: Vec<LinExpr> =
        (0..ss.n2).map(|i| LinExpr::term(theta, ss.q0[i])).collect();
    for k in 0..ss.qmat.vals.len() {
        rows[ss.qmat.rows[k]].add_term(omega[ss.qmat.cols[k]], ss.qmat.vals[k]);
    }
    for k in 0..ss.w0.vals.len() {
        rows[ss.w0.cols[k]].add_term(lambda[ss.w0.rows[k]], -ss.w0.vals[k]);
    }
    for row in rows {
        b.nonneg(row);
    }
    // Objective: h(x)' lambda - w theta - alpha ||xi - sample||_1.
    let hx: Vec<f64> = {
        let h = ss.hmat.mul_vec(x);
        ss.h0.iter().zip(h).map(|(a, b)| a + b).collect()
    };
    for (r, &h) in hx.iter().enumerate() {
        b.set_objective(lambda[r], h);
    }
    let (g, g0) = norm1_regularizer_coefficients(sample);
    for j in 0..m {
        b.add_objective(xi[j], -alpha * g[j]);
    }
    b.add_offset(-alpha * g0);

    Ok(MixedBinaryConicProgram {
        base: b.build(),
        binary_indices: (0..m).collect(),
        bilinear_links: Some((0..m).map(|j| (j, j)).collect()),
    })
}
