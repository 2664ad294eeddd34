//! Tractable special cases: explicit vertex enumeration of small supports
//! and the ideal-formulation linear program for totally unimodular data.

use crate::ambiguity::{distance, norm1_regularizer_coefficients, Metric};
use crate::error::DroError;
use crate::exact::DroSolution;
use crate::two_stage::{
    append_scenario_copy, require_optimal, BinaryPoint, SampleSet, TwoStageProblem, XRef,
};
use conic::{solve, Cone, ConeKind, LinExpr, ProgramBuilder};
use serde::{Deserialize, Serialize};

/// Solve with an explicit inner description `vertices` of the support: one
/// second-stage copy per (vertex, sample) pair.
pub fn vertex_enumeration_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    metric: Metric,
    vertices: &[BinaryPoint],
) -> Result<DroSolution, DroError> {
    if samples.is_empty() || vertices.is_empty() {
        return Err(DroError::EmptySample);
    }
    for v in vertices {
        if !prob.support.contains(v) {
            return Err(DroError::Invalid(format!("vertex {v:?} not in support")));
        }
    }
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

    for (i, sample) in samples.iter().enumerate() {
        for (k, vertex) in vertices.iter().enumerate() {
            let copy =
                append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), vertex, &format!("_{i}_{k}"));
            let d = distance(metric, vertex, sample)?;
            b.geq(LinExpr::var(sigmas[i]) + LinExpr::term(alpha, d), copy.cost);
        }
    }
    let res = require_optimal(solve(&b.build())?)?;
    Ok(DroSolution {
        x: x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[alpha.0],
        value: res.objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdealMode {
    /// Distributionally robust with the 1-norm metric.
    DroNorm1,
    /// The radius-at-diameter reduction: classical robust optimization.
    ClassicalRo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealLpSolution {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub value: f64,
    /// Idealness is asserted by the caller, never machine-verified.
    pub warning: &'static str,
}

/// The ideal-formulation LP. Valid when the mixed-integer description
/// `{ (xi, lambda) : E xi <= f, 0 <= xi <= e, W0' lambda - Q xi <= q0,
/// lambda >= 0 }` is ideal (e.g. totally unimodular data), uncertainty is in
/// the objective only, and the second-stage cone is the orthant. No binaries
/// anywhere.
pub fn ideal_lp_solve(
    prob: &TwoStageProblem,
    samples: &SampleSet,
    epsilon: f64,
    mode: IdealMode,
) -> Result<IdealLpSolution, DroError> {
    let ss = &prob.second_stage;
    if ss.t0.nnz() != 0 || !ss.has_fixed_recourse() || prob.indicator_spec.is_some() {
        return Err(DroError::Invalid(
            "ideal LP route needs objective-only uncertainty".into(),
        ));
    }
    if !(ss.cone_y.len() == 1
        && ss.cone_y[0].kind == ConeKind::NonnegativeOrthant
        && ss.cone_y[0].dim == ss.n2)
    {
        return Err(DroError::Invalid("ideal LP route needs Y = nonnegative orthant".into()));
    }
    if samples.is_empty() {
        return Err(DroError::EmptySample);
    }

    // Continuous support description: declared rows plus the unit box.
    let ebox: Vec<(Vec<(usize, f64)>, f64)> = prob
        .support
        .rows
        .iter()
        .map(|(coeffs, f)| {
            (coeffs.iter().map(|&(j, e)| (j, e as f64)).collect(), *f as f64)
        })
        .chain((0..prob.m).map(|j| (vec![(j, 1.0)], 1.0)))
        .collect();
    let f_len = ebox.len();

    let mut b = ProgramBuilder::minimize();
    let x_vars = b.add_vars("x", prob.n1, 0.0);
    for (j, &c) in prob.cost.iter().enumerate() {
        b.set_objective(x_vars[j], c);
    }
    b.add_offset(prob.cost_offset);
    prob.first_stage.append_rows(&mut b, &x_vars);

    // Stationarity in xi: -Q' y + E' eta >= -alpha (e - 2 sample); for the
    // classical mode alpha is absent (rhs zero).
    let qt = ss.qmat.transpose();
    let copies = match mode {
        IdealMode::DroNorm1 => samples.len(),
        IdealMode::ClassicalRo => 1,
    };
    let weight = 1.0 / copies as f64;
    let alpha = b.add_var("alpha", if mode == IdealMode::DroNorm1 { epsilon } else { 0.0 });
    b.nonneg(LinExpr::var(alpha));
    if mode == IdealMode::ClassicalRo {
        b.eq(LinExpr::var(alpha), LinExpr::constant(0.0));
    }

    for (i, sample) in samples.iter().enumerate().take(copies) {
        let y = b.add_vars(&format!("y_{i}"), ss.n2, 0.0);
        let eta = b.add_vars(&format!("eta_{i}"), f_len, 0.0);
        for &v in y.iter().chain(&eta) {
            b.nonneg(LinExpr::var(v));
        }
        // objective: q0' y + f' eta - alpha e' sample (dro mode only)
        for (k, &q) in ss.q0.iter().enumerate() {
            b.add_objective(y[k], weight * q);
        }
        for (r, (_, f)) in ebox.iter().enumerate() {
            b.add_objective(eta[r], weight * f);
        }
        let reg = match mode {
            IdealMode::DroNorm1 => {
                let (g, g0) = norm1_regularizer_coefficients(sample);
                b.add_objective(alpha, -weight * g0);
                Some(g)
            }
            IdealMode::ClassicalRo => None,
        };
        // Stationarity rows, one per xi component.
        let mut rows: Vec<LinExpr> = (0..prob.m).map(|_| LinExpr::default()).collect();
        for k in 0..qt.vals.len() {
            rows[qt.rows[k]].add_term(y[qt.cols[k]], -qt.vals[k]);
        }
        for (r, (coeffs, _)) in ebox.iter().enumerate() {
            for &(j, e) in coeffs {
                rows[j].add_term(eta[r], e);
            }
        }
        for (j, row) in rows.into_iter().enumerate() {
            let mut rhs = LinExpr::default();
            if let Some(g) = &reg {
                // rhs = -alpha g_j with g = e - 2 sample
                rhs.add_term(alpha, -g[j]);
            }
            b.geq(row, rhs);
        }
        // W0 y >= h(x).
        let mut wrows: Vec<LinExpr> =
            ss.h0.iter().map(|&c| LinExpr::constant(-c)).collect();
        for k in 0..ss.w0.vals.len() {
            wrows[ss.w0.rows[k]].add_term(y[ss.w0.cols[k]], ss.w0.vals[k]);
        }
        for k in 0..ss.hmat.vals.len() {
            let r = ss.hmat.rows[k];
            let e = LinExpr::term(x_vars[ss.hmat.cols[k]], ss.hmat.vals[k]);
            wrows[r] = std::mem::take(&mut wrows[r]) - e;
        }
        for row in wrows {
            b.nonneg(row);
        }
    }

    let res = require_optimal(solve(&b.build())?)?;
    Ok(IdealLpSolution {
        x: x_vars.iter().map(|v| res.primal[v.0]).collect(),
        alpha: res.primal[alpha.0],
        value: res.objective,
        warning: "idealness asserted by caller, not machine-verified",
    })
}

#[allow(unused)]
fn _cone(c: Cone) {}
