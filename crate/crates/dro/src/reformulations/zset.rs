//! Per-sample inner feasible sets of the convex hull reformulation.
//!
//! The distributionally robust objective is `c(x) + alpha eps + (1/N) sum_i
//! Z_i(x, alpha)` where `Z_i` maximizes an affine function of `(x, alpha)`
//! over the closed convex hull of a mixed-binary conic set in the variables
//! `(xi, lambda, mu-or-Lambda, tau)`. Four variants are built here:
//!
//! * `Penalty`: dualized penalty form, `O(M + L)` rows, needs fixed recourse
//!   and a valid penalty parameter.
//! * `IndicatorPenalty`: like `Penalty` but switching lives in gated rows of
//!   the loss, dropping the coupling block entirely.
//! * `Linearized`: McCormick linearization of `Lambda = lambda xi'`, `O(ML)`
//!   rows, needs a priori dual bounds.
//! * `ObjectiveOnly`: uncertainty restricted to the objective; no auxiliary
//!   block at all.
//!
//! The 1-norm ground metric is always folded into the objective through its
//! exact affine form on binaries, eliminating the norm cone and the `tau`
//! variable; the 2-norm keeps a second-order cone row and the sup-norm two
//! polyhedral rows per component.

use crate::ambiguity::{norm1_regularizer_coefficients, Metric};
use crate::error::DroError;
use crate::lift::ExplicitSet;
use crate::two_stage::{BinaryPoint, TwoStageProblem};
use conic::{Cone, ConeKind, MixedBinaryConicProgram, Sense, SparseMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ZVariant {
    Linearized { lambda_bar: Vec<f64> },
    Penalty { rho: f64 },
    IndicatorPenalty { rho: f64 },
    ObjectiveOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricHandling {
    /// Exact affine substitution of the 1-norm distance; no cone row, no tau.
    Norm1Linearized,
    /// Explicit norm-cone (or polyhedral) rows with an epigraph tau.
    NormCone(Metric),
}

/// Variable layout of the z vector: `(xi, lambda, aux, tau?)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZLayout {
    pub m: usize,
    pub l: usize,
    pub aux_len: usize,
    pub has_tau: bool,
}

impl ZLayout {
    pub fn n(&self) -> usize {
        self.m + self.l + self.aux_len + usize::from(self.has_tau)
    }
    pub fn xi(&self, j: usize) -> usize {
        j
    }
    pub fn lambda(&self, r: usize) -> usize {
        self.m + r
    }
    pub fn aux(&self, k: usize) -> usize {
        self.m + self.l + k
    }
    pub fn tau(&self) -> Option<usize> {
        self.has_tau.then(|| self.m + self.l + self.aux_len)
    }
}

/// The inner objective `gamma(x, alpha)` as an affine map plus scalar terms:
/// `gamma = g_const + G_x x + g_alpha alpha`, and the sample's scalar
/// contribution `offset_const + offset_alpha * alpha` that rides along into
/// the master objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaObjective {
    pub g_const: Vec<f64>,
    pub g_x: SparseMatrix,
    pub g_alpha: Vec<f64>,
    pub offset_const: f64,
    pub offset_alpha: f64,
}

impl GammaObjective {
    pub fn at(&self, x: &[f64], alpha: f64) -> (Vec<f64>, f64) {
        let gx = self.g_x.mul_vec(x);
        let gamma: Vec<f64> = self
            .g_const
            .iter()
            .zip(gx)
            .zip(&self.g_alpha)
            .map(|((c, xterm), a)| c + xterm + a * alpha)
            .collect();
        (gamma, self.offset_const + self.offset_alpha * alpha)
    }
}

/// One sample's reformulated set with its objective map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZSetSpec {
    pub variant: ZVariant,
    pub sample: BinaryPoint,
    pub metric_handling: MetricHandling,
    pub layout: ZLayout,
    pub set: ExplicitSet,
    pub gamma: GammaObjective,
    /// Feasibility skeleton of the MICP (zero objective); solvers install
    /// `gamma(x, alpha)` before running branch-and-bound.
    pub assembled: MixedBinaryConicProgram,
}

impl ZSetSpec {
    pub fn binary_indices(&self) -> Vec<usize> {
        (0..self.layout.m).collect()
    }

    /// The MICP `max gamma(x, alpha)' z` over this set.
    pub fn micp_at(&self, x: &[f64], alpha: f64) -> (MixedBinaryConicProgram, f64) {
        let (gamma, offset) = self.gamma.at(x, alpha);
        let mut p = self.assembled.clone();
        p.base.objective = gamma;
        p.base.offset = offset;
        (p, offset)
    }

    /// Binary-point membership at tolerance; the base sets carry no
    /// witnesses, so z alone decides.
    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        let binary_ok = (0..self.layout.m)
            .all(|j| (z[j] - z[j].round()).abs() <= 1e-6 && (0.0..=1.0).contains(&z[j].round()));
        binary_ok && self.set.contains(z, &[], tol)
    }
}

/// Build the per-sample set for the requested variant and metric.
pub fn build_zset(
    prob: &TwoStageProblem,
    sample: &[u8],
    variant: ZVariant,
    metric: Metric,
) -> Result<ZSetSpec, DroError> {
    if !prob.support.contains(sample) {
        return Err(DroError::SampleOutsideSupport { index: 0 });
    }
    let handling = match metric {
        Metric::Norm1 => MetricHandling::Norm1Linearized,
        Metric::Norm2 | Metric::NormInf => MetricHandling::NormCone(metric),
        Metric::Discrete => return Err(DroError::UnsupportedMetric("discrete")),
    };
    let ss = &prob.second_stage;
    let m = prob.m;
    let l = ss.row_count();
    for cone in &ss.cone_y {
        if cone.kind == ConeKind::Zero || cone.kind == ConeKind::PositiveSemidefinite {
            return Err(DroError::Invalid(
                "second-stage cone must be a product of orthant and second-order factors".into(),
            ));
        }
    }

    let (aux_len, rho) = match &variant {
        ZVariant::Linearized { lambda_bar } => {
            if lambda_bar.len() != l
                || lambda_bar.iter().any(|v| !v.is_finite() || *v < 0.0)
            {
                return Err(DroError::MissingBounds);
            }
            (m * l, 0.0)
        }
        ZVariant::Penalty { rho } => {
            if !ss.has_fixed_recourse() {
                return Err(DroError::FixedRecourseViolated);
            }
            if *rho <= 0.0 {
                return Err(DroError::NonPositiveRho(*rho));
            }
            (m, *rho)
        }
        ZVariant::IndicatorPenalty { rho } => {
            let spec = prob.indicator_spec.as_ref().ok_or(DroError::MissingIndicatorSpec)?;
            if *rho <= 0.0 {
                return Err(DroError::NonPositiveRho(*rho));
            }
            (spec.rows.len(), *rho)
        }
        ZVariant::ObjectiveOnly => {
            if ss.t0.nnz() != 0 || !ss.has_fixed_recourse() {
                return Err(DroError::Invalid(
                    "objective-only variant needs T0 = 0 and fixed recourse".into(),
                ));
            }
            (0, 0.0)
        }
    };

    let has_tau = matches!(handling, MetricHandling::NormCone(_));
    let layout = ZLayout { m, l, aux_len, has_tau };
    let n = layout.n();
    let mut set = ExplicitSet::new(n);

    // Support rows: f - E xi >= 0.
    if !prob.support.rows.is_empty() {
        let rows: Vec<_> = prob
            .support
            .rows
            .iter()
            .map(|(coeffs, f)| {
                let zc: Vec<_> =
                    coeffs.iter().map(|&(j, e)| (layout.xi(j), -(e as f64))).collect();
                (zc, Vec::new(), *f as f64)
            })
            .collect();
        set.push_block(rows, Cone::nonneg(prob.support.rows.len()));
    }
    // Box: xi_j <= 1 (xi >= 0 comes from z >= 0).
    let rows: Vec<_> =
        (0..m).map(|j| (vec![(layout.xi(j), -1.0)], Vec::new(), 1.0)).collect();
    set.push_block(rows, Cone::nonneg(m));

    // Metric rows.
    match handling {
        MetricHandling::Norm1Linearized => {}
        MetricHandling::NormCone(Metric::Norm2) => {
            let tau = layout.tau().unwrap();
            let mut rows = vec![(vec![(tau, 1.0)], Vec::new(), 0.0)];
            for j in 0..m {
                rows.push((vec![(layout.xi(j), 1.0)], Vec::new(), -(sample[j] as f64)));
            }
            set.push_block(rows, Cone::soc(m + 1));
        }
        MetricHandling::NormCone(Metric::NormInf) => {
            let tau = layout.tau().unwrap();
            let mut rows = Vec::with_capacity(2 * m);
            for j in 0..m {
                let s = sample[j] as f64;
                rows.push((vec![(tau, 1.0), (layout.xi(j), -1.0)], Vec::new(), s));
                rows.push((vec![(tau, 1.0), (layout.xi(j), 1.0)], Vec::new(), -s));
            }
            set.push_block(rows, Cone::nonneg(2 * m));
        }
        MetricHandling::NormCone(_) => unreachable!(),
    }

    // Variant-specific coupling rows.
    if let ZVariant::Penalty { rho } = &variant {
        // rho (e - 2 xi) + T0' lambda + mu >= 0.
        let t0t = ss.t0.transpose();
        let mut rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, f64)> =
            (0..m).map(|j| (vec![(layout.xi(j), -2.0 * rho), (layout.aux(j), 1.0)], Vec::new(), *rho)).collect();
        for k in 0..t0t.vals.len() {
            rows[t0t.rows[k]].0.push((layout.lambda(t0t.cols[k]), t0t.vals[k]));
        }
        set.push_block(rows, Cone::nonneg(m));
    }
    if let ZVariant::Linearized { lambda_bar } = &variant {
        // Column-major vec(Lambda): aux index of (r, j) is j * L + r.
        let idx = |r: usize, j: usize| layout.aux(j * l + r);
        let mut up = Vec::with_capacity(m * l);
        let mut lo1 = Vec::with_capacity(m * l);
        let mut lo2 = Vec::with_capacity(m * l);
        for j in 0..m {
            for r in 0..l {
                // Lambda_rj - lambda_r + lbar_r (1 - xi_j) >= 0
                up.push((
                    vec![
                        (idx(r, j), 1.0),
                        (layout.lambda(r), -1.0),
                        (layout.xi(j), -lambda_bar[r]),
                    ],
                    Vec::new(),
                    lambda_bar[r],
                ));
                // lambda_r - Lambda_rj >= 0
                lo1.push((vec![(layout.lambda(r), 1.0), (idx(r, j), -1.0)], Vec::new(), 0.0));
                // lbar_r xi_j - Lambda_rj >= 0
                lo2.push((
                    vec![(layout.xi(j), lambda_bar[r]), (idx(r, j), -1.0)],
                    Vec::new(),
                    0.0,
                ));
            }
        }
        set.push_block(up, Cone::nonneg(m * l));
        set.push_block(lo1, Cone::nonneg(m * l));
        set.push_block(lo2, Cone::nonneg(m * l));
    }

    // Dual-feasibility block: q(xi)-terms minus W' lambda (minus F-terms for
    // the indicator route) must lie in the dual cone of Y.
    {
        let n2 = ss.n2;
        let mut rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, f64)> =
            (0..n2).map(|i| (Vec::new(), Vec::new(), ss.q0[i])).collect();
        for k in 0..ss.qmat.vals.len() {
            rows[ss.qmat.rows[k]].0.push((layout.xi(ss.qmat.cols[k]), ss.qmat.vals[k]));
        }
        // -W0' lambda.
        for k in 0..ss.w0.vals.len() {
            let (r, c, v) = (ss.w0.rows[k], ss.w0.cols[k], ss.w0.vals[k]);
            rows[c].0.push((layout.lambda(r), -v));
        }
        match &variant {
            ZVariant::Linearized { .. } => {
                // -sum_j W_j' Lambda e_j.
                for (j, wj) in ss.wj.iter().enumerate() {
                    for k in 0..wj.vals.len() {
                        let (r, c, v) = (wj.rows[k], wj.cols[k], wj.vals[k]);
                        rows[c].0.push((layout.aux(j * l + r), -v));
                    }
                }
            }
            ZVariant::IndicatorPenalty { rho } => {
                let spec = prob.indicator_spec.as_ref().unwrap();
                for (r, row) in spec.rows.iter().enumerate() {
                    let (a, bcoef) = row.gate_affine();
                    for &(yj, c) in &row.coeffs {
                        // + rho F' gate(xi) - F' mu
                        if a != 0.0 {
                            rows[yj].2 += rho * a * c;
                        }
                        if bcoef != 0.0 {
                            rows[yj].0.push((layout.xi(row.gate), rho * bcoef * c));
                        }
                        rows[yj].0.push((layout.aux(r), -c));
                    }
                }
            }
            _ => {}
        }
        let mut it = rows.into_iter();
        for cone in &ss.cone_y {
            let block: Vec<_> = (&mut it).take(cone.slack_dim()).collect();
            // Orthant and second-order factors are self-dual.
            set.push_block(block, *cone);
        }
    }

    // Objective map gamma(x, alpha).
    let mut g_const = vec![0.0; n];
    let mut g_alpha = vec![0.0; n];
    let mut g_x = SparseMatrix::new(n, prob.n1);
    let mut offset_const = 0.0;
    let mut offset_alpha = 0.0;

    // h(x)' lambda.
    for (r, &h) in ss.h0.iter().enumerate() {
        g_const[layout.lambda(r)] += h;
    }
    for k in 0..ss.hmat.vals.len() {
        g_x.push(layout.lambda(ss.hmat.rows[k]), ss.hmat.cols[k], ss.hmat.vals[k]);
    }
    match &variant {
        ZVariant::Penalty { rho } => {
            for j in 0..m {
                g_const[layout.xi(j)] += rho;
            }
            for j in 0..m {
                g_const[layout.aux(j)] -= 1.0;
            }
        }
        ZVariant::IndicatorPenalty { rho } => {
            let spec = prob.indicator_spec.as_ref().unwrap();
            for (r, row) in spec.rows.iter().enumerate() {
                let (a, bcoef) = row.gate_affine();
                offset_const += rho * a * row.f0;
                g_const[layout.xi(row.gate)] += rho * bcoef * row.f0;
                g_const[layout.aux(r)] -= row.f0;
            }
        }
        ZVariant::Linearized { .. } => {
            // <T0, Lambda> with constant T under fixed recourse.
            for k in 0..ss.t0.vals.len() {
                let (r, j, v) = (ss.t0.rows[k], ss.t0.cols[k], ss.t0.vals[k]);
                g_const[layout.aux(j * l + r)] += v;
            }
        }
        ZVariant::ObjectiveOnly => {}
    }
    match handling {
        MetricHandling::Norm1Linearized => {
            let (g, g0) = norm1_regularizer_coefficients(sample);
            for j in 0..m {
                g_alpha[layout.xi(j)] -= g[j];
            }
            offset_alpha -= g0;
        }
        MetricHandling::NormCone(_) => {
            g_alpha[layout.tau().unwrap()] -= 1.0;
        }
    }

    let gamma = GammaObjective { g_const, g_x, g_alpha, offset_const, offset_alpha };
    let assembled = MixedBinaryConicProgram {
        base: {
            let mut p = set.maximize_program(&vec![0.0; n], 0.0);
            p.sense = Sense::Maximize;
            p
        },
        binary_indices: (0..m).collect(),
        bilinear_links: None,
    };

    Ok(ZSetSpec {
        variant,
        sample: sample.to_vec(),
        metric_handling: handling,
        layout,
        set,
        gamma,
        assembled,
    })
}
