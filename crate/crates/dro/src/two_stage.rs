//! Two-stage problem data model and the classical solution methods on top of
//! it: loss evaluation, sample average approximation, budgeted robust
//! optimization, and the monotone worst-case shortcut.
//!
//! The second-stage loss is the value of the conic program
//!
//! ```text
//!   Q(x, xi) = inf { q(xi)' y : W(xi) y >= T0 xi + h(x), y in Y }
//! ```
//!
//! with `q(xi) = q0 + Q xi` and `W(xi) = W0 + sum_j xi_j W_j`. Failure
//! switching may equivalently be carried by indicator rows gated on single
//! components of `xi`; a problem may carry both encodings as long as they
//! agree, and evaluation applies whichever is present.

use crate::error::DroError;
use conic::{
    solve, Cone, ConeKind, ConicProgram, LinExpr, ProgramBuilder, SolveResult, SolveStatus,
    SparseMatrix, VarId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// A point of the binary scenario space, components in {0, 1}.
pub type BinaryPoint = Vec<u8>;

/// Conic-representable set `{ v : b - A v in K }` over `dim` variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSet {
    pub dim: usize,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicSet {
    pub fn unconstrained(dim: usize) -> Self {
        ConicSet { dim, matrix: SparseMatrix::new(0, dim), rhs: Vec::new(), cones: Vec::new() }
    }

    /// Box `lo <= v <= hi` on every coordinate.
    pub fn boxed(dim: usize, lo: f64, hi: f64) -> Self {
        let mut matrix = SparseMatrix::new(2 * dim, dim);
        let mut rhs = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            // v_j - lo >= 0  encoded as  (-lo) - (-v_j) in R+
            matrix.push(j, j, -1.0);
            rhs.push(-lo);
            // hi - v_j >= 0
            matrix.push(dim + j, j, 1.0);
            rhs.push(hi);
        }
        ConicSet { dim, matrix, rhs, cones: vec![Cone::nonneg(2 * dim)] }
    }

    /// Append this set's rows to a builder over the given variables.
    pub fn append_rows(&self, b: &mut ProgramBuilder, vars: &[VarId]) {
        debug_assert_eq!(vars.len(), self.dim);
        let mut at = 0usize;
        // Gather per-row expressions once.
        let mut rows: Vec<LinExpr> = self.rhs.iter().map(|&c| LinExpr::constant(c)).collect();
        for k in 0..self.matrix.vals.len() {
            rows[self.matrix.rows[k]].add_term(vars[self.matrix.cols[k]], -self.matrix.vals[k]);
        }
        let mut rows = rows.into_iter();
        for cone in &self.cones {
            let d = cone.slack_dim();
            let block: Vec<LinExpr> = (&mut rows).take(d).collect();
            b.add_block(block, *cone);
            at += d;
        }
        debug_assert_eq!(at, self.rhs.len());
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        let av = self.matrix.mul_vec(v);
        let slack: Vec<f64> = self.rhs.iter().zip(av).map(|(b, a)| b - a).collect();
        let mut at = 0;
        for cone in &self.cones {
            let d = cone.slack_dim();
            if cone.membership_residual(&slack[at..at + d]) > tol {
                return false;
            }
            at += d;
        }
        true
    }
}

/// Outer description `E xi <= f` of the support, held in integers so that
/// membership of binary points is decided exactly.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Support {
    pub m: usize,
    /// Rows as (sparse integer coefficients, integer rhs).
    pub rows: Vec<(Vec<(usize, i64)>, i64)>,
}

impl Support {
    pub fn full_cube(m: usize) -> Self {
        Support { m, rows: Vec::new() }
    }

    pub fn budget(m: usize, k: i64) -> Self {
        let row = ((0..m).map(|j| (j, 1i64)).collect(), k);
        Support { m, rows: vec![row] }
    }

    pub fn contains(&self, xi: &[u8]) -> bool {
        xi.len() == self.m
            && xi.iter().all(|&v| v <= 1)
            && self.rows.iter().all(|(coeffs, f)| {
                coeffs.iter().map(|&(j, e)| e * xi[j] as i64).sum::<i64>() <= *f
            })
    }

    /// All support points, refusing when more than `cap` would be produced.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<BinaryPoint>, DroError> {
        if self.m > 26 {
            return Err(DroError::SupportTooLarge { size_bound: cap });
        }
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << self.m) {
            let xi: BinaryPoint = (0..self.m).map(|j| (mask >> j & 1) as u8).collect();
            if self.contains(&xi) {
                if out.len() >= cap {
                    return Err(DroError::SupportTooLarge { size_bound: cap });
                }
                out.push(xi);
            }
        }
        Ok(out)
    }
}

/// One indicator row `f_r(y) = f0 + coeffs' y` with `f_r(y) >= 0` always and
/// `f_r(y) = 0` enforced when its gate fires. The gate is `xi_j = 1` or, for
/// `negated` rows, `xi_j = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub f0: f64,
    pub coeffs: Vec<(usize, f64)>,
    pub gate: usize,
    #[serde(default)]
    pub negated: bool,
}

impl IndicatorRow {
    pub fn expr(&self, y_vars: &[VarId]) -> LinExpr {
        let mut e = LinExpr::constant(self.f0);
        for &(j, c) in &self.coeffs {
            e.add_term(y_vars[j], c);
        }
        e
    }

    pub fn fires(&self, xi: &[u8]) -> bool {
        (xi[self.gate] == 1) != self.negated
    }

    /// Gate value as an affine function of xi: (constant, coeff on xi_gate).
    pub fn gate_affine(&self) -> (f64, f64) {
        if self.negated {
            (1.0, -1.0)
        } else {
            (0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub rows: Vec<IndicatorRow>,
}

/// Second-stage data of the loss function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondStage {
    pub n2: usize,
    pub q0: Vec<f64>,
    /// N2 x M objective uncertainty.
    pub qmat: SparseMatrix,
    /// L x N2 recourse matrix.
    pub w0: SparseMatrix,
    /// Scenario-dependent recourse terms; empty under fixed recourse.
    #[serde(default)]
    pub wj: Vec<SparseMatrix>,
    /// L x M right-hand-side uncertainty.
    pub t0: SparseMatrix,
    pub h0: Vec<f64>,
    /// L x N1: h(x) = h0 + H x.
    pub hmat: SparseMatrix,
    pub cone_y: Vec<Cone>,
}

impl SecondStage {
    pub fn row_count(&self) -> usize {
        self.h0.len()
    }

    pub fn has_fixed_recourse(&self) -> bool {
        self.wj.iter().all(|w| w.nnz() == 0)
    }
}

/// The full two-stage problem instance. Immutable and shareable; per-scenario
/// loss evaluations are independent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStageProblem {
    /// Schema version for the JSON instance format.
    pub version: u32,
    pub n1: usize,
    pub first_stage: ConicSet,
    pub cost: Vec<f64>,
    #[serde(default)]
    pub cost_offset: f64,
    pub m: usize,
    pub second_stage: SecondStage,
    pub support: Support,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator_spec: Option<IndicatorSpec>,
}

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

impl TwoStageProblem {
    pub fn first_stage_cost(&self, x: &[f64]) -> f64 {
        self.cost_offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn q_of(&self, xi: &[u8]) -> Vec<f64> {
        let xi_f: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
        let qx = self.second_stage.qmat.mul_vec(&xi_f);
        self.second_stage.q0.iter().zip(qx).map(|(a, b)| a + b).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, DroError> {
        let p: TwoStageProblem = serde_json::from_str(s).map_err(DroError::BadInstance)?;
        if p.version != INSTANCE_SCHEMA_VERSION {
            return Err(DroError::SchemaVersion { got: p.version, want: INSTANCE_SCHEMA_VERSION });
        }
        Ok(p)
    }
}

/// Empirical sample of scenarios; duplicates allowed, every point must lie in
/// the support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<BinaryPoint>,
}

impl SampleSet {
    pub fn new(samples: Vec<BinaryPoint>, support: &Support) -> Result<Self, DroError> {
        for (i, s) in samples.iter().enumerate() {
            if !support.contains(s) {
                return Err(DroError::SampleOutsideSupport { index: i });
            }
        }
        Ok(SampleSet { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BinaryPoint> {
        self.samples.iter()
    }

    pub fn points(&self) -> &[BinaryPoint] {
        &self.samples
    }
}

/// How first-stage decisions enter an embedded second-stage copy.
#[derive(Clone, Copy)]
pub enum XRef<'a> {
    Vars(&'a [VarId]),
    Point(&'a [f64]),
}

impl<'a> XRef<'a> {
    pub(crate) fn coord(&self, j: usize) -> LinExpr {
        match self {
            XRef::Vars(v) => LinExpr::var(v[j]),
            XRef::Point(p) => LinExpr::constant(p[j]),
        }
    }
}

/// Handle to a second-stage copy appended to a builder.
pub struct ScenarioCopy {
    pub y_vars: Vec<VarId>,
    /// `q(xi)' y` for this copy.
    pub cost: LinExpr,
}

/// Append one second-stage copy at a fixed binary scenario. Rows use
/// `W(xi) y >= T0 xi + h(x)` plus resolved indicator gates, so the copy is
/// exact regardless of which switching encoding the instance carries.
pub fn append_scenario_copy(
    b: &mut ProgramBuilder,
    prob: &TwoStageProblem,
    x: XRef<'_>,
    xi: &[u8],
    tag: &str,
) -> ScenarioCopy {
    let ss = &prob.second_stage;
    let y_vars = b.add_vars(&format!("y{tag}"), ss.n2, 0.0);

    // Cone membership of y: the cone product applies to the y vector itself.
    let mut at = 0usize;
    for cone in &ss.cone_y {
        let d = cone.slack_dim();
        let block: Vec<LinExpr> = (0..d).map(|i| LinExpr::var(y_vars[at + i])).collect();
        b.add_block(block, *cone);
        at += d;
    }

    // W(xi) y >= T0 xi + h(x), as L nonnegativity rows.
    let l = ss.row_count();
    let xi_f: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
    let t0_xi = ss.t0.mul_vec(&xi_f);
    let mut rows: Vec<LinExpr> =
        (0..l).map(|r| LinExpr::constant(-t0_xi[r] - ss.h0[r])).collect();
    for k in 0..ss.w0.vals.len() {
        rows[ss.w0.rows[k]].add_term(y_vars[ss.w0.cols[k]], ss.w0.vals[k]);
    }
    for (j, wj) in ss.wj.iter().enumerate() {
        if xi[j] == 1 {
            for k in 0..wj.vals.len() {
                rows[wj.rows[k]].add_term(y_vars[wj.cols[k]], wj.vals[k]);
            }
        }
    }
    // subtract H x
    for k in 0..ss.hmat.vals.len() {
        let r = ss.hmat.rows[k];
        let xj = x.coord(ss.hmat.cols[k]) * ss.hmat.vals[k];
        rows[r] = std::mem::take(&mut rows[r]) - xj;
    }
    if l > 0 {
        b.add_block(rows, Cone::nonneg(l));
    }

    // Indicator rows: keep f(y) >= 0, pin to zero when the gate fires.
    if let Some(spec) = &prob.indicator_spec {
        for row in &spec.rows {
            let e = row.expr(&y_vars);
            if row.fires(xi) {
                b.eq(e, LinExpr::constant(0.0));
            } else {
                b.nonneg(e);
            }
        }
    }

    let q = prob.q_of(xi);
    let mut cost = LinExpr::default();
    for (i, &c) in q.iter().enumerate() {
        cost.add_term(y_vars[i], c);
    }
    ScenarioCopy { y_vars, cost: cost.compact() }
}

fn second_stage_program(prob: &TwoStageProblem, x: &[f64], xi: &[u8]) -> ConicProgram {
    let mut b = ProgramBuilder::minimize();
    let copy = append_scenario_copy(&mut b, prob, XRef::Point(x), xi, "");
    for (v, c) in &copy.cost.terms {
        b.add_objective(*v, *c);
    }
    b.add_offset(copy.cost.constant);
    b.build()
}

/// Optimal value of the second-stage conic program; `Infeasible` signals a
/// complete-recourse violation and is reported, not masked.
pub fn evaluate_loss(prob: &TwoStageProblem, x: &[f64], xi: &[u8]) -> Result<f64, DroError> {
    let program = second_stage_program(prob, x, xi);
    let res = solve(&program)?;
    match res.status {
        SolveStatus::Optimal => Ok(res.objective),
        SolveStatus::Infeasible => Err(DroError::CompleteRecourseViolated),
        s => Err(DroError::SolverStatus(s)),
    }
}

/// Value of the conic dual of the second-stage program; equals
/// [`evaluate_loss`] under strong duality.
pub fn evaluate_dual_loss(prob: &TwoStageProblem, x: &[f64], xi: &[u8]) -> Result<f64, DroError> {
    let program = second_stage_program(prob, x, xi);
    let dual = conic::dualize(&program);
    let res = solve(&dual)?;
    match res.status {
        SolveStatus::Optimal => Ok(res.objective),
        SolveStatus::Infeasible => Err(DroError::CompleteRecourseViolated),
        s => Err(DroError::SolverStatus(s)),
    }
}

/// A solved first-stage decision with its objective value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimize `c(x) + sum_s weight_s Q(x, scenario_s)` in one monolithic conic
/// program. Sample average approximation is the equal-weights case.
pub fn scenario_weighted_solve(
    prob: &TwoStageProblem,
    scenarios: &[BinaryPoint],
    weights: &[f64],
) -> Result<StageSolution, DroError> {
    assert_eq!(scenarios.len(), weights.len());
    let mut b = ProgramBuilder::minimize();
    let x_vars = b.add_vars("x", prob.n1, 0.0);
    for (j, &c) in prob.cost.iter().enumerate() {
        b.set_objective(x_vars[j], c);
    }
    b.add_offset(prob.cost_offset);
    prob.first_stage.append_rows(&mut b, &x_vars);
    for (s, (xi, &w)) in scenarios.iter().zip(weights).enumerate() {
        let copy = append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), xi, &format!("_{s}"));
        for (v, c) in &copy.cost.terms {
            b.add_objective(*v, c * w);
        }
        b.add_offset(copy.cost.constant * w);
    }
    let program = b.build();
    let res = solve(&program)?;
    let res = require_optimal(res)?;
    let x = x_vars.iter().map(|v| res.primal[v.0]).collect();
    Ok(StageSolution { x, value: res.objective })
}

/// Sample average approximation over an empirical sample.
pub fn saa_solve(prob: &TwoStageProblem, samples: &SampleSet) -> Result<StageSolution, DroError> {
    if samples.is_empty() {
        return Err(DroError::EmptySample);
    }
    let w = 1.0 / samples.len() as f64;
    let weights = vec![w; samples.len()];
    scenario_weighted_solve(prob, samples.points(), &weights)
}

/// Result of the budgeted classical robust solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub worst_xi: BinaryPoint,
}

/// Classical two-stage robust optimization over the budget set
/// `{ xi in support : sum xi <= K }`, solved by a cut loop: the master holds
/// one second-stage copy per identified scenario, the adversary maximizes
/// `Q(x*, .)` over the budget set.
pub fn classical_ro_solve(
    prob: &TwoStageProblem,
    budget: usize,
    adversary: &dyn Adversary,
) -> Result<RobustSolution, DroError> {
    let mut scenarios: Vec<BinaryPoint> = vec![vec![0; prob.m]];
    if !prob.support.contains(&scenarios[0]) {
        return Err(DroError::SampleOutsideSupport { index: 0 });
    }
    let mut worst = scenarios[0].clone();
    for _iter in 0..crate::exact::DEFAULT_MAX_ITER {
        // Master: min c(x) + theta, theta >= Q-copy(s) per scenario.
        let mut b = ProgramBuilder::minimize();
        let x_vars = b.add_vars("x", prob.n1, 0.0);
        for (j, &c) in prob.cost.iter().enumerate() {
            b.set_objective(x_vars[j], c);
        }
        b.add_offset(prob.cost_offset);
        prob.first_stage.append_rows(&mut b, &x_vars);
        let theta = b.add_var("theta", 1.0);
        for (s, xi) in scenarios.iter().enumerate() {
            let copy =
                append_scenario_copy(&mut b, prob, XRef::Vars(&x_vars), xi, &format!("_{s}"));
            b.geq(LinExpr::var(theta), copy.cost);
        }
        let res = require_optimal(solve(&b.build())?)?;
        let x: Vec<f64> = x_vars.iter().map(|v| res.primal[v.0]).collect();
        let master_value = res.objective;

        let (xi_star, q_star) = adversary.worst_case(prob, &x, budget)?;
        worst = xi_star.clone();
        let ub = prob.first_stage_cost(&x) + q_star;
        if ub <= master_value + 1e-6 * (1.0 + master_value.abs()) {
            return Ok(RobustSolution { x, value: ub, worst_xi: worst });
        }
        if scenarios.contains(&xi_star) {
            // Cut cannot improve further; report the adversary's bound.
            return Ok(RobustSolution { x, value: ub, worst_xi: worst });
        }
        scenarios.push(xi_star);
    }
    Err(DroError::MaxIterReached { lower: f64::NAN, upper: f64::NAN })
}

/// Inner maximization oracle for classical robust optimization.
pub trait Adversary {
    /// `max { Q(x, xi) : xi in support, sum xi <= budget }` with an argmax.
    fn worst_case(
        &self,
        prob: &TwoStageProblem,
        x: &[f64],
        budget: usize,
    ) -> Result<(BinaryPoint, f64), DroError>;
}

/// Adversary that enumerates the budget set; guarded by the support cap.
pub struct EnumerationAdversary {
    pub cap: usize,
}

impl Default for EnumerationAdversary {
    fn default() -> Self {
        EnumerationAdversary { cap: 1 << 12 }
    }
}

impl Adversary for EnumerationAdversary {
    fn worst_case(
        &self,
        prob: &TwoStageProblem,
        x: &[f64],
        budget: usize,
    ) -> Result<(BinaryPoint, f64), DroError> {
        let points = prob.support.enumerate(self.cap)?;
        let mut best: Option<(BinaryPoint, f64)> = None;
        for xi in points {
            if xi.iter().map(|&v| v as usize).sum::<usize>() > budget {
                continue;
            }
            let q = evaluate_loss(prob, x, &xi)?;
            if best.as_ref().map_or(true, |(_, bq)| q > *bq) {
                best = Some((xi, q));
            }
        }
        best.ok_or(DroError::EmptySample)
    }
}

/// Proposition-style worst-case shortcut over the full cube: component j of
/// the returned point is 1 when the j-th columns of both `T0` and `Q` are
/// nonnegative, 0 when both are nonpositive. A mixed-sign column violates the
/// precondition and errors so callers can fall back to the robust solve.
pub fn worst_case_shortcut(prob: &TwoStageProblem) -> Result<BinaryPoint, DroError> {
    let ss = &prob.second_stage;
    let mut lo = vec![0f64; prob.m];
    let mut hi = vec![0f64; prob.m];
    let mut scan = |m: &SparseMatrix| {
        for k in 0..m.vals.len() {
            let j = m.cols[k];
            lo[j] = lo[j].min(m.vals[k]);
            hi[j] = hi[j].max(m.vals[k]);
        }
    };
    scan(&ss.t0);
    scan(&ss.qmat);
    let mut xi = vec![0u8; prob.m];
    for j in 0..prob.m {
        if lo[j] >= 0.0 {
            xi[j] = 1;
        } else if hi[j] <= 0.0 {
            xi[j] = 0;
        } else {
            return Err(DroError::SignConditionViolated { column: j });
        }
    }
    Ok(xi)
}

/// Probe complete recourse by solving the loss at seeded random pairs of a
/// first-stage point and a support scenario. Points are generated by
/// minimizing random linear objectives over the first stage, which keeps
/// them inside arbitrary conic feasible sets.
pub fn probe_complete_recourse(
    prob: &TwoStageProblem,
    trials: usize,
    seed: u64,
) -> Result<(), DroError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let x = random_first_stage_point(prob, &mut rng)?;
        let xi: BinaryPoint = (0..prob.m)
            .map(|_| if rng.gen_bool(0.3) { 1u8 } else { 0u8 })
            .collect();
        let xi = if prob.support.contains(&xi) { xi } else { vec![0; prob.m] };
        evaluate_loss(prob, &x, &xi)?;
    }
    Ok(())
}

/// A feasible first-stage point found by minimizing a random linear
/// objective over X.
pub fn random_first_stage_point(
    prob: &TwoStageProblem,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, DroError> {
    let mut b = ProgramBuilder::minimize();
    let x_vars = b.add_vars("x", prob.n1, 0.0);
    for &v in &x_vars {
        b.set_objective(v, rng.gen_range(-1.0..1.0));
    }
    prob.first_stage.append_rows(&mut b, &x_vars);
    let res = require_optimal(solve(&b.build())?)?;
    Ok(x_vars.iter().map(|v| res.primal[v.0]).collect())
}

pub(crate) fn require_optimal(res: SolveResult) -> Result<SolveResult, DroError> {
    match res.status {
        SolveStatus::Optimal => Ok(res),
        SolveStatus::Infeasible => Err(DroError::Infeasible),
        s => Err(DroError::SolverStatus(s)),
    }
}
