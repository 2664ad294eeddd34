//! Seeded synthetic instances for cross-method agreement tests and random
//! studies. Complete recourse is structural: every coupling row carries an
//! identity slack penalized in the objective, so the second stage is
//! feasible and bounded for any first-stage point and scenario.

use crate::two_stage::{ConicSet, SecondStage, Support, TwoStageProblem, INSTANCE_SCHEMA_VERSION};
use conic::{Cone, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub m: usize,
    pub n1: usize,
    /// Non-slack second-stage variables.
    pub nv: usize,
    /// Coupling rows (each gets a penalized slack).
    pub rows: usize,
    /// Force the monotone sign condition: T0 and Q columns nonnegative.
    pub monotone: bool,
    /// Scale of the slack penalty relative to the flow costs.
    pub penalty: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { m: 6, n1: 3, nv: 4, rows: 5, monotone: true, penalty: 50.0 }
    }
}

/// Random right-hand-side-uncertain instance. Layout: y = (v, s) with
/// `B v + s >= T0 xi + h0 + H x`, `v <= vbar`, all nonnegative.
pub fn random_problem(seed: u64, config: &SynthConfig) -> TwoStageProblem {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (m, n1, nv, l) = (config.m, config.n1, config.nv, config.rows);
    let n2 = nv + l;

    let mut q0 = vec![0.0; n2];
    for c in q0.iter_mut().take(nv) {
        *c = rng.gen_range(0.2..2.0);
    }
    for c in q0.iter_mut().skip(nv) {
        *c = config.penalty * rng.gen_range(0.8..1.2);
    }

    let mut w0 = SparseMatrix::new(0, n2);
    let mut t0 = SparseMatrix::new(0, m);
    let mut h0 = Vec::new();
    let mut hmat = SparseMatrix::new(0, n1);
    let mut row = 0;
    for r in 0..l {
        for v in 0..nv {
            if rng.gen_bool(0.6) {
                w0.push(row, v, rng.gen_range(0.3..1.5));
            }
        }
        w0.push(row, nv + r, 1.0);
        for j in 0..m {
            if rng.gen_bool(0.5) {
                let sign = if config.monotone || rng.gen_bool(0.7) { 1.0 } else { -1.0 };
                t0.push(row, j, sign * rng.gen_range(0.2..1.0));
            }
        }
        h0.push(rng.gen_range(-0.5..1.0));
        for j in 0..n1 {
            if rng.gen_bool(0.5) {
                hmat.push(row, j, rng.gen_range(-1.0..1.0));
            }
        }
        row += 1;
    }
    // v <= vbar keeps the dual side bounded without slacks.
    for v in 0..nv {
        w0.push(row, v, -1.0);
        h0.push(-rng.gen_range(2.0..4.0));
        row += 1;
    }
    w0.nrows = row;
    t0.nrows = row;
    hmat.nrows = row;

    let cost: Vec<f64> = (0..n1).map(|_| rng.gen_range(0.5..2.0)).collect();

    TwoStageProblem {
        version: INSTANCE_SCHEMA_VERSION,
        n1,
        first_stage: ConicSet::boxed(n1, 0.0, 1.0),
        cost,
        cost_offset: 0.0,
        m,
        second_stage: SecondStage {
            n2,
            q0,
            qmat: SparseMatrix::new(n2, m),
            w0,
            wj: Vec::new(),
            t0,
            h0,
            hmat,
            cone_y: vec![Cone::nonneg(n2)],
        },
        support: Support::full_cube(m),
        indicator_spec: None,
    }
}

/// Objective-only uncertain instance with a provably ideal mixed-integer
/// description: `W0 = I`, a `{0, +-1}` selector `Q` with one nonzero per
/// row, integer base costs, and the unit box as the support description.
/// Every constraint row then has at most two nonzero +-1 entries of opposite
/// signs, a network matrix, so the continuous relaxation of the reformulated
/// set is integral.
pub fn ideal_objective_instance(seed: u64, m: usize, n1: usize) -> TwoStageProblem {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n2 = m + 1;
    let mut q0: Vec<f64> = (0..n2).map(|_| rng.gen_range(2..6) as f64).collect();
    q0[n2 - 1] = rng.gen_range(4..8) as f64;
    let mut qmat = SparseMatrix::new(n2, m);
    for j in 0..m {
        // One +-1 per column, each row hit at most once.
        qmat.push(j, j, if rng.gen_bool(0.7) { 1.0 } else { -1.0 });
    }
    // W0 = I over the first m components plus a final free-demand row:
    // y_i >= h_i(x) per component.
    let mut w0 = SparseMatrix::new(n2, n2);
    for i in 0..n2 {
        w0.push(i, i, 1.0);
    }
    let mut hmat = SparseMatrix::new(n2, n1);
    let mut h0 = Vec::new();
    for i in 0..n2 {
        h0.push(rng.gen_range(0.0..1.0));
        hmat.push(i, rng.gen_range(0..n1), rng.gen_range(0.2..1.0));
    }

    TwoStageProblem {
        version: INSTANCE_SCHEMA_VERSION,
        n1,
        first_stage: ConicSet::boxed(n1, 0.0, 1.0),
        cost: (0..n1).map(|_| rng.gen_range(0.5..1.5)).collect(),
        cost_offset: 0.0,
        m,
        second_stage: SecondStage {
            n2,
            q0,
            qmat,
            w0,
            wj: Vec::new(),
            t0: SparseMatrix::new(n2, m),
            h0,
            hmat,
            cone_y: vec![Cone::nonneg(n2)],
        },
        support: Support::full_cube(m),
        indicator_spec: None,
    }
}
