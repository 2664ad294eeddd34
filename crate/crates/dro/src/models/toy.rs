//! The seven-node illustrative network: two supply nodes, three
//! failure-prone middle nodes, two demand nodes. Arc capacities are bought in
//! stage one; stage two routes flow and pays a shortfall penalty per unit of
//! unmet demand. A middle-node failure removes every incident arc.
//!
//! Failure switching is carried both ways: big-M rows through `T0` (valid
//! because no useful flow exceeds the demand scale) and indicator rows that
//! pin the total flow through a failed node to zero. Either encoding alone is
//! exact, which is what the reformulation tests rely on.

use crate::two_stage::{
    BinaryPoint, ConicSet, IndicatorRow, IndicatorSpec, SecondStage, Support, TwoStageProblem,
    INSTANCE_SCHEMA_VERSION,
};
use conic::{Cone, SparseMatrix};
use serde::{Deserialize, Serialize};

/// Arcs in fixed order; `OUTER` carry unit cost, `MIDDLE` cost `1 - epsilon`.
///
/// ```text
///   s1 -> m1   s1 -> m2   s2 -> m2   s2 -> m3
///   m1 -> d1   m2 -> d1   m2 -> d2   m3 -> d2
/// ```
pub const ARCS: usize = 8;
pub const OUTER: [usize; 4] = [0, 3, 4, 7];
pub const MIDDLE: [usize; 4] = [1, 2, 5, 6];

/// Arcs incident to each middle node.
pub const INCIDENT: [&[usize]; 3] = [&[0, 4], &[1, 2, 5, 6], &[3, 7]];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyNetworkInstance {
    pub supplies: [f64; 2],
    pub demands: [f64; 2],
    /// Cost discount on the middle arcs; solutions are stable for any value
    /// in (0, 0.01].
    pub epsilon: f64,
    pub shortfall_penalty: f64,
    pub failure_probs: [f64; 3],
    /// Upper bound closing the first-stage box; anything at or above the
    /// demand scale is equivalent.
    pub capacity_cap: f64,
}

impl Default for ToyNetworkInstance {
    fn default() -> Self {
        ToyNetworkInstance {
            supplies: [100.0, 100.0],
            demands: [100.0, 100.0],
            epsilon: 1e-3,
            shortfall_penalty: 1000.0,
            failure_probs: [0.0025, 0.01, 0.0025],
            capacity_cap: 200.0,
        }
    }
}

/// Second-stage variable layout: 8 arc flows then 2 demand shortfalls.
const N2: usize = ARCS + 2;
const FLOW_BOUND: f64 = 100.0;

pub fn build_toy(inst: &ToyNetworkInstance) -> TwoStageProblem {
    let m = 3usize;
    let e = inst.epsilon;
    let q = inst.shortfall_penalty;

    let mut cost = vec![0.0; ARCS];
    for a in OUTER {
        cost[a] = 1.0;
    }
    for a in MIDDLE {
        cost[a] = 1.0 - e;
    }

    let mut q0 = vec![0.0; N2];
    q0[ARCS] = q;
    q0[ARCS + 1] = q;

    let mut w0 = SparseMatrix::new(0, N2);
    let mut t0 = SparseMatrix::new(0, m);
    let mut h0: Vec<f64> = Vec::new();
    let mut hmat = SparseMatrix::new(0, ARCS);
    let mut row = 0usize;
    let mut push_row = |w0: &mut SparseMatrix| {
        let r = row;
        row += 1;
        w0.nrows = row;
        r
    };

    // Arc capacity: -f_a >= -x_a, i.e. f_a <= x_a.
    for a in 0..ARCS {
        let r = push_row(&mut w0);
        w0.push(r, a, -1.0);
        h0.push(0.0);
        hmat.push(r, a, -1.0);
    }
    // Supply limits: -(f0 + f1) >= -s1 ; -(f2 + f3) >= -s2.
    let r = push_row(&mut w0);
    w0.push(r, 0, -1.0);
    w0.push(r, 1, -1.0);
    h0.push(-inst.supplies[0]);
    let r = push_row(&mut w0);
    w0.push(r, 2, -1.0);
    w0.push(r, 3, -1.0);
    h0.push(-inst.supplies[1]);
    // Middle-node conservation: inflow - outflow >= 0 (excess may be sunk,
    // never created).
    let mid_in: [&[usize]; 3] = [&[0], &[1, 2], &[3]];
    let mid_out: [&[usize]; 3] = [&[4], &[5, 6], &[7]];
    for j in 0..3 {
        let r = push_row(&mut w0);
        for &a in mid_in[j] {
            w0.push(r, a, 1.0);
        }
        for &a in mid_out[j] {
            w0.push(r, a, -1.0);
        }
        h0.push(0.0);
    }
    // Demand with shortfall slack: inflow + short >= demand.
    let dem_in: [&[usize]; 2] = [&[4, 5], &[6, 7]];
    for d in 0..2 {
        let r = push_row(&mut w0);
        for &a in dem_in[d] {
            w0.push(r, a, 1.0);
        }
        w0.push(r, ARCS + d, 1.0);
        h0.push(inst.demands[d]);
    }
    // Failure rows (T0 route): f_a <= FLOW_BOUND (1 - xi_j) for every arc
    // incident to middle node j, written as -f_a >= B xi_j - B.
    for (j, arcs) in INCIDENT.iter().enumerate() {
        for &a in *arcs {
            let r = push_row(&mut w0);
            w0.push(r, a, -1.0);
            t0.push(r, j, FLOW_BOUND);
            h0.push(-FLOW_BOUND);
        }
    }
    let l = h0.len();
    w0.nrows = l;
    t0.nrows = l;
    hmat.nrows = l;

    // Indicator route: total flow through a failed middle node is zero.
    let rows = (0..3)
        .map(|j| IndicatorRow {
            f0: 0.0,
            coeffs: INCIDENT[j].iter().map(|&a| (a, 1.0)).collect(),
            gate: j,
            negated: false,
        })
        .collect();

    TwoStageProblem {
        version: INSTANCE_SCHEMA_VERSION,
        n1: ARCS,
        first_stage: ConicSet::boxed(ARCS, 0.0, inst.capacity_cap),
        cost,
        cost_offset: 0.0,
        m,
        second_stage: SecondStage {
            n2: N2,
            q0,
            qmat: SparseMatrix::new(N2, m),
            w0,
            wj: Vec::new(),
            t0,
            h0,
            hmat,
            cone_y: vec![Cone::nonneg(N2)],
        },
        support: Support::full_cube(m),
        indicator_spec: Some(IndicatorSpec { rows }),
    }
}

/// Capacity vector following the symmetric optimal structure: `x1` on the
/// four outer arcs, `x2` on the four middle arcs.
pub fn pattern(x1: f64, x2: f64) -> Vec<f64> {
    let mut x = vec![0.0; ARCS];
    for a in OUTER {
        x[a] = x1;
    }
    for a in MIDDLE {
        x[a] = x2;
    }
    x
}

/// Mean outer and middle capacities of an arbitrary capacity vector.
pub fn pattern_of(x: &[f64]) -> (f64, f64) {
    let x1 = OUTER.iter().map(|&a| x[a]).sum::<f64>() / 4.0;
    let x2 = MIDDLE.iter().map(|&a| x[a]).sum::<f64>() / 4.0;
    (x1, x2)
}

/// All eight failure scenarios with their product probabilities.
pub fn true_distribution(inst: &ToyNetworkInstance) -> Vec<(BinaryPoint, f64)> {
    let p = inst.failure_probs;
    (0u8..8)
        .map(|mask| {
            let xi: BinaryPoint = (0..3).map(|j| (mask >> j) & 1).collect();
            let prob = (0..3)
                .map(|j| if xi[j] == 1 { p[j] } else { 1.0 - p[j] })
                .product();
            (xi, prob)
        })
        .collect()
}

/// Closed-form loss table for capacity patterns with `x1, x2 <= 100`,
/// used as an oracle against the LP evaluation.
pub fn table_loss(inst: &ToyNetworkInstance, x1: f64, x2: f64, xi: &[u8]) -> f64 {
    let q = inst.shortfall_penalty;
    let pos = |v: f64| v.max(0.0);
    match (xi[0], xi[1], xi[2]) {
        (0, 0, 0) => 2.0 * pos(100.0 - x1 - x2) * q,
        (0, 1, 0) => 2.0 * pos(100.0 - x1) * q,
        (1, 0, 0) | (0, 0, 1) => (100.0 - x2 + pos(100.0 - x1 - x2)) * q,
        (1, 1, 0) | (0, 1, 1) => (100.0 + pos(100.0 - x1)) * q,
        (1, 0, 1) => 2.0 * pos(100.0 - x2) * q,
        (1, 1, 1) => 200.0 * q,
        _ => unreachable!(),
    }
}
