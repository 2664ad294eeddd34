//! Fixed-charge multi-commodity network design with node failures. Stage one
//! buys a fraction of each arc's capacity; stage two routes every commodity
//! through the surviving network, penalizing unmet demand, with a failed
//! node removing all incident arcs.

use crate::two_stage::{
    ConicSet, IndicatorRow, IndicatorSpec, SecondStage, Support, TwoStageProblem,
    INSTANCE_SCHEMA_VERSION,
};
use conic::{Cone, SparseMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Commodity {
    pub origin: usize,
    pub destination: usize,
    pub demand: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MmcfInstance {
    pub nodes: usize,
    /// Directed arcs (i, j).
    pub arcs: Vec<(usize, usize)>,
    pub commodities: Vec<Commodity>,
    /// Per-arc maximum capacity.
    pub capacity: Vec<f64>,
    /// Per-arc per-unit cost of installing capacity.
    pub install_cost: Vec<f64>,
    /// Per-arc per-unit flow cost.
    pub flow_cost: Vec<f64>,
    /// Shortfall penalty multiplier: g_k = phi * max flow cost.
    pub phi: f64,
}

impl MmcfInstance {
    pub fn shortfall_penalty(&self) -> f64 {
        self.phi * self.flow_cost.iter().cloned().fold(0.0, f64::max)
    }

    /// Loosely capacitated four-node diamond with two commodities.
    pub fn four_node() -> Self {
        MmcfInstance {
            nodes: 4,
            arcs: vec![(0, 1), (0, 2), (1, 3), (2, 3), (1, 2), (2, 1)],
            commodities: vec![
                Commodity { origin: 0, destination: 3, demand: 10.0 },
                Commodity { origin: 1, destination: 3, demand: 5.0 },
            ],
            capacity: vec![20.0; 6],
            install_cost: vec![2.0, 3.0, 2.0, 3.0, 1.0, 1.0],
            flow_cost: vec![1.0, 2.0, 1.5, 1.0, 0.5, 0.5],
            phi: 1000.0,
        }
    }
}

/// Second-stage layout: |K| * |A| flows (commodity-major), then |K|
/// shortfalls.
pub fn build_mmcf(inst: &MmcfInstance) -> TwoStageProblem {
    let na = inst.arcs.len();
    let nk = inst.commodities.len();
    let nv = inst.nodes;
    let n2 = nk * na + nk;
    let flow = |k: usize, a: usize| k * na + a;
    let short = |k: usize| nk * na + k;
    let g = inst.shortfall_penalty();

    let mut q0 = vec![0.0; n2];
    for k in 0..nk {
        for a in 0..na {
            q0[flow(k, a)] = inst.flow_cost[a];
        }
        q0[short(k)] = g;
    }

    let mut w0 = SparseMatrix::new(0, n2);
    let mut t0 = SparseMatrix::new(0, nv);
    let mut h0: Vec<f64> = Vec::new();
    let mut hmat = SparseMatrix::new(0, na);
    let mut row = 0usize;

    // Flow balance per commodity and node, as equality pairs:
    // out - in (+short at origin, -short at destination) = rhs.
    for (k, com) in inst.commodities.iter().enumerate() {
        for i in 0..nv {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for (a, &(u, v)) in inst.arcs.iter().enumerate() {
                if u == i {
                    terms.push((flow(k, a), 1.0));
                }
                if v == i {
                    terms.push((flow(k, a), -1.0));
                }
            }
            let rhs = if i == com.origin {
                terms.push((short(k), 1.0));
                com.demand
            } else if i == com.destination {
                terms.push((short(k), -1.0));
                -com.demand
            } else {
                0.0
            };
            for sign in [1.0, -1.0] {
                for &(c, v) in &terms {
                    w0.push(row, c, sign * v);
                }
                h0.push(sign * rhs);
                row += 1;
            }
        }
    }
    // Capacity: sum_k y^k_a <= u_a x_a.
    for a in 0..na {
        for k in 0..nk {
            w0.push(row, flow(k, a), -1.0);
        }
        h0.push(0.0);
        hmat.push(row, a, -inst.capacity[a]);
        row += 1;
    }
    // Contingency big-M rows: y^k_a <= d^k (1 - xi_i) for both endpoints.
    for (a, &(u, v)) in inst.arcs.iter().enumerate() {
        for k in 0..nk {
            let d = inst.commodities[k].demand;
            for node in [u, v] {
                w0.push(row, flow(k, a), -1.0);
                t0.push(row, node, d);
                h0.push(-d);
                row += 1;
            }
        }
    }
    w0.nrows = row;
    t0.nrows = row;
    hmat.nrows = row;

    // Indicator route: total flow through a failed node vanishes.
    let rows = (0..nv)
        .map(|node| {
            let coeffs = inst
                .arcs
                .iter()
                .enumerate()
                .filter(|(_, &(u, v))| u == node || v == node)
                .flat_map(|(a, _)| (0..nk).map(move |k| (flow(k, a), 1.0)))
                .collect();
            IndicatorRow { f0: 0.0, coeffs, gate: node, negated: false }
        })
        .collect();

    TwoStageProblem {
        version: INSTANCE_SCHEMA_VERSION,
        n1: na,
        first_stage: ConicSet::boxed(na, 0.0, 1.0),
        cost: inst.install_cost.clone(),
        cost_offset: 0.0,
        m: nv,
        second_stage: SecondStage {
            n2,
            q0,
            qmat: SparseMatrix::new(n2, nv),
            w0,
            wj: Vec::new(),
            t0,
            h0,
            hmat,
            cone_y: vec![Cone::nonneg(n2)],
        },
        support: Support::full_cube(nv),
        indicator_spec: Some(IndicatorSpec { rows }),
    }
}
