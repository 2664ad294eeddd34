//! Branch-and-bound maximization over mixed-binary conic sets.
//!
//! Binary variables are relaxed to [0, 1] (the base program must carry those
//! orthant rows); nodes fix binaries via zero-cone rows and are explored in
//! best-bound order with most-fractional branching, so runs are deterministic
//! for identical inputs and options.

use crate::program::{ConicProgram, Sense};
use crate::solve::{BackendError, ClarabelBackend, ConicBackend, SolveOptions, SolveStatus};
use crate::{Cone, LinExpr, VarId};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Tolerance for declaring a relaxation value binary-feasible.
const INTEGRALITY_TOL: f64 = 1e-6;

/// A conic program whose listed variables are additionally constrained to
/// {0, 1}. The base program records the maximization sense; binaries must
/// have [0, 1] orthant rows in the relaxation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixedBinaryConicProgram {
    pub base: ConicProgram,
    pub binary_indices: Vec<usize>,
    /// Markers for rows that become linear once the named binary is fixed.
    /// Informational only: subproblems built here always use penalty or
    /// pre-linearized representations, so the tree never interprets these.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bilinear_links: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BbStatus {
    Optimal,
    CutoffReached,
    NodeLimit,
}

/// Result of a branch-and-bound run. `best_value <= bound + bb_tol`, and
/// `Optimal` means the gap closed within `bb_tol * (1 + |best_value|)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BbResult {
    pub best_value: f64,
    pub incumbent: Vec<f64>,
    pub bound: f64,
    pub nodes: u64,
    pub status: BbStatus,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BbOptions {
    pub bb_tol: f64,
    pub node_limit: u64,
    /// Early-stop threshold: return as soon as an incumbent exceeds it, or
    /// once the global bound proves no point does.
    pub cutoff: Option<f64>,
}

impl Default for BbOptions {
    fn default() -> Self {
        BbOptions { bb_tol: 1e-8, node_limit: 200_000, cutoff: None }
    }
}

#[derive(Debug, Error)]
pub enum BbError {
    #[error("mixed-binary program must carry Maximize sense")]
    NotMaximization,
    #[error("binary index {0} out of variable range")]
    BadBinaryIndex(usize),
    #[error("relaxation infeasible")]
    Infeasible,
    #[error("continuous relaxation unbounded above")]
    UnboundedRelaxation,
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error("relaxation solve hit a numerical limit")]
    Numerical,
}

struct Node {
    id: u64,
    bound: f64,
    fixings: Vec<(usize, bool)>,
    relax_primal: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Best bound first; older node on ties for determinism.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Maximize the base objective over the mixed-binary feasible set.
pub fn solve_micp(
    problem: &MixedBinaryConicProgram,
    options: &BbOptions,
) -> Result<BbResult, BbError> {
    solve_micp_with(problem, options, &ClarabelBackend, &SolveOptions::default())
}

pub fn solve_micp_with(
    problem: &MixedBinaryConicProgram,
    options: &BbOptions,
    backend: &dyn ConicBackend,
    solve_options: &SolveOptions,
) -> Result<BbResult, BbError> {
    if problem.base.sense != Sense::Maximize {
        return Err(BbError::NotMaximization);
    }
    for &j in &problem.binary_indices {
        if j >= problem.base.var_count {
            return Err(BbError::BadBinaryIndex(j));
        }
    }

    let mut nodes_processed: u64 = 0;
    let mut next_id: u64 = 0;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut best: Option<(f64, Vec<f64>)> = None;

    let root = solve_node(problem, &[], backend, solve_options)?;
    match root {
        NodeOutcome::Pruned => return Err(BbError::Infeasible),
        NodeOutcome::Open { bound, primal } => {
            heap.push(Node { id: next_id, bound, fixings: Vec::new(), relax_primal: primal });
            next_id += 1;
        }
    }

    let finish = |status: BbStatus, best: Option<(f64, Vec<f64>)>, bound: f64, nodes: u64| {
        let (best_value, incumbent) = best.unwrap_or((f64::NEG_INFINITY, Vec::new()));
        BbResult { best_value, incumbent, bound: bound.max(best_value), nodes, status }
    };

    while let Some(node) = heap.pop() {
        let global_bound = node.bound;
        let tol = |v: f64| options.bb_tol * (1.0 + v.abs());

        let best_value = best.as_ref().map(|(bv, _)| *bv);
        if let Some(bv) = best_value {
            if global_bound <= bv + tol(bv) {
                return Ok(finish(BbStatus::Optimal, best, bv, nodes_processed));
            }
        }
        if let Some(sigma) = options.cutoff {
            if global_bound <= sigma {
                return Ok(finish(BbStatus::CutoffReached, best, global_bound, nodes_processed));
            }
        }
        if nodes_processed >= options.node_limit {
            return Ok(finish(BbStatus::NodeLimit, best, global_bound, nodes_processed));
        }
        nodes_processed += 1;

        match most_fractional(&node.relax_primal, &problem.binary_indices, &node.fixings) {
            None => {
                // Binary-feasible relaxation optimum: incumbent candidate.
                let rounded = round_binaries(&node.relax_primal, &problem.binary_indices);
                let value = node.bound;
                let improved = best.as_ref().map_or(true, |(bv, _)| value > *bv);
                if improved {
                    best = Some((value, rounded));
                    if let Some(sigma) = options.cutoff {
                        if value > sigma {
                            let rem = heap.peek().map_or(value, |n| n.bound.max(value));
                            return Ok(finish(
                                BbStatus::CutoffReached,
                                best,
                                rem,
                                nodes_processed,
                            ));
                        }
                    }
                }
            }
            Some(j) => {
                for fix_to in [false, true] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, fix_to));
                    match solve_node(problem, &fixings, backend, solve_options)? {
                        NodeOutcome::Pruned => {}
                        NodeOutcome::Open { bound, primal } => {
                            let dominated = best
                                .as_ref()
                                .map_or(false, |(bv, _)| bound <= *bv + tol(*bv));
                            if !dominated {
                                heap.push(Node { id: next_id, bound, fixings, relax_primal: primal });
                                next_id += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    let bound = best.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| *v);
    if best.is_none() {
        return Err(BbError::Infeasible);
    }
    Ok(finish(BbStatus::Optimal, best, bound, nodes_processed))
}

enum NodeOutcome {
    Pruned,
    Open { bound: f64, primal: Vec<f64> },
}

fn solve_node(
    problem: &MixedBinaryConicProgram,
    fixings: &[(usize, bool)],
    backend: &dyn ConicBackend,
    solve_options: &SolveOptions,
) -> Result<NodeOutcome, BbError> {
    let program = restrict(&problem.base, fixings);
    let res = backend.solve(&program, solve_options)?;
    match res.status {
        SolveStatus::Optimal => Ok(NodeOutcome::Open { bound: res.objective, primal: res.primal }),
        SolveStatus::Infeasible => Ok(NodeOutcome::Pruned),
        SolveStatus::Unbounded => Err(BbError::UnboundedRelaxation),
        SolveStatus::NumericalLimit => Err(BbError::Numerical),
    }
}

/// Base program with the given binaries pinned by zero-cone rows.
fn restrict(base: &ConicProgram, fixings: &[(usize, bool)]) -> ConicProgram {
    if fixings.is_empty() {
        return base.clone();
    }
    let mut p = base.clone();
    let row0 = p.matrix.nrows;
    for (i, &(j, v)) in fixings.iter().enumerate() {
        p.matrix.push(row0 + i, j, 1.0);
        p.rhs.push(if v { 1.0 } else { 0.0 });
    }
    p.matrix.nrows += fixings.len();
    p.cones.push(Cone::zero(fixings.len()));
    p
}

fn most_fractional(
    primal: &[f64],
    binaries: &[usize],
    fixings: &[(usize, bool)],
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &j in binaries {
        if fixings.iter().any(|&(fj, _)| fj == j) {
            continue;
        }
        let v = primal[j];
        let frac = v.min(1.0 - v).max(0.0);
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        let better = match best {
            None => true,
            Some((bf, bj)) => frac > bf || (frac == bf && j < bj),
        };
        if better {
            best = Some((frac, j));
        }
    }
    best.map(|(_, j)| j)
}

fn round_binaries(primal: &[f64], binaries: &[usize]) -> Vec<f64> {
    let mut out = primal.to_vec();
    for &j in binaries {
        out[j] = out[j].round();
    }
    out
}

/// Convenience for building the [0, 1] box rows binaries need in the base
/// relaxation.
pub fn push_unit_box(builder: &mut crate::ProgramBuilder, vars: &[VarId]) {
    for &v in vars {
        builder.nonneg(LinExpr::var(v));
        builder.leq(LinExpr::var(v), LinExpr::constant(1.0));
    }
}
