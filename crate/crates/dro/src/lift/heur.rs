//! Iterative partial lifting. Start every sample at its continuous
//! relaxation, solve the assembled master, recover each sample's optimal
//! scenario from the relaxation, and lift exactly the indices whose
//! recovered values are fractional beyond a tolerance. Stop on a fixpoint or
//! after `niter` rounds. Partial lifts carry no symmetry rows, so the final
//! value sits between the full level-1 value and the continuous one.

use crate::error::DroError;
use crate::reformulations::{
    relaxed_set, solve_master, MasterOptions, MasterSolution, RelaxationMode, ZSetSpec,
};
use crate::two_stage::TwoStageProblem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartialLiftOptions {
    /// Fractionality threshold in (0, 0.5).
    pub tol: f64,
    pub niter: usize,
}

impl Default for PartialLiftOptions {
    fn default() -> Self {
        PartialLiftOptions { tol: 1e-2, niter: 5 }
    }
}

/// State of the heuristic: lifted index sets grow monotonically across
/// iterations; the recovered scenarios are kept per round.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PartialLiftState {
    pub lifted: Vec<Vec<usize>>,
    pub iterations: usize,
    pub tol: f64,
    pub niter: usize,
    pub recovered: Vec<Vec<Vec<f64>>>,
    pub values: Vec<f64>,
}

pub fn heuristic_partial_lift(
    prob: &TwoStageProblem,
    zspecs: &[ZSetSpec],
    epsilon: f64,
    options: &PartialLiftOptions,
    master_options: &MasterOptions,
) -> Result<(MasterSolution, PartialLiftState), DroError> {
    if !(0.0 < options.tol && options.tol < 0.5) {
        return Err(DroError::Invalid(format!(
            "fractionality tolerance must lie in (0, 0.5), got {}",
            options.tol
        )));
    }
    if options.niter == 0 {
        return Err(DroError::Invalid("niter must be at least 1".into()));
    }
    let n = zspecs.len();
    let mut state = PartialLiftState {
        lifted: vec![Vec::new(); n],
        iterations: 0,
        tol: options.tol,
        niter: options.niter,
        recovered: Vec::new(),
        values: Vec::new(),
    };

    let mut last: Option<MasterSolution> = None;
    for _round in 0..options.niter {
        state.iterations += 1;
        let mode = RelaxationMode::Partial { lifted: state.lifted.clone() };
        let sol = solve_master(prob, zspecs, epsilon, &mode, master_options)?;
        state.values.push(sol.value);

        // Recover each sample's maximizing scenario by re-solving the inner
        // problem over the current relaxation at the incumbent.
        let mut round_recovered = Vec::with_capacity(n);
        let mut grew = false;
        for (i, spec) in zspecs.iter().enumerate() {
            let set = relaxed_set(spec, &mode, i, master_options)?;
            let (gamma, offset) = spec.gamma.at(&sol.x, sol.alpha);
            let (_, z) = set.sup(&gamma, offset)?;
            let xi_bar: Vec<f64> = z[..spec.layout.m].to_vec();
            for (j, &v) in xi_bar.iter().enumerate() {
                if !state.lifted[i].contains(&j) && v >= options.tol && v <= 1.0 - options.tol {
                    state.lifted[i].push(j);
                    grew = true;
                }
            }
            state.lifted[i].sort_unstable();
            round_recovered.push(xi_bar);
        }
        state.recovered.push(round_recovered);
        last = Some(sol);
        if !grew {
            break;
        }
    }
    Ok((last.expect("at least one round"), state))
}
