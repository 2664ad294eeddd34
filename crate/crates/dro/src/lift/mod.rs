//! Lift-and-project outer approximations of the convex hulls.
//!
//! For a mixed-binary conic set with continuous relaxation `S`, the level-1
//! relaxation glues two homogenized copies of `S` per lifted binary and
//! projects back; lifting every index with the cross-moment symmetry rows
//! gives the full level-1 set, adding the moment-matrix block gives its PSD
//! strengthening, and applying the construction to an already-lifted
//! description gives level 2. Values are sandwiched:
//!
//! ```text
//!   v(conv) <= v(psd level-1) <= v(level-1) <= v(continuous)
//! ```
//!
//! and level 1 is exact for a single binary.

mod heur;
mod set;

pub use heur::{heuristic_partial_lift, PartialLiftOptions, PartialLiftState};
pub use set::{lift_set, ExplicitSet, LiftOptions};

use crate::error::DroError;
use crate::reformulations::{MasterOptions, ZSetSpec};

/// Continuous relaxation of a reformulated set: the description itself,
/// binaries relaxed to the unit box.
pub fn continuous_relaxation(spec: &ZSetSpec) -> ExplicitSet {
    spec.set.clone()
}

/// The lifted relaxation of one sample's set over the given indices.
#[derive(Debug, Clone)]
pub struct LiftedRelaxation {
    pub lift_indices: Vec<usize>,
    pub symmetry: bool,
    pub psd: bool,
    pub set: ExplicitSet,
}

pub fn build_lift(
    spec: &ZSetSpec,
    lift_indices: &[usize],
    with_symmetry: bool,
    psd: bool,
) -> Result<LiftedRelaxation, DroError> {
    let binaries = spec.binary_indices();
    let set = lift_set(&spec.set, lift_indices, &binaries, LiftOptions { symmetry: with_symmetry, psd })?;
    Ok(LiftedRelaxation {
        lift_indices: lift_indices.to_vec(),
        symmetry: with_symmetry,
        psd,
        set,
    })
}

/// Value of `sup gamma(x, alpha)' z` over the level-t relaxation,
/// `t in {1, 2}`; level 2 is size-guarded.
pub fn level_t_value(
    spec: &ZSetSpec,
    t: usize,
    x: &[f64],
    alpha: f64,
    options: &MasterOptions,
) -> Result<f64, DroError> {
    let binaries = spec.binary_indices();
    let opts = LiftOptions { symmetry: true, psd: false };
    let set = match t {
        1 => lift_set(&spec.set, &binaries, &binaries, opts)?,
        2 => {
            let level1 = lift_set(&spec.set, &binaries, &binaries, opts)?;
            let projected_vars = level1.total_vars() * 2 * binaries.len();
            if projected_vars > options.size_cap {
                return Err(DroError::SizeCapExceeded { vars: projected_vars, cap: options.size_cap });
            }
            lift_set(&level1, &binaries, &binaries, opts)?
        }
        _ => return Err(DroError::Invalid(format!("level-{t} relaxations are not built"))),
    };
    let (gamma, offset) = spec.gamma.at(x, alpha);
    Ok(set.sup(&gamma, offset)?.0)
}
