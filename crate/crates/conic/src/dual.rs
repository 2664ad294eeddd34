//! Conic dualization of the canonical form.
//!
//! For `min c'v + c0 : b - Av in K`, the Lagrangian dual is
//! `max -b'eta + c0 : A'eta = -c, eta in K*`, and strong duality holds on
//! strictly feasible instances. Zero-cone blocks dualize to free multipliers
//! (no membership rows); orthant, second-order, and PSD blocks are self-dual.

use crate::cone::{Cone, ConeKind, DualCone};
use crate::program::{ConicProgram, Sense, SparseMatrix};

/// Build the conic dual. The returned program reports the same optimal value
/// as the input on any strictly feasible instance: the dual of a Minimize
/// program has Maximize sense and vice versa, so `solve` on either side
/// yields matching objectives.
pub fn dualize(program: &ConicProgram) -> ConicProgram {
    match program.sense {
        Sense::Minimize => dualize_min(program),
        // max c'v = -(min -c'v); dual of the min form carries its value, so
        // negate back to recover the original optimum.
        Sense::Maximize => dualize_min(&program.negated()).negated(),
    }
}

fn dualize_min(program: &ConicProgram) -> ConicProgram {
    let m = program.row_count();
    let n = program.var_count;

    // Variables: one multiplier per cone row.
    let at = program.matrix.transpose();

    // Rows: first the n stationarity equalities A'eta + c = 0, then
    // membership rows per non-zero cone block.
    let mut matrix = SparseMatrix::new(0, m);
    let mut rhs: Vec<f64> = Vec::new();
    let mut cones: Vec<Cone> = Vec::new();

    // b' - A'eta in Zero with b' = -c  <=>  A'eta = -c.
    for k in 0..at.vals.len() {
        matrix.push(at.rows[k], at.cols[k], at.vals[k]);
    }
    rhs.extend(program.objective.iter().map(|c| -c));
    cones.push(Cone::zero(n));
    let mut next_row = n;

    let mut offset_in_eta = 0usize;
    for cone in &program.cones {
        let d = cone.slack_dim();
        match cone.dual() {
            DualCone::Free(_) => {}
            DualCone::Cone(dc) => {
                // 0 - (-I) eta_block in K*.
                for i in 0..d {
                    matrix.push(next_row + i, offset_in_eta + i, -1.0);
                    rhs.push(0.0);
                }
                next_row += d;
                cones.push(dc);
            }
        }
        offset_in_eta += d;
    }
    matrix.nrows = rhs.len();

    let names = (0..m).map(|i| format!("eta[{i}]")).collect();
    ConicProgram {
        objective: program.rhs.iter().map(|b| -b).collect(),
        offset: program.offset,
        sense: Sense::Maximize,
        matrix,
        rhs,
        cones,
        var_count: m,
        names: Some(names),
    }
}

#[allow(unused)]
fn _kind_exhaustive(k: ConeKind) {
    match k {
        ConeKind::Zero
        | ConeKind::NonnegativeOrthant
        | ConeKind::SecondOrder
        | ConeKind::PositiveSemidefinite => {}
    }
}
