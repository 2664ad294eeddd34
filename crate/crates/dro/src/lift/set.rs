//! Explicit conic outer descriptions and the lift-and-project combinator.
//!
//! A relaxation is held as
//!
//! ```text
//!   S = { z >= 0 : exists w :  M1 z + M2 w + m0 u  in  K }
//! ```
//!
//! with `u = 1` at the top level. Keeping the constant column `m0` explicit
//! makes homogenization trivial: `S(u)` just scales that column by `u`, so
//! the level-1 lifting of any such set (including an already-lifted one) is a
//! purely mechanical construction, and level-t relaxations are the
//! combinator iterated.

use crate::error::DroError;
use conic::{Cone, ConeKind, ConicProgram, LinExpr, ProgramBuilder, Sense, SparseMatrix, VarId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplicitSet {
    /// Projected dimension (the z the objective sees).
    pub n_z: usize,
    /// Witness dimension (existential variables of the description).
    pub n_w: usize,
    pub m1: SparseMatrix,
    pub m2: SparseMatrix,
    pub m0: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ExplicitSet {
    pub fn new(n_z: usize) -> Self {
        ExplicitSet {
            n_z,
            n_w: 0,
            m1: SparseMatrix::new(0, n_z),
            m2: SparseMatrix::new(0, 0),
            m0: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.m0.len()
    }

    /// Append a cone block of rows given as (z-coeffs, w-coeffs, constant).
    pub fn push_block(
        &mut self,
        rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, f64)>,
        cone: Cone,
    ) {
        debug_assert_eq!(rows.len(), cone.slack_dim());
        let base = self.m0.len();
        for (i, (zc, wc, c)) in rows.into_iter().enumerate() {
            for (j, v) in zc {
                self.m1.push(base + i, j, v);
            }
            for (j, v) in wc {
                self.m2.push(base + i, j, v);
            }
            self.m0.push(c);
        }
        self.m1.nrows = self.m0.len();
        self.m2.nrows = self.m0.len();
        self.cones.push(cone);
    }

    fn grow_witnesses(&mut self, extra: usize) -> usize {
        let at = self.n_w;
        self.n_w += extra;
        self.m2.ncols = self.n_w;
        at
    }

    /// Membership of an explicit (z, w) pair; for witness-free sets pass an
    /// empty witness slice.
    pub fn contains(&self, z: &[f64], w: &[f64], tol: f64) -> bool {
        if z.iter().any(|&v| v < -tol) {
            return false;
        }
        let mut slack = self.m1.mul_vec(z);
        let sw = self.m2.mul_vec(w);
        for (s, (a, b)) in slack.iter_mut().zip(sw.iter().zip(&self.m0)) {
            *s += a + b;
        }
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

    /// Total variable count of the explicit description.
    pub fn total_vars(&self) -> usize {
        self.n_z + self.n_w
    }

    /// Maximize a linear objective over the set as a conic program. The
    /// projected variables come first, witnesses after.
    pub fn maximize_program(&self, objective: &[f64], offset: f64) -> ConicProgram {
        let mut b = ProgramBuilder::maximize();
        let z_vars = b.add_vars("z", self.n_z, 0.0);
        let w_vars = b.add_vars("w", self.n_w, 0.0);
        for (j, &c) in objective.iter().enumerate() {
            b.set_objective(z_vars[j], c);
        }
        b.add_offset(offset);
        self.append_rows(&mut b, &z_vars, &w_vars);
        b.build()
    }

    pub fn append_rows(&self, b: &mut ProgramBuilder, z_vars: &[VarId], w_vars: &[VarId]) {
        for &v in z_vars {
            b.nonneg(LinExpr::var(v));
        }
        let mut rows: Vec<LinExpr> = self.m0.iter().map(|&c| LinExpr::constant(c)).collect();
        for k in 0..self.m1.vals.len() {
            rows[self.m1.rows[k]].add_term(z_vars[self.m1.cols[k]], self.m1.vals[k]);
        }
        for k in 0..self.m2.vals.len() {
            rows[self.m2.rows[k]].add_term(w_vars[self.m2.cols[k]], self.m2.vals[k]);
        }
        let mut it = rows.into_iter();
        for cone in &self.cones {
            let block: Vec<LinExpr> = (&mut it).take(cone.slack_dim()).collect();
            b.add_block(block, *cone);
        }
    }

    /// Solve `sup { gamma' z : z in S }`; also returns the optimal z.
    pub fn sup(&self, gamma: &[f64], offset: f64) -> Result<(f64, Vec<f64>), DroError> {
        let program = self.maximize_program(gamma, offset);
        let res = crate::two_stage::require_optimal(conic::solve(&program)?)?;
        debug_assert_eq!(program.sense, Sense::Maximize);
        Ok((res.objective, res.primal[..self.n_z].to_vec()))
    }
}

/// Options of the lift construction.
#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    /// Tie the cross moments: `z^{j1}_k = z^{k1}_j` for lifted pairs. Only
    /// meaningful when every binary index is lifted.
    pub symmetry: bool,
    /// Add the moment-matrix PSD block (needs symmetry and a full lift).
    pub psd: bool,
}

/// Level-1 lift-and-project of an explicit set over the binary indices in
/// `lift_indices` (indices into z). For each lifted j the set gains two
/// homogenized copies `z^{j0} in S(u^{j0})`, `z^{j1} in S(u^{j1})` with
/// `u^{j0} + u^{j1} = 1`, glued by `z = z^{j0} + z^{j1}`, `z^{j0}_j = 0`,
/// `z^{j1}_j = u^{j1}`. Lifting every index with symmetry reproduces the full
/// level-1 set; an empty index list returns the input unchanged.
pub fn lift_set(
    base: &ExplicitSet,
    lift_indices: &[usize],
    binaries: &[usize],
    opts: LiftOptions,
) -> Result<ExplicitSet, DroError> {
    if lift_indices.is_empty() && !opts.psd {
        return Ok(base.clone());
    }
    let full = lift_indices.len() == binaries.len();
    if opts.psd && !(full && opts.symmetry) {
        return Err(DroError::CapabilityMismatch("psd strengthening needs a full symmetric lift"));
    }

    let n_z = base.n_z;
    let mut out = ExplicitSet::new(n_z);
    // Witness layout per lifted j: [z^{j0} (n_z), z^{j1} (n_z), u^{j0}, u^{j1},
    // w^{j0} (n_w), w^{j1} (n_w)].
    let stride = 2 * n_z + 2 + 2 * base.n_w;
    let total_w = lift_indices.len() * stride;
    out.grow_witnesses(total_w);

    let zl = |slot: usize, ell: usize, k: usize| slot * stride + ell * n_z + k;
    let ul = |slot: usize, ell: usize| slot * stride + 2 * n_z + ell;
    let wl = |slot: usize, ell: usize, k: usize| slot * stride + 2 * n_z + 2 + ell * base.n_w + k;

    for (slot, &_j) in lift_indices.iter().enumerate() {
        for ell in 0..2 {
            // Copy of the base description, homogenized by u^{j ell}.
            let mut rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, f64)> =
                (0..base.rows()).map(|_| (Vec::new(), Vec::new(), 0.0)).collect();
            for k in 0..base.m1.vals.len() {
                rows[base.m1.rows[k]]
                    .1
                    .push((zl(slot, ell, base.m1.cols[k]), base.m1.vals[k]));
            }
            for k in 0..base.m2.vals.len() {
                rows[base.m2.rows[k]]
                    .1
                    .push((wl(slot, ell, base.m2.cols[k]), base.m2.vals[k]));
            }
            for (r, &c) in base.m0.iter().enumerate() {
                if c != 0.0 {
                    rows[r].1.push((ul(slot, ell), c));
                }
            }
            let mut it = rows.into_iter();
            for cone in &base.cones {
                let block: Vec<_> = (&mut it).take(cone.slack_dim()).collect();
                out.push_block(block, *cone);
            }
            // z^{j ell} >= 0 and u^{j ell} >= 0.
            let nn: Vec<_> =
                (0..n_z).map(|k| (Vec::new(), vec![(zl(slot, ell, k), 1.0)], 0.0)).collect();
            out.push_block(nn, Cone::nonneg(n_z));
            out.push_block(vec![(Vec::new(), vec![(ul(slot, ell), 1.0)], 0.0)], Cone::nonneg(1));
        }
    }

    for (slot, &j) in lift_indices.iter().enumerate() {
        // u^{j0} + u^{j1} = u (the outer homogenization).
        out.push_block(
            vec![(
                Vec::new(),
                vec![(ul(slot, 0), 1.0), (ul(slot, 1), 1.0)],
                -1.0,
            )],
            Cone::zero(1),
        );
        // z = z^{j0} + z^{j1}.
        let glue: Vec<_> = (0..n_z)
            .map(|k| {
                (
                    vec![(k, 1.0)],
                    vec![(zl(slot, 0, k), -1.0), (zl(slot, 1, k), -1.0)],
                    0.0,
                )
            })
            .collect();
        out.push_block(glue, Cone::zero(n_z));
        // z^{j0}_j = 0 ; z^{j1}_j = u^{j1}.
        out.push_block(vec![(Vec::new(), vec![(zl(slot, 0, j), 1.0)], 0.0)], Cone::zero(1));
        out.push_block(
            vec![(Vec::new(), vec![(zl(slot, 1, j), 1.0), (ul(slot, 1), -1.0)], 0.0)],
            Cone::zero(1),
        );
    }

    if opts.symmetry && full {
        for (sj, &j) in lift_indices.iter().enumerate() {
            for (sk, &k) in lift_indices.iter().enumerate() {
                if k > j {
                    out.push_block(
                        vec![(
                            Vec::new(),
                            vec![(zl(sj, 1, k), 1.0), (zl(sk, 1, j), -1.0)],
                            0.0,
                        )],
                        Cone::zero(1),
                    );
                }
            }
        }
    }

    if opts.psd {
        // Moment matrix [[u, xi'], [xi, X]] with X_{kj} = z^{j1}_k, in svec
        // (column-major upper triangle, off-diagonals scaled by sqrt 2).
        let mm = binaries.len();
        let side = mm + 1;
        let s2 = 2.0_f64.sqrt();
        let mut rows: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>, f64)> = Vec::new();
        for col in 0..side {
            for row in 0..=col {
                let scale = if row == col { 1.0 } else { s2 };
                if row == 0 && col == 0 {
                    rows.push((Vec::new(), Vec::new(), scale));
                } else if row == 0 {
                    let j = binaries[col - 1];
                    rows.push((vec![(j, scale)], Vec::new(), 0.0));
                } else {
                    // entry (row, col) = X_{row-1, col-1} = z^{(col-1) 1}_{row-1}
                    let slot = col - 1;
                    let k = binaries[row - 1];
                    rows.push((Vec::new(), vec![(zl(slot, 1, k), scale)], 0.0));
                }
            }
        }
        out.push_block(rows, Cone::psd(side));
    }

    Ok(out)
}

#[allow(unused)]
fn _kind(k: ConeKind) {}
