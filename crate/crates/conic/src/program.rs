use crate::cone::{product_dim, Cone};
use crate::expr::{LinExpr, VarId};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Objective sense. The canonical orientation is minimization; `dualize`
/// produces maximization programs so that primal and dual report the same
/// optimal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

/// Sparse matrix in triplet form, rows indexing cone slacks.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, ..Default::default() }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.rows.push(row);
            self.cols.push(col);
            self.vals.push(val);
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column-compressed copy with duplicate entries summed.
    pub fn to_csc(&self) -> clarabel::algebra::CscMatrix<f64> {
        let mut order: Vec<usize> = (0..self.vals.len()).collect();
        order.sort_by_key(|&k| (self.cols[k], self.rows[k]));
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut rowval: Vec<usize> = Vec::with_capacity(self.vals.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(self.vals.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c, v) = (self.rows[k], self.cols[k], self.vals[k]);
            if last == Some((c, r)) {
                *nzval.last_mut().unwrap() += v;
            } else {
                rowval.push(r);
                nzval.push(v);
                colptr[c + 1] += 1;
                last = Some((c, r));
            }
        }
        for c in 0..self.ncols {
            colptr[c + 1] += colptr[c];
        }
        clarabel::algebra::CscMatrix::new(self.nrows, self.ncols, colptr, rowval, nzval)
    }

    /// `y = A x` for a dense vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for k in 0..self.vals.len() {
            y[self.rows[k]] += self.vals[k] * x[self.cols[k]];
        }
        y
    }

    /// `y = A^T x` for a dense vector.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for k in 0..self.vals.len() {
            y[self.cols[k]] += self.vals[k] * x[self.rows[k]];
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            vals: self.vals.clone(),
        }
    }
}

/// A conic program in the canonical form
///
/// ```text
///    minimize   c' v + c0        (or maximize, per `sense`)
///    subject to b - A v in K
/// ```
///
/// where `K` is the ordered product of `cones` and variable bounds are
/// encoded as orthant rows. Immutable after construction; safe to share
/// across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProgram {
    pub objective: Vec<f64>,
    pub offset: f64,
    #[serde(default)]
    pub sense: Sense,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
    pub var_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

/// A structural defect found by [`ConicProgram::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    DimensionMismatch { cone_rows: usize, matrix_rows: usize, rhs_len: usize },
    ObjectiveLength { expected: usize, got: usize },
    EntryOutOfRange { row: usize, col: usize },
    NonFiniteCoefficient { location: &'static str, index: usize },
    EmptyCone { index: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DimensionMismatch { cone_rows, matrix_rows, rhs_len } => write!(
                f,
                "dimension mismatch: cones sum to {cone_rows} rows, matrix has {matrix_rows}, rhs has {rhs_len}"
            ),
            ValidationIssue::ObjectiveLength { expected, got } => {
                write!(f, "objective length {got} does not match var_count {expected}")
            }
            ValidationIssue::EntryOutOfRange { row, col } => {
                write!(f, "matrix entry ({row}, {col}) out of range")
            }
            ValidationIssue::NonFiniteCoefficient { location, index } => {
                write!(f, "non-finite coefficient in {location} at index {index}")
            }
            ValidationIssue::EmptyCone { index } => write!(f, "cone {index} has dimension 0"),
        }
    }
}

impl ConicProgram {
    /// Total slack dimension of the cone product.
    pub fn row_count(&self) -> usize {
        product_dim(&self.cones)
    }

    /// Structural diagnostics; an empty list means the program is well formed.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let cone_rows = self.row_count();
        if cone_rows != self.matrix.nrows || cone_rows != self.rhs.len() {
            issues.push(ValidationIssue::DimensionMismatch {
                cone_rows,
                matrix_rows: self.matrix.nrows,
                rhs_len: self.rhs.len(),
            });
        }
        if self.objective.len() != self.var_count || self.matrix.ncols != self.var_count {
            issues.push(ValidationIssue::ObjectiveLength {
                expected: self.var_count,
                got: self.objective.len(),
            });
        }
        for (i, c) in self.cones.iter().enumerate() {
            if c.dim == 0 {
                issues.push(ValidationIssue::EmptyCone { index: i });
            }
        }
        for k in 0..self.matrix.vals.len() {
            if self.matrix.rows[k] >= self.matrix.nrows || self.matrix.cols[k] >= self.matrix.ncols
            {
                issues.push(ValidationIssue::EntryOutOfRange {
                    row: self.matrix.rows[k],
                    col: self.matrix.cols[k],
                });
                break;
            }
        }
        if let Some(k) = self.matrix.vals.iter().position(|v| !v.is_finite()) {
            issues.push(ValidationIssue::NonFiniteCoefficient { location: "matrix", index: k });
        }
        if let Some(k) = self.rhs.iter().position(|v| !v.is_finite()) {
            issues.push(ValidationIssue::NonFiniteCoefficient { location: "rhs", index: k });
        }
        if let Some(k) = self.objective.iter().position(|v| !v.is_finite()) {
            issues.push(ValidationIssue::NonFiniteCoefficient { location: "objective", index: k });
        }
        if !self.offset.is_finite() {
            issues.push(ValidationIssue::NonFiniteCoefficient { location: "offset", index: 0 });
        }
        issues
    }

    /// Slack vector `b - A v` at a candidate point.
    pub fn slack_at(&self, v: &[f64]) -> Vec<f64> {
        let av = self.matrix.mul_vec(v);
        self.rhs.iter().zip(av).map(|(b, a)| b - a).collect()
    }

    /// Worst cone-membership residual of `b - A v` over all cone blocks.
    pub fn feasibility_residual(&self, v: &[f64]) -> f64 {
        let slack = self.slack_at(v);
        let mut worst = f64::MIN;
        let mut at = 0;
        for cone in &self.cones {
            let d = cone.slack_dim();
            worst = worst.max(cone.membership_residual(&slack[at..at + d]));
            at += d;
        }
        worst
    }

    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(v).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Same feasible set, negated objective and flipped sense. The optimal
    /// value changes sign.
    pub fn negated(&self) -> ConicProgram {
        let mut p = self.clone();
        p.objective.iter_mut().for_each(|c| *c = -*c);
        p.offset = -p.offset;
        p.sense = match p.sense {
            Sense::Minimize => Sense::Maximize,
            Sense::Maximize => Sense::Minimize,
        };
        p
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("conic program serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Incremental builder. Rows are appended block-by-block; each block owns a
/// cone factor in order, so the assembled matrix matches the cone product.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    objective: Vec<f64>,
    offset: f64,
    sense: Sense,
    names: Vec<String>,
    rows: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    cones: Vec<Cone>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn minimize() -> Self {
        Self::default()
    }

    pub fn maximize() -> Self {
        ProgramBuilder { sense: Sense::Maximize, ..Default::default() }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    /// Number of slack rows appended so far; lets callers record the row
    /// index of a constraint they will read a multiplier from.
    pub fn rows_so_far(&self) -> usize {
        self.rhs.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, obj_coeff: f64) -> VarId {
        self.objective.push(obj_coeff);
        self.names.push(name.into());
        VarId(self.objective.len() - 1)
    }

    pub fn add_vars(&mut self, prefix: &str, n: usize, obj_coeff: f64) -> Vec<VarId> {
        (0..n).map(|i| self.add_var(format!("{prefix}[{i}]"), obj_coeff)).collect()
    }

    pub fn set_objective(&mut self, v: VarId, coeff: f64) {
        self.objective[v.0] = coeff;
    }

    pub fn add_objective(&mut self, v: VarId, coeff: f64) {
        self.objective[v.0] += coeff;
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    /// Append a cone block whose slack equals the given expressions:
    /// `(expr_1, ..., expr_d) in cone`. Encoded as `b - A v` with
    /// `b = constants`, `A = -coefficients`.
    pub fn add_block(&mut self, exprs: Vec<LinExpr>, cone: Cone) {
        debug_assert_eq!(exprs.len(), cone.slack_dim());
        let base = self.rhs.len();
        for (i, e) in exprs.into_iter().enumerate() {
            let e = e.compact();
            self.rhs.push(e.constant);
            for (v, c) in e.terms {
                self.rows.push((base + i, v.0, -c));
            }
        }
        self.cones.push(cone);
    }

    /// `expr >= 0`.
    pub fn nonneg(&mut self, expr: LinExpr) {
        self.add_block(vec![expr], Cone::nonneg(1));
    }

    /// `lhs <= rhs`.
    pub fn leq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.nonneg(rhs - lhs);
    }

    /// `lhs >= rhs`.
    pub fn geq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.nonneg(lhs - rhs);
    }

    /// `lhs = rhs` as a zero-cone row.
    pub fn eq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.add_block(vec![lhs - rhs], Cone::zero(1));
    }

    /// `||(exprs[1..])||_2 <= exprs[0]`.
    pub fn soc(&mut self, exprs: Vec<LinExpr>) {
        let d = exprs.len();
        self.add_block(exprs, Cone::soc(d));
    }

    /// Scaled upper-triangle entries (svec order) of a symmetric matrix
    /// constrained to be PSD. Off-diagonal entries must already carry the
    /// sqrt(2) scaling.
    pub fn psd(&mut self, svec_exprs: Vec<LinExpr>, side: usize) {
        self.add_block(svec_exprs, Cone::psd(side));
    }

    pub fn build(self) -> ConicProgram {
        let var_count = self.objective.len();
        let nrows = self.rhs.len();
        let mut m = SparseMatrix::new(nrows, var_count);
        for (r, c, v) in self.rows {
            m.push(r, c, v);
        }
        ConicProgram {
            objective: self.objective,
            offset: self.offset,
            sense: self.sense,
            matrix: m,
            rhs: self.rhs,
            cones: self.cones,
            var_count,
            names: Some(self.names),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_program_validates_clean() {
        let mut b = ProgramBuilder::minimize();
        let x = b.add_var("x", 1.0);
        b.geq(LinExpr::var(x), LinExpr::constant(1.0));
        let p = b.build();
        assert!(p.validate().is_empty());
    }

    #[test]
    fn dimension_mismatch_reported() {
        let mut b = ProgramBuilder::minimize();
        let x = b.add_var("x", 1.0);
        b.geq(LinExpr::var(x), LinExpr::constant(1.0));
        let mut p = b.build();
        p.cones = vec![Cone::nonneg(5)]; // rows sum 5, matrix has 4 fewer
        let issues = p.validate();
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::DimensionMismatch { .. })), "{issues:?}");
    }

    #[test]
    fn nan_rhs_reported() {
        let mut b = ProgramBuilder::minimize();
        let x = b.add_var("x", 1.0);
        b.geq(LinExpr::var(x), LinExpr::constant(1.0));
        let mut p = b.build();
        p.rhs[0] = f64::NAN;
        let issues = p.validate();
        assert!(issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::NonFiniteCoefficient { location: "rhs", .. })));
    }

    #[test]
    fn csc_roundtrip_matvec() {
        let mut m = SparseMatrix::new(3, 2);
        m.push(0, 0, 1.0);
        m.push(2, 1, -2.0);
        m.push(0, 0, 0.5); // duplicate, summed in CSC
        let y = m.mul_vec(&[2.0, 3.0]);
        assert_eq!(y, vec![3.0, 0.0, -6.0]);
        let csc = m.to_csc();
        assert_eq!(csc.nnz(), 2);
    }

    #[test]
    fn json_roundtrip() {
        let mut b = ProgramBuilder::minimize();
        let x = b.add_var("x", 1.0);
        let y = b.add_var("y", 0.0);
        b.geq(LinExpr::var(x) + LinExpr::var(y), LinExpr::constant(1.0));
        b.soc(vec![LinExpr::var(y), LinExpr::var(x)]);
        let p = b.build();
        let q = ConicProgram::from_json(&p.to_json()).unwrap();
        assert_eq!(p.var_count, q.var_count);
        assert_eq!(p.rhs, q.rhs);
        assert_eq!(p.cones, q.cones);
    }
}
