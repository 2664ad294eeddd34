use serde::{Deserialize, Serialize};

/// Kind of a convex cone in a cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    /// The zero cone `{0}^dim`; its rows are equality constraints.
    Zero,
    /// The nonnegative orthant; its rows are `>=` constraints on the slack.
    NonnegativeOrthant,
    /// Second-order cone `{(t, u) : ||u||_2 <= t}` of total dimension `dim`.
    /// `dim = 1` degenerates to `t >= 0`.
    SecondOrder,
    /// Cone of symmetric positive semidefinite matrices of side length `dim`,
    /// stored in scaled-triangle (svec) form of length `dim (dim + 1) / 2`.
    PositiveSemidefinite,
}

/// One factor of an ordered cone product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cone {
    pub kind: ConeKind,
    /// Dimension of the cone; for PSD this is the matrix side length.
    pub dim: usize,
}

impl Cone {
    pub fn zero(dim: usize) -> Self {
        Cone { kind: ConeKind::Zero, dim }
    }

    pub fn nonneg(dim: usize) -> Self {
        Cone { kind: ConeKind::NonnegativeOrthant, dim }
    }

    pub fn soc(dim: usize) -> Self {
        Cone { kind: ConeKind::SecondOrder, dim }
    }

    pub fn psd(side: usize) -> Self {
        Cone { kind: ConeKind::PositiveSemidefinite, dim: side }
    }

    /// Number of slack rows this cone occupies in the constraint matrix.
    pub fn slack_dim(&self) -> usize {
        match self.kind {
            ConeKind::PositiveSemidefinite => self.dim * (self.dim + 1) / 2,
            _ => self.dim,
        }
    }

    /// The dual cone. Zero dualizes to the free space, which has no membership
    /// rows; callers must treat `Zero` duals specially. Orthant, second-order,
    /// and PSD (in svec coordinates) are self-dual.
    pub fn dual(&self) -> DualCone {
        match self.kind {
            ConeKind::Zero => DualCone::Free(self.dim),
            _ => DualCone::Cone(*self),
        }
    }

    /// Euclidean distance-like residual of `s` from the cone, used for
    /// feasibility checks. Nonpositive values mean membership.
    pub fn membership_residual(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.slack_dim());
        match self.kind {
            ConeKind::Zero => s.iter().map(|v| v.abs()).fold(0.0, f64::max),
            ConeKind::NonnegativeOrthant => s.iter().map(|v| -v).fold(f64::MIN, f64::max),
            ConeKind::SecondOrder => {
                let t = s[0];
                let norm = s[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                norm - t
            }
            ConeKind::PositiveSemidefinite => -psd_min_eigenvalue(self.dim, s),
        }
    }
}

/// Result of dualizing a single cone factor.
pub enum DualCone {
    /// Free components: no membership constraint in the dual program.
    Free(usize),
    Cone(Cone),
}

/// Smallest eigenvalue of the symmetric matrix stored as scaled upper
/// triangle `s` (svec). Jacobi iteration; matrices here are small.
fn psd_min_eigenvalue(side: usize, s: &[f64]) -> f64 {
    let mut a = vec![0.0; side * side];
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    let mut k = 0;
    for j in 0..side {
        for i in 0..=j {
            let v = if i == j { s[k] } else { s[k] * inv_sqrt2 };
            a[i * side + j] = v;
            a[j * side + i] = v;
            k += 1;
        }
    }
    // Cyclic Jacobi sweeps.
    let n = side;
    for _ in 0..32 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-15 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s_ = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s_ * aiq;
                    a[i * n + q] = s_ * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s_ * aqi;
                    a[q * n + i] = s_ * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
}

/// Total slack dimension of an ordered cone product.
pub fn product_dim(cones: &[Cone]) -> usize {
    cones.iter().map(Cone::slack_dim).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_dims() {
        assert_eq!(Cone::zero(3).slack_dim(), 3);
        assert_eq!(Cone::soc(4).slack_dim(), 4);
        assert_eq!(Cone::psd(3).slack_dim(), 6);
    }

    #[test]
    fn soc_residual_sign() {
        let inside = [5.0, 3.0, 4.0 - 1e-9];
        let outside = [5.0, 3.0, 4.1];
        assert!(Cone::soc(3).membership_residual(&inside) <= 0.0);
        assert!(Cone::soc(3).membership_residual(&outside) > 0.0);
    }

    #[test]
    fn psd_residual_via_eigenvalue() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let sqrt2 = 2.0_f64.sqrt();
        let s = [2.0, sqrt2, 2.0];
        let r = Cone::psd(2).membership_residual(&s);
        assert!((r - (-1.0)).abs() < 1e-9, "residual {r}");
        // [[1, 2], [2, 1]] has eigenvalues -1 and 3.
        let s = [1.0, 2.0 * sqrt2, 1.0];
        let r = Cone::psd(2).membership_residual(&s);
        assert!((r - 1.0).abs() < 1e-9, "residual {r}");
    }
}
