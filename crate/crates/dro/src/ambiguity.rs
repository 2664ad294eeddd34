//! Wasserstein ambiguity machinery: ground metrics on the binary cube, the
//! exact affine form of the 1-norm distance to a binary anchor, diameters,
//! and radius rules.
//!
//! The discrete metric is never routed through cone machinery. Because its
//! regularized inner problem depends only on the sampled losses and the
//! worst-case loss, the solvers use that reduced form directly; see
//! `exact::discrete_metric_solve`.

use crate::error::DroError;
use crate::two_stage::BinaryPoint;
use serde::{Deserialize, Serialize};

/// Ground metric on the scenario space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Norm1,
    Norm2,
    NormInf,
    /// d = 1 whenever the points differ; Wasserstein becomes total variation.
    Discrete,
}

/// Wasserstein ball specification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AmbiguitySpec {
    pub metric: Metric,
    pub epsilon: f64,
}

impl AmbiguitySpec {
    pub fn new(metric: Metric, epsilon: f64) -> Result<Self, DroError> {
        if epsilon < 0.0 || !epsilon.is_finite() {
            return Err(DroError::Invalid(format!("radius must be nonnegative, got {epsilon}")));
        }
        Ok(AmbiguitySpec { metric, epsilon })
    }
}

/// Rule mapping sample size to a ball radius.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RadiusRule {
    /// Finite-sample guarantee at confidence `1 - beta`:
    /// `D sqrt((2N)^-1 (|support| log(N+1) + log(1/beta)))`.
    FiniteSample { beta: f64 },
    /// Scaled rate `nu sqrt(log(N+1) / N)` used for radius sweeps.
    Nu { nu: f64 },
}

pub fn distance(metric: Metric, a: &[u8], b: &[u8]) -> Result<f64, DroError> {
    if a.len() != b.len() {
        return Err(DroError::Invalid(format!(
            "metric arguments have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let flips = a.iter().zip(b).filter(|(u, v)| u != v).count() as f64;
    Ok(match metric {
        Metric::Norm1 => flips,
        Metric::Norm2 => flips.sqrt(),
        Metric::NormInf | Metric::Discrete => {
            if flips > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    })
}

/// Diameter of the full binary cube `{0,1}^m` under the metric.
pub fn diameter(metric: Metric, m: usize) -> f64 {
    match metric {
        Metric::Norm1 => m as f64,
        Metric::Norm2 => (m as f64).sqrt(),
        Metric::NormInf | Metric::Discrete => 1.0,
    }
}

/// Radius for a sample of size `n` over `m` binary components. The
/// finite-sample rule bounds the support size by `2^m` unless an exact count
/// is supplied; the bound direction keeps the guarantee valid.
pub fn radius(rule: RadiusRule, n: usize, m: usize, metric: Metric) -> f64 {
    radius_with_support_count(rule, n, m, metric, None)
}

pub fn radius_with_support_count(
    rule: RadiusRule,
    n: usize,
    m: usize,
    metric: Metric,
    support_count: Option<f64>,
) -> f64 {
    let n_f = n as f64;
    match rule {
        RadiusRule::Nu { nu } => nu * ((n_f + 1.0).ln() / n_f).sqrt(),
        RadiusRule::FiniteSample { beta } => {
            let cardinality = support_count.unwrap_or_else(|| (m as f64).exp2());
            let inner = (cardinality * (n_f + 1.0).ln() + (1.0 / beta).ln()) / (2.0 * n_f);
            diameter(metric, m) * inner.sqrt()
        }
    }
}

/// Exact affine representation of `||xi - anchor||_1` over binary `xi`:
/// returns `(g, g0)` with the distance equal to `g' xi + g0`.
pub fn norm1_regularizer_coefficients(anchor: &[u8]) -> (Vec<f64>, f64) {
    let g: Vec<f64> = anchor.iter().map(|&v| 1.0 - 2.0 * v as f64).collect();
    let g0: f64 = anchor.iter().map(|&v| v as f64).sum();
    (g, g0)
}

/// Evaluate the affine 1-norm form at a (possibly fractional) point.
pub fn norm1_affine_at(anchor: &[u8], xi: &[f64]) -> f64 {
    let (g, g0) = norm1_regularizer_coefficients(anchor);
    g0 + g.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
}

#[allow(unused)]
fn _binary_point_alias(p: &BinaryPoint) -> usize {
    p.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_flip_distances() {
        assert_eq!(distance(Metric::Norm1, &[1, 0, 1], &[0, 0, 1]).unwrap(), 1.0);
        assert!(
            (distance(Metric::Norm2, &[1, 1, 0], &[0, 0, 0]).unwrap() - 2.0_f64.sqrt()).abs()
                < 1e-15
        );
        assert_eq!(distance(Metric::Discrete, &[1, 0], &[0, 0]).unwrap(), 1.0);
        assert_eq!(distance(Metric::Discrete, &[1, 0], &[1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(distance(Metric::Norm1, &[1, 0], &[1]).is_err());
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(Metric::Norm1, 3), 3.0);
        assert_eq!(diameter(Metric::Norm2, 4), 2.0);
        assert_eq!(diameter(Metric::NormInf, 7), 1.0);
        assert_eq!(diameter(Metric::Discrete, 50), 1.0);
    }

    #[test]
    fn radius_values_against_formula_oracle() {
        // nu = 0 collapses to zero for any N.
        assert_eq!(radius(RadiusRule::Nu { nu: 0.0 }, 17, 5, Metric::Norm1), 0.0);
        // nu = 0.1, N = 10: 0.1 sqrt(ln(11)/10).
        let expect = 0.1 * (11.0_f64.ln() / 10.0).sqrt();
        let got = radius(RadiusRule::Nu { nu: 0.1 }, 10, 3, Metric::Norm1);
        assert!((got - expect).abs() < 1e-15, "{got} vs {expect}");
        assert!((got - 0.048_968_308_861_940_2).abs() < 1e-12);
        // beta = 0.05, M = 3, N = 100, Norm1: 3 sqrt((8 ln 101 + ln 20)/200).
        let expect = 3.0 * ((8.0 * 101.0_f64.ln() + 20.0_f64.ln()) / 200.0).sqrt();
        let got = radius(RadiusRule::FiniteSample { beta: 0.05 }, 100, 3, Metric::Norm1);
        assert!((got - expect).abs() < 1e-15, "{got} vs {expect}");
        assert!((got - 1.340_243_014_670_393).abs() < 1e-12);
    }

    #[test]
    fn finite_sample_radius_monotone() {
        let mut prev = f64::INFINITY;
        let mut n = 10usize;
        while n <= 10_000 {
            let r = radius(RadiusRule::FiniteSample { beta: 0.05 }, n, 4, Metric::Norm1);
            assert!(r < prev, "radius not decreasing at N={n}");
            prev = r;
            n *= 10;
        }
        // Nondecreasing as beta shrinks.
        let r1 = radius(RadiusRule::FiniteSample { beta: 0.1 }, 100, 4, Metric::Norm1);
        let r2 = radius(RadiusRule::FiniteSample { beta: 0.01 }, 100, 4, Metric::Norm1);
        assert!(r2 >= r1);
    }

    #[test]
    fn norm1_affine_form_is_exact_on_binaries() {
        // Anchor zero: coefficients (e, 0).
        let (g, g0) = norm1_regularizer_coefficients(&[0, 0, 0]);
        assert_eq!(g, vec![1.0, 1.0, 1.0]);
        assert_eq!(g0, 0.0);
        assert_eq!(norm1_affine_at(&[0, 0, 0], &[1.0, 0.0, 1.0]), 2.0);
        // Anchor all-ones: (-e, M).
        let (g, g0) = norm1_regularizer_coefficients(&[1, 1, 1, 1]);
        assert!(g.iter().all(|&v| v == -1.0));
        assert_eq!(g0, 4.0);
        assert_eq!(norm1_affine_at(&[1, 1, 1, 1], &[0.0; 4]), 4.0);
        // Exhaustive over M = 10: affine form equals the metric on binaries.
        let m = 10usize;
        for anchor_mask in [0u32, 5, 1023, 512, 341] {
            let anchor: Vec<u8> = (0..m).map(|j| (anchor_mask >> j & 1) as u8).collect();
            for mask in 0u32..(1 << m) {
                let xi: Vec<u8> = (0..m).map(|j| (mask >> j & 1) as u8).collect();
                let xi_f: Vec<f64> = xi.iter().map(|&v| v as f64).collect();
                let exact = distance(Metric::Norm1, &xi, &anchor).unwrap();
                let affine = norm1_affine_at(&anchor, &xi_f);
                assert_eq!(exact, affine);
            }
        }
    }
}
