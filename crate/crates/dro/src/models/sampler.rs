//! Scenario samplers. Failure draws are componentwise independent Bernoulli
//! variables; the uniform sampler uses rate `psi / M` per component so that
//! about `psi * 100%` of samples record at least one failure.

use crate::error::DroError;
use crate::two_stage::{BinaryPoint, SampleSet, Support};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// I.i.d. Bernoulli(psi/M) failure sampler; owns its RNG stream and is used
/// single-threaded. Parallel studies take distinct seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BernoulliSampler {
    pub psi: f64,
    pub m: usize,
    pub seed: u64,
    #[serde(skip, default = "fresh_state")]
    state: Option<ChaCha20Rng>,
}

fn fresh_state() -> Option<ChaCha20Rng> {
    None
}

impl BernoulliSampler {
    pub fn new(psi: f64, m: usize, seed: u64) -> Result<Self, DroError> {
        let p = psi / m as f64;
        if !(0.0..=1.0).contains(&p) {
            return Err(DroError::Invalid(format!(
                "per-component probability psi/M = {p} outside [0, 1]"
            )));
        }
        Ok(BernoulliSampler { psi, m, seed, state: None })
    }

    pub fn component_probability(&self) -> f64 {
        self.psi / self.m as f64
    }

    /// Draw `n` i.i.d. scenarios. Reproducible per seed: the stream is
    /// created lazily from the stored seed and advances across calls.
    pub fn sample_failures(&mut self, n: usize) -> Vec<BinaryPoint> {
        let p = self.component_probability();
        let rng = self.state.get_or_insert_with(|| ChaCha20Rng::seed_from_u64(self.seed));
        draw_independent(rng, &vec![p; self.m], n)
    }

    pub fn sample_set(&mut self, n: usize, support: &Support) -> Result<SampleSet, DroError> {
        SampleSet::new(self.sample_failures(n), support)
    }
}

/// Independent draws with per-component probabilities; used for the
/// illustrative network whose middle nodes fail at different rates.
pub fn draw_independent(rng: &mut impl Rng, probs: &[f64], n: usize) -> Vec<BinaryPoint> {
    (0..n)
        .map(|_| probs.iter().map(|&p| u8::from(rng.gen_bool(p.clamp(0.0, 1.0)))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_zero_gives_all_zero() {
        let mut s = BernoulliSampler::new(0.0, 3, 1).unwrap();
        assert!(s.sample_failures(50).iter().all(|xi| xi.iter().all(|&v| v == 0)));
    }

    #[test]
    fn psi_equal_m_gives_all_ones() {
        let mut s = BernoulliSampler::new(3.0, 3, 1).unwrap();
        assert!(s.sample_failures(50).iter().all(|xi| xi.iter().all(|&v| v == 1)));
    }

    #[test]
    fn psi_above_m_rejected() {
        assert!(BernoulliSampler::new(4.0, 3, 1).is_err());
    }

    #[test]
    fn empirical_rate_matches_law_of_large_numbers() {
        let mut s = BernoulliSampler::new(0.1, 3, 7).unwrap();
        let draws = s.sample_failures(100_000);
        let rate = draws.iter().map(|xi| xi[0] as f64).sum::<f64>() / draws.len() as f64;
        let expect = 0.1 / 3.0;
        assert!((rate - expect).abs() < 0.002, "rate {rate} vs {expect}");
    }

    #[test]
    fn reproducible_per_seed() {
        let mut a = BernoulliSampler::new(1.0, 5, 99).unwrap();
        let mut b = BernoulliSampler::new(1.0, 5, 99).unwrap();
        assert_eq!(a.sample_failures(20), b.sample_failures(20));
    }
}
