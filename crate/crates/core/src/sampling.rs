//! Negative-sample noise distribution and frequency subsampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Exponent applied to unigram counts for the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

/// Redraw limit when a noise draw hits the excluded target.
const MAX_REDRAWS: usize = 32;

/// Unigram distribution raised to the 0.75 power, sampled by binary search
/// over the cumulative weights.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    cumulative: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(counts: &[u64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(NOISE_EXPONENT);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::Domain("noise distribution has no mass".into()));
        }
        for v in &mut cumulative {
            *v /= acc;
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(NoiseSampler { cumulative })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn probability(&self, id: usize) -> f64 {
        let prev = if id == 0 {
            0.0
        } else {
            self.cumulative[id - 1]
        };
        self.cumulative[id] - prev
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        // First index whose cumulative weight exceeds u.
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// Draws up to `k` ids into `out`, redrawing any draw equal to
    /// `exclude`. A draw that keeps hitting `exclude` is dropped.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        k: usize,
        exclude: Option<usize>,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        for _ in 0..k {
            let mut tries = 0;
            loop {
                let id = self.sample(rng);
                if Some(id) != exclude {
                    out.push(id);
                    break;
                }
                tries += 1;
                if tries == MAX_REDRAWS {
                    break;
                }
            }
        }
    }

    pub fn sample_noise<R: Rng + ?Sized>(
        &self,
        k: usize,
        exclude: Option<usize>,
        rng: &mut R,
    ) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        self.sample_into(k, exclude, rng, &mut out);
        out
    }
}

/// `max(0, 1 - sqrt(t / p))` with `p = count / total`.
pub fn subsample_discard_prob(count: u64, total: u64, t: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::Domain("total count is zero".into()));
    }
    if count == 0 {
        return Ok(0.0);
    }
    let p = count as f64 / total as f64;
    Ok((1.0 - (t / p).sqrt()).max(0.0))
}

/// Precomputed discard probabilities for one inventory.
#[derive(Clone, Debug)]
pub struct SubsamplingFilter {
    discard: Vec<f64>,
}

impl SubsamplingFilter {
    pub fn new(counts: &[u64], t: f64) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        let discard = counts
            .iter()
            .map(|&c| subsample_discard_prob(c, total, t))
            .collect::<Result<_>>()?;
        Ok(SubsamplingFilter { discard })
    }

    /// Filter that never discards.
    pub fn keep_all(len: usize) -> Self {
        SubsamplingFilter {
            discard: vec![0.0; len],
        }
    }

    #[inline]
    pub fn discard_prob(&self, id: usize) -> f64 {
        self.discard[id]
    }

    /// Draws a uniform number and discards when it falls below the
    /// discard probability.
    #[inline]
    pub fn discard<R: Rng + ?Sized>(&self, id: usize, rng: &mut R) -> bool {
        let p = self.discard[id];
        p > 0.0 && p > rng.random::<f64>()
    }
}

/// Pair-level subsampling: two independent uniforms, discard when either
/// noun's discard probability exceeds its draw.
#[inline]
pub fn pair_discard<R: Rng + ?Sized>(
    nouns: &SubsamplingFilter,
    n1: usize,
    n2: usize,
    rng: &mut R,
) -> bool {
    let r1: f64 = rng.random();
    let r2: f64 = rng.random();
    nouns.discard_prob(n1) > r1 || nouns.discard_prob(n2) > r2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn discard_prob_closed_forms() {
        let t = 1e-5;
        // p = t
        assert_eq!(subsample_discard_prob(1, 100_000, t).unwrap(), 0.0);
        // p = 4t
        assert!((subsample_discard_prob(4, 100_000, t).unwrap() - 0.5).abs() < 1e-12);
        // p = t/4 clamps from -1 to 0
        assert_eq!(subsample_discard_prob(1, 400_000, t).unwrap(), 0.0);
        assert!(subsample_discard_prob(1, 0, t).is_err());
    }

    #[test]
    fn discard_prob_monotone() {
        let total = 1_000_000;
        let mut prev = 0.0;
        for c in (1..total).step_by(997) {
            let p = subsample_discard_prob(c, total, 1e-3).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn noise_probabilities_closed_form() {
        let s = NoiseSampler::new(&[16, 1]).unwrap();
        assert!((s.probability(0) - 8.0 / 9.0).abs() < 1e-15);
        assert!((s.probability(1) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn single_word_inventory() {
        let s = NoiseSampler::new(&[3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(s.sample_noise(50, None, &mut rng).iter().all(|&w| w == 0));
        // Only the excluded word exists: every draw is dropped.
        assert!(s.sample_noise(5, Some(0), &mut rng).is_empty());
    }

    #[test]
    fn zero_count_words_never_drawn() {
        let s = NoiseSampler::new(&[0, 5, 0, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let w = s.sample(&mut rng);
            assert!(w == 1 || w == 3);
        }
    }

    #[test]
    fn excluded_target_redrawn() {
        let s = NoiseSampler::new(&[10, 10, 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = s.sample_noise(10_000, Some(1), &mut rng);
        assert_eq!(draws.len(), 10_000);
        assert!(draws.iter().all(|&w| w != 1));
    }

    #[test]
    fn reproducible_under_seed() {
        let s = NoiseSampler::new(&[5, 3, 9, 1]).unwrap();
        let a = s.sample_noise(100, None, &mut ChaCha8Rng::seed_from_u64(9));
        let b = s.sample_noise(100, None, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn pair_discard_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // counts giving p = t exactly keep always
        let keep = SubsamplingFilter::new(&[1, 1], 0.5).unwrap();
        assert!((0..1000).all(|_| !pair_discard(&keep, 0, 1, &mut rng)));
        let f = SubsamplingFilter {
            discard: vec![1.0, 0.0],
        };
        assert!((0..1000).all(|_| pair_discard(&f, 0, 1, &mut rng)));
    }

    #[test]
    fn pair_keep_rate_is_product() {
        let f = SubsamplingFilter {
            discard: vec![0.5, 0.5],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 1_000_000;
        let kept = (0..trials)
            .filter(|_| !pair_discard(&f, 0, 1, &mut rng))
            .count();
        let rate = kept as f64 / trials as f64;
        let se = (0.25f64 * 0.75 / trials as f64).sqrt();
        assert!((rate - 0.25).abs() < 3.0 * se, "keep rate {rate}");
    }
}
