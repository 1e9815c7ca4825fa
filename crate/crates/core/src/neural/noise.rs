use rand::RngCore;

/// Negative-sampling noise: unigram counts raised to `power`, sampled in
/// constant time with Walker's alias method.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    accept: Vec<f64>,
    alias: Vec<u32>,
}

pub const NOISE_POWER: f64 = 0.75;

impl NoiseDistribution {
    pub fn from_counts(counts: &[u64]) -> Self {
        Self::with_power(counts, NOISE_POWER)
    }

    pub fn with_power(counts: &[u64], power: f64) -> Self {
        assert!(!counts.is_empty(), "empty vocabulary");
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let z: f64 = weights.iter().sum();
        assert!(z > 0.0, "all counts are zero");
        let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();

        // Vose's alias construction
        let n = probs.len();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut accept = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Self {
            probs,
            accept,
            alias,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// One draw from a single 64-bit word: the high half picks the column,
    /// the low half the coin.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u32 {
        let x = rng.next_u64();
        let col = (((x >> 32) * self.probs.len() as u64) >> 32) as usize;
        let coin = (x & 0xffff_ffff) as f64 * (1.0 / 4_294_967_296.0);
        if coin < self.accept[col] {
            col as u32
        } else {
            self.alias[col]
        }
    }
}
