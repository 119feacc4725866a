//! Seeded, stream-splittable randomness and the exact discrete samplers used
//! throughout the crate.
//!
//! Every Monte Carlo trial owns a [`RandomStream`] keyed by `(seed, stream_id)`;
//! the stream id is the trial index, so results never depend on how trials are
//! scheduled across threads.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Binomial, Distribution, Hypergeometric};

use crate::error::{param_err, Result};

/// A reproducible random stream.
///
/// Backed by ChaCha8 in counter mode: the seed selects the key and the stream
/// id selects the 64-bit nonce, so `(seed, stream_id)` pairs are independent
/// and the draw sequence is identical on every platform.
#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
    bits: u64,
    nbits: u32,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream {
            rng,
            seed,
            stream_id,
            bits: 0,
            nbits: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1)`, safe to pass to `ln`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        // Lemire's nearly divisionless method.
        let mut m = (self.rng.next_u64() as u128) * (bound as u128);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = (self.rng.next_u64() as u128) * (bound as u128);
            }
        }
        (m >> 64) as u64
    }

    /// A fair coin, one buffered bit per call.
    #[inline]
    pub fn coin(&mut self) -> bool {
        if self.nbits == 0 {
            self.bits = self.rng.next_u64();
            self.nbits = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.nbits -= 1;
        b
    }

    /// `+1` or `-1` with probability one half each.
    #[inline]
    pub fn rademacher(&mut self) -> i64 {
        if self.coin() {
            1
        } else {
            -1
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Exact Binomial(`trials`, `p`) draw.
    ///
    /// Small means use inversion, larger ones the BTPE rejection sampler.
    pub fn binomial(&mut self, trials: u64, p: f64) -> Result<u64> {
        check_probability(p)?;
        Ok(self.binomial_unchecked(trials, p))
    }

    pub(crate) fn binomial_unchecked(&mut self, trials: u64, p: f64) -> u64 {
        if trials == 0 || p == 0.0 {
            return 0;
        }
        if p == 1.0 {
            return trials;
        }
        // `new` only fails for p outside [0, 1], excluded above.
        Binomial::new(trials, p)
            .expect("probability validated")
            .sample(self)
    }

    /// Number of marked items in a uniform `draws`-subset of a population of
    /// `population` items of which `marked` are marked.
    pub fn hypergeometric(&mut self, population: u64, marked: u64, draws: u64) -> Result<u64> {
        if marked > population || draws > population {
            return Err(param_err!(
                "hypergeometric({population}, {marked}, {draws}) is not a valid population"
            ));
        }
        if draws == 0 || marked == 0 {
            return Ok(0);
        }
        if marked == population {
            return Ok(draws);
        }
        if draws <= 32 {
            let (mut pop, mut left, mut hits) = (population, marked, 0);
            for _ in 0..draws {
                if self.below(pop) < left {
                    left -= 1;
                    hits += 1;
                }
                pop -= 1;
            }
            return Ok(hits);
        }
        let dist = Hypergeometric::new(population, marked, draws)
            .map_err(|e| param_err!("hypergeometric: {e}"))?;
        Ok(dist.sample(self))
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(param_err!("probability {p} outside [0, 1]"))
    }
}

/// An edge probability `p = c / n`, kept as the pair so that powers of
/// `1 - p` are evaluated through `log1p` rather than by repeated rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeRate {
    pub c: f64,
    pub n: u64,
}

impl EdgeRate {
    pub fn new(c: f64, n: u64) -> Result<Self> {
        if n == 0 || !(c >= 0.0) || c > n as f64 {
            return Err(param_err!("edge rate c/n = {c}/{n} is not a probability"));
        }
        Ok(EdgeRate { c, n })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.c / self.n as f64
    }

    /// `ln(1 - p)`.
    pub fn ln_complement(&self) -> f64 {
        libm::log1p(-self.p())
    }

    /// `(1 - p)^k`.
    pub fn complement_pow(&self, k: u64) -> f64 {
        let p = self.p();
        if p == 1.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        libm::exp(k as f64 * libm::log1p(-p))
    }
}

/// Binomial sampler specialised to one success probability, with a table of
/// `(1 - p)^k` for all trial counts up to a maximum.
///
/// Exploration of `G(m, c/n)` draws one binomial per vertex with mean close to
/// `c m / n`, so inversion started from the tabulated zero-mass is both exact
/// and far cheaper than general-purpose setup per draw.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    p: f64,
    odds: f64,
    zero_mass: Vec<f64>,
}

/// Means below this use table inversion.
const INVERSION_MEAN: f64 = 16.0;
/// Inversion restarts past this many terms; the skipped tail has mass below
/// 1e-40 when the mean is under `INVERSION_MEAN`.
const INVERSION_LIMIT: u64 = 160;

impl BinomialTable {
    pub fn new(p: f64, max_trials: usize) -> Result<Self> {
        check_probability(p)?;
        Ok(Self::build(p, libm::log1p(-p), max_trials))
    }

    pub fn for_rate(rate: EdgeRate, max_trials: usize) -> Self {
        Self::build(rate.p(), rate.ln_complement(), max_trials)
    }

    fn build(p: f64, ln_q: f64, max_trials: usize) -> Self {
        let zero_mass = (0..=max_trials)
            .map(|k| match (p == 1.0, k) {
                (true, 0) => 1.0,
                (true, _) => 0.0,
                _ => libm::exp(k as f64 * ln_q),
            })
            .collect();
        BinomialTable {
            p,
            odds: if p < 1.0 {
                p / (1.0 - p)
            } else {
                f64::INFINITY
            },
            zero_mass,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn max_trials(&self) -> usize {
        self.zero_mass.len() - 1
    }

    /// Draw Binomial(`trials`, p). Falls back to the general sampler for
    /// large means or trial counts beyond the table.
    #[inline]
    pub fn sample(&self, trials: usize, stream: &mut RandomStream) -> usize {
        if trials == 0 || self.p == 0.0 {
            return 0;
        }
        if self.p == 1.0 {
            return trials;
        }
        if trials >= self.zero_mass.len() || trials as f64 * self.p >= INVERSION_MEAN {
            return stream.binomial_unchecked(trials as u64, self.p) as usize;
        }
        let start = self.zero_mass[trials];
        'restart: loop {
            let u = stream.uniform();
            let mut k = 0u64;
            let mut mass = start;
            let mut cdf = mass;
            while cdf <= u {
                if k as usize >= trials || k >= INVERSION_LIMIT {
                    continue 'restart;
                }
                mass *= (trials as u64 - k) as f64 / (k + 1) as f64 * self.odds;
                k += 1;
                cdf += mass;
            }
            return k as usize;
        }
    }
}
