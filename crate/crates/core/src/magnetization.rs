//! Magnetization chains of Swendsen-Wang on the complete graph, stepped from
//! sampled component sizes instead of spin configurations.
//!
//! With `x` the current magnetization the two spin classes have
//! `(n + x) / 2` and `(n - x) / 2` vertices. Percolating each at `p = c / n`
//! and signing every component gives the next magnetization.

use alloc::vec::Vec;

use crate::error::{param_err, Result};
use crate::graph::ComponentSampler;
use crate::stochastic::{EdgeRate, RandomStream};

/// Default probe fraction for [`Variant::ModifiedDelta`].
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    /// `|sum of signed components|`.
    Standard,
    /// The larger of the two largest components is forced positive; no
    /// absolute value.
    ModifiedLargest,
    /// The supercritical class's component explored at time
    /// `round(delta * eps * m)` is forced positive.
    ModifiedDelta { delta: f64 },
    /// Positive counts inside two fixed blocks.
    TwoDim,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainParams {
    pub n: usize,
    pub c: f64,
    pub variant: Variant,
}

impl ChainParams {
    pub fn new(n: usize, c: f64, variant: Variant) -> Result<Self> {
        if n < 2 {
            return Err(param_err!("need n >= 2, got {n}"));
        }
        if !(c >= 0.0) || c > n as f64 {
            return Err(param_err!("need 0 <= c <= n, got c = {c}"));
        }
        if let Variant::ModifiedDelta { delta } = variant {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(param_err!("delta must lie in (0, 1), got {delta}"));
            }
        }
        Ok(ChainParams { n, c, variant })
    }

    pub fn p(&self) -> f64 {
        self.c / self.n as f64
    }
}

/// Whether `x` lies on the magnetization lattice `{-n, -n + 2, ..., n}`.
pub fn on_lattice(n: usize, x: i64) -> bool {
    x.unsigned_abs() <= n as u64 && (n as i64 - x) % 2 == 0
}

/// Nearest lattice point to `value` in the direction of zero.
pub fn round_to_lattice(n: usize, value: f64) -> i64 {
    let mut k = (libm::trunc(value.abs()) as i64).min(n as i64);
    if (n as i64 - k) % 2 != 0 {
        k -= 1;
    }
    // Odd n has no lattice point at 0; the smallest magnitude is 1.
    let k = k.max((n % 2) as i64);
    if value < 0.0 {
        -k
    } else {
        k
    }
}

/// Two-block state: positive spins `y` among the `g1` vertices of block one
/// and `z` among the `g2` vertices of block two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoDimState {
    pub y: usize,
    pub z: usize,
    pub g1: usize,
    pub g2: usize,
}

impl TwoDimState {
    pub fn new(y: usize, z: usize, g1: usize, g2: usize) -> Result<Self> {
        if y > g1 || z > g2 {
            return Err(param_err!(
                "positives ({y}, {z}) exceed block sizes ({g1}, {g2})"
            ));
        }
        Ok(TwoDimState { y, z, g1, g2 })
    }

    pub fn n(&self) -> usize {
        self.g1 + self.g2
    }

    pub fn positives(&self) -> usize {
        self.y + self.z
    }

    pub fn magnetization(&self) -> i64 {
        2 * self.positives() as i64 - self.n() as i64
    }
}

/// A magnetization chain with its component sampler prepared for `p = c/n`.
#[derive(Clone, Debug)]
pub struct MagnetizationChain {
    params: ChainParams,
    sampler: ComponentSampler,
}

impl MagnetizationChain {
    pub fn new(params: ChainParams) -> Result<Self> {
        let params = ChainParams::new(params.n, params.c, params.variant)?;
        let rate = EdgeRate::new(params.c, params.n as u64)?;
        Ok(MagnetizationChain {
            params,
            sampler: ComponentSampler::new(rate, params.n),
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn sampler(&self) -> &ComponentSampler {
        &self.sampler
    }

    fn split(&self, x: i64) -> Result<(usize, usize)> {
        let n = self.params.n;
        if !on_lattice(n, x) {
            return Err(param_err!(
                "magnetization {x} is not on the lattice of n = {n}"
            ));
        }
        let large = (n + x.unsigned_abs() as usize) / 2;
        Ok((large, n - large))
    }

    /// Sum of independently signed components of `G(m, p)`.
    fn signed_sum(&self, m: usize, stream: &mut RandomStream) -> i64 {
        let mut sum = 0i64;
        self.sampler
            .for_each_component(m, stream, |size, s| sum += s.rademacher() * size as i64);
        sum
    }

    /// Signed sum of the components of `G(m, p)` other than the first
    /// largest one, and that largest size.
    fn sum_and_largest(&self, m: usize, stream: &mut RandomStream) -> (i64, usize) {
        let (mut sum, mut largest) = (0i64, 0usize);
        self.sampler.for_each_component(m, stream, |size, s| {
            if size > largest {
                // The displaced record joins the signed remainder.
                sum += s.rademacher() * largest as i64;
                largest = size;
            } else {
                sum += s.rademacher() * size as i64;
            }
        });
        (sum, largest)
    }

    /// Dispatch on the configured variant. The two-block variant has its own
    /// state type; see [`MagnetizationChain::step_two_dim`].
    pub fn step(&self, x: i64, stream: &mut RandomStream) -> Result<i64> {
        match self.params.variant {
            Variant::Standard => self.step_standard(x, stream),
            Variant::ModifiedLargest => self.step_modified(x, stream),
            Variant::ModifiedDelta { delta } => self.step_modified_delta(x, delta, stream),
            Variant::TwoDim => Err(param_err!("the two-block chain steps TwoDimState values")),
        }
    }

    /// `|sum_j eps_j |C_j^+| + sum_j eps'_j |C_j^-||`.
    pub fn step_standard(&self, x: i64, stream: &mut RandomStream) -> Result<i64> {
        if x < 0 {
            return Err(param_err!("the standard chain lives on x >= 0, got {x}"));
        }
        let (plus, minus) = self.split(x)?;
        Ok((self.signed_sum(plus, stream) + self.signed_sum(minus, stream)).abs())
    }

    /// Sum of spins after forcing the larger of the two largest components
    /// positive; every other component, the smaller largest included, gets an
    /// independent sign.
    pub fn step_modified(&self, x: i64, stream: &mut RandomStream) -> Result<i64> {
        let (plus, minus) = self.split(x)?;
        let (sum_plus, top_plus) = self.sum_and_largest(plus, stream);
        let (sum_minus, top_minus) = self.sum_and_largest(minus, stream);
        let (hi, lo) = (top_plus.max(top_minus), top_plus.min(top_minus));
        Ok(sum_plus + sum_minus + hi as i64 + stream.rademacher() * lo as i64)
    }

    /// Like [`step_modified`](Self::step_modified), but the forced component
    /// is the one containing exploration time `round(delta * eps * m)` in the
    /// larger class, `m = (n + |x|) / 2`, `m p = 1 + eps`.
    pub fn step_modified_delta(
        &self,
        x: i64,
        delta: f64,
        stream: &mut RandomStream,
    ) -> Result<i64> {
        Ok(self.step_modified_delta_detail(x, delta, stream)?.0)
    }

    /// [`step_modified_delta`](Self::step_modified_delta) that also reports
    /// whether the forced component was the largest one of its class.
    pub fn step_modified_delta_detail(
        &self,
        x: i64,
        delta: f64,
        stream: &mut RandomStream,
    ) -> Result<(i64, bool)> {
        let (large, small) = self.split(x)?;
        let probe = self.probe_time(x, delta)?;
        let (mut sum, mut start, mut t) = (0i64, 0usize, 0usize);
        let (mut forced, mut largest) = (0usize, 0usize);
        self.sampler.run(large, stream, |_, active, s| {
            t += 1;
            if active == 0 {
                let size = t - start;
                largest = largest.max(size);
                if start < probe && probe <= t {
                    forced = size;
                } else {
                    sum += s.rademacher() * size as i64;
                }
                start = t;
            }
        });
        sum += self.signed_sum(small, stream);
        Ok((sum + forced as i64, forced == largest))
    }

    /// Exploration time of the forced component for the delta variant.
    pub fn probe_time(&self, x: i64, delta: f64) -> Result<usize> {
        let n = self.params.n as f64;
        let m = (self.params.n + x.unsigned_abs() as usize) / 2;
        let eps = self.params.c * m as f64 / n - 1.0;
        let probe = libm::round(delta * eps * m as f64);
        if !(probe >= 1.0) {
            return Err(param_err!(
                "probe time round(delta eps m) = {probe} < 1 at x = {x}; use the largest-component variant"
            ));
        }
        Ok((probe as usize).min(m))
    }

    /// Percolate both spin classes of a two-block state and call
    /// `f(size, in_block_one, stream)` for every component, where
    /// `in_block_one` counts the component's vertices in block one. Block
    /// membership is allocated by sequential hypergeometric draws.
    pub fn for_each_block_component(
        &self,
        state: TwoDimState,
        stream: &mut RandomStream,
        mut f: impl FnMut(usize, usize, &mut RandomStream),
    ) -> Result<()> {
        let state = TwoDimState::new(state.y, state.z, state.g1, state.g2)?;
        if state.n() != self.params.n {
            return Err(param_err!(
                "state has {} vertices, chain has {}",
                state.n(),
                self.params.n
            ));
        }
        let mut sizes = Vec::new();
        for (in_one, in_two) in [(state.y, state.z), (state.g1 - state.y, state.g2 - state.z)] {
            let (mut left_one, mut left) = (in_one as u64, (in_one + in_two) as u64);
            sizes.clear();
            self.sampler
                .for_each_component(in_one + in_two, stream, |s, _| sizes.push(s));
            for &size in &sizes {
                let ones = stream.hypergeometric(left, left_one, size as u64)?;
                left -= size as u64;
                left_one -= ones;
                f(size, ones as usize, stream);
            }
        }
        Ok(())
    }

    /// One step of the two-block chain.
    pub fn step_two_dim(
        &self,
        state: TwoDimState,
        stream: &mut RandomStream,
    ) -> Result<TwoDimState> {
        let (mut y, mut z) = (0usize, 0usize);
        self.for_each_block_component(state, stream, |size, ones, s| {
            if s.coin() {
                y += ones;
                z += size - ones;
            }
        })?;
        TwoDimState::new(y, z, state.g1, state.g2)
    }

    /// Run `steps` steps of the configured one-dimensional variant from `x0`,
    /// returning `X_0..X_steps`.
    pub fn trajectory(&self, x0: i64, steps: usize, stream: &mut RandomStream) -> Result<Vec<i64>> {
        let mut path = Vec::with_capacity(steps + 1);
        path.push(x0);
        let mut x = x0;
        for _ in 0..steps {
            x = self.step(x, stream)?;
            path.push(x);
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, c: f64, variant: Variant) -> MagnetizationChain {
        MagnetizationChain::new(ChainParams::new(n, c, variant).unwrap()).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ChainParams::new(1, 1.0, Variant::Standard).is_err());
        assert!(ChainParams::new(10, 11.0, Variant::Standard).is_err());
        assert!(ChainParams::new(10, 1.0, Variant::ModifiedDelta { delta: 1.0 }).is_err());
        let ch = chain(10, 1.0, Variant::Standard);
        let mut s = RandomStream::new(1, 0);
        assert!(ch.step(3, &mut s).is_err());
        assert!(ch.step(-2, &mut s).is_err());
        assert!(ch.step(12, &mut s).is_err());
    }

    #[test]
    fn lattice_rounding() {
        assert_eq!(round_to_lattice(10, 5.7), 4);
        assert_eq!(round_to_lattice(10, -5.7), -4);
        assert_eq!(round_to_lattice(11, 5.7), 5);
        assert_eq!(round_to_lattice(11, 0.2), 1);
        assert_eq!(round_to_lattice(10, 99.0), 10);
        assert!(on_lattice(11, -11) && !on_lattice(11, 0));
    }

    #[test]
    fn free_chain_is_sum_of_signs() {
        let ch = chain(10, 0.0, Variant::Standard);
        let trials = 100_000;
        let zeros = (0..trials)
            .filter(|&i| ch.step(10, &mut RandomStream::new(2, i)).unwrap() == 0)
            .count();
        assert!((zeros as f64 / trials as f64 - 0.24609375).abs() < 0.004);
    }

    #[test]
    fn modified_free_chain_has_one_forced_plus() {
        let ch = chain(1000, 0.0, Variant::ModifiedLargest);
        let trials = 100_000u64;
        let total: i64 = (0..trials)
            .map(|i| ch.step(-200, &mut RandomStream::new(3, i)).unwrap())
            .sum();
        // Standard error is sqrt(999 / 1e5) = 0.1.
        let mean = total as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.4, "{mean}");
    }

    #[test]
    fn every_variant_stays_on_lattice() {
        for variant in [
            Variant::Standard,
            Variant::ModifiedLargest,
            Variant::ModifiedDelta { delta: 0.5 },
        ] {
            let ch = chain(301, 2.0, variant);
            let mut s = RandomStream::new(4, 0);
            let mut x = 301;
            for _ in 0..2000 {
                x = match ch.step(x, &mut s) {
                    Ok(v) => v,
                    Err(_) => ch.step_modified(x, &mut s).unwrap(),
                };
                assert!(on_lattice(301, x));
            }
        }
    }

    #[test]
    fn delta_probe_validation() {
        let ch = chain(100, 2.0, Variant::ModifiedDelta { delta: 0.1 });
        assert!(ch.probe_time(0, 0.1).is_err());
        assert_eq!(ch.probe_time(100, 0.1).unwrap(), 10);
        // eps m = 2.08 and delta 0.5 put the probe at the first vertex.
        let ch = chain(100, 2.0, Variant::ModifiedDelta { delta: 0.5 });
        assert_eq!(ch.probe_time(4, 0.5).unwrap(), 1);
        let mut s = RandomStream::new(5, 0);
        let x = ch.step(4, &mut s).unwrap();
        assert!(on_lattice(100, x));
    }

    #[test]
    fn full_bonds_merge_each_class() {
        let ch = chain(6, 6.0, Variant::ModifiedLargest);
        let mut s = RandomStream::new(6, 0);
        for _ in 0..100 {
            let x = ch.step(2, &mut s).unwrap();
            assert!(x == 6 || x == 2);
        }
    }

    #[test]
    fn two_dim_free_step_halves_blocks() {
        let ch = chain(100, 0.0, Variant::TwoDim);
        let start = TwoDimState::new(40, 60, 40, 60).unwrap();
        let trials = 20_000u64;
        let (mut y, mut z) = (0usize, 0usize);
        for i in 0..trials {
            let out = ch
                .step_two_dim(start, &mut RandomStream::new(7, i))
                .unwrap();
            assert!(out.y <= 40 && out.z <= 60);
            y += out.y;
            z += out.z;
        }
        assert!((y as f64 / trials as f64 - 20.0).abs() < 0.1);
        assert!((z as f64 / trials as f64 - 30.0).abs() < 0.12);
    }

    #[test]
    fn two_dim_rejects_bad_states() {
        assert!(TwoDimState::new(5, 0, 4, 4).is_err());
        let ch = chain(10, 1.0, Variant::TwoDim);
        let s = TwoDimState::new(1, 1, 4, 4).unwrap();
        assert!(ch.step_two_dim(s, &mut RandomStream::new(8, 0)).is_err());
        assert!(ch.step(2, &mut RandomStream::new(8, 0)).is_err());
    }
}
