//! One-step moments of the magnetization chains and the drift and
//! contraction records built from them.

use alloc::vec::Vec;

use crate::analysis::{gamma0, RunningStats};
use crate::error::{param_err, Result};
use crate::exec::Executor;
use crate::magnetization::{round_to_lattice, ChainParams, MagnetizationChain, Variant};
use crate::stochastic::RandomStream;

/// Moments of `X_1` given `X_0 = x0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OneStepMoments {
    pub x0: i64,
    pub trials: usize,
    pub mean: f64,
    pub standard_error: f64,
    /// `E[(X_1 - centre)^2]`.
    pub centred_square: f64,
    pub centred_square_error: f64,
    pub centre: f64,
}

fn summarize(x0: i64, centre: f64, draws: &[f64]) -> OneStepMoments {
    let first: RunningStats = draws.iter().copied().collect();
    let second: RunningStats = draws.iter().map(|&v| (v - centre) * (v - centre)).collect();
    OneStepMoments {
        x0,
        trials: draws.len(),
        mean: first.mean,
        standard_error: first.standard_error(),
        centred_square: second.mean,
        centred_square_error: second.standard_error(),
        centre,
    }
}

/// `trials` independent single steps from `x0`; trial `i` uses stream
/// `(seed, i)`.
pub fn one_step_moments<E: Executor>(
    chain: &MagnetizationChain,
    x0: i64,
    centre: f64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<OneStepMoments> {
    if trials < 2 {
        return Err(param_err!("need at least 2 trials"));
    }
    chain.step(x0, &mut RandomStream::new(seed, u64::MAX))?;
    let draws = exec.map(trials, |i| {
        let mut s = RandomStream::new(seed, i as u64);
        chain.step(x0, &mut s).expect("validated start") as f64
    });
    Ok(summarize(x0, centre, &draws))
}

/// One-sided comparison of a measured quantity with its bound, with the
/// constant that would make the bound tight.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftRecord {
    pub x0: i64,
    pub observed: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub resolved_constant: f64,
    pub pass: bool,
}

/// `E[X_1 | x0] <= x0 (1 - x0 / (6n)) + 3 SE` for the largest-forced chain.
/// The resolved constant is `k` in `x0 (1 - x0 / (k n))` at equality.
pub fn critical_drift<E: Executor>(
    n: usize,
    c: f64,
    x0: i64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<DriftRecord> {
    let chain = MagnetizationChain::new(ChainParams::new(n, c, Variant::ModifiedLargest)?)?;
    let m = one_step_moments(&chain, x0, 0.0, trials, seed, exec)?;
    let (x, nf) = (x0 as f64, n as f64);
    let bound = x * (1.0 - x / (6.0 * nf));
    let shortfall = x - m.mean;
    Ok(DriftRecord {
        x0,
        observed: m.mean,
        standard_error: m.standard_error,
        bound,
        resolved_constant: if shortfall > 0.0 {
            x * x / (nf * shortfall)
        } else {
            f64::INFINITY
        },
        pass: m.mean <= bound + 3.0 * m.standard_error,
    })
}

/// `E[|X_1| 1{X_1 outside I} + X_1 1{X_1 in I}] <= |x0| - k sqrt(n)` for the
/// probe-forced chain, `I = [-a n^(2/3), a n^(2/3)]`. Passes when the resolved
/// `k` is at least `min_constant`.
#[allow(clippy::too_many_arguments)]
pub fn window_drift<E: Executor>(
    n: usize,
    c: f64,
    x0: i64,
    a: f64,
    delta: f64,
    min_constant: f64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<DriftRecord> {
    let chain = MagnetizationChain::new(ChainParams::new(n, c, Variant::ModifiedDelta { delta })?)?;
    chain.step(x0, &mut RandomStream::new(seed, u64::MAX))?;
    let half = a * libm::pow(n as f64, 2.0 / 3.0);
    let draws = exec.map(trials, |i| {
        let mut s = RandomStream::new(seed, i as u64);
        let v = chain.step(x0, &mut s).expect("validated start") as f64;
        if v.abs() <= half {
            v
        } else {
            v.abs()
        }
    });
    let m = summarize(x0, 0.0, &draws);
    let root = libm::sqrt(n as f64);
    let x = x0.unsigned_abs() as f64;
    let resolved = (x - m.mean) / root;
    Ok(DriftRecord {
        x0,
        observed: m.mean,
        standard_error: m.standard_error,
        bound: x - min_constant * root,
        resolved_constant: resolved,
        pass: resolved >= min_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContractionRecord {
    pub x0: i64,
    /// `E[(X_1 - centre)^2]`.
    pub observed: f64,
    pub standard_error: f64,
    /// `delta (x0 - centre)^2 + b n` at the configured constants.
    pub bound: f64,
    /// Smallest `delta` satisfying the bound with the configured `b`.
    pub resolved_delta: f64,
    /// Smallest `b` satisfying the bound with the configured `delta`.
    pub resolved_b: f64,
    pub pass: bool,
}

fn contraction_record(n: usize, m: &OneStepMoments, delta: f64, b: f64) -> ContractionRecord {
    let nf = n as f64;
    let d0 = (m.x0 as f64 - m.centre) * (m.x0 as f64 - m.centre);
    let bound = delta * d0 + b * nf;
    let resolved_delta = if d0 > 0.0 {
        ((m.centred_square - b * nf) / d0).max(0.0)
    } else if m.centred_square <= b * nf {
        0.0
    } else {
        f64::INFINITY
    };
    ContractionRecord {
        x0: m.x0,
        observed: m.centred_square,
        standard_error: m.centred_square_error,
        bound,
        resolved_delta,
        resolved_b: ((m.centred_square - delta * d0) / nf).max(0.0),
        pass: m.centred_square <= bound,
    }
}

/// `E[(X_1 - gamma0 n)^2] <= delta (x0 - gamma0 n)^2 + b n` for each start
/// `fraction * n` (lattice-rounded) of the standard chain with `c > 2`.
#[allow(clippy::too_many_arguments)]
pub fn supercritical_contraction<E: Executor>(
    n: usize,
    c: f64,
    fractions: &[f64],
    delta: f64,
    b: f64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<ContractionRecord>> {
    let centre = gamma0(c)?.value * n as f64;
    let chain = MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard)?)?;
    fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let x0 = round_to_lattice(n, f * n as f64);
            let m = one_step_moments(
                &chain,
                x0,
                centre,
                trials,
                seed.wrapping_add(k as u64),
                exec,
            )?;
            Ok(contraction_record(n, &m, delta, b))
        })
        .collect()
}

/// `E[X_1^2] <= b n` for each start `fraction * n` with
/// `fraction <= 1/c - 1/2` (subcritical side, `c < 2`).
pub fn subcritical_contraction<E: Executor>(
    n: usize,
    c: f64,
    fractions: &[f64],
    b: f64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<ContractionRecord>> {
    let limit = 1.0 / c - 0.5;
    if let Some(f) = fractions.iter().find(|&&f| f < 0.0 || f > limit) {
        return Err(param_err!("start fraction {f} outside [0, 1/c - 1/2]"));
    }
    let chain = MagnetizationChain::new(ChainParams::new(n, c, Variant::Standard)?)?;
    fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let x0 = round_to_lattice(n, f * n as f64);
            let m = one_step_moments(&chain, x0, 0.0, trials, seed.wrapping_add(k as u64), exec)?;
            let mut r = contraction_record(n, &m, 0.0, b);
            r.resolved_delta = f64::NAN;
            Ok(r)
        })
        .collect()
}

/// Frequency of `sign(X_1 - b) != sign(x0 - b)` for the standard chain,
/// with the resolved `D` in `D n^(-1/3)`.
pub fn level_crossing<E: Executor>(
    chain: &MagnetizationChain,
    x0: i64,
    level: f64,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<(f64, f64)> {
    if x0 as f64 == level {
        return Err(param_err!("start sits on the level"));
    }
    chain.step(x0, &mut RandomStream::new(seed, u64::MAX))?;
    let above = x0 as f64 > level;
    let crossed = exec
        .map(trials, |i| {
            let mut s = RandomStream::new(seed, i as u64);
            let v = chain.step(x0, &mut s).expect("validated start") as f64;
            (v > level) != above
        })
        .into_iter()
        .filter(|&c| c)
        .count();
    let freq = crossed as f64 / trials as f64;
    Ok((freq, freq * libm::cbrt(chain.n() as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn moments_at_zero_temperature() {
        // c = 0 from the all-plus state: X_1 = |sum of n signs|, E[X_1^2] = n.
        let chain = MagnetizationChain::new(ChainParams::new(100, 0.0, Variant::Standard).unwrap())
            .unwrap();
        let m = one_step_moments(&chain, 100, 0.0, 20_000, 1, &Sequential).unwrap();
        assert!((m.centred_square - 100.0).abs() < 5.0 * m.centred_square_error);
        assert!(one_step_moments(&chain, 99, 0.0, 10, 1, &Sequential).is_err());
    }

    #[test]
    fn contraction_resolution() {
        let m = OneStepMoments {
            x0: 10,
            trials: 100,
            mean: 0.0,
            standard_error: 0.0,
            centred_square: 60.0,
            centred_square_error: 1.0,
            centre: 0.0,
        };
        let r = contraction_record(1, &m, 0.5, 20.0);
        assert_eq!(r.bound, 70.0);
        assert!(r.pass);
        assert!((r.resolved_delta - 0.4).abs() < 1e-12);
        assert!((r.resolved_b - 10.0).abs() < 1e-12);
    }

    #[test]
    fn supercritical_contraction_small() {
        let recs =
            supercritical_contraction(2000, 3.0, &[0.0, 1.0], 0.95, 50.0, 2000, 4, &Sequential)
                .unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
        assert!(subcritical_contraction(1000, 1.5, &[0.5], 50.0, 10, 1, &Sequential).is_err());
    }
}
