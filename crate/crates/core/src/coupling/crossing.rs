//! First crossing of two independent magnetization chains.

use alloc::vec::Vec;

use super::law::StationaryLaw;
use crate::error::{param_err, Result};
use crate::exec::Executor;
use crate::magnetization::{MagnetizationChain, Variant};
use crate::stochastic::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossingRecord {
    /// First `t` with `sign(X_t - Y_t) != sign(X_0 - Y_0)`.
    pub tau: usize,
    pub x_before: i64,
    pub y_before: i64,
    /// `X_{tau-1} - Y_{tau-1}`.
    pub gap_before: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CrossingOutcome {
    Crossed(CrossingRecord),
    /// No crossing within the horizon; final states reported.
    Censored {
        horizon: usize,
        x: i64,
        y: i64,
    },
}

/// Step both chains on one stream (`X` first) until `X_t - Y_t` leaves the
/// sign of `X_0 - Y_0` or the horizon passes.
pub fn crossing_run(
    x0: i64,
    y0: i64,
    chain: &MagnetizationChain,
    horizon: usize,
    stream: &mut RandomStream,
) -> Result<CrossingOutcome> {
    if x0 == y0 {
        return Err(param_err!("crossing needs X_0 != Y_0"));
    }
    let sign0 = (x0 - y0).signum();
    let (mut x, mut y) = (x0, y0);
    for t in 1..=horizon {
        let (nx, ny) = (chain.step(x, stream)?, chain.step(y, stream)?);
        if (nx - ny).signum() != sign0 {
            return Ok(CrossingOutcome::Crossed(CrossingRecord {
                tau: t,
                x_before: x,
                y_before: y,
                gap_before: x - y,
            }));
        }
        (x, y) = (nx, ny);
    }
    Ok(CrossingOutcome::Censored { horizon, x, y })
}

/// `trials` crossing runs from `X_0 = x0` with `Y_0` drawn from the law of
/// `|S|`; draws equal to `x0` are redrawn. Trial `i` uses stream
/// `(seed, i)`.
pub fn crossing_experiment<E: Executor>(
    x0: i64,
    y0_law: &StationaryLaw,
    chain: &MagnetizationChain,
    trials: usize,
    horizon: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<CrossingOutcome>> {
    if matches!(chain.params().variant, Variant::TwoDim) {
        return Err(param_err!("crossing runs need a one-dimensional chain"));
    }
    if y0_law.n() != chain.n() {
        return Err(param_err!("stationary law and chain disagree on n"));
    }
    let start_law = y0_law.abs_law();
    if start_law.len() == 1 && start_law.values()[0] == x0 {
        return Err(param_err!("Y_0 is almost surely equal to X_0"));
    }
    exec.map(trials, |i| {
        let mut s = RandomStream::new(seed, i as u64);
        let mut y0 = start_law.sample(&mut s);
        while y0 == x0 {
            y0 = start_law.sample(&mut s);
        }
        crossing_run(x0, y0, chain, horizon, &mut s)
    })
    .into_iter()
    .collect()
}

/// Fraction of outcomes with `tau <= k n^(1/4)`, both pre-crossing states in
/// `[n^(3/4) / a, a n^(3/4)]` and `|gap| <= h n^(5/8)`.
pub fn shoot_frequency(outcomes: &[CrossingOutcome], n: usize, k: f64, a: f64, h: f64) -> f64 {
    let nf = n as f64;
    let (scale, gap_scale) = (libm::pow(nf, 0.75), libm::pow(nf, 0.625));
    let horizon = k * libm::pow(nf, 0.25);
    let inside = |v: i64| (v as f64) >= scale / a && (v as f64) <= a * scale;
    let good = outcomes
        .iter()
        .filter(|o| match o {
            CrossingOutcome::Crossed(r) => {
                r.tau as f64 <= horizon
                    && inside(r.x_before)
                    && inside(r.y_before)
                    && (r.gap_before.unsigned_abs() as f64) <= h * gap_scale
            }
            CrossingOutcome::Censored { .. } => false,
        })
        .count();
    good as f64 / outcomes.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::law::exact_stationary;
    use crate::exec::Sequential;
    use crate::magnetization::ChainParams;

    #[test]
    fn equal_starts_are_rejected() {
        let ch =
            MagnetizationChain::new(ChainParams::new(64, 2.0, Variant::ModifiedLargest).unwrap())
                .unwrap();
        assert!(crossing_run(10, 10, &ch, 5, &mut RandomStream::new(1, 0)).is_err());
    }

    #[test]
    fn records_satisfy_definition() {
        let n = 1024;
        let ch =
            MagnetizationChain::new(ChainParams::new(n, 2.0, Variant::ModifiedLargest).unwrap())
                .unwrap();
        let law = exact_stationary(n, 2.0).unwrap();
        let out = crossing_experiment(1024, &law, &ch, 200, 200, 3, &Sequential).unwrap();
        let crossed = out
            .iter()
            .filter(|o| matches!(o, CrossingOutcome::Crossed(_)))
            .count();
        assert!(crossed > 150);
        for o in &out {
            if let CrossingOutcome::Crossed(r) = o {
                assert!(r.gap_before > 0);
                assert_eq!(r.gap_before, r.x_before - r.y_before);
            }
        }
    }
}
