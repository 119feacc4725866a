//! Mixing time of the magnetization chain from the worst start `X_0 = n`,
//! measured against the exact stationary law.

use alloc::vec::Vec;

use super::law::{exact_stationary, tv_to_law, LatticeLaw};
use crate::error::{param_err, Error, Result};
use crate::exec::Executor;
use crate::magnetization::{ChainParams, MagnetizationChain, Variant};
use crate::stochastic::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixingSettings {
    pub threshold: f64,
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl MixingSettings {
    pub fn new(trials: usize, seed: u64) -> Self {
        MixingSettings {
            threshold: 0.25,
            trials,
            horizon: 10_000,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixingEstimate {
    pub n: usize,
    pub c: f64,
    pub trials: usize,
    pub threshold: f64,
    /// Expected upward bias of the plug-in TV at this ensemble size.
    pub allowance: f64,
    /// First `t` with plug-in TV at most `threshold + allowance`.
    pub t_mix: usize,
    /// First `t` with plug-in TV at most `threshold + 2 allowance`.
    pub t_lower: usize,
    /// First `t` with plug-in TV at most `threshold`, if reached within
    /// twice the time taken to reach `threshold + allowance`.
    pub t_upper: Option<usize>,
    /// Crossing of `threshold + allowance` by linear interpolation between
    /// consecutive integer times.
    pub t_interpolated: f64,
    /// Plug-in TV at `t = 0, 1, ...`.
    pub curve: Vec<f64>,
}

fn first_below(curve: &[f64], level: f64) -> Option<usize> {
    curve.iter().position(|&tv| tv <= level)
}

/// Run `trials` independent chains from `X_0 = n` (chain `i` on stream
/// `(seed, i)`) and track the TV of `|X_t|` to the law of `|S|`.
pub fn mixing_time<E: Executor>(
    params: ChainParams,
    settings: &MixingSettings,
    exec: &E,
) -> Result<MixingEstimate> {
    if !matches!(params.variant, Variant::Standard | Variant::ModifiedLargest) {
        return Err(param_err!(
            "mixing is measured on the standard or largest-modified chain"
        ));
    }
    if settings.trials == 0 || !(settings.threshold > 0.0 && settings.threshold < 1.0) {
        return Err(param_err!("need trials >= 1 and threshold in (0, 1)"));
    }
    let chain = MagnetizationChain::new(params)?;
    let target: LatticeLaw = exact_stationary(params.n, params.c)?.abs_law();
    let allowance = target.plug_in_allowance(settings.trials);
    let level = settings.threshold + allowance;

    let n = params.n as i64;
    let mut ensemble: Vec<(i64, RandomStream)> = (0..settings.trials)
        .map(|i| (n, RandomStream::new(settings.seed, i as u64)))
        .collect();
    let mut abs: Vec<i64> = alloc::vec![n; settings.trials];
    let mut curve = alloc::vec![tv_to_law(&abs, &target)?];
    // Run until the plain threshold is met, or for as long again as it took
    // to reach the bias-corrected level when the plain threshold sits below
    // the plug-in noise floor.
    let mut reached: Option<usize> = None;
    while curve.len() <= settings.horizon && *curve.last().expect("nonempty") > settings.threshold {
        if reached.is_none() && *curve.last().expect("nonempty") <= level {
            reached = Some(curve.len() - 1);
        }
        if reached.is_some_and(|t| curve.len() > 2 * t.max(2)) {
            break;
        }
        exec.for_each_mut(&mut ensemble, |_, (x, s)| {
            *x = chain
                .step(*x, s)
                .expect("ensemble states stay on the lattice");
        });
        for (a, (x, _)) in abs.iter_mut().zip(&ensemble) {
            *a = x.abs();
        }
        curve.push(tv_to_law(&abs, &target)?);
    }
    let Some(t_mix) = first_below(&curve, level) else {
        return Err(Error::Horizon {
            horizon: settings.horizon,
            partial: curve,
        });
    };
    let t_interpolated = if t_mix == 0 {
        0.0
    } else {
        let (before, after) = (curve[t_mix - 1], curve[t_mix]);
        (t_mix - 1) as f64 + (before - level) / (before - after)
    };
    Ok(MixingEstimate {
        n: params.n,
        c: params.c,
        trials: settings.trials,
        threshold: settings.threshold,
        allowance,
        t_mix,
        t_lower: first_below(&curve, level + allowance).unwrap_or(t_mix),
        t_upper: first_below(&curve, settings.threshold),
        t_interpolated,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn subcritical_mixes_quickly() {
        let params = ChainParams::new(256, 1.0, Variant::Standard).unwrap();
        let est = mixing_time(params, &MixingSettings::new(4000, 1), &Sequential).unwrap();
        assert!(est.t_mix <= 8);
        assert!(est.t_lower <= est.t_mix);
        assert!(est.t_upper.is_none_or(|t| t >= est.t_mix));
        assert!(est.curve[0] > 0.99);
        assert!(
            est.t_interpolated <= est.t_mix as f64 && est.t_interpolated > est.t_mix as f64 - 1.0
        );
    }

    #[test]
    fn horizon_exhaustion_returns_partial_curve() {
        let params = ChainParams::new(256, 2.0, Variant::Standard).unwrap();
        let mut settings = MixingSettings::new(500, 2);
        settings.horizon = 1;
        match mixing_time(params, &settings, &Sequential) {
            Err(Error::Horizon { horizon, partial }) => {
                assert_eq!(horizon, 1);
                assert_eq!(partial.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }
}
