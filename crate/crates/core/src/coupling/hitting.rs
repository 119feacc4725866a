//! Hitting and exit frequencies of the critical magnetization chain,
//! compared with their stated bounds.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::analysis::wilson_interval;
use crate::error::{param_err, Result};
use crate::exec::Executor;
use crate::magnetization::{round_to_lattice, ChainParams, MagnetizationChain, Variant};
use crate::stochastic::RandomStream;

/// Which hitting statistic to estimate. Lengths are in units of `n^(3/4)`
/// (`n^(2/3)` for the inner window), times in units of `n^(1/4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum HittingKind {
    /// `P(tau_a > b n^(1/4))` with `tau_a = min{t : X_t <= a n^(3/4)}` from
    /// `X_0 = start n^(3/4)`, against `sqrt(6 / (a b))`.
    TauA { a: f64, b: f64, start: f64 },
    /// `P(tau > t n^(1/4))` for entry into `[-A n^(2/3), A n^(2/3)]` from
    /// `X_0 = start n^(3/4)`; resolves `c` in `2 |X_0| / (c t sqrt(n))`.
    Pushdown { window: f64, start: f64, time: f64 },
    /// `P(X_t >= a n^(3/4) for some t <= k n^(1/4))` from `X_0 = 0`.
    Pushup { target: f64, time: f64 },
    /// Exit from `[b1/2, b2 + b1/2] n^(3/4)` by `delta n^(1/4)` from the
    /// middle of `[b1, b2] n^(3/4)`; resolves `C` in `C delta^2`.
    WindowStay { b1: f64, b2: f64, delta: f64 },
    /// `min_x P(X_k = x) n^(5/8)` over lattice `x` within `h n^(5/8)` of
    /// `X_0 = start n^(3/4)`.
    LocalClt { steps: usize, h: f64, start: f64 },
}

impl HittingKind {
    pub fn name(&self) -> &'static str {
        match self {
            HittingKind::TauA { .. } => "tau_a",
            HittingKind::Pushdown { .. } => "pushdown",
            HittingKind::Pushup { .. } => "pushup",
            HittingKind::WindowStay { .. } => "window_stay",
            HittingKind::LocalClt { .. } => "local_clt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HittingConfig {
    pub n: usize,
    pub c: f64,
    pub trials: usize,
    pub seed: u64,
    pub kind: HittingKind,
    /// Acceptance gate on the resolved constant, where the kind has one.
    pub gate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HittingSummary {
    pub kind: String,
    pub n: usize,
    pub trials: usize,
    /// Trials in which the event occurred.
    pub events: u64,
    /// Trials stopped by the horizon before the event could be decided.
    pub censored: u64,
    pub frequency: f64,
    pub standard_error: f64,
    /// 95% Wilson interval for `frequency`.
    pub interval: (f64, f64),
    /// The bound the frequency (or resolved constant) is compared with.
    pub bound: f64,
    pub resolved_constant: Option<f64>,
    pub pass: bool,
    pub details: BTreeMap<String, f64>,
}

fn lattice_start(n: usize, units: f64, exponent: f64) -> i64 {
    round_to_lattice(n, units * libm::pow(n as f64, exponent))
}

/// Turns a frequency and the run details into a resolved constant.
type ResolveConstant = fn(f64, &BTreeMap<String, f64>) -> Option<f64>;

/// Run `trials` chains (trial `i` on stream `(seed, i)`) for the requested
/// statistic.
pub fn hitting_experiment<E: Executor>(config: &HittingConfig, exec: &E) -> Result<HittingSummary> {
    let n = config.n;
    if config.trials < 2 {
        return Err(param_err!("need at least 2 trials"));
    }
    let nf = n as f64;
    let (q34, q14, q23, q58) = (
        libm::pow(nf, 0.75),
        libm::pow(nf, 0.25),
        libm::pow(nf, 2.0 / 3.0),
        libm::pow(nf, 0.625),
    );
    let trials = config.trials;
    let standard = MagnetizationChain::new(ChainParams::new(n, config.c, Variant::Standard)?)?;
    let modified =
        MagnetizationChain::new(ChainParams::new(n, config.c, Variant::ModifiedLargest)?)?;
    let stream = |i: usize| RandomStream::new(config.seed, i as u64);
    let mut details = BTreeMap::new();

    // Each run returns (event occurred, censored).
    let (outcomes, bound, resolve): (Vec<(bool, bool)>, f64, ResolveConstant) = match config.kind {
        HittingKind::TauA { a, b, start } => {
            let x0 = lattice_start(n, start, 0.75);
            if !(a > 0.0 && b > 0.0) || (x0 as f64) <= a * q34 {
                return Err(param_err!("tau_a needs a, b > 0 and X_0 > a n^(3/4)"));
            }
            let horizon = libm::floor(b * q14) as usize;
            details.insert("x0".to_string(), x0 as f64);
            details.insert("horizon".to_string(), horizon as f64);
            let level = a * q34;
            let runs = exec.map(trials, |i| {
                let mut s = stream(i);
                let mut x = x0;
                for _ in 0..horizon {
                    x = standard.step(x, &mut s).expect("lattice state");
                    if x as f64 <= level {
                        return (false, false);
                    }
                }
                (true, false)
            });
            (runs, libm::sqrt(6.0 / (a * b)), |_, _| None)
        }
        HittingKind::Pushdown {
            window,
            start,
            time,
        } => {
            let x0 = lattice_start(n, start, 0.75);
            let horizon = libm::floor(time * q14).max(1.0) as usize;
            let half = window * q23;
            details.insert("x0".to_string(), x0 as f64);
            details.insert("horizon".to_string(), horizon as f64);
            details.insert("window_half_width".to_string(), half);
            let runs = exec.map(trials, |i| {
                let mut s = stream(i);
                let mut x = x0;
                if (x as f64).abs() <= half {
                    return (false, false);
                }
                for _ in 0..horizon {
                    x = modified.step(x, &mut s).expect("lattice state");
                    if (x as f64).abs() <= half {
                        return (false, false);
                    }
                }
                (true, false)
            });
            // P(tau > t) <= 2|X_0| / (c t sqrt(n)) holds for c up to this value.
            (runs, 1.0, |f, d| {
                let t = d["horizon"];
                Some(2.0 * d["x0"].abs() / (f.max(f64::MIN_POSITIVE) * t * libm::sqrt(d["n"])))
            })
        }
        HittingKind::Pushup { target, time } => {
            let x0 = round_to_lattice(n, 0.0);
            let horizon = libm::floor(time * q14).max(1.0) as usize;
            let level = target * q34;
            details.insert("x0".to_string(), x0 as f64);
            details.insert("horizon".to_string(), horizon as f64);
            let runs = exec.map(trials, |i| {
                let mut s = stream(i);
                let mut x = x0;
                for _ in 0..horizon {
                    x = modified.step(x, &mut s).expect("lattice state");
                    if x as f64 >= level {
                        return (true, false);
                    }
                }
                (false, false)
            });
            (runs, 0.0, |f, _| Some(f))
        }
        HittingKind::WindowStay { b1, b2, delta } => {
            if !(b2 > b1 && b1 > 0.0 && delta > 0.0) {
                return Err(param_err!("window_stay needs b2 > b1 > 0 and delta > 0"));
            }
            let x0 = lattice_start(n, 0.5 * (b1 + b2), 0.75);
            let horizon = libm::floor(delta * q14).max(1.0) as usize;
            let (lo, hi) = (0.5 * b1 * q34, (b2 + 0.5 * b1) * q34);
            details.insert("x0".to_string(), x0 as f64);
            details.insert("horizon".to_string(), horizon as f64);
            details.insert("delta".to_string(), delta);
            let runs = exec.map(trials, |i| {
                let mut s = stream(i);
                let mut x = x0;
                for _ in 0..horizon {
                    x = standard.step(x, &mut s).expect("lattice state");
                    if (x as f64) < lo || (x as f64) > hi {
                        return (true, false);
                    }
                }
                (false, false)
            });
            (runs, 0.0, |f, d| Some(f / (d["delta"] * d["delta"])))
        }
        HittingKind::LocalClt { steps, h, start } => {
            return local_clt(config, &standard, steps, h, start, q58, exec);
        }
    };
    details.insert("n".to_string(), nf);
    let events = outcomes.iter().filter(|o| o.0).count() as u64;
    let censored = outcomes.iter().filter(|o| o.1).count() as u64;
    let frequency = events as f64 / trials as f64;
    let standard_error = libm::sqrt(frequency * (1.0 - frequency) / trials as f64);
    let resolved_constant = resolve(frequency, &details);
    let pass = match (config.kind, resolved_constant, config.gate) {
        (HittingKind::TauA { .. }, _, _) => frequency <= bound + 3.0 * standard_error,
        (HittingKind::WindowStay { .. }, Some(c), Some(gate)) => c <= gate,
        (HittingKind::Pushup { .. }, Some(q), gate) => q >= gate.unwrap_or(f64::MIN_POSITIVE),
        (HittingKind::Pushdown { .. }, Some(c), gate) => c >= gate.unwrap_or(f64::MIN_POSITIVE),
        (_, Some(c), None) => c.is_finite(),
        _ => true,
    };
    Ok(HittingSummary {
        kind: config.kind.name().to_string(),
        n,
        trials,
        events,
        censored,
        frequency,
        standard_error,
        interval: wilson_interval(events, trials as u64, 1.96),
        bound: match config.kind {
            HittingKind::TauA { .. } => bound,
            _ => config.gate.unwrap_or(f64::NAN),
        },
        resolved_constant,
        pass,
        details,
    })
}

fn local_clt<E: Executor>(
    config: &HittingConfig,
    chain: &MagnetizationChain,
    steps: usize,
    h: f64,
    start: f64,
    q58: f64,
    exec: &E,
) -> Result<HittingSummary> {
    let n = config.n;
    if steps == 0 || !(h > 0.0) {
        return Err(param_err!("local_clt needs steps >= 1 and h > 0"));
    }
    let x0 = lattice_start(n, start, 0.75);
    let finals = exec.map(config.trials, |i| {
        let mut s = RandomStream::new(config.seed, i as u64);
        let mut x = x0;
        for _ in 0..steps {
            x = chain.step(x, &mut s).expect("lattice state");
        }
        x
    });
    let reach = libm::floor(h * q58) as i64;
    let targets: Vec<i64> = (x0 - reach..=x0 + reach)
        .filter(|&x| x >= 0 && (x - x0) % 2 == 0)
        .collect();
    let (mut worst, mut worst_at) = (u64::MAX, x0);
    for &x in &targets {
        let hits = finals.iter().filter(|&&v| v == x).count() as u64;
        if hits < worst {
            worst = hits;
            worst_at = x;
        }
    }
    let trials = config.trials as f64;
    let frequency = worst as f64 / trials;
    let scaled = frequency * q58;
    let gate = config.gate.unwrap_or(0.01);
    let mut details = BTreeMap::new();
    details.insert("x0".to_string(), x0 as f64);
    details.insert("steps".to_string(), steps as f64);
    details.insert("targets".to_string(), targets.len() as f64);
    details.insert("worst_target".to_string(), worst_at as f64);
    details.insert("n".to_string(), n as f64);
    Ok(HittingSummary {
        kind: "local_clt".to_string(),
        n,
        trials: config.trials,
        events: worst,
        censored: 0,
        frequency,
        standard_error: libm::sqrt(frequency * (1.0 - frequency) / trials),
        interval: wilson_interval(worst, config.trials as u64, 1.96),
        bound: gate,
        resolved_constant: Some(scaled),
        pass: scaled >= gate,
        details,
    })
}
