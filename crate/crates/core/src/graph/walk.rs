//! Walks `W_t = W_{t-1} + beta_t - 1` with i.i.d. Binomial(m, p) increments
//! `beta_t`, the comparison process for the exploration walk.
//!
//! Increments are bounded below by `-1`, so from height `w` the walk cannot
//! reach any level below `w - k` within `k` steps. The horizon-bounded
//! estimators use this to advance `k` steps at once with a single
//! Binomial(`m k`, p) draw whenever no event of interest can occur inside the
//! block; the resulting law is exactly that of the step-by-step walk.

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::exec::Executor;
use crate::stochastic::{check_probability, RandomStream};

/// A recorded walk trajectory, stopped at the first visit to zero.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WalkTrace {
    /// `W_0..W_T`.
    pub w: Vec<i64>,
    /// First `t >= 1` with `W_t = 0`.
    pub hitting_time: Option<usize>,
    /// Number of record minima among `W_0..W_T` (time 0 counts).
    pub record_minima_count: usize,
    /// Time of the last record minimum.
    pub last_record_minimum: usize,
}

impl WalkTrace {
    /// Neither hit zero nor ran out of horizon cannot happen; a trace without
    /// a hitting time is censored at the horizon.
    pub fn censored(&self) -> bool {
        self.hitting_time.is_none()
    }
}

/// Outcome of a walk observed up to a horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WalkFate {
    Hit(usize),
    Censored,
}

/// Record-minimum statistics of an unstopped walk over a horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecordMinima {
    pub count: usize,
    pub last: usize,
    pub lowest: i64,
}

fn check_walk(m: u64, p: f64, horizon: usize) -> Result<()> {
    check_probability(p)?;
    if horizon == 0 {
        return Err(param_err!("walk horizon must be positive"));
    }
    if m == 0 {
        return Err(param_err!("walk increments need m >= 1"));
    }
    Ok(())
}

/// Record the walk step by step until it hits zero or exhausts `horizon`.
pub fn iid_walk(
    m: u64,
    p: f64,
    start: i64,
    horizon: usize,
    stream: &mut RandomStream,
) -> Result<WalkTrace> {
    check_walk(m, p, horizon)?;
    let mut w = Vec::with_capacity(horizon.min(1 << 16) + 1);
    w.push(start);
    let (mut low, mut count, mut last) = (start, 1, 0);
    let mut hitting_time = None;
    for t in 1..=horizon {
        let next = w[t - 1] + stream.binomial_unchecked(m, p) as i64 - 1;
        w.push(next);
        if next < low {
            low = next;
            count += 1;
            last = t;
        }
        if next == 0 {
            hitting_time = Some(t);
            break;
        }
    }
    Ok(WalkTrace {
        w,
        hitting_time,
        record_minima_count: count,
        last_record_minimum: last,
    })
}

/// First hitting time of zero within `horizon`, advancing in exact blocks
/// while the walk is too high to reach zero.
pub fn walk_fate(
    m: u64,
    p: f64,
    start: i64,
    horizon: usize,
    stream: &mut RandomStream,
) -> Result<WalkFate> {
    check_walk(m, p, horizon)?;
    if start <= 0 {
        return Err(param_err!("walk must start above zero, got {start}"));
    }
    let (mut w, mut t) = (start, 0usize);
    while t < horizon {
        // Levels visited in the next k steps are at least w - k >= 1.
        let k = ((w - 1) as usize).clamp(1, horizon - t);
        w += stream.binomial_unchecked(m * k as u64, p) as i64 - k as i64;
        t += k;
        if w == 0 {
            return Ok(WalkFate::Hit(t));
        }
    }
    Ok(WalkFate::Censored)
}

/// Count record minima of the unstopped walk over `horizon` steps.
pub fn record_minima(
    m: u64,
    p: f64,
    start: i64,
    horizon: usize,
    stream: &mut RandomStream,
) -> Result<RecordMinima> {
    check_walk(m, p, horizon)?;
    let (mut w, mut t) = (start, 0usize);
    let mut rec = RecordMinima {
        count: 1,
        last: 0,
        lowest: start,
    };
    while t < horizon {
        // No new record while every level stays at or above the current low.
        let k = ((w - rec.lowest) as usize).clamp(1, horizon - t);
        w += stream.binomial_unchecked(m * k as u64, p) as i64 - k as i64;
        t += k;
        if w < rec.lowest {
            debug_assert_eq!(k, 1);
            rec.lowest = w;
            rec.count += 1;
            rec.last = t;
        }
    }
    Ok(rec)
}

/// Fraction of walks from `W_0 = 1` that avoid zero up to the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurvivalEstimate {
    pub walks: usize,
    pub horizon: usize,
    /// Walks that hit zero.
    pub hits: u64,
    /// Walks still alive at the horizon.
    pub censored: u64,
    pub fraction: f64,
    pub standard_error: f64,
}

/// Run `walks` walks with Binomial(`m`, `(1 + eps) / m`) increments from 1;
/// walk `i` uses stream `(seed, i)`.
pub fn survival_experiment<E: Executor>(
    m: u64,
    eps: f64,
    walks: usize,
    horizon: usize,
    seed: u64,
    exec: &E,
) -> Result<SurvivalEstimate> {
    let p = (1.0 + eps) / m as f64;
    check_walk(m, p, horizon)?;
    if walks == 0 {
        return Err(param_err!("need at least one walk"));
    }
    let fates = exec.map(walks, |i| {
        let mut s = RandomStream::new(seed, i as u64);
        walk_fate(m, p, 1, horizon, &mut s).expect("validated walk")
    });
    let censored = fates
        .iter()
        .filter(|f| matches!(f, WalkFate::Censored))
        .count() as u64;
    let fraction = censored as f64 / walks as f64;
    Ok(SurvivalEstimate {
        walks,
        horizon,
        hits: walks as u64 - censored,
        censored,
        fraction,
        standard_error: libm::sqrt(fraction * (1.0 - fraction) / walks as f64),
    })
}

/// Largest `m * t_max` accepted by [`hitting_time_exact`].
pub const HITTING_DP_GUARD: u64 = 1_000_000;

fn binomial_pmf_vec(m: u64, p: f64) -> Vec<f64> {
    let m = m as usize;
    let mut pmf = alloc::vec![0.0; m + 1];
    if p == 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p == 1.0 {
        pmf[m] = 1.0;
        return pmf;
    }
    for (k, slot) in pmf.iter_mut().enumerate() {
        *slot = libm::exp(ln_binomial_pmf(m as u64, k as u64, p));
    }
    pmf
}

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

pub(crate) fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_choose(n, k) + k as f64 * libm::log(p) + (n - k) as f64 * libm::log1p(-p)
}

/// `P(tau = t)` for `t = 1..=t_max`, by forward dynamic programming over walk
/// heights with zero absorbing.
pub fn hitting_time_exact(m: u64, p: f64, t_max: usize) -> Result<Vec<f64>> {
    check_probability(p)?;
    if m == 0 || t_max == 0 {
        return Err(param_err!("need m >= 1 and t_max >= 1"));
    }
    if m.saturating_mul(t_max as u64) > HITTING_DP_GUARD {
        return Err(Error::Capacity(alloc::format!(
            "m * t_max = {} exceeds {HITTING_DP_GUARD} walk states",
            m.saturating_mul(t_max as u64)
        )));
    }
    let pmf = binomial_pmf_vec(m, p);
    // Heights above 1 + (m - 1) t_max are unreachable.
    let ceiling = 1 + (m as usize - 1) * t_max;
    let mut dist = alloc::vec![0.0; ceiling + m as usize + 1];
    let mut next = dist.clone();
    dist[1] = 1.0;
    let mut top = 1usize;
    let mut hits = Vec::with_capacity(t_max);
    let mut absorbed = 0.0;
    for _ in 0..t_max {
        next[..=top + m as usize].iter_mut().for_each(|x| *x = 0.0);
        for h in 1..=top {
            let mass = dist[h];
            if mass == 0.0 {
                continue;
            }
            for (k, &q) in pmf.iter().enumerate() {
                next[h + k - 1] += mass * q;
            }
        }
        top = (top + m as usize - 1).min(ceiling);
        hits.push(next[0]);
        absorbed += next[0];
        next[0] = 0.0;
        core::mem::swap(&mut dist, &mut next);
    }
    let alive: f64 = dist[..=top].iter().sum();
    if (alive + absorbed - 1.0).abs() > 1e-12 {
        return Err(Error::Data(alloc::format!(
            "walk mass not conserved: {}",
            alive + absorbed
        )));
    }
    Ok(hits)
}

/// `P(tau = t) = P(W_t = 0) / t`, the cyclic-shift identity for walks with
/// increments at least `-1`, where `W_t = 1 + Bin(m t, p) - t` unstopped.
pub fn hitting_time_spitzer(m: u64, p: f64, t_max: usize) -> Result<Vec<f64>> {
    check_probability(p)?;
    Ok((1..=t_max as u64)
        .map(|t| {
            let trials = m * t;
            let k = t - 1;
            let at_zero = if p == 0.0 {
                (k == 0) as u8 as f64
            } else if p == 1.0 {
                (k == trials) as u8 as f64
            } else {
                libm::exp(ln_binomial_pmf(trials, k, p))
            };
            at_zero / t as f64
        })
        .collect())
}
