//! One function per experiment: resolve typed parameters, run, and collect
//! statistics and tables.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use swcluster_core::analysis::{
    beta, gamma0, ks_discrete_vs_cdf, limit_cdf, moment_battery, phi, wilson_interval,
    MomentSettings, RecordStatus, RunningStats,
};
use swcluster_core::coupling::{
    couple_supercritical, couple_two_dim, critical_drift, crossing_experiment, exact_stationary,
    hitting_experiment, level_crossing, mixing_time, shoot_frequency, subcritical_contraction,
    supercritical_contraction, tv_to_law, window_drift, CrossingOutcome, HittingConfig,
    HittingKind, MixingSettings,
};
use swcluster_core::exec::Executor;
use swcluster_core::graph::{
    approximate, explore, survival_experiment, ComponentSampler, GraphSpec,
};
use swcluster_core::magnetization::{
    round_to_lattice, ChainParams, MagnetizationChain, TwoDimState, Variant, DEFAULT_DELTA,
};
use swcluster_core::stochastic::RandomStream;
use swcluster_core::sw::{
    evenly_spaced_edges, exact_transition_matrix, gibbs_vector, ising_beta, stationarity_residual,
    tracked_edge_tv, tree_mix_bound, SpinConfig, TreeSpec,
};
use swcluster_core::Error;

use crate::config::{resolve, CliError, Outcome, Table};

pub const EXPERIMENTS: [&str; 14] = [
    "mix",
    "stationary",
    "giant",
    "exploration",
    "couple",
    "crossing",
    "hitting",
    "tree-mix",
    "exact-check",
    "moments",
    "fixed-points",
    "drift",
    "survival",
    "trajectory",
];

/// Resolve parameters for `name` and run it.
pub fn run<E: Executor>(
    name: &str,
    file: &Map<String, Value>,
    flags: &Map<String, Value>,
    seed: u64,
    exec: &E,
) -> Result<Outcome, CliError> {
    macro_rules! go {
        ($f:ident) => {{
            let p = resolve(file, flags)?;
            let mut out = $f(&p, seed, exec)?;
            out.params = serde_json::to_value(&p)?;
            Ok(out)
        }};
    }
    match name {
        "mix" => go!(mix),
        "stationary" => go!(stationary),
        "giant" => go!(giant),
        "exploration" => go!(exploration),
        "couple" => go!(couple),
        "crossing" => go!(crossing),
        "hitting" => go!(hitting),
        "tree-mix" => go!(tree_mix),
        "exact-check" => go!(exact_check),
        "moments" => go!(moments),
        "fixed-points" => go!(fixed_points),
        "drift" => go!(drift),
        "survival" => go!(survival),
        "trajectory" => go!(trajectory),
        other => Err(CliError::Usage(format!(
            "unknown experiment `{other}`; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn one_dim_variant(name: &str, delta: f64) -> Result<Variant, CliError> {
    match name {
        "standard" => Ok(Variant::Standard),
        "modified_largest" => Ok(Variant::ModifiedLargest),
        "modified_delta" => Ok(Variant::ModifiedDelta { delta }),
        other => Err(usage(format!(
            "variant `{other}`; expected standard, modified_largest or modified_delta"
        ))),
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn mean_interval(s: &RunningStats) -> (f64, f64) {
    let h = 1.96 * s.standard_error();
    (s.mean - h, s.mean + h)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixParams {
    pub n: usize,
    pub c: f64,
    pub trials: usize,
    pub horizon: usize,
    pub threshold: f64,
    pub variant: String,
}

impl Default for MixParams {
    fn default() -> Self {
        MixParams {
            n: 1024,
            c: 2.0,
            trials: 20_000,
            horizon: 10_000,
            threshold: 0.25,
            variant: "standard".into(),
        }
    }
}

fn mix<E: Executor>(p: &MixParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let params = ChainParams::new(p.n, p.c, one_dim_variant(&p.variant, DEFAULT_DELTA)?)?;
    let settings = MixingSettings {
        threshold: p.threshold,
        trials: p.trials,
        horizon: p.horizon,
        seed,
    };
    let mut out = Outcome::default();
    let mut table = Table::new("tv", &["t", "tv", "tv_bias_allowance"]);
    let allowance = exact_stationary(p.n, p.c)?
        .abs_law()
        .plug_in_allowance(p.trials);
    match mixing_time(params, &settings, exec) {
        Ok(est) => {
            for (t, tv) in est.curve.iter().enumerate() {
                table.push([t.to_string(), tv.to_string(), est.allowance.to_string()]);
            }
            out.stat("t_mix", est.t_mix);
            out.stat("t_lower", est.t_lower);
            out.stat("t_upper", est.t_upper);
            out.stat("t_interpolated", est.t_interpolated);
            out.stat("tv_at_t_mix", est.curve[est.t_mix]);
            out.stat("steps_run", est.curve.len() - 1);
            out.constant("allowance", est.allowance);
            out.interval(
                "t_mix",
                (
                    est.t_lower as f64,
                    est.t_upper.map_or(f64::NAN, |t| t as f64),
                ),
            );
            out.gates.insert("mixed_within_horizon".into(), true);
        }
        Err(Error::Horizon { horizon, partial }) => {
            for (t, tv) in partial.iter().enumerate() {
                table.push([t.to_string(), tv.to_string(), allowance.to_string()]);
            }
            out.stat("t_mix", Value::Null);
            out.stat("steps_run", horizon);
            out.constant("allowance", allowance);
            out.gates.insert("mixed_within_horizon".into(), false);
        }
        Err(e) => return Err(e.into()),
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryParams {
    pub n: usize,
    pub c: f64,
    /// Exact draws pushed through one chain step; 0 skips the check.
    pub trials: usize,
    pub variant: String,
}

impl Default for StationaryParams {
    fn default() -> Self {
        StationaryParams {
            n: 256,
            c: 2.0,
            trials: 100_000,
            variant: "modified_largest".into(),
        }
    }
}

fn stationary<E: Executor>(p: &StationaryParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let law = exact_stationary(p.n, p.c)?;
    let abs = law.abs_law();
    let scale = (p.n as f64).powf(0.75);
    let scaled: Vec<f64> = abs.values().iter().map(|&v| v as f64 / scale).collect();
    let ks = ks_discrete_vs_cdf(&scaled, abs.probs(), limit_cdf)?;
    let mut out = Outcome::default();
    out.stat("ks_to_limit", ks);
    out.stat("mean_abs_scaled", abs.mean() / scale);
    out.constant("beta", law.beta());
    let mut table = Table::new("law", &["s", "prob", "scaled", "cdf", "limit_cdf"]);
    for (&s, &q) in abs.values().iter().zip(abs.probs()) {
        let x = s as f64 / scale;
        table.push([
            s.to_string(),
            q.to_string(),
            x.to_string(),
            abs.cdf(s).to_string(),
            limit_cdf(x).to_string(),
        ]);
    }
    out.tables.push(table);
    if p.trials > 0 {
        let chain = MagnetizationChain::new(ChainParams::new(
            p.n,
            p.c,
            one_dim_variant(&p.variant, DEFAULT_DELTA)?,
        )?)?;
        let signed = law.law().clone();
        let draws = exec.map(p.trials, |i| {
            let mut s = RandomStream::new(seed, i as u64);
            let mut x = signed.sample(&mut s);
            if matches!(chain.params().variant, Variant::Standard) {
                x = x.abs();
            }
            chain.step(x, &mut s).map(i64::abs)
        });
        let draws: Vec<i64> = draws.into_iter().collect::<Result<_, _>>()?;
        out.stat("fixed_point_tv", tv_to_law(&draws, &abs)?);
        out.constant("allowance", abs.plug_in_allowance(p.trials));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GiantParams {
    pub m: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub levels: Vec<f64>,
}

impl Default for GiantParams {
    fn default() -> Self {
        GiantParams {
            m: 100_000,
            epsilon: 0.05,
            trials: 500,
            levels: vec![2.0, 3.0, 4.0],
        }
    }
}

fn giant<E: Executor>(p: &GiantParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let mf = p.m as f64;
    let sampler = ComponentSampler::with_probability((1.0 + p.epsilon) / mf, p.m)?;
    if p.trials < 2 {
        return Err(usage("giant needs at least 2 trials"));
    }
    let largest = exec.map(p.trials, |i| {
        sampler
            .sizes(p.m, &mut RandomStream::new(seed, i as u64))
            .largest()
    });
    let stats: RunningStats = largest.iter().map(|&l| l as f64).collect();
    let mut out = Outcome::default();
    let prediction = 2.0 * p.epsilon * mf - 8.0 / 3.0 * p.epsilon * p.epsilon * mf;
    out.stat("mean_largest", stats.mean);
    out.stat("standard_error", stats.standard_error());
    out.stat("prediction", prediction);
    out.stat("eps3_m", p.epsilon.powi(3) * mf);
    out.interval("mean_largest", mean_interval(&stats));
    let scale = (mf / p.epsilon).sqrt();
    let centre = 2.0 * p.epsilon * mf;
    for &a in &p.levels {
        let hits = largest
            .iter()
            .filter(|&&l| (l as f64 - centre).abs() > a * scale)
            .count() as u64;
        let key = format!("deviation_freq_a{a}");
        out.stat(&key, hits as f64 / p.trials as f64);
        out.interval(&key, wilson_interval(hits, p.trials as u64, 1.96));
    }
    let mut table = Table::new("largest", &["trial", "largest"]);
    for (i, l) in largest.iter().enumerate() {
        table.push([i, *l]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationParams {
    pub m: usize,
    /// Edge probability is `c / m`.
    pub c: f64,
    pub trials: usize,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        ExplorationParams {
            m: 1000,
            c: 1.3,
            trials: 100,
        }
    }
}

fn exploration<E: Executor>(
    p: &ExplorationParams,
    seed: u64,
    exec: &E,
) -> Result<Outcome, CliError> {
    let spec = GraphSpec::new(p.m, p.c / p.m as f64)?;
    if p.trials == 0 {
        return Err(usage("exploration needs at least one trial"));
    }
    let runs = exec.map(p.trials, |i| {
        let trace = explore(spec, &mut RandomStream::new(seed, i as u64));
        let approx = approximate(&trace, spec.p);
        let sizes = trace.component_sizes();
        (
            trace.check_invariants().is_ok(),
            approx.bound_holds(&trace),
            approx.bound_excess(&trace),
            sizes.len(),
            sizes.largest(),
        )
    });
    let identity_failures = runs.iter().filter(|r| !r.0).count();
    let bound_violations = runs.iter().filter(|r| !r.1).count();
    let mut out = Outcome::default();
    out.stat("identity_failures", identity_failures);
    out.stat("bound_violations", bound_violations);
    out.stat(
        "max_bound_excess",
        runs.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
    );
    let comps: RunningStats = runs.iter().map(|r| r.3 as f64).collect();
    let large: RunningStats = runs.iter().map(|r| r.4 as f64).collect();
    out.stat("mean_components", comps.mean);
    out.stat("mean_largest", large.mean);
    out.interval("mean_largest", mean_interval(&large));
    out.gates
        .insert("identities".into(), identity_failures == 0);
    out.gates
        .insert("approximation_bound".into(), bound_violations == 0);

    let trace = explore(spec, &mut RandomStream::new(seed, 0));
    let mut table = Table::new("trace", &["t", "eta", "A", "N", "Y", "Z"]);
    table.push([
        0,
        0,
        trace.active()[0] as i64,
        trace.neutral()[0] as i64,
        trace.y()[0],
        0,
    ]);
    for t in 1..=p.m {
        table.push([
            t as i64,
            trace.eta()[t - 1] as i64,
            trace.active()[t] as i64,
            trace.neutral()[t] as i64,
            trace.y()[t],
            trace.z()[t - 1] as i64,
        ]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleParams {
    pub n: usize,
    pub c: f64,
    /// Starting magnetizations for `c > 2`; default `gamma0 n -+ sqrt(n)/2`.
    pub x: Option<i64>,
    pub y: Option<i64>,
    /// Two-block starts for `c < 2` as `[y, z]`; default all plus and all
    /// minus, blocks of size `n/2` and `n - n/2`.
    pub a: Option<[usize; 2]>,
    pub b: Option<[usize; 2]>,
    pub trials: usize,
    pub steps: usize,
}

impl Default for CoupleParams {
    fn default() -> Self {
        CoupleParams {
            n: 10_000,
            c: 3.0,
            x: None,
            y: None,
            a: None,
            b: None,
            trials: 2000,
            steps: 1,
        }
    }
}

fn couple<E: Executor>(p: &CoupleParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    if p.steps == 0 || p.trials == 0 {
        return Err(usage("couple needs steps >= 1 and trials >= 1"));
    }
    let n = p.n;
    let streams = |i: usize| {
        let base = 3 * i as u64;
        (
            RandomStream::new(seed, base),
            RandomStream::new(seed, base + 1),
            RandomStream::new(seed, base + 2),
        )
    };
    let mut out = Outcome::default();
    // Per trial: first step at which the chains agree, if any.
    let meets: Vec<Result<(Option<usize>, bool), Error>> = if p.c > 2.0 {
        let chain = MagnetizationChain::new(ChainParams::new(n, p.c, Variant::Standard)?)?;
        let centre = gamma0(p.c)?.value * n as f64;
        let half = (n as f64).sqrt() / 2.0;
        let x0 = p.x.unwrap_or_else(|| round_to_lattice(n, centre - half));
        let y0 = p.y.unwrap_or_else(|| round_to_lattice(n, centre + half));
        out.constant("gamma0", centre / n as f64);
        out.stat("x0", x0);
        out.stat("y0", y0);
        exec.map(p.trials, |i| {
            let (mut sx, mut sy, mut sc) = streams(i);
            let (mut x, mut y) = (x0, y0);
            let mut shortfall = false;
            for t in 1..=p.steps {
                let o = couple_supercritical(x, y, &chain, &mut sx, &mut sy, &mut sc)?;
                shortfall |= o.diagnostics["shortfall"] > 0.0;
                if o.met {
                    return Ok((Some(t), shortfall));
                }
                (x, y) = (o.x, o.y);
            }
            Ok((None, shortfall))
        })
    } else if p.c < 2.0 {
        let chain = MagnetizationChain::new(ChainParams::new(n, p.c, Variant::TwoDim)?)?;
        let (g1, g2) = (n / 2, n - n / 2);
        let a0 = p.a.unwrap_or([g1, g2]);
        let b0 = p.b.unwrap_or([0, 0]);
        let a0 = TwoDimState::new(a0[0], a0[1], g1, g2)?;
        let b0 = TwoDimState::new(b0[0], b0[1], g1, g2)?;
        out.stat("a0", json!([a0.y, a0.z]));
        out.stat("b0", json!([b0.y, b0.z]));
        exec.map(p.trials, |i| {
            let (mut sa, mut sb, mut sc) = streams(i);
            let (mut a, mut b) = (a0, b0);
            let mut shortfall = false;
            for t in 1..=p.steps {
                let o = couple_two_dim(a, b, &chain, &mut sa, &mut sb, &mut sc)?;
                shortfall |= o.diagnostics["shortfall"] > 0.0;
                if o.met {
                    return Ok((Some(t), shortfall));
                }
                (a, b) = (o.x, o.y);
            }
            Ok((None, shortfall))
        })
    } else {
        return Err(usage(
            "couple needs c > 2 (one-dimensional) or c < 2 (two-block)",
        ));
    };
    let meets: Vec<(Option<usize>, bool)> = meets.into_iter().collect::<Result<_, _>>()?;
    let trials = p.trials as u64;
    let mut table = Table::new("met", &["t", "met_fraction"]);
    for t in 1..=p.steps {
        let met = meets.iter().filter(|m| m.0.is_some_and(|s| s <= t)).count() as u64;
        table.push([t.to_string(), (met as f64 / trials as f64).to_string()]);
    }
    let met = meets.iter().filter(|m| m.0.is_some()).count() as u64;
    out.stat("met_fraction", met as f64 / trials as f64);
    out.interval("met_fraction", wilson_interval(met, trials, 1.96));
    out.stat("shortfall_trials", meets.iter().filter(|m| m.1).count());
    let times: RunningStats = meets.iter().filter_map(|m| m.0.map(|t| t as f64)).collect();
    out.stat(
        "mean_meeting_step",
        finite(if met > 0 { times.mean } else { f64::NAN }),
    );
    out.constant("success_probability", met as f64 / trials as f64);
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingParams {
    pub n: usize,
    pub c: f64,
    /// Default `n`.
    pub x0: Option<i64>,
    pub trials: usize,
    /// Horizon in units of `n^(1/4)`.
    pub horizon_k: f64,
    /// Pre-crossing states must lie in `[n^(3/4)/a, a n^(3/4)]`.
    pub a: f64,
    /// Overshoot allowance in units of `n^(5/8)`.
    pub h: f64,
    pub variant: String,
}

impl Default for CrossingParams {
    fn default() -> Self {
        CrossingParams {
            n: 4096,
            c: 2.0,
            x0: None,
            trials: 1000,
            horizon_k: 20.0,
            a: 10.0,
            h: 10.0,
            variant: "modified_largest".into(),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn crossing<E: Executor>(p: &CrossingParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let chain = MagnetizationChain::new(ChainParams::new(
        p.n,
        p.c,
        one_dim_variant(&p.variant, DEFAULT_DELTA)?,
    )?)?;
    let nf = p.n as f64;
    let horizon = (p.horizon_k * nf.powf(0.25)).ceil() as usize;
    let x0 = p.x0.unwrap_or(p.n as i64);
    let law = exact_stationary(p.n, p.c)?;
    let outcomes = crossing_experiment(x0, &law, &chain, p.trials, horizon, seed, exec)?;
    let mut out = Outcome::default();
    let shoot = shoot_frequency(&outcomes, p.n, p.horizon_k, p.a, p.h);
    let crossed: Vec<_> = outcomes
        .iter()
        .filter_map(|o| match o {
            CrossingOutcome::Crossed(r) => Some(*r),
            CrossingOutcome::Censored { .. } => None,
        })
        .collect();
    out.stat("horizon", horizon);
    out.stat("shoot_frequency", shoot);
    out.interval(
        "shoot_frequency",
        wilson_interval(
            (shoot * p.trials as f64).round() as u64,
            p.trials as u64,
            1.96,
        ),
    );
    out.stat("crossed", crossed.len());
    out.stat("censored", p.trials - crossed.len());
    let scale = nf.powf(0.625);
    out.stat(
        "median_overshoot_scaled",
        finite(median(
            crossed
                .iter()
                .map(|r| r.gap_before.unsigned_abs() as f64 / scale)
                .collect(),
        )),
    );
    out.stat(
        "median_tau",
        finite(median(crossed.iter().map(|r| r.tau as f64).collect())),
    );
    out.constant("delta", shoot);
    let mut table = Table::new(
        "crossings",
        &[
            "trial",
            "tau",
            "x_before",
            "y_before",
            "gap_before",
            "censored",
        ],
    );
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            CrossingOutcome::Crossed(r) => table.push([
                i.to_string(),
                r.tau.to_string(),
                r.x_before.to_string(),
                r.y_before.to_string(),
                r.gap_before.to_string(),
                "false".into(),
            ]),
            CrossingOutcome::Censored { horizon, x, y } => table.push([
                i.to_string(),
                String::new(),
                x.to_string(),
                y.to_string(),
                (x - y).to_string(),
                format!("true (horizon {horizon})"),
            ]),
        }
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HittingParams {
    pub n: usize,
    pub c: f64,
    pub trials: usize,
    /// tau_a, pushdown, pushup, window_stay or local_clt.
    pub kind: String,
    pub a: f64,
    pub b: f64,
    pub start: f64,
    pub window: f64,
    pub time: f64,
    pub target: f64,
    pub b1: f64,
    pub b2: f64,
    pub delta: f64,
    pub steps: usize,
    pub h: f64,
    pub gate: Option<f64>,
}

impl Default for HittingParams {
    fn default() -> Self {
        HittingParams {
            n: 4096,
            c: 2.0,
            trials: 2000,
            kind: "tau_a".into(),
            a: 1.0,
            b: 24.0,
            start: 3.0,
            window: 10.0,
            time: 4.0,
            target: 0.5,
            b1: 1.0,
            b2: 2.0,
            delta: 0.2,
            steps: 1,
            h: 0.5,
            gate: None,
        }
    }
}

fn hitting<E: Executor>(p: &HittingParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let kind = match p.kind.as_str() {
        "tau_a" => HittingKind::TauA {
            a: p.a,
            b: p.b,
            start: p.start,
        },
        "pushdown" => HittingKind::Pushdown {
            window: p.window,
            start: p.start,
            time: p.time,
        },
        "pushup" => HittingKind::Pushup {
            target: p.target,
            time: p.time,
        },
        "window_stay" => HittingKind::WindowStay {
            b1: p.b1,
            b2: p.b2,
            delta: p.delta,
        },
        "local_clt" => HittingKind::LocalClt {
            steps: p.steps,
            h: p.h,
            start: p.start,
        },
        other => {
            return Err(usage(format!(
                "kind `{other}`; expected tau_a, pushdown, pushup, window_stay or local_clt"
            )))
        }
    };
    let config = HittingConfig {
        n: p.n,
        c: p.c,
        trials: p.trials,
        seed,
        kind,
        gate: p.gate,
    };
    let s = hitting_experiment(&config, exec)?;
    let mut out = Outcome::default();
    out.stat("frequency", s.frequency);
    out.stat("standard_error", s.standard_error);
    out.stat("events", s.events);
    out.stat("censored", s.censored);
    out.stat("bound", finite(s.bound));
    out.stat("pass", s.pass);
    for (k, v) in &s.details {
        out.stat(k, finite(*v));
    }
    out.interval("frequency", s.interval);
    if let Some(c) = s.resolved_constant {
        out.constant("constant", finite(c));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeMixParams {
    pub n: usize,
    pub p: f64,
    pub q: u32,
    /// `path` or `random`.
    pub tree: String,
    /// Default: the path-coupling bound.
    pub steps: Option<u64>,
    pub tracked: usize,
    pub trials: usize,
}

impl Default for TreeMixParams {
    fn default() -> Self {
        TreeMixParams {
            n: 1024,
            p: 0.5,
            q: 2,
            tree: "path".into(),
            steps: None,
            tracked: 8,
            trials: 20_000,
        }
    }
}

fn tree_mix<E: Executor>(p: &TreeMixParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let tree = match p.tree.as_str() {
        "path" => TreeSpec::path(p.n, p.q, p.p)?,
        // The tree shape draws from the stream just past the trial range.
        "random" => {
            TreeSpec::random_recursive(p.n, p.q, p.p, &mut RandomStream::new(seed, u64::MAX))?
        }
        other => return Err(usage(format!("tree `{other}`; expected path or random"))),
    };
    let bound = tree_mix_bound(p.n, p.p, p.q)?;
    let steps = p.steps.unwrap_or(bound);
    let tracked = evenly_spaced_edges(&tree, p.tracked);
    let r = tracked_edge_tv(&tree, steps, &tracked, p.trials, seed, exec)?;
    let mut out = Outcome::default();
    out.stat("steps", steps);
    out.stat("tv", r.tv);
    out.stat("exact_marginal_tv", r.exact_tv);
    out.stat("tracked_edges", json!(r.tracked));
    out.stat("within_quarter", r.tv <= 0.25);
    out.constant("mix_bound", bound as f64);
    out.constant("allowance", r.allowance);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactParams {
    pub n: usize,
    pub p: f64,
    pub tolerance: f64,
}

impl Default for ExactParams {
    fn default() -> Self {
        ExactParams {
            n: 3,
            p: 0.4,
            tolerance: 1e-10,
        }
    }
}

fn exact_check<E: Executor>(p: &ExactParams, _seed: u64, _exec: &E) -> Result<Outcome, CliError> {
    let beta = ising_beta(p.p)?;
    let pi = gibbs_vector(p.n, beta)?;
    let matrix = exact_transition_matrix(p.n, p.p)?;
    let residual = stationarity_residual(&pi, &matrix);
    let mut out = Outcome::default();
    out.stat("residual", residual);
    out.stat("states", pi.len());
    out.constant("beta", beta);
    out.gates
        .insert("stationarity".into(), residual <= p.tolerance);
    let mut table = Table::new("gibbs", &["index", "magnetization", "pi"]);
    for (i, w) in pi.iter().enumerate() {
        let m = SpinConfig::from_index(p.n, i).magnetization();
        table.push([i.to_string(), m.to_string(), w.to_string()]);
    }
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsParams {
    pub m: usize,
    pub epsilon: f64,
    pub trials: usize,
}

impl Default for MomentsParams {
    fn default() -> Self {
        MomentsParams {
            m: 100_000,
            epsilon: 0.05,
            trials: 500,
        }
    }
}

fn moments<E: Executor>(p: &MomentsParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let report = moment_battery(
        p.m,
        p.epsilon,
        p.trials,
        seed,
        &MomentSettings::default(),
        exec,
    )?;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "records",
        &[
            "name",
            "empirical",
            "prediction",
            "tolerance",
            "comparison",
            "status",
        ],
    );
    for r in &report.records {
        let status = match &r.status {
            RecordStatus::Pass => "pass".to_string(),
            RecordStatus::Fail => "fail".to_string(),
            RecordStatus::Skipped(why) => format!("skipped: {why}"),
        };
        out.stat(
            &r.name,
            json!({
                "empirical": finite(r.empirical),
                "prediction": finite(r.prediction),
                "tolerance": finite(r.tolerance),
                "status": status,
            }),
        );
        out.constant(&r.name, finite(r.empirical));
        table.push([
            r.name.clone(),
            r.empirical.to_string(),
            r.prediction.to_string(),
            r.tolerance.to_string(),
            format!("{:?}", r.comparison).to_lowercase(),
            status,
        ]);
    }
    out.stat("all_passed", report.all_passed());
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedParams {
    pub c: f64,
    pub theta: f64,
    pub grid: usize,
}

impl Default for FixedParams {
    fn default() -> Self {
        FixedParams {
            c: 3.0,
            theta: 1.5,
            grid: 101,
        }
    }
}

fn fixed_points<E: Executor>(p: &FixedParams, _seed: u64, _exec: &E) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = beta(p.theta)?;
    out.constant("beta_theta", b.value);
    out.stat("beta_residual", b.residual);
    let g = if p.c > 2.0 {
        Some(gamma0(p.c)?.value)
    } else {
        None
    };
    out.constant("gamma0", g.map_or(Value::Null, Value::from));
    if p.grid < 2 {
        return Err(usage("grid needs at least 2 points"));
    }
    let mut table = Table::new("phi", &["x", "phi", "ratio"]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..p.grid {
        let x = k as f64 / (p.grid - 1) as f64;
        let v = phi(x, p.c)?;
        let ratio = g.map_or(f64::NAN, |g| (v - g) / (x - g));
        if ratio.is_finite() {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        table.push([x.to_string(), v.to_string(), ratio.to_string()]);
    }
    out.stat("contraction_ratio_min", finite(lo));
    out.stat("contraction_ratio_max", finite(hi));
    out.tables.push(table);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftParams {
    /// critical, window, supercritical, subcritical or level.
    pub mode: String,
    pub n: usize,
    pub c: f64,
    pub x0: i64,
    pub trials: usize,
    /// Window half-width in units of `n^(2/3)` (window mode).
    pub a: f64,
    pub delta: f64,
    pub min_constant: f64,
    /// Contraction bound `contraction (x0 - centre)^2 + b n`.
    pub contraction: f64,
    pub b: f64,
    /// Level for the crossing-frequency mode; default `0.5 n^(3/4)`.
    pub level: Option<f64>,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            mode: "critical".into(),
            n: 4096,
            c: 2.0,
            x0: 1064,
            trials: 10_000,
            a: 20.0,
            delta: DEFAULT_DELTA,
            min_constant: 0.1,
            contraction: 0.95,
            b: 50.0,
            level: None,
        }
    }
}

fn drift<E: Executor>(p: &DriftParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let record = match p.mode.as_str() {
        "critical" => Some(critical_drift(p.n, p.c, p.x0, p.trials, seed, exec)?),
        "window" => Some(window_drift(
            p.n,
            p.c,
            p.x0,
            p.a,
            p.delta,
            p.min_constant,
            p.trials,
            seed,
            exec,
        )?),
        "supercritical" | "subcritical" => {
            let f = p.x0 as f64 / p.n as f64;
            let r = if p.mode == "supercritical" {
                supercritical_contraction(p.n, p.c, &[f], p.contraction, p.b, p.trials, seed, exec)?
            } else {
                subcritical_contraction(p.n, p.c, &[f], p.b, p.trials, seed, exec)?
            };
            let r = r[0];
            out.stat("x0", r.x0);
            out.stat("second_moment", r.observed);
            out.stat("standard_error", r.standard_error);
            out.stat("bound", r.bound);
            out.stat("pass", r.pass);
            out.constant("delta", finite(r.resolved_delta));
            out.constant("b", r.resolved_b);
            None
        }
        "level" => {
            let chain = MagnetizationChain::new(ChainParams::new(p.n, p.c, Variant::Standard)?)?;
            let level = p.level.unwrap_or(0.5 * (p.n as f64).powf(0.75));
            let (freq, d) = level_crossing(&chain, p.x0, level, p.trials, seed, exec)?;
            out.stat("level", level);
            out.stat("crossing_frequency", freq);
            out.constant("d", d);
            None
        }
        other => {
            return Err(usage(format!(
                "mode `{other}`; expected critical, window, supercritical, subcritical or level"
            )))
        }
    };
    if let Some(r) = record {
        out.stat("x0", r.x0);
        out.stat("mean", r.observed);
        out.stat("standard_error", r.standard_error);
        out.stat("bound", r.bound);
        out.stat("pass", r.pass);
        out.constant("constant", finite(r.resolved_constant));
        let h = 1.96 * r.standard_error;
        out.interval("mean", (r.observed - h, r.observed + h));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurvivalParams {
    pub m: u64,
    pub epsilon: f64,
    pub walks: usize,
    pub horizon: usize,
}

impl Default for SurvivalParams {
    fn default() -> Self {
        SurvivalParams {
            m: 1_000_000,
            epsilon: 0.1,
            walks: 100_000,
            horizon: 1_000_000,
        }
    }
}

fn survival<E: Executor>(p: &SurvivalParams, seed: u64, exec: &E) -> Result<Outcome, CliError> {
    let est = survival_experiment(p.m, p.epsilon, p.walks, p.horizon, seed, exec)?;
    let mut out = Outcome::default();
    out.stat("non_hit_fraction", est.fraction);
    out.stat("standard_error", est.standard_error);
    out.stat("hits", est.hits);
    out.stat("censored", est.censored);
    out.stat(
        "prediction",
        2.0 * p.epsilon - 8.0 / 3.0 * p.epsilon * p.epsilon,
    );
    out.interval(
        "non_hit_fraction",
        wilson_interval(est.censored, p.walks as u64, 1.96),
    );
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub n: usize,
    pub c: f64,
    /// standard, modified_largest, modified_delta or two_dim.
    pub variant: String,
    pub delta: f64,
    /// Default `n` (all plus).
    pub x0: Option<i64>,
    /// Two-block start `[y, z]`; default all plus with blocks `n/2`, `n - n/2`.
    pub start: Option<[usize; 2]>,
    pub steps: usize,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        TrajectoryParams {
            n: 1024,
            c: 2.0,
            variant: "standard".into(),
            delta: DEFAULT_DELTA,
            x0: None,
            start: None,
            steps: 100,
        }
    }
}

fn trajectory<E: Executor>(
    p: &TrajectoryParams,
    seed: u64,
    _exec: &E,
) -> Result<Outcome, CliError> {
    let mut stream = RandomStream::new(seed, 0);
    let mut out = Outcome::default();
    if p.variant == "two_dim" {
        let chain = MagnetizationChain::new(ChainParams::new(p.n, p.c, Variant::TwoDim)?)?;
        let (g1, g2) = (p.n / 2, p.n - p.n / 2);
        let [y, z] = p.start.unwrap_or([g1, g2]);
        let mut state = TwoDimState::new(y, z, g1, g2)?;
        let mut table = Table::new("trajectory", &["t", "y", "z"]);
        table.push([0, state.y, state.z]);
        for t in 1..=p.steps {
            state = chain.step_two_dim(state, &mut stream)?;
            table.push([t, state.y, state.z]);
        }
        out.stat("final_magnetization", state.magnetization());
        out.tables.push(table);
    } else {
        let chain = MagnetizationChain::new(ChainParams::new(
            p.n,
            p.c,
            one_dim_variant(&p.variant, p.delta)?,
        )?)?;
        let path = chain.trajectory(p.x0.unwrap_or(p.n as i64), p.steps, &mut stream)?;
        let mut table = Table::new("trajectory", &["t", "x"]);
        for (t, x) in path.iter().enumerate() {
            table.push([t as i64, *x]);
        }
        out.stat("final", *path.last().expect("trajectory includes X_0"));
        out.tables.push(table);
    }
    Ok(out)
}
