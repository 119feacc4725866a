//! Discrete laws on integer lattices: the exact stationary magnetization
//! law, total variation, and maximal couplings.

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::graph::ln_choose;
use crate::stochastic::RandomStream;

/// A probability law on finitely many integers.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeLaw {
    values: Vec<i64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl LatticeLaw {
    /// `values` strictly ascending; `probs` nonnegative, renormalised to one.
    pub fn new(values: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(param_err!(
                "a law needs one mass per value and at least one value"
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(param_err!("law values must be strictly ascending"));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(param_err!("law masses must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(param_err!("law has zero total mass"));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p / total).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(LatticeLaw {
            values,
            probs,
            cumulative,
        })
    }

    /// Build from `(value, mass)` pairs in any order, merging duplicates.
    pub fn from_pairs(mut pairs: Vec<(i64, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(v, _)| v);
        let mut values: Vec<i64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            if values.last() == Some(&v) {
                *probs.last_mut().expect("nonempty") += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        Self::new(values, probs)
    }

    /// Law of a sum of `m` independent fair signs.
    pub fn sign_sum(m: u64) -> Self {
        let values = (0..=m).map(|k| 2 * k as i64 - m as i64).collect();
        let ln_half = -(m as f64) * core::f64::consts::LN_2;
        let probs = (0..=m)
            .map(|k| libm::exp(ln_choose(m, k) + ln_half))
            .collect();
        Self::new(values, probs).expect("binomial masses are valid")
    }

    /// Law of Binomial(`m`, 1/2).
    pub fn fair_binomial(m: u64) -> Self {
        let sums = Self::sign_sum(m);
        Self::new((0..=m as i64).collect(), sums.probs).expect("binomial masses are valid")
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, value: i64) -> Option<usize> {
        self.values.binary_search(&value).ok()
    }

    pub fn prob(&self, value: i64) -> f64 {
        self.index_of(value).map_or(0.0, |i| self.probs[i])
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probs)
            .map(|(&v, p)| v as f64 * p)
            .sum()
    }

    /// `P(X <= value)`.
    pub fn cdf(&self, value: i64) -> f64 {
        match self.values.binary_search(&value) {
            Ok(i) => self.cumulative[i],
            Err(0) => 0.0,
            Err(i) => self.cumulative[i - 1],
        }
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, stream: &mut RandomStream) -> i64 {
        let u = stream.uniform() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.values[i.min(self.values.len() - 1)]
    }

    pub fn shifted(&self, by: i64) -> Self {
        LatticeLaw {
            values: self.values.iter().map(|v| v + by).collect(),
            probs: self.probs.clone(),
            cumulative: self.cumulative.clone(),
        }
    }

    /// Law of `|X|`.
    pub fn folded(&self) -> Self {
        Self::from_pairs(
            self.values
                .iter()
                .map(|v| v.abs())
                .zip(self.probs.iter().copied())
                .collect(),
        )
        .expect("folding keeps masses valid")
    }

    /// Total variation distance to `other`.
    pub fn tv(&self, other: &LatticeLaw) -> f64 {
        let mut sum = 0.0;
        merge_supports(self, other, |a, b| sum += (a - b).abs());
        0.5 * sum
    }

    /// `sum_s sqrt(pi_s / trials) / 2`, an upper bound on the expected
    /// upward bias of plug-in total variation from `trials` draws.
    pub fn plug_in_allowance(&self, trials: usize) -> f64 {
        self.probs.iter().map(|p| libm::sqrt(*p)).sum::<f64>() / (2.0 * libm::sqrt(trials as f64))
    }
}

/// Walk the union of both supports in ascending order, calling
/// `f(mass_a, mass_b)` per value.
fn merge_supports(a: &LatticeLaw, b: &LatticeLaw, mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let va = a.values.get(i).copied().unwrap_or(i64::MAX);
        let vb = b.values.get(j).copied().unwrap_or(i64::MAX);
        if va == vb {
            f(a.probs[i], b.probs[j]);
            i += 1;
            j += 1;
        } else if va < vb {
            f(a.probs[i], 0.0);
            i += 1;
        } else {
            f(0.0, b.probs[j]);
            j += 1;
        }
    }
}

fn merged(a: &LatticeLaw, b: &LatticeLaw) -> (Vec<i64>, Vec<f64>, Vec<f64>) {
    let mut values = Vec::new();
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    merge_supports(a, b, |x, y| {
        let v = match (a.values.get(i), b.values.get(j)) {
            (Some(&va), Some(&vb)) => va.min(vb),
            (Some(&va), None) => va,
            (None, Some(&vb)) => vb,
            (None, None) => unreachable!(),
        };
        if a.values.get(i) == Some(&v) {
            i += 1;
        }
        if b.values.get(j) == Some(&v) {
            j += 1;
        }
        values.push(v);
        pa.push(x);
        pb.push(y);
    });
    (values, pa, pb)
}

fn draw_weighted(
    weights: impl Iterator<Item = f64> + Clone,
    total: f64,
    stream: &mut RandomStream,
) -> usize {
    let u = stream.uniform() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draw `(X, Y)` with `X ~ a`, `Y ~ b` and `P(X = Y) = 1 - tv(a, b)`: equal
/// values from the overlap `min(a, b)`, otherwise independent draws from
/// the normalised residuals.
pub fn maximal_coupling(a: &LatticeLaw, b: &LatticeLaw, stream: &mut RandomStream) -> (i64, i64) {
    let (values, pa, pb) = merged(a, b);
    let overlap: f64 = pa.iter().zip(&pb).map(|(x, y)| x.min(*y)).sum();
    if stream.uniform() < overlap {
        let i = draw_weighted(pa.iter().zip(&pb).map(|(x, y)| x.min(*y)), overlap, stream);
        return (values[i], values[i]);
    }
    let rest = 1.0 - overlap;
    let i = draw_weighted(
        pa.iter().zip(&pb).map(|(x, y)| (x - y).max(0.0)),
        rest,
        stream,
    );
    let j = draw_weighted(
        pa.iter().zip(&pb).map(|(x, y)| (y - x).max(0.0)),
        rest,
        stream,
    );
    (values[i], values[j])
}

/// Exact law of the magnetization `S = sum_v sigma(v)` under the Ising
/// measure on `K_n`: `P(S = s)` proportional to
/// `C(n, (n + s)/2) exp(beta (s^2 - n) / 2)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StationaryLaw {
    n: usize,
    beta: f64,
    law: LatticeLaw,
}

impl StationaryLaw {
    pub fn from_beta(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(param_err!("need n >= 1"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(param_err!(
                "beta must be finite and nonnegative, got {beta}"
            ));
        }
        let values: Vec<i64> = (0..=n).map(|k| 2 * k as i64 - n as i64).collect();
        let logs: Vec<f64> = values
            .iter()
            .map(|&s| {
                let k = ((n as i64 + s) / 2) as u64;
                ln_choose(n as u64, k) + beta * ((s * s) as f64 - n as f64) / 2.0
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let probs = logs.iter().map(|l| libm::exp(l - top)).collect();
        Ok(StationaryLaw {
            n,
            beta,
            law: LatticeLaw::new(values, probs)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Signed law of `S`.
    pub fn law(&self) -> &LatticeLaw {
        &self.law
    }

    /// Law of `|S|`, the stationary law of the standard magnetization chain.
    pub fn abs_law(&self) -> LatticeLaw {
        self.law.folded()
    }

    pub fn prob(&self, s: i64) -> f64 {
        self.law.prob(s)
    }
}

/// Stationary magnetization law for bond probability `c / n`, with
/// `beta = -ln(1 - c/n) / 2`.
pub fn exact_stationary(n: usize, c: f64) -> Result<StationaryLaw> {
    if !(c >= 0.0) || c >= n as f64 {
        return Err(param_err!("need 0 <= c < n, got c = {c}, n = {n}"));
    }
    StationaryLaw::from_beta(n, -0.5 * libm::log1p(-c / n as f64))
}

/// Plug-in total variation between the empirical law of `samples` and `law`.
pub fn tv_to_law(samples: &[i64], law: &LatticeLaw) -> Result<f64> {
    if samples.is_empty() {
        return Err(param_err!("no samples"));
    }
    let mut counts = alloc::vec![0u64; law.len()];
    for &x in samples {
        match law.index_of(x) {
            Some(i) => counts[i] += 1,
            None => {
                return Err(Error::Data(alloc::format!(
                    "sample {x} is outside the law's support"
                )))
            }
        }
    }
    let n = samples.len() as f64;
    Ok(0.5
        * counts
            .iter()
            .zip(law.probs())
            .map(|(&c, p)| (c as f64 / n - p).abs())
            .sum::<f64>())
}

/// [`tv_to_law`] against the signed stationary law.
pub fn tv_to_stationary(samples: &[i64], law: &StationaryLaw) -> Result<f64> {
    tv_to_law(samples, law.law())
}
