//! The law on `[0, inf)` with density proportional to `exp(-x^4 / 12)`, and
//! Kolmogorov-Smirnov statistics.

use alloc::vec::Vec;

use crate::error::{param_err, Result};

/// Quadrature cut-off; the neglected tail is below `exp(-1728)`.
const UPPER: f64 = 12.0;
const QUAD_TOL: f64 = 1e-12;

fn kernel(x: f64) -> f64 {
    libm::exp(-x * x * x * x / 12.0)
}

fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson_step(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// `Z = int_0^inf exp(-x^4 / 12) dx` by quadrature.
pub fn limit_normalizer() -> f64 {
    integrate(kernel, 0.0, UPPER, QUAD_TOL)
}

/// `Z = Gamma(5/4) 12^(1/4)`.
pub fn limit_normalizer_closed_form() -> f64 {
    libm::tgamma(1.25) * libm::pow(12.0, 0.25)
}

pub fn limit_density(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        kernel(x) / limit_normalizer_closed_form()
    }
}

/// Panel width for [`limit_cdf`].
const PANEL: f64 = 1.0 / 16.0;

const GAUSS_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
fn gauss(a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS)
        .map(|(&t, w)| w * (kernel(mid - half * t) + kernel(mid + half * t)))
        .sum::<f64>()
}

/// `int_0^x exp(-u^4/12) du` as a sum over fixed panels plus one partial
/// panel; the fixed summation order keeps the result monotone in `x`.
fn panel_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, UPPER);
    let full = libm::floor(x / PANEL) as usize;
    let mut total = 0.0;
    for k in 0..full {
        total += gauss(k as f64 * PANEL, (k + 1) as f64 * PANEL);
    }
    total + gauss(full as f64 * PANEL, x)
}

/// `int_0^x exp(-u^4 / 12) du / Z`.
pub fn limit_cdf(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    (panel_integral(x) / panel_integral(UPPER)).min(1.0)
}

/// Median of the limit law, by bisection on [`limit_cdf`].
pub fn limit_median() -> f64 {
    let (mut lo, mut hi) = (0.0, 4.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if limit_cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum sample size accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 100;

/// `sup_x |F_n(x) - F(x)|` for sorted `samples` against a continuous `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(param_err!(
            "KS needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        ));
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(param_err!("KS samples must be sorted and finite"));
    }
    let n = samples.len() as f64;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Sup distance between a discrete law (atoms at ascending `values`) and a
/// continuous `cdf`.
pub fn ks_discrete_vs_cdf(values: &[f64], probs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.len() != probs.len() || values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(param_err!(
            "atoms must be strictly ascending with one mass each"
        ));
    }
    let mut below = 0.0;
    let mut sup: f64 = 0.0;
    for (&v, &p) in values.iter().zip(probs) {
        let f = cdf(v);
        let above = below + p;
        sup = sup.max((f - below).abs()).max((above - f).abs());
        below = above;
    }
    Ok(sup)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = libm::exp(-2.0 * (k * k) as f64 * lambda * lambda);
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoSampleKs {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS statistic with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TwoSampleKs> {
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(param_err!(
            "two-sample KS needs nonempty samples without NaN"
        ));
    }
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = libm::sqrt(na * nb / (na + nb));
    Ok(TwoSampleKs {
        statistic: d,
        p_value: kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RandomStream;

    #[test]
    fn normalizer_agrees_with_closed_form() {
        assert!((limit_normalizer() - 1.6871).abs() < 1e-3);
        assert!((limit_normalizer() - limit_normalizer_closed_form()).abs() < 1e-9);
        assert!((panel_integral(UPPER) - limit_normalizer_closed_form()).abs() < 1e-12);
        // Quadrature routes agree on a partial integral.
        let adaptive = integrate(kernel, 0.0, 1.3, QUAD_TOL);
        assert!((panel_integral(1.3) - adaptive).abs() < 1e-10);
    }

    #[test]
    fn cdf_endpoints_and_monotone() {
        assert_eq!(limit_cdf(0.0), 0.0);
        assert!(limit_cdf(10.0) >= 1.0 - 1e-6);
        let mut last = 0.0;
        for i in 0..10_000 {
            let v = limit_cdf(i as f64 * 0.0012);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn median_matches_rejection_sampling() {
        let median = limit_median();
        assert!((limit_cdf(median) - 0.5).abs() < 1e-9);
        // Proposal uniform on [0, 4]; acceptance exp(-x^4/12).
        let mut s = RandomStream::new(1, 0);
        let mut draws = Vec::new();
        while draws.len() < 200_000 {
            let x = 4.0 * s.uniform();
            if s.uniform() < kernel(x) {
                draws.push(x);
            }
        }
        draws.sort_by(f64::total_cmp);
        assert!((draws[draws.len() / 2] - median).abs() < 0.01);
    }

    fn inverse_cdf(u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 6.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if limit_cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ks_statistic_cases() {
        let mut s = RandomStream::new(2, 0);
        let mut xs: Vec<f64> = (0..2000).map(|_| inverse_cdf(s.uniform())).collect();
        xs.sort_by(f64::total_cmp);
        assert!(ks_statistic(&xs, limit_cdf).unwrap() <= 1.63 / libm::sqrt(2000.0));
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.5).collect();
        assert!(ks_statistic(&shifted, limit_cdf).unwrap() >= 0.2);
        let constant = alloc::vec![1.0; 200];
        assert!(ks_statistic(&constant, limit_cdf).unwrap() >= 0.5);
        assert!(ks_statistic(&xs[..50], limit_cdf).is_err());
    }

    #[test]
    fn two_sample_ks() {
        let mut s = RandomStream::new(3, 0);
        let a: Vec<f64> = (0..5000).map(|_| s.uniform()).collect();
        let b: Vec<f64> = (0..5000).map(|_| s.uniform()).collect();
        let c: Vec<f64> = (0..5000).map(|_| s.uniform() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn discrete_against_continuous() {
        let d = ks_discrete_vs_cdf(&[0.5], &[1.0], |x: f64| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!(ks_discrete_vs_cdf(&[1.0, 0.0], &[0.5, 0.5], |x| x).is_err());
    }
}
