use crate::error::{domain_err, Result};

/// Residual bound every solver result satisfies.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointResult {
    pub value: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Bisection for a sign change of `f` on `[lo, hi]`, run until the bracket
/// stops shrinking in floating point.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, u32) {
    let f_lo_positive = f(lo) > 0.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations >= 200 {
            return (mid, iterations);
        }
        iterations += 1;
        if (f(mid) > 0.0) == f_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Positive root of `1 - exp(-theta x) = x`: the survival probability of a
/// Poisson(`theta`) branching process.
pub fn beta(theta: f64) -> Result<FixedPointResult> {
    if !(theta > 1.0) || !theta.is_finite() {
        return Err(domain_err!(
            "the positive root exists only for theta > 1, got {theta}"
        ));
    }
    let f = |x: f64| -libm::expm1(-theta * x) - x;
    let (value, iterations) = bisect(1e-9, 1.0, f);
    Ok(FixedPointResult {
        value,
        residual: f(value),
        iterations,
    })
}

/// `phi(x) = beta(c (1 + x) / 2) (1 + x) / 2`, the expected next
/// magnetization fraction from `x`.
pub fn phi(x: f64, c: f64) -> Result<f64> {
    let theta = c * (1.0 + x) / 2.0;
    if !(theta > 1.0) {
        return Err(domain_err!("phi needs c (1 + x) / 2 > 1, got {theta}"));
    }
    Ok(beta(theta)?.value * (1.0 + x) / 2.0)
}

/// Fixed point of `phi(., c)` in `(1 - 2/c, 1)`.
pub fn gamma0(c: f64) -> Result<FixedPointResult> {
    if !(c > 2.0) || !c.is_finite() {
        return Err(domain_err!("gamma0 needs c > 2, got {c}"));
    }
    let g = |x: f64| phi(x, c).map(|v| v - x).unwrap_or(f64::NAN);
    let (value, iterations) = bisect(1.0 - 2.0 / c, 1.0, g);
    Ok(FixedPointResult {
        value,
        residual: g(value),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_values() {
        let b = beta(2.0).unwrap();
        assert!((b.value - 0.796812).abs() < 1e-6);
        assert!(b.residual.abs() <= FIXED_POINT_TOLERANCE);
        assert!(beta(1.0001).unwrap().value <= 3e-4);
        assert!(beta(10.0).unwrap().value >= 0.99995);
        assert!(beta(1.0).is_err());
    }

    #[test]
    fn phi_identities() {
        assert_eq!(phi(1.0, 3.0).unwrap(), beta(3.0).unwrap().value);
        let v = phi(0.5, 3.0).unwrap();
        assert!((-libm::expm1(-3.0 * v) - 2.0 * v / 1.5).abs() < 1e-10);
        assert!(phi(-0.5, 2.0).is_err());
        let h = 1e-5;
        for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let d = (phi(x + h, 3.0).unwrap() - phi(x - h, 3.0).unwrap()) / (2.0 * h);
            assert!(d > 0.5 && d < 1.0, "phi'({x}) = {d}");
        }
    }

    #[test]
    fn gamma0_values() {
        for c in [2.1, 3.0, 5.0, 10.0] {
            let g = gamma0(c).unwrap();
            assert!(g.value > 1.0 - 2.0 / c && g.value < 1.0);
            assert!(g.residual.abs() <= FIXED_POINT_TOLERANCE);
        }
        assert!(gamma0(20.0).unwrap().value >= 0.999);
        assert!(gamma0(2.0).is_err());
        let mut x = 0.9;
        for _ in 0..200 {
            x = phi(x, 3.0).unwrap();
        }
        assert!((x - gamma0(3.0).unwrap().value).abs() < 1e-8);
    }
}
