use crate::error::{param_err, Result};

/// Ordinary least squares line with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(param_err!(
            "a fit needs at least 3 points, got {}",
            points.len()
        ));
    }
    if points
        .iter()
        .any(|&(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(param_err!("fit points must be finite"));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(param_err!("all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A constant response is fitted perfectly.
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Fit `ln t = slope ln n + intercept`.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.iter().any(|&(n, t)| !(n > 0.0) || !(t > 0.0)) {
        return Err(param_err!("power-law fits need positive data"));
    }
    let logs: alloc::vec::Vec<_> = points
        .iter()
        .map(|&(n, t)| (libm::log(n), libm::log(t)))
        .collect();
    linear_fit(&logs)
}

/// Fit `t = slope ln n + intercept`.
pub fn semilog_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.iter().any(|&(n, _)| !(n > 0.0)) {
        return Err(param_err!("semilog fits need positive abscissae"));
    }
    let logs: alloc::vec::Vec<_> = points.iter().map(|&(n, t)| (libm::log(n), t)).collect();
    linear_fit(&logs)
}
