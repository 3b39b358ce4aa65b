//! Log-log regression for convergence rates.

use serde::{Deserialize, Serialize};

/// Least-squares fit of log(err) = slope · log(h) + intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the residuals in log space.
    pub residual: f64,
}

/// Fit over the pairs with positive finite error; `None` with fewer than two usable pairs.
pub fn loglog_fit(h: &[f64], err: &[f64]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(a, e)| **a > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(a, e)| (a.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Some(LogLogFit { slope, intercept, residual })
}

/// A convergence table with its fitted rate. `exact` marks tables whose errors are
/// all at rounding level, in which case no slope is fitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub h: Vec<f64>,
    pub err: Vec<f64>,
    pub fit: Option<LogLogFit>,
    pub exact: bool,
}

impl RateTable {
    /// Builds the table, flagging it exact when every error is at most `exact_tol`.
    pub fn new(h: Vec<f64>, err: Vec<f64>, exact_tol: f64) -> Self {
        let exact = err.iter().all(|e| e.abs() <= exact_tol);
        let fit = if exact { None } else { loglog_fit(&h, &err) };
        RateTable { h, err, fit, exact }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Whether every successive entry is strictly smaller than the previous one.
    pub fn strictly_decreasing(&self) -> bool {
        self.err.windows(2).all(|w| w[1] < w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let h: Vec<f64> = (2..7).map(|n| 2f64.powi(-n)).collect();
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x.powf(1.5)).collect();
        let f = loglog_fit(&h, &e).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn zero_errors_are_exact() {
        let t = RateTable::new(vec![0.5, 0.25, 0.125], vec![0.0, 1e-17, 0.0], 1e-12);
        assert!(t.exact);
        assert!(t.slope().is_none());
    }
}
