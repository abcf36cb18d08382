//! Exponential growth-rate extraction from diagnostic time series.

use crate::numeric::line_fit;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub rate: f64,
    pub r_squared: f64,
    pub n_used: usize,
}

/// Least-squares slope of `log(series)` over the trailing `tail_fraction`
/// of the samples. Requires at least 10 samples in the window, all
/// positive.
pub fn growth_rate_fit(times: &[f64], values: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::config("times and values must have equal length"));
    }
    if !(0.0..=1.0).contains(&tail_fraction) {
        return Err(Error::config("tail fraction must lie in (0, 1]"));
    }
    let n = times.len();
    let take = ((n as f64 * tail_fraction).ceil() as usize).min(n);
    if take < 10 {
        return Err(Error::config(format!(
            "growth fit window has {take} samples; need at least 10"
        )));
    }
    let start = n - take;
    let ts = &times[start..];
    let mut logs = Vec::with_capacity(take);
    for &v in &values[start..] {
        if v <= 0.0 {
            return Err(Error::numerical(
                "non-positive sample in growth fit window".to_string(),
            ));
        }
        logs.push(v.ln());
    }
    let (rate, _b, r2) = line_fit(ts, &logs)?;
    Ok(RateFit { rate, r_squared: r2, n_used: take })
}

/// Log-log slope fit for scaling laws: `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(Error::numerical("log-log fit needs positive data".to_string()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (slope, _b, r2) = line_fit(&lx, &ly)?;
    Ok((slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_exponential_series() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| (0.37 * t).exp()).collect();
        let fit = growth_rate_fit(&times, &values, 0.5).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.37, epsilon = 1e-8);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let times: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let values = vec![2.5; 50];
        let fit = growth_rate_fit(&times, &values, 1.0).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn tail_window_recovers_asymptotic_rate() {
        // synthetic transient plus exponential: the tail forgets the transient
        let rate = 0.8;
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (rate * t).exp() * (1.0 + 50.0 * (-3.0 * t).exp()))
            .collect();
        let fit = growth_rate_fit(&times, &values, 0.25).unwrap();
        assert_abs_diff_eq!(fit.rate, rate, epsilon = 1e-3);
    }

    #[test]
    fn rejects_bad_windows() {
        let times: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut values = vec![1.0; 30];
        assert!(growth_rate_fit(&times, &values, 0.1).is_err()); // < 10 samples
        values[29] = -1.0;
        assert!(growth_rate_fit(&times, &values, 1.0).is_err()); // non-positive
    }

    #[test]
    fn loglog_recovers_power_law()
    {
        let xs = [0.1_f64, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(2.5)).collect();
        let (slope, r2) = loglog_slope(&xs, &ys).unwrap();
        assert_abs_diff_eq!(slope, 2.5, epsilon = 1e-12);
        assert!(r2 > 1.0 - 1e-12);
    }
}
