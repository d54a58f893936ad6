//! Exponential loss-rate fits.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 3 samples in the window, got {0}")]
    TooFewPoints(usize),
    #[error("observable is not positive at t = {t}")]
    NonPositive { t: f64 },
    #[error("observable does not decay (slope {slope:e})")]
    NotDecaying { slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `-d ln(f)/dt`.
    pub rate: f64,
    /// Fitted `ln f` at `t = 0`.
    pub intercept: f64,
    /// Standard error of `rate`.
    pub rate_stderr: f64,
    pub r_squared: f64,
    /// Set when the rate is not resolved above the scatter
    /// (`rate < 3 rate_stderr` or `r_squared < 0.9`).
    pub noisy: bool,
    pub points: usize,
}

/// Least-squares slope of `ln f` against `t` over samples with
/// `window.0 <= t <= window.1`.
pub fn fit_decay_rate(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, FitError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if pts.len() < 3 {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    if let Some(&(t, _)) = pts.iter().find(|(_, f)| !f.is_finite() || *f <= 0.0) {
        return Err(FitError::NonPositive { t });
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, f) in &pts {
        let (dx, dy) = (t - t_mean, f.ln() - y_mean);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let rate_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    if slope.is_nan() || slope >= 0.0 {
        return Err(FitError::NotDecaying { slope });
    }
    let rate = -slope;
    Ok(DecayFit {
        rate,
        intercept,
        rate_stderr,
        r_squared,
        noisy: rate < 3.0 * rate_stderr || r_squared < 0.9,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled<F: Fn(f64) -> f64>(f: F, n: usize, dt: f64) -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64 * dt, f(i as f64 * dt))).collect()
    }

    #[test]
    fn pure_exponential() {
        let s = sampled(|t| 2.0 * (-0.3 * t).exp(), 100, 0.1);
        let fit = fit_decay_rate(&s, (0.0, 10.0)).unwrap();
        assert!((fit.rate - 0.3).abs() < 1e-6);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-9);
        assert!(!fit.noisy);
    }

    #[test]
    fn window_selects_tail() {
        let s = sampled(|t| (-2.0 * t).exp() + 0.5 * (-0.01 * t).exp(), 400, 0.5);
        let fit = fit_decay_rate(&s, (50.0, 200.0)).unwrap();
        assert!((fit.rate - 0.01).abs() < 1e-6);
    }

    #[test]
    fn flags_bad_signals() {
        let growing = sampled(|t| (0.1 * t).exp(), 10, 1.0);
        assert!(matches!(
            fit_decay_rate(&growing, (0.0, 10.0)),
            Err(FitError::NotDecaying { .. })
        ));
        let flat_noise = sampled(|t| 1.0 + 1e-3 * (7.0 * t).sin() - 1e-6 * t, 50, 1.0);
        assert!(fit_decay_rate(&flat_noise, (0.0, 50.0)).unwrap().noisy);
        let negative = sampled(|t| 1.0 - t, 5, 1.0);
        assert_eq!(
            fit_decay_rate(&negative, (0.0, 5.0)),
            Err(FitError::NonPositive { t: 1.0 })
        );
        assert_eq!(fit_decay_rate(&negative, (10.0, 20.0)), Err(FitError::TooFewPoints(0)));
    }
}
