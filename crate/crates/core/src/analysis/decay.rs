//! Decay rate and oscillation frequency of the tail in `s = sqrt(r / lambda)`.
//!
//! The fit uses the local envelope: one interpolated peak of `|y|` between
//! consecutive sign changes, then a straight line through `log |peak|`.
//! Sign changes give the frequency, since zeros of `e^{-sigma s} cos(omega s + phi)`
//! are exactly `pi / omega` apart.

use serde::{Deserialize, Serialize};

use crate::energy::{to_tilde, Cutoff};
use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::numeric::linear_fit;

/// Values below this are treated as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub sigma_hat: f64,
    pub omega_hat: f64,
    pub window: [f64; 2],
    /// RMS of the log-envelope regression.
    pub residual: f64,
    pub peaks: usize,
    pub zeros: usize,
}

/// Fits `|y(s)| ~ A e^{-sigma s} |cos(omega s + phi)|` to samples on `window`.
pub fn fit_decay_samples(s: &[f64], y: &[f64], window: [f64; 2]) -> Result<TailFit> {
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] >= window[0] && s[i] <= window[1]).collect();
    if idx.len() < 16 {
        return Err(Error::FitFailed(format!("window {window:?} holds only {} samples", idx.len())));
    }
    let (ss, ys): (Vec<f64>, Vec<f64>) = idx.iter().map(|&i| (s[i], y[i])).unzip();

    let mut zeros = Vec::new();
    for i in 1..ss.len() {
        if ys[i - 1] == 0.0 || ys[i - 1].signum() != ys[i].signum() {
            let t = ys[i - 1] / (ys[i - 1] - ys[i]);
            zeros.push(ss[i - 1] + t * (ss[i] - ss[i - 1]));
        }
    }
    // one peak per lobe, strictly between two zeros so it is a true extremum
    let mut peaks_s = Vec::new();
    let mut peaks_log = Vec::new();
    for pair in zeros.windows(2) {
        let inside: Vec<usize> = (0..ss.len()).filter(|&i| ss[i] > pair[0] && ss[i] < pair[1]).collect();
        let Some(&k) = inside.iter().max_by(|&&a, &&b| ys[a].abs().total_cmp(&ys[b].abs())) else {
            continue;
        };
        if k == 0 || k + 1 >= ss.len() {
            continue;
        }
        let (sp, yp) = parabola_peak(&ss[k - 1..=k + 1], &ys[k - 1..=k + 1].iter().map(|v| v.abs()).collect::<Vec<_>>());
        if yp <= NOISE_FLOOR {
            return Err(Error::FitFailed(format!(
                "envelope reaches the noise floor at s = {sp:.3}; shrink the window"
            )));
        }
        peaks_s.push(sp);
        peaks_log.push(yp.ln());
    }
    if peaks_s.len() < 2 || zeros.len() < 3 {
        return Err(Error::FitFailed(format!(
            "window {window:?} resolves {} peaks and {} zeros",
            peaks_s.len(),
            zeros.len()
        )));
    }
    let (slope, icpt) = linear_fit(&peaks_s, &peaks_log);
    let residual = (peaks_s
        .iter()
        .zip(&peaks_log)
        .map(|(x, y)| (y - slope * x - icpt).powi(2))
        .sum::<f64>()
        / peaks_s.len() as f64)
        .sqrt();
    let index: Vec<f64> = (0..zeros.len()).map(|k| k as f64).collect();
    let (spacing, _) = linear_fit(&index, &zeros);
    Ok(TailFit {
        sigma_hat: -slope,
        omega_hat: std::f64::consts::PI / spacing,
        window,
        residual,
        peaks: peaks_s.len(),
        zeros: zeros.len(),
    })
}

/// Vertex of the parabola through three points.
fn parabola_peak(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let d01 = (y[1] - y[0]) / (x1 - x0);
    let d12 = (y[2] - y[1]) / (x2 - x1);
    let c2 = (d12 - d01) / (x2 - x0);
    if c2 >= 0.0 {
        return (x1, y[1]);
    }
    let c1 = d01 - c2 * (x0 + x1);
    let xv = -c1 / (2.0 * c2);
    let yv = y[1] + (xv - x1) * (d01 + c2 * (xv - x0));
    (xv, yv)
}

fn check_window(profile: &Profile, window: [f64; 2]) -> Result<()> {
    let s_max = (profile.grid().r_max() / profile.lambda()).sqrt();
    if window[0] < 2.0 || window[1] > s_max - 2.0 || window[0] >= window[1] {
        return Err(Error::FitFailed(format!(
            "window {window:?} must lie in [2, {}]",
            s_max - 2.0
        )));
    }
    Ok(())
}

/// Tail samples `(s, w_tilde)` or `(s, u_tilde)` with `s = sqrt(r / lambda)`.
fn tail_samples(profile: &Profile, use_u: bool) -> (Vec<f64>, Vec<f64>) {
    let (u, w) = to_tilde(profile, &Cutoff::standard());
    let lambda = profile.lambda();
    let s = profile.grid().nodes().iter().map(|r| (r / lambda).sqrt()).collect();
    (s, if use_u { u } else { w })
}

/// Fit of `w_hat - 1` on `window` (in `s`).
pub fn fit_decay(profile: &Profile, window: [f64; 2]) -> Result<TailFit> {
    check_window(profile, window)?;
    let (s, w) = tail_samples(profile, false);
    fit_decay_samples(&s, &w, window)
}

/// Fit of `u_hat - lambda^2 / (2r)` on `window`.
pub fn fit_decay_u(profile: &Profile, window: [f64; 2]) -> Result<TailFit> {
    check_window(profile, window)?;
    let (s, u) = tail_samples(profile, true);
    fit_decay_samples(&s, &u, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;

    fn synthetic(sigma: f64, omega: f64, phase: f64) -> (Vec<f64>, Vec<f64>) {
        let s: Vec<f64> = (0..4000).map(|k| 2.0 + 12.0 * k as f64 / 3999.0).collect();
        let y = s.iter().map(|x| 0.3 * (-sigma * (x - 2.0)).exp() * (omega * x + phase).cos()).collect();
        (s, y)
    }

    #[test]
    fn recovers_unit_rate_signal() {
        let (s, y) = synthetic(2.0, 2.0, 0.4);
        let fit = fit_decay_samples(&s, &y, [6.0, 12.0]).unwrap();
        assert!((fit.sigma_hat - 2.0).abs() < 0.01, "{fit:?}");
        assert!((fit.omega_hat - 2.0).abs() < 0.01, "{fit:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn recovers_rates_to_one_percent(sigma in 1.0f64..3.0, omega in 1.5f64..3.0, phase in 0.0f64..6.28) {
            let (s, y) = synthetic(sigma, omega, phase);
            // at least four half periods
            let len = (4.5 * std::f64::consts::PI / omega).max(6.0);
            let fit = fit_decay_samples(&s, &y, [2.0, 2.0 + len]).unwrap();
            prop_assert!((fit.sigma_hat / sigma - 1.0).abs() < 0.01, "{:?}", fit);
            prop_assert!((fit.omega_hat / omega - 1.0).abs() < 0.01, "{:?}", fit);
        }
    }

    #[test]
    fn noise_floor_is_an_error() {
        let (s, y) = synthetic(3.0, 2.0, 0.0);
        let y: Vec<f64> = y.iter().map(|v| 1e-3 * v).collect();
        let r = fit_decay_samples(&s, &y, [8.0, 14.0]);
        assert!(matches!(r, Err(Error::FitFailed(_))), "{r:?}");
    }

    #[test]
    fn window_must_stay_inside_the_tail() {
        let g = build_grid(225.0, 256, 4).unwrap();
        let p = crate::energy::cone_profile(&g, 1.0, &Cutoff::standard()).unwrap();
        assert!(fit_decay(&p, [1.5, 10.0]).is_err());
        assert!(fit_decay(&p, [6.0, 14.0]).is_err());
    }
}
