//! Far-field and near-origin behaviour of minimizers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::numeric::linear_fit;

/// Sup over nodes in `[a, b]` of `max(|2 r u_hat / lambda^2 - 1|, |w_hat - 1|)`.
pub fn far_field_on(profile: &Profile, a: f64, b: f64) -> f64 {
    let l2 = profile.lambda() * profile.lambda();
    profile
        .grid()
        .nodes()
        .iter()
        .zip(profile.u_hat().iter().zip(profile.w_hat()))
        .filter(|(&r, _)| r >= a && r <= b)
        .map(|(&r, (&u, &w))| (2.0 * r * u / l2 - 1.0).abs().max((w - 1.0).abs()))
        .fold(0.0, f64::max)
}

/// [`far_field_on`] over `[r_max / 4, r_max / 2]`.
pub fn check_far_field(profile: &Profile) -> f64 {
    let r_max = profile.grid().r_max();
    far_field_on(profile, 0.25 * r_max, 0.5 * r_max)
}

pub const ORIGIN_WINDOW: [f64; 2] = [1e-6, 1e-2];

/// Least-squares fit `u_hat / r ~ a log r + b` near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    pub a: f64,
    pub b: f64,
    pub window: [f64; 2],
    pub samples: usize,
    pub rms: f64,
}

impl OriginFit {
    /// Radius where `U(r) = r + (eps^2 / 2)(u_hat - r)` changes sign under
    /// the fitted form.
    pub fn penetration_radius(&self, eps: f64) -> f64 {
        ((1.0 - 2.0 / (eps * eps) - self.b) / self.a).exp()
    }
}

pub fn fit_origin(profile: &Profile) -> Result<OriginFit> {
    fit_origin_on(profile, ORIGIN_WINDOW)
}

pub fn fit_origin_on(profile: &Profile, window: [f64; 2]) -> Result<OriginFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .grid()
        .nodes()
        .iter()
        .zip(profile.u_hat())
        .filter(|(&r, _)| r >= window[0] && r <= window[1])
        .map(|(&r, &u)| (r.ln(), u / r))
        .unzip();
    // a decade needs a handful of nodes for the log-linear fit to mean anything
    let decades = (window[1] / window[0]).log10();
    if (x.len() as f64) < 4.0 * decades.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "{} nodes in {window:?} do not resolve the origin window",
            x.len()
        )));
    }
    let (a, b) = linear_fit(&x, &y);
    let rms = (x.iter().zip(&y).map(|(x, y)| (y - a * x - b).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    Ok(OriginFit {
        a,
        b,
        window,
        samples: x.len(),
        rms,
    })
}
