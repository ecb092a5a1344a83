//! Euler-Lagrange equations in `s = sqrt(r)` for `s > 1`, at `lambda = 1`.
//!
//! With `w(s) = w_tilde(s^2)`, `u(s) = u_tilde(s^2)` and
//! `Q = s(2w + w^2) + u'/2`, the equations read
//!
//! ```text
//! 2 s^2 (1 + w) Q = (s w')' / 4,        (sQ)' / 2 = u / s.
//! ```
//!
//! Eliminating `u` gives `u = s K' / 2` with `K = (w'' + w'/s) / (8(1 + w))`
//! and a fourth-order equation `w'''' = -64 w + g + h` for `w` alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value and first four derivatives at one point.
pub type Jet = [f64; 5];

/// `x = (w''', w'', w', w)` at `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailState {
    pub s: f64,
    pub x: [f64; 4],
}

impl TailState {
    pub fn from_jet(s: f64, w: &Jet) -> Self {
        TailState {
            s,
            x: [w[3], w[2], w[1], w[0]],
        }
    }
}

fn stretch(s: f64, w: f64) -> Result<f64> {
    let p = 1.0 + w;
    if p > 0.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(Error::NonPositiveStretch { s, value: p })
    }
}

/// Nonlinear part `g`.
pub fn g_term(x: &[f64; 4], s: f64) -> Result<f64> {
    let [w3, w2, w1, w] = *x;
    let p = stretch(s, w)?;
    let inner = 2.0 * w1 * w3 + 4.0 / s * w2 * w1 + w2 * w2 - w1 * w1 / (s * s)
        - (2.0 * w1 * w1 * w2 + 2.0 / s * w1 * w1 * w1) / p;
    Ok(inner / p - 96.0 * w * w - 32.0 * w * w * w)
}

/// Linear part `h` with coefficients decaying in `s`.
pub fn h_term(x: &[f64; 4], s: f64) -> f64 {
    let [w3, w2, w1, _] = *x;
    -2.0 / s * w3 + 5.0 / (s * s) * w2 + 3.0 / (s * s * s) * w1
}

/// `w''''` from the fourth-order form.
pub fn fourth_order_rhs(state: &TailState) -> Result<f64> {
    let x = &state.x;
    Ok(-64.0 * x[3] + g_term(x, state.s)? + h_term(x, state.s))
}

/// `K = (w'' + w'/s) / (8(1+w))` and its first two derivatives.
fn k_jet(s: f64, w: &Jet) -> Result<[f64; 3]> {
    let p = stretch(s, w[0])?;
    // N = w'' + w'/s and its derivatives
    let n0 = w[2] + w[1] / s;
    let n1 = w[3] + w[2] / s - w[1] / (s * s);
    let n2 = w[4] + w[3] / s - 2.0 * w[2] / (s * s) + 2.0 * w[1] / (s * s * s);
    let (p1, p2) = (w[1], w[2]);
    let k0 = n0 / (8.0 * p);
    let k1 = (n1 * p - n0 * p1) / (8.0 * p * p);
    let k2 = (n2 * p * p - n0 * p2 * p - 2.0 * n1 * p1 * p + 2.0 * n0 * p1 * p1) / (8.0 * p * p * p);
    Ok([k0, k1, k2])
}

/// `u = s K' / 2`; uses derivatives of `w` up to the third.
pub fn reconstruct_u_at(s: f64, w: &Jet) -> Result<f64> {
    let mut wj = *w;
    wj[4] = 0.0;
    Ok(0.5 * s * k_jet(s, &wj)?[1])
}

/// `(u, u')` of the reconstruction; `u'` needs the fourth derivative.
pub fn reconstruct_u_jet(s: f64, w: &Jet) -> Result<(f64, f64)> {
    let k = k_jet(s, w)?;
    Ok((0.5 * s * k[1], 0.5 * k[1] + 0.5 * s * k[2]))
}

/// Pointwise reconstruction on sampled jets.
pub fn reconstruct_u(s: &[f64], w: &[Jet]) -> Result<Vec<f64>> {
    s.iter().zip(w).map(|(&s, w)| reconstruct_u_at(s, w)).collect()
}

/// Residuals `(R1, R2)` of the two equations at one point.
pub fn el_residual_s_at(s: f64, u: &Jet, w: &Jet) -> Result<(f64, f64)> {
    let p = stretch(s, w[0])?;
    let q = s * (2.0 * w[0] + w[0] * w[0]) + 0.5 * u[1];
    let dq = (2.0 * w[0] + w[0] * w[0]) + s * (2.0 + 2.0 * w[0]) * w[1] + 0.5 * u[2];
    let r1 = 2.0 * s * s * p * q - 0.25 * (w[1] + s * w[2]);
    let r2 = 0.5 * (q + s * dq) - u[0] / s;
    Ok((r1, r2))
}

/// Residual fields on sampled jets.
pub fn el_residual_s(s: &[f64], u: &[Jet], w: &[Jet]) -> Result<(Vec<f64>, Vec<f64>)> {
    s.iter().zip(u.iter().zip(w)).map(|(&s, (u, w))| el_residual_s_at(s, u, w)).collect::<Result<Vec<_>>>().map(|v| v.into_iter().unzip())
}
