//! The first-order tail system `x' = A x + F(x, s)`, its stable directions
//! and shooting along them.
//!
//! Norms of tail states are taken after scaling by
//! `D = diag(k^-3, k^-2, k^-1, 1)`, `k = 2 sqrt 2`. In that norm `A` is a
//! multiple of an orthogonal matrix, so solutions of the constant-coefficient
//! system decay or grow at exactly `|Re mu| = 2` without oscillating factors.

use log::warn;
use nalgebra::{linalg::Schur, Complex, Matrix4};
use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions};
use super::s_form::{g_term, h_term, TailState};
use super::sampling::TailSampler;
use crate::error::{Error, Result};
use crate::grid::Profile;

pub const KAPPA: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Leaving the ball `|x| <= BLOW_UP` flags a shot as escaping.
pub const BLOW_UP: f64 = 1.0;
/// Length over which the stable frame is continued backward.
pub const FRAME_HORIZON: f64 = 10.0;
/// Spacing of trajectory output points.
pub const OUTPUT_STEP: f64 = 0.05;

const SCALE: [f64; 4] = [1.0 / (KAPPA * KAPPA * KAPPA), 1.0 / (KAPPA * KAPPA), 1.0 / KAPPA, 1.0];

pub fn scaled_norm(x: &[f64; 4]) -> f64 {
    scaled_dot(x, x).sqrt()
}

fn scaled_dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| SCALE[i] * SCALE[i] * a[i] * b[i]).sum()
}

pub fn matrix_a() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 0.0, 0.0, -64.0, //
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0,
    )
}

/// `A`, its spectrum and a real basis of its stable subspace.
#[derive(Debug, Clone)]
pub struct LinearizationA {
    pub matrix: Matrix4<f64>,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    /// Real and imaginary parts of `(mu^3, mu^2, mu, 1)` for `mu = -2 + 2i`.
    pub stable_basis: [[f64; 4]; 2],
    pub stable_eigenvalue: Complex<f64>,
}

pub fn stable_subspace() -> LinearizationA {
    let matrix = matrix_a();
    // The unshifted QR iteration stalls on this spectrum (four eigenvalues of
    // equal modulus, symmetric about both axes), so factor A + SHIFT instead.
    const SHIFT: f64 = 0.37;
    let schur = Schur::try_new(matrix + Matrix4::identity() * SHIFT, 1e-15, 1000)
        .expect("shifted Schur iteration converges for this fixed matrix");
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().map(|l| l - SHIFT).collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mu = Complex::new(-2.0, 2.0);
    let v = [mu * mu * mu, mu * mu, mu, Complex::new(1.0, 0.0)];
    LinearizationA {
        matrix,
        eigenvalues,
        stable_basis: [v.map(|c| c.re), v.map(|c| c.im)],
        stable_eigenvalue: mu,
    }
}

/// Right-hand side of the nonlinear first-order system.
pub fn tail_rhs(s: f64, x: &[f64; 4]) -> Result<[f64; 4]> {
    let f = g_term(x, s)? + h_term(x, s);
    Ok([-64.0 * x[3] + f, x[0], x[1], x[2]])
}

/// Linearization of [`tail_rhs`] at `x = 0` (the `g` part is quadratic).
pub fn linear_rhs(s: f64, x: &[f64; 4]) -> [f64; 4] {
    [-64.0 * x[3] + h_term(x, s), x[0], x[1], x[2]]
}

fn orthonormalize(e: &mut [[f64; 4]; 2]) {
    let n0 = scaled_norm(&e[0]);
    e[0] = e[0].map(|v| v / n0);
    let c = scaled_dot(&e[0], &e[1]);
    for i in 0..4 {
        e[1][i] -= c * e[0][i];
    }
    let n1 = scaled_norm(&e[1]);
    e[1] = e[1].map(|v| v / n1);
}

/// Basis (orthonormal in the scaled inner product) of the tangent space at
/// `s_bar` of the stable manifold of the linearized non-autonomous system.
/// Obtained by continuing the stable subspace of `A` backward from
/// `s_bar + FRAME_HORIZON`; backward in `s` the unstable directions decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableFrame {
    pub s_bar: f64,
    pub basis: [[f64; 4]; 2],
}

impl StableFrame {
    pub fn at(s_bar: f64) -> Result<Self> {
        if !(s_bar > 1.0) {
            return Err(Error::Config(format!("tail shooting needs s_bar > 1, got {s_bar}")));
        }
        let mut e = stable_subspace().stable_basis;
        orthonormalize(&mut e);
        let opts = OdeOptions {
            atol: 1e-14,
            rtol: 1e-12,
            ..OdeOptions::default()
        };
        let mut s = s_bar + FRAME_HORIZON;
        while s > s_bar + 1e-12 {
            let next = (s - 1.0).max(s_bar);
            for v in e.iter_mut() {
                // tau = -s runs forward
                let back = |tau: f64, y: &[f64; 4]| Ok(linear_rhs(-tau, y).map(|c| -c));
                let sol = integrate(back, -s, *v, &[-next], &opts, |_, _| false)?;
                *v = sol.x[0];
            }
            orthonormalize(&mut e);
            s = next;
        }
        Ok(StableFrame { s_bar, basis: e })
    }

    pub fn point(&self, p: [f64; 2]) -> [f64; 4] {
        std::array::from_fn(|i| p[0] * self.basis[0][i] + p[1] * self.basis[1][i])
    }

    /// Coordinates of the scaled-orthogonal projection of `x`.
    pub fn project(&self, x: &[f64; 4]) -> [f64; 2] {
        [scaled_dot(&self.basis[0], x), scaled_dot(&self.basis[1], x)]
    }
}

/// Trajectory of one shot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Shot {
    pub states: Vec<TailState>,
    /// First `s` at which `|x| > BLOW_UP`, if any.
    pub blow_up: Option<f64>,
}

/// Integrates the nonlinear system from `x(s0) = x0` through `outputs`.
pub fn shoot_from_state(x0: [f64; 4], s0: f64, outputs: &[f64]) -> Result<Shot> {
    let sol = integrate(tail_rhs, s0, x0, outputs, &OdeOptions::default(), |_, x| scaled_norm(x) > BLOW_UP)?;
    let mut states: Vec<TailState> = sol.s.iter().zip(&sol.x).map(|(&s, &x)| TailState { s, x }).collect();
    if states.is_empty() || states[0].s > s0 {
        states.insert(0, TailState { s: s0, x: x0 });
    }
    Ok(Shot {
        states,
        blow_up: sol.stopped_at,
    })
}

fn output_grid(s_bar: f64, s_end: f64) -> Vec<f64> {
    let n = ((s_end - s_bar) / OUTPUT_STEP).ceil().max(1.0) as usize;
    (0..=n).map(|k| s_bar + (s_end - s_bar) * k as f64 / n as f64).collect()
}

/// Shot from `x(s_bar) = p_1 e_1 + p_2 e_2` in the stable frame, with
/// states every [`OUTPUT_STEP`] up to `s_end`.
pub fn shoot_tail(p: [f64; 2], s_bar: f64, s_end: f64) -> Result<Shot> {
    let frame = StableFrame::at(s_bar)?;
    shoot_tail_in(&frame, p, &output_grid(s_bar, s_end))
}

pub fn shoot_tail_in(frame: &StableFrame, p: [f64; 2], outputs: &[f64]) -> Result<Shot> {
    shoot_from_state(frame.point(p), frame.s_bar, outputs)
}

/// Result of fitting a shot to sampled `(w, w')`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchReport {
    pub s_bar: f64,
    pub window: [f64; 2],
    pub p: [f64; 2],
    /// Sup over the window of `max(|dw|, |dw'|)`.
    pub mismatch: f64,
    /// `mismatch` divided by the sup of the sampled `|w|, |w'|`.
    pub relative_mismatch: f64,
    /// Sup mismatch in `(w'', w''')`; diagnostic only.
    pub higher_mismatch: f64,
    pub iterations: usize,
    pub samples: usize,
}

/// Samples of `(w, w', w'', w''')` at increasing `s`.
#[derive(Debug, Clone)]
pub struct TailData {
    pub s: Vec<f64>,
    pub x: Vec<[f64; 4]>,
}

impl TailData {
    pub fn from_sampler(sampler: &TailSampler, a: f64, b: f64) -> Result<Self> {
        let s = sampler.nodes_in(a, b);
        let x = s.iter().map(|&si| sampler.tail_state(si).map(|t| t.x)).collect::<Result<_>>()?;
        Ok(TailData { s, x })
    }
}

/// Least-squares match of a stable-manifold shot to the tail of a
/// `lambda = 1` minimizer on `[s_bar, s_bar + 4]`.
pub fn match_tail(profile: &Profile, s_bar: f64) -> Result<MatchReport> {
    let sampler = TailSampler::from_profile(profile)?;
    let s_max = sampler.s_max();
    if s_bar < s_max / 3.0 || s_bar > s_max / 2.0 {
        warn!("s_bar = {s_bar} outside the recommended range [{}, {}]", s_max / 3.0, s_max / 2.0);
    }
    let data = TailData::from_sampler(&sampler, s_bar, s_bar + 4.0)?;
    match_tail_data(&data, s_bar)
}

/// Gauss-Newton fit of `p` to `(w, w')` samples. Squared residuals are
/// weighted by `exp(2(s - s_bar))` so that every part of the window counts.
pub fn match_tail_data(data: &TailData, s_bar: f64) -> Result<MatchReport> {
    if data.s.len() < 4 || data.s[0] < s_bar - 1e-9 {
        return Err(Error::FitFailed("tail window has too few samples".into()));
    }
    let frame = StableFrame::at(s_bar)?;
    let outputs: Vec<f64> = data.s.iter().copied().filter(|&s| s > s_bar).collect();
    let weight: Vec<f64> = data.s.iter().map(|s| (s - s_bar).exp()).collect();
    let residual = |p: [f64; 2]| -> Result<Vec<f64>> {
        let shot = shoot_tail_in(&frame, p, &outputs)?;
        if shot.blow_up.is_some() {
            return Err(Error::FitFailed("trial shot left the stable neighbourhood".into()));
        }
        let mut r = Vec::with_capacity(2 * data.s.len());
        for ((st, x), wt) in shot.states.iter().skip(shot.states.len() - data.s.len()).zip(&data.x).zip(&weight) {
            r.push(wt * (st.x[3] - x[3]));
            r.push(wt * (st.x[2] - x[2]) / KAPPA);
        }
        Ok(r)
    };
    let mut p = frame.project(&data.x[0]);
    let mut r = residual(p)?;
    let mut iterations = 0;
    for _ in 0..30 {
        iterations += 1;
        let scale = p[0].abs().max(p[1].abs()).max(1e-12);
        let mut jac = [vec![], vec![]];
        for k in 0..2 {
            let h = 1e-4 * scale;
            let mut pp = p;
            pp[k] += h;
            let mut pm = p;
            pm[k] -= h;
            let (rp, rm) = (residual(pp)?, residual(pm)?);
            jac[k] = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (a11, a12, a22) = (dot(&jac[0], &jac[0]), dot(&jac[0], &jac[1]), dot(&jac[1], &jac[1]));
        let (b1, b2) = (-dot(&jac[0], &r), -dot(&jac[1], &r));
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::FitFailed("singular normal equations".into()));
        }
        let dp = [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det];
        p = [p[0] + dp[0], p[1] + dp[1]];
        r = residual(p)?;
        if dp[0].abs().max(dp[1].abs()) <= 1e-12 * scale {
            break;
        }
    }
    let shot = shoot_tail_in(&frame, p, &outputs)?;
    let states = &shot.states[shot.states.len() - data.s.len()..];
    let mut mismatch: f64 = 0.0;
    let mut higher: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (st, x) in states.iter().zip(&data.x) {
        mismatch = mismatch.max((st.x[3] - x[3]).abs()).max((st.x[2] - x[2]).abs());
        higher = higher.max((st.x[1] - x[1]).abs()).max((st.x[0] - x[0]).abs());
        size = size.max(x[3].abs()).max(x[2].abs());
    }
    Ok(MatchReport {
        s_bar,
        window: [data.s[0], *data.s.last().unwrap()],
        p,
        mismatch,
        relative_mismatch: if size > 0.0 { mismatch / size } else { mismatch },
        higher_mismatch: higher,
        iterations,
        samples: data.s.len(),
    })
}
