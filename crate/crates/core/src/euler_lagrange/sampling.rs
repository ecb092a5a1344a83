//! Smooth derivatives of a discrete `lambda = 1` profile in `s = sqrt(r)`.
//!
//! Jets come from least-squares quintics through the 7 mesh nodes nearest
//! to the evaluation point.

use nalgebra::{SMatrix, SVector};

use super::s_form::{Jet, TailState};
use crate::energy::{to_tilde, Cutoff};
use crate::error::{Error, Result};
use crate::grid::Profile;

const STENCIL: usize = 7;

/// Tilde variables of a profile as functions of `s`, on nodes with `r >= 1`.
#[derive(Debug, Clone)]
pub struct TailSampler {
    s: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl TailSampler {
    pub fn from_profile(profile: &Profile) -> Result<Self> {
        if profile.lambda() != 1.0 {
            return Err(Error::LambdaNotOne(profile.lambda()));
        }
        // psi = 1 on r >= 1 for every admissible cutoff
        let (u, w) = to_tilde(profile, &Cutoff::standard());
        let start = profile.grid().require_node(1.0)?;
        let nodes = &profile.grid().nodes()[start..];
        Ok(TailSampler {
            s: nodes.iter().map(|r| r.sqrt()).collect(),
            u: u[start..].to_vec(),
            w: w[start..].to_vec(),
        })
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Mesh points in `s` within `[a, b]`.
    pub fn nodes_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.s.iter().copied().filter(|&s| s >= a - 1e-12 && s <= b + 1e-12).collect()
    }

    fn stencil(&self, s: f64) -> Result<usize> {
        if self.s.len() < STENCIL || s < self.s[0] || s > self.s_max() {
            return Err(Error::FitFailed(format!("s = {s} outside the sampled tail")));
        }
        let k = self.s.partition_point(|&x| x < s);
        let lo = k.saturating_sub(STENCIL / 2).min(self.s.len() - STENCIL);
        Ok(lo)
    }

    fn jet(&self, values: &[f64], s: f64) -> Result<Jet> {
        let lo = self.stencil(s)?;
        let xs = &self.s[lo..lo + STENCIL];
        let scale = (xs[STENCIL - 1] - xs[0]) / (STENCIL - 1) as f64;
        let mut m = SMatrix::<f64, STENCIL, 6>::zeros();
        let mut rhs = SVector::<f64, STENCIL>::zeros();
        for i in 0..STENCIL {
            let t = (xs[i] - s) / scale;
            let mut p = 1.0;
            for j in 0..6 {
                m[(i, j)] = p;
                p *= t;
            }
            rhs[i] = values[lo + i];
        }
        let c = m
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::FitFailed(e.to_string()))?;
        let mut out = [0.0; 5];
        let mut fact = 1.0;
        for k in 0..5 {
            if k > 0 {
                fact *= k as f64;
            }
            out[k] = c[k] * fact / scale.powi(k as i32);
        }
        Ok(out)
    }

    pub fn w_jet(&self, s: f64) -> Result<Jet> {
        self.jet(&self.w, s)
    }

    pub fn u_jet(&self, s: f64) -> Result<Jet> {
        self.jet(&self.u, s)
    }

    pub fn tail_state(&self, s: f64) -> Result<TailState> {
        Ok(TailState::from_jet(s, &self.w_jet(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::to_hat;
    use crate::grid::build_grid;

    #[test]
    fn recovers_derivatives_of_smooth_data() {
        let g = build_grid(225.0, 2048, 4).unwrap();
        let f = |s: f64| 0.01 * (-0.5 * s).exp() * (2.0 * s).sin();
        let u: Vec<f64> = g.nodes().iter().map(|&r| if r >= 1.0 { f(r.sqrt()) } else { 0.0 }).collect();
        let w = u.clone();
        let p = to_hat(&g, &u, &w, 1.0, &Cutoff::standard()).unwrap();
        let ts = TailSampler::from_profile(&p).unwrap();
        let s = 5.3;
        let jet = ts.w_jet(s).unwrap();
        // derivatives via complex exponent (-0.5 + 2i)^k
        let (mut re, mut im) = (1.0f64, 0.0f64);
        let a = 0.01 * (-0.5 * s).exp();
        for (k, v) in jet.iter().enumerate() {
            let exact = a * (re * (2.0 * s).sin() + im * (2.0 * s).cos());
            let tol = [1e-14, 1e-12, 1e-10, 1e-8, 1e-5][k];
            assert!((v - exact).abs() < tol, "k={k}: {v} vs {exact}");
            let (nr, ni) = (-0.5 * re - 2.0 * im, 2.0 * re - 0.5 * im);
            re = nr;
            im = ni;
        }
        let q = Profile::new(g.clone(), p.u_hat().to_vec(), p.w_hat().to_vec(), 0.5).unwrap();
        assert!(matches!(TailSampler::from_profile(&q), Err(Error::LambdaNotOne(_))));
    }
}
