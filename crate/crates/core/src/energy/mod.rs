//! The renormalized energy `E_hat_lambda^R`, its nonnegative part `E^+`,
//! the identities linking them, the `lambda`-rescaling and derivatives.
//!
//! Hat variables `(u_hat, w_hat)` carry the far field; tilde variables are
//! `u = u_hat - lambda^2 psi(r/lambda) / 2r` and `w = w_hat - psi(r/lambda)`.
//! The factor `lambda^2` in `u` is what the rescaling
//! `u_hat -> lambda^-1 u_hat(lambda .)` requires for the tilde pair to
//! vanish at infinity.

pub mod cutoff;
mod discrete;

pub use cutoff::Cutoff;
pub use discrete::Objective;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellRule, Profile, RadialGrid};
use crate::numeric::CompensatedSum;
use discrete::{cell_dofs, cell_energy, cell_gradient};

/// Leading-order elastic energy density.
pub fn density(u_hat: f64, w_hat: f64, du_hat: f64, dw_hat: f64, r: f64, lambda: f64) -> f64 {
    let s = w_hat * w_hat - 1.0 + du_hat;
    let t = u_hat / r;
    s * s + t * t + lambda * lambda * (dw_hat * dw_hat + w_hat * w_hat / (r * r))
}

/// Far-field cone `(lambda^2 psi(r/lambda) / 2r, psi(r/lambda))` at `r`.
pub fn cone_values(cutoff: &Cutoff, lambda: f64, r: f64) -> (f64, f64) {
    let p = cutoff.psi(r / lambda);
    if p == 0.0 {
        (0.0, 0.0)
    } else {
        (0.5 * lambda * lambda * p / r, p)
    }
}

/// Profile with vanishing tilde variables.
pub fn cone_profile(grid: &RadialGrid, lambda: f64, cutoff: &Cutoff) -> Result<Profile> {
    Profile::from_fn(
        grid.clone(),
        lambda,
        |r| cone_values(cutoff, lambda, r).0,
        |r| cone_values(cutoff, lambda, r).1,
    )
}

/// Nodal tilde variables `(u, w)`.
pub fn to_tilde(profile: &Profile, cutoff: &Cutoff) -> (Vec<f64>, Vec<f64>) {
    let lambda = profile.lambda();
    profile
        .grid()
        .nodes()
        .iter()
        .zip(profile.u_hat().iter().zip(profile.w_hat()))
        .map(|(&r, (u, w))| {
            let (cu, cw) = cone_values(cutoff, lambda, r);
            (u - cu, w - cw)
        })
        .unzip()
}

/// Inverse of [`to_tilde`].
pub fn to_hat(grid: &RadialGrid, u: &[f64], w: &[f64], lambda: f64, cutoff: &Cutoff) -> Result<Profile> {
    if u.len() != grid.n_nodes() || w.len() != grid.n_nodes() {
        return Err(Error::InvalidProfile("tilde vectors do not match the grid".into()));
    }
    let (uh, wh) = grid
        .nodes()
        .iter()
        .zip(u.iter().zip(w))
        .map(|(&r, (u, w))| {
            let (cu, cw) = cone_values(cutoff, lambda, r);
            (u + cu, w + cw)
        })
        .unzip();
    Profile::new(grid.clone(), uh, wh, lambda)
}

/// Profile at `target` parameter with the same energy up to the factor
/// `(lambda / target)^2`: nodes and `u_hat` are multiplied by
/// `target / lambda`, `w_hat` is unchanged.
pub fn scale_profile(profile: &Profile, target: f64) -> Profile {
    let k = target / profile.lambda();
    if k == 1.0 {
        return profile.clone();
    }
    let grid = profile.grid().scaled(k);
    let u = profile.u_hat().iter().map(|u| u * k).collect();
    Profile::new(grid, u, profile.w_hat().to_vec(), target).expect("rescaling preserves validity")
}

/// Every component of one energy evaluation on `(0, R)`.
///
/// For `lambda != 1`, `e_plus_r` and the boundary terms are those of the
/// profile rescaled to `lambda = 1`, multiplied by `lambda^2`, so the
/// identity `E_hat = E+ + u1 - uR/R + (lambda^2/4)(1 - lambda^2/R^2) - lambda^2 C_psi`
/// holds in every case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub lambda: f64,
    pub r: f64,
    pub stretch_part: f64,
    pub bend_part: f64,
    pub renorm_subtraction: f64,
    pub e_hat_r: f64,
    pub e_plus_r: f64,
    pub boundary_u1: f64,
    pub boundary_ur_over_r: f64,
    pub identity_residual: f64,
}

/// Energy functional with a fixed cutoff.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyModel {
    cutoff: Cutoff,
}

impl EnergyModel {
    pub fn new(cutoff: Cutoff) -> Self {
        EnergyModel { cutoff }
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    /// `lambda^2 int_a^b psi(r/lambda)^2 / r dr` for one cell.
    fn cell_subtraction(&self, lambda: f64, a: f64, b: f64) -> f64 {
        lambda * lambda * self.cutoff.psi2_over_r(a / lambda, b / lambda)
    }

    /// `lambda^2 int_0^R psi(r/lambda)^2 / r dr`; `R` must be a node.
    pub fn renorm_subtraction(&self, grid: &RadialGrid, lambda: f64, r: f64) -> Result<f64> {
        let k = grid.require_node(r)?;
        Ok((0..k)
            .map(|c| {
                let (a, b) = grid.cell(c);
                self.cell_subtraction(lambda, a, b)
            })
            .collect::<CompensatedSum>()
            .value())
    }

    /// Tilde-zero profile for this model's cutoff.
    pub fn cone(&self, grid: &RadialGrid, lambda: f64) -> Result<Profile> {
        cone_profile(grid, lambda, &self.cutoff)
    }

    pub fn to_tilde(&self, profile: &Profile) -> (Vec<f64>, Vec<f64>) {
        to_tilde(profile, &self.cutoff)
    }

    fn upto(&self, profile: &Profile, r: f64) -> Result<usize> {
        let k = profile.grid().require_node(r)?;
        if k == 0 {
            return Err(Error::InvalidGrid("integration radius must be positive".into()));
        }
        Ok(k)
    }

    /// `(stretch, bend, E_hat)` on `(0, R)`.
    fn hat_parts(&self, profile: &Profile, k: usize) -> (f64, f64, f64, f64) {
        let grid = profile.grid();
        let lambda = profile.lambda();
        let (u, w) = (profile.u_hat(), profile.w_hat());
        let mut stretch = CompensatedSum::new();
        let mut bend = CompensatedSum::new();
        let mut sub = CompensatedSum::new();
        let mut total = CompensatedSum::new();
        for c in 0..k {
            let (a, b) = grid.cell(c);
            let (s, bd) = cell_energy(&grid.rules()[c], b - a, &cell_dofs(u, w, c), lambda);
            let sc = self.cell_subtraction(lambda, a, b);
            stretch.add(s);
            bend.add(bd);
            sub.add(sc);
            total.add((s + bd) - sc);
        }
        (stretch.value(), bend.value(), sub.value(), total.value())
    }

    /// `lambda^2 E+` of the profile rescaled to `lambda = 1`, evaluated in
    /// the original variables: the full density on `(0, lambda)` and the
    /// nonnegative far-field form on `(lambda, R)`.
    fn plus_part(&self, profile: &Profile, k: usize) -> f64 {
        let grid = profile.grid();
        let lambda = profile.lambda();
        let l2 = lambda * lambda;
        let (u, w) = (profile.u_hat(), profile.w_hat());
        let split = grid.node_index(lambda);
        let mut acc = CompensatedSum::new();
        for c in 0..k {
            let (a, b) = grid.cell(c);
            let h = b - a;
            let (u0, u1, w0, w1) = (u[c], u[c + 1], w[c], w[c + 1]);
            let du = (u1 - u0) / h;
            let dw = (w1 - w0) / h;
            let inner = |rule: &CellRule| -> f64 {
                (0..2)
                    .map(|q| {
                        let r = rule.r[q];
                        let t = (r - a) / h;
                        let uh = u0 + t * (u1 - u0);
                        let wh = w0 + t * (w1 - w0);
                        rule.weight[q] * density(uh, wh, du, dw, r, lambda)
                    })
                    .sum()
            };
            let outer = |rule: &CellRule| -> f64 {
                (0..2)
                    .map(|q| {
                        let r = rule.r[q];
                        let t = (r - a) / h;
                        let ut = u0 + t * (u1 - u0) - 0.5 * l2 / r;
                        let wt = w0 + t * (w1 - w0) - 1.0;
                        let dut = du + 0.5 * l2 / (r * r);
                        let s = 2.0 * wt + wt * wt + dut;
                        let v = ut / r;
                        rule.weight[q] * (s * s + v * v + l2 * dw * dw)
                    })
                    .sum()
            };
            let v = if split.is_some_and(|i| c < i) || (split.is_none() && b <= lambda) {
                inner(&grid.rules()[c])
            } else if split.is_some() || a >= lambda {
                outer(&grid.rules()[c])
            } else {
                inner(&CellRule::new(a, lambda)) + outer(&CellRule::new(lambda, b))
            };
            acc.add(v);
        }
        acc.value()
    }

    /// Tilde `u` at radius `r`, from the piecewise-linear `u_hat`.
    fn u_tilde_at(&self, profile: &Profile, r: f64) -> f64 {
        let (uh, _) = profile.eval(r);
        uh - cone_values(&self.cutoff, profile.lambda(), r).0
    }

    /// Full breakdown of `E_hat_lambda^R`; `R` must be a node with `R >= lambda`.
    #[allow(non_snake_case)]
    pub fn energy_hat_R(&self, profile: &Profile, r: f64) -> Result<EnergyBreakdown> {
        let k = self.upto(profile, r)?;
        let lambda = profile.lambda();
        if r < lambda {
            return Err(Error::InvalidProfile(format!(
                "radius {r} lies inside the cutoff scale lambda = {lambda}"
            )));
        }
        let l2 = lambda * lambda;
        let (stretch, bend, sub, e_hat) = self.hat_parts(profile, k);
        let e_plus = self.plus_part(profile, k);
        let u1 = lambda * self.u_tilde_at(profile, lambda);
        let ur = l2 * self.u_tilde_at(profile, r) / r;
        let rhs = e_plus + u1 - ur + 0.25 * l2 * (1.0 - l2 / (r * r)) - l2 * self.cutoff.c_psi();
        Ok(EnergyBreakdown {
            lambda,
            r,
            stretch_part: stretch,
            bend_part: bend,
            renorm_subtraction: sub,
            e_hat_r: e_hat,
            e_plus_r: e_plus,
            boundary_u1: u1,
            boundary_ur_over_r: ur,
            identity_residual: (e_hat - rhs).abs(),
        })
    }

    /// `E^{+,R}` at `lambda = 1`.
    pub fn energy_plus(&self, profile: &Profile, r: f64) -> Result<f64> {
        if profile.lambda() != 1.0 {
            return Err(Error::LambdaNotOne(profile.lambda()));
        }
        let k = self.upto(profile, r)?;
        Ok(self.plus_part(profile, k))
    }

    /// Residual of the identity expressing `E^R` through `E^{+,R}` and
    /// boundary values.
    pub fn renorm_identity_check(&self, profile: &Profile, r: f64) -> Result<f64> {
        Ok(self.energy_hat_R(profile, r)?.identity_residual)
    }

    /// `I_lambda = int_0^1 rho r dr`, the energy without renormalization on
    /// the unit disk. Requires `lambda <= 1` and a node at 1.
    #[allow(non_snake_case)]
    pub fn unrenormalized_I(&self, profile: &Profile) -> Result<f64> {
        if profile.lambda() > 1.0 {
            return Err(Error::InvalidProfile(format!(
                "unit-disk energy needs lambda <= 1, got {}",
                profile.lambda()
            )));
        }
        let k = self.upto(profile, 1.0)?;
        let (s, b, _, _) = self.hat_parts(profile, k);
        Ok(s + b)
    }

    /// Gradient of the discrete `E_hat^R` with respect to the nodal values;
    /// the pinned origin entries and nodes beyond `R` get zero.
    pub fn gradient(&self, profile: &Profile, r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.upto(profile, r)?;
        let grid = profile.grid();
        let n = grid.n_nodes();
        let (u, w) = (profile.u_hat(), profile.w_hat());
        let mut gu = vec![0.0; n];
        let mut gw = vec![0.0; n];
        for c in 0..k {
            let (a, b) = grid.cell(c);
            let g = cell_gradient(&grid.rules()[c], b - a, &cell_dofs(u, w, c), profile.lambda());
            gu[c] += g[0];
            gw[c] += g[1];
            gu[c + 1] += g[2];
            gw[c + 1] += g[3];
        }
        gu[0] = 0.0;
        gw[0] = 0.0;
        Ok((gu, gw))
    }

    /// Nodal `(density, density - lambda^2 psi(r/lambda)^2 / r^2)`, using the
    /// slope of the cell to the right of each node (left for the last node).
    /// At the origin `u_hat / r` and `w_hat / r` are replaced by their limits.
    pub fn nodal_density(&self, profile: &Profile) -> (Vec<f64>, Vec<f64>) {
        let grid = profile.grid();
        let lambda = profile.lambda();
        let du = grid.derivative(profile.u_hat());
        let dw = grid.derivative(profile.w_hat());
        let n = grid.n_nodes();
        let mut rho = Vec::with_capacity(n);
        let mut ren = Vec::with_capacity(n);
        for (k, &r) in grid.nodes().iter().enumerate() {
            let c = k.min(n - 2);
            let (u, w) = (profile.u_hat()[k], profile.w_hat()[k]);
            let d = if k == 0 {
                let s = w * w - 1.0 + du[0];
                s * s + du[0] * du[0] + lambda * lambda * 2.0 * dw[0] * dw[0]
            } else {
                density(u, w, du[c], dw[c], r, lambda)
            };
            let p = self.cutoff.psi(r / lambda);
            let sub = if p == 0.0 { 0.0 } else { lambda * lambda * p * p / (r * r) };
            rho.push(d);
            ren.push(d - sub);
        }
        (rho, ren)
    }
}
