//! Energy on the unit disk as `lambda -> 0`.
//!
//! `I_lambda` is the unrenormalized energy on `(0, 1)` of the minimizer of
//! the renormalized problem on `(0, r_max)`. Since `psi(r / lambda) = 1` on
//! `(lambda, 1)`,
//!
//! ```text
//! I_lambda = E_hat_lambda^1 + lambda^2 (C_psi + |log lambda|).
//! ```
//!
//! The sweep also minimizes `E_hat_lambda^1` directly on the unit disk with
//! a free edge and evaluates the cone at each `lambda` as an upper bound.

use log::info;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::minimize::{continuation_sweep_on, minimize_profile, MinimizeConfig, OuterBoundary};
use crate::numeric::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub i_over_lambda2: f64,
    pub log_inv_lambda: f64,
    /// `E_hat_lambda^{r_max}` of the minimizer.
    pub e_hat: f64,
    pub converged: bool,
}

/// Direct minimization of `E_hat_lambda^1` with a free edge at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitDiskRow {
    pub lambda: f64,
    pub i_over_lambda2: f64,
    /// Restricted minus direct value of `lambda^-2 I_lambda`; nonnegative
    /// up to the descent tolerance.
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Fit `lambda^-2 I_lambda ~ slope |log lambda| + intercept`.
    pub slope: f64,
    pub intercept: f64,
    /// Max minus min of `lambda^-2 I_lambda - |log lambda|`.
    pub residual_spread: f64,
    pub unit_disk: Vec<UnitDiskRow>,
    pub unit_disk_slope: f64,
    /// `lambda^-2 E_hat_lambda^1` of the cone at each `lambda`.
    pub cone_upper_bound: Vec<f64>,
}

pub fn scaling_sweep(lambdas: &[f64], base: &MinimizeConfig) -> Result<SweepReport> {
    scaling_sweep_on(&base.grid()?, lambdas, base)
}

pub fn scaling_sweep_on(grid: &RadialGrid, lambdas: &[f64], base: &MinimizeConfig) -> Result<SweepReport> {
    if lambdas.len() < 2 {
        return Err(Error::Config("a scaling fit needs at least two lambda values".into()));
    }
    let model = EnergyModel::new(base.cutoff);
    let c_psi = model.cutoff().c_psi();
    let disk = grid.truncated(1.0)?;
    let results = continuation_sweep_on(grid, lambdas, base)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut unit_disk = Vec::with_capacity(lambdas.len());
    let mut cone_upper_bound = Vec::with_capacity(lambdas.len());
    for (res, &lambda) in results.iter().zip(lambdas) {
        let l2 = lambda * lambda;
        let log_inv = -lambda.ln();
        let i = model.unrenormalized_I(&res.profile)? / l2;
        rows.push(SweepRow {
            lambda,
            i_over_lambda2: i,
            log_inv_lambda: log_inv,
            e_hat: res.energy.e_hat_r,
            converged: res.converged,
        });

        let start = res.profile.resample(&disk);
        let direct = minimize_profile(&start, &model, OuterBoundary::Free, base.grad_tol, base.max_iters, base.memory)?;
        let i_disk = direct.energy.e_hat_r / l2 + c_psi + log_inv;
        unit_disk.push(UnitDiskRow {
            lambda,
            i_over_lambda2: i_disk,
            gap: i - i_disk,
            converged: direct.converged,
        });

        let cone = model.cone(grid, lambda)?;
        cone_upper_bound.push(model.energy_hat_R(&cone, 1.0)?.e_hat_r / l2);
        info!("lambda = {lambda}: I / lambda^2 = {i:.9} (unit disk {i_disk:.9})");
    }
    let x: Vec<f64> = rows.iter().map(|r| r.log_inv_lambda).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.i_over_lambda2).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    let dev: Vec<f64> = rows.iter().map(|r| r.i_over_lambda2 - r.log_inv_lambda).collect();
    let residual_spread = dev.iter().copied().fold(f64::MIN, f64::max) - dev.iter().copied().fold(f64::MAX, f64::min);
    let yd: Vec<f64> = unit_disk.iter().map(|r| r.i_over_lambda2).collect();
    let (unit_disk_slope, _) = linear_fit(&x, &yd);
    Ok(SweepReport {
        rows,
        slope,
        intercept,
        residual_spread,
        unit_disk,
        unit_disk_slope,
        cone_upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_identity_on_the_cone() {
        // for the cone, I_lambda is the bending energy of psi on (0, 1)
        let model = EnergyModel::default();
        let g = crate::grid::build_grid(225.0, 2048, 8).unwrap();
        for lambda in [0.5, 0.125] {
            let cone = model.cone(&g, lambda).unwrap();
            let i = model.unrenormalized_I(&cone).unwrap();
            let e1 = model.energy_hat_R(&cone, 1.0).unwrap().e_hat_r;
            let l2 = lambda * lambda;
            let expect = e1 + l2 * (model.cutoff().c_psi() - lambda.ln());
            assert!((i - expect).abs() < 1e-9 * i.abs().max(1.0), "{i} vs {expect}");
        }
    }

    #[test]
    fn needs_two_points() {
        let cfg = MinimizeConfig::default();
        assert!(scaling_sweep(&[0.5], &cfg).is_err());
    }
}
