//! Damped Newton iteration on the discrete stationarity system.

use log::{debug, warn};

use crate::energy::{EnergyModel, Objective};
use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::minimize::{OuterBoundary, ARMIJO_C};

/// Stalling within this factor of the target ends the iteration quietly.
const STAGNATION_BAND: f64 = 100.0;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Stop once the gradient sup norm is at most this.
    pub target: f64,
    pub max_steps: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            target: 1e-12,
            max_steps: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub profile: Profile,
    /// Final gradient sup norm.
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton polish with the default cutoff, far-field closure and options.
pub fn newton_polish(profile: &Profile) -> Result<Profile> {
    let r = newton_polish_with(profile, &EnergyModel::default(), OuterBoundary::FarField, &NewtonOptions::default())?;
    Ok(r.profile)
}

/// Newton steps with the exact banded Hessian (Gauss-Newton when the exact
/// step is not a descent direction). A step is accepted once it reduces
/// the gradient sup norm or satisfies the Armijo condition.
pub fn newton_polish_with(
    profile: &Profile,
    model: &EnergyModel,
    boundary: OuterBoundary,
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    let grid = profile.grid();
    let obj = Objective::new(model, grid, profile.lambda(), boundary == OuterBoundary::FarField);
    let mut x = Objective::pack(profile);
    let (mut f, mut g) = obj.value_and_gradient(&x);
    let mut gnorm = sup_norm(&g);
    let mut steps = 0;
    let mut stagnant = 0;
    while gnorm > opts.target {
        // near the target the gradient is dominated by rounding in the cell
        // sums; stop once full steps no longer halve it
        if stagnant >= 3 && gnorm < STAGNATION_BAND * opts.target {
            warn!("newton polish stalled at |g| = {gnorm:e} (target {:e})", opts.target);
            break;
        }
        if steps == opts.max_steps {
            return Err(Error::NewtonDiverged(format!(
                "gradient norm {gnorm:e} after {steps} damped steps"
            )));
        }
        steps += 1;
        let mut d = direction(&obj, &x, &g, true)?;
        let mut slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            d = direction(&obj, &x, &g, false)?;
            slope = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = obj.value_and_gradient(&xt);
            let nt = sup_norm(&gt);
            if ft.is_finite() && (nt < gnorm || ft <= f + ARMIJO_C * t * slope) {
                stagnant = if nt > 0.5 * gnorm { stagnant + 1 } else { 0 };
                x = xt;
                f = ft;
                g = gt;
                gnorm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        debug!("newton step {steps}: t = {t}, |g| = {gnorm:e}");
        if !accepted {
            return Err(Error::NewtonDiverged(format!("no acceptable step at |g| = {gnorm:e}")));
        }
    }
    Ok(NewtonResult {
        profile: obj.to_profile(&x)?,
        residual: gnorm,
        objective: f,
        iterations: steps,
    })
}

fn direction(obj: &Objective, x: &[f64], g: &[f64], exact: bool) -> Result<Vec<f64>> {
    let lu = obj.hessian(x, exact).lu()?;
    Ok(lu.solve(g).into_iter().map(|v| -v).collect())
}
