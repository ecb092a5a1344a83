//! Minimization of the discrete renormalized energy over the free nodal
//! values, with `lambda`-continuation and `w_hat` symmetrization.
//!
//! The solver is L-BFGS with Armijo backtracking. Its initial inverse
//! Hessian is the banded Gauss-Newton matrix of the current iterate,
//! refactored every [`H0_REFRESH`] iterations; this removes the stiffness
//! coming from the graded mesh.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::banded::BandLu;
use crate::energy::{scale_profile, Cutoff, EnergyBreakdown, EnergyModel, Objective};
use crate::error::{Error, Result};
use crate::euler_lagrange::newton::{newton_polish_with, NewtonOptions};
use crate::grid::{build_grid, Profile, RadialGrid};

pub const ARMIJO_C: f64 = 1e-4;
pub const BACKTRACK: f64 = 0.5;
/// Largest energy increase a step may cause.
pub const DESCENT_SLACK: f64 = 1e-14;
pub const H0_REFRESH: usize = 20;

/// Starting point of a minimization.
#[derive(Debug, Clone, Default)]
pub enum Init {
    /// Vanishing tilde variables.
    #[default]
    Cone,
    /// Profile interpolated onto the configured grid.
    Supplied(Profile),
    /// Minimizer at another `lambda`, rescaled to the target `lambda`.
    ContinuationFrom(Profile),
}

/// Behaviour at the outer radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterBoundary {
    /// Adds `lambda^2 (u_hat(R) - lambda^2 / 2R) / R` so that the far-field
    /// asymptote satisfies the natural boundary condition.
    #[default]
    FarField,
    /// Plain free end.
    Free,
}

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    pub lambda: f64,
    pub r_max: f64,
    pub n_cells: usize,
    pub origin_refine_decades: u32,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub init: Init,
    pub cutoff: Cutoff,
    pub boundary: OuterBoundary,
    /// Follow the descent by Newton iterations on the stationarity system.
    pub polish: bool,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            lambda: 1.0,
            r_max: 225.0,
            n_cells: 2048,
            origin_refine_decades: 8,
            grad_tol: 1e-8,
            max_iters: 20_000,
            memory: 10,
            init: Init::Cone,
            cutoff: Cutoff::standard(),
            boundary: OuterBoundary::FarField,
            polish: false,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.memory < 1 {
            return Err(Error::Config("memory must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        build_grid(self.r_max, self.n_cells, self.origin_refine_decades)
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub profile: Profile,
    /// `E_hat` on the whole grid, without the boundary closure.
    pub energy: EnergyBreakdown,
    /// Minimized objective (energy plus closure term).
    pub objective: f64,
    /// Sup norm of the objective gradient.
    pub grad_norm: f64,
    pub iterations: usize,
    pub w_hat_nonnegative: bool,
    pub converged: bool,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outcome of one L-BFGS run.
struct Descent {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
}

fn lbfgs(obj: &Objective, mut x: Vec<f64>, grad_tol: f64, max_iters: usize, memory: usize) -> Result<Descent> {
    let (mut f, mut g) = obj.value_and_gradient(&x);
    if !f.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: 0 });
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(memory);
    let mut h0: Option<BandLu> = None;
    let mut since_refresh = 0;
    let mut iters = 0;
    let mut gnorm = sup_norm(&g);
    let mut stalled = 0;
    while gnorm > grad_tol && iters < max_iters {
        if h0.is_none() || since_refresh >= H0_REFRESH {
            h0 = Some(obj.hessian(&x, false).lu()?);
            since_refresh = 0;
        }
        let base = h0.as_ref().unwrap();
        let mut d = two_loop(&g, &history, base);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = base.solve(&g).iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = obj.value_and_gradient(&xt);
            if ft.is_finite() {
                let armijo = ft <= f + ARMIJO_C * t * slope;
                let floor = ft <= f + DESCENT_SLACK && sup_norm(&gt) < gnorm;
                if armijo || floor {
                    accepted = Some((xt, ft, gt, t));
                    break;
                }
            }
            t *= BACKTRACK;
        }
        iters += 1;
        since_refresh += 1;
        let Some((xt, ft, gt, t)) = accepted else {
            if history.is_empty() && since_refresh == 1 {
                debug!("line search failed at |g| = {gnorm:e}; stopping");
                break;
            }
            history.clear();
            h0 = None;
            stalled += 1;
            if stalled > 3 {
                break;
            }
            continue;
        };
        stalled = 0;
        let s: Vec<f64> = d.iter().map(|v| t * v).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xt;
        f = ft;
        g = gt;
        gnorm = sup_norm(&g);
        if iters % 100 == 0 {
            debug!("iter {iters}: E = {f:.15e}, |g| = {gnorm:e}");
        }
    }
    Ok(Descent {
        x,
        value: f,
        grad_norm: gnorm,
        iterations: iters,
        converged: gnorm <= grad_tol,
    })
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, h0: &BandLu) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alpha.push(a);
    }
    let mut r = h0.solve(&q);
    for ((s, y, rho), a) in history.iter().zip(alpha.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

/// `w_hat -> |w_hat|` nodally.
pub fn symmetrize_w(profile: &Profile) -> Profile {
    if profile.w_hat().iter().all(|&w| w >= 0.0) {
        return profile.clone();
    }
    profile
        .with_values(profile.u_hat().to_vec(), profile.w_hat().iter().map(|w| w.abs()).collect())
        .expect("same shape")
}

/// Initial profile on `grid` for the given `init`.
pub fn initial_profile(grid: &RadialGrid, lambda: f64, init: &Init, cutoff: &Cutoff) -> Result<Profile> {
    match init {
        Init::Cone => EnergyModel::new(*cutoff).cone(grid, lambda),
        Init::Supplied(p) => {
            let q = Profile::new(p.grid().clone(), p.u_hat().to_vec(), p.w_hat().to_vec(), lambda)?;
            Ok(q.resample(grid))
        }
        Init::ContinuationFrom(p) => Ok(scale_profile(p, lambda).resample(grid)),
    }
}

/// Descent from `start` on its own grid.
pub fn minimize_profile(
    start: &Profile,
    model: &EnergyModel,
    boundary: OuterBoundary,
    grad_tol: f64,
    max_iters: usize,
    memory: usize,
) -> Result<MinimizeResult> {
    let grid = start.grid();
    let lambda = start.lambda();
    let obj = Objective::new(model, grid, lambda, boundary == OuterBoundary::FarField);
    let x0 = Objective::pack(start);
    let mut run = lbfgs(&obj, x0, grad_tol, max_iters, memory)?;
    let mut iterations = run.iterations;
    let mut profile = obj.to_profile(&run.x)?;
    if profile.w_hat().iter().any(|&w| w < 0.0) {
        info!("w_hat changed sign; symmetrizing and descending again");
        profile = symmetrize_w(&profile);
        run = lbfgs(&obj, Objective::pack(&profile), grad_tol, max_iters.saturating_sub(iterations).max(1), memory)?;
        iterations += run.iterations;
        profile = obj.to_profile(&run.x)?;
    }
    let energy = model.energy_hat_R(&profile, grid.r_max())?;
    Ok(MinimizeResult {
        w_hat_nonnegative: profile.w_hat().iter().all(|&w| w >= 0.0),
        profile,
        energy,
        objective: run.value,
        grad_norm: run.grad_norm,
        iterations,
        converged: run.converged,
    })
}

pub fn minimize(config: &MinimizeConfig) -> Result<MinimizeResult> {
    config.validate()?;
    let grid = config.grid()?;
    minimize_on(&grid, config)
}

/// As [`minimize`] but on a caller-supplied grid.
pub fn minimize_on(grid: &RadialGrid, config: &MinimizeConfig) -> Result<MinimizeResult> {
    config.validate()?;
    if config.lambda <= 1.0 / 64.0 && matches!(config.init, Init::Cone) {
        warn!(
            "lambda = {} started from the cone; use continuation for small lambda",
            config.lambda
        );
    }
    let model = EnergyModel::new(config.cutoff);
    let start = initial_profile(grid, config.lambda, &config.init, &config.cutoff)?;
    let mut res = minimize_profile(&start, &model, config.boundary, config.grad_tol, config.max_iters, config.memory)?;
    if config.polish {
        let opts = NewtonOptions::default();
        let polished = newton_polish_with(&res.profile, &model, config.boundary, &opts)?;
        res.iterations += polished.iterations;
        res.grad_norm = polished.residual;
        res.objective = polished.objective;
        res.converged = polished.residual <= config.grad_tol;
        res.energy = model.energy_hat_R(&polished.profile, grid.r_max())?;
        res.w_hat_nonnegative = polished.profile.w_hat().iter().all(|&w| w >= 0.0);
        res.profile = polished.profile;
    }
    info!(
        "lambda = {}: E_hat = {:.12}, |g| = {:e}, {} iterations",
        config.lambda, res.energy.e_hat_r, res.grad_norm, res.iterations
    );
    Ok(res)
}

/// Minimizers for a descending list of `lambda`, each started from the
/// previous one. The first entry uses `base.init`.
pub fn continuation_sweep(lambdas: &[f64], base: &MinimizeConfig) -> Result<Vec<MinimizeResult>> {
    continuation_sweep_on(&base.grid()?, lambdas, base)
}

pub fn continuation_sweep_on(grid: &RadialGrid, lambdas: &[f64], base: &MinimizeConfig) -> Result<Vec<MinimizeResult>> {
    if lambdas.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Config("continuation needs strictly descending lambda values".into()));
    }
    if let Some(&l) = lambdas.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::Config(format!("continuation lambda {l} outside (0, 1]")));
    }
    let mut out: Vec<MinimizeResult> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let init = match out.last() {
            Some(prev) => Init::ContinuationFrom(prev.profile.clone()),
            None => base.init.clone(),
        };
        let cfg = MinimizeConfig {
            lambda,
            init,
            ..base.clone()
        };
        let res = minimize_on(grid, &cfg).map_err(|e| Error::Continuation {
            lambda,
            source: Box::new(e),
        })?;
        if !res.converged {
            return Err(Error::Continuation {
                lambda,
                source: Box::new(Error::Config(format!(
                    "not converged after {} iterations (|g| = {:e})",
                    res.iterations, res.grad_norm
                ))),
            });
        }
        out.push(res);
    }
    Ok(out)
}
