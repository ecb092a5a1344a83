//! Pipelines behind the `vkcone` binary.
//!
//! A run is one [`Command`] plus a [`RunConfig`] read from JSON. Every
//! pipeline computes all of its outputs in memory first and only then
//! writes them, so errors never leave partial files behind.

pub mod export;

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_far_field, fit_decay, fit_decay_u, fit_origin_on, scaling_sweep, verify_inequalities, CorpusSizes,
    OriginFit, TailFit,
};
use crate::energy::{Cutoff, EnergyModel};
use crate::error::{Error, Result};
use crate::euler_lagrange::{match_tail, shoot_tail_in, MatchReport, StableFrame, TailSampler};
use crate::grid::Profile;
use crate::minimize::{minimize, minimize_on, Init, MinimizeConfig, MinimizeResult, OuterBoundary};

pub use export::{export_surface, parse_profile_csv, profile_csv, read_profile_csv, Surface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Minimize,
    Sweep,
    Shoot,
    Analyze,
    VerifyInequalities,
    ExportSurface,
}

/// Everything a run needs. Missing JSON fields take the defaults below;
/// unknown fields are an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Set from the command line, not from the file.
    #[serde(skip)]
    pub command: Command,
    pub lambda: f64,
    pub r_max: f64,
    pub n_cells: usize,
    pub origin_refine_decades: u32,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    /// `psi` vanishes on `[0, cutoff_onset]`.
    pub cutoff_onset: f64,
    pub boundary: OuterBoundary,
    /// Newton polish after the descent.
    pub polish: bool,
    /// Starting profile (a `profile.csv` from an earlier run) instead of the cone.
    pub init_profile: Option<PathBuf>,
    /// Descending `lambda` values for `sweep`.
    pub lambdas: Vec<f64>,
    pub s_bar: f64,
    /// Window in `s = sqrt(r / lambda)` for the decay fits.
    pub decay_window: [f64; 2],
    pub origin_window: [f64; 2],
    pub seed: u64,
    pub corpus: CorpusSizes,
    /// Small parameter of the surface map, in `(0, 1)`.
    pub epsilon: f64,
    pub angular_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MinimizeConfig::default();
        RunConfig {
            command: Command::default(),
            lambda: m.lambda,
            r_max: m.r_max,
            n_cells: m.n_cells,
            origin_refine_decades: m.origin_refine_decades,
            grad_tol: m.grad_tol,
            max_iters: m.max_iters,
            memory: m.memory,
            cutoff_onset: Cutoff::standard().r_on(),
            boundary: m.boundary,
            polish: true,
            init_profile: None,
            lambdas: (3..=7).map(|k| 0.5f64.powi(k)).collect(),
            s_bar: 7.0,
            decay_window: [6.0, 12.0],
            origin_window: crate::analysis::asymptotics::ORIGIN_WINDOW,
            seed: 7,
            corpus: CorpusSizes::default(),
            epsilon: 0.2,
            angular_samples: 64,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Solver settings; reads `init_profile` if one is set.
    pub fn minimize_config(&self) -> Result<MinimizeConfig> {
        let mut m = self.base_minimize_config()?;
        if let Some(path) = &self.init_profile {
            m.init = Init::Supplied(read_profile_csv(path)?);
        }
        Ok(m)
    }

    /// Checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        Cutoff::new(self.cutoff_onset)?;
        let probe = self.base_minimize_config()?;
        probe.validate()?;
        probe.grid()?;
        match self.command {
            Command::Sweep => {
                if self.lambdas.len() < 2 {
                    return Err(Error::Config("sweep needs at least two lambda values".into()));
                }
                if self.lambdas.windows(2).any(|p| p[1] >= p[0]) || self.lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
                    return Err(Error::Config("sweep lambdas must descend within (0, 1]".into()));
                }
            }
            Command::Shoot | Command::Analyze if self.lambda != 1.0 => {
                return Err(Error::LambdaNotOne(self.lambda));
            }
            Command::ExportSurface => {
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
                }
                if self.angular_samples < 3 {
                    return Err(Error::Config("angular_samples must be at least 3".into()));
                }
            }
            _ => {}
        }
        if self.decay_window[0] >= self.decay_window[1] || self.origin_window[0] >= self.origin_window[1] {
            return Err(Error::Config("windows must be increasing intervals".into()));
        }
        if let Some(p) = &self.init_profile {
            if !p.is_file() {
                return Err(Error::Config(format!("init_profile {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn base_minimize_config(&self) -> Result<MinimizeConfig> {
        Ok(MinimizeConfig {
            lambda: self.lambda,
            r_max: self.r_max,
            n_cells: self.n_cells,
            origin_refine_decades: self.origin_refine_decades,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            memory: self.memory,
            init: Init::Cone,
            cutoff: Cutoff::new(self.cutoff_onset)?,
            boundary: self.boundary,
            polish: self.polish,
        })
    }
}

/// Contents of `energy.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub lambda: f64,
    pub r_max: f64,
    #[serde(rename = "E_hat_R")]
    pub e_hat_r: f64,
    #[serde(rename = "E_plus_R")]
    pub e_plus_r: f64,
    pub stretch_part: f64,
    pub bend_part: f64,
    pub boundary_u1: f64,
    pub identity_residual: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cutoff_onset: f64,
    pub c_psi: f64,
}

impl EnergyReport {
    fn new(res: &MinimizeResult, model: &EnergyModel) -> Self {
        let e = &res.energy;
        EnergyReport {
            lambda: e.lambda,
            r_max: e.r,
            e_hat_r: e.e_hat_r,
            e_plus_r: e.e_plus_r,
            stretch_part: e.stretch_part,
            bend_part: e.bend_part,
            boundary_u1: e.boundary_u1,
            identity_residual: e.identity_residual,
            grad_norm: res.grad_norm,
            iterations: res.iterations,
            converged: res.converged,
            cutoff_onset: model.cutoff().r_on(),
            c_psi: model.cutoff().c_psi(),
        }
    }
}

/// Contents of `fit.json` from a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_spread: f64,
    pub unit_disk_slope: f64,
    pub unit_disk: Vec<crate::analysis::sweep::UnitDiskRow>,
    pub cone_upper_bound: Vec<f64>,
    pub cutoff_onset: f64,
}

/// Contents of `analysis.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub far_field: f64,
    pub decay_w: TailFit,
    pub decay_u: TailFit,
    pub origin: OriginFit,
    pub epsilon: f64,
    /// Predicted radius below which the surface map self-penetrates.
    pub penetration_radius: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn run_minimize(config: &RunConfig) -> Result<(MinimizeResult, EnergyModel)> {
    let mc = config.minimize_config()?;
    let model = EnergyModel::new(mc.cutoff);
    let res = match &mc.init {
        // keep the configured mesh even when the start comes from a file
        Init::Supplied(_) => minimize_on(&mc.grid()?, &mc)?,
        _ => minimize(&mc)?,
    };
    if !res.converged {
        return Err(Error::Config(format!(
            "minimization did not converge in {} iterations (|g| = {:e})",
            res.iterations, res.grad_norm
        )));
    }
    Ok((res, model))
}

/// Computes the outputs of `config.command` as `(file name, contents)`.
pub fn outputs(config: &RunConfig) -> Result<Vec<(String, String)>> {
    config.validate()?;
    let mut files = Vec::new();
    match config.command {
        Command::Minimize => {
            let (res, model) = run_minimize(config)?;
            files.push(("profile.csv".into(), profile_csv(&res.profile, &model)));
            files.push(("energy.json".into(), to_json(&EnergyReport::new(&res, &model))));
        }
        Command::Sweep => {
            let mc = config.minimize_config()?;
            let rep = scaling_sweep(&config.lambdas, &mc)?;
            files.push(("sweep.csv".into(), export::sweep_csv(&rep.rows)));
            let fit = SweepFit {
                slope: rep.slope,
                intercept: rep.intercept,
                residual_spread: rep.residual_spread,
                unit_disk_slope: rep.unit_disk_slope,
                unit_disk: rep.unit_disk,
                cone_upper_bound: rep.cone_upper_bound,
                cutoff_onset: config.cutoff_onset,
            };
            files.push(("fit.json".into(), to_json(&fit)));
        }
        Command::Shoot => {
            let (res, _) = run_minimize(config)?;
            let report = match_tail(&res.profile, config.s_bar)?;
            files.push(("tail.csv".into(), tail_csv(&res.profile, &report)?));
            files.push(("match.json".into(), to_json(&report)));
        }
        Command::Analyze => {
            let (res, model) = run_minimize(config)?;
            let origin = fit_origin_on(&res.profile, config.origin_window)?;
            let report = AnalysisReport {
                far_field: check_far_field(&res.profile),
                decay_w: fit_decay(&res.profile, config.decay_window)?,
                decay_u: fit_decay_u(&res.profile, config.decay_window)?,
                penetration_radius: origin.penetration_radius(config.epsilon),
                origin,
                epsilon: config.epsilon,
            };
            files.push(("profile.csv".into(), profile_csv(&res.profile, &model)));
            files.push(("analysis.json".into(), to_json(&report)));
        }
        Command::VerifyInequalities => {
            let rep = verify_inequalities(config.seed, &config.corpus)?;
            files.push(("inequalities.json".into(), to_json(&rep)));
        }
        Command::ExportSurface => {
            let (res, _) = run_minimize(config)?;
            let surface = export_surface(&res.profile, config.epsilon, config.angular_samples)?;
            if !surface.penetrating_radii.is_empty() {
                info!("surface self-penetrates at {} sampled radii", surface.penetrating_radii.len());
            }
            files.push(("surface.obj".into(), surface.to_obj()));
        }
    }
    Ok(files)
}

/// Samples and fitted shot on the match window:
/// `s, w, w_prime, w_shot, w_prime_shot`.
fn tail_csv(profile: &Profile, report: &MatchReport) -> Result<String> {
    use std::fmt::Write as _;
    let sampler = TailSampler::from_profile(profile)?;
    let s = sampler.nodes_in(report.window[0], report.window[1]);
    let frame = StableFrame::at(report.s_bar)?;
    let outputs: Vec<f64> = s.iter().copied().filter(|&v| v > report.s_bar).collect();
    let shot = shoot_tail_in(&frame, report.p, &outputs)?;
    let states = &shot.states[shot.states.len() - s.len()..];
    let mut out = String::from("s,w,w_prime,w_shot,w_prime_shot\n");
    for (si, st) in s.iter().zip(states) {
        let x = sampler.tail_state(*si)?.x;
        let _ = writeln!(out, "{:e},{:e},{:e},{:e},{:e}", si, x[3], x[2], st.x[3], st.x[2]);
    }
    Ok(out)
}

/// Runs `config.command` and writes its files into `config.out_dir`.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    check_out_dir(&config.out_dir)?;
    let files = outputs(config)?;
    let written = export::write_artifacts(&config.out_dir, &files)?;
    for p in &written {
        info!("wrote {}", p.display());
    }
    Ok(written)
}

fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        return Err(Error::Config(format!("output path {} is not a directory", dir.display())));
    }
    let meta = dir.ancestors().find(|a| a.exists()).and_then(|a| a.metadata().ok());
    if meta.is_some_and(|m| m.permissions().readonly()) {
        return Err(Error::Config(format!("output directory {} is not writable", dir.display())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let c = RunConfig::default();
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.lambdas, vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125]);
    }

    #[test]
    fn partial_json_takes_defaults() {
        let c = RunConfig::from_json(r#"{"lambda": 0.5, "n_cells": 512}"#).unwrap();
        assert_eq!(c.lambda, 0.5);
        assert_eq!(c.n_cells, 512);
        assert_eq!(c.r_max, 225.0);
    }

    #[test]
    fn malformed_and_unknown_fields_fail() {
        assert!(RunConfig::from_json("{ lambda: 1 ").is_err());
        assert!(RunConfig::from_json(r#"{"lamda": 1.0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n_cells": -3}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let with = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(with(|_| {}).is_ok());
        assert!(with(|c| c.grad_tol = 0.0).is_err());
        assert!(with(|c| c.n_cells = 4).is_err());
        assert!(with(|c| c.cutoff_onset = 1.5).is_err());
        assert!(with(|c| {
            c.command = Command::ExportSurface;
            c.epsilon = 1.0;
        })
        .is_err());
        assert!(with(|c| {
            c.command = Command::Sweep;
            c.lambdas = vec![0.25, 0.5];
        })
        .is_err());
        assert!(with(|c| {
            c.command = Command::Shoot;
            c.lambda = 0.5;
        })
        .is_err());
    }
}
