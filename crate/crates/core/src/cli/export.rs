//! Text formats written by the command-line pipelines.
//!
//! Floats are printed with `{:e}`, the shortest representation that parses
//! back to the same bits, so every file round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::SweepRow;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::grid::{Profile, RadialGrid};

pub const PROFILE_COLUMNS: &str = "r,u_hat,w_hat,u_tilde,w_tilde,density,renorm_density";
pub const SWEEP_COLUMNS: &str = "lambda,I_over_lambda2,log_inv_lambda,E_hat,converged";

/// Profile table with a leading `# lambda = ...` comment and the column line.
pub fn profile_csv(profile: &Profile, model: &EnergyModel) -> String {
    let (ut, wt) = model.to_tilde(profile);
    let (rho, ren) = model.nodal_density(profile);
    let mut out = format!(
        "# lambda = {:e}, cutoff onset = {:e}\n{PROFILE_COLUMNS}\n",
        profile.lambda(),
        model.cutoff().r_on()
    );
    for k in 0..profile.grid().n_nodes() {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            profile.grid().nodes()[k],
            profile.u_hat()[k],
            profile.w_hat()[k],
            ut[k],
            wt[k],
            rho[k],
            ren[k]
        );
    }
    out
}

/// Reads the `r`, `u_hat`, `w_hat` columns and `lambda` back from
/// [`profile_csv`] output.
pub fn parse_profile_csv(text: &str) -> Result<Profile> {
    let bad = |msg: String| Error::Config(format!("profile table: {msg}"));
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| bad("empty".into()))?;
    let lambda = head
        .strip_prefix("# lambda = ")
        .and_then(|rest| rest.split(',').next())
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| bad(format!("expected a lambda comment, found {head:?}")))?;
    if lines.next() != Some(PROFILE_COLUMNS) {
        return Err(bad("missing column header".into()));
    }
    let (mut r, mut u, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if f.len() != 7 {
            return Err(bad(format!("row {} has {} fields", i + 1, f.len())));
        }
        r.push(f[0]);
        u.push(f[1]);
        w.push(f[2]);
    }
    Profile::new(RadialGrid::from_nodes(r)?, u, w, lambda)
}

pub fn read_profile_csv(path: &Path) -> Result<Profile> {
    parse_profile_csv(&fs::read_to_string(path)?)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_COLUMNS}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{}",
            r.lambda, r.i_over_lambda2, r.log_inv_lambda, r.e_hat, r.converged
        );
    }
    out
}

/// `W(r) = int_0^r w_hat`, exact for the piecewise linear interpolant.
pub fn height_function(profile: &Profile) -> Vec<f64> {
    let r = profile.grid().nodes();
    let w = profile.w_hat();
    let mut acc = vec![0.0; r.len()];
    for k in 1..r.len() {
        acc[k] = acc[k - 1] + 0.5 * (r[k] - r[k - 1]) * (w[k] + w[k - 1]);
    }
    acc
}

/// Surface of revolution traced by `(r, phi) -> (U, sqrt(1 + eps^2) phi, eps W)`
/// with `U = r + (eps^2 / 2)(u_hat - r)`, in Cartesian coordinates.
#[derive(Debug, Clone)]
pub struct Surface {
    pub epsilon: f64,
    pub angular_samples: usize,
    /// `vertices[0]` is the apex; ring `k` (radius `r_k`, `k >= 1`) occupies
    /// `1 + (k - 1) m .. 1 + k m` with `m = angular_samples + 1`.
    pub vertices: Vec<[f64; 3]>,
    /// 1-based vertex indices.
    pub faces: Vec<[usize; 3]>,
    /// Radii where `U < 0`: the map pushes material through the axis.
    pub penetrating_radii: Vec<f64>,
}

pub fn export_surface(profile: &Profile, epsilon: f64, angular_samples: usize) -> Result<Surface> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if angular_samples < 3 {
        return Err(Error::Config(format!("need at least 3 angular samples, got {angular_samples}")));
    }
    let e2 = epsilon * epsilon;
    let stretch = (1.0 + e2).sqrt();
    let r = profile.grid().nodes();
    let height = height_function(profile);
    let m = angular_samples + 1;
    let mut vertices = vec![[0.0, 0.0, epsilon * height[0]]];
    let mut penetrating_radii = Vec::new();
    for k in 1..r.len() {
        let big_u = r[k] + 0.5 * e2 * (profile.u_hat()[k] - r[k]);
        if big_u < 0.0 {
            penetrating_radii.push(r[k]);
        }
        // the angle covers (1 + eps^2)^(1/2) turns, so the seam does not close
        for j in 0..m {
            let phi = stretch * std::f64::consts::TAU * j as f64 / angular_samples as f64;
            vertices.push([big_u * phi.cos(), big_u * phi.sin(), epsilon * height[k]]);
        }
    }
    let mut faces = Vec::with_capacity((2 * r.len()) * angular_samples);
    let ring = |k: usize, j: usize| 2 + (k - 1) * m + j;
    for j in 0..angular_samples {
        faces.push([1, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..r.len() - 1 {
        for j in 0..angular_samples {
            faces.push([ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)]);
            faces.push([ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)]);
        }
    }
    Ok(Surface {
        epsilon,
        angular_samples,
        vertices,
        faces,
        penetrating_radii,
    })
}

impl Surface {
    /// Wavefront OBJ text. Self-penetrating radii are listed as comments.
    pub fn to_obj(&self) -> String {
        let mut out = format!(
            "# vkcone surface, epsilon = {:e}, angular samples = {}\n",
            self.epsilon, self.angular_samples
        );
        if self.penetrating_radii.is_empty() {
            out.push_str("# no self-penetration at sampled radii\n");
        } else {
            let _ = writeln!(out, "# self-penetration (U < 0) at {} radii:", self.penetrating_radii.len());
            for r in &self.penetrating_radii {
                let _ = writeln!(out, "# penetrating r = {r:e}");
            }
        }
        for v in &self.vertices {
            let _ = writeln!(out, "v {:e} {:e} {:e}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0], f[1], f[2]);
        }
        out
    }
}

/// Writes every `(name, contents)` pair into `dir`, each through a temporary
/// file renamed into place, so a failed run leaves no half-written output.
pub fn write_artifacts(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, text) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        let res = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(text.as_bytes())?;
            f.sync_all()
        });
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e.into());
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest)?;
        written.push(dest);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{cone_profile, Cutoff};
    use crate::grid::build_grid;

    #[test]
    fn profile_round_trip_is_exact() {
        let g = build_grid(225.0, 256, 4).unwrap();
        let p = crate::analysis::corpus::random_profile(&g, 0.5, 3);
        let text = profile_csv(&p, &EnergyModel::default());
        let q = parse_profile_csv(&text).unwrap();
        assert_eq!(q.lambda(), 0.5);
        assert_eq!(q.grid().nodes(), p.grid().nodes());
        assert_eq!(q.u_hat(), p.u_hat());
        assert_eq!(q.w_hat(), p.w_hat());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_profile_csv("").is_err());
        assert!(parse_profile_csv("# lambda = 1\nr,u\n").is_err());
        let g = build_grid(25.0, 64, 0).unwrap();
        let p = cone_profile(&g, 1.0, &Cutoff::standard()).unwrap();
        let text = profile_csv(&p, &EnergyModel::default()).replace(",0e0,", ",x,");
        assert!(parse_profile_csv(&text).is_err());
    }

    #[test]
    fn cone_surface_has_slope_eps() {
        // u_hat = 0, w_hat = psi
        let g = build_grid(225.0, 512, 0).unwrap();
        let c = Cutoff::standard();
        let p = Profile::from_fn(g, 1.0, |_| 0.0, |r| c.psi(r)).unwrap();
        let eps = 0.2;
        let s = export_surface(&p, eps, 16).unwrap();
        let height = height_function(&p);
        let last = s.vertices.len() - 17;
        let v = s.vertices[last];
        let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let r = 225.0;
        let big_u = r * (1.0 - 0.5 * eps * eps);
        assert!((rho - big_u).abs() < 1e-12 * r);
        assert!((v[2] / rho - eps * height[height.len() - 1] / big_u).abs() < 1e-14);
        // W(r) = r - const, so z / rho tends to eps / (1 - eps^2 / 2)
        let limit = eps / (1.0 - 0.5 * eps * eps);
        assert!((v[2] / rho / limit - 1.0).abs() < 0.01);
        assert!(s.penetrating_radii.is_empty());
        assert_eq!(s.faces.len(), 16 + 2 * 16 * 511);
    }

    #[test]
    fn small_eps_flattens() {
        let g = build_grid(25.0, 64, 0).unwrap();
        let p = Profile::from_fn(g, 1.0, |_| 0.0, |r| r.min(1.0)).unwrap();
        let h = height_function(&p);
        let wmax = h.iter().fold(0.0f64, |m, v| m.max(*v));
        for eps in [0.1, 0.01, 0.001] {
            let s = export_surface(&p, eps, 8).unwrap();
            let zmax = s.vertices.iter().fold(0.0f64, |m, v| m.max(v[2].abs()));
            assert!(zmax <= eps * wmax * (1.0 + 1e-15));
        }
    }

    #[test]
    fn penetration_is_flagged() {
        let g = build_grid(225.0, 512, 8).unwrap();
        // u_hat / r = log(r) / 2 + 1 makes U negative for log r < 1 - 2/eps^2 - 1
        let p = Profile::from_fn(g, 1.0, |r| if r > 0.0 { r * (0.5 * r.ln() + 1.0) } else { 0.0 }, |_| 0.0).unwrap();
        let eps = 0.6;
        let s = export_surface(&p, eps, 8).unwrap();
        let r_star = (2.0 * (1.0 - 2.0 / (eps * eps) - 1.0)).exp();
        assert!(!s.penetrating_radii.is_empty());
        assert!(s.penetrating_radii.iter().all(|&r| r < r_star));
        assert!(s.to_obj().contains("# penetrating r = "));
    }

    #[test]
    fn rejects_bad_epsilon() {
        let g = build_grid(25.0, 64, 0).unwrap();
        let p = Profile::from_fn(g, 1.0, |_| 0.0, |_| 0.0).unwrap();
        for eps in [0.0, 1.0, -0.3, f64::NAN] {
            assert!(export_surface(&p, eps, 8).is_err());
        }
    }

    #[test]
    fn artifacts_land_atomically() {
        let dir = std::env::temp_dir().join(format!("vkcone-export-{}", std::process::id()));
        let files = vec![("a.txt".to_string(), "one\n".to_string()), ("b.txt".to_string(), "two\n".to_string())];
        let written = write_artifacts(&dir, &files).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(dir.join("b.txt")).unwrap(), "two\n");
        let leftovers: Vec<_> = fs::read_dir(&dir).unwrap().filter_map(|e| e.ok()).filter(|e| e.file_name().to_string_lossy().ends_with(".partial")).collect();
        assert!(leftovers.is_empty());
        fs::remove_dir_all(&dir).unwrap();
    }
}
