use std::sync::OnceLock;

use vkcone::energy::EnergyModel;
use vkcone::euler_lagrange::{el_residual_r, newton_polish_with, NewtonOptions};
use vkcone::grid::{build_grid, Profile};
use vkcone::minimize::*;

fn unit_minimizer() -> &'static MinimizeResult {
    static CELL: OnceLock<MinimizeResult> = OnceLock::new();
    CELL.get_or_init(|| minimize(&MinimizeConfig::default()).expect("lambda = 1 minimization"))
}

#[test]
fn descent_from_the_cone_converges() {
    let res = unit_minimizer();
    let model = EnergyModel::default();
    let grid = res.profile.grid();
    let cone = model.cone(grid, 1.0).unwrap();
    let e0 = model.energy_hat_R(&cone, grid.r_max()).unwrap().e_hat_r;
    assert!(res.converged && res.grad_norm <= 1e-8, "{:e}", res.grad_norm);
    assert!(res.energy.e_hat_r <= e0, "{} > {e0}", res.energy.e_hat_r);
    assert!(res.w_hat_nonnegative);
    assert!(res.profile.w_hat().iter().all(|&w| w >= 0.0));
}

#[test]
fn stationarity_in_the_mesh_dual_norm() {
    let res = unit_minimizer();
    let r = el_residual_r(&res.profile, &EnergyModel::default()).unwrap();
    assert!(r.dual_norm <= 10.0 * 1e-8, "{:e}", r.dual_norm);
}

/// Pointwise the scaled residual carries a rounding floor of about
/// `eps |u| / h^2`, which is large in the cells next to the origin; away
/// from them the polished minimizer satisfies the bound nodewise.
#[test]
fn polished_minimizer_is_pointwise_stationary_away_from_the_origin() {
    let model = EnergyModel::default();
    let res = unit_minimizer();
    let pol = newton_polish_with(&res.profile, &model, OuterBoundary::FarField, &NewtonOptions::default()).unwrap();
    let r = el_residual_r(&pol.profile, &model).unwrap();
    let nodes = pol.profile.grid().nodes();
    for k in 1..nodes.len() - 1 {
        if nodes[k] >= 1e-3 {
            assert!(r.u[k].abs().max(r.w[k].abs()) <= 10.0 * 1e-8, "r = {}", nodes[k]);
        }
    }
}

#[test]
fn newton_polish_agrees_with_descent() {
    let model = EnergyModel::default();
    let res = unit_minimizer();
    let pol = newton_polish_with(&res.profile, &model, OuterBoundary::FarField, &NewtonOptions::default()).unwrap();
    assert!(pol.residual <= 1e-12, "{:e}", pol.residual);
    assert!(pol.iterations <= 5, "{} iterations", pol.iterations);
    let e = model.energy_hat_R(&pol.profile, 225.0).unwrap().e_hat_r;
    assert!((e - res.energy.e_hat_r).abs() <= 1e-8, "{e} vs {}", res.energy.e_hat_r);

    // a second polish has nothing left to do
    let again = newton_polish_with(&pol.profile, &model, OuterBoundary::FarField, &NewtonOptions::default()).unwrap();
    assert!(again.iterations <= 1);
    let diff = again
        .profile
        .u_hat()
        .iter()
        .zip(pol.profile.u_hat())
        .chain(again.profile.w_hat().iter().zip(pol.profile.w_hat()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-12, "{diff:e}");
}

#[test]
fn newton_returns_from_a_perturbed_minimizer() {
    use rand::{Rng, SeedableRng};
    let model = EnergyModel::default();
    let res = unit_minimizer();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let p = &res.profile;
    let noisy = |v: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        v.iter().enumerate().map(|(k, x)| if k == 0 { *x } else { x + 1e-3 * rng.gen_range(-1.0..1.0) }).collect()
    };
    let u = noisy(p.u_hat(), &mut rng);
    let w = noisy(p.w_hat(), &mut rng);
    let start = p.with_values(u, w).unwrap();
    let pol = newton_polish_with(&start, &model, OuterBoundary::FarField, &NewtonOptions::default()).unwrap();
    assert!(pol.residual <= 1e-12, "{:e}", pol.residual);
    let e = model.energy_hat_R(&pol.profile, 225.0).unwrap().e_hat_r;
    assert!((e - res.energy.e_hat_r).abs() <= 1e-8, "{e} vs {}", res.energy.e_hat_r);
}

#[test]
fn symmetrization_cases() {
    let model = EnergyModel::default();
    let res = unit_minimizer();
    assert_eq!(symmetrize_w(&res.profile).w_hat(), res.profile.w_hat());

    let flipped = res.profile.with_values(res.profile.u_hat().to_vec(), res.profile.w_hat().iter().map(|w| -w).collect()).unwrap();
    let e1 = model.energy_hat_R(&res.profile, 225.0).unwrap().e_hat_r;
    let e2 = model.energy_hat_R(&flipped, 225.0).unwrap().e_hat_r;
    assert_eq!(e1, e2);
    let e3 = model.energy_hat_R(&symmetrize_w(&flipped), 225.0).unwrap().e_hat_r;
    assert_eq!(e1, e3);
}

/// For a sign-changing `w_hat` the continuous energies of `w` and `|w|`
/// agree. A linear cell holding a zero between nodal values `a` and `-b`
/// changes `int w'^2` by `4ab / h`, which is `O(h)` per sign change, so the
/// discrete gap is first order in the mesh size.
#[test]
fn symmetrization_gap_is_first_order() {
    let model = EnergyModel::default();
    let gap = |n: usize| {
        let g = build_grid(25.0, n, 0).unwrap();
        let p = Profile::from_fn(g, 1.0, |r| 0.5 / (1.0 + r), |r| (1.3 * r + 0.2).sin() * (-0.2 * r).exp()).unwrap();
        let a = model.energy_hat_R(&p, 25.0).unwrap().e_hat_r;
        let b = model.energy_hat_R(&symmetrize_w(&p), 25.0).unwrap().e_hat_r;
        (a - b).abs()
    };
    let ns = [256, 512, 1024, 2048];
    let scaled: Vec<f64> = ns.iter().map(|&n| gap(n) * n as f64).collect();
    assert!(scaled[0] > 0.0);
    let (lo, hi) = scaled.iter().fold((f64::MAX, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 2.0, "{scaled:?}");
    assert!(gap(4096) < 0.02);
}

#[test]
fn single_entry_continuation_is_plain_minimization() {
    let base = MinimizeConfig {
        n_cells: 512,
        ..MinimizeConfig::default()
    };
    let a = continuation_sweep(&[1.0], &base).unwrap();
    let b = minimize(&base).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].energy.e_hat_r, b.energy.e_hat_r);
    assert_eq!(a[0].profile.u_hat(), b.profile.u_hat());
}

#[test]
fn continuation_energies_follow_the_logarithmic_law() {
    let model = EnergyModel::default();
    let lambdas = [1.0, 0.5, 0.25, 0.125];
    let res = continuation_sweep(&lambdas, &MinimizeConfig::default()).unwrap();
    let dev: Vec<f64> = res
        .iter()
        .zip(lambdas)
        .map(|(r, l)| {
            assert!(r.converged);
            model.unrenormalized_I(&r.profile).unwrap() / (l * l) + l.ln()
        })
        .collect();
    let spread = dev.iter().copied().fold(f64::MIN, f64::max) - dev.iter().copied().fold(f64::MAX, f64::min);
    assert!(spread <= 1.0, "{dev:?}");
}

#[test]
fn rejects_bad_configurations() {
    let bad = MinimizeConfig {
        grad_tol: 0.0,
        ..MinimizeConfig::default()
    };
    assert!(minimize(&bad).is_err());
    let bad = MinimizeConfig {
        max_iters: 0,
        ..MinimizeConfig::default()
    };
    assert!(minimize(&bad).is_err());
    assert!(continuation_sweep(&[0.5, 1.0], &MinimizeConfig::default()).is_err());
}

#[test]
fn iteration_cap_reports_unconverged() {
    let cfg = MinimizeConfig {
        max_iters: 2,
        n_cells: 512,
        ..MinimizeConfig::default()
    };
    let res = minimize(&cfg).unwrap();
    assert!(!res.converged);
    assert!(res.iterations <= 2);
}
