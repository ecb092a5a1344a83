use std::sync::OnceLock;

use vkcone::energy::EnergyModel;
use vkcone::euler_lagrange::*;
use vkcone::grid::{build_grid, Profile};
use vkcone::minimize::*;

/// Polished `lambda = 1` minimizer on a fine mesh; the quintic jets need
/// about 16k cells before their third derivatives reach `1e-6`.
fn fine_minimizer() -> &'static Profile {
    static CELL: OnceLock<Profile> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = MinimizeConfig {
            n_cells: 16384,
            polish: true,
            ..MinimizeConfig::default()
        };
        minimize(&cfg).expect("fine minimization").profile
    })
}

#[test]
fn s_form_residuals_vanish_on_the_minimizer() {
    let sampler = TailSampler::from_profile(fine_minimizer()).unwrap();
    let s = sampler.nodes_in(2.0, sampler.s_max() - 2.0);
    let u: Vec<Jet> = s.iter().map(|&x| sampler.u_jet(x).unwrap()).collect();
    let w: Vec<Jet> = s.iter().map(|&x| sampler.w_jet(x).unwrap()).collect();
    let (r1, r2) = el_residual_s(&s, &u, &w).unwrap();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(sup(&r1) <= 1e-6, "{:e}", sup(&r1));
    assert!(sup(&r2) <= 1e-6, "{:e}", sup(&r2));
}

#[test]
fn reconstructed_u_matches_the_minimizer() {
    let sampler = TailSampler::from_profile(fine_minimizer()).unwrap();
    let s = sampler.nodes_in(2.0, sampler.s_max() - 2.0);
    let w: Vec<Jet> = s.iter().map(|&x| sampler.w_jet(x).unwrap()).collect();
    let u = reconstruct_u(&s, &w).unwrap();
    let err = s
        .iter()
        .zip(&u)
        .map(|(&x, v)| (v - sampler.u_jet(x).unwrap()[0]).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-4, "{err:e}");
}

#[test]
fn shifted_match_follows_the_same_trajectory() {
    let p = minimize(&MinimizeConfig {
        polish: true,
        ..MinimizeConfig::default()
    })
    .unwrap()
    .profile;
    let a = match_tail(&p, 7.0).unwrap();
    let b = match_tail(&p, 8.0).unwrap();
    let out: Vec<f64> = (0..=60).map(|k| 8.0 + 0.05 * k as f64).collect();
    let sa = shoot_tail_in(&StableFrame::at(7.0).unwrap(), a.p, &out).unwrap();
    let sb = shoot_tail_in(&StableFrame::at(8.0).unwrap(), b.p, &out[1..]).unwrap();
    for (x, y) in sa.states.iter().skip(1).zip(&sb.states) {
        assert!((x.s - y.s).abs() < 1e-12);
        for i in 0..4 {
            assert!((x.x[i] - y.x[i]).abs() <= 1e-7, "s = {}: {:?} vs {:?}", x.s, x.x, y.x);
        }
    }
}

/// `u = r log r / 2 + 3r + 2/r`, `w = 0` solves the `u` equation exactly;
/// the scaled discrete residual on `[1, 9]` is second order.
#[test]
fn closed_form_residual_is_second_order() {
    let model = EnergyModel::default();
    let residual = |n: usize| {
        let g = build_grid(225.0, n, 8).unwrap();
        let p = Profile::from_fn(g, 1.0, |r| if r > 0.0 { 0.5 * r * r.ln() + 3.0 * r + 2.0 / r } else { 0.0 }, |_| 0.0).unwrap();
        let res = el_residual_r(&p, &model).unwrap();
        p.grid()
            .nodes()
            .iter()
            .zip(&res.u)
            .filter(|(&r, _)| (1.0..=9.0).contains(&r))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = [2048, 4096, 8192, 16384].iter().map(|&n| residual(n)).collect();
    for pair in errs.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order > 1.9, "{errs:?}");
    }
    assert!(errs[3] < 1e-5);
}
