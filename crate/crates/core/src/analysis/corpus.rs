//! Seeded families of smooth test profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{cone_values, Cutoff};
use crate::grid::{Profile, RadialGrid};

/// Smooth random perturbation of the far-field cone with tilde variables
/// decaying like `exp(-r / (L lambda))`. Deterministic in `seed`.
pub fn random_profile(grid: &RadialGrid, lambda: f64, seed: u64) -> Profile {
    random_profile_with(grid, lambda, seed, &Cutoff::standard())
}

pub fn random_profile_with(grid: &RadialGrid, lambda: f64, seed: u64, cutoff: &Cutoff) -> Profile {
    random_profile_inner(grid, lambda, seed, 0.3, cutoff)
}

/// As [`random_profile`] with perturbation amplitudes drawn from
/// `(-amplitude, amplitude)`.
pub fn random_profile_scaled(grid: &RadialGrid, lambda: f64, seed: u64, amplitude: f64) -> Profile {
    random_profile_inner(grid, lambda, seed, amplitude, &Cutoff::standard())
}

fn random_profile_inner(grid: &RadialGrid, lambda: f64, seed: u64, amp: f64, cutoff: &Cutoff) -> Profile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = rng.gen_range(-amp..amp);
    let a2 = rng.gen_range(-amp..amp);
    let b1 = rng.gen_range(-amp..amp);
    let b2 = rng.gen_range(-amp..amp);
    let k1 = rng.gen_range(0.5..3.0);
    let k2 = rng.gen_range(0.5..3.0);
    let p1 = rng.gen_range(0.0..std::f64::consts::TAU);
    let p2 = rng.gen_range(0.0..std::f64::consts::TAU);
    let len = rng.gen_range(2.0..8.0);
    let u = |r: f64| {
        let x = r / lambda;
        let (cu, _) = cone_values(cutoff, lambda, r);
        cu + lambda * (a1 * (k1 * x + p1).sin() + a2) * x * (-x / len).exp()
    };
    let w = |r: f64| {
        let x = r / lambda;
        let (_, cw) = cone_values(cutoff, lambda, r);
        cw + (b1 * (k2 * x + p2).cos() + b2) * x * x / (1.0 + x * x) * (-x / len).exp()
    };
    Profile::from_fn(grid.clone(), lambda, u, w).expect("finite sample profile")
}
