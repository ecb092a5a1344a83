//! Cell kernels of the discrete energy and the minimization objective.
//!
//! Free unknowns are interleaved nodal values `x[2(k-1)] = u_hat_k`,
//! `x[2(k-1)+1] = w_hat_k` for `k = 1..=N`; the origin values stay pinned.

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{CellRule, Profile, RadialGrid};
use crate::numeric::CompensatedSum;

use super::EnergyModel;

/// Local nodal values `(u0, w0, u1, w1)` of one cell.
pub(crate) type CellDofs = [f64; 4];

/// Residuals whose squares make up the density, and their partial
/// derivatives with respect to the cell dofs.
struct Residuals {
    e: [f64; 4],
    jac: [[f64; 4]; 4],
    phi: [f64; 2],
}

#[inline]
fn residuals(rule: &CellRule, q: usize, h: f64, d: &CellDofs, lambda: f64) -> Residuals {
    let (t, r) = (rule.t[q], rule.r[q]);
    let phi = [1.0 - t, t];
    let dphi = [-1.0 / h, 1.0 / h];
    let u = d[0] + t * (d[2] - d[0]);
    let w = d[1] + t * (d[3] - d[1]);
    let du = (d[2] - d[0]) / h;
    let dw = (d[3] - d[1]) / h;
    let e = [w * w - 1.0 + du, u / r, lambda * dw, lambda * w / r];
    let jac = [
        [dphi[0], 2.0 * w * phi[0], dphi[1], 2.0 * w * phi[1]],
        [phi[0] / r, 0.0, phi[1] / r, 0.0],
        [0.0, lambda * dphi[0], 0.0, lambda * dphi[1]],
        [0.0, lambda * phi[0] / r, 0.0, lambda * phi[1] / r],
    ];
    Residuals { e, jac, phi }
}

/// `(stretch, bend)` contributions of one cell.
pub(crate) fn cell_energy(rule: &CellRule, h: f64, d: &CellDofs, lambda: f64) -> (f64, f64) {
    let mut stretch = 0.0;
    let mut bend = 0.0;
    for q in 0..2 {
        let res = residuals(rule, q, h, d, lambda);
        let e = res.e;
        stretch += rule.weight[q] * (e[0] * e[0] + e[1] * e[1]);
        bend += rule.weight[q] * (e[2] * e[2] + e[3] * e[3]);
    }
    (stretch, bend)
}

pub(crate) fn cell_gradient(rule: &CellRule, h: f64, d: &CellDofs, lambda: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    for q in 0..2 {
        let res = residuals(rule, q, h, d, lambda);
        let w2 = 2.0 * rule.weight[q];
        for (e, row) in res.e.iter().zip(&res.jac) {
            for j in 0..4 {
                g[j] += w2 * e * row[j];
            }
        }
    }
    g
}

/// Gauss-Newton part plus, when `exact`, the second-derivative term of
/// the `w_hat^2` nonlinearity.
pub(crate) fn cell_hessian(rule: &CellRule, h: f64, d: &CellDofs, lambda: f64, exact: bool) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for q in 0..2 {
        let res = residuals(rule, q, h, d, lambda);
        let w2 = 2.0 * rule.weight[q];
        for row in &res.jac {
            for i in 0..4 {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    m[i][j] += w2 * row[i] * row[j];
                }
            }
        }
        if exact {
            let c = 2.0 * w2 * res.e[0];
            for (a, &pa) in [1usize, 3].iter().zip(&res.phi) {
                for (b, &pb) in [1usize, 3].iter().zip(&res.phi) {
                    m[*a][*b] += c * pa * pb;
                }
            }
        }
    }
    m
}

pub(crate) fn cell_dofs(u: &[f64], w: &[f64], c: usize) -> CellDofs {
    [u[c], w[c], u[c + 1], w[c + 1]]
}

/// Discrete `E_hat` on the whole grid of a fixed `lambda`, as a function of
/// the free unknowns. With `closure` the term
/// `lambda^2 (u_hat(R) - lambda^2 / 2R) / R` is added, which turns the free
/// end into the boundary condition satisfied by the far-field asymptote.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    grid: &'a RadialGrid,
    lambda: f64,
    closure: bool,
    subtraction: f64,
}

impl<'a> Objective<'a> {
    pub fn new(model: &EnergyModel, grid: &'a RadialGrid, lambda: f64, closure: bool) -> Self {
        let subtraction = model.renorm_subtraction(grid, lambda, grid.r_max()).expect("r_max is a node");
        Objective {
            grid,
            lambda,
            closure,
            subtraction,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_free(&self) -> usize {
        2 * self.grid.n_cells()
    }

    pub fn pack(profile: &Profile) -> Vec<f64> {
        profile
            .u_hat()
            .iter()
            .zip(profile.w_hat())
            .skip(1)
            .flat_map(|(u, w)| [*u, *w])
            .collect()
    }

    pub fn unpack(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut u = Vec::with_capacity(x.len() / 2 + 1);
        let mut w = Vec::with_capacity(x.len() / 2 + 1);
        u.push(0.0);
        w.push(0.0);
        for p in x.chunks_exact(2) {
            u.push(p[0]);
            w.push(p[1]);
        }
        (u, w)
    }

    pub fn to_profile(&self, x: &[f64]) -> Result<Profile> {
        let (u, w) = self.unpack(x);
        Profile::new(self.grid.clone(), u, w, self.lambda)
    }

    fn closure_value(&self, u_last: f64) -> f64 {
        let (l2, r) = (self.lambda * self.lambda, self.grid.r_max());
        l2 * (u_last - 0.5 * l2 / r) / r
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (u, w) = self.unpack(x);
        let mut acc = CompensatedSum::new();
        for (c, rule) in self.grid.rules().iter().enumerate() {
            let (a, b) = self.grid.cell(c);
            let (s, bd) = cell_energy(rule, b - a, &cell_dofs(&u, &w, c), self.lambda);
            acc.add(s);
            acc.add(bd);
        }
        acc.add(-self.subtraction);
        if self.closure {
            acc.add(self.closure_value(*u.last().unwrap()));
        }
        acc.value()
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (u, w) = self.unpack(x);
        let mut acc = CompensatedSum::new();
        let mut g = vec![0.0; x.len()];
        for (c, rule) in self.grid.rules().iter().enumerate() {
            let (a, b) = self.grid.cell(c);
            let d = cell_dofs(&u, &w, c);
            let (s, bd) = cell_energy(rule, b - a, &d, self.lambda);
            acc.add(s);
            acc.add(bd);
            let gc = cell_gradient(rule, b - a, &d, self.lambda);
            scatter(c, &gc, |i, v| g[i] += v);
        }
        acc.add(-self.subtraction);
        if self.closure {
            acc.add(self.closure_value(*u.last().unwrap()));
            let n = g.len();
            g[n - 2] += self.lambda * self.lambda / self.grid.r_max();
        }
        (acc.value(), g)
    }

    /// Banded Hessian (half-bandwidth 3). `exact = false` gives the
    /// Gauss-Newton matrix, which is symmetric positive definite.
    pub fn hessian(&self, x: &[f64], exact: bool) -> BandMatrix {
        let (u, w) = self.unpack(x);
        let n = x.len();
        let mut hm = BandMatrix::zeros(n, 3, 3);
        for (c, rule) in self.grid.rules().iter().enumerate() {
            let (a, b) = self.grid.cell(c);
            let m = cell_hessian(rule, b - a, &cell_dofs(&u, &w, c), self.lambda, exact);
            for i in 0..4 {
                let Some(gi) = global_index(c, i) else { continue };
                for j in 0..4 {
                    if let Some(gj) = global_index(c, j) {
                        hm.add(gi, gj, m[i][j]);
                    }
                }
            }
        }
        hm
    }

    /// Checks a candidate point for finiteness of the objective.
    pub fn finite_value(&self, x: &[f64], iteration: usize) -> Result<f64> {
        let v = self.value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteEnergy { iteration })
        }
    }
}

/// Free-unknown index of local dof `i` of cell `c`.
#[inline]
pub(crate) fn global_index(c: usize, i: usize) -> Option<usize> {
    let node = c + i / 2;
    (node > 0).then(|| 2 * (node - 1) + i % 2)
}

#[inline]
pub(crate) fn scatter<F: FnMut(usize, f64)>(c: usize, local: &[f64; 4], mut f: F) {
    for (i, v) in local.iter().enumerate() {
        if let Some(gi) = global_index(c, i) {
            f(gi, *v);
        }
    }
}
