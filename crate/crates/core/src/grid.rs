//! Radial meshes on `(0, R]`, piecewise-linear profiles and quadrature
//! against the measure `r dr`.
//!
//! Each cell carries a two-point Gauss rule for the weight `r` on that
//! cell, so `sum_q W_q f(r_q)` integrates `f(r) r dr` exactly whenever `f`
//! is a cubic polynomial.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Minimum number of cells a grid must have.
pub const MIN_CELLS: usize = 16;

/// Two-point Gauss rule for `r dr` on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRule {
    /// Quadrature abscissae.
    pub r: [f64; 2],
    /// Local coordinates `(r - a) / h` of the abscissae.
    pub t: [f64; 2],
    /// Weights; they already contain the factor `r`.
    pub weight: [f64; 2],
}

impl CellRule {
    /// Gauss rule for the weight `r` on `[a, b]`, `0 <= a < b`.
    pub fn new(a: f64, b: f64) -> Self {
        let h = b - a;
        // moments of t^k (a + h t) on [0, 1]
        let m = |k: i32| a / (k + 1) as f64 + h / (k + 2) as f64;
        let (m0, m1, m2, m3) = (m(0), m(1), m(2), m(3));
        let det = m1 * m1 - m0 * m2;
        let c1 = (m0 * m3 - m1 * m2) / det;
        let c0 = (m2 * m2 - m1 * m3) / det;
        let disc = (c1 * c1 - 4.0 * c0).sqrt();
        let t0 = 0.5 * (-c1 - disc);
        let t1 = 0.5 * (-c1 + disc);
        let w0 = (m1 - m0 * t1) / (t0 - t1);
        let w1 = m0 - w0;
        CellRule {
            r: [a + h * t0, a + h * t1],
            t: [t0, t1],
            weight: [h * w0, h * w1],
        }
    }
}

/// How a grid was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    /// Output of [`build_grid`].
    Graded {
        r_max: f64,
        n_cells: usize,
        origin_refine_decades: u32,
    },
    /// Any other node set (refined, extended, truncated or rescaled grids).
    Custom,
}

/// Strictly increasing radial mesh `0 = r_0 < r_1 < ... < r_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
    rules: Vec<CellRule>,
}

/// Graded mesh on `(0, r_max]`: uniform in `s = sqrt(r)` on `[1, r_max]`
/// and refined toward the origin on `(0, 1)`, where a quarter of the cells
/// go. With `d = origin_refine_decades > 0` the smallest positive node is
/// `10^-d` and `log r` is quadratic in the cell index, geometric near 0 and
/// with its slope at `r = 1` matched to the outer spacing; with `d = 0`,
/// `sqrt(r)` is quadratic in the index instead. Matching the spacing keeps
/// consecutive cell sizes within `1 + O(h)` of each other across `r = 1`, so
/// nodal difference quotients stay second-order there.
pub fn build_grid(r_max: f64, n_cells: usize, origin_refine_decades: u32) -> Result<RadialGrid> {
    if !(r_max.is_finite() && r_max > 1.0) {
        return Err(Error::InvalidGrid(format!("r_max must exceed 1, got {r_max}")));
    }
    if n_cells < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_CELLS} cells, got {n_cells}"
        )));
    }
    let n_inner = n_cells / 4;
    let n_outer = n_cells - n_inner;
    let s_max = r_max.sqrt();
    // d(sqrt r)/d(index) on the outer part, in units of the inner index
    let ds = (s_max - 1.0) * n_inner as f64 / n_outer as f64;
    let mut nodes = Vec::with_capacity(n_cells + 1);
    nodes.push(0.0);
    if origin_refine_decades == 0 {
        // s(x) = a x + b x^2 with s(1) = 1, s'(1) = ds; monotone needs a > 0
        let b = (ds - 1.0).min(0.9);
        let a = 1.0 - b;
        for j in 1..n_inner {
            let x = j as f64 / n_inner as f64;
            let s = a * x + b * x * x;
            nodes.push(s * s);
        }
    } else {
        // log r = -D + a x + b x^2 with log r(1) = 0 and (log r)'(1) = 2 ds
        // the first inner cell is (0, 10^-d), leaving n_inner - 1 steps
        let steps = (n_inner - 1) as f64;
        let slope = 2.0 * ds * steps / n_inner as f64;
        let big_d = origin_refine_decades as f64 * std::f64::consts::LN_10;
        let b = (slope - big_d).min(0.9 * big_d);
        let a = big_d - b;
        for j in 0..n_inner - 1 {
            let x = j as f64 / steps;
            nodes.push((-big_d + a * x + b * x * x).exp());
        }
    }
    nodes.push(1.0);
    for j in 1..n_outer {
        let s = 1.0 + (s_max - 1.0) * j as f64 / n_outer as f64;
        nodes.push(s * s);
    }
    nodes.push(r_max);
    let mut grid = RadialGrid::from_nodes(nodes)?;
    grid.grading = Grading::Graded {
        r_max,
        n_cells,
        origin_refine_decades,
    };
    Ok(grid)
}

impl RadialGrid {
    /// Grid from an explicit node list. Requires `r_0 = 0`, strictly
    /// increasing finite nodes and at least [`MIN_CELLS`] cells.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_CELLS + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be 0".into()));
        }
        if nodes.iter().any(|r| !r.is_finite()) || nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidGrid("nodes must be finite and strictly increasing".into()));
        }
        let rules = nodes.windows(2).map(|p| CellRule::new(p[0], p[1])).collect();
        Ok(RadialGrid {
            nodes,
            grading: Grading::Custom,
            rules,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn rules(&self) -> &[CellRule] {
        &self.rules
    }

    pub fn cell(&self, c: usize) -> (f64, f64) {
        (self.nodes[c], self.nodes[c + 1])
    }

    /// Index of the node equal to `r` (up to a relative 1e-12), if any.
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let tol = 1e-12 * r.abs().max(1.0);
        let k = self.nodes.partition_point(|&x| x < r - tol);
        (k < self.nodes.len() && (self.nodes[k] - r).abs() <= tol).then_some(k)
    }

    pub fn require_node(&self, r: f64) -> Result<usize> {
        self.node_index(r).ok_or(Error::NotANode(r))
    }

    /// Cell containing `r` (clamped to the mesh).
    pub fn locate(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= r);
        k.saturating_sub(1).min(self.n_cells() - 1)
    }

    /// Values of `f` at all quadrature points, two per cell.
    pub fn sample<F: FnMut(f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        self.rules.iter().flat_map(|q| [f(q.r[0]), f(q.r[1])]).collect()
    }

    /// `int_a^b f(r) r dr` from quadrature-point values (layout of [`Self::sample`]).
    /// Both limits must be mesh nodes.
    pub fn integrate(&self, f: &[f64], a: f64, b: f64) -> Result<f64> {
        if f.len() != 2 * self.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} quadrature values, got {}",
                2 * self.n_cells(),
                f.len()
            )));
        }
        let ia = self.require_node(a)?;
        let ib = self.require_node(b)?;
        if ia >= ib {
            return Err(Error::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        let mut acc = CompensatedSum::new();
        for c in ia..ib {
            let q = &self.rules[c];
            acc.add(q.weight[0] * f[2 * c] + q.weight[1] * f[2 * c + 1]);
        }
        Ok(acc.value())
    }

    /// Cellwise slopes of a nodal function.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n_nodes(), "nodal vector length");
        self.nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(r, v)| (v[1] - v[0]) / (r[1] - r[0]))
            .collect()
    }

    /// `m_k = int phi_k r dr` for the hat functions `phi_k`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for (c, q) in self.rules.iter().enumerate() {
            for i in 0..2 {
                m[c] += q.weight[i] * (1.0 - q.t[i]);
                m[c + 1] += q.weight[i] * q.t[i];
            }
        }
        m
    }

    /// Every cell split at its midpoint.
    pub fn split_cells(&self) -> RadialGrid {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for p in self.nodes.windows(2) {
            nodes.push(p[0]);
            nodes.push(0.5 * (p[0] + p[1]));
        }
        nodes.push(self.r_max());
        RadialGrid::from_nodes(nodes).expect("refinement of a valid grid")
    }

    /// Same nodes up to the current `r_max`, continued uniformly in
    /// `sqrt(r)` with (nearly) the last cell's spacing up to `new_r_max`.
    pub fn extended(&self, new_r_max: f64) -> Result<RadialGrid> {
        let r_max = self.r_max();
        if !(new_r_max > r_max) {
            return Err(Error::InvalidGrid(format!(
                "extension radius {new_r_max} must exceed {r_max}"
            )));
        }
        let n = self.nodes.len();
        let ds = r_max.sqrt() - self.nodes[n - 2].sqrt();
        let (s0, s1) = (r_max.sqrt(), new_r_max.sqrt());
        let m = ((s1 - s0) / ds - 1e-9).ceil().max(1.0) as usize;
        let mut nodes = self.nodes.clone();
        for j in 1..m {
            let s = s0 + (s1 - s0) * j as f64 / m as f64;
            nodes.push(s * s);
        }
        nodes.push(new_r_max);
        RadialGrid::from_nodes(nodes)
    }

    /// Grid cut at the node `r`.
    pub fn truncated(&self, r: f64) -> Result<RadialGrid> {
        let k = self.require_node(r)?;
        RadialGrid::from_nodes(self.nodes[..=k].to_vec())
    }

    /// Grid with every node multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> RadialGrid {
        assert!(factor > 0.0 && factor.is_finite(), "scale factor must be positive");
        RadialGrid::from_nodes(self.nodes.iter().map(|r| r * factor).collect())
            .expect("rescaling preserves validity")
    }
}

/// Piecewise-linear pair `(u_hat, w_hat)` on a grid, with its `lambda`.
/// The values at `r = 0` are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: RadialGrid,
    u_hat: Vec<f64>,
    w_hat: Vec<f64>,
    lambda: f64,
}

impl Profile {
    pub fn new(grid: RadialGrid, mut u_hat: Vec<f64>, mut w_hat: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = grid.n_nodes();
        if u_hat.len() != n || w_hat.len() != n {
            return Err(Error::InvalidProfile(format!(
                "expected {n} nodal values, got {} and {}",
                u_hat.len(),
                w_hat.len()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProfile(format!("lambda must be positive, got {lambda}")));
        }
        if u_hat.iter().chain(&w_hat).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite nodal value".into()));
        }
        u_hat[0] = 0.0;
        w_hat[0] = 0.0;
        Ok(Profile {
            grid,
            u_hat,
            w_hat,
            lambda,
        })
    }

    /// Nodal values of the given functions.
    pub fn from_fn<U, W>(grid: RadialGrid, lambda: f64, u: U, w: W) -> Result<Self>
    where
        U: Fn(f64) -> f64,
        W: Fn(f64) -> f64,
    {
        let uh = grid.nodes().iter().map(|&r| u(r)).collect();
        let wh = grid.nodes().iter().map(|&r| w(r)).collect();
        Profile::new(grid, uh, wh, lambda)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn u_hat(&self) -> &[f64] {
        &self.u_hat
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_values(&self, u_hat: Vec<f64>, w_hat: Vec<f64>) -> Result<Profile> {
        Profile::new(self.grid.clone(), u_hat, w_hat, self.lambda)
    }

    pub fn into_parts(self) -> (RadialGrid, Vec<f64>, Vec<f64>, f64) {
        (self.grid, self.u_hat, self.w_hat, self.lambda)
    }

    /// Linear interpolation of `(u_hat, w_hat)` at `r` in `[0, r_max]`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let c = self.grid.locate(r);
        let (a, b) = self.grid.cell(c);
        let t = (r - a) / (b - a);
        (
            self.u_hat[c] + t * (self.u_hat[c + 1] - self.u_hat[c]),
            self.w_hat[c] + t * (self.w_hat[c + 1] - self.w_hat[c]),
        )
    }

    /// Interpolate onto another grid. Radii beyond this profile's mesh get
    /// the far-field cone values `(lambda^2 / 2r, 1)`.
    pub fn resample(&self, grid: &RadialGrid) -> Profile {
        let r_max = self.grid.r_max();
        let lam2 = self.lambda * self.lambda;
        let (u, w): (Vec<f64>, Vec<f64>) = grid
            .nodes()
            .iter()
            .map(|&r| if r <= r_max { self.eval(r) } else { (0.5 * lam2 / r, 1.0) })
            .unzip();
        Profile::new(grid.clone(), u, w, self.lambda).expect("resampled profile is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_contract() {
        let g = build_grid(100.0, 64, 3).unwrap();
        assert!(g.node_index(1.0).is_some());
        assert_eq!(g.r_max(), 100.0);
        assert_eq!(g.n_cells(), 64);
        assert_eq!(g.nodes()[0], 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_grid(1.0, 64, 3), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(0.5, 64, 3), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(10.0, 15, 3), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn origin_refinement_reaches_requested_decades() {
        let g = build_grid(400.0, 512, 6).unwrap();
        assert!(g.nodes()[1] <= 1e-6 * (1.0 + 1e-12));
        let g0 = build_grid(400.0, 512, 0).unwrap();
        assert!(g0.node_index(1.0).is_some());
        assert_eq!(g0.n_cells(), 512);
    }

    #[test]
    fn integrates_basic_moments() {
        let g = build_grid(4.0, 32, 2).unwrap();
        let one = g.sample(|_| 1.0);
        assert!((g.integrate(&one, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let lin = g.sample(|r| r);
        assert!((g.integrate(&lin, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn integrate_requires_nodes() {
        let g = build_grid(4.0, 32, 2).unwrap();
        let one = g.sample(|_| 1.0);
        assert!(matches!(g.integrate(&one, 0.0, 0.7), Err(Error::NotANode(_))));
        assert!(g.integrate(&one, 1.0, 1.0).is_err());
    }

    #[test]
    fn cell_rule_exact_for_cubics() {
        for &(a, b) in &[(0.0, 1e-6), (0.0, 1.0), (1.0, 1.01), (200.0, 200.3), (0.3, 7.0)] {
            let q = CellRule::new(a, b);
            for k in 0..=3 {
                let exact = (b.powi(k + 2) - a.powi(k + 2)) / (k + 2) as f64;
                let approx = q.weight[0] * q.r[0].powi(k) + q.weight[1] * q.r[1].powi(k);
                assert!(
                    ((approx - exact) / exact).abs() < 1e-13,
                    "cell [{a}, {b}] k = {k}: {approx} vs {exact}"
                );
            }
            assert!(q.weight.iter().all(|&w| w > 0.0));
            assert!(q.r.iter().all(|&r| r > a && r < b));
        }
    }

    #[test]
    fn derivative_of_simple_functions() {
        let g = build_grid(9.0, 32, 2).unwrap();
        let id: Vec<f64> = g.nodes().to_vec();
        assert!(g.derivative(&id).iter().all(|&d| (d - 1.0).abs() < 1e-12));
        let c = vec![3.5; g.n_nodes()];
        assert!(g.derivative(&c).iter().all(|&d| d == 0.0));
        let sq: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        for (k, d) in g.derivative(&sq).iter().enumerate() {
            let (a, b) = g.cell(k);
            assert!((d - (a + b)).abs() < 1e-12 * (a + b).max(1.0));
        }
    }

    #[test]
    fn lumped_mass_sums_to_total_measure() {
        let g = build_grid(25.0, 64, 3).unwrap();
        let total: f64 = g.lumped_mass().iter().sum();
        assert!((total - 312.5).abs() < 1e-10);
    }

    #[test]
    fn extension_and_truncation_keep_nodes() {
        let g = build_grid(225.0, 128, 4).unwrap();
        let e = g.extended(450.0).unwrap();
        assert_eq!(&e.nodes()[..g.n_nodes()], g.nodes());
        assert_eq!(e.r_max(), 450.0);
        let t = g.truncated(1.0).unwrap();
        assert_eq!(t.r_max(), 1.0);
        assert!(g.truncated(1.5).is_err());
    }

    #[test]
    fn profile_pins_origin_and_interpolates() {
        let g = build_grid(4.0, 32, 2).unwrap();
        let p = Profile::from_fn(g, 1.0, |r| 2.0 * r + 1.0, |r| r).unwrap();
        assert_eq!(p.u_hat()[0], 0.0);
        let (u, w) = p.eval(2.0);
        assert!((u - 5.0).abs() < 1e-12 && (w - 2.0).abs() < 1e-12);
        assert!(Profile::new(p.grid().clone(), vec![0.0; 3], vec![0.0; 3], 1.0).is_err());
        assert!(p.with_values(p.u_hat().to_vec(), p.w_hat().to_vec()).is_ok());
        let bad = Profile::new(p.grid().clone(), p.u_hat().to_vec(), p.w_hat().to_vec(), 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn resample_uses_far_field_beyond_mesh() {
        let g = build_grid(4.0, 32, 2).unwrap();
        let p = Profile::from_fn(g, 0.5, |r| r, |_| 1.0).unwrap();
        let big = build_grid(16.0, 64, 2).unwrap();
        let q = p.resample(&big);
        let k = big.node_index(16.0).unwrap();
        assert!((q.u_hat()[k] - 0.25 / 32.0).abs() < 1e-15);
        assert_eq!(q.w_hat()[k], 1.0);
    }
}
