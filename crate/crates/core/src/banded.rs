//! Square banded matrices and LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// `n x n` matrix with `kl` sub- and `ku` super-diagonals. Storage leaves
/// room for the `kl` extra super-diagonals created by row pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Inside the stored band, which includes the pivoting fill.
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku + self.kl
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU factorization with partial pivoting.
    pub fn lu(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = Vec::with_capacity(n);
        let mut mult = vec![0.0; n * kl];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let p = (k..=last_row)
                .max_by(|&a, &b| self.get(a, k).abs().total_cmp(&self.get(b, k).abs()))
                .unwrap();
            let pivot = self.get(p, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular(k));
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            piv.push(p);
            for i in k + 1..=last_row {
                let m = self.data[self.idx(i, k)] / pivot;
                mult[k * kl + (i - k - 1)] = m;
                let ik = self.idx(i, k);
                self.data[ik] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let v = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= m * v;
                    }
                }
            }
        }
        Ok(BandLu {
            u: self,
            piv,
            mult,
        })
    }
}

/// Factorization produced by [`BandMatrix::lu`].
#[derive(Debug, Clone)]
pub struct BandLu {
    u: BandMatrix,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let u = &self.u;
        let (n, kl, ku) = (u.n, u.kl, u.ku);
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last_row = (k + kl).min(n - 1);
            for i in k + 1..=last_row {
                x[i] -= self.mult[k * kl + (i - k - 1)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let s: f64 = (k + 1..=last_col).map(|j| u.get(k, j) * x[j]).sum();
            x[k] = (x[k] - s) / u.get(k, k);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> (BandMatrix, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, kl, ku);
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a.add(i, j, v);
                d[(i, j)] = v;
            }
        }
        (a, d)
    }

    #[test]
    fn solves_like_dense_lu() {
        for (seed, &(n, kl, ku)) in [(40, 3, 3), (25, 1, 4), (60, 5, 2), (7, 3, 3)].iter().enumerate() {
            let (a, d) = random_band(n, kl, ku, seed as u64);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let x = a.clone().lu().unwrap().solve(&b);
            let xd = d.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()), "n={n} i={i}");
            }
            let r = a.mul_vec(&x);
            assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-10));
        }
    }

    #[test]
    fn needs_pivoting() {
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 2.0);
        let x = a.lu().unwrap().solve(&[3.0, 5.0]);
        assert!((x[0] + 1.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn reports_singular() {
        let a = BandMatrix::zeros(4, 1, 1);
        assert!(matches!(a.lu(), Err(Error::Singular(0))));
    }
}
