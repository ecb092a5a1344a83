//! Smooth cutoff `psi`, vanishing near the origin and equal to one for `r >= 1`.

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` in `t = (r - r_on) / (1 - r_on)`.
/// It is C² across both junctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    r_on: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::standard()
    }
}

impl Cutoff {
    /// `psi = 0` on `[0, 1/4]`.
    pub fn standard() -> Self {
        Cutoff { r_on: 0.25 }
    }

    /// A second admissible cutoff, `psi = 0` on `[0, 1/2]`.
    pub fn alternate() -> Self {
        Cutoff { r_on: 0.5 }
    }

    pub fn new(r_on: f64) -> Result<Self> {
        if (0.0..1.0).contains(&r_on) {
            Ok(Cutoff { r_on })
        } else {
            Err(Error::Config(format!("cutoff onset must lie in [0, 1), got {r_on}")))
        }
    }

    pub fn r_on(&self) -> f64 {
        self.r_on
    }

    /// Radius from which `psi = 1`.
    pub fn r_one(&self) -> f64 {
        1.0
    }

    fn t(&self, r: f64) -> f64 {
        (r - self.r_on) / (1.0 - self.r_on)
    }

    pub fn psi(&self, r: f64) -> f64 {
        if r <= self.r_on {
            0.0
        } else if r >= 1.0 {
            1.0
        } else {
            let t = self.t(r);
            t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn psi_prime(&self, r: f64) -> f64 {
        if r <= self.r_on || r >= 1.0 {
            0.0
        } else {
            let t = self.t(r);
            30.0 * t * t * (1.0 - t) * (1.0 - t) / (1.0 - self.r_on)
        }
    }

    pub fn psi_second(&self, r: f64) -> f64 {
        if r <= self.r_on || r >= 1.0 {
            0.0
        } else {
            let t = self.t(r);
            let d = 1.0 - self.r_on;
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (d * d)
        }
    }

    /// `int_a^b psi(r)^2 / r dr` for `0 <= a <= b`, accurate to rounding.
    pub fn psi2_over_r(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.r_on);
        if b <= lo {
            return 0.0;
        }
        let mut total = 0.0;
        let mid = b.min(1.0);
        if mid > lo {
            total += gauss_legendre(lo, mid, 4, |r| self.psi(r).powi(2) / r);
        }
        let top = lo.max(1.0);
        if b > top {
            total += ((b - top) / top).ln_1p();
        }
        total
    }

    /// `C_psi = int_0^1 psi(t)^2 / t dt`, the constant in the renormalization.
    pub fn c_psi(&self) -> f64 {
        self.psi2_over_r(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_outside_and_midpoint() {
        let c = Cutoff::standard();
        assert_eq!(c.psi(0.1), 0.0);
        assert_eq!(c.psi(2.0), 1.0);
        assert!((c.psi(0.625) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for c in [Cutoff::standard(), Cutoff::alternate()] {
            for k in 1..40 {
                let r = c.r_on() + (1.0 - c.r_on()) * k as f64 / 40.0;
                let h = 1e-6;
                let d1 = (c.psi(r + h) - c.psi(r - h)) / (2.0 * h);
                let d2 = (c.psi_prime(r + h) - c.psi_prime(r - h)) / (2.0 * h);
                assert!((d1 - c.psi_prime(r)).abs() < 1e-8);
                assert!((d2 - c.psi_second(r)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn smooth_junctions_and_bounds() {
        let c = Cutoff::standard();
        for r in [c.r_on(), 1.0] {
            for e in [1e-7, -1e-7] {
                assert!(c.psi_prime(r + e).abs() < 1e-11);
                assert!(c.psi_second(r + e).abs() < 1e-4);
            }
        }
        for k in 0..=1000 {
            let p = c.psi(1.2 * k as f64 / 1000.0);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn rejects_bad_onset() {
        assert!(Cutoff::new(1.0).is_err());
        assert!(Cutoff::new(-0.1).is_err());
        assert!(Cutoff::new(0.3).is_ok());
    }

    #[test]
    fn log_integral_beyond_one() {
        let c = Cutoff::standard();
        let v = c.psi2_over_r(0.0, 8.0) - c.c_psi();
        assert!((v - 8f64.ln()).abs() < 1e-14);
        assert_eq!(c.psi2_over_r(0.0, 0.2), 0.0);
    }
}
