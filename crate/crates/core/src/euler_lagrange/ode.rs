//! Dormand-Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (first-same-as-last: equal to the last row of `A`).
#[cfg(test)]
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// First trial step; estimated when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            atol: 1e-12,
            rtol: 1e-10,
            h_init: None,
            max_steps: 1_000_000,
        }
    }
}

/// States at the requested output points, up to an early stop.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub s: Vec<f64>,
    pub x: Vec<[f64; N]>,
    /// Where the stop predicate fired, if it did.
    pub stopped_at: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
}

/// One Dormand-Prince step; returns the fifth-order state and the
/// embedded error estimate.
fn step<const N: usize, F>(f: &F, s: f64, x: &[f64; N], h: f64, k1: [f64; N]) -> Result<([f64; N], [f64; N], [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = k1;
    for i in 1..7 {
        let mut xi = *x;
        for j in 0..i {
            if A[i][j] != 0.0 {
                for n in 0..N {
                    xi[n] += h * A[i][j] * k[j][n];
                }
            }
        }
        if i == 6 {
            // stage 7 is evaluated at the new point
            k[6] = f(s + h, &xi)?;
            let mut err = [0.0; N];
            for n in 0..N {
                err[n] = h * (0..7).map(|j| E[j] * k[j][n]).sum::<f64>();
            }
            return Ok((xi, err, k[6]));
        }
        k[i] = f(s + C[i] * h, &xi)?;
    }
    unreachable!()
}

fn error_norm<const N: usize>(err: &[f64; N], x0: &[f64; N], x1: &[f64; N], o: &OdeOptions) -> f64 {
    let sum: f64 = (0..N)
        .map(|n| {
            let sc = o.atol + o.rtol * x0[n].abs().max(x1[n].abs());
            (err[n] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Adaptive integration from `(s0, x0)` through increasing `outputs`
/// (every output is hit exactly). `stop` is checked after each accepted
/// step; when it returns true, integration ends there.
pub fn integrate<const N: usize, F, S>(
    f: F,
    s0: f64,
    x0: [f64; N],
    outputs: &[f64],
    opts: &OdeOptions,
    mut stop: S,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    S: FnMut(f64, &[f64; N]) -> bool,
{
    let mut sol = Solution {
        s: Vec::with_capacity(outputs.len()),
        x: Vec::with_capacity(outputs.len()),
        stopped_at: None,
        steps: 0,
        rejected: 0,
    };
    let mut s = s0;
    let mut x = x0;
    let mut k1 = f(s, &x)?;
    let span = outputs.last().map_or(0.0, |e| e - s0);
    let mut h = opts.h_init.unwrap_or_else(|| (1e-3 * span.abs()).clamp(1e-6, 1e-2));
    for &target in outputs {
        if target < s {
            return Err(Error::Config(format!("output point {target} precedes s = {s}")));
        }
        while s < target {
            if sol.steps + sol.rejected >= opts.max_steps {
                return Err(Error::StepUnderflow(s));
            }
            let last = target - s <= h * (1.0 + 1e-12);
            let hs = if last { target - s } else { h };
            let (xn, err, kn) = step(&f, s, &x, hs, k1)?;
            let en = error_norm(&err, &x, &xn, opts);
            if en <= 1.0 && xn.iter().all(|v| v.is_finite()) {
                s = if last { target } else { s + hs };
                x = xn;
                k1 = kn;
                sol.steps += 1;
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h = hs * fac;
                }
                if stop(s, &x) {
                    sol.stopped_at = Some(s);
                    return Ok(sol);
                }
            } else {
                sol.rejected += 1;
                let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 1.0) } else { 0.1 };
                h = hs * fac;
                if h <= 1e-14 * s.abs().max(1.0) {
                    return Err(Error::StepUnderflow(s));
                }
            }
        }
        sol.s.push(s);
        sol.x.push(x);
    }
    Ok(sol)
}

/// `n` equal Dormand-Prince steps from `s0` to `s1` (fifth-order solution).
pub fn integrate_fixed<const N: usize, F>(f: F, s0: f64, x0: [f64; N], s1: f64, n: usize) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let h = (s1 - s0) / n as f64;
    let mut x = x0;
    let mut k1 = f(s0, &x)?;
    for i in 0..n {
        let s = s0 + h * i as f64;
        let (xn, _, kn) = step(&f, s, &x, h, k1)?;
        x = xn;
        k1 = kn;
    }
    Ok(x)
}
