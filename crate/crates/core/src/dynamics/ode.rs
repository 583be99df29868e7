//! Adaptive Dormand–Prince 5(4) integration of small complex linear systems.
//! Used as the independent reference for the closed-form amplitudes.

use alloc::vec::Vec;

use crate::math::{powf, sqrt};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-14, max_steps: 5_000_000 }
    }
}


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[C64; N], terms: &[(f64, &[C64; N])], h: f64) -> [C64; N] {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (w * h);
        }
    }
    out
}

/// Integrates `ẏ = f(y)` from `y0` at `t = 0`, reporting `y` at each time in
/// the non-decreasing `grid`.
pub fn integrate_autonomous<const N: usize>(
    f: impl Fn(&[C64; N]) -> [C64; N],
    y0: [C64; N],
    grid: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[C64; N]>> {
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(alloc::string::String::from("time grid must be non-negative and monotone")));
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y);
    let span = grid.last().copied().unwrap_or(0.0);
    let mut h = if span > 0.0 { span * 1e-3 } else { 1.0 };
    let mut steps = 0usize;
    for &target in grid {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::InvalidParameter(alloc::string::String::from("ODE step budget exhausted")));
            }
            steps += 1;
            let mut hs = h.min(target - t);
            let last = hs >= target - t;
            if last {
                hs = target - t;
            }
            let k2 = f(&axpy(&y, &[(A21, &k1)], hs));
            let k3 = f(&axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(&axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
            let k5 = f(&axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs));
            let k6 = f(&axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs));
            let y5 = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let k7 = f(&y5);
            let mut err_sq = 0.0;
            for i in 0..N {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
                let scale = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
                err_sq += (e.norm() / scale) * (e.norm() / scale);
            }
            let err = sqrt(err_sq / N as f64);
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y5;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * powf(err, -0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = hs * grow;
                } else {
                    h = h.max(hs * grow);
                }
            } else {
                h = hs * (0.9 * powf(err, -0.2)).clamp(0.1, 1.0);
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{c, exp};

    #[test]
    fn exponential_decay() {
        let rate = 3.0;
        let grid = [0.0, 0.1, 1.0, 2.5];
        let ys = integrate_autonomous(|y: &[C64; 1]| [y[0] * -rate], [c(1.0, 0.0)], &grid, OdeOptions::default()).unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            assert!((y[0].re - exp(-rate * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(integrate_autonomous(|y: &[C64; 1]| *y, [c(1.0, 0.0)], &[1.0, 0.5], OdeOptions::default()).is_err());
    }
}
