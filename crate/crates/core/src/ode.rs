//! Adaptive Dormand–Prince 5(4) integrator.

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub trait OdeScalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {
    fn modulus(self) -> f64;
}

impl OdeScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for C64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-10, max_steps: 1_000_000 }
    }
}

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
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrates y' = f(t, y) from `(t0, y0)` and returns y at each of `outputs`
/// (ascending, all ≥ t0). `f(t, y, dy)` writes the derivative into `dy`.
///
/// The local error estimate is controlled componentwise in the max norm.
pub fn dopri5<T, F>(mut f: F, t0: f64, y0: &[T], outputs: &[f64], tol: Tolerances) -> Result<Vec<Vec<T>>>
where
    T: OdeScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<T>> = vec![vec![T::default(); n]; 7];
    let mut stage = vec![T::default(); n];
    let mut y_new = vec![T::default(); n];
    let mut results = Vec::with_capacity(outputs.len());

    f(t, &y, &mut k[0]);
    let mut h = initial_step(&y, &k[0], tol, outputs.last().copied().unwrap_or(t0) - t0);
    let mut steps = 0;

    for &target in outputs {
        if target < t {
            return Err(Error::Domain(format!("output time {target} precedes current time {t}")));
        }
        while t < target {
            if steps >= tol.max_steps {
                return Err(Error::Propagation(format!("step limit reached at t = {t}")));
            }
            steps += 1;
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc = acc + kj[i] * (step * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                f(t + C[s] * step, &stage, &mut k[s]);
                if s == 6 {
                    y_new.copy_from_slice(&stage);
                }
            }
            let mut err = 0.0;
            for i in 0..n {
                let mut e = T::default();
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e = e + kj[i] * (step * E[j]);
                    }
                }
                let sc = tol.atol + tol.rtol * y[i].modulus().max(y_new[i].modulus());
                err = f64::max(err, e.modulus() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Propagation(format!("non-finite error estimate at t = {t}")));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                // first-same-as-last: the final stage is f at the new point
                k.swap(0, 6);
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor.min(1.0);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Propagation(format!("step size underflow at t = {t}")));
                }
            }
        }
        results.push(y.clone());
    }
    Ok(results)
}

fn initial_step<T: OdeScalar>(y: &[T], dy: &[T], tol: Tolerances, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = tol.atol + tol.rtol * a.modulus();
        d0 += (a.modulus() / sc).powi(2);
        d1 += (b.modulus() / sc).powi(2);
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}
