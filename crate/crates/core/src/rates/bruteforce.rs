//! Direct numerical solution of the dense rate problem, for cross-checking
//! the tilt solver.
//!
//! `tau` is discretized on `N` cells of `[s0, s0 + cap]`: cell `i` gets its
//! exact `tau`-mass `tau_i` and sits at its midpoint, offset `w_i` from
//! `s0`.  Writing `rho_i = f_i tau_i`, the problem is
//!
//! ```text
//! minimize   F(f) = sum_i tau_i (f_i ln f_i - f_i + 1)
//! subject to sum_i tau_i w_i f_i <= a,  f > 0.
//! ```
//!
//! Step rule: a scaled projected-gradient step
//! `y = f - eta * f ∘ grad`, `grad_i = ln f_i`, followed by projection onto the
//! half-space in the metric `sum_i tau_i (z_i - y_i)^2 / f_i`, which is
//! `z = y - mu f ∘ w` with `mu >= 0` in closed form.  `eta` starts at 1 and
//! halves until `z` stays positive and the Armijo condition
//! `F(z) <= F(f) + 1e-4 <tau grad, z - f>` holds.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BruteForceSolution {
    pub rate: f64,
    pub constraint_value: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 20_000;
const ARMIJO: f64 = 1e-4;

pub fn dense_rate_bruteforce(a: f64, k: usize, s0: f64, grid_points: usize, cap: f64) -> Result<BruteForceSolution> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if !(a > 0.0) {
        return Err(invalid("a", format!("level must be positive, got {a}")));
    }
    if grid_points < 2 || !(cap > 0.0) {
        return Err(invalid("grid_points", "need at least 2 cells on a positive-length domain"));
    }
    let fact: f64 = (1..k).map(|i| i as f64).product();
    let h = cap / grid_points as f64;
    let tau: Vec<f64> = (0..grid_points)
        .map(|i| {
            let lo = s0 + i as f64 * h;
            ((-lo).exp() - (-(lo + h)).exp()) / fact
        })
        .collect();
    let w: Vec<f64> = (0..grid_points).map(|i| (i as f64 + 0.5) * h).collect();

    let objective = |f: &[f64]| -> f64 { f.iter().zip(&tau).map(|(&x, &t)| t * (x * x.ln() - x + 1.0)).sum() };
    let constraint = |f: &[f64]| -> f64 { f.iter().zip(&tau).zip(&w).map(|((&x, &t), &wi)| t * wi * x).sum() };

    let start = constraint(&vec![1.0; grid_points]);
    let init = if start <= a { 1.0 } else { 0.5 * a / start };
    let mut f = vec![init; grid_points];
    let mut fv = objective(&f);
    let mut z = vec![0.0; grid_points];
    let mut iterations = 0;
    'outer: while iterations < MAX_ITER {
        iterations += 1;
        let grad: Vec<f64> = f.iter().map(|x| x.ln()).collect();
        let mut eta = 1.0;
        let fz = loop {
            let mut excess = -a;
            let mut scale = 0.0;
            for i in 0..grid_points {
                z[i] = f[i] - eta * f[i] * grad[i];
                excess += tau[i] * w[i] * z[i];
                scale += tau[i] * w[i] * w[i] * f[i];
            }
            let mu = (excess / scale).max(0.0);
            let mut positive = true;
            for i in 0..grid_points {
                z[i] -= mu * f[i] * w[i];
                positive &= z[i] > 0.0;
            }
            if positive {
                let fz = objective(&z);
                let slope: f64 = (0..grid_points).map(|i| tau[i] * grad[i] * (z[i] - f[i])).sum();
                if fz <= fv + ARMIJO * slope {
                    break fz;
                }
            }
            eta *= 0.5;
            if eta < 1e-30 {
                // no descent left above rounding noise
                break 'outer;
            }
        };
        let done = (fv - fz).abs() < 1e-15;
        std::mem::swap(&mut f, &mut z);
        fv = fz;
        if done {
            break;
        }
    }
    Ok(BruteForceSolution { rate: fv, constraint_value: constraint(&f), iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_base_measure_costs_nothing() {
        let s = dense_rate_bruteforce(2.0, 1, 0.0, 500, 40.0).unwrap();
        assert!(s.rate.abs() < 1e-12);
    }

    #[test]
    fn constraint_is_respected() {
        let s = dense_rate_bruteforce(0.3, 2, 0.5, 800, 40.0).unwrap();
        assert!(s.constraint_value <= 0.3 + 1e-12);
        assert!(s.rate > 0.0);
    }
}
