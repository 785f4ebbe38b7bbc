//! Poisson variates.
//!
//! Inversion by sequential search for means below 30, and Hörmann's
//! transformed rejection with squeeze (PTRS, 1993) above.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

const INVERSION_LIMIT: f64 = 30.0;

pub fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        0
    } else if lambda < INVERSION_LIMIT {
        inversion(lambda, rng)
    } else {
        ptrs(lambda, rng)
    }
}

fn inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.gen();
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u64;
    // the tail beyond ~200 carries mass far below f64 resolution for lambda < 30
    while u > cdf && k < 400 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -lambda + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::StreamKey;

    fn moments(lambda: f64, reps: usize) -> (f64, f64) {
        let mut rng = StreamKey::new(11, format!("pois{lambda}")).rng();
        let xs: Vec<f64> = (0..reps).map(|_| poisson_count(lambda, &mut rng) as f64).collect();
        let m = xs.iter().sum::<f64>() / reps as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (reps - 1) as f64;
        (m, v)
    }

    #[test]
    fn mean_and_variance_match_on_both_branches() {
        for &lambda in &[0.3, 4.0, 29.5, 30.0, 200.0, 5000.0] {
            let reps = 40_000;
            let (m, v) = moments(lambda, reps);
            let se_m = (lambda / reps as f64).sqrt();
            assert!((m - lambda).abs() < 4.0 * se_m, "lambda={lambda} mean={m}");
            // var of the sample variance is about 2 lambda^2 / reps for large lambda
            let se_v = ((lambda + 2.0 * lambda * lambda) / reps as f64).sqrt();
            assert!((v - lambda).abs() < 4.0 * se_v, "lambda={lambda} var={v}");
        }
    }

    #[test]
    fn zero_mean_gives_zero() {
        let mut rng = StreamKey::new(1, "z").rng();
        assert_eq!(poisson_count(0.0, &mut rng), 0);
    }
}
