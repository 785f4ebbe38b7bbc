//! Rate functions of the lower-tail large deviations.
//!
//! Sparse regime: for the `k0`-clique count the rate at level `a` is the
//! Poisson-type expression `a log(a/mu) - a + mu` below the mean `mu` and
//! zero above it.
//!
//! Dense regime: the rate is `inf { h(rho | tau) : T(rho) <= a }` with
//! `tau(dx) = e^{-x}/(k-1)! dx` on `[s0, inf)` and
//! `h(rho | tau) = int log(drho/dtau) drho - rho(E0) + tau(E0)`.  The
//! minimizer is an exponential tilt of `tau`; [`dense_rate`] finds the tilt
//! by bisection on its parameter and [`dense_rate_bruteforce`] solves a
//! discretized version of the optimization directly.
//!
//! Critical regime: no closed form is available.  The rate there is a
//! contraction of a relative-entropy rate on marked point processes over an
//! infinite-dimensional space, and nothing in this crate evaluates it; see
//! [`critical_rate`].

mod bruteforce;

pub use bruteforce::{dense_rate_bruteforce, BruteForceSolution};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::DiscreteMeasure;
use crate::process::StreamKey;

/// `mu_{d,k0} = v / k0!` where `v` is the volume of the set of
/// `(x_2, ..., x_k0)` whose points, together with the origin, are pairwise
/// within distance 1.  Returns the Monte Carlo estimate and its standard
/// error; `k0 = 1` is exact.
pub fn mu_clique(d: usize, k0: usize, samples: usize, key: &StreamKey) -> Result<(f64, f64)> {
    if d == 0 || k0 == 0 {
        return Err(invalid("k0", "d and k0 must be positive"));
    }
    if k0 == 1 {
        return Ok((1.0, 0.0));
    }
    if samples < 2 {
        return Err(invalid("samples", "need at least 2 samples"));
    }
    let fact: f64 = (1..=k0).map(|i| i as f64).product();
    // each x_i must lie within 1 of the origin, so the cube [-1,1]^d suffices
    let vol = 2f64.powi((d * (k0 - 1)) as i32);
    let mut rng = key.rng();
    let mut pts = vec![0.0f64; k0 * d];
    let mut hits = 0u64;
    for _ in 0..samples {
        for c in pts[d..].iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        let ok = (0..k0).all(|i| {
            (i + 1..k0).all(|j| {
                let s: f64 = (0..d).map(|a| (pts[i * d + a] - pts[j * d + a]).powi(2)).sum();
                s <= 1.0
            })
        });
        hits += ok as u64;
    }
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    Ok((vol * p / fact, vol * se / fact))
}

/// `inf_{x <= a} (x log(x/mu) - x + mu)`: `a log(a/mu) - a + mu` for
/// `0 <= a < mu`, zero for `a >= mu`, `+inf` for `a < 0`.
pub fn sparse_clique_rate(a: f64, mu: f64) -> f64 {
    assert!(mu > 0.0, "mu must be positive");
    if a < 0.0 {
        f64::INFINITY
    } else if a >= mu {
        0.0
    } else if a == 0.0 {
        mu
    } else {
        a * (a / mu).ln() - a + mu
    }
}

/// The exponential tilts `rho_theta(dx) = e^{-theta (x - s0)} tau(dx)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltFamily {
    pub k: usize,
    pub s0: f64,
}

impl TiltFamily {
    pub fn new(k: usize, s0: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if !s0.is_finite() {
            return Err(invalid("s0", "must be finite"));
        }
        Ok(Self { k, s0 })
    }

    /// `tau(E0) = e^{-s0}/(k-1)!`.
    pub fn base_mass(&self) -> f64 {
        let fact: f64 = (1..self.k).map(|i| i as f64).product();
        (-self.s0).exp() / fact
    }

    pub fn mass(&self, theta: f64) -> f64 {
        self.base_mass() / (1.0 + theta)
    }

    /// `T(rho_theta) = int (x - s0) rho_theta(dx)`.
    pub fn moment(&self, theta: f64) -> f64 {
        self.base_mass() / ((1.0 + theta) * (1.0 + theta))
    }

    /// `h(rho_theta | tau)`.
    pub fn entropy(&self, theta: f64) -> f64 {
        -theta * self.moment(theta) - self.mass(theta) + self.base_mass()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltSolution {
    pub theta: f64,
    pub constraint_value: f64,
    pub rate: f64,
    pub converged: bool,
}

const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;

/// Dense-regime rate at level `a`.
pub fn dense_rate(a: f64, k: usize, s0: f64) -> Result<TiltSolution> {
    let fam = TiltFamily::new(k, s0)?;
    if a.is_nan() || a < 0.0 {
        return Err(invalid("a", format!("level must be non-negative, got {a}")));
    }
    let c = fam.base_mass();
    if a >= c {
        return Ok(TiltSolution { theta: 0.0, constraint_value: c, rate: 0.0, converged: true });
    }
    if a == 0.0 {
        // only the zero measure is feasible
        return Ok(TiltSolution { theta: f64::INFINITY, constraint_value: 0.0, rate: c, converged: true });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while fam.moment(hi) > a {
        lo = hi;
        hi *= 2.0;
    }
    let mut theta = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..BISECTION_MAX_ITER {
        theta = 0.5 * (lo + hi);
        let t = fam.moment(theta);
        if (t - a).abs() <= BISECTION_TOL {
            converged = true;
            break;
        }
        if t > a {
            lo = theta;
        } else {
            hi = theta;
        }
    }
    let sol = TiltSolution { theta, constraint_value: fam.moment(theta), rate: fam.entropy(theta), converged };
    if !converged {
        return Err(Error::Unsupported(format!("tilt bisection did not converge for a={a}: {sol:?}")));
    }
    Ok(sol)
}

/// Variants of the map `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TVariant {
    /// `int x rho(dx)`.
    Sparse,
    /// `int (x - s0) rho(dx)`.
    Dense { s0: f64 },
    /// `int ((x - s0) ∧ M) rho(dx)`.
    DenseTruncated { s0: f64, m: f64 },
}

pub fn t_map(measure: &DiscreteMeasure, variant: TVariant) -> f64 {
    let mut total = 0.0;
    for &(x, w) in &measure.atoms {
        total += match variant {
            TVariant::Sparse => x * w,
            TVariant::Dense { s0 } => (x - s0) * w,
            TVariant::DenseTruncated { s0, m } => (x - s0).min(m) * w,
        };
    }
    total
}

/// `P(Poisson(a) < k) = sum_{i<k} a^i/i! e^{-a}`: the probability that the
/// typical point has `n kappa_d R_k^d >= a`.
pub fn knn_tail_probability(a: f64, k: usize) -> f64 {
    let mut term = (-a).exp();
    let mut sum = 0.0;
    for i in 0..k {
        if i > 0 {
            term *= a / i as f64;
        }
        sum += term;
    }
    sum
}

/// The critical-regime rate has no computable form here.
pub fn critical_rate() -> Result<f64> {
    Err(Error::Unsupported(
        "the critical-regime rate is an infimum of a relative entropy over stationary marked point processes \
         and has no closed form; estimate the lower tail by simulation instead"
            .into(),
    ))
}
