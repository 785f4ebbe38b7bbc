//! The lower bound on the probability that the coupling realizes the
//! sprinkling:
//!
//! `P(F | P_n) >= (1 - 1/M)^{N_n} e^{-n/M} ((V/M)^m / m! e^{-V/M})^I`
//!
//! where `F` asks that the thinning keep every point of `P_n`, that the
//! sprinkle put nothing outside the `I` balls of volume `V/n`, and that
//! each ball receive exactly `m` sprinkle points.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{dist, PointSet};
use crate::process::CriticalCoupling;

fn ln_factorial(m: u64) -> f64 {
    (1..=m).map(|i| (i as f64).ln()).sum()
}

fn check(n: f64, m: f64, v: f64) -> Result<()> {
    if !(m > 1.0) {
        return Err(invalid("M", format!("need M > 1, got {m}")));
    }
    if !(n > 0.0) || !(v > 0.0) {
        return Err(invalid("V", "n and V must be positive"));
    }
    Ok(())
}

/// Logarithm of the lower bound.
pub fn sprinkle_log_lower_bound(n_count: u64, n: f64, m_big: f64, m: u64, v: f64, i: u64) -> Result<f64> {
    check(n, m_big, v)?;
    let per_ball = m as f64 * (v / m_big).ln() - ln_factorial(m) - v / m_big;
    Ok(n_count as f64 * (1.0 - 1.0 / m_big).ln() - n / m_big + i as f64 * per_ball)
}

pub fn sprinkle_prob_lower_bound(n_count: u64, n: f64, m_big: f64, m: u64, v: f64, i: u64) -> Result<f64> {
    Ok(sprinkle_log_lower_bound(n_count, n, m_big, m, v, i)?.exp())
}

/// Exact conditional probabilities of the three parts of `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SprinkleEventParts {
    /// All of `P_n` survives the thinning.
    pub keep_all: f64,
    /// No sprinkle point outside the balls.
    pub nothing_outside: f64,
    /// Exactly `m` sprinkle points in every ball.
    pub exact_counts: f64,
}

impl SprinkleEventParts {
    pub fn new(n_count: u64, n: f64, m_big: f64, m: u64, v: f64, i: u64) -> Result<Self> {
        check(n, m_big, v)?;
        let per_ball = (m as f64 * (v / m_big).ln() - ln_factorial(m) - v / m_big).exp();
        Ok(Self {
            keep_all: (1.0 - 1.0 / m_big).powf(n_count as f64),
            nothing_outside: (-(n / m_big) * (1.0 - i as f64 * v / n)).exp(),
            exact_counts: per_ball.powf(i as f64),
        })
    }

    pub fn joint(&self) -> f64 {
        self.keep_all * self.nothing_outside * self.exact_counts
    }
}

/// Which parts of `F` a realized coupling satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SprinkleEventOutcome {
    pub keep_all: bool,
    pub nothing_outside: bool,
    pub exact_counts: bool,
}

impl SprinkleEventOutcome {
    pub fn all(&self) -> bool {
        self.keep_all && self.nothing_outside && self.exact_counts
    }
}

pub fn sprinkle_event(coupling: &CriticalCoupling, centers: &PointSet, radius: f64, m: usize) -> SprinkleEventOutcome {
    let mut inside = vec![0usize; centers.len()];
    let mut outside = 0usize;
    for p in coupling.sprinkle.iter() {
        match (0..centers.len()).find(|&c| dist(centers.point(c), p) <= radius) {
            Some(c) => inside[c] += 1,
            None => outside += 1,
        }
    }
    SprinkleEventOutcome {
        keep_all: coupling.all_retained(),
        nothing_outside: outside == 0,
        exact_counts: inside.iter().all(|&c| c == m),
    }
}
