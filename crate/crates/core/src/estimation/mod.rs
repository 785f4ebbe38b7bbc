//! Monte Carlo estimation of lower tails and the verification suites that
//! compare simulated frequencies with the probability bounds.
//!
//! Replicates run on the rayon pool.  Replicate `r` draws from the stream
//! `(seed, lane, r)` and results are gathered in replicate order, so every
//! number here is bit-identical for any thread count.

mod checks;
mod coupling;
mod verify;

pub use checks::{BoundCheck, CheckKind, CheckStatus, Direction, BOUND_CHECK_COLUMNS};
pub use coupling::{chi_square_cells, coupling_distribution_test, ChiSquareReport, CouplingBuilder};
pub use verify::{
    ball_count_bound, verify_bad_box_probabilities, verify_ball_count_bound, verify_sprinkle_bound, BadBoxRegime,
    verify_dense_sequential, verify_knn_sprinkle_bounds, verify_knn_tail, DenseSequentialReport, SprinkleBoundReport,
    SprinkleConfigRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::functionals::{
    clique_count_score, contact_h, critical_knn_h, dense_h, edge_length_score, sparse_h, RegimeParams,
};
use crate::geometry::PointSet;
use crate::process::{sample_poisson, StreamKey};

/// The functional whose lower tail is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// Sparse regime, `k0`-clique count score.
    SparseClique { k0: usize },
    /// Sparse regime, edge-length score.
    SparseEdgeLength,
    /// Critical regime, k-NN edge functional.
    CriticalKnn,
    /// Critical regime, contact functional on a `resolution^d` lattice.
    CriticalContact { resolution: usize },
    /// Dense regime.
    Dense,
    /// `H ≡ value`, with speed 1.
    Constant { value: f64 },
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::SparseClique { k0 } => format!("sparse_clique_k{k0}"),
            Functional::SparseEdgeLength => "sparse_edge_length".into(),
            Functional::CriticalKnn => "critical_knn".into(),
            Functional::CriticalContact { .. } => "critical_contact".into(),
            Functional::Dense => "dense".into(),
            Functional::Constant { .. } => "constant".into(),
        }
    }

    pub fn evaluate(&self, phi: &PointSet, params: &RegimeParams) -> Result<f64> {
        match *self {
            Functional::SparseClique { k0 } => sparse_h(phi, params, &clique_count_score(k0)),
            Functional::SparseEdgeLength => sparse_h(phi, params, &edge_length_score()),
            Functional::CriticalKnn => critical_knn_h(phi, params),
            Functional::CriticalContact { resolution } => contact_h(phi, params, resolution),
            Functional::Dense => dense_h(phi, params),
            Functional::Constant { value } => Ok(value),
        }
    }

    /// `rho^sp`, `n` or `rho^de`.
    pub fn speed(&self, params: &RegimeParams) -> Result<f64> {
        match *self {
            Functional::SparseClique { k0 } => params.sparse_speed(k0),
            Functional::SparseEdgeLength => params.sparse_speed(2),
            Functional::CriticalKnn | Functional::CriticalContact { .. } => params.n(),
            Functional::Dense => params.dense_speed(),
            Functional::Constant { .. } => Ok(1.0),
        }
    }
}

/// `H` on `replicates` independent Poisson samples, in replicate order.
pub fn sample_values(functional: &Functional, params: &RegimeParams, replicates: usize, key: &StreamKey) -> Result<Vec<f64>> {
    if let Functional::Constant { value } = functional {
        return Ok(vec![*value; replicates]);
    }
    let (n, d) = (params.n()?, params.d()?);
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let phi = sample_poisson(n, d, &key.with_replicate(r))?;
            functional.evaluate(&phi, params)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimationResult {
    pub speed: f64,
    pub a: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub replicates: usize,
    /// `-ln(p_hat) / speed`; `+inf` when `p_hat = 0`.
    pub normalized_log: f64,
}

impl EstimationResult {
    pub fn from_values(values: &[f64], a: f64, speed: f64) -> Self {
        let hits = values.iter().filter(|&&h| h <= a).count();
        let r = values.len();
        let p = hits as f64 / r as f64;
        let normalized_log = if hits == 0 { f64::INFINITY } else { -p.ln() / speed };
        Self { speed, a, p_hat: p, std_err: (p * (1.0 - p) / r as f64).sqrt(), replicates: r, normalized_log }
    }
}

/// Frequency of `{H <= a}` over independent replicates.
pub fn estimate_lower_tail(
    functional: &Functional,
    params: &RegimeParams,
    a: f64,
    replicates: usize,
    key: &StreamKey,
) -> Result<EstimationResult> {
    if replicates < 100 {
        return Err(invalid("replicates", format!("need at least 100, got {replicates}")));
    }
    let speed = functional.speed(params)?;
    let values = sample_values(functional, params, replicates, key)?;
    Ok(EstimationResult::from_values(&values, a, speed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingCurve {
    pub rows: Vec<EstimationResult>,
    /// Rows with `p_hat = 0`, whose normalized log is infinite.
    pub flagged: Vec<usize>,
}

/// One estimate per parameter set, each on its own replicate lane.
pub fn scaling_curve(
    functional: &Functional,
    params_list: &[RegimeParams],
    a: f64,
    replicates: usize,
    key: &StreamKey,
) -> Result<ScalingCurve> {
    let mut rows = Vec::with_capacity(params_list.len());
    for (t, p) in params_list.iter().enumerate() {
        rows.push(estimate_lower_tail(functional, p, a, replicates, &key.child(&format!("speed{t}")))?);
    }
    let flagged = rows.iter().enumerate().filter(|(_, r)| r.p_hat == 0.0).map(|(t, _)| t).collect();
    Ok(ScalingCurve { rows, flagged })
}

pub const ESTIMATION_COLUMNS: [&str; 5] = ["speed", "a", "p_hat", "SE", "normalized_log"];

impl EstimationResult {
    pub fn csv_row(&self) -> [String; 5] {
        [fmt(self.speed), fmt(self.a), fmt(self.p_hat), fmt(self.std_err), fmt(self.normalized_log)]
    }
}

/// 17 significant digits, `inf`/`-inf`/`nan` spelled out.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse() -> RegimeParams {
        RegimeParams::sparse(1, 100.0, 0.001, 2)
    }

    #[test]
    fn extreme_thresholds() {
        let f = Functional::SparseClique { k0: 2 };
        let key = StreamKey::new(1, "x");
        assert_eq!(estimate_lower_tail(&f, &sparse(), f64::INFINITY, 200, &key).unwrap().p_hat, 1.0);
        assert_eq!(estimate_lower_tail(&f, &sparse(), -1.0, 200, &key).unwrap().p_hat, 0.0);
        assert!(estimate_lower_tail(&f, &sparse(), 1.0, 99, &key).is_err());
    }

    #[test]
    fn constant_functional_has_zero_log() {
        let f = Functional::Constant { value: 0.0 };
        let c = scaling_curve(&f, &[sparse(), sparse()], 1.0, 100, &StreamKey::new(1, "c")).unwrap();
        assert!(c.rows.iter().all(|r| r.normalized_log == 0.0));
        assert!(c.flagged.is_empty());
    }

    #[test]
    fn monotone_in_threshold_on_shared_replicates() {
        let f = Functional::SparseClique { k0: 2 };
        let v = sample_values(&f, &sparse(), 500, &StreamKey::new(4, "m")).unwrap();
        let mut last = 0.0;
        for a in [0.0, 0.2, 0.5, 0.8, 1.0, 1.5] {
            let p = EstimationResult::from_values(&v, a, 10.0).p_hat;
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let f = Functional::Dense;
        let p = RegimeParams::dense(1, 500.0, 1, 3.0, 0.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_values(&f, &p, 64, &StreamKey::new(5, "t")).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
