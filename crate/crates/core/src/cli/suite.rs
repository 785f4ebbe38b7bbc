//! The fixed-budget verification suites behind `verify`.

use serde::Serialize;

use super::Suite;
use crate::error::Result;
use crate::estimation::{
    coupling_distribution_test, verify_bad_box_probabilities, verify_ball_count_bound, verify_dense_sequential,
    verify_knn_sprinkle_bounds, verify_knn_tail, verify_sprinkle_bound, BadBoxRegime, BoundCheck, CouplingBuilder,
    Direction,
};
use crate::functionals::RegimeParams;
use crate::process::StreamKey;
use crate::rates::{dense_rate, dense_rate_bruteforce, sparse_clique_rate};

/// Replicate counts of the suites.  `replicates` in the config replaces
/// each suite's outer count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuiteBudget {
    pub ball_count: usize,
    pub bad_box: usize,
    pub sprinkle_configs: usize,
    pub sprinkle_draws: usize,
    pub knn_sprinkle: usize,
    pub knn_tail: usize,
    pub coupling: usize,
    pub dense_sequential: usize,
    pub goodness_samples: usize,
}

impl Default for SuiteBudget {
    fn default() -> Self {
        Self {
            ball_count: 500,
            bad_box: 500,
            sprinkle_configs: 5,
            sprinkle_draws: 4000,
            knn_sprinkle: 100,
            knn_tail: 10_000,
            coupling: 2000,
            dense_sequential: 50,
            goodness_samples: 16,
        }
    }
}

impl SuiteBudget {
    pub fn with_replicates(replicates: Option<usize>, samples: Option<usize>) -> Self {
        let mut b = Self::default();
        if let Some(r) = replicates {
            b.ball_count = r;
            b.bad_box = r;
            b.sprinkle_draws = r;
            b.knn_sprinkle = r;
            b.knn_tail = r;
            b.coupling = r;
            b.dense_sequential = r;
        }
        if let Some(s) = samples {
            b.goodness_samples = s;
        }
        b
    }
}

fn dense_params() -> RegimeParams {
    RegimeParams::dense(1, 2000.0, 1, 200f64.ln(), 0.0).with_m(6.0)
}

fn tolerance(name: String, value: f64, target: f64, tol: f64) -> BoundCheck {
    BoundCheck::deterministic(name, Direction::Upper, (value - target).abs(), tol)
}

pub fn run_suite(suite: Suite, budget: &SuiteBudget, key: &StreamKey) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    match suite {
        Suite::BallCount => {
            for m in [10.0, 50.0] {
                for l in [1, 2, 3] {
                    for r in [0.02, 0.1] {
                        for d in [1, 2] {
                            let k = key.child(&format!("m{m}l{l}r{r}d{d}"));
                            out.push(verify_ball_count_bound(m, l, r, d, 1.0, budget.ball_count, &k)?);
                        }
                    }
                }
            }
        }
        Suite::BadBoxSparse => {
            let p = RegimeParams::sparse(1, 2000.0, 2.5e-6, 2);
            out.push(verify_bad_box_probabilities(BadBoxRegime::Sparse, &p, budget.bad_box, key)?);
        }
        Suite::BadBoxDense => {
            out.push(verify_bad_box_probabilities(BadBoxRegime::Dense, &dense_params(), budget.bad_box, key)?);
        }
        Suite::Sprinkle => {
            // the second setting keeps every part of the event observable
            for (n, m) in [(50.0, 5.0), (6.0, 8.0)] {
                let p = RegimeParams { k: Some(1), ..RegimeParams::base(2, n) }.with_m(m);
                let r = verify_sprinkle_bound(&p, budget.sprinkle_configs, budget.sprinkle_draws, &key.child(&format!("n{n}M{m}")))?;
                for mut c in std::iter::once(r.joint).chain(r.checks) {
                    c.name = format!("{} n={n} M={m}", c.name);
                    out.push(c);
                }
            }
        }
        Suite::KnnSprinkle => {
            for k in [1, 2] {
                for m in [3.0, 5.0] {
                    let p = RegimeParams::critical(2, 500.0, k, 1.0).with_m(m);
                    out.extend(verify_knn_sprinkle_bounds(&p, budget.knn_sprinkle, &key.child(&format!("k{k}M{m}")))?);
                }
            }
        }
        Suite::KnnTail => {
            for k in [1, 2, 3] {
                for a in [1.0, 2.0] {
                    out.push(verify_knn_tail(100.0, 2, k, a, budget.knn_tail, &key.child(&format!("k{k}a{a}")))?);
                }
            }
        }
        Suite::Coupling => {
            let builders = [
                CouplingBuilder::Critical { m: 4.0 },
                CouplingBuilder::SparseResample { epsilon: 0.3, boxes_per_axis: 10 },
                CouplingBuilder::DenseResample { epsilon: 0.3, boxes_per_axis: 3 },
            ];
            for b in builders {
                let r = coupling_distribution_test(&b, 200.0, 2, 4, budget.coupling, &key.child(b.name()))?;
                out.push(BoundCheck::deterministic(
                    format!("coupling {} p_value", r.builder),
                    Direction::Lower,
                    r.p_value,
                    0.001,
                ));
            }
        }
        Suite::DenseSequential => {
            let p = dense_params().with_m0(4.0);
            let target = budget.dense_sequential;
            let r = verify_dense_sequential(&p, budget.goodness_samples, target, 4 * target, key)?;
            out.push(BoundCheck::deterministic(
                "dense_sequential e_star_replicates",
                Direction::Lower,
                r.e_star as f64,
                target as f64,
            ));
            out.push(r.check);
        }
        Suite::Rates => {
            out.push(tolerance("rate dense a=0.25".into(), dense_rate(0.25, 1, 0.0)?.rate, 0.25, 1e-6));
            for i in 1..=9 {
                let a = i as f64 / 10.0;
                let exact = dense_rate(a, 1, 0.0)?.rate;
                let brute = dense_rate_bruteforce(a, 1, 0.0, 2000, 40.0)?.rate;
                out.push(tolerance(format!("rate dense bruteforce a={a}"), brute, exact, 1e-3));
            }
            out.push(tolerance("rate sparse a=mu".into(), sparse_clique_rate(1.0, 1.0), 0.0, 0.0));
            out.push(tolerance("rate sparse a=0.5".into(), sparse_clique_rate(0.5, 1.0), 0.153426, 1e-6));
        }
    }
    Ok(out)
}

/// Runs `suites` in order; an empty list means all of them.
pub fn run_suites(suites: &[Suite], budget: &SuiteBudget, seed: u64) -> Result<Vec<BoundCheck>> {
    let list: &[Suite] = if suites.is_empty() { &Suite::ALL } else { suites };
    let root = StreamKey::new(seed, "verify");
    let mut out = Vec::new();
    for s in list {
        let name = serde_json::to_value(s)?.as_str().unwrap_or_default().to_string();
        out.extend(run_suite(*s, budget, &root.child(&name))?);
    }
    Ok(out)
}
