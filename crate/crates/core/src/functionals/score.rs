//! Scores of finite configurations for the sparse regime.
//!
//! A score sees one connected component after rescaling by `1/r_n`.  On the
//! torus that rescaled component lives in a torus of side `1/r_n`; in the
//! validation harness it lives in `R^d`.  [`LocalConfig`] carries both cases.

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::process::StreamKey;

/// A finite configuration in `R^d` or in a torus of side `side`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalConfig {
    dim: usize,
    side: Option<f64>,
    coords: Vec<f64>,
}

impl LocalConfig {
    pub fn euclidean(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        Self { dim, side: None, coords }
    }

    pub fn on_torus(dim: usize, side: f64, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0 && side > 0.0);
        Self { dim, side: Some(side), coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            let mut t = (x - y).abs();
            if let Some(l) = self.side {
                t %= l;
                t = t.min(l - t);
            }
            s += t * t;
        }
        s.sqrt()
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    pub fn translated(&self, y: &[f64]) -> Self {
        let mut c = self.coords.clone();
        for (k, v) in c.iter_mut().enumerate() {
            *v += y[k % self.dim];
        }
        Self { coords: c, ..self.clone() }
    }
}

/// A score `xi` on finite configurations.
///
/// `k0` is the smallest configuration size with non-zero score, and
/// `bound(m)` is the bound `b(m)` on scores of `m`-point configurations.
pub trait ComponentScore: Send + Sync {
    fn name(&self) -> &str;
    fn k0(&self) -> usize;
    fn evaluate(&self, cfg: &LocalConfig) -> f64;
    fn bound(&self, m: usize) -> f64;
}

fn binomial(m: usize, k: usize) -> f64 {
    if k > m {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Number of `k0`-subsets whose points are pairwise within distance 1.
#[derive(Clone, Debug)]
pub struct CliqueCount {
    k0: usize,
    name: String,
}

pub fn clique_count_score(k0: usize) -> CliqueCount {
    assert!(k0 >= 1, "k0 must be positive");
    CliqueCount { k0, name: format!("clique_count_k{k0}") }
}

impl ComponentScore for CliqueCount {
    fn name(&self) -> &str {
        &self.name
    }

    fn k0(&self) -> usize {
        self.k0
    }

    fn evaluate(&self, cfg: &LocalConfig) -> f64 {
        let m = cfg.len();
        if m < self.k0 {
            return 0.0;
        }
        if self.k0 == 1 {
            return m as f64;
        }
        let adj: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| i != j && cfg.dist(i, j) <= 1.0).collect()).collect();
        let mut count = 0u64;
        let mut cand: Vec<usize> = (0..m).collect();
        extend_cliques(&adj, &mut cand, self.k0, &mut count);
        count as f64
    }

    fn bound(&self, m: usize) -> f64 {
        binomial(m, self.k0)
    }
}

/// Counts cliques of `need` more vertices drawn from `cand`, every candidate
/// already adjacent to the clique built so far.
fn extend_cliques(adj: &[Vec<bool>], cand: &mut Vec<usize>, need: usize, count: &mut u64) {
    if need == 0 {
        *count += 1;
        return;
    }
    if cand.len() < need {
        return;
    }
    for (t, &v) in cand.iter().enumerate() {
        if need == 1 {
            *count += (cand.len() - t) as u64;
            return;
        }
        let mut next: Vec<usize> = cand[t + 1..].iter().copied().filter(|&u| adj[v][u]).collect();
        extend_cliques(adj, &mut next, need - 1, count);
    }
}

/// Sum of the lengths of edges no longer than 1.
#[derive(Clone, Debug, Default)]
pub struct EdgeLength;

pub fn edge_length_score() -> EdgeLength {
    EdgeLength
}

impl ComponentScore for EdgeLength {
    fn name(&self) -> &str {
        "edge_length"
    }

    fn k0(&self) -> usize {
        2
    }

    fn evaluate(&self, cfg: &LocalConfig) -> f64 {
        let mut s = 0.0;
        for i in 0..cfg.len() {
            for j in i + 1..cfg.len() {
                let r = cfg.dist(i, j);
                if r <= 1.0 {
                    s += r;
                }
            }
        }
        s
    }

    fn bound(&self, m: usize) -> f64 {
        binomial(m, 2)
    }
}

type ScoreFn = dyn Fn(&LocalConfig) -> f64 + Send + Sync;
type BoundFn = dyn Fn(usize) -> f64 + Send + Sync;

/// A score given by closures.
pub struct ScoreSpec {
    pub name: String,
    pub k0: usize,
    evaluate: Box<ScoreFn>,
    bound: Box<BoundFn>,
}

impl ScoreSpec {
    pub fn new(
        name: impl Into<String>,
        k0: usize,
        evaluate: impl Fn(&LocalConfig) -> f64 + Send + Sync + 'static,
        bound: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), k0, evaluate: Box::new(evaluate), bound: Box::new(bound) }
    }
}

impl ComponentScore for ScoreSpec {
    fn name(&self) -> &str {
        &self.name
    }
    fn k0(&self) -> usize {
        self.k0
    }
    fn evaluate(&self, cfg: &LocalConfig) -> f64 {
        (self.evaluate)(cfg)
    }
    fn bound(&self, m: usize) -> f64 {
        (self.bound)(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityEstimate {
    pub integral: f64,
    pub std_err: f64,
    pub samples: usize,
    /// Estimate more than two standard errors above zero.
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreValidation {
    pub name: String,
    pub k0: usize,
    pub inv: ConditionCheck,
    pub loc: ConditionCheck,
    pub bnd: ConditionCheck,
    pub pos: PositivityEstimate,
}

impl ScoreValidation {
    pub fn all_hold(&self) -> bool {
        self.inv.holds && self.loc.holds && self.bnd.holds && self.pos.positive
    }
}

fn random_config<R: Rng>(rng: &mut R, d: usize, m: usize, spread: f64) -> LocalConfig {
    LocalConfig::euclidean(d, (0..m * d).map(|_| spread * rng.gen::<f64>()).collect())
}

/// Randomized check of translation invariance, locality and boundedness,
/// plus a Monte Carlo estimate of the positivity integral
/// `int xi({0, x_2, ..., x_k0}) dx_2 ... dx_k0`.
pub fn validate_score(score: &dyn ComponentScore, d: usize, trials: usize, key: &StreamKey) -> Result<ScoreValidation> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let k0 = score.k0();
    let kf = k0 as f64;

    let mut rng = key.child("inv").rng();
    let mut inv_fail = 0;
    for _ in 0..trials {
        let m = k0 + rng.gen_range(0..4);
        let cfg = random_config(&mut rng, d, m, kf);
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let (a, b) = (score.evaluate(&cfg), score.evaluate(&cfg.translated(&y)));
        if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
            inv_fail += 1;
        }
    }

    let mut rng = key.child("loc").rng();
    let mut loc_fail = 0;
    let mut loc_trials = 0;
    if k0 >= 2 {
        while loc_trials < trials {
            let cfg = random_config(&mut rng, d, k0, 3.0 * kf);
            if cfg.diameter() <= kf {
                continue;
            }
            loc_trials += 1;
            if score.evaluate(&cfg) != 0.0 {
                loc_fail += 1;
            }
        }
    }

    let mut rng = key.child("bnd").rng();
    let mut bnd_fail = 0;
    for t in 0..trials {
        let m = 1 + t % (k0 + 4);
        // alternate tight clusters, where counting scores peak, with spread ones
        let spread = if t % 2 == 0 { 0.5 / (d as f64).sqrt() } else { 2.0 * kf };
        let cfg = random_config(&mut rng, d, m, spread);
        if score.evaluate(&cfg) > score.bound(m) {
            bnd_fail += 1;
        }
    }

    let samples = trials.max(1000);
    let pos = if k0 == 1 {
        let v = score.evaluate(&LocalConfig::euclidean(d, vec![0.0; d]));
        PositivityEstimate { integral: v, std_err: 0.0, samples: 1, positive: v > 0.0 }
    } else {
        // xi vanishes once some x_i leaves [-k0, k0]^d, by locality
        let mut rng = key.child("pos").rng();
        let vol = (2.0 * kf).powi((d * (k0 - 1)) as i32);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let mut c = vec![0.0; d];
            c.extend((0..(k0 - 1) * d).map(|_| rng.gen_range(-kf..kf)));
            let v = vol * score.evaluate(&LocalConfig::euclidean(d, c));
            s += v;
            s2 += v * v;
        }
        let mean = s / samples as f64;
        let var = (s2 / samples as f64 - mean * mean).max(0.0);
        let se = (var / samples as f64).sqrt();
        PositivityEstimate { integral: mean, std_err: se, samples, positive: mean > 2.0 * se && mean > 0.0 }
    };

    Ok(ScoreValidation {
        name: score.name().to_string(),
        k0,
        inv: ConditionCheck { holds: inv_fail == 0, trials, failures: inv_fail },
        loc: ConditionCheck { holds: loc_fail == 0, trials: loc_trials, failures: loc_fail },
        bnd: ConditionCheck { holds: bnd_fail == 0, trials, failures: bnd_fail },
        pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> LocalConfig {
        LocalConfig::euclidean(1, xs.to_vec())
    }

    #[test]
    fn clique_counts_small_cases() {
        let s = clique_count_score(2);
        assert_eq!(s.evaluate(&line(&[0.0, 0.5])), 1.0);
        assert_eq!(s.evaluate(&line(&[0.0, 1.5])), 0.0);
        assert_eq!(s.evaluate(&line(&[0.0, 0.5, 1.0])), 3.0);
        assert_eq!(s.evaluate(&line(&[0.0, 0.9, 1.8])), 2.0);
        let t = clique_count_score(3);
        assert_eq!(t.evaluate(&line(&[0.0, 0.5, 1.0, 1.4])), 2.0);
        assert_eq!(clique_count_score(1).evaluate(&line(&[0.0, 9.0])), 2.0);
    }

    #[test]
    fn edge_length_pair() {
        assert!((edge_length_score().evaluate(&line(&[0.2, 0.7])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_local_distance_wraps() {
        let c = LocalConfig::on_torus(1, 100.0, vec![0.25, 99.75]);
        assert!((c.dist(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clique_score_passes_validation() {
        let v = validate_score(&clique_count_score(2), 1, 500, &StreamKey::new(1, "v")).unwrap();
        assert!(v.all_hold(), "{v:?}");
        assert!((v.pos.integral - 2.0).abs() < 4.0 * v.pos.std_err, "{:?}", v.pos);
        let e = validate_score(&edge_length_score(), 2, 500, &StreamKey::new(1, "v")).unwrap();
        assert!(e.all_hold(), "{e:?}");
    }

    #[test]
    fn shift_dependent_score_fails_inv() {
        let bad = ScoreSpec::new(
            "shifted",
            2,
            |c: &LocalConfig| if c.len() >= 2 && c.dist(0, 1) <= 1.0 { c.point(0)[0].abs() } else { 0.0 },
            |_| f64::INFINITY,
        );
        let v = validate_score(&bad, 1, 200, &StreamKey::new(2, "v")).unwrap();
        assert!(!v.inv.holds);
    }

    #[test]
    fn counterexamples_for_loc_and_bnd() {
        let far = ScoreSpec::new("far", 2, |c: &LocalConfig| c.len() as f64, |m| m as f64);
        let v = validate_score(&far, 1, 100, &StreamKey::new(3, "v")).unwrap();
        assert!(!v.loc.holds);
        let big = ScoreSpec::new("big", 2, |c: &LocalConfig| 10.0 * c.len() as f64, |_| 1.0);
        assert!(!validate_score(&big, 1, 100, &StreamKey::new(3, "v")).unwrap().bnd.holds);
    }
}
