//! Monte Carlo checks of the probability bounds used by the sprinkling
//! arguments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoundCheck, Direction};
use crate::error::{invalid, Result};
use crate::functionals::RegimeParams;
use crate::geometry::{unit_ball_volume, Exclude, PointSet, SpatialIndex};
use crate::process::{couple_given_base, sample_poisson, uniform_point, StreamKey};
use crate::rates::knn_tail_probability;
use crate::sprinkling::{
    dense_bounded_all, dense_grid, dense_sequential_resample, distinguished_subset, find_large_radius_nodes,
    knn_sprinkle, large_radius_count_bound, sparse_bad_box_bound, sparse_bad_boxes, sparse_grid, sprinkle_event,
    sprinkle_prob_lower_bound, SprinkleEventParts,
};

/// Sample mean and its standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// SE of a frequency, taken under the larger of the observed and the
/// hypothesized variance so that a zero count does not give a zero SE.
fn null_se(p_hat: f64, p0: f64, draws: usize) -> f64 {
    (p_hat * (1.0 - p_hat)).max(p0 * (1.0 - p0)).max(0.0).sqrt() / (draws as f64).sqrt()
}

/// `m^l kappa_d^{l-1} r^{(l-1)d} |Q|`.
pub fn ball_count_bound(m: f64, l: usize, r: f64, d: usize, box_volume: f64) -> f64 {
    m.powi(l as i32) * unit_ball_volume(d).powi(l as i32 - 1) * r.powi(((l - 1) * d) as i32) * box_volume
}

/// Mean number of points `X` of an intensity-`m` process in the cube
/// `Q = [0, |Q|^{1/d})^d` with at least `l` points (itself included) in
/// `B_r(X)`, against `m^l kappa_d^{l-1} r^{(l-1)d} |Q|`.
pub fn verify_ball_count_bound(
    m: f64,
    l: usize,
    r: f64,
    d: usize,
    box_volume: f64,
    replicates: usize,
    key: &StreamKey,
) -> Result<BoundCheck> {
    if l == 0 {
        return Err(invalid("l", "need l >= 1"));
    }
    if !(box_volume > 0.0 && box_volume <= 1.0) {
        return Err(invalid("box_volume", format!("must lie in (0,1], got {box_volume}")));
    }
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    let side = box_volume.powf(1.0 / d as f64);
    let counts: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|t| {
            let phi = sample_poisson(m, d, &key.with_replicate(t))?;
            let idx = SpatialIndex::new(&phi, r);
            let c = phi.iter().filter(|x| x.iter().all(|&c| c < side) && idx.count_in_ball(x, r) >= l).count();
            Ok(c as f64)
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_se(&counts);
    Ok(BoundCheck::statistical(
        format!("ball_count m={m} l={l} r={r} d={d}"),
        Direction::Upper,
        mean,
        ball_count_bound(m, l, r, d, box_volume),
        se,
        3.0,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadBoxRegime {
    Sparse,
    Dense,
}

/// Fraction of bad boxes per replicate, averaged over replicates, against
/// the per-box bound.  Sparse: crowded boxes against the mean number of
/// crowded points of a box of the sparse grid.  Dense: boxes that are not
/// `(P_n, M)`-bounded against `2k e^{-M-s0}`.
pub fn verify_bad_box_probabilities(
    regime: BadBoxRegime,
    params: &RegimeParams,
    replicates: usize,
    key: &StreamKey,
) -> Result<BoundCheck> {
    let (n, d) = (params.n()?, params.d()?);
    let (grid, bound) = match regime {
        BadBoxRegime::Sparse => {
            let g = sparse_grid(params)?;
            let b = sparse_bad_box_bound(params, g.volume())?;
            (g, b)
        }
        BadBoxRegime::Dense => {
            let (k, m, s0) = (params.k()?, params.big_m()?, params.s0()?);
            (dense_grid(params)?, 2.0 * k as f64 * (-m - s0).exp())
        }
    };
    let boxes = grid.num_boxes() as f64;
    let fractions: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|t| {
            let phi = sample_poisson(n, d, &key.with_replicate(t))?;
            let bad = match regime {
                BadBoxRegime::Sparse => sparse_bad_boxes(&phi, params, &grid)?.iter().filter(|&&b| b).count(),
                BadBoxRegime::Dense => {
                    dense_bounded_all(&phi, &grid, params, params.big_m()?)?.iter().filter(|&&b| !b).count()
                }
            };
            Ok(bad as f64 / boxes)
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_se(&fractions);
    let name = match regime {
        BadBoxRegime::Sparse => "bad_box sparse",
        BadBoxRegime::Dense => "bad_box dense",
    };
    Ok(BoundCheck::statistical(name, Direction::Upper, mean, bound.min(1.0), se, 3.0))
}

/// One conditioning configuration of the sprinkle check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SprinkleConfigRow {
    /// `N_n`.
    pub points: usize,
    /// Number of balls `I`.
    pub balls: usize,
    pub draws: usize,
    pub hits: usize,
    pub bound: f64,
    /// Exact conditional probabilities of the parts.
    pub parts: SprinkleEventParts,
    /// Observed frequencies of the parts, in the order of `parts`.
    pub part_hits: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SprinkleBoundReport {
    pub configs: Vec<SprinkleConfigRow>,
    /// Mean conditional frequency of `F` against the mean bound.
    pub joint: BoundCheck,
    /// Per-configuration checks: the joint bound and the three parts.
    pub checks: Vec<BoundCheck>,
}

/// For `configs` samples of `P_n`, re-draws the coupling `draws` times and
/// records how often the sprinkle realizes `k` points in each ball of
/// radius `n^{-1/d}/2` around the distinguished large-radius nodes and none
/// elsewhere, while the thinning keeps all of `P_n`.
pub fn verify_sprinkle_bound(
    params: &RegimeParams,
    configs: usize,
    draws: usize,
    key: &StreamKey,
) -> Result<SprinkleBoundReport> {
    let (n, d, k, big_m) = (params.n()?, params.d()?, params.k()?, params.big_m()?);
    if n > 100.0 {
        return Err(invalid("n", format!("the conditional event is only estimable for n <= 100, got {n}")));
    }
    if configs == 0 || draws == 0 {
        return Err(invalid("replicates", "need at least one configuration and one draw"));
    }
    let radius = 0.5 * params.spacing()?;
    let v = unit_ball_volume(d) * 2f64.powi(-(d as i32));

    let mut rows = Vec::with_capacity(configs);
    let mut checks = Vec::new();
    for c in 0..configs as u64 {
        let base = sample_poisson(n, d, &key.child("config").with_replicate(c))?;
        let j = find_large_radius_nodes(&base, params)?;
        let centers: PointSet = base.select(distinguished_subset(&j, &base, params)?);
        let (nc, i) = (base.len() as u64, centers.len() as u64);
        let bound = sprinkle_prob_lower_bound(nc, n, big_m, k as u64, v, i)?;
        let parts = SprinkleEventParts::new(nc, n, big_m, k as u64, v, i)?;

        let lane = key.child(&format!("draw{c}"));
        let outcomes: Vec<[bool; 4]> = (0..draws as u64)
            .into_par_iter()
            .map(|t| {
                let cp = couple_given_base(base.clone(), n, big_m, &lane.with_replicate(t))?;
                let o = sprinkle_event(&cp, &centers, radius, k);
                Ok([o.all(), o.keep_all, o.nothing_outside, o.exact_counts])
            })
            .collect::<Result<_>>()?;
        let count = |f: usize| outcomes.iter().filter(|o| o[f]).count();
        let (hits, part_hits) = (count(0), [count(1), count(2), count(3)]);

        let freq = |h: usize| h as f64 / draws as f64;
        let p = freq(hits);
        checks.push(BoundCheck::statistical(
            format!("sprinkle config={c} joint"),
            Direction::Lower,
            p,
            bound,
            null_se(p, bound, draws),
            3.0,
        ));
        let exact = [parts.keep_all, parts.nothing_outside, parts.exact_counts];
        for (name, (h, e)) in ["keep_all", "nothing_outside", "exact_counts"].iter().zip(part_hits.iter().zip(exact)) {
            let q = freq(*h);
            checks.push(BoundCheck::statistical(
                format!("sprinkle config={c} {name}"),
                Direction::Match,
                q,
                e,
                null_se(q, e, draws),
                3.0,
            ));
        }
        rows.push(SprinkleConfigRow { points: base.len(), balls: centers.len(), draws, hits, bound, parts, part_hits });
    }

    let cf = configs as f64;
    let mean_p = rows.iter().map(|r| r.hits as f64 / r.draws as f64).sum::<f64>() / cf;
    let mean_b = rows.iter().map(|r| r.bound).sum::<f64>() / cf;
    let var = rows
        .iter()
        .map(|r| null_se(r.hits as f64 / r.draws as f64, r.bound, r.draws).powi(2))
        .sum::<f64>();
    let joint = BoundCheck::statistical("sprinkle joint", Direction::Lower, mean_p, mean_b, var.sqrt() / cf, 3.0);
    Ok(SprinkleBoundReport { configs: rows, joint, checks })
}

/// Worst cases over `replicates` samples of the two deterministic k-NN
/// sprinkling bounds: `#J <= k 2^d n / (kappa_d M^d)`, and after the
/// sprinkle every node of `J` and every inserted point has
/// `R_k <= (k+1) n^{-1/d}`.
pub fn verify_knn_sprinkle_bounds(params: &RegimeParams, replicates: usize, key: &StreamKey) -> Result<[BoundCheck; 2]> {
    let (n, d, k, m) = (params.n()?, params.d()?, params.k()?, params.big_m()?);
    let rows: Vec<(usize, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|t| {
            let rk = key.with_replicate(t);
            let phi = sample_poisson(n, d, &rk.child("phi"))?;
            let s = knn_sprinkle(&phi, params, &rk.child("sprinkle"))?;
            Ok((s.large.len(), s.report.max_post_radius.unwrap_or(0.0)))
        })
        .collect::<Result<_>>()?;
    let worst_j = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let worst_r = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let tag = format!("k={k} M={m} d={d} n={n}");
    Ok([
        BoundCheck::deterministic(
            format!("knn_large_count {tag}"),
            Direction::Upper,
            worst_j as f64,
            large_radius_count_bound(params)?,
        ),
        BoundCheck::deterministic(
            format!("knn_post_radius {tag}"),
            Direction::Upper,
            worst_r,
            (k as f64 + 1.0) * params.spacing()?,
        ),
    ])
}

/// Frequency of `{n kappa_d R_k(x)^d >= a}` for a uniform `x` independent
/// of `P_n`, against `sum_{i<k} a^i/i! e^{-a}`.
pub fn verify_knn_tail(n: f64, d: usize, k: usize, a: f64, replicates: usize, key: &StreamKey) -> Result<BoundCheck> {
    if k == 0 {
        return Err(invalid("k", "need k >= 1"));
    }
    let kappa = unit_ball_volume(d);
    let hits: Vec<bool> = (0..replicates as u64)
        .into_par_iter()
        .map(|t| {
            let rk = key.with_replicate(t);
            let phi = sample_poisson(n, d, &rk.child("phi"))?;
            let mut x = vec![0.0; d];
            uniform_point(d, &mut rk.child("x").rng(), &mut x);
            let r = SpatialIndex::auto(&phi).knn_radius(&x, k, Exclude::None);
            Ok(n * kappa * r.powi(d as i32) >= a)
        })
        .collect::<Result<_>>()?;
    let p = hits.iter().filter(|&&h| h).count() as f64 / replicates as f64;
    let exact = knn_tail_probability(a, k);
    Ok(BoundCheck::statistical(
        format!("knn_tail k={k} a={a}"),
        Direction::Match,
        p,
        exact,
        null_se(p, exact, replicates),
        3.0,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenseSequentialReport {
    /// Replicates run, including those where `E*` failed.
    pub attempts: usize,
    /// Replicates with `E*`, at most the requested number.
    pub e_star: usize,
    /// Number of `E*` replicates with a box that is not `(P'', M)`-bounded.
    pub check: BoundCheck,
}

/// Runs the sequential resampling until `target` replicates realize `E*`
/// (or `max_attempts` is reached) and rechecks the boundedness of every
/// box of the output on those replicates.
pub fn verify_dense_sequential(
    params: &RegimeParams,
    samples: usize,
    target: usize,
    max_attempts: usize,
    key: &StreamKey,
) -> Result<DenseSequentialReport> {
    let (n, d) = (params.n()?, params.d()?);
    let batch = target.max(1);
    let mut outcomes: Vec<(bool, bool)> = Vec::new();
    while outcomes.iter().filter(|o| o.0).count() < target && outcomes.len() < max_attempts {
        let start = outcomes.len() as u64;
        let end = (start + batch as u64).min(max_attempts as u64);
        let more: Vec<(bool, bool)> = (start..end)
            .into_par_iter()
            .map(|t| {
                let rk = key.with_replicate(t);
                let p = sample_poisson(n, d, &rk.child("p"))?;
                let q = sample_poisson(n, d, &rk.child("copy"))?;
                let r = dense_sequential_resample(&p, &q, params, samples, &rk.child("seq"))?;
                let bounded = dense_bounded_all(&r.points, &r.grid, params, params.big_m()?)?;
                Ok((r.e_star, bounded.iter().all(|&b| b)))
            })
            .collect::<Result<_>>()?;
        outcomes.extend(more);
    }
    let mut used = 0usize;
    let mut attempts = 0usize;
    let mut violations = 0usize;
    for &(e, ok) in &outcomes {
        if used == target {
            break;
        }
        attempts += 1;
        if e {
            used += 1;
            violations += !ok as usize;
        }
    }
    let check = BoundCheck::deterministic(
        format!("dense_sequential_bounded e_star={used}"),
        Direction::Upper,
        violations as f64,
        0.0,
    );
    Ok(DenseSequentialReport { attempts, e_star: used, check })
}
