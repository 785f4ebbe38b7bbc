//! Sequential resampling in the dense regime.
//!
//! A box is `(eta, M)`-bounded when no point of `eta` inside it has
//! `xi_n > M`, i.e. when every such point has at least `k` other points of
//! `eta` within
//! `r_M = ((M + a_n + s0) / (n kappa_d))^{1/d}`.
//!
//! Boxes are visited in row-major order.  At step `j` the boxes before `j`
//! are fixed, box `j` holds the candidate content (the original process
//! or the copy), and later boxes carry fresh original-process content.
//! For every `i` in `N_+(j)` the probability `a_{i,j}` that box `i` ends
//! up bounded is estimated by drawing the later boxes again; box `j` is
//! good when `a_{i,j} >= 1 - b_{i,j}` for all of them, with
//! `b_{i,j} = exp(-M 2^{-1-c})` and `c = #{s in N_+(i) : s <= j}`.

use rand::Rng;
use serde::Serialize;

use super::{BoxSource, BoxState, SprinkleReport};
use crate::error::{invalid, Result};
use crate::functionals::{dense_h, dense_scores, RegimeParams};
use crate::geometry::{Exclude, PointSet, SpatialIndex};
use crate::process::{poisson_count, GridSpec, StreamKey};

/// Grid used by the dense resampling.
pub fn dense_grid(params: &RegimeParams) -> Result<GridSpec> {
    GridSpec::for_speed(params.d()?, params.dense_speed()?, 2)
}

/// `r_M`: a point has `xi_n > M` exactly when its k-th neighbour is further.
pub fn bounded_radius(params: &RegimeParams, m: f64) -> Result<f64> {
    let (d, n, a_n, s0) = (params.d()?, params.n()?, params.a_n()?, params.s0()?);
    let v = (m + a_n + s0) / (n * params.kappa()?);
    if v <= 0.0 {
        return Ok(0.0);
    }
    Ok(v.powf(1.0 / d as f64))
}

/// Whether the point at `i` of the indexed set has at least `k` others
/// within `radius`.
fn has_k_within(idx: &SpatialIndex, i: usize, k: usize, radius: f64) -> bool {
    let mut c = 0usize;
    idx.for_each_in_ball(idx.points().point(i), radius, |j, _| {
        if j != i {
            c += 1;
        }
    });
    c >= k
}

/// Whether box `b` is `(phi, M)`-bounded.
pub fn dense_bounded_check(phi: &PointSet, grid: &GridSpec, b: usize, params: &RegimeParams, m: f64) -> Result<bool> {
    Ok(dense_bounded_all(phi, grid, params, m)?[b])
}

/// `(phi, M)`-boundedness of every box.
pub fn dense_bounded_all(phi: &PointSet, grid: &GridSpec, params: &RegimeParams, m: f64) -> Result<Vec<bool>> {
    let (k, r) = (params.k()?, bounded_radius(params, m)?);
    let idx = SpatialIndex::new(phi, r);
    let mut out = vec![true; grid.num_boxes()];
    for i in 0..phi.len() {
        let b = grid.box_of(phi.point(i));
        if out[b] && !has_k_within(&idx, i, k, r) {
            out[b] = false;
        }
    }
    Ok(out)
}

/// `b_{i,j}` for a box with `fixed` already-fixed boxes in `N_+(i)`.
pub fn goodness_slack(m: f64, fixed: usize) -> f64 {
    (-m * 2f64.powi(-1 - fixed as i32)).exp()
}

/// `1 - 3^d 2k e^{|s0|} (e^{-M0} + e^{-M / 2^{4^d}})`, the lower bound on
/// the probability of `E*` for large `n`.
pub fn sequential_success_bound(d: usize, k: usize, s0: f64, m0: f64, m: f64) -> f64 {
    let spread = 2f64.powf(4f64.powi(d as i32));
    1.0 - 3f64.powi(d as i32) * 2.0 * k as f64 * s0.abs().exp() * ((-m0).exp() + (-m / spread).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoodnessEstimate {
    pub estimate: f64,
    pub std_err: f64,
    /// `1 - b_{i,j}`.
    pub threshold: f64,
    /// No later box can influence box `i`, so the estimate is exact.
    pub exact: bool,
}

impl GoodnessEstimate {
    pub fn passes(&self) -> bool {
        self.estimate >= self.threshold
    }
}

fn points_in_box<R: Rng>(grid: &GridSpec, b: usize, n: f64, rng: &mut R, out: &mut PointSet) {
    let lo = grid.lower_corner(b);
    let s = grid.side();
    let count = poisson_count(n * grid.volume(), rng);
    let mut p = vec![0.0; grid.dim()];
    for _ in 0..count {
        for (a, x) in p.iter_mut().enumerate() {
            // stay inside the half-open box even after rounding
            *x = (lo[a] + s * rng.gen::<f64>()).min(lo[a] + s * (1.0 - f64::EPSILON));
        }
        out.push_canonical(&p);
    }
}

/// Estimate of `a_{i,j}`.
///
/// `chosen[s]` is the fixed content of box `s < j`, `candidate` the content
/// of box `j`.  Boxes after `j` within reach of box `i` are redrawn
/// `samples` times from the original process's law.
#[allow(clippy::too_many_arguments)]
pub fn dense_goodness_estimate(
    chosen: &[PointSet],
    candidate: &PointSet,
    j: usize,
    i: usize,
    grid: &GridSpec,
    params: &RegimeParams,
    samples: usize,
    key: &StreamKey,
) -> Result<GoodnessEstimate> {
    if chosen.len() != j {
        return Err(invalid("chosen", format!("expected {j} fixed boxes, got {}", chosen.len())));
    }
    let (n, k, m) = (params.n()?, params.k()?, params.big_m()?);
    let r = bounded_radius(params, m)?;
    let reach = (r / grid.side()).floor() as usize + 1;
    let relevant = grid.neighbourhood(i, reach);
    let fixed_in_nb = grid.closed_neighbours(i).iter().filter(|&&s| s <= j).count();
    let threshold = 1.0 - goodness_slack(m, fixed_in_nb);

    let mut base = PointSet::new(grid.dim())?;
    for &s in &relevant {
        if s < j {
            base.extend_from(&chosen[s])?;
        } else if s == j {
            base.extend_from(candidate)?;
        }
    }
    let future: Vec<usize> = relevant.iter().copied().filter(|&s| s > j).collect();

    let bounded = |cfg: &PointSet| -> bool {
        let idx = SpatialIndex::new(cfg, r);
        (0..cfg.len()).all(|t| grid.box_of(cfg.point(t)) != i || has_k_within(&idx, t, k, r))
    };

    if future.is_empty() {
        let v = if bounded(&base) { 1.0 } else { 0.0 };
        return Ok(GoodnessEstimate { estimate: v, std_err: 0.0, threshold, exact: true });
    }
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample while later boxes are random"));
    }
    let mut rng = key.rng();
    let mut hits = 0usize;
    let mut cfg = base.clone();
    for _ in 0..samples {
        cfg.clone_from(&base);
        for &s in &future {
            points_in_box(grid, s, n, &mut rng, &mut cfg);
        }
        hits += bounded(&cfg) as usize;
    }
    let p = hits as f64 / samples as f64;
    Ok(GoodnessEstimate { estimate: p, std_err: (p * (1.0 - p) / samples as f64).sqrt(), threshold, exact: false })
}

/// Shell width `t_n = ((a_n + w_n) / (n kappa_d))^{1/d}`.
pub fn shell_width(params: &RegimeParams) -> Result<f64> {
    let (d, n, a_n, w_n) = (params.d()?, params.n()?, params.a_n()?, params.w_n()?);
    Ok(((a_n + w_n) / (n * params.kappa()?)).powf(1.0 / d as f64))
}

#[derive(Clone, Debug)]
pub struct DenseResample {
    pub points: PointSet,
    pub grid: GridSpec,
    pub states: Vec<BoxState>,
    /// Realized indicator of `E*`.
    pub e_star: bool,
    pub report: SprinkleReport,
}

fn check_box(
    chosen: &[PointSet],
    candidate: &PointSet,
    j: usize,
    grid: &GridSpec,
    params: &RegimeParams,
    samples: usize,
    key: &StreamKey,
) -> Result<(bool, f64, f64)> {
    let mut good = true;
    let mut worst = (f64::INFINITY, 1.0, 0.0);
    for i in grid.closed_neighbours(j) {
        let g = dense_goodness_estimate(chosen, candidate, j, i, grid, params, samples, &key.child(&format!("nb{i}")))?;
        good &= g.passes();
        let margin = g.estimate - g.threshold;
        if margin < worst.0 {
            worst = (margin, g.estimate, g.threshold);
        }
    }
    Ok((good, worst.1, worst.2))
}

/// Runs the sequential procedure on `p` with copy `p_prime`.
///
/// Needs `k`, `a_n`, `s0`, `M`, `M0` and `n` in `params`; `w_n` defaults
/// to `a_n / ln a_n`.
pub fn dense_sequential_resample(
    p: &PointSet,
    p_prime: &PointSet,
    params: &RegimeParams,
    samples: usize,
    key: &StreamKey,
) -> Result<DenseResample> {
    let (k, m, m0) = (params.k()?, params.big_m()?, params.m0()?);
    let grid = dense_grid(params)?;
    let nb = grid.num_boxes();
    let split = |phi: &PointSet| {
        let mut parts = vec![PointSet::new(grid.dim()).expect("valid dim"); nb];
        for x in phi.iter() {
            parts[grid.box_of(x)].push_canonical(x);
        }
        parts
    };
    let p_parts = split(p);
    let q_parts = split(p_prime);

    let t_n = shell_width(params)?;
    let r0 = bounded_radius(params, m0)?;
    let q_index = SpatialIndex::new(p_prime, r0);

    let mut chosen: Vec<PointSet> = Vec::with_capacity(nb);
    let mut states = Vec::with_capacity(nb);
    let mut e_star = true;
    for j in 0..nb {
        let bk = key.child(&format!("box{j}"));
        let (good, est, thr) = check_box(&chosen, &p_parts[j], j, &grid, params, samples, &bk.child("orig"))?;
        let mut state = BoxState {
            box_index: j,
            source: BoxSource::Original,
            bounded: false,
            good,
            estimate: est,
            threshold: thr,
            good_resampled: None,
            interior_bounded: None,
        };
        if good {
            chosen.push(p_parts[j].clone());
        } else {
            let (good_q, _, _) = check_box(&chosen, &q_parts[j], j, &grid, params, samples, &bk.child("copy"))?;
            let interior = (0..p_prime.len()).all(|t| {
                let x = p_prime.point(t);
                grid.box_of(x) != j || grid.distance_to_boundary(j, x) <= t_n || has_k_within(&q_index, t, k, r0)
            });
            e_star &= good_q && interior;
            state.source = BoxSource::Resampled;
            state.good_resampled = Some(good_q);
            state.interior_bounded = Some(interior);
            chosen.push(q_parts[j].clone());
        }
        states.push(state);
    }

    let mut points = PointSet::with_capacity(grid.dim(), p.len())?;
    for part in &chosen {
        points.extend_from(part)?;
    }
    let bounded = dense_bounded_all(&points, &grid, params, m)?;
    for (s, &b) in states.iter_mut().zip(&bounded) {
        s.bounded = b;
    }

    let idx = SpatialIndex::auto(&points);
    let mut scratch = Vec::new();
    let max_r = (0..points.len())
        .map(|t| idx.knn_radius_with(points.point(t), k, Exclude::Index(t), &mut scratch))
        .fold(0.0f64, f64::max);
    let report = SprinkleReport {
        bad_count: states.iter().filter(|s| !s.good).count(),
        inserted: states.iter().zip(&chosen).filter(|(s, _)| s.source == BoxSource::Resampled).map(|(_, c)| c.len()).sum(),
        target_event_holds: e_star,
        max_post_radius: Some(max_r),
        excess: dense_h(&points, params)? - dense_h(p, params)?,
        excess_bound: None,
        all_boxes_bounded: Some(bounded.iter().all(|&b| b)),
    };
    Ok(DenseResample { points, grid, states, e_star, report })
}

/// The two error terms of the resampled functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DenseErrorTerms {
    /// `rho^{-1} sum` of `M ∧ xi_n` over points in the boundary shells.
    pub boundary: f64,
    /// `rho^{-1} sum` of `M0 ∧ xi_n` over points in resampled boxes.
    pub resampled: f64,
}

pub fn dense_error_terms(
    p_double: &PointSet,
    states: &[BoxState],
    grid: &GridSpec,
    params: &RegimeParams,
) -> Result<DenseErrorTerms> {
    if states.len() != grid.num_boxes() {
        return Err(invalid("states", format!("{} states for {} boxes", states.len(), grid.num_boxes())));
    }
    let (m, m0) = (params.big_m()?, params.m0()?);
    let w = 1.0 / params.dense_speed()?;
    let t_n = shell_width(params)?;
    let xi = dense_scores(p_double, params)?;
    let (mut boundary, mut resampled) = (0.0, 0.0);
    for (t, x) in p_double.iter().enumerate() {
        let b = grid.box_of(x);
        if grid.distance_to_boundary(b, x) <= t_n {
            boundary += xi[t].min(m) * w;
        }
        if states[b].source == BoxSource::Resampled {
            resampled += xi[t].min(m0) * w;
        }
    }
    Ok(DenseErrorTerms { boundary, resampled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::sample_poisson;

    fn params() -> RegimeParams {
        let n = 2000.0;
        RegimeParams::dense(1, n, 1, (n / 10.0f64).ln(), 0.0).with_m(6.0).with_m0(4.0)
    }

    #[test]
    fn slack_with_one_fixed_box() {
        assert!((goodness_slack(8.0, 1) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn radius_matches_score_threshold() {
        let p = params();
        let r = bounded_radius(&p, 6.0).unwrap();
        let v = p.n().unwrap() * 2.0 * r - p.a_n().unwrap();
        assert!((v - 6.0).abs() < 1e-9);
    }

    #[test]
    fn last_box_estimate_is_exact() {
        let p = params();
        let grid = dense_grid(&p).unwrap();
        assert_eq!(grid.num_boxes(), 10);
        let phi = sample_poisson(2000.0, 1, &StreamKey::new(1, "d")).unwrap();
        let parts: Vec<PointSet> = (0..10).map(|b| phi.select(grid.members(&phi, b))).collect();
        let g = dense_goodness_estimate(&parts[..9], &parts[9], 9, 0, &grid, &p, 10, &StreamKey::new(1, "g")).unwrap();
        assert!(g.exact);
        let truth = dense_bounded_check(&phi, &grid, 0, &p, 6.0).unwrap();
        assert_eq!(g.estimate == 1.0, truth);
    }

    #[test]
    fn e_star_implies_bounded() {
        let p = params();
        for r in 0..5 {
            let key = StreamKey::new(2, "seq").with_replicate(r);
            let a = sample_poisson(2000.0, 1, &key.child("p")).unwrap();
            let b = sample_poisson(2000.0, 1, &key.child("q")).unwrap();
            let out = dense_sequential_resample(&a, &b, &p, 16, &key).unwrap();
            if out.e_star {
                assert_eq!(out.report.all_boxes_bounded, Some(true));
            }
            let e = dense_error_terms(&out.points, &out.states, &out.grid, &p).unwrap();
            assert!(e.boundary >= 0.0 && e.resampled >= 0.0);
        }
    }
}
