//! Repairing large k-NN radii by inserting points.
//!
//! Nodes whose k-th neighbour lies beyond `M n^{-1/d}` form `J`.  Keeping
//! only the nodes that are lexicographically first among their
//! `n^{-1/d}`-neighbourhood gives a subset whose `n^{-1/d}/2`-balls are
//! disjoint; `k` uniform points are dropped into each of those balls.

use super::SprinkleReport;
use crate::error::{invalid, Result};
use crate::functionals::{critical_cutoff_h, CriticalKind, RegimeParams, ScaleFn};
use crate::geometry::{axis_offset, unit_ball_volume, Exclude, PointSet, SpatialIndex};
use crate::process::{uniform_in_ball, StreamKey};

/// Indices of the nodes with `R_k > M n^{-1/d}`.
pub fn find_large_radius_nodes(phi: &PointSet, params: &RegimeParams) -> Result<Vec<usize>> {
    let (k, m) = (params.k()?, params.big_m()?);
    let limit = m * params.spacing()?;
    let idx = SpatialIndex::auto(phi);
    let mut buf = Vec::new();
    Ok((0..phi.len()).filter(|&i| idx.knn_radius_with(phi.point(i), k, Exclude::Index(i), &mut buf) > limit).collect())
}

/// `k 2^d n / (kappa_d M^d)`, the deterministic bound on `#J`.
pub fn large_radius_count_bound(params: &RegimeParams) -> Result<f64> {
    let (d, n, k, m) = (params.d()?, params.n()?, params.k()?, params.big_m()?);
    Ok(k as f64 * 2f64.powi(d as i32) * n / (unit_ball_volume(d) * m.powi(d as i32)))
}

/// Whether `X` precedes every other point of `phi` within `radius`, comparing
/// minimal-image offsets lexicographically (ties broken by index).
fn is_lex_first(phi: &PointSet, idx: &SpatialIndex, i: usize, radius: f64) -> bool {
    let x = phi.point(i);
    let mut first = true;
    idx.for_each_in_ball(x, radius, |j, _| {
        if j == i || !first {
            return;
        }
        let y = phi.point(j);
        for (a, b) in x.iter().zip(y) {
            let t = axis_offset(*a, *b);
            if t > 0.0 {
                return;
            }
            if t < 0.0 {
                first = false;
                return;
            }
        }
        if j < i {
            first = false;
        }
    });
    first
}

/// The members of `j` that are lexicographically minimal in their
/// `n^{-1/d}`-neighbourhood within `phi`.
pub fn distinguished_subset(j: &[usize], phi: &PointSet, params: &RegimeParams) -> Result<Vec<usize>> {
    let radius = params.spacing()?;
    let idx = SpatialIndex::new(phi, radius);
    Ok(j.iter().copied().filter(|&i| is_lex_first(phi, &idx, i, radius)).collect())
}

/// Result of k-NN sprinkling.
#[derive(Clone, Debug)]
pub struct KnnSprinkle {
    /// `phi` followed by the inserted points.
    pub points: PointSet,
    pub large: Vec<usize>,
    pub distinguished: Vec<usize>,
    pub report: SprinkleReport,
}

/// Inserts `k` uniform points in `B_{n^{-1/d}/2}(X)` for each distinguished
/// `X`.  The excess is measured on the cut-off functional with `g = e^M` and
/// `M'` taken from `params` (default `2M`).
pub fn knn_sprinkle(phi: &PointSet, params: &RegimeParams, key: &StreamKey) -> Result<KnnSprinkle> {
    let (d, n, k, m) = (params.d()?, params.n()?, params.k()?, params.big_m()?);
    if m <= k as f64 {
        return Err(invalid("M", format!("k-NN sprinkling needs M > k, got M={m}, k={k}")));
    }
    let spacing = params.spacing()?;
    let large = find_large_radius_nodes(phi, params)?;
    let distinguished = distinguished_subset(&large, phi, params)?;

    let mut rng = key.rng();
    let mut points = phi.clone();
    let mut buf = vec![0.0; d];
    for &i in &distinguished {
        for _ in 0..k {
            uniform_in_ball(phi.point(i), 0.5 * spacing, &mut rng, &mut buf);
            points.push_canonical(&buf);
        }
    }
    let inserted = points.len() - phi.len();

    let idx = SpatialIndex::auto(&points);
    let mut scratch = Vec::new();
    let mut max_r = 0.0f64;
    for i in large.iter().copied().chain(phi.len()..points.len()) {
        max_r = max_r.max(idx.knn_radius_with(points.point(i), k, Exclude::Index(i), &mut scratch));
    }

    let cut = RegimeParams { m_prime: Some(params.m_prime.unwrap_or(2.0 * m)), ..params.clone() };
    let before = critical_cutoff_h(phi, &cut, CriticalKind::Knn, ScaleFn::Exponential)?;
    let after = critical_cutoff_h(&points, &cut, CriticalKind::Knn, ScaleFn::Exponential)?;

    let report = SprinkleReport {
        bad_count: large.len(),
        inserted,
        target_event_holds: max_r <= (k + 1) as f64 * spacing,
        max_post_radius: Some(max_r),
        excess: after - before,
        excess_bound: Some((k * k) as f64 * large.len() as f64 / n),
        all_boxes_bounded: None,
    };
    Ok(KnnSprinkle { points, large, distinguished, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_node_is_repaired() {
        // n = 100 in d = 1: spacing 0.01; M = 3 -> J threshold 0.03
        let params = RegimeParams::critical(1, 100.0, 2, 1.0).with_m(3.0);
        let mut flat: Vec<f64> = (0..40).map(|i| 0.5 + 0.005 * i as f64).collect();
        flat.push(0.1);
        let phi = PointSet::from_flat(1, flat).unwrap();
        let s = knn_sprinkle(&phi, &params, &StreamKey::new(1, "k")).unwrap();
        assert_eq!(s.large, vec![40]);
        assert_eq!(s.distinguished, vec![40]);
        assert_eq!(s.report.inserted, 2);
        assert!(s.report.target_event_holds, "{:?}", s.report);
        assert!(s.report.excess <= s.report.excess_bound.unwrap() + 1e-12);
    }

    #[test]
    fn distinguished_nodes_are_separated() {
        let params = RegimeParams::critical(2, 400.0, 1, 1.0).with_m(2.0);
        let phi = crate::process::sample_poisson(400.0, 2, &StreamKey::new(4, "p")).unwrap();
        let all: Vec<usize> = (0..phi.len()).collect();
        let dist = distinguished_subset(&all, &phi, &params).unwrap();
        let h = params.spacing().unwrap();
        for (a, &i) in dist.iter().enumerate() {
            for &j in &dist[a + 1..] {
                assert!(crate::geometry::dist(phi.point(i), phi.point(j)) > h);
            }
        }
        assert!(!dist.is_empty());
    }

    #[test]
    fn rejects_small_m() {
        let params = RegimeParams::critical(1, 100.0, 2, 1.0).with_m(2.0);
        let phi = PointSet::from_flat(1, vec![0.1]).unwrap();
        assert!(knn_sprinkle(&phi, &params, &StreamKey::new(1, "k")).is_err());
    }
}
