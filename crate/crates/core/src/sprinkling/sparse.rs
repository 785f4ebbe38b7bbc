//! Resampling crowded boxes in the sparse regime.
//!
//! Boxes have volume about `1/rho`.  A box is bad when one of its points
//! has at least `k0` further points of the process within `2^d k0 r_n`;
//! bad boxes take the content of an independent copy.

use super::SprinkleReport;
use crate::error::Result;
use crate::functionals::{sparse_h, ComponentScore, RegimeParams};
use crate::geometry::{unit_ball_volume, PointSet, SpatialIndex};
use crate::process::{resample_boxes, GridSpec};

/// Grid used by the sparse resampling.
pub fn sparse_grid(params: &RegimeParams) -> Result<GridSpec> {
    let k0 = params.k0()?;
    GridSpec::for_speed(params.d()?, params.sparse_speed(k0)?, 2)
}

/// Radius `2^d k0 r_n` of the crowding test.
pub fn crowding_radius(params: &RegimeParams) -> Result<f64> {
    Ok(2f64.powi(params.d()? as i32) * params.k0()? as f64 * params.r_n()?)
}

/// Per-box flags: some `X` in the box has `P(B_{2^d k0 r_n}(X)) >= k0 + 1`,
/// counting `X` itself.
pub fn sparse_bad_boxes(p: &PointSet, params: &RegimeParams, grid: &GridSpec) -> Result<Vec<bool>> {
    let (k0, r) = (params.k0()?, crowding_radius(params)?);
    let idx = SpatialIndex::new(p, r);
    let mut bad = vec![false; grid.num_boxes()];
    for x in p.iter() {
        let b = grid.box_of(x);
        if !bad[b] && idx.count_in_ball(x, r) > k0 {
            bad[b] = true;
        }
    }
    Ok(bad)
}

/// For each box: no `X` of `phi` in the box has `phi(B_{2^d k0 r_n}(X) ∩ Q)`
/// (counting `X`) reaching `k0`.
pub fn sparse_box_targets(phi: &PointSet, params: &RegimeParams, grid: &GridSpec) -> Result<Vec<bool>> {
    let (k0, r) = (params.k0()?, crowding_radius(params)?);
    let idx = SpatialIndex::new(phi, r);
    let mut ok = vec![true; grid.num_boxes()];
    for x in phi.iter() {
        let b = grid.box_of(x);
        if !ok[b] {
            continue;
        }
        let mut c = 0;
        idx.for_each_in_ball(x, r, |j, _| {
            if grid.box_of(phi.point(j)) == b {
                c += 1;
            }
        });
        if c >= k0 {
            ok[b] = false;
        }
    }
    Ok(ok)
}

/// `n^{k0+1} kappa_d^{k0} (2^d k0 r_n)^{k0 d} |Q|`, the mean number of
/// crowded points in a box; it bounds the probability that the box is bad.
/// With `|Q| = 1/rho` it equals `kappa_d^{k0} (2^d k0)^{k0 d} n r_n^d`.
pub fn sparse_bad_box_bound(params: &RegimeParams, box_volume: f64) -> Result<f64> {
    let (d, n, k0) = (params.d()?, params.n()?, params.k0()?);
    let r = crowding_radius(params)?;
    Ok(n.powi(k0 as i32 + 1) * unit_ball_volume(d).powi(k0 as i32) * r.powi((k0 * d) as i32) * box_volume)
}

/// `2 kappa_d^{k0-1} 2^{k0(d^2+1)} k0^{k0}`; above this `M` the resampled box
/// meets its target with conditional probability at least `2^{-M-1}`.
pub fn resample_success_threshold(d: usize, k0: usize) -> f64 {
    2.0 * unit_ball_volume(d).powi(k0 as i32 - 1)
        * 2f64.powi((k0 * (d * d + 1)) as i32)
        * (k0 as f64).powi(k0 as i32)
}

/// `2^{-M-1}`.
pub fn resample_success_floor(m: f64) -> f64 {
    (-(m + 1.0) * std::f64::consts::LN_2).exp()
}

#[derive(Clone, Debug)]
pub struct SparseResample {
    pub points: PointSet,
    pub grid: GridSpec,
    pub bad: Vec<bool>,
    /// Target event per box under the copy; meaningful where `bad` is set.
    pub target: Vec<bool>,
    pub report: SprinkleReport,
}

/// Replaces every bad box by the copy `p_prime`.  The excess is the change
/// of `H^sp` under `score`.
pub fn sparse_resample(
    p: &PointSet,
    p_prime: &PointSet,
    params: &RegimeParams,
    score: &dyn ComponentScore,
) -> Result<SparseResample> {
    let grid = sparse_grid(params)?;
    let bad = sparse_bad_boxes(p, params, &grid)?;
    let points = resample_boxes(p, p_prime, &bad, &grid)?;
    let target = sparse_box_targets(p_prime, params, &grid)?;
    let inserted = p_prime.iter().filter(|x| bad[grid.box_of(x)]).count();
    let holds = bad.iter().zip(&target).all(|(&b, &t)| !b || t);
    let excess = sparse_h(&points, params, score)? - sparse_h(p, params, score)?;
    let report = SprinkleReport {
        bad_count: bad.iter().filter(|&&b| b).count(),
        inserted,
        target_event_holds: holds,
        max_post_radius: None,
        excess,
        excess_bound: None,
        all_boxes_bounded: None,
    };
    Ok(SparseResample { points, grid, bad, target, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::clique_count_score;

    #[test]
    fn crowded_box_is_replaced() {
        let params = RegimeParams::sparse(1, 10.0, 0.001, 2);
        // rho = 0.1 rounds up to the two-box minimum
        let p = PointSet::from_flat(1, vec![0.1, 0.1005, 0.101, 0.7]).unwrap();
        let q = PointSet::from_flat(1, vec![0.2, 0.8]).unwrap();
        let s = sparse_resample(&p, &q, &params, &clique_count_score(2)).unwrap();
        assert_eq!(s.bad, vec![true, false]);
        assert_eq!(s.points, PointSet::from_flat(1, vec![0.7, 0.2]).unwrap());
        assert!(s.report.target_event_holds);
        assert_eq!(s.report.inserted, 1);
    }

    #[test]
    fn bound_simplifies_at_nominal_volume() {
        let params = RegimeParams::sparse(2, 100.0, 0.003, 2);
        let rho = params.sparse_speed(2).unwrap();
        let k = unit_ball_volume(2);
        let want = k * k * (4.0f64 * 2.0).powi(4) * 100.0 * 0.003f64.powi(2);
        assert!((sparse_bad_box_bound(&params, 1.0 / rho).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn success_floor() {
        assert_eq!(resample_success_floor(3.0), 1.0 / 16.0);
        assert!(resample_success_threshold(1, 2) > 200.0);
    }
}
