//! Filling empty regions for the contact-distance functional.
//!
//! The torus is cut into boxes of side about `n^{-1/d} M / log M`, each
//! box into sub-cubes of side about `n^{-1/d} log M`.  Every sub-cube of an
//! empty box receives one uniform point in a ball at its centre.  Side
//! lengths are whatever the integer box counts give; the report records
//! them.

use serde::Serialize;

use super::SprinkleReport;
use crate::error::{invalid, Result};
use crate::functionals::{critical_cutoff_h, CriticalKind, RegimeParams, ScaleFn};
use crate::geometry::{PointSet, SpatialIndex};
use crate::process::{uniform_in_ball, GridSpec, StreamKey};

const MAX_PROBES: f64 = 4e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContactGrid {
    pub boxes_per_axis: usize,
    pub box_side: f64,
    pub sub_per_axis: usize,
    pub sub_side: f64,
    pub ball_radius: f64,
    /// Probe lattice used for the post-sprinkle contact radius.
    pub probe_resolution: usize,
}

#[derive(Clone, Debug)]
pub struct ContactSprinkle {
    pub points: PointSet,
    pub grid: ContactGrid,
    pub bad_boxes: Vec<usize>,
    pub report: SprinkleReport,
}

/// Integer grid approximating the nominal side lengths.
pub fn contact_grid(params: &RegimeParams) -> Result<ContactGrid> {
    let (d, m) = (params.d()?, params.big_m()?);
    let spacing = params.spacing()?;
    let lm = m.ln();
    if lm < 2.0 {
        return Err(invalid("M", format!("contact sprinkling needs log M >= 2, got M={m}")));
    }
    let boxes_per_axis = (1.0 / (spacing * m / lm)).round().max(2.0) as usize;
    let box_side = 1.0 / boxes_per_axis as f64;
    let sub_per_axis = (box_side / (spacing * lm)).round().max(1.0) as usize;
    let sub_side = box_side / sub_per_axis as f64;
    let ball_radius = spacing.min(0.5 * sub_side);
    let mut probe_resolution = 2 * boxes_per_axis * sub_per_axis;
    while (probe_resolution as f64).powi(d as i32) > MAX_PROBES && probe_resolution > 1 {
        probe_resolution /= 2;
    }
    Ok(ContactGrid { boxes_per_axis, box_side, sub_per_axis, sub_side, ball_radius, probe_resolution })
}

/// Sprinkles empty boxes.  The target event is that the contact distance,
/// probed at the centres of a lattice two per sub-cube per axis, stays
/// within `M n^{-1/d}`; the excess is measured on the cut-off contact
/// functional with `g(M) = M^alpha` and `M'` from `params` (default `2M`).
pub fn contact_sprinkle(phi: &PointSet, params: &RegimeParams, key: &StreamKey) -> Result<ContactSprinkle> {
    let (d, m) = (params.d()?, params.big_m()?);
    let alpha = params.alpha()?;
    let g = contact_grid(params)?;
    let boxes = GridSpec::new(d, g.boxes_per_axis)?;
    let counts = boxes.counts(phi);
    let bad_boxes: Vec<usize> = (0..boxes.num_boxes()).filter(|&b| counts[b] == 0).collect();

    let mut rng = key.rng();
    let mut points = phi.clone();
    let mut center = vec![0.0; d];
    let mut buf = vec![0.0; d];
    let subs = g.sub_per_axis.pow(d as u32);
    for &b in &bad_boxes {
        let lo = boxes.lower_corner(b);
        for s in 0..subs {
            let mut r = s;
            for a in 0..d {
                center[a] = lo[a] + ((r % g.sub_per_axis) as f64 + 0.5) * g.sub_side;
                r /= g.sub_per_axis;
            }
            uniform_in_ball(&center, g.ball_radius, &mut rng, &mut buf);
            points.push_canonical(&buf);
        }
    }

    let idx = SpatialIndex::auto(&points);
    let mut scratch = Vec::new();
    let res = g.probe_resolution;
    let h = 1.0 / res as f64;
    let mut max_r = 0.0f64;
    let mut x = vec![0.0; d];
    for cell in 0..res.pow(d as u32) {
        let mut c = cell;
        for xa in x.iter_mut() {
            *xa = ((c % res) as f64 + 0.5) * h;
            c /= res;
        }
        max_r = max_r.max(idx.knn_radius_with(&x, 1, crate::geometry::Exclude::None, &mut scratch));
    }

    let cut = RegimeParams { m_prime: Some(params.m_prime.unwrap_or(2.0 * m)), ..params.clone() };
    let kind = CriticalKind::Contact { resolution: res };
    let before = critical_cutoff_h(phi, &cut, kind, ScaleFn::Power { alpha })?;
    let after = critical_cutoff_h(&points, &cut, kind, ScaleFn::Power { alpha })?;

    let report = SprinkleReport {
        bad_count: bad_boxes.len(),
        inserted: points.len() - phi.len(),
        target_event_holds: max_r <= m * params.spacing()?,
        max_post_radius: Some(max_r),
        excess: after - before,
        excess_bound: None,
        all_boxes_bounded: None,
    };
    Ok(ContactSprinkle { points, grid: g, bad_boxes, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rounding_is_recorded() {
        let p = RegimeParams::critical(2, 500.0, 1, 1.0).with_m(20.0);
        let g = contact_grid(&p).unwrap();
        assert_eq!(g.boxes_per_axis, 3);
        assert!((g.box_side - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.sub_per_axis, 2);
        assert!(contact_grid(&p.clone().with_m(5.0)).is_err());
    }

    #[test]
    fn empty_configuration_is_filled() {
        let p = RegimeParams::critical(2, 500.0, 1, 1.0).with_m(20.0);
        let s = contact_sprinkle(&PointSet::new(2).unwrap(), &p, &StreamKey::new(1, "c")).unwrap();
        assert_eq!(s.report.bad_count, 9);
        assert_eq!(s.report.inserted, 36);
        assert!(s.report.target_event_holds, "{:?}", s.report);
        assert!(s.report.excess < 0.0);
    }
}
