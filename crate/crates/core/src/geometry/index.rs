//! Uniform cell grid over the torus.
//!
//! Points are bucketed into `m^d` cells stored in CSR form.  The cell count
//! is capped by the number of points, so memory stays linear even when the
//! requested cell side is tiny; a coarser grid only costs extra distance
//! checks, never correctness.

use super::{dist2, unit_ball_volume, PointSet, MAX_DIM};

/// Which points a neighbour query skips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exclude {
    None,
    /// Skip the point stored at this index.
    Index(usize),
    /// Skip points whose coordinates equal the query exactly.
    Coincident,
}

#[derive(Clone, Debug)]
pub struct SpatialIndex<'a> {
    points: &'a PointSet,
    m: usize,
    offsets: Vec<u32>,
    order: Vec<u32>,
}

impl<'a> SpatialIndex<'a> {
    /// Index with cells of side at least `cell_side`.
    pub fn new(points: &'a PointSet, cell_side: f64) -> Self {
        let d = points.dim();
        let n = points.len();
        let cap = ((4 * n + 16) as f64).powf(1.0 / d as f64).floor().max(1.0);
        let want = if cell_side > 0.0 { (1.0 / cell_side).floor() } else { cap };
        let m = want.min(cap).max(1.0) as usize;
        let ncell = m.pow(d as u32);

        let mut cell_of = Vec::with_capacity(n);
        let mut offsets = vec![0u32; ncell + 1];
        for p in points.iter() {
            let c = cell_index(p, m);
            cell_of.push(c as u32);
            offsets[c + 1] += 1;
        }
        for c in 0..ncell {
            offsets[c + 1] += offsets[c];
        }
        let mut fill = offsets.clone();
        let mut order = vec![0u32; n];
        for (i, &c) in cell_of.iter().enumerate() {
            let slot = &mut fill[c as usize];
            order[*slot as usize] = i as u32;
            *slot += 1;
        }
        Self { points, m, offsets, order }
    }

    /// Index with roughly one point per cell.
    pub fn auto(points: &'a PointSet) -> Self {
        let n = points.len().max(1) as f64;
        Self::new(points, n.powf(-1.0 / points.dim() as f64))
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    pub fn cells_per_axis(&self) -> usize {
        self.m
    }

    /// Calls `f(index, squared_distance)` for every point within the closed
    /// ball of radius `r` around `center`.
    pub fn for_each_in_ball(&self, center: &[f64], r: f64, mut f: impl FnMut(usize, f64)) {
        if self.points.is_empty() || r < 0.0 {
            return;
        }
        let d = self.points.dim();
        let m = self.m;
        let r2 = r * r;
        let w = if r.is_finite() { (r * m as f64).floor() as usize + 1 } else { m };
        let mut start = [0usize; MAX_DIM];
        let mut span = [0usize; MAX_DIM];
        for a in 0..d {
            if 2 * w + 1 >= m {
                start[a] = 0;
                span[a] = m;
            } else {
                let c = axis_cell(center[a], m);
                start[a] = (c + m - w) % m;
                span[a] = 2 * w + 1;
            }
        }
        let mut t = [0usize; MAX_DIM];
        loop {
            let mut cell = 0usize;
            for a in (0..d).rev() {
                cell = cell * m + (start[a] + t[a]) % m;
            }
            let lo = self.offsets[cell] as usize;
            let hi = self.offsets[cell + 1] as usize;
            for &i in &self.order[lo..hi] {
                let i = i as usize;
                let q = dist2(center, self.points.point(i));
                if q <= r2 {
                    f(i, q);
                }
            }
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                t[a] += 1;
                if t[a] < span[a] {
                    break;
                }
                t[a] = 0;
                a += 1;
            }
        }
    }

    /// Ascending indices of the points in the closed ball.
    pub fn points_in_ball(&self, center: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(center, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    pub fn count_in_ball(&self, center: &[f64], r: f64) -> usize {
        let mut c = 0;
        self.for_each_in_ball(center, r, |_, _| c += 1);
        c
    }

    /// k-th smallest distance from `center` to the non-excluded points, or
    /// `+inf` when there are fewer than `k` of them.
    pub fn knn_radius(&self, center: &[f64], k: usize, exclude: Exclude) -> f64 {
        let mut buf = Vec::new();
        self.knn_radius_with(center, k, exclude, &mut buf)
    }

    /// As [`knn_radius`](Self::knn_radius), reusing `buf` as scratch.
    pub fn knn_radius_with(&self, center: &[f64], k: usize, exclude: Exclude, buf: &mut Vec<f64>) -> f64 {
        assert!(k >= 1, "k must be positive");
        let n = self.points.len();
        if n < k || (matches!(exclude, Exclude::Index(_)) && n - 1 < k) {
            return f64::INFINITY;
        }
        let d = self.points.dim();
        let half_diag = 0.5 * (d as f64).sqrt();
        let mut r = (1.5 * (k as f64 / (n as f64 * unit_ball_volume(d))).powf(1.0 / d as f64)).min(half_diag);
        loop {
            buf.clear();
            self.for_each_in_ball(center, r, |i, q| {
                let skip = match exclude {
                    Exclude::None => false,
                    Exclude::Index(j) => i == j,
                    Exclude::Coincident => q == 0.0 && self.points.point(i) == center,
                };
                if !skip {
                    buf.push(q);
                }
            });
            if buf.len() >= k {
                let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
                return kth.sqrt();
            }
            if r >= half_diag {
                return f64::INFINITY;
            }
            r = (2.0 * r).min(half_diag);
        }
    }

    /// Distance to the nearest indexed point, `+inf` if there are none.
    pub fn nearest_distance(&self, center: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.knn_radius_with(center, 1, Exclude::None, &mut buf)
    }
}

#[inline]
fn axis_cell(x: f64, m: usize) -> usize {
    ((x * m as f64) as usize).min(m - 1)
}

#[inline]
fn cell_index(p: &[f64], m: usize) -> usize {
    let mut c = 0;
    for &x in p.iter().rev() {
        c = c * m + axis_cell(x, m);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist;

    #[test]
    fn ball_query_crosses_seam() {
        let s = PointSet::from_flat(2, vec![0.01, 0.01, 0.99, 0.99, 0.5, 0.5]).unwrap();
        let idx = SpatialIndex::new(&s, 0.05);
        assert_eq!(idx.points_in_ball(&[0.0, 0.0], 0.02), vec![0, 1]);
    }

    #[test]
    fn closed_ball_includes_boundary() {
        let s = PointSet::from_flat(1, vec![0.25, 0.75]).unwrap();
        let idx = SpatialIndex::new(&s, 0.1);
        assert_eq!(idx.points_in_ball(&[0.5], 0.25), vec![0, 1]);
    }

    #[test]
    fn exclusion_modes() {
        let s = PointSet::from_flat(1, vec![0.1, 0.1, 0.3]).unwrap();
        let idx = SpatialIndex::auto(&s);
        assert_eq!(idx.knn_radius(&[0.1], 1, Exclude::None), 0.0);
        assert_eq!(idx.knn_radius(&[0.1], 1, Exclude::Index(0)), 0.0);
        let r = idx.knn_radius(&[0.1], 1, Exclude::Coincident);
        assert!((r - dist(&[0.1], &[0.3])).abs() < 1e-15);
    }

    #[test]
    fn cell_count_is_capped() {
        let s = PointSet::from_flat(1, vec![0.5]).unwrap();
        let idx = SpatialIndex::new(&s, 1e-9);
        assert!(idx.cells_per_axis() <= 20);
    }
}
