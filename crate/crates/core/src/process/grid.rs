use crate::error::{invalid, Result};
use crate::geometry::MAX_DIM;

/// Partition of the torus into `per_axis^d` congruent cubes.
///
/// Boxes are numbered row-major: axis 0 varies slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, per_axis: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(invalid("d", format!("dimension must be in 1..={MAX_DIM}")));
        }
        if per_axis == 0 {
            return Err(invalid("boxes", "a grid needs at least one box per axis"));
        }
        if (per_axis as f64).powi(dim as i32) > 1e8 {
            return Err(invalid("boxes", format!("{per_axis}^{dim} boxes is too many")));
        }
        Ok(Self { dim, per_axis })
    }

    /// Grid whose box volume is as close as possible to `1/rho`, with at least
    /// `min_per_axis` boxes along each axis.
    pub fn for_speed(dim: usize, rho: f64, min_per_axis: usize) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(invalid("rho", format!("speed must be positive, got {rho}")));
        }
        let m = rho.powf(1.0 / dim as f64).round().max(min_per_axis as f64) as usize;
        Self::new(dim, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn num_boxes(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn side(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    fn axis_cell(&self, x: f64) -> usize {
        ((x * self.per_axis as f64) as usize).min(self.per_axis - 1)
    }

    pub fn box_of(&self, p: &[f64]) -> usize {
        p.iter().fold(0, |acc, &x| acc * self.per_axis + self.axis_cell(x))
    }

    pub fn box_coords(&self, b: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        let mut r = b;
        for a in (0..self.dim).rev() {
            c[a] = r % self.per_axis;
            r /= self.per_axis;
        }
        c
    }

    pub fn box_from_coords(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, &x| acc * self.per_axis + x)
    }

    pub fn lower_corner(&self, b: usize) -> Vec<f64> {
        self.box_coords(b).iter().map(|&c| c as f64 * self.side()).collect()
    }

    pub fn center(&self, b: usize) -> Vec<f64> {
        self.box_coords(b).iter().map(|&c| (c as f64 + 0.5) * self.side()).collect()
    }

    pub fn contains(&self, b: usize, p: &[f64]) -> bool {
        self.box_of(p) == b
    }

    /// Distance from `p` (inside box `b`) to the boundary of that box.
    pub fn distance_to_boundary(&self, b: usize, p: &[f64]) -> f64 {
        let s = self.side();
        self.lower_corner(b)
            .iter()
            .zip(p)
            .map(|(&lo, &x)| (x - lo).min(lo + s - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Boxes within Chebyshev box-distance `reach` of `b` on the torus,
    /// including `b`, ascending.
    pub fn neighbourhood(&self, b: usize, reach: usize) -> Vec<usize> {
        let m = self.per_axis;
        let c = self.box_coords(b);
        let axis: Vec<Vec<usize>> = c
            .iter()
            .map(|&ci| {
                if 2 * reach + 1 >= m {
                    (0..m).collect()
                } else {
                    (0..=2 * reach).map(|t| (ci + m + t - reach) % m).collect()
                }
            })
            .collect();
        let mut out = vec![0usize];
        for a in 0..self.dim {
            out = out.iter().flat_map(|&acc| axis[a].iter().map(move |&x| acc * m + x)).collect();
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `N_+(b)`: the box and its adjacent boxes, diagonals included.
    pub fn closed_neighbours(&self, b: usize) -> Vec<usize> {
        self.neighbourhood(b, 1)
    }

    /// Indices of the points of `phi` lying in box `b`.
    pub fn members(&self, phi: &crate::geometry::PointSet, b: usize) -> Vec<usize> {
        (0..phi.len()).filter(|&i| self.box_of(phi.point(i)) == b).collect()
    }

    /// Per-box point counts.
    pub fn counts(&self, phi: &crate::geometry::PointSet) -> Vec<u64> {
        let mut c = vec![0u64; self.num_boxes()];
        for p in phi.iter() {
            c[self.box_of(p)] += 1;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_numbering() {
        let g = GridSpec::new(2, 3).unwrap();
        assert_eq!(g.box_of(&[0.1, 0.5]), 1);
        assert_eq!(g.box_of(&[0.5, 0.1]), 3);
        assert_eq!(g.box_coords(5), vec![1, 2]);
        assert_eq!(g.box_from_coords(&[1, 2]), 5);
    }

    #[test]
    fn neighbourhoods_wrap_and_dedupe() {
        let g = GridSpec::new(2, 4).unwrap();
        let n = g.closed_neighbours(0);
        assert_eq!(n.len(), 9);
        assert!(n.contains(&15));
        assert_eq!(GridSpec::new(1, 2).unwrap().closed_neighbours(0), vec![0, 1]);
        assert_eq!(GridSpec::new(1, 10).unwrap().closed_neighbours(0), vec![0, 1, 9]);
    }

    #[test]
    fn speed_rounding() {
        assert_eq!(GridSpec::for_speed(1, 10.0, 2).unwrap().per_axis(), 10);
        assert_eq!(GridSpec::for_speed(2, 10.0, 2).unwrap().per_axis(), 3);
        assert_eq!(GridSpec::for_speed(2, 0.5, 2).unwrap().per_axis(), 2);
    }
}
