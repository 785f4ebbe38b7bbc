//! Points on the flat unit torus `[0,1)^d` and the metric queries the
//! functionals are built from.
//!
//! Coordinates are canonicalized into `[0,1)` on construction, so two
//! representatives of the same torus point compare equal.  Balls are closed.

mod components;
mod index;
mod io;

pub use components::{connected_components, connected_components_open, UnionFind};
pub use index::{Exclude, SpatialIndex};
pub use io::{read_points, write_points};

use crate::error::{invalid, Error, Result};

/// Largest supported ambient dimension.  The neighbour-cell walk keeps its
/// per-axis state on the stack.
pub const MAX_DIM: usize = 16;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = if d % 2 == 0 { 2 } else { 3 };
    while j <= d {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    v
}

/// Maps a real coordinate to its representative in `[0,1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Per-axis minimal-image offset from `a` to `b`, in `[-1/2, 1/2)`.
#[inline]
pub fn axis_offset(a: f64, b: f64) -> f64 {
    let mut t = b - a;
    if t >= 0.5 {
        t -= 1.0;
    } else if t < -0.5 {
        t += 1.0;
    }
    t
}

/// Squared torus distance between two canonical coordinate slices.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = (x - y).abs();
        let t = t.min(1.0 - t);
        s += t * t;
    }
    s
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Minimal-image displacement `b - a`.
pub fn displacement(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| axis_offset(x, y)).collect()
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(invalid("d", format!("dimension must be in 1..={MAX_DIM}, got {d}")));
    }
    Ok(())
}

fn canonical(coords: &mut [f64]) -> Result<()> {
    for c in coords.iter_mut() {
        if !c.is_finite() {
            return Err(invalid("coords", "non-finite coordinate"));
        }
        *c = wrap(*c);
    }
    Ok(())
}

/// A single point of the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        canonical(&mut coords)?;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Torus distance `min_z |x - y + z|`.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(dist(&x.coords, &y.coords))
}

/// A finite point configuration, stored flat.  Order is insertion order and
/// is preserved by every operation that returns a subset.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, coords: Vec::new() })
    }

    pub fn with_capacity(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, coords: Vec::with_capacity(n * dim) })
    }

    /// Builds from a flat coordinate buffer, canonicalizing every entry.
    pub fn from_flat(dim: usize, mut coords: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if coords.len() % dim != 0 {
            return Err(invalid("coords", format!("length {} not a multiple of d={dim}", coords.len())));
        }
        canonical(&mut coords)?;
        Ok(Self { dim, coords })
    }

    pub fn from_points(dim: usize, pts: &[TorusPoint]) -> Result<Self> {
        let mut s = Self::with_capacity(dim, pts.len())?;
        for p in pts {
            s.push_point(p)?;
        }
        Ok(s)
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

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn torus_point(&self, i: usize) -> TorusPoint {
        TorusPoint { coords: self.point(i).to_vec() }
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Appends a point, wrapping it onto the torus.
    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        let start = self.coords.len();
        self.coords.extend_from_slice(p);
        canonical(&mut self.coords[start..])
    }

    pub fn push_point(&mut self, p: &TorusPoint) -> Result<()> {
        self.push(p.coords())
    }

    /// Appends an already-canonical point without re-wrapping.
    pub(crate) fn push_canonical(&mut self, p: &[f64]) {
        debug_assert!(p.iter().all(|c| (0.0..1.0).contains(c)));
        self.coords.extend_from_slice(p);
    }

    pub fn extend_from(&mut self, other: &PointSet) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    /// The points at `idx`, in the order given.
    pub fn select(&self, idx: impl IntoIterator<Item = usize>) -> PointSet {
        let mut out = PointSet { dim: self.dim, coords: Vec::new() };
        for i in idx {
            out.coords.extend_from_slice(self.point(i));
        }
        out
    }

    /// Union keeping `self` first.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        let mut u = self.clone();
        u.extend_from(other)?;
        Ok(u)
    }
}

/// Which metric a diameter is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Torus,
    /// Euclidean distance between the canonical `[0,1)^d` representatives.
    EuclideanRepresentative,
}

pub fn euclidean_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest pairwise distance.  Needs at least two points.
pub fn diameter(phi: &PointSet, metric: Metric) -> Result<f64> {
    if phi.len() < 2 {
        return Err(Error::TooFewPoints { need: 2, got: phi.len() });
    }
    let f = match metric {
        Metric::Torus => dist,
        Metric::EuclideanRepresentative => euclidean_dist,
    };
    let mut best = 0.0f64;
    for i in 0..phi.len() {
        for j in i + 1..phi.len() {
            best = best.max(f(phi.point(i), phi.point(j)));
        }
    }
    Ok(best)
}

/// Points of `phi` in the closed ball `B_r(x)`, as ascending indices.
pub fn points_in_ball(phi: &PointSet, x: &TorusPoint, r: f64) -> Result<Vec<usize>> {
    check_query(phi, x)?;
    Ok(SpatialIndex::new(phi, r.max(1e-12)).points_in_ball(x.coords(), r))
}

/// Distance from `x` to its k-th nearest point of `phi \ {x}`; `+inf` when
/// fewer than `k` such points exist.
pub fn knn_radius(x: &TorusPoint, phi: &PointSet, k: usize) -> Result<f64> {
    check_query(phi, x)?;
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    Ok(SpatialIndex::auto(phi).knn_radius(x.coords(), k, Exclude::Coincident))
}

/// Distance from `x` to the nearest point of `phi`; `+inf` for empty `phi`.
pub fn contact_distance(x: &TorusPoint, phi: &PointSet) -> Result<f64> {
    check_query(phi, x)?;
    Ok(SpatialIndex::auto(phi).nearest_distance(x.coords()))
}

fn check_query(phi: &PointSet, x: &TorusPoint) -> Result<()> {
    if phi.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: x.dim() });
    }
    Ok(())
}
