//! Homogeneous Poisson processes on the torus and the couplings built from
//! them: independent thinning, the thinning-plus-sprinkle coupling of the
//! critical regime, and box-wise resampling from an independent copy.

mod grid;
mod poisson;
mod stream;

pub use grid::GridSpec;
pub use poisson::poisson_count;
pub use stream::StreamKey;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{wrap, PointSet};

/// Uniform point of the torus.
pub fn uniform_point<R: Rng + ?Sized>(d: usize, rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(out.len(), d);
    for c in out.iter_mut() {
        *c = rng.gen();
    }
}

/// `count` independent uniform points.
pub fn sample_binomial<R: Rng + ?Sized>(count: usize, d: usize, rng: &mut R) -> Result<PointSet> {
    let mut s = PointSet::with_capacity(d, count)?;
    let mut p = vec![0.0; d];
    for _ in 0..count {
        uniform_point(d, rng, &mut p);
        s.push_canonical(&p);
    }
    Ok(s)
}

/// Poisson process of intensity `n` on `[0,1)^d`.
pub fn sample_poisson(n: f64, d: usize, key: &StreamKey) -> Result<PointSet> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(invalid("n", format!("intensity must be finite and non-negative, got {n}")));
    }
    let mut rng = key.rng();
    let count = poisson_count(n, &mut rng) as usize;
    sample_binomial(count, d, &mut rng)
}

/// Uniform point in the closed Euclidean ball `B_radius(center)`, wrapped.
pub fn uniform_in_ball<R: Rng + ?Sized>(center: &[f64], radius: f64, rng: &mut R, out: &mut [f64]) {
    let d = center.len();
    loop {
        let mut s = 0.0;
        for c in out.iter_mut().take(d) {
            let u = 2.0 * rng.gen::<f64>() - 1.0;
            *c = u;
            s += u * u;
        }
        if s <= 1.0 {
            break;
        }
    }
    for (o, &c) in out.iter_mut().zip(center) {
        *o = wrap(c + radius * *o);
    }
}

/// Independent retention with probability `p`; returns the retained mask.
pub fn thin_mask(phi: &PointSet, p: f64, key: &StreamKey) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("retention probability must lie in [0,1], got {p}")));
    }
    let mut rng = key.rng();
    Ok((0..phi.len()).map(|_| rng.gen::<f64>() < p).collect())
}

pub fn thin(phi: &PointSet, p: f64, key: &StreamKey) -> Result<PointSet> {
    let mask = thin_mask(phi, p, key)?;
    Ok(phi.select((0..phi.len()).filter(|&i| mask[i])))
}

/// `P^M = P^{-,M} ∪ P^{+,M}`: the base process thinned with survival
/// `1 - 1/M`, plus an independent sprinkle of intensity `n/M`.
#[derive(Clone, Debug)]
pub struct CriticalCoupling {
    pub base: PointSet,
    pub retained: Vec<bool>,
    pub thinned: PointSet,
    pub sprinkle: PointSet,
    pub union: PointSet,
}

impl CriticalCoupling {
    pub fn all_retained(&self) -> bool {
        self.retained.iter().all(|&r| r)
    }
}

pub fn sample_critical_coupling(n: f64, d: usize, m: f64, key: &StreamKey) -> Result<CriticalCoupling> {
    let base = sample_poisson(n, d, &key.child("base"))?;
    couple_given_base(base, n, m, key)
}

/// The coupling with the base configuration held fixed; only the thinning
/// marks and the sprinkle are drawn.
pub fn couple_given_base(base: PointSet, n: f64, m: f64, key: &StreamKey) -> Result<CriticalCoupling> {
    if !(m > 1.0) {
        return Err(invalid("M", format!("coupling needs M > 1, got {m}")));
    }
    let retained = thin_mask(&base, 1.0 - 1.0 / m, &key.child("thin"))?;
    let thinned = base.select((0..base.len()).filter(|&i| retained[i]));
    let sprinkle = sample_poisson(n / m, base.dim(), &key.child("sprinkle"))?;
    let union = thinned.union(&sprinkle)?;
    Ok(CriticalCoupling { base, retained, thinned, sprinkle, union })
}

/// `P` outside the boxes flagged in `replaced`, `P'` inside them.
///
/// Output order: surviving points of `P` in their original order, then the
/// points of `P'` in their original order.
pub fn resample_boxes(p: &PointSet, p_prime: &PointSet, replaced: &[bool], grid: &GridSpec) -> Result<PointSet> {
    if p.dim() != grid.dim() || p_prime.dim() != grid.dim() {
        let got = if p.dim() != grid.dim() { p.dim() } else { p_prime.dim() };
        return Err(Error::DimensionMismatch { expected: grid.dim(), got });
    }
    if replaced.len() != grid.num_boxes() {
        return Err(invalid("boxes", format!("{} flags for a grid of {} boxes", replaced.len(), grid.num_boxes())));
    }
    let mut out = PointSet::with_capacity(p.dim(), p.len())?;
    for x in p.iter() {
        if !replaced[grid.box_of(x)] {
            out.push_canonical(x);
        }
    }
    for x in p_prime.iter() {
        if replaced[grid.box_of(x)] {
            out.push_canonical(x);
        }
    }
    Ok(out)
}

/// Resampling with independent `Bernoulli(eps)` box decisions.  Returns the
/// merged process and the decisions.
pub fn bernoulli_resample(
    p: &PointSet,
    p_prime: &PointSet,
    grid: &GridSpec,
    eps: f64,
    key: &StreamKey,
) -> Result<(PointSet, Vec<bool>)> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid("epsilon", format!("must lie in [0,1], got {eps}")));
    }
    let mut rng = key.rng();
    let flags: Vec<bool> = (0..grid.num_boxes()).map(|_| rng.gen::<f64>() < eps).collect();
    Ok((resample_boxes(p, p_prime, &flags, grid)?, flags))
}
