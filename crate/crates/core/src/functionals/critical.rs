//! Critical-regime functionals, scores evaluated after rescaling by `n^{1/d}`.
//!
//! The k-nearest-neighbour edge functional averages over the points of the
//! process; the contact-distance functional integrates over the torus and
//! is approximated by the midpoint rule.

use serde::{Deserialize, Serialize};

use super::RegimeParams;
use crate::error::{invalid, Result};
use crate::geometry::{Exclude, PointSet, SpatialIndex};

/// Cap function `g` in the cut-off functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleFn {
    /// `g(M) = e^M`, paired with the k-NN score.
    Exponential,
    /// `g(M) = M^alpha`, paired with the contact score.
    Power { alpha: f64 },
    /// `g(M) = c` for every `M`.
    Constant(f64),
}

impl ScaleFn {
    pub fn eval(&self, m: f64) -> f64 {
        match *self {
            ScaleFn::Exponential => m.exp(),
            ScaleFn::Power { alpha } => m.powf(alpha),
            ScaleFn::Constant(c) => c,
        }
    }
}

/// Which critical functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Knn,
    Contact { resolution: usize },
}

/// Per-point k-NN scores `xi_n(X, phi)` with the cap applied when given.
fn knn_scores(phi: &PointSet, params: &RegimeParams, cut: Option<(f64, f64)>) -> Result<Vec<f64>> {
    let (d, n, k, alpha) = (params.d()?, params.n()?, params.k()?, params.alpha()?);
    check_dim(phi, d)?;
    let scale = n.powf(1.0 / d as f64);
    let idx = SpatialIndex::auto(phi);
    let mut buf = Vec::new();
    let mut out = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let x = phi.point(i);
        let r = idx.knn_radius_with(x, k, Exclude::Index(i), &mut buf);
        if let Some((m_prime, cap)) = cut {
            // fewer than k neighbours inside B_{M'}: score is +inf before the cap
            if !(r * scale <= m_prime) {
                out.push(cap);
                continue;
            }
        }
        if !r.is_finite() {
            out.push(f64::INFINITY);
            continue;
        }
        let mut s = 0.0;
        idx.for_each_in_ball(x, r, |j, q| {
            if j != i {
                s += (scale * q.sqrt()).powf(alpha);
            }
        });
        out.push(match cut {
            Some((_, cap)) => s.min(cap),
            None => s,
        });
    }
    Ok(out)
}

/// `n^{-1} sum_X xi_n(X, phi)` with `xi` the sum of the `alpha`-powered
/// rescaled distances to the points within the k-th neighbour radius.
///
/// Any point with fewer than `k` others scores `+inf`; the empty
/// configuration has the empty sum `0`.
pub fn critical_knn_h(phi: &PointSet, params: &RegimeParams) -> Result<f64> {
    let n = params.n()?;
    Ok(knn_scores(phi, params, None)?.iter().sum::<f64>() / n)
}

fn check_dim(phi: &PointSet, d: usize) -> Result<()> {
    if phi.dim() != d {
        return Err(crate::Error::DimensionMismatch { expected: d, got: phi.dim() });
    }
    Ok(())
}

fn check_resolution(resolution: usize, d: usize) -> Result<()> {
    if resolution == 0 || (resolution as f64).powi(d as i32) > 1e8 {
        return Err(invalid("resolution", format!("need 1 <= resolution^d <= 1e8, got {resolution}^{d}")));
    }
    Ok(())
}

/// Midpoint rule over `resolution^d` cells of the integrand `f(x)`.
fn midpoint(d: usize, resolution: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let h = 1.0 / resolution as f64;
    let total = resolution.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    for cell in 0..total {
        let mut c = cell;
        for xa in x.iter_mut() {
            *xa = ((c % resolution) as f64 + 0.5) * h;
            c /= resolution;
        }
        sum += f(&x);
    }
    sum / total as f64
}

fn contact_integral(phi: &PointSet, params: &RegimeParams, resolution: usize, cut: Option<(f64, f64)>) -> Result<f64> {
    let (d, n, alpha) = (params.d()?, params.n()?, params.alpha()?);
    check_dim(phi, d)?;
    check_resolution(resolution, d)?;
    if phi.is_empty() {
        return Ok(match cut {
            Some((_, cap)) => cap,
            None => f64::INFINITY,
        });
    }
    let scale = n.powf(1.0 / d as f64);
    let idx = SpatialIndex::auto(phi);
    let mut buf = Vec::new();
    Ok(midpoint(d, resolution, |x| {
        let r = scale * idx.knn_radius_with(x, 1, Exclude::None, &mut buf);
        match cut {
            Some((m_prime, cap)) if r > m_prime => cap,
            Some((_, cap)) => r.powf(alpha).min(cap),
            None => r.powf(alpha),
        }
    }))
}

/// `int_{[0,1]^d} (n^{1/d} dist(x, phi))^alpha dx`, by the midpoint rule on
/// `resolution^d` cells; `+inf` for empty `phi`.
pub fn contact_h(phi: &PointSet, params: &RegimeParams, resolution: usize) -> Result<f64> {
    contact_integral(phi, params, resolution, None)
}

/// A quadrature value with the change seen on doubling the resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub refined: f64,
    pub refinement_delta: f64,
}

pub fn contact_h_refined(phi: &PointSet, params: &RegimeParams, resolution: usize) -> Result<Quadrature> {
    let value = contact_h(phi, params, resolution)?;
    let refined = contact_h(phi, params, 2 * resolution)?;
    Ok(Quadrature { value, refined, refinement_delta: (refined - value).abs() })
}

/// The cut-off functional: scores see only neighbours within rescaled
/// distance `M'` and are capped at `g(M)`.
pub fn critical_cutoff_h(phi: &PointSet, params: &RegimeParams, kind: CriticalKind, g: ScaleFn) -> Result<f64> {
    let (m, m_prime) = (params.big_m()?, params.m_prime()?);
    if m_prime <= m {
        return Err(invalid("M_prime", format!("need M' > M, got M'={m_prime}, M={m}")));
    }
    let cut = Some((m_prime, g.eval(m)));
    match kind {
        CriticalKind::Knn => Ok(knn_scores(phi, params, cut)?.iter().sum::<f64>() / params.n()?),
        CriticalKind::Contact { resolution } => contact_integral(phi, params, resolution, cut),
    }
}

/// Per-point k-NN scores, exposed for the sprinkling diagnostics.
pub fn critical_knn_scores(phi: &PointSet, params: &RegimeParams) -> Result<Vec<f64>> {
    knn_scores(phi, params, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_two_points() {
        let p = RegimeParams::critical(1, 1.0, 1, 1.0);
        let phi = PointSet::from_flat(1, vec![0.0, 0.4]).unwrap();
        assert!((critical_knn_h(&phi, &p).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn knn_too_few_points() {
        let p = RegimeParams::critical(2, 10.0, 2, 1.0);
        let two = PointSet::from_flat(2, vec![0.1, 0.1, 0.2, 0.2]).unwrap();
        assert!(critical_knn_h(&two, &p).unwrap().is_infinite());
        assert_eq!(critical_knn_h(&PointSet::new(2).unwrap(), &p).unwrap(), 0.0);
    }

    #[test]
    fn knn_ties_all_count() {
        let p = RegimeParams::critical(1, 1.0, 1, 1.0);
        let phi = PointSet::from_flat(1, vec![0.5, 0.25, 0.75]).unwrap();
        // the middle point has two neighbours at exactly R_1 = 0.25
        let s = critical_knn_scores(&phi, &p).unwrap();
        assert!((s[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn contact_single_point() {
        let p = RegimeParams::critical(1, 1.0, 1, 2.0);
        let phi = PointSet::from_flat(1, vec![0.5]).unwrap();
        let q = contact_h_refined(&phi, &p, 1000).unwrap();
        assert!((q.value - 1.0 / 12.0).abs() < 1e-4);
        assert!(contact_h(&PointSet::new(1).unwrap(), &p, 10).unwrap().is_infinite());
    }

    #[test]
    fn cutoff_rules() {
        let p = RegimeParams::critical(1, 100.0, 1, 1.0).with_m(2.0).with_m_prime(3.0);
        let phi = PointSet::from_flat(1, vec![0.1, 0.105, 0.6]).unwrap();
        assert_eq!(critical_cutoff_h(&phi, &p, CriticalKind::Knn, ScaleFn::Constant(0.0)).unwrap(), 0.0);
        let bad = p.clone().with_m_prime(2.0);
        assert!(critical_cutoff_h(&phi, &bad, CriticalKind::Knn, ScaleFn::Exponential).is_err());
        let huge = p.clone().with_m(1e6).with_m_prime(1e7);
        let full = critical_knn_h(&phi, &p).unwrap();
        let cut = critical_cutoff_h(&phi, &huge, CriticalKind::Knn, ScaleFn::Power { alpha: 1.0 }).unwrap();
        assert!((full - cut).abs() < 1e-12);
    }
}
