//! Dense-regime functional built from large k-th nearest-neighbour radii.
//!
//! With `rho = n a_n^{k-1} e^{-a_n}`, each point contributes
//! `(n kappa_d R_k^d - a_n - s0)_+ / rho`.

use serde::{Deserialize, Serialize};

use super::RegimeParams;
use crate::error::Result;
use crate::geometry::{Exclude, PointSet, SpatialIndex};

/// A finite measure given by weighted atoms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// `(location, mass)` pairs.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// `n kappa_d R_k(X)^d - a_n` for every `X` in `phi`, in order.
pub fn dense_locations(phi: &PointSet, params: &RegimeParams) -> Result<Vec<f64>> {
    let (d, n, k, a_n) = (params.d()?, params.n()?, params.k()?, params.a_n()?);
    if phi.dim() != d {
        return Err(crate::Error::DimensionMismatch { expected: d, got: phi.dim() });
    }
    let kappa = params.kappa()?;
    let idx = SpatialIndex::auto(phi);
    let mut buf = Vec::new();
    Ok((0..phi.len())
        .map(|i| {
            let r = idx.knn_radius_with(phi.point(i), k, Exclude::Index(i), &mut buf);
            n * kappa * r.powi(d as i32) - a_n
        })
        .collect())
}

/// Per-point dense scores `xi_n(X, phi) = (n kappa_d R_k^d - a_n - s0)_+`.
pub fn dense_scores(phi: &PointSet, params: &RegimeParams) -> Result<Vec<f64>> {
    let s0 = params.s0()?;
    Ok(dense_locations(phi, params)?.into_iter().map(|x| (x - s0).max(0.0)).collect())
}

/// `H^de`.  Summed atom by atom in the same order and arithmetic as
/// `T_dense` applied to [`dense_empirical_measure`], so the two agree exactly.
pub fn dense_h(phi: &PointSet, params: &RegimeParams) -> Result<f64> {
    let s0 = params.s0()?;
    let w = 1.0 / params.dense_speed()?;
    let mut total = 0.0;
    for x in dense_locations(phi, params)? {
        if x >= s0 {
            total += (x - s0) * w;
        }
    }
    Ok(total)
}

/// `L_{n,k} = rho^{-1} sum_X delta_{n kappa_d R_k^d - a_n}`, restricted to
/// `[s0, inf)`.
pub fn dense_empirical_measure(phi: &PointSet, params: &RegimeParams) -> Result<DiscreteMeasure> {
    let s0 = params.s0()?;
    let w = 1.0 / params.dense_speed()?;
    let atoms = dense_locations(phi, params)?.into_iter().filter(|&x| x >= s0).map(|x| (x, w)).collect();
    Ok(DiscreteMeasure { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let p = RegimeParams::dense(1, 10.0, 1, 1.0, 0.0);
        let phi = PointSet::from_flat(1, vec![0.0, 0.3]).unwrap();
        assert!((dense_h(&phi, &p).unwrap() - std::f64::consts::E).abs() < 1e-12);
        let l = dense_empirical_measure(&phi, &p).unwrap();
        assert_eq!(l.atoms.len(), 2);
        assert!((l.atoms[0].0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn lonely_point_is_infinite() {
        let p = RegimeParams::dense(2, 10.0, 1, 1.0, 0.0);
        assert!(dense_h(&PointSet::from_flat(2, vec![0.5, 0.5]).unwrap(), &p).unwrap().is_infinite());
    }
}
