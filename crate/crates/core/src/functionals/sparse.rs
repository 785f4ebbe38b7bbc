//! Sparse-regime functionals.
//!
//! `H^sp = rho^{-1} sum_C xi(r_n^{-1} C)` over the connected components `C`
//! of the `r_n`-geometric graph, with `rho = n^{k0} r_n^{d(k0-1)}`.

use super::score::{ComponentScore, LocalConfig};
use super::RegimeParams;
use crate::error::{invalid, Result};
use crate::geometry::{connected_components_open, dist, PointSet, SpatialIndex, UnionFind};

fn check_k0(params: &RegimeParams, score: &dyn ComponentScore) -> Result<usize> {
    let k0 = score.k0();
    if let Some(p) = params.k0 {
        if p != k0 {
            return Err(invalid("k0", format!("params say {p} but score `{}` has k0={k0}", score.name())));
        }
    }
    Ok(k0)
}

/// The points `idx` of `phi`, rescaled by `1/r` into the torus of side `1/r`.
pub fn rescaled(phi: &PointSet, idx: &[usize], r: f64) -> LocalConfig {
    let mut c = Vec::with_capacity(idx.len() * phi.dim());
    for &i in idx {
        c.extend(phi.point(i).iter().map(|x| x / r));
    }
    LocalConfig::on_torus(phi.dim(), 1.0 / r, c)
}

/// `H^sp`.  Components smaller than `k0` are skipped: their score is zero by
/// the definition of `k0`.
pub fn sparse_h(phi: &PointSet, params: &RegimeParams, score: &dyn ComponentScore) -> Result<f64> {
    let k0 = check_k0(params, score)?;
    let r = params.r_n()?;
    let rho = params.sparse_speed(k0)?;
    let n = phi.len();

    let mut uf = UnionFind::new(n);
    let idx = SpatialIndex::new(phi, r);
    for i in 0..n {
        idx.for_each_in_ball(phi.point(i), r, |j, _| {
            if j > i {
                uf.union(i, j);
            }
        });
    }
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        if uf.size_of(root) < k0 {
            continue;
        }
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[root]].push(i);
    }
    let total: f64 = comps.iter().map(|c| score.evaluate(&rescaled(phi, c, r))).sum();
    Ok(total / rho)
}


/// `H~`: the sum over `k0`-subsets `psi` that are isolated (every other
/// point at distance `>= r_n`) and have diameter `<= k0 r_n`.
///
/// An isolated `psi` is exactly a union of components of the graph with
/// edges at distance `< r_n`, so only such unions are enumerated.
pub fn sparse_h_tilde(phi: &PointSet, params: &RegimeParams, score: &dyn ComponentScore) -> Result<f64> {
    let k0 = check_k0(params, score)?;
    let r = params.r_n()?;
    let rho = params.sparse_speed(k0)?;
    let reach = k0 as f64 * r;

    let comps: Vec<Vec<usize>> = connected_components_open(phi, r).into_iter().filter(|c| c.len() <= k0).collect();
    let mut comp_of = vec![usize::MAX; phi.len()];
    for (ci, c) in comps.iter().enumerate() {
        for &i in c {
            comp_of[i] = ci;
        }
    }
    let idx = SpatialIndex::new(phi, reach);
    let mut total = 0.0;
    for (ci, c) in comps.iter().enumerate() {
        if c.len() == k0 {
            if diam_ok(phi, c, reach) {
                total += score.evaluate(&rescaled(phi, c, r));
            }
            continue;
        }
        let mut partners: Vec<usize> = Vec::new();
        idx.for_each_in_ball(phi.point(c[0]), reach, |j, _| {
            let cj = comp_of[j];
            if cj != usize::MAX && cj > ci {
                partners.push(cj);
            }
        });
        partners.sort_unstable();
        partners.dedup();
        let mut chosen = c.clone();
        combine(phi, &comps, &partners, 0, k0, reach, r, score, &mut chosen, &mut total);
    }
    Ok(total / rho)
}

#[allow(clippy::too_many_arguments)]
fn combine(
    phi: &PointSet,
    comps: &[Vec<usize>],
    partners: &[usize],
    from: usize,
    k0: usize,
    reach: f64,
    r: f64,
    score: &dyn ComponentScore,
    chosen: &mut Vec<usize>,
    total: &mut f64,
) {
    if chosen.len() == k0 {
        *total += score.evaluate(&rescaled(phi, chosen, r));
        return;
    }
    for t in from..partners.len() {
        let c = &comps[partners[t]];
        if chosen.len() + c.len() > k0 {
            continue;
        }
        let fits = c.iter().all(|&i| chosen.iter().all(|&j| dist(phi.point(i), phi.point(j)) <= reach));
        if !fits || !diam_ok(phi, c, reach) {
            continue;
        }
        let keep = chosen.len();
        chosen.extend_from_slice(c);
        combine(phi, comps, partners, t + 1, k0, reach, r, score, chosen, total);
        chosen.truncate(keep);
    }
}

fn diam_ok(phi: &PointSet, c: &[usize], reach: f64) -> bool {
    c.iter().enumerate().all(|(a, &i)| c[a + 1..].iter().all(|&j| dist(phi.point(i), phi.point(j)) <= reach))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{clique_count_score, edge_length_score};

    #[test]
    fn close_pair_scores_one() {
        let p = RegimeParams::sparse(1, 10.0, 0.01, 2);
        let phi = PointSet::from_flat(1, vec![0.3, 0.305]).unwrap();
        assert!((sparse_h(&phi, &p, &clique_count_score(2)).unwrap() - 1.0).abs() < 1e-12);
        assert!((sparse_h(&phi, &p, &edge_length_score()).unwrap() - 0.5).abs() < 1e-9);
        assert!((sparse_h_tilde(&phi, &p, &clique_count_score(2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_across_seam() {
        let p = RegimeParams::sparse(1, 10.0, 0.01, 2);
        let phi = PointSet::from_flat(1, vec![0.998, 0.002]).unwrap();
        assert!((sparse_h(&phi, &p, &clique_count_score(2)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_singleton_give_zero() {
        let p = RegimeParams::sparse(2, 50.0, 0.01, 2);
        let s = clique_count_score(2);
        assert_eq!(sparse_h(&PointSet::new(2).unwrap(), &p, &s).unwrap(), 0.0);
        assert_eq!(sparse_h(&PointSet::from_flat(2, vec![0.5, 0.5]).unwrap(), &p, &s).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_k0_is_error() {
        let p = RegimeParams::sparse(1, 10.0, 0.01, 3);
        let phi = PointSet::from_flat(1, vec![0.3]).unwrap();
        assert!(sparse_h(&phi, &p, &clique_count_score(2)).is_err());
    }

    #[test]
    fn tilde_counts_disconnected_close_subsets() {
        // two singletons 1.5 r apart: isolated and of diameter <= 2r
        let score = crate::functionals::ScoreSpec::new("diam", 2, |c: &LocalConfig| if c.len() == 2 { 1.0 } else { 0.0 }, |_| 1.0);
        let p = RegimeParams::sparse(1, 10.0, 0.01, 2);
        let phi = PointSet::from_flat(1, vec![0.3, 0.315]).unwrap();
        assert_eq!(sparse_h(&phi, &p, &score).unwrap(), 0.0);
        assert_eq!(sparse_h_tilde(&phi, &p, &score).unwrap(), 1.0);
    }
}
