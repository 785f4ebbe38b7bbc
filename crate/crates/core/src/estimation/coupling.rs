//! Goodness of fit of coupled processes to the Poisson law.
//!
//! Each replicate is binned into `cells_per_axis^d` cells.  Under the null
//! every cell count is an independent `Poisson(n / cells)` variable, so the
//! counts of all cells of all replicates are pooled into one histogram and
//! compared with the Poisson probabilities by a chi-square test.  Classes
//! are merged from the left until each expects at least 5 observations;
//! the right tail forms the last class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{invalid, Result};
use crate::geometry::PointSet;
use crate::process::{bernoulli_resample, sample_critical_coupling, sample_poisson, GridSpec, StreamKey};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingBuilder {
    /// Plain Poisson sampling.
    Identity,
    /// Union of the thinned process and the sprinkle.
    Critical { m: f64 },
    /// Box resampling on the sparse grid with `Bernoulli(epsilon)` decisions.
    SparseResample { epsilon: f64, boxes_per_axis: usize },
    /// Box resampling on the dense grid with `Bernoulli(epsilon)` decisions.
    DenseResample { epsilon: f64, boxes_per_axis: usize },
}

impl CouplingBuilder {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingBuilder::Identity => "identity",
            CouplingBuilder::Critical { .. } => "critical",
            CouplingBuilder::SparseResample { .. } => "sparse_resample",
            CouplingBuilder::DenseResample { .. } => "dense_resample",
        }
    }

    pub fn build(&self, n: f64, d: usize, key: &StreamKey) -> Result<PointSet> {
        match *self {
            CouplingBuilder::Identity => sample_poisson(n, d, key),
            CouplingBuilder::Critical { m } => Ok(sample_critical_coupling(n, d, m, key)?.union),
            CouplingBuilder::SparseResample { epsilon, boxes_per_axis }
            | CouplingBuilder::DenseResample { epsilon, boxes_per_axis } => {
                let grid = GridSpec::new(d, boxes_per_axis)?;
                let p = sample_poisson(n, d, &key.child("p"))?;
                let q = sample_poisson(n, d, &key.child("copy"))?;
                Ok(bernoulli_resample(&p, &q, &grid, epsilon, &key.child("coin"))?.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub builder: String,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: usize,
    pub replicates: usize,
    /// Average cell count, for comparison with `n / cells`.
    pub mean_count: f64,
}

/// Pooled chi-square of `counts` against `Poisson(lambda)`.
pub fn chi_square_cells(counts: &[u64], lambda: f64) -> Result<(f64, usize, f64)> {
    let total = counts.len() as f64;
    let pois = Poisson::new(lambda).map_err(|e| invalid("lambda", e.to_string()))?;
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut observed = vec![0u64; max + 1];
    for &c in counts {
        observed[c as usize] += 1;
    }
    // classes [lo, hi); the last one is open to the right
    let mut classes: Vec<(usize, f64, u64)> = Vec::new();
    let (mut e, mut o, mut lo) = (0.0, 0u64, 0usize);
    let mut cdf = 0.0;
    let mut k = 0usize;
    loop {
        let pk = pois.pmf(k as u64);
        e += total * pk;
        o += observed.get(k).copied().unwrap_or(0);
        cdf += pk;
        k += 1;
        let tail = total * (1.0 - cdf);
        if e >= 5.0 && tail >= 5.0 {
            classes.push((lo, e, o));
            lo = k;
            e = 0.0;
            o = 0;
        } else if tail < 5.0 {
            let rest: u64 = observed.iter().skip(k).sum();
            classes.push((lo, e + tail.max(0.0), o + rest));
            break;
        }
    }
    if classes.len() >= 2 && classes.last().map_or(false, |c| c.1 < 5.0) {
        let last = classes.pop().expect("non-empty");
        let prev = classes.last_mut().expect("non-empty");
        prev.1 += last.1;
        prev.2 += last.2;
    }
    if classes.len() < 2 {
        return Err(invalid("replicates", "too few observations for a chi-square test"));
    }
    let stat: f64 = classes.iter().map(|&(_, e, o)| (o as f64 - e).powi(2) / e).sum();
    let dof = classes.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid("dof", e.to_string()))?;
    Ok((stat, dof, chi.sf(stat)))
}

pub fn coupling_distribution_test(
    builder: &CouplingBuilder,
    n: f64,
    d: usize,
    cells_per_axis: usize,
    replicates: usize,
    key: &StreamKey,
) -> Result<ChiSquareReport> {
    let grid = GridSpec::new(d, cells_per_axis)?;
    let cells = grid.num_boxes();
    let lambda = n / cells as f64;
    if lambda < 5.0 {
        return Err(invalid("cells_per_axis", format!("expected count per cell is {lambda}, need at least 5")));
    }
    let per_rep: Vec<Vec<u64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| Ok(grid.counts(&builder.build(n, d, &key.with_replicate(r))?)))
        .collect::<Result<_>>()?;
    let counts: Vec<u64> = per_rep.into_iter().flatten().collect();
    let mean_count = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let (statistic, dof, p_value) = chi_square_cells(&counts, lambda)?;
    Ok(ChiSquareReport { builder: builder.name().into(), statistic, dof, p_value, cells, replicates, mean_count })
}
