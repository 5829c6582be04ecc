//! Empirical measures on the line, measure flows and the Kantorovich
//! (Wasserstein-1) distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{PathEnsemble, TimeGrid};
use crate::stats::pairwise_sum;

/// Equal-weight empirical measure with sorted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::non_finite("empirical measure atoms"));
        }
        atoms.sort_unstable_by(f64::total_cmp);
        Ok(Self { atoms })
    }

    pub fn dirac(x: f64, copies: usize) -> Result<Self> {
        Self::new(vec![x; copies.max(1)])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.atoms) / self.atoms.len() as f64
    }

    /// Shifted copy `μ(· - h)`.
    pub fn translate(&self, h: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a + h).collect(),
        }
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let pos = q * (self.atoms.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(self.atoms.len() - 1);
        let frac = pos - lo as f64;
        self.atoms[lo] + frac * (self.atoms[hi] - self.atoms[lo])
    }
}

/// Empirical law of the particles at node `k`.
pub fn empirical_from_column(ensemble: &PathEnsemble, k: usize) -> Result<EmpiricalMeasure> {
    ensemble.grid().check_node(k)?;
    EmpiricalMeasure::new(ensemble.column(k).to_vec())
}

/// Probability measure with sorted atoms and normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if atoms.len() != weights.len() {
            return Err(Error::invalid("weights", "length differs from atoms"));
        }
        if atoms.iter().chain(weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::non_finite("weighted measure"));
        }
        let total = pairwise_sum(weights);
        if total <= 0.0 {
            return Err(Error::invalid("weights", "total mass must be positive"));
        }
        let mut idx: Vec<usize> = (0..atoms.len()).collect();
        idx.sort_unstable_by(|&a, &b| atoms[a].total_cmp(&atoms[b]).then(a.cmp(&b)));
        Ok(Self {
            atoms: idx.iter().map(|&i| atoms[i]).collect(),
            weights: idx.iter().map(|&i| weights[i] / total).collect(),
        })
    }

    pub fn uniform(mu: &EmpiricalMeasure) -> Self {
        let w = 1.0 / mu.len() as f64;
        Self {
            atoms: mu.atoms.clone(),
            weights: vec![w; mu.len()],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Area between the two CDFs, `∫ |F(z) - G(z)| dz`.
pub fn weighted_kantorovich(a: &WeightedMeasure, b: &WeightedMeasure) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0_f64, 0.0_f64);
    let mut prev = a.atoms[0].min(b.atoms[0]);
    let mut pieces = Vec::with_capacity(a.atoms.len() + b.atoms.len());
    while i < a.atoms.len() || j < b.atoms.len() {
        let next = match (a.atoms.get(i), b.atoms.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        pieces.push((fa - fb).abs() * (next - prev));
        while i < a.atoms.len() && a.atoms[i] == next {
            fa += a.weights[i];
            i += 1;
        }
        while j < b.atoms.len() && b.atoms[j] == next {
            fb += b.weights[j];
            j += 1;
        }
        prev = next;
    }
    pairwise_sum(&pieces)
}

/// Kantorovich distance between two empirical measures.
///
/// Equal atom counts use the sorted pairing `(1/n) Σ |x_(i) - y_(i)|`;
/// otherwise the L¹ distance between the CDFs is integrated exactly.
pub fn kantorovich(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    if mu.len() == nu.len() {
        let diffs: Vec<f64> = mu.atoms.iter().zip(&nu.atoms).map(|(x, y)| (x - y).abs()).collect();
        pairwise_sum(&diffs) / mu.len() as f64
    } else {
        weighted_kantorovich(&WeightedMeasure::uniform(mu), &WeightedMeasure::uniform(nu))
    }
}

/// Sample mean and p-th absolute moment.
pub fn mean_and_moment(mu: &EmpiricalMeasure, p: f64) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(Error::invalid("p", format!("moment order must be >= 1, got {p}")));
    }
    let abs_p: Vec<f64> = mu.atoms.iter().map(|a| a.abs().powf(p)).collect();
    Ok((mu.mean(), pairwise_sum(&abs_p) / mu.len() as f64))
}

/// One empirical measure per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFlow {
    grid: TimeGrid,
    measures: Vec<EmpiricalMeasure>,
}

impl MeasureFlow {
    pub fn new(grid: TimeGrid, measures: Vec<EmpiricalMeasure>) -> Result<Self> {
        if measures.len() != grid.len() {
            return Err(Error::invalid(
                "measures",
                format!("expected {} slices, got {}", grid.len(), measures.len()),
            ));
        }
        Ok(Self { grid, measures })
    }

    /// Flow with every slice equal to `δ_x` (represented by `copies` atoms).
    pub fn dirac(grid: TimeGrid, x: f64, copies: usize) -> Result<Self> {
        let slice = EmpiricalMeasure::dirac(x, copies)?;
        Ok(Self {
            measures: vec![slice; grid.len()],
            grid,
        })
    }

    /// Empirical laws of every column of `ensemble`.
    pub fn from_ensemble(ensemble: &PathEnsemble) -> Result<Self> {
        let grid = *ensemble.grid();
        let measures = (0..grid.len())
            .into_par_iter()
            .map(|k| EmpiricalMeasure::new(ensemble.column(k).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, measures })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn at(&self, k: usize) -> &EmpiricalMeasure {
        &self.measures[k]
    }

    pub fn measures(&self) -> &[EmpiricalMeasure] {
        &self.measures
    }

    /// `K(μ_{t_k}, μ_{t_{k+1}})` for every step.
    pub fn increments(&self) -> Vec<f64> {
        self.measures.windows(2).map(|w| kantorovich(&w[0], &w[1])).collect()
    }
}

/// `sup_k K(f_k, g_k)`.
pub fn flow_distance(f: &MeasureFlow, g: &MeasureFlow) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    let per_node: Vec<f64> = f
        .measures
        .par_iter()
        .zip(&g.measures)
        .map(|(a, b)| kantorovich(a, b))
        .collect();
    Ok(per_node.into_iter().fold(0.0, f64::max))
}
