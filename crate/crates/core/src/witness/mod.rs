//! The summed-visibility dimensionality witness.
//!
//! For `D` modes the witness `W = Σ_{k<l} (V_x + V_y + V_z)` over normalized
//! pair subspaces is bounded by `3 D(D-1)/2 - D(D-d)` for any state whose
//! Schmidt number is at most `d`. Exceeding that threshold certifies
//! `(d+1)`-dimensional entanglement.

mod robustness;
mod stats;
mod subset;

pub use robustness::{
    robustness_study, spearman, PerturbationKind, RobustnessSummary, RobustnessTable, Trial,
};
pub use stats::monte_carlo_ci;
pub use subset::{exhaustive_subset, greedy_subset, SubsetSearch, SubsetStep, EXHAUSTIVE_MAX_DIM};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    estimate_visibilities, visibilities, CoincidenceDataset, VisibilityRecord,
};
use crate::modes::ModeSet;
use crate::states::TwoPhotonState;

/// Slack allowed above the global cap `3D(D-1)/2` before data is rejected.
pub const CAP_TOL: f64 = 1e-6;

fn pair_index(k: usize, l: usize, dim: usize) -> usize {
    k * (2 * dim - k - 1) / 2 + (l - k - 1)
}

/// One [`VisibilityRecord`] per unordered mode pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityTable {
    mode_set: ModeSet,
    records: Vec<VisibilityRecord>,
}

impl VisibilityTable {
    /// Builds a table from a pair map, which must cover every `k < l`.
    pub fn from_records(
        mode_set: ModeSet,
        map: &BTreeMap<(usize, usize), VisibilityRecord>,
    ) -> Result<Self> {
        let dim = mode_set.len();
        let mut records = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        for k in 0..dim {
            for l in k + 1..dim {
                records.push(*map.get(&(k, l)).ok_or(Error::MissingPair(k, l))?);
            }
        }
        Ok(Self { mode_set, records })
    }

    /// Exact visibilities of a state.
    pub fn from_state<S: TwoPhotonState + ?Sized>(state: &S) -> Result<Self> {
        let dim = state.dim();
        let mut records = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        for k in 0..dim {
            for l in k + 1..dim {
                records.push(visibilities(state, k, l)?);
            }
        }
        Ok(Self {
            mode_set: state.mode_set().clone(),
            records,
        })
    }

    /// Visibilities estimated from coincidence counts.
    pub fn from_dataset(data: &CoincidenceDataset) -> Result<Self> {
        let dim = data.mode_set().len();
        let mut records = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
        for k in 0..dim {
            for l in k + 1..dim {
                records.push(estimate_visibilities(data, k, l)?);
            }
        }
        Ok(Self {
            mode_set: data.mode_set().clone(),
            records,
        })
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    pub fn dim(&self) -> usize {
        self.mode_set.len()
    }

    pub fn get(&self, k: usize, l: usize) -> Option<&VisibilityRecord> {
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        if k == l || l >= self.dim() {
            return None;
        }
        self.records.get(pair_index(k, l, self.dim()))
    }

    /// `V_x + V_y + V_z` of a pair, or 0 for an empty subspace.
    pub fn pair_sum(&self, k: usize, l: usize) -> f64 {
        match self.get(k, l) {
            Some(r) if r.n_ab > 0.0 => r.sum(),
            _ => 0.0,
        }
    }

    /// Sub-table over the modes at `indices`.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mode_set = self.mode_set.select(indices)?;
        let n = indices.len();
        let mut records = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let r = self
                    .get(indices[i], indices[j])
                    .ok_or(Error::MissingPair(indices[i], indices[j]))?;
                records.push(*r);
            }
        }
        Ok(Self { mode_set, records })
    }
}

/// `W` restricted to the pairs inside `active`, summed in index order.
pub fn witness_on(table: &VisibilityTable, active: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, &k) in active.iter().enumerate() {
        for &l in &active[i + 1..] {
            total += table.pair_sum(k, l);
        }
    }
    total
}

/// `W = Σ_{k<l} (V_x + V_y + V_z)`; empty subspaces contribute 0.
pub fn witness_sum(table: &VisibilityTable) -> f64 {
    table
        .records
        .iter()
        .map(|r| if r.n_ab > 0.0 { r.sum() } else { 0.0 })
        .sum()
}

fn check_range(dim: usize, d: usize) -> Result<()> {
    if d == 0 || d > dim {
        return Err(Error::Domain(format!(
            "need 1 <= d <= D, got d={d}, D={dim}"
        )));
    }
    Ok(())
}

/// `3 D(D-1)/2 - D(D-d)` in exact integer arithmetic.
pub fn bound_exact(dim: usize, d: usize) -> Result<i128> {
    check_range(dim, d)?;
    let (dim, d) = (dim as i128, d as i128);
    Ok(3 * dim * (dim - 1) / 2 - dim * (dim - d))
}

/// Largest witness value compatible with Schmidt number `d`.
pub fn bound(dim: usize, d: usize) -> Result<f64> {
    bound_exact(dim, d).map(|b| b as f64)
}

/// Largest un-normalized correlation sum `2d + D - 3` for Schmidt number `d`.
pub fn f_bound(dim: usize, d: usize) -> Result<f64> {
    check_range(dim, d)?;
    Ok((2 * d + dim) as f64 - 3.0)
}

/// Largest `d` with `W > bound(D, d - 1)`; 1 when nothing is certified.
///
/// The comparison is strict. The result never exceeds `D`.
pub fn certified_dimension(w: f64, dim: usize) -> usize {
    if dim < 2 || !w.is_finite() {
        return 1;
    }
    // bound(D, d) = D(D-3)/2 + D d is increasing in d.
    (1..dim)
        .rev()
        .find(|&d| w > bound(dim, d).expect("d in range"))
        .map_or(1, |d| d + 1)
}

/// `entry k = mean over l != k` of the pair visibility sums, restricted to
/// `active`.
pub fn per_mode_on(table: &VisibilityTable, active: &[usize]) -> Vec<f64> {
    let n = active.len();
    active
        .iter()
        .map(|&k| {
            if n < 2 {
                return 0.0;
            }
            let s: f64 = active
                .iter()
                .filter(|&&l| l != k)
                .map(|&l| table.pair_sum(k, l))
                .sum();
            s / (n - 1) as f64
        })
        .collect()
}

/// Average visibility sum of each mode with all others.
pub fn per_mode_contribution(table: &VisibilityTable) -> Vec<f64> {
    let all: Vec<usize> = (0..table.dim()).collect();
    per_mode_on(table, &all)
}

/// Everything known about one witness evaluation, in its JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub sigma: Option<f64>,
    pub n_resamples: Option<usize>,
    pub certified_d: usize,
    pub bounds: Vec<(usize, f64)>,
    pub per_mode: Vec<f64>,
    pub subset_trajectory: Vec<(usize, usize)>,
    /// False when `W` exceeds the global cap `3D(D-1)/2`.
    pub integrity_ok: bool,
}

impl WitnessReport {
    /// Evaluates `table` and attaches an optional `(sigma, n_resamples)`
    /// uncertainty and a subset trajectory.
    pub fn build(
        table: &VisibilityTable,
        ci: Option<(f64, usize)>,
        subset_trajectory: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let dim = table.dim();
        let w = witness_sum(table);
        let bounds = (1..=dim)
            .map(|d| Ok((d, bound(dim, d)?)))
            .collect::<Result<Vec<_>>>()?;
        let cap = if dim >= 1 { bound(dim, dim)? } else { 0.0 };
        Ok(Self {
            w,
            dim,
            sigma: ci.map(|c| c.0),
            n_resamples: ci.map(|c| c.1),
            certified_d: certified_dimension(w, dim),
            bounds,
            per_mode: per_mode_contribution(table),
            subset_trajectory,
            integrity_ok: w <= cap + CAP_TOL,
        })
    }

    /// Fails with [`Error::Integrity`] when the witness exceeds the cap.
    pub fn check_integrity(&self) -> Result<()> {
        if self.integrity_ok {
            return Ok(());
        }
        Err(Error::Integrity(format!(
            "W = {} exceeds the maximum 3D(D-1)/2 = {} for D = {}",
            self.w,
            3 * self.dim * self.dim.saturating_sub(1) / 2,
            self.dim
        )))
    }
}
