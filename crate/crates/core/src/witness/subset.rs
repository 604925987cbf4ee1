//! Choosing which modes to keep.
//!
//! Dropping a weakly contributing mode removes `D - 1` pairs from the sum but
//! also lowers every threshold, so a smaller mode set can certify a higher
//! dimension.

use serde::{Deserialize, Serialize};

use super::{certified_dimension, per_mode_on, witness_on, VisibilityTable};
use crate::error::{Error, Result};

/// Largest mode count for which every subset is enumerated.
pub const EXHAUSTIVE_MAX_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStep {
    /// Number of modes kept.
    pub size: usize,
    pub certified_d: usize,
    pub witness: f64,
    /// Flat index of the mode dropped after this step.
    pub removed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSearch {
    pub steps: Vec<SubsetStep>,
    /// Flat indices (ascending) of the best subset found.
    pub best_subset: Vec<usize>,
    pub best_d: usize,
    pub best_witness: f64,
}

impl SubsetSearch {
    /// `(D', d)` pairs in removal order.
    pub fn trajectory(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|s| (s.size, s.certified_d)).collect()
    }
}

/// Greedy backward elimination: repeatedly drop the mode with the smallest
/// average visibility sum over the remaining modes, down to two modes.
///
/// Ties in the removal choice go to the lower index; ties in the certified
/// dimension keep the larger subset.
pub fn greedy_subset(table: &VisibilityTable) -> SubsetSearch {
    let mut active: Vec<usize> = (0..table.dim()).collect();
    let mut steps = Vec::new();
    let mut best: Option<(usize, f64, Vec<usize>)> = None;

    while active.len() >= 2 {
        let size = active.len();
        let w = witness_on(table, &active);
        let d = certified_dimension(w, size);
        if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
            best = Some((d, w, active.clone()));
        }
        let removed = if size > 2 {
            let per = per_mode_on(table, &active);
            let (pos, _) = per
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            Some(active.remove(pos))
        } else {
            None
        };
        steps.push(SubsetStep {
            size,
            certified_d: d,
            witness: w,
            removed,
        });
        if removed.is_none() {
            break;
        }
    }

    let (best_d, best_witness, best_subset) = best.unwrap_or((1, 0.0, active));
    SubsetSearch {
        steps,
        best_subset,
        best_d,
        best_witness,
    }
}

/// Best subset over all subsets of at least two modes, for `D <= 12`.
///
/// Returns `(subset, certified d, witness)`. Ties prefer larger subsets, then
/// larger witness, then the lexicographically smallest subset.
pub fn exhaustive_subset(table: &VisibilityTable) -> Result<(Vec<usize>, usize, f64)> {
    let dim = table.dim();
    if dim > EXHAUSTIVE_MAX_DIM {
        return Err(Error::Capacity {
            dim,
            cap: EXHAUSTIVE_MAX_DIM,
        });
    }
    if dim < 2 {
        return Err(Error::Domain("need at least two modes".into()));
    }
    let mut best: Option<(usize, usize, f64, Vec<usize>)> = None;
    for mask in 1u32..(1u32 << dim) {
        if mask.count_ones() < 2 {
            continue;
        }
        let subset: Vec<usize> = (0..dim).filter(|&i| mask & (1 << i) != 0).collect();
        let w = witness_on(table, &subset);
        let d = certified_dimension(w, subset.len());
        let better = match &best {
            None => true,
            Some((bd, bs, bw, bsub)) => (d, subset.len())
                .cmp(&(*bd, *bs))
                .then(w.total_cmp(bw))
                .then_with(|| bsub.cmp(&subset))
                .is_gt(),
        };
        if better {
            best = Some((d, subset.len(), w, subset));
        }
    }
    let (d, _, w, subset) = best.expect("at least one subset");
    Ok((subset, d, w))
}
