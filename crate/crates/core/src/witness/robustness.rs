//! Witness behavior under imperfect states and imperfect measurements.
//!
//! Two error models are applied to a perfectly correlated state:
//!
//! - state perturbation: [`perturb_density`] adds cross-correlated
//!   population and coherence and projects back to a density matrix;
//! - projector perturbation: every detection effect of every setting on
//!   each photon leaks a random fraction (up to the strength) of its
//!   complementary projector, so the `+` and `-` effects are no longer
//!   orthogonal.
//!
//! The witness is re-evaluated by the dense path in [`crate::oracle`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::measurement::{Basis, SubspaceSetting};
use crate::oracle::{measured_witness, LocalPovm};
use crate::rng::substream;
use crate::states::{perturb_density, CorrelatedState, TwoPhotonState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationKind {
    State,
    Projector,
    Both,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 3] = [
        PerturbationKind::State,
        PerturbationKind::Projector,
        PerturbationKind::Both,
    ];

    fn tag(self) -> u64 {
        self as u64
    }
}

impl std::fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerturbationKind::State => "state",
            PerturbationKind::Projector => "projector",
            PerturbationKind::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub kind: PerturbationKind,
    pub index: usize,
    pub strength: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub kind: PerturbationKind,
    pub n_trials: usize,
    /// Fraction of trials with `W <= W_0`.
    pub fraction_not_above: f64,
    /// Fraction of trials with `W < W_0`.
    pub fraction_below: f64,
    pub mean_w: f64,
    /// Spearman rank correlation between strength and `W`.
    pub spearman_rho: f64,
    /// Two-sided p-value of the rank correlation.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub w0: f64,
    pub trials: Vec<Trial>,
    pub summaries: Vec<RobustnessSummary>,
}

fn crosstalk_povms<R: Rng + ?Sized>(dim: usize, strength: f64, rng: &mut R) -> Vec<LocalPovm> {
    let mut out = Vec::with_capacity(dim * dim * 3);
    for _k in 0..dim {
        for _l in 0..dim {
            for basis in Basis::ALL {
                for _photon in 0..2 {
                    let a = rng.random::<f64>() * strength;
                    let b = rng.random::<f64>() * strength;
                    out.push(LocalPovm::with_crosstalk(basis, a, b));
                }
            }
        }
    }
    out
}

fn povm_slot(dim: usize, s: SubspaceSetting, photon: usize) -> usize {
    ((s.k * dim + s.l) * 3 + s.basis.index()) * 2 + photon
}

fn run_trial(
    rho0: &nalgebra::DMatrix<num_complex::Complex64>,
    dim: usize,
    kind: PerturbationKind,
    strength: f64,
    seed: u64,
    index: usize,
) -> Result<f64> {
    let ideal = |s: SubspaceSetting, _photon: usize| LocalPovm::ideal(s.basis);
    if strength == 0.0 {
        return Ok(measured_witness(rho0, dim, ideal));
    }
    let mut rng = substream(seed, &[kind.tag(), index as u64]);
    let rho = match kind {
        PerturbationKind::State | PerturbationKind::Both => {
            perturb_density(rho0, dim, strength, &mut rng)?
        }
        PerturbationKind::Projector => rho0.clone(),
    };
    Ok(match kind {
        PerturbationKind::State => measured_witness(&rho, dim, ideal),
        PerturbationKind::Projector | PerturbationKind::Both => {
            let povms = crosstalk_povms(dim, strength, &mut rng);
            measured_witness(&rho, dim, |s, p| povms[povm_slot(dim, s, p)])
        }
    })
}

/// Runs `n_trials` trials per requested kind with strengths ramped linearly
/// from 0 to `strength_max`.
///
/// Trial `i` of a kind draws from the substream `(seed, kind, i)`. Trials at
/// strength 0 evaluate the unperturbed state exactly.
pub fn robustness_study(
    state: &CorrelatedState,
    kinds: &[PerturbationKind],
    n_trials: usize,
    strength_max: f64,
    seed: u64,
    cap: usize,
) -> Result<RobustnessTable> {
    if !(strength_max >= 0.0 && strength_max.is_finite()) {
        return Err(Error::Domain(format!(
            "strength ramp maximum {strength_max} must be >= 0"
        )));
    }
    let dim = state.dim();
    let mut rho0 = state.to_dense(cap)?;
    rho0.scale_mut(1.0 / state.trace());
    let w0 = measured_witness(&rho0, dim, |s, _| LocalPovm::ideal(s.basis));

    let ramp = |i: usize| {
        if n_trials <= 1 {
            0.0
        } else {
            strength_max * i as f64 / (n_trials - 1) as f64
        }
    };

    let mut trials = Vec::with_capacity(kinds.len() * n_trials);
    let mut summaries = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let ws = (0..n_trials)
            .into_par_iter()
            .map(|i| run_trial(&rho0, dim, kind, ramp(i), seed, i))
            .collect::<Result<Vec<f64>>>()?;
        let strengths: Vec<f64> = (0..n_trials).map(ramp).collect();
        let n = n_trials.max(1) as f64;
        let (rho_s, p) = spearman(&strengths, &ws);
        summaries.push(RobustnessSummary {
            kind,
            n_trials,
            fraction_not_above: ws.iter().filter(|&&w| w <= w0).count() as f64 / n,
            fraction_below: ws.iter().filter(|&&w| w < w0).count() as f64 / n,
            mean_w: ws.iter().sum::<f64>() / n,
            spearman_rho: rho_s,
            p_value: p,
        });
        trials.extend(ws.into_iter().enumerate().map(|(index, w)| Trial {
            kind,
            index,
            strength: strengths[index],
            w,
        }));
    }
    Ok(RobustnessTable {
        w0,
        trials,
        summaries,
    })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties, and its two-sided
/// p-value from the Student t approximation. Returns `(0, 1)` when either
/// series is constant or shorter than 3.
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len().min(y.len());
    if n < 3 {
        return (0.0, 1.0);
    }
    let (rx, ry) = (ranks(&x[..n]), ranks(&y[..n]));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (rx[i] - mean, ry[i] - mean);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 1.0);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let dof = n as f64 - 2.0;
    if (1.0 - r * r) <= 0.0 {
        return (r, 0.0);
    }
    let t = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    (r, 2.0 * dist.sf(t.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeSet;
    use crate::oracle::{brute_force_witness, OracleConfig};
    use crate::states::correlated_pure_real;

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (r, p) = spearman(&x, &[10.0, 8.0, 6.0, 4.0, 2.0]);
        assert!((r + 1.0).abs() < 1e-12);
        assert_eq!(p, 0.0);
        let (r, _) = spearman(&x, &[1.0, 1.0, 2.0, 2.0, 3.0]);
        assert!(r > 0.9);
        assert_eq!(spearman(&x, &[1.0; 5]), (0.0, 1.0));
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn zero_strength_is_exact() {
        let s = correlated_pure_real(&[0.5, 0.07, 0.01, 0.01], ModeSet::ladder(4)).unwrap();
        let t = robustness_study(&s, &PerturbationKind::ALL, 5, 0.0, 1, 8).unwrap();
        assert!(t.trials.iter().all(|tr| tr.w == t.w0));
        let bf = brute_force_witness(&s, &OracleConfig::default()).unwrap();
        assert!((t.w0 - bf).abs() < 1e-9);
    }

    #[test]
    fn capacity_enforced() {
        let s = crate::states::maximally_entangled(9).unwrap();
        assert!(matches!(
            robustness_study(&s, &[PerturbationKind::State], 2, 0.1, 0, 8),
            Err(Error::Capacity { .. })
        ));
    }
}
