//! Laguerre-Gauss mode indexing, field evaluation and numerical overlaps.
//!
//! A [`ModeSet`] fixes the flat single-photon basis: the mode at list
//! position `k` is the basis vector `|k>`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial (`n`) and azimuthal/OAM (`l`) quantum numbers of an LG mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: u32,
    pub l: i32,
}

impl ModeIndex {
    pub fn new(n: u32, l: i32) -> Self {
        Self { n, l }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LG(n={}, l={})", self.n, self.l)
    }
}

/// Ordered, duplicate-free list of modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModeIndex>", into = "Vec<ModeIndex>")]
pub struct ModeSet {
    modes: Vec<ModeIndex>,
}

impl TryFrom<Vec<ModeIndex>> for ModeSet {
    type Error = Error;

    fn try_from(modes: Vec<ModeIndex>) -> Result<Self> {
        ModeSet::new(modes)
    }
}

impl From<ModeSet> for Vec<ModeIndex> {
    fn from(set: ModeSet) -> Self {
        set.modes
    }
}

impl ModeSet {
    pub fn new(modes: Vec<ModeIndex>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(modes.len());
        for m in &modes {
            if !seen.insert(*m) {
                return Err(Error::InvalidModeSet(format!("duplicate mode {m}")));
            }
        }
        Ok(Self { modes })
    }

    /// `D` pure-OAM modes `(0, 0), (0, 1), ..., (0, D-1)`.
    ///
    /// Used whenever only the dimension matters.
    pub fn ladder(dim: usize) -> Self {
        Self {
            modes: (0..dim as i32).map(|l| ModeIndex::new(0, l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn get(&self, k: usize) -> Option<ModeIndex> {
        self.modes.get(k).copied()
    }

    pub fn position(&self, mode: ModeIndex) -> Option<usize> {
        self.modes.iter().position(|m| *m == mode)
    }

    /// Sub-list at the given flat indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let modes = indices
            .iter()
            .map(|&k| {
                self.get(k)
                    .ok_or_else(|| Error::InvalidModeSet(format!("index {k} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes)
    }
}

/// All modes with `|l| <= l_max` and `n <= n_max`, sorted by `n` then `l`,
/// or exactly `selection` when one is given.
pub fn enumerate_modes(
    l_max: u32,
    n_max: u32,
    selection: Option<Vec<ModeIndex>>,
) -> Result<ModeSet> {
    if let Some(list) = selection {
        return ModeSet::new(list);
    }
    let l_max = l_max as i32;
    let modes = (0..=n_max)
        .flat_map(|n| (-l_max..=l_max).map(move |l| ModeIndex::new(n, l)))
        .collect();
    Ok(ModeSet { modes })
}

/// Generalized Laguerre polynomial `L_n^alpha(x)` by upward recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Unit-norm constant `sqrt(2 n! / (pi (n + |l|)!))`.
fn normalization(mode: ModeIndex) -> f64 {
    let abs_l = mode.l.unsigned_abs();
    // n! / (n + |l|)! = 1 / ((n+1)(n+2)...(n+|l|))
    let ratio: f64 = (1..=abs_l).map(|j| 1.0 / (mode.n + j) as f64).product();
    (2.0 * ratio / PI).sqrt()
}

fn radial_profile(mode: ModeIndex, r: f64, w0: f64) -> f64 {
    let abs_l = mode.l.unsigned_abs();
    let rho = r / w0;
    let x = 2.0 * rho * rho;
    normalization(mode) / w0
        * (rho * std::f64::consts::SQRT_2).powi(abs_l as i32)
        * (-rho * rho).exp()
        * laguerre(mode.n, abs_l as f64, x)
}

/// Field of `LG_{n,l}` in the waist plane (`z = 0`), normalized so that
/// `∫ |LG|² r dr dφ = 1`.
pub fn lg_field(mode: ModeIndex, r: f64, phi: f64, w0: f64) -> Result<Complex64> {
    if !(r.is_finite() && phi.is_finite() && w0.is_finite()) {
        return Err(Error::Domain("non-finite field coordinates".into()));
    }
    if w0 <= 0.0 {
        return Err(Error::Domain(format!(
            "beam waist must be positive, got {w0}"
        )));
    }
    if r < 0.0 {
        return Err(Error::Domain(format!(
            "radius must be non-negative, got {r}"
        )));
    }
    let radial = radial_profile(mode, r, w0);
    Ok(Complex64::from_polar(1.0, mode.l as f64 * phi) * radial)
}

fn gauss_legendre(order: NonZeroUsize) -> (Vec<f64>, Vec<f64>) {
    GaussLegendre::new(order)
        .into_node_weight_pairs()
        .iter()
        .copied()
        .unzip()
}

/// Numerical integration settings for [`mode_overlap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Radial cutoff in units of the beam waist.
    pub r_cut: f64,
    pub radial_nodes: usize,
    pub azimuthal_nodes: usize,
    pub w0: f64,
    /// Allowed deviation of a self-overlap from 1.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            r_cut: 8.0,
            radial_nodes: 256,
            azimuthal_nodes: 64,
            w0: 1.0,
            tol: 1e-6,
        }
    }
}

/// Pre-tabulated quadrature grid, reusable across many overlaps.
#[derive(Debug, Clone)]
pub struct Quadrature {
    config: QuadratureConfig,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    angles: Vec<f64>,
}

impl Quadrature {
    pub fn new(config: QuadratureConfig) -> Result<Self> {
        let radial_nodes = NonZeroUsize::new(config.radial_nodes)
            .filter(|_| config.azimuthal_nodes > 0)
            .ok_or_else(|| Error::Domain("quadrature node counts must be positive".into()))?;
        if !(config.r_cut > 0.0 && config.w0 > 0.0 && config.tol > 0.0) {
            return Err(Error::Domain(
                "quadrature cutoff, waist and tolerance must be positive".into(),
            ));
        }
        let (x, w) = gauss_legendre(radial_nodes);
        let half = 0.5 * config.r_cut * config.w0;
        let radii = x.iter().map(|&t| half * (t + 1.0)).collect();
        let radial_weights = w.iter().map(|&wt| half * wt).collect();
        let m = config.azimuthal_nodes;
        let angles = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
        Ok(Self {
            config,
            radii,
            radial_weights,
            angles,
        })
    }

    /// `∫ a conj(b) r dr dφ` without the self-overlap check.
    pub fn inner_product(&self, a: ModeIndex, b: ModeIndex) -> Complex64 {
        let w0 = self.config.w0;
        let radial: f64 = self
            .radii
            .iter()
            .zip(&self.radial_weights)
            .map(|(&r, &w)| w * r * radial_profile(a, r, w0) * radial_profile(b, r, w0))
            .sum();
        let dphi = 2.0 * PI / self.angles.len() as f64;
        let dl = (a.l - b.l) as f64;
        let angular: Complex64 = self
            .angles
            .iter()
            .map(|&phi| Complex64::from_polar(dphi, dl * phi))
            .sum();
        angular * radial
    }

    pub fn check_normalized(&self, mode: ModeIndex) -> Result<()> {
        let dev = (self.inner_product(mode, mode).re - 1.0).abs();
        if dev > self.config.tol {
            return Err(Error::Quadrature {
                mode: mode.to_string(),
                value: dev,
            });
        }
        Ok(())
    }
}

/// Numerical inner product of two LG modes.
///
/// Fails with [`Error::Quadrature`] when either mode's self-overlap misses 1
/// by more than the configured tolerance.
pub fn mode_overlap(a: ModeIndex, b: ModeIndex, config: QuadratureConfig) -> Result<Complex64> {
    let quad = Quadrature::new(config)?;
    quad.check_normalized(a)?;
    quad.check_normalized(b)?;
    Ok(quad.inner_product(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_and_order() {
        let single = enumerate_modes(0, 0, None).unwrap();
        assert_eq!(single.modes(), &[ModeIndex::new(0, 0)]);

        let six = enumerate_modes(1, 1, None).unwrap();
        let expected: Vec<_> = [(0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)]
            .iter()
            .map(|&(n, l)| ModeIndex::new(n, l))
            .collect();
        assert_eq!(six.modes(), expected.as_slice());

        assert_eq!(enumerate_modes(11, 13, None).unwrap().len(), 322);
        assert_eq!(
            enumerate_modes(3, 2, None).unwrap(),
            enumerate_modes(3, 2, None).unwrap()
        );
    }

    #[test]
    fn explicit_selection_rejects_duplicates() {
        let dup = vec![ModeIndex::new(0, 1), ModeIndex::new(0, 1)];
        assert!(matches!(
            enumerate_modes(0, 0, Some(dup)),
            Err(Error::InvalidModeSet(_))
        ));
        let ok = vec![ModeIndex::new(2, -1), ModeIndex::new(0, 1)];
        assert_eq!(
            enumerate_modes(5, 5, Some(ok.clone())).unwrap().modes(),
            ok.as_slice()
        );
    }

    #[test]
    fn mode_set_json_shape() {
        let set = ModeSet::ladder(2);
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(json, r#"[{"n":0,"l":0},{"n":0,"l":1}]"#);
        assert!(serde_json::from_str::<ModeSet>(r#"[{"n":0,"l":0},{"n":0,"l":0}]"#).is_err());
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert_eq!(laguerre(0, 3.0, x), 1.0);
        assert!((laguerre(1, 2.0, x) - (3.0 - x)).abs() < 1e-14);
        let l2 = 0.5 * (x * x - 2.0 * (1.0 + 2.0) * x + (1.0 + 1.0) * (1.0 + 2.0));
        assert!((laguerre(2, 1.0, x) - l2).abs() < 1e-14);
    }

    #[test]
    fn gauss_mode_is_real_positive() {
        for &(r, phi) in &[(0.0, 0.0), (0.5, 1.3), (1.7, -2.0)] {
            let v = lg_field(ModeIndex::new(0, 0), r, phi, 1.0).unwrap();
            assert!(v.re > 0.0);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn azimuthal_phase_winds_with_l() {
        for &(n, l) in &[(0, 1), (1, -2), (2, 3), (3, -5)] {
            let m = ModeIndex::new(n, l);
            let r = 0.6;
            let base = lg_field(m, r, 0.0, 1.0).unwrap();
            for &phi in &[0.3, 1.1, 2.5] {
                let v = lg_field(m, r, phi, 1.0).unwrap();
                let diff = (v / base).arg();
                let expected = (l as f64 * phi).rem_euclid(2.0 * PI);
                let got = diff.rem_euclid(2.0 * PI);
                let d = (got - expected).abs();
                assert!(
                    d < 1e-12 || (2.0 * PI - d) < 1e-12,
                    "{m}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn field_rejects_bad_inputs() {
        let m = ModeIndex::new(0, 0);
        assert!(lg_field(m, f64::NAN, 0.0, 1.0).is_err());
        assert!(lg_field(m, 1.0, 0.0, 0.0).is_err());
        assert!(lg_field(m, -1.0, 0.0, 1.0).is_err());
    }

    /// Independent check: midpoint rule on a polar grid, evaluating the field
    /// pointwise through `lg_field`.
    fn brute_overlap(a: ModeIndex, b: ModeIndex) -> Complex64 {
        let (nr, nphi, r_max) = (4000, 64, 8.0);
        let dr = r_max / nr as f64;
        let dphi = 2.0 * PI / nphi as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..nphi {
                let phi = j as f64 * dphi;
                let fa = lg_field(a, r, phi, 1.0).unwrap();
                let fb = lg_field(b, r, phi, 1.0).unwrap();
                acc += fa * fb.conj() * r * dr * dphi;
            }
        }
        acc
    }

    #[test]
    fn radial_orthogonality_against_brute_quadrature() {
        let g = ModeIndex::new(0, 0);
        let r1 = ModeIndex::new(1, 0);
        assert!(brute_overlap(r1, g).norm() < 1e-6);
        assert!((brute_overlap(g, g).re - 1.0).abs() < 1e-6);
        let cfg = QuadratureConfig::default();
        assert!(mode_overlap(r1, g, cfg).unwrap().norm() < 1e-6);
        assert!(
            mode_overlap(ModeIndex::new(0, 2), ModeIndex::new(1, 2), cfg)
                .unwrap()
                .norm()
                < 1e-6
        );
    }

    #[test]
    fn different_l_vanishes() {
        let v = mode_overlap(
            ModeIndex::new(0, 1),
            ModeIndex::new(0, -1),
            QuadratureConfig::default(),
        )
        .unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn orthonormal_up_to_five() {
        let set = enumerate_modes(5, 5, None).unwrap();
        let quad = Quadrature::new(QuadratureConfig::default()).unwrap();
        for (i, &a) in set.modes().iter().enumerate() {
            quad.check_normalized(a).unwrap();
            for &b in &set.modes()[i + 1..] {
                let v = quad.inner_product(a, b);
                assert!(v.norm() < 1e-6, "{a} vs {b}: {v}");
            }
        }
    }

    #[test]
    fn under_resolved_quadrature_is_reported() {
        let coarse = QuadratureConfig {
            r_cut: 1.0,
            radial_nodes: 4,
            ..QuadratureConfig::default()
        };
        assert!(matches!(
            mode_overlap(ModeIndex::new(3, 4), ModeIndex::new(3, 4), coarse),
            Err(Error::Quadrature { .. })
        ));
    }
}
