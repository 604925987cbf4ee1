//! Two-photon states.
//!
//! Photon A in mode `k` is always paired with photon B in the OAM-conjugate
//! mode `(n, -l)`; the flat index `k` labels that pair, so a perfectly
//! (anti-)correlated state lives on the diagonal kets `|kk>`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{ModeIndex, ModeSet};

/// Largest eigenvalue deficit still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;

/// Default dimension cap for full `D² × D²` density matrices.
pub const DEFAULT_DIM_CAP: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Read access to a two-photon density matrix in the product basis `|a b>`.
pub trait TwoPhotonState {
    fn mode_set(&self) -> &ModeSet;

    /// `<a b| rho |c d>`.
    fn element(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64;

    fn trace(&self) -> f64;

    fn dim(&self) -> usize {
        self.mode_set().len()
    }

    /// Dense `D² × D²` matrix with row index `a * D + b`.
    fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>>;
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::Capacity { dim, cap });
    }
    Ok(())
}

/// Overwrites the lower triangle with the conjugate of the upper one and
/// drops imaginary parts on the diagonal.
fn hermitize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
}

fn is_exactly_hermitian(m: &DMatrix<Complex64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (i..n).all(|j| m[(i, j)] == m[(j, i)].conj()))
}

fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn trace_of(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `rho = Σ c_kl |kk><ll|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedState {
    coeffs: DMatrix<Complex64>,
    mode_set: ModeSet,
}

impl CorrelatedState {
    /// Wraps a coefficient matrix after checking Hermiticity, positivity and
    /// `0 < Tr <= 1`.
    pub fn new(coeffs: DMatrix<Complex64>, mode_set: ModeSet) -> Result<Self> {
        let state = Self { coeffs, mode_set };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mode_set.len();
        if self.coeffs.nrows() != d || self.coeffs.ncols() != d {
            return Err(Error::InvalidState(format!(
                "coefficient matrix is {}x{}, mode set has {d} modes",
                self.coeffs.nrows(),
                self.coeffs.ncols()
            )));
        }
        if !is_exactly_hermitian(&self.coeffs) {
            return Err(Error::InvalidState("coefficients are not Hermitian".into()));
        }
        let tr = trace_of(&self.coeffs);
        if !(tr > 0.0 && tr <= 1.0 + PSD_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
        }
        let min = min_eigenvalue(&self.coeffs);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Hermitizes `coeffs` before validating.
    fn assemble(mut coeffs: DMatrix<Complex64>, mode_set: ModeSet) -> Result<Self> {
        hermitize(&mut coeffs);
        Self::new(coeffs, mode_set)
    }

    pub fn coeffs(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize, l: usize) -> Complex64 {
        self.coeffs[(k, l)]
    }

    /// Same coefficients restricted to the modes at `indices` (not
    /// renormalized).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mode_set = self.mode_set.select(indices)?;
        let n = indices.len();
        let coeffs = DMatrix::from_fn(n, n, |i, j| self.coeffs[(indices[i], indices[j])]);
        Self::new(coeffs, mode_set)
    }

    /// Schmidt amplitudes (up to a global phase) when the state is pure.
    pub fn pure_amplitudes(&self) -> Option<DVector<Complex64>> {
        let eig = self.coeffs.clone().symmetric_eigen();
        let (imax, &lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        let rest: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>() - lmax.abs();
        if rest > 1e-9 * lmax.abs() {
            return None;
        }
        Some(eig.eigenvectors.column(imax) * Complex64::new(lmax.sqrt(), 0.0))
    }
}

impl TwoPhotonState for CorrelatedState {
    fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    fn element(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        if a == b && c == d {
            self.coeffs[(a, c)]
        } else {
            ZERO
        }
    }

    fn trace(&self) -> f64 {
        trace_of(&self.coeffs)
    }

    fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        let d = self.dim();
        check_cap(d, cap)?;
        let mut rho = DMatrix::zeros(d * d, d * d);
        for k in 0..d {
            for l in 0..d {
                rho[(k * d + k, l * d + l)] = self.coeffs[(k, l)];
            }
        }
        Ok(rho)
    }
}

/// Full `D² × D²` density matrix, limited to small `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralTwoPhotonState {
    rho: DMatrix<Complex64>,
    mode_set: ModeSet,
}

impl GeneralTwoPhotonState {
    pub fn new(rho: DMatrix<Complex64>, mode_set: ModeSet) -> Result<Self> {
        Self::with_cap(rho, mode_set, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(rho: DMatrix<Complex64>, mode_set: ModeSet, cap: usize) -> Result<Self> {
        let d = mode_set.len();
        check_cap(d, cap)?;
        if rho.nrows() != d * d || rho.ncols() != d * d {
            return Err(Error::InvalidState(format!(
                "density matrix is {}x{}, expected {}x{}",
                rho.nrows(),
                rho.ncols(),
                d * d,
                d * d
            )));
        }
        let state = Self { rho, mode_set };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_exactly_hermitian(&self.rho) {
            return Err(Error::InvalidState(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = trace_of(&self.rho);
        if (tr - 1.0).abs() > PSD_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&self.rho);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// Embeds a correlated state exactly, rescaled to unit trace.
    pub fn from_correlated(state: &CorrelatedState, cap: usize) -> Result<Self> {
        let mut rho = state.to_dense(cap)?;
        let tr = state.trace();
        rho.scale_mut(1.0 / tr);
        hermitize(&mut rho);
        Self::with_cap(rho, state.mode_set().clone(), cap)
    }
}

impl TwoPhotonState for GeneralTwoPhotonState {
    fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    fn element(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let n = self.dim();
        self.rho[(a * n + b, c * n + d)]
    }

    fn trace(&self) -> f64 {
        trace_of(&self.rho)
    }

    fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        check_cap(self.dim(), cap)?;
        Ok(self.rho.clone())
    }
}

/// Either state representation, as stored in state files.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Correlated(CorrelatedState),
    General(GeneralTwoPhotonState),
}

impl TwoPhotonState for State {
    fn mode_set(&self) -> &ModeSet {
        match self {
            State::Correlated(s) => s.mode_set(),
            State::General(s) => s.mode_set(),
        }
    }

    fn element(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        match self {
            State::Correlated(s) => s.element(a, b, c, d),
            State::General(s) => s.element(a, b, c, d),
        }
    }

    fn trace(&self) -> f64 {
        match self {
            State::Correlated(s) => s.trace(),
            State::General(s) => s.trace(),
        }
    }

    fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        match self {
            State::Correlated(s) => s.to_dense(cap),
            State::General(s) => s.to_dense(cap),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Correlated,
    General,
}

/// On-disk form of a [`State`]: rows of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub modes: ModeSet,
    pub representation: Representation,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_state(state: &State) -> Self {
        let (representation, m) = match state {
            State::Correlated(s) => (Representation::Correlated, s.coeffs()),
            State::General(s) => (Representation::General, s.rho()),
        };
        let matrix = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect();
        Self {
            modes: state.mode_set().clone(),
            representation,
            matrix,
        }
    }

    pub fn into_state(self, cap: usize) -> Result<State> {
        let rows = self.matrix.len();
        if self.matrix.iter().any(|r| r.len() != rows) {
            return Err(Error::Ingestion("state matrix is not square".into()));
        }
        let m = DMatrix::from_fn(rows, rows, |i, j| {
            let [re, im] = self.matrix[i][j];
            Complex64::new(re, im)
        });
        Ok(match self.representation {
            Representation::Correlated => State::Correlated(CorrelatedState::new(m, self.modes)?),
            Representation::General => {
                State::General(GeneralTwoPhotonState::with_cap(m, self.modes, cap)?)
            }
        })
    }
}

pub fn write_state(path: &Path, state: &State) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &StateFile::from_state(state))?;
    Ok(())
}

pub fn read_state(path: &Path, cap: usize) -> Result<State> {
    let text = std::fs::read_to_string(path)?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    file.into_state(cap)
}

/// One pure component `sqrt(weight) Σ_{k∈support} λ_k |kk>` of a
/// perfectly correlated mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionElement {
    pub support: Vec<usize>,
    pub weight: f64,
    pub amplitudes: Vec<Complex64>,
}

impl DecompositionElement {
    /// Normalizes `amplitudes` to unit length.
    pub fn new(support: Vec<usize>, weight: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        if support.len() != amplitudes.len() {
            return Err(Error::InvalidState(
                "support and amplitudes differ in length".into(),
            ));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidState(format!(
                "weight {weight} outside [0, 1]"
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        Ok(Self {
            support,
            weight,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn rank(&self) -> usize {
        self.amplitudes.iter().filter(|a| a.norm() > 0.0).count()
    }

    /// Amplitude matrix `M` with `ψ = Σ M_ij |i>|j>` (diagonal here).
    pub fn amplitude_matrix(&self, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (&k, &a) in self.support.iter().zip(&self.amplitudes) {
            m[(k, k)] = a;
        }
        m
    }
}

/// `Σ_α p_α |ψ_α><ψ_α|` expressed through its coefficient matrix.
///
/// Weights need not sum to one; the trace of the result is `Σ p_α`.
pub fn from_decomposition(
    elements: &[DecompositionElement],
    mode_set: ModeSet,
) -> Result<CorrelatedState> {
    let d = mode_set.len();
    let mut c = DMatrix::zeros(d, d);
    for e in elements {
        if let Some(&k) = e.support.iter().find(|&&k| k >= d) {
            return Err(Error::InvalidState(format!(
                "support index {k} out of range"
            )));
        }
        for (&k, &ak) in e.support.iter().zip(&e.amplitudes) {
            for (&l, &al) in e.support.iter().zip(&e.amplitudes) {
                c[(k, l)] += ak * al.conj() * e.weight;
            }
        }
    }
    CorrelatedState::assemble(c, mode_set)
}

/// `|ψ> = Σ a_k |kk>` normalized: `c_kl = a_k conj(a_l) / Σ|a|²`.
pub fn correlated_pure(amplitudes: &[Complex64], mode_set: ModeSet) -> Result<CorrelatedState> {
    if amplitudes.len() != mode_set.len() {
        return Err(Error::InvalidState(format!(
            "{} amplitudes for {} modes",
            amplitudes.len(),
            mode_set.len()
        )));
    }
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidState(
            "amplitude vector is zero or non-finite".into(),
        ));
    }
    let d = amplitudes.len();
    let c = DMatrix::from_fn(d, d, |k, l| amplitudes[k] * amplitudes[l].conj() / norm);
    CorrelatedState::assemble(c, mode_set)
}

/// Real-amplitude convenience wrapper for [`correlated_pure`].
pub fn correlated_pure_real(amplitudes: &[f64], mode_set: ModeSet) -> Result<CorrelatedState> {
    let a: Vec<_> = amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    correlated_pure(&a, mode_set)
}

/// `|φ_D> = D^{-1/2} Σ |ii>` on the ladder mode set.
pub fn maximally_entangled(dim: usize) -> Result<CorrelatedState> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    correlated_pure_real(&vec![1.0; dim], ModeSet::ladder(dim))
}

/// All `d`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < d - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Components of the bound-saturating mixture: one maximally entangled
/// `d`-mode state per `d`-subset, all with equal weight.
pub fn max_witness_decomposition(dim: usize, d: usize) -> Result<Vec<DecompositionElement>> {
    if d == 0 || d > dim {
        return Err(Error::Domain(format!(
            "need 1 <= d <= D, got d={d}, D={dim}"
        )));
    }
    let all = subsets(dim, d);
    let w = 1.0 / all.len() as f64;
    all.into_iter()
        .map(|s| DecompositionElement::new(s, w, vec![Complex64::new(1.0, 0.0); d]))
        .collect()
}

/// Uniform mixture over every `d`-subset α of `|φ_α^d> = d^{-1/2} Σ_{k∈α} |kk>`.
///
/// Assembled in closed form: each diagonal entry is `1/D` and each
/// off-diagonal entry is `(d-1) / (D (D-1))`.
pub fn max_witness_state(dim: usize, d: usize) -> Result<CorrelatedState> {
    if d == 0 || d > dim {
        return Err(Error::Domain(format!(
            "need 1 <= d <= D, got d={d}, D={dim}"
        )));
    }
    if d == dim {
        return maximally_entangled(dim);
    }
    let diag = 1.0 / dim as f64;
    let off = if d < 2 {
        0.0
    } else {
        binomial(dim - 2, d - 2) / (binomial(dim, d) * d as f64)
    };
    let c = DMatrix::from_fn(dim, dim, |k, l| {
        Complex64::new(if k == l { diag } else { off }, 0.0)
    });
    CorrelatedState::assemble(c, ModeSet::ladder(dim))
}

/// Source of per-mode pair amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileModel {
    /// `a ∝ exp(-|l| / (2 λ_l) - n / (2 λ_n))`; infinite widths are allowed.
    Exponential { lambda_l: f64, lambda_n: f64 },
    /// Per-mode pair rates; `a ∝ sqrt(rate)`.
    Table(Vec<(ModeIndex, f64)>),
}

/// Normalized real amplitudes for every mode in `mode_set`.
pub fn spdc_profile(model: &ProfileModel, mode_set: &ModeSet) -> Result<Vec<Complex64>> {
    let raw: Vec<f64> = match model {
        ProfileModel::Exponential { lambda_l, lambda_n } => {
            if !(*lambda_l > 0.0 && *lambda_n > 0.0) {
                return Err(Error::Domain("profile widths must be positive".into()));
            }
            let expo: Vec<f64> = mode_set
                .modes()
                .iter()
                .map(|m| {
                    -(m.l.unsigned_abs() as f64) / (2.0 * lambda_l) - m.n as f64 / (2.0 * lambda_n)
                })
                .map(|e| if e.is_nan() { 0.0 } else { e })
                .collect();
            let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            expo.iter().map(|e| (e - top).exp()).collect()
        }
        ProfileModel::Table(rows) => mode_set
            .modes()
            .iter()
            .map(|m| {
                rows.iter()
                    .find(|(mode, _)| mode == m)
                    .map(|(_, rate)| *rate)
                    .ok_or_else(|| Error::Ingestion(format!("rate table has no entry for {m}")))
                    .and_then(|rate| {
                        if rate >= 0.0 && rate.is_finite() {
                            Ok(rate.sqrt())
                        } else {
                            Err(Error::Ingestion(format!("invalid rate {rate} for {m}")))
                        }
                    })
            })
            .collect::<Result<_>>()?,
    };
    let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidState(
            "profile has no weight on the mode set".into(),
        ));
    }
    Ok(raw.iter().map(|a| Complex64::new(a / norm, 0.0)).collect())
}

#[derive(Debug, Deserialize)]
struct RateRow {
    n: u32,
    l: i32,
    rate: f64,
}

/// Reads a per-mode rate table with header `n,l,rate`.
pub fn read_rate_table<R: std::io::Read>(reader: R) -> Result<ProfileModel> {
    let mut rdr = csv::Reader::from_reader(reader);
    let rows = rdr
        .deserialize::<RateRow>()
        .map(|r| {
            r.map(|row| (ModeIndex::new(row.n, row.l), row.rate))
                .map_err(|e| Error::Ingestion(format!("rate table: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileModel::Table(rows))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Projects a Hermitian matrix onto the unit-trace PSD cone by clipping
/// negative eigenvalues and renormalizing.
pub fn repair_density(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = m.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState(
            "perturbed matrix has no positive part".into(),
        ));
    }
    let v = &eig.eigenvectors;
    let lam = DMatrix::from_diagonal(&clipped.map(|x| Complex64::new(x / total, 0.0)));
    let mut out = v * lam * v.adjoint();
    hermitize(&mut out);
    let tr = trace_of(&out);
    out.scale_mut(1.0 / tr);
    Ok(out)
}

/// Adds imperfect correlations to a dense two-photon matrix.
///
/// The added term has trace `strength`: a random positive matrix on the
/// cross-correlated kets `|ab>` (a ≠ b), which carries both populations and
/// coherences among them, plus random coherences of size `strength / D²`
/// between the correlated kets `|kk>` and the cross-correlated ones. The sum
/// is then projected back to a unit-trace density matrix.
pub fn perturb_density<R: Rng + ?Sized>(
    rho: &DMatrix<Complex64>,
    dim: usize,
    strength: f64,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::Domain(format!(
            "perturbation strength {strength} must be >= 0"
        )));
    }
    if strength == 0.0 || dim < 2 {
        return Ok(rho.clone());
    }
    let cross: Vec<usize> = (0..dim * dim).filter(|i| i / dim != i % dim).collect();
    let diag: Vec<usize> = (0..dim).map(|k| k * dim + k).collect();
    let m = cross.len();
    let b = DMatrix::from_fn(m, m, |_, _| complex_gaussian(rng));
    let wishart = &b * b.adjoint();
    let wtr = trace_of(&wishart);

    let mut out = rho.clone();
    for (i, &ci) in cross.iter().enumerate() {
        for (j, &cj) in cross.iter().enumerate() {
            out[(ci, cj)] += wishart[(i, j)] * (strength / wtr);
        }
    }
    let coh_scale = strength / (dim * dim) as f64;
    for &kk in &diag {
        for &c in &cross {
            let h = complex_gaussian(rng) * coh_scale;
            out[(kk, c)] += h;
            out[(c, kk)] += h.conj();
        }
    }
    hermitize(&mut out);
    repair_density(&out)
}

/// Embeds `state` into the full two-photon space and perturbs it with
/// [`perturb_density`].
pub fn perturb_state<R: Rng + ?Sized>(
    state: &CorrelatedState,
    strength: f64,
    rng: &mut R,
    cap: usize,
) -> Result<GeneralTwoPhotonState> {
    let base = GeneralTwoPhotonState::from_correlated(state, cap)?;
    let rho = perturb_density(base.rho(), state.dim(), strength, rng)?;
    GeneralTwoPhotonState::with_cap(rho, state.mode_set().clone(), cap)
}

/// Random perfectly correlated mixture whose components have Schmidt rank
/// at most `max_rank`.
///
/// Draws between 1 and 4 components with random supports of size
/// `1..=max_rank`, Dirichlet-like weights and complex Gaussian amplitudes.
pub fn random_decomposition<R: Rng + ?Sized>(
    dim: usize,
    max_rank: usize,
    rng: &mut R,
) -> Vec<DecompositionElement> {
    let count = rng.random_range(1..=4usize);
    let raw: Vec<f64> = (0..count)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter()
        .map(|w| {
            let size = rng.random_range(1..=max_rank.min(dim));
            let mut pool: Vec<usize> = (0..dim).collect();
            let mut support = Vec::with_capacity(size);
            for _ in 0..size {
                let i = rng.random_range(0..pool.len());
                support.push(pool.swap_remove(i));
            }
            support.sort_unstable();
            let amps = (0..size).map(|_| complex_gaussian(rng)).collect();
            DecompositionElement::new(support, w / total, amps)
                .expect("gaussian amplitudes are nonzero almost surely")
        })
        .collect()
}

/// Random full-rank density matrix (Wishart) on `D²` dimensions.
pub fn random_general_state<R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
) -> Result<GeneralTwoPhotonState> {
    let n = dim * dim;
    let b = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let mut rho = &b * b.adjoint();
    hermitize(&mut rho);
    let tr = trace_of(&rho);
    rho.scale_mut(1.0 / tr);
    hermitize(&mut rho);
    GeneralTwoPhotonState::new(rho, ModeSet::ladder(dim))
}
