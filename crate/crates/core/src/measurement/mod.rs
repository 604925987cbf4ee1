//! Two-dimensional subspace measurements.
//!
//! For a mode pair `k < l` the three mutually unbiased bases are the
//! eigenbases of the subspace Pauli operators
//!
//! ```text
//! σx = |k><l| + |l><k|,   σy = i|k><l| - i|l><k|,   σz = |k><k| - |l><l|
//! ```
//!
//! applied identically to both photons. Local 4×4 blocks are ordered
//! `[|kk>, |kl>, |lk>, |ll>]`.

mod counts;

pub use counts::{
    all_settings, estimate_visibilities, read_dataset_csv, read_dataset_json, simulate_counts,
    write_dataset_csv, write_dataset_json, CoincidenceDataset, CountRow, PairCounts,
    SimulationOptions,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::TwoPhotonState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 2×2 Pauli matrix on `span{|k>, |l>}`.
    pub fn pauli(self) -> Matrix2<Complex64> {
        match self {
            Basis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
            Basis::Y => Matrix2::new(ZERO, I, -I, ZERO),
            Basis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        }
    }

    /// Local measurement states `(|+>, |->)` in the `(k, l)` coordinates.
    ///
    /// The y states are `(|k> ± i|l>)/√2`; with `σy` as defined above `|+>`
    /// is its `-1` eigenvector. Only `σy ⊗ σy` enters any observable, so the
    /// labeling convention cancels.
    pub fn states(self) -> [Vector2<Complex64>; 2] {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            Basis::Z => [Vector2::new(ONE, ZERO), Vector2::new(ZERO, ONE)],
            Basis::X => [Vector2::new(h, h), Vector2::new(h, -h)],
            Basis::Y => [Vector2::new(h, h * I), Vector2::new(h, -h * I)],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        })
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Basis::X),
            "y" => Ok(Basis::Y),
            "z" => Ok(Basis::Z),
            other => Err(Error::Ingestion(format!("unknown basis '{other}'"))),
        }
    }
}

/// Joint outcome `(photon A, photon B)` of a subspace measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "pp")]
    PlusPlus,
    #[serde(rename = "pm")]
    PlusMinus,
    #[serde(rename = "mp")]
    MinusPlus,
    #[serde(rename = "mm")]
    MinusMinus,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::PlusPlus,
        Outcome::PlusMinus,
        Outcome::MinusPlus,
        Outcome::MinusMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(a, b)` with 0 for `+` and 1 for `-`.
    pub fn signs(self) -> (usize, usize) {
        let i = self.index();
        (i / 2, i % 2)
    }

    /// Eigenvalue product `s·t` of the two outcomes.
    pub fn parity(self) -> f64 {
        match self {
            Outcome::PlusPlus | Outcome::MinusMinus => 1.0,
            Outcome::PlusMinus | Outcome::MinusPlus => -1.0,
        }
    }

    /// Outcome seen when the roles of `+` and `-` are exchanged on both photons.
    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::PlusPlus => Outcome::MinusMinus,
            Outcome::PlusMinus => Outcome::MinusPlus,
            Outcome::MinusPlus => Outcome::PlusMinus,
            Outcome::MinusMinus => Outcome::PlusPlus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::PlusPlus => "pp",
            Outcome::PlusMinus => "pm",
            Outcome::MinusPlus => "mp",
            Outcome::MinusMinus => "mm",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pp" => Ok(Outcome::PlusPlus),
            "pm" => Ok(Outcome::PlusMinus),
            "mp" => Ok(Outcome::MinusPlus),
            "mm" => Ok(Outcome::MinusMinus),
            other => Err(Error::Ingestion(format!("unknown outcome '{other}'"))),
        }
    }
}

/// One basis setting on the mode pair `(k, l)`, `k < l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceSetting {
    pub k: usize,
    pub l: usize,
    pub basis: Basis,
}

impl SubspaceSetting {
    pub fn new(k: usize, l: usize, basis: Basis) -> Result<Self> {
        if k >= l {
            return Err(Error::Domain(format!(
                "setting needs k < l, got ({k}, {l})"
            )));
        }
        Ok(Self { k, l, basis })
    }
}

/// Normalized subspace visibilities and the weight of the subspace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VisibilityRecord {
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
    pub n_ab: f64,
}

impl VisibilityRecord {
    /// `V_x + V_y + V_z`.
    pub fn sum(&self) -> f64 {
        self.v_x + self.v_y + self.v_z
    }

    pub fn get(&self, basis: Basis) -> f64 {
        match basis {
            Basis::X => self.v_x,
            Basis::Y => self.v_y,
            Basis::Z => self.v_z,
        }
    }
}

fn check_pair(k: usize, l: usize, dim: usize) -> Result<()> {
    if k == l {
        return Err(Error::Domain(format!(
            "subspace needs two distinct modes, got {k} twice"
        )));
    }
    if k >= dim || l >= dim {
        return Err(Error::Domain(format!(
            "pair ({k}, {l}) outside {dim} modes"
        )));
    }
    Ok(())
}

/// `σ_axis^{kl}` as a `D × D` operator on the single-photon space.
pub fn subspace_pauli(k: usize, l: usize, axis: Basis, dim: usize) -> Result<DMatrix<Complex64>> {
    check_pair(k, l, dim)?;
    let p = axis.pauli();
    let idx = [k, l];
    let mut op = DMatrix::zeros(dim, dim);
    for (i, &a) in idx.iter().enumerate() {
        for (j, &b) in idx.iter().enumerate() {
            op[(a, b)] = p[(i, j)];
        }
    }
    Ok(op)
}

fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `σz⊗σz - σy⊗σy + σx⊗σx` on the local 4×4 block.
pub fn correlation_operator() -> Matrix4<Complex64> {
    let [x, y, z] = Basis::ALL.map(|b| b.pauli());
    kron2(&z, &z) - kron2(&y, &y) + kron2(&x, &x)
}

/// Un-normalized 4×4 block of `state` on `span{|kk>,|kl>,|lk>,|ll>}`.
pub fn subspace_block<S: TwoPhotonState + ?Sized>(
    state: &S,
    k: usize,
    l: usize,
) -> Matrix4<Complex64> {
    let kets = [(k, k), (k, l), (l, k), (l, l)];
    Matrix4::from_fn(|r, c| {
        let (a, b) = kets[r];
        let (cc, d) = kets[c];
        state.element(a, b, cc, d)
    })
}

/// Normalized subspace density matrix `ρ^{kl}` and its weight `N_kl`.
///
/// A subspace without population yields the zero matrix and `N_kl = 0`.
pub fn subspace_density<S: TwoPhotonState + ?Sized>(
    state: &S,
    k: usize,
    l: usize,
) -> Result<(Matrix4<Complex64>, f64)> {
    check_pair(k, l, state.dim())?;
    let block = subspace_block(state, k, l);
    let n = block.trace().re;
    if n <= 0.0 {
        return Ok((Matrix4::zeros(), 0.0));
    }
    Ok((block / Complex64::new(n, 0.0), n))
}

fn tr_prod(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> Complex64 {
    (a * b).trace()
}

/// `V_i = |Tr((σ_i ⊗ σ_i) ρ^{kl})|` for the three bases.
pub fn visibilities<S: TwoPhotonState + ?Sized>(
    state: &S,
    k: usize,
    l: usize,
) -> Result<VisibilityRecord> {
    let (rho, n) = subspace_density(state, k, l)?;
    if n == 0.0 {
        return Ok(VisibilityRecord::default());
    }
    let v = |b: Basis| {
        let p = b.pauli();
        tr_prod(&kron2(&p, &p), &rho).norm()
    };
    Ok(VisibilityRecord {
        v_x: v(Basis::X),
        v_y: v(Basis::Y),
        v_z: v(Basis::Z),
        n_ab: n,
    })
}

/// Correlation functional on the normalized subspace state; 0 for an empty
/// subspace.
pub fn g_value<S: TwoPhotonState + ?Sized>(state: &S, k: usize, l: usize) -> Result<f64> {
    let (rho, n) = subspace_density(state, k, l)?;
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok(tr_prod(&correlation_operator(), &rho).re)
}

/// Same functional evaluated on the un-normalized state.
pub fn f_value<S: TwoPhotonState + ?Sized>(state: &S, k: usize, l: usize) -> Result<f64> {
    check_pair(k, l, state.dim())?;
    Ok(tr_prod(&correlation_operator(), &subspace_block(state, k, l)).re)
}

/// Single-photon measurement state embedded in `D` dimensions.
pub fn embedded_state(
    k: usize,
    l: usize,
    local: &Vector2<Complex64>,
    dim: usize,
) -> nalgebra::DVector<Complex64> {
    let mut v = nalgebra::DVector::zeros(dim);
    v[k] = local[0];
    v[l] = local[1];
    v
}

/// An outcome with the photon A and photon B kets it projects onto.
pub type OutcomeKets = (
    Outcome,
    nalgebra::DVector<Complex64>,
    nalgebra::DVector<Complex64>,
);

/// The four coincidence projectors `|s t><s t|` of a basis setting, given
/// as the pair of single-photon vectors `(|s>, |t>)` per outcome.
pub fn projector_set(k: usize, l: usize, basis: Basis, dim: usize) -> Result<Vec<OutcomeKets>> {
    if k >= l {
        return Err(Error::Domain(format!(
            "projector set needs k < l, got ({k}, {l})"
        )));
    }
    check_pair(k, l, dim)?;
    let states = basis.states();
    Ok(Outcome::ALL
        .iter()
        .map(|&o| {
            let (s, t) = o.signs();
            (
                o,
                embedded_state(k, l, &states[s], dim),
                embedded_state(k, l, &states[t], dim),
            )
        })
        .collect())
}

/// `<s t| ρ |s t>` for local measurement vectors on the pair `(k, l)`,
/// evaluated on the full (un-normalized) state.
pub fn outcome_probability<S: TwoPhotonState + ?Sized>(
    state: &S,
    k: usize,
    l: usize,
    s: &Vector2<Complex64>,
    t: &Vector2<Complex64>,
) -> f64 {
    let idx = [k, l];
    let mut acc = ZERO;
    for a in 0..2 {
        for b in 0..2 {
            let bra = (s[a] * t[b]).conj();
            if bra == ZERO {
                continue;
            }
            for c in 0..2 {
                for d in 0..2 {
                    let ket = s[c] * t[d];
                    if ket == ZERO {
                        continue;
                    }
                    acc += bra * state.element(idx[a], idx[b], idx[c], idx[d]) * ket;
                }
            }
        }
    }
    acc.re.max(0.0)
}

/// Exact outcome probabilities of one setting, in [`Outcome::ALL`] order.
pub fn setting_probabilities<S: TwoPhotonState + ?Sized>(
    state: &S,
    setting: SubspaceSetting,
) -> [f64; 4] {
    let st = setting.basis.states();
    Outcome::ALL.map(|o| {
        let (a, b) = o.signs();
        outcome_probability(state, setting.k, setting.l, &st[a], &st[b])
    })
}

/// `|C(++) + C(--) - C(+-) - C(-+)| / ΣC`, or 0 when no counts.
pub fn visibility_from_counts(counts: &[f64; 4]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let signed: f64 = Outcome::ALL
        .iter()
        .map(|o| o.parity() * counts[o.index()])
        .sum();
    signed.abs() / total
}
