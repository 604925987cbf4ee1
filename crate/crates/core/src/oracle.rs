//! Brute-force ground truth at small dimension.
//!
//! Everything here works on the dense `D² × D²` density matrix with
//! operators assembled by explicit Kronecker products in the full space. No
//! closed-form pair formulas are used, so these routines serve as an
//! independent check on the fast paths in [`crate::measurement`] and
//! [`crate::witness`].

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measurement::{subspace_pauli, Basis, SubspaceSetting};
use crate::modes::ModeSet;
use crate::rng::substream;
use crate::states::{
    from_decomposition, random_decomposition, CorrelatedState, TwoPhotonState, DEFAULT_DIM_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest `D` for which dense `D² × D²` work is allowed.
    pub d_cap: usize,
    /// Relative singular-value threshold for rank decisions.
    pub tol: f64,
    /// Default budget for randomized searches.
    pub search_iters: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            d_cap: DEFAULT_DIM_CAP,
            tol: 1e-10,
            search_iters: 10_000,
        }
    }
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `Tr(A B)` without forming the product.
fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let aij = a[(i, j)];
            if aij.re != 0.0 || aij.im != 0.0 {
                acc += aij * b[(j, i)];
            }
        }
    }
    acc
}

/// `σz⊗σz - σy⊗σy + σx⊗σx` for the pair `(k, l)` on the full two-photon space.
pub fn full_correlation_operator(k: usize, l: usize, dim: usize) -> Result<DMatrix<Complex64>> {
    let x = subspace_pauli(k, l, Basis::X, dim)?;
    let y = subspace_pauli(k, l, Basis::Y, dim)?;
    let z = subspace_pauli(k, l, Basis::Z, dim)?;
    Ok(kron(&z, &z) - kron(&y, &y) + kron(&x, &x))
}

/// `(|k><k| + |l><l|)^{⊗2}` on the full two-photon space.
pub fn pair_projector(k: usize, l: usize, dim: usize) -> DMatrix<Complex64> {
    let mut p = DMatrix::zeros(dim, dim);
    p[(k, k)] = Complex64::new(1.0, 0.0);
    p[(l, l)] = Complex64::new(1.0, 0.0);
    kron(&p, &p)
}

fn pairs(dim: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..dim).flat_map(move |k| (k + 1..dim).map(move |l| (k, l)))
}

fn dense<S: TwoPhotonState + ?Sized>(state: &S, cfg: &OracleConfig) -> Result<DMatrix<Complex64>> {
    state.to_dense(cfg.d_cap)
}

/// `C(ρ) = Σ_{k<l} g(ρ^{kl})` with every `ρ^{kl} = P ρ P / N_kl` formed by
/// explicit projection in the full space; empty subspaces contribute 0.
pub fn brute_force_witness_dense(rho: &DMatrix<Complex64>, dim: usize) -> Result<f64> {
    let mut total = 0.0;
    for (k, l) in pairs(dim) {
        let p = pair_projector(k, l, dim);
        let projected = &p * rho * &p;
        let n = projected.trace().re;
        if n <= 0.0 {
            continue;
        }
        let sub = projected / Complex64::new(n, 0.0);
        total += trace_product(&full_correlation_operator(k, l, dim)?, &sub).re;
    }
    Ok(total)
}

pub fn brute_force_witness<S: TwoPhotonState + ?Sized>(
    state: &S,
    cfg: &OracleConfig,
) -> Result<f64> {
    let rho = dense(state, cfg)?;
    brute_force_witness_dense(&rho, state.dim())
}

/// `f(ρ) = Σ_{k<l} Tr(O_kl ρ)` on the un-normalized state.
pub fn f_total<S: TwoPhotonState + ?Sized>(state: &S, cfg: &OracleConfig) -> Result<f64> {
    let rho = dense(state, cfg)?;
    let dim = state.dim();
    pairs(dim)
        .map(|(k, l)| Ok(trace_product(&full_correlation_operator(k, l, dim)?, &rho).re))
        .sum()
}

/// `((k, l), f_kl, N_kl)`.
pub type PairTerm = ((usize, usize), f64, f64);

/// Per-pair `(f_kl, N_kl)` from the dense matrix.
pub fn pair_f_and_weight<S: TwoPhotonState + ?Sized>(
    state: &S,
    cfg: &OracleConfig,
) -> Result<Vec<PairTerm>> {
    let rho = dense(state, cfg)?;
    let dim = state.dim();
    pairs(dim)
        .map(|(k, l)| {
            let f = trace_product(&full_correlation_operator(k, l, dim)?, &rho).re;
            let n = trace_product(&pair_projector(k, l, dim), &rho).re;
            Ok(((k, l), f, n))
        })
        .collect()
}

/// Number of singular values above `tol` times the largest one.
pub fn schmidt_rank(amplitudes: &DMatrix<Complex64>, tol: f64) -> Result<usize> {
    let sv = amplitudes.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::InvalidState(
            "zero amplitude matrix has no Schmidt rank".into(),
        ));
    }
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

/// Outcome of [`random_rank_d_search`].
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub max_witness: f64,
    pub best: CorrelatedState,
    pub iters: usize,
}

/// Samples random mixtures of rank-≤d perfectly correlated pure states and
/// reports the largest brute-force witness seen.
///
/// `pool` states are evaluated in addition to the random draws. Draw `i`
/// uses the substream `(seed, i)`.
pub fn random_rank_d_search(
    dim: usize,
    d: usize,
    iters: usize,
    seed: u64,
    pool: &[CorrelatedState],
    cfg: &OracleConfig,
) -> Result<SearchResult> {
    if dim > cfg.d_cap {
        return Err(Error::Capacity {
            dim,
            cap: cfg.d_cap,
        });
    }
    if d == 0 || d > dim {
        return Err(Error::Domain(format!(
            "need 1 <= d <= D, got d={d}, D={dim}"
        )));
    }
    let mut candidates: Vec<(f64, usize, CorrelatedState)> = (0..iters)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[i as u64]);
            let elems = random_decomposition(dim, d, &mut rng);
            let state = from_decomposition(&elems, ModeSet::ladder(dim))?;
            Ok((brute_force_witness(&state, cfg)?, i, state))
        })
        .collect::<Result<Vec<_>>>()?;
    for (j, s) in pool.iter().enumerate() {
        candidates.push((brute_force_witness(s, cfg)?, iters + j, s.clone()));
    }
    let (max_witness, _, best) = candidates
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .ok_or_else(|| Error::Domain("empty search".into()))?;
    Ok(SearchResult {
        max_witness,
        best,
        iters,
    })
}

/// Two-outcome measurement on one photon within a pair subspace, as 2×2
/// effects in the `(k, l)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPovm {
    pub plus: Matrix2<Complex64>,
    pub minus: Matrix2<Complex64>,
}

impl LocalPovm {
    /// Rank-one projectors onto the basis states.
    pub fn ideal(basis: Basis) -> Self {
        let [p, m] = basis.states();
        Self {
            plus: p * p.adjoint(),
            minus: m * m.adjoint(),
        }
    }

    /// `Π+ -> (1-a) Π+ + a Π-`, `Π- -> (1-b) Π- + b Π+`.
    pub fn with_crosstalk(basis: Basis, a: f64, b: f64) -> Self {
        let ideal = Self::ideal(basis);
        let (a, b) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let one = Complex64::new(1.0, 0.0);
        Self {
            plus: ideal.plus * (one - a) + ideal.minus * a,
            minus: ideal.minus * (one - b) + ideal.plus * b,
        }
    }
}

fn embed(local: &Matrix2<Complex64>, k: usize, l: usize, dim: usize) -> DMatrix<Complex64> {
    let idx = [k, l];
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..2 {
        for j in 0..2 {
            m[(idx[i], idx[j])] = local[(i, j)];
        }
    }
    m
}

/// Signed subspace-normalized correlation `E/S` of one setting measured with
/// the given effects on photons A and B; 0 when nothing is detected.
pub fn measured_correlation(
    rho: &DMatrix<Complex64>,
    dim: usize,
    setting: SubspaceSetting,
    a: &LocalPovm,
    b: &LocalPovm,
) -> f64 {
    let (k, l) = (setting.k, setting.l);
    let diff_a = embed(&(a.plus - a.minus), k, l, dim);
    let diff_b = embed(&(b.plus - b.minus), k, l, dim);
    let sum_a = embed(&(a.plus + a.minus), k, l, dim);
    let sum_b = embed(&(b.plus + b.minus), k, l, dim);
    let e = trace_product(&kron(&diff_a, &diff_b), rho).re;
    let s = trace_product(&kron(&sum_a, &sum_b), rho).re;
    if s <= 0.0 {
        0.0
    } else {
        e / s
    }
}

/// `Σ_{k<l} (e_z - e_y + e_x)` where every correlation is measured with the
/// effects returned by `povm(setting, photon)` (photon 0 = A, 1 = B).
///
/// With ideal projectors this reproduces [`brute_force_witness_dense`].
pub fn measured_witness<F>(rho: &DMatrix<Complex64>, dim: usize, povm: F) -> f64
where
    F: Fn(SubspaceSetting, usize) -> LocalPovm,
{
    let mut total = 0.0;
    for (k, l) in pairs(dim) {
        for basis in Basis::ALL {
            let s = SubspaceSetting { k, l, basis };
            let e = measured_correlation(rho, dim, s, &povm(s, 0), &povm(s, 1));
            total += if basis == Basis::Y { -e } else { e };
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{
        correlated_pure_real, max_witness_decomposition, max_witness_state, maximally_entangled,
        random_general_state,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn max_witness_state_values() {
        let w = brute_force_witness(&max_witness_state(4, 2).unwrap(), &cfg()).unwrap();
        assert!((w - 10.0).abs() < 1e-9);
        let w = brute_force_witness(&max_witness_state(3, 2).unwrap(), &cfg()).unwrap();
        assert!((w - 6.0).abs() < 1e-9);
        let w = brute_force_witness(&max_witness_state(5, 3).unwrap(), &cfg()).unwrap();
        assert!((w - 20.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_error() {
        let s = maximally_entangled(9).unwrap();
        assert!(matches!(
            brute_force_witness(&s, &cfg()),
            Err(Error::Capacity { .. })
        ));
        assert!(random_rank_d_search(9, 2, 1, 0, &[], &cfg()).is_err());
    }

    #[test]
    fn schmidt_ranks() {
        let mut prod = DMatrix::zeros(3, 3);
        prod[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(schmidt_rank(&prod, 1e-10).unwrap(), 1);
        let id = DMatrix::<Complex64>::identity(5, 5) / Complex64::new(5f64.sqrt(), 0.0);
        assert_eq!(schmidt_rank(&id, 1e-10).unwrap(), 5);
        for e in max_witness_decomposition(5, 3).unwrap() {
            assert_eq!(schmidt_rank(&e.amplitude_matrix(5), 1e-10).unwrap(), 3);
        }
        assert!(schmidt_rank(&DMatrix::zeros(2, 2), 1e-10).is_err());
    }

    #[test]
    fn schmidt_rank_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let elems = crate::states::random_decomposition(5, 3, &mut rng);
        let m = elems[0].amplitude_matrix(5);
        let r = schmidt_rank(&m, 1e-10).unwrap();
        // Unitaries from the QR factors of random complex Gaussian matrices.
        let rand_unitary = |rng: &mut ChaCha8Rng| {
            let g = DMatrix::from_fn(5, 5, |_, _| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                Complex64::new(re, im)
            });
            g.qr().q()
        };
        let u = rand_unitary(&mut rng);
        let v = rand_unitary(&mut rng);
        assert_eq!(schmidt_rank(&(&u * &m * v.adjoint()), 1e-10).unwrap(), r);
    }

    #[test]
    fn f_total_examples() {
        for dim in 2..=6 {
            let s = maximally_entangled(dim).unwrap();
            let f = f_total(&s, &cfg()).unwrap();
            assert!((f - 3.0 * (dim as f64 - 1.0)).abs() < 1e-9);
        }
        let phi2 = correlated_pure_real(&[1.0, 1.0, 0.0, 0.0], ModeSet::ladder(4)).unwrap();
        assert!((f_total(&phi2, &cfg()).unwrap() - 5.0).abs() < 1e-12);
        let prod = correlated_pure_real(&[1.0, 0.0, 0.0], ModeSet::ladder(3)).unwrap();
        assert!((f_total(&prod, &cfg()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn search_examples() {
        let r = random_rank_d_search(3, 1, 2000, 1, &[], &cfg()).unwrap();
        assert!(r.max_witness <= 3.0 + 1e-9);
        let r = random_rank_d_search(2, 2, 2000, 1, &[maximally_entangled(2).unwrap()], &cfg())
            .unwrap();
        assert!((r.max_witness - 3.0).abs() < 1e-9);
        let pool = [max_witness_state(4, 2).unwrap()];
        let r = random_rank_d_search(4, 2, 5000, 2, &pool, &cfg()).unwrap();
        assert!(r.max_witness <= 10.0 + 1e-9);
        assert!(r.max_witness >= 10.0 - 0.1);
    }

    #[test]
    fn ideal_measurement_reproduces_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for dim in 2..=4 {
            let s = random_general_state(dim, &mut rng).unwrap();
            let rho = s.rho();
            let a = brute_force_witness(&s, &cfg()).unwrap();
            let b = measured_witness(rho, dim, |st, _| LocalPovm::ideal(st.basis));
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn crosstalk_shrinks_correlations() {
        let s = correlated_pure_real(&[0.5, 0.07, 0.01, 0.01], ModeSet::ladder(4)).unwrap();
        let rho = s.to_dense(8).unwrap();
        let w0 = measured_witness(&rho, 4, |st, _| LocalPovm::ideal(st.basis));
        let w1 = measured_witness(&rho, 4, |st, p| {
            LocalPovm::with_crosstalk(st.basis, 0.02 * (p + 1) as f64, 0.01)
        });
        assert!(w1 < w0);
    }
}
