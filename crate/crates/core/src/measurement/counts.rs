//! Coincidence datasets: simulation, estimation and file formats.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    setting_probabilities, visibility_from_counts, Basis, Outcome, SubspaceSetting,
    VisibilityRecord,
};
use crate::error::{Error, Result};
use crate::modes::{ModeIndex, ModeSet};
use crate::rng::substream;
use crate::states::TwoPhotonState;

/// Counts of one mode pair, indexed `[basis][outcome]`; `None` marks an
/// absent measurement.
pub type PairCounts = [[Option<f64>; 4]; 3];

/// Coincidence counts keyed by `(pair, basis, outcome)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceDataset {
    mode_set: ModeSet,
    /// Expected total number of detected pairs, when known.
    flux: Option<f64>,
    entries: BTreeMap<(usize, usize), PairCounts>,
}

impl CoincidenceDataset {
    pub fn new(mode_set: ModeSet, flux: Option<f64>) -> Self {
        Self {
            mode_set,
            flux,
            entries: BTreeMap::new(),
        }
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.mode_set
    }

    pub fn flux(&self) -> Option<f64> {
        self.flux
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &PairCounts)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries
            .values()
            .map(|p| p.iter().flatten().filter(|c| c.is_some()).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a count. A pair given as `(l, k)` with `k < l` is stored under
    /// `(k, l)`; the z and y outcome labels flip under that exchange while
    /// the x labels do not.
    pub fn insert(
        &mut self,
        k: usize,
        l: usize,
        basis: Basis,
        outcome: Outcome,
        count: f64,
    ) -> Result<()> {
        let d = self.mode_set.len();
        if k == l || k >= d || l >= d {
            return Err(Error::Ingestion(format!("invalid mode pair ({k}, {l})")));
        }
        if !(count >= 0.0 && count.is_finite()) {
            return Err(Error::Ingestion(format!("invalid count {count}")));
        }
        let (key, outcome) = if k < l {
            ((k, l), outcome)
        } else if basis == Basis::X {
            ((l, k), outcome)
        } else {
            ((l, k), outcome.flipped())
        };
        let slot =
            &mut self.entries.entry(key).or_insert([[None; 4]; 3])[basis.index()][outcome.index()];
        if slot.is_some() {
            return Err(Error::Ingestion(format!(
                "duplicate entry for {}, {}, basis {basis}, outcome {outcome}",
                self.label(key.0),
                self.label(key.1)
            )));
        }
        *slot = Some(count);
        Ok(())
    }

    pub fn get(&self, k: usize, l: usize, basis: Basis, outcome: Outcome) -> Option<f64> {
        self.entries.get(&(k, l))?[basis.index()][outcome.index()]
    }

    fn label(&self, k: usize) -> String {
        self.mode_set
            .get(k)
            .map(|m| format!("(n={}, l={})", m.n, m.l))
            .unwrap_or_else(|| format!("#{k}"))
    }

    /// All four counts of one setting, or an error naming the first absent
    /// entry.
    pub fn setting_counts(&self, k: usize, l: usize, basis: Basis) -> Result<[f64; 4]> {
        let missing = |o: Outcome| {
            Error::Ingestion(format!(
                "missing count for modes {} and {}, basis {basis}, outcome {o}",
                self.label(k),
                self.label(l)
            ))
        };
        let pair = self.entries.get(&(k, l));
        let mut out = [0.0; 4];
        for o in Outcome::ALL {
            out[o.index()] = pair
                .and_then(|p| p[basis.index()][o.index()])
                .ok_or_else(|| missing(o))?;
        }
        Ok(out)
    }

    /// Every setting of the full pair grid that lacks at least one count.
    pub fn missing_settings(&self) -> Vec<SubspaceSetting> {
        all_settings(self.mode_set.len())
            .into_iter()
            .filter(|s| self.setting_counts(s.k, s.l, s.basis).is_err())
            .collect()
    }

    /// Normalization scale for subspace weights: the flux if known, else the
    /// z-basis total divided by `D - 1` (exact for correlated states, where
    /// each `|kk>` population is seen by `D - 1` pairs).
    pub fn scale(&self) -> f64 {
        if let Some(f) = self.flux {
            return f;
        }
        let d = self.mode_set.len();
        let z: f64 = self
            .entries
            .values()
            .flat_map(|p| p[Basis::Z.index()].iter().flatten())
            .sum();
        if d > 1 {
            z / (d - 1) as f64
        } else {
            z
        }
    }

    /// Sub-dataset over the modes at `indices`, renumbered in that order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mode_set = self.mode_set.select(indices)?;
        let mut entries = BTreeMap::new();
        for (i, &a) in indices.iter().enumerate() {
            for (j, &b) in indices.iter().enumerate().skip(i + 1) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if let Some(p) = self.entries.get(&(lo, hi)) {
                    let p = if a < b {
                        *p
                    } else {
                        // Reordered pair: z and y labels flip, as in `insert`.
                        let mut q = *p;
                        for basis in [Basis::Z, Basis::Y] {
                            for o in Outcome::ALL {
                                q[basis.index()][o.flipped().index()] = p[basis.index()][o.index()];
                            }
                        }
                        q
                    };
                    entries.insert((i, j), p);
                }
            }
        }
        Ok(Self {
            mode_set,
            flux: self.flux,
            entries,
        })
    }

    /// Copy with every count replaced by `f(count)`; used for resampling.
    pub fn map_counts<F: FnMut(f64) -> f64>(&self, mut f: F) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&key, p)| (key, p.map(|row| row.map(|c| c.map(&mut f)))))
            .collect();
        Self {
            mode_set: self.mode_set.clone(),
            flux: self.flux,
            entries,
        }
    }
}

/// All `3 · D(D-1)/2` settings, pairs in lexicographic order.
pub fn all_settings(dim: usize) -> Vec<SubspaceSetting> {
    (0..dim)
        .flat_map(|k| {
            (k + 1..dim).flat_map(move |l| Basis::ALL.map(|basis| SubspaceSetting { k, l, basis }))
        })
        .collect()
}

/// Forward-model switches for [`simulate_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulationOptions {
    /// Write expected counts `flux · p` instead of Poisson draws.
    pub expectation: bool,
    /// Draw each two-photon population `|ab>` once and reuse it in every
    /// z-basis setting that contains it.
    pub share_populations: bool,
}

const POPULATION_TAG: u64 = 0x706f_7075;

fn draw(mean: f64, seed: u64, tags: &[u64]) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut rng = substream(seed, tags);
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(&mut rng)
}

/// Simulates coincidence counts `~ Poisson(flux · p)` for every setting.
///
/// Probabilities come from the un-normalized full state, so subspace weights
/// show up in the rates. Each setting draws from its own substream keyed by
/// `(seed, k, l, basis)`.
pub fn simulate_counts<S: TwoPhotonState + Sync + ?Sized>(
    state: &S,
    settings: &[SubspaceSetting],
    flux: f64,
    seed: u64,
    options: SimulationOptions,
) -> Result<CoincidenceDataset> {
    if !(flux > 0.0 && flux.is_finite()) {
        return Err(Error::Domain(format!("flux must be positive, got {flux}")));
    }
    let dim = state.dim();
    if let Some(s) = settings.iter().find(|s| s.k >= s.l || s.l >= dim) {
        return Err(Error::Domain(format!(
            "setting ({}, {}) invalid for {dim} modes",
            s.k, s.l
        )));
    }

    let sampled: Vec<(SubspaceSetting, [f64; 4])> = settings
        .par_iter()
        .map(|&s| {
            let probs = setting_probabilities(state, s);
            let counts = if options.expectation {
                probs.map(|p| p * flux)
            } else if options.share_populations && s.basis == Basis::Z {
                let kets = [(s.k, s.k), (s.k, s.l), (s.l, s.k), (s.l, s.l)];
                let mut c = [0.0; 4];
                for (i, &(a, b)) in kets.iter().enumerate() {
                    c[i] = draw(probs[i] * flux, seed, &[POPULATION_TAG, a as u64, b as u64]);
                }
                c
            } else {
                let mut rng = substream(seed, &[s.k as u64, s.l as u64, s.basis.index() as u64]);
                probs.map(|p| {
                    if p * flux <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(p * flux)
                            .expect("positive finite mean")
                            .sample(&mut rng)
                    }
                })
            };
            (s, counts)
        })
        .collect();

    let mut data = CoincidenceDataset::new(state.mode_set().clone(), Some(flux));
    for (s, counts) in sampled {
        for o in Outcome::ALL {
            data.insert(s.k, s.l, s.basis, o, counts[o.index()])?;
        }
    }
    Ok(data)
}

/// Per-basis visibilities of the pair `(k, l)` from its twelve counts.
///
/// Each basis is normalized by its own four counts; the subspace weight is
/// the z-basis total over [`CoincidenceDataset::scale`].
pub fn estimate_visibilities(
    data: &CoincidenceDataset,
    k: usize,
    l: usize,
) -> Result<VisibilityRecord> {
    let (k, l) = if k < l { (k, l) } else { (l, k) };
    let [x, y, z] = Basis::ALL.map(|b| data.setting_counts(k, l, b));
    let (x, y, z) = (x?, y?, z?);
    let scale = data.scale();
    let z_total: f64 = z.iter().sum();
    Ok(VisibilityRecord {
        v_x: visibility_from_counts(&x),
        v_y: visibility_from_counts(&y),
        v_z: visibility_from_counts(&z),
        n_ab: if scale > 0.0 { z_total / scale } else { 0.0 },
    })
}

/// One line of the coincidence CSV (`na,la,nb,lb,basis,outcome,count`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub na: u32,
    pub la: i32,
    pub nb: u32,
    pub lb: i32,
    pub basis: Basis,
    pub outcome: Outcome,
    pub count: f64,
}

fn rows(data: &CoincidenceDataset) -> Vec<CountRow> {
    let mut out = Vec::with_capacity(data.len());
    for (&(k, l), pair) in &data.entries {
        let a = data.mode_set.get(k).expect("stored pairs are in range");
        let b = data.mode_set.get(l).expect("stored pairs are in range");
        for basis in Basis::ALL {
            for o in Outcome::ALL {
                if let Some(count) = pair[basis.index()][o.index()] {
                    out.push(CountRow {
                        na: a.n,
                        la: a.l,
                        nb: b.n,
                        lb: b.l,
                        basis,
                        outcome: o,
                        count,
                    });
                }
            }
        }
    }
    out
}

fn from_rows(
    rows: Vec<CountRow>,
    mode_set: Option<ModeSet>,
    flux: Option<f64>,
) -> Result<CoincidenceDataset> {
    let mode_set = match mode_set {
        Some(m) => m,
        None => {
            let mut modes: Vec<ModeIndex> = rows
                .iter()
                .flat_map(|r| [ModeIndex::new(r.na, r.la), ModeIndex::new(r.nb, r.lb)])
                .collect();
            modes.sort();
            modes.dedup();
            ModeSet::new(modes)?
        }
    };
    let mut data = CoincidenceDataset::new(mode_set, flux);
    for r in rows {
        let a = ModeIndex::new(r.na, r.la);
        let b = ModeIndex::new(r.nb, r.lb);
        let k = data
            .mode_set
            .position(a)
            .ok_or_else(|| Error::Ingestion(format!("mode {a} not in the mode set")))?;
        let l = data
            .mode_set
            .position(b)
            .ok_or_else(|| Error::Ingestion(format!("mode {b} not in the mode set")))?;
        data.insert(k, l, r.basis, r.outcome, r.count)?;
    }
    Ok(data)
}

/// Writes the coincidence CSV with header `na,la,nb,lb,basis,outcome,count`.
pub fn write_dataset_csv<W: Write>(data: &CoincidenceDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows(data) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the coincidence CSV. Without an explicit mode set the modes are
/// collected from the rows and sorted by `n`, then `l`.
pub fn read_dataset_csv<R: Read>(
    reader: R,
    mode_set: Option<ModeSet>,
) -> Result<CoincidenceDataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = ["na", "la", "nb", "lb", "basis", "outcome", "count"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Ingestion(format!(
            "unexpected CSV header '{}', expected '{}'",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    let rows = rdr
        .deserialize::<CountRow>()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Ingestion(format!("row {}: {e}", i + 2))))
        .collect::<Result<Vec<_>>>()?;
    from_rows(rows, mode_set, None)
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    modes: ModeSet,
    flux: Option<f64>,
    rows: Vec<CountRow>,
}

/// JSON mirror of the CSV: `{modes, flux, rows: [{na, la, nb, lb, basis, outcome, count}]}`.
pub fn write_dataset_json<W: Write>(data: &CoincidenceDataset, writer: W) -> Result<()> {
    let doc = DatasetJson {
        modes: data.mode_set.clone(),
        flux: data.flux,
        rows: rows(data),
    };
    serde_json::to_writer(writer, &doc)?;
    Ok(())
}

pub fn read_dataset_json<R: Read>(reader: R) -> Result<CoincidenceDataset> {
    let doc: DatasetJson = serde_json::from_reader(reader)
        .map_err(|e| Error::Ingestion(format!("dataset JSON: {e}")))?;
    from_rows(doc.rows, Some(doc.modes), doc.flux)
}
