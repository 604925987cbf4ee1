use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use lgwitness::measurement::{
    all_settings, simulate_counts, write_dataset_csv, write_dataset_json, SimulationOptions,
};
use lgwitness::oracle::{brute_force_witness, random_rank_d_search, OracleConfig};
use lgwitness::states::max_witness_state;
use lgwitness::witness::{
    bound, exhaustive_subset, greedy_subset, monte_carlo_ci, robustness_study, witness_sum,
    PerturbationKind, SubsetSearch, EXHAUSTIVE_MAX_DIM,
};
use lgwitness::{ModeIndex, ModeSet, State, TwoPhotonState, VisibilityTable, WitnessReport};
use serde::Serialize;

use crate::failure::{CliResult, Failure};
use crate::inputs;
use crate::settings::{Format, Settings};

/// Writes to `--output`, or stdout when it is absent.
fn emit<F>(output: Option<&Path>, write: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            match write(&mut w).and_then(|()| w.flush().map_err(Failure::from)) {
                // A closed pipe (`| head`) is not a failure of the command.
                Err(f) if f.io_kind == Some(io::ErrorKind::BrokenPipe) => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> Failure {
    lgwitness::Error::Csv(e).into()
}

pub fn simulate(s: &Settings) -> CliResult<()> {
    s.validate_paths(false)?;
    if s.dry_run {
        let dim = match inputs::mode_set(s)? {
            Some(m) => m.len(),
            None => inputs::state(s)?.dim(),
        };
        let pairs = dim * dim.saturating_sub(1) / 2;
        println!(
            "{} measurement settings ({pairs} mode pairs x 3 bases x 4 outcomes)",
            pairs * 12
        );
        return Ok(());
    }
    let flux = s
        .flux
        .ok_or_else(|| Failure::config("--flux is required"))?;
    let seed = if s.expectation {
        s.seed.unwrap_or(0)
    } else {
        s.require_seed("for sampled counts (or pass --expectation)")?
    };
    let state = inputs::state(s)?;
    let options = SimulationOptions {
        expectation: s.expectation,
        share_populations: s.share_populations,
    };
    let data = simulate_counts(&state, &all_settings(state.dim()), flux, seed, options)?;
    emit(s.output.as_deref(), |w| {
        match s.format.unwrap_or(Format::Csv) {
            Format::Csv => write_dataset_csv(&data, w)?,
            Format::Json => {
                write_dataset_json(&data, &mut *w)?;
                writeln!(w)?;
            }
        }
        Ok(())
    })
}

pub fn certify(s: &Settings) -> CliResult<()> {
    s.validate_paths(false)?;
    let resamples = s.resamples.unwrap_or(0);
    let seed = if resamples > 0 {
        Some(s.require_seed("when --resamples is set")?)
    } else {
        None
    };
    let data = inputs::dataset(s)?;
    let table = VisibilityTable::from_dataset(&data)?;
    let ci = match seed {
        Some(seed) => Some((monte_carlo_ci(&data, resamples, seed)?.1, resamples)),
        None => None,
    };
    let trajectory = greedy_subset(&table).trajectory();
    let report = WitnessReport::build(&table, ci, trajectory)?;
    emit(s.output.as_deref(), |w| write_json(w, &report))?;
    eprintln!(
        "W = {:.6}, D = {}, certified d = {}",
        report.w, report.dim, report.certified_d
    );
    report.check_integrity()?;
    Ok(())
}

#[derive(Serialize)]
struct OptimizeOutput {
    greedy: SubsetSearch,
    best_modes: Vec<ModeIndex>,
    exhaustive: Option<ExhaustiveOutput>,
}

#[derive(Serialize)]
struct ExhaustiveOutput {
    subset: Vec<usize>,
    modes: Vec<ModeIndex>,
    certified_d: usize,
    witness: f64,
}

fn modes_at(set: &ModeSet, indices: &[usize]) -> Vec<ModeIndex> {
    indices.iter().filter_map(|&i| set.get(i)).collect()
}

pub fn optimize(s: &Settings) -> CliResult<()> {
    s.validate_paths(false)?;
    let (table, _) = inputs::table(s)?;
    let greedy = greedy_subset(&table);
    let exhaustive = if table.dim() <= EXHAUSTIVE_MAX_DIM && table.dim() >= 2 {
        let (subset, certified_d, witness) = exhaustive_subset(&table)?;
        Some(ExhaustiveOutput {
            modes: modes_at(table.mode_set(), &subset),
            subset,
            certified_d,
            witness,
        })
    } else {
        None
    };
    let out = OptimizeOutput {
        best_modes: modes_at(table.mode_set(), &greedy.best_subset),
        greedy,
        exhaustive,
    };
    emit(s.output.as_deref(), |w| {
        match s.format.unwrap_or(Format::Json) {
            Format::Json => write_json(w, &out),
            Format::Csv => {
                let mut c = csv_writer(w);
                c.write_record(["modes_kept", "certified_d", "w", "removed_n", "removed_l"])
                    .map_err(csv_err)?;
                for step in &out.greedy.steps {
                    let removed = step.removed.and_then(|i| table.mode_set().get(i));
                    c.write_record([
                        step.size.to_string(),
                        step.certified_d.to_string(),
                        step.witness.to_string(),
                        removed.map(|m| m.n.to_string()).unwrap_or_default(),
                        removed.map(|m| m.l.to_string()).unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
                c.flush()?;
                Ok(())
            }
        }
    })?;
    eprintln!(
        "greedy best: {} modes, certified d = {}",
        out.greedy.best_subset.len(),
        out.greedy.best_d
    );
    if let Some(e) = &out.exhaustive {
        eprintln!(
            "exhaustive best: {} modes, certified d = {}",
            e.subset.len(),
            e.certified_d
        );
    }
    Ok(())
}

fn kinds(s: &Settings) -> CliResult<Vec<PerturbationKind>> {
    Ok(match s.kind.as_deref().unwrap_or("all") {
        "all" => PerturbationKind::ALL.to_vec(),
        "state" => vec![PerturbationKind::State],
        "projector" => vec![PerturbationKind::Projector],
        "both" => vec![PerturbationKind::Both],
        other => {
            return Err(Failure::config(format!(
                "unknown perturbation kind '{other}'; use state, projector, both or all"
            )))
        }
    })
}

pub fn robustness(s: &Settings) -> CliResult<()> {
    s.validate_paths(false)?;
    let seed = s.require_seed("for robustness trials")?;
    let kinds = kinds(s)?;
    let State::Correlated(state) = inputs::state(s)? else {
        return Err(Failure::config(
            "robustness studies start from a perfectly correlated state",
        ));
    };
    let table = robustness_study(
        &state,
        &kinds,
        s.trials.unwrap_or(1000),
        s.strength_max.unwrap_or(0.3),
        seed,
        inputs::dim_cap(s),
    )?;
    emit(s.output.as_deref(), |w| {
        match s.format.unwrap_or(Format::Csv) {
            Format::Json => write_json(w, &table),
            Format::Csv => {
                let mut c = csv_writer(w);
                for t in &table.trials {
                    c.serialize(t).map_err(csv_err)?;
                }
                c.flush()?;
                Ok(())
            }
        }
    })?;
    eprintln!("W0 = {:.6}", table.w0);
    for r in &table.summaries {
        eprintln!(
            "{}: W <= W0 in {:.2}% of {} trials, W < W0 in {:.2}%, Spearman rho = {:.4} (p = {:.3e})",
            r.kind,
            100.0 * r.fraction_not_above,
            r.n_trials,
            100.0 * r.fraction_below,
            r.spearman_rho,
            r.p_value
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundCheck {
    d: usize,
    bound: f64,
    max_witness_state: f64,
    search_max: f64,
    search_iters: usize,
    ok: bool,
}

#[derive(Serialize)]
struct StateCheck {
    witness: f64,
    oracle_witness: f64,
    certified_d: usize,
    ok: bool,
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(rename = "D")]
    dim: usize,
    checks: Vec<BoundCheck>,
    state: Option<StateCheck>,
    ok: bool,
}

const VERIFY_TOL: f64 = 1e-6;

pub fn verify(s: &Settings) -> CliResult<()> {
    s.validate_paths(false)?;
    let seed = s.require_seed("for the random search")?;
    let cfg = OracleConfig {
        d_cap: inputs::dim_cap(s),
        ..OracleConfig::default()
    };
    let state = if inputs::has_state(s) {
        Some(inputs::state(s)?)
    } else {
        None
    };
    let dim = match (s.dim, &state) {
        (Some(d), _) => d,
        (None, Some(st)) => st.dim(),
        (None, None) => 4,
    };
    if dim < 2 {
        return Err(Failure::config("--dim must be at least 2"));
    }
    let iters = s.iters.unwrap_or(cfg.search_iters);
    let mut checks = Vec::with_capacity(dim);
    for d in 1..=dim {
        let b = bound(dim, d)?;
        let tight = brute_force_witness(&max_witness_state(dim, d)?, &cfg)?;
        let search = random_rank_d_search(
            dim,
            d,
            iters,
            lgwitness::rng::derive_seed(seed, &[d as u64]),
            &[],
            &cfg,
        )?;
        checks.push(BoundCheck {
            d,
            bound: b,
            max_witness_state: tight,
            search_max: search.max_witness,
            search_iters: iters,
            ok: (tight - b).abs() <= VERIFY_TOL && search.max_witness <= b + VERIFY_TOL,
        });
    }
    let state_check = match &state {
        Some(st) => {
            let fast = witness_sum(&VisibilityTable::from_state(st)?);
            let oracle = brute_force_witness(st, &cfg)?;
            Some(StateCheck {
                witness: fast,
                oracle_witness: oracle,
                certified_d: lgwitness::witness::certified_dimension(fast, st.dim()),
                ok: (fast - oracle).abs() <= VERIFY_TOL,
            })
        }
        None => None,
    };
    let ok = checks.iter().all(|c| c.ok) && state_check.as_ref().is_none_or(|c| c.ok);
    let out = VerifyOutput {
        dim,
        checks,
        state: state_check,
        ok,
    };
    emit(s.output.as_deref(), |w| write_json(w, &out))?;
    if !ok {
        return Err(Failure::integrity(
            "oracle verification failed; see the output for the failing checks",
        ));
    }
    Ok(())
}

pub fn report(s: &Settings) -> CliResult<()> {
    s.validate_paths(true)?;
    let dir = s
        .output
        .as_deref()
        .ok_or_else(|| Failure::config("--output directory is required for report"))?;
    let resamples = s.resamples.unwrap_or(0);
    let seed = if resamples > 0 {
        Some(s.require_seed("when --resamples is set")?)
    } else {
        None
    };
    let (table, data) = inputs::table(s)?;
    let ci = match (seed, &data) {
        (Some(seed), Some(data)) => Some((monte_carlo_ci(data, resamples, seed)?.1, resamples)),
        _ => None,
    };
    let greedy = greedy_subset(&table);
    let report = WitnessReport::build(&table, ci, greedy.trajectory())?;
    fs::create_dir_all(dir)?;

    emit(Some(&dir.join("report.json")), |w| write_json(w, &report))?;

    emit(Some(&dir.join("per_mode.csv")), |w| {
        let mut c = csv_writer(w);
        c.write_record(["k", "n", "l", "mean_sv"])
            .map_err(csv_err)?;
        for (k, (m, v)) in table
            .mode_set()
            .modes()
            .iter()
            .zip(&report.per_mode)
            .enumerate()
        {
            c.write_record([
                k.to_string(),
                m.n.to_string(),
                m.l.to_string(),
                v.to_string(),
            ])
            .map_err(csv_err)?;
        }
        c.flush()?;
        Ok(())
    })?;

    emit(Some(&dir.join("trajectory.csv")), |w| {
        let mut c = csv_writer(w);
        c.write_record(["modes_kept", "certified_d", "w"])
            .map_err(csv_err)?;
        for step in &greedy.steps {
            c.write_record([
                step.size.to_string(),
                step.certified_d.to_string(),
                step.witness.to_string(),
            ])
            .map_err(csv_err)?;
        }
        c.flush()?;
        Ok(())
    })?;

    emit(Some(&dir.join("pairs.csv")), |w| {
        let mut c = csv_writer(w);
        c.write_record(["k", "l", "v_x", "v_y", "v_z", "n_ab", "sv"])
            .map_err(csv_err)?;
        for k in 0..table.dim() {
            for l in k + 1..table.dim() {
                let r = table.get(k, l).expect("complete table");
                c.write_record([
                    k.to_string(),
                    l.to_string(),
                    r.v_x.to_string(),
                    r.v_y.to_string(),
                    r.v_z.to_string(),
                    r.n_ab.to_string(),
                    table.pair_sum(k, l).to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        c.flush()?;
        Ok(())
    })?;

    eprintln!(
        "W = {:.6}, certified d = {}; wrote report.json, per_mode.csv, trajectory.csv, pairs.csv to {}",
        report.w,
        report.certified_d,
        dir.display()
    );
    report.check_integrity()?;
    Ok(())
}
