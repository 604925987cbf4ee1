//! Turning settings into mode sets, states and visibility tables.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use lgwitness::measurement::{read_dataset_csv, read_dataset_json};
use lgwitness::modes::enumerate_modes;
use lgwitness::states::{
    correlated_pure_real, read_rate_table, read_state, spdc_profile, ProfileModel, DEFAULT_DIM_CAP,
};
use lgwitness::{CoincidenceDataset, Complex64, ModeIndex, ModeSet, State, VisibilityTable};

use crate::failure::{CliResult, Failure};
use crate::settings::Settings;

pub fn dim_cap(s: &Settings) -> usize {
    s.dim_cap.unwrap_or(DEFAULT_DIM_CAP)
}

fn parse_modes(text: &str) -> CliResult<ModeSet> {
    let modes =
        text.split(',')
            .map(|item| {
                let (n, l) = item.trim().split_once(':').ok_or_else(|| {
                    Failure::config(format!("mode '{item}' is not of the form n:l"))
                })?;
                let n = n
                    .trim()
                    .parse::<u32>()
                    .map_err(|e| Failure::config(format!("mode '{item}': {e}")))?;
                let l = l
                    .trim()
                    .parse::<i32>()
                    .map_err(|e| Failure::config(format!("mode '{item}': {e}")))?;
                Ok(ModeIndex::new(n, l))
            })
            .collect::<CliResult<Vec<_>>>()?;
    Ok(ModeSet::new(modes)?)
}

/// The mode set named by `--modes`, `--l-max/--n-max` or `--mode-file`.
pub fn mode_set(s: &Settings) -> CliResult<Option<ModeSet>> {
    let given = [
        s.modes.is_some(),
        s.l_max.is_some() || s.n_max.is_some(),
        s.mode_file.is_some(),
    ];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(Failure::config(
            "give only one of --modes, --l-max/--n-max, --mode-file",
        ));
    }
    if let Some(text) = &s.modes {
        return parse_modes(text).map(Some);
    }
    if let Some(path) = &s.mode_file {
        let file = File::open(path)?;
        let set: ModeSet = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| lgwitness::Error::Ingestion(format!("{}: {e}", path.display())))?;
        return Ok(Some(set));
    }
    match (s.l_max, s.n_max) {
        (Some(l), Some(n)) => Ok(Some(enumerate_modes(l, n, None)?)),
        (None, None) => Ok(None),
        _ => Err(Failure::config(
            "--l-max and --n-max must be given together",
        )),
    }
}

fn parse_amplitudes(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|e| Failure::config(format!("amplitude '{a}': {e}")))
        })
        .collect()
}

fn profile_model(text: &str) -> CliResult<Option<ProfileModel>> {
    if text == "uniform" {
        return Ok(None);
    }
    if let Some(path) = text.strip_prefix("table:") {
        return Ok(Some(read_rate_table(BufReader::new(File::open(path)?))?));
    }
    if let Some(rest) = text.strip_prefix("exp:") {
        if let Some((ll, ln)) = rest.split_once(':') {
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| Failure::config(format!("profile width '{v}': {e}")))
            };
            return Ok(Some(ProfileModel::Exponential {
                lambda_l: parse(ll)?,
                lambda_n: parse(ln)?,
            }));
        }
    }
    Err(Failure::config(format!(
        "unknown profile '{text}'; use exp:LAMBDA_L:LAMBDA_N, uniform or table:PATH"
    )))
}

/// The state named by `--state-file`, `--amplitudes` or `--profile`.
pub fn state(s: &Settings) -> CliResult<State> {
    let sources = [
        s.state_file.is_some(),
        s.amplitudes.is_some(),
        s.profile.is_some(),
    ];
    match sources.iter().filter(|&&g| g).count() {
        0 => {
            return Err(Failure::config(
                "no state given; use --state-file, --amplitudes or --profile",
            ))
        }
        1 => {}
        _ => {
            return Err(Failure::config(
                "give only one of --state-file, --amplitudes, --profile",
            ))
        }
    }
    let modes = mode_set(s)?;
    if let Some(path) = &s.state_file {
        if modes.is_some() {
            return Err(Failure::config(
                "a state file carries its own modes; drop the mode options",
            ));
        }
        return Ok(read_state(path, dim_cap(s))?);
    }
    if let Some(text) = &s.amplitudes {
        let amps = parse_amplitudes(text)?;
        let modes = modes.unwrap_or_else(|| ModeSet::ladder(amps.len()));
        if modes.len() != amps.len() {
            return Err(Failure::config(format!(
                "{} amplitudes for {} modes",
                amps.len(),
                modes.len()
            )));
        }
        return Ok(State::Correlated(correlated_pure_real(&amps, modes)?));
    }
    let profile = s.profile.as_deref().expect("one source is set");
    let modes = modes.ok_or_else(|| Failure::config("--profile needs a mode set"))?;
    let amps: Vec<Complex64> = match profile_model(profile)? {
        Some(model) => spdc_profile(&model, &modes)?,
        None => vec![Complex64::new(1.0, 0.0); modes.len()],
    };
    Ok(State::Correlated(lgwitness::states::correlated_pure(
        &amps, modes,
    )?))
}

pub fn has_state(s: &Settings) -> bool {
    s.state_file.is_some() || s.amplitudes.is_some() || s.profile.is_some()
}

pub fn read_dataset(path: &Path) -> CliResult<CoincidenceDataset> {
    let reader = BufReader::new(File::open(path)?);
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_json {
        read_dataset_json(reader)?
    } else {
        read_dataset_csv(reader, None)?
    })
}

/// The dataset from `--input`, restricted to the modes of `--modes` (or the
/// other mode options) when those are given.
pub fn dataset(s: &Settings) -> CliResult<CoincidenceDataset> {
    let path = s
        .input
        .as_ref()
        .ok_or_else(|| Failure::config("--input dataset is required"))?;
    let data = read_dataset(path)?;
    match mode_set(s)? {
        None => Ok(data),
        Some(keep) => {
            let indices = keep
                .modes()
                .iter()
                .map(|m| {
                    data.mode_set()
                        .position(*m)
                        .ok_or_else(|| Failure::config(format!("mode {m} is not in the dataset")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(data.restrict(&indices)?)
        }
    }
}

/// Visibility table from `--input` if given, otherwise from the state.
pub fn table(s: &Settings) -> CliResult<(VisibilityTable, Option<CoincidenceDataset>)> {
    if s.input.is_some() {
        if has_state(s) {
            return Err(Failure::config("give either --input or a state, not both"));
        }
        let data = dataset(s)?;
        return Ok((VisibilityTable::from_dataset(&data)?, Some(data)));
    }
    Ok((VisibilityTable::from_state(&state(s)?)?, None))
}
