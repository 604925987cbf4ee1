use lgwitness::measurement::{
    all_settings, estimate_visibilities, simulate_counts, Basis, Outcome, SimulationOptions,
};
use lgwitness::modes::{enumerate_modes, ModeIndex, ModeSet};
use lgwitness::oracle::{brute_force_witness, random_rank_d_search, OracleConfig};
use lgwitness::rng::substream;
use lgwitness::states::{
    correlated_pure, correlated_pure_real, from_decomposition, max_witness_state,
    maximally_entangled, perturb_state, random_decomposition, read_rate_table, spdc_profile,
    ProfileModel,
};
use lgwitness::witness::{greedy_subset, per_mode_contribution, witness_sum};
use lgwitness::{TwoPhotonState, VisibilityTable};

fn example() -> lgwitness::CorrelatedState {
    correlated_pure_real(&[0.5, 0.07, 0.01, 0.01], ModeSet::ladder(4)).unwrap()
}

#[test]
fn perturbation_at_zero_strength_is_exact() {
    let s = example();
    let mut rng = substream(1, &[]);
    let p = perturb_state(&s, 0.0, &mut rng, 8).unwrap();
    let cfg = OracleConfig::default();
    let exact = witness_sum(&VisibilityTable::from_state(&s).unwrap());
    assert!((brute_force_witness(&p, &cfg).unwrap() - exact).abs() < 1e-12);
}

#[test]
fn perturbed_states_rarely_gain_witness() {
    let s = example();
    let cfg = OracleConfig::default();
    let w0 = brute_force_witness(&s, &cfg).unwrap();
    let draws = 1000;
    let not_above = (0..draws)
        .filter(|&i| {
            let strength = 0.2 * i as f64 / (draws - 1) as f64;
            let mut rng = substream(2, &[i as u64]);
            let p = perturb_state(&s, strength, &mut rng, 8).unwrap();
            brute_force_witness(&p, &cfg).unwrap() <= w0 + 1e-12
        })
        .count();
    assert!(not_above as f64 >= 0.99 * draws as f64, "{not_above}");
}

#[test]
fn weakest_pair_reads_three_at_high_flux() {
    let data = simulate_counts(
        &example(),
        &all_settings(4),
        1e7,
        3,
        SimulationOptions::default(),
    )
    .unwrap();
    let v = estimate_visibilities(&data, 2, 3).unwrap();
    assert!((v.sum() - 3.0).abs() <= 0.01, "{}", v.sum());
}

#[test]
fn twenty_mode_profile_peaks_inside() {
    let modes = enumerate_modes(2, 3, None).unwrap();
    assert_eq!(modes.len(), 15 + 5);
    let amps = spdc_profile(
        &ProfileModel::Exponential {
            lambda_l: 0.2,
            lambda_n: 1.0,
        },
        &modes,
    )
    .unwrap();
    let s = correlated_pure(&amps, modes).unwrap();
    let search = greedy_subset(&VisibilityTable::from_state(&s).unwrap());
    let best = search.best_subset.len();
    assert!(
        best > 2 && best < 20,
        "best subset size {best}, trajectory {:?}",
        search.trajectory()
    );
    let first = search.steps.first().unwrap().certified_d;
    let last = search.steps.last().unwrap().certified_d;
    assert!(
        search.best_d > first && search.best_d > last,
        "{:?}",
        search.trajectory()
    );
}

#[test]
fn dominant_mode_contributes_least() {
    let per = per_mode_contribution(&VisibilityTable::from_state(&example()).unwrap());
    assert!((per[3] - (1.08 + 1.56 + 3.0) / 3.0).abs() < 0.01);
    let min = per.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(per[0], min);
}

fn random_state(i: u64, nonnegative: bool) -> lgwitness::CorrelatedState {
    let dim = 2 + (i % 4) as usize;
    let rank = 1 + (i as usize / 4) % dim;
    let mut rng = substream(4, &[i]);
    let mut elems = random_decomposition(dim, rank, &mut rng);
    if nonnegative {
        for e in &mut elems {
            for a in &mut e.amplitudes {
                *a = a.norm().into();
            }
        }
    }
    from_decomposition(&elems, ModeSet::ladder(dim)).unwrap()
}

#[test]
fn dense_and_fast_witness_agree_on_a_thousand_states() {
    let cfg = OracleConfig::default();
    for i in 0..1000u64 {
        let s = random_state(i, true);
        let fast = witness_sum(&VisibilityTable::from_state(&s).unwrap());
        let dense = brute_force_witness(&s, &cfg).unwrap();
        assert!((fast - dense).abs() < 1e-9, "state {i}: {fast} vs {dense}");
    }
}

#[test]
fn visibility_sum_dominates_signed_witness() {
    // With complex coherences the measured |V| can exceed the signed correlation.
    let cfg = OracleConfig::default();
    let mut strictly = 0;
    for i in 0..1000u64 {
        let s = random_state(i, false);
        let fast = witness_sum(&VisibilityTable::from_state(&s).unwrap());
        let dense = brute_force_witness(&s, &cfg).unwrap();
        assert!(fast >= dense - 1e-9, "state {i}: {fast} vs {dense}");
        strictly += usize::from(fast > dense + 1e-6);
    }
    assert!(strictly > 0);
}

#[test]
fn rank_two_search_approaches_the_bound() {
    let cfg = OracleConfig::default();
    let pool = [max_witness_state(4, 2).unwrap()];
    let r = random_rank_d_search(4, 2, 100_000, 5, &pool, &cfg).unwrap();
    assert!(r.max_witness <= 10.0 + 1e-6);
    assert!(r.max_witness >= 10.0 - 0.1);
    let unseeded = random_rank_d_search(4, 2, 20_000, 6, &[], &cfg).unwrap();
    assert!(unseeded.max_witness <= 10.0 + 1e-6);
}

#[test]
fn rate_table_is_recovered_from_counts() {
    let csv = "n,l,rate\n0,0,400\n0,1,100\n0,-1,100\n1,0,25\n";
    let model = read_rate_table(csv.as_bytes()).unwrap();
    let modes = ModeSet::new(vec![
        ModeIndex::new(0, 0),
        ModeIndex::new(0, 1),
        ModeIndex::new(0, -1),
        ModeIndex::new(1, 0),
    ])
    .unwrap();
    let s = correlated_pure(&spdc_profile(&model, &modes).unwrap(), modes).unwrap();
    let data = simulate_counts(
        &s,
        &all_settings(4),
        1e6,
        0,
        SimulationOptions {
            expectation: true,
            ..Default::default()
        },
    )
    .unwrap();
    // |kk> appears as the ++ outcome of (k, l) and the -- outcome of (l, k) in the z basis.
    let rate = |k: usize| {
        let l = if k == 0 { 1 } else { 0 };
        let (a, b, o) = if k < l {
            (k, l, Outcome::PlusPlus)
        } else {
            (l, k, Outcome::MinusMinus)
        };
        data.get(a, b, Basis::Z, o).unwrap()
    };
    let base = rate(0);
    for (k, expected) in [(1, 0.25), (2, 0.25), (3, 0.0625)] {
        assert!((rate(k) / base - expected).abs() < 1e-12);
    }
}

#[test]
fn bell_and_maximal_states() {
    let cfg = OracleConfig::default();
    assert!(
        (brute_force_witness(&maximally_entangled(4).unwrap(), &cfg).unwrap() - 18.0).abs() < 1e-12
    );
    let bell = maximally_entangled(2).unwrap();
    assert_eq!(bell.dim(), 2);
    assert!((witness_sum(&VisibilityTable::from_state(&bell).unwrap()) - 3.0).abs() < 1e-12);
}
