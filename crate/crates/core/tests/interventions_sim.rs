//! Intervention machinery: test allocation and error rates, tracing
//! capacity and uniformity, masks, distancing, dose rollout, and the
//! quarantine containment guarantees.

mod common;

use std::collections::HashSet;

use common::*;
use episim_core::engine::{initialize, run_replication, step_day, SimulationState};
use episim_core::epi::{DiseaseParams, DiseaseState, MaskEfficacy};
use episim_core::interventions::{
    allocate_tests, apply_distancing, assign_masks, process_positive, quarantine_agent,
    scale_national, trace_contacts, PolicyScenario, TestType, BOOSTER_ELIGIBILITY_DAYS,
};
use episim_core::population::{EffectiveNetwork, Layer, LayeredContactNetwork};
use episim_core::rng::rng_from_seed;
use episim_core::scenarios::ScenarioLibrary;
use episim_core::tables::{TimingSeries, WaningTable};

fn fixture_timing() -> TimingSeries {
    TimingSeries::from_path(&fixtures_dir().join("vaccination_timing.csv")).unwrap()
}

fn fixture_waning() -> WaningTable {
    WaningTable::from_path(&fixtures_dir().join("vaccine_waning.csv")).unwrap()
}

#[test]
fn national_capacity_scaling_matches_hand_arithmetic() {
    // 20e6 * 50,000 / 331e6 = 3,021.15 -> 3,021 tests per day in-simulation.
    assert_eq!(scale_national(20_000_000.0, 50_000, 331_000_000.0), 3_021);
    assert_eq!(scale_national(1_900_000.0, 50_000, 331_000_000.0), 287);
    assert_eq!(scale_national(0.0, 50_000, 331_000_000.0), 0);
    let scenario = PolicyScenario::best_fit_baseline();
    assert_eq!(scenario.scaled_antigen_capacity(50_000), 3_021);
    assert_eq!(scenario.scaled_pcr_capacity(50_000), 287);
}

#[test]
fn zero_capacity_allocates_no_tests() {
    let agents = isolated_agents(50);
    let net = home_network(50, &[(0, 1)]);
    let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), 1);
    state.day = 1;
    let outcomes = allocate_tests(&mut state, &PolicyScenario::none());
    assert!(outcomes.is_empty());
}

#[test]
fn antigen_false_negative_rate_shapes_positive_fraction() {
    // One infected agent tested daily for 10,000 days: positives should
    // land at 1 - 0.25 within +-0.01.
    let agents = isolated_agents(1);
    let net = LayeredContactNetwork::from_raw(1, [vec![], vec![], vec![], vec![]]).unwrap();
    let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), 2);
    state.force_state(0, DiseaseState::AsymptomaticInfectious, 1);
    let mut scenario = PolicyScenario::none();
    scenario.antigen_tests_per_day = scenario.national_population; // scaled: 1
    scenario.antigen_false_negative = 0.25;

    let trials = 10_000;
    let mut positives = 0;
    for day in 1..=trials {
        state.day = day;
        let outcomes = allocate_tests(&mut state, &scenario);
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].test_type, TestType::Antigen);
        if outcomes[0].result {
            positives += 1;
        }
    }
    let frac = positives as f64 / trials as f64;
    assert!((frac - 0.75).abs() <= 0.01, "positive fraction {frac}");
}

#[test]
fn pcr_prioritizes_symptomatic_agents_and_respects_capacity() {
    let n = 400u32;
    let agents = isolated_agents(n);
    let net = LayeredContactNetwork::from_raw(n, [vec![], vec![], vec![], vec![]]).unwrap();
    let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), 3);
    for a in 0..60 {
        state.force_state(a, DiseaseState::SymptomaticInfectious, 1);
    }
    state.day = 1;
    let mut scenario = PolicyScenario::none();
    scenario.pcr_false_negative = 0.0;
    // Capacity 30 < 60 symptomatic: all tests go to symptomatic agents.
    scenario.pcr_tests_per_day = scenario.national_population * 30.0 / n as f64;
    let outcomes = allocate_tests(&mut state, &scenario);
    assert_eq!(outcomes.len(), 30);
    assert!(outcomes.iter().all(|o| o.agent_id < 60 && o.result));

    // Capacity above the eligible count tests everyone once, no more.
    state.day = 2;
    scenario.pcr_tests_per_day = scenario.national_population * 2.0;
    let outcomes = allocate_tests(&mut state, &scenario);
    assert_eq!(outcomes.len(), n as usize);
    let unique: HashSet<_> = outcomes.iter().map(|o| o.agent_id).collect();
    assert_eq!(unique.len(), n as usize);
}

#[test]
fn tracing_caps_at_capacity_and_samples_uniformly() {
    let n = 1_000u32;
    let agents = isolated_agents(n);
    let net = LayeredContactNetwork::from_raw(n, [vec![], vec![], vec![], vec![]]).unwrap();
    let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), 4);
    let mut scenario = PolicyScenario::none();
    scenario.trace_capacity_per_day = 250;

    let queue: Vec<u32> = (0..n).collect();
    let mut selection_counts = vec![0u32; n as usize];
    let seeds = 1_000;
    for _ in 0..seeds {
        let traced = trace_contacts(&mut state, &scenario, &queue);
        assert_eq!(traced.len(), 250, "exactly the capacity is traced");
        let unique: HashSet<_> = traced.iter().collect();
        assert_eq!(unique.len(), 250);
        for t in traced {
            selection_counts[t as usize] += 1;
        }
    }
    // Chi-square against uniform selection: expected 250 per agent over
    // 1,000 draws of 250-of-1,000. Without-replacement sampling deflates
    // the statistic below the chi-square(999) critical value at
    // alpha = 0.001 (~1143).
    let expected = (seeds * 250) as f64 / n as f64;
    let chi_square: f64 = selection_counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum();
    assert!(chi_square < 1_143.0, "chi-square statistic {chi_square}");
}

#[test]
fn adherent_positive_quarantines_by_course() {
    let agents = isolated_agents(4);
    let net = home_network(4, &[(0, 1), (0, 2), (0, 3)]);
    let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), 5);
    state.day = 1;
    for q in &mut state.quarantine {
        q.adherent = true;
    }
    // Symptomatic course: 10 days.
    state.force_state(0, DiseaseState::SymptomaticInfectious, 0);
    state.epi[0].symptomatic_destiny = true;
    let contacts = process_positive(&mut state, &PolicyScenario::none(), 0);
    assert!(state.quarantine[0].quarantined);
    assert_eq!(state.quarantine[0].days_remaining, 10);
    assert_eq!(contacts.len(), 3);

    // Asymptomatic course: 5 days.
    state.force_state(1, DiseaseState::AsymptomaticInfectious, 0);
    state.epi[1].symptomatic_destiny = false;
    process_positive(&mut state, &PolicyScenario::none(), 1);
    assert_eq!(state.quarantine[1].days_remaining, 5);

    // Uninfected false positive: 5 days.
    process_positive(&mut state, &PolicyScenario::none(), 2);
    assert_eq!(state.quarantine[2].days_remaining, 5);
}

#[test]
fn zero_adherence_means_nobody_ever_quarantines() {
    let (agents, net) = small_population(1_500, 6);
    let mut scenario = PolicyScenario::best_fit_baseline();
    scenario.quarantine_adherence = 0.0;
    let params = DiseaseParams::best_fit();
    let mut burn = burn_in_with(&[(-4, 25)], 12);
    burn.vaccination_timing = fixture_timing();
    let mut state = initialize(
        &agents,
        &net,
        &scenario,
        &burn,
        &params,
        &fixture_waning(),
        21,
    )
    .unwrap();
    for _ in 0..30 {
        step_day(&mut state, &scenario, &params, &fixture_waning());
        assert_eq!(state.quarantined_count(), 0);
    }
}

#[test]
fn mask_assignment_matches_binomial_expectation() {
    let mut rng = rng_from_seed(7);
    let mut scenario = PolicyScenario::best_fit_baseline();
    scenario.mask_wearing_fraction = 0.41;
    let masks = assign_masks(50_000, &scenario, &mut rng);
    let count = masks.iter().filter(|&&m| m).count() as f64;
    // 4-sigma binomial tolerance around 20,500.
    assert!((count - 20_500.0).abs() <= 440.0, "masked count {count}");

    scenario.mask_wearing_fraction = 0.0;
    let masks = assign_masks(50_000, &scenario, &mut rng);
    assert!(masks.iter().all(|&m| !m));
}

#[test]
fn upgraded_mask_policy_applies_the_upgraded_pair_to_all_masked_agents() {
    let library = ScenarioLibrary::from_path(&fixtures_dir().join("scenarios.toml")).unwrap();
    let mut scenario = PolicyScenario::best_fit_baseline();
    let mut params = DiseaseParams::best_fit();
    library.apply("mask_efficacy", "++", &mut scenario, &mut params).unwrap();
    library.apply("mask_wearing", "++", &mut scenario, &mut params).unwrap();
    assert_eq!(scenario.mask_efficacy, MaskEfficacy { infection: 0.57, transmission: 0.76 });
    assert_eq!(scenario.mask_wearing_fraction, 0.70);
}

#[test]
fn distancing_identity_boundary_and_exact_community_count() {
    let (agents, net) = small_population(2_000, 8);
    let mut rng = rng_from_seed(9);

    // (0, 0, 0): the effective network equals the input network.
    let scenario = PolicyScenario::none();
    let effective = apply_distancing(&net, &agents, &scenario, &mut rng);
    for layer in Layer::ALL {
        assert_eq!(effective.edges(layer), net.edges(layer).to_vec());
    }

    // (1, 1, 1): only home edges remain.
    let mut full = PolicyScenario::none();
    full.distancing.work = 1.0;
    full.distancing.school = 1.0;
    full.distancing.community = 1.0;
    let effective = apply_distancing(&net, &agents, &full, &mut rng);
    assert_eq!(effective.edges(Layer::Home), net.edges(Layer::Home).to_vec());
    assert_eq!(effective.edge_count(Layer::School), 0);
    assert_eq!(effective.edge_count(Layer::Work), 0);
    assert_eq!(effective.edge_count(Layer::Community), 0);

    // Community fraction 0.5 over an exactly-10,000-edge layer removes
    // exactly 5,000 (without-replacement sampling).
    let n = 5_000u32;
    let ring_agents = isolated_agents(n);
    let mut community = Vec::new();
    for i in 0..n {
        community.push((i.min((i + 1) % n), i.max((i + 1) % n)));
        community.push((i.min((i + 2) % n), i.max((i + 2) % n)));
    }
    let ring = LayeredContactNetwork::from_raw(n, [vec![], vec![], vec![], community]).unwrap();
    assert_eq!(ring.edge_count(Layer::Community), 10_000);
    let mut half = PolicyScenario::none();
    half.distancing.community = 0.5;
    let effective = apply_distancing(&ring, &ring_agents, &half, &mut rng);
    assert_eq!(effective.edge_count(Layer::Community), 5_000);
}

#[test]
fn distanced_network_is_always_a_subgraph() {
    let (agents, net) = small_population(1_200, 10);
    for seed in 0..5 {
        let mut rng = rng_from_seed(seed);
        let mut scenario = PolicyScenario::none();
        scenario.distancing.work = 0.37;
        scenario.distancing.school = 0.21;
        scenario.distancing.community = 0.64;
        let effective = apply_distancing(&net, &agents, &scenario, &mut rng);
        for layer in Layer::ALL {
            let original: HashSet<_> = net.edges(layer).iter().copied().collect();
            for edge in effective.edges(layer) {
                assert!(original.contains(&edge), "resurrected edge {edge:?}");
            }
        }
    }
}

#[test]
fn initial_vaccination_hits_coverage_and_booster_targets() {
    let (agents, net) = small_population(20_000, 12);
    let scenario = PolicyScenario::best_fit_baseline();
    let params = DiseaseParams::best_fit();
    let mut burn = burn_in_with(&[], 12);
    burn.vaccination_timing = fixture_timing();
    let state = initialize(
        &agents,
        &net,
        &scenario,
        &burn,
        &params,
        &fixture_waning(),
        31,
    )
    .unwrap();

    let mut adults = 0u32;
    let mut adult_vaccinated = 0u32;
    for (agent, epi) in agents.iter().zip(&state.epi) {
        if agent.age >= 18 {
            adults += 1;
            if epi.immunity.vaccinated {
                adult_vaccinated += 1;
            }
        }
    }
    let frac = adult_vaccinated as f64 / adults as f64;
    assert!((frac - 0.73).abs() < 0.01, "adult coverage {frac}");

    // Boosted share of booster-eligible agents matches the target.
    let mut eligible = 0u32;
    let mut boosted = 0u32;
    for epi in &state.epi {
        if epi.immunity.boosted {
            eligible += 1;
            boosted += 1;
        } else if epi.immunity.vaccinated
            && epi.immunity.days_since_last_dose >= BOOSTER_ELIGIBILITY_DAYS
        {
            eligible += 1;
        }
    }
    let boosted_frac = boosted as f64 / eligible as f64;
    assert!((boosted_frac - 0.2).abs() < 0.02, "boosted fraction {boosted_frac}");

    // Boosted agents carry week-0-fresh or later booster protections from
    // the 3-dose table, and everyone's multipliers lie in [0, 1].
    for epi in &state.epi {
        let imm = &epi.immunity;
        assert!(imm.infection_protection_multiplier >= 0.0);
        assert!(imm.infection_protection_multiplier <= 1.0);
        if imm.boosted {
            assert_eq!(imm.doses, 3);
            assert!(imm.vaccinated);
        }
    }
}

#[test]
fn boosting_doubling_caps_and_matches_table_arithmetic() {
    // "2x" boosting means min(1, 2 x 0.2) = 0.4 of eligible agents.
    let library = ScenarioLibrary::from_path(&fixtures_dir().join("scenarios.toml")).unwrap();
    let mut scenario = PolicyScenario::best_fit_baseline();
    let mut params = DiseaseParams::best_fit();
    library.apply("boosting", "+", &mut scenario, &mut params).unwrap();
    assert_eq!(scenario.booster_coverage, 0.4);

    let (agents, net) = small_population(20_000, 14);
    let mut burn = burn_in_with(&[], 12);
    burn.vaccination_timing = fixture_timing();
    let state = initialize(
        &agents,
        &net,
        &scenario,
        &burn,
        &params,
        &fixture_waning(),
        33,
    )
    .unwrap();
    let mut eligible = 0u32;
    let mut boosted = 0u32;
    for epi in &state.epi {
        if epi.immunity.boosted {
            eligible += 1;
            boosted += 1;
        } else if epi.immunity.vaccinated
            && epi.immunity.days_since_last_dose >= BOOSTER_ELIGIBILITY_DAYS
        {
            eligible += 1;
        }
    }
    let frac = boosted as f64 / eligible as f64;
    assert!((frac - 0.4).abs() < 0.02, "boosted-of-eligible {frac}");
}

#[test]
fn zero_rollout_freezes_vaccination_after_day_zero() {
    let (agents, net) = small_population(3_000, 15);
    let mut scenario = PolicyScenario::best_fit_baseline();
    scenario.rollout_multiplier = 0.0;
    // Raise targets above baseline so a deficit exists.
    scenario.vaccination_coverage.ages_5_11 = 0.73;
    let params = DiseaseParams::best_fit();
    let mut burn = burn_in_with(&[(-4, 10)], 12);
    burn.vaccination_timing = fixture_timing();
    let waning = fixture_waning();
    let mut state = initialize(&agents, &net, &scenario, &burn, &params, &waning, 35).unwrap();
    let doses_day0: Vec<u32> = state.epi.iter().map(|e| e.immunity.doses).collect();
    for _ in 0..20 {
        step_day(&mut state, &scenario, &params, &waning);
    }
    let doses_end: Vec<u32> = state.epi.iter().map(|e| e.immunity.doses).collect();
    assert_eq!(doses_day0, doses_end);
}

#[test]
fn rollout_closes_deficits_and_doses_are_monotone() {
    let (agents, net) = small_population(4_000, 16);
    let mut scenario = PolicyScenario::best_fit_baseline();
    scenario.rollout_multiplier = 4.0;
    scenario.daily_primary_doses = 20.0;
    scenario.daily_booster_doses = 20.0;
    scenario.vaccination_coverage.ages_5_11 = 0.73;
    scenario.booster_coverage = 0.8;
    let params = DiseaseParams::best_fit();
    let mut burn = burn_in_with(&[(-4, 10)], 12);
    burn.vaccination_timing = fixture_timing();
    let waning = fixture_waning();
    let mut state = initialize(&agents, &net, &scenario, &burn, &params, &waning, 37).unwrap();

    let mut prev: Vec<u32> = state.epi.iter().map(|e| e.immunity.doses).collect();
    let mut grew = false;
    for _ in 0..30 {
        step_day(&mut state, &scenario, &params, &waning);
        for (idx, epi) in state.epi.iter().enumerate() {
            assert!(epi.immunity.doses >= prev[idx], "dose count decreased");
            if epi.immunity.doses > prev[idx] {
                grew = true;
            }
            prev[idx] = epi.immunity.doses;
        }
    }
    assert!(grew, "rollout never administered a dose");
}

#[test]
fn quarantined_adherent_agent_never_infects_outside_home() {
    // Hub with one home edge and many community edges, quarantined the
    // whole time: only the home neighbor may be infected.
    let n = 40u32;
    let agents = isolated_agents(n);
    let community: Vec<(u32, u32)> = (2..n).map(|leaf| (0, leaf)).collect();
    let net =
        LayeredContactNetwork::from_raw(n, [vec![(0, 1)], vec![], vec![], community]).unwrap();
    let params = DiseaseParams {
        base_transmission_rate: 1.0,
        asymptomatic_fraction: 0.0,
        ..plain_params()
    };
    let scenario = PolicyScenario::none();
    let waning = WaningTable::empty();
    for seed in 0..20 {
        let mut state = SimulationState::blank(&agents, EffectiveNetwork::full(&net), seed);
        state.quarantine[0].adherent = true;
        state.force_state(0, DiseaseState::SymptomaticInfectious, 0);
        state.epi[0].symptomatic_destiny = true;
        quarantine_agent(&mut state, 0);
        for _ in 0..6 {
            step_day(&mut state, &scenario, &params, &waning);
        }
        for leaf in 2..n {
            assert_eq!(
                state.epi[leaf as usize].state,
                DiseaseState::Susceptible,
                "community leaf {leaf} infected by quarantined hub (seed {seed})"
            );
        }
        // The home edge stays live under the default policy.
        assert_ne!(state.epi[1].state, DiseaseState::Susceptible);
    }
}

#[test]
fn daily_tests_respect_scaled_capacity_in_full_runs() {
    let (agents, net) = small_population(2_500, 18);
    let n = agents.len() as u32;
    let scenario = PolicyScenario::best_fit_baseline();
    let params = DiseaseParams::best_fit();
    let mut burn = burn_in_with(&[(-5, 40)], 12);
    burn.vaccination_timing = fixture_timing();
    let cap =
        scenario.scaled_pcr_capacity(n) + scenario.scaled_antigen_capacity(n);
    let series = run_replication(
        &agents,
        &net,
        &scenario,
        &params,
        &fixture_waning(),
        &burn,
        30,
        41,
    )
    .unwrap();
    for day in &series.days {
        assert!(day.tests_used <= cap, "day {} used {} tests, cap {cap}", day.day, day.tests_used);
        assert!(day.positives <= day.tests_used);
    }
}
