//! Shared helpers for integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use episim_core::engine::BurnInSpec;
use episim_core::epi::{DiseaseParams, HazardCurve, InfectivityDistribution};
use episim_core::population::{
    generate_population, AgentRecord, LayeredContactNetwork, PopulationConfig,
};
use episim_core::tables::{
    AgeBinRow, AgeDistribution, AgeRateTable, IncidenceRow, IncidenceSeries, SizeDistribution,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A small synthetic population in the fixture style.
pub fn small_population_config(n_agents: u32, seed: u64) -> PopulationConfig {
    PopulationConfig {
        n_agents,
        age_distribution: AgeDistribution::new(vec![
            AgeBinRow { age_min: 0, age_max: 4, probability: 0.06 },
            AgeBinRow { age_min: 5, age_max: 11, probability: 0.09 },
            AgeBinRow { age_min: 12, age_max: 17, probability: 0.08 },
            AgeBinRow { age_min: 18, age_max: 64, probability: 0.60 },
            AgeBinRow { age_min: 65, age_max: 90, probability: 0.17 },
        ])
        .unwrap(),
        employment_rate_by_age: AgeRateTable::new(vec![AgeBinRow {
            age_min: 18,
            age_max: 65,
            probability: 0.72,
        }])
        .unwrap(),
        enrollment_rate_by_age: AgeRateTable::new(vec![AgeBinRow {
            age_min: 5,
            age_max: 17,
            probability: 0.95,
        }])
        .unwrap(),
        household_size_distribution: SizeDistribution::from_pairs(&[
            (1, 0.28),
            (2, 0.35),
            (3, 0.15),
            (4, 0.13),
            (5, 0.06),
            (6, 0.03),
        ])
        .unwrap(),
        school_size_distribution: SizeDistribution::from_pairs(&[(15, 0.4), (21, 0.4), (27, 0.2)])
            .unwrap(),
        workplace_size_distribution: SizeDistribution::from_pairs(&[
            (2, 0.25),
            (4, 0.25),
            (6, 0.2),
            (10, 0.2),
            (20, 0.1),
        ])
        .unwrap(),
        community_contact_mean: 6.0,
        community_contact_dispersion: 0.8,
        rng_seed: seed,
    }
}

pub fn small_population(n_agents: u32, seed: u64) -> (Vec<AgentRecord>, LayeredContactNetwork) {
    generate_population(&small_population_config(n_agents, seed)).unwrap()
}

/// Deterministic-friendly disease parameters: constant infectivity, no
/// natural waning.
pub fn plain_params() -> DiseaseParams {
    DiseaseParams {
        infectivity_distribution: InfectivityDistribution::Constant,
        natural_immunity_waning: HazardCurve::never(),
        ..DiseaseParams::best_fit()
    }
}

/// A burn-in series with explicit zero rows covering one disease course,
/// plus the given `(day, count)` entries.
pub fn padded_incidence(entries: &[(i32, u32)], span: u32) -> IncidenceSeries {
    let mut rows = Vec::new();
    for day in -(span as i32)..0 {
        let count = entries
            .iter()
            .find(|(d, _)| *d == day)
            .map(|&(_, c)| c)
            .unwrap_or(0);
        rows.push(IncidenceRow { day, new_infections: count });
    }
    IncidenceSeries::new(rows).unwrap()
}

pub fn burn_in_with(entries: &[(i32, u32)], span: u32) -> BurnInSpec {
    BurnInSpec {
        incidence: padded_incidence(entries, span),
        ..BurnInSpec::empty()
    }
}

/// Isolated agents (one household each), for hand-built networks.
pub fn isolated_agents(n: u32) -> Vec<AgentRecord> {
    (0..n)
        .map(|i| AgentRecord {
            agent_id: i,
            age: 30,
            household_id: i,
            school_id: None,
            workplace_id: None,
        })
        .collect()
}

/// A network whose home layer is exactly the given edge list.
pub fn home_network(n: u32, edges: &[(u32, u32)]) -> LayeredContactNetwork {
    LayeredContactNetwork::from_raw(n, [edges.to_vec(), vec![], vec![], vec![]]).unwrap()
}
