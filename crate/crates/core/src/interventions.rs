//! Policy levers: testing, contact tracing, quarantine, masking,
//! vaccination/boosting rollout, and distancing.
//!
//! All intervention passes mutate [`SimulationState`] and run sequentially
//! within a day step in a fixed order (waning, rollout, testing,
//! tracing/quarantine, then distancing-filtered transmission).

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::SimulationState;
use crate::epi::{apply_vaccine_waning, AgentEpiState, MaskEfficacy};
use crate::error::{Error, Result};
use crate::population::{AgentId, AgentRecord, EffectiveNetwork, Layer, LayeredContactNetwork};
use crate::rng::SimRng;
use crate::tables::{TimingSeries, WaningTable};

/// Quarantine length for agents on a symptomatic course.
pub const QUARANTINE_DAYS_SYMPTOMATIC: u32 = 10;
/// Quarantine length for asymptomatic courses and uninfected agents.
pub const QUARANTINE_DAYS_ASYMPTOMATIC: u32 = 5;
/// How long after a positive test an agent's contacts get antigen priority.
pub const ANTIGEN_PRIORITY_WINDOW_DAYS: u32 = 5;
/// Days after the last dose before booster eligibility.
pub const BOOSTER_ELIGIBILITY_DAYS: u32 = 180;
/// Reference population for scaling nationally quoted capacities.
pub const DEFAULT_NATIONAL_POPULATION: f64 = 331_000_000.0;

/// Vaccination coverage targets by age bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaccinationCoverage {
    pub ages_0_4: f64,
    pub ages_5_11: f64,
    pub ages_12_17: f64,
    pub ages_18_plus: f64,
}

impl VaccinationCoverage {
    pub const BRACKET_COUNT: usize = 4;

    pub fn zero() -> Self {
        Self { ages_0_4: 0.0, ages_5_11: 0.0, ages_12_17: 0.0, ages_18_plus: 0.0 }
    }

    pub fn by_bracket(&self, bracket: usize) -> f64 {
        match bracket {
            0 => self.ages_0_4,
            1 => self.ages_5_11,
            2 => self.ages_12_17,
            _ => self.ages_18_plus,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.ages_0_4, self.ages_5_11, self.ages_12_17, self.ages_18_plus]
    }
}

/// Age bracket index used for vaccination policy: 0-4, 5-11, 12-17, 18+.
pub fn age_bracket(age: u32) -> usize {
    match age {
        0..=4 => 0,
        5..=11 => 1,
        12..=17 => 2,
        _ => 3,
    }
}

/// Name of the dose-timing series for a bracket's primary vaccination.
pub fn primary_timing_series(bracket: usize) -> &'static str {
    match bracket {
        0 => "primary_0_4",
        1 => "primary_5_11",
        2 => "primary_12_17",
        _ => "primary_18_plus",
    }
}

pub const BOOSTER_TIMING_SERIES: &str = "booster";

/// Distancing fractions per setting: the share of remote workers, of
/// students with closed schools, and of community edges removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancingFractions {
    pub work: f64,
    pub school: f64,
    pub community: f64,
}

impl DistancingFractions {
    pub fn zero() -> Self {
        Self { work: 0.0, school: 0.0, community: 0.0 }
    }
}

/// One cell of the policy sweep: the full intervention setting vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyScenario {
    pub vaccination_coverage: VaccinationCoverage,
    /// Boosted share of booster-eligible agents at initialization.
    pub booster_coverage: f64,
    /// Scales daily dose throughput during the run.
    pub rollout_multiplier: f64,
    /// Baseline primary doses per day, at simulation scale.
    pub daily_primary_doses: f64,
    /// Baseline booster doses per day, at simulation scale.
    pub daily_booster_doses: f64,
    /// National PCR capacity per day (scaled by population ratio).
    pub pcr_tests_per_day: f64,
    /// National antigen capacity per day (scaled by population ratio).
    pub antigen_tests_per_day: f64,
    pub pcr_false_negative: f64,
    pub antigen_false_negative: f64,
    pub false_positive_rate: f64,
    /// Contacts traceable per day, already at simulation scale.
    pub trace_capacity_per_day: u32,
    pub mask_wearing_fraction: f64,
    pub mask_efficacy: MaskEfficacy,
    pub distancing: DistancingFractions,
    pub quarantine_adherence: f64,
    /// Whether quarantine also suppresses household contacts.
    pub quarantine_suppresses_home: bool,
    /// Reference population for national-to-simulation scaling.
    pub national_population: f64,
}

impl Default for PolicyScenario {
    fn default() -> Self {
        Self::best_fit_baseline()
    }
}

impl PolicyScenario {
    /// Baseline policy mix under the best-fit calibration.
    pub fn best_fit_baseline() -> Self {
        Self {
            vaccination_coverage: VaccinationCoverage {
                ages_0_4: 0.0,
                ages_5_11: 0.15,
                ages_12_17: 0.54,
                ages_18_plus: 0.73,
            },
            booster_coverage: 0.2,
            rollout_multiplier: 1.0,
            daily_primary_doses: 60.0,
            daily_booster_doses: 70.0,
            pcr_tests_per_day: 1_900_000.0,
            antigen_tests_per_day: 20_000_000.0,
            pcr_false_negative: 0.05,
            antigen_false_negative: 0.25,
            false_positive_rate: 0.005,
            trace_capacity_per_day: 250,
            mask_wearing_fraction: 0.41,
            mask_efficacy: MaskEfficacy::BASELINE,
            distancing: DistancingFractions { work: 0.10, school: 0.0, community: 0.20 },
            quarantine_adherence: 0.60,
            quarantine_suppresses_home: false,
            national_population: DEFAULT_NATIONAL_POPULATION,
        }
    }

    /// Every intervention switched off.
    pub fn none() -> Self {
        Self {
            vaccination_coverage: VaccinationCoverage::zero(),
            booster_coverage: 0.0,
            rollout_multiplier: 0.0,
            daily_primary_doses: 0.0,
            daily_booster_doses: 0.0,
            pcr_tests_per_day: 0.0,
            antigen_tests_per_day: 0.0,
            pcr_false_negative: 0.0,
            antigen_false_negative: 0.0,
            false_positive_rate: 0.0,
            trace_capacity_per_day: 0,
            mask_wearing_fraction: 0.0,
            mask_efficacy: MaskEfficacy::BASELINE,
            distancing: DistancingFractions::zero(),
            quarantine_adherence: 0.0,
            quarantine_suppresses_home: false,
            national_population: DEFAULT_NATIONAL_POPULATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("ages_0_4 coverage", self.vaccination_coverage.ages_0_4),
            ("ages_5_11 coverage", self.vaccination_coverage.ages_5_11),
            ("ages_12_17 coverage", self.vaccination_coverage.ages_12_17),
            ("ages_18_plus coverage", self.vaccination_coverage.ages_18_plus),
            ("booster_coverage", self.booster_coverage),
            ("pcr_false_negative", self.pcr_false_negative),
            ("antigen_false_negative", self.antigen_false_negative),
            ("false_positive_rate", self.false_positive_rate),
            ("mask_wearing_fraction", self.mask_wearing_fraction),
            ("work distancing", self.distancing.work),
            ("school distancing", self.distancing.school),
            ("community distancing", self.distancing.community),
            ("quarantine_adherence", self.quarantine_adherence),
        ];
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        let counts = [
            ("rollout_multiplier", self.rollout_multiplier),
            ("daily_primary_doses", self.daily_primary_doses),
            ("daily_booster_doses", self.daily_booster_doses),
            ("pcr_tests_per_day", self.pcr_tests_per_day),
            ("antigen_tests_per_day", self.antigen_tests_per_day),
        ];
        for (name, value) in counts {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(format!("{name} must be >= 0")));
            }
        }
        if !(self.national_population.is_finite() && self.national_population > 0.0) {
            return Err(Error::config("national_population must be > 0"));
        }
        self.mask_efficacy.validate()
    }

    /// Nationally quoted capacities are scaled by the population ratio.
    pub fn scaled_pcr_capacity(&self, n_agents: u32) -> u32 {
        scale_national(self.pcr_tests_per_day, n_agents, self.national_population)
    }

    pub fn scaled_antigen_capacity(&self, n_agents: u32) -> u32 {
        scale_national(self.antigen_tests_per_day, n_agents, self.national_population)
    }
}

/// Scale a national daily count down to the simulated population.
pub fn scale_national(national_per_day: f64, n_agents: u32, national_population: f64) -> u32 {
    (national_per_day * n_agents as f64 / national_population).floor() as u32
}

/// Quarantine bookkeeping for one agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuarantineState {
    pub quarantined: bool,
    pub days_remaining: u32,
    /// Drawn once per agent per replication: whether this agent complies
    /// with quarantine directives at all.
    pub adherent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestType {
    Pcr,
    Antigen,
}

/// Result of one administered test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestOutcome {
    pub agent_id: AgentId,
    pub test_type: TestType,
    pub day: u32,
    pub result: bool,
}

fn sample_up_to(pool: &[AgentId], k: usize, rng: &mut SimRng) -> Vec<AgentId> {
    if k >= pool.len() {
        pool.to_vec()
    } else {
        index::sample(rng, pool.len(), k).iter().map(|i| pool[i]).collect()
    }
}

/// Quarantine length by disease course: ten days for symptomatic courses,
/// five for asymptomatic courses and uninfected agents.
pub fn quarantine_duration(epi: &AgentEpiState) -> u32 {
    if epi.state.is_infected() && epi.symptomatic_destiny {
        QUARANTINE_DAYS_SYMPTOMATIC
    } else {
        QUARANTINE_DAYS_ASYMPTOMATIC
    }
}

/// Put an agent in quarantine for its course-appropriate duration.
pub fn quarantine_agent(state: &mut SimulationState, agent: AgentId) {
    let days = quarantine_duration(&state.epi[agent as usize]);
    let q = &mut state.quarantine[agent as usize];
    if !q.quarantined {
        q.quarantined = true;
        state.quarantined_ids.push(agent);
    }
    q.days_remaining = q.days_remaining.max(days);
}

/// Daily test allocation.
///
/// PCR capacity is offered to symptomatic non-quarantined agents first,
/// with the remainder allocated randomly. Antigen capacity is offered to
/// recent contacts of agents who tested positive within the priority
/// window, remainder random. No agent is tested twice with the same type
/// on one day; results are drawn from the per-type error rates (false
/// negatives for infected agents, false positives for uninfected ones).
pub fn allocate_tests(state: &mut SimulationState, scenario: &PolicyScenario) -> Vec<TestOutcome> {
    let n_agents = state.epi.len() as u32;
    let pcr_capacity = scenario.scaled_pcr_capacity(n_agents) as usize;
    let antigen_capacity = scenario.scaled_antigen_capacity(n_agents) as usize;
    let mut outcomes = Vec::new();

    if pcr_capacity > 0 {
        let symptomatic: Vec<AgentId> = (0..n_agents)
            .filter(|&a| {
                !state.quarantine[a as usize].quarantined
                    && state.epi[a as usize].state
                        == crate::epi::DiseaseState::SymptomaticInfectious
            })
            .collect();
        run_test_round(state, scenario, TestType::Pcr, pcr_capacity, symptomatic, &mut outcomes);
    }
    if antigen_capacity > 0 {
        let contacts = recent_positive_contacts(state);
        run_test_round(state, scenario, TestType::Antigen, antigen_capacity, contacts, &mut outcomes);
    }
    outcomes
}

fn run_test_round(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    test_type: TestType,
    capacity: usize,
    priority: Vec<AgentId>,
    outcomes: &mut Vec<TestOutcome>,
) {
    let chosen = sample_up_to(&priority, capacity, &mut state.rng);
    for &agent in &chosen {
        outcomes.push(administer_test(state, scenario, test_type, agent));
    }
    let used = chosen.len();
    if used < capacity {
        let day = state.day;
        let pool: Vec<AgentId> = (0..state.epi.len() as u32)
            .filter(|&a| {
                !state.quarantine[a as usize].quarantined
                    && state.tested_day(test_type)[a as usize] != day
            })
            .collect();
        for agent in sample_up_to(&pool, capacity - used, &mut state.rng) {
            outcomes.push(administer_test(state, scenario, test_type, agent));
        }
    }
}

fn administer_test(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    test_type: TestType,
    agent: AgentId,
) -> TestOutcome {
    let day = state.day;
    state.tested_day_mut(test_type)[agent as usize] = day;
    let infected = state.epi[agent as usize].state.is_infected();
    let false_negative = match test_type {
        TestType::Pcr => scenario.pcr_false_negative,
        TestType::Antigen => scenario.antigen_false_negative,
    };
    let result = if infected {
        !(false_negative > 0.0 && state.rng.gen_bool(false_negative))
    } else {
        scenario.false_positive_rate > 0.0 && state.rng.gen_bool(scenario.false_positive_rate)
    };
    TestOutcome { agent_id: agent, test_type, day, result }
}

/// Non-quarantined, not-yet-antigen-tested contacts of agents who tested
/// positive within the priority window, deduplicated.
fn recent_positive_contacts(state: &mut SimulationState) -> Vec<AgentId> {
    let day = state.day;
    let cutoff = day.saturating_sub(ANTIGEN_PRIORITY_WINDOW_DAYS);
    state.prune_recent_positives(cutoff);
    let epoch = state.next_mark_epoch();
    let mut contacts = Vec::new();
    let SimulationState {
        recent_positives,
        effective,
        mark,
        quarantine,
        tested_antigen_day,
        ..
    } = state;
    for (_, positives) in recent_positives.iter() {
        for &positive in positives {
            for layer in Layer::ALL {
                for &contact in effective.neighbors(layer, positive) {
                    let i = contact as usize;
                    if mark[i] != epoch
                        && !quarantine[i].quarantined
                        && tested_antigen_day[i] != day
                    {
                        mark[i] = epoch;
                        contacts.push(contact);
                    }
                }
            }
        }
    }
    contacts
}

/// Handle one positive result: the agent quarantines if adherent and, if
/// adherent, reports its contacts for tracing. Returns the reported
/// contacts (not yet capacity-limited), excluding agents already
/// quarantined.
pub fn process_positive(
    state: &mut SimulationState,
    _scenario: &PolicyScenario,
    agent: AgentId,
) -> Vec<AgentId> {
    state.last_positive_day[agent as usize] = state.day;
    if !state.quarantine[agent as usize].adherent {
        // Non-adherent agents neither quarantine nor report contacts.
        return Vec::new();
    }
    quarantine_agent(state, agent);
    let mut contacts = Vec::new();
    let SimulationState { effective, quarantine, .. } = state;
    for layer in Layer::ALL {
        for &contact in effective.neighbors(layer, agent) {
            if !quarantine[contact as usize].quarantined {
                contacts.push(contact);
            }
        }
    }
    contacts
}

/// Trace up to the daily capacity from the pooled contact queue (uniform
/// sample when over capacity). Traced adherent contacts quarantine for
/// their course-appropriate duration. Returns the traced agents.
pub fn trace_contacts(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    queue: &[AgentId],
) -> Vec<AgentId> {
    let traced = sample_up_to(queue, scenario.trace_capacity_per_day as usize, &mut state.rng);
    for &contact in &traced {
        if state.quarantine[contact as usize].adherent
            && !state.quarantine[contact as usize].quarantined
        {
            quarantine_agent(state, contact);
        }
    }
    traced
}

/// Draw the fixed mask assignment for a replication: each agent wears a
/// mask for the whole run with probability `mask_wearing_fraction`.
pub fn assign_masks(n_agents: u32, scenario: &PolicyScenario, rng: &mut SimRng) -> Vec<bool> {
    (0..n_agents)
        .map(|_| scenario.mask_wearing_fraction > 0.0 && rng.gen_bool(scenario.mask_wearing_fraction))
        .collect()
}

fn flag_sampled_fraction(
    pool: &[AgentId],
    fraction: f64,
    n_agents: u32,
    rng: &mut SimRng,
) -> Vec<bool> {
    let mut flags = vec![false; n_agents as usize];
    let k = (fraction * pool.len() as f64).round() as usize;
    for agent in sample_up_to(pool, k, rng) {
        flags[agent as usize] = true;
    }
    flags
}

/// Build the distancing-filtered network for one replication.
///
/// Work distancing removes all work edges of a random fraction of employed
/// agents (remote workers); school closure removes all school edges of a
/// random fraction of students; community distancing removes a random
/// fraction of community edges. The home layer is never altered, and the
/// assignment is fixed for the replication.
pub fn apply_distancing(
    net: &LayeredContactNetwork,
    agents: &[AgentRecord],
    scenario: &PolicyScenario,
    rng: &mut SimRng,
) -> EffectiveNetwork {
    let n = net.n_agents();
    let employed: Vec<AgentId> = agents
        .iter()
        .filter(|a| a.workplace_id.is_some())
        .map(|a| a.agent_id)
        .collect();
    let students: Vec<AgentId> = agents
        .iter()
        .filter(|a| a.school_id.is_some())
        .map(|a| a.agent_id)
        .collect();
    let remote = flag_sampled_fraction(&employed, scenario.distancing.work, n, rng);
    let closed = flag_sampled_fraction(&students, scenario.distancing.school, n, rng);

    let community = net.edges(Layer::Community);
    let removed_count =
        (scenario.distancing.community * community.len() as f64).round() as usize;
    let mut removed_edge = vec![false; community.len()];
    if removed_count > 0 && !community.is_empty() {
        for idx in index::sample(rng, community.len(), removed_count.min(community.len())) {
            removed_edge[idx] = true;
        }
    }

    let home = net.edges(Layer::Home).to_vec();
    let school: Vec<_> = net
        .edges(Layer::School)
        .iter()
        .copied()
        .filter(|&(a, b)| !closed[a as usize] && !closed[b as usize])
        .collect();
    let work: Vec<_> = net
        .edges(Layer::Work)
        .iter()
        .copied()
        .filter(|&(a, b)| !remote[a as usize] && !remote[b as usize])
        .collect();
    let community: Vec<_> = community
        .iter()
        .copied()
        .enumerate()
        .filter_map(|(i, e)| (!removed_edge[i]).then_some(e))
        .collect();

    EffectiveNetwork::from_layer_edges(n, [home, school, work, community])
}

/// Apply initialization-time vaccination and boosting coverage targets.
///
/// Coverage is applied per age bracket with dose timing sampled from the
/// input time series; boosters go to a `booster_coverage` share of agents
/// whose primary course is old enough, resetting their waning clock.
pub fn initial_vaccination(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    timing: &TimingSeries,
    waning: &WaningTable,
) -> Result<()> {
    for bracket in 0..VaccinationCoverage::BRACKET_COUNT {
        let coverage = scenario.vaccination_coverage.by_bracket(bracket);
        if coverage <= 0.0 {
            continue;
        }
        let members: Vec<AgentId> = (0..state.epi.len() as u32)
            .filter(|&a| state.age_bracket[a as usize] as usize == bracket)
            .collect();
        let target = (coverage * members.len() as f64).round() as usize;
        let series = primary_timing_series(bracket);
        if !timing.has(series) {
            return Err(Error::config(format!(
                "vaccination coverage set for bracket {bracket} but timing series '{series}' is missing"
            )));
        }
        for agent in sample_up_to(&members, target, &mut state.rng) {
            let offset = timing.sample_day(series, &mut state.rng)?;
            vaccinate_agent(state, agent, (-offset).max(0) as u32);
        }
    }

    if scenario.booster_coverage > 0.0 {
        let eligible: Vec<AgentId> = state
            .vaccinated_ids
            .clone()
            .into_iter()
            .filter(|&a| {
                let imm = &state.epi[a as usize].immunity;
                !imm.boosted && imm.days_since_last_dose >= BOOSTER_ELIGIBILITY_DAYS
            })
            .collect();
        let target =
            (scenario.booster_coverage.min(1.0) * eligible.len() as f64).round() as usize;
        for agent in sample_up_to(&eligible, target, &mut state.rng) {
            let offset = timing.sample_day(BOOSTER_TIMING_SERIES, &mut state.rng)?;
            boost_agent(state, agent, (-offset).max(0) as u32);
        }
    }

    for idx in 0..state.vaccinated_ids.len() {
        let agent = state.vaccinated_ids[idx] as usize;
        apply_vaccine_waning(&mut state.epi[agent].immunity, waning);
    }
    Ok(())
}

fn vaccinate_agent(state: &mut SimulationState, agent: AgentId, days_since_dose: u32) {
    let imm = &mut state.epi[agent as usize].immunity;
    debug_assert!(!imm.vaccinated);
    imm.vaccinated = true;
    imm.doses = 2;
    imm.days_since_last_dose = days_since_dose;
    state.vaccinated_ids.push(agent);
    state.vaccinated_by_bracket[state.age_bracket[agent as usize] as usize] += 1;
}

fn boost_agent(state: &mut SimulationState, agent: AgentId, days_since_dose: u32) {
    let imm = &mut state.epi[agent as usize].immunity;
    debug_assert!(imm.vaccinated && !imm.boosted);
    imm.boosted = true;
    imm.doses += 1;
    imm.days_since_last_dose = days_since_dose;
    state.boosted_count += 1;
}

/// Daily dose throughput during the run, scaled by the rollout multiplier.
///
/// Primary doses close per-bracket coverage deficits; boosters go to
/// eligible agents while the boosted share of the ever-eligible pool is
/// below the scenario target. Fresh doses start at week-0 efficacy.
/// Returns `(primary, booster)` dose counts. Never removes doses.
pub fn rollout_doses(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    waning: &WaningTable,
) -> (u32, u32) {
    let mut given_primary = 0u32;
    let primary_budget =
        (scenario.daily_primary_doses * scenario.rollout_multiplier).round() as usize;
    if primary_budget > 0 {
        let mut deficits = [0usize; VaccinationCoverage::BRACKET_COUNT];
        let mut any_deficit = false;
        for bracket in 0..VaccinationCoverage::BRACKET_COUNT {
            let target = (scenario.vaccination_coverage.by_bracket(bracket)
                * state.bracket_sizes[bracket] as f64)
                .round() as usize;
            let current = state.vaccinated_by_bracket[bracket] as usize;
            if target > current {
                deficits[bracket] = target - current;
                any_deficit = true;
            }
        }
        if any_deficit {
            let mut candidates = Vec::new();
            for bracket in 0..VaccinationCoverage::BRACKET_COUNT {
                if deficits[bracket] == 0 {
                    continue;
                }
                let pool: Vec<AgentId> = (0..state.epi.len() as u32)
                    .filter(|&a| {
                        state.age_bracket[a as usize] as usize == bracket
                            && !state.epi[a as usize].immunity.vaccinated
                    })
                    .collect();
                candidates.extend(sample_up_to(&pool, deficits[bracket], &mut state.rng));
            }
            for agent in sample_up_to(&candidates, primary_budget, &mut state.rng) {
                vaccinate_agent(state, agent, 0);
                apply_vaccine_waning(&mut state.epi[agent as usize].immunity, waning);
                given_primary += 1;
            }
        }
    }

    let mut given_booster = 0u32;
    let booster_budget =
        (scenario.daily_booster_doses * scenario.rollout_multiplier).round() as usize;
    if booster_budget > 0 && scenario.booster_coverage > 0.0 {
        let mut eligible_unboosted = Vec::new();
        let mut ever_eligible = state.boosted_count as usize;
        for idx in 0..state.vaccinated_ids.len() {
            let agent = state.vaccinated_ids[idx];
            let imm = &state.epi[agent as usize].immunity;
            if !imm.boosted && imm.days_since_last_dose >= BOOSTER_ELIGIBILITY_DAYS {
                eligible_unboosted.push(agent);
                ever_eligible += 1;
            }
        }
        let target = (scenario.booster_coverage.min(1.0) * ever_eligible as f64).round() as usize;
        let deficit = target.saturating_sub(state.boosted_count as usize);
        let quota = deficit.min(booster_budget);
        if quota > 0 {
            for agent in sample_up_to(&eligible_unboosted, quota, &mut state.rng) {
                boost_agent(state, agent, 0);
                apply_vaccine_waning(&mut state.epi[agent as usize].immunity, waning);
                given_booster += 1;
            }
        }
    }
    (given_primary, given_booster)
}
