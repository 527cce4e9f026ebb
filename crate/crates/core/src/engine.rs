//! One replication: burn-in initialization from a pre-start incidence
//! series, then the daily loop of intervention passes, transmission over
//! the effective network, and state advancement.
//!
//! Replications are strictly sequential internally and fully determined by
//! their inputs and seed; independent replications can run concurrently on
//! shared read-only inputs.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epi::{
    advance_disease_state, apply_vaccine_waning, infection_probability, resolve_immune_escape,
    AgentEpiState, DiseaseParams, DiseaseState,
};
use crate::error::{Error, Result};
use crate::interventions::{
    age_bracket, allocate_tests, apply_distancing, assign_masks, process_positive, quarantine_agent,
    rollout_doses, trace_contacts, PolicyScenario, QuarantineState, TestType,
    VaccinationCoverage,
};
use crate::population::{AgentId, AgentRecord, EffectiveNetwork, Layer, LayeredContactNetwork};
use crate::rng::{rng_from_seed, SimRng};
use crate::tables::{IncidenceSeries, TimingSeries, WaningTable};

/// Generation sentinel for never-infected agents.
pub const GEN_UNINFECTED: u32 = u32::MAX;

const NEVER: u32 = u32::MAX;

/// Burn-in inputs: how to reconstruct mid-epidemic conditions at day 0.
#[derive(Debug, Clone)]
pub struct BurnInSpec {
    /// New infections per pre-start day, at simulation scale and adjusted
    /// for undercounting.
    pub incidence: IncidenceSeries,
    /// Share of agents carrying immunity from earlier waves.
    pub prior_infected_fraction: f64,
    /// Uniform range for days-since-recovery of prior-wave immunity.
    pub prior_recovery_days: (u32, u32),
    /// Dose-timing distributions for initial vaccination histories.
    pub vaccination_timing: TimingSeries,
    pub start_date_label: String,
}

impl BurnInSpec {
    /// No burn-in: everyone starts susceptible and unvaccinated.
    pub fn empty() -> Self {
        Self {
            incidence: IncidenceSeries::empty(),
            prior_infected_fraction: 0.0,
            prior_recovery_days: (0, 0),
            vaccination_timing: TimingSeries::new(Vec::new()).expect("empty series"),
            start_date_label: String::new(),
        }
    }

    pub fn validate(&self, params: &DiseaseParams) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prior_infected_fraction) {
            return Err(Error::config("prior_infected_fraction must lie in [0, 1]"));
        }
        if self.prior_recovery_days.0 > self.prior_recovery_days.1 {
            return Err(Error::config("prior_recovery_days range is inverted"));
        }
        if self.incidence.total() > 0 && self.incidence.span_days() < params.course_duration() {
            return Err(Error::config(format!(
                "incidence series spans {} days but must cover a full disease course ({} days)",
                self.incidence.span_days(),
                params.course_duration()
            )));
        }
        Ok(())
    }
}

/// Per-day counters for one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCounts {
    pub day: u32,
    pub susceptible: u32,
    pub exposed: u32,
    pub presymptomatic: u32,
    pub symptomatic: u32,
    pub asymptomatic: u32,
    pub infectious_total: u32,
    pub recovered: u32,
    pub quarantined: u32,
    pub new_infections: u32,
    pub tests_used: u32,
    pub positives: u32,
}

/// Per-day counts by disease state for one replication.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunTimeSeries {
    pub days: Vec<DayCounts>,
}

impl RunTimeSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Total new infections over the run (day 0 reports none).
    pub fn cumulative_new_infections(&self) -> u64 {
        self.days.iter().map(|d| d.new_infections as u64).sum()
    }

    /// Maximum concurrent infectious count.
    pub fn peak_infectious(&self) -> u32 {
        self.days.iter().map(|d| d.infectious_total).max().unwrap_or(0)
    }

    /// First day attaining the peak infectious count.
    pub fn peak_day(&self) -> u32 {
        let peak = self.peak_infectious();
        self.days
            .iter()
            .find(|d| d.infectious_total == peak)
            .map(|d| d.day)
            .unwrap_or(0)
    }

    /// Infectious totals per day as floats (for scoring and averaging).
    pub fn infectious_series(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.infectious_total as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.days {
            w.serialize(row).map_err(|e| Error::parse("run series", e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut days = Vec::new();
        for record in csv::Reader::from_reader(reader).deserialize() {
            let row: DayCounts = record.map_err(|e| Error::parse("run series", e.to_string()))?;
            days.push(row);
        }
        Ok(Self { days })
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::new();
        self.write_csv(&mut bytes).expect("in-memory write");
        bytes
    }
}

/// All mutable per-day state of one replication.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub day: u32,
    pub epi: Vec<AgentEpiState>,
    pub quarantine: Vec<QuarantineState>,
    pub masked: Vec<bool>,
    /// Infection generation per agent; seeded and burn-in infections are
    /// generation 0, their infectees 1, and so on. `GEN_UNINFECTED` for
    /// agents never infected during the run.
    pub generation: Vec<u32>,
    pub effective: EffectiveNetwork,
    pub rng: SimRng,
    pub series: RunTimeSeries,
    /// Live tally per disease state, kept in lockstep with transitions.
    pub state_counts: [u32; DiseaseState::COUNT],
    pub(crate) age_bracket: Vec<u8>,
    pub(crate) bracket_sizes: [u32; VaccinationCoverage::BRACKET_COUNT],
    pub(crate) vaccinated_by_bracket: [u32; VaccinationCoverage::BRACKET_COUNT],
    pub(crate) boosted_count: u32,
    pub(crate) vaccinated_ids: Vec<AgentId>,
    pub(crate) quarantined_ids: Vec<AgentId>,
    /// Agents whose state needs daily advancement (infected, plus
    /// recovered agents that can still wane).
    pub(crate) active: Vec<AgentId>,
    pub(crate) tested_pcr_day: Vec<u32>,
    pub(crate) tested_antigen_day: Vec<u32>,
    pub(crate) last_positive_day: Vec<u32>,
    pub(crate) recent_positives: VecDeque<(u32, Vec<AgentId>)>,
    pub(crate) mark: Vec<u32>,
    pub(crate) mark_epoch: u32,
}

impl SimulationState {
    /// An all-susceptible state with unit infectivity multipliers and no
    /// traits drawn: the raw canvas used by oracle tests and custom setups.
    pub fn blank(agents: &[AgentRecord], effective: EffectiveNetwork, seed: u64) -> Self {
        let n = agents.len();
        let mut bracket_sizes = [0u32; VaccinationCoverage::BRACKET_COUNT];
        let age_bracket: Vec<u8> = agents
            .iter()
            .map(|a| {
                let b = age_bracket(a.age);
                bracket_sizes[b] += 1;
                b as u8
            })
            .collect();
        let mut state_counts = [0u32; DiseaseState::COUNT];
        state_counts[DiseaseState::Susceptible.index()] = n as u32;
        Self {
            day: 0,
            epi: (0..n).map(|_| AgentEpiState::susceptible(1.0)).collect(),
            quarantine: vec![QuarantineState::default(); n],
            masked: vec![false; n],
            generation: vec![GEN_UNINFECTED; n],
            effective,
            rng: rng_from_seed(seed),
            series: RunTimeSeries::default(),
            state_counts,
            age_bracket,
            bracket_sizes,
            vaccinated_by_bracket: [0; VaccinationCoverage::BRACKET_COUNT],
            boosted_count: 0,
            vaccinated_ids: Vec::new(),
            quarantined_ids: Vec::new(),
            active: Vec::new(),
            tested_pcr_day: vec![NEVER; n],
            tested_antigen_day: vec![NEVER; n],
            last_positive_day: vec![NEVER; n],
            recent_positives: VecDeque::new(),
            mark: vec![0; n],
            mark_epoch: 0,
        }
    }

    pub fn n_agents(&self) -> u32 {
        self.epi.len() as u32
    }

    pub(crate) fn tested_day(&self, test_type: TestType) -> &[u32] {
        match test_type {
            TestType::Pcr => &self.tested_pcr_day,
            TestType::Antigen => &self.tested_antigen_day,
        }
    }

    pub(crate) fn tested_day_mut(&mut self, test_type: TestType) -> &mut [u32] {
        match test_type {
            TestType::Pcr => &mut self.tested_pcr_day,
            TestType::Antigen => &mut self.tested_antigen_day,
        }
    }

    pub(crate) fn next_mark_epoch(&mut self) -> u32 {
        self.mark_epoch += 1;
        self.mark_epoch
    }

    pub(crate) fn prune_recent_positives(&mut self, cutoff_day: u32) {
        while let Some(&(day, _)) = self.recent_positives.front() {
            if day < cutoff_day {
                self.recent_positives.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn quarantined_count(&self) -> u32 {
        self.quarantined_ids.len() as u32
    }

    /// Seed an infection into a susceptible agent at the given generation.
    pub fn seed_infection(&mut self, agent: AgentId, generation: u32, params: &DiseaseParams) {
        let idx = agent as usize;
        assert_eq!(self.epi[idx].state, DiseaseState::Susceptible);
        let Self { epi, rng, .. } = self;
        epi[idx].expose(params, rng);
        self.generation[idx] = generation;
        self.state_counts[DiseaseState::Susceptible.index()] -= 1;
        self.state_counts[DiseaseState::Exposed.index()] += 1;
        self.active.push(agent);
    }

    /// Force an agent into a specific state (test setup hook). Keeps the
    /// live tallies and the active list consistent.
    pub fn force_state(&mut self, agent: AgentId, state: DiseaseState, days_in_state: u32) {
        let idx = agent as usize;
        let old = self.epi[idx].state;
        self.state_counts[old.index()] -= 1;
        self.state_counts[state.index()] += 1;
        self.epi[idx].state = state;
        self.epi[idx].days_in_state = days_in_state;
        let was_tracked = old != DiseaseState::Susceptible;
        let track = state != DiseaseState::Susceptible;
        if track && !was_tracked {
            self.active.push(agent);
        } else if !track && was_tracked {
            self.active.retain(|&a| a != agent);
        }
        if self.generation[idx] == GEN_UNINFECTED && state != DiseaseState::Susceptible {
            self.generation[idx] = 0;
        }
    }

    /// Whether any agent of generation `max_gen` or earlier still carries
    /// an unfinished infection.
    pub fn any_infection_in_generation_at_most(&self, max_gen: u32) -> bool {
        self.active.iter().any(|&a| {
            let idx = a as usize;
            self.generation[idx] <= max_gen && self.epi[idx].state.is_infected()
        })
    }

    /// Number of agents at exactly the given infection generation.
    pub fn generation_count(&self, generation: u32) -> u64 {
        self.generation.iter().filter(|&&g| g == generation).count() as u64
    }

    /// Record the day-0 row after a manual setup (seeded infections,
    /// forced states). `initialize` does this itself.
    pub fn snapshot_day_zero(&mut self) {
        assert_eq!(self.day, 0);
        assert!(self.series.is_empty());
        self.push_day_row(0, 0, 0);
    }

    /// Full recount of the per-state tallies (consistency checks).
    pub fn tally_states(&self) -> [u32; DiseaseState::COUNT] {
        let mut counts = [0u32; DiseaseState::COUNT];
        for agent in &self.epi {
            counts[agent.state.index()] += 1;
        }
        counts
    }

    fn push_day_row(&mut self, new_infections: u32, tests_used: u32, positives: u32) {
        let c = &self.state_counts;
        debug_assert_eq!(c.iter().sum::<u32>(), self.n_agents());
        let row = DayCounts {
            day: self.day,
            susceptible: c[DiseaseState::Susceptible.index()],
            exposed: c[DiseaseState::Exposed.index()],
            presymptomatic: c[DiseaseState::Presymptomatic.index()],
            symptomatic: c[DiseaseState::SymptomaticInfectious.index()],
            asymptomatic: c[DiseaseState::AsymptomaticInfectious.index()],
            infectious_total: c[DiseaseState::Presymptomatic.index()]
                + c[DiseaseState::SymptomaticInfectious.index()]
                + c[DiseaseState::AsymptomaticInfectious.index()],
            recovered: c[DiseaseState::Recovered.index()],
            quarantined: self.quarantined_count(),
            new_infections,
            tests_used,
            positives,
        };
        self.series.days.push(row);
    }
}

/// Build the day-0 state: traits, masks, distancing, vaccination histories,
/// prior-wave immunity filtered by immune escape, and the burn-in replay of
/// the pre-start incidence series.
pub fn initialize(
    agents: &[AgentRecord],
    net: &LayeredContactNetwork,
    scenario: &PolicyScenario,
    burn_in: &BurnInSpec,
    params: &DiseaseParams,
    waning: &WaningTable,
    seed: u64,
) -> Result<SimulationState> {
    scenario.validate()?;
    params.validate()?;
    burn_in.validate(params)?;
    let n = agents.len() as u32;
    if n != net.n_agents() {
        return Err(Error::config("agent table and network sizes disagree"));
    }
    if burn_in.incidence.total() > n as u64 {
        return Err(Error::config(
            "cumulative burn-in incidence exceeds the population size",
        ));
    }

    let mut rng = rng_from_seed(seed);

    // Fixed draw order: infectivity multipliers, adherence traits, masks,
    // distancing; then vaccination, prior immunity, and burn-in below.
    let multipliers: Vec<f64> = (0..n)
        .map(|_| params.infectivity_distribution.sample(&mut rng))
        .collect();
    let adherent: Vec<bool> = (0..n)
        .map(|_| scenario.quarantine_adherence > 0.0 && rng.gen_bool(scenario.quarantine_adherence))
        .collect();
    let masked = assign_masks(n, scenario, &mut rng);
    let effective = apply_distancing(net, agents, scenario, &mut rng);

    let mut state = SimulationState::blank(agents, effective, 0);
    state.rng = rng;
    state.masked = masked;
    for (i, agent) in state.epi.iter_mut().enumerate() {
        agent.infectivity_multiplier = multipliers[i];
    }
    for (i, q) in state.quarantine.iter_mut().enumerate() {
        q.adherent = adherent[i];
    }

    crate::interventions::initial_vaccination(
        &mut state,
        scenario,
        &burn_in.vaccination_timing,
        waning,
    )?;

    // Prior-wave natural immunity, thinned by immune escape.
    if burn_in.prior_infected_fraction > 0.0 {
        for i in 0..n as usize {
            if !state.rng.gen_bool(burn_in.prior_infected_fraction) {
                continue;
            }
            {
                let SimulationState { epi, rng, .. } = &mut state;
                epi[i].immunity.prior_variant_infection = true;
                resolve_immune_escape(&mut epi[i], params, burn_in.prior_recovery_days, rng);
            }
            if state.epi[i].state == DiseaseState::Recovered {
                state.state_counts[DiseaseState::Susceptible.index()] -= 1;
                state.state_counts[DiseaseState::Recovered.index()] += 1;
                if params
                    .natural_immunity_waning
                    .can_wane_after(state.epi[i].days_in_state)
                {
                    state.active.push(i as AgentId);
                }
            }
        }
    }

    // Burn-in replay: select the retro-infected agents day by day (oldest
    // first), then advance each deterministically to its day-0 state.
    let mut susceptible_pool: Vec<AgentId> = (0..n)
        .filter(|&a| state.epi[a as usize].state == DiseaseState::Susceptible)
        .collect();
    let mut selected: Vec<(AgentId, i32)> = Vec::new();
    for row in burn_in.incidence.rows() {
        for _ in 0..row.new_infections {
            if susceptible_pool.is_empty() {
                return Err(Error::config(
                    "burn-in incidence exceeds available susceptible agents",
                ));
            }
            let pick = state.rng.gen_range(0..susceptible_pool.len());
            let agent = susceptible_pool.swap_remove(pick);
            selected.push((agent, row.day));
        }
    }
    for &(agent, day) in &selected {
        state.seed_infection(agent, 0, params);
        for _ in 0..(-day) {
            let SimulationState { epi, rng, state_counts, .. } = &mut state;
            if let Some((from, to)) = advance_disease_state(&mut epi[agent as usize], params, rng)
            {
                state_counts[from.index()] -= 1;
                state_counts[to.index()] += 1;
            }
        }
    }
    // Drop agents that no longer need daily advancement.
    {
        let SimulationState { active, epi, .. } = &mut state;
        active.retain(|&a| match epi[a as usize].state {
            DiseaseState::Susceptible => false,
            DiseaseState::Recovered => params
                .natural_immunity_waning
                .can_wane_after(epi[a as usize].days_in_state),
            _ => true,
        });
    }

    state.push_day_row(0, 0, 0);
    Ok(state)
}

/// Advance the simulation by one day.
///
/// Pass order within the day: weekly vaccine waning, dose rollout, test
/// allocation, positive processing and contact tracing, transmission over
/// the effective network (reading the previous day's infectious set), then
/// state advancement and quarantine countdown.
pub fn step_day(
    state: &mut SimulationState,
    scenario: &PolicyScenario,
    params: &DiseaseParams,
    waning: &WaningTable,
) {
    state.day += 1;
    let day = state.day;

    // Vaccine protection is refreshed weekly.
    if day % 7 == 0 {
        let SimulationState { epi, vaccinated_ids, .. } = state;
        for &a in vaccinated_ids.iter() {
            apply_vaccine_waning(&mut epi[a as usize].immunity, waning);
        }
    }

    rollout_doses(state, scenario, waning);

    let outcomes = allocate_tests(state, scenario);
    let tests_used = outcomes.len() as u32;
    let positives: Vec<AgentId> =
        outcomes.iter().filter(|o| o.result).map(|o| o.agent_id).collect();
    let positives_count = positives.len() as u32;

    let epoch = state.next_mark_epoch();
    let mut trace_queue = Vec::new();
    for &positive in &positives {
        for contact in process_positive(state, scenario, positive) {
            if state.mark[contact as usize] != epoch {
                state.mark[contact as usize] = epoch;
                trace_queue.push(contact);
            }
        }
    }
    trace_contacts(state, scenario, &trace_queue);
    if !positives.is_empty() {
        state.recent_positives.push_back((day, positives));
    }

    let new_infections = transmit(state, scenario, params);
    advance_all(state, params);
    countdown_quarantine(state);

    {
        let SimulationState { epi, vaccinated_ids, .. } = state;
        for &a in vaccinated_ids.iter() {
            epi[a as usize].immunity.days_since_last_dose += 1;
        }
    }

    state.push_day_row(new_infections, tests_used, positives_count);
}

/// Bernoulli transmission over every infectious-susceptible edge of the
/// effective network, honoring quarantine suppression. Each susceptible is
/// evaluated against its infectious neighbors in deterministic order and
/// infected at most once per day.
fn transmit(state: &mut SimulationState, scenario: &PolicyScenario, params: &DiseaseParams) -> u32 {
    let mut infectious: Vec<AgentId> = state
        .active
        .iter()
        .copied()
        .filter(|&a| state.epi[a as usize].state.is_infectious())
        .collect();
    infectious.sort_unstable();

    let suppress_home = scenario.quarantine_suppresses_home;
    let mut newly_exposed: Vec<AgentId> = Vec::new();
    {
        let SimulationState {
            epi,
            quarantine,
            masked,
            generation,
            effective,
            rng,
            state_counts,
            ..
        } = state;
        for &i in &infectious {
            let ii = i as usize;
            let infector_quarantined = quarantine[ii].quarantined;
            let infector_masked = masked[ii];
            for layer in Layer::ALL {
                if infector_quarantined && (layer != Layer::Home || suppress_home) {
                    continue;
                }
                for &j in effective.neighbors(layer, i) {
                    let jj = j as usize;
                    if epi[jj].state != DiseaseState::Susceptible {
                        continue;
                    }
                    if quarantine[jj].quarantined && (layer != Layer::Home || suppress_home) {
                        continue;
                    }
                    let p = infection_probability(
                        &epi[ii],
                        infector_masked,
                        &epi[jj],
                        masked[jj],
                        params,
                        &scenario.mask_efficacy,
                    );
                    if p > 0.0 && rng.gen_bool(p) {
                        epi[jj].expose(params, rng);
                        generation[jj] = generation[ii].saturating_add(1);
                        state_counts[DiseaseState::Susceptible.index()] -= 1;
                        state_counts[DiseaseState::Exposed.index()] += 1;
                        newly_exposed.push(j);
                    }
                }
            }
        }
    }
    let count = newly_exposed.len() as u32;
    state.active.extend(newly_exposed);
    count
}

/// Advance every tracked agent by one day, handling symptom-onset
/// self-isolation and dropping agents that no longer need tracking.
fn advance_all(state: &mut SimulationState, params: &DiseaseParams) {
    let active = std::mem::take(&mut state.active);
    let mut retained = Vec::with_capacity(active.len());
    for &agent in &active {
        let idx = agent as usize;
        let change = {
            let SimulationState { epi, rng, .. } = &mut *state;
            advance_disease_state(&mut epi[idx], params, rng)
        };
        if let Some((from, to)) = change {
            state.state_counts[from.index()] -= 1;
            state.state_counts[to.index()] += 1;
            // Symptom onset: adherent agents self-isolate.
            if to == DiseaseState::SymptomaticInfectious
                && state.quarantine[idx].adherent
                && !state.quarantine[idx].quarantined
            {
                quarantine_agent(state, agent);
            }
        }
        let keep = match state.epi[idx].state {
            DiseaseState::Susceptible => false,
            DiseaseState::Recovered => params
                .natural_immunity_waning
                .can_wane_after(state.epi[idx].days_in_state),
            _ => true,
        };
        if keep {
            retained.push(agent);
        }
    }
    state.active = retained;
}

fn countdown_quarantine(state: &mut SimulationState) {
    let SimulationState { quarantine, quarantined_ids, .. } = state;
    quarantined_ids.retain(|&agent| {
        let q = &mut quarantine[agent as usize];
        q.days_remaining = q.days_remaining.saturating_sub(1);
        if q.days_remaining == 0 {
            q.quarantined = false;
            false
        } else {
            true
        }
    });
}

/// Run one full replication: initialize, then `horizon` day steps.
/// Identical inputs and seed produce a bit-identical series.
#[allow(clippy::too_many_arguments)]
pub fn run_replication(
    agents: &[AgentRecord],
    net: &LayeredContactNetwork,
    scenario: &PolicyScenario,
    params: &DiseaseParams,
    waning: &WaningTable,
    burn_in: &BurnInSpec,
    horizon: u32,
    seed: u64,
) -> Result<RunTimeSeries> {
    let mut state = initialize(agents, net, scenario, burn_in, params, waning, seed)?;
    for _ in 0..horizon {
        step_day(&mut state, scenario, params, waning);
    }
    Ok(state.series)
}

/// Shared read-only inputs for running replications.
#[derive(Clone, Copy)]
pub struct SimSetup<'a> {
    pub agents: &'a [AgentRecord],
    pub net: &'a LayeredContactNetwork,
    pub burn_in: &'a BurnInSpec,
    pub waning: &'a WaningTable,
    pub horizon: u32,
}

impl SimSetup<'_> {
    pub fn run(&self, scenario: &PolicyScenario, params: &DiseaseParams, seed: u64) -> Result<RunTimeSeries> {
        run_replication(
            self.agents,
            self.net,
            scenario,
            params,
            self.waning,
            self.burn_in,
            self.horizon,
            seed,
        )
    }
}
