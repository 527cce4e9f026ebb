//! Disease state machine, individual heterogeneity, and the per-contact
//! infection probability.
//!
//! Agents move through a COVID-like course: susceptible agents become
//! exposed on infectious contact; after the latent period they turn either
//! presymptomatic (later symptomatic) or asymptomatic; infectious agents
//! recover after a fixed number of days; recovered agents probabilistically
//! wane back to susceptible. All modifiers of the per-contact transmission
//! probability (masks, vaccine protection, stage and per-agent infectivity)
//! compose multiplicatively.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::tables::WaningTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiseaseState {
    Susceptible,
    Exposed,
    Presymptomatic,
    SymptomaticInfectious,
    AsymptomaticInfectious,
    Recovered,
}

impl DiseaseState {
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        match self {
            DiseaseState::Susceptible => 0,
            DiseaseState::Exposed => 1,
            DiseaseState::Presymptomatic => 2,
            DiseaseState::SymptomaticInfectious => 3,
            DiseaseState::AsymptomaticInfectious => 4,
            DiseaseState::Recovered => 5,
        }
    }

    pub fn is_infectious(self) -> bool {
        matches!(
            self,
            DiseaseState::Presymptomatic
                | DiseaseState::SymptomaticInfectious
                | DiseaseState::AsymptomaticInfectious
        )
    }

    /// True while the agent carries the infection (exposed or infectious).
    pub fn is_infected(self) -> bool {
        self.is_infectious() || self == DiseaseState::Exposed
    }

    /// The legal transition set of the state machine.
    pub fn can_transition_to(self, next: DiseaseState) -> bool {
        use DiseaseState::*;
        matches!(
            (self, next),
            (Susceptible, Exposed)
                | (Exposed, Presymptomatic)
                | (Exposed, AsymptomaticInfectious)
                | (Presymptomatic, SymptomaticInfectious)
                | (SymptomaticInfectious, Recovered)
                | (AsymptomaticInfectious, Recovered)
                | (Recovered, Susceptible)
        )
    }
}

/// Per-agent infectivity heterogeneity. Both variants have mean 1, so the
/// base transmission rate stays the population mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InfectivityDistribution {
    /// Every agent transmits at exactly the base rate.
    Constant,
    /// Gamma with the given shape and scale `1/shape`; small shapes give
    /// heavy-tailed "super-spreader" profiles.
    Gamma { shape: f64 },
}

impl InfectivityDistribution {
    pub fn sample(self, rng: &mut SimRng) -> f64 {
        match self {
            InfectivityDistribution::Constant => 1.0,
            InfectivityDistribution::Gamma { shape } => {
                let gamma = Gamma::new(shape, 1.0 / shape).expect("validated shape");
                gamma.sample(rng)
            }
        }
    }

    pub fn validate(self) -> Result<()> {
        if let InfectivityDistribution::Gamma { shape } = self {
            if !(shape.is_finite() && shape > 0.0) {
                return Err(Error::config("infectivity gamma shape must be > 0"));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant daily hazard of losing natural immunity, keyed by
/// days since recovery. The final segment extends indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardCurve {
    /// `(from_day, daily_hazard)` breakpoints in ascending day order.
    pub breakpoints: Vec<(u32, f64)>,
}

impl HazardCurve {
    pub fn new(breakpoints: Vec<(u32, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::config("hazard curve needs at least one breakpoint"));
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config("hazard breakpoints must strictly ascend"));
        }
        if breakpoints.iter().any(|&(_, h)| !(0.0..=1.0).contains(&h)) {
            return Err(Error::config("hazards must lie in [0, 1]"));
        }
        Ok(Self { breakpoints })
    }

    /// Zero hazard forever: recovered agents never wane.
    pub fn never() -> Self {
        Self { breakpoints: vec![(0, 0.0)] }
    }

    /// Zero hazard for `delay_days`, then a constant daily hazard.
    pub fn delayed_constant(delay_days: u32, daily_hazard: f64) -> Result<Self> {
        if delay_days == 0 {
            Self::new(vec![(0, daily_hazard)])
        } else {
            Self::new(vec![(0, 0.0), (delay_days, daily_hazard)])
        }
    }

    pub fn hazard(&self, days_since_recovery: u32) -> f64 {
        let idx = match self
            .breakpoints
            .binary_search_by_key(&days_since_recovery, |b| b.0)
        {
            Ok(i) => i,
            Err(0) => return 0.0,
            Err(i) => i - 1,
        };
        self.breakpoints[idx].1
    }

    /// Whether a nonzero hazard can still occur at or after the given day.
    pub fn can_wane_after(&self, days_since_recovery: u32) -> bool {
        self.breakpoints
            .iter()
            .enumerate()
            .any(|(i, &(start, h))| {
                h > 0.0
                    && (i + 1 == self.breakpoints.len()
                        || self.breakpoints[i + 1].0 > days_since_recovery
                        || start >= days_since_recovery)
            })
    }
}

/// Disease-course parameters. Durations are integer days and homogeneous
/// across agents within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiseaseParams {
    /// Probability of transmission per infectious contact per day at
    /// neutral multipliers.
    pub base_transmission_rate: f64,
    pub latent_duration: u32,
    pub presymptomatic_duration: u32,
    pub infectious_duration: u32,
    pub asymptomatic_fraction: f64,
    pub asymptomatic_infectivity_multiplier: f64,
    pub presymptomatic_infectivity_multiplier: f64,
    pub infectivity_distribution: InfectivityDistribution,
    /// Probability that immunity from a prior-variant infection does not
    /// protect against the simulated variant.
    pub immune_escape: f64,
    pub natural_immunity_waning: HazardCurve,
}

impl Default for DiseaseParams {
    fn default() -> Self {
        Self::best_fit()
    }
}

impl DiseaseParams {
    /// The calibrated parameterization with the lowest fit error.
    pub fn best_fit() -> Self {
        Self {
            base_transmission_rate: 0.20,
            latent_duration: 4,
            presymptomatic_duration: 2,
            infectious_duration: 5,
            asymptomatic_fraction: 0.35,
            asymptomatic_infectivity_multiplier: 0.75,
            presymptomatic_infectivity_multiplier: 0.75,
            infectivity_distribution: InfectivityDistribution::Gamma { shape: 0.5 },
            immune_escape: 0.40,
            // No waning for 90 days, then a constant hazard giving a median
            // protection duration of about nine months.
            natural_immunity_waning: HazardCurve::delayed_constant(90, 0.003844)
                .expect("valid default curve"),
        }
    }

    /// Alternative calibration with a lower transmission rate and lower
    /// antigen false-negative rate.
    pub fn tractable_strain() -> Self {
        Self {
            base_transmission_rate: 0.175,
            ..Self::best_fit()
        }
    }

    /// Sensitivity calibration with high immune escape.
    pub fn high_immune_escape() -> Self {
        Self {
            base_transmission_rate: 0.125,
            latent_duration: 3,
            infectious_duration: 4,
            immune_escape: 0.80,
            ..Self::best_fit()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("base_transmission_rate", self.base_transmission_rate),
            ("asymptomatic_fraction", self.asymptomatic_fraction),
            ("immune_escape", self.immune_escape),
        ];
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        let mults = [
            (
                "asymptomatic_infectivity_multiplier",
                self.asymptomatic_infectivity_multiplier,
            ),
            (
                "presymptomatic_infectivity_multiplier",
                self.presymptomatic_infectivity_multiplier,
            ),
        ];
        for (name, value) in mults {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1]")));
            }
        }
        if self.latent_duration == 0
            || self.presymptomatic_duration == 0
            || self.infectious_duration == 0
        {
            return Err(Error::config("durations must be at least one day"));
        }
        self.infectivity_distribution.validate()
    }

    /// Days spent in each non-terminal state.
    pub fn state_duration(&self, state: DiseaseState) -> u32 {
        match state {
            DiseaseState::Exposed => self.latent_duration,
            DiseaseState::Presymptomatic => self.presymptomatic_duration,
            DiseaseState::SymptomaticInfectious => self.infectious_duration,
            // Asymptomatic agents are infectious for the same total window
            // as the presymptomatic-then-symptomatic course.
            DiseaseState::AsymptomaticInfectious => {
                self.presymptomatic_duration + self.infectious_duration
            }
            _ => u32::MAX,
        }
    }

    /// Full course length from exposure to recovery.
    pub fn course_duration(&self) -> u32 {
        self.latent_duration + self.presymptomatic_duration + self.infectious_duration
    }
}

/// Vaccination and prior-infection status for one agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImmunityRecord {
    pub vaccinated: bool,
    pub doses: u32,
    pub days_since_last_dose: u32,
    pub boosted: bool,
    /// Reduction of the probability of being infected, in [0, 1].
    pub infection_protection_multiplier: f64,
    /// Reduction of onward transmission on breakthrough, in [0, 1].
    pub transmission_reduction_multiplier: f64,
    pub days_since_recovery: Option<u32>,
    pub prior_variant_infection: bool,
}

/// Full epidemiological state of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEpiState {
    pub state: DiseaseState,
    pub days_in_state: u32,
    /// Per-agent infectivity factor, mean 1 across the population.
    pub infectivity_multiplier: f64,
    pub immunity: ImmunityRecord,
    /// Drawn at exposure: whether this course develops symptoms.
    pub symptomatic_destiny: bool,
}

impl AgentEpiState {
    pub fn susceptible(infectivity_multiplier: f64) -> Self {
        Self {
            state: DiseaseState::Susceptible,
            days_in_state: 0,
            infectivity_multiplier,
            immunity: ImmunityRecord::default(),
            symptomatic_destiny: false,
        }
    }

    /// Begin a new infection course: the agent turns Exposed and its
    /// symptomatic destiny is drawn.
    pub fn expose(&mut self, params: &DiseaseParams, rng: &mut SimRng) {
        debug_assert_eq!(self.state, DiseaseState::Susceptible);
        self.state = DiseaseState::Exposed;
        self.days_in_state = 0;
        self.symptomatic_destiny = !rng.gen_bool(params.asymptomatic_fraction);
        self.immunity.days_since_recovery = None;
    }
}

/// Mask efficacy pair: fractional reduction of the wearer's probability of
/// infection, and of onward transmission when the wearer is infectious.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskEfficacy {
    pub infection: f64,
    pub transmission: f64,
}

impl MaskEfficacy {
    pub const BASELINE: MaskEfficacy = MaskEfficacy { infection: 0.40, transmission: 0.60 };
    pub const UPGRADED: MaskEfficacy = MaskEfficacy { infection: 0.57, transmission: 0.76 };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.infection) || !(0.0..=1.0).contains(&self.transmission) {
            return Err(Error::config("mask efficacies must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Probability that an interaction between an infectious and a susceptible
/// agent causes an infection.
///
/// All modifiers compose multiplicatively: base rate, the infector's
/// per-agent and stage multipliers, masks on either side, the susceptible
/// agent's vaccine protection, and the infector's transmission reduction.
/// The result is clamped to [0, 1].
pub fn infection_probability(
    infector: &AgentEpiState,
    infector_masked: bool,
    susceptible: &AgentEpiState,
    susceptible_masked: bool,
    params: &DiseaseParams,
    masks: &MaskEfficacy,
) -> f64 {
    assert!(
        infector.state.is_infectious(),
        "infection_probability requires an infectious infector"
    );
    assert_eq!(
        susceptible.state,
        DiseaseState::Susceptible,
        "infection_probability requires a susceptible target"
    );
    let stage = match infector.state {
        DiseaseState::Presymptomatic => params.presymptomatic_infectivity_multiplier,
        DiseaseState::AsymptomaticInfectious => params.asymptomatic_infectivity_multiplier,
        _ => 1.0,
    };
    let mut p = params.base_transmission_rate * infector.infectivity_multiplier * stage;
    if infector_masked {
        p *= 1.0 - masks.transmission;
    }
    if susceptible_masked {
        p *= 1.0 - masks.infection;
    }
    p *= 1.0 - susceptible.immunity.infection_protection_multiplier;
    p *= 1.0 - infector.immunity.transmission_reduction_multiplier;
    p.clamp(0.0, 1.0)
}

/// Advance one agent by one day: increment the state clock and perform the
/// transition once the configured duration is reached. Recovered agents
/// wane back to susceptible with the daily hazard from the waning curve.
///
/// Returns the `(from, to)` pair when a transition occurred.
pub fn advance_disease_state(
    agent: &mut AgentEpiState,
    params: &DiseaseParams,
    rng: &mut SimRng,
) -> Option<(DiseaseState, DiseaseState)> {
    assert_ne!(
        agent.state,
        DiseaseState::Susceptible,
        "susceptible agents have no course to advance"
    );
    agent.days_in_state += 1;
    let from = agent.state;
    let to = match from {
        DiseaseState::Recovered => {
            agent.immunity.days_since_recovery = Some(agent.days_in_state);
            let hazard = params.natural_immunity_waning.hazard(agent.days_in_state);
            if hazard > 0.0 && rng.gen_bool(hazard) {
                DiseaseState::Susceptible
            } else {
                return None;
            }
        }
        state if agent.days_in_state >= params.state_duration(state) => match state {
            DiseaseState::Exposed => {
                if agent.symptomatic_destiny {
                    DiseaseState::Presymptomatic
                } else {
                    DiseaseState::AsymptomaticInfectious
                }
            }
            DiseaseState::Presymptomatic => DiseaseState::SymptomaticInfectious,
            DiseaseState::SymptomaticInfectious | DiseaseState::AsymptomaticInfectious => {
                DiseaseState::Recovered
            }
            _ => unreachable!(),
        },
        _ => return None,
    };
    debug_assert!(from.can_transition_to(to));
    agent.state = to;
    agent.days_in_state = 0;
    match to {
        DiseaseState::Recovered => agent.immunity.days_since_recovery = Some(0),
        DiseaseState::Susceptible => agent.immunity.days_since_recovery = None,
        _ => {}
    }
    Some((from, to))
}

/// Refresh a vaccinated agent's protection multipliers from the waning
/// table, keyed by dose count and weeks since the last dose. No-op for
/// unvaccinated agents.
pub fn apply_vaccine_waning(immunity: &mut ImmunityRecord, table: &WaningTable) {
    if !immunity.vaccinated {
        return;
    }
    let week = immunity.days_since_last_dose / 7;
    let (infection, transmission) = table.lookup(immunity.doses, week);
    immunity.infection_protection_multiplier = infection;
    immunity.transmission_reduction_multiplier = transmission;
}

/// Resolve whether a prior-variant infection protects against the simulated
/// variant. Applied once at initialization to agents with
/// `prior_variant_infection`.
///
/// With probability `immune_escape` the agent starts fully susceptible;
/// otherwise it starts Recovered with days-since-recovery drawn uniformly
/// from `recovery_days`.
pub fn resolve_immune_escape(
    agent: &mut AgentEpiState,
    params: &DiseaseParams,
    recovery_days: (u32, u32),
    rng: &mut SimRng,
) {
    debug_assert!(agent.immunity.prior_variant_infection);
    if rng.gen_bool(params.immune_escape) {
        agent.state = DiseaseState::Susceptible;
        agent.days_in_state = 0;
        agent.immunity.days_since_recovery = None;
    } else {
        let (lo, hi) = recovery_days;
        let days = rng.gen_range(lo..=hi.max(lo));
        agent.state = DiseaseState::Recovered;
        agent.days_in_state = days;
        agent.immunity.days_since_recovery = Some(days);
    }
}
