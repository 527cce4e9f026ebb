//! Composite configuration files.
//!
//! One TOML file describes a full simulation setup: population generation
//! inputs, disease parameters, the baseline policy scenario, burn-in
//! inputs, and run settings. Table paths are resolved relative to the
//! config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::{CalibParam, CalibrationTarget, GridAxis};
use crate::engine::BurnInSpec;
use crate::epi::DiseaseParams;
use crate::error::{Error, Result};
use crate::interventions::PolicyScenario;
use crate::population::PopulationConfig;
use crate::scenarios::ScenarioLibrary;
use crate::sweep::SweepPlan;
use crate::tables::{
    AgeDistribution, AgeRateTable, IncidenceSeries, SizeDistribution, TimingSeries, WaningTable,
};

#[derive(Debug, Deserialize)]
struct PopulationSection {
    n_agents: u32,
    community_contact_mean: f64,
    community_contact_dispersion: f64,
    #[serde(default)]
    seed: u64,
    age_distribution: PathBuf,
    household_sizes: PathBuf,
    school_sizes: PathBuf,
    workplace_sizes: PathBuf,
    employment_rates: PathBuf,
    enrollment_rates: PathBuf,
}

#[derive(Debug, Deserialize)]
struct DiseaseSection {
    #[serde(flatten)]
    params: DiseaseParams,
    vaccine_waning_table: PathBuf,
}

#[derive(Debug, Deserialize)]
struct BurnInSection {
    incidence: PathBuf,
    prior_infected_fraction: f64,
    prior_recovery_days: [u32; 2],
    vaccination_timing: PathBuf,
    #[serde(default)]
    start_date_label: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunSection {
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_horizon() -> u32 {
    61
}

fn default_replications() -> u32 {
    200
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            replications: default_replications(),
            master_seed: 0,
            output: None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct TargetSection {
    path: PathBuf,
    #[serde(default)]
    window: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
struct AxisSpec {
    param: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CalibrateSection {
    axes: Vec<AxisSpec>,
    #[serde(default = "default_reps_per_point")]
    pub reps_per_point: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_reps_per_point() -> u32 {
    20
}

#[derive(Debug, Deserialize)]
struct SimConfigFile {
    population: PopulationSection,
    disease: DiseaseSection,
    #[serde(default)]
    scenario: PolicyScenario,
    burnin: BurnInSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    scenario_library: Option<PathBuf>,
    #[serde(default)]
    calibration_target: Option<TargetSection>,
    #[serde(default)]
    calibrate: Option<CalibrateSection>,
}

/// Fully loaded simulation setup.
#[derive(Debug)]
pub struct SimConfig {
    pub population: PopulationConfig,
    pub params: DiseaseParams,
    pub scenario: PolicyScenario,
    pub burn_in: BurnInSpec,
    pub waning: WaningTable,
    pub library: Option<ScenarioLibrary>,
    pub run: RunSection,
    pub target: Option<CalibrationTarget>,
    pub calibrate: Option<(Vec<GridAxis>, u32, u64)>,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let file: SimConfigFile =
            toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));

        let pop = &file.population;
        let population = PopulationConfig {
            n_agents: pop.n_agents,
            age_distribution: AgeDistribution::from_path(&resolve(base, &pop.age_distribution))?,
            employment_rate_by_age: AgeRateTable::from_path(&resolve(base, &pop.employment_rates))?,
            enrollment_rate_by_age: AgeRateTable::from_path(&resolve(base, &pop.enrollment_rates))?,
            household_size_distribution: SizeDistribution::from_path(&resolve(
                base,
                &pop.household_sizes,
            ))?,
            school_size_distribution: SizeDistribution::from_path(&resolve(base, &pop.school_sizes))?,
            workplace_size_distribution: SizeDistribution::from_path(&resolve(
                base,
                &pop.workplace_sizes,
            ))?,
            community_contact_mean: pop.community_contact_mean,
            community_contact_dispersion: pop.community_contact_dispersion,
            rng_seed: pop.seed,
        };
        population.validate()?;

        let params = file.disease.params;
        params.validate()?;
        let waning = WaningTable::from_path(&resolve(base, &file.disease.vaccine_waning_table))?;

        let scenario = file.scenario;
        scenario.validate()?;

        let burn = &file.burnin;
        let burn_in = BurnInSpec {
            incidence: IncidenceSeries::from_path(&resolve(base, &burn.incidence))?,
            prior_infected_fraction: burn.prior_infected_fraction,
            prior_recovery_days: (burn.prior_recovery_days[0], burn.prior_recovery_days[1]),
            vaccination_timing: TimingSeries::from_path(&resolve(base, &burn.vaccination_timing))?,
            start_date_label: burn.start_date_label.clone(),
        };
        burn_in.validate(&params)?;

        let library = match &file.scenario_library {
            Some(p) => Some(ScenarioLibrary::from_path(&resolve(base, p))?),
            None => None,
        };
        let target = match &file.calibration_target {
            Some(t) => Some(CalibrationTarget::from_path(
                &resolve(base, &t.path),
                t.window.map(|w| (w[0], w[1])),
            )?),
            None => None,
        };
        let calibrate = match &file.calibrate {
            Some(c) => {
                let mut axes = Vec::with_capacity(c.axes.len());
                for axis in &c.axes {
                    axes.push(GridAxis {
                        param: CalibParam::parse(&axis.param)?,
                        values: axis.values.clone(),
                    });
                }
                Some((axes, c.reps_per_point, c.seed))
            }
            None => None,
        };

        Ok(Self {
            population,
            params,
            scenario,
            burn_in,
            waning,
            library,
            run: file.run,
            target,
            calibrate,
        })
    }

    /// The scenario library, or an error naming what is missing.
    pub fn require_library(&self) -> Result<&ScenarioLibrary> {
        self.library
            .as_ref()
            .ok_or_else(|| Error::config("config has no scenario_library entry"))
    }
}

#[derive(Debug, Deserialize)]
struct SweepPlanFile {
    sweep: SweepPlan,
}

/// Load a sweep plan file; the output path resolves relative to the plan
/// file's directory.
pub fn load_sweep_plan(path: &Path) -> Result<SweepPlan> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let file: SweepPlanFile =
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let mut plan = file.sweep;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    plan.output = resolve(base, &plan.output);
    plan.validate()?;
    Ok(plan)
}
