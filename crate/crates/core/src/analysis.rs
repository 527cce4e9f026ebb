//! Calibration scoring and grid search, R0 estimation, and scenario
//! summary statistics.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{initialize, step_day, BurnInSpec, RunTimeSeries, SimSetup};
use crate::epi::{DiseaseParams, HazardCurve};
use crate::error::{Error, Result};
use crate::interventions::PolicyScenario;
use crate::population::{AgentRecord, LayeredContactNetwork};
use crate::rng::derive_seed;
use crate::sweep::content_hash;
use crate::tables::WaningTable;

/// Target series for calibration: infected-agent counts per day at
/// simulation scale, with the day window used for scoring.
#[derive(Debug, Clone)]
pub struct CalibrationTarget {
    /// Daily infectious prevalence, indexed from day 0.
    pub infected: Vec<f64>,
    /// Daily new infections, when the fixture provides them.
    pub new_infections: Option<Vec<f64>>,
    /// Half-open `[start, end)` day range compared by `mse_score`.
    pub window: (usize, usize),
}

#[derive(Debug, Deserialize)]
struct TargetRow {
    #[allow(dead_code)]
    day: u32,
    infected: f64,
    new_infections: Option<f64>,
}

impl CalibrationTarget {
    pub fn new(infected: Vec<f64>, new_infections: Option<Vec<f64>>, window: (usize, usize)) -> Result<Self> {
        if window.0 >= window.1 {
            return Err(Error::config("calibration window is empty"));
        }
        if window.1 > infected.len() {
            return Err(Error::config("calibration window exceeds target length"));
        }
        if infected.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::config("target counts must be finite and >= 0"));
        }
        if let Some(ni) = &new_infections {
            if ni.len() != infected.len() {
                return Err(Error::config("target column lengths disagree"));
            }
        }
        Ok(Self { infected, new_infections, window })
    }

    pub fn from_reader<R: Read>(reader: R, window: Option<(usize, usize)>, source: &str) -> Result<Self> {
        let mut infected = Vec::new();
        let mut new_infections = Vec::new();
        let mut any_new = false;
        let mut csv_reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        for record in csv_reader.deserialize() {
            let row: TargetRow = record.map_err(|e| Error::parse(source, e.to_string()))?;
            infected.push(row.infected);
            if let Some(n) = row.new_infections {
                any_new = true;
                new_infections.push(n);
            } else {
                new_infections.push(0.0);
            }
        }
        let window = window.unwrap_or((0, infected.len()));
        Self::new(infected, any_new.then_some(new_infections), window)
    }

    pub fn from_path(path: &Path, window: Option<(usize, usize)>) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Self::from_reader(file, window, &path.display().to_string())
    }

    /// Day of the maximum infected count within the window.
    pub fn peak_day(&self) -> usize {
        let (start, end) = self.window;
        let mut best = start;
        for day in start..end {
            if self.infected[day] > self.infected[best] {
                best = day;
            }
        }
        best
    }

    /// Total new infections over the window, when the fixture provides the
    /// incidence column.
    pub fn total_new_infections(&self) -> Option<f64> {
        let (start, end) = self.window;
        self.new_infections.as_ref().map(|ni| ni[start..end].iter().sum())
    }
}

/// Mean infectious series across replications (all runs must share one
/// horizon).
pub fn mean_infectious_series(runs: &[RunTimeSeries]) -> Vec<f64> {
    if runs.is_empty() {
        return Vec::new();
    }
    let len = runs[0].len();
    debug_assert!(runs.iter().all(|r| r.len() == len));
    let mut mean = vec![0.0; len];
    for run in runs {
        for (i, day) in run.days.iter().enumerate() {
            mean[i] += day.infectious_total as f64;
        }
    }
    for v in &mut mean {
        *v /= runs.len() as f64;
    }
    mean
}

/// Mean squared error between a simulated infectious series and the target
/// over the target's comparison window.
pub fn mse_score(series: &[f64], target: &CalibrationTarget) -> Result<f64> {
    let (start, end) = target.window;
    if end > series.len() {
        return Err(Error::analysis(format!(
            "comparison window [{start}, {end}) exceeds series length {}",
            series.len()
        )));
    }
    let mut sum = 0.0;
    for day in start..end {
        let diff = series[day] - target.infected[day];
        sum += diff * diff;
    }
    Ok(sum / (end - start) as f64)
}

/// Calibration parameters searchable by the grid (the model's free axes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibParam {
    AntigenFalseNegative,
    TraceCapacity,
    InfectiousDuration,
    LatentDuration,
    MaskWearing,
    RemoteWork,
    CommunityDistancing,
    QuarantineAdherence,
    BaseTransmissionRate,
    ImmuneEscape,
    AntigenTestsPerDay,
    PresymptomaticDuration,
    SchoolClosure,
}

impl CalibParam {
    pub const ALL: [CalibParam; 13] = [
        CalibParam::AntigenFalseNegative,
        CalibParam::TraceCapacity,
        CalibParam::InfectiousDuration,
        CalibParam::LatentDuration,
        CalibParam::MaskWearing,
        CalibParam::RemoteWork,
        CalibParam::CommunityDistancing,
        CalibParam::QuarantineAdherence,
        CalibParam::BaseTransmissionRate,
        CalibParam::ImmuneEscape,
        CalibParam::AntigenTestsPerDay,
        CalibParam::PresymptomaticDuration,
        CalibParam::SchoolClosure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalibParam::AntigenFalseNegative => "antigen_false_negative",
            CalibParam::TraceCapacity => "trace_capacity",
            CalibParam::InfectiousDuration => "infectious_duration",
            CalibParam::LatentDuration => "latent_duration",
            CalibParam::MaskWearing => "mask_wearing",
            CalibParam::RemoteWork => "remote_work",
            CalibParam::CommunityDistancing => "community_distancing",
            CalibParam::QuarantineAdherence => "quarantine_adherence",
            CalibParam::BaseTransmissionRate => "base_transmission_rate",
            CalibParam::ImmuneEscape => "immune_escape",
            CalibParam::AntigenTestsPerDay => "antigen_tests_per_day",
            CalibParam::PresymptomaticDuration => "presymptomatic_duration",
            CalibParam::SchoolClosure => "school_closure",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::config(format!("unknown calibration parameter '{name}'")))
    }

    /// Apply a grid value onto the scenario/parameter pair.
    pub fn apply(self, value: f64, params: &mut DiseaseParams, scenario: &mut PolicyScenario) {
        match self {
            CalibParam::AntigenFalseNegative => scenario.antigen_false_negative = value,
            CalibParam::TraceCapacity => scenario.trace_capacity_per_day = value.round() as u32,
            CalibParam::InfectiousDuration => params.infectious_duration = value.round() as u32,
            CalibParam::LatentDuration => params.latent_duration = value.round() as u32,
            CalibParam::MaskWearing => scenario.mask_wearing_fraction = value,
            CalibParam::RemoteWork => scenario.distancing.work = value,
            CalibParam::CommunityDistancing => scenario.distancing.community = value,
            CalibParam::QuarantineAdherence => scenario.quarantine_adherence = value,
            CalibParam::BaseTransmissionRate => params.base_transmission_rate = value,
            CalibParam::ImmuneEscape => params.immune_escape = value,
            CalibParam::AntigenTestsPerDay => scenario.antigen_tests_per_day = value,
            CalibParam::PresymptomaticDuration => {
                params.presymptomatic_duration = value.round() as u32
            }
            CalibParam::SchoolClosure => scenario.distancing.school = value,
        }
    }
}

/// One axis of the calibration grid.
#[derive(Debug, Clone)]
pub struct GridAxis {
    pub param: CalibParam,
    pub values: Vec<f64>,
}

/// One evaluated grid point, ranked by fit error.
#[derive(Debug, Clone)]
pub struct GridPointResult {
    /// `(parameter, value)` pairs in axis order.
    pub values: Vec<(CalibParam, f64)>,
    pub scenario_id: String,
    pub mse: f64,
}

/// Evaluate the full Cartesian grid: each point runs `reps_per_point`
/// replications, scores the replication-mean infectious series against the
/// target, and the leaderboard is returned in ascending error order.
/// Deterministic given the seed.
pub fn calibrate_grid(
    axes: &[GridAxis],
    setup: &SimSetup,
    base_scenario: &PolicyScenario,
    base_params: &DiseaseParams,
    target: &CalibrationTarget,
    reps_per_point: u32,
    seed: u64,
) -> Result<Vec<GridPointResult>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::config("calibration grid is empty"));
    }
    if reps_per_point == 0 {
        return Err(Error::config("reps_per_point must be at least 1"));
    }

    // Odometer enumeration of the Cartesian product, first axis slowest.
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut points = Vec::with_capacity(total);
    let mut counters = vec![0usize; axes.len()];
    loop {
        let point: Vec<(CalibParam, f64)> = axes
            .iter()
            .zip(&counters)
            .map(|(axis, &i)| (axis.param, axis.values[i]))
            .collect();
        points.push(point);
        let mut axis = axes.len();
        loop {
            if axis == 0 {
                break;
            }
            axis -= 1;
            counters[axis] += 1;
            if counters[axis] < axes[axis].values.len() {
                break;
            }
            counters[axis] = 0;
            if axis == 0 {
                counters.clear();
                break;
            }
        }
        if counters.is_empty() {
            break;
        }
    }
    debug_assert_eq!(points.len(), total);

    let mut results: Vec<GridPointResult> = points
        .into_par_iter()
        .map(|point| -> Result<GridPointResult> {
            let mut params = base_params.clone();
            let mut scenario = base_scenario.clone();
            for &(param, value) in &point {
                param.apply(value, &mut params, &mut scenario);
            }
            let scenario_id = content_hash(&scenario, &params);
            let runs: Vec<RunTimeSeries> = (0..reps_per_point)
                .map(|rep| setup.run(&scenario, &params, derive_seed(seed, &scenario_id, rep as u64)))
                .collect::<Result<_>>()?;
            let mean = mean_infectious_series(&runs);
            let mse = mse_score(&mean, target)?;
            Ok(GridPointResult { values: point, scenario_id, mse })
        })
        .collect::<Result<_>>()?;

    results.sort_by(|a, b| a.mse.total_cmp(&b.mse));
    Ok(results)
}

/// Result of the index-run R0 estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R0Estimate {
    pub estimate: f64,
    pub secondary_cases: u64,
    pub tertiary_cases: u64,
    pub index_runs: u32,
}

/// Estimate R0 as the pooled ratio of tertiary to secondary cases over
/// index-agent runs in a fully susceptible population with every
/// intervention off.
///
/// Each run seeds one random index agent, tracks infection generations,
/// and stops once no generation-0 or generation-1 infection remains
/// unfinished. Natural-immunity waning is disabled so generations stay
/// well defined.
pub fn estimate_r0(
    agents: &[AgentRecord],
    net: &LayeredContactNetwork,
    params: &DiseaseParams,
    n_index_runs: u32,
    seed: u64,
) -> Result<R0Estimate> {
    if n_index_runs == 0 {
        return Err(Error::config("n_index_runs must be at least 1"));
    }
    let scenario = PolicyScenario::none();
    let params = DiseaseParams {
        natural_immunity_waning: HazardCurve::never(),
        ..params.clone()
    };
    let burn_in = BurnInSpec::empty();
    let waning = WaningTable::empty();
    // All generation <= 1 courses are over well before this bound.
    let max_days = 4 * params.course_duration() + 8;

    let counts: Vec<(u64, u64)> = (0..n_index_runs)
        .into_par_iter()
        .map(|run| -> Result<(u64, u64)> {
            let run_seed = derive_seed(seed, "r0-index-run", run as u64);
            let mut state =
                initialize(agents, net, &scenario, &burn_in, &params, &waning, run_seed)?;
            let index = state.rng.gen_range(0..state.n_agents());
            state.seed_infection(index, 0, &params);
            for _ in 0..max_days {
                if !state.any_infection_in_generation_at_most(1) {
                    break;
                }
                step_day(&mut state, &scenario, &params, &waning);
            }
            Ok((state.generation_count(1), state.generation_count(2)))
        })
        .collect::<Result<_>>()?;

    let secondary_cases: u64 = counts.iter().map(|c| c.0).sum();
    let tertiary_cases: u64 = counts.iter().map(|c| c.1).sum();
    if secondary_cases == 0 {
        return Err(Error::UndefinedEstimate);
    }
    Ok(R0Estimate {
        estimate: tertiary_cases as f64 / secondary_cases as f64,
        secondary_cases,
        tertiary_cases,
        index_runs: n_index_runs,
    })
}

/// Cross-replication summary of one scenario against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub n_replications: u32,
    pub mean_cumulative_infections: f64,
    /// Mean percentage reduction in cumulative infections vs the baseline
    /// replication mean.
    pub mean_pct_reduction: f64,
    /// Normal-approximation 95% confidence interval for the reduction.
    pub pct_reduction_ci: (f64, f64),
    /// Maximum concurrent infectious count across replications.
    pub peak_infected: u32,
}

/// Summarize a scenario's replications against the baseline replications:
/// per-replication percentage reduction relative to the baseline mean, its
/// normal-approximation 95% CI, and the peak concurrent infectious count.
pub fn summarize_scenarios(
    scenario_id: &str,
    baseline: &[RunTimeSeries],
    scenario: &[RunTimeSeries],
) -> Result<ScenarioSummary> {
    if baseline.len() < 2 || scenario.len() < 2 {
        return Err(Error::analysis("need at least 2 replications per arm"));
    }
    let baseline_mean = baseline
        .iter()
        .map(|r| r.cumulative_new_infections() as f64)
        .sum::<f64>()
        / baseline.len() as f64;
    if baseline_mean == 0.0 {
        return Err(Error::analysis("zero baseline cumulative infections"));
    }
    let cumulative: Vec<f64> = scenario
        .iter()
        .map(|r| r.cumulative_new_infections() as f64)
        .collect();
    let scenario_mean = cumulative.iter().sum::<f64>() / cumulative.len() as f64;
    let reductions: Vec<f64> = cumulative
        .iter()
        .map(|&c| 100.0 * (baseline_mean - c) / baseline_mean)
        .collect();
    let mean_reduction = 100.0 * (baseline_mean - scenario_mean) / baseline_mean;
    let n = reductions.len() as f64;
    let variance = reductions
        .iter()
        .map(|r| (r - mean_reduction).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let half_width = 1.96 * (variance / n).sqrt();
    let peak = scenario.iter().map(|r| r.peak_infectious()).max().unwrap_or(0);
    Ok(ScenarioSummary {
        scenario_id: scenario_id.to_string(),
        n_replications: scenario.len() as u32,
        mean_cumulative_infections: scenario_mean,
        mean_pct_reduction: mean_reduction,
        pct_reduction_ci: (mean_reduction - half_width, mean_reduction + half_width),
        peak_infected: peak,
    })
}
