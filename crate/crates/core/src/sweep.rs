//! Scenario sweep expansion, scheduling, and persistence.
//!
//! A sweep plan crosses policy lever levels with epidemiological axes.
//! Every resolved scenario gets a content-hash identity, so replication
//! seeds depend only on scenario content and replication index — never on
//! execution order — and completed work is detected and skipped on restart.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{RunTimeSeries, SimSetup};
use crate::epi::{DiseaseParams, InfectivityDistribution};
use crate::error::{Error, Result};
use crate::interventions::PolicyScenario;
use crate::rng::derive_seed;
use crate::scenarios::ScenarioLibrary;

/// One lever axis of a sweep plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeverSpec {
    pub name: String,
    pub levels: Vec<String>,
}

/// Full sweep description: lever axes, epidemiological axes, replication
/// count, master seed, and output location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    #[serde(default)]
    pub levers: Vec<LeverSpec>,
    /// Base transmission rates to cross (empty: keep the base value).
    #[serde(default)]
    pub beta: Vec<f64>,
    /// Immune escape probabilities to cross (empty: keep the base value).
    #[serde(default)]
    pub immune_escape: Vec<f64>,
    pub replications: u32,
    pub master_seed: u64,
    pub output: PathBuf,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.levers.iter().any(|l| l.levels.is_empty()) {
            return Err(Error::config("every lever needs at least one level"));
        }
        Ok(())
    }

    /// Cross-product size: levels per lever times the epidemiological axes.
    pub fn combination_count(&self) -> usize {
        let lever_combos: usize = self.levers.iter().map(|l| l.levels.len()).product();
        lever_combos * self.beta.len().max(1) * self.immune_escape.len().max(1)
    }
}

/// One fully resolved cell of the sweep.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario_id: String,
    pub label: String,
    /// `(lever, level)` pairs in plan order, plus the epidemiological axes.
    pub levers: Vec<(String, String)>,
    pub scenario: PolicyScenario,
    pub params: DiseaseParams,
}

fn hash_f64(hasher: &mut Sha256, value: f64) {
    hasher.update(value.to_bits().to_le_bytes());
}

fn hash_u32(hasher: &mut Sha256, value: u32) {
    hasher.update(value.to_le_bytes());
}

/// Content hash of a resolved parameter vector. Field order is fixed, so
/// the identity is stable across runs and library edits that do not change
/// the resolved values.
pub fn content_hash(scenario: &PolicyScenario, params: &DiseaseParams) -> String {
    let mut h = Sha256::new();
    for v in scenario.vaccination_coverage.values() {
        hash_f64(&mut h, v);
    }
    hash_f64(&mut h, scenario.booster_coverage);
    hash_f64(&mut h, scenario.rollout_multiplier);
    hash_f64(&mut h, scenario.daily_primary_doses);
    hash_f64(&mut h, scenario.daily_booster_doses);
    hash_f64(&mut h, scenario.pcr_tests_per_day);
    hash_f64(&mut h, scenario.antigen_tests_per_day);
    hash_f64(&mut h, scenario.pcr_false_negative);
    hash_f64(&mut h, scenario.antigen_false_negative);
    hash_f64(&mut h, scenario.false_positive_rate);
    hash_u32(&mut h, scenario.trace_capacity_per_day);
    hash_f64(&mut h, scenario.mask_wearing_fraction);
    hash_f64(&mut h, scenario.mask_efficacy.infection);
    hash_f64(&mut h, scenario.mask_efficacy.transmission);
    hash_f64(&mut h, scenario.distancing.work);
    hash_f64(&mut h, scenario.distancing.school);
    hash_f64(&mut h, scenario.distancing.community);
    hash_f64(&mut h, scenario.quarantine_adherence);
    h.update([scenario.quarantine_suppresses_home as u8]);
    hash_f64(&mut h, scenario.national_population);

    hash_f64(&mut h, params.base_transmission_rate);
    hash_u32(&mut h, params.latent_duration);
    hash_u32(&mut h, params.presymptomatic_duration);
    hash_u32(&mut h, params.infectious_duration);
    hash_f64(&mut h, params.asymptomatic_fraction);
    hash_f64(&mut h, params.asymptomatic_infectivity_multiplier);
    hash_f64(&mut h, params.presymptomatic_infectivity_multiplier);
    match params.infectivity_distribution {
        InfectivityDistribution::Constant => h.update([0u8]),
        InfectivityDistribution::Gamma { shape } => {
            h.update([1u8]);
            hash_f64(&mut h, shape);
        }
    }
    hash_f64(&mut h, params.immune_escape);
    hash_u32(&mut h, params.natural_immunity_waning.breakpoints.len() as u32);
    for &(day, hazard) in &params.natural_immunity_waning.breakpoints {
        hash_u32(&mut h, day);
        hash_f64(&mut h, hazard);
    }

    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Expand a sweep plan into resolved scenarios in deterministic, stable
/// order (lever odometer with the first lever slowest, then beta, then
/// immune escape).
pub fn expand_plan(
    plan: &SweepPlan,
    library: &ScenarioLibrary,
    base_scenario: &PolicyScenario,
    base_params: &DiseaseParams,
) -> Result<Vec<ResolvedScenario>> {
    plan.validate()?;
    let beta_axis: Vec<Option<f64>> = if plan.beta.is_empty() {
        vec![None]
    } else {
        plan.beta.iter().copied().map(Some).collect()
    };
    let escape_axis: Vec<Option<f64>> = if plan.immune_escape.is_empty() {
        vec![None]
    } else {
        plan.immune_escape.iter().copied().map(Some).collect()
    };

    let mut level_indices = vec![0usize; plan.levers.len()];
    let mut resolved = Vec::with_capacity(plan.combination_count());
    loop {
        let combo: Vec<(String, String)> = plan
            .levers
            .iter()
            .zip(&level_indices)
            .map(|(lever, &i)| (lever.name.clone(), lever.levels[i].clone()))
            .collect();
        for &beta in &beta_axis {
            for &escape in &escape_axis {
                let mut scenario = base_scenario.clone();
                let mut params = base_params.clone();
                for (lever, level) in &combo {
                    library.apply(lever, level, &mut scenario, &mut params)?;
                }
                let mut levers = combo.clone();
                if let Some(beta) = beta {
                    params.base_transmission_rate = beta;
                    levers.push(("beta".to_string(), format!("{beta}")));
                }
                if let Some(escape) = escape {
                    params.immune_escape = escape;
                    levers.push(("immune_escape".to_string(), format!("{escape}")));
                }
                let label = if levers.is_empty() {
                    "base".to_string()
                } else {
                    levers
                        .iter()
                        .map(|(lever, level)| format!("{lever}={level}"))
                        .collect::<Vec<_>>()
                        .join(";")
                };
                let scenario_id = content_hash(&scenario, &params);
                resolved.push(ResolvedScenario { scenario_id, label, levers, scenario, params });
            }
        }
        // Odometer increment, last lever fastest.
        let mut axis = plan.levers.len();
        let mut done = plan.levers.is_empty();
        while axis > 0 {
            axis -= 1;
            level_indices[axis] += 1;
            if level_indices[axis] < plan.levers[axis].levels.len() {
                break;
            }
            level_indices[axis] = 0;
            if axis == 0 {
                done = true;
            }
        }
        if done {
            break;
        }
    }
    Ok(resolved)
}

/// Per-scenario manifest persisted alongside its replication files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub scenario_id: String,
    pub label: String,
    pub software_version: String,
    pub levers: BTreeMap<String, String>,
    pub scenario: PolicyScenario,
    pub params: DiseaseParams,
}

/// Outcome counts of a sweep execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepReport {
    pub scenarios: usize,
    pub replications_per_scenario: u32,
    pub executed: usize,
    pub skipped: usize,
}

fn replication_path(dir: &Path, rep: u32) -> PathBuf {
    dir.join(format!("rep_{rep:05}.csv"))
}

/// Run every `(scenario, replication)` item of the plan, persisting one
/// series file per replication under one directory per scenario. Items
/// whose output already exists are skipped, so an interrupted sweep can be
/// resumed and converges to the identical result set.
pub fn execute_sweep(
    plan: &SweepPlan,
    resolved: &[ResolvedScenario],
    setup: &SimSetup,
) -> Result<SweepReport> {
    plan.validate()?;
    fs::create_dir_all(&plan.output)?;
    // Fail on unwritable output before any computation.
    let probe = plan.output.join(".write-probe");
    fs::write(&probe, b"probe")?;
    fs::remove_file(&probe)?;

    for scenario in resolved {
        let dir = plan.output.join(&scenario.scenario_id);
        fs::create_dir_all(&dir)?;
        let manifest_path = dir.join("manifest.toml");
        if !manifest_path.exists() {
            let manifest = ScenarioManifest {
                scenario_id: scenario.scenario_id.clone(),
                label: scenario.label.clone(),
                software_version: env!("CARGO_PKG_VERSION").to_string(),
                levers: scenario.levers.iter().cloned().collect(),
                scenario: scenario.scenario.clone(),
                params: scenario.params.clone(),
            };
            let text = toml::to_string_pretty(&manifest)
                .map_err(|e| Error::parse("manifest", e.to_string()))?;
            write_atomically(&manifest_path, text.as_bytes())?;
        }
    }

    let items: Vec<(usize, u32)> = (0..resolved.len())
        .flat_map(|s| (0..plan.replications).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<Result<bool>> = items
        .par_iter()
        .map(|&(scenario_idx, rep)| -> Result<bool> {
            let scenario = &resolved[scenario_idx];
            let path = replication_path(&plan.output.join(&scenario.scenario_id), rep);
            if path.exists() {
                return Ok(false);
            }
            let seed = derive_seed(plan.master_seed, &scenario.scenario_id, rep as u64);
            let series = setup.run(&scenario.scenario, &scenario.params, seed)?;
            write_atomically(&path, &series.to_csv_bytes())?;
            Ok(true)
        })
        .collect();

    let mut executed = 0;
    let mut skipped = 0;
    for outcome in outcomes {
        if outcome? {
            executed += 1;
        } else {
            skipped += 1;
        }
    }

    let mut index = String::from("scenario_id,label\n");
    for scenario in resolved {
        index.push_str(&format!("{},{}\n", scenario.scenario_id, scenario.label));
    }
    write_atomically(&plan.output.join("index.csv"), index.as_bytes())?;

    Ok(SweepReport {
        scenarios: resolved.len(),
        replications_per_scenario: plan.replications,
        executed,
        skipped,
    })
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One scenario's persisted results, loaded back for analysis.
#[derive(Debug, Clone)]
pub struct ScenarioResults {
    pub scenario_id: String,
    pub label: String,
    pub levers: BTreeMap<String, String>,
    pub runs: Vec<RunTimeSeries>,
}

/// Load a results directory produced by `execute_sweep`, in index order.
pub fn load_results(dir: &Path) -> Result<Vec<ScenarioResults>> {
    let index_path = dir.join("index.csv");
    let index = fs::read_to_string(&index_path)
        .map_err(|e| Error::parse(index_path.display().to_string(), e.to_string()))?;
    let mut out = Vec::new();
    for line in index.lines().skip(1) {
        let (scenario_id, label) = line
            .split_once(',')
            .ok_or_else(|| Error::parse("index.csv", format!("malformed line '{line}'")))?;
        let scenario_dir = dir.join(scenario_id);
        let manifest_text = fs::read_to_string(scenario_dir.join("manifest.toml"))
            .map_err(|e| Error::parse("manifest.toml", e.to_string()))?;
        let manifest: ScenarioManifest = toml::from_str(&manifest_text)
            .map_err(|e| Error::parse("manifest.toml", e.to_string()))?;
        let mut rep_files: Vec<PathBuf> = fs::read_dir(&scenario_dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("rep_") && n.ends_with(".csv"))
                    .unwrap_or(false)
            })
            .collect();
        rep_files.sort();
        let mut runs = Vec::with_capacity(rep_files.len());
        for path in rep_files {
            let file = fs::File::open(&path)?;
            runs.push(RunTimeSeries::read_csv(file)?);
        }
        out.push(ScenarioResults {
            scenario_id: scenario_id.to_string(),
            label: label.to_string(),
            levers: manifest.levers,
            runs,
        });
    }
    Ok(out)
}
