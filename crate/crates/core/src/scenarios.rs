//! The scenario library: named policy levers and their intensity levels,
//! plus named policy combinations.
//!
//! The library file is human-readable TOML. A lever level is a table of
//! overrides applied onto a base scenario; the conventional `baseline`
//! level is an empty table, leaving the base values (which may differ per
//! calibration) untouched.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::epi::DiseaseParams;
use crate::error::{Error, Result};
use crate::interventions::PolicyScenario;

#[derive(Debug, Clone, Deserialize)]
struct LibraryFile {
    #[serde(default)]
    levers: BTreeMap<String, BTreeMap<String, toml::Table>>,
    #[serde(default)]
    selected: BTreeMap<String, BTreeMap<String, String>>,
}

/// Parsed scenario library.
#[derive(Debug, Clone)]
pub struct ScenarioLibrary {
    levers: BTreeMap<String, BTreeMap<String, toml::Table>>,
    selected: BTreeMap<String, BTreeMap<String, String>>,
}

fn get_f64(table: &toml::Table, key: &str, context: &str) -> Result<Option<f64>> {
    match table.get(key) {
        None => Ok(None),
        Some(toml::Value::Float(v)) => Ok(Some(*v)),
        Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(other) => Err(Error::config(format!(
            "{context}: key '{key}' must be a number, got {other}"
        ))),
    }
}

impl ScenarioLibrary {
    pub fn from_str(text: &str, source: &str) -> Result<Self> {
        let file: LibraryFile =
            toml::from_str(text).map_err(|e| Error::parse(source, e.to_string()))?;
        Ok(Self { levers: file.levers, selected: file.selected })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Self::from_str(&text, &path.display().to_string())
    }

    pub fn lever_names(&self) -> impl Iterator<Item = &str> {
        self.levers.keys().map(String::as_str)
    }

    pub fn levels(&self, lever: &str) -> Result<Vec<&str>> {
        self.levers
            .get(lever)
            .map(|levels| levels.keys().map(String::as_str).collect())
            .ok_or_else(|| Error::config(format!("unknown lever '{lever}'")))
    }

    pub fn selected_names(&self) -> impl Iterator<Item = &str> {
        self.selected.keys().map(String::as_str)
    }

    pub fn selected_levers(&self, name: &str) -> Result<&BTreeMap<String, String>> {
        self.selected
            .get(name)
            .ok_or_else(|| Error::config(format!("unknown selected policy '{name}'")))
    }

    /// Apply one lever level onto the scenario/parameter pair.
    pub fn apply(
        &self,
        lever: &str,
        level: &str,
        scenario: &mut PolicyScenario,
        params: &mut DiseaseParams,
    ) -> Result<()> {
        let levels = self
            .levers
            .get(lever)
            .ok_or_else(|| Error::config(format!("unknown lever '{lever}'")))?;
        let overrides = levels.get(level).ok_or_else(|| {
            Error::config(format!("lever '{lever}' has no level '{level}'"))
        })?;
        if overrides.is_empty() {
            return Ok(());
        }
        let ctx = format!("lever '{lever}' level '{level}'");
        match lever {
            "vaccination" => {
                let cov = &mut scenario.vaccination_coverage;
                if let Some(v) = get_f64(overrides, "ages_0_4", &ctx)? {
                    cov.ages_0_4 = v;
                }
                if let Some(v) = get_f64(overrides, "ages_5_11", &ctx)? {
                    cov.ages_5_11 = v;
                }
                if let Some(v) = get_f64(overrides, "ages_12_17", &ctx)? {
                    cov.ages_12_17 = v;
                }
                if let Some(v) = get_f64(overrides, "ages_18_plus", &ctx)? {
                    cov.ages_18_plus = v;
                }
            }
            "boosting" => {
                if let Some(v) = get_f64(overrides, "coverage", &ctx)? {
                    scenario.booster_coverage = v.min(1.0);
                }
            }
            "testing" => {
                if let Some(v) = get_f64(overrides, "pcr_multiplier", &ctx)? {
                    scenario.pcr_tests_per_day *= v;
                }
                if let Some(v) = get_f64(overrides, "antigen_multiplier", &ctx)? {
                    scenario.antigen_tests_per_day *= v;
                }
                if let Some(v) = get_f64(overrides, "trace_multiplier", &ctx)? {
                    scenario.trace_capacity_per_day =
                        (scenario.trace_capacity_per_day as f64 * v).round() as u32;
                }
            }
            "mask_efficacy" => {
                if let Some(v) = get_f64(overrides, "infection", &ctx)? {
                    scenario.mask_efficacy.infection = v;
                }
                if let Some(v) = get_f64(overrides, "transmission", &ctx)? {
                    scenario.mask_efficacy.transmission = v;
                }
            }
            "mask_wearing" => {
                if let Some(v) = get_f64(overrides, "fraction", &ctx)? {
                    scenario.mask_wearing_fraction = v;
                }
            }
            "social_distancing" => {
                if let Some(v) = get_f64(overrides, "work", &ctx)? {
                    scenario.distancing.work = v;
                }
                if let Some(v) = get_f64(overrides, "school", &ctx)? {
                    scenario.distancing.school = v;
                }
                if let Some(v) = get_f64(overrides, "community", &ctx)? {
                    scenario.distancing.community = v;
                }
            }
            "rollout" => {
                if let Some(v) = get_f64(overrides, "multiplier", &ctx)? {
                    scenario.rollout_multiplier = v;
                }
            }
            "quarantine_adherence" => {
                if let Some(v) = get_f64(overrides, "value", &ctx)? {
                    scenario.quarantine_adherence = v;
                }
            }
            "beta" => {
                if let Some(v) = get_f64(overrides, "value", &ctx)? {
                    params.base_transmission_rate = v;
                }
            }
            "immune_escape" => {
                if let Some(v) = get_f64(overrides, "value", &ctx)? {
                    params.immune_escape = v;
                }
            }
            other => {
                return Err(Error::config(format!(
                    "lever '{other}' has overrides but no interpretation"
                )));
            }
        }
        Ok(())
    }

    /// Apply a named policy combination (a set of lever levels).
    pub fn apply_selected(
        &self,
        name: &str,
        scenario: &mut PolicyScenario,
        params: &mut DiseaseParams,
    ) -> Result<()> {
        let levers = self.selected_levers(name)?.clone();
        for (lever, level) in &levers {
            self.apply(lever, level, scenario, params)?;
        }
        Ok(())
    }
}

/// Parse a `lever=level,lever=level` spec string.
pub fn parse_lever_spec(spec: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lever, level) = part
            .split_once('=')
            .ok_or_else(|| Error::config(format!("bad lever spec '{part}', expected lever=level")))?;
        pairs.push((lever.trim().to_string(), level.trim().to_string()));
    }
    Ok(pairs)
}
