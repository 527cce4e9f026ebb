//! Report tables: per-scenario summaries against a baseline, plot-ready
//! mean series, and the policy cross-tab.

use std::fs;
use std::path::Path;

use anyhow::{bail, Result};

use episim_core::analysis::{mean_infectious_series, summarize_scenarios, ScenarioSummary};
use episim_core::sweep::{load_results, ScenarioResults};

/// Write `summary.csv`, `series_mean.csv`, `long.csv`, and (when the
/// vaccination/boosting/testing/masking levers are present) the
/// `crosstab.csv` of reductions over those levers.
pub fn write_report(results_dir: &Path, baseline: &str, out: &Path) -> Result<()> {
    let results = load_results(results_dir)?;
    if results.is_empty() {
        bail!("results directory {} is empty", results_dir.display());
    }
    let baseline_results = results
        .iter()
        .find(|r| r.scenario_id == baseline || r.label == baseline)
        .ok_or_else(|| {
            episim_core::Error::config(format!(
                "missing baseline scenario '{baseline}' (available: {})",
                results
                    .iter()
                    .map(|r| r.scenario_id.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;

    let mut summaries: Vec<(&ScenarioResults, ScenarioSummary)> = Vec::new();
    for scenario in &results {
        let summary =
            summarize_scenarios(&scenario.scenario_id, &baseline_results.runs, &scenario.runs)?;
        summaries.push((scenario, summary));
    }

    fs::create_dir_all(out)?;

    let mut summary_csv = String::from(
        "scenario_id,label,n_replications,mean_cumulative_infections,mean_pct_reduction,ci_low,ci_high,peak_infected\n",
    );
    for (scenario, summary) in &summaries {
        summary_csv.push_str(&format!(
            "{},{},{},{:.3},{:.4},{:.4},{:.4},{}\n",
            summary.scenario_id,
            scenario.label,
            summary.n_replications,
            summary.mean_cumulative_infections,
            summary.mean_pct_reduction,
            summary.pct_reduction_ci.0,
            summary.pct_reduction_ci.1,
            summary.peak_infected,
        ));
    }
    fs::write(out.join("summary.csv"), summary_csv)?;

    let mut series_csv = String::from("scenario_id,day,mean_infectious\n");
    for scenario in &results {
        let mean = mean_infectious_series(&scenario.runs);
        for (day, value) in mean.iter().enumerate() {
            series_csv.push_str(&format!("{},{day},{value:.4}\n", scenario.scenario_id));
        }
    }
    fs::write(out.join("series_mean.csv"), series_csv)?;

    // Long-format plot table.
    let mut long_csv = String::from("scenario,metric,value,ci_low,ci_high\n");
    for (scenario, summary) in &summaries {
        long_csv.push_str(&format!(
            "{},pct_reduction,{:.4},{:.4},{:.4}\n",
            scenario.label, summary.mean_pct_reduction, summary.pct_reduction_ci.0, summary.pct_reduction_ci.1,
        ));
        long_csv.push_str(&format!(
            "{},peak_infected,{},{},{}\n",
            scenario.label, summary.peak_infected, summary.peak_infected, summary.peak_infected,
        ));
        long_csv.push_str(&format!(
            "{},mean_cumulative_infections,{:.3},{:.3},{:.3}\n",
            scenario.label,
            summary.mean_cumulative_infections,
            summary.mean_cumulative_infections,
            summary.mean_cumulative_infections,
        ));
    }
    fs::write(out.join("long.csv"), long_csv)?;

    // Cross-tab over the synergy levers, when any scenario carries them.
    let synergy = ["vaccination", "boosting", "testing", "mask_wearing", "mask_efficacy"];
    let has_synergy = summaries
        .iter()
        .any(|(s, _)| synergy.iter().any(|l| s.levers.contains_key(*l)));
    if has_synergy {
        let level_of = |scenario: &ScenarioResults, lever: &str| -> String {
            scenario.levers.get(lever).cloned().unwrap_or_else(|| "baseline".to_string())
        };
        let mut crosstab = String::from(
            "vaccination,boosting,testing,masking,mean_pct_reduction,ci_low,ci_high\n",
        );
        for (scenario, summary) in &summaries {
            let masking = format!(
                "wearing:{}|efficacy:{}",
                level_of(scenario, "mask_wearing"),
                level_of(scenario, "mask_efficacy")
            );
            crosstab.push_str(&format!(
                "{},{},{},{},{:.4},{:.4},{:.4}\n",
                level_of(scenario, "vaccination"),
                level_of(scenario, "boosting"),
                level_of(scenario, "testing"),
                masking,
                summary.mean_pct_reduction,
                summary.pct_reduction_ci.0,
                summary.pct_reduction_ci.1,
            ));
        }
        fs::write(out.join("crosstab.csv"), crosstab)?;
    }

    println!(
        "report over {} scenarios (baseline {}) written to {}",
        results.len(),
        baseline_results.scenario_id,
        out.display()
    );
    Ok(())
}
