//! Sweep expansion counting, persistence layout, resume, determinism, and
//! seed isolation.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use common::*;
use episim_core::config::load_sweep_plan;
use episim_core::engine::SimSetup;
use episim_core::epi::DiseaseParams;
use episim_core::interventions::PolicyScenario;
use episim_core::scenarios::ScenarioLibrary;
use episim_core::sweep::{execute_sweep, expand_plan, load_results, LeverSpec, SweepPlan};
use episim_core::tables::WaningTable;

fn library() -> ScenarioLibrary {
    ScenarioLibrary::from_path(&fixtures_dir().join("scenarios.toml")).unwrap()
}

fn plan_with(levers: Vec<LeverSpec>, replications: u32, output: &Path) -> SweepPlan {
    SweepPlan {
        levers,
        beta: vec![],
        immune_escape: vec![],
        replications,
        master_seed: 77,
        output: output.to_path_buf(),
    }
}

/// Collect `(relative_path, bytes)` for every file under a directory.
fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn single_lever_single_level_expands_to_one_scenario() {
    let plan = plan_with(
        vec![LeverSpec { name: "boosting".into(), levels: vec!["++".into()] }],
        1,
        Path::new("unused"),
    );
    let resolved = expand_plan(
        &plan,
        &library(),
        &PolicyScenario::best_fit_baseline(),
        &DiseaseParams::best_fit(),
    )
    .unwrap();
    assert_eq!(resolved.len(), 1);
    assert_eq!(resolved[0].scenario.booster_coverage, 0.8);
}

#[test]
fn three_levers_at_three_levels_expand_to_27_distinct_scenarios() {
    let levels = vec!["baseline".to_string(), "+".to_string(), "++".to_string()];
    let plan = plan_with(
        vec![
            LeverSpec { name: "boosting".into(), levels: levels.clone() },
            LeverSpec { name: "testing".into(), levels: levels.clone() },
            LeverSpec { name: "social_distancing".into(), levels },
        ],
        1,
        Path::new("unused"),
    );
    let resolved = expand_plan(
        &plan,
        &library(),
        &PolicyScenario::best_fit_baseline(),
        &DiseaseParams::best_fit(),
    )
    .unwrap();
    assert_eq!(resolved.len(), 27);
    let ids: HashSet<_> = resolved.iter().map(|r| r.scenario_id.clone()).collect();
    assert_eq!(ids.len(), 27, "content hashes must be unique");
}

#[test]
fn full_design_plan_expands_to_the_published_combination_count() {
    let plan = load_sweep_plan(&fixtures_dir().join("full_design.toml")).unwrap();
    // Counting oracle: the product of the axis sizes.
    let expected: usize = plan
        .levers
        .iter()
        .map(|l| l.levels.len())
        .product::<usize>()
        * plan.beta.len()
        * plan.immune_escape.len();
    assert_eq!(expected, 46_080);
    assert_eq!(plan.combination_count(), 46_080);

    let resolved = expand_plan(
        &plan,
        &library(),
        &PolicyScenario::best_fit_baseline(),
        &DiseaseParams::best_fit(),
    )
    .unwrap();
    assert_eq!(resolved.len(), 46_080);
    let ids: HashSet<_> = resolved.iter().map(|r| r.scenario_id.as_str()).collect();
    assert_eq!(ids.len(), 46_080);
}

#[test]
fn unknown_lever_level_fails_expansion() {
    let plan = plan_with(
        vec![LeverSpec { name: "boosting".into(), levels: vec!["+++++".into()] }],
        1,
        Path::new("unused"),
    );
    assert!(expand_plan(
        &plan,
        &library(),
        &PolicyScenario::best_fit_baseline(),
        &DiseaseParams::best_fit(),
    )
    .is_err());
}

#[test]
fn sweep_persists_resumes_and_reproduces_bit_identically() {
    let (agents, net) = small_population(500, 30);
    let burn = burn_in_with(&[(-4, 8)], 12);
    let waning = WaningTable::empty();
    let setup =
        SimSetup { agents: &agents, net: &net, burn_in: &burn, waning: &waning, horizon: 8 };
    let base_scenario = PolicyScenario::none();
    let base_params = plain_params();
    let lib = library();

    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let levers = vec![LeverSpec {
        name: "mask_wearing".into(),
        levels: vec!["baseline".into(), "++".into()],
    }];

    // Full run into A.
    let mut plan = plan_with(levers.clone(), 3, &dir_a);
    let resolved = expand_plan(&plan, &lib, &base_scenario, &base_params).unwrap();
    let report = execute_sweep(&plan, &resolved, &setup).unwrap();
    assert_eq!(report.executed, 6);
    assert_eq!(report.skipped, 0);

    // Interrupted run into B: simulate by deleting files after a full run.
    plan.output = dir_b.clone();
    let resolved_b = expand_plan(&plan, &lib, &base_scenario, &base_params).unwrap();
    execute_sweep(&plan, &resolved_b, &setup).unwrap();
    fs::remove_file(dir_b.join(&resolved_b[0].scenario_id).join("rep_00001.csv")).unwrap();
    fs::remove_file(dir_b.join(&resolved_b[1].scenario_id).join("rep_00002.csv")).unwrap();
    fs::remove_file(dir_b.join("index.csv")).unwrap();
    let report = execute_sweep(&plan, &resolved_b, &setup).unwrap();
    assert_eq!(report.executed, 2);
    assert_eq!(report.skipped, 4);

    // Byte-identical result sets.
    assert_eq!(dir_snapshot(&dir_a), dir_snapshot(&dir_b));

    // Exactly scenarios x replications series files persisted.
    let series_files = dir_snapshot(&dir_a)
        .iter()
        .filter(|(name, _)| name.contains("rep_"))
        .count();
    assert_eq!(series_files, 6);

    // Loading returns runs in index order.
    let results = load_results(&dir_a).unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r.runs.len() == 3));
}

#[test]
fn changing_one_scenario_leaves_other_outputs_bit_identical() {
    let (agents, net) = small_population(500, 31);
    let burn = burn_in_with(&[(-4, 8)], 12);
    let waning = WaningTable::empty();
    let setup =
        SimSetup { agents: &agents, net: &net, burn_in: &burn, waning: &waning, horizon: 8 };
    let base_scenario = PolicyScenario::none();
    let base_params = plain_params();
    let lib = library();
    let tmp = tempfile::tempdir().unwrap();

    // Plan 1: baseline + boosting++; Plan 2: baseline + boosting+.
    let dir_1 = tmp.path().join("one");
    let plan_1 = plan_with(
        vec![LeverSpec { name: "boosting".into(), levels: vec!["baseline".into(), "++".into()] }],
        2,
        &dir_1,
    );
    let resolved_1 = expand_plan(&plan_1, &lib, &base_scenario, &base_params).unwrap();
    execute_sweep(&plan_1, &resolved_1, &setup).unwrap();

    let dir_2 = tmp.path().join("two");
    let plan_2 = plan_with(
        vec![LeverSpec { name: "boosting".into(), levels: vec!["baseline".into(), "+".into()] }],
        2,
        &dir_2,
    );
    let resolved_2 = expand_plan(&plan_2, &lib, &base_scenario, &base_params).unwrap();
    execute_sweep(&plan_2, &resolved_2, &setup).unwrap();

    // The shared baseline cell has the same id and identical bytes.
    let shared = &resolved_1[0].scenario_id;
    assert_eq!(shared, &resolved_2[0].scenario_id);
    for rep in 0..2 {
        let a = fs::read(dir_1.join(shared).join(format!("rep_{rep:05}.csv"))).unwrap();
        let b = fs::read(dir_2.join(shared).join(format!("rep_{rep:05}.csv"))).unwrap();
        assert_eq!(a, b);
    }
    // The changed cells differ.
    assert_ne!(resolved_1[1].scenario_id, resolved_2[1].scenario_id);
}

#[test]
fn unwritable_output_fails_before_any_computation() {
    let (agents, net) = small_population(200, 32);
    let burn = burn_in_with(&[], 12);
    let waning = WaningTable::empty();
    let setup =
        SimSetup { agents: &agents, net: &net, burn_in: &burn, waning: &waning, horizon: 5 };
    let plan = plan_with(
        vec![LeverSpec { name: "boosting".into(), levels: vec!["baseline".into()] }],
        1,
        Path::new("/proc/episim-cannot-write-here"),
    );
    let resolved = expand_plan(
        &plan,
        &library(),
        &PolicyScenario::none(),
        &plain_params(),
    )
    .unwrap();
    assert!(execute_sweep(&plan, &resolved, &setup).is_err());
}
