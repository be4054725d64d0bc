use std::fs;

use skycell::reporting::{read_convergence, read_placements, read_sinr_cdf, read_summary};
use skycell::scenario::{generate_scenario_two, load_scenario, save_scenario};
use skycell::{plan, ChannelParams, FootprintModel, PlanOptions, Problem, PsoParams, RadioConfig, Region};

fn small_problem(seed: u64) -> Problem {
    let region = Region::new(3000.0, 3000.0).unwrap();
    let scenario = generate_scenario_two(80, region, 0.4, 400.0, seed).unwrap();
    Problem::new(scenario, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap()
}

fn options(seed: u64) -> PlanOptions {
    PlanOptions {
        pso: PsoParams { swarm_size: 20, max_iters: 150, ..PsoParams::default() },
        seed,
        no_prune: false,
    }
}

#[test]
fn exported_tables_reload_losslessly() {
    let problem = small_problem(2);
    let result = plan(&problem, &options(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = result.export(&problem, dir.path()).unwrap();

    assert_eq!(read_placements(&files.placements).unwrap(), result.placement);
    assert_eq!(read_convergence(&files.convergence).unwrap(), result.pso.trace);
    assert_eq!(read_summary(&files.summary).unwrap(), result.summary);

    let cdf = read_sinr_cdf(&files.sinr_cdf).unwrap();
    assert_eq!(cdf, result.cdf);
    assert_eq!(cdf.len(), problem.n_users());
    assert_eq!(cdf.last().unwrap().fraction, 1.0);
    assert!(cdf.windows(2).all(|w| w[0].sinr_db <= w[1].sinr_db && w[0].fraction < w[1].fraction));

    let users = fs::read_to_string(&files.users).unwrap();
    let mut lines = users.lines();
    assert_eq!(lines.next(), Some("id,x,y,subarea,serving,sinr_db,covered"));
    assert_eq!(lines.count(), problem.n_users());
}

#[test]
fn map_has_one_marker_per_active_drone() {
    let problem = small_problem(5);
    let result = plan(&problem, &options(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = result.export(&problem, dir.path()).unwrap();
    let svg = fs::read_to_string(&files.map).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"drone\"").count(), result.placement.active_count());
    assert_eq!(result.cells.iter().map(|c| c.drones.len()).sum::<usize>(), result.placement.active_count());
}

#[test]
fn summary_matches_reported_constraints() {
    let problem = small_problem(7);
    let result = plan(&problem, &options(7)).unwrap();
    let s = &result.summary;
    let report = problem.evaluate_constraints(&result.placement).unwrap();
    assert_eq!(s.constraints, report);
    assert_eq!(s.final_fleet, result.placement.active_count());
    assert_eq!(s.initial_fleet, 3);
    assert_eq!(s.initial_fleet - s.removed.len(), s.final_fleet);
    assert!((s.coverage_percent - 100.0 * report.covered_count as f64 / 80.0).abs() < 1e-12);
}

#[test]
fn scenario_file_round_trip_plans_identically() {
    let problem = small_problem(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    save_scenario(&problem.scenario, &path).unwrap();
    let loaded = load_scenario(&path).unwrap();
    assert_eq!(loaded, problem.scenario);

    let again = Problem::new(loaded, problem.channel, problem.radio, problem.footprint).unwrap();
    let a = plan(&problem, &options(3)).unwrap();
    let b = plan(&again, &options(3)).unwrap();
    assert_eq!(a.placement, b.placement);
    assert_eq!(a.summary, b.summary);
}
