//! End-to-end planning: sizing, swarm search, pruning and reporting.

use std::path::Path;

use crate::capacity::{ConstraintReport, Problem};
use crate::error::Result;
use crate::placement::Placement;
use crate::pruning::{prune, PruneOutcome};
use crate::pso::{run_pso, PsoOutcome, PsoParams};
use crate::reporting::{
    altitude_by_subarea, export_run, sinr_cdf, voronoi_cells, CdfPoint, ExportedFiles, RunArtifacts,
    RunSummary, VoronoiCell,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub pso: PsoParams,
    pub seed: u64,
    /// Skip redundant-drone elimination.
    pub no_prune: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub initial_fleet: usize,
    pub pso: PsoOutcome,
    pub pruning: Option<PruneOutcome>,
    /// Final placement (after pruning, if run).
    pub placement: Placement,
    pub report: ConstraintReport,
    pub cdf: Vec<CdfPoint>,
    pub cells: Vec<VoronoiCell>,
    pub summary: RunSummary,
}

impl PlanResult {
    pub fn feasible(&self) -> bool {
        self.pso.feasible
    }

    pub fn export(&self, problem: &Problem, dir: &Path) -> Result<ExportedFiles> {
        export_run(
            dir,
            &RunArtifacts {
                problem,
                placement: &self.placement,
                trace: &self.pso.trace,
                summary: &self.summary,
                cdf: &self.cdf,
                cells: &self.cells,
            },
        )
    }
}

pub fn plan(problem: &Problem, options: &PlanOptions) -> Result<PlanResult> {
    let initial_fleet = problem.initial_fleet_size()?.max(1);
    let pso = run_pso(problem, &options.pso, initial_fleet, options.seed)?;

    // pruning only applies to placements the swarm proved feasible
    let pruning = if pso.feasible && !options.no_prune {
        Some(prune(problem, &pso.placement)?)
    } else {
        None
    };
    let placement = pruning
        .as_ref()
        .map_or_else(|| pso.placement.clone(), |p| p.placement.clone());

    let report = problem.evaluate_constraints(&placement)?;
    let cdf = sinr_cdf(problem, &placement)?;
    let cells = voronoi_cells(&placement, &problem.scenario.region)?;
    let summary = RunSummary {
        seed: options.seed,
        n_users: problem.n_users(),
        users_per_bs: problem.users_per_bs(),
        initial_fleet,
        final_fleet: placement.active_count(),
        removed: pruning.as_ref().map(|p| p.removed.clone()).unwrap_or_default(),
        feasible: pso.feasible,
        iterations: pso.iterations,
        final_stage: pso.final_stage,
        final_utility: pso.final_utility,
        coverage_percent: 100.0 * report.coverage_ratio(),
        harmonic_se: report.harmonic_se,
        constraints: report.clone(),
        altitude_by_subarea: altitude_by_subarea(&placement, &problem.scenario, &cells),
    };
    Ok(PlanResult {
        initial_fleet,
        pso,
        pruning,
        placement,
        report,
        cdf,
        cells,
        summary,
    })
}
