//! Staged-utility particle swarm for drone placement.
//!
//! A particle is the flat vector `[x_1, y_1, h_1, ..., x_N, y_N, h_N]`. The
//! swarm first minimizes the capacity deficit, then (once the deficit is
//! zero) the negated covered-user count, and finally a spectral-efficiency
//! score that reaches `-N_U` exactly when the harmonic-mean SE meets the
//! target. Search ends at that point or when the iteration budget runs out.
//!
//! Positions are updated synchronously: every particle moves against the
//! bests from the previous iteration, the new positions are scored in
//! parallel, and bests are then folded in fixed particle order.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::Problem;
use crate::error::{Error, Result};
use crate::placement::Placement;

/// Which utility the swarm is currently minimizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Capacity,
    Coverage,
    SpectralEfficiency,
}

impl Stage {
    pub fn index(self) -> u8 {
        match self {
            Stage::Capacity => 1,
            Stage::Coverage => 2,
            Stage::SpectralEfficiency => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Capacity => "capacity",
            Stage::Coverage => "coverage",
            Stage::SpectralEfficiency => "spectral_efficiency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub swarm_size: usize,
    /// Inertia weight at the first iteration.
    pub inertia_start: f64,
    /// Inertia weight at the last iteration of the budget.
    pub inertia_end: f64,
    pub c1: f64,
    pub c2: f64,
    /// Per-dimension speed limit in meters; `None` means 10% of the region diagonal.
    pub v_max: Option<f64>,
    pub max_iters: usize,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            inertia_start: 0.9,
            inertia_end: 0.4,
            c1: 2.0,
            c2: 2.0,
            v_max: None,
            max_iters: 2000,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::invalid("pso.swarm_size", "must be >= 2"));
        }
        for (v, name) in [(self.inertia_start, "pso.inertia_start"), (self.inertia_end, "pso.inertia_end")] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(name, format!("must lie in (0, 1], got {v}")));
            }
        }
        for (v, name) in [(self.c1, "pso.c1"), (self.c2, "pso.c2")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        if let Some(v) = self.v_max {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("pso.v_max", "must be > 0"));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("pso.max_iters", "must be >= 1"));
        }
        Ok(())
    }

    /// Inertia at iteration `t` (1-based), decayed linearly over the budget.
    pub fn inertia_at(&self, t: usize) -> f64 {
        if self.max_iters <= 1 {
            return self.inertia_start;
        }
        let frac = (t.saturating_sub(1)) as f64 / (self.max_iters - 1) as f64;
        self.inertia_start + (self.inertia_end - self.inertia_start) * frac.min(1.0)
    }
}

/// Capacity deficit `sum_k max(0, D_k S_k - sum_j N_U_BS rho_jk)`; zero iff
/// every subarea's demand is met.
pub fn utility_u1(problem: &Problem, placement: &Placement) -> f64 {
    problem
        .capacity_slack(placement)
        .iter()
        .map(|s| (-s).max(0.0))
        .sum()
}

/// Negated covered-user count while capacity holds, else 0.
pub fn utility_u2(problem: &Problem, placement: &Placement) -> Result<f64> {
    let slack = problem.capacity_slack(placement);
    if !problem.capacity_holds(&slack) {
        return Ok(0.0);
    }
    Ok(-(problem.coverage_stats(placement)?.covered as f64))
}

/// `-N_U + eta - 1/E[1/eta_i]` while capacity and coverage both hold, else 0.
pub fn utility_u3(problem: &Problem, placement: &Placement) -> Result<f64> {
    let slack = problem.capacity_slack(placement);
    if !problem.capacity_holds(&slack) {
        return Ok(0.0);
    }
    let stats = problem.coverage_stats(placement)?;
    if !problem.coverage_met(stats.covered) {
        return Ok(0.0);
    }
    Ok(se_score(problem, stats.harmonic_se))
}

fn se_score(problem: &Problem, harmonic_se: f64) -> f64 {
    -(problem.n_users() as f64) + problem.radio.target_se - harmonic_se
}

/// The utility of `stage` evaluated at `placement`.
pub fn utility(problem: &Problem, stage: Stage, placement: &Placement) -> Result<f64> {
    match stage {
        Stage::Capacity => Ok(utility_u1(problem, placement)),
        Stage::Coverage => utility_u2(problem, placement),
        Stage::SpectralEfficiency => utility_u3(problem, placement),
    }
}

/// Single-number progress measure: U1 while the capacity deficit is
/// positive, U2 while fewer than `zeta * N_U` users are covered, U3 after.
pub fn staged_utility(problem: &Problem, placement: &Placement) -> Result<(Stage, f64)> {
    let u1 = utility_u1(problem, placement);
    if u1 > 0.0 {
        return Ok((Stage::Capacity, u1));
    }
    let stats = problem.coverage_stats(placement)?;
    if !problem.coverage_met(stats.covered) {
        return Ok((Stage::Coverage, -(stats.covered as f64)));
    }
    Ok((Stage::SpectralEfficiency, se_score(problem, stats.harmonic_se)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_utility: f64,
}

/// Per-dimension box for particle positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBounds {
    /// `(x, y, h)` bounds repeated for `n_bs` drones.
    pub fn for_problem(problem: &Problem, n_bs: usize) -> Self {
        let region = &problem.scenario.region;
        let (h_min, h_max) = (problem.radio.h_min, problem.radio.h_max);
        Self {
            lower: [0.0, 0.0, h_min].repeat(n_bs),
            upper: [region.width, region.height, h_max].repeat(n_bs),
        }
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// New velocity `inertia V + c1 phi1 (W_local - W) + c2 phi2 (W_global - W)`,
/// with `phi1`, `phi2` drawn per dimension from (0, 1) in that order and the
/// result clamped to `±v_max`.
pub fn velocity_update<R: Rng + ?Sized>(
    particle: &Particle,
    global_best: &[f64],
    inertia: f64,
    params: &PsoParams,
    v_max: f64,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert_eq!(particle.position.len(), global_best.len());
    (0..particle.position.len())
        .map(|w| {
            let phi1: f64 = rng.sample(Open01);
            let phi2: f64 = rng.sample(Open01);
            let x = particle.position[w];
            let v = inertia * particle.velocity[w]
                + params.c1 * phi1 * (particle.best_position[w] - x)
                + params.c2 * phi2 * (global_best[w] - x);
            v.clamp(-v_max, v_max)
        })
        .collect()
}

/// Moves the particle by its velocity and clamps to `bounds`; any clamped
/// dimension has its velocity zeroed.
pub fn position_update<'a>(particle: &'a mut Particle, bounds: &SearchBounds) -> &'a [f64] {
    for w in 0..particle.position.len() {
        let moved = particle.position[w] + particle.velocity[w];
        let (lo, hi) = (bounds.lower[w], bounds.upper[w]);
        if moved < lo {
            particle.position[w] = lo;
            particle.velocity[w] = 0.0;
        } else if moved > hi {
            particle.position[w] = hi;
            particle.velocity[w] = 0.0;
        } else {
            particle.position[w] = moved;
        }
    }
    &particle.position
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_utility: f64,
    pub stage: Stage,
    pub iteration: usize,
    pub seed: u64,
}

/// One convergence sample: the global best after `iteration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: Stage,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    /// True when the stage never moves backwards and, within a stage, the
    /// utility never increases.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].stage > w[0].stage || (w[1].stage == w[0].stage && w[1].utility <= w[0].utility)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub placement: Placement,
    pub trace: ConvergenceTrace,
    pub feasible: bool,
    pub iterations: usize,
    pub final_stage: Stage,
    pub final_utility: f64,
}

fn score(problem: &Problem, stage: Stage, position: &[f64]) -> f64 {
    // unscorable geometry (a drone at h = 0 exactly above a user) ranks last
    utility(problem, stage, &Placement::from_flat(position)).unwrap_or(f64::INFINITY)
}

fn score_all(problem: &Problem, stage: Stage, positions: Vec<&[f64]>) -> Vec<f64> {
    positions
        .into_par_iter()
        .map(|p| score(problem, stage, p))
        .collect()
}

impl SwarmState {
    fn refresh_global(&mut self) {
        let (best, _) = self
            .particles
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bu), (i, p)| {
                if p.best_utility < bu { (i, p.best_utility) } else { (bi, bu) }
            });
        self.global_best_utility = self.particles[best].best_utility;
        self.global_best_position = self.particles[best].best_position.clone();
    }

    fn rescore(&mut self, problem: &Problem) {
        let scores = score_all(
            problem,
            self.stage,
            self.particles.iter().map(|p| p.best_position.as_slice()).collect(),
        );
        for (p, s) in self.particles.iter_mut().zip(scores) {
            p.best_utility = s;
        }
        self.refresh_global();
    }

    /// Applies every stage switch the current global best qualifies for.
    fn advance_stage(&mut self, problem: &Problem) {
        loop {
            let next = match self.stage {
                Stage::Capacity if self.global_best_utility <= 0.0 => Stage::Coverage,
                Stage::Coverage if self.global_best_utility <= -problem.coverage_target() => {
                    Stage::SpectralEfficiency
                }
                _ => return,
            };
            self.stage = next;
            self.rescore(problem);
        }
    }

    fn solved(&self, problem: &Problem) -> bool {
        self.stage == Stage::SpectralEfficiency
            && self.global_best_utility <= -(problem.n_users() as f64)
    }
}

/// Runs the staged swarm for a fleet of `n_bs` drones.
///
/// Exhausting `max_iters` is not an error: the best placement found is
/// returned with `feasible = false`.
pub fn run_pso(problem: &Problem, params: &PsoParams, n_bs: usize, seed: u64) -> Result<PsoOutcome> {
    params.validate()?;
    if n_bs == 0 {
        return Err(Error::invalid("n_bs", "fleet must contain at least one drone"));
    }
    let bounds = SearchBounds::for_problem(problem, n_bs);
    let v_max = params
        .v_max
        .unwrap_or(0.1 * problem.scenario.region.diagonal());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let starts: Vec<Vec<f64>> = (0..params.swarm_size)
        .map(|_| {
            (0..bounds.dims())
                .map(|w| bounds.lower[w] + rng.random::<f64>() * (bounds.upper[w] - bounds.lower[w]))
                .collect()
        })
        .collect();
    let initial = score_all(problem, Stage::Capacity, starts.iter().map(Vec::as_slice).collect());
    let particles = starts
        .into_iter()
        .zip(initial)
        .map(|(position, u)| Particle {
            velocity: vec![0.0; position.len()],
            best_position: position.clone(),
            best_utility: u,
            position,
        })
        .collect();
    let mut state = SwarmState {
        particles,
        global_best_position: Vec::new(),
        global_best_utility: f64::INFINITY,
        stage: Stage::Capacity,
        iteration: 0,
        seed,
    };
    state.refresh_global();
    state.advance_stage(problem);

    let mut trace = ConvergenceTrace::default();
    trace.rows.push(TraceRow {
        iteration: 0,
        stage: state.stage,
        utility: state.global_best_utility,
    });

    while !state.solved(problem) && state.iteration < params.max_iters {
        state.iteration += 1;
        let inertia = params.inertia_at(state.iteration);
        for p in state.particles.iter_mut() {
            p.velocity = velocity_update(p, &state.global_best_position, inertia, params, v_max, &mut rng);
            position_update(p, &bounds);
        }
        let scores = score_all(
            problem,
            state.stage,
            state.particles.iter().map(|p| p.position.as_slice()).collect(),
        );
        for (i, u) in scores.into_iter().enumerate() {
            let p = &mut state.particles[i];
            if u < p.best_utility {
                p.best_utility = u;
                p.best_position.clone_from(&p.position);
                if u < state.global_best_utility {
                    state.global_best_utility = u;
                    state.global_best_position.clone_from(&p.position);
                }
            }
        }
        state.advance_stage(problem);
        trace.rows.push(TraceRow {
            iteration: state.iteration,
            stage: state.stage,
            utility: state.global_best_utility,
        });
    }

    Ok(PsoOutcome {
        placement: Placement::from_flat(&state.global_best_position),
        feasible: state.solved(problem),
        iterations: state.iteration,
        final_stage: state.stage,
        final_utility: state.global_best_utility,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::FootprintModel;
    use crate::channel::{ChannelParams, RadioConfig};
    use crate::geom::Point;
    use crate::scenario::{generate_scenario_one, Region, Scenario, Subarea};

    fn particle(position: Vec<f64>, velocity: Vec<f64>, best: Vec<f64>) -> Particle {
        Particle {
            position,
            velocity,
            best_position: best,
            best_utility: 0.0,
        }
    }

    #[test]
    fn zero_coefficients_keep_velocity() {
        let p = particle(vec![1.0, 2.0, 3.0], vec![0.5, -0.25, 4.0], vec![9.0, 9.0, 9.0]);
        let params = PsoParams { c1: 0.0, c2: 0.0, ..PsoParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = velocity_update(&p, &[7.0, 7.0, 7.0], 1.0, &params, 100.0, &mut rng);
        assert_eq!(v, p.velocity);
    }

    #[test]
    fn at_both_bests_velocity_only_decays() {
        let p = particle(vec![1.0, 2.0], vec![3.0, -6.0], vec![1.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = velocity_update(&p, &[1.0, 2.0], 0.5, &PsoParams::default(), 100.0, &mut rng);
        assert_eq!(v, vec![1.5, -3.0]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn velocity_replays_rng_stream() {
        let p = particle(vec![10.0, 20.0, 30.0], vec![1.0, -2.0, 0.5], vec![12.0, 15.0, 31.0]);
        let global = [5.0, 25.0, 40.0];
        let params = PsoParams::default();
        let got = velocity_update(&p, &global, 0.7, &params, 8.0, &mut ChaCha8Rng::seed_from_u64(42));

        let mut replay = ChaCha8Rng::seed_from_u64(42);
        let mut want = Vec::new();
        for w in 0..3 {
            let phi1: f64 = replay.sample(Open01);
            let phi2: f64 = replay.sample(Open01);
            let v = 0.7 * p.velocity[w]
                + 2.0 * phi1 * (p.best_position[w] - p.position[w])
                + 2.0 * phi2 * (global[w] - p.position[w]);
            want.push(v.clamp(-8.0, 8.0));
        }
        assert_eq!(got, want);
    }

    #[test]
    fn position_update_rules() {
        let bounds = SearchBounds { lower: vec![0.0, 0.0, 10.0], upper: vec![100.0, 100.0, 600.0] };

        let mut still = particle(vec![5.0, 6.0, 70.0], vec![0.0; 3], vec![0.0; 3]);
        assert_eq!(position_update(&mut still, &bounds), &[5.0, 6.0, 70.0]);

        let mut inner = particle(vec![5.0, 6.0, 70.0], vec![1.5, -2.0, 30.0], vec![0.0; 3]);
        assert_eq!(position_update(&mut inner, &bounds), &[6.5, 4.0, 100.0]);
        assert_eq!(inner.velocity, vec![1.5, -2.0, 30.0]);

        let mut out = particle(vec![95.0, 3.0, 20.0], vec![10.0, -5.0, -50.0], vec![0.0; 3]);
        assert_eq!(position_update(&mut out, &bounds), &[100.0, 0.0, 10.0]);
        assert_eq!(out.velocity, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn inertia_schedule_endpoints() {
        let params = PsoParams { max_iters: 11, ..PsoParams::default() };
        assert_eq!(params.inertia_at(1), 0.9);
        assert!((params.inertia_at(11) - 0.4).abs() < 1e-15);
        assert!((params.inertia_at(6) - 0.65).abs() < 1e-12);
    }

    fn one_user_problem() -> Problem {
        let region = Region::new(1000.0, 1000.0).unwrap();
        let scenario = Scenario {
            region,
            subareas: vec![Subarea { id: 0, rect: region.rect(), density: 1.0 / region.area() }],
            users: vec![Point::new(400.0, 600.0)],
            seed: 0,
        };
        Problem::new(scenario, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap()
    }

    #[test]
    fn trivial_instance_converges() {
        let problem = one_user_problem();
        let outcome = run_pso(&problem, &PsoParams::default(), 1, 3).unwrap();
        assert!(outcome.feasible);
        assert!(outcome.iterations < 100);
        assert!(problem.evaluate_constraints(&outcome.placement).unwrap().all_ok());
        assert!(outcome.trace.is_monotone());
    }

    #[test]
    fn impossible_instance_exhausts_budget() {
        // 200 users against one drone worth 34 users
        let scenario = generate_scenario_one(200, Region::new(2000.0, 2000.0).unwrap(), (0.5, 0.5), 1).unwrap();
        let problem = Problem::new(scenario, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap();
        let params = PsoParams { max_iters: 30, swarm_size: 10, ..PsoParams::default() };
        let outcome = run_pso(&problem, &params, 1, 3).unwrap();
        assert!(!outcome.feasible);
        assert_eq!(outcome.iterations, 30);
        assert_eq!(outcome.final_stage, Stage::Capacity);
        assert!(outcome.final_utility > 0.0);
    }

    #[test]
    fn utility_gates() {
        let problem = one_user_problem();
        let good = Placement::from_flat(&[400.0, 600.0, 100.0]);
        assert_eq!(utility_u1(&problem, &good), 0.0);
        assert_eq!(utility_u2(&problem, &good).unwrap(), -1.0);
        // lone user at the SE cap: -1 + 1.7 - 8
        assert!((utility_u3(&problem, &good).unwrap() - (-1.0 + 1.7 - 8.0)).abs() < 1e-12);
        assert_eq!(staged_utility(&problem, &good).unwrap().0, Stage::SpectralEfficiency);
    }

    #[test]
    fn rejects_empty_fleet() {
        assert!(run_pso(&one_user_problem(), &PsoParams::default(), 0, 1).is_err());
    }
}
