//! Greedy removal of redundant drones.
//!
//! Drones stay where the optimizer put them. Each round tries deactivating
//! every active drone, keeps the candidates whose removal leaves all
//! constraints satisfied, and removes the one that disconnects the fewest
//! users (lowest index on ties). Rounds repeat until no drone qualifies.

use crate::capacity::Problem;
use crate::error::Result;
use crate::placement::Placement;

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub placement: Placement,
    /// Drone indices in removal order.
    pub removed: Vec<usize>,
    /// Set when the input did not satisfy every constraint and was returned untouched.
    pub input_infeasible: bool,
}

pub fn prune(problem: &Problem, placement: &Placement) -> Result<PruneOutcome> {
    let report = problem.evaluate_constraints(placement)?;
    if !report.all_ok() {
        return Ok(PruneOutcome {
            placement: placement.clone(),
            removed: Vec::new(),
            input_infeasible: true,
        });
    }

    let mut current = placement.clone();
    let mut covered = report.covered_count as i64;
    let mut removed = Vec::new();
    loop {
        if current.active_count() <= 1 {
            break;
        }
        let mut choice: Option<(usize, i64, i64)> = None;
        for (j, _) in current.active() {
            let candidate = current.without(j);
            let after = problem.evaluate_constraints(&candidate)?;
            if !after.all_ok() {
                continue;
            }
            // negative when removal relieves interference
            let disconnected = covered - after.covered_count as i64;
            if choice.is_none_or(|(_, best, _)| disconnected < best) {
                choice = Some((j, disconnected, after.covered_count as i64));
            }
        }
        match choice {
            Some((j, _, after)) => {
                current.drones[j].active = false;
                covered = after;
                removed.push(j);
            }
            None => break,
        }
    }
    Ok(PruneOutcome {
        placement: current,
        removed,
        input_infeasible: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::FootprintModel;
    use crate::channel::{ChannelParams, RadioConfig};
    use crate::geom::Point;
    use crate::scenario::{Region, Scenario, Subarea};

    fn small_problem(users: Vec<Point>) -> Problem {
        let region = Region::new(1000.0, 1000.0).unwrap();
        let scenario = Scenario {
            region,
            subareas: vec![Subarea { id: 0, rect: region.rect(), density: users.len() as f64 / region.area() }],
            users,
            seed: 0,
        };
        Problem::new(scenario, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap()
    }

    #[test]
    fn single_drone_is_kept() {
        let problem = small_problem(vec![Point::new(500.0, 500.0)]);
        let p = Placement::from_flat(&[500.0, 500.0, 100.0]);
        let out = prune(&problem, &p).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.placement, p);
    }

    #[test]
    fn stacked_twin_is_removed() {
        // a -10 dB threshold lets 0 dB twins pass; one twin must go
        let mut problem = small_problem(vec![Point::new(500.0, 500.0), Point::new(520.0, 480.0)]);
        problem.radio.sinr_threshold_db = -10.0;
        problem.radio.target_se = 0.5;
        let p = Placement::from_flat(&[500.0, 500.0, 100.0, 500.0, 500.0, 100.0]);
        assert!(problem.evaluate_constraints(&p).unwrap().all_ok());
        let out = prune(&problem, &p).unwrap();
        assert_eq!(out.removed, vec![0]);
        assert_eq!(out.placement.active_count(), 1);
        assert!(problem.evaluate_constraints(&out.placement).unwrap().all_ok());
    }

    #[test]
    fn infeasible_input_is_flagged() {
        let problem = small_problem(vec![Point::new(10.0, 10.0)]);
        let mut strict = problem.clone();
        strict.radio.target_se = 100.0;
        let p = Placement::from_flat(&[900.0, 900.0, 10.0]);
        let out = prune(&strict, &p).unwrap();
        assert!(out.input_infeasible);
        assert_eq!(out.placement, p);
    }
}
