//! Fleet sizing, drone footprints and the three service constraints.
//!
//! A drone's footprint is the ground disk where its noise-limited SNR clears
//! the coverage threshold plus a link margin. Footprint areas are measured
//! on a fixed lattice of pitch `resolution` (lattice points sit at cell
//! centers `((i + 0.5) p, (j + 0.5) p)`), so the per-subarea overlaps of a
//! drone always sum exactly to its in-region area. A subarea edge is
//! resolved to within half a pitch, so the error in `rho` grows like
//! `p / radius`; the 10 m default keeps it under 1% for footprints of a few
//! hundred meters and up.

use serde::{Deserialize, Serialize};

use crate::channel::{self, pathloss_db, spectral_efficiency, ChannelParams, Link, RadioConfig};
use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::placement::{Drone, Placement};
use crate::scenario::{Region, Scenario, Subarea};

/// Relative slack used when comparing constraint sides.
pub(crate) const CONSTRAINT_TOL: f64 = 1e-9;

/// Users one drone can serve at the target rate: `floor(B * eta / R)`.
pub fn users_per_bs(radio: &RadioConfig) -> usize {
    let ratio = radio.bandwidth_hz * radio.target_se / radio.target_rate_bps;
    // absorb representation error so that B*eta == R gives exactly 1
    (ratio * (1.0 + 1e-12)).floor().max(0.0) as usize
}

/// Capacity-driven initial fleet size: `ceil(N_U / N_U_BS)`.
pub fn initial_fleet_size(n_users: usize, radio: &RadioConfig) -> Result<usize> {
    let per_bs = users_per_bs(radio);
    if per_bs == 0 {
        return Err(Error::InfeasibleRate {
            capacity_bps: radio.bandwidth_hz * radio.target_se,
            target_rate_bps: radio.target_rate_bps,
        });
    }
    Ok(n_users.div_ceil(per_bs))
}

/// How footprints are sized and measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FootprintModel {
    /// Extra SNR the footprint edge must clear above the SINR threshold, dB.
    pub margin_db: f64,
    /// Lattice pitch for area estimation, m.
    pub resolution: f64,
}

impl Default for FootprintModel {
    fn default() -> Self {
        Self {
            margin_db: 30.0,
            resolution: 10.0,
        }
    }
}

impl FootprintModel {
    pub fn validate(&self) -> Result<()> {
        if !self.margin_db.is_finite() {
            return Err(Error::invalid("footprint.margin_db", "must be finite"));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::invalid("footprint.resolution", "must be > 0"));
        }
        Ok(())
    }

    pub fn footprint(&self, drone: &Drone, chan: &ChannelParams, radio: &RadioConfig, region: &Region) -> Footprint {
        Footprint {
            center: drone.ground(),
            radius: coverage_radius(drone.h, chan, radio, self.margin_db, region.diagonal()),
        }
    }
}

/// Ground disk attributed to one drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub center: Point,
    pub radius: f64,
}

/// Largest horizontal distance at which a drone at `altitude` still delivers
/// a noise-limited SNR of at least `sinr_threshold_db + margin_db`.
///
/// Bisection over `[0, max_radius]` to 1 m; returns `max_radius` when the
/// whole interval qualifies and 0 when even the point below the drone fails.
pub fn coverage_radius(
    altitude: f64,
    chan: &ChannelParams,
    radio: &RadioConfig,
    margin_db: f64,
    max_radius: f64,
) -> f64 {
    let required = radio.sinr_threshold_db + margin_db;
    let noise = radio.noise_power_dbm();
    let snr_at = |r: f64| match Link::new(r, altitude) {
        Ok(link) => radio.tx_power_dbm - pathloss_db(&link, chan) - noise,
        Err(_) => f64::INFINITY,
    };
    if snr_at(0.0) < required {
        return 0.0;
    }
    if snr_at(max_radius) >= required {
        return max_radius;
    }
    let (mut lo, mut hi) = (0.0, max_radius);
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        if snr_at(mid) >= required {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Area of `disk ∩ rect` on the global lattice of pitch `resolution`.
///
/// The rectangle is half-open on its upper edges so adjacent rectangles
/// never share a lattice point.
pub fn lattice_overlap_area(footprint: &Footprint, rect: &Rect, resolution: f64) -> f64 {
    let Footprint { center: c, radius } = *footprint;
    if radius <= 0.0 {
        return 0.0;
    }
    let p = resolution;
    let first = |lo: f64| (lo / p - 0.5).ceil() as i64;
    let last_closed = |hi: f64| (hi / p - 0.5).floor() as i64;
    let last_open = |hi: f64| (hi / p - 0.5).ceil() as i64 - 1;

    let j_min = first(rect.y.max(c.y - radius));
    let j_max = last_closed(c.y + radius).min(last_open(rect.y_max()));
    let mut count: i64 = 0;
    for j in j_min..=j_max {
        let dy = (j as f64 + 0.5) * p - c.y;
        let half = radius * radius - dy * dy;
        if half < 0.0 {
            continue;
        }
        let half = half.sqrt();
        let i_min = first(rect.x.max(c.x - half));
        let i_max = last_closed(c.x + half).min(last_open(rect.x_max()));
        if i_max >= i_min {
            count += i_max - i_min + 1;
        }
    }
    count as f64 * p * p
}

/// Fraction of a footprint's in-region area that falls in `subarea`.
pub fn rho(footprint: &Footprint, subarea: &Subarea, region: &Region, resolution: f64) -> f64 {
    let total = lattice_overlap_area(footprint, &region.rect(), resolution);
    if total <= 0.0 {
        return 0.0;
    }
    (lattice_overlap_area(footprint, &subarea.rect, resolution) / total).clamp(0.0, 1.0)
}

/// Outcome of checking a placement against capacity, coverage and SE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub capacity_ok: bool,
    /// Per-subarea `sum_j N_U_BS * rho_jk - D_k * S_k`.
    pub capacity_slack: Vec<f64>,
    pub covered_count: usize,
    pub n_users: usize,
    pub coverage_ok: bool,
    /// `1 / E[1 / eta_i]` over covered users, bit/s/Hz.
    pub harmonic_se: f64,
    pub se_ok: bool,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.capacity_ok && self.coverage_ok && self.se_ok
    }

    pub fn coverage_ratio(&self) -> f64 {
        if self.n_users == 0 {
            0.0
        } else {
            self.covered_count as f64 / self.n_users as f64
        }
    }
}

/// Coverage and SE statistics of one placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageStats {
    pub covered: usize,
    pub harmonic_se: f64,
}

/// A scenario together with every model parameter needed to score placements.
#[derive(Debug, Clone)]
pub struct Problem {
    pub scenario: Scenario,
    pub channel: ChannelParams,
    pub radio: RadioConfig,
    pub footprint: FootprintModel,
}

impl Problem {
    pub fn new(
        scenario: Scenario,
        channel: ChannelParams,
        radio: RadioConfig,
        footprint: FootprintModel,
    ) -> Result<Self> {
        scenario.validate()?;
        channel.validate()?;
        radio.validate()?;
        footprint.validate()?;
        initial_fleet_size(scenario.n_users(), &radio)?;
        Ok(Self {
            scenario,
            channel,
            radio,
            footprint,
        })
    }

    pub fn n_users(&self) -> usize {
        self.scenario.n_users()
    }

    pub fn users_per_bs(&self) -> usize {
        users_per_bs(&self.radio)
    }

    pub fn initial_fleet_size(&self) -> Result<usize> {
        initial_fleet_size(self.n_users(), &self.radio)
    }

    pub fn footprint_of(&self, drone: &Drone) -> Footprint {
        self.footprint
            .footprint(drone, &self.channel, &self.radio, &self.scenario.region)
    }

    /// `rho[j][k]` for every drone; inactive drones get a zero row.
    pub fn rho_matrix(&self, placement: &Placement) -> Vec<Vec<f64>> {
        let region = &self.scenario.region;
        let res = self.footprint.resolution;
        placement
            .drones
            .iter()
            .map(|d| {
                if !d.active {
                    return vec![0.0; self.scenario.subareas.len()];
                }
                let fp = self.footprint_of(d);
                let total = lattice_overlap_area(&fp, &region.rect(), res);
                self.scenario
                    .subareas
                    .iter()
                    .map(|s| {
                        if total <= 0.0 {
                            0.0
                        } else {
                            (lattice_overlap_area(&fp, &s.rect, res) / total).clamp(0.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Per-subarea capacity slack: supply minus demand.
    pub fn capacity_slack(&self, placement: &Placement) -> Vec<f64> {
        let rho = self.rho_matrix(placement);
        let per_bs = self.users_per_bs() as f64;
        self.scenario
            .subareas
            .iter()
            .enumerate()
            .map(|(k, s)| rho.iter().map(|row| per_bs * row[k]).sum::<f64>() - s.demand())
            .collect()
    }

    pub(crate) fn capacity_holds(&self, slack: &[f64]) -> bool {
        slack
            .iter()
            .zip(&self.scenario.subareas)
            .all(|(s, sub)| *s >= -CONSTRAINT_TOL * sub.demand().max(1.0))
    }

    /// Number of users at or above the SINR threshold under best-server
    /// association, and the harmonic-mean SE over those users.
    pub fn coverage_stats(&self, placement: &Placement) -> Result<CoverageStats> {
        if placement.active_count() == 0 {
            return Err(Error::NoServer);
        }
        let mut powers = Vec::with_capacity(placement.len());
        let mut covered = 0usize;
        let mut inverse_sum = 0.0;
        for user in &self.scenario.users {
            let (_, sinr) =
                channel::best_server_with(user, placement, &self.channel, &self.radio, &mut powers)?;
            if sinr >= self.radio.sinr_threshold_db {
                covered += 1;
                inverse_sum += 1.0 / spectral_efficiency(sinr, self.radio.se_cap);
            }
        }
        let harmonic_se = if covered == 0 {
            0.0
        } else {
            covered as f64 / inverse_sum
        };
        Ok(CoverageStats { covered, harmonic_se })
    }

    pub(crate) fn coverage_target(&self) -> f64 {
        self.radio.coverage_fraction * self.n_users() as f64
    }

    pub(crate) fn coverage_met(&self, covered: usize) -> bool {
        covered as f64 >= self.coverage_target() - CONSTRAINT_TOL
    }

    pub(crate) fn se_met(&self, harmonic_se: f64) -> bool {
        harmonic_se > 0.0 && harmonic_se >= self.radio.target_se - CONSTRAINT_TOL
    }

    /// Evaluates capacity, coverage and SE for `placement`.
    pub fn evaluate_constraints(&self, placement: &Placement) -> Result<ConstraintReport> {
        let stats = self.coverage_stats(placement)?;
        let slack = self.capacity_slack(placement);
        Ok(ConstraintReport {
            capacity_ok: self.capacity_holds(&slack),
            capacity_slack: slack,
            covered_count: stats.covered,
            n_users: self.n_users(),
            coverage_ok: self.coverage_met(stats.covered),
            harmonic_se: stats.harmonic_se,
            se_ok: self.se_met(stats.harmonic_se),
        })
    }
}
