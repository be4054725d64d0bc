//! Air-to-ground propagation and downlink SINR.
//!
//! The mean pathloss is free-space loss plus an excess loss that blends the
//! LoS and NLoS groups by the elevation-dependent LoS probability. Every
//! active drone transmits on the full band, so all non-serving drones
//! interfere with every user.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::placement::{Drone, Placement};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Environment constants of the air-to-ground model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub a: f64,
    pub b: f64,
    /// Mean excess loss over free space for LoS links, dB.
    pub eta_los: f64,
    /// Mean excess loss over free space for NLoS links, dB.
    pub eta_nlos: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
}

impl ChannelParams {
    /// Dense-urban environment at 2 GHz.
    pub const fn urban() -> Self {
        Self {
            a: 9.61,
            b: 0.16,
            eta_los: 1.0,
            eta_nlos: 20.0,
            carrier_freq: 2.0e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("channel.{name}"), format!("must be > 0, got {v}")))
            }
        };
        pos(self.a, "a")?;
        pos(self.b, "b")?;
        pos(self.carrier_freq, "carrier_freq")?;
        if !(self.eta_los >= 0.0 && self.eta_los.is_finite()) {
            return Err(Error::invalid("channel.eta_los", "must be >= 0"));
        }
        if !(self.eta_nlos >= self.eta_los && self.eta_nlos.is_finite()) {
            return Err(Error::invalid("channel.eta_nlos", "must be >= eta_los"));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::urban()
    }
}

/// System-level radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Per-drone transmit power, dBm.
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    /// Target downlink rate per user, bit/s.
    pub target_rate_bps: f64,
    /// Target average spectral efficiency, bit/s/Hz.
    pub target_se: f64,
    /// Minimum SINR for a user to count as covered, dB.
    pub sinr_threshold_db: f64,
    /// Fraction of users that must be covered, in (0, 1].
    pub coverage_fraction: f64,
    pub noise_density_dbm_hz: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Upper clip of the per-user spectral efficiency, bit/s/Hz.
    pub se_cap: f64,
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("radio.{name}"), format!("must be > 0, got {v}")))
            }
        };
        pos(self.bandwidth_hz, "bandwidth_hz")?;
        pos(self.target_rate_bps, "target_rate_bps")?;
        pos(self.target_se, "target_se")?;
        pos(self.se_cap, "se_cap")?;
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::invalid("radio.tx_power_dbm", "must be finite"));
        }
        if !self.noise_density_dbm_hz.is_finite() {
            return Err(Error::invalid("radio.noise_density_dbm_hz", "must be finite"));
        }
        if self.sinr_threshold_db.is_nan() {
            return Err(Error::invalid("radio.sinr_threshold_db", "must not be NaN"));
        }
        if !(self.coverage_fraction > 0.0 && self.coverage_fraction <= 1.0) {
            return Err(Error::invalid(
                "radio.coverage_fraction",
                format!("must lie in (0, 1], got {}", self.coverage_fraction),
            ));
        }
        if !(self.h_min >= 0.0 && self.h_min.is_finite()) {
            return Err(Error::invalid("radio.h_min", "must be >= 0"));
        }
        if !(self.h_max > self.h_min && self.h_max.is_finite()) {
            return Err(Error::invalid("radio.h_max", "must exceed h_min"));
        }
        Ok(())
    }

    /// Thermal noise over the full band, dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: watts_to_dbm(5.0),
            bandwidth_hz: 20.0e6,
            target_rate_bps: 1.0e6,
            target_se: 1.7,
            sinr_threshold_db: -7.0,
            coverage_fraction: 0.95,
            noise_density_dbm_hz: THERMAL_NOISE_DBM_HZ,
            h_min: 10.0,
            h_max: 600.0,
            se_cap: 8.0,
        }
    }
}

/// Geometry of a single drone-to-user link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    horizontal_dist: f64,
    altitude: f64,
    slant_dist: f64,
    elevation_deg: f64,
}

impl Link {
    pub fn new(horizontal_dist: f64, altitude: f64) -> Result<Self> {
        if !(horizontal_dist >= 0.0 && altitude >= 0.0)
            || !horizontal_dist.is_finite()
            || !altitude.is_finite()
        {
            return Err(Error::InvalidLink {
                horizontal: horizontal_dist,
                altitude,
            });
        }
        if horizontal_dist == 0.0 && altitude == 0.0 {
            return Err(Error::DegenerateLink);
        }
        // atan2 gives exactly 90 degrees at r = 0
        let elevation_deg = altitude.atan2(horizontal_dist).to_degrees();
        Ok(Self {
            horizontal_dist,
            altitude,
            slant_dist: horizontal_dist.hypot(altitude),
            elevation_deg,
        })
    }

    pub fn between(drone: &Drone, user: &Point) -> Result<Self> {
        Self::new(drone.ground().distance(user), drone.h)
    }

    pub fn horizontal_dist(&self) -> f64 {
        self.horizontal_dist
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn slant_dist(&self) -> f64 {
        self.slant_dist
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1e3)
}

/// Probability of a line-of-sight link at the given elevation.
pub fn prob_los(link: &Link, chan: &ChannelParams) -> f64 {
    prob_los_at(link.elevation_deg, chan)
}

fn prob_los_at(elevation_deg: f64, chan: &ChannelParams) -> f64 {
    1.0 / (1.0 + chan.a * (-chan.b * (elevation_deg - chan.a)).exp())
}

/// Free-space loss at `slant_dist`, dB.
pub fn free_space_loss_db(slant_dist: f64, carrier_freq: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * carrier_freq * slant_dist / SPEED_OF_LIGHT).log10()
}

/// Mean air-to-ground pathloss, dB.
pub fn pathloss_db(link: &Link, chan: &ChannelParams) -> f64 {
    let p_los = prob_los(link, chan);
    free_space_loss_db(link.slant_dist, chan.carrier_freq)
        + p_los * chan.eta_los
        + (1.0 - p_los) * chan.eta_nlos
}

/// Received power at `user` from `drone`, dBm.
pub fn received_power_dbm(
    drone: &Drone,
    user: &Point,
    chan: &ChannelParams,
    radio: &RadioConfig,
) -> Result<f64> {
    let link = Link::between(drone, user)?;
    Ok(radio.tx_power_dbm - pathloss_db(&link, chan))
}

/// SINR in dB from a received signal, interferer powers and noise, all in dBm.
pub fn sinr_from_received_dbm(signal_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let interference: f64 = interferers_dbm.iter().map(|&p| db_to_linear(p)).sum();
    linear_to_db(db_to_linear(signal_dbm) / (interference + db_to_linear(noise_dbm)))
}

/// Linear received powers (mW) from every drone; inactive drones contribute 0.
pub(crate) fn received_powers_mw(
    user: &Point,
    placement: &Placement,
    chan: &ChannelParams,
    radio: &RadioConfig,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    for drone in &placement.drones {
        if drone.active {
            out.push(db_to_linear(received_power_dbm(drone, user, chan, radio)?));
        } else {
            out.push(0.0);
        }
    }
    Ok(())
}

/// SINR of `user` when served by drone `serving`, dB.
pub fn sinr_db(
    user: &Point,
    serving: usize,
    placement: &Placement,
    chan: &ChannelParams,
    radio: &RadioConfig,
) -> Result<f64> {
    if !placement.is_active(serving) {
        return Err(Error::InactiveDrone(serving));
    }
    let mut powers = Vec::with_capacity(placement.len());
    received_powers_mw(user, placement, chan, radio, &mut powers)?;
    let total: f64 = powers.iter().sum();
    let noise = db_to_linear(radio.noise_power_dbm());
    Ok(sinr_of(powers[serving], total, noise))
}

#[inline]
fn sinr_of(signal: f64, total: f64, noise: f64) -> f64 {
    // clamp guards against total - signal rounding below zero
    linear_to_db(signal / ((total - signal).max(0.0) + noise))
}

/// Best-SINR server for `user`: `(drone index, SINR dB)`, ties to the lowest index.
pub fn best_server(
    user: &Point,
    placement: &Placement,
    chan: &ChannelParams,
    radio: &RadioConfig,
) -> Result<(usize, f64)> {
    let mut powers = Vec::with_capacity(placement.len());
    best_server_with(user, placement, chan, radio, &mut powers)
}

pub(crate) fn best_server_with(
    user: &Point,
    placement: &Placement,
    chan: &ChannelParams,
    radio: &RadioConfig,
    powers: &mut Vec<f64>,
) -> Result<(usize, f64)> {
    received_powers_mw(user, placement, chan, radio, powers)?;
    let total: f64 = powers.iter().sum();
    let noise = db_to_linear(radio.noise_power_dbm());
    let mut best: Option<(usize, f64)> = None;
    for (j, drone) in placement.drones.iter().enumerate() {
        if !drone.active {
            continue;
        }
        let s = sinr_of(powers[j], total, noise);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.ok_or(Error::NoServer)
}

/// Shannon spectral efficiency clipped at `cap`, bit/s/Hz.
pub fn spectral_efficiency(sinr_db: f64, cap: f64) -> f64 {
    (1.0 + db_to_linear(sinr_db)).log2().min(cap)
}

/// Pathloss over a set of altitudes at fixed horizontal distance `r`.
pub fn pathloss_vs_altitude(r: f64, altitudes: &[f64], chan: &ChannelParams) -> Result<Vec<(f64, f64)>> {
    altitudes
        .iter()
        .map(|&h| Ok((h, pathloss_db(&Link::new(r, h)?, chan))))
        .collect()
}
