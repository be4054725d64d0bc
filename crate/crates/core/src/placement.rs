use serde::{Deserialize, Serialize};

use crate::geom::{Point, Rect};

/// One aerial base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drone {
    pub x: f64,
    pub y: f64,
    /// Altitude above ground, meters.
    pub h: f64,
    /// `false` once the drone has been marked redundant.
    pub active: bool,
}

impl Drone {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Self {
            x,
            y,
            h,
            active: true,
        }
    }

    pub fn ground(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A fleet of drones; indices are stable across activation changes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Placement {
    pub drones: Vec<Drone>,
}

impl Placement {
    pub fn new(drones: Vec<Drone>) -> Self {
        Self { drones }
    }

    /// Builds an all-active placement from a flat `[x0, y0, h0, x1, y1, h1, ...]` vector.
    pub fn from_flat(position: &[f64]) -> Self {
        debug_assert_eq!(position.len() % 3, 0);
        Self {
            drones: position
                .chunks_exact(3)
                .map(|c| Drone::new(c[0], c[1], c[2]))
                .collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.drones.iter().flat_map(|d| [d.x, d.y, d.h]).collect()
    }

    pub fn len(&self) -> usize {
        self.drones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drones.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = (usize, &Drone)> + '_ {
        self.drones.iter().enumerate().filter(|(_, d)| d.active)
    }

    pub fn active_count(&self) -> usize {
        self.drones.iter().filter(|d| d.active).count()
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.drones.get(index).is_some_and(|d| d.active)
    }

    /// Copy of `self` with drone `index` deactivated.
    pub fn without(&self, index: usize) -> Self {
        let mut p = self.clone();
        p.drones[index].active = false;
        p
    }

    /// Whether every drone sits inside the region and altitude band.
    pub fn within_bounds(&self, region: &Rect, h_min: f64, h_max: f64) -> bool {
        self.drones
            .iter()
            .all(|d| region.contains(&d.ground()) && d.h >= h_min && d.h <= h_max)
    }
}
