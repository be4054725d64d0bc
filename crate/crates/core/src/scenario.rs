//! Service region, density subareas and user snapshots.
//!
//! Scenario files are JSON:
//!
//! ```json
//! {
//!   "region": { "width": 10000.0, "height": 10000.0 },
//!   "subareas": [ { "id": 0, "rect": { "x": 0.0, "y": 0.0, "w": 5000.0, "h": 10000.0 }, "density": 4e-6 } ],
//!   "users": [ [120.5, 8842.0], ... ],
//!   "seed": 7
//! }
//! ```
//!
//! All lengths are meters and densities users/m².

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};

/// Relative tolerance for tiling checks.
const TILE_TOL: f64 = 1e-9;

/// Axis-aligned service region anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        let r = Self { width, height };
        r.validate()?;
        Ok(r)
    }

    /// Square region of the given area.
    pub fn square_of_area(area: f64) -> Result<Self> {
        Self::new(area.sqrt(), area.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::invalid("region.width", "must be > 0"));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::invalid("region.height", "must be > 0"));
        }
        Ok(())
    }

    pub fn rect(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.width, 0.5 * self.height)
    }
}

/// A rectangle of uniform user density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subarea {
    pub id: u32,
    pub rect: Rect,
    /// Users per m².
    pub density: f64,
}

impl Subarea {
    pub fn area(&self) -> f64 {
        self.rect.area()
    }

    /// Expected users, `D_k * S_k`.
    pub fn demand(&self) -> f64 {
        self.density * self.area()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub region: Region,
    pub subareas: Vec<Subarea>,
    #[serde(with = "point_pairs")]
    pub users: Vec<Point>,
    pub seed: u64,
}

mod point_pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geom::Point;

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = points.iter().map(|p| [p.x, p.y]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }
}

impl Scenario {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Index of the subarea owning `p`. Subareas are half-open on their
    /// upper edges except where that edge is the region boundary.
    pub fn subarea_index(&self, p: &Point) -> Option<usize> {
        let (w, h) = (self.region.width, self.region.height);
        self.subareas.iter().position(|s| {
            let r = &s.rect;
            let in_x = p.x >= r.x && (p.x < r.x_max() || (p.x == r.x_max() && r.x_max() >= w));
            let in_y = p.y >= r.y && (p.y < r.y_max() || (p.y == r.y_max() && r.y_max() >= h));
            in_x && in_y
        })
    }

    /// Number of users falling in each subarea.
    pub fn users_per_subarea(&self) -> Vec<usize> {
        let mut counts = vec![0; self.subareas.len()];
        for u in &self.users {
            if let Some(k) = self.subarea_index(u) {
                counts[k] += 1;
            }
        }
        counts
    }

    /// Checks every structural invariant; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.subareas.is_empty() {
            return Err(Error::invalid("subareas", "at least one subarea is required"));
        }
        let region = self.region.rect();
        let scale = self.region.area();
        let mut covered = 0.0;
        for (k, s) in self.subareas.iter().enumerate() {
            let r = &s.rect;
            if !(r.w > 0.0 && r.h > 0.0) || ![r.x, r.y, r.w, r.h].iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("subareas[{k}].rect"), "must have positive finite size"));
            }
            let tol = TILE_TOL * self.region.width.max(self.region.height);
            if r.x < -tol || r.y < -tol || r.x_max() > region.x_max() + tol || r.y_max() > region.y_max() + tol {
                return Err(Error::invalid(format!("subareas[{k}].rect"), "extends outside the region"));
            }
            if !(s.density >= 0.0 && s.density.is_finite()) {
                return Err(Error::invalid(format!("subareas[{k}].density"), "must be >= 0"));
            }
            for (m, other) in self.subareas.iter().enumerate().skip(k + 1) {
                if r.overlap_area(&other.rect) > TILE_TOL * scale {
                    return Err(Error::invalid(
                        format!("subareas[{m}].rect"),
                        format!("overlaps subareas[{k}]"),
                    ));
                }
            }
            covered += s.area();
        }
        if (covered - scale).abs() > TILE_TOL * scale {
            return Err(Error::invalid(
                "subareas",
                format!("do not tile the region (covered {covered} of {scale} m²)"),
            ));
        }
        for (i, u) in self.users.iter().enumerate() {
            if !u.x.is_finite() || !u.y.is_finite() || !region.contains(u) {
                return Err(Error::invalid(
                    format!("users[{i}]"),
                    format!("({}, {}) lies outside the region", u.x, u.y),
                ));
            }
        }
        let declared: i64 = self.subareas.iter().map(|s| s.demand().round() as i64).sum();
        if declared != self.users.len() as i64 {
            return Err(Error::invalid(
                "subareas[*].density",
                format!("densities imply {declared} users but {} are listed", self.users.len()),
            ));
        }
        Ok(())
    }
}

/// Writes a scenario as pretty JSON.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(scenario).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn uniform_in(rect: &Rect, rng: &mut impl Rng) -> Point {
    Point::new(
        rect.x + rng.random::<f64>() * rect.w,
        rect.y + rng.random::<f64>() * rect.h,
    )
}

/// Splits `n` into integer shares proportional to `weights` (largest remainder).
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut shares: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = n - shares.iter().sum::<usize>();
    for &k in order.iter().take(missing) {
        shares[k] += 1;
    }
    shares
}

fn subarea_with_users(id: u32, rect: Rect, count: usize) -> Subarea {
    Subarea {
        id,
        rect,
        density: count as f64 / rect.area(),
    }
}

/// Two equal-width halves with uniform users: `floor(f_left * n)` on the left,
/// the rest on the right.
pub fn generate_scenario_one(
    n_users: usize,
    region: Region,
    split_fractions: (f64, f64),
    seed: u64,
) -> Result<Scenario> {
    region.validate()?;
    let (f_left, f_right) = split_fractions;
    for (v, name) in [(f_left, "split.left"), (f_right, "split.right")] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(name, format!("fraction must lie in [0, 1], got {v}")));
        }
    }
    if (f_left + f_right - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("split", "fractions must sum to 1"));
    }
    if n_users == 0 {
        return Err(Error::invalid("users", "must be > 0"));
    }
    let half = 0.5 * region.width;
    let left = Rect::new(0.0, 0.0, half, region.height);
    let right = Rect::new(half, 0.0, region.width - half, region.height);
    let n_left = (f_left * n_users as f64 + 1e-9).floor() as usize;
    let n_right = n_users - n_left;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::with_capacity(n_users);
    users.extend((0..n_left).map(|_| uniform_in(&left, &mut rng)));
    users.extend((0..n_right).map(|_| uniform_in(&right, &mut rng)));

    let scenario = Scenario {
        region,
        subareas: vec![
            subarea_with_users(0, left, n_left),
            subarea_with_users(1, right, n_right),
        ],
        users,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// A central hot spot of normally distributed users plus uniform users elsewhere.
///
/// The central subarea is the `4 sigma` square around the region center,
/// clipped to the region; normal draws falling outside it are redrawn. The
/// remaining area is split into up to four rectangles whose user counts are
/// proportional to their areas.
pub fn generate_scenario_two(
    n_users: usize,
    region: Region,
    central_fraction: f64,
    sigma: f64,
    seed: u64,
) -> Result<Scenario> {
    region.validate()?;
    if !(0.0..=1.0).contains(&central_fraction) {
        return Err(Error::invalid("central_fraction", "must lie in [0, 1]"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", "must be > 0"));
    }
    if n_users == 0 {
        return Err(Error::invalid("users", "must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let whole = region.rect();

    if central_fraction == 0.0 {
        let users = (0..n_users).map(|_| uniform_in(&whole, &mut rng)).collect();
        let scenario = Scenario {
            region,
            subareas: vec![subarea_with_users(0, whole, n_users)],
            users,
            seed,
        };
        scenario.validate()?;
        return Ok(scenario);
    }

    let c = region.center();
    let x0 = (c.x - 2.0 * sigma).max(0.0);
    let x1 = (c.x + 2.0 * sigma).min(region.width);
    let y0 = (c.y - 2.0 * sigma).max(0.0);
    let y1 = (c.y + 2.0 * sigma).min(region.height);
    let central = Rect::new(x0, y0, x1 - x0, y1 - y0);
    let ring: Vec<Rect> = [
        Rect::new(0.0, 0.0, x0, region.height),
        Rect::new(x1, 0.0, region.width - x1, region.height),
        Rect::new(x0, 0.0, x1 - x0, y0),
        Rect::new(x0, y1, x1 - x0, region.height - y1),
    ]
    .into_iter()
    .filter(|r| r.w > 0.0 && r.h > 0.0)
    .collect();

    let mut n_central = (central_fraction * n_users as f64).round() as usize;
    if ring.is_empty() {
        n_central = n_users;
    }
    let n_outer = n_users - n_central;

    let normal = Normal::new(0.0, sigma).expect("sigma validated above");
    let mut users = Vec::with_capacity(n_users);
    while users.len() < n_central {
        let p = Point::new(c.x + normal.sample(&mut rng), c.y + normal.sample(&mut rng));
        if p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1 {
            users.push(p);
        }
    }

    let mut subareas = vec![subarea_with_users(0, central, n_central)];
    if !ring.is_empty() {
        let shares = apportion(n_outer, &ring.iter().map(Rect::area).collect::<Vec<_>>());
        for (i, (rect, &count)) in ring.iter().zip(&shares).enumerate() {
            users.extend((0..count).map(|_| uniform_in(rect, &mut rng)));
            subareas.push(subarea_with_users(i as u32 + 1, *rect, count));
        }
    }

    let scenario = Scenario {
        region,
        subareas,
        users,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_km() -> Region {
        Region::new(10_000.0, 10_000.0).unwrap()
    }

    fn assert_users_in_own_subarea(s: &Scenario) {
        let counts = s.users_per_subarea();
        assert_eq!(counts.iter().sum::<usize>(), s.n_users());
        for (k, sub) in s.subareas.iter().enumerate() {
            assert!((counts[k] as f64 - sub.demand()).abs() <= 1.0, "subarea {k}");
        }
    }

    #[test]
    fn scenario_one_split() {
        let s = generate_scenario_one(1000, ten_km(), (0.2, 0.8), 7).unwrap();
        assert_eq!(s.users_per_subarea(), vec![200, 800]);
        assert_users_in_own_subarea(&s);
        for u in &s.users[..200] {
            assert!(u.x < 5000.0);
        }
        for u in &s.users[200..] {
            assert!(u.x >= 5000.0);
        }
    }

    #[test]
    fn scenario_one_two_users() {
        let s = generate_scenario_one(2, ten_km(), (0.5, 0.5), 1).unwrap();
        assert_eq!(s.users_per_subarea(), vec![1, 1]);
    }

    #[test]
    fn scenario_one_rejects_bad_fractions() {
        assert!(generate_scenario_one(10, ten_km(), (1.2, -0.2), 1).is_err());
        assert!(generate_scenario_one(10, ten_km(), (0.3, 0.3), 1).is_err());
        assert!(generate_scenario_one(0, ten_km(), (0.5, 0.5), 1).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scenario_one(300, ten_km(), (0.2, 0.8), 99).unwrap();
        let b = generate_scenario_one(300, ten_km(), (0.2, 0.8), 99).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario_two(300, ten_km(), 0.4, 1000.0, 99).unwrap();
        let d = generate_scenario_two(300, ten_km(), 0.4, 1000.0, 99).unwrap();
        assert_eq!(c, d);
        assert_ne!(a, generate_scenario_one(300, ten_km(), (0.2, 0.8), 100).unwrap());
    }

    #[test]
    fn scenario_two_counts() {
        let s = generate_scenario_two(1000, ten_km(), 0.4, 1000.0, 3).unwrap();
        let counts = s.users_per_subarea();
        assert_eq!(counts[0], 400);
        assert_eq!(counts[1..].iter().sum::<usize>(), 600);
        assert_eq!(s.subareas[0].rect, Rect::new(3000.0, 3000.0, 4000.0, 4000.0));
        assert_users_in_own_subarea(&s);
    }

    #[test]
    fn scenario_two_without_hot_spot_is_uniform() {
        let s = generate_scenario_two(500, ten_km(), 0.0, 1000.0, 3).unwrap();
        assert_eq!(s.subareas.len(), 1);
        assert_eq!(s.subareas[0].rect, ten_km().rect());
    }

    #[test]
    fn wide_sigma_clips_to_region() {
        let s = generate_scenario_two(100, ten_km(), 0.5, 5000.0, 3).unwrap();
        assert_eq!(s.subareas.len(), 1);
        assert_eq!(s.n_users(), 100);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = generate_scenario_two(250, ten_km(), 0.4, 1000.0, 5).unwrap();
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn load_reports_user_outside_region() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut s = generate_scenario_one(10, ten_km(), (0.5, 0.5), 5).unwrap();
        s.users[3] = Point::new(-5.0, 20.0);
        save_scenario(&s, &path).unwrap();
        match load_scenario(&path) {
            Err(Error::Invalid { path, .. }) => assert_eq!(path, "users[3]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_catches_gaps_and_density_mismatch() {
        let mut s = generate_scenario_one(10, ten_km(), (0.5, 0.5), 5).unwrap();
        s.subareas[1].density *= 2.0;
        assert!(matches!(s.validate(), Err(Error::Invalid { .. })));
        let mut s = generate_scenario_one(10, ten_km(), (0.5, 0.5), 5).unwrap();
        s.subareas.pop();
        assert!(s.validate().is_err());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(600, &[3.0, 3.0, 1.2, 1.2]).iter().sum::<usize>(), 600);
    }
}
