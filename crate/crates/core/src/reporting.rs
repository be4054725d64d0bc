//! Result tables, Voronoi view and the run directory layout.
//!
//! `export_run` writes:
//!
//! | file              | contents                                         |
//! |-------------------|--------------------------------------------------|
//! | `placements.csv`  | `id,x,y,h,active`                                |
//! | `users.csv`       | `id,x,y,subarea,serving,sinr_db,covered`         |
//! | `sinr_cdf.csv`    | `sinr_db,fraction`                               |
//! | `convergence.csv` | `iteration,stage,utility`                        |
//! | `summary.json`    | run summary and constraint report                |
//! | `map.svg`         | users, Voronoi cells and drones with altitudes   |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::capacity::{ConstraintReport, Problem};
use crate::channel;
use crate::error::{Error, Result};
use crate::geom::{clip_half_plane, clip_to_rect, polygon_area, Point};
use crate::placement::{Drone, Placement};
use crate::pso::{ConvergenceTrace, Stage, TraceRow};
use crate::scenario::{Region, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub sinr_db: f64,
    pub fraction: f64,
}

/// Best-server `(drone, SINR dB)` of every user, in user order.
pub fn user_links(problem: &Problem, placement: &Placement) -> Result<Vec<(usize, f64)>> {
    problem
        .scenario
        .users
        .iter()
        .map(|u| channel::best_server(u, placement, &problem.channel, &problem.radio))
        .collect()
}

/// Empirical CDF of best-server SINR over all users.
pub fn sinr_cdf(problem: &Problem, placement: &Placement) -> Result<Vec<CdfPoint>> {
    let mut sinr: Vec<f64> = user_links(problem, placement)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    Ok(cdf_of(&mut sinr))
}

fn cdf_of(values: &mut [f64]) -> Vec<CdfPoint> {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &s)| CdfPoint {
            sinr_db: s,
            fraction: (i + 1) as f64 / n,
        })
        .collect()
}

/// Voronoi cell of one distinct ground site, clipped to the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub site: Point,
    /// Active drones sharing this ground site.
    pub drones: Vec<usize>,
    /// Counter-clockwise vertices.
    pub polygon: Vec<Point>,
}

impl VoronoiCell {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }
}

/// Voronoi tessellation of the active drones' ground projections.
///
/// Each cell is the region rectangle cut by the perpendicular bisector
/// toward every other site. Drones with identical ground points share a cell.
pub fn voronoi_cells(placement: &Placement, region: &Region) -> Result<Vec<VoronoiCell>> {
    let mut sites: Vec<(Point, Vec<usize>)> = Vec::new();
    for (j, d) in placement.active() {
        let g = d.ground();
        match sites.iter_mut().find(|(s, _)| *s == g) {
            Some((_, members)) => members.push(j),
            None => sites.push((g, vec![j])),
        }
    }
    if sites.is_empty() {
        return Err(Error::NoServer);
    }
    let bounds = region.rect().corners();
    Ok(sites
        .iter()
        .enumerate()
        .map(|(i, (site, drones))| {
            let mut poly = bounds.to_vec();
            for (k, (other, _)) in sites.iter().enumerate() {
                if k == i || poly.is_empty() {
                    continue;
                }
                let (nx, ny) = (other.x - site.x, other.y - site.y);
                let c = nx * 0.5 * (site.x + other.x) + ny * 0.5 * (site.y + other.y);
                poly = clip_half_plane(&poly, nx, ny, c);
            }
            VoronoiCell {
                site: *site,
                drones: drones.clone(),
                polygon: poly,
            }
        })
        .collect())
}

/// Mean altitude of the drones attributed to one subarea.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubareaAltitude {
    pub subarea_id: u32,
    pub density: f64,
    pub drone_count: usize,
    pub mean_altitude: Option<f64>,
}

/// Groups active drones by the subarea holding the largest share of their
/// Voronoi cell and averages their altitudes.
pub fn altitude_by_subarea(
    placement: &Placement,
    scenario: &Scenario,
    cells: &[VoronoiCell],
) -> Vec<SubareaAltitude> {
    let mut sums = vec![(0usize, 0.0f64); scenario.subareas.len()];
    for cell in cells {
        let home = scenario
            .subareas
            .iter()
            .map(|s| polygon_area(&clip_to_rect(&cell.polygon, &s.rect)))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, ba), (i, a)| if a > ba { (i, a) } else { (bi, ba) })
            .0;
        for &j in &cell.drones {
            sums[home].0 += 1;
            sums[home].1 += placement.drones[j].h;
        }
    }
    scenario
        .subareas
        .iter()
        .zip(sums)
        .map(|(s, (count, total))| SubareaAltitude {
            subarea_id: s.id,
            density: s.density,
            drone_count: count,
            mean_altitude: (count > 0).then(|| total / count as f64),
        })
        .collect()
}

/// Everything `summary.json` records about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub n_users: usize,
    pub users_per_bs: usize,
    pub initial_fleet: usize,
    pub final_fleet: usize,
    pub removed: Vec<usize>,
    pub feasible: bool,
    pub iterations: usize,
    pub final_stage: Stage,
    pub final_utility: f64,
    pub coverage_percent: f64,
    pub harmonic_se: f64,
    pub constraints: ConstraintReport,
    pub altitude_by_subarea: Vec<SubareaAltitude>,
}

/// Borrowed view of one finished run, as consumed by [`export_run`].
pub struct RunArtifacts<'a> {
    pub problem: &'a Problem,
    pub placement: &'a Placement,
    pub trace: &'a ConvergenceTrace,
    pub summary: &'a RunSummary,
    pub cdf: &'a [CdfPoint],
    pub cells: &'a [VoronoiCell],
}

/// Paths written by [`export_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedFiles {
    pub placements: PathBuf,
    pub users: PathBuf,
    pub sinr_cdf: PathBuf,
    pub convergence: PathBuf,
    pub summary: PathBuf,
    pub map: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlacementRow {
    id: usize,
    x: f64,
    y: f64,
    h: f64,
    active: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct UserRow {
    id: usize,
    x: f64,
    y: f64,
    subarea: Option<u32>,
    serving: usize,
    sinr_db: f64,
    covered: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Writes the full artifact set into `dir`, creating it if needed.
pub fn export_run(dir: &Path, run: &RunArtifacts<'_>) -> Result<ExportedFiles> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = ExportedFiles {
        placements: dir.join("placements.csv"),
        users: dir.join("users.csv"),
        sinr_cdf: dir.join("sinr_cdf.csv"),
        convergence: dir.join("convergence.csv"),
        summary: dir.join("summary.json"),
        map: dir.join("map.svg"),
    };

    write_csv(
        &files.placements,
        run.placement.drones.iter().enumerate().map(|(id, d)| PlacementRow {
            id,
            x: d.x,
            y: d.y,
            h: d.h,
            active: d.active,
        }),
    )?;

    let scenario = &run.problem.scenario;
    let links = user_links(run.problem, run.placement)?;
    let threshold = run.problem.radio.sinr_threshold_db;
    write_csv(
        &files.users,
        scenario.users.iter().zip(&links).enumerate().map(|(id, (u, &(serving, sinr)))| UserRow {
            id,
            x: u.x,
            y: u.y,
            subarea: scenario.subarea_index(u).map(|k| scenario.subareas[k].id),
            serving,
            sinr_db: sinr,
            covered: sinr >= threshold,
        }),
    )?;

    write_csv(&files.sinr_cdf, run.cdf.iter())?;
    write_csv(&files.convergence, run.trace.rows.iter())?;

    let json = serde_json::to_string_pretty(run.summary).map_err(|source| Error::Json {
        path: files.summary.clone(),
        source,
    })?;
    fs::write(&files.summary, json).map_err(io_err(&files.summary))?;

    fs::write(&files.map, render_map_svg(scenario, run.placement, run.cells)).map_err(io_err(&files.map))?;
    Ok(files)
}

pub fn read_placements(path: &Path) -> Result<Placement> {
    let rows: Vec<PlacementRow> = read_csv(path)?;
    Ok(Placement::new(
        rows.into_iter()
            .map(|r| Drone {
                x: r.x,
                y: r.y,
                h: r.h,
                active: r.active,
            })
            .collect(),
    ))
}

pub fn read_sinr_cdf(path: &Path) -> Result<Vec<CdfPoint>> {
    read_csv(path)
}

pub fn read_convergence(path: &Path) -> Result<ConvergenceTrace> {
    Ok(ConvergenceTrace {
        rows: read_csv::<TraceRow>(path)?,
    })
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

const MAP_PX: f64 = 800.0;

/// Static map: subareas, users, Voronoi edges and drones labeled with altitude.
pub fn render_map_svg(scenario: &Scenario, placement: &Placement, cells: &[VoronoiCell]) -> String {
    let region = &scenario.region;
    let scale = MAP_PX / region.width.max(region.height);
    let (w, h) = (region.width * scale, region.height * scale);
    let sx = |x: f64| x * scale;
    let sy = |y: f64| h - y * scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(
        svg,
        "<style>.subarea{{fill:#f4f4f4;stroke:#999;stroke-dasharray:4 3}}.voronoi{{fill:none;stroke:#444;stroke-width:1}}\
         .user{{fill:#1f5fd6}}.drone{{stroke:#000;stroke-width:0.8}}.altitude{{font:10px sans-serif}}</style>"
    );
    let max_density = scenario.subareas.iter().map(|s| s.density).fold(0.0, f64::max);
    let _ = writeln!(svg, r#"<g id="subareas">"#);
    for s in &scenario.subareas {
        let r = &s.rect;
        let _ = writeln!(
            svg,
            r#"<rect class="subarea" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
            sx(r.x),
            sy(r.y_max()),
            r.w * scale,
            r.h * scale
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="voronoi">"#);
    for cell in cells {
        let pts: Vec<String> = cell
            .polygon
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y)))
            .collect();
        let _ = writeln!(svg, r#"<polygon class="voronoi" points="{}"/>"#, pts.join(" "));
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="users">"#);
    for u in &scenario.users {
        let _ = writeln!(svg, r#"<circle class="user" cx="{:.2}" cy="{:.2}" r="1.5"/>"#, sx(u.x), sy(u.y));
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="drones">"#);
    for (j, d) in placement.active() {
        // denser home subarea drawn red, sparser green
        let dense = scenario
            .subarea_index(&d.ground())
            .is_some_and(|k| scenario.subareas[k].density >= max_density);
        let fill = if dense { "#d62728" } else { "#2ca02c" };
        let (cx, cy) = (sx(d.x), sy(d.y));
        let _ = writeln!(
            svg,
            r#"<rect class="drone" data-id="{j}" x="{:.2}" y="{:.2}" width="8" height="8" fill="{fill}"/>"#,
            cx - 4.0,
            cy - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text class="altitude" x="{:.2}" y="{:.2}">{:.0} m</text>"#,
            cx + 6.0,
            cy - 6.0,
            d.h
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::FootprintModel;
    use crate::channel::{ChannelParams, RadioConfig};
    use crate::scenario::{generate_scenario_one, Subarea};
    use proptest::prelude::*;

    fn region() -> Region {
        Region::new(1000.0, 600.0).unwrap()
    }

    #[test]
    fn one_site_owns_region() {
        let cells = voronoi_cells(&Placement::from_flat(&[100.0, 100.0, 50.0]), &region()).unwrap();
        assert_eq!(cells.len(), 1);
        assert!((cells[0].area() - 600_000.0).abs() < 1e-6);
    }

    #[test]
    fn two_sites_split_at_bisector() {
        let cells = voronoi_cells(&Placement::from_flat(&[200.0, 300.0, 50.0, 600.0, 300.0, 80.0]), &region()).unwrap();
        // bisector at x = 400
        assert!((cells[0].area() - 400.0 * 600.0).abs() < 1e-6);
        assert!((cells[1].area() - 600.0 * 600.0).abs() < 1e-6);
    }

    #[test]
    fn square_sites_give_congruent_quadrants() {
        let r = Region::new(1000.0, 1000.0).unwrap();
        let p = Placement::from_flat(&[250.0, 250.0, 10.0, 750.0, 250.0, 10.0, 250.0, 750.0, 10.0, 750.0, 750.0, 10.0]);
        let cells = voronoi_cells(&p, &r).unwrap();
        for c in &cells {
            assert!((c.area() - 250_000.0).abs() < 1e-6);
        }
    }

    #[test]
    fn duplicate_sites_merge() {
        let p = Placement::from_flat(&[100.0, 100.0, 50.0, 100.0, 100.0, 300.0, 900.0, 100.0, 40.0]);
        let cells = voronoi_cells(&p, &region()).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].drones, vec![0, 1]);
        assert!(voronoi_cells(&p.without(0).without(1).without(2), &region()).is_err());
    }

    fn problem(n: usize) -> Problem {
        let s = generate_scenario_one(n, Region::new(3000.0, 3000.0).unwrap(), (0.5, 0.5), 8).unwrap();
        Problem::new(s, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap()
    }

    #[test]
    fn cdf_single_user() {
        let region = Region::new(500.0, 500.0).unwrap();
        let s = Scenario {
            region,
            subareas: vec![Subarea { id: 0, rect: region.rect(), density: 1.0 / region.area() }],
            users: vec![Point::new(10.0, 10.0)],
            seed: 0,
        };
        let p = Problem::new(s, ChannelParams::urban(), RadioConfig::default(), FootprintModel::default()).unwrap();
        let cdf = sinr_cdf(&p, &Placement::from_flat(&[250.0, 250.0, 100.0])).unwrap();
        assert_eq!(cdf.len(), 1);
        assert_eq!(cdf[0].fraction, 1.0);
    }

    #[test]
    fn cdf_of_coincident_users_is_one_step() {
        let mut p = problem(10);
        let spot = p.scenario.users[0];
        for u in p.scenario.users.iter_mut() {
            *u = spot;
        }
        let cdf = sinr_cdf(&p, &Placement::from_flat(&[1000.0, 1000.0, 100.0, 2500.0, 400.0, 200.0])).unwrap();
        assert!(cdf.windows(2).all(|w| w[0].sinr_db == w[1].sinr_db));
        assert_eq!(cdf.last().unwrap().fraction, 1.0);
    }

    #[test]
    fn cdf_matches_sort_and_count() {
        let p = problem(30);
        let placement = Placement::from_flat(&[500.0, 500.0, 100.0, 2000.0, 1500.0, 300.0, 1200.0, 2600.0, 60.0]);
        let cdf = sinr_cdf(&p, &placement).unwrap();
        let sinrs: Vec<f64> = p
            .scenario
            .users
            .iter()
            .map(|u| (0..3).map(|j| channel::sinr_db(u, j, &placement, &p.channel, &p.radio).unwrap()).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        assert_eq!(cdf.len(), 30);
        for pt in &cdf {
            // fraction = share of users with SINR <= this point
            let at_or_below = sinrs.iter().filter(|&&s| s <= pt.sinr_db).count();
            assert!(pt.fraction <= at_or_below as f64 / 30.0 + 1e-12);
        }
        let report = p.evaluate_constraints(&placement).unwrap();
        let below = cdf.iter().filter(|c| c.sinr_db < p.radio.sinr_threshold_db).count() as f64 / 30.0;
        assert!((below - (1.0 - report.covered_count as f64 / 30.0)).abs() < 1e-12);
        assert!(cdf.windows(2).all(|w| w[0].fraction < w[1].fraction));
        assert!((cdf[0].fraction - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn altitude_groups_follow_cells() {
        let p = problem(20);
        let placement = Placement::from_flat(&[700.0, 1500.0, 500.0, 2300.0, 1000.0, 100.0, 2300.0, 2000.0, 200.0]);
        let cells = voronoi_cells(&placement, &p.scenario.region).unwrap();
        let alt = altitude_by_subarea(&placement, &p.scenario, &cells);
        assert_eq!(alt[0].drone_count, 1);
        assert_eq!(alt[0].mean_altitude, Some(500.0));
        assert_eq!(alt[1].drone_count, 2);
        assert_eq!(alt[1].mean_altitude, Some(150.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn cells_tile_region(sites in proptest::collection::vec((0.0f64..1000.0, 0.0f64..600.0), 1..12)) {
            let flat: Vec<f64> = sites.iter().flat_map(|&(x, y)| [x, y, 100.0]).collect();
            let cells = voronoi_cells(&Placement::from_flat(&flat), &region()).unwrap();
            let total: f64 = cells.iter().map(VoronoiCell::area).sum();
            prop_assert!((total - 600_000.0).abs() <= 1e-6 * 600_000.0);
        }
    }
}
