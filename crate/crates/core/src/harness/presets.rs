//! Named experiments.
//!
//! Scenario presets are ready-made configs. Table presets run batches and
//! summarise them. Regions are cubes centred on the origin, which is also the
//! lattice seed; a "cell" below is a cube of side `2 r_s`. Absolute step counts
//! depend on where the region boundary falls relative to the lattice, so only
//! their ordering is meaningful.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::{
    FormationSection, FormationShape, LayoutKind, Mode, RegionConfig, ScenarioConfig, SearchConfig, ShapeConfig,
};
use super::{batch_run, Summary};
use crate::error::{Error, Result};
use crate::geometry::{covering_set, min_connectivity_ratio, volumetric_quotient, LatticeKind, LatticeSpec, Region, Vec3};
use crate::search::Strategy;

pub const SCENARIO_PRESETS: [&str; 6] =
    ["coverage", "shape-sphere", "search", "moving-targets", "formation-tetrahedron", "formation-anonymous"];

pub const TABLE_PRESETS: [&str; 4] = ["vq-table", "grid-comparison", "search-styles", "sensors-vs-time"];

/// Side of a region `cells` cells across, for `r_s = 1`.
pub fn cells(k: u32) -> RegionConfig {
    RegionConfig::cube(2.0 * k as f64)
}

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "coverage" => "random spread on a 4x4x4-cell cube, one agent per covering vertex",
        "shape-sphere" => "consensus grid then spread inside a sphere of radius 3.5 r_s",
        "search" => "4 agents, neighbour-grid search for 3 static targets in a 5x5x5-cell cube",
        "moving-targets" => "2 agents against 2 mobile targets in a 4x4x4-cell cube",
        "formation-tetrahedron" => "4 robots building a tetrahedron with fixed slots",
        "formation-anonymous" => "6 robots negotiating octahedron slots",
        "vq-table" => "volumetric quotient and connectivity ratio per lattice",
        "grid-comparison" => "covering-set sizes and coverage steps per lattice",
        "search-styles" => "median search steps per strategy, clustered targets",
        "sensors-vs-time" => "neighbour-grid search steps against team size",
        _ => return None,
    })
}

pub fn scenario(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "coverage" => {
            let mut c = ScenarioConfig::new(Mode::Coverage);
            c.region = Some(cells(4));
            c
        }
        "shape-sphere" => {
            let mut c = ScenarioConfig::new(Mode::Shape);
            c.region = Some(cells(5));
            c.agents.deployment = super::config::DeploymentKind::Consensus;
            c.shape = Some(ShapeConfig::Sphere { radius_m: 3.5 });
            c
        }
        "search" => search_config(cells(5), 4, SearchConfig::new(Strategy::NeighborGrid)),
        "moving-targets" => {
            let mut s = SearchConfig::new(Strategy::NeighborGrid);
            s.targets = 2;
            s.mobile_targets = true;
            search_config(cells(4), 2, s)
        }
        "formation-tetrahedron" => formation_config(FormationSection::new(FormationShape::Tetrahedron)),
        "formation-anonymous" => {
            let mut f = FormationSection::new(FormationShape::Octahedron);
            f.edge_m = 60.0;
            f.anonymous = true;
            // the solid's own edge graph can strand a vacancy opposite the robot next to it
            f.complete_graph = true;
            formation_config(f)
        }
        _ => return None,
    };
    Some(cfg)
}

fn search_config(region: RegionConfig, agents: usize, search: SearchConfig) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(Mode::Search);
    c.region = Some(region);
    c.agents.count = Some(agents);
    c.search = Some(search);
    c
}

fn formation_config(f: FormationSection) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(Mode::Formation);
    c.horizon_ticks = 20_000;
    c.output.log_every_ticks = 100;
    c.formation = Some(f);
    c
}

/// Plain rows for printing or CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: &str, header: &[&str]) -> Self {
        Table { title: title.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn render(&self) -> String {
        let mut w: Vec<usize> = self.header.iter().map(String::len).collect();
        for r in &self.rows {
            for (i, c) in r.iter().enumerate() {
                w[i] = w[i].max(c.len());
            }
        }
        let mut out = format!("{}\n", self.title);
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:>w$}", w = w[i])).collect();
            let _ = writeln!(out, "  {}", parts.join("  "));
        };
        line(&self.header, &mut out);
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VqRow {
    pub lattice: LatticeKind,
    pub faces: usize,
    pub volumetric_quotient: f64,
    pub min_rc_over_rs: f64,
}

pub fn vq_rows() -> Vec<VqRow> {
    LatticeKind::ALL
        .iter()
        .map(|&k| VqRow {
            lattice: k,
            faces: k.face_count(),
            volumetric_quotient: volumetric_quotient(k),
            min_rc_over_rs: min_connectivity_ratio(k),
        })
        .collect()
}

/// Covering-set size of a centred cube of side `side` with `r_s = 1`.
pub fn vertex_count(kind: LatticeKind, side: f64) -> Result<usize> {
    let spec = LatticeSpec::new(kind, Vec3::ZERO, 1.0)?;
    Ok(covering_set(&spec, &Region::cube(Vec3::ZERO, side)?)?.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub lattice: LatticeKind,
    /// Covering-set size on a 5x5x5-cell cube.
    pub vertices: usize,
    /// Covering-set size on the 4x4x4-cell coverage region.
    pub coverage_vertices: usize,
    pub completed: usize,
    pub steps: Summary,
}

pub fn grid_comparison(seeds: &[u64]) -> Result<Vec<GridRow>> {
    LatticeKind::ALL
        .iter()
        .map(|&k| {
            let mut cfg = scenario("coverage").expect("preset exists");
            cfg.grid.lattice = k;
            let b = batch_run(&cfg, seeds)?;
            Ok(GridRow {
                lattice: k,
                vertices: vertex_count(k, 10.0)?,
                coverage_vertices: b.runs[0].covering_vertices,
                completed: b.completed,
                steps: b.steps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StyleRow {
    pub strategy: Strategy,
    pub completed: usize,
    pub steps: Summary,
}

/// Base config of the strategy comparison: 6x6x6 cells, 4 agents, 3 clustered targets.
pub fn search_styles_config(strategy: Strategy) -> ScenarioConfig {
    let mut s = SearchConfig::new(strategy);
    s.layout = LayoutKind::Clustered;
    s.cluster_radius_m = 2.0;
    search_config(cells(6), 4, s)
}

pub fn search_styles(seeds: &[u64]) -> Result<Vec<StyleRow>> {
    [Strategy::LevyGrid, Strategy::GridNormalLength, Strategy::NeighborGrid, Strategy::LevyContinuous]
        .iter()
        .map(|&st| {
            let b = batch_run(&search_styles_config(st), seeds)?;
            Ok(StyleRow { strategy: st, completed: b.completed, steps: b.steps })
        })
        .collect()
}

pub const TEAM_SIZES: [usize; 5] = [1, 2, 4, 8, 14];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorRow {
    pub agents: usize,
    pub completed: usize,
    pub steps: Summary,
}

pub fn sensors_vs_time_config(agents: usize) -> ScenarioConfig {
    search_config(cells(5), agents, SearchConfig::new(Strategy::NeighborGrid))
}

pub fn sensors_vs_time(seeds: &[u64]) -> Result<Vec<SensorRow>> {
    TEAM_SIZES
        .iter()
        .map(|&n| {
            let b = batch_run(&sensors_vs_time_config(n), seeds)?;
            Ok(SensorRow { agents: n, completed: b.completed, steps: b.steps })
        })
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.1}")
}

/// Run a table preset over `seeds`.
pub fn table(name: &str, seeds: &[u64]) -> Result<Table> {
    match name {
        "vq-table" => {
            let mut t = Table::new("Space-filling cells", &["lattice", "faces", "volumetric_quotient", "min_rc_over_rs"]);
            for r in vq_rows() {
                t.rows.push(vec![
                    r.lattice.name().into(),
                    r.faces.to_string(),
                    format!("{:.4}", r.volumetric_quotient),
                    format!("{:.4}", r.min_rc_over_rs),
                ]);
            }
            Ok(t)
        }
        "grid-comparison" => {
            let mut t = Table::new(
                &format!("Covering grids ({} seeds)", seeds.len()),
                &["lattice", "vertices_10rs", "agents", "completed", "mean_steps", "median_steps", "iqr"],
            );
            for r in grid_comparison(seeds)? {
                t.rows.push(vec![
                    r.lattice.name().into(),
                    r.vertices.to_string(),
                    r.coverage_vertices.to_string(),
                    r.completed.to_string(),
                    fmt(r.steps.mean),
                    fmt(r.steps.median),
                    fmt(r.steps.iqr),
                ]);
            }
            Ok(t)
        }
        "search-styles" => {
            let mut t = Table::new(
                &format!("Search styles, 3 clustered targets ({} seeds)", seeds.len()),
                &["strategy", "completed", "median_steps", "mean_steps", "iqr"],
            );
            for r in search_styles(seeds)? {
                t.rows.push(vec![
                    r.strategy.name().into(),
                    r.completed.to_string(),
                    fmt(r.steps.median),
                    fmt(r.steps.mean),
                    fmt(r.steps.iqr),
                ]);
            }
            Ok(t)
        }
        "sensors-vs-time" => {
            let mut t = Table::new(
                &format!("Search time against team size ({} seeds)", seeds.len()),
                &["agents", "completed", "mean_steps", "median_steps", "iqr"],
            );
            for r in sensors_vs_time(seeds)? {
                t.rows.push(vec![
                    r.agents.to_string(),
                    r.completed.to_string(),
                    fmt(r.steps.mean),
                    fmt(r.steps.median),
                    fmt(r.steps.iqr),
                ]);
            }
            Ok(t)
        }
        other => Err(Error::config("preset", format!("unknown table preset `{other}`"))),
    }
}
