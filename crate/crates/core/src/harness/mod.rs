//! Scenario execution, batches, metrics and file output.

pub mod config;
pub mod presets;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Mode, ScenarioConfig};

use crate::coverage::{deploy, run_shape_formation, run_spread, CoverageRun, ShapeFrame, ShapeScenario};
use crate::error::{Error, Result};
use crate::formation::{run_formation, ConstraintLog, TRAJECTORY_COLUMNS};
use crate::geometry::{covering_set, shape_contains, LatticeSpec};
use crate::search::{run_search, SearchResult, StopReason};
use crate::trace::TrajectoryLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopKind {
    /// Every covering vertex is occupied.
    Complete,
    AllVisited,
    AllTargetsFound,
    /// The tick budget ran out. Formation runs always end this way.
    Horizon,
}

impl StopKind {
    pub fn name(self) -> &'static str {
        match self {
            StopKind::Complete => "complete",
            StopKind::AllVisited => "all-visited",
            StopKind::AllTargetsFound => "all-targets-found",
            StopKind::Horizon => "horizon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationMetrics {
    pub peak_ey: f64,
    pub peak_ez: f64,
    pub final_ey: f64,
    pub final_ez: f64,
    /// Max pairwise errors, sampled every `log_every_ticks`.
    pub ey_series: Vec<f64>,
    pub ez_series: Vec<f64>,
    pub constraints: ConstraintLog,
    pub constraints_satisfied: bool,
    pub final_assignment: Vec<usize>,
    pub absorbed_epoch: Option<usize>,
    pub changed_after_absorption: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mode: Mode,
    pub seed: u64,
    pub steps_to_stop: u64,
    pub stop_reason: StopKind,
    pub agents: usize,
    pub covering_vertices: usize,
    /// Ticks spent agreeing on the grid before the task started.
    pub consensus_ticks: Option<u64>,
    pub visited_vertices: Option<usize>,
    /// First detection tick of each target.
    pub detection_ticks: Vec<Option<u64>>,
    /// Occupied fraction of the covering set after each tick.
    pub coverage_series: Vec<f64>,
    pub formation: Option<FormationMetrics>,
}

impl Metrics {
    pub fn stopped(&self) -> bool {
        self.stop_reason != StopKind::Horizon
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trajectory: TrajectoryLog,
    pub warnings: Vec<String>,
}

fn thin(log: &mut TrajectoryLog, every: u64) {
    if every > 1 {
        log.rows.retain(|r| r.tick % every == 0);
    }
}

fn sample<T: Copy>(series: &[T], every: u64) -> Vec<T> {
    series.iter().step_by(every.max(1) as usize).copied().collect()
}

/// Run one scenario. Identical configs give identical output.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let warnings = cfg.validate()?;
    let every = cfg.output.log_every_ticks;
    let (metrics, trajectory) = match cfg.mode {
        Mode::Coverage => run_coverage(cfg)?,
        Mode::Shape => run_shape(cfg)?,
        Mode::Search => {
            let sc = cfg.search_scenario()?;
            let mut log = TrajectoryLog::new(&[]);
            let res = run_search(&sc, Some(&mut log))?;
            (search_metrics(cfg, &res), log)
        }
        Mode::Formation => {
            let sc = cfg.formation_scenario()?;
            let mut log = TrajectoryLog::new(&TRAJECTORY_COLUMNS);
            let res = run_formation(&sc, Some(&mut log))?;
            let fm = FormationMetrics {
                peak_ey: res.peak_ey(),
                peak_ez: res.peak_ez(),
                final_ey: res.final_ey(),
                final_ez: res.final_ez(),
                ey_series: sample(&res.ey_series, every),
                ez_series: sample(&res.ez_series, every),
                constraints: res.constraints,
                constraints_satisfied: res.constraints.satisfied(&sc.config),
                final_assignment: res.final_assignment().to_vec(),
                absorbed_epoch: res.absorbed_epoch,
                changed_after_absorption: res.changed_after_absorption,
            };
            let m = Metrics {
                mode: cfg.mode,
                seed: cfg.seed,
                steps_to_stop: res.ticks,
                stop_reason: StopKind::Horizon,
                agents: sc.config.len(),
                covering_vertices: 0,
                consensus_ticks: None,
                visited_vertices: None,
                detection_ticks: Vec::new(),
                coverage_series: Vec::new(),
                formation: Some(fm),
            };
            // formation logging already honours log_every
            return Ok(RunOutput { metrics: m, trajectory: log, warnings });
        }
    };
    let mut trajectory = trajectory;
    thin(&mut trajectory, every);
    Ok(RunOutput { metrics, trajectory, warnings })
}

fn search_metrics(cfg: &ScenarioConfig, res: &SearchResult) -> Metrics {
    let mut detection_ticks = vec![None; res.targets.len()];
    for d in &res.detections {
        detection_ticks[d.target].get_or_insert(d.tick);
    }
    Metrics {
        mode: cfg.mode,
        seed: cfg.seed,
        steps_to_stop: res.steps,
        stop_reason: match res.stop_reason {
            StopReason::AllVisited => StopKind::AllVisited,
            StopReason::AllTargetsFound => StopKind::AllTargetsFound,
            StopReason::Horizon => StopKind::Horizon,
        },
        agents: cfg.agents.count.unwrap_or(0),
        covering_vertices: res.covering_vertices,
        consensus_ticks: None,
        visited_vertices: Some(res.visited_vertices),
        detection_ticks,
        coverage_series: Vec::new(),
        formation: None,
    }
}

fn seed_grid_len(cfg: &ScenarioConfig, keep: impl Fn(crate::geometry::Vec3) -> bool) -> Result<usize> {
    let spec = LatticeSpec::new(cfg.grid.lattice, cfg.seed_point()?, cfg.grid.r_s_m)?;
    Ok(covering_set(&spec, &cfg.region()?)?.filtered(keep).len())
}

fn run_coverage(cfg: &ScenarioConfig) -> Result<(Metrics, TrajectoryLog)> {
    let region = cfg.region()?;
    let n = match cfg.agents.count {
        Some(n) => n,
        None => seed_grid_len(cfg, |_| true)?,
    };
    let mut log = TrajectoryLog::new(&[]);
    let dep = deploy(cfg.grid.lattice, cfg.grid.r_s_m, &region, cfg.seed_point()?, n, cfg.deployment(), cfg.seed, Some(&mut log))?;
    let grid = Arc::clone(&dep.grid);
    let mut run = CoverageRun::new(grid.clone(), dep.agents.clone(), cfg.seed, cfg.knowledge())?
        .with_conflict_rule(cfg.agents.conflict);
    let out = run_spread(&mut run, cfg.horizon_ticks, Some(&mut log), dep.next_tick);
    let m = Metrics {
        mode: cfg.mode,
        seed: cfg.seed,
        steps_to_stop: out.steps,
        stop_reason: if out.complete { StopKind::Complete } else { StopKind::Horizon },
        agents: n,
        covering_vertices: grid.len(),
        consensus_ticks: Some(dep.consensus_ticks),
        visited_vertices: None,
        detection_ticks: Vec::new(),
        coverage_series: sample(&out.coverage_series, cfg.output.log_every_ticks),
        formation: None,
    };
    Ok((m, log))
}

fn run_shape(cfg: &ScenarioConfig) -> Result<(Metrics, TrajectoryLog)> {
    let shape = cfg.shape.ok_or_else(|| Error::config("shape", "required in shape mode"))?.predicate();
    let seed_point = cfg.seed_point()?;
    let n = match cfg.agents.count {
        Some(n) => n,
        None => {
            let frame = ShapeFrame::axis_aligned(seed_point);
            seed_grid_len(cfg, |v| shape_contains(&shape, frame.to_local(v)))?
        }
    };
    let sc = ShapeScenario {
        kind: cfg.grid.lattice,
        r_s: cfg.grid.r_s_m,
        region: cfg.region()?,
        seed_point,
        shape,
        n_agents: n,
        deployment: cfg.deployment(),
        knowledge: cfg.knowledge(),
        conflict: cfg.agents.conflict,
        seed: cfg.seed,
        horizon: cfg.horizon_ticks,
    };
    let mut log = TrajectoryLog::new(&[]);
    let out = run_shape_formation(&sc, Some(&mut log))?;
    let m = Metrics {
        mode: cfg.mode,
        seed: cfg.seed,
        steps_to_stop: out.spread.steps,
        stop_reason: if out.spread.complete { StopKind::Complete } else { StopKind::Horizon },
        agents: n,
        covering_vertices: out.in_shape_vertices,
        consensus_ticks: Some(out.consensus_ticks),
        visited_vertices: None,
        detection_ticks: Vec::new(),
        coverage_series: sample(&out.spread.coverage_series, cfg.output.log_every_ticks),
        formation: None,
    };
    Ok((m, log))
}

/// Order statistics of a sample. Quartiles interpolate linearly between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("summary sample"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&s, 0.25), quantile(&s, 0.75));
    Ok(Summary {
        count: s.len(),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        median: quantile(&s, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
        min: s[0],
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub runs: Vec<Metrics>,
    /// Runs that met their stop rule before the horizon.
    pub completed: usize,
    /// Over all runs; a run cut off by the horizon counts its horizon.
    pub steps: Summary,
}

/// Run `cfg` once per seed, trials in parallel. Results keep the order of `seeds`.
pub fn batch_run(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<BatchReport> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            batch_trial(&cfg.with_seed(seed)).map_err(|e| Error::Trial { seed, source: Box::new(e) })
        })
        .collect::<Result<Vec<Metrics>>>()?;
    let steps: Vec<f64> = runs.iter().map(|m| m.steps_to_stop as f64).collect();
    Ok(BatchReport { completed: runs.iter().filter(|m| m.stopped()).count(), steps: summarize(&steps)?, runs })
}

/// Batch trials skip trajectory logging where the module allows it.
fn batch_trial(cfg: &ScenarioConfig) -> Result<Metrics> {
    if cfg.mode == Mode::Search {
        cfg.validate()?;
        let sc = cfg.search_scenario()?;
        return Ok(search_metrics(cfg, &run_search(&sc, None)?));
    }
    Ok(run_scenario(cfg)?.metrics)
}

/// Parse `a..b` (exclusive) or `a..=b`.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("seed range `{s}` is not of the form a..b or a..=b"));
    let (a, rest) = s.split_once("..").ok_or_else(bad)?;
    let (inclusive, b) = match rest.strip_prefix('=') {
        Some(b) => (true, b),
        None => (false, rest),
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    let seeds: Vec<u64> = if inclusive { (a..=b).collect() } else { (a..b).collect() };
    if seeds.is_empty() {
        return Err(Error::Empty("seed range"));
    }
    Ok(seeds)
}

pub fn export_trajectories(log: &TrajectoryLog, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    log.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Metadata<'a> {
    crate_version: &'static str,
    seed: u64,
    config: &'a ScenarioConfig,
    warnings: &'a [String],
    trajectory_file: &'static str,
    trajectory_columns: String,
    trajectory_rows: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Write `trajectory.csv`, `metrics.json` and `metadata.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    export_trajectories(&out.trajectory, &dir.join("trajectory.csv"))?;
    write_json(&dir.join("metrics.json"), &out.metrics)?;
    let meta = Metadata {
        crate_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        warnings: &out.warnings,
        trajectory_file: "trajectory.csv",
        trajectory_columns: out.trajectory.header(),
        trajectory_rows: out.trajectory.rows.len(),
    };
    write_json(&dir.join("metadata.json"), &meta)
}

pub fn write_batch_report(path: &Path, report: &BatchReport) -> Result<()> {
    write_json(path, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::RegionConfig;

    #[test]
    fn quartiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3, s.iqr), (2.0, 3.0, 4.0, 2.0));
        assert_eq!(s.mean, 3.0);
        let one = summarize(&[7.0]).unwrap();
        assert_eq!((one.median, one.mean, one.iqr), (7.0, 7.0, 0.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("3..6").unwrap(), vec![3, 4, 5]);
        assert_eq!(parse_seed_range("3..=4").unwrap(), vec![3, 4]);
        assert!(parse_seed_range("5..5").is_err());
        assert!(parse_seed_range("x").is_err());
    }

    #[test]
    fn zero_horizon_stops_at_once() {
        let mut cfg = ScenarioConfig::new(Mode::Coverage);
        cfg.region = Some(RegionConfig::cube(6.0));
        cfg.horizon_ticks = 0;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.metrics.steps_to_stop, 0);
        assert_eq!(out.metrics.stop_reason, StopKind::Horizon);
    }

    #[test]
    fn trial_errors_carry_seed() {
        let mut cfg = ScenarioConfig::new(Mode::Coverage);
        cfg.region = Some(RegionConfig::cube(6.0));
        cfg.agents.count = Some(0);
        match batch_run(&cfg, &[9]) {
            Err(Error::Trial { seed, .. }) => assert_eq!(seed, 9),
            other => panic!("{other:?}"),
        }
    }
}
