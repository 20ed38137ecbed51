//! Scenario files.
//!
//! A scenario is one TOML document. Lengths carry an `_m` suffix, speeds
//! `_m_per_s`, turn rates `_per_s`, times `_s` and tick counts `_ticks`.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::coverage::{ConflictRule, Deployment, OccupancyKnowledge};
use crate::error::{Error, Result};
use crate::formation::{octahedron, tetrahedron, FormationConfig, FormationScenario};
use crate::geometry::{min_connectivity_ratio, LatticeKind, Region, ShapePredicate, Vec3};
use crate::search::{LevyParams, SearchScenario, StopRule, Strategy, TargetLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Coverage,
    Shape,
    Search,
    Formation,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Coverage => "coverage",
            Mode::Shape => "shape",
            Mode::Search => "search",
            Mode::Formation => "formation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub min_corner_m: [f64; 3],
    pub max_corner_m: [f64; 3],
}

impl RegionConfig {
    pub fn cube(side: f64) -> Self {
        let h = side / 2.0;
        RegionConfig { min_corner_m: [-h; 3], max_corner_m: [h; 3] }
    }

    pub fn region(&self) -> Result<Region> {
        Region::new(self.min_corner_m.into(), self.max_corner_m.into())
            .map_err(|e| Error::config("region", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_lattice")]
    pub lattice: LatticeKind,
    #[serde(default = "one")]
    pub r_s_m: f64,
    /// Communication range; four sensing radii when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_c_m: Option<f64>,
    /// Lattice seed; the region centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_point_m: Option<[f64; 3]>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { lattice: default_lattice(), r_s_m: 1.0, r_c_m: None, seed_point_m: None }
    }
}

impl GridConfig {
    pub fn r_c(&self) -> f64 {
        self.r_c_m.unwrap_or(4.0 * self.r_s_m)
    }
}

fn default_lattice() -> LatticeKind {
    LatticeKind::TruncatedOctahedron
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentKind {
    #[default]
    RandomVertices,
    Consensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OccupancyKind {
    #[default]
    Oracle,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    /// One agent per (in-shape) covering vertex when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub deployment: DeploymentKind,
    #[serde(default = "default_consensus_ticks")]
    pub consensus_max_ticks: u64,
    #[serde(default)]
    pub occupancy: OccupancyKind,
    #[serde(default)]
    pub conflict: ConflictRule,
}

impl Default for AgentsConfig {
    fn default() -> Self {
        AgentsConfig {
            count: None,
            deployment: DeploymentKind::default(),
            consensus_max_ticks: default_consensus_ticks(),
            occupancy: OccupancyKind::default(),
            conflict: ConflictRule::default(),
        }
    }
}

fn default_consensus_ticks() -> u64 {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutKind {
    #[default]
    Uniform,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub strategy: Strategy,
    #[serde(default = "default_stop")]
    pub stop: StopRule,
    #[serde(default = "default_targets")]
    pub targets: usize,
    #[serde(default)]
    pub layout: LayoutKind,
    #[serde(default = "two")]
    pub cluster_radius_m: f64,
    #[serde(default)]
    pub mobile_targets: bool,
    #[serde(default = "one")]
    pub target_step_m: f64,
    #[serde(default = "two")]
    pub levy_alpha: f64,
    /// Shortest flight; the longest neighbour spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy_l_min_m: Option<f64>,
    /// Spread of the normal flight length; the longest neighbour spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_sigma_m: Option<f64>,
}

impl SearchConfig {
    pub fn new(strategy: Strategy) -> Self {
        SearchConfig {
            strategy,
            stop: default_stop(),
            targets: default_targets(),
            layout: LayoutKind::Uniform,
            cluster_radius_m: 2.0,
            mobile_targets: false,
            target_step_m: 1.0,
            levy_alpha: 2.0,
            levy_l_min_m: None,
            normal_sigma_m: None,
        }
    }
}

fn default_stop() -> StopRule {
    StopRule::AllTargetsFound
}

fn default_targets() -> usize {
    3
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeConfig {
    Sphere { radius_m: f64 },
    Cuboid { min_corner_m: [f64; 3], max_corner_m: [f64; 3] },
    Torus { tube_radius_m: f64, ring_radius_m: f64 },
    Ellipsoid { semi_axes_m: [f64; 3] },
}

impl ShapeConfig {
    pub fn predicate(&self) -> ShapePredicate {
        match *self {
            ShapeConfig::Sphere { radius_m } => ShapePredicate::Sphere { r: radius_m },
            ShapeConfig::Cuboid { min_corner_m, max_corner_m } => {
                ShapePredicate::Cuboid { min: min_corner_m.into(), max: max_corner_m.into() }
            }
            ShapeConfig::Torus { tube_radius_m, ring_radius_m } => {
                ShapePredicate::Torus { a: tube_radius_m, c: ring_radius_m }
            }
            ShapeConfig::Ellipsoid { semi_axes_m: [a, b, c] } => ShapePredicate::Ellipsoid { a, b, c },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormationShape {
    Tetrahedron,
    Octahedron,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    pub shape: FormationShape,
    /// Edge length of the regular solids.
    #[serde(default = "default_edge")]
    pub edge_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets_m: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<[usize; 2]>>,
    /// Link every pair of slots instead of the solid's edges.
    #[serde(default)]
    pub complete_graph: bool,
    #[serde(default)]
    pub anonymous: bool,
    #[serde(default = "default_spawn")]
    pub spawn_side_m: f64,
    #[serde(default = "default_c0")]
    pub c0_m: f64,
    #[serde(default = "two")]
    pub v_min_m_per_s: f64,
    #[serde(default = "default_vmax")]
    pub v_max_m_per_s: f64,
    #[serde(default = "two")]
    pub u_max_per_s: f64,
    #[serde(default = "default_epoch")]
    pub epoch_ticks: u64,
    #[serde(default = "default_lambda")]
    pub lambda_vac_m: f64,
    #[serde(default = "default_ts")]
    pub ts_s: f64,
    #[serde(default = "default_formation_rc")]
    pub r_c_m: f64,
}

impl FormationSection {
    pub fn new(shape: FormationShape) -> Self {
        FormationSection {
            shape,
            edge_m: default_edge(),
            offsets_m: None,
            adjacency: None,
            complete_graph: false,
            anonymous: false,
            spawn_side_m: default_spawn(),
            c0_m: default_c0(),
            v_min_m_per_s: 2.0,
            v_max_m_per_s: default_vmax(),
            u_max_per_s: 2.0,
            epoch_ticks: default_epoch(),
            lambda_vac_m: default_lambda(),
            ts_s: default_ts(),
            r_c_m: default_formation_rc(),
        }
    }

    pub fn formation_config(&self) -> Result<FormationConfig> {
        let (offsets, mut adjacency) = match self.shape {
            FormationShape::Tetrahedron => tetrahedron(self.edge_m),
            FormationShape::Octahedron => octahedron(self.edge_m),
            FormationShape::Custom => {
                let o = self
                    .offsets_m
                    .as_ref()
                    .ok_or_else(|| Error::config("formation.offsets_m", "required for a custom formation"))?;
                (o.iter().map(|&p| Vec3::from(p)).collect(), Vec::new())
            }
        };
        if let Some(a) = &self.adjacency {
            adjacency = a.iter().map(|&[i, j]| (i, j)).collect();
        }
        if self.complete_graph {
            let n = offsets.len();
            adjacency = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        }
        Ok(FormationConfig {
            offsets,
            adjacency,
            c0: self.c0_m,
            v_min: self.v_min_m_per_s,
            v_max: self.v_max_m_per_s,
            u_max: self.u_max_per_s,
            n_epoch: self.epoch_ticks,
            lambda_vac: self.lambda_vac_m,
            ts: self.ts_s,
            r_c: self.r_c_m,
        })
    }
}

fn default_edge() -> f64 {
    50.0
}
fn default_spawn() -> f64 {
    50.0
}
fn default_c0() -> f64 {
    10.0
}
fn default_vmax() -> f64 {
    8.0
}
fn default_epoch() -> u64 {
    10
}
fn default_lambda() -> f64 {
    20.0
}
fn default_ts() -> f64 {
    0.01
}
fn default_formation_rc() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Trajectory rows are written every this many ticks.
    #[serde(default = "default_log_every")]
    pub log_every_ticks: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { log_every_ticks: default_log_every() }
    }
}

fn default_log_every() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_ticks: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub agents: AgentsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation: Option<FormationSection>,
}

fn default_horizon() -> u64 {
    10_000
}

impl ScenarioConfig {
    pub fn new(mode: Mode) -> Self {
        ScenarioConfig {
            mode,
            seed: 0,
            horizon_ticks: default_horizon(),
            output: OutputConfig::default(),
            region: None,
            grid: GridConfig::default(),
            agents: AgentsConfig::default(),
            search: None,
            shape: None,
            formation: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(field_of(text, &e), e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioConfig { seed, ..self.clone() }
    }

    pub fn region(&self) -> Result<Region> {
        self.region.ok_or_else(|| Error::config("region", "required for this mode"))?.region()
    }

    pub fn seed_point(&self) -> Result<Vec3> {
        Ok(match self.grid.seed_point_m {
            Some(p) => p.into(),
            None => self.region()?.center(),
        })
    }

    pub fn deployment(&self) -> Deployment {
        match self.agents.deployment {
            DeploymentKind::RandomVertices => Deployment::RandomVertices,
            DeploymentKind::Consensus => {
                Deployment::Consensus { r_c: self.grid.r_c(), max_ticks: self.agents.consensus_max_ticks }
            }
        }
    }

    pub fn knowledge(&self) -> OccupancyKnowledge {
        match self.agents.occupancy {
            OccupancyKind::Oracle => OccupancyKnowledge::Oracle,
            OccupancyKind::Local => OccupancyKnowledge::Local { r_c: self.grid.r_c() },
        }
    }

    /// Checks every field the selected mode reads; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.output.log_every_ticks == 0 {
            return Err(Error::config("output.log_every_ticks", "must be >= 1"));
        }
        let section_unused = |name: &str, present: bool, warnings: &mut Vec<String>| {
            if present {
                warnings.push(format!("[{name}] is ignored in {} mode", self.mode.name()));
            }
        };
        if self.mode == Mode::Formation {
            let f = self.formation.as_ref().ok_or_else(|| Error::config("formation", "required in formation mode"))?;
            f.formation_config()?.validate()?;
            if !(f.spawn_side_m > 0.0) {
                return Err(Error::config("formation.spawn_side_m", "must be > 0"));
            }
            section_unused("search", self.search.is_some(), &mut warnings);
            section_unused("shape", self.shape.is_some(), &mut warnings);
            return Ok(warnings);
        }
        self.region()?;
        if !(self.grid.r_s_m > 0.0 && self.grid.r_s_m.is_finite()) {
            return Err(Error::config("grid.r_s_m", format!("must be > 0, got {}", self.grid.r_s_m)));
        }
        let r_c = self.grid.r_c();
        if !(r_c > 0.0) {
            return Err(Error::config("grid.r_c_m", format!("must be > 0, got {r_c}")));
        }
        let need = min_connectivity_ratio(self.grid.lattice) * self.grid.r_s_m;
        if r_c < need {
            warnings.push(format!(
                "r_c = {r_c} is below {need:.4}, the range that keeps {} neighbours in contact",
                self.grid.lattice
            ));
        }
        if self.agents.count == Some(0) {
            return Err(Error::config("agents.count", "must be >= 1"));
        }
        match self.mode {
            Mode::Coverage => {
                section_unused("search", self.search.is_some(), &mut warnings);
                section_unused("shape", self.shape.is_some(), &mut warnings);
            }
            Mode::Shape => {
                let s = self.shape.ok_or_else(|| Error::config("shape", "required in shape mode"))?;
                s.predicate().validate().map_err(|e| Error::config("shape", e.to_string()))?;
                section_unused("search", self.search.is_some(), &mut warnings);
            }
            Mode::Search => {
                self.search_scenario()?.validate()?;
                section_unused("shape", self.shape.is_some(), &mut warnings);
            }
            Mode::Formation => unreachable!(),
        }
        section_unused("formation", self.formation.is_some(), &mut warnings);
        Ok(warnings)
    }

    pub fn search_scenario(&self) -> Result<SearchScenario> {
        let s = self.search.ok_or_else(|| Error::config("search", "required in search mode"))?;
        let n = self.agents.count.ok_or_else(|| Error::config("agents.count", "required in search mode"))?;
        let mut sc = SearchScenario::new(self.grid.lattice, self.grid.r_s_m, self.region()?, n, s.targets, self.seed);
        sc.r_c = self.grid.r_c();
        sc.layout = match s.layout {
            LayoutKind::Uniform => TargetLayout::Uniform,
            LayoutKind::Clustered => TargetLayout::Clustered { radius: s.cluster_radius_m },
        };
        sc.mobile_targets = s.mobile_targets;
        sc.target_step_scale = s.target_step_m;
        sc.strategy = s.strategy;
        sc.stop = s.stop;
        let spacing = sc.neighbor_spacing();
        sc.levy = Some(LevyParams { alpha: s.levy_alpha, l_min: s.levy_l_min_m.unwrap_or(spacing) });
        sc.normal_sigma = Some(s.normal_sigma_m.unwrap_or(spacing));
        sc.deployment = self.deployment();
        sc.horizon = self.horizon_ticks;
        Ok(sc)
    }

    pub fn formation_scenario(&self) -> Result<FormationScenario> {
        let f = self.formation.as_ref().ok_or_else(|| Error::config("formation", "required in formation mode"))?;
        Ok(FormationScenario {
            config: f.formation_config()?,
            anonymous: f.anonymous,
            spawn: Region::cube(Vec3::ZERO, f.spawn_side_m).map_err(|e| Error::config("formation.spawn_side_m", e.to_string()))?,
            horizon_ticks: self.horizon_ticks,
            seed: self.seed,
            log_every: self.output.log_every_ticks,
        })
    }
}

/// The source text under the error span, when that is a short key or value.
fn field_of(text: &str, e: &toml::de::Error) -> String {
    let line = |at: usize| text[..at].matches('\n').count() + 1;
    match e.span() {
        Some(span) => match text.get(span.clone()).map(str::trim) {
            Some(s) if !s.is_empty() && s.len() <= 40 && !s.contains('\n') => s.to_string(),
            _ => format!("line {}", line(span.start)),
        },
        None => "<config>".into(),
    }
}
