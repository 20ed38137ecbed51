//! Random search for static and moving targets: neighbour walks with shared
//! visited maps, grid-snapped Lévy flights, and a gridless Lévy baseline.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coverage::{deploy, Deployment};
use crate::error::{Error, Result};
use crate::geometry::{covering_set, CoveringSet, LatticeKind, LatticeSpec, Region, Vec3, VertexKey};
use crate::network::{build_graph, gossip_exchange, GossipRecord};
use crate::rng::{self, Purpose, StreamRng};
use crate::trace::TrajectoryLog;

/// Proposal draws allowed before a step gives up.
pub const REJECTION_BUDGET: usize = 1_000;

/// Vertices an agent knows to be visited, by itself or through gossip.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitedMap {
    pub visited: BTreeSet<VertexKey>,
}

impl VisitedMap {
    pub fn contains(&self, k: VertexKey) -> bool {
        self.visited.contains(&k)
    }

    pub fn insert(&mut self, k: VertexKey) {
        self.visited.insert(k);
    }

    pub fn len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visited.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub id: usize,
    pub position: Vec3,
    pub detected: bool,
    pub mobile: bool,
    /// Standard deviation of the per-tick step length of a mobile target.
    pub step_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyParams {
    pub alpha: f64,
    pub l_min: f64,
}

impl LevyParams {
    pub fn new(alpha: f64, l_min: f64) -> Result<Self> {
        let p = LevyParams { alpha, l_min };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 3.0) {
            return Err(Error::InvalidParameter(format!("levy alpha must lie in (1, 3), got {}", self.alpha)));
        }
        if !(self.l_min > 0.0 && self.l_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("levy l_min must be > 0, got {}", self.l_min)));
        }
        Ok(())
    }
}

/// Binary sensing: marks and returns every undetected target within closed distance `r_s`.
pub fn detect(agent_p: Vec3, targets: &mut [TargetState], r_s: f64) -> Vec<usize> {
    let mut hits = Vec::new();
    for t in targets.iter_mut() {
        if !t.detected && t.position.distance(agent_p) <= r_s {
            t.detected = true;
            hits.push(t.id);
        }
    }
    hits
}

/// Uniform over unvisited neighbour vertices, or over all neighbours when none is unvisited.
/// The chosen vertex is recorded in `visited`.
pub fn grid_search_step(agent: usize, visited: &mut VisitedMap, grid: &CoveringSet, rng: &mut StreamRng) -> usize {
    let nbrs = grid.neighbors(agent);
    if nbrs.is_empty() {
        visited.insert(grid.key(agent));
        return agent;
    }
    let fresh: Vec<usize> = nbrs.iter().copied().filter(|&w| !visited.contains(grid.key(w))).collect();
    let pool = if fresh.is_empty() { nbrs } else { &fresh[..] };
    let next = pool[rng.random_range(0..pool.len())];
    visited.insert(grid.key(next));
    next
}

/// Union of the visited maps covers every vertex.
pub fn stop_all_visited<'a>(maps: impl IntoIterator<Item = &'a VisitedMap>, grid: &CoveringSet) -> bool {
    let mut union = BTreeSet::new();
    for m in maps {
        union.extend(m.visited.iter().copied());
    }
    grid.keys().iter().all(|k| union.contains(k))
}

pub fn stop_all_targets_found(targets: &[TargetState]) -> bool {
    targets.iter().all(|t| t.detected)
}

/// Inverse transform of the power-law tail with support `[l_min, inf)`; `u` in `(0, 1]`.
pub fn levy_length_from_uniform(params: &LevyParams, u: f64) -> f64 {
    params.l_min * u.powf(-1.0 / (params.alpha - 1.0))
}

pub fn levy_sample_length(params: &LevyParams, rng: &mut StreamRng) -> f64 {
    // random() is on [0, 1); flip it onto (0, 1]
    let u = 1.0 - rng.random::<f64>();
    levy_length_from_uniform(params, u)
}

/// Direction uniform on the unit sphere.
pub fn random_direction(rng: &mut StreamRng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// How far a flight goes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepLength {
    Levy(LevyParams),
    /// Absolute value of a zero-mean normal draw.
    HalfNormal { sigma: f64 },
}

impl StepLength {
    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            StepLength::Levy(p) => levy_sample_length(p, rng),
            StepLength::HalfNormal { sigma } => Normal::new(0.0, *sigma).expect("validated sigma").sample(rng).abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepLength::Levy(p) => p.validate(),
            StepLength::HalfNormal { sigma } if *sigma > 0.0 && sigma.is_finite() => Ok(()),
            StepLength::HalfNormal { sigma } => {
                Err(Error::InvalidParameter(format!("step sigma must be > 0, got {sigma}")))
            }
        }
    }
}

fn flight_endpoint(from: Vec3, region: &Region, length: &StepLength, rng: &mut StreamRng) -> Result<Vec3> {
    for _ in 0..REJECTION_BUDGET {
        let dir = random_direction(rng);
        let l = length.sample(rng);
        let q = from + dir * l;
        if region.contains(q) {
            return Ok(q);
        }
    }
    Err(Error::RejectionBudget { budget: REJECTION_BUDGET, context: format!("flight from {from}") })
}

/// Random direction, sampled length, redraw while outside the region, then snap to the closest covering vertex.
pub fn levy_grid_step(agent: usize, grid: &CoveringSet, length: &StepLength, rng: &mut StreamRng) -> Result<usize> {
    let q = flight_endpoint(grid.point(agent), grid.region(), length, rng)?;
    Ok(grid.nearest(q).expect("covering set is non-empty"))
}

/// Same flight as [`levy_grid_step`] without snapping.
pub fn levy_continuous_step(p: Vec3, region: &Region, length: &StepLength, rng: &mut StreamRng) -> Result<Vec3> {
    flight_endpoint(p, region, length, rng)
}

/// Displacement of a target with elevation `theta`, azimuth `psi` and signed length `lambda`.
pub fn target_displacement(theta: f64, psi: f64, lambda: f64) -> Vec3 {
    Vec3::new(lambda * theta.cos() * psi.cos(), lambda * theta.cos() * psi.sin(), lambda * theta.sin())
}

/// Random heading and normal step; redrawn until the target stays inside.
pub fn moving_target_step(t: &TargetState, region: &Region, rng: &mut StreamRng) -> Result<TargetState> {
    if !t.mobile {
        return Ok(*t);
    }
    let normal = Normal::new(0.0, t.step_scale)
        .map_err(|e| Error::InvalidParameter(format!("target step scale {}: {e}", t.step_scale)))?;
    for _ in 0..REJECTION_BUDGET {
        let theta = rng.random_range(0.0..2.0 * PI);
        let psi = rng.random_range(0.0..2.0 * PI);
        let lambda = normal.sample(rng);
        let q = t.position + target_displacement(theta, psi, lambda);
        if region.contains(q) {
            return Ok(TargetState { position: q, ..*t });
        }
    }
    Err(Error::RejectionBudget { budget: REJECTION_BUDGET, context: format!("target {} at {}", t.id, t.position) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    NeighborGrid,
    LevyGrid,
    GridNormalLength,
    LevyContinuous,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::NeighborGrid, Strategy::LevyGrid, Strategy::GridNormalLength, Strategy::LevyContinuous];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NeighborGrid => "neighbor-grid",
            Strategy::LevyGrid => "levy-grid",
            Strategy::GridNormalLength => "grid-normal-length",
            Strategy::LevyContinuous => "levy-continuous",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown search strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    AllVisited,
    AllTargetsFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    AllVisited,
    AllTargetsFound,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetLayout {
    Uniform,
    /// Targets drawn in a ball of `radius` around a uniformly placed centre.
    Clustered { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub tick: u64,
    pub agent: usize,
    pub target: usize,
    pub position: Vec3,
}

#[derive(Debug, Clone)]
pub struct SearchScenario {
    pub kind: LatticeKind,
    pub r_s: f64,
    pub r_c: f64,
    pub region: Region,
    pub n_agents: usize,
    pub n_targets: usize,
    pub layout: TargetLayout,
    pub mobile_targets: bool,
    pub target_step_scale: f64,
    pub strategy: Strategy,
    pub stop: StopRule,
    /// Lévy parameters; `l_min` defaults to the longest neighbour spacing.
    pub levy: Option<LevyParams>,
    pub normal_sigma: Option<f64>,
    pub deployment: Deployment,
    pub horizon: u64,
    pub seed: u64,
}

impl SearchScenario {
    pub fn new(kind: LatticeKind, r_s: f64, region: Region, n_agents: usize, n_targets: usize, seed: u64) -> Self {
        SearchScenario {
            kind,
            r_s,
            r_c: 4.0 * r_s,
            region,
            n_agents,
            n_targets,
            layout: TargetLayout::Uniform,
            mobile_targets: false,
            target_step_scale: r_s,
            strategy: Strategy::NeighborGrid,
            stop: StopRule::AllTargetsFound,
            levy: None,
            normal_sigma: None,
            deployment: Deployment::RandomVertices,
            horizon: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        LatticeSpec::new(self.kind, self.region.center(), self.r_s)?;
        if self.n_agents == 0 {
            return Err(Error::config("n_agents", "at least one agent is required"));
        }
        if !(self.r_c > 0.0) {
            return Err(Error::config("r_c", "communication range must be > 0"));
        }
        if self.mobile_targets && !(self.target_step_scale > 0.0) {
            return Err(Error::config("target_step_scale", "must be > 0 for mobile targets"));
        }
        if let TargetLayout::Clustered { radius } = self.layout {
            if !(radius > 0.0) {
                return Err(Error::config("cluster_radius", "must be > 0"));
            }
        }
        if let Some(l) = &self.levy {
            l.validate()?;
        }
        self.step_length(1.0).validate()
    }

    /// Longest face-neighbour distance of the lattice.
    pub fn neighbor_spacing(&self) -> f64 {
        let spec = LatticeSpec::new(self.kind, Vec3::ZERO, self.r_s).expect("validated r_s");
        spec.neighbor_offsets().iter().map(|&o| spec.vertex(VertexKey(o)).norm()).fold(0.0, f64::max)
    }

    fn step_length(&self, spacing: f64) -> StepLength {
        match self.strategy {
            Strategy::GridNormalLength => StepLength::HalfNormal { sigma: self.normal_sigma.unwrap_or(spacing) },
            _ => StepLength::Levy(self.levy.unwrap_or(LevyParams { alpha: 2.0, l_min: spacing })),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    /// Movement ticks executed.
    pub steps: u64,
    pub stop_reason: StopReason,
    pub detections: Vec<DetectionEvent>,
    pub targets: Vec<TargetState>,
    pub visited_vertices: usize,
    pub covering_vertices: usize,
}

impl SearchResult {
    pub fn all_detected(&self) -> bool {
        stop_all_targets_found(&self.targets)
    }
}

fn place_targets(sc: &SearchScenario, grid: &CoveringSet) -> Result<Vec<TargetState>> {
    let mut rng = rng::stream(sc.seed, 0, Purpose::TargetPlacement);
    let (a, b) = (sc.region.min_corner, sc.region.max_corner);
    let uniform = |rng: &mut StreamRng| Vec3::new(rng.random_range(a.x..=b.x), rng.random_range(a.y..=b.y), rng.random_range(a.z..=b.z));
    // a target must be sensible from some vertex, otherwise visiting every vertex would not find it
    let covered = |p: Vec3| grid.nearest(p).is_some_and(|i| grid.point(i).distance(p) <= sc.r_s);
    let centre = match sc.layout {
        TargetLayout::Uniform => None,
        TargetLayout::Clustered { .. } => Some(uniform(&mut rng)),
    };
    let mut out = Vec::with_capacity(sc.n_targets);
    for id in 0..sc.n_targets {
        let mut placed = None;
        for _ in 0..REJECTION_BUDGET {
            let p = match (sc.layout, centre) {
                (TargetLayout::Clustered { radius }, Some(c)) => c + random_direction(&mut rng) * (radius * rng.random::<f64>().cbrt()),
                _ => uniform(&mut rng),
            };
            if sc.region.contains(p) && covered(p) {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or_else(|| Error::RejectionBudget {
            budget: REJECTION_BUDGET,
            context: format!("placing target {id}"),
        })?;
        out.push(TargetState { id, position, detected: false, mobile: sc.mobile_targets, step_scale: sc.target_step_scale });
    }
    Ok(out)
}

/// Run one search to its stop rule or horizon.
pub fn run_search(sc: &SearchScenario, mut log: Option<&mut TrajectoryLog>) -> Result<SearchResult> {
    sc.validate()?;
    let seed_point = sc.region.center();
    let dep = deploy(sc.kind, sc.r_s, &sc.region, seed_point, sc.n_agents, sc.deployment, sc.seed, None)?;
    let grid: Arc<CoveringSet> = dep.grid.clone();
    let length = sc.step_length(sc.neighbor_spacing());
    let mut targets = place_targets(sc, &grid)?;
    let mut agent_rngs = rng::streams(sc.seed, sc.n_agents, Purpose::Move);
    let mut target_rngs = rng::streams(sc.seed, sc.n_targets, Purpose::TargetMove);

    let mut at: Vec<usize> = dep.agents.clone();
    let mut pos: Vec<Vec3> = at.iter().map(|&v| grid.point(v)).collect();
    let mut records: Vec<GossipRecord> = (0..sc.n_agents).map(GossipRecord::new).collect();
    let mut detections = Vec::new();

    let sense = |tick: u64, pos: &[Vec3], targets: &mut [TargetState], records: &mut [GossipRecord], out: &mut Vec<DetectionEvent>| {
        for (i, &p) in pos.iter().enumerate() {
            for id in detect(p, targets, sc.r_s) {
                records[i].detected_targets.insert(id);
                out.push(DetectionEvent { tick, agent: i, target: id, position: p });
            }
        }
    };
    let mark = |at: &[usize], pos: &[Vec3], records: &mut [GossipRecord], tick: u64| {
        for i in 0..records.len() {
            let v = match sc.strategy {
                Strategy::LevyContinuous => grid.nearest(pos[i]).expect("non-empty"),
                _ => at[i],
            };
            records[i].visited_vertices.insert(grid.key(v));
            records[i].tick = tick;
        }
    };

    sense(0, &pos, &mut targets, &mut records, &mut detections);
    mark(&at, &pos, &mut records, 0);
    if let Some(l) = log.as_deref_mut() {
        l.push_positions(0, &pos);
    }

    let mut steps = 0u64;
    let stop_reason = loop {
        let done = match sc.stop {
            StopRule::AllTargetsFound => stop_all_targets_found(&targets),
            StopRule::AllVisited => {
                let maps: Vec<&BTreeSet<VertexKey>> = records.iter().map(|r| &r.visited_vertices).collect();
                grid.keys().iter().all(|k| maps.iter().any(|m| m.contains(k)))
            }
        };
        if done {
            break match sc.stop {
                StopRule::AllTargetsFound => StopReason::AllTargetsFound,
                StopRule::AllVisited => StopReason::AllVisited,
            };
        }
        if steps >= sc.horizon {
            break StopReason::Horizon;
        }

        for i in 0..sc.n_agents {
            let rng = &mut agent_rngs[i];
            match sc.strategy {
                Strategy::NeighborGrid => {
                    let mut map = VisitedMap { visited: std::mem::take(&mut records[i].visited_vertices) };
                    at[i] = grid_search_step(at[i], &mut map, &grid, rng);
                    records[i].visited_vertices = map.visited;
                    pos[i] = grid.point(at[i]);
                }
                Strategy::LevyGrid | Strategy::GridNormalLength => {
                    at[i] = levy_grid_step(at[i], &grid, &length, rng)?;
                    pos[i] = grid.point(at[i]);
                }
                Strategy::LevyContinuous => {
                    pos[i] = levy_continuous_step(pos[i], &sc.region, &length, rng)?;
                }
            }
        }
        for (t, rng) in targets.iter_mut().zip(target_rngs.iter_mut()) {
            *t = moving_target_step(t, &sc.region, rng)?;
        }
        steps += 1;
        sense(steps, &pos, &mut targets, &mut records, &mut detections);
        mark(&at, &pos, &mut records, steps);
        let g = build_graph(&pos, sc.r_c)?;
        records = gossip_exchange(&records, &g)?;
        if let Some(l) = log.as_deref_mut() {
            l.push_positions(steps, &pos);
        }
    };

    let mut union = BTreeSet::new();
    for r in &records {
        union.extend(r.visited_vertices.iter().copied());
    }
    Ok(SearchResult {
        steps,
        stop_reason,
        detections,
        targets,
        visited_vertices: union.len(),
        covering_vertices: grid.len(),
    })
}

/// Covering set a search scenario runs on, for inspection.
pub fn search_grid(sc: &SearchScenario) -> Result<CoveringSet> {
    covering_set(&LatticeSpec::new(sc.kind, sc.region.center(), sc.r_s)?, &sc.region)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(id: usize, p: Vec3) -> TargetState {
        TargetState { id, position: p, detected: false, mobile: false, step_scale: 1.0 }
    }

    #[test]
    fn detection_boundary_inclusive() {
        let mut t = [target(0, Vec3::new(1.0, 0.0, 0.0)), target(1, Vec3::new(1.001, 0.0, 0.0))];
        assert_eq!(detect(Vec3::ZERO, &mut t, 1.0), vec![0]);
        assert!(t[0].detected && !t[1].detected);
        assert!(detect(Vec3::ZERO, &mut t, 1.0).is_empty());
    }

    #[test]
    fn levy_inverse_transform() {
        let p = LevyParams::new(2.0, 1.0).unwrap();
        assert_eq!(levy_length_from_uniform(&p, 1.0), 1.0);
        assert!((levy_length_from_uniform(&p, 0.25) - 4.0).abs() < 1e-12);
        assert!(LevyParams::new(3.0, 1.0).is_err());
        assert!(LevyParams::new(2.0, 0.0).is_err());
    }

    #[test]
    fn target_kinematics() {
        assert!(target_displacement(0.0, 0.0, 1.0).distance(Vec3::new(1.0, 0.0, 0.0)) < 1e-15);
        assert!(target_displacement(PI / 2.0, 0.3, 2.0).distance(Vec3::new(0.0, 0.0, 2.0)) < 1e-15);
    }

    #[test]
    fn continuous_step_length_is_exact() {
        let region = Region::cube(Vec3::ZERO, 100.0).unwrap();
        let mut rng = rng::stream(1, 0, Purpose::Move);
        let len = StepLength::Levy(LevyParams::new(1.5, 2.0).unwrap());
        for _ in 0..100 {
            let q = levy_continuous_step(Vec3::ZERO, &region, &len, &mut rng).unwrap();
            assert!(q.norm() >= 2.0 - 1e-12);
        }
    }

    #[test]
    fn rejection_budget_from_corner() {
        let region = Region::cube(Vec3::ZERO, 1.0).unwrap();
        let mut rng = rng::stream(1, 0, Purpose::Move);
        let len = StepLength::Levy(LevyParams::new(2.0, 1e6).unwrap());
        let r = levy_continuous_step(region.min_corner, &region, &len, &mut rng);
        assert!(matches!(r, Err(Error::RejectionBudget { .. })));
    }

    #[test]
    fn single_vertex_grid_stops_at_once() {
        let region = Region::cube(Vec3::ZERO, 0.5).unwrap();
        let mut sc = SearchScenario::new(LatticeKind::TruncatedOctahedron, 1.0, region, 1, 0, 3);
        sc.stop = StopRule::AllVisited;
        let r = run_search(&sc, None).unwrap();
        assert_eq!(r.covering_vertices, 1);
        assert_eq!(r.steps, 0);
        assert_eq!(r.stop_reason, StopReason::AllVisited);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
    }
}
