//! Grid deployment, random-spread coverage and three-stage shape formation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{consensus_spread, consensus_step, snap_to_grid, ConsensusState, CONVERGENCE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{
    covering_set, shape_contains, CoveringSet, LatticeKind, LatticeSpec, Region, ShapePredicate, Vec3, VertexKey,
};
use crate::network::build_graph;
use crate::rng::{self, Purpose, StreamRng};
use crate::trace::TrajectoryLog;

/// Default tick budget for spread phases.
pub const DEFAULT_HORIZON: u64 = 10_000;

/// How agents reach the vertices of a common grid before the task starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Deployment {
    /// Agents start on uniformly drawn vertices of a grid seeded at the given point.
    RandomVertices,
    /// Agents start uniformly in the region, agree on a seed by consensus and snap every tick.
    Consensus { r_c: f64, max_ticks: u64 },
}

/// How an agent learns which neighbour vertices are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OccupancyKnowledge {
    /// Exact global occupancy.
    Oracle,
    /// Only agents within `r_c` are seen.
    Local { r_c: f64 },
}

/// Orthonormal frame fixed by the agreed origin and heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFrame {
    pub origin: Vec3,
    pub theta: f64,
    pub psi: f64,
}

impl ShapeFrame {
    pub fn axis_aligned(origin: Vec3) -> Self {
        ShapeFrame { origin, theta: 0.0, psi: 0.0 }
    }

    pub fn axes(&self) -> [Vec3; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.psi.sin_cos();
        let e1 = Vec3::new(ct * cp, ct * sp, -st);
        let e2 = Vec3::new(-sp, cp, 0.0);
        [e1, e2, e1.cross(e2)]
    }

    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let q = p - self.origin;
        let [e1, e2, e3] = self.axes();
        Vec3::new(q.dot(e1), q.dot(e2), q.dot(e3))
    }
}

/// Result of the grid-building stage.
#[derive(Debug, Clone)]
pub struct Deployed {
    pub grid: Arc<CoveringSet>,
    /// Covering-set index of each agent.
    pub agents: Vec<usize>,
    pub frame: ShapeFrame,
    pub consensus_ticks: u64,
    pub converged: bool,
    /// First tick not yet written to the trajectory log by the deployment stage.
    pub next_tick: u64,
}

fn uniform_in(region: &Region, rng: &mut StreamRng) -> Vec3 {
    let (a, b) = (region.min_corner, region.max_corner);
    Vec3::new(rng.random_range(a.x..=b.x), rng.random_range(a.y..=b.y), rng.random_range(a.z..=b.z))
}

/// Build a common grid and place `n` agents on it.
pub fn deploy(
    kind: LatticeKind,
    r_s: f64,
    region: &Region,
    seed_point: Vec3,
    n: usize,
    deployment: Deployment,
    run_seed: u64,
    mut log: Option<&mut TrajectoryLog>,
) -> Result<Deployed> {
    let base = LatticeSpec::new(kind, seed_point, r_s)?;
    let mut rngs = rng::streams(run_seed, n, Purpose::Deploy);
    match deployment {
        Deployment::RandomVertices => {
            let grid = Arc::new(covering_set(&base, region)?);
            if grid.is_empty() {
                return Err(Error::InvalidRegion("region holds no lattice vertex".into()));
            }
            let agents = rngs.iter_mut().map(|r| r.random_range(0..grid.len())).collect();
            Ok(Deployed { grid, agents, frame: ShapeFrame::axis_aligned(seed_point), consensus_ticks: 0, converged: true, next_tick: 0 })
        }
        Deployment::Consensus { r_c, max_ticks } => {
            let mut positions: Vec<Vec3> = rngs.iter_mut().map(|r| uniform_in(region, r)).collect();
            let mut init = rng::streams(run_seed, n, Purpose::ConsensusInit);
            // each agent starts from its own frame: origin at itself, random heading
            let mut beliefs: Vec<ConsensusState> = positions
                .iter()
                .zip(init.iter_mut())
                .map(|(p, r)| ConsensusState {
                    theta: r.random_range(0.0..PI),
                    psi: r.random_range(0.0..PI),
                    ..ConsensusState::with_seed(*p)
                })
                .collect();
            if let Some(l) = log.as_deref_mut() {
                l.push_positions(0, &positions);
            }
            let mut ticks = 0;
            let mut converged = n <= 1 || consensus_spread(&beliefs)? < CONVERGENCE_TOL;
            while !converged && ticks < max_ticks {
                let g = build_graph(&positions, r_c)?;
                let next = consensus_step(&beliefs, &g)?;
                // positions snap using the tick-K beliefs
                for (p, b) in positions.iter_mut().zip(&beliefs) {
                    *p = snap_to_grid(&base, b, *p);
                }
                beliefs = next;
                ticks += 1;
                if let Some(l) = log.as_deref_mut() {
                    l.push_positions(ticks, &positions);
                }
                converged = consensus_spread(&beliefs)? < CONVERGENCE_TOL;
            }
            let k = n.max(1) as f64;
            let mean = |f: fn(&ConsensusState) -> f64| beliefs.iter().map(f).sum::<f64>() / k;
            let origin = Vec3::new(mean(|b| b.x), mean(|b| b.y), mean(|b| b.z));
            let frame = ShapeFrame { origin, theta: mean(|b| b.theta), psi: mean(|b| b.psi) };
            let grid = Arc::new(covering_set(&base.with_seed(origin), region)?);
            if grid.is_empty() {
                return Err(Error::InvalidRegion("region holds no lattice vertex".into()));
            }
            let agents = positions.iter().map(|p| grid.nearest(*p).expect("non-empty grid")).collect();
            Ok(Deployed { grid, agents, frame, consensus_ticks: ticks, converged, next_tick: ticks + 1 })
        }
    }
}

/// Occupied vertices at a tick; the value is the lowest agent index present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OccupancyView {
    pub occupied: BTreeMap<VertexKey, usize>,
    pub tick: u64,
    /// Agents per covering-set index.
    counts: Vec<u32>,
}

impl OccupancyView {
    pub fn of(run: &CoverageRun) -> Self {
        let mut occupied = BTreeMap::new();
        let mut counts = vec![0; run.grid.len()];
        for (i, &v) in run.agents.iter().enumerate() {
            occupied.entry(run.grid.key(v)).or_insert(i);
            counts[v] += 1;
        }
        OccupancyView { occupied, tick: run.steps_taken, counts }
    }

    pub fn is_occupied(&self, key: VertexKey) -> bool {
        self.occupied.contains_key(&key)
    }

    fn index_occupied(&self, grid: &CoveringSet, i: usize) -> bool {
        match self.counts.get(i) {
            Some(&c) => c > 0,
            None => self.is_occupied(grid.key(i)),
        }
    }

    pub fn vacant_count(&self, grid: &CoveringSet) -> usize {
        grid.len() - self.occupied.len().min(grid.len())
    }
}

/// Who moves when several agents pick the same vacant vertex in one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictRule {
    /// Uniform draw among the claimants.
    #[default]
    Random,
    LowestIndex,
}

/// Random-spread state over a (possibly shape-restricted) covering set.
#[derive(Debug, Clone)]
pub struct CoverageRun {
    pub spec: LatticeSpec,
    pub region: Region,
    pub rng_seed: u64,
    pub steps_taken: u64,
    pub knowledge: OccupancyKnowledge,
    pub conflict: ConflictRule,
    grid: Arc<CoveringSet>,
    agents: Vec<usize>,
    rngs: Vec<StreamRng>,
    conflict_rng: StreamRng,
    // per-vertex claim lists reused across ticks
    claims: Vec<Vec<usize>>,
}

impl CoverageRun {
    /// Agents given by covering-set indices.
    pub fn new(grid: Arc<CoveringSet>, agents: Vec<usize>, rng_seed: u64, knowledge: OccupancyKnowledge) -> Result<Self> {
        if let Some(&bad) = agents.iter().find(|&&a| a >= grid.len()) {
            return Err(Error::IndexOutOfRange { index: bad, n: grid.len() });
        }
        Ok(CoverageRun {
            spec: *grid.spec(),
            region: *grid.region(),
            rng_seed,
            steps_taken: 0,
            knowledge,
            conflict: ConflictRule::default(),
            rngs: rng::streams(rng_seed, agents.len(), Purpose::Move),
            conflict_rng: rng::stream(rng_seed, 0, Purpose::Conflict),
            claims: vec![Vec::new(); grid.len()],
            grid,
            agents,
        })
    }

    pub fn with_conflict_rule(mut self, rule: ConflictRule) -> Self {
        self.conflict = rule;
        self
    }

    pub fn grid(&self) -> &CoveringSet {
        &self.grid
    }

    pub fn agent_vertices(&self) -> &[usize] {
        &self.agents
    }

    pub fn agent_positions(&self) -> Vec<Vec3> {
        self.agents.iter().map(|&v| self.grid.point(v)).collect()
    }

    fn sees(&self, me: usize, vertex: usize) -> bool {
        match self.knowledge {
            OccupancyKnowledge::Oracle => true,
            OccupancyKnowledge::Local { r_c } => self.grid.point(self.agents[me]).distance(self.grid.point(vertex)) <= r_c,
        }
    }
}

/// One synchronous spread tick.
///
/// Each agent draws uniformly from its current vertex plus the neighbour vertices it
/// believes vacant in the pre-move snapshot. A vertex wanted by several agents goes to
/// one of them per the run's conflict rule; the others stay put.
pub fn spread_step(run: &mut CoverageRun, occupancy: &OccupancyView) {
    let n = run.agents.len();
    let mut options = Vec::with_capacity(16);
    for i in 0..n {
        let here = run.agents[i];
        options.clear();
        options.push(here);
        for &w in run.grid.neighbors(here) {
            let taken = occupancy.index_occupied(&run.grid, w) && run.sees(i, w);
            if !taken {
                options.push(w);
            }
        }
        let pick = options[run.rngs[i].random_range(0..options.len())];
        // a vertex believed vacant may still be taken when knowledge is local
        if pick != here && !occupancy.index_occupied(&run.grid, pick) {
            run.claims[pick].push(i);
        }
    }
    for v in 0..run.claims.len() {
        if run.claims[v].is_empty() {
            continue;
        }
        let winner = match run.conflict {
            ConflictRule::LowestIndex => run.claims[v][0],
            ConflictRule::Random => {
                let k = run.claims[v].len();
                run.claims[v][if k == 1 { 0 } else { run.conflict_rng.random_range(0..k) }]
            }
        };
        run.agents[winner] = v;
        run.claims[v].clear();
    }
    run.steps_taken += 1;
}

/// Every vertex of the run's covering set holds at least one agent.
pub fn is_coverage_complete(run: &CoverageRun, occupancy: &OccupancyView) -> bool {
    (0..run.grid.len()).all(|i| occupancy.index_occupied(&run.grid, i))
}

#[derive(Debug, Clone)]
pub struct SpreadOutcome {
    pub complete: bool,
    pub steps: u64,
    /// Fraction of covering vertices occupied after each tick, starting at tick 0.
    pub coverage_series: Vec<f64>,
}

/// Spread until complete or `horizon` ticks.
pub fn run_spread(run: &mut CoverageRun, horizon: u64, mut log: Option<&mut TrajectoryLog>, tick_offset: u64) -> SpreadOutcome {
    let total = run.grid.len().max(1) as f64;
    let mut occ = OccupancyView::of(run);
    let mut series = vec![occ.occupied.len() as f64 / total];
    if let Some(l) = log.as_deref_mut() {
        l.push_positions(tick_offset, &run.agent_positions());
    }
    let start = run.steps_taken;
    while !is_coverage_complete(run, &occ) && run.steps_taken - start < horizon {
        spread_step(run, &occ);
        occ = OccupancyView::of(run);
        series.push(occ.occupied.len() as f64 / total);
        if let Some(l) = log.as_deref_mut() {
            l.push_positions(tick_offset + run.steps_taken - start, &run.agent_positions());
        }
    }
    SpreadOutcome { complete: is_coverage_complete(run, &occ), steps: run.steps_taken - start, coverage_series: series }
}

/// Shape-formation input.
#[derive(Debug, Clone)]
pub struct ShapeScenario {
    pub kind: LatticeKind,
    pub r_s: f64,
    pub region: Region,
    pub seed_point: Vec3,
    pub shape: ShapePredicate,
    pub n_agents: usize,
    pub deployment: Deployment,
    pub knowledge: OccupancyKnowledge,
    pub conflict: ConflictRule,
    pub seed: u64,
    pub horizon: u64,
}

#[derive(Debug, Clone)]
pub struct ShapeOutcome {
    pub run: CoverageRun,
    pub frame: ShapeFrame,
    pub in_shape_vertices: usize,
    pub consensus_ticks: u64,
    pub spread: SpreadOutcome,
}

/// St1 common grid, St2 move to the closest in-shape vertex, St3 random spread inside the shape.
pub fn run_shape_formation(sc: &ShapeScenario, mut log: Option<&mut TrajectoryLog>) -> Result<ShapeOutcome> {
    sc.shape.validate()?;
    let dep = deploy(sc.kind, sc.r_s, &sc.region, sc.seed_point, sc.n_agents, sc.deployment, sc.seed, log.as_deref_mut())?;
    let inside = dep.grid.filtered(|v| shape_contains(&sc.shape, dep.frame.to_local(v)));
    if inside.is_empty() {
        return Err(Error::config("shape", "no covering vertex lies inside the shape"));
    }
    let agents: Vec<usize> = dep
        .agents
        .iter()
        .map(|&a| inside.nearest_by_scan(dep.grid.point(a), |_| true).expect("non-empty"))
        .collect();
    let inside = Arc::new(inside);
    let mut run = CoverageRun::new(inside.clone(), agents, sc.seed, sc.knowledge)?.with_conflict_rule(sc.conflict);
    let spread = run_spread(&mut run, sc.horizon, log, dep.next_tick);
    Ok(ShapeOutcome { frame: dep.frame, in_shape_vertices: inside.len(), consensus_ticks: dep.consensus_ticks, spread, run })
}
