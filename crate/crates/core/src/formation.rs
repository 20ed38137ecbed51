//! Nonholonomic 3D formation building: pursuit of consensus-driven fictitious
//! targets under bounded turn rate and speed, with optional anonymous slot
//! negotiation.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{formation_center_consensus_step, ConsensusState};
use crate::coverage::ShapeFrame;
use crate::error::{Error, Result};
use crate::geometry::{Region, Vec3};
use crate::network::{build_graph, is_connected, CommGraph};
use crate::rng::{self, Purpose, StreamRng};
use crate::trace::{TrajectoryLog, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub xi: Vec3,
    /// Unit centerline.
    pub c: Vec3,
    pub v: f64,
    pub theta: f64,
    pub psi: f64,
}

impl RobotState {
    pub fn new(xi: Vec3, theta: f64, psi: f64, v: f64) -> Self {
        RobotState { xi, c: heading_vector(theta, psi), v, theta, psi }
    }

    pub fn velocity(&self) -> Vec3 {
        self.c * self.v
    }
}

/// `(cos t cos p, cos t sin p, -sin t)`.
pub fn heading_vector(theta: f64, psi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Vec3::new(ct * cp, ct * sp, -st)
}

/// Pitch and yaw angles of a unit centerline.
pub fn heading_angles(c: Vec3) -> (f64, f64) {
    ((-c.z).clamp(-1.0, 1.0).asin(), c.y.atan2(c.x))
}

/// Derivatives of the centerline with respect to pitch (`A`) and yaw (`B`).
pub fn frame_basis(theta: f64, psi: f64) -> (Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    (Vec3::new(-st * cp, -st * sp, -ct), Vec3::new(-ct * sp, ct * cp, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationConfig {
    /// Slot offsets `(X, Y, Z)` in the formation frame, `X` along travel.
    pub offsets: Vec<Vec3>,
    /// Edges of the configuration graph over slots.
    pub adjacency: Vec<(usize, usize)>,
    pub c0: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub u_max: f64,
    /// Ticks between permutation epochs.
    pub n_epoch: u64,
    pub lambda_vac: f64,
    pub ts: f64,
    pub r_c: f64,
}

impl FormationConfig {
    /// Sampling time 0.01 s, range 100 m, vacancy radius 20 m, epoch 10, speeds 2..8 m/s, turn bound 2.
    pub fn with_offsets(offsets: Vec<Vec3>, adjacency: Vec<(usize, usize)>) -> Self {
        FormationConfig {
            offsets,
            adjacency,
            c0: 10.0,
            v_min: 2.0,
            v_max: 8.0,
            u_max: 2.0,
            n_epoch: 10,
            lambda_vac: 20.0,
            ts: 0.01,
            r_c: 100.0,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn graph(&self) -> Result<CommGraph> {
        CommGraph::from_edges(self.offsets.len(), &self.adjacency)
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() {
            return Err(Error::config("offsets", "at least one slot is required"));
        }
        if !(self.u_max > 0.0) {
            return Err(Error::config("u_max", "must be > 0"));
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max) {
            return Err(Error::config("v_min", format!("need 0 < v_min < v_max, got {} and {}", self.v_min, self.v_max)));
        }
        let c0_floor = 2.0 * self.v_max / self.u_max;
        if !(self.c0 > c0_floor) {
            return Err(Error::config("c0", format!("must exceed 2 v_max / u_max = {c0_floor}, got {}", self.c0)));
        }
        if !(self.r_c > 0.0) {
            return Err(Error::config("r_c", "must be > 0"));
        }
        if !(self.lambda_vac > 0.0 && self.lambda_vac < self.r_c / 2.0) {
            return Err(Error::config("lambda_vac", format!("need 0 < lambda < r_c / 2, got {}", self.lambda_vac)));
        }
        if self.n_epoch <= 1 {
            return Err(Error::config("n_epoch", "must be > 1"));
        }
        if !(self.ts > 0.0) {
            return Err(Error::config("ts", "sampling time must be > 0"));
        }
        if !is_connected(&self.graph().map_err(|e| Error::config("adjacency", e.to_string()))?) {
            return Err(Error::config("adjacency", "configuration graph is not connected"));
        }
        Ok(())
    }
}

/// One robot's guidance quantities for a tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceFrame {
    pub target: Vec3,
    pub d: Vec3,
    pub u: Vec3,
    pub v: f64,
    pub h: f64,
}

/// Formation frame of one robot's consensus heading.
pub fn consensus_frame(cons: &ConsensusState) -> ShapeFrame {
    ShapeFrame { origin: Vec3::ZERO, theta: cons.theta, psi: cons.psi }
}

fn to_world(frame: &ShapeFrame, local: Vec3) -> Vec3 {
    let [e1, e2, e3] = frame.axes();
    e1 * local.x + e2 * local.y + e3 * local.z
}

/// Slot point of `offset` for this robot's consensus at time `t`, in world coordinates.
pub fn slot_point(xi: Vec3, cons: &ConsensusState, offset: Vec3, t: f64) -> Vec3 {
    let frame = consensus_frame(cons);
    let centre = frame.to_local(xi + cons.seed());
    to_world(&frame, centre + Vec3::new(offset.x + t * cons.v, offset.y, offset.z))
}

/// Returns the fictitious target (world) and `h` (formation-frame x of the moving slot).
pub fn fictitious_target(robot: &RobotState, cons: &ConsensusState, offset: Vec3, t: f64, c0: f64) -> (Vec3, f64) {
    let frame = consensus_frame(cons);
    let me = frame.to_local(robot.xi);
    let centre = frame.to_local(robot.xi + cons.seed());
    let h = centre.x + offset.x + t * cons.v;
    let tx = if me.x <= h { h + c0 } else { me.x + c0 };
    let local = Vec3::new(tx, centre.y + offset.y, centre.z + offset.z);
    (to_world(&frame, local), h)
}

/// Full turn toward the component of `d` normal to the velocity; zero once aligned.
pub fn control(robot: &RobotState, d: Vec3, u_max: f64) -> Vec3 {
    let vel = robot.velocity();
    let vv = vel.norm_sq();
    if vv == 0.0 {
        return Vec3::ZERO;
    }
    let du = d - vel * (d.dot(vel) / vv);
    let n = du.norm();
    if n < 1e-9 * d.norm() || n == 0.0 {
        return Vec3::ZERO;
    }
    // strip the residual along c left by rounding so the constraint holds tightly
    let dir = du * (1.0 / n);
    let dir = dir - robot.c * dir.dot(robot.c);
    let mut u = dir * (u_max / dir.norm());
    // rounding can leave the norm an ulp above the bound
    while u.norm() > u_max {
        u = u * (1.0 - f64::EPSILON);
    }
    u
}

pub fn speed_rule(x_local: f64, h: f64, v_min: f64, v_max: f64) -> f64 {
    if x_local <= h {
        v_max
    } else {
        v_min
    }
}

/// Pitch and yaw rates `(<u, A>, <u, B>)`.
pub fn angular_rates(u: Vec3, theta: f64, psi: f64) -> (f64, f64) {
    let (a, b) = frame_basis(theta, psi);
    (u.dot(a), u.dot(b))
}

/// Explicit Euler on position and centerline, then renormalise the centerline.
pub fn integrate_step(robot: &RobotState, u: Vec3, v: f64, ts: f64) -> RobotState {
    let xi = robot.xi + robot.c * (v * ts);
    let c = (robot.c + u * ts).normalized().unwrap_or(robot.c);
    let (theta, psi) = heading_angles(c);
    RobotState { xi, c, v, theta, psi }
}

/// Slot assignment of each robot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationState {
    pub assignment: Vec<usize>,
    pub epoch: u64,
}

impl PermutationState {
    pub fn is_distinct(&self) -> bool {
        let mut seen = vec![false; self.assignment.len()];
        self.assignment.iter().all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
    }
}

/// No robot within `lambda_vac` of the slot point (inclusive).
pub fn vacancy_test(positions: &[Vec3], point: Vec3, lambda_vac: f64) -> bool {
    positions.iter().all(|p| p.distance(point) > lambda_vac)
}

/// Whether some other robot sits in robot `i`'s own slot sphere.
pub fn slot_blocked(i: usize, positions: &[Vec3], point: Vec3, lambda_vac: f64) -> bool {
    positions.iter().enumerate().any(|(j, p)| j != i && p.distance(point) <= lambda_vac)
}

/// One epoch of the randomized slot negotiation at time `t`.
pub fn permutation_step(
    perm: &PermutationState,
    robots: &[RobotState],
    cons: &[ConsensusState],
    config: &FormationConfig,
    slot_graph: &CommGraph,
    t: f64,
    rngs: &mut [StreamRng],
) -> (PermutationState, Vec<bool>) {
    let positions: Vec<Vec3> = robots.iter().map(|r| r.xi).collect();
    let mut next = perm.assignment.clone();
    let mut blocked = vec![false; robots.len()];
    for i in 0..robots.len() {
        let own = perm.assignment[i];
        let here = slot_point(positions[i], &cons[i], config.offsets[own], t);
        blocked[i] = slot_blocked(i, &positions, here, config.lambda_vac);
        if !blocked[i] {
            continue;
        }
        let mut options = vec![own];
        for &j in slot_graph.neighbors(own) {
            let q = slot_point(positions[i], &cons[i], config.offsets[j], t);
            if vacancy_test(&positions, q, config.lambda_vac) {
                options.push(j);
            }
        }
        next[i] = options[rngs[i].random_range(0..options.len())];
    }
    (PermutationState { assignment: next, epoch: perm.epoch + 1 }, blocked)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationScenario {
    pub config: FormationConfig,
    pub anonymous: bool,
    /// Robots start uniformly inside this box.
    pub spawn: Region,
    pub horizon_ticks: u64,
    pub seed: u64,
    /// Trajectory rows every this many ticks.
    pub log_every: u64,
}

/// Worst per-tick values of the input constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLog {
    pub max_u_norm: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub max_u_dot_c: f64,
    pub max_c_norm_error: f64,
    /// Largest `|q| - u_max` and `|r| - u_max cos theta`; non-positive when the rate bounds hold.
    pub max_q_excess: f64,
    pub max_r_excess: f64,
}

impl Default for ConstraintLog {
    fn default() -> Self {
        ConstraintLog {
            max_u_norm: 0.0,
            min_v: f64::INFINITY,
            max_v: f64::NEG_INFINITY,
            max_u_dot_c: 0.0,
            max_c_norm_error: 0.0,
            max_q_excess: f64::NEG_INFINITY,
            max_r_excess: f64::NEG_INFINITY,
        }
    }
}

impl ConstraintLog {
    pub fn satisfied(&self, config: &FormationConfig) -> bool {
        self.max_u_norm <= config.u_max + 1e-9
            && self.min_v >= config.v_min
            && self.max_v <= config.v_max
            && self.max_u_dot_c <= 1e-9
            && self.max_c_norm_error <= 1e-9
            && self.max_q_excess <= 1e-9
            && self.max_r_excess <= 1e-9
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationResult {
    pub ticks: u64,
    /// Max over pairs of `|ey_ij|` and `|ez_ij|` at each tick.
    pub ey_series: Vec<f64>,
    pub ez_series: Vec<f64>,
    pub constraints: ConstraintLog,
    pub final_robots: Vec<RobotState>,
    pub final_consensus: Vec<ConsensusState>,
    /// Assignment after each permutation epoch; a single entry when slots are fixed.
    pub assignments: Vec<Vec<usize>>,
    /// First epoch from which slots are distinct, unblocked and occupied.
    pub absorbed_epoch: Option<usize>,
    /// Whether the assignment changed after `absorbed_epoch`.
    pub changed_after_absorption: bool,
}

impl FormationResult {
    pub fn peak_ey(&self) -> f64 {
        self.ey_series.iter().copied().fold(0.0, f64::max)
    }

    pub fn peak_ez(&self) -> f64 {
        self.ez_series.iter().copied().fold(0.0, f64::max)
    }

    pub fn final_ey(&self) -> f64 {
        self.ey_series.last().copied().unwrap_or(0.0)
    }

    pub fn final_ez(&self) -> f64 {
        self.ez_series.last().copied().unwrap_or(0.0)
    }

    pub fn final_assignment(&self) -> &[usize] {
        self.assignments.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Pairwise lateral and vertical errors in the frame of the mean consensus heading.
fn pair_errors(robots: &[RobotState], cons: &[ConsensusState], offsets: &[Vec3], slots: &[usize]) -> (f64, f64, Vec<(f64, f64)>) {
    let n = robots.len() as f64;
    let frame = ShapeFrame {
        origin: Vec3::ZERO,
        theta: cons.iter().map(|c| c.theta).sum::<f64>() / n,
        psi: cons.iter().map(|c| c.psi).sum::<f64>() / n,
    };
    let local: Vec<Vec3> = robots.iter().map(|r| frame.to_local(r.xi)).collect();
    let mut per = vec![(0.0f64, 0.0f64); robots.len()];
    let (mut ey, mut ez) = (0.0f64, 0.0f64);
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            let (oi, oj) = (offsets[slots[i]], offsets[slots[j]]);
            let y = ((local[i].y - local[j].y) - (oi.y - oj.y)).abs();
            let z = ((local[i].z - local[j].z) - (oi.z - oj.z)).abs();
            ey = ey.max(y);
            ez = ez.max(z);
            for k in [i, j] {
                per[k].0 = per[k].0.max(y);
                per[k].1 = per[k].1.max(z);
            }
        }
    }
    (ey, ez, per)
}

pub const TRAJECTORY_COLUMNS: [&str; 8] = ["theta", "psi", "v", "u_norm", "q", "r", "ey", "ez"];

/// Simulate consensus, guidance and (when anonymous) slot negotiation for `horizon_ticks`.
pub fn run_formation(sc: &FormationScenario, mut log: Option<&mut TrajectoryLog>) -> Result<FormationResult> {
    let cfg = &sc.config;
    cfg.validate()?;
    sc.spawn.validate()?;
    let n = cfg.len();
    let slot_graph = cfg.graph()?;
    let mut init = rng::streams(sc.seed, n, Purpose::FormationInit);
    let mut robots = Vec::with_capacity(n);
    let mut cons = Vec::with_capacity(n);
    let (a, b) = (sc.spawn.min_corner, sc.spawn.max_corner);
    for r in init.iter_mut() {
        let xi = Vec3::new(r.random_range(a.x..=b.x), r.random_range(a.y..=b.y), r.random_range(a.z..=b.z));
        let robot = RobotState::new(xi, r.random_range(0.0..PI), r.random_range(0.0..PI), cfg.v_max);
        robots.push(robot);
        cons.push(ConsensusState {
            theta: r.random_range(0.0..PI),
            psi: r.random_range(0.0..PI),
            v: r.random_range(cfg.v_min..=cfg.v_max),
            ..Default::default()
        });
    }
    let mut perm_rngs = rng::streams(sc.seed, n, Purpose::Permutation);
    let mut perm = PermutationState {
        assignment: if sc.anonymous { perm_rngs.iter_mut().map(|r| r.random_range(0..n)).collect() } else { (0..n).collect() },
        epoch: 0,
    };
    let mut assignments = vec![perm.assignment.clone()];
    let mut absorbed_epoch = None;
    let mut changed_after_absorption = false;

    let mut constraints = ConstraintLog::default();
    let mut ey_series = Vec::with_capacity(sc.horizon_ticks as usize + 1);
    let mut ez_series = Vec::with_capacity(sc.horizon_ticks as usize + 1);
    let log_every = sc.log_every.max(1);

    for k in 0..=sc.horizon_ticks {
        let t = k as f64 * cfg.ts;
        if sc.anonymous && k > 0 && k % cfg.n_epoch == 0 {
            let (next, blocked) = permutation_step(&perm, &robots, &cons, cfg, &slot_graph, t, &mut perm_rngs);
            if absorbed_epoch.is_some() && next.assignment != perm.assignment {
                changed_after_absorption = true;
            }
            let settled = next.is_distinct()
                && !blocked.iter().any(|&x| x)
                && robots.iter().enumerate().all(|(i, r)| {
                    r.xi.distance(slot_point(r.xi, &cons[i], cfg.offsets[next.assignment[i]], t)) <= cfg.lambda_vac
                });
            if settled && next.assignment == perm.assignment && absorbed_epoch.is_none() {
                absorbed_epoch = Some(assignments.len() - 1);
            }
            perm = next;
            assignments.push(perm.assignment.clone());
        }

        let (ey, ez, per) = pair_errors(&robots, &cons, &cfg.offsets, &perm.assignment);
        ey_series.push(ey);
        ez_series.push(ez);
        if k == sc.horizon_ticks {
            if let Some(l) = log.as_deref_mut() {
                log_rows(l, k, &robots, &[], &per);
            }
            break;
        }

        let mut guidance = Vec::with_capacity(n);
        for i in 0..n {
            let offset = cfg.offsets[perm.assignment[i]];
            let (target, h) = fictitious_target(&robots[i], &cons[i], offset, t, cfg.c0);
            let x_local = consensus_frame(&cons[i]).to_local(robots[i].xi).x;
            let v = speed_rule(x_local, h, cfg.v_min, cfg.v_max);
            let d = target - robots[i].xi;
            let r = RobotState { v, ..robots[i] };
            let u = control(&r, d, cfg.u_max);
            guidance.push(GuidanceFrame { target, d, u, v, h });
        }

        for (r, g) in robots.iter().zip(&guidance) {
            let (q, rr) = angular_rates(g.u, r.theta, r.psi);
            constraints.max_u_norm = constraints.max_u_norm.max(g.u.norm());
            constraints.min_v = constraints.min_v.min(g.v);
            constraints.max_v = constraints.max_v.max(g.v);
            constraints.max_u_dot_c = constraints.max_u_dot_c.max(g.u.dot(r.c).abs());
            constraints.max_q_excess = constraints.max_q_excess.max(q.abs() - cfg.u_max);
            constraints.max_r_excess = constraints.max_r_excess.max(rr.abs() - cfg.u_max * r.theta.cos().abs());
        }
        if k % log_every == 0 {
            if let Some(l) = log.as_deref_mut() {
                log_rows(l, k, &robots, &guidance, &per);
            }
        }

        let before: Vec<Vec3> = robots.iter().map(|r| r.xi).collect();
        for (r, g) in robots.iter_mut().zip(&guidance) {
            *r = integrate_step(r, g.u, g.v, cfg.ts);
            constraints.max_c_norm_error = constraints.max_c_norm_error.max((r.c.norm() - 1.0).abs());
        }
        let after: Vec<Vec3> = robots.iter().map(|r| r.xi).collect();
        let g = build_graph(&before, cfg.r_c)?;
        cons = formation_center_consensus_step(&cons, &before, &after, &g)?;
    }

    Ok(FormationResult {
        ticks: sc.horizon_ticks,
        ey_series,
        ez_series,
        constraints,
        final_robots: robots,
        final_consensus: cons,
        assignments,
        absorbed_epoch,
        changed_after_absorption,
    })
}

fn log_rows(l: &mut TrajectoryLog, k: u64, robots: &[RobotState], guidance: &[GuidanceFrame], per: &[(f64, f64)]) {
    for (i, r) in robots.iter().enumerate() {
        let (u, (q, rr)) = match guidance.get(i) {
            Some(g) => (g.u.norm(), angular_rates(g.u, r.theta, r.psi)),
            None => (0.0, (0.0, 0.0)),
        };
        l.push(TrajectoryRow {
            tick: k,
            agent: i,
            position: r.xi,
            extra: vec![r.theta, r.psi, guidance.get(i).map_or(r.v, |g| g.v), u, q, rr, per[i].0, per[i].1],
        });
    }
}

/// Regular tetrahedron with the given edge, centred at the origin; complete slot graph.
pub fn tetrahedron(edge: f64) -> (Vec<Vec3>, Vec<(usize, usize)>) {
    let s = edge / (2.0 * 2f64.sqrt());
    let pts = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let offsets = pts.iter().map(|p| Vec3::from(*p) * s).collect();
    let edges = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).collect();
    (offsets, edges)
}

/// Regular octahedron with the given edge; every slot is adjacent to all but its opposite.
pub fn octahedron(edge: f64) -> (Vec<Vec3>, Vec<(usize, usize)>) {
    let a = edge / 2f64.sqrt();
    let offsets = vec![
        Vec3::new(a, 0.0, 0.0),
        Vec3::new(-a, 0.0, 0.0),
        Vec3::new(0.0, a, 0.0),
        Vec3::new(0.0, -a, 0.0),
        Vec3::new(0.0, 0.0, a),
        Vec3::new(0.0, 0.0, -a),
    ];
    let edges = (0..6).flat_map(|i| ((i + 1)..6).filter(move |&j| j != (i ^ 1)).map(move |j| (i, j))).collect();
    (offsets, edges)
}
