//! Neighbour-averaging consensus on grid seeds, orientation and formation variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_vertex, LatticeSpec, Vec3};
use crate::network::CommGraph;

/// Spread below which agents treat their beliefs as common.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Per-agent consensus variables.
///
/// `x, y, z` hold the grid seed belief (or the formation-centre correction
/// when used by the formation module), `theta, psi` the orientation and `v`
/// the formation speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsensusState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub psi: f64,
    pub v: f64,
}

impl ConsensusState {
    pub fn seed(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn with_seed(seed: Vec3) -> Self {
        ConsensusState { x: seed.x, y: seed.y, z: seed.z, ..Default::default() }
    }

    fn vars(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.theta, self.psi, self.v]
    }

    fn from_vars(v: [f64; 6]) -> Self {
        ConsensusState { x: v[0], y: v[1], z: v[2], theta: v[3], psi: v[4], v: v[5] }
    }
}

fn check_len(n: usize, g: &CommGraph) -> Result<()> {
    if n != g.len() {
        return Err(Error::GraphSizeMismatch { expected: g.len(), found: n });
    }
    Ok(())
}

/// Synchronous averaging step: every variable becomes `(own + sum of neighbours) / (1 + |N_i|)`.
pub fn consensus_step(states: &[ConsensusState], g: &CommGraph) -> Result<Vec<ConsensusState>> {
    check_len(states.len(), g)?;
    Ok((0..states.len())
        .map(|i| {
            let nbrs = g.neighbors(i);
            let mut acc = states[i].vars();
            for &j in nbrs {
                for (a, b) in acc.iter_mut().zip(states[j].vars()) {
                    *a += b;
                }
            }
            let k = 1.0 + nbrs.len() as f64;
            ConsensusState::from_vars(acc.map(|a| a / k))
        })
        .collect())
}

/// Largest max-minus-min over all variables across agents.
pub fn consensus_spread(states: &[ConsensusState]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Empty("consensus states"));
    }
    let mut spread = 0.0f64;
    for k in 0..6 {
        let (lo, hi) = states.iter().map(|s| s.vars()[k]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        spread = spread.max(hi - lo);
    }
    Ok(spread)
}

/// Formation update: `x̃` tracks the common centre through `x + x̃`, the rest is plain averaging.
pub fn formation_center_consensus_step(
    states: &[ConsensusState],
    positions: &[Vec3],
    next_positions: &[Vec3],
    g: &CommGraph,
) -> Result<Vec<ConsensusState>> {
    check_len(states.len(), g)?;
    check_len(positions.len(), g)?;
    check_len(next_positions.len(), g)?;
    let averaged = consensus_step(states, g)?;
    Ok((0..states.len())
        .map(|i| {
            let nbrs = g.neighbors(i);
            let mut centre = positions[i] + states[i].seed();
            for &j in nbrs {
                centre += positions[j] + states[j].seed();
            }
            let centre = centre * (1.0 / (1.0 + nbrs.len() as f64)) - next_positions[i];
            ConsensusState { x: centre.x, y: centre.y, z: centre.z, ..averaged[i] }
        })
        .collect())
}

/// Closest vertex of the lattice seeded at the agent's current belief.
pub fn snap_to_grid(spec: &LatticeSpec, state: &ConsensusState, p: Vec3) -> Vec3 {
    nearest_vertex(&spec.with_seed(state.seed()), p)
}
