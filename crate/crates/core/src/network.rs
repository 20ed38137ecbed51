//! Range-limited communication graphs and visited/detected gossip.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Vec3, VertexKey};

/// Undirected disk graph: `i ~ j` iff `|p_i - p_j| <= r_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    n: usize,
    r_c: f64,
    adj: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Graph from an explicit edge list; used for tests and fixed topologies.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange { index: a.max(b), n });
            }
            if a != b && !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        Ok(CommGraph { n, r_c: f64::NAN, adj })
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        CommGraph { n, r_c: f64::INFINITY, adj }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Unordered edges with `i < j`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, l) in self.adj.iter().enumerate() {
            out.extend(l.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }
}

pub fn build_graph(positions: &[Vec3], r_c: f64) -> Result<CommGraph> {
    if !(r_c > 0.0) {
        return Err(Error::InvalidParameter(format!("communication range must be > 0, got {r_c}")));
    }
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    let r2 = r_c * r_c;
    for i in 0..n {
        for j in (i + 1)..n {
            if (positions[i] - positions[j]).norm_sq() <= r2 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    Ok(CommGraph { n, r_c, adj })
}

pub fn neighbor_set(g: &CommGraph, i: usize) -> Result<&[usize]> {
    if i >= g.n {
        return Err(Error::IndexOutOfRange { index: i, n: g.n });
    }
    Ok(g.neighbors(i))
}

pub fn is_connected(g: &CommGraph) -> bool {
    if g.n == 0 {
        return true;
    }
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &g.adj[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == g.n
}

/// Whether the union of a window of graphs is connected.
pub fn union_connected_over_window(graphs: &[CommGraph]) -> Result<bool> {
    let first = graphs.first().ok_or(Error::Empty("graph window"))?;
    let n = first.n;
    let mut edges = Vec::new();
    for g in graphs {
        if g.n != n {
            return Err(Error::GraphSizeMismatch { expected: n, found: g.n });
        }
        edges.extend(g.edges());
    }
    Ok(is_connected(&CommGraph::from_edges(n, &edges)?))
}

/// Shared search knowledge carried by one agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GossipRecord {
    pub visited_vertices: BTreeSet<VertexKey>,
    pub detected_targets: BTreeSet<usize>,
    pub sender: usize,
    pub tick: u64,
}

impl GossipRecord {
    pub fn new(sender: usize) -> Self {
        GossipRecord { sender, ..Default::default() }
    }

    pub fn merge(&mut self, other: &GossipRecord) {
        self.visited_vertices.extend(other.visited_vertices.iter().copied());
        self.detected_targets.extend(other.detected_targets.iter().copied());
        self.tick = self.tick.max(other.tick);
    }
}

/// One synchronous round: every agent takes the union of its own and its neighbours' records.
pub fn gossip_exchange(records: &[GossipRecord], g: &CommGraph) -> Result<Vec<GossipRecord>> {
    if records.len() != g.len() {
        return Err(Error::GraphSizeMismatch { expected: g.len(), found: records.len() });
    }
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, own)| {
            let mut next = own.clone();
            for &j in g.neighbors(i) {
                next.merge(&records[j]);
            }
            next
        })
        .collect())
}
