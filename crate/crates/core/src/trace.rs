//! Per-tick trajectory rows and their CSV form.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub agent: usize,
    pub position: Vec3,
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub extra_columns: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    pub fn new(extra_columns: &[&str]) -> Self {
        TrajectoryLog { extra_columns: extra_columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_positions(&mut self, tick: u64, positions: &[Vec3]) {
        for (agent, &position) in positions.iter().enumerate() {
            self.rows.push(TrajectoryRow { tick, agent, position, extra: Vec::new() });
        }
    }

    pub fn push(&mut self, row: TrajectoryRow) {
        debug_assert_eq!(row.extra.len(), self.extra_columns.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> String {
        let mut h = String::from("tick,agent_id,x,y,z");
        for c in &self.extra_columns {
            h.push(',');
            h.push_str(c);
        }
        h
    }

    /// Rust's float formatting is shortest-round-trip, so re-import is exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for r in &self.rows {
            write!(w, "{},{},{},{},{}", r.tick, r.agent, r.position.x, r.position.y, r.position.z)?;
            for e in &r.extra {
                write!(w, ",{e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::Empty("trajectory file"))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 5 || cols[..5] != ["tick", "agent_id", "x", "y", "z"] {
            return Err(Error::Parse(format!("unexpected trajectory header `{header}`")));
        }
        let mut log = TrajectoryLog { extra_columns: cols[5..].iter().map(|s| s.to_string()).collect(), rows: Vec::new() };
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(bad("column count"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            log.rows.push(TrajectoryRow {
                tick: f[0].parse().map_err(|_| bad("tick"))?,
                agent: f[1].parse().map_err(|_| bad("agent_id"))?,
                position: Vec3::new(num(f[2], "x")?, num(f[3], "y")?, num(f[4], "z")?),
                extra: f[5..].iter().map(|s| num(s, "extra column")).collect::<Result<_>>()?,
            });
        }
        Ok(log)
    }

    /// Last recorded position of each agent.
    pub fn final_positions(&self) -> BTreeMap<usize, Vec3> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            out.insert(r.agent, r.position);
        }
        out
    }

    pub fn tick_count(&self) -> usize {
        let mut ticks: Vec<u64> = self.rows.iter().map(|r| r.tick).collect();
        ticks.dedup();
        ticks.len()
    }
}
