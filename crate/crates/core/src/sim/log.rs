use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::LagAction;

/// State of one vehicle at the start of one dynamics tick, with the
/// acceleration commanded over that tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    /// Behavior in effect for lag agents; empty for other vehicles.
    pub decision: Option<LagAction>,
    /// Quantal-response probabilities (YB, YA, Bk, DN).
    pub lag_probs: Option<[f64; 4]>,
    /// Expected lag payoffs (YB, YA, Bk, DN) at the last decision.
    pub payoffs: Option<[f64; 4]>,
    /// When the behavior in effect was chosen, while the lag interacts with
    /// the merger.
    pub decided_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    /// The vehicle that ran into `leader`; it is frozen afterwards.
    pub follower: u32,
    pub leader: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
    pub collisions: Vec<CollisionEvent>,
}

/// Row layout of the trajectory file.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    id: u32,
    x: f64,
    y: f64,
    v: f64,
    a: f64,
    decision: Option<LagAction>,
    p_yb: Option<f64>,
    p_ya: Option<f64>,
    p_bk: Option<f64>,
    p_dn: Option<f64>,
}

impl TrajectoryLog {
    /// Records of one vehicle, in time order.
    pub fn vehicle(&self, id: u32) -> impl Iterator<Item = &LogRecord> + '_ {
        self.records.iter().filter(move |r| r.id == id)
    }

    pub fn vehicle_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            let p = r.lag_probs;
            w.serialize(CsvRow {
                t: r.t,
                id: r.id,
                x: r.x,
                y: r.y,
                v: r.v,
                a: r.a,
                decision: r.decision,
                p_yb: p.map(|p| p[0]),
                p_ya: p.map(|p| p[1]),
                p_bk: p.map(|p| p[2]),
                p_dn: p.map(|p| p[3]),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Reads a trajectory file. Payoff vectors and collisions are not part of
    /// the file and come back empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for (i, row) in rd.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::Schema {
                row: i + 2,
                column: String::new(),
                message: e.to_string(),
            })?;
            let lag_probs = match (row.p_yb, row.p_ya, row.p_bk, row.p_dn) {
                (Some(a), Some(b), Some(c), Some(d)) => Some([a, b, c, d]),
                _ => None,
            };
            records.push(LogRecord {
                t: row.t,
                id: row.id,
                x: row.x,
                y: row.y,
                v: row.v,
                a: row.a,
                decision: row.decision,
                lag_probs,
                payoffs: None,
                decided_at: None,
            });
        }
        Ok(Self { records, collisions: Vec::new() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(crate::error::open(path.as_ref())?)
    }
}
