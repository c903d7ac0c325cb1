//! Recorded merge events: file format, smoothing, behavior labels and the
//! per-instant observations used for calibration.
//!
//! An event file holds one row per (event, time, actor) with the columns
//! `event_id, site_id, t, actor_role, x, y, v`. The optional columns
//! `lag_id`, `ramp_end_x`, `merge_zone_start_x` and `lane_offset` identify
//! the driver and the ramp; without them the lag is identified by its event
//! and the default ramp is assumed.

mod segment;
mod smooth;
pub mod synthetic;

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use self::segment::{epoch_at, segment_behaviors, BehaviorLabel, LabeledEpoch, SegmentOptions};
pub use self::smooth::{savgol_smooth, window_samples};
use crate::error::{Error, Result};
use crate::payoff::V_MIN;
use crate::sim::{ScenarioConfig, TrajectoryLog};
use crate::types::{ActorRole, Lane, RampGeometry, VehicleState, WorldState};

/// Events shorter than this are dropped on load (s).
pub const MIN_EVENT_DURATION: f64 = 3.0;

const REQUIRED_COLUMNS: [&str; 7] = ["event_id", "site_id", "t", "actor_role", "x", "y", "v"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorSample {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

impl ActorSample {
    fn lerp(&self, other: &Self, w: f64) -> Self {
        Self {
            x: self.x + w * (other.x - self.x),
            y: self.y + w * (other.y - self.y),
            v: self.v + w * (other.v - self.v),
        }
    }
}

/// One recorded merge, uniformly sampled. The leader may be missing at
/// some or all samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub event_id: String,
    pub site_id: String,
    pub lag_id: String,
    pub t: Vec<f64>,
    pub lag: Vec<ActorSample>,
    pub ma: Vec<ActorSample>,
    pub lead: Vec<Option<ActorSample>>,
    pub ramp: RampGeometry,
}

impl MergeEvent {
    pub fn duration(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Sampling period (s).
    pub fn dt(&self) -> f64 {
        if self.t.len() < 2 {
            return 0.0;
        }
        self.duration() / (self.t.len() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        let err = |message: String| Error::Schema {
            row: 0,
            column: "t".into(),
            message: format!("event `{}`: {message}", self.event_id),
        };
        if n < 2 {
            return Err(err("needs at least two samples".into()));
        }
        if self.lag.len() != n || self.ma.len() != n || self.lead.len() != n {
            return Err(err("actor series differ in length".into()));
        }
        let dt = self.dt();
        if dt.is_nan() || dt <= 0.0 {
            return Err(err("time must increase".into()));
        }
        for w in self.t.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 {
                return Err(err(format!("sampling is not uniform near t = {}", w[0])));
            }
        }
        self.ramp.validate()
    }

    /// Interpolated interaction snapshot at time `t`, which must lie inside
    /// the event. The leader is kept only when it is recorded at both
    /// neighboring samples and is ahead of the lag.
    pub fn world_at(&self, t: f64) -> Result<WorldState> {
        let (t0, dt) = (self.t[0], self.dt());
        let s = ((t - t0) / dt).clamp(0.0, (self.t.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.t.len() - 2);
        let w = s - i as f64;
        let lag = self.lag[i].lerp(&self.lag[i + 1], w);
        let ma = self.ma[i].lerp(&self.ma[i + 1], w);
        let lead = match (self.lead[i], self.lead[i + 1]) {
            (Some(a), Some(b)) => Some(a.lerp(&b, w)).filter(|l| l.x > lag.x),
            _ => None,
        };
        let state = |id, s: ActorSample, lane| VehicleState::new(id, s.x, s.y, s.v.max(0.0), 0.0, lane);
        WorldState::new(
            t,
            state(1, lag, Lane::Main)?,
            state(2, ma, self.ramp.lane_at(ma.y))?,
            lead.map(|l| state(3, l, Lane::Main)).transpose()?,
            self.ramp,
        )
    }

    /// Center-to-center time gap from the lag to its leader (s). Without a
    /// leader the merger serves once it has crossed into the main lane.
    /// Samples with neither are filled from the nearest defined sample; a
    /// series with none at all is flat zero.
    pub fn time_gap(&self) -> Vec<f64> {
        let raw: Vec<Option<f64>> = (0..self.t.len())
            .map(|k| {
                let lag = &self.lag[k];
                let ahead = self.lead[k].or_else(|| {
                    let ma = self.ma[k];
                    (self.ramp.lane_at(ma.y) == Lane::Main && ma.x > lag.x).then_some(ma)
                })?;
                Some((ahead.x - lag.x) / lag.v.max(V_MIN))
            })
            .collect();
        let Some(first) = raw.iter().flatten().next().copied() else {
            return vec![0.0; raw.len()];
        };
        let mut last = first;
        raw.into_iter()
            .map(|g| {
                if let Some(g) = g {
                    last = g;
                }
                last
            })
            .collect()
    }
}

/// Options of the labeling pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelOptions {
    /// Smoothing window (s).
    pub window: f64,
    /// Smoothing polynomial order.
    pub order: usize,
    #[serde(default)]
    pub segment: SegmentOptions,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            window: 2.0,
            order: 2,
            segment: SegmentOptions::default(),
        }
    }
}

/// Time-gap profile → smoothing → epochs.
pub fn label_event(event: &MergeEvent, opts: &LabelOptions) -> Result<Vec<LabeledEpoch>> {
    let smoothed = savgol_smooth(&event.time_gap(), event.dt(), opts.window, opts.order)?;
    Ok(segment_behaviors(&event.t, &smoothed, &opts.segment))
}

/// One decision instant with its ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub event_id: String,
    pub lag_id: String,
    pub world: WorldState,
    pub label: BehaviorLabel,
}

/// Observations at `rate` Hz, at the midpoints `t0 + (k + 0.5) / rate` of
/// the whole periods the event spans. An instant on an epoch boundary takes
/// the later epoch.
pub fn build_observations(event: &MergeEvent, epochs: &[LabeledEpoch], rate: f64) -> Result<Vec<Observation>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("rate", "must be finite and > 0"));
    }
    let count = (event.duration() * rate + 1e-9).floor() as usize;
    let t0 = event.t[0];
    (0..count)
        .map(|k| {
            let t = t0 + (k as f64 + 0.5) / rate;
            let epoch = epoch_at(epochs, t).ok_or_else(|| {
                Error::invalid("epochs", format!("no epoch covers t = {t} in event `{}`", event.event_id))
            })?;
            Ok(Observation {
                event_id: event.event_id.clone(),
                lag_id: event.lag_id.clone(),
                world: event.world_at(t)?,
                label: epoch.label,
            })
        })
        .collect()
}

/// Labels every event and pools the observations.
pub fn observations_from_events(events: &[MergeEvent], opts: &LabelOptions, rate: f64) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for event in events {
        let epochs = label_event(event, opts)?;
        out.extend(build_observations(event, &epochs, rate)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    event_id: String,
    site_id: String,
    t: f64,
    actor_role: String,
    x: f64,
    y: f64,
    v: f64,
    #[serde(default)]
    lag_id: Option<String>,
    #[serde(default)]
    ramp_end_x: Option<f64>,
    #[serde(default)]
    merge_zone_start_x: Option<f64>,
    #[serde(default)]
    lane_offset: Option<f64>,
}

struct EventBuilder {
    first_row: usize,
    site_id: String,
    lag_id: Option<String>,
    ramp: RampGeometry,
    rows: HashMap<ActorRole, Vec<(f64, ActorSample)>>,
}

impl EventBuilder {
    fn finish(mut self, event_id: String) -> Result<MergeEvent> {
        let schema = |message: String| Error::Schema {
            row: self.first_row,
            column: "actor_role".into(),
            message: format!("event `{event_id}`: {message}"),
        };
        for series in self.rows.values_mut() {
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let lag = self.rows.remove(&ActorRole::Lag).ok_or_else(|| schema("no lag rows".into()))?;
        let ma = self.rows.remove(&ActorRole::Ma).ok_or_else(|| schema("no ma rows".into()))?;
        if ma.len() != lag.len() || lag.iter().zip(&ma).any(|(a, b)| (a.0 - b.0).abs() > 1e-9) {
            return Err(schema("lag and ma must be recorded at the same times".into()));
        }
        let lead_rows = self.rows.remove(&ActorRole::Lead).unwrap_or_default();
        let mut lead = vec![None; lag.len()];
        for (t, s) in lead_rows {
            let k = lag
                .binary_search_by(|(tl, _)| tl.total_cmp(&t))
                .or_else(|k| {
                    [k.wrapping_sub(1), k]
                        .into_iter()
                        .find(|&j| j < lag.len() && (lag[j].0 - t).abs() <= 1e-9)
                        .ok_or(k)
                })
                .map_err(|_| schema(format!("lead sample at t = {t} has no matching lag sample")))?;
            lead[k] = Some(s);
        }
        let event = MergeEvent {
            lag_id: self.lag_id.unwrap_or_else(|| event_id.clone()),
            event_id,
            site_id: self.site_id,
            t: lag.iter().map(|r| r.0).collect(),
            lag: lag.into_iter().map(|r| r.1).collect(),
            ma: ma.into_iter().map(|r| r.1).collect(),
            lead,
            ramp: self.ramp,
        };
        event.validate().map_err(|e| match e {
            Error::Schema { message, .. } => Error::Schema {
                row: self.first_row,
                column: "t".into(),
                message,
            },
            other => other,
        })?;
        Ok(event)
    }
}

/// Reads an event file. Events shorter than [`MIN_EVENT_DURATION`] are
/// dropped with a warning.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<MergeEvent>> {
    let mut rd = csv::Reader::from_reader(reader);
    let headers = rd.headers()?.clone();
    for column in REQUIRED_COLUMNS {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::Schema {
                row: 1,
                column: column.into(),
                message: "required column is missing".into(),
            });
        }
    }
    let mut order: Vec<String> = Vec::new();
    let mut builders: HashMap<String, EventBuilder> = HashMap::new();
    for (i, row) in rd.deserialize::<EventRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Schema {
            row: line,
            column: e
                .position()
                .and_then(|_| match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.field().map(|f| headers[f as usize].to_string()),
                    _ => None,
                })
                .unwrap_or_default(),
            message: e.to_string(),
        })?;
        let bad = |column: &str, message: String| Error::Schema {
            row: line,
            column: column.into(),
            message,
        };
        let role = ActorRole::parse(&row.actor_role)
            .ok_or_else(|| bad("actor_role", format!("unknown role `{}`", row.actor_role)))?;
        for (column, value) in [("t", row.t), ("x", row.x), ("y", row.y), ("v", row.v)] {
            if !value.is_finite() {
                return Err(bad(column, format!("must be finite, got {value}")));
            }
        }
        if row.v < 0.0 {
            return Err(bad("v", format!("speed must be >= 0, got {}", row.v)));
        }
        let builder = match builders.get_mut(&row.event_id) {
            Some(b) => b,
            None => {
                let fallback = RampGeometry::default();
                let ramp = RampGeometry::new(
                    row.ramp_end_x.unwrap_or(fallback.ramp_end_x),
                    row.merge_zone_start_x.unwrap_or(fallback.merge_zone_start_x),
                    row.lane_offset.unwrap_or(fallback.lane_offset),
                )
                .map_err(|e| bad("ramp_end_x", e.to_string()))?;
                order.push(row.event_id.clone());
                builders.entry(row.event_id.clone()).or_insert(EventBuilder {
                    first_row: line,
                    site_id: row.site_id.clone(),
                    lag_id: None,
                    ramp,
                    rows: HashMap::new(),
                })
            }
        };
        if builder.lag_id.is_none() {
            builder.lag_id = row.lag_id.filter(|s| !s.is_empty());
        }
        builder
            .rows
            .entry(role)
            .or_default()
            .push((row.t, ActorSample { x: row.x, y: row.y, v: row.v }));
    }
    let mut events = Vec::with_capacity(order.len());
    for id in order {
        let builder = builders.remove(&id).expect("builder exists for every recorded id");
        let event = builder.finish(id)?;
        if event.duration() + 1e-9 < MIN_EVENT_DURATION {
            log::warn!(
                "dropping event `{}`: {:.2} s is shorter than {MIN_EVENT_DURATION} s",
                event.event_id,
                event.duration()
            );
            continue;
        }
        events.push(event);
    }
    Ok(events)
}

pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<MergeEvent>> {
    read_events(crate::error::open(path.as_ref())?)
}

pub fn write_events<W: Write>(events: &[MergeEvent], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in events {
        for k in 0..e.t.len() {
            let actors = [
                (ActorRole::Lag, Some(e.lag[k])),
                (ActorRole::Ma, Some(e.ma[k])),
                (ActorRole::Lead, e.lead[k]),
            ];
            for (role, sample) in actors {
                let Some(s) = sample else { continue };
                w.serialize(EventRow {
                    event_id: e.event_id.clone(),
                    site_id: e.site_id.clone(),
                    t: e.t[k],
                    actor_role: role.as_str().into(),
                    x: s.x,
                    y: s.y,
                    v: s.v,
                    lag_id: Some(e.lag_id.clone()),
                    ramp_end_x: Some(e.ramp.ramp_end_x),
                    merge_zone_start_x: Some(e.ramp.merge_zone_start_x),
                    lane_offset: Some(e.ramp.lane_offset),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_events(events: &[MergeEvent], path: impl AsRef<Path>) -> Result<()> {
    write_events(events, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    event_id: String,
    t_start: f64,
    t_end: f64,
    label: BehaviorLabel,
}

pub fn write_labels<'a, W, I>(labels: I, writer: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a [LabeledEpoch])>,
{
    let mut w = csv::Writer::from_writer(writer);
    for (event_id, epochs) in labels {
        for e in epochs {
            w.serialize(LabelRow {
                event_id: event_id.to_string(),
                t_start: e.t_start,
                t_end: e.t_end,
                label: e.label,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a label file back as `(event_id, epoch)` pairs in file order.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<(String, LabeledEpoch)>> {
    let mut rd = csv::Reader::from_reader(reader);
    rd.deserialize::<LabelRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::Schema {
                row: i + 2,
                column: String::new(),
                message: e.to_string(),
            })?;
            Ok((
                row.event_id,
                LabeledEpoch {
                    t_start: row.t_start,
                    t_end: row.t_end,
                    label: row.label,
                },
            ))
        })
        .collect()
}

/// Converts a simulated run into an event: the first lag agent, the merger,
/// and the nearest non-merging main-lane vehicle ahead of the lag as leader.
/// Every `stride`-th logged tick is kept.
pub fn event_from_log(
    log: &TrajectoryLog,
    config: &ScenarioConfig,
    event_id: &str,
    site_id: &str,
    stride: usize,
) -> Result<MergeEvent> {
    let stride = stride.max(1);
    let lag_id = config
        .lag_indices()
        .first()
        .map(|&i| config.vehicles[i].state.id)
        .ok_or_else(|| Error::Config("scenario has no lag agent".into()))?;
    let ma_id = config
        .merger_index()
        .map(|i| config.vehicles[i].state.id)
        .ok_or_else(|| Error::Config("scenario has no merger".into()))?;
    let mut tracks: HashMap<u32, Vec<(f64, ActorSample)>> = HashMap::new();
    for r in &log.records {
        tracks.entry(r.id).or_default().push((r.t, ActorSample { x: r.x, y: r.y, v: r.v }));
    }
    let lag = &tracks[&lag_id];
    let ma = &tracks[&ma_id];
    let others: Vec<&Vec<(f64, ActorSample)>> = tracks
        .iter()
        .filter(|(&id, _)| id != lag_id && id != ma_id)
        .map(|(_, v)| v)
        .collect();
    let ramp = config.ramp;
    let keep: Vec<usize> = (0..lag.len()).step_by(stride).collect();
    let lead = keep
        .iter()
        .map(|&k| {
            let me = lag[k].1;
            others
                .iter()
                .map(|tr| tr[k].1)
                .filter(|s| ramp.lane_at(s.y) == Lane::Main && s.x > me.x)
                .min_by(|a, b| a.x.total_cmp(&b.x))
        })
        .collect();
    let event = MergeEvent {
        event_id: event_id.into(),
        site_id: site_id.into(),
        lag_id: lag_id.to_string(),
        t: keep.iter().map(|&k| lag[k].0).collect(),
        lag: keep.iter().map(|&k| lag[k].1).collect(),
        ma: keep.iter().map(|&k| ma[k].1).collect(),
        lead,
        ramp,
    };
    event.validate()?;
    Ok(event)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_EVENTS: &str = "\
event_id,site_id,t,actor_role,x,y,v
a,s1,0.0,lag,0,3.5,20
a,s1,0.0,ma,30,0,20
a,s1,0.0,lead,60,3.5,20
a,s1,1.0,lag,20,3.5,20
a,s1,1.0,ma,50,0,20
a,s1,1.0,lead,80,3.5,20
a,s1,2.0,lag,40,3.5,20
a,s1,2.0,ma,70,0,20
a,s1,3.0,lag,60,3.5,20
a,s1,3.0,ma,90,0,20
b,s1,0.0,lag,0,3.5,10
b,s1,0.0,ma,5,0,10
b,s1,4.0,lag,40,3.5,10
b,s1,4.0,ma,45,0,10
";

    #[test]
    fn reads_events_with_partial_leader() {
        let events = read_events(TWO_EVENTS.as_bytes()).unwrap();
        assert_eq!(events.len(), 2);
        let a = &events[0];
        assert_eq!(a.lag_id, "a");
        assert_eq!(a.t, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(a.lead[1].is_some() && a.lead[2].is_none());
        assert_eq!(a.ramp, RampGeometry::default());
        assert_eq!(a.time_gap(), vec![3.0, 3.0, 3.0, 3.0]);
    }

    #[test]
    fn short_events_are_dropped() {
        let text = "event_id,site_id,t,actor_role,x,y,v\nc,s,0,lag,0,3.5,1\nc,s,0,ma,1,0,1\nc,s,2.5,lag,2.5,3.5,1\nc,s,2.5,ma,3.5,0,1\n";
        assert!(read_events(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn missing_column_is_named() {
        let text = "event_id,site_id,t,actor_role,x,v\n";
        match read_events(text.as_bytes()) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_row() {
        let text = TWO_EVENTS.replace("a,s1,1.0,ma,50,0,20", "a,s1,1.0,ma,50,0,fast");
        match read_events(text.as_bytes()) {
            Err(Error::Schema { row, .. }) => assert_eq!(row, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_read_round_trip() {
        let events = read_events(TWO_EVENTS.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_events(&events, &mut buf).unwrap();
        assert_eq!(read_events(buf.as_slice()).unwrap(), events);
    }

    #[test]
    fn observations_at_period_midpoints() {
        let events = read_events(TWO_EVENTS.as_bytes()).unwrap();
        let b = &events[1];
        let epochs = vec![LabeledEpoch {
            t_start: 0.0,
            t_end: 4.0,
            label: BehaviorLabel::DoNothing,
        }];
        let obs = build_observations(b, &epochs, 1.0).unwrap();
        let ts: Vec<f64> = obs.iter().map(|o| o.world.t).collect();
        assert_eq!(ts, vec![0.5, 1.5, 2.5, 3.5]);
        assert!(obs.iter().all(|o| o.world.lead.is_none()));
        assert_eq!(obs[0].world.lag.x, 5.0);
    }

    #[test]
    fn label_round_trip() {
        let epochs = vec![
            LabeledEpoch { t_start: 0.0, t_end: 1.5, label: BehaviorLabel::DoNothing },
            LabeledEpoch { t_start: 1.5, t_end: 4.0, label: BehaviorLabel::GapClosing },
        ];
        let mut buf = Vec::new();
        write_labels([("e1", epochs.as_slice())], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("event_id,t_start,t_end,label\n"));
        let back = read_labels(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1], ("e1".to_string(), epochs[1]));
    }
}
