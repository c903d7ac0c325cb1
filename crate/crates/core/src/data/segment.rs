use std::fmt;

use serde::{Deserialize, Serialize};

/// Ground-truth behavior classes recoverable from a lag's time-gap profile.
/// Yield-ahead and block both close the gap and share one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorLabel {
    DoNothing,
    GapOpening,
    GapClosing,
}

impl BehaviorLabel {
    pub const ALL: [BehaviorLabel; 3] = [
        BehaviorLabel::DoNothing,
        BehaviorLabel::GapOpening,
        BehaviorLabel::GapClosing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorLabel::DoNothing => "do_nothing",
            BehaviorLabel::GapOpening => "gap_opening",
            BehaviorLabel::GapClosing => "gap_closing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledEpoch {
    pub t_start: f64,
    pub t_end: f64,
    pub label: BehaviorLabel,
}

impl LabeledEpoch {
    /// Whether `t` falls in `[t_start, t_end)`.
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentOptions {
    /// Minimum absolute average rate of change of the time gap (s/s).
    pub min_rate: f64,
    /// Minimum absolute total change of the time gap (s).
    pub min_total: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            min_rate: 0.08,
            min_total: 1.0,
        }
    }
}

/// End of the monotone run starting at `start`: the index of the running
/// extreme, allowing one sample that fails to extend it.
fn run_end(g: &[f64], start: usize, dir: f64) -> usize {
    let mut best = start + 1;
    let mut misses = 0;
    for k in start + 2..g.len() {
        if dir * (g[k] - g[best]) > 0.0 {
            best = k;
            misses = 0;
        } else {
            misses += 1;
            if misses > 1 {
                break;
            }
        }
    }
    best
}

/// Longest sub-interval of `lo..=hi` meeting both thresholds in direction
/// `dir`; the earliest one on ties.
fn longest_qualifying(t: &[f64], g: &[f64], lo: usize, hi: usize, dir: f64, opts: &SegmentOptions) -> Option<(usize, usize)> {
    for len in (1..=hi - lo).rev() {
        for a in lo..=hi - len {
            let b = a + len;
            let change = dir * (g[b] - g[a]);
            if change >= opts.min_total && change / (t[b] - t[a]) >= opts.min_rate {
                return Some((a, b));
            }
        }
    }
    None
}

fn collect_trends(
    t: &[f64],
    g: &[f64],
    lo: usize,
    hi: usize,
    dir: f64,
    opts: &SegmentOptions,
    out: &mut Vec<(usize, usize, f64)>,
) {
    if hi <= lo {
        return;
    }
    if let Some((a, b)) = longest_qualifying(t, g, lo, hi, dir, opts) {
        collect_trends(t, g, lo, a, dir, opts, out);
        out.push((a, b, dir));
        collect_trends(t, g, b, hi, dir, opts, out);
    }
}

/// Splits a smoothed time-gap series into labeled epochs.
///
/// Monotone runs are found by a cumulative-extreme scan. Inside each run the
/// longest stretches whose average rate and total change both clear the
/// thresholds become gap-opening or gap-closing epochs; everything else is
/// do-nothing. The epochs partition `[t[0], t[last]]`.
pub fn segment_behaviors(t: &[f64], gap: &[f64], opts: &SegmentOptions) -> Vec<LabeledEpoch> {
    assert_eq!(t.len(), gap.len(), "time and gap series differ in length");
    let n = t.len();
    if n == 0 {
        return Vec::new();
    }
    let mut trends = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let step = gap[i + 1] - gap[i];
        if step == 0.0 {
            i += 1;
            continue;
        }
        let dir = step.signum();
        let end = run_end(gap, i, dir);
        collect_trends(t, gap, i, end, dir, opts, &mut trends);
        i = end;
    }

    let mut epochs = Vec::new();
    let mut cursor = 0;
    for (a, b, dir) in trends {
        if a > cursor {
            epochs.push(LabeledEpoch {
                t_start: t[cursor],
                t_end: t[a],
                label: BehaviorLabel::DoNothing,
            });
        }
        epochs.push(LabeledEpoch {
            t_start: t[a],
            t_end: t[b],
            label: if dir > 0.0 {
                BehaviorLabel::GapOpening
            } else {
                BehaviorLabel::GapClosing
            },
        });
        cursor = b;
    }
    if cursor < n - 1 || epochs.is_empty() {
        epochs.push(LabeledEpoch {
            t_start: t[cursor],
            t_end: t[n - 1],
            label: BehaviorLabel::DoNothing,
        });
    }
    epochs
}

/// Epoch containing `t`; the final epoch also owns its end point.
pub fn epoch_at(epochs: &[LabeledEpoch], t: f64) -> Option<&LabeledEpoch> {
    epochs
        .iter()
        .find(|e| e.contains(t))
        .or_else(|| epochs.last().filter(|e| t == e.t_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(rate: f64, secs: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (secs / 0.1).round() as usize + 1;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * 0.1).collect();
        let g = t.iter().map(|&s| 2.0 + rate * s).collect();
        (t, g)
    }

    fn labels(rate: f64, secs: f64) -> Vec<BehaviorLabel> {
        let (t, g) = series(rate, secs);
        segment_behaviors(&t, &g, &SegmentOptions::default())
            .iter()
            .map(|e| e.label)
            .collect()
    }

    #[test]
    fn threshold_cases() {
        use BehaviorLabel::*;
        assert_eq!(labels(0.0, 10.0), vec![DoNothing]);
        assert_eq!(labels(0.15, 10.0), vec![GapOpening]);
        assert_eq!(labels(-0.15, 10.0), vec![GapClosing]);
        assert_eq!(labels(0.05, 10.0), vec![DoNothing]);
        assert_eq!(labels(-0.05, 10.0), vec![DoNothing]);
        assert_eq!(labels(0.2, 3.0), vec![DoNothing]);
    }

    #[test]
    fn trend_inside_flat_profile() {
        // Flat for 5 s, rising 1.5 s over 10 s, flat for 5 s.
        let t: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let g: Vec<f64> = t.iter().map(|&s| 2.0 + 0.15 * (s - 5.0).clamp(0.0, 10.0)).collect();
        let e = segment_behaviors(&t, &g, &SegmentOptions::default());
        let kinds: Vec<_> = e.iter().map(|e| e.label).collect();
        assert_eq!(kinds, vec![BehaviorLabel::DoNothing, BehaviorLabel::GapOpening, BehaviorLabel::DoNothing]);
        assert!((e[1].t_start - 5.0).abs() < 1e-9 && (e[1].t_end - 15.0).abs() < 1e-9);
    }

    #[test]
    fn slow_tail_is_trimmed() {
        // 0.15 s/s for 10 s, then 0.01 s/s for 20 s: the whole run averages
        // below the rate threshold, the first part alone clears both.
        let t: Vec<f64> = (0..=300).map(|k| k as f64 * 0.1).collect();
        let g: Vec<f64> = t
            .iter()
            .map(|&s| if s <= 10.0 { 0.15 * s } else { 1.5 + 0.01 * (s - 10.0) })
            .collect();
        let e = segment_behaviors(&t, &g, &SegmentOptions::default());
        assert_eq!(e[0].label, BehaviorLabel::GapOpening);
        assert!(e[0].t_end >= 10.0 - 1e-9);
        assert_eq!(e.last().unwrap().label, BehaviorLabel::DoNothing);
    }

    #[test]
    fn epoch_lookup() {
        let (t, g) = series(0.0, 4.0);
        let e = segment_behaviors(&t, &g, &SegmentOptions::default());
        assert!(epoch_at(&e, 0.0).is_some());
        assert!(epoch_at(&e, 4.0).is_some());
        assert!(epoch_at(&e, 4.5).is_none());
    }
}
