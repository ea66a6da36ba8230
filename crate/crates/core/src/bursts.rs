//! Threshold excursions of a sampled signal.
//!
//! The signal is treated as piecewise linear between samples: crossing times
//! are interpolated and the size is the exact integral of `(x - h)+` over the
//! linear interpolant. Excursions touching either end of the series are
//! dropped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub t_start: f64,
    pub t_end: f64,
    pub duration: f64,
    pub peak: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BurstSequence {
    pub threshold: f64,
    pub bursts: Vec<Burst>,
}

impl BurstSequence {
    pub fn len(&self) -> usize {
        self.bursts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bursts.is_empty()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.bursts.iter().map(|b| b.duration).collect()
    }

    /// Quiet time between consecutive bursts.
    pub fn inter_burst(&self) -> Vec<f64> {
        self.bursts.windows(2).map(|w| w[1].t_start - w[0].t_end).collect()
    }

    /// Start-to-start time between consecutive bursts.
    pub fn waiting(&self) -> Vec<f64> {
        self.bursts.windows(2).map(|w| w[1].t_start - w[0].t_start).collect()
    }
}

#[inline]
fn crossing(t0: f64, x0: f64, t1: f64, x1: f64, h: f64) -> f64 {
    t0 + (h - x0) / (x1 - x0) * (t1 - t0)
}

#[derive(Debug, Clone, Copy)]
struct Open {
    t_start: f64,
    size: f64,
    peak: f64,
}

/// Online detector; feed samples in time order with [`BurstDetector::push`].
#[derive(Debug, Clone)]
pub struct BurstDetector {
    h: f64,
    prev: Option<(f64, f64)>,
    open: Option<Open>,
}

impl BurstDetector {
    pub fn new(h: f64) -> Self {
        Self { h, prev: None, open: None }
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    /// Returns the burst completed by this sample, if any.
    #[inline]
    pub fn push(&mut self, t: f64, x: f64) -> Option<Burst> {
        let h = self.h;
        let mut done = None;
        if let Some((tp, xp)) = self.prev {
            match (xp > h, x > h) {
                (false, true) => {
                    let tc = crossing(tp, xp, t, x, h);
                    self.open = Some(Open { t_start: tc, size: 0.5 * (x - h) * (t - tc), peak: x });
                }
                (true, true) => {
                    if let Some(o) = self.open.as_mut() {
                        o.size += 0.5 * ((xp - h) + (x - h)) * (t - tp);
                        o.peak = o.peak.max(x);
                    }
                }
                (true, false) => {
                    if let Some(o) = self.open.take() {
                        let tc = crossing(tp, xp, t, x, h);
                        let size = o.size + 0.5 * (xp - h) * (tc - tp);
                        done = Some(Burst {
                            t_start: o.t_start,
                            t_end: tc,
                            duration: tc - o.t_start,
                            peak: o.peak,
                            size,
                        });
                    }
                }
                (false, false) => {}
            }
        }
        self.prev = Some((t, x));
        done
    }
}

/// Detects complete bursts above `h` in a time-ordered sample stream.
pub fn detect_bursts<I>(samples: I, h: f64) -> Result<BurstSequence>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut det = BurstDetector::new(h);
    let mut n = 0usize;
    let mut bursts = Vec::new();
    for (t, x) in samples {
        n += 1;
        if let Some(b) = det.push(t, x) {
            bursts.push(b);
        }
    }
    if n < 2 {
        return invalid("burst detection needs at least two samples");
    }
    Ok(BurstSequence { threshold: h, bursts })
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    t_end: f64,
    size: f64,
    peak: f64,
}

#[derive(Debug, Default)]
struct Shard {
    head: Option<Partial>,
    all_above: Option<(f64, f64)>,
    bursts: Vec<Burst>,
    tail: Option<Open>,
}

fn scan(t: &[f64], x: &[f64], h: f64) -> Shard {
    let mut out = Shard::default();
    let starts_above = x[0] > h;
    let mut head_size = 0.0;
    let mut head_peak = x[0];
    let mut in_head = starts_above;
    let mut det = BurstDetector::new(h);
    det.push(t[0], x[0]);
    for i in 1..t.len() {
        if in_head {
            let (tp, xp, tn, xn) = (t[i - 1], x[i - 1], t[i], x[i]);
            if xn > h {
                head_size += 0.5 * ((xp - h) + (xn - h)) * (tn - tp);
                head_peak = head_peak.max(xn);
            } else {
                let tc = crossing(tp, xp, tn, xn, h);
                head_size += 0.5 * (xp - h) * (tc - tp);
                out.head = Some(Partial { t_end: tc, size: head_size, peak: head_peak });
                in_head = false;
            }
        }
        if let Some(b) = det.push(t[i], x[i]) {
            out.bursts.push(b);
        }
    }
    if in_head {
        out.all_above = Some((head_size, head_peak));
    } else {
        out.tail = det.open;
    }
    out
}

/// Same result as [`detect_bursts`] up to rounding, computed on `shards`
/// overlapping pieces in parallel and stitched at the joins.
pub fn detect_bursts_sharded(t: &[f64], x: &[f64], h: f64, shards: usize) -> Result<BurstSequence> {
    if t.len() != x.len() {
        return invalid("time and value columns differ in length");
    }
    if t.len() < 2 {
        return invalid("burst detection needs at least two samples");
    }
    let shards = shards.clamp(1, t.len() - 1);
    let step = (t.len() - 1).div_ceil(shards);
    let bounds: Vec<(usize, usize)> = (0..shards)
        .map(|s| (s * step, ((s + 1) * step).min(t.len() - 1)))
        .filter(|(a, b)| a < b)
        .collect();
    let parts: Vec<Shard> = bounds.par_iter().map(|&(a, b)| scan(&t[a..=b], &x[a..=b], h)).collect();

    let mut bursts = Vec::new();
    let mut carry: Option<Open> = None;
    for (i, part) in parts.into_iter().enumerate() {
        if i > 0 {
            if let Some((size, peak)) = part.all_above {
                if let Some(c) = carry.as_mut() {
                    c.size += size;
                    c.peak = c.peak.max(peak);
                }
                continue;
            }
            if let (Some(c), Some(hd)) = (carry.take(), part.head) {
                bursts.push(Burst {
                    t_start: c.t_start,
                    t_end: hd.t_end,
                    duration: hd.t_end - c.t_start,
                    peak: c.peak.max(hd.peak),
                    size: c.size + hd.size,
                });
            }
        } else if part.all_above.is_some() {
            continue;
        }
        bursts.extend(part.bursts);
        carry = part.tail;
    }
    Ok(BurstSequence { threshold: h, bursts })
}
