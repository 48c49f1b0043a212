use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{max_rspeed, max_speed, AxisymField, ScalarField};
use crate::frame::reconstruct_cartesian;

/// One published time level. Immutable once pushed.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: Arc<AxisymField>,
    pub pressure: Arc<ScalarField>,
    /// `sup |v|` over every observed state with time `<= t`.
    pub running_max_speed: f64,
    /// `sup r |v|` over every observed state with time `<= t`.
    pub running_max_rspeed: f64,
}

/// Time-ordered ring buffer of snapshots.
///
/// The running suprema survive eviction, so a snapshot always knows the
/// maxima over all earlier times even when those levels are gone.
#[derive(Debug, Clone)]
pub struct SnapshotHistory {
    capacity: usize,
    snapshots: VecDeque<Snapshot>,
    seen_speed: f64,
    seen_rspeed: f64,
}

impl SnapshotHistory {
    pub fn new(capacity: usize) -> Self {
        SnapshotHistory {
            capacity: capacity.max(1),
            snapshots: VecDeque::new(),
            seen_speed: 0.0,
            seen_rspeed: 0.0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter()
    }

    pub fn get(&self, index: usize) -> Option<&Snapshot> {
        self.snapshots.get(index)
    }

    pub fn first(&self) -> Option<&Snapshot> {
        self.snapshots.front()
    }

    pub fn last(&self) -> Option<&Snapshot> {
        self.snapshots.back()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Folds maxima of an intermediate state (e.g. a solver step that is not
    /// published) into the running suprema.
    pub fn observe(&mut self, speed: f64, rspeed: f64) {
        self.seen_speed = self.seen_speed.max(speed);
        self.seen_rspeed = self.seen_rspeed.max(rspeed);
    }

    pub fn push(&mut self, t: f64, field: AxisymField, pressure: ScalarField) -> Result<()> {
        let q = max_speed(&field).value;
        let r = max_rspeed(&field).value;
        self.observe(q, r);
        let (ms, mr) = (self.seen_speed, self.seen_rspeed);
        self.push_with_maxima(t, field, pressure, ms, mr)
    }

    /// Pushes a snapshot whose running suprema are already known (used when
    /// reloading a history from disk).
    pub fn push_with_maxima(
        &mut self,
        t: f64,
        field: AxisymField,
        pressure: ScalarField,
        running_max_speed: f64,
        running_max_rspeed: f64,
    ) -> Result<()> {
        if let Some(last) = self.snapshots.back() {
            if t <= last.t {
                return Err(Error::NonIncreasingTime {
                    previous: last.t,
                    next: t,
                });
            }
        }
        self.seen_speed = self.seen_speed.max(running_max_speed);
        self.seen_rspeed = self.seen_rspeed.max(running_max_rspeed);
        self.snapshots.push_back(Snapshot {
            t,
            field: Arc::new(field),
            pressure: Arc::new(pressure),
            running_max_speed: self.seen_speed,
            running_max_rspeed: self.seen_rspeed,
        });
        while self.snapshots.len() > self.capacity {
            self.snapshots.pop_front();
        }
        Ok(())
    }

    /// Indices `(lo, hi, s)` such that `t = (1 - s) t_lo + s t_hi`; exact hits
    /// return `lo == hi`.
    pub fn bracket(&self, t: f64) -> Result<(usize, usize, f64)> {
        let n = self.snapshots.len();
        if n == 0 {
            return Err(Error::EmptyHistory);
        }
        let first = self.snapshots[0].t;
        let last = self.snapshots[n - 1].t;
        if !(t >= first && t <= last) {
            return Err(Error::OutOfHistory { t, first, last });
        }
        let hi = self.snapshots.partition_point(|s| s.t < t);
        if self.snapshots[hi].t == t {
            return Ok((hi, hi, 0.0));
        }
        let lo = hi - 1;
        let (t0, t1) = (self.snapshots[lo].t, self.snapshots[hi].t);
        Ok((lo, hi, (t - t0) / (t1 - t0)))
    }

    /// Cartesian velocity at `(x, t)`: bilinear in space, linear in time.
    pub fn sample(&self, x: [f64; 3], t: f64) -> Result<[f64; 3]> {
        let (lo, hi, s) = self.bracket(t)?;
        let a = reconstruct_cartesian(&self.snapshots[lo].field, x)?;
        if lo == hi {
            return Ok(a);
        }
        let b = reconstruct_cartesian(&self.snapshots[hi].field, x)?;
        Ok([
            a[0] + s * (b[0] - a[0]),
            a[1] + s * (b[1] - a[1]),
            a[2] + s * (b[2] - a[2]),
        ])
    }
}
