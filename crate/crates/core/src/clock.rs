//! Session time.
//!
//! Session time is kept as integer milliseconds since session start so that
//! threshold comparisons (idle timeout, tick cadence, alert cooldown) are exact
//! under the simulated clock. Video-relative times in recipe knowledge stay in
//! floating-point seconds.

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Milliseconds since session start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(secs: f64) -> Self {
        SimTime((secs.max(0.0) * 1000.0).round() as u64)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimSpan {
        SimSpan(self.0.saturating_sub(other.0))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}s", self.0 / 1000, self.0 % 1000)
    }
}

/// A non-negative span of session time in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimSpan(pub u64);

impl SimSpan {
    pub fn from_secs_f64(secs: f64) -> Self {
        SimSpan((secs.max(0.0) * 1000.0).round() as u64)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimSpan(ms)
    }

    pub fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Add<SimSpan> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimSpan) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub<SimTime> for SimTime {
    type Output = SimSpan;
    fn sub(self, rhs: SimTime) -> SimSpan {
        self.saturating_sub(rhs)
    }
}

/// Source of session time.
pub trait Clock: Send + Sync {
    fn now(&self) -> SimTime;
}

/// Simulated clock that only moves when told to. Clones share the same time.
#[derive(Debug, Clone, Default)]
pub struct SimClock {
    now_ms: Arc<AtomicU64>,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves the clock forward to `t`. Moving backwards is ignored.
    pub fn advance_to(&self, t: SimTime) {
        self.now_ms.fetch_max(t.0, Ordering::SeqCst);
    }

    pub fn advance_by(&self, span: SimSpan) {
        self.now_ms.fetch_add(span.0, Ordering::SeqCst);
    }
}

impl Clock for SimClock {
    fn now(&self) -> SimTime {
        SimTime(self.now_ms.load(Ordering::SeqCst))
    }
}

/// Wall-clock time measured from construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    start: Instant,
    offset: SimTime,
}

impl WallClock {
    pub fn new() -> Self {
        Self::starting_at(SimTime(0))
    }

    /// Continues a session whose clock had reached `offset`.
    pub fn starting_at(offset: SimTime) -> Self {
        Self { start: Instant::now(), offset }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> SimTime {
        SimTime(self.offset.0 + self.start.elapsed().as_millis() as u64)
    }
}
