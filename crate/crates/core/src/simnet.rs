//! Deterministic discrete-event machinery: worker response-time models and a
//! time-ordered event queue with a total tie-break order.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lagrange::WorkerId;

/// Base response-time law of a worker.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SpeedModel {
    /// Always `latency`.
    Fixed { latency: f64 },
    /// `shift + Exp(rate)`.
    ShiftedExp { shift: f64, rate: f64 },
}

/// A worker's speed model with an optional time-varying speed schedule.
///
/// `schedule` holds `(from_time, factor)` pairs; from `from_time` on the
/// worker runs `factor` times faster. Before the first entry the factor is 1.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkerModel {
    pub base: SpeedModel,
    #[cfg_attr(feature = "serde", serde(default))]
    pub schedule: Vec<(f64, f64)>,
}

impl WorkerModel {
    pub fn fixed(latency: f64) -> Self {
        Self {
            base: SpeedModel::Fixed { latency },
            schedule: Vec::new(),
        }
    }

    pub fn shifted_exp(shift: f64, rate: f64) -> Self {
        Self {
            base: SpeedModel::ShiftedExp { shift, rate },
            schedule: Vec::new(),
        }
    }

    pub fn with_schedule(mut self, schedule: Vec<(f64, f64)>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.base {
            SpeedModel::Fixed { latency } if !(latency > 0.0 && latency.is_finite()) => {
                return Err(Error::InvalidArgument(format!(
                    "fixed latency must be positive, got {latency}"
                )))
            }
            SpeedModel::ShiftedExp { shift, rate } if !(shift >= 0.0 && shift.is_finite() && rate > 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "shifted exponential needs shift >= 0 and rate > 0, got {shift}, {rate}"
                )))
            }
            _ => {}
        }
        if self.schedule.iter().any(|&(_, f)| !(f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidArgument("speed factors must be positive".into()));
        }
        if self.schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument(
                "schedule times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Speed factor in effect at `now`.
    pub fn factor(&self, now: f64) -> f64 {
        self.schedule
            .iter()
            .take_while(|(from, _)| *from <= now)
            .last()
            .map_or(1.0, |&(_, f)| f)
    }

    /// Expected response time for a task started at `now`.
    pub fn mean(&self, now: f64) -> f64 {
        let factor = self.factor(now);
        match self.base {
            SpeedModel::Fixed { latency } => latency / factor,
            SpeedModel::ShiftedExp { shift, rate } => shift + 1.0 / (rate * factor),
        }
    }
}

/// Response time of a task dispatched at `now`: `latency / factor` for fixed
/// models, `shift + Exp(rate) / factor` for shifted exponential ones.
pub fn sample_response_time<R: Rng + ?Sized>(model: &WorkerModel, now: f64, rng: &mut R) -> f64 {
    let factor = model.factor(now);
    match model.base {
        SpeedModel::Fixed { latency } => latency / factor,
        SpeedModel::ShiftedExp { shift, rate } => {
            let u: f64 = rng.gen();
            shift + (-libm::log(1.0 - u) / rate) / factor
        }
    }
}

/// Tie-break class at equal times: worker events first (ordered by worker id),
/// then master timers.
pub const TIMER_TIE: u64 = 1 << 62;

struct Entry<E> {
    time: f64,
    tie: u64,
    seq: u64,
    event: E,
}

impl<E> Entry<E> {
    fn key(&self) -> (f64, u64, u64) {
        (self.time, self.tie, self.seq)
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2))
    }
}

/// Event queue popping in `(time, tie, insertion sequence)` order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    seq: u64,
    now: f64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
        }
    }

    /// Current simulated time (time of the last popped event).
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event` at `time`; scheduling into the past is an error.
    pub fn push(&mut self, time: f64, tie: u64, event: E) -> Result<()> {
        if !(time >= self.now) {
            return Err(Error::State(format!(
                "event at {time} scheduled before current time {}",
                self.now
            )));
        }
        self.heap.push(Entry {
            time,
            tie,
            seq: self.seq,
            event,
        });
        self.seq += 1;
        Ok(())
    }

    /// Pops the next event; `None` means the simulation has nothing left.
    pub fn step(&mut self) -> Option<(f64, E)> {
        let e = self.heap.pop()?;
        debug_assert!(e.time >= self.now);
        self.now = e.time;
        Some((e.time, e.event))
    }
}

/// One line of the optional event trace.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub worker: Option<WorkerId>,
    pub round: usize,
    pub cluster: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TraceKind {
    TaskDispatched,
    ResultReady,
    ClusterFormed,
    Interpolated,
    Decoded,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_model_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = WorkerModel::fixed(5.0);
        for t in [0.0, 3.0, 100.0] {
            assert_eq!(sample_response_time(&m, t, &mut rng), 5.0);
        }
    }

    #[test]
    fn infinite_rate_collapses_to_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = WorkerModel::shifted_exp(2.5, f64::INFINITY);
        for _ in 0..100 {
            assert_eq!(sample_response_time(&m, 0.0, &mut rng), 2.5);
        }
    }

    #[test]
    fn exp_mean_with_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = WorkerModel::shifted_exp(1.0, 0.5).with_schedule(alloc::vec![(10.0, 2.0)]);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_response_time(&m, 20.0, &mut rng)).sum::<f64>() / n as f64;
        let expect = 1.0 + 1.0 / (0.5 * 2.0);
        assert!((mean - expect).abs() / expect < 0.01, "{mean} vs {expect}");
        assert_eq!(m.mean(20.0), expect);
        assert_eq!(m.factor(5.0), 1.0);
    }

    #[test]
    fn validation() {
        assert!(WorkerModel::fixed(0.0).validate().is_err());
        assert!(WorkerModel::shifted_exp(-1.0, 1.0).validate().is_err());
        assert!(WorkerModel::shifted_exp(1.0, 0.0).validate().is_err());
        assert!(WorkerModel::fixed(1.0)
            .with_schedule(alloc::vec![(2.0, 1.0), (1.0, 2.0)])
            .validate()
            .is_err());
        assert!(WorkerModel::fixed(1.0)
            .with_schedule(alloc::vec![(1.0, 0.0)])
            .validate()
            .is_err());
        assert!(WorkerModel::fixed(1.0).validate().is_ok());
    }

    #[test]
    fn queue_orders_by_time_then_worker() {
        let mut q = EventQueue::new();
        q.push(2.0, 3, "w3@2").unwrap();
        q.push(1.0, 7, "w7@1").unwrap();
        q.push(2.0, 1, "w1@2").unwrap();
        q.push(2.0, TIMER_TIE, "timer@2").unwrap();
        q.push(2.0, 1, "w1@2 again").unwrap();
        let order: Vec<_> = core::iter::from_fn(|| q.step().map(|e| e.1)).collect();
        assert_eq!(order, ["w7@1", "w1@2", "w1@2 again", "w3@2", "timer@2"]);
        assert!(q.step().is_none());
    }

    #[test]
    fn queue_rejects_past() {
        let mut q = EventQueue::new();
        q.push(5.0, 0, ()).unwrap();
        q.step();
        assert_eq!(q.now(), 5.0);
        assert!(q.push(4.0, 0, ()).is_err());
        assert!(q.push(5.0, 0, ()).is_ok());
    }
}
