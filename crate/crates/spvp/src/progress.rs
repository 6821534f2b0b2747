//! Progress lines on standard error.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

static QUIET: AtomicBool = AtomicBool::new(false);

const INTERVAL: Duration = Duration::from_secs(2);

pub fn set_quiet(quiet: bool) {
    QUIET.store(quiet, Ordering::Relaxed);
}

pub fn note(stage: &str, message: &str) {
    if !QUIET.load(Ordering::Relaxed) {
        eprintln!("[{stage}] {message}");
    }
}

/// Counts items done in a stage and reports at most every couple of
/// seconds, plus once on completion.
pub struct Progress {
    stage: &'static str,
    total: usize,
    done: AtomicUsize,
    start: Instant,
    last_report_ms: AtomicU64,
}

impl Progress {
    pub fn new(stage: &'static str, total: usize) -> Self {
        Self { stage, total, done: AtomicUsize::new(0), start: Instant::now(), last_report_ms: AtomicU64::new(0) }
    }

    pub fn inc(&self) {
        let done = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        let now = self.start.elapsed().as_millis() as u64;
        let last = self.last_report_ms.load(Ordering::Relaxed);
        if now >= last + INTERVAL.as_millis() as u64
            && self.last_report_ms.compare_exchange(last, now, Ordering::Relaxed, Ordering::Relaxed).is_ok()
            && done < self.total
        {
            self.report(done);
        }
    }

    pub fn finish(&self) {
        self.report(self.done.load(Ordering::Relaxed));
    }

    fn report(&self, done: usize) {
        let secs = self.start.elapsed().as_secs_f64();
        let rate = if secs > 0.0 { done as f64 / secs } else { 0.0 };
        note(self.stage, &format!("{done}/{} items, {rate:.1}/s, {secs:.1}s", self.total));
    }
}
