//! Distance-evaluation counting.
//!
//! The counter is thread-local: each thread sees only the evaluations it
//! performed itself, so concurrent test threads and oracle workers never
//! pollute one another's counts. Counting is off until [`enable`] is called
//! on the current thread.

use std::cell::Cell;

thread_local! {
    static ENABLED: Cell<bool> = const { Cell::new(false) };
    static DISTANCE_EVALS: Cell<u64> = const { Cell::new(0) };
}

/// Turns counting on for the current thread and zeroes the counter.
pub fn enable() {
    ENABLED.with(|e| e.set(true));
    reset();
}

pub fn disable() {
    ENABLED.with(|e| e.set(false));
}

pub fn reset() {
    DISTANCE_EVALS.with(|c| c.set(0));
}

pub fn distance_evals() -> u64 {
    DISTANCE_EVALS.with(Cell::get)
}

#[inline]
pub(crate) fn record_distance() {
    ENABLED.with(|e| {
        if e.get() {
            DISTANCE_EVALS.with(|c| c.set(c.get() + 1));
        }
    });
}

/// Runs `f` with counting enabled and returns its result together with the
/// number of distance evaluations it made. Nested scopes add their count to
/// the enclosing one if that was counting.
pub fn count_distances<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let was_enabled = ENABLED.with(Cell::get);
    let saved = distance_evals();
    ENABLED.with(|e| e.set(true));
    reset();
    let out = f();
    let evals = distance_evals();
    let restored = if was_enabled { saved + evals } else { saved };
    DISTANCE_EVALS.with(|c| c.set(restored));
    ENABLED.with(|e| e.set(was_enabled));
    (out, evals)
}

/// Runs `f` with counting suspended.
pub fn paused<R>(f: impl FnOnce() -> R) -> R {
    let was_enabled = ENABLED.with(Cell::get);
    ENABLED.with(|e| e.set(false));
    let out = f();
    ENABLED.with(|e| e.set(was_enabled));
    out
}
