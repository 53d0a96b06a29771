//! Per-thread kernel call counters.
//!
//! Every O(n³) kernel (factorization, eigensolve, dense product, matrix
//! triangular solve) bumps `cubic_calls`; elementwise O(n²) work bumps
//! `quadratic_calls`. The counters are thread-local, so a solver run that owns
//! its thread observes only its own work. Use [`CounterScope`] to measure a
//! region of code.

use std::cell::Cell;

thread_local! {
    static CUBIC: Cell<u64> = const { Cell::new(0) };
    static QUADRATIC: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn count_cubic() {
    CUBIC.with(|c| c.set(c.get() + 1));
}

#[inline]
pub(crate) fn count_quadratic() {
    QUADRATIC.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelCounters {
    pub cubic_calls: u64,
    pub quadratic_calls: u64,
}

impl KernelCounters {
    /// Current totals for this thread.
    pub fn snapshot() -> Self {
        Self {
            cubic_calls: CUBIC.with(Cell::get),
            quadratic_calls: QUADRATIC.with(Cell::get),
        }
    }

    fn delta(self, earlier: Self) -> Self {
        Self {
            cubic_calls: self.cubic_calls - earlier.cubic_calls,
            quadratic_calls: self.quadratic_calls - earlier.quadratic_calls,
        }
    }
}

impl std::ops::AddAssign for KernelCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.cubic_calls += rhs.cubic_calls;
        self.quadratic_calls += rhs.quadratic_calls;
    }
}

/// Measures kernel calls made on the current thread since `begin`.
#[derive(Debug, Clone, Copy)]
pub struct CounterScope {
    start: KernelCounters,
}

impl CounterScope {
    pub fn begin() -> Self {
        Self {
            start: KernelCounters::snapshot(),
        }
    }

    pub fn counts(&self) -> KernelCounters {
        KernelCounters::snapshot().delta(self.start)
    }
}
