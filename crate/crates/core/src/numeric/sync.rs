use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Monotone progress counter shared between one producer and any number of
/// consumers. Publishing uses release ordering, observing uses acquire, so
/// everything written before a publish is visible after the matching wait.
#[derive(Debug, Default)]
pub struct SyncCell(AtomicU64);

impl SyncCell {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&self, value: u64) {
        let prev = self.0.swap(value, Ordering::Release);
        debug_assert!(prev <= value, "progress counter went back from {prev} to {value}");
    }

    pub fn observe(&self) -> u64 {
        self.0.load(Ordering::Acquire)
    }

    /// Blocks until the counter reaches `value`. Returns false if `abort` is
    /// raised first.
    pub fn wait_for(&self, value: u64, abort: &AtomicBool) -> bool {
        let mut spins = 0u32;
        while self.observe() < value {
            if abort.load(Ordering::Relaxed) {
                return false;
            }
            if spins < 64 {
                std::hint::spin_loop();
                spins += 1;
            } else {
                std::thread::yield_now();
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn publish_then_observe() {
        let c = SyncCell::new();
        assert_eq!(c.observe(), 0);
        c.publish(3);
        assert!(c.wait_for(2, &AtomicBool::new(false)));
    }

    #[test]
    fn abort_releases_waiter() {
        let c = SyncCell::new();
        assert!(!c.wait_for(1, &AtomicBool::new(true)));
    }

    #[test]
    fn data_is_visible_after_wait() {
        let cell = Arc::new(SyncCell::new());
        let slot = Arc::new(std::sync::OnceLock::new());
        let (c2, s2) = (cell.clone(), slot.clone());
        let h = std::thread::spawn(move || {
            s2.set(42u32).unwrap();
            c2.publish(1);
        });
        assert!(cell.wait_for(1, &AtomicBool::new(false)));
        assert_eq!(slot.get(), Some(&42));
        h.join().unwrap();
    }
}
