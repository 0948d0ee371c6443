//! Token-spaced rate limiting with an injectable clock.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Time source, injectable so limiter behavior is testable without real
/// sleeps.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Admits at most `rate` acquisitions per second by spacing them at least
/// `1/rate` apart (bucket capacity one: no bursts, so the observed rate
/// never exceeds the configured limit on any window).
pub struct RateLimiter {
    min_interval: Duration,
    clock: Arc<dyn Clock>,
    next_allowed: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `rate` is requests per second and must be positive.
    pub fn new(rate: f64) -> Self {
        Self::with_clock(rate, Arc::new(SystemClock))
    }

    pub fn with_clock(rate: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(rate > 0.0, "rate limit must be positive, got {rate}");
        Self {
            min_interval: Duration::from_secs_f64(1.0 / rate),
            clock,
            next_allowed: Mutex::new(None),
        }
    }

    /// Block until a slot is available.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_allowed.lock().expect("limiter lock poisoned");
            let now = self.clock.now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.min_interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            self.clock.sleep(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Virtual clock: `sleep` advances time instead of blocking.
    struct FakeClock {
        base: Instant,
        elapsed: Mutex<Duration>,
    }

    impl FakeClock {
        fn new() -> Self {
            Self {
                base: Instant::now(),
                elapsed: Mutex::new(Duration::ZERO),
            }
        }

        fn elapsed(&self) -> Duration {
            *self.elapsed.lock().unwrap()
        }
    }

    impl Clock for FakeClock {
        fn now(&self) -> Instant {
            self.base + *self.elapsed.lock().unwrap()
        }

        fn sleep(&self, duration: Duration) {
            *self.elapsed.lock().unwrap() += duration;
        }
    }

    #[test]
    fn observed_rate_never_exceeds_limit() {
        let clock = Arc::new(FakeClock::new());
        let limiter = RateLimiter::with_clock(5.0, clock.clone());
        for _ in 0..11 {
            limiter.acquire();
        }
        // 11 admissions at 5/s require at least 2 virtual seconds after the
        // first immediate one.
        let elapsed = clock.elapsed();
        assert!(
            elapsed >= Duration::from_millis(1999),
            "only {elapsed:?} elapsed for 11 admissions at 5/s"
        );
    }

    #[test]
    fn idle_limiter_admits_immediately() {
        let clock = Arc::new(FakeClock::new());
        let limiter = RateLimiter::with_clock(2.0, clock.clone());
        limiter.acquire();
        assert_eq!(clock.elapsed(), Duration::ZERO);
    }

    #[test]
    #[should_panic(expected = "rate limit must be positive")]
    fn zero_rate_is_rejected() {
        let _ = RateLimiter::new(0.0);
    }
}
