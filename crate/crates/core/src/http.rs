//! Blocking HTTP plumbing shared by the index client and the archive fetcher.
//!
//! Both talk to the network only through [`Transport`], so tests can swap in
//! a recording fake and offline runs can omit the transport entirely.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

/// Upper bound on any single backoff sleep.
pub const MAX_BACKOFF: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    /// Inclusive byte range.
    pub range: Option<(u64, u64)>,
    /// Bodies are truncated to this many bytes.
    pub max_body: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    /// Empty when a ranged request came back as a plain `200`: the transport
    /// must not buffer a whole archive file.
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Other(String),
}

pub trait Transport: Send + Sync {
    fn get(&self, request: &HttpRequest) -> Result<HttpReply, TransportError>;
}

/// `base * 2^attempt`, capped at [`MAX_BACKOFF`].
pub fn backoff_delay(base: Duration, attempt: u32) -> Duration {
    let factor = 1u32.checked_shl(attempt.min(31)).unwrap_or(u32::MAX);
    base.checked_mul(factor).unwrap_or(MAX_BACKOFF).min(MAX_BACKOFF)
}

/// Bounds in-flight requests and spaces consecutive requests on each slot.
#[derive(Debug)]
pub struct Limiter {
    min_delay: Duration,
    slots: Mutex<Slots>,
    available: Condvar,
}

#[derive(Debug)]
struct Slots {
    free: Vec<usize>,
    last_used: Vec<Option<Instant>>,
}

pub struct Permit<'a> {
    limiter: &'a Limiter,
    slot: usize,
}

impl Limiter {
    pub fn new(max_concurrent: usize, min_delay: Duration) -> Self {
        let n = max_concurrent.max(1);
        Limiter {
            min_delay,
            slots: Mutex::new(Slots { free: (0..n).rev().collect(), last_used: vec![None; n] }),
            available: Condvar::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.lock().unwrap_or_else(|e| e.into_inner()).last_used.len()
    }

    /// Blocks until a slot is free and its spacing delay has elapsed.
    pub fn acquire(&self) -> Permit<'_> {
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        let slot = loop {
            if let Some(slot) = slots.free.pop() {
                break slot;
            }
            slots = self.available.wait(slots).unwrap_or_else(|e| e.into_inner());
        };
        let last = slots.last_used[slot];
        drop(slots);
        if let Some(last) = last {
            let ready = last + self.min_delay;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        Permit { limiter: self, slot }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut slots = self.limiter.slots.lock().unwrap_or_else(|e| e.into_inner());
        slots.last_used[self.slot] = Some(Instant::now());
        slots.free.push(self.slot);
        self.limiter.available.notify_one();
    }
}

#[cfg(feature = "http")]
pub use self::ureq_transport::UreqTransport;

#[cfg(feature = "http")]
mod ureq_transport {
    use std::io::Read;
    use std::time::Duration;

    use super::{HttpReply, HttpRequest, Transport, TransportError};

    /// HTTPS transport backed by `ureq`.
    pub struct UreqTransport {
        agent: ureq::Agent,
    }

    impl UreqTransport {
        pub fn new(user_agent: &str, timeout: Duration) -> Self {
            let config = ureq::Agent::config_builder()
                .http_status_as_error(false)
                .timeout_global(Some(timeout))
                .user_agent(user_agent)
                .build();
            UreqTransport { agent: config.into() }
        }
    }

    impl Transport for UreqTransport {
        fn get(&self, request: &HttpRequest) -> Result<HttpReply, TransportError> {
            let mut builder = self.agent.get(&request.url);
            if let Some((start, end)) = request.range {
                builder = builder.header("Range", format!("bytes={start}-{end}"));
            }
            let mut response = builder.call().map_err(|e| match e {
                ureq::Error::Timeout(_) => TransportError::Timeout,
                other => TransportError::Other(other.to_string()),
            })?;
            let status = response.status().as_u16();
            if request.range.is_some() && status == 200 {
                return Ok(HttpReply { status, body: Vec::new() });
            }
            let mut body = Vec::new();
            response
                .body_mut()
                .as_reader()
                .take(request.max_body)
                .read_to_end(&mut body)
                .map_err(|e| TransportError::Other(e.to_string()))?;
            Ok(HttpReply { status, body })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn backoff_doubles_and_caps() {
        let base = Duration::from_millis(1000);
        assert_eq!(backoff_delay(base, 0), Duration::from_secs(1));
        assert_eq!(backoff_delay(base, 3), Duration::from_secs(8));
        assert_eq!(backoff_delay(base, 6), MAX_BACKOFF);
        assert_eq!(backoff_delay(base, 200), MAX_BACKOFF);
    }

    #[test]
    fn limiter_bounds_concurrency() {
        let limiter = Arc::new(Limiter::new(3, Duration::ZERO));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..12 {
                let (limiter, active, peak) = (limiter.clone(), active.clone(), peak.clone());
                s.spawn(move || {
                    let _permit = limiter.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 3);
    }

    #[test]
    fn limiter_spaces_requests_on_a_slot() {
        let limiter = Limiter::new(1, Duration::from_millis(30));
        let start = Instant::now();
        drop(limiter.acquire());
        drop(limiter.acquire());
        drop(limiter.acquire());
        assert!(start.elapsed() >= Duration::from_millis(60));
    }
}
