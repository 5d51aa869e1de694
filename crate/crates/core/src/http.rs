//! Blocking HTTP helpers: bounded retries with exponential backoff, a
//! token-bucket rate limiter, and a bounded-parallelism map.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    #[serde(default = "RetryPolicy::default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "RetryPolicy::default_initial_backoff_ms")]
    pub initial_backoff_ms: u64,
    /// Total wall-clock budget across all attempts.
    #[serde(default = "RetryPolicy::default_timeout_ms")]
    pub timeout_ms: u64,
}

impl RetryPolicy {
    fn default_max_retries() -> u32 {
        5
    }
    fn default_initial_backoff_ms() -> u64 {
        500
    }
    fn default_timeout_ms() -> u64 {
        60_000
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: Self::default_max_retries(),
            initial_backoff_ms: Self::default_initial_backoff_ms(),
            timeout_ms: Self::default_timeout_ms(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpOutcome {
    pub status: u16,
    pub body: String,
    pub attempts: u32,
    pub elapsed: Duration,
}

fn retryable(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Runs `send` until it yields a non-retryable status, the retry count is
/// exhausted, or the time budget runs out. `send` receives the remaining
/// budget to use as its per-request timeout.
///
/// Non-retryable statuses (2xx, most 4xx) are returned to the caller.
pub fn call_with_retry<S>(policy: &RetryPolicy, mut send: S) -> Result<HttpOutcome>
where
    S: FnMut(Duration) -> std::result::Result<ureq::Response, ureq::Error>,
{
    let start = Instant::now();
    let budget = Duration::from_millis(policy.timeout_ms);
    let mut attempts = 0u32;
    let mut backoff = Duration::from_millis(policy.initial_backoff_ms);
    loop {
        let remaining = budget.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            return Err(Error::Transport {
                message: "time budget exhausted".into(),
                elapsed_ms: start.elapsed().as_millis() as u64,
                attempts,
            });
        }
        attempts += 1;
        let failure = match send(remaining) {
            Ok(resp) => return finish(resp, attempts, start),
            Err(ureq::Error::Status(code, resp)) if !retryable(code) => {
                return finish(resp, attempts, start)
            }
            Err(ureq::Error::Status(code, _)) => format!("HTTP {code}"),
            Err(ureq::Error::Transport(t)) => t.to_string(),
        };
        if attempts > policy.max_retries {
            return Err(Error::Transport {
                message: failure,
                elapsed_ms: start.elapsed().as_millis() as u64,
                attempts,
            });
        }
        log::debug!("attempt {attempts} failed ({failure}); retrying in {backoff:?}");
        let remaining = budget.saturating_sub(start.elapsed());
        std::thread::sleep(backoff.min(remaining));
        backoff = backoff.saturating_mul(2);
    }
}

fn finish(resp: ureq::Response, attempts: u32, start: Instant) -> Result<HttpOutcome> {
    let status = resp.status();
    let body = resp.into_string().map_err(|e| Error::Transport {
        message: format!("reading response body: {e}"),
        elapsed_ms: start.elapsed().as_millis() as u64,
        attempts,
    })?;
    if attempts > 1 {
        log::info!("request succeeded after {} retries", attempts - 1);
    }
    Ok(HttpOutcome {
        status,
        body,
        attempts,
        elapsed: start.elapsed(),
    })
}

/// Token bucket: `capacity` burst, refilled at `per_second` tokens/s.
#[derive(Debug)]
pub struct RateLimiter {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_second: f64, capacity: f64) -> Self {
        assert!(per_second > 0.0 && capacity >= 1.0);
        Self {
            capacity,
            per_second,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Blocks until a token is available and takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.per_second;
                state.0 = (state.0 + refill).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - state.0) / self.per_second)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Maps `f` over `items` with at most `parallelism` worker threads. Output
/// order matches input order regardless of completion order.
pub fn parallel_map<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = parallelism.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Percent-encodes everything except RFC 3986 unreserved characters.
pub fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(b as char)
            }
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}
