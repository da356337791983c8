//! Byte-range retrieval of single WARC records, with an on-disk cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{sha256_hex, write_atomic};
use crate::ccindex::CaptureLocation;
use crate::http::{backoff_delay, HttpRequest, Limiter, Transport};

pub const DEFAULT_ARCHIVE_URL: &str = "https://data.commoncrawl.org";
/// Per-request timeout used by the default transport.
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPolicy {
    pub max_concurrent: usize,
    /// Minimum gap between consecutive requests on one connection slot.
    pub min_delay_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy { max_concurrent: 4, min_delay_ms: 250, max_retries: 5, backoff_base_ms: 1000, cache_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("range not satisfiable (index and archive disagree)")]
    RangeNotSatisfiable,
    #[error("archive host throttled the client (HTTP {0}) after retries")]
    Throttled(u16),
    #[error("short read: expected {expected} bytes, got {got}")]
    ShortRead { expected: u64, got: u64 },
    #[error("server ignored the Range header and sent the whole file")]
    RangeIgnored,
    #[error("archive returned HTTP {0}")]
    Status(u16),
    #[error("{0}")]
    Transport(String),
    #[error("offline mode: record not in cache")]
    Offline,
    #[error("cache: {0}")]
    Cache(String),
    #[error("capture has zero length")]
    EmptyRange,
}

impl FetchError {
    /// Stable identifier used in fetch manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            FetchError::RangeNotSatisfiable => "range-not-satisfiable",
            FetchError::Throttled(_) => "throttled",
            FetchError::ShortRead { .. } => "short-read",
            FetchError::RangeIgnored => "range-ignored",
            FetchError::Status(_) => "http-status",
            FetchError::Transport(_) => "transport",
            FetchError::Offline => "offline",
            FetchError::Cache(_) => "cache",
            FetchError::EmptyRange => "empty-range",
        }
    }
}

/// Sidecar written next to each cached record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntryMeta {
    pub crawl: String,
    pub filename: String,
    pub offset: u64,
    pub length: u64,
    pub sha256: String,
}

/// Fetches WARC records from the archive host. Shareable across threads;
/// the policy caps physical parallelism no matter how many callers there are.
pub struct ArchiveFetcher {
    base_url: String,
    crawl_id: String,
    policy: FetchPolicy,
    transport: Option<Arc<dyn Transport>>,
    limiter: Limiter,
}

impl ArchiveFetcher {
    /// `transport: None` puts the fetcher in cache-only mode.
    pub fn new(base_url: &str, crawl_id: &str, policy: FetchPolicy, transport: Option<Arc<dyn Transport>>) -> Self {
        let limiter = Limiter::new(policy.max_concurrent, Duration::from_millis(policy.min_delay_ms));
        ArchiveFetcher {
            base_url: base_url.trim_end_matches('/').to_string(),
            crawl_id: crawl_id.to_string(),
            policy,
            transport,
            limiter,
        }
    }

    pub fn is_offline(&self) -> bool {
        self.transport.is_none()
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// `<cache_dir>/<crawl>/<sha256("filename:offset:length")>.bin`
    pub fn cache_path(&self, loc: &CaptureLocation) -> Option<PathBuf> {
        let key = sha256_hex(&format!("{}:{}:{}", loc.warc_filename, loc.offset, loc.length));
        self.policy
            .cache_dir
            .as_ref()
            .map(|dir| dir.join(&self.crawl_id).join(format!("{key}.bin")))
    }

    pub fn cached(&self, loc: &CaptureLocation) -> Option<Vec<u8>> {
        let bytes = fs::read(self.cache_path(loc)?).ok()?;
        (bytes.len() as u64 == loc.length).then_some(bytes)
    }

    fn store(&self, path: &Path, loc: &CaptureLocation, bytes: &[u8]) -> Result<(), FetchError> {
        let meta = CacheEntryMeta {
            crawl: self.crawl_id.clone(),
            filename: loc.warc_filename.clone(),
            offset: loc.offset,
            length: loc.length,
            sha256: hex::encode(<sha2::Sha256 as sha2::Digest>::digest(bytes)),
        };
        let cache_err = |e: std::io::Error| FetchError::Cache(format!("{}: {e}", path.display()));
        write_atomic(path, bytes).map_err(cache_err)?;
        let meta_json = serde_json::to_vec_pretty(&meta).expect("metadata serialises");
        write_atomic(&path.with_extension("json"), &meta_json).map_err(cache_err)
    }

    /// Returns exactly `loc.length` bytes starting at `loc.offset`.
    pub fn fetch_record_bytes(&self, loc: &CaptureLocation) -> Result<Vec<u8>, FetchError> {
        if loc.length == 0 {
            return Err(FetchError::EmptyRange);
        }
        if let Some(bytes) = self.cached(loc) {
            debug!("cache hit {}@{}", loc.warc_filename, loc.offset);
            return Ok(bytes);
        }
        let Some(transport) = &self.transport else {
            return Err(FetchError::Offline);
        };
        let request = HttpRequest {
            url: format!("{}/{}", self.base_url, loc.warc_filename.trim_start_matches('/')),
            range: Some((loc.offset, loc.offset + loc.length - 1)),
            max_body: loc.length + 1,
        };
        let base = Duration::from_millis(self.policy.backoff_base_ms);
        let mut attempt = 0u32;
        let mut short_retry_used = false;
        loop {
            let reply = {
                let _permit = self.limiter.acquire();
                debug!("GET {} bytes={}-{}", request.url, loc.offset, loc.offset + loc.length - 1);
                transport.get(&request)
            };
            let failure = match reply {
                Ok(reply) if reply.status == 206 => {
                    if reply.body.len() as u64 == loc.length {
                        if let Some(path) = self.cache_path(loc) {
                            self.store(&path, loc, &reply.body)?;
                        }
                        return Ok(reply.body);
                    }
                    let err = FetchError::ShortRead { expected: loc.length, got: reply.body.len() as u64 };
                    if short_retry_used {
                        return Err(err);
                    }
                    short_retry_used = true;
                    warn!("{err}; retrying once");
                    continue;
                }
                Ok(reply) if reply.status == 200 => return Err(FetchError::RangeIgnored),
                Ok(reply) if reply.status == 416 => return Err(FetchError::RangeNotSatisfiable),
                Ok(reply) if matches!(reply.status, 429 | 503) => FetchError::Throttled(reply.status),
                Ok(reply) => return Err(FetchError::Status(reply.status)),
                Err(e) => FetchError::Transport(e.to_string()),
            };
            if attempt >= self.policy.max_retries {
                return Err(failure);
            }
            let delay = backoff_delay(base, attempt);
            warn!("{failure}; retrying in {delay:?}");
            std::thread::sleep(delay);
            attempt += 1;
        }
    }
}
