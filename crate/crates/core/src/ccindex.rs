//! Homepage lookup in a crawl's URL index.
//!
//! Live lookups go through the per-crawl CDX endpoint
//! (`https://index.commoncrawl.org/<crawl>-index`), which returns one JSON
//! object per capture. [`emit_athena_sql`] renders the equivalent query
//! against the columnar index for users with Athena access; both routes feed
//! the same selection rule, [`select_homepage`].

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use url::Url;

use crate::cache::{sha256_hex, write_atomic};
use crate::http::{backoff_delay, HttpRequest, Limiter, Transport, TransportError};

pub const DEFAULT_INDEX_URL: &str = "https://index.commoncrawl.org";

/// Where one capture lives inside the archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureLocation {
    pub url: String,
    pub timestamp: String,
    pub warc_filename: String,
    pub offset: u64,
    pub length: u64,
    pub status: u16,
    pub mime_detected: String,
    pub digest: String,
}

/// Ordering key for homepage candidates; larger is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CandidateRanking {
    pub path_is_root: bool,
    /// 2 for the bare registered domain or its `www` host, 0 for any other
    /// subdomain.
    pub host_score: u8,
    /// 1 for https, 0 for http.
    pub scheme_score: u8,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index unreachable: {0}")]
    Unreachable(String),
    #[error("index throttled the client (HTTP {0}) after retries")]
    Throttled(u16),
    #[error("index returned HTTP {0}")]
    Status(u16),
    #[error("offline mode: no cached index response for {0}")]
    Offline(String),
    #[error("index cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("bad index request: {0}")]
    BadRequest(String),
    #[error("no domains given")]
    EmptyDomainList,
    #[error("{0}")]
    Recorded(String),
}

/// Parses CDX JSON-lines output. Lines that are not capture objects (or
/// lack an archive location) are skipped.
pub fn parse_index_lines(text: &str) -> Vec<CaptureLocation> {
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .filter_map(|line| serde_json::from_str::<Value>(line).ok())
        .filter_map(|v| capture_from_json(&v))
        .collect()
}

fn capture_from_json(v: &Value) -> Option<CaptureLocation> {
    let text = |key: &str| -> Option<String> {
        match v.get(key)? {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    };
    Some(CaptureLocation {
        url: text("url")?,
        timestamp: text("timestamp").unwrap_or_default(),
        warc_filename: text("filename")?,
        offset: text("offset")?.parse().ok()?,
        length: text("length")?.parse().ok()?,
        status: text("status").and_then(|s| s.parse().ok()).unwrap_or(0),
        mime_detected: text("mime-detected").or_else(|| text("mime")).unwrap_or_default(),
        digest: text("digest").unwrap_or_default(),
    })
}

fn normalise_domain(domain: &str) -> String {
    domain.trim().trim_end_matches('.').to_ascii_lowercase()
}

/// Ranks one candidate, or returns `None` if it fails the homepage filter
/// (status 200, detected `text/html`, root path without query, host under
/// the domain).
pub fn rank_candidate(capture: &CaptureLocation, domain: &str, allow_any_subdomain: bool) -> Option<CandidateRanking> {
    if capture.status != 200 || !capture.mime_detected.eq_ignore_ascii_case("text/html") || capture.length == 0 {
        return None;
    }
    let url = Url::parse(&capture.url).ok()?;
    let scheme_score = match url.scheme() {
        "https" => 1,
        "http" => 0,
        _ => return None,
    };
    let path_is_root = matches!(url.path(), "" | "/") && url.query().is_none();
    if !path_is_root {
        return None;
    }
    let host = url.host_str()?.trim_end_matches('.').to_ascii_lowercase();
    let domain = normalise_domain(domain);
    let host_score = if host == domain || host.strip_prefix("www.") == Some(domain.as_str()) {
        2
    } else if allow_any_subdomain && host.ends_with(&format!(".{domain}")) {
        0
    } else {
        return None;
    };
    Some(CandidateRanking { path_is_root, host_score, scheme_score })
}

/// Picks the best homepage capture. Ties on ranking go to the most recent
/// timestamp, then the lexicographically smallest URL.
pub fn select_homepage(domain: &str, captures: &[CaptureLocation], allow_any_subdomain: bool) -> Option<CaptureLocation> {
    captures
        .iter()
        .filter_map(|c| rank_candidate(c, domain, allow_any_subdomain).map(|r| (r, c)))
        .max_by(|(ra, a), (rb, b)| {
            ra.cmp(rb)
                .then_with(|| a.timestamp.cmp(&b.timestamp))
                .then_with(|| b.url.cmp(&a.url))
                .then_with(|| compare_location(b, a))
        })
        .map(|(_, c)| c.clone())
}

fn compare_location(a: &CaptureLocation, b: &CaptureLocation) -> Ordering {
    (&a.warc_filename, a.offset, a.length).cmp(&(&b.warc_filename, b.offset, b.length))
}

fn sql_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Renders a single columnar-index query covering every domain. Domains are
/// normalised, sorted and deduplicated, so the output does not depend on
/// input order.
pub fn emit_athena_sql(domains: &[String], crawl_id: &str) -> Result<String, IndexError> {
    let mut domains: Vec<String> = domains.iter().map(|d| normalise_domain(d)).filter(|d| !d.is_empty()).collect();
    domains.sort();
    domains.dedup();
    if domains.is_empty() {
        return Err(IndexError::EmptyDomainList);
    }
    let in_list = domains.iter().map(|d| format!("    {}", sql_quote(d))).collect::<Vec<_>>().join(",\n");
    Ok(format!(
        "SELECT url,\n       url_host_name,\n       url_protocol,\n       fetch_time,\n       warc_filename,\n       warc_record_offset,\n       warc_record_length,\n       content_mime_detected,\n       fetch_status,\n       content_digest\n\
FROM ccindex.ccindex\n\
WHERE crawl = {crawl}\n  AND subset = 'warc'\n  AND fetch_status = 200\n  AND content_mime_detected = 'text/html'\n  AND url_path IN ('', '/')\n  AND url_query IS NULL\n  AND url_host_registered_domain IN (\n{in_list}\n  )\n\
ORDER BY url_host_registered_domain, url;\n",
        crawl = sql_quote(crawl_id),
    ))
}

/// Resolves a domain to its homepage capture.
pub trait CaptureLocator: Send + Sync {
    fn locate(&self, domain: &str, crawl_id: &str) -> Result<Option<CaptureLocation>, IndexError>;
}

#[derive(Debug, Clone)]
pub struct IndexConfig {
    pub base_url: String,
    pub allow_any_subdomain: bool,
    pub max_concurrent: usize,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub candidate_cap: usize,
    /// Raw index responses are cached under `<cache_dir>/<crawl>/index/`.
    pub cache_dir: Option<PathBuf>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            base_url: DEFAULT_INDEX_URL.to_string(),
            allow_any_subdomain: false,
            max_concurrent: 2,
            max_retries: 5,
            backoff_base: Duration::from_secs(1),
            candidate_cap: 10_000,
            cache_dir: None,
        }
    }
}

/// CDX API client. Without a transport it serves lookups from the response
/// cache only.
pub struct IndexClient {
    config: IndexConfig,
    transport: Option<Arc<dyn Transport>>,
    limiter: Limiter,
}

impl IndexClient {
    pub fn new(config: IndexConfig, transport: Option<Arc<dyn Transport>>) -> Self {
        let limiter = Limiter::new(config.max_concurrent, Duration::ZERO);
        IndexClient { config, transport, limiter }
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    fn endpoint(&self, domain: &str, crawl_id: &str, extra: &[(&str, String)]) -> Result<String, IndexError> {
        let base = format!("{}/{}-index", self.config.base_url.trim_end_matches('/'), crawl_id);
        let pattern = if self.config.allow_any_subdomain {
            format!("*.{domain}")
        } else {
            // Root-page captures of the bare and www hosts share one SURT key.
            format!("{domain}/")
        };
        let mut params: Vec<(&str, String)> = vec![
            ("url", pattern),
            ("output", "json".to_string()),
            ("filter", "=status:200".to_string()),
            ("filter", "=mime-detected:text/html".to_string()),
        ];
        params.extend(extra.iter().cloned());
        Url::parse_with_params(&base, &params)
            .map(String::from)
            .map_err(|e| IndexError::BadRequest(e.to_string()))
    }

    fn cache_path(&self, crawl_id: &str, url: &str) -> Option<PathBuf> {
        self.config
            .cache_dir
            .as_ref()
            .map(|dir| dir.join(crawl_id).join("index").join(format!("{}.jsonl", sha256_hex(url))))
    }

    /// Fetches one index URL, consulting the cache first. A 404 is the
    /// server's way of saying "no captures" and yields an empty body.
    fn get_text(&self, crawl_id: &str, url: &str) -> Result<String, IndexError> {
        let cache_path = self.cache_path(crawl_id, url);
        if let Some(path) = &cache_path {
            if let Ok(bytes) = fs::read(path) {
                return Ok(String::from_utf8_lossy(&bytes).into_owned());
            }
        }
        let Some(transport) = &self.transport else {
            return Err(IndexError::Offline(url.to_string()));
        };
        let request = HttpRequest { url: url.to_string(), range: None, max_body: 256 * 1024 * 1024 };
        let mut attempt = 0;
        let body = loop {
            let reply = {
                let _permit = self.limiter.acquire();
                debug!("index GET {url}");
                transport.get(&request)
            };
            let retryable = match reply {
                Ok(reply) if reply.status == 200 => break reply.body,
                Ok(reply) if reply.status == 404 => break Vec::new(),
                Ok(reply) if matches!(reply.status, 429 | 503) => {
                    if attempt >= self.config.max_retries {
                        return Err(IndexError::Throttled(reply.status));
                    }
                    format!("HTTP {}", reply.status)
                }
                Ok(reply) => return Err(IndexError::Status(reply.status)),
                Err(e @ (TransportError::Timeout | TransportError::Other(_))) => {
                    if attempt >= self.config.max_retries {
                        return Err(IndexError::Unreachable(e.to_string()));
                    }
                    e.to_string()
                }
            };
            let delay = backoff_delay(self.config.backoff_base, attempt);
            warn!("index request failed ({retryable}); retrying in {delay:?}");
            std::thread::sleep(delay);
            attempt += 1;
        };
        if let Some(path) = &cache_path {
            write_atomic(path, &body)?;
        }
        Ok(String::from_utf8_lossy(&body).into_owned())
    }

    /// Collects every capture for the domain across all result pages, up to
    /// the candidate cap.
    pub fn candidates(&self, domain: &str, crawl_id: &str) -> Result<Vec<CaptureLocation>, IndexError> {
        let domain = normalise_domain(domain);
        let pages_url = self.endpoint(&domain, crawl_id, &[("showNumPages", "true".to_string())])?;
        let pages_text = self.get_text(crawl_id, &pages_url)?;
        let pages = serde_json::from_str::<Value>(pages_text.trim())
            .ok()
            .and_then(|v| v.get("pages").and_then(Value::as_u64))
            .unwrap_or(0);
        let mut captures = Vec::new();
        for page in 0..pages {
            let url = self.endpoint(&domain, crawl_id, &[("page", page.to_string())])?;
            let text = self.get_text(crawl_id, &url)?;
            captures.extend(parse_index_lines(&text));
            if captures.len() >= self.config.candidate_cap {
                captures.truncate(self.config.candidate_cap);
                warn!(domain = domain.as_str(); "candidate cap of {} reached", self.config.candidate_cap);
                break;
            }
        }
        Ok(captures)
    }

    pub fn lookup_homepage(&self, domain: &str, crawl_id: &str) -> Result<Option<CaptureLocation>, IndexError> {
        let captures = self.candidates(domain, crawl_id)?;
        Ok(select_homepage(domain, &captures, self.config.allow_any_subdomain))
    }
}

impl CaptureLocator for IndexClient {
    fn locate(&self, domain: &str, crawl_id: &str) -> Result<Option<CaptureLocation>, IndexError> {
        self.lookup_homepage(domain, crawl_id)
    }
}

/// One line of a locations file. `capture` is `None` when the index has no
/// homepage capture; `error` is set when the lookup itself failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationEntry {
    pub domain: String,
    pub category: String,
    pub capture: Option<CaptureLocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Locator over previously resolved locations.
#[derive(Debug, Clone, Default)]
pub struct LocationTable {
    entries: HashMap<String, LocationEntry>,
}

impl LocationTable {
    pub fn new(entries: impl IntoIterator<Item = LocationEntry>) -> Self {
        LocationTable { entries: entries.into_iter().map(|e| (e.domain.clone(), e)).collect() }
    }
}

impl CaptureLocator for LocationTable {
    fn locate(&self, domain: &str, _crawl_id: &str) -> Result<Option<CaptureLocation>, IndexError> {
        match self.entries.get(domain) {
            Some(LocationEntry { error: Some(e), .. }) => Err(IndexError::Recorded(e.clone())),
            Some(entry) => Ok(entry.capture.clone()),
            None => Ok(None),
        }
    }
}
