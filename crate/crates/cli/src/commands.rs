use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use crawlcontrast::category::CategoryMap;
use crawlcontrast::ccindex::emit_athena_sql;
use crawlcontrast::extract::ExtractOptions;
use crawlcontrast::fetch::REQUEST_TIMEOUT;
use crawlcontrast::http::Transport;
use crawlcontrast::pipeline::{run_indexed, AnalysisOptions, RESULTS_SCHEMA_VERSION};
use crawlcontrast::report::{aggregate, format_ratio, render};
use crawlcontrast::warc::{parse_http_response, read_record};
use crawlcontrast::{
    analyse_html, assess, parse_color, resolve_alpha, ArchiveFetcher, CaptureLocator, ColorValue, FetchError,
    FetchPolicy, IndexClient, IndexConfig, LocationEntry, LocationTable, Outcome, Pipeline, RgbaColor, SiteAudit,
};
use log::{error, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::files::{jsonl_bytes, read_categories, read_domains, read_jsonl, write_file, JsonlSink};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SYSTEMIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = u8> = Result<T, Failure>;

pub trait OrExit<T> {
    fn usage(self) -> CmdResult<T>;
    fn systemic(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure { code: EXIT_USAGE, error: e.into() })
    }

    fn systemic(self) -> CmdResult<T> {
        self.map_err(|e| Failure { code: EXIT_SYSTEMIC, error: e.into() })
    }
}

fn usage_error(message: String) -> Failure {
    Failure { code: EXIT_USAGE, error: anyhow!(message) }
}

fn transport(cfg: &RunConfig) -> Option<Arc<dyn Transport>> {
    if cfg.offline {
        return None;
    }
    let agent = concat!("crawlcontrast/", env!("CARGO_PKG_VERSION"));
    Some(Arc::new(crawlcontrast::http::UreqTransport::new(agent, REQUEST_TIMEOUT)))
}

fn categories(cfg: &RunConfig) -> CmdResult<Option<CategoryMap>> {
    cfg.categories_file.as_deref().map(read_categories).transpose().usage()
}

/// One line of the fetch manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub domain: String,
    pub warc_filename: String,
    pub offset: u64,
    pub length: u64,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub fn locate(cfg: &RunConfig) -> CmdResult {
    let domains_file = cfg
        .domains_file
        .as_ref()
        .ok_or_else(|| usage_error("--domains is required".into()))?;
    let domains = read_domains(domains_file).usage()?;
    let categories = categories(cfg)?.unwrap_or_default();
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))
        .systemic()?;
    let sql_path = cfg.output_dir.join("query.sql");
    if domains.is_empty() {
        warn!(target: "locate", "domain list {} is empty", domains_file.display());
        write_file(&cfg.locations_path(), b"").systemic()?;
        write_file(&sql_path, b"-- no domains\n").systemic()?;
        return Ok(EXIT_OK);
    }
    let sql = emit_athena_sql(&domains, &cfg.crawl_id).usage()?;

    let client = IndexClient::new(
        IndexConfig {
            base_url: cfg.index_base_url.clone(),
            allow_any_subdomain: cfg.allow_any_subdomain,
            max_retries: cfg.max_retries,
            cache_dir: Some(cfg.cache_dir.clone()),
            ..IndexConfig::default()
        },
        transport(cfg),
    );
    let lookups = run_indexed(domains.len(), cfg.workers, |i| client.locate(&domains[i], &cfg.crawl_id));

    let mut entries = Vec::with_capacity(domains.len());
    let mut failures = Vec::new();
    for (domain, lookup) in domains.iter().zip(lookups) {
        let category = categories.category(domain);
        let entry = match lookup {
            Ok(capture) => {
                match &capture {
                    Some(c) => info!(target: "locate", domain = domain.as_str(); "capture={} offset={}", c.url, c.offset),
                    None => warn!(target: "locate", domain = domain.as_str(); "no homepage capture"),
                }
                LocationEntry { domain: domain.clone(), category, capture, error: None }
            }
            Err(e) => {
                error!(target: "locate", domain = domain.as_str(); "{e}");
                failures.push(e.to_string());
                LocationEntry { domain: domain.clone(), category, capture: None, error: Some(e.to_string()) }
            }
        };
        entries.push(entry);
    }
    write_file(&cfg.locations_path(), &jsonl_bytes(&entries)).systemic()?;
    write_file(&sql_path, sql.as_bytes()).systemic()?;
    if let Some(first) = failures.first() {
        return Err(Failure {
            code: EXIT_SYSTEMIC,
            error: anyhow!("{} of {} index lookups failed; first: {first}", failures.len(), domains.len()),
        });
    }
    Ok(EXIT_OK)
}

fn read_locations(cfg: &RunConfig) -> CmdResult<Vec<LocationEntry>> {
    read_jsonl(&cfg.locations_path()).usage()
}

fn fetch_policy(cfg: &RunConfig) -> FetchPolicy {
    let defaults = FetchPolicy::default();
    FetchPolicy {
        max_concurrent: defaults.max_concurrent.min(cfg.workers),
        min_delay_ms: cfg.request_delay_ms,
        max_retries: cfg.max_retries,
        cache_dir: Some(cfg.cache_dir.clone()),
        ..defaults
    }
}

fn ensure_writable(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating cache directory {}", dir.display()))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").with_context(|| format!("cache directory {} is not writable", dir.display()))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

pub fn fetch(cfg: &RunConfig) -> CmdResult {
    let entries = read_locations(cfg)?;
    ensure_writable(&cfg.cache_dir.join(&cfg.crawl_id)).systemic()?;
    let fetcher = ArchiveFetcher::new(&cfg.archive_base_url, &cfg.crawl_id, fetch_policy(cfg), transport(cfg));
    let located: Vec<_> = entries
        .iter()
        .filter_map(|e| e.capture.as_ref().map(|c| (e.domain.as_str(), c)))
        .collect();
    let outcomes = run_indexed(located.len(), cfg.workers, |i| fetcher.fetch_record_bytes(located[i].1));

    let mut manifest = Vec::with_capacity(located.len());
    let mut cache_failure = None;
    for (&(domain, loc), outcome) in located.iter().zip(outcomes) {
        let mut line = ManifestEntry {
            domain: domain.to_string(),
            warc_filename: loc.warc_filename.clone(),
            offset: loc.offset,
            length: loc.length,
            outcome: "ok".into(),
            error_kind: None,
            detail: None,
        };
        match outcome {
            Ok(_) => info!(target: "fetch", domain = domain; "bytes={}", loc.length),
            Err(e) => {
                warn!(target: "fetch", domain = domain; "{e}");
                if matches!(e, FetchError::Cache(_)) {
                    cache_failure.get_or_insert_with(|| e.to_string());
                }
                line.outcome = "error".into();
                line.error_kind = Some(e.kind().into());
                line.detail = Some(e.to_string());
            }
        }
        manifest.push(line);
    }
    write_file(&cfg.manifest_path(), &jsonl_bytes(&manifest)).systemic()?;
    if let Some(e) = cache_failure {
        return Err(Failure { code: EXIT_SYSTEMIC, error: anyhow!(e) });
    }
    Ok(EXIT_OK)
}

pub fn analyze(cfg: &RunConfig) -> CmdResult {
    let entries = read_locations(cfg)?;
    if !cfg.cache_dir.is_dir() {
        return Err(usage_error(format!("cache directory {} does not exist; run fetch first", cfg.cache_dir.display())));
    }
    let manifest: HashMap<String, ManifestEntry> = if cfg.manifest_path().exists() {
        read_jsonl::<ManifestEntry>(&cfg.manifest_path())
            .usage()?
            .into_iter()
            .map(|m| (m.domain.clone(), m))
            .collect()
    } else {
        HashMap::new()
    };
    let overrides = categories(cfg)?;
    let domains: Vec<(String, String)> = entries
        .iter()
        .map(|e| {
            let category = overrides.as_ref().map_or_else(|| e.category.clone(), |m| m.category(&e.domain));
            (e.domain.clone(), category)
        })
        .collect();

    let table = LocationTable::new(entries);
    let fetcher = ArchiveFetcher::new(&cfg.archive_base_url, &cfg.crawl_id, fetch_policy(cfg), None);
    let pipeline = Pipeline {
        crawl_id: cfg.crawl_id.clone(),
        locator: &table as &dyn CaptureLocator,
        fetcher: &fetcher,
        options: AnalysisOptions { extract: ExtractOptions::default(), ..AnalysisOptions::default() },
    };
    fs::create_dir_all(&cfg.output_dir).systemic()?;
    let partial_path = cfg.output_dir.join("results.partial.jsonl");
    let sink = JsonlSink::create(&partial_path).systemic()?;
    let audits = run_indexed(domains.len(), cfg.workers, |i| {
        let (domain, category) = &domains[i];
        let mut audit = pipeline.audit_domain(domain, category);
        if audit.outcome == Outcome::FetchFailed {
            if let Some(ManifestEntry { error_kind: Some(kind), detail, .. }) = manifest.get(domain) {
                audit.detail = Some(format!("{kind}: {}", detail.as_deref().unwrap_or("")));
            }
        }
        match audit.outcome {
            Outcome::Analysed => info!(target: "analyze", domain = domain.as_str(); "pairings={}", audit.total_pairings),
            other => warn!(target: "analyze", domain = domain.as_str(); "outcome={}", other.as_str()),
        }
        sink.append(&audit);
        audit
    });
    write_file(&cfg.results_path(), &jsonl_bytes(&audits)).systemic()?;
    drop(sink);
    let _ = fs::remove_file(partial_path);
    Ok(EXIT_OK)
}

pub fn read_results(path: &Path) -> CmdResult<Vec<SiteAudit>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading results {}", path.display())).usage()?;
    let mut audits = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let where_ = || format!("{}:{}", path.display(), n + 1);
        let value: Value = serde_json::from_str(line).with_context(|| format!("{}: malformed JSON", where_())).usage()?;
        match value.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == u64::from(RESULTS_SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(usage_error(format!(
                    "{}: results schema version {v} is not supported (expected {RESULTS_SCHEMA_VERSION})",
                    where_()
                )))
            }
            None => return Err(usage_error(format!("{}: missing schema_version", where_()))),
        }
        audits.push(serde_json::from_value(value).with_context(|| format!("{}: malformed site audit", where_())).usage()?);
    }
    Ok(audits)
}

pub fn report(cfg: &RunConfig, results: Option<&Path>) -> CmdResult {
    let path: PathBuf = results.map_or_else(|| cfg.results_path(), Path::to_path_buf);
    let audits = read_results(&path)?;
    let report = aggregate(&audits);
    for &format in &cfg.formats {
        for file in render(&report, format) {
            write_file(&cfg.output_dir.join(&file.name), &file.bytes).systemic()?;
        }
    }
    info!(
        target: "report",
        "sites={} analysed={} pairings={} median_pass_rate={:.3}",
        report.sites_total,
        report.sites_analysed,
        report.pairings_total,
        report.median_pass_rate
    );
    Ok(EXIT_OK)
}

pub fn run(cfg: &RunConfig) -> CmdResult {
    locate(cfg)?;
    fetch(cfg)?;
    analyze(cfg)?;
    report(cfg, None)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn concrete_color(text: &str) -> CmdResult<RgbaColor> {
    match parse_color(text) {
        Ok(ColorValue::Color(c)) => Ok(c),
        Ok(ColorValue::Keyword(k)) => Err(usage_error(format!("{text:?} is the keyword {}, not a colour", k.as_str()))),
        Err(e) => Err(usage_error(format!("{text:?}: {e}"))),
    }
}

/// `check FG BG` scores one pair; `check FILE` audits a local HTML or WARC
/// file. Exit 0 when everything passes the normal-text threshold.
pub fn check(inputs: &[String], charset: Option<&str>) -> CmdResult {
    match inputs {
        [fg, bg] => {
            let bg = resolve_alpha(concrete_color(bg)?, RgbaColor::WHITE);
            let fg = resolve_alpha(concrete_color(fg)?, bg);
            let result = assess(fg, bg);
            println!("{} {} {}", format_ratio(result.ratio), verdict(result.passes_normal), verdict(result.passes_large));
            Ok(if result.passes_normal { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        [file] => {
            let bytes = fs::read(file).with_context(|| format!("reading {file}")).usage()?;
            let (body, declared) = if bytes.starts_with(b"WARC/") || bytes.starts_with(&[0x1f, 0x8b]) {
                let record = read_record(&bytes).usage()?;
                let response = parse_http_response(&record.content).usage()?;
                (response.body, response.declared_charset)
            } else {
                (bytes, None)
            };
            let analysis = analyse_html(&body, charset.or(declared.as_deref()), &ExtractOptions::default());
            for p in &analysis.pairings {
                println!(
                    "{} {} {} {} {} {}",
                    p.fg.to_hex(),
                    p.bg.to_hex(),
                    format_ratio(p.ratio),
                    verdict(p.passes_normal),
                    verdict(p.passes_large),
                    p.provenance.as_str()
                );
            }
            let passing = analysis.pairings.iter().filter(|p| p.passes_normal).count();
            println!(
                "{} declarations, {} pairings, {} pass normal text",
                analysis.declarations.len(),
                analysis.pairings.len(),
                passing
            );
            Ok(if passing == analysis.pairings.len() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        _ => Err(usage_error("check takes two colours or one file".into())),
    }
}
