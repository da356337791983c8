//! Run configuration, resolved as flag > environment > config file > default.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::builder::BoolishValueParser;
use clap::Args;
use crawlcontrast::ccindex::DEFAULT_INDEX_URL;
use crawlcontrast::fetch::DEFAULT_ARCHIVE_URL;
use crawlcontrast::ReportFormat;
use serde::Deserialize;

pub const DEFAULT_CRAWL: &str = "CC-MAIN-2026-08";
pub const DEFAULT_WORKERS: usize = 4;

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with defaults for any of the options below
    #[arg(long, global = true, env = "CRAWLCONTRAST_CONFIG")]
    pub config: Option<PathBuf>,
    /// Crawl identifier, e.g. CC-MAIN-2026-08
    #[arg(long, global = true, env = "CRAWLCONTRAST_CRAWL")]
    pub crawl: Option<String>,
    /// Domain list, one per line, '#' starts a comment
    #[arg(long, global = true, env = "CRAWLCONTRAST_DOMAINS")]
    pub domains: Option<PathBuf>,
    /// CSV of domain,category assignments
    #[arg(long, global = true, env = "CRAWLCONTRAST_CATEGORIES")]
    pub categories: Option<PathBuf>,
    #[arg(long, global = true, env = "CRAWLCONTRAST_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Directory for locations, manifests, results and reports
    #[arg(long, global = true, env = "CRAWLCONTRAST_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "CRAWLCONTRAST_WORKERS")]
    pub workers: Option<usize>,
    /// Comma-separated subset of json,csv,markdown
    #[arg(long, global = true, env = "CRAWLCONTRAST_FORMATS")]
    pub formats: Option<String>,
    /// Never touch the network; serve everything from the cache
    #[arg(long, global = true, env = "CRAWLCONTRAST_OFFLINE", num_args = 0..=1, default_missing_value = "true", value_parser = BoolishValueParser::new())]
    pub offline: Option<bool>,
    #[arg(long, global = true, env = "CRAWLCONTRAST_INDEX_URL")]
    pub index_url: Option<String>,
    #[arg(long, global = true, env = "CRAWLCONTRAST_ARCHIVE_URL")]
    pub archive_url: Option<String>,
    /// Accept homepages on any subdomain, not just the bare and www hosts
    #[arg(long, global = true, env = "CRAWLCONTRAST_ALLOW_ANY_SUBDOMAIN", num_args = 0..=1, default_missing_value = "true", value_parser = BoolishValueParser::new())]
    pub allow_any_subdomain: Option<bool>,
    /// Minimum delay between archive requests on one connection
    #[arg(long, global = true, env = "CRAWLCONTRAST_REQUEST_DELAY_MS")]
    pub request_delay_ms: Option<u64>,
    #[arg(long, global = true, env = "CRAWLCONTRAST_MAX_RETRIES")]
    pub max_retries: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConfigFile {
    crawl: Option<String>,
    domains: Option<PathBuf>,
    categories: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    formats: Option<Vec<String>>,
    offline: Option<bool>,
    index_url: Option<String>,
    archive_url: Option<String>,
    allow_any_subdomain: Option<bool>,
    request_delay_ms: Option<u64>,
    max_retries: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub crawl_id: String,
    pub domains_file: Option<PathBuf>,
    pub categories_file: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub formats: BTreeSet<ReportFormat>,
    pub offline: bool,
    pub index_base_url: String,
    pub archive_base_url: String,
    pub allow_any_subdomain: bool,
    pub request_delay_ms: u64,
    pub max_retries: u32,
}

fn parse_formats<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<BTreeSet<ReportFormat>> {
    let mut formats = BTreeSet::new();
    for name in names.into_iter().map(str::trim).filter(|n| !n.is_empty()) {
        match ReportFormat::parse(name) {
            Some(f) => {
                formats.insert(f);
            }
            None => bail!("unknown report format {name:?} (expected json, csv or markdown)"),
        }
    }
    if formats.is_empty() {
        bail!("no report formats selected");
    }
    Ok(formats)
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => ConfigFile::default(),
        };
        let formats = match (&args.formats, &file.formats) {
            (Some(list), _) => parse_formats(list.split(','))?,
            (None, Some(list)) => parse_formats(list.iter().map(String::as_str))?,
            (None, None) => [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown].into_iter().collect(),
        };
        let workers = args.workers.or(file.workers).unwrap_or(DEFAULT_WORKERS);
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(RunConfig {
            crawl_id: args.crawl.clone().or(file.crawl).unwrap_or_else(|| DEFAULT_CRAWL.to_string()),
            domains_file: args.domains.clone().or(file.domains),
            categories_file: args.categories.clone().or(file.categories),
            cache_dir: args.cache_dir.clone().or(file.cache_dir).unwrap_or_else(|| PathBuf::from("cache")),
            output_dir: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            workers,
            formats,
            offline: args.offline.or(file.offline).unwrap_or(false),
            index_base_url: args.index_url.clone().or(file.index_url).unwrap_or_else(|| DEFAULT_INDEX_URL.to_string()),
            archive_base_url: args.archive_url.clone().or(file.archive_url).unwrap_or_else(|| DEFAULT_ARCHIVE_URL.to_string()),
            allow_any_subdomain: args.allow_any_subdomain.or(file.allow_any_subdomain).unwrap_or(false),
            request_delay_ms: args.request_delay_ms.or(file.request_delay_ms).unwrap_or(250),
            max_retries: args.max_retries.or(file.max_retries).unwrap_or(5),
        })
    }

    pub fn locations_path(&self) -> PathBuf {
        self.output_dir.join("locations.jsonl")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.output_dir.join("fetch-manifest.jsonl")
    }

    pub fn results_path(&self) -> PathBuf {
        self.output_dir.join("results.jsonl")
    }
}

fn load_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}
