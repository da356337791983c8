//! Per-domain audits: locate → fetch → parse → extract → pair → assess.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::ccindex::{CaptureLocation, CaptureLocator};
use crate::color::RgbaColor;
use crate::contrast::assess;
use crate::extract::{extract_declarations_with, ExtractOptions, RuleId, StyleDeclaration};
use crate::fetch::ArchiveFetcher;
use crate::pairing::{build_pairings, ColorPairing, Provenance};
use crate::warc::{parse_http_response_with, read_record_with, ReadLimits};

/// Version of the per-site results schema.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Analysed,
    #[serde(rename = "no-colour-data")]
    NoColourData,
    FetchFailed,
    NotFound,
    ParseFailed,
}

impl Outcome {
    pub const ALL: [Outcome; 5] =
        [Outcome::Analysed, Outcome::NoColourData, Outcome::FetchFailed, Outcome::NotFound, Outcome::ParseFailed];

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Analysed => "analysed",
            Outcome::NoColourData => "no-colour-data",
            Outcome::FetchFailed => "fetch-failed",
            Outcome::NotFound => "not-found",
            Outcome::ParseFailed => "parse-failed",
        }
    }
}

/// A pairing together with its contrast assessment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessedPairing {
    pub fg: RgbaColor,
    pub bg: RgbaColor,
    pub provenance: Provenance,
    pub first_rule_id: RuleId,
    pub ratio: f64,
    pub passes_normal: bool,
    pub passes_large: bool,
}

impl AssessedPairing {
    pub fn from_pairing(p: &ColorPairing) -> Self {
        let result = assess(p.fg, p.bg);
        AssessedPairing {
            fg: p.fg,
            bg: p.bg,
            provenance: p.provenance,
            first_rule_id: p.first_rule_id,
            ratio: result.ratio,
            passes_normal: result.passes_normal,
            passes_large: result.passes_large,
        }
    }
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteAudit {
    pub schema_version: u32,
    pub domain: String,
    pub category: String,
    pub outcome: Outcome,
    /// Why the chain stopped, for outcomes other than `analysed`.
    pub detail: Option<String>,
    pub capture: Option<CaptureLocation>,
    pub declarations: usize,
    pub unparsed_declarations: usize,
    pub pairings: Vec<AssessedPairing>,
    pub total_pairings: usize,
    pub passing_normal: usize,
    pub passing_large: usize,
    pub pass_rate_normal: Option<f64>,
    pub pass_rate_large: Option<f64>,
    pub worst_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
}

impl SiteAudit {
    pub fn failed(domain: &str, category: &str, outcome: Outcome, detail: impl Into<String>, capture: Option<CaptureLocation>) -> Self {
        SiteAudit {
            schema_version: RESULTS_SCHEMA_VERSION,
            domain: domain.to_string(),
            category: category.to_string(),
            outcome,
            detail: Some(detail.into()),
            capture,
            declarations: 0,
            unparsed_declarations: 0,
            pairings: Vec::new(),
            total_pairings: 0,
            passing_normal: 0,
            passing_large: 0,
            pass_rate_normal: None,
            pass_rate_large: None,
            worst_ratio: None,
            mean_ratio: None,
        }
    }

    /// Builds an audit from analysed pairings; zero pairings means
    /// `no-colour-data`.
    pub fn from_analysis(domain: &str, category: &str, capture: Option<CaptureLocation>, analysis: &DocumentAnalysis) -> Self {
        let pairings = analysis.pairings.clone();
        let total = pairings.len();
        let passing_normal = pairings.iter().filter(|p| p.passes_normal).count();
        let passing_large = pairings.iter().filter(|p| p.passes_large).count();
        let rate = |n: usize| (total > 0).then(|| n as f64 / total as f64);
        let worst_ratio = pairings.iter().map(|p| p.ratio).reduce(f64::min);
        let mean_ratio = (total > 0).then(|| pairings.iter().map(|p| p.ratio).sum::<f64>() / total as f64);
        SiteAudit {
            schema_version: RESULTS_SCHEMA_VERSION,
            domain: domain.to_string(),
            category: category.to_string(),
            outcome: if total > 0 { Outcome::Analysed } else { Outcome::NoColourData },
            detail: None,
            capture,
            declarations: analysis.declarations.len(),
            unparsed_declarations: analysis.declarations.iter().filter(|d| d.parsed.is_err()).count(),
            pass_rate_normal: rate(passing_normal),
            pass_rate_large: rate(passing_large),
            worst_ratio,
            mean_ratio,
            pairings,
            total_pairings: total,
            passing_normal,
            passing_large,
        }
    }

    /// Checks the stored counters against the pairing list.
    pub fn is_consistent(&self) -> bool {
        let normal = self.pairings.iter().filter(|p| p.passes_normal).count();
        let large = self.pairings.iter().filter(|p| p.passes_large).count();
        self.total_pairings == self.pairings.len()
            && self.passing_normal == normal
            && self.passing_large == large
            && normal <= large
            && (self.outcome == Outcome::Analysed) == (self.total_pairings >= 1)
            && match self.pass_rate_normal {
                Some(r) => self.total_pairings > 0 && r == normal as f64 / self.total_pairings as f64,
                None => self.total_pairings == 0,
            }
    }
}

/// Declarations and assessed pairings of one HTML document.
#[derive(Debug, Clone)]
pub struct DocumentAnalysis {
    pub declarations: Vec<StyleDeclaration>,
    pub pairings: Vec<AssessedPairing>,
}

pub fn analyse_html(html: &[u8], charset: Option<&str>, options: &ExtractOptions) -> DocumentAnalysis {
    let declarations = extract_declarations_with(html, charset, options);
    let pairings = build_pairings(&declarations).iter().map(AssessedPairing::from_pairing).collect();
    DocumentAnalysis { declarations, pairings }
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub limits: ReadLimits,
    pub extract: ExtractOptions,
}

/// Runs the parse → extract → pair → assess tail of the chain over raw
/// record bytes.
pub fn analyse_record(domain: &str, category: &str, capture: CaptureLocation, raw: &[u8], options: &AnalysisOptions) -> SiteAudit {
    let record = match read_record_with(raw, &options.limits) {
        Ok(r) => r,
        Err(e) => return SiteAudit::failed(domain, category, Outcome::ParseFailed, e.to_string(), Some(capture)),
    };
    if record.record_type() != "response" {
        let detail = format!("expected a response record, got {:?}", record.record_type());
        return SiteAudit::failed(domain, category, Outcome::ParseFailed, detail, Some(capture));
    }
    let response = match parse_http_response_with(&record.content, &options.limits) {
        Ok(r) => r,
        Err(e) => return SiteAudit::failed(domain, category, Outcome::ParseFailed, e.to_string(), Some(capture)),
    };
    if response.status_code != 200 {
        let detail = format!("archived response has status {}", response.status_code);
        return SiteAudit::failed(domain, category, Outcome::ParseFailed, detail, Some(capture));
    }
    let analysis = analyse_html(&response.body, response.declared_charset.as_deref(), &options.extract);
    SiteAudit::from_analysis(domain, category, Some(capture), &analysis)
}

/// End-to-end auditor for one crawl.
pub struct Pipeline<'a> {
    pub crawl_id: String,
    pub locator: &'a dyn CaptureLocator,
    pub fetcher: &'a ArchiveFetcher,
    pub options: AnalysisOptions,
}

impl Pipeline<'_> {
    /// Never fails: every failure mode is recorded in the outcome.
    pub fn audit_domain(&self, domain: &str, category: &str) -> SiteAudit {
        let capture = match self.locator.locate(domain, &self.crawl_id) {
            Ok(Some(c)) => c,
            Ok(None) => return SiteAudit::failed(domain, category, Outcome::NotFound, "no homepage capture in index", None),
            Err(e) => return SiteAudit::failed(domain, category, Outcome::FetchFailed, format!("index: {e}"), None),
        };
        match self.fetcher.fetch_record_bytes(&capture) {
            Ok(raw) => analyse_record(domain, category, capture, &raw, &self.options),
            Err(e) => SiteAudit::failed(domain, category, Outcome::FetchFailed, e.to_string(), Some(capture)),
        }
    }

    /// Audits `(domain, category)` pairs on up to `workers` threads. Output
    /// order matches input order; `on_complete` sees audits as they finish.
    pub fn run_audit(
        &self,
        domains: &[(String, String)],
        workers: usize,
        on_complete: Option<&(dyn Fn(&SiteAudit) + Sync)>,
    ) -> Vec<SiteAudit> {
        run_indexed(domains.len(), workers, |i| {
            let (domain, category) = &domains[i];
            let audit = self.audit_domain(domain, category);
            match audit.outcome {
                Outcome::Analysed => info!(domain = domain.as_str(); "{} pairings", audit.total_pairings),
                other => warn!(domain = domain.as_str(); "{}", other.as_str()),
            }
            if let Some(callback) = on_complete {
                callback(&audit);
            }
            audit
        })
    }
}

/// Evaluates `job(0..n)` on a small thread pool and returns results in index
/// order.
pub fn run_indexed<T: Send>(n: usize, workers: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let value = job(i);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every index is processed"))
        .collect()
}
