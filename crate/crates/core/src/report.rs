//! Corpus-level statistics over a set of site audits, and their rendering
//! as JSON, CSV and Markdown.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::pipeline::{Outcome, SiteAudit};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOP_N: usize = 10;

/// Pass-rate buckets over normal-text pass rates, highest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Full,
    From90,
    From75,
    From50,
    From25,
    Below25,
}

impl Bucket {
    pub const ALL: [Bucket; 6] = [Bucket::Full, Bucket::From90, Bucket::From75, Bucket::From50, Bucket::From25, Bucket::Below25];

    pub fn of(rate: f64) -> Bucket {
        if rate >= 1.0 {
            Bucket::Full
        } else if rate >= 0.90 {
            Bucket::From90
        } else if rate >= 0.75 {
            Bucket::From75
        } else if rate >= 0.50 {
            Bucket::From50
        } else if rate >= 0.25 {
            Bucket::From25
        } else {
            Bucket::Below25
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Bucket::Full => "100% (fully compliant)",
            Bucket::From90 => "90-99%",
            Bucket::From75 => "75-89%",
            Bucket::From50 => "50-74%",
            Bucket::From25 => "25-49%",
            Bucket::Below25 => "0-24%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketCount {
    pub bucket: Bucket,
    pub domains: usize,
    /// Share of analysed sites, in `[0, 1]`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub domains: usize,
    pub avg_pass_rate: f64,
    pub median_pass_rate: f64,
    pub fully_compliant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSite {
    pub domain: String,
    pub pass_rate: f64,
    pub failing_pairings: usize,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSite {
    pub domain: String,
    pub pairings: usize,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub sites_total: usize,
    pub sites_analysed: usize,
    pub sites_no_colour: usize,
    pub sites_fetch_failed: usize,
    pub sites_not_found: usize,
    pub sites_parse_failed: usize,
    /// Per-site deduplicated pairings, summed over analysed sites.
    pub pairings_total: usize,
    /// Distinct (fg, bg) pairs across the whole corpus.
    pub pairings_unique_global: usize,
    pub pairings_failing_normal: usize,
    pub pairings_failing_large: usize,
    pub mean_pass_rate: f64,
    pub median_pass_rate: f64,
    pub mean_pass_rate_large: f64,
    pub median_pass_rate_large: f64,
    pub fully_compliant_count: usize,
    pub above_90_count: usize,
    pub below_50_count: usize,
    pub distribution: Vec<BucketCount>,
    pub category_stats: Vec<CategoryStats>,
    pub worst_sites: Vec<WorstSite>,
    pub best_sites: Vec<BestSite>,
}

impl AggregateReport {
    /// Sites whose homepage HTML was retrieved and parsed.
    pub fn sites_with_html(&self) -> usize {
        self.sites_analysed + self.sites_no_colour
    }

    pub fn failing_fraction(&self) -> f64 {
        fraction(self.pairings_failing_normal, self.pairings_total)
    }

    pub fn share(&self, count: usize) -> f64 {
        fraction(count, self.sites_analysed)
    }
}

fn fraction(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median with the average-of-two-middles convention; 0 for no values.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

pub fn aggregate(audits: &[SiteAudit]) -> AggregateReport {
    aggregate_with(audits, DEFAULT_TOP_N)
}

/// Only `analysed` sites contribute to rate statistics.
pub fn aggregate_with(audits: &[SiteAudit], top_n: usize) -> AggregateReport {
    let count = |o: Outcome| audits.iter().filter(|a| a.outcome == o).count();
    let analysed: Vec<&SiteAudit> = audits
        .iter()
        .filter(|a| a.outcome == Outcome::Analysed && a.total_pairings > 0)
        .collect();
    let rate = |a: &SiteAudit| a.pass_rate_normal.unwrap_or(0.0);
    let rates: Vec<f64> = analysed.iter().map(|a| rate(a)).collect();
    let rates_large: Vec<f64> = analysed.iter().map(|a| a.pass_rate_large.unwrap_or(0.0)).collect();

    let pairings_total = analysed.iter().map(|a| a.total_pairings).sum();
    let mut unique = HashSet::new();
    for a in &analysed {
        for p in &a.pairings {
            unique.insert((p.fg.to_hex(), p.bg.to_hex()));
        }
    }

    let distribution = Bucket::ALL
        .iter()
        .map(|&bucket| {
            let domains = rates.iter().filter(|&&r| Bucket::of(r) == bucket).count();
            BucketCount { bucket, domains, fraction: fraction(domains, analysed.len()) }
        })
        .collect();

    let mut by_category: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for a in &analysed {
        by_category.entry(a.category.as_str()).or_default().push(rate(a));
    }
    let mut category_stats: Vec<CategoryStats> = by_category
        .into_iter()
        .map(|(category, rates)| CategoryStats {
            category: category.to_string(),
            domains: rates.len(),
            avg_pass_rate: mean(&rates),
            median_pass_rate: median(&rates),
            fully_compliant: rates.iter().filter(|&&r| r >= 1.0).count(),
        })
        .collect();
    category_stats.sort_by(|a, b| b.avg_pass_rate.total_cmp(&a.avg_pass_rate).then_with(|| a.category.cmp(&b.category)));

    let mut worst: Vec<&SiteAudit> = analysed.clone();
    worst.sort_by(|a, b| rate(a).total_cmp(&rate(b)).then_with(|| a.domain.cmp(&b.domain)));
    let worst_sites = worst
        .iter()
        .take(top_n)
        .map(|a| WorstSite {
            domain: a.domain.clone(),
            pass_rate: rate(a),
            failing_pairings: a.total_pairings - a.passing_normal,
            worst_ratio: a.worst_ratio.unwrap_or(1.0),
        })
        .collect();

    let mut best: Vec<&SiteAudit> = analysed.iter().copied().filter(|a| rate(a) >= 1.0).collect();
    best.sort_by(|a, b| match b.total_pairings.cmp(&a.total_pairings) {
        Ordering::Equal => a.domain.cmp(&b.domain),
        other => other,
    });
    let best_sites = best
        .iter()
        .take(top_n)
        .map(|a| BestSite { domain: a.domain.clone(), pairings: a.total_pairings, mean_ratio: a.mean_ratio.unwrap_or(1.0) })
        .collect();

    AggregateReport {
        sites_total: audits.len(),
        sites_analysed: analysed.len(),
        sites_no_colour: count(Outcome::NoColourData),
        sites_fetch_failed: count(Outcome::FetchFailed),
        sites_not_found: count(Outcome::NotFound),
        sites_parse_failed: count(Outcome::ParseFailed),
        pairings_total,
        pairings_unique_global: unique.len(),
        pairings_failing_normal: analysed.iter().map(|a| a.total_pairings - a.passing_normal).sum(),
        pairings_failing_large: analysed.iter().map(|a| a.total_pairings - a.passing_large).sum(),
        mean_pass_rate: mean(&rates),
        median_pass_rate: median(&rates),
        mean_pass_rate_large: mean(&rates_large),
        median_pass_rate_large: median(&rates_large),
        fully_compliant_count: rates.iter().filter(|&&r| r >= 1.0).count(),
        above_90_count: rates.iter().filter(|&&r| r >= 0.90).count(),
        below_50_count: rates.iter().filter(|&&r| r < 0.50).count(),
        distribution,
        category_stats,
        worst_sites,
        best_sites,
    }
}

/// `0.6274` → `"62.7%"`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

/// `4.1304` → `"4.13:1"`.
pub fn format_ratio(ratio: f64) -> String {
    format!("{ratio:.2}:1")
}

fn rounded(value: f64, places: usize) -> Value {
    let text = format!("{value:.places$}");
    text.parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

fn pct(fraction: f64) -> Value {
    rounded(fraction * 100.0, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }
}

/// One output file of a rendered report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Renders the report; CSV produces one file per table.
pub fn render(report: &AggregateReport, format: ReportFormat) -> Vec<RenderedFile> {
    match format {
        ReportFormat::Json => vec![RenderedFile { name: "report.json".into(), bytes: render_json(report) }],
        ReportFormat::Markdown => vec![RenderedFile { name: "report.md".into(), bytes: render_markdown(report).into_bytes() }],
        ReportFormat::Csv => render_csv(report),
    }
}

fn render_json(r: &AggregateReport) -> Vec<u8> {
    let value = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "coverage": {
            "sites_total": r.sites_total,
            "sites_with_html": r.sites_with_html(),
            "sites_analysed": r.sites_analysed,
            "sites_no_colour": r.sites_no_colour,
            "sites_fetch_failed": r.sites_fetch_failed,
            "sites_not_found": r.sites_not_found,
            "sites_parse_failed": r.sites_parse_failed,
        },
        "pairings": {
            "total": r.pairings_total,
            "unique_global": r.pairings_unique_global,
            "failing_normal": r.pairings_failing_normal,
            "failing_large": r.pairings_failing_large,
            "failing_normal_pct": pct(r.failing_fraction()),
        },
        "overall": {
            "mean_pass_rate_pct": pct(r.mean_pass_rate),
            "median_pass_rate_pct": pct(r.median_pass_rate),
            "mean_pass_rate_large_pct": pct(r.mean_pass_rate_large),
            "median_pass_rate_large_pct": pct(r.median_pass_rate_large),
            "fully_compliant": r.fully_compliant_count,
            "fully_compliant_pct": pct(r.share(r.fully_compliant_count)),
            "above_90": r.above_90_count,
            "above_90_pct": pct(r.share(r.above_90_count)),
            "below_50": r.below_50_count,
            "below_50_pct": pct(r.share(r.below_50_count)),
        },
        "distribution": r.distribution.iter().map(|b| json!({
            "range": b.bucket.label(),
            "domains": b.domains,
            "percentage": pct(b.fraction),
        })).collect::<Vec<_>>(),
        "categories": r.category_stats.iter().map(|c| json!({
            "category": c.category,
            "domains": c.domains,
            "avg_pass_rate_pct": pct(c.avg_pass_rate),
            "median_pass_rate_pct": pct(c.median_pass_rate),
            "fully_compliant": c.fully_compliant,
        })).collect::<Vec<_>>(),
        "worst_sites": r.worst_sites.iter().map(|w| json!({
            "domain": w.domain,
            "pass_rate_pct": pct(w.pass_rate),
            "failing_pairings": w.failing_pairings,
            "worst_ratio": rounded(w.worst_ratio, 2),
        })).collect::<Vec<_>>(),
        "best_sites": r.best_sites.iter().map(|b| json!({
            "domain": b.domain,
            "pairings": b.pairings,
            "mean_ratio": rounded(b.mean_ratio, 2),
        })).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_vec_pretty(&value).expect("report values serialise");
    out.push(b'\n');
    out
}

fn csv_file(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> RenderedFile {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    RenderedFile { name: name.into(), bytes: writer.into_inner().expect("in-memory flush") }
}

fn render_csv(r: &AggregateReport) -> Vec<RenderedFile> {
    let summary = vec![
        vec!["sites_total".into(), r.sites_total.to_string()],
        vec!["sites_with_html".into(), r.sites_with_html().to_string()],
        vec!["sites_analysed".into(), r.sites_analysed.to_string()],
        vec!["sites_no_colour".into(), r.sites_no_colour.to_string()],
        vec!["sites_fetch_failed".into(), r.sites_fetch_failed.to_string()],
        vec!["sites_not_found".into(), r.sites_not_found.to_string()],
        vec!["sites_parse_failed".into(), r.sites_parse_failed.to_string()],
        vec!["pairings_total".into(), r.pairings_total.to_string()],
        vec!["pairings_unique_global".into(), r.pairings_unique_global.to_string()],
        vec!["pairings_failing_normal".into(), r.pairings_failing_normal.to_string()],
        vec!["pairings_failing_normal_pct".into(), format_percent(r.failing_fraction())],
        vec!["mean_pass_rate".into(), format_percent(r.mean_pass_rate)],
        vec!["median_pass_rate".into(), format_percent(r.median_pass_rate)],
        vec!["fully_compliant_pct".into(), format_percent(r.share(r.fully_compliant_count))],
        vec!["above_90_pct".into(), format_percent(r.share(r.above_90_count))],
        vec!["below_50_pct".into(), format_percent(r.share(r.below_50_count))],
    ];
    vec![
        csv_file("summary.csv", &["metric", "value"], summary),
        csv_file(
            "distribution.csv",
            &["Pass rate range", "Domains", "Percentage"],
            r.distribution
                .iter()
                .map(|b| vec![b.bucket.label().into(), b.domains.to_string(), format_percent(b.fraction)])
                .collect(),
        ),
        csv_file(
            "categories.csv",
            &["Category", "Domains", "Avg pass rate", "Median", "Compliant"],
            r.category_stats
                .iter()
                .map(|c| {
                    vec![
                        c.category.clone(),
                        c.domains.to_string(),
                        format_percent(c.avg_pass_rate),
                        format_percent(c.median_pass_rate),
                        c.fully_compliant.to_string(),
                    ]
                })
                .collect(),
        ),
        csv_file(
            "worst_sites.csv",
            &["Domain", "Pass rate", "Failing pairings", "Worst ratio"],
            r.worst_sites
                .iter()
                .map(|w| vec![w.domain.clone(), format_percent(w.pass_rate), w.failing_pairings.to_string(), format_ratio(w.worst_ratio)])
                .collect(),
        ),
        csv_file(
            "best_sites.csv",
            &["Domain", "Pairings checked", "Mean ratio"],
            r.best_sites
                .iter()
                .map(|b| vec![b.domain.clone(), b.pairings.to_string(), format_ratio(b.mean_ratio)])
                .collect(),
        ),
    ]
}

fn md_table(out: &mut String, header: &[&str], align_right: &[bool], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let rule: Vec<&str> = align_right.iter().map(|&r| if r { "---:" } else { ":---" }).collect();
    let _ = writeln!(out, "|{}|", rule.join("|"));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn render_markdown(r: &AggregateReport) -> String {
    let mut out = String::from("# Colour contrast report\n\n## Coverage\n\n");
    let _ = writeln!(out, "- Domains audited: {}", r.sites_total);
    let _ = writeln!(out, "- Analysable homepage HTML: {}", r.sites_with_html());
    let _ = writeln!(out, "- With at least one colour pairing: {}", r.sites_analysed);
    let _ = writeln!(out, "- Retrieved but no colour data: {}", r.sites_no_colour);
    let _ = writeln!(out, "- Not found in index: {}", r.sites_not_found);
    let _ = writeln!(out, "- Fetch failed: {}", r.sites_fetch_failed);
    let _ = writeln!(out, "- Parse failed: {}\n", r.sites_parse_failed);

    out.push_str("## Overall compliance\n\n");
    let _ = writeln!(out, "- Unique pairings (per site, summed): {}", r.pairings_total);
    let _ = writeln!(out, "- Unique pairings (corpus-wide): {}", r.pairings_unique_global);
    let _ = writeln!(
        out,
        "- Pairings failing 4.5:1: {} ({})",
        r.pairings_failing_normal,
        format_percent(r.failing_fraction())
    );
    let _ = writeln!(out, "- Mean per-site pass rate (normal text): {}", format_percent(r.mean_pass_rate));
    let _ = writeln!(out, "- Median per-site pass rate (normal text): {}", format_percent(r.median_pass_rate));
    let _ = writeln!(out, "- Mean per-site pass rate (large text): {}", format_percent(r.mean_pass_rate_large));
    let _ = writeln!(out, "- Fully compliant sites: {}", format_percent(r.share(r.fully_compliant_count)));
    let _ = writeln!(out, "- Sites with >=90% pass rate: {}", format_percent(r.share(r.above_90_count)));
    let _ = writeln!(out, "- Sites with <50% pass rate: {}\n", format_percent(r.share(r.below_50_count)));

    out.push_str("## Distribution of per-site pass rates (normal text)\n\n");
    let rows: Vec<Vec<String>> = r
        .distribution
        .iter()
        .map(|b| vec![b.bucket.label().into(), b.domains.to_string(), format_percent(b.fraction)])
        .collect();
    md_table(&mut out, &["Pass rate range", "Domains", "Percentage"], &[false, true, true], &rows);

    out.push_str("## Pass rate by category\n\n");
    let rows: Vec<Vec<String>> = r
        .category_stats
        .iter()
        .map(|c| {
            vec![
                c.category.clone(),
                c.domains.to_string(),
                format_percent(c.avg_pass_rate),
                format_percent(c.median_pass_rate),
                c.fully_compliant.to_string(),
            ]
        })
        .collect();
    md_table(&mut out, &["Category", "Domains", "Avg pass rate", "Median", "Compliant"], &[false, true, true, true, true], &rows);

    out.push_str("## Lowest pass-rate domains\n\n");
    let rows: Vec<Vec<String>> = r
        .worst_sites
        .iter()
        .map(|w| vec![w.domain.clone(), format_percent(w.pass_rate), w.failing_pairings.to_string(), format_ratio(w.worst_ratio)])
        .collect();
    md_table(&mut out, &["Domain", "Pass rate", "Failing pairings", "Worst ratio"], &[false, true, true, false], &rows);

    out.push_str("## Fully compliant sites with the most pairings\n\n");
    let rows: Vec<Vec<String>> = r
        .best_sites
        .iter()
        .map(|b| vec![b.domain.clone(), b.pairings.to_string(), format_ratio(b.mean_ratio)])
        .collect();
    md_table(&mut out, &["Domain", "Pairings checked", "Mean ratio"], &[false, true, false], &rows);
    out
}
