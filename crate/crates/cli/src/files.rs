use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{Context, Result};
use crawlcontrast::category::CategoryMap;
use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Reads a domain list: one domain per line, `#` comments, duplicates dropped.
pub fn read_domains(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading domain list {}", path.display()))?;
    let mut seen = HashSet::new();
    let mut domains = Vec::new();
    for line in text.lines() {
        let domain = line.split('#').next().unwrap_or("").trim().trim_end_matches('/').to_ascii_lowercase();
        if domain.is_empty() {
            continue;
        }
        if seen.insert(domain.clone()) {
            domains.push(domain);
        } else {
            warn!("duplicate domain {domain} ignored");
        }
    }
    Ok(domains)
}

/// Reads `domain,category` rows; a leading `domain,category` header is
/// skipped.
pub fn read_categories(path: &Path) -> Result<CategoryMap> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading categories {}", path.display()))?;
    let mut map = CategoryMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("parsing categories {}", path.display()))?;
        let (Some(domain), Some(category)) = (row.get(0), row.get(1)) else {
            continue;
        };
        if i == 0 && domain.eq_ignore_ascii_case("domain") && category.eq_ignore_ascii_case("category") {
            continue;
        }
        if !domain.is_empty() && !category.is_empty() {
            map.insert(domain, category);
        }
    }
    Ok(map)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: malformed line", path.display(), n + 1))?);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("values serialise");
        out.push(b'\n');
    }
    out
}

/// Writes via a temporary sibling and rename so readers never see a
/// half-written file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// Append-only JSON-lines sink shared between worker threads.
pub struct JsonlSink {
    file: std::sync::Mutex<File>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(JsonlSink { file: std::sync::Mutex::new(file) })
    }

    pub fn append<T: Serialize>(&self, item: &T) {
        let mut line = serde_json::to_vec(item).expect("values serialise");
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = file.write_all(&line).and_then(|_| file.flush()) {
            warn!("could not append to partial results: {e}");
        }
    }
}
