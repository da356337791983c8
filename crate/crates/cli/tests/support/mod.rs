#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use crawlcontrast::warc::{gzip_member, WarcRecord};
use tiny_http::{Header, Response, Server};

pub const CRAWL: &str = "CC-MAIN-2099-01";
const WARC_FILE: &str = "crawl-data/CC-MAIN-2099-01/segments/1/warc/fixture-00000.warc.gz";

pub enum SiteKind {
    /// Archived homepage with this HTML body.
    Html(&'static str),
    /// Not present in the index at all.
    NotIndexed,
    /// Indexed, but the archive rejects the byte range.
    RangeRejected,
    /// Indexed, but the bytes at the location are not a WARC record.
    Garbage,
}

pub struct Site {
    pub domain: &'static str,
    pub kind: SiteKind,
}

/// The five-domain set covering every audit outcome.
pub fn outcome_sites() -> Vec<Site> {
    vec![
        Site {
            domain: "analysed.example",
            kind: SiteKind::Html(
                "<html><head><style>a{color:#000;background-color:#fff} p{color:#777}</style></head>\
                 <body><div style=\"background-color:#222\">x</div></body></html>",
            ),
        },
        Site { domain: "nocolour.example", kind: SiteKind::Html("<html><body><p>Plain page</p></body></html>") },
        Site { domain: "notfound.example", kind: SiteKind::NotIndexed },
        Site { domain: "fetchfail.example", kind: SiteKind::RangeRejected },
        Site { domain: "parsefail.example", kind: SiteKind::Garbage },
    ]
}

fn http_message(html: &str) -> Vec<u8> {
    format!("HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\n\r\n{html}", html.len())
        .into_bytes()
}

/// Local stand-in for both the index server and the archive host.
pub struct FixtureServer {
    pub url: String,
    requests: Arc<AtomicUsize>,
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
}

impl FixtureServer {
    pub fn start(sites: &[Site]) -> Self {
        let mut archive = Vec::new();
        let mut index: HashMap<String, String> = HashMap::new();
        let mut rejected = Vec::new();
        for site in sites {
            let url = format!("https://{}/", site.domain);
            let member = match &site.kind {
                SiteKind::NotIndexed => continue,
                SiteKind::Html(html) => gzip_member(&WarcRecord::response(&url, http_message(html)).to_bytes()),
                SiteKind::Garbage => b"this is not a warc record".to_vec(),
                SiteKind::RangeRejected => {
                    rejected.push(site.domain);
                    continue;
                }
            };
            let line = serde_json::json!({
                "urlkey": format!("{},)/", site.domain.split('.').rev().collect::<Vec<_>>().join(",")),
                "timestamp": "20990110120000",
                "url": url,
                "mime": "text/html",
                "mime-detected": "text/html",
                "status": "200",
                "digest": "sha1:FIXTURE",
                "length": member.len().to_string(),
                "offset": archive.len().to_string(),
                "filename": WARC_FILE,
            });
            index.insert(site.domain.to_string(), line.to_string());
            archive.extend_from_slice(&member);
        }
        for domain in rejected {
            let line = serde_json::json!({
                "url": format!("https://{domain}/"),
                "timestamp": "20990110120000",
                "mime-detected": "text/html",
                "status": "200",
                "length": "500",
                "offset": (archive.len() + 10_000).to_string(),
                "filename": WARC_FILE,
            });
            index.insert(domain.to_string(), line.to_string());
        }

        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind fixture server"));
        let url = format!("http://{}", server.server_addr().to_ip().expect("ip listener"));
        let requests = Arc::new(AtomicUsize::new(0));
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    requests.fetch_add(1, Ordering::SeqCst);
                    let response = respond(&request, &index, &archive);
                    let _ = request.respond(response);
                }
            })
        };
        FixtureServer { url, requests, server, handle: Some(handle) }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(request: &tiny_http::Request, index: &HashMap<String, String>, archive: &[u8]) -> Response<std::io::Cursor<Vec<u8>>> {
    let parsed = url::Url::parse(&format!("http://fixture{}", request.url())).expect("request url");
    if parsed.path().ends_with("-index") {
        let query: HashMap<String, String> = parsed.query_pairs().into_owned().collect();
        let pattern = query.get("url").cloned().unwrap_or_default();
        let domain = pattern.trim_start_matches("*.").trim_end_matches('/');
        return match index.get(domain) {
            None => Response::from_string("No Captures found").with_status_code(404),
            Some(_) if query.contains_key("showNumPages") => {
                Response::from_string(r#"{"pages": 1, "pageSize": 5, "blocks": 1}"#)
            }
            Some(line) => Response::from_string(format!("{line}\n")),
        };
    }
    if parsed.path().trim_start_matches('/') == WARC_FILE {
        let range = request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Range"))
            .and_then(|h| h.value.as_str().strip_prefix("bytes=").map(str::to_string));
        let Some((start, end)) = range.as_deref().and_then(|r| r.split_once('-')) else {
            return Response::from_data(archive.to_vec());
        };
        let (start, end): (usize, usize) = (start.parse().unwrap(), end.parse().unwrap());
        if start >= archive.len() {
            return Response::from_data(Vec::new()).with_status_code(416);
        }
        let end = end.min(archive.len() - 1);
        let header = Header::from_bytes("Content-Range", format!("bytes {start}-{end}/{}", archive.len())).unwrap();
        return Response::from_data(archive[start..=end].to_vec()).with_status_code(206).with_header(header);
    }
    Response::from_string("not found").with_status_code(404)
}

pub fn write_domains(dir: &Path, sites: &[Site]) -> std::path::PathBuf {
    let path = dir.join("domains.txt");
    let list: String = sites.iter().map(|s| format!("{}\n", s.domain)).collect();
    std::fs::write(&path, format!("# fixture domains\n{list}")).unwrap();
    path
}

/// Runs the binary with a clean environment.
pub fn cli(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crawlcontrast"));
    for (key, _) in std::env::vars() {
        if key.starts_with("CRAWLCONTRAST_") {
            cmd.env_remove(key);
        }
    }
    cmd.env("CRAWLCONTRAST_LOG", "warn").args(args).output().expect("spawn crawlcontrast")
}

/// Common flags pointing both endpoints at the fixture server.
pub fn server_args(server: &FixtureServer, domains: &Path, cache: &Path, out: &Path) -> Vec<String> {
    vec![
        "--crawl".into(),
        CRAWL.into(),
        "--domains".into(),
        domains.display().to_string(),
        "--cache-dir".into(),
        cache.display().to_string(),
        "--out".into(),
        out.display().to_string(),
        "--index-url".into(),
        server.url.clone(),
        "--archive-url".into(),
        server.url.clone(),
        "--workers".into(),
        "3".into(),
    ]
}

pub fn with_args<'a>(head: &[&'a str], tail: &'a [String]) -> Vec<&'a str> {
    head.iter().copied().chain(tail.iter().map(String::as_str)).collect()
}
