//! Single WARC records and the HTTP responses archived inside them.
//!
//! A byte-range fetch returns exactly one record, normally as its own gzip
//! member. [`read_record`] unwraps that member and splits the record into
//! headers and content; [`parse_http_response`] then undoes the HTTP framing
//! (status line, chunked transfer coding, gzip/deflate content coding).

use std::io::{Read, Write};

use flate2::read::{DeflateDecoder, MultiGzDecoder, ZlibDecoder};
use flate2::write::GzEncoder;
use flate2::Compression;
use thiserror::Error;

/// Default cap on any decompressed payload.
pub const DEFAULT_MAX_DECOMPRESSED: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WarcError {
    #[error("malformed WARC record: {0}")]
    MalformedRecord(String),
    #[error("malformed HTTP response: {0}")]
    MalformedHttp(String),
}

fn malformed(msg: impl Into<String>) -> WarcError {
    WarcError::MalformedRecord(msg.into())
}

fn malformed_http(msg: impl Into<String>) -> WarcError {
    WarcError::MalformedHttp(msg.into())
}

#[derive(Debug, Clone, Copy)]
pub struct ReadLimits {
    pub max_decompressed: u64,
}

impl Default for ReadLimits {
    fn default() -> Self {
        ReadLimits { max_decompressed: DEFAULT_MAX_DECOMPRESSED }
    }
}

/// Ordered header list with case-insensitive lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeaderMap(Vec<(String, String)>);

impl HeaderMap {
    pub fn new() -> Self {
        HeaderMap(Vec::new())
    }

    /// First value for `name`.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push((name.into(), value.into()));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarcRecord {
    /// For example `WARC/1.0`.
    pub version: String,
    pub headers: HeaderMap,
    pub content: Vec<u8>,
}

impl WarcRecord {
    /// A `response` record with the usual mandatory headers.
    pub fn response(target_uri: &str, http_message: Vec<u8>) -> Self {
        let mut headers = HeaderMap::new();
        headers.insert("WARC-Type", "response");
        headers.insert("WARC-Target-URI", target_uri);
        headers.insert("WARC-Date", "2026-02-01T00:00:00Z");
        headers.insert("Content-Type", "application/http; msgtype=response");
        headers.insert("Content-Length", http_message.len().to_string());
        WarcRecord { version: "WARC/1.0".to_string(), headers, content: http_message }
    }

    pub fn record_type(&self) -> &str {
        self.headers.get("WARC-Type").unwrap_or("")
    }

    pub fn target_uri(&self) -> &str {
        self.headers.get("WARC-Target-URI").unwrap_or("")
    }

    /// Serialises the record, including the trailing blank lines.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.content.len() + 256);
        out.extend_from_slice(self.version.as_bytes());
        out.extend_from_slice(b"\r\n");
        for (name, value) in self.headers.iter() {
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(b": ");
            out.extend_from_slice(value.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.content);
        out.extend_from_slice(b"\r\n\r\n");
        out
    }
}

/// Compresses `data` as a single gzip member, the way records are stored in
/// `.warc.gz` files.
pub fn gzip_member(data: &[u8]) -> Vec<u8> {
    let mut encoder = GzEncoder::new(Vec::new(), Compression::default());
    encoder.write_all(data).expect("writing to a Vec cannot fail");
    encoder.finish().expect("writing to a Vec cannot fail")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedResponse {
    pub status_code: u16,
    pub http_headers: HeaderMap,
    pub body: Vec<u8>,
    /// `charset` parameter of the Content-Type header.
    pub declared_charset: Option<String>,
}

pub fn read_record(raw: &[u8]) -> Result<WarcRecord, WarcError> {
    read_record_with(raw, &ReadLimits::default())
}

/// Parses exactly one record, transparently gunzipping it first if needed.
pub fn read_record_with(raw: &[u8], limits: &ReadLimits) -> Result<WarcRecord, WarcError> {
    let inflated;
    let data: &[u8] = if raw.starts_with(&[0x1f, 0x8b]) {
        inflated = read_capped(MultiGzDecoder::new(raw), limits.max_decompressed)
            .map_err(|e| malformed(format!("gzip: {e}")))?;
        &inflated
    } else {
        raw
    };

    let mut lines = LineReader::new(data);
    let version = lines
        .next_line()
        .ok_or_else(|| malformed("empty record"))?;
    let version = String::from_utf8_lossy(version).trim().to_string();
    if !version.starts_with("WARC/") {
        return Err(malformed(format!("bad version line {version:?}")));
    }
    let headers = lines
        .headers()
        .ok_or_else(|| malformed("header block not terminated"))?;
    let length: usize = headers
        .get("Content-Length")
        .ok_or_else(|| malformed("missing Content-Length"))?
        .trim()
        .parse()
        .map_err(|_| malformed("invalid Content-Length"))?;
    let start = lines.position();
    let end = start
        .checked_add(length)
        .filter(|&end| end <= data.len())
        .ok_or_else(|| malformed(format!("truncated content: expected {length} bytes, have {}", data.len() - start)))?;
    Ok(WarcRecord { version, headers, content: data[start..end].to_vec() })
}

pub fn parse_http_response(content: &[u8]) -> Result<ArchivedResponse, WarcError> {
    parse_http_response_with(content, &ReadLimits::default())
}

pub fn parse_http_response_with(content: &[u8], limits: &ReadLimits) -> Result<ArchivedResponse, WarcError> {
    let mut lines = LineReader::new(content);
    let status_line = lines.next_line().ok_or_else(|| malformed_http("no status line"))?;
    let status_line = String::from_utf8_lossy(status_line);
    let mut parts = status_line.split_whitespace();
    let protocol = parts.next().unwrap_or("");
    if !protocol.starts_with("HTTP/") {
        return Err(malformed_http(format!("bad status line {status_line:?}")));
    }
    let status_code: u16 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .filter(|s| (100..=599).contains(s))
        .ok_or_else(|| malformed_http(format!("bad status code in {status_line:?}")))?;
    let http_headers = lines
        .headers()
        .ok_or_else(|| malformed_http("header block not terminated"))?;
    let mut body = content[lines.position()..].to_vec();

    let chunked = http_headers
        .get("Transfer-Encoding")
        .is_some_and(|te| te.to_ascii_lowercase().contains("chunked"));
    if chunked {
        body = dechunk(&body)?;
    }
    if let Some(coding) = http_headers.get("Content-Encoding") {
        body = decode_content(coding, body, limits.max_decompressed)?;
    }
    let declared_charset = http_headers.get("Content-Type").and_then(charset_param);
    Ok(ArchivedResponse { status_code, http_headers, body, declared_charset })
}

/// Removes chunked transfer coding. Trailers are discarded.
pub fn dechunk(body: &[u8]) -> Result<Vec<u8>, WarcError> {
    let mut out = Vec::with_capacity(body.len());
    let mut lines = LineReader::new(body);
    loop {
        let size_line = lines
            .next_line()
            .ok_or_else(|| malformed_http("missing last chunk"))?;
        let size_text = String::from_utf8_lossy(size_line);
        let size_text = size_text.split(';').next().unwrap_or("").trim();
        let size = usize::from_str_radix(size_text, 16)
            .map_err(|_| malformed_http(format!("bad chunk size {size_text:?}")))?;
        if size == 0 {
            return Ok(out);
        }
        let start = lines.position();
        let end = start
            .checked_add(size)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| malformed_http("truncated chunk"))?;
        out.extend_from_slice(&body[start..end]);
        lines.seek(end);
        lines.next_line();
    }
}

/// Applies chunked transfer coding with the given chunk sizes (cycled).
pub fn chunk(body: &[u8], sizes: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut rest = body;
    let mut sizes = sizes.iter().copied().filter(|&s| s > 0).cycle();
    while !rest.is_empty() {
        let n = sizes.next().unwrap_or(rest.len()).min(rest.len());
        out.extend_from_slice(format!("{n:x}\r\n").as_bytes());
        out.extend_from_slice(&rest[..n]);
        out.extend_from_slice(b"\r\n");
        rest = &rest[n..];
    }
    out.extend_from_slice(b"0\r\n\r\n");
    out
}

fn decode_content(coding: &str, body: Vec<u8>, cap: u64) -> Result<Vec<u8>, WarcError> {
    let coding = coding.trim().to_ascii_lowercase();
    let result = match coding.as_str() {
        "" | "identity" => return Ok(body),
        "gzip" | "x-gzip" => read_capped(MultiGzDecoder::new(body.as_slice()), cap),
        "deflate" => read_capped(ZlibDecoder::new(body.as_slice()), cap)
            .or_else(|_| read_capped(DeflateDecoder::new(body.as_slice()), cap)),
        other => return Err(malformed_http(format!("unsupported content-encoding {other:?}"))),
    };
    result.map_err(|e| malformed_http(format!("{coding}: {e}")))
}

fn read_capped(reader: impl Read, cap: u64) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    reader.take(cap.saturating_add(1)).read_to_end(&mut out)?;
    if out.len() as u64 > cap {
        return Err(std::io::Error::other(format!("decompressed size exceeds {cap} bytes")));
    }
    Ok(out)
}

fn charset_param(content_type: &str) -> Option<String> {
    content_type.split(';').skip(1).find_map(|param| {
        let (name, value) = param.split_once('=')?;
        name.trim()
            .eq_ignore_ascii_case("charset")
            .then(|| value.trim().trim_matches(['"', '\'']).to_string())
            .filter(|v| !v.is_empty())
    })
}

/// Line splitting over CRLF (or bare LF) framed data.
struct LineReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> LineReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        LineReader { data, pos: 0 }
    }

    fn position(&self) -> usize {
        self.pos
    }

    fn seek(&mut self, pos: usize) {
        self.pos = pos.min(self.data.len());
    }

    /// Next line without its terminator; `None` if no terminator remains.
    fn next_line(&mut self) -> Option<&'a [u8]> {
        let rest = &self.data[self.pos..];
        let nl = rest.iter().position(|&b| b == b'\n')?;
        self.pos += nl + 1;
        let line = &rest[..nl];
        Some(line.strip_suffix(b"\r").unwrap_or(line))
    }

    /// Reads `Name: value` lines up to and including the blank line.
    fn headers(&mut self) -> Option<HeaderMap> {
        let mut headers: Vec<(String, String)> = Vec::new();
        loop {
            let line = self.next_line()?;
            if line.is_empty() {
                return Some(HeaderMap(headers));
            }
            let text = String::from_utf8_lossy(line);
            if line[0] == b' ' || line[0] == b'\t' {
                if let Some((_, value)) = headers.last_mut() {
                    value.push(' ');
                    value.push_str(text.trim());
                }
                continue;
            }
            if let Some((name, value)) = text.split_once(':') {
                headers.push((name.trim().to_string(), value.trim().to_string()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &[u8] = b"WARC/1.0\r\nWARC-Type: response\r\nContent-Length: 5\r\n\r\nhello";

    #[test]
    fn minimal_record() {
        let rec = read_record(MINIMAL).unwrap();
        assert_eq!(rec.version, "WARC/1.0");
        assert_eq!(rec.record_type(), "response");
        assert_eq!(rec.content, b"hello");
    }

    #[test]
    fn gzip_is_transparent() {
        assert_eq!(read_record(&gzip_member(MINIMAL)).unwrap(), read_record(MINIMAL).unwrap());
    }

    #[test]
    fn warc_1_1_and_case_insensitive_headers() {
        let raw = b"WARC/1.1\r\nwarc-type: response\r\ncontent-length: 2\r\n\r\nok\r\n\r\n";
        let rec = read_record(raw).unwrap();
        assert_eq!(rec.record_type(), "response");
        assert_eq!(rec.content, b"ok");
    }

    #[test]
    fn truncated_content() {
        let raw = b"WARC/1.0\r\nWARC-Type: response\r\nContent-Length: 50\r\n\r\nhello";
        assert!(matches!(read_record(raw), Err(WarcError::MalformedRecord(_))));
        let gz = gzip_member(raw);
        assert!(matches!(read_record(&gz), Err(WarcError::MalformedRecord(_))));
        assert!(matches!(read_record(&gz[..gz.len() / 2]), Err(WarcError::MalformedRecord(_))));
    }

    #[test]
    fn malformed_records() {
        for raw in [
            &b""[..],
            b"HTTP/1.1 200 OK\r\n\r\n",
            b"WARC/1.0\r\nWARC-Type: response\r\n\r\nhello",
            b"WARC/1.0\r\nContent-Length: x\r\n\r\nhello",
            b"WARC/1.0\r\nContent-Length: 5\r\n",
        ] {
            assert!(matches!(read_record(raw), Err(WarcError::MalformedRecord(_))), "{raw:?}");
        }
    }

    #[test]
    fn decompression_cap() {
        let big = vec![b'a'; 4096];
        let rec = WarcRecord::response("http://x/", big).to_bytes();
        let gz = gzip_member(&rec);
        let limits = ReadLimits { max_decompressed: 1024 };
        assert!(matches!(read_record_with(&gz, &limits), Err(WarcError::MalformedRecord(_))));
        assert!(read_record(&gz).is_ok());
    }

    #[test]
    fn http_basic() {
        let resp = parse_http_response(b"HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\n\r\n<html>").unwrap();
        assert_eq!(resp.status_code, 200);
        assert_eq!(resp.declared_charset.as_deref(), Some("utf-8"));
        assert_eq!(resp.body, b"<html>");
    }

    #[test]
    fn http_chunked() {
        let resp = parse_http_response(b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n5\r\nhello\r\n0\r\n\r\n").unwrap();
        assert_eq!(resp.body, b"hello");
        let resp = parse_http_response(b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n3;x=y\r\nabc\r\n2\r\nde\r\n0\r\nTrailer: 1\r\n\r\n").unwrap();
        assert_eq!(resp.body, b"abcde");
        assert!(parse_http_response(b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\nzz\r\n").is_err());
        assert!(parse_http_response(b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n10\r\nabc").is_err());
    }

    #[test]
    fn http_redirect_status() {
        let resp = parse_http_response(b"HTTP/1.1 301 Moved\r\nLocation: /x\r\n\r\n").unwrap();
        assert_eq!(resp.status_code, 301);
    }

    #[test]
    fn http_content_encodings() {
        let html = b"<style>a{color:red}</style>";
        let mut msg = b"HTTP/1.1 200 OK\r\nContent-Encoding: gzip\r\nContent-Type: text/html;charset=\"ISO-8859-1\"\r\n\r\n".to_vec();
        msg.extend(gzip_member(html));
        let resp = parse_http_response(&msg).unwrap();
        assert_eq!(resp.body, html);
        assert_eq!(resp.declared_charset.as_deref(), Some("ISO-8859-1"));

        let mut z = flate2::write::ZlibEncoder::new(Vec::new(), Compression::default());
        z.write_all(html).unwrap();
        let mut msg = b"HTTP/1.0 200 OK\r\nContent-Encoding: deflate\r\n\r\n".to_vec();
        msg.extend(z.finish().unwrap());
        assert_eq!(parse_http_response(&msg).unwrap().body, html);

        let mut msg = b"HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\nContent-Encoding: gzip\r\n\r\n".to_vec();
        msg.extend(chunk(&gzip_member(html), &[7]));
        assert_eq!(parse_http_response(&msg).unwrap().body, html);

        assert!(parse_http_response(b"HTTP/1.1 200 OK\r\nContent-Encoding: br\r\n\r\nxx").is_err());
    }

    #[test]
    fn http_malformed() {
        assert!(matches!(parse_http_response(b"<html>"), Err(WarcError::MalformedHttp(_))));
        assert!(matches!(parse_http_response(b"HTTP/1.1 999 Nope\r\n\r\n"), Err(WarcError::MalformedHttp(_))));
        assert!(matches!(parse_http_response(b""), Err(WarcError::MalformedHttp(_))));
    }

    proptest! {
        #[test]
        fn chunk_roundtrip(body in prop::collection::vec(any::<u8>(), 0..2048), sizes in prop::collection::vec(1usize..300, 1..6)) {
            prop_assert_eq!(dechunk(&chunk(&body, &sizes)).unwrap(), body);
        }

        #[test]
        fn record_roundtrip(uri in "[a-z]{1,10}", body in prop::collection::vec(any::<u8>(), 0..1024), gz in any::<bool>()) {
            let mut rec = WarcRecord::response(&format!("https://{uri}.example/"), body);
            rec.headers.insert("WARC-Payload-Digest", "sha1:ABC");
            let bytes = rec.to_bytes();
            let bytes = if gz { gzip_member(&bytes) } else { bytes };
            prop_assert_eq!(read_record(&bytes).unwrap(), rec);
        }

        #[test]
        fn never_panics(raw in prop::collection::vec(any::<u8>(), 0..512)) {
            let _ = read_record(&raw);
            let _ = parse_http_response(&raw);
        }
    }
}
