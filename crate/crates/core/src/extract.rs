//! Colour declarations from archived HTML.
//!
//! A forgiving scanner rather than a DOM parser: it finds `<style>` element
//! contents and `style` attributes, skipping comments, CDATA sections and
//! script bodies.

use std::borrow::Cow;

use encoding_rs::{Encoding, UTF_8, WINDOWS_1252};
use serde::{Deserialize, Serialize};

use crate::color::{parse_color, ColorParseError, ColorValue};
use crate::css::{extract_background_shorthand_color, parse_inline_style, parse_style_block, ColorProperty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Embedded,
    Inline,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Embedded => "embedded",
            Origin::Inline => "inline",
        }
    }
}

/// Groups declarations from one CSS rule or one `style` attribute. Numbered
/// in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct StyleDeclaration {
    pub property: ColorProperty,
    pub raw_value: String,
    pub parsed: Result<ColorValue, ColorParseError>,
    pub origin: Origin,
    pub rule_id: RuleId,
    /// Selector text for embedded rules; empty for inline styles.
    pub selector: String,
}

impl StyleDeclaration {
    fn new(property: ColorProperty, raw_value: String, origin: Origin, rule_id: RuleId, selector: String) -> Self {
        let parsed = match property {
            ColorProperty::Background => {
                extract_background_shorthand_color(&raw_value).ok_or(ColorParseError::NoColorInShorthand)
            }
            _ => parse_color(&raw_value),
        };
        StyleDeclaration { property, raw_value, parsed, origin, rule_id, selector }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    /// Ignore everything inside `<noscript>` elements.
    pub skip_noscript: bool,
}

/// Extracts every `color`, `background-color` and `background` declaration
/// from `<style>` blocks and `style` attributes, in document order.
pub fn extract_declarations(html: &[u8], charset_hint: Option<&str>) -> Vec<StyleDeclaration> {
    extract_declarations_with(html, charset_hint, &ExtractOptions::default())
}

pub fn extract_declarations_with(
    html: &[u8],
    charset_hint: Option<&str>,
    options: &ExtractOptions,
) -> Vec<StyleDeclaration> {
    let text = decode_html(html, charset_hint);
    Scanner::new(&text, options).run()
}

/// Decodes using, in order: the transport charset, a `<meta>` declaration in
/// the first 1024 bytes, UTF-8. A byte-order mark overrides all of these.
pub fn decode_html<'a>(html: &'a [u8], charset_hint: Option<&str>) -> Cow<'a, str> {
    let encoding = charset_hint
        .and_then(|label| Encoding::for_label(label.trim().as_bytes()))
        .or_else(|| sniff_meta_charset(html))
        .unwrap_or(UTF_8);
    let (text, _, _) = encoding.decode(html);
    text
}

fn sniff_meta_charset(html: &[u8]) -> Option<&'static Encoding> {
    let prefix = &html[..html.len().min(1024)];
    let lower: Vec<u8> = prefix.to_ascii_lowercase();
    let mut from = 0;
    while let Some(pos) = find(&lower, b"<meta", from) {
        let tag_end = find(&lower, b">", pos).unwrap_or(lower.len());
        let tag = &lower[pos..tag_end];
        if let Some(cs) = find(tag, b"charset", 0) {
            let mut i = cs + b"charset".len();
            while i < tag.len() && tag[i].is_ascii_whitespace() {
                i += 1;
            }
            if tag.get(i) == Some(&b'=') {
                i += 1;
                while i < tag.len() && (tag[i].is_ascii_whitespace() || tag[i] == b'"' || tag[i] == b'\'') {
                    i += 1;
                }
                let start = i;
                while i < tag.len() && !matches!(tag[i], b'"' | b'\'' | b';' | b'>' | b'/') && !tag[i].is_ascii_whitespace() {
                    i += 1;
                }
                if let Some(enc) = Encoding::for_label(&tag[start..i]) {
                    // A UTF-16 label inside ASCII-compatible bytes cannot be right.
                    return Some(match enc.name() {
                        "UTF-16LE" | "UTF-16BE" => UTF_8,
                        "x-user-defined" => WINDOWS_1252,
                        _ => enc,
                    });
                }
            }
        }
        from = tag_end;
    }
    None
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from >= haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

struct Scanner<'a> {
    text: &'a str,
    lower: String,
    options: &'a ExtractOptions,
    next_rule: u32,
    out: Vec<StyleDeclaration>,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, options: &'a ExtractOptions) -> Self {
        Scanner { text, lower: text.to_ascii_lowercase(), options, next_rule: 0, out: Vec::new() }
    }

    fn run(mut self) -> Vec<StyleDeclaration> {
        let len = self.text.len();
        let mut i = 0;
        while let Some(lt) = self.lower[i..].find('<').map(|p| p + i) {
            let rest = &self.lower[lt..];
            i = if rest.starts_with("<!--") {
                self.skip_past(lt + 4, "-->")
            } else if rest.starts_with("<![cdata[") {
                self.skip_past(lt + 9, "]]>")
            } else if rest.starts_with("<!") || rest.starts_with("<?") || rest.starts_with("</") {
                self.skip_past(lt + 2, ">")
            } else if rest[1..].starts_with(|c: char| c.is_ascii_alphabetic()) {
                self.start_tag(lt)
            } else {
                lt + 1
            };
            if i >= len {
                break;
            }
        }
        self.out
    }

    fn skip_past(&self, from: usize, marker: &str) -> usize {
        match self.lower.get(from..).and_then(|s| s.find(marker)) {
            Some(p) => from + p + marker.len(),
            None => self.text.len(),
        }
    }

    /// Handles the start tag at `lt`; returns the index to resume scanning.
    fn start_tag(&mut self, lt: usize) -> usize {
        let bytes = self.lower.as_bytes();
        let mut i = lt + 1;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'>' | b'/') {
            i += 1;
        }
        let name = self.lower[lt + 1..i].to_string();
        let (attrs, after) = self.attributes(i);
        for (attr, value) in attrs {
            if attr == "style" {
                self.inline_style(&value);
            }
        }
        match name.as_str() {
            "style" => {
                let end = self.lower[after..].find("</style").map(|p| p + after).unwrap_or(self.text.len());
                self.style_block(after, end);
                end
            }
            "script" | "textarea" => self.raw_text_end(after, &name),
            "noscript" if self.options.skip_noscript => self.raw_text_end(after, &name),
            _ => after,
        }
    }

    fn raw_text_end(&self, from: usize, name: &str) -> usize {
        let close = format!("</{name}");
        self.lower[from..].find(&close).map(|p| p + from).unwrap_or(self.text.len())
    }

    /// Parses attributes from `from` up to the closing `>`.
    fn attributes(&self, from: usize) -> (Vec<(String, String)>, usize) {
        let bytes = self.text.as_bytes();
        let mut attrs = Vec::new();
        let mut i = from;
        loop {
            while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
                i += 1;
            }
            if i >= bytes.len() {
                return (attrs, bytes.len());
            }
            if bytes[i] == b'>' {
                return (attrs, i + 1);
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>' | b'/') {
                i += 1;
            }
            if i == start {
                i += 1;
                continue;
            }
            let name = self.lower[start..i].to_string();
            let mut j = i;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'=' {
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                let value;
                if j < bytes.len() && (bytes[j] == b'"' || bytes[j] == b'\'') {
                    let quote = bytes[j] as char;
                    let vstart = j + 1;
                    let vend = self.text[vstart..].find(quote).map(|p| p + vstart).unwrap_or(bytes.len());
                    value = &self.text[vstart..vend];
                    i = (vend + 1).min(bytes.len());
                } else {
                    let vstart = j;
                    while j < bytes.len() && !bytes[j].is_ascii_whitespace() && bytes[j] != b'>' {
                        j += 1;
                    }
                    value = &self.text[vstart..j];
                    i = j;
                }
                attrs.push((name, decode_entities(value).into_owned()));
            } else {
                attrs.push((name, String::new()));
            }
        }
    }

    fn take_rule_id(&mut self) -> RuleId {
        let id = RuleId(self.next_rule);
        self.next_rule += 1;
        id
    }

    fn inline_style(&mut self, style: &str) {
        let decls = parse_inline_style(style);
        if decls.is_empty() {
            return;
        }
        let rule_id = self.take_rule_id();
        for (property, value) in decls {
            self.out.push(StyleDeclaration::new(property, value, Origin::Inline, rule_id, String::new()));
        }
    }

    fn style_block(&mut self, start: usize, end: usize) {
        let decls = parse_style_block(&self.text[start..end]);
        let base = self.next_rule;
        let mut used = 0;
        for d in decls {
            let local = u32::try_from(d.rule).unwrap_or(u32::MAX - base);
            used = used.max(local + 1);
            self.out.push(StyleDeclaration::new(d.property, d.raw_value, Origin::Embedded, RuleId(base + local), d.selector));
        }
        self.next_rule = base + used;
    }
}

/// Decodes the character references that show up in `style` attributes.
fn decode_entities(value: &str) -> Cow<'_, str> {
    if !value.contains('&') {
        return Cow::Borrowed(value);
    }
    let mut out = String::with_capacity(value.len());
    let mut rest = value;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let entity = &rest[1..semi];
            let ch = match entity {
                "quot" => Some('"'),
                "apos" => Some('\''),
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "nbsp" => Some('\u{a0}'),
                _ => entity.strip_prefix('#').and_then(|num| {
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok(),
                        None => num.parse::<u32>().ok(),
                    };
                    code.and_then(char::from_u32)
                }),
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}
