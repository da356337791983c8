//! Tolerant CSS scanning for colour-bearing declarations.
//!
//! This is not a conforming CSS tokenizer. It understands just enough
//! structure (comments, strings, parentheses, nested blocks) to split a
//! stylesheet into rules and declarations without being fooled by
//! punctuation inside `url(...)` or quoted strings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::color::{parse_color, ColorValue};

/// The three properties that contribute colours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorProperty {
    #[serde(rename = "color")]
    Color,
    #[serde(rename = "background-color")]
    BackgroundColor,
    #[serde(rename = "background")]
    Background,
}

impl ColorProperty {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "color" => Some(ColorProperty::Color),
            "background-color" => Some(ColorProperty::BackgroundColor),
            "background" => Some(ColorProperty::Background),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ColorProperty::Color => "color",
            ColorProperty::BackgroundColor => "background-color",
            ColorProperty::Background => "background",
        }
    }
}

impl fmt::Display for ColorProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One colour-bearing declaration inside a style block. `rule` numbers the
/// declaration blocks of this stylesheet in order of appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CssDeclaration {
    pub rule: usize,
    pub selector: String,
    pub property: ColorProperty,
    pub raw_value: String,
}

/// Splits the contents of one `<style>` element into colour declarations.
///
/// Comments are removed, block at-rules (`@media`, `@supports`, ...) are
/// recursed into, statement at-rules (`@import`, `@charset`) are skipped,
/// and a final block without its closing brace is dropped.
pub fn parse_style_block(css: &str) -> Vec<CssDeclaration> {
    let text = strip_comments(css);
    let mut out = Vec::new();
    let mut next_rule = 0;
    parse_rule_list(&text, &mut out, &mut next_rule);
    out
}

/// Parses the body of a `style="..."` attribute as a single declaration block.
pub fn parse_inline_style(style: &str) -> Vec<(ColorProperty, String)> {
    let text = strip_comments(style);
    let mut out = Vec::new();
    let mut next_rule = 0;
    parse_declaration_block("", &text, &mut out, &mut next_rule);
    out.into_iter().map(|d| (d.property, d.raw_value)).collect()
}

/// Returns the first top-level token of a `background` shorthand that parses
/// as a colour or colour keyword. Function arguments (gradients, `url()`)
/// are never inspected.
pub fn extract_background_shorthand_color(value: &str) -> Option<ColorValue> {
    top_level_tokens(value)
        .into_iter()
        .find_map(|token| parse_color(token).ok())
}

/// Splits at top-level whitespace and commas, keeping parenthesised groups
/// and quoted strings intact.
fn top_level_tokens(value: &str) -> Vec<&str> {
    let bytes = value.as_bytes();
    let mut tokens = Vec::new();
    let mut depth = 0usize;
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'"' | b'\'' => {
                start.get_or_insert(i);
                i = skip_string(bytes, i);
                continue;
            }
            b'(' => {
                start.get_or_insert(i);
                depth += 1;
            }
            b')' => depth = depth.saturating_sub(1),
            b',' | b' ' | b'\t' | b'\n' | b'\r' | b'\x0c' if depth == 0 => {
                if let Some(s) = start.take() {
                    tokens.push(&value[s..i]);
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        tokens.push(&value[s..]);
    }
    tokens
}

/// Index just past the string literal starting at `start`. Strings end at
/// the matching quote or at a newline.
fn skip_string(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => return i,
            b if b == quote => return i + 1,
            _ => i += 1,
        }
    }
    bytes.len()
}

fn strip_comments(css: &str) -> String {
    let bytes = css.as_bytes();
    let mut out = String::with_capacity(css.len());
    let mut i = 0;
    let mut copied = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' | b'\'' => i = skip_string(bytes, i),
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                out.push_str(&css[copied..i]);
                out.push(' ');
                i = match css[i + 2..].find("*/") {
                    Some(end) => i + 2 + end + 2,
                    None => bytes.len(),
                };
                copied = i;
            }
            _ => i += 1,
        }
    }
    if copied < bytes.len() {
        out.push_str(&css[copied..]);
    }
    out
}

enum Stop {
    Semicolon(usize),
    Open(usize),
    Close(usize),
}

/// Finds the next top-level `;`, `{` or `}` at or after `from`.
fn next_stop(bytes: &[u8], from: usize) -> Option<Stop> {
    let mut depth = 0usize;
    let mut i = from;
    while i < bytes.len() {
        match bytes[i] {
            b'"' | b'\'' => {
                i = skip_string(bytes, i);
                continue;
            }
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b';' if depth == 0 => return Some(Stop::Semicolon(i)),
            b'{' => return Some(Stop::Open(i)),
            b'}' => return Some(Stop::Close(i)),
            _ => {}
        }
        i += 1;
    }
    None
}

/// Index of the `}` matching the `{` at `open`.
fn matching_brace(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'"' | b'\'' => {
                i = skip_string(bytes, i);
                continue;
            }
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn parse_rule_list(text: &str, out: &mut Vec<CssDeclaration>, next_rule: &mut usize) {
    let bytes = text.as_bytes();
    let mut i = 0;
    while let Some(stop) = next_stop(bytes, i) {
        match stop {
            Stop::Semicolon(pos) | Stop::Close(pos) => i = pos + 1,
            Stop::Open(pos) => {
                let Some(close) = matching_brace(bytes, pos) else {
                    return;
                };
                let prelude = text[i..pos].trim();
                let body = &text[pos + 1..close];
                if prelude.starts_with('@') {
                    parse_rule_list(body, out, next_rule);
                } else {
                    parse_declaration_block(prelude, body, out, next_rule);
                }
                i = close + 1;
            }
        }
    }
}

/// Parses one declaration block, recursing into nested rules (CSS nesting),
/// each of which gets its own rule number.
fn parse_declaration_block(
    selector: &str,
    body: &str,
    out: &mut Vec<CssDeclaration>,
    next_rule: &mut usize,
) {
    let rule = *next_rule;
    *next_rule += 1;
    let bytes = body.as_bytes();
    let mut i = 0;
    loop {
        match next_stop(bytes, i) {
            None => {
                push_declaration(rule, selector, &body[i..], out);
                return;
            }
            Some(Stop::Semicolon(pos)) | Some(Stop::Close(pos)) => {
                push_declaration(rule, selector, &body[i..pos], out);
                i = pos + 1;
            }
            Some(Stop::Open(pos)) => {
                let Some(close) = matching_brace(bytes, pos) else {
                    return;
                };
                let prelude = body[i..pos].trim();
                let inner = &body[pos + 1..close];
                if prelude.starts_with('@') {
                    parse_declaration_block(selector, inner, out, next_rule);
                } else {
                    parse_declaration_block(prelude, inner, out, next_rule);
                }
                i = close + 1;
            }
        }
    }
}

fn push_declaration(rule: usize, selector: &str, text: &str, out: &mut Vec<CssDeclaration>) {
    let Some((name, value)) = text.split_once(':') else {
        return;
    };
    let name = name.trim().to_ascii_lowercase();
    let Some(property) = ColorProperty::from_name(&name) else {
        return;
    };
    let value = strip_important(value.trim());
    if value.is_empty() {
        return;
    }
    out.push(CssDeclaration {
        rule,
        selector: selector.to_string(),
        property,
        raw_value: value.to_string(),
    });
}

fn strip_important(value: &str) -> &str {
    if let Some(bang) = value.rfind('!') {
        if value[bang + 1..].trim().eq_ignore_ascii_case("important") {
            return value[..bang].trim_end();
        }
    }
    value
}
