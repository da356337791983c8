//! CSS colour values.
//!
//! Covers the syntaxes that show up in static stylesheets: hex notation
//! (`#rgb`, `#rgba`, `#rrggbb`, `#rrggbbaa`), `rgb()`/`rgba()`,
//! `hsl()`/`hsla()` in both the comma and the space-separated forms, and the
//! 148 named colours. Keywords that do not denote a concrete colour
//! (`transparent`, `inherit`, `currentColor`, ...) are reported separately so
//! callers can drop them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::named::NAMED_COLORS;

/// An sRGB colour with 8-bit channels and an alpha in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgbaColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub alpha: f64,
}

impl RgbaColor {
    pub const BLACK: RgbaColor = RgbaColor::rgb(0, 0, 0);
    pub const WHITE: RgbaColor = RgbaColor::rgb(255, 255, 255);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        RgbaColor { r, g, b, alpha: 1.0 }
    }

    /// Alpha is clamped into `[0, 1]`; NaN becomes fully opaque.
    pub fn rgba(r: u8, g: u8, b: u8, alpha: f64) -> Self {
        let alpha = if alpha.is_nan() { 1.0 } else { alpha.clamp(0.0, 1.0) };
        RgbaColor { r, g, b, alpha }
    }

    pub fn is_opaque(&self) -> bool {
        self.alpha >= 1.0
    }

    pub fn channels(&self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    /// `#rrggbb` for opaque colours, `#rrggbbaa` otherwise.
    pub fn to_hex(&self) -> String {
        if self.is_opaque() {
            format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
        } else {
            let a = round_half_up(self.alpha * 255.0).clamp(0.0, 255.0) as u8;
            format!("#{:02x}{:02x}{:02x}{:02x}", self.r, self.g, self.b, a)
        }
    }
}

impl fmt::Display for RgbaColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for RgbaColor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for RgbaColor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        match parse_color(&text) {
            Ok(ColorValue::Color(c)) => Ok(c),
            _ => Err(serde::de::Error::custom(format!("not a colour: {text:?}"))),
        }
    }
}

/// Keywords accepted in colour position that carry no concrete colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonColorKeyword {
    Transparent,
    Inherit,
    CurrentColor,
    Initial,
    Unset,
    Revert,
}

impl NonColorKeyword {
    pub fn as_str(&self) -> &'static str {
        match self {
            NonColorKeyword::Transparent => "transparent",
            NonColorKeyword::Inherit => "inherit",
            NonColorKeyword::CurrentColor => "currentcolor",
            NonColorKeyword::Initial => "initial",
            NonColorKeyword::Unset => "unset",
            NonColorKeyword::Revert => "revert",
        }
    }

    fn from_lowercase(s: &str) -> Option<Self> {
        Some(match s {
            "transparent" => NonColorKeyword::Transparent,
            "inherit" => NonColorKeyword::Inherit,
            "currentcolor" => NonColorKeyword::CurrentColor,
            "initial" => NonColorKeyword::Initial,
            "unset" => NonColorKeyword::Unset,
            "revert" => NonColorKeyword::Revert,
            _ => return None,
        })
    }
}

/// Result of a successful parse: either a colour or an excluded keyword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColorValue {
    Color(RgbaColor),
    Keyword(NonColorKeyword),
}

impl ColorValue {
    pub fn color(&self) -> Option<RgbaColor> {
        match self {
            ColorValue::Color(c) => Some(*c),
            ColorValue::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColorParseError {
    #[error("empty colour value")]
    Empty,
    #[error("invalid hex colour")]
    InvalidHex,
    #[error("unknown colour keyword")]
    UnknownKeyword,
    #[error("unsupported colour function")]
    UnknownFunction,
    #[error("wrong number of arguments to colour function")]
    Arity,
    #[error("invalid colour function argument")]
    InvalidArgument,
    #[error("no colour in background shorthand")]
    NoColorInShorthand,
}

impl FromStr for ColorValue {
    type Err = ColorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_color(s)
    }
}

/// Parses one CSS colour token or colour function expression.
pub fn parse_color(text: &str) -> Result<ColorValue, ColorParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ColorParseError::Empty);
    }
    let lower = text.to_ascii_lowercase();

    if let Some(digits) = lower.strip_prefix('#') {
        return parse_hex(digits).map(ColorValue::Color);
    }
    if let Some(open) = lower.find('(') {
        let inner = lower[open + 1..]
            .strip_suffix(')')
            .ok_or(ColorParseError::InvalidArgument)?;
        let color = match lower[..open].trim_end() {
            "rgb" | "rgba" => parse_rgb_args(inner)?,
            "hsl" | "hsla" => parse_hsl_args(inner)?,
            _ => return Err(ColorParseError::UnknownFunction),
        };
        return Ok(ColorValue::Color(color));
    }
    if let Some(kw) = NonColorKeyword::from_lowercase(&lower) {
        return Ok(ColorValue::Keyword(kw));
    }
    named_color(&lower)
        .map(ColorValue::Color)
        .ok_or(ColorParseError::UnknownKeyword)
}

/// Looks up one of the 148 named colours (lower-case name).
pub fn named_color(name: &str) -> Option<RgbaColor> {
    NAMED_COLORS
        .binary_search_by(|(n, _)| (*n).cmp(name))
        .ok()
        .map(|i| {
            let [r, g, b] = NAMED_COLORS[i].1;
            RgbaColor::rgb(r, g, b)
        })
}

fn parse_hex(digits: &str) -> Result<RgbaColor, ColorParseError> {
    if !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(ColorParseError::InvalidHex);
    }
    let nibble = |i: usize| u8::from_str_radix(&digits[i..i + 1], 16).unwrap_or(0);
    let byte = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).unwrap_or(0);
    let (r, g, b, a) = match digits.len() {
        3 => (nibble(0) * 17, nibble(1) * 17, nibble(2) * 17, 255),
        4 => (nibble(0) * 17, nibble(1) * 17, nibble(2) * 17, nibble(3) * 17),
        6 => (byte(0), byte(2), byte(4), 255),
        8 => (byte(0), byte(2), byte(4), byte(6)),
        _ => return Err(ColorParseError::InvalidHex),
    };
    Ok(RgbaColor::rgba(r, g, b, f64::from(a) / 255.0))
}

/// Splits function arguments in either the legacy comma form or the
/// space-separated form with an optional `/ alpha`.
fn split_args(inner: &str) -> Result<Vec<&str>, ColorParseError> {
    let args: Vec<&str> = if inner.contains(',') {
        if inner.contains('/') {
            return Err(ColorParseError::InvalidArgument);
        }
        inner.split(',').map(str::trim).collect()
    } else {
        let mut parts = inner.splitn(2, '/');
        let mut args: Vec<&str> = parts.next().unwrap_or("").split_whitespace().collect();
        if let Some(alpha) = parts.next() {
            let alpha = alpha.trim();
            if args.len() != 3 || alpha.is_empty() || alpha.contains(char::is_whitespace) {
                return Err(ColorParseError::Arity);
            }
            args.push(alpha);
        }
        args
    };
    if args.len() != 3 && args.len() != 4 {
        return Err(ColorParseError::Arity);
    }
    if args.iter().any(|a| a.is_empty()) {
        return Err(ColorParseError::InvalidArgument);
    }
    Ok(args)
}

enum Numeric {
    Number(f64),
    Percent(f64),
}

fn parse_numeric(token: &str) -> Result<Numeric, ColorParseError> {
    let (body, percent) = match token.strip_suffix('%') {
        Some(b) => (b, true),
        None => (token, false),
    };
    let value = parse_number(body)?;
    Ok(if percent {
        Numeric::Percent(value)
    } else {
        Numeric::Number(value)
    })
}

// f64::from_str also accepts "inf" and "nan", which CSS does not.
fn parse_number(body: &str) -> Result<f64, ColorParseError> {
    let valid = !body.is_empty()
        && body
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'+' | b'-' | b'e'))
        && body.bytes().any(|b| b.is_ascii_digit());
    if !valid {
        return Err(ColorParseError::InvalidArgument);
    }
    body.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or(ColorParseError::InvalidArgument)
}

fn parse_alpha(token: Option<&&str>) -> Result<f64, ColorParseError> {
    match token {
        None => Ok(1.0),
        Some(t) => Ok(match parse_numeric(t)? {
            Numeric::Number(v) => v.clamp(0.0, 1.0),
            Numeric::Percent(p) => (p / 100.0).clamp(0.0, 1.0),
        }),
    }
}

fn parse_rgb_args(inner: &str) -> Result<RgbaColor, ColorParseError> {
    let args = split_args(inner)?;
    let mut channels = [0u8; 3];
    for (slot, token) in channels.iter_mut().zip(&args) {
        let value = match parse_numeric(token)? {
            Numeric::Number(v) => v,
            Numeric::Percent(p) => p.clamp(0.0, 100.0) * 2.55,
        };
        *slot = round_half_up(value.clamp(0.0, 255.0)) as u8;
    }
    let alpha = parse_alpha(args.get(3))?;
    Ok(RgbaColor::rgba(channels[0], channels[1], channels[2], alpha))
}

fn parse_hue(token: &str) -> Result<f64, ColorParseError> {
    let units: [(&str, f64); 4] = [
        ("grad", 0.9),
        ("turn", 360.0),
        ("deg", 1.0),
        ("rad", 180.0 / std::f64::consts::PI),
    ];
    for (suffix, scale) in units {
        if let Some(body) = token.strip_suffix(suffix) {
            return parse_number(body).map(|v| v * scale);
        }
    }
    parse_number(token)
}

fn parse_hsl_args(inner: &str) -> Result<RgbaColor, ColorParseError> {
    let args = split_args(inner)?;
    let hue = parse_hue(args[0])?;
    let fraction = |token: &str| -> Result<f64, ColorParseError> {
        let v = match parse_numeric(token)? {
            Numeric::Percent(p) | Numeric::Number(p) => p,
        };
        Ok((v / 100.0).clamp(0.0, 1.0))
    };
    let saturation = fraction(args[1])?;
    let lightness = fraction(args[2])?;
    let alpha = parse_alpha(args.get(3))?;
    let [r, g, b] = hsl_to_rgb(hue, saturation, lightness);
    Ok(RgbaColor::rgba(r, g, b, alpha))
}

/// Converts HSL (hue in degrees, saturation and lightness in `[0, 1]`) to
/// 8-bit sRGB, rounding each channel half-up.
pub fn hsl_to_rgb(hue: f64, saturation: f64, lightness: f64) -> [u8; 3] {
    let hue = hue.rem_euclid(360.0);
    let s = saturation.clamp(0.0, 1.0);
    let l = lightness.clamp(0.0, 1.0);
    let a = s * l.min(1.0 - l);
    let f = |n: f64| {
        let k = (n + hue / 30.0) % 12.0;
        l - a * (k - 3.0).min(9.0 - k).clamp(-1.0, 1.0)
    };
    [f(0.0), f(8.0), f(4.0)].map(|c| round_half_up((c * 255.0).clamp(0.0, 255.0)) as u8)
}

// The epsilon absorbs float noise like 127.49999999999999 from exact halves.
pub(crate) fn round_half_up(x: f64) -> f64 {
    (x + 0.5 + 1e-9).floor()
}
