//! WCAG 2.x relative luminance and contrast ratio.

use serde::{Deserialize, Serialize};

use crate::color::RgbaColor;

/// Minimum ratio for normal-size text at Level AA (SC 1.4.3).
pub const NORMAL_TEXT_THRESHOLD: f64 = 4.5;
/// Minimum ratio for large text at Level AA (SC 1.4.3).
pub const LARGE_TEXT_THRESHOLD: f64 = 3.0;

/// Relative luminance in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Luminance(pub f64);

impl Luminance {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub ratio: f64,
    pub passes_normal: bool,
    pub passes_large: bool,
}

/// Gamma-expands one 8-bit sRGB channel using the WCAG 2.1 piecewise
/// definition (knee at 0.03928).
pub fn linearize_channel(c8: u8) -> f64 {
    let c = f64::from(c8) / 255.0;
    if c <= 0.03928 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Alpha is ignored; composite first if the colour is translucent.
pub fn relative_luminance(color: RgbaColor) -> Luminance {
    Luminance(
        0.2126 * linearize_channel(color.r)
            + 0.7152 * linearize_channel(color.g)
            + 0.0722 * linearize_channel(color.b),
    )
}

pub fn contrast_ratio(a: RgbaColor, b: RgbaColor) -> f64 {
    let la = relative_luminance(a).value();
    let lb = relative_luminance(b).value();
    let (lighter, darker) = if la >= lb { (la, lb) } else { (lb, la) };
    (lighter + 0.05) / (darker + 0.05)
}

/// Evaluates a pair against both Level AA thresholds on the unrounded ratio.
pub fn assess(a: RgbaColor, b: RgbaColor) -> ContrastResult {
    let ratio = contrast_ratio(a, b);
    ContrastResult {
        ratio,
        passes_normal: ratio >= NORMAL_TEXT_THRESHOLD,
        passes_large: ratio >= LARGE_TEXT_THRESHOLD,
    }
}
