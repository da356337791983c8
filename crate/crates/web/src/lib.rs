//! WebAssembly bindings for the in-browser contrast checker.
//!
//! Every export takes plain strings and returns a JSON document so the page
//! script stays free of generated glue types.

use crawlcontrast::extract::ExtractOptions;
use crawlcontrast::{analyse_html, assess, hsl_to_rgb, parse_color, ColorValue, RgbaColor};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct PairCheck {
    pub fg: String,
    pub bg: String,
    pub ratio: f64,
    pub passes_normal: bool,
    pub passes_large: bool,
}

#[derive(Serialize)]
pub struct HtmlAudit {
    pub declarations: usize,
    pub unparsed_declarations: usize,
    pub pairings: Vec<AuditedPair>,
    pub passing_normal: usize,
    pub pass_rate_normal: Option<f64>,
}

#[derive(Serialize)]
pub struct AuditedPair {
    pub fg: String,
    pub bg: String,
    pub provenance: &'static str,
    pub ratio: f64,
    pub passes_normal: bool,
    pub passes_large: bool,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub lightness: u32,
    pub fg: String,
    pub ratio: f64,
    pub passes_normal: bool,
    pub passes_large: bool,
}

#[derive(Serialize)]
pub struct Sweep {
    pub hue: f64,
    pub saturation: f64,
    pub bg: String,
    pub points: Vec<SweepPoint>,
    /// Passing foreground closest in lightness to the requested colour.
    pub nearest_passing: Option<String>,
}

fn opaque(text: &str) -> Result<RgbaColor, String> {
    match parse_color(text) {
        Ok(ColorValue::Color(c)) => Ok(crawlcontrast::resolve_alpha(c, RgbaColor::WHITE)),
        Ok(ColorValue::Keyword(k)) => Err(format!("`{}` is not a concrete colour", k.as_str())),
        Err(e) => Err(e.to_string()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serialises")
}

/// Contrast of two CSS colours. Translucent inputs are composited the way the
/// auditor does: background over white, foreground over the background.
pub fn check_pair_json(fg: &str, bg: &str) -> Result<String, String> {
    let bg = opaque(bg)?;
    let fg = match parse_color(fg) {
        Ok(ColorValue::Color(c)) => crawlcontrast::resolve_alpha(c, bg),
        _ => opaque(fg)?,
    };
    let result = assess(fg, bg);
    Ok(to_json(&PairCheck {
        fg: fg.to_hex(),
        bg: bg.to_hex(),
        ratio: result.ratio,
        passes_normal: result.passes_normal,
        passes_large: result.passes_large,
    }))
}

pub fn audit_html_json(html: &str) -> String {
    let analysis = analyse_html(html.as_bytes(), Some("utf-8"), &ExtractOptions::default());
    let pairings: Vec<AuditedPair> = analysis
        .pairings
        .iter()
        .map(|p| AuditedPair {
            fg: p.fg.to_hex(),
            bg: p.bg.to_hex(),
            provenance: p.provenance.as_str(),
            ratio: p.ratio,
            passes_normal: p.passes_normal,
            passes_large: p.passes_large,
        })
        .collect();
    let passing_normal = pairings.iter().filter(|p| p.passes_normal).count();
    to_json(&HtmlAudit {
        declarations: analysis.declarations.len(),
        unparsed_declarations: analysis.declarations.iter().filter(|d| d.parsed.is_err()).count(),
        pass_rate_normal: (!pairings.is_empty()).then(|| passing_normal as f64 / pairings.len() as f64),
        passing_normal,
        pairings,
    })
}

fn hue_and_saturation(c: RgbaColor) -> (f64, f64, f64) {
    let [r, g, b] = c.channels().map(|v| f64::from(v) / 255.0);
    let (max, min) = (r.max(g).max(b), r.min(g).min(b));
    let l = (max + min) / 2.0;
    let d = max - min;
    if d == 0.0 {
        return (0.0, 0.0, l);
    }
    let s = d / (1.0 - (2.0 * l - 1.0).abs());
    let h = if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, s, l)
}

/// Holds the foreground's hue and saturation fixed and scores every whole
/// lightness percentage against the background.
pub fn lightness_sweep_json(fg: &str, bg: &str) -> Result<String, String> {
    let fg = opaque(fg)?;
    let bg = opaque(bg)?;
    let (hue, saturation, lightness) = hue_and_saturation(fg);
    let points: Vec<SweepPoint> = (0..=100u32)
        .map(|l| {
            let [r, g, b] = hsl_to_rgb(hue, saturation, f64::from(l) / 100.0);
            let c = RgbaColor::rgb(r, g, b);
            let result = assess(c, bg);
            SweepPoint {
                lightness: l,
                fg: c.to_hex(),
                ratio: result.ratio,
                passes_normal: result.passes_normal,
                passes_large: result.passes_large,
            }
        })
        .collect();
    let nearest_passing = points
        .iter()
        .filter(|p| p.passes_normal)
        .min_by(|a, b| {
            let da = (f64::from(a.lightness) / 100.0 - lightness).abs();
            let db = (f64::from(b.lightness) / 100.0 - lightness).abs();
            da.total_cmp(&db)
        })
        .map(|p| p.fg.clone());
    Ok(to_json(&Sweep { hue, saturation, bg: bg.to_hex(), points, nearest_passing }))
}

#[wasm_bindgen]
pub fn check_pair(fg: &str, bg: &str) -> Result<String, JsError> {
    check_pair_json(fg, bg).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn audit_html(html: &str) -> String {
    audit_html_json(html)
}

#[wasm_bindgen]
pub fn lightness_sweep(fg: &str, bg: &str) -> Result<String, JsError> {
    lightness_sweep_json(fg, bg).map_err(|e| JsError::new(&e))
}
