//! Foreground/background pairings from extracted declarations.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::color::{round_half_up, ColorValue, RgbaColor};
use crate::css::ColorProperty;
use crate::extract::{RuleId, StyleDeclaration};

/// Background assumed when a rule only sets `color`.
pub const ASSUMED_BACKGROUND: RgbaColor = RgbaColor::WHITE;
/// Text colour assumed when a rule only sets a background.
pub const ASSUMED_FOREGROUND: RgbaColor = RgbaColor::BLACK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    AssumedWhiteBg,
    AssumedBlackFg,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Explicit => "explicit",
            Provenance::AssumedWhiteBg => "assumed-white-bg",
            Provenance::AssumedBlackFg => "assumed-black-fg",
        }
    }
}

/// An opaque foreground/background pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorPairing {
    pub fg: RgbaColor,
    pub bg: RgbaColor,
    pub provenance: Provenance,
    pub first_rule_id: RuleId,
}

impl ColorPairing {
    pub fn key(&self) -> ([u8; 3], [u8; 3]) {
        (self.fg.channels(), self.bg.channels())
    }
}

/// Source-over compositing of `color` onto an opaque `under`.
pub fn resolve_alpha(color: RgbaColor, under: RgbaColor) -> RgbaColor {
    if color.is_opaque() {
        return RgbaColor::rgb(color.r, color.g, color.b);
    }
    let a = color.alpha;
    let mix = |c: u8, u: u8| round_half_up(a * f64::from(c) + (1.0 - a) * f64::from(u)).clamp(0.0, 255.0) as u8;
    RgbaColor::rgb(mix(color.r, under.r), mix(color.g, under.g), mix(color.b, under.b))
}

#[derive(Default)]
struct RuleGroup {
    color: Option<ColorValue>,
    background_color: Option<ColorValue>,
    background: Option<ColorValue>,
}

impl RuleGroup {
    fn foreground(&self) -> Option<RgbaColor> {
        self.color.and_then(|v| v.color())
    }

    // The longhand wins whenever the rule declares it at all.
    fn background(&self) -> Option<RgbaColor> {
        self.background_color.or(self.background).and_then(|v| v.color())
    }
}

/// Applies the pairing rules to each rule group and deduplicates on the
/// composited RGB values, keeping the first occurrence.
///
/// Within a group the last successfully parsed value of each property wins,
/// as it would in a CSS declaration block. Keywords such as `inherit` or
/// `transparent` leave the property without a concrete colour.
pub fn build_pairings(decls: &[StyleDeclaration]) -> Vec<ColorPairing> {
    let mut order: Vec<RuleId> = Vec::new();
    let mut groups: HashMap<RuleId, RuleGroup> = HashMap::new();
    for decl in decls {
        let Ok(value) = decl.parsed else {
            continue;
        };
        let group = groups.entry(decl.rule_id).or_insert_with(|| {
            order.push(decl.rule_id);
            RuleGroup::default()
        });
        let slot = match decl.property {
            ColorProperty::Color => &mut group.color,
            ColorProperty::BackgroundColor => &mut group.background_color,
            ColorProperty::Background => &mut group.background,
        };
        *slot = Some(value);
    }

    let mut seen = HashSet::new();
    let mut pairings = Vec::new();
    for rule_id in order {
        let group = &groups[&rule_id];
        let pairing = match (group.foreground(), group.background()) {
            (Some(fg), Some(bg)) => {
                let bg = resolve_alpha(bg, ASSUMED_BACKGROUND);
                (resolve_alpha(fg, bg), bg, Provenance::Explicit)
            }
            (Some(fg), None) => (
                resolve_alpha(fg, ASSUMED_BACKGROUND),
                ASSUMED_BACKGROUND,
                Provenance::AssumedWhiteBg,
            ),
            (None, Some(bg)) => (
                ASSUMED_FOREGROUND,
                resolve_alpha(bg, ASSUMED_BACKGROUND),
                Provenance::AssumedBlackFg,
            ),
            (None, None) => continue,
        };
        let (fg, bg, provenance) = pairing;
        let pairing = ColorPairing { fg, bg, provenance, first_rule_id: rule_id };
        if seen.insert(pairing.key()) {
            pairings.push(pairing);
        }
    }
    pairings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::parse_color;
    use crate::extract::{extract_declarations, Origin};
    use proptest::prelude::*;

    fn pairs(html: &str) -> Vec<(String, String, Provenance)> {
        build_pairings(&extract_declarations(html.as_bytes(), None))
            .into_iter()
            .map(|p| (p.fg.to_hex(), p.bg.to_hex(), p.provenance))
            .collect()
    }

    fn p(fg: &str, bg: &str, prov: Provenance) -> (String, String, Provenance) {
        (fg.to_string(), bg.to_string(), prov)
    }

    #[test]
    fn explicit_pair() {
        assert_eq!(
            pairs("<style>a{color:#000;background-color:#fff}</style>"),
            vec![p("#000000", "#ffffff", Provenance::Explicit)]
        );
    }

    #[test]
    fn assumed_white_background() {
        assert_eq!(
            pairs("<style>a{color:#777}</style>"),
            vec![p("#777777", "#ffffff", Provenance::AssumedWhiteBg)]
        );
    }

    #[test]
    fn assumed_black_text() {
        assert_eq!(
            pairs("<style>a{background-color:#222}</style>"),
            vec![p("#000000", "#222222", Provenance::AssumedBlackFg)]
        );
    }

    #[test]
    fn duplicates_collapse() {
        let out = build_pairings(&extract_declarations(b"<style>a{color:#333} b{color:#333}</style>", None));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].first_rule_id, RuleId(0));
    }

    #[test]
    fn alpha_resolved_before_dedup() {
        assert_eq!(
            pairs("<style>a{color:rgba(0,0,0,1.0)} b{color:#000}</style>"),
            vec![p("#000000", "#ffffff", Provenance::AssumedWhiteBg)]
        );
    }

    #[test]
    fn resolve_alpha_examples() {
        let c = RgbaColor::rgb(10, 20, 30);
        assert_eq!(resolve_alpha(c, RgbaColor::BLACK), c);
        assert_eq!(resolve_alpha(RgbaColor::rgba(0, 0, 0, 0.0), RgbaColor::WHITE), RgbaColor::WHITE);
        assert_eq!(resolve_alpha(RgbaColor::rgba(0, 0, 0, 0.5), RgbaColor::WHITE), RgbaColor::rgb(128, 128, 128));
    }

    #[test]
    fn translucent_foreground_composites_over_declared_background() {
        assert_eq!(
            pairs("<style>a{color:rgba(255,255,255,0.5);background:#000}</style>"),
            vec![p("#808080", "#000000", Provenance::Explicit)]
        );
        assert_eq!(
            pairs("<style>a{background-color:rgba(0,0,0,0.5)}</style>"),
            vec![p("#000000", "#808080", Provenance::AssumedBlackFg)]
        );
    }

    #[test]
    fn keywords_and_failures_are_absent() {
        assert!(pairs("<style>a{color:inherit;background-color:transparent} b{color:var(--x)}</style>").is_empty());
        assert_eq!(
            pairs("<style>a{color:#111;background-color:currentColor}</style>"),
            vec![p("#111111", "#ffffff", Provenance::AssumedWhiteBg)]
        );
    }

    #[test]
    fn longhand_beats_shorthand() {
        assert_eq!(
            pairs("<style>a{background-color:#eee;background:#333 url(x.png);color:#000}</style>"),
            vec![p("#000000", "#eeeeee", Provenance::Explicit)]
        );
        assert_eq!(
            pairs("<style>a{background:#333 url(x.png);color:#fff}</style>"),
            vec![p("#ffffff", "#333333", Provenance::Explicit)]
        );
    }

    #[test]
    fn last_valid_declaration_wins() {
        assert_eq!(
            pairs("<style>a{color:#111;color:bogus}</style>"),
            vec![p("#111111", "#ffffff", Provenance::AssumedWhiteBg)]
        );
        assert_eq!(
            pairs("<style>a{color:#111;color:#222}</style>"),
            vec![p("#222222", "#ffffff", Provenance::AssumedWhiteBg)]
        );
        assert!(pairs("<style>a{color:#111;color:inherit}</style>").is_empty());
    }

    #[test]
    fn empty_input() {
        assert!(build_pairings(&[]).is_empty());
    }

    fn decl(rule: u32, property: ColorProperty, value: &str) -> StyleDeclaration {
        StyleDeclaration {
            property,
            raw_value: value.to_string(),
            parsed: parse_color(value),
            origin: Origin::Embedded,
            rule_id: RuleId(rule),
            selector: String::new(),
        }
    }

    fn rule_groups() -> impl Strategy<Value = Vec<Vec<StyleDeclaration>>> {
        let value = prop_oneof![
            Just("#000"), Just("#fff"), Just("#777"), Just("red"), Just("inherit"),
            Just("rgba(0,0,0,.5)"), Just("nonsense"), Just("#333"),
        ];
        let property = prop_oneof![Just(ColorProperty::Color), Just(ColorProperty::BackgroundColor)];
        prop::collection::vec(prop::collection::vec((property, value), 0..3), 0..12).prop_map(|groups| {
            groups
                .into_iter()
                .enumerate()
                .map(|(i, g)| g.into_iter().map(|(prop, v)| decl(i as u32, prop, v)).collect())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn dedup_and_order_independence(groups in rule_groups(), seed in any::<u64>()) {
            let flat: Vec<StyleDeclaration> = groups.iter().flatten().cloned().collect();
            let out = build_pairings(&flat);
            let keys: HashSet<_> = out.iter().map(ColorPairing::key).collect();
            prop_assert_eq!(keys.len(), out.len());
            prop_assert!(out.len() <= groups.len());

            let mut shuffled = groups.clone();
            let n = shuffled.len();
            if n > 1 {
                shuffled.rotate_left((seed as usize) % n);
                shuffled.swap(0, (seed as usize / 7) % n);
            }
            let flat2: Vec<StyleDeclaration> = shuffled.into_iter().flatten().collect();
            let keys2: HashSet<_> = build_pairings(&flat2).iter().map(ColorPairing::key).collect();
            prop_assert_eq!(keys, keys2);
        }
    }
}
