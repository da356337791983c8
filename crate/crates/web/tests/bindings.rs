use crawlcontrast_web::{audit_html_json, check_pair_json, lightness_sweep_json};
use serde_json::Value;

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn pair_check_reports_ratio_and_verdicts() {
    let v = json(&check_pair_json("#777", "white").unwrap());
    assert_eq!(v["fg"], "#777777");
    assert!((v["ratio"].as_f64().unwrap() - 4.478).abs() < 1e-3);
    assert_eq!(v["passes_normal"], false);
    assert_eq!(v["passes_large"], true);
}

#[test]
fn translucent_foreground_is_composited_over_background() {
    let v = json(&check_pair_json("rgba(0,0,0,0.5)", "#fff").unwrap());
    assert_eq!(v["fg"], "#808080");
}

#[test]
fn keywords_and_garbage_are_errors() {
    assert!(check_pair_json("transparent", "#fff").unwrap_err().contains("transparent"));
    assert!(check_pair_json("#12", "#fff").is_err());
}

#[test]
fn html_audit_lists_pairings() {
    let v = json(&audit_html_json("<style>a{color:#000;background:#fff} p{color:#aaa}</style>"));
    assert_eq!(v["declarations"], 3);
    assert_eq!(v["pairings"].as_array().unwrap().len(), 2);
    assert_eq!(v["passing_normal"], 1);
    assert_eq!(v["pass_rate_normal"], 0.5);
    let empty = json(&audit_html_json("<p>plain</p>"));
    assert_eq!(empty["pass_rate_normal"], Value::Null);
}

#[test]
fn sweep_covers_every_lightness_and_finds_a_passing_shade() {
    let v = json(&lightness_sweep_json("#3399ff", "#ffffff").unwrap());
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 101);
    assert_eq!(points[0]["fg"], "#000000");
    assert_eq!(points[100]["fg"], "#ffffff");
    let nearest = v["nearest_passing"].as_str().unwrap();
    let check = json(&check_pair_json(nearest, "#fff").unwrap());
    assert_eq!(check["passes_normal"], true);
}
