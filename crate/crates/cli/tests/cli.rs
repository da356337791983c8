mod support;

use std::fs;
use std::path::Path;

use serde_json::Value;
use support::{cli, outcome_sites, server_args, with_args, write_domains, FixtureServer, Site, SiteKind};

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn check_colour_pairs() {
    let out = cli(&["check", "black", "white"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "21.00:1 PASS PASS");
    assert_eq!(out.status.code(), Some(0));

    let out = cli(&["check", "#777", "#fff"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4.48:1 FAIL PASS");
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(cli(&["check", "notacolor", "white"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "inherit", "white"]).status.code(), Some(2));
    assert_eq!(cli(&["check", "/definitely/missing.html"]).status.code(), Some(2));
    assert_eq!(cli(&["check"]).status.code(), Some(2));
}

#[test]
fn check_html_file() {
    let dir = tempfile::tempdir().unwrap();
    let page = dir.path().join("p.html");
    fs::write(&page, "<style>p{color:#777}</style>").unwrap();
    let out = cli(&["check", page.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("#777777 #ffffff 4.48:1 FAIL PASS assumed-white-bg"), "{stdout}");
    assert_eq!(out.status.code(), Some(1));

    fs::write(&page, "<p style='color:#000'>ok</p>").unwrap();
    assert_eq!(cli(&["check", page.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn locate_writes_locations_and_sql() {
    let sites = vec![
        Site { domain: "one.example", kind: SiteKind::Html("<p>1</p>") },
        Site { domain: "two.example", kind: SiteKind::NotIndexed },
    ];
    let server = FixtureServer::start(&sites);
    let dir = tempfile::tempdir().unwrap();
    let domains = write_domains(dir.path(), &sites);
    let (cache, out) = (dir.path().join("cache"), dir.path().join("out"));
    let args = server_args(&server, &domains, &cache, &out);
    let result = cli(&with_args(&["locate"], &args));
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));

    let locations = lines(&out.join("locations.jsonl"));
    assert_eq!(locations.len(), 2);
    assert_eq!(locations[0]["domain"], "one.example");
    assert_eq!(locations[0]["capture"]["url"], "https://one.example/");
    assert!(locations[1]["capture"].is_null());
    let sql = fs::read_to_string(out.join("query.sql")).unwrap();
    assert!(sql.contains("'one.example'") && sql.contains("'two.example'"));
}

#[test]
fn locate_empty_list_and_offline_miss() {
    let dir = tempfile::tempdir().unwrap();
    let domains = dir.path().join("empty.txt");
    fs::write(&domains, "# nothing here\n").unwrap();
    let out = dir.path().join("out");
    let d = domains.to_str().unwrap();
    let o = out.to_str().unwrap();
    let c = dir.path().join("cache");
    let c = c.to_str().unwrap();

    let result = cli(&["locate", "--domains", d, "--out", o, "--cache-dir", c]);
    assert_eq!(result.status.code(), Some(0));
    assert!(stderr(&result).contains("empty"));
    assert_eq!(fs::read(out.join("locations.jsonl")).unwrap(), b"");

    fs::write(&domains, "example.com\n").unwrap();
    let result = cli(&["locate", "--domains", d, "--out", o, "--cache-dir", c, "--offline"]);
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).contains("offline mode"), "{}", stderr(&result));

    let missing = dir.path().join("missing.txt");
    let result = cli(&["locate", "--domains", missing.to_str().unwrap(), "--out", o]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn fetch_manifest_accounting_and_cache_reuse() {
    let sites = vec![
        Site { domain: "a.example", kind: SiteKind::Html("<p style='color:#111'>a</p>") },
        Site { domain: "b.example", kind: SiteKind::Html("<p style='color:#222'>b</p>") },
        Site { domain: "c.example", kind: SiteKind::RangeRejected },
    ];
    let server = FixtureServer::start(&sites);
    let dir = tempfile::tempdir().unwrap();
    let domains = write_domains(dir.path(), &sites);
    let (cache, out) = (dir.path().join("cache"), dir.path().join("out"));
    let args = server_args(&server, &domains, &cache, &out);
    assert_eq!(cli(&with_args(&["locate"], &args)).status.code(), Some(0));

    let result = cli(&with_args(&["fetch"], &args));
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    let manifest = lines(&out.join("fetch-manifest.jsonl"));
    assert_eq!(manifest.len(), 3);
    assert_eq!(manifest[0]["outcome"], "ok");
    assert_eq!(manifest[1]["outcome"], "ok");
    assert_eq!(manifest[2]["outcome"], "error");
    assert_eq!(manifest[2]["error_kind"], "range-not-satisfiable");
    let first = fs::read(out.join("fetch-manifest.jsonl")).unwrap();

    // Drop the rejected domain so the rerun should be served from cache alone.
    let mut locs = fs::read_to_string(out.join("locations.jsonl")).unwrap();
    locs = locs.lines().take(2).map(|l| format!("{l}\n")).collect();
    fs::write(out.join("locations.jsonl"), locs).unwrap();
    let before = server.requests();
    assert_eq!(cli(&with_args(&["fetch"], &args)).status.code(), Some(0));
    assert_eq!(server.requests(), before);
    let second = fs::read(out.join("fetch-manifest.jsonl")).unwrap();
    assert_eq!(&second[..], &first[..second.len()]);
}

#[test]
fn fetch_reports_unwritable_cache() {
    let sites = vec![Site { domain: "a.example", kind: SiteKind::Html("<p>a</p>") }];
    let server = FixtureServer::start(&sites);
    let dir = tempfile::tempdir().unwrap();
    let domains = write_domains(dir.path(), &sites);
    let out = dir.path().join("out");
    let good_cache = dir.path().join("cache");
    let args = server_args(&server, &domains, &good_cache, &out);
    assert_eq!(cli(&with_args(&["locate"], &args)).status.code(), Some(0));

    let blocker = dir.path().join("not-a-dir");
    fs::write(&blocker, "file").unwrap();
    let args = server_args(&server, &domains, &blocker, &out);
    assert_eq!(cli(&with_args(&["fetch"], &args)).status.code(), Some(3));
}

#[test]
fn analyze_examples() {
    let sites = vec![
        Site { domain: "grey.example", kind: SiteKind::Html("<style>p{color:#777}</style>") },
        Site {
            domain: "keywords.example",
            kind: SiteKind::Html("<style>a{color:inherit;background-color:transparent}</style>"),
        },
    ];
    let server = FixtureServer::start(&sites);
    let dir = tempfile::tempdir().unwrap();
    let domains = write_domains(dir.path(), &sites);
    let (cache, out) = (dir.path().join("cache"), dir.path().join("out"));
    let args = server_args(&server, &domains, &cache, &out);

    assert_eq!(cli(&with_args(&["locate"], &args)).status.code(), Some(0));
    assert_eq!(cli(&with_args(&["fetch"], &args)).status.code(), Some(0));
    let result = cli(&with_args(&["analyze"], &args));
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));

    let results = lines(&out.join("results.jsonl"));
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["outcome"], "analysed");
    let pairing = &results[0]["pairings"][0];
    assert_eq!(pairing["fg"], "#777777");
    assert_eq!(pairing["bg"], "#ffffff");
    assert_eq!(pairing["passes_normal"], false);
    assert_eq!(pairing["passes_large"], true);
    assert_eq!(results[1]["outcome"], "no-colour-data");
    assert!(!out.join("results.partial.jsonl").exists());

    let mut missing_cache = args.clone();
    let pos = missing_cache.iter().position(|a| a == "--cache-dir").unwrap();
    missing_cache[pos + 1] = dir.path().join("nope").display().to_string();
    assert_eq!(cli(&with_args(&["analyze"], &missing_cache)).status.code(), Some(2));
}

fn synthetic_results(dir: &Path) -> std::path::PathBuf {
    let rates = [(20, 20), (20, 19), (20, 16), (20, 12), (20, 6), (20, 2)];
    let mut text = String::new();
    for (i, (total, passing)) in rates.iter().enumerate() {
        let rate = *passing as f64 / *total as f64;
        let audit = serde_json::json!({
            "schema_version": 1,
            "domain": format!("site{i}.example"),
            "category": "Other",
            "outcome": "analysed",
            "detail": null,
            "capture": null,
            "declarations": total,
            "unparsed_declarations": 0,
            "pairings": [],
            "total_pairings": total,
            "passing_normal": passing,
            "passing_large": passing,
            "pass_rate_normal": rate,
            "pass_rate_large": rate,
            "worst_ratio": 2.5,
            "mean_ratio": 6.0,
        });
        text.push_str(&format!("{audit}\n"));
    }
    let path = dir.join("results.jsonl");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn report_formats_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let results = synthetic_results(dir.path());
    let out = dir.path().join("md");
    let r = results.to_str().unwrap();
    let result = cli(&["report", "--results", r, "--out", out.to_str().unwrap(), "--formats", "markdown"]);
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    for row in ["| 100% (fully compliant) | 1 | 16.7% |", "| 90-99% | 1 | 16.7% |", "| 75-89% | 1 | 16.7% |", "| 50-74% | 1 | 16.7% |", "| 25-49% | 1 | 16.7% |", "| 0-24% | 1 | 16.7% |"] {
        assert!(md.contains(row), "missing {row}");
    }
    assert!(md.contains("Median per-site pass rate (normal text): 70.0%"));

    let json_out = dir.path().join("json");
    let j = json_out.to_str().unwrap();
    assert_eq!(cli(&["report", "--results", r, "--out", j, "--formats", "json"]).status.code(), Some(0));
    assert_eq!(sorted_files(&json_out), ["report.json"]);
    let first = fs::read(json_out.join("report.json")).unwrap();
    assert_eq!(cli(&["report", "--results", r, "--out", j, "--formats", "json"]).status.code(), Some(0));
    assert_eq!(fs::read(json_out.join("report.json")).unwrap(), first);

    let all = dir.path().join("all");
    assert_eq!(cli(&["report", "--results", r, "--out", all.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        sorted_files(&all),
        ["best_sites.csv", "categories.csv", "distribution.csv", "report.json", "report.md", "summary.csv", "worst_sites.csv"]
    );
}

#[test]
fn report_rejects_bad_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.jsonl");
    fs::write(&path, "{\"schema_version\": 99, \"domain\": \"x\"}\n").unwrap();
    let out = dir.path().join("out");
    let result = cli(&["report", "--results", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("schema version 99"), "{}", stderr(&result));

    fs::write(&path, "not json\n").unwrap();
    let result = cli(&["report", "--results", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let result = cli(&["report", "--results", dir.path().join("none").to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn steps_compose_to_run_and_offline_makes_no_requests() {
    let sites = outcome_sites();
    let server = FixtureServer::start(&sites);
    let dir = tempfile::tempdir().unwrap();
    let domains = write_domains(dir.path(), &sites);
    let cache = dir.path().join("cache");

    let stepwise = dir.path().join("steps");
    let args = server_args(&server, &domains, &cache, &stepwise);
    for step in ["locate", "fetch", "analyze", "report"] {
        let result = cli(&with_args(&[step], &args));
        assert_eq!(result.status.code(), Some(0), "{step}: {}", stderr(&result));
    }

    let whole = dir.path().join("whole");
    let args = server_args(&server, &domains, &dir.path().join("cache2"), &whole);
    assert_eq!(cli(&with_args(&["run"], &args)).status.code(), Some(0));
    assert_eq!(sorted_files(&stepwise), sorted_files(&whole));
    for name in sorted_files(&stepwise) {
        let (a, b) = (fs::read_to_string(stepwise.join(&name)).unwrap(), fs::read_to_string(whole.join(&name)).unwrap());
        assert!(a == b, "{name} differs");
    }

    let offline = dir.path().join("offline");
    let args = server_args(&server, &domains, &cache, &offline);
    let before = server.requests();
    let result = cli(&with_args(&["run", "--offline"], &args));
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
    assert_eq!(server.requests(), before);
    let outcomes = |dir: &Path| -> Vec<(String, String)> {
        lines(&dir.join("results.jsonl"))
            .iter()
            .map(|v| (v["domain"].as_str().unwrap().to_string(), v["outcome"].as_str().unwrap().to_string()))
            .collect()
    };
    assert_eq!(outcomes(&offline), outcomes(&stepwise));
    let analysed = |dir: &Path| lines(&dir.join("results.jsonl")).into_iter().find(|v| v["outcome"] == "analysed");
    assert_eq!(analysed(&offline), analysed(&stepwise));
}

#[test]
fn environment_and_config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let results = synthetic_results(dir.path());
    let config = dir.path().join("crawlcontrast.toml");
    fs::write(&config, "formats = [\"csv\"]\n").unwrap();
    let out = dir.path().join("out");

    let run = |extra_env: &[(&str, &str)], args: &[&str]| {
        let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_crawlcontrast"));
        for (key, _) in std::env::vars() {
            if key.starts_with("CRAWLCONTRAST_") {
                cmd.env_remove(key);
            }
        }
        cmd.envs(extra_env.iter().copied()).args(args).output().unwrap()
    };
    let base = ["report", "--results", results.to_str().unwrap(), "--out", out.to_str().unwrap(), "--config", config.to_str().unwrap()];

    assert_eq!(run(&[], &base).status.code(), Some(0));
    assert!(out.join("distribution.csv").exists() && !out.join("report.json").exists());
    fs::remove_dir_all(&out).unwrap();

    assert_eq!(run(&[("CRAWLCONTRAST_FORMATS", "json")], &base).status.code(), Some(0));
    assert_eq!(sorted_files(&out), ["report.json"]);
    fs::remove_dir_all(&out).unwrap();

    let mut with_flag = base.to_vec();
    with_flag.extend(["--formats", "markdown"]);
    assert_eq!(run(&[("CRAWLCONTRAST_FORMATS", "json")], &with_flag).status.code(), Some(0));
    assert_eq!(sorted_files(&out), ["report.md"]);
}
