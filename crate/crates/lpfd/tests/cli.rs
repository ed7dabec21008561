mod common;

use std::process::Command;

use common::fixture;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn lpfd(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_lpfd"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ex(n: u8) -> String {
    fixture(&format!("example{n}.json")).display().to_string()
}

fn json(r: &Run) -> serde_json::Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{e}: {}", r.stdout))
}

#[test]
fn parse_shows_core_form() {
    let r = lpfd(&[
        "parse",
        "--formula",
        "<{x};{};{y}>P(x) -> D{x}y",
        "--vocab",
        "x,y;P/1",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("modal depth: 1"));
    let r = lpfd(&["--report", "json", "parse", "--formula", "Na{1,2}"]);
    assert_eq!(json(&r)["modal_depth"], 1);
    let r = lpfd(&["parse", "--formula", "[{x};{};{}", "--vocab", "x"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.starts_with("error:"));
}

#[test]
fn validate_both_fixtures() {
    for n in [1, 2] {
        let r = lpfd(&["validate", &ex(n)]);
        assert_eq!(r.code, 0, "{}", r.stdout);
        assert!(r.stdout.contains("valid cpd model"));
    }
    let r = lpfd(&["validate", "--rcpd", &ex(1)]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("at a4p"));
    assert_eq!(lpfd(&["validate", "--rcpd", &ex(2)]).code, 0);
    let r = lpfd(&["--report", "json", "validate", &ex(1)]);
    let j = json(&r);
    assert_eq!(j["valid"], true);
    assert!(!j["notes"].as_array().unwrap().is_empty());
}

#[test]
fn check_reports_truth_in_the_exit_code() {
    let r = lpfd(&["check", &ex(2), "--point", "a3p", "--formula", "Na{1,2}"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "true\n"));
    let r = lpfd(&["check", &ex(2), "--point", "a", "--formula", "Na{1,2}"]);
    assert_eq!((r.code, r.stdout.as_str()), (1, "false\n"));
    let r = lpfd(&["check", &ex(1), "--point", "a7p", "--formula", "p{1,2,3}"]);
    assert_eq!(r.code, 0);
    assert_eq!(
        lpfd(&["check", &ex(2), "--point", "nowhere", "--formula", "Na{1}"]).code,
        2
    );
    assert_eq!(
        lpfd(&["check", &ex(2), "--point", "a", "--formula", "Na{7}"]).code,
        2
    );
}

#[test]
fn valid_names_a_counterexample() {
    let r = lpfd(&["valid", &ex(1), "--formula", "D{1,2,3}1"]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "valid\n"));
    let r = lpfd(&["valid", &ex(2), "--formula", "Na{1,2}"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.starts_with("not valid: fails at "));
    let j = json(&lpfd(&[
        "--report",
        "json",
        "valid",
        &ex(2),
        "--formula",
        "Na{1,2}",
    ]));
    assert_eq!(j["valid"], false);
}

#[test]
fn effectivity_lists_forcing_cells() {
    let r = lpfd(&[
        "effectivity",
        &ex(2),
        "--coalition",
        "{1}",
        "--formula",
        "Na{1}",
    ]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("forcing cell: a4p"));
    let r = lpfd(&[
        "effectivity",
        &ex(2),
        "--coalition",
        "{}",
        "--formula",
        "Na{1}",
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("cannot force"));
    assert_eq!(
        lpfd(&[
            "effectivity",
            &ex(1),
            "--coalition",
            "1,9",
            "--formula",
            "Na{1}"
        ])
        .code,
        2
    );
}

#[test]
fn sat_verdicts_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let cert_s = cert.display().to_string();
    let r = lpfd(&[
        "sat",
        "--formula",
        "D{x}y & <{};{y};{}>P(x)",
        "--vocab",
        "x,y;P/1",
        "--emit-certificate",
        &cert_s,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("Sat-verified\n"));
    let back = lpfd(&["validate", &cert_s]);
    assert_eq!(back.code, 0, "{}", back.stdout);
    let r = lpfd(&[
        "sat",
        "--formula",
        "<{};{};{y}>top & [{};{};{y}]bot",
        "--vocab",
        "x,y",
    ]);
    assert_eq!((r.code, r.stdout.lines().next()), (1, Some("Unsat")));
    let r = lpfd(&[
        "--path-bound",
        "1",
        "sat",
        "--formula",
        "~([{};{};{y}]bot | <{};{};{y}>[{};{};{y}]bot)",
        "--vocab",
        "x,y",
    ]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("Sat-unverified("), "{}", r.stdout);
    let r = lpfd(&[
        "--max-closure",
        "2",
        "sat",
        "--formula",
        "<{};{x,y};{}>(P(x) & <{x};{y};{x}>P(y))",
        "--vocab",
        "x,y;P/1",
    ]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("error:"));
    let j = json(&lpfd(&[
        "--report",
        "json",
        "sat",
        "--formula",
        "P(x)",
        "--vocab",
        "x;P/1",
    ]));
    assert_eq!(j["status"], "Sat-verified");
}

#[test]
fn convert_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for n in [1, 2] {
        let rpd = dir.path().join(format!("r{n}.json"));
        let pd = dir.path().join(format!("p{n}.json"));
        let r = lpfd(&[
            "convert",
            &ex(n),
            "--to",
            "rpd",
            "--out",
            &rpd.display().to_string(),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let r = lpfd(&[
            "convert",
            &rpd.display().to_string(),
            "--to",
            "pd",
            "--out",
            &pd.display().to_string(),
        ]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        for f in [&rpd, &pd] {
            assert_eq!(lpfd(&["validate", &f.display().to_string()]).code, 0);
        }
        let direct = lpfd(&["check", &ex(n), "--point", "a", "--formula", "Na{1,2}"]);
        let via = lpfd(&[
            "check",
            &pd.display().to_string(),
            "--point",
            "a",
            "--formula",
            "Na{1,2}",
        ]);
        assert_eq!(direct.stdout, via.stdout);
    }
    let r = lpfd(&["convert", &ex(2), "--to", "pd"]);
    assert_eq!(json(&r)["kind"], "pd");
}

#[test]
fn game_analysis_on_both_fixtures() {
    let r = lpfd(&["game", "analyze", &ex(2)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let j = json(&lpfd(&["--report", "json", "game", "analyze", &ex(2)]));
    assert_eq!(j["core"], serde_json::json!(["a4p"]));
    let j = json(&lpfd(&["--report", "json", "game", "analyze", &ex(1)]));
    assert_eq!(j["core"], serde_json::json!([]));
    assert!(!j["rcpd_violations"].as_array().unwrap().is_empty());
    let skipped: Vec<&str> = j["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["skipped"].is_string())
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(skipped.contains(&"core-formula"));
    assert!(skipped.contains(&"coalition-recovery"));
}

#[test]
fn fuzzing_is_reproducible() {
    let args = [
        "--seed",
        "17",
        "fuzz-axioms",
        "--system",
        "hlpfd",
        "--trials",
        "20",
        "--max-points",
        "4",
    ];
    let a = lpfd(&args);
    let b = lpfd(&args);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.contains("total counterexamples: 0"));
    let only = lpfd(&["fuzz-axioms", "--schema", "Ord-b", "--trials", "10"]);
    assert!(only.stdout.contains("Ord-b"));
    assert_eq!(lpfd(&["fuzz-axioms", "--system", "klm"]).code, 2);
}

#[test]
fn identical_inputs_give_identical_reports() {
    let model = ex(1);
    for args in [
        vec!["--report", "json", "game", "analyze", &model],
        vec![
            "--seed",
            "5",
            "--report",
            "json",
            "fuzz-axioms",
            "--trials",
            "15",
        ],
        vec![
            "--report",
            "json",
            "sat",
            "--formula",
            "<{x};{y};{}>P(y) & ~P(x)",
            "--vocab",
            "x,y;P/1",
        ],
    ] {
        assert_eq!(lpfd(&args).stdout, lpfd(&args).stdout);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lpfd(&[]).code, 2);
    assert_eq!(lpfd(&["frobnicate"]).code, 2);
    assert_eq!(
        lpfd(&["--report", "xml", "parse", "--formula", "P(x)"]).code,
        2
    );
    assert_eq!(lpfd(&["validate", "/nonexistent/model.json"]).code, 2);
    assert_eq!(lpfd(&["--help"]).code, 0);
}
