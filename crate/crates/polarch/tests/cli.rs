use std::path::PathBuf;
use std::process::Command;

use polarch::render::parse_json_report;
use polarch::{run_cli, CliOutcome, EXIT_CLEAN, EXIT_ERROR, EXIT_FINDINGS};

fn data(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("tests/data");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> CliOutcome {
    let mut argv = vec!["polarch".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    run_cli(argv)
}

#[test]
fn retention_example_reports_privacy_violation() {
    let out = run(&["verify", "--policy", &data("example1.policy"), "--arch", &data("example1.arch")]);
    assert_eq!(out.exit_code, EXIT_FINDINGS, "{}", out.stderr);
    assert!(out.stdout.contains("VIOLATION HASUPTO(mainstorage,personalinfo,Time(DD))"));
    assert!(out.stdout.contains("10y"));
    assert!(out.stdout.contains("ok        STRCONSENTCOLLECTED(sp,personalinfo)"));
    assert!(out.stdout.contains("only up to 3 nested cryptographic layers"));
    assert!(out.stdout.contains("no collection sub-policy for personalinfo"));
    assert!(out.stdout.contains("no usage sub-policy for personalinfo"));
}

#[test]
fn retention_example_as_json() {
    let out = run(&[
        "verify",
        "--policy",
        &data("example1.policy"),
        "--arch",
        &data("example1.arch"),
        "--format",
        "json",
    ]);
    assert_eq!(out.exit_code, EXIT_FINDINGS);
    let r = parse_json_report(&out.stdout).unwrap();
    assert_eq!(r.max_crypto_depth, 3);
    assert_eq!(r.summary.privacy_violations, 1);
    let privacy: Vec<_> = r.verdicts.iter().filter(|v| v.classification == "privacy-violation").collect();
    assert_eq!(privacy.len(), 1);
    assert_eq!(privacy[0].goal, "HASUPTO(mainstorage,personalinfo,Time(DD))");
    assert_eq!(privacy[0].outcome, "proved");
    assert!(privacy[0].derivation.is_some());
    let consent: Vec<_> = r.verdicts.iter().filter(|v| v.goal.starts_with("STRCONSENTCOLLECTED")).collect();
    assert_eq!(consent.len(), 1);
    assert_eq!(consent[0].classification, "dpr-conform");
    let again = serde_json::to_string_pretty(&r).unwrap() + "\n";
    assert_eq!(again, out.stdout);
}

#[test]
fn linking_example() {
    let out = run(&[
        "verify",
        "--policy",
        &data("example2.policy"),
        "--arch",
        &data("example2.arch"),
        "--format",
        "json",
    ]);
    assert_eq!(out.exit_code, EXIT_FINDINGS);
    let r = parse_json_report(&out.stdout).unwrap();
    let find = |g: &str| r.verdicts.iter().find(|v| v.goal == g).unwrap_or_else(|| panic!("no verdict for {}", g));
    let link = find("LINK(sp,nhsnumber,photo)");
    assert_eq!(link.classification, "privacy-violation");
    assert_eq!(link.derivation.as_ref().unwrap().rule.as_deref(), Some("L0"));
    for d in ["nhsnumber", "name", "photo", "address"] {
        assert_eq!(find(&format!("HAS(sp,{})", d)).classification, "privacy-violation");
    }
    let unique = find("LINKUNIQUE(sp,nhsnumber,photo)");
    assert_eq!(unique.outcome, "unproved");
    assert_eq!(unique.classification, "privacy-conform");
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", "--policy", &data("example2.policy"), "--arch", &data("example2.arch")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a, b);
}

#[test]
fn lint_empty_policy() {
    let out = run(&["lint-policy", "--policy", &data("empty.policy")]);
    assert_eq!(out.exit_code, EXIT_CLEAN);
    assert_eq!(out.stdout, "no conflicts\n");
}

#[test]
fn lint_reports_storage_conflict() {
    let out = run(&["lint-policy", "--policy", &data("example1.policy"), "--format", "json"]);
    assert_eq!(out.exit_code, EXIT_FINDINGS);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["conflicts"].as_array().unwrap().len(), 1);
}

#[test]
fn facts_dump() {
    let out = run(&["facts", "--arch", &data("sicknessrec.arch")]);
    assert_eq!(out.exit_code, EXIT_CLEAN);
    let mut got: Vec<&str> = out.stdout.lines().filter(|l| l.starts_with("HAS(") || l.starts_with("LINK(")).collect();
    got.sort();
    let mut want = vec![
        "HAS(sp,Personalinfo(name,address))",
        "HAS(sp,name)",
        "HAS(sp,address)",
        "HAS(sp,disease)",
        "LINK(sp,Personalinfo(name,address),disease)",
        "LINK(sp,name,address)",
        "LINK(sp,name,disease)",
        "LINK(sp,address,disease)",
    ];
    want.sort();
    assert_eq!(got, want);
    assert_eq!(out.stdout.lines().filter(|l| l.starts_with("LINKUNIQUE(")).count(), 4);
}

#[test]
fn goals_and_rules_dumps() {
    let goals = run(&["goals", "--policy", &data("example1.policy")]);
    assert_eq!(goals.exit_code, EXIT_CLEAN);
    assert!(goals.stdout.contains("+ DELETEWITHIN(mainstorage,personalinfo,EVfrom,Time(DD)) [deletion]"));
    let rules = run(&["rules"]);
    assert_eq!(rules.exit_code, EXIT_CLEAN);
    assert!(rules.stdout.contains("P8."));
    assert!(rules.stdout.contains("L0."));
}

#[test]
fn trace_check() {
    let out = run(&["trace-check", "--policy", &data("example1.policy"), "--trace", &data("retention.trace")]);
    assert_eq!(out.exit_code, EXIT_FINDINGS);
    assert_eq!(out.stdout.lines().count(), 1);
    assert!(out.stdout.starts_with("C8 "));
}

#[test]
fn input_errors_exit_one() {
    let missing = run(&["verify", "--policy", &data("nope.policy"), "--arch", &data("example1.arch")]);
    assert_eq!(missing.exit_code, EXIT_ERROR);
    assert!(missing.stderr.contains("cannot read"));
    let no_arch = run(&["verify", "--policy", &data("example1.policy")]);
    assert_eq!(no_arch.exit_code, EXIT_ERROR);
    assert!(no_arch.stderr.contains("--arch"));
    let bad_flag = run(&["verify", "--frobnicate"]);
    assert_eq!(bad_flag.exit_code, EXIT_ERROR);
    assert!(bad_flag.stderr.contains("Usage"));
    let bad_cmd = run(&["explode"]);
    assert_eq!(bad_cmd.exit_code, EXIT_ERROR);
    let bad_policy = run(&["lint-policy", "--policy", &data("example1.arch")]);
    assert_eq!(bad_policy.exit_code, EXIT_ERROR);
}

#[test]
fn writes_to_out_file() {
    let path = std::env::temp_dir().join(format!("polarch-out-{}.txt", std::process::id()));
    let p = path.to_string_lossy().into_owned();
    let out = run(&["rules", "--out", &p]);
    assert_eq!(out.exit_code, EXIT_CLEAN);
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("P4."));
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn binary_honours_depth_variable() {
    let bin = env!("CARGO_BIN_EXE_polarch");
    let run_bin = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(bin);
        c.args(["verify", "--policy", &data("example2.policy"), "--arch", &data("example2.arch"), "--format", "json"]);
        c.args(extra);
        c.env_remove("POLARCH_MAX_CRYPTO_DEPTH");
        if let Some(v) = env {
            c.env("POLARCH_MAX_CRYPTO_DEPTH", v);
        }
        c.output().unwrap()
    };
    let shallow = run_bin(Some("0"), &[]);
    assert_eq!(shallow.status.code(), Some(EXIT_CLEAN));
    let r = parse_json_report(&String::from_utf8(shallow.stdout).unwrap()).unwrap();
    assert_eq!(r.max_crypto_depth, 0);
    assert_eq!(r.summary.privacy_violations, 0);
    let flag_wins = run_bin(Some("0"), &["--max-crypto-depth", "1"]);
    assert_eq!(flag_wins.status.code(), Some(EXIT_FINDINGS));
    let default = run_bin(None, &[]);
    let r = parse_json_report(&String::from_utf8(default.stdout).unwrap()).unwrap();
    assert_eq!(r.max_crypto_depth, 3);
}
