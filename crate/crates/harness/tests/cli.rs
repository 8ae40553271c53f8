use std::process::Command;

use resilient_te_harness::cli::{format_value, run};
use resilient_te_harness::{bundled, InstanceFile};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("resilient-te").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn ffc_on_four_tunnel_prints_one() {
    let (code, out, _) = call(&["solve", "fixture:four-tunnel", "--model", "ffc", "--k", "1"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1.0");
}

#[test]
fn oracle_on_four_tunnel_prints_one() {
    let (code, out, _) = call(&["oracle", "fixture:four-tunnel", "--k", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1.0");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, out, err) = call(&["solve", "fixture:four-tunnel", "--model", "ffc", "--k", "1", "--bogus"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("--bogus"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_resilient-te");
    let ok = Command::new(bin).args(["oracle", "fixture:parallel", "--k", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), format_value(2.0 / 3.0));
    let usage = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let missing = Command::new(bin).args(["validate", "/definitely/not/here.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error[IO_ERROR]: "));
    let threads = Command::new(bin)
        .args(["oracle", "fixture:parallel", "--k", "1"])
        .env("RESILIENT_TE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn errors_are_machine_readable() {
    let (code, _, err) = call(&["solve", "fixture:nope", "--model", "ls", "--k", "1"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[UNKNOWN_FIXTURE]: "), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut file = bundled("four-tunnel").unwrap();
    file.tunnels[0].path.push("ghost".into());
    std::fs::write(&path, file.to_json()).unwrap();
    let (code, _, err) = call(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.lines().next().unwrap().starts_with("error[UNKNOWN_LINK]: "), "{err}");

    std::fs::write(&path, "{not json").unwrap();
    let (code, _, err) = call(&["oracle", path.to_str().unwrap(), "--k", "1"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[PARSE_ERROR]: "), "{err}");
}

#[test]
fn validate_accepts_every_bundled_fixture() {
    for name in resilient_te_harness::BUNDLED {
        let (code, out, err) = call(&["validate", &format!("fixture:{name}")]);
        assert_eq!((code, out.trim()), (0, "ok"), "{name}: {err}");
    }
}

#[test]
fn generated_files_feed_back_into_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("split.json");
    let (code, _, err) = call(&["gen", "sublinks", "fixture:four-tunnel", "-o", split.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let file = InstanceFile::read(&split).unwrap();
    assert_eq!(file.topology.links.len(), 2 * bundled("four-tunnel").unwrap().topology.links.len());

    let demands = dir.path().join("demands.json");
    let (code, _, err) = call(&["gen", "demands", "fixture:four-tunnel", "--seed", "3", "-o", demands.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let tunnels = dir.path().join("tunnels.json");
    let (code, _, err) = call(&["gen", "tunnels", demands.to_str().unwrap(), "--count", "2", "-o", tunnels.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = call(&["solve", tunnels.to_str().unwrap(), "--model", "ffc-plus", "--k", "1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.trim().parse::<f64>().unwrap() >= 0.0);

    let (code, out, _) = call(&["gen", "scenarios", "fixture:four-tunnel", "--k", "1"]);
    assert_eq!(code, 0);
    let file = InstanceFile::parse_valid(&out).unwrap();
    assert_eq!(file.scenarios.len(), 1 + file.topology.links.len());
}

#[test]
fn flomore_subcommands() {
    let (code, out, _) = call(&["flomore", "solve", "fixture:flow-example"]);
    assert_eq!((code, out.trim()), (0, "0.0"));
    let (code, out, _) = call(&["flomore", "benders", "fixture:flow-example", "--beta", "0.99"]);
    assert_eq!((code, out.trim()), (0, "0.0"));
    let (code, out, _) = call(&["flomore", "cvar", "fixture:cvar-topo", "--variant", "flow-static"]);
    assert_eq!((code, out.trim()), (0, "1.0"));
    let (code, _, err) = call(&["flomore", "solve", "fixture:flow-example", "--beta", "1.5"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[INVALID_PARAMETER]: "), "{err}");
}

#[test]
fn realize_reports_a_valid_routing() {
    let (code, out, err) = call(&["realize", "fixture:four-tunnel", "--model", "ffc-plus", "--k", "1", "--scenario", "3-t"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for key in ["balance_residual", "tunnel_excess", "link_excess", "dead_tunnel_flow"] {
        assert!(v["check"][key].as_f64().unwrap() <= 1e-9, "{key}");
    }
    let (code, _, err) = call(&["realize", "fixture:four-tunnel", "--scenario", "nowhere"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[UNKNOWN_LINK]: "), "{err}");
}

#[test]
fn report_and_analyze_emit_csv() {
    let (code, out, _) = call(&["report", "fixture:four-tunnel", "--models", "ffc,ffc-plus", "--k", "1"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "model,k,objective,value,normalized");
    assert_eq!(&lines[1..], ["ffc,1,demand-scale,1.0,0.5", "ffc-plus,1,demand-scale,2.0,1.0", "oracle,1,demand-scale,2.0,1.0"]);

    let (code, out, _) = call(&["analyze", "fixture:flow-example", "--schemes", "flomore,smore"]);
    assert_eq!(code, 0);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let flomore: Vec<String> = rows.records().next().unwrap().unwrap().iter().map(String::from).collect();
    assert_eq!(flomore[0], "flomore");
    assert_eq!(flomore[2].parse::<f64>().unwrap(), 0.0);
}
