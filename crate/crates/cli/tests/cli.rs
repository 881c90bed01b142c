use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn secanta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secanta")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("secanta-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

const W: [&str; 7] = ["--kind", "distinguishable", "--dims", "2,2,2", "--state", "|001>+|010>+|100>", "--quiet"];

#[test]
fn w_rank_report() {
    let mut args = vec!["rank"];
    args.extend(W);
    let v = json_of(&secanta(&args));
    assert_eq!(v["schema"], "secanta/1");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["lower"], 2);
    assert_eq!(v["upper"], 3);
    assert_eq!(v["border"], 2);
    assert_eq!(v["exceptional"], true);
    assert_eq!(v["report"]["lower_bound"]["certificate"], "flattening");
}

#[test]
fn output_is_byte_identical_for_a_fixed_seed() {
    let mut args = vec!["border-rank", "--r", "2", "--seed", "11"];
    args.extend(W);
    let a = secanta(&args);
    let b = secanta(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json_of(&a)["seed"], 11);
}

#[test]
fn four_qubit_secant_defect() {
    let v = json_of(&secanta(&["secant-dim", "--kind", "distinguishable", "--dims", "2,2,2,2", "--r", "3", "--seed", "7", "--quiet"]));
    assert_eq!((v["measured"].as_u64(), v["expected"].as_u64(), v["defect"].as_i64()), (Some(13), Some(14), Some(1)));
}

#[test]
fn waring_ranks() {
    assert_eq!(json_of(&secanta(&["waring", "--exponents", "1,3", "--quiet"]))["rank"], 4);
    assert_eq!(json_of(&secanta(&["waring", "--monomials", "1,2,0,0;0,0,1,2", "--quiet"]))["rank"], 6);
    let shared = secanta(&["waring", "--monomials", "2,1;0,3", "--quiet"]);
    assert_eq!(shared.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two_and_name_the_flag() {
    let missing = secanta(&["rank", "--state", "|001>"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--kind"));

    let bad_ket = secanta(&["parse", "--kind", "distinguishable", "--dims", "2,2", "--state", "|0x>"]);
    assert_eq!(bad_ket.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_ket.stderr).contains("--state"));

    let no_file = secanta(&["rank", "--file", "/nonexistent/state.json"]);
    assert_eq!(no_file.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_file.stderr).contains("--file"));

    assert_eq!(secanta(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(secanta(&["waring", "--exponents", "0,0"]).status.code(), Some(2));
    assert_eq!(secanta(&["secant-dim", "--kind", "bosonic", "--n", "3"]).status.code(), Some(2));
}

#[test]
fn quiet_silences_the_summary() {
    let loud = secanta(&["spherical", "--kind", "bosonic", "--n", "2", "--L", "3"]);
    assert!(!loud.stderr.is_empty());
    assert_eq!(json_of(&loud)["spherical"], false);
    let quiet = secanta(&["spherical", "--kind", "bosonic", "--n", "2", "--L", "3", "--quiet"]);
    assert!(quiet.stderr.is_empty());
}

#[test]
fn catalog_entries_round_trip_through_rank() {
    let dir = scratch_dir("catalog");
    let listing = json_of(&secanta(&["catalog", "--emit-dir", dir.to_str().unwrap(), "--quiet"]));
    let entries = listing["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 11);
    for e in entries {
        let path = dir.join(format!("{}.json", e["id"].as_str().unwrap()));
        let v = json_of(&secanta(&["rank", "--file", path.to_str().unwrap(), "--quiet"]));
        assert_eq!(v["upper"], e["rank"], "{}", e["id"]);
        assert_eq!(v["border"], e["border_rank"], "{}", e["id"]);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn catalog_family_filter() {
    let v = json_of(&secanta(&["catalog", "--family", "4qubit", "--quiet"]));
    assert!(v["entries"].as_array().unwrap().iter().all(|e| e["family"] == "4qubit"));
    assert_eq!(secanta(&["catalog", "--family", "5qubit"]).status.code(), Some(2));
}

#[test]
fn parse_classify_and_invariants() {
    let mut args = vec!["parse"];
    args.extend(W);
    let doc = json_of(&secanta(&args));
    assert_eq!(doc["ket"], "|001> + |010> + |100>");
    assert_eq!(doc["entries"].as_array().unwrap().len(), 3);

    let mut args = vec!["classify"];
    args.extend(W);
    assert_eq!(json_of(&secanta(&args))["classification"]["label"], "W");

    let ghz = ["--kind", "distinguishable", "--dims", "2,2,2", "--state", "|000>+|111>", "--quiet"];
    let mut args = vec!["hyperdet"];
    args.extend(ghz);
    // Evaluated on the tensor as given: a000² a111² = 1.
    assert!((json_of(&secanta(&args))["abs"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let mut args = vec!["rdm"];
    args.extend(ghz);
    let spectra = json_of(&secanta(&args))["spectra"].clone();
    for s in spectra.as_array().unwrap() {
        assert!((s[0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    let mut args = vec!["mlrank"];
    args.extend(W);
    assert_eq!(json_of(&secanta(&args))["mlrank"], serde_json::json!([2, 2, 2]));
}

#[test]
fn degeneration_ladder() {
    let v = json_of(&secanta(&["degenerate", "--family", "qubit3", "--quiet"]));
    let rows = v["ladder"].as_array().unwrap();
    let last = rows.last().unwrap()["distance"].as_f64().unwrap();
    assert!(last < 1e-5, "{last}");
    let boson = json_of(&secanta(&["degenerate", "--family", "boson", "--n", "3", "--L", "4", "--quiet"]));
    assert_eq!(boson["system"]["kind"], "bosonic");
    assert_eq!(secanta(&["degenerate", "--family", "boson"]).status.code(), Some(2));
}

#[test]
fn expected_dimension() {
    let v = json_of(&secanta(&["expected", "--kind", "distinguishable", "--dims", "2,2,2,2", "--r", "3", "--quiet"]));
    assert_eq!(v["expected_dim"], 14);
}
