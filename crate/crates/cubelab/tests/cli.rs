//! End-to-end tests of the `cubelab` binary: exit-code contract, artifact
//! round trips and deterministic DOT output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cubelab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_json(dir: &Path, name: &str, v: Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {:?}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn v4_instance() -> Value {
    // Klein four group as Z/2 × Z/2 with its three 2-element subgroups.
    json!({
        "context": { "kind": "abelian_product", "invariants": [2, 2] },
        "relations": [
            { "generators": [1] },
            { "generators": [2] },
            { "generators": [3] }
        ]
    })
}

fn z12_ideal_triple() -> Value {
    json!({
        "context": { "kind": "abelian_product", "invariants": [12] },
        "relations": [
            { "generators": [2] },
            { "generators": [3] },
            { "generators": [4] }
        ]
    })
}

fn complexes_triple() -> Value {
    json!({
        "context": { "kind": "fgab", "rank": 2 },
        "subobjects": [
            { "symbolic": ["1"] },
            { "symbolic": ["a"] },
            { "symbolic": ["a^2"] }
        ]
    })
}

#[test]
fn check_distributive_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let v4 = write_json(dir.path(), "v4.json", v4_instance());
    let out = run(&["check-distributive", v4.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "V4 triple is not distributive");
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], json!(false));
    assert!(report["witness"].is_object(), "a witness family is reported");

    let z12 = write_json(dir.path(), "z12.json", z12_ideal_triple());
    let out = run(&["check-distributive", z12.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "ideals of Z/12 are distributive");
    assert_eq!(stdout_json(&out)["verdict"], json!(true));

    let cx = write_json(dir.path(), "complexes.json", complexes_triple());
    let out = run(&["check-distributive", cx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // --n-override keeps only a prefix of the tuple; a pair is distributive.
    let out = run(&["check-distributive", cx.to_str().unwrap(), "--n-override", "2"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&["check-distributive", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_json(&out)["error"].is_string(), "errors are reported as JSON");

    let missing = dir.path().join("nope.json");
    let out = run(&["check-extension", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));

    let malformed = write_json(
        dir.path(),
        "malformed.json",
        json!({ "context": { "kind": "finset", "size": 3 },
                "relations": [ { "blocks": [[0, 1]] } ] }),
    );
    let out = run(&["check-distributive", malformed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "partial partitions are rejected");
}

#[test]
fn cube_artifact_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let v4 = write_json(dir.path(), "v4.json", v4_instance());
    let cube_path = dir.path().join("v4cube.json");
    let out = run(&["build-cube", v4.to_str().unwrap(), "--out", cube_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // The stored artifact and the instance give the same (negative) verdict.
    let from_artifact = run(&["check-extension", cube_path.to_str().unwrap()]);
    let from_instance = run(&["check-extension", v4.to_str().unwrap()]);
    assert_eq!(from_artifact.status.code(), Some(1));
    assert_eq!(from_instance.status.code(), Some(1));
    assert_eq!(
        stdout_json(&from_artifact)["verdict"],
        stdout_json(&from_instance)["verdict"]
    );

    let z12 = write_json(dir.path(), "z12.json", z12_ideal_triple());
    let out = run(&["check-extension", z12.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "distributive ideal triple is an extension");
}

#[test]
fn diagram_build_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let z6 = write_json(
        dir.path(),
        "z6.json",
        json!({
            "context": { "kind": "abelian_product", "invariants": [6] },
            "relations": [ { "generators": [2] }, { "generators": [3] } ]
        }),
    );
    let grid = dir.path().join("z6grid.json");
    let out = run(&[
        "build-diagram",
        z6.to_str().unwrap(),
        "--pointed",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify-diagram", grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "the Z/6 pointed grid is exact");

    let v4 = write_json(dir.path(), "v4.json", v4_instance());
    let v4grid = dir.path().join("v4grid.json");
    let out = run(&[
        "build-diagram",
        v4.to_str().unwrap(),
        "--pointed",
        "--out",
        v4grid.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify-diagram", v4grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    let lines = report["witness"]["failing_lines"].as_array().unwrap();
    assert!(!lines.is_empty(), "failing lines are named");
    assert!(lines[0]["line"].as_str().unwrap().contains('*'));

    // Fork diagrams exist for plain finite sets as well.
    let finset = write_json(
        dir.path(),
        "finset.json",
        json!({
            "context": { "kind": "finset", "size": 4 },
            "relations": [
                { "blocks": [[0, 1], [2, 3]] },
                { "blocks": [[0, 2], [1, 3]] }
            ]
        }),
    );
    let fork = dir.path().join("fork.json");
    let out = run(&[
        "build-diagram",
        finset.to_str().unwrap(),
        "--fork",
        "--out",
        fork.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify-diagram", fork.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn dot_export_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let z6 = write_json(
        dir.path(),
        "z6.json",
        json!({
            "context": { "kind": "abelian_product", "invariants": [6] },
            "relations": [ { "generators": [2] }, { "generators": [3] } ]
        }),
    );
    let grid = dir.path().join("grid.json");
    run(&["build-diagram", z6.to_str().unwrap(), "--pointed", "--out", grid.to_str().unwrap()]);

    let a = run(&["export-dot", grid.to_str().unwrap()]);
    let b = run(&["export-dot", grid.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "DOT output is byte-identical across runs");

    let text = String::from_utf8(a.stdout).unwrap();
    let nodes = text.lines().filter(|l| l.contains("[label=")).count();
    let edges = text.lines().filter(|l| l.contains("->")).count();
    assert_eq!(nodes, 9, "a 3^2 grid has 9 nodes");
    assert_eq!(edges, 12, "a 3^2 grid has 12 arrows");

    // Cube artifacts render too: 4 vertices, 4 arrows for a square.
    let cube = dir.path().join("cube.json");
    run(&["build-cube", z6.to_str().unwrap(), "--out", cube.to_str().unwrap()]);
    let out = run(&["export-dot", cube.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("[label=")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.contains("->")).count(), 4);
}

#[test]
fn search_exit_codes_and_output_shape() {
    let dir = tempfile::tempdir().unwrap();
    let hit = write_json(
        dir.path(),
        "hit.json",
        json!({
            "context": "group",
            "n": 3,
            "predicate": "non-distributive",
            "order_bound": 4,
            "max_instances": 200,
            "seed": 5
        }),
    );
    let out = run(&["search", hit.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "witnesses exist below order 4");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.trim().is_empty());
    for line in text.lines() {
        let w: Value = serde_json::from_str(line).expect("one JSON witness per line");
        assert!(w["instance"].is_object());
        // the report is the distributivity check, which fails on a witness
        assert_eq!(w["report"]["verdict"], json!(false));
        assert!(w["report"]["witness"].is_object());
    }

    let miss = write_json(
        dir.path(),
        "miss.json",
        json!({
            "context": "zmod",
            "n": 3,
            "predicate": "non-distributive",
            "modulus_bound": 12,
            "max_instances": 500,
            "seed": 5
        }),
    );
    let out = run(&["search", miss.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "ideal lattices of Z/m are distributive");
    assert!(out.stdout.is_empty());

    // --seed override keeps runs reproducible.
    let a = run(&["search", hit.to_str().unwrap(), "--seed", "99"]);
    let b = run(&["search", hit.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verbose_goes_to_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let z12 = write_json(dir.path(), "z12.json", z12_ideal_triple());
    let quiet = run(&["check-distributive", z12.to_str().unwrap()]);
    let loud = run(&["check-distributive", z12.to_str().unwrap(), "--verbose"]);
    assert_eq!(quiet.stdout, loud.stdout, "stdout is machine JSON either way");
    assert!(quiet.stderr.is_empty());
    assert!(!loud.stderr.is_empty());
}
