//! End-to-end tests of the `csdac` binary: determinism, validation failures,
//! file formats, and round trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use csdac_core::mappers::{build_greedy_lut, read_greedy_lut, read_memoryless_csv};
use csdac_core::model::{decode, Basis};

fn csdac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csdac"))
        .current_dir(dir)
        .env("CSDAC_CATALOG", dir.join("catalog.json"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn optimize_is_deterministic_and_fills_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "optimize-basis",
        "--n",
        "3",
        "--l",
        "4",
        "--restarts",
        "4",
        "--iterations",
        "150",
        "--samples",
        "64",
        "--seed",
        "7",
        "--out",
        "result.json",
    ];
    let first = csdac(dir.path(), &args);
    assert_success(&first);
    let first_json = fs::read(dir.path().join("result.json")).unwrap();
    let first_catalog = fs::read(dir.path().join("catalog.json")).unwrap();

    let second = csdac(dir.path(), &args);
    assert_success(&second);
    assert_eq!(
        first_json,
        fs::read(dir.path().join("result.json")).unwrap()
    );
    assert_eq!(
        first_catalog,
        fs::read(dir.path().join("catalog.json")).unwrap()
    );

    let parsed: serde_json::Value = serde_json::from_slice(&first_json).unwrap();
    assert_eq!(parsed["meta"]["seed"], 7);
    assert_eq!(parsed["meta"]["tool"], "csdac");
    let weights: Vec<u32> =
        serde_json::from_value(parsed["result"]["best"]["weights"].clone()).unwrap();
    assert_eq!(weights.iter().sum::<u32>(), 7); // full-scale exact at n=3

    // the catalog entry is usable as a basis source
    let eval = csdac(
        dir.path(),
        &[
            "evaluate-metric",
            "--basis",
            "catalog:n3-l4-seed7",
            "--mapper",
            "canonical",
            "--out",
            "m.csv",
        ],
    );
    assert_success(&eval);
}

#[test]
fn optimize_rejects_infeasible_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &["optimize-basis", "--n", "8", "--l", "4", "--seed", "1"],
    );
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cover"), "stderr: {stderr}");
    assert!(!dir.path().join("catalog.json").exists());
}

#[test]
fn evaluate_reports_thermometer_as_unity() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "evaluate-metric",
            "--basis",
            "8T",
            "--basis",
            "4T+4B",
            "--mapper",
            "canonical",
            "--out",
            "metrics.csv",
            "--seed",
            "3",
        ],
    );
    assert_success(&out);
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(csv.starts_with("# tool=csdac"));
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "basis_id,L,mapper,method,raw,normalized,ci_halfwidth,seed"
    );
    let therm: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(therm[0], "8T");
    assert_eq!(therm[1], "255");
    assert_eq!(therm[2], "canonical");
    assert_eq!(therm[3], "analytic");
    let normalized: f64 = therm[5].parse().unwrap();
    assert!((normalized - 1.0).abs() < 1e-9);
    let segmented: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(segmented[0], "4T+4B");
    assert_eq!(segmented[1], "19");
    let seg_normalized: f64 = segmented[5].parse().unwrap();
    assert!(seg_normalized > 1.0);
}

#[test]
fn map_sequence_finds_the_optimal_cost() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "map-sequence",
            "--basis",
            "1,1,2",
            "--n",
            "2",
            "--mapper",
            "viterbi",
            "--codes",
            "2,3,2",
            "--out",
            "path.json",
        ],
    );
    assert_success(&out);
    let parsed: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("path.json")).unwrap()).unwrap();
    assert_eq!(parsed["cost"], 2);
    assert_eq!(parsed["representations"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_orders_thermometer_above_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "simulate",
            "--basis",
            "8T",
            "--basis",
            "8B",
            "--sweep-tau",
            "0:0.05:0.1",
            "--freq",
            "31/128",
            "--samples",
            "128",
            "--osr",
            "16",
            "--seed",
            "2",
            "--out",
            "sim.csv",
        ],
    );
    assert_success(&out);
    let csv = fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("basis_id"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 6); // 2 bases x 3 skews
    let sfdr = |row: &[String]| -> f64 {
        match row[6].as_str() {
            "inf" => f64::INFINITY,
            v => v.parse().unwrap(),
        }
    };
    for tau_idx in 0..3 {
        let therm = &rows[tau_idx];
        let binary = &rows[3 + tau_idx];
        assert_eq!(therm[3], binary[3], "same skew");
        assert!(
            sfdr(therm) >= sfdr(binary),
            "tau {}: 8T {} < 8B {}",
            therm[3],
            therm[6],
            binary[6]
        );
    }
    // the verbatim frequency string lands in the metadata
    assert!(csv.contains("\"freq\":\"31/128\""));
}

#[test]
fn simulate_requires_a_skew_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(dir.path(), &["simulate", "--basis", "8B"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no skew values"));
}

#[test]
fn exported_memoryless_table_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "export-table",
            "--basis",
            "opt12",
            "--kind",
            "memoryless",
            "--restarts",
            "2",
            "--seed",
            "5",
            "--out",
            "table.csv",
        ],
    );
    assert_success(&out);
    let bytes = fs::read(dir.path().join("table.csv")).unwrap();
    let table = read_memoryless_csv(bytes.as_slice()).unwrap();
    let basis = table.basis().clone();
    assert_eq!(basis.len(), 12);
    // every row decodes to its codeword; spot-check the mid-scale row
    let rep = table.rep_for(127).unwrap();
    assert_eq!(decode(rep, &basis).unwrap(), 127);

    // exporting the canonical source is also valid
    let canon = csdac(
        dir.path(),
        &[
            "export-table",
            "--basis",
            "1,1,2",
            "--n",
            "2",
            "--kind",
            "memoryless",
            "--mapper",
            "canonical",
            "--out",
            "canon.csv",
        ],
    );
    assert_success(&canon);
    let canon_table =
        read_memoryless_csv(fs::read(dir.path().join("canon.csv")).unwrap().as_slice()).unwrap();
    assert_eq!(canon_table.rep_for(2).unwrap().to_string(), "001");
}

#[test]
fn exported_greedy_lut_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "export-table",
            "--basis",
            "1,1,2",
            "--n",
            "2",
            "--kind",
            "greedy-lut",
            "--out",
            "table.lut",
        ],
    );
    assert_success(&out);
    let bytes = fs::read(dir.path().join("table.lut")).unwrap();
    let loaded = read_greedy_lut(bytes.as_slice()).unwrap();
    let basis = Basis::new(vec![1, 1, 2], 2).unwrap();
    assert_eq!(loaded, build_greedy_lut(&basis).unwrap());
    // header + 3 weights + 2^(2+3) one-byte entries
    assert_eq!(bytes.len(), 12 + 12 + 32);
}

#[test]
fn greedy_lut_export_has_the_documented_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &[
            "export-table",
            "--basis",
            "opt13",
            "--kind",
            "greedy-lut",
            "--out",
            "opt13.lut",
        ],
    );
    assert_success(&out);
    let len = fs::metadata(dir.path().join("opt13.lut")).unwrap().len();
    // header + 13 weights + 2^(8+13) two-byte entries
    assert_eq!(len, 12 + 13 * 4 + (1 << 21) * 2);
}

#[test]
fn enumerate_lists_canonical_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = csdac(
        dir.path(),
        &["enumerate", "--basis", "1,1,2", "--n", "2", "--code", "2"],
    );
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let pos_a = stdout.find("001").unwrap();
    let pos_b = stdout.find("110").unwrap();
    assert!(pos_a < pos_b, "canonical representation listed first");
}

#[test]
fn config_file_fills_unset_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"n": 3, "l": 4, "restarts": 2, "iterations": 100, "samples": 32, "seed": 9}"#,
    )
    .unwrap();
    let out = csdac(
        dir.path(),
        &[
            "optimize-basis",
            "--config",
            "run.json",
            "--seed",
            "11",
            "--out",
            "result.json",
        ],
    );
    assert_success(&out);
    let parsed: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(parsed["meta"]["seed"], 11); // command line beats config
    assert_eq!(parsed["meta"]["config"]["n"], 3); // config fills the rest
    assert_eq!(parsed["meta"]["config"]["restarts"], 2);
}
