use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use acg_cli::config::{parse_config, parse_str, parse_with_overrides, ExperimentConfig, Kind};
use acg_cli::output::sha256_hex;
use acg_cli::run_experiment;

const MINIMAL: &str = "kind = \"sample-bridge\"\npotential = \"quartic\"\nepsilon = 0.2\ngamma = 0.3\ngamma1 = 0.1\ngamma2 = 0.5\n";

fn acg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acg"))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn minimal_config_parses_with_automatic_node_count() {
    let cfg = parse_str(MINIMAL).unwrap();
    assert_eq!(cfg.kind, Kind::SampleBridge);
    // ⌈0.2^{−0.5}⌉ = ⌈2.236⌉
    let expected = 0.2f64.powf(-0.5).ceil() as usize;
    assert_eq!(expected, 3);
    assert_eq!(cfg.scale_params(cfg.epsilon).unwrap().n, expected);
}

#[test]
fn gamma_out_of_range_is_rejected_with_the_assumption() {
    let err = parse_str(&MINIMAL.replace("gamma = 0.3", "gamma = 0.7")).unwrap_err();
    assert!(err.0.iter().any(|m| m.contains("Assume 0<γ<2/3")), "{err}");
}

#[test]
fn violated_exponent_inequality_is_quoted() {
    let err = parse_str(&MINIMAL.replace("gamma2 = 0.5", "gamma2 = 0.2")).unwrap_err();
    assert!(err.0.iter().any(|m| m.contains("−γ₁−γ/2+γ₂>0")), "{err}");
}

#[test]
fn missing_potential_names_the_key() {
    let err = parse_str(&MINIMAL.replace("potential = \"quartic\"\n", "")).unwrap_err();
    assert!(err.0.iter().any(|m| m.contains("potential")), "{err}");
}

#[test]
fn unknown_key_is_named_and_all_errors_are_listed() {
    let text = format!("{MINIMAL}[chain]\nrhoo = 0.5\n");
    let err = parse_str(&text.replace("gamma = 0.3", "gamma = 0.7")).unwrap_err();
    assert!(err.0.iter().any(|m| m.contains("chain.rhoo")), "{err}");
    assert!(err.0.len() >= 2, "{err}");
}

#[test]
fn config_round_trips() {
    let text = format!(
        "{MINIMAL}seed = 42\nN = 5\n[chain]\nrho = 0.8\nn_steps = 1234\nburn_in = 100\nmax_shift = 2\n[rates]\ndeltas = [0.1, 0.2]\nnorms = [\"linf\"]\n[spde]\nscaling = \"as-written\"\nnoise = false\n"
    );
    let a = parse_str(&text).unwrap();
    let b = parse_str(&a.to_text()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(b.n, Some(5));
    assert_eq!(b.chain.n_steps, 1234);
}

#[test]
fn overrides_apply_before_validation() {
    let cfg = parse_with_overrides(MINIMAL, &[("chain.n_steps".into(), "777".into()), ("chain.burn_in".into(), "70".into()), ("kind".into(), "logz".into())]).unwrap();
    assert_eq!(cfg.chain.n_steps, 777);
    assert_eq!(cfg.kind, Kind::Logz);
    assert!(parse_with_overrides(MINIMAL, &[("nope".into(), "1".into())]).is_err());
}

#[test]
fn parse_config_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, MINIMAL).unwrap();
    assert_eq!(parse_config(&path).unwrap(), parse_str(MINIMAL).unwrap());
    assert!(parse_config(&dir.path().join("missing.toml")).is_err());
}

fn bridge_config() -> ExperimentConfig {
    parse_with_overrides(MINIMAL, &[("bridge.samples".into(), "2000".into())]).unwrap()
}

#[test]
fn identical_runs_give_identical_bytes() {
    let cfg = bridge_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path(), 1).unwrap();
    run_experiment(&cfg, b.path(), 1).unwrap();
    let (fa, fb) = (read_dir_bytes(a.path()), read_dir_bytes(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name != "manifest.json" && (name.ends_with(".csv") || name.ends_with(".json")) {
            assert_eq!(bytes, &fb[name], "{name}");
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let text = format!("{MINIMAL}[chain]\nn_steps = 3000\nburn_in = 300\nchains = 3\n");
    let cfg = parse_with_overrides(&text, &[("kind".into(), "sample-gibbs".into())]).unwrap();
    let bridge = bridge_config();
    for c in [&cfg, &bridge] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_experiment(c, a.path(), 1).unwrap();
        run_experiment(c, b.path(), 3).unwrap();
        let (fa, fb) = (read_dir_bytes(a.path()), read_dir_bytes(b.path()));
        for (name, bytes) in fa.iter().filter(|(n, _)| n.as_str() != "manifest.json") {
            assert_eq!(bytes, &fb[name], "{name}");
        }
    }
}

#[test]
fn manifest_lists_every_file_with_its_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = run_experiment(&bridge_config(), dir.path(), 1).unwrap();
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    let listed: BTreeMap<String, String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["name"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect();
    let on_disk = read_dir_bytes(dir.path());
    assert_eq!(on_disk.len(), listed.len() + 1);
    for (name, bytes) in on_disk.iter().filter(|(n, _)| n.as_str() != "manifest.json") {
        assert_eq!(listed.get(name), Some(&sha256_hex(bytes)), "{name}");
    }
    assert!(!manifest["seeds"].as_array().unwrap().is_empty());
    assert_eq!(manifest["config_sha256"], sha256_hex(bridge_config().to_text().as_bytes()));
}

#[test]
fn csv_files_carry_a_schema_line() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&bridge_config(), dir.path(), 1).unwrap();
    for (name, bytes) in read_dir_bytes(dir.path()).iter().filter(|(n, _)| n.ends_with(".csv")) {
        let first = String::from_utf8_lossy(bytes).lines().next().unwrap().to_string();
        assert!(first.starts_with("# schema: acg.") && first.ends_with(".v1"), "{name}: {first}");
    }
}

#[test]
fn numeric_failure_keeps_a_failed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a step beyond the stability bound is caught before any run
    let cfg = parse_with_overrides(
        MINIMAL,
        &[("kind".into(), "spde".into()), ("spde.n_x".into(), "31".into()), ("spde.dt".into(), "1.0".into())],
    );
    assert!(cfg.is_err());

    let out = acg()
        .args(["--out", dir.path().to_str().unwrap(), "spectrum", "--set", "spectrum.h=-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "FAILED");
    assert!(manifest["error"].as_str().unwrap().contains("numerical") || manifest["error"].as_str().unwrap().contains("invalid"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = acg().args(["--out", out, "instanton"]).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(dir.path().join("profile.csv").exists() && dir.path().join("instanton.svg").exists());

    let bad = acg().args(["--out", out, "sample-gibbs", "--set", "gamma=0.7"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Assume 0<γ<2/3"));

    let verify = acg().args(["--out", out, "verify", "--set", "verify.criteria=[1, 2]"]).output().unwrap();
    assert_eq!(verify.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&verify.stdout).contains("PASS [ 1]"));
}

#[test]
fn environment_overrides_output_dir_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let st = acg()
        .env("ACG_OUTPUT_DIR", &target)
        .env("ACG_WORKERS", "2")
        .args(["spde", "--nx", "31", "--t-end", "0.2", "--noise", "off", "--snapshot-stride", "100"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(target.join("snapshots.csv").exists() && target.join("summary.json").exists());

    let bad = acg().env("ACG_WORKERS", "many").args(["--out", dir.path().to_str().unwrap(), "instanton"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));
}
