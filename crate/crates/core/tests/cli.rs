use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn kahler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kahler"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_r0(dir: &Path, n: usize) -> String {
    let path = dir.join(format!("r0_{n}.json"));
    let p = path.to_str().unwrap().to_string();
    let out = kahler(&["r0", "--n", &n.to_string(), "--out", &p]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn write_entries(dir: &Path, name: &str, entries: &[f64]) -> String {
    let space = kahler::HermitianSpace::new(2).unwrap();
    let t = kahler::CurvatureTensor::from_entries(&space, entries.to_vec()).unwrap();
    let path = dir.join(name);
    kahler::tensor_file::write(&path, &t, 1e-9).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn r0_then_validate_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_r0(dir.path(), 2);
    let out = kahler(&["validate", &p]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["max_residual"].as_f64(), Some(0.0));
    for key in ["antisymmetry", "pair_symmetry", "bianchi", "j_invariance"] {
        assert_eq!(v["certificate"][key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn r0_file_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_r0(dir.path(), 3);
    let file = kahler::tensor_file::read(Path::new(&p)).unwrap();
    let r0 = kahler::CurvatureTensor::r0(&kahler::HermitianSpace::new(3).unwrap());
    assert_eq!(file.tensor.entries(), r0.entries());
}

#[test]
fn bad_dimensions() {
    assert_eq!(code(&kahler(&["r0", "--n", "0"])), 2);
    assert_eq!(code(&kahler(&["r0", "--n", "5"])), 2);
    assert_eq!(code(&kahler(&["constants", "--epsilon", "0.1", "--n", "5"])), 3);
    assert_eq!(code(&kahler(&["identities", "--n", "6", "--seed", "1"])), 3);
}

#[test]
fn validate_single_entry_and_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = vec![0.0; 256];
    entries[1] = 1.0;
    let p = write_entries(dir.path(), "single.json", &entries);
    let out = kahler(&["validate", &p]);
    assert_eq!(code(&out), 1);
    assert!(json(&out)["certificate"]["antisymmetry"].as_f64().unwrap() > 0.0);

    let r0 = write_r0(dir.path(), 2);
    let text = std::fs::read_to_string(&r0).unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&kahler(&["validate", truncated.to_str().unwrap()])), 2);
}

#[test]
fn pinch_r0_zero_and_missing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_r0(dir.path(), 2);
    let out = kahler(&["pinch", &p, "--seed", "11"]);
    assert_eq!(code(&out), 0);
    let report = &json(&out)["report"];
    assert!((report["k_min"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    assert!((report["k_max"].as_f64().unwrap() + 0.25).abs() < 1e-6);
    assert_eq!(report["converged"].as_bool(), Some(true));

    let zero = write_entries(dir.path(), "zero.json", &[0.0; 256]);
    let out = kahler(&["pinch", &zero, "--seed", "1", "--restarts", "8"]);
    assert_eq!(code(&out), 0);
    let report = &json(&out)["report"];
    assert_eq!(report["k_min"].as_f64(), Some(0.0));
    assert_eq!(report["k_max"].as_f64(), Some(0.0));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&kahler(&["pinch", missing.to_str().unwrap(), "--seed", "1"])), 2);
    // a seed is mandatory
    assert_eq!(code(&kahler(&["pinch", &p])), 2);
}

#[test]
fn pinch_rejects_non_kahler_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = vec![0.0; 256];
    entries[1] = 1.0;
    let p = write_entries(dir.path(), "single.json", &entries);
    assert_eq!(code(&kahler(&["pinch", &p, "--seed", "1"])), 1);
}

#[test]
fn chern_ratios_of_r0() {
    let dir = tempfile::tempdir().unwrap();
    let p2 = write_r0(dir.path(), 2);
    let out = kahler(&["chern", &p2, "--ratio", "2,0:0,1"]);
    assert_eq!(code(&out), 0);
    let ratio = json(&out)["ratios"][0]["ratio"].as_f64().unwrap();
    assert!((ratio - 3.0).abs() < 1e-8);

    let p3 = write_r0(dir.path(), 3);
    let out = kahler(&["chern", &p3, "--ratio", "3,0,0:0,0,1"]);
    assert_eq!(code(&out), 0);
    let ratio = json(&out)["ratios"][0]["ratio"].as_f64().unwrap();
    assert!((ratio - 16.0).abs() < 1e-8);

    let out = kahler(&["chern", &p3, "--all"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["densities"].as_array().unwrap().len(), 3);
    assert_eq!(v["ratios"].as_array().unwrap().len(), 6);

    for bad in ["2,0", "2,0:0,2", "a,b:0,1", "3,0,0:0,0,1"] {
        assert_eq!(code(&kahler(&["chern", &p2, "--ratio", bad])), 2, "{bad}");
    }
    assert_eq!(code(&kahler(&["chern", &p2])), 2);
}

#[test]
fn identities_flag_the_printed_coefficient() {
    let out = kahler(&["identities", "--n", "2", "--samples", "20", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["passed"].as_bool(), Some(true));
    for check in v["checks"].as_array().unwrap() {
        assert!(check["max_residual"].as_f64().unwrap() <= 1e-9, "{check}");
    }
    let printed = &v["printed_complex_polarization"];
    assert_eq!(printed["suspected_typo"].as_bool(), Some(true));
    assert!((printed["fitted_coefficient"].as_f64().unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn zero_only_sweep_has_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "n = 2\nt_values = [0.0]\nsamples_per_t = 4\nseed = 5\nrestarts = 16\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = kahler(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("t,seed,delta,frobenius_dist,h_dev,ratio_dev_max,converged")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(&fields[2..], ["0", "0", "0", "0", "true"]);
    }
    assert_eq!(json(&out)["aggregates"][0]["max_ratio_dev"].as_f64(), Some(0.0));

    std::fs::write(&config, "n = 2\nsamples_per_t = 4\n").unwrap();
    assert_eq!(code(&kahler(&["sweep", "--config", config.to_str().unwrap()])), 2);
}

#[test]
fn constants_chain() {
    let out = kahler(&["constants", "--epsilon", "0.1", "--n", "2"]);
    assert_eq!(code(&out), 0);
    let chain = &json(&out)["chain"];
    let (eta, delta_1, delta) = (
        chain["eta"].as_f64().unwrap(),
        chain["delta_1"].as_f64().unwrap(),
        chain["delta"].as_f64().unwrap(),
    );
    assert!(delta > 0.0);
    assert_eq!(delta_1, eta / 4.0);
    assert_eq!(delta, (eta / 3.0).min(delta_1));
    assert!(chain["epsilon_1"].as_f64().unwrap() > 0.0);

    for eps in ["0", "-0.1"] {
        assert_eq!(code(&kahler(&["constants", "--epsilon", eps, "--n", "2"])), 2);
    }
}
