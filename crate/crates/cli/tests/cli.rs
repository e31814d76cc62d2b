use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bottleform"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("spawn")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn normalize_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["normalize", "--order", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["normalform.json", "generators.json", "remainder.json", "run_config.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let nf = read_json(&dir.path().join("normalform.json"));
    assert_eq!(nf["schema_version"], 1);
    assert_eq!(nf["config_hash"].as_str().unwrap().len(), 16);
    assert_eq!(nf["z"].as_array().unwrap().len(), 6);
    // leading anharmonic terms of the action form: -3/16 I1^2 and 5/32 I1^2 q2^2
    let af = nf["action_form"].as_array().unwrap();
    let coeff = |n: u64, k2: u64, l2: u64| {
        af.iter()
            .find(|t| t["i1"] == n && t["k2"] == k2 && t["l2"] == l2)
            .and_then(|t| t["coeff"].as_f64())
            .unwrap()
    };
    assert!((coeff(2, 0, 0) + 3.0 / 16.0).abs() < 1e-12);
    assert!((coeff(2, 2, 0) - 5.0 / 32.0).abs() < 1e-12);
    let gens = read_json(&dir.path().join("generators.json"));
    assert_eq!(gens["generators"].as_array().unwrap().len(), 5);
    let rem = read_json(&dir.path().join("remainder.json"));
    for step in rem["residuals"].as_array().unwrap() {
        assert!(step["scaled_residual"].as_f64().unwrap() < 1e-11);
    }
}

#[test]
fn order_zero_emits_only_the_quadratic_part() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["normalize", "--order", "0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let nf = read_json(&dir.path().join("normalform.json"));
    let z = nf["z"].as_array().unwrap();
    assert_eq!(z.len(), 1);
    assert_eq!(z[0]["order"], 0);
    assert!(z[0]["terms"].as_array().unwrap().iter().all(|t| t["bk"] == 0));
    let gens = read_json(&dir.path().join("generators.json"));
    assert!(gens["generators"].as_array().unwrap().is_empty());
}

#[test]
fn rerun_from_config_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = run(&["normalize", "--order", "4", "--trunc", "8"], a.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = a.path().join("run_config.json");
    let o = bin()
        .arg("--from-config")
        .arg(&cfg)
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["normalform.json", "generators.json", "remainder.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn section_outputs_and_monodromy() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "# z pz\n0 0.1\n0,0.2\n").unwrap();
    let out = dir.path().join("run");
    let o = bin()
        .args(["section", "--energy", "0.1", "--n-crossings", "20", "--grid", "40", "--threads", "2"])
        .arg("--seed-file")
        .arg(&seeds)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let levels = fs::read_to_string(out.join("sections/levels_E0.1_r5.csv")).unwrap();
    let mut lines = levels.lines();
    assert!(lines.next().unwrap().starts_with("# schema_version=1 config_hash="));
    assert_eq!(lines.next().unwrap(), "z,pz,phi,valid");
    assert_eq!(lines.count(), 40 * 40);
    let numeric = fs::read_to_string(out.join("sections/numeric_E0.1.csv")).unwrap();
    assert_eq!(numeric.lines().nth(1).unwrap(), "z,pz,seed_id");
    assert_eq!(numeric.lines().count(), 2 + 2 * 20);
    let lj = read_json(&out.join("levels.json"));
    assert_eq!(lj["levels"].as_array().unwrap().len(), 2);
    let m = read_json(&out.join("monodromy.json"));
    for k in ["E", "T", "trace", "stable"] {
        assert!(!m[k].is_null(), "{k} missing");
    }
    assert_eq!(m["stable"], true);
}

#[test]
fn empty_seed_file_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("empty.txt");
    fs::write(&seeds, "# nothing\n").unwrap();
    let out = dir.path().join("run");
    let o = bin()
        .args(["section", "--energy", "0.1", "--grid", "20"])
        .arg("--seed-file")
        .arg(&seeds)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed list is empty"));
    assert!(!out.join("sections/numeric_E0.1.csv").exists());
}

#[test]
fn single_mirror_energy_skips_fits() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["asymptotics", "--delta-e", "0.001", "--r-max", "6", "--trunc", "10"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let fits = read_json(&dir.path().join("fits.json"));
    assert!(fits["power_law"].is_null());
    assert!(fits["exponential"].is_null());
    assert!(fits["notice"].is_string());
    let csv = fs::read_to_string(dir.path().join("asymptotics.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "mode,E,beta,deltaE,r,N,norm");
    assert!(csv.lines().skip(2).all(|l| l.split(',').nth(3) == Some("0.001")));
}

#[test]
fn bifurcation_lists_requested_resonances() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bifurcation", "--resonances", "3:1,2:1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let b = read_json(&dir.path().join("bifurcations.json"));
    let list = b["bifurcations"].as_array().unwrap();
    assert_eq!(list.len(), 2);
    let e3 = list[0]["normal_form"]["energy"].as_f64().unwrap();
    let e2 = list[1]["normal_form"]["energy"].as_f64().unwrap();
    assert!((e3 - 0.097279).abs() < 2e-5 && (e2 - 0.188036).abs() < 2e-5);
    assert!(list[0]["numeric"].as_f64().is_some());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["section", "--energy", "2.0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ConfigError"));

    let pot = dir.path().join("pot.txt");
    fs::write(&pot, "0.5*rho^2 + exp(z)").unwrap();
    let o = bin()
        .args(["normalize", "--potential"])
        .arg(&pot)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Error"));

    let bad = dir.path().join("seeds.txt");
    fs::write(&bad, "0 abc\n").unwrap();
    let o = bin()
        .args(["section", "--energy", "0.1", "--seed-file"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compute_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // a seed outside the allowed region of the section
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "0 5.0\n").unwrap();
    let o = bin()
        .args(["section", "--energy", "0.1", "--grid", "10", "--seed-file"])
        .arg(&seeds)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("SeedOutsideCZVError"), "{}", stderr(&o));
}

#[test]
fn chaos_threshold_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["chaos-threshold", "--r-min", "10", "--r-max", "10"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_json(&dir.path().join("threshold.json"));
    let row = &t["normal_form"][0];
    assert_eq!(row["order"], 10);
    assert!((row["energy"].as_f64().unwrap() - 0.39550).abs() < 5e-4);
    assert!(t["monodromy"]["energy"].as_f64().is_some());
}
