use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use armsizer::analysis::{read_metrics_csv, TorqueBasis, METRICS_HEADER};
use armsizer::sizing::{bundled_catalog, write_catalog_csv, SizingReport};

fn armsizer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armsizer")).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_size_compare_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let stdout = ok(&armsizer(&["simulate", "--benchmark", "--out", p(&run)]));
    assert!(stdout.contains("round 2:"), "{stdout}");
    assert!(stdout.contains("J1  AC_400W_2500 + ZXS20_100  (changed)"), "{stdout}");
    for f in ["trajectory.csv", "torque_pro.csv", "torque_demo.csv", "metrics.csv", "sizing.json", "manifest.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }

    // `size` on the run directory reproduces the run's own report.
    let report = ok(&armsizer(&["size", "--run", p(&run)]));
    assert_eq!(report, fs::read_to_string(run.join("sizing.json")).unwrap());
    let out = tmp.path().join("sizing.json");
    ok(&armsizer(&["size", "--run", p(&run), "--out", p(&out)]));
    assert_eq!(fs::read_to_string(&out).unwrap(), report);

    let relaxed = SizingReport::from_json(&ok(&armsizer(&["size", "--run", p(&run), "--sf-speed", "1.1"]))).unwrap();
    assert_eq!(relaxed.config.sf_speed, 1.1);
    // Nothing in the bundled catalog covers J1 at twice the torque demand.
    let strict = armsizer(&["size", "--run", p(&run), "--sf-torque", "2.0"]);
    assert!(!strict.status.success());
    let msg = String::from_utf8_lossy(&strict.stderr);
    assert!(msg.contains("joint 1") && msg.contains("rms torque"), "{msg}");

    // `compare` on the run's torque files reproduces its metrics file.
    let demo = run.join("torque_demo.csv");
    let pro = run.join("torque_pro.csv");
    let csv = ok(&armsizer(&["compare", "--demo", p(&demo), "--pro", p(&pro)]));
    assert_eq!(csv, fs::read_to_string(run.join("metrics.csv")).unwrap());
    assert!(csv.starts_with(&METRICS_HEADER.join(",")));
    let metrics = read_metrics_csv(csv.as_bytes(), TorqueBasis::JointSide).unwrap();
    assert_eq!(metrics.joints.len(), 4);

    let mcsv = tmp.path().join("m.csv");
    let verdicts = ok(&armsizer(&["compare", "--demo", p(&demo), "--pro", p(&pro), "--out", p(&mcsv)]));
    assert_eq!(fs::read_to_string(&mcsv).unwrap(), csv);
    assert_eq!(verdicts.lines().count(), 4, "{verdicts}");
}

#[test]
fn simulate_is_deterministic_and_catalog_formats_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&armsizer(&["simulate", "--scale", "1.3", "--out", p(&a)]));

    let catalog = bundled_catalog();
    let (mpath, gpath) = (tmp.path().join("motors.csv"), tmp.path().join("gearboxes.csv"));
    write_catalog_csv(&catalog, fs::File::create(&mpath).unwrap(), fs::File::create(&gpath).unwrap()).unwrap();
    ok(&armsizer(&["simulate", "--scale", "1.3", "--motors", p(&mpath), "--gearboxes", p(&gpath), "--out", p(&b)]));

    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }

    let json = tmp.path().join("catalog.json");
    fs::write(&json, catalog.to_json()).unwrap();
    let from_json = ok(&armsizer(&["size", "--run", p(&a), "--catalog", p(&json)]));
    assert_eq!(from_json, fs::read_to_string(a.join("sizing.json")).unwrap());
}

#[test]
fn scenario_and_program_files() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    ok(&armsizer(&["simulate", "--benchmark", "--out", p(&first)]));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    let scenario = tmp.path().join("scenario.json");
    let program = tmp.path().join("program.json");
    fs::write(&scenario, manifest["scenario"].to_string()).unwrap();
    fs::write(&program, manifest["program"].to_string()).unwrap();

    let second = tmp.path().join("second");
    ok(&armsizer(&["simulate", "--scenario", p(&scenario), "--program", p(&program), "--out", p(&second)]));
    for f in ["trajectory.csv", "torque_pro.csv", "sizing.json", "manifest.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn errors_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let out = armsizer(&["simulate", "--robot", "cr6", "--out", p(&tmp.path().join("x"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--program"));

    let out = armsizer(&["simulate", "--scale", "0", "--out", p(&tmp.path().join("y"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scale"));

    let out = armsizer(&["size", "--run", p(&tmp.path().join("missing"))]);
    assert!(!out.status.success());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"motors": [], "gearboxes": []}"#).unwrap();
    let out = armsizer(&["simulate", "--catalog", p(&bad), "--out", p(&tmp.path().join("z"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("motors"));

    assert!(!armsizer(&["frobnicate"]).status.success());
}
