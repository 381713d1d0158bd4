use std::path::Path;
use std::process::{Command, Output};

fn gftree(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gftree"))
        .arg("--out")
        .arg(out)
        .arg("--no-timestamp")
        .args(args)
        .env_remove("GFTREE_SEED")
        .output()
        .unwrap()
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn help_lists_flags_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let expected: &[(&str, &[&str])] = &[
        (
            "simulate",
            &[
                "--scheme",
                "--generations",
                "--length",
                "--sampler",
                "--b",
                "--rho",
                "--bounds",
                "--seed",
                "--out",
                "--workers",
                "--no-timestamp",
                "--config",
            ],
        ),
        (
            "estimate",
            &[
                "--input",
                "--pooled-tau",
                "--kernel",
                "--bandwidth",
                "--threshold",
                "--dx",
                "--x-max",
            ],
        ),
        (
            "study",
            &[
                "--sizes",
                "--replicates",
                "--conditioning",
                "--band-n",
                "--ablation-n",
                "--pooled-tau",
            ],
        ),
        (
            "verify",
            &[
                "--many-to-one",
                "--drift",
                "--t",
                "--replicates",
                "--root-size",
                "--tolerance-se",
                "--lambda",
                "--big-l",
            ],
        ),
        (
            "pde-check",
            &[
                "--b",
                "--tau",
                "--pde-dx",
                "--fixed-dx",
                "--pde-scheme",
                "--lo",
                "--hi",
                "--tolerance",
            ],
        ),
        (
            "ingest",
            &[
                "--input",
                "--size-col",
                "--growth-col",
                "--lifetime-col",
                "--lineage-col",
                "--drop-first",
                "--drop-last",
            ],
        ),
    ];
    for (command, flags) in expected {
        let out = gftree(dir.path(), &[command, "--help"]);
        ok(&out);
        let text = String::from_utf8(out.stdout).unwrap();
        for flag in *flags {
            assert!(text.contains(flag), "{command} --help lacks {flag}");
        }
        assert!(text.contains("[default:"), "{command} --help shows no defaults");
    }
}

#[test]
fn simulate_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full");
    ok(&gftree(&full, &["simulate", "--scheme", "full", "--generations", "2"]));
    assert_eq!(data_rows(&full.join("genealogy.csv")), 7);
    let sparse = dir.path().join("sparse");
    ok(&gftree(&sparse, &["simulate", "--scheme", "sparse", "--length", "5"]));
    assert_eq!(data_rows(&sparse.join("genealogy.csv")), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sparse.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["records"], 5);
    assert!(manifest.get("created_unix").is_none());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&gftree(
            &out,
            &["--seed", "17", "--workers", workers, "simulate", "--generations", "9"],
        ));
        (
            std::fs::read(out.join("genealogy.csv")).unwrap(),
            std::fs::read(out.join("manifest.json")).unwrap(),
        )
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "8"));
    let other = dir.path().join("d");
    ok(&gftree(&other, &["--seed", "18", "simulate", "--generations", "9"]));
    assert_ne!(a.0, std::fs::read(other.join("genealogy.csv")).unwrap());
}

#[test]
fn seed_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_gftree"));
        cmd.args(["--no-timestamp", "--seed", seed, "--out"])
            .arg(&out)
            .args(["simulate", "--generations", "4"]);
        match env {
            Some(v) => cmd.env("GFTREE_SEED", v),
            None => cmd.env_remove("GFTREE_SEED"),
        };
        ok(&cmd.output().unwrap());
        std::fs::read(out.join("genealogy.csv")).unwrap()
    };
    assert_eq!(run("a", "1", Some("5")), run("b", "5", None));
    assert_ne!(run("c", "1", None), run("d", "5", None));
}

#[test]
fn estimate_grid_step_and_pooled_dirac() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&gftree(&sim, &["simulate", "--scheme", "sparse", "--length", "1024"]));
    let est = dir.path().join("est");
    ok(&gftree(
        &est,
        &["estimate", "--input", sim.join("genealogy.csv").to_str().unwrap()],
    ));
    let tsv = std::fs::read_to_string(est.join("estimate.tsv")).unwrap();
    let ys: Vec<f64> = tsv
        .lines()
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ys.len(), 160);
    assert!((ys[0] - 0.03125).abs() < 1e-15);
    assert!((ys[1] - ys[0] - 0.03125).abs() < 1e-12);

    let dirac = dir.path().join("dirac");
    ok(&gftree(
        &dirac,
        &[
            "simulate",
            "--scheme",
            "sparse",
            "--length",
            "500",
            "--rho",
            "dirac:1.3",
        ],
    ));
    let input = dirac.join("genealogy.csv");
    let (a, b) = (dir.path().join("aware"), dir.path().join("pooled"));
    ok(&gftree(&a, &["estimate", "--input", input.to_str().unwrap()]));
    ok(&gftree(
        &b,
        &["estimate", "--input", input.to_str().unwrap(), "--pooled-tau"],
    ));
    assert_eq!(
        std::fs::read(a.join("estimate.tsv")).unwrap(),
        std::fs::read(b.join("estimate.tsv")).unwrap()
    );
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere").join("cells.csv");
    let out = gftree(dir.path(), &["estimate", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate", "--b", "y^2"][..],
        &["simulate", "--rho", "dirac:-1"],
        &["simulate", "--scheme", "bushy"],
        &["study", "--sizes", "9..3"],
    ] {
        let out = gftree(dir.path(), args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn study_writes_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&gftree(
        dir.path(),
        &["study", "--sizes", "5..10", "--replicates", "100", "--band-n", "256"],
    ));
    assert_eq!(data_rows(&dir.path().join("table1.tsv")), 6);
    assert_eq!(data_rows(&dir.path().join("errors_full.tsv")), 6);
    assert!(data_rows(&dir.path().join("band.tsv")) > 0);
}

#[test]
fn verification_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let m2o = dir.path().join("m2o");
    ok(&gftree(
        &m2o,
        &["verify", "--many-to-one", "--t", "1.0", "--replicates", "20000"],
    ));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(m2o.join("verify.json")).unwrap()).unwrap();
    assert_eq!(verdict["pass"], true);

    let pde = dir.path().join("pde");
    ok(&gftree(&pde, &["pde-check", "--b", "x^2", "--tau", "1"]));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(pde.join("pde_check.json")).unwrap()).unwrap();
    assert!(verdict["relation"]["relative_l2"].as_f64().unwrap() < 0.02);

    // V is not integrable for growth rates above 2^λ e_min.
    let drift = dir.path().join("drift");
    assert_eq!(gftree(&drift, &["verify", "--drift"]).status.code(), Some(4));
    ok(&gftree(&drift, &["verify", "--drift", "--rho", "dirac:1"]));
}

#[test]
fn ingest_reports_rejected_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cells.csv");
    let mut text = String::from("lineage,xb,v,age\n");
    for i in 0..300 {
        let x = 0.8 + 0.4 * ((i * 37) % 100) as f64 / 100.0;
        text += &format!("{},{x},{},{}\n", i % 3, 1.0 + 0.001 * i as f64, 0.6 + 0.001 * i as f64);
    }
    text += "1,1.0,NaN,0.5\n";
    std::fs::write(&input, text).unwrap();
    let out = gftree(
        &dir.path().join("res"),
        &[
            "ingest",
            "--input",
            input.to_str().unwrap(),
            "--size-col",
            "xb",
            "--growth-col",
            "v",
            "--lifetime-col",
            "age",
            "--lineage-col",
            "lineage",
            "--drop-first",
            "1",
        ],
    );
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":302: rejected"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["n"], 297);
    assert_eq!(report["lineages"], 3);
    assert!(dir.path().join("res/nu.tsv").exists());
}
