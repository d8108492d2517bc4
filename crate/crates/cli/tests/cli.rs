use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hybridgen::emitter::EncodedRingAudit;
use hybridgen::table::Table;
use hybridgen::GenerationPlan;

fn hybridgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridgen"))
        .args(args)
        .current_dir(dir)
        .env_remove("HYBRIDGEN_SEED")
        .env_remove("HYBRIDGEN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hybridgen(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_table(p: &Path) -> Table {
    let text = fs::read_to_string(p).unwrap();
    let t = Table::from_csv(&text).unwrap();
    assert_eq!(t.to_csv(), text, "{} does not round-trip", p.display());
    t
}

#[test]
fn allocation_staircase() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "rates",
            "--figure",
            "5",
            "--eta-min",
            "0.8",
            "--eta-max",
            "1.0",
            "--steps",
            "200",
        ],
    );
    let t = read_table(&dir.path().join("allocation.csv"));
    assert_eq!(t.rows.len(), 200);
    let m = t.column_f64("m_opt").unwrap();
    assert!(m.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(m[0], 1.0);
    assert_eq!(*m.last().unwrap(), 30.0);
    let b = read_table(&dir.path().join("allocation_boundaries.csv"));
    assert!((b.column_f64("eta_boundary").unwrap()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-11);
}

#[test]
fn cluster_matrices() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "rates", "--figure", "cluster", "--sizes", "3..8", "--etas", "0.9,0.95",
        ],
    );
    let long = read_table(&dir.path().join("cluster.csv"));
    assert_eq!(long.rows.len(), 2 * 36);
    let ratio = read_table(&dir.path().join("cluster_rate_ratio_eta0.95.csv"));
    assert_eq!(ratio.columns.len(), 7);
    let row5 = ratio.rows.iter().find(|r| r[0].to_string() == "5").unwrap();
    let r = row5[ratio.column_index("n2=5").unwrap()].as_f64().unwrap();
    assert!((r - 514.0).abs() <= 1.0, "{r}");
    read_table(&dir.path().join("cluster_p_boosted_eta0.9.csv"));
}

#[test]
fn scheme_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["rates", "--figure", "9"]);
    ok(
        dir.path(),
        &["rates", "--figure", "schemes", "--format", "json"],
    );
    let t = read_table(&dir.path().join("schemes.csv"));
    assert_eq!(t.rows.len(), 100);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("schemes.json")).unwrap())
            .unwrap();
    assert_eq!(json, t.to_json_value());
}

#[test]
fn encoded_ring_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "plan",
            "encoded-ring",
            "--k",
            "6",
            "--n1",
            "4",
            "--n2",
            "2",
            "--m",
            "3",
            "-o",
            "plan.jsonl",
        ],
    );
    let plan =
        GenerationPlan::from_jsonl(&fs::read_to_string(dir.path().join("plan.jsonl")).unwrap())
            .unwrap();
    assert_eq!(plan.family, "encoded_ring");
    assert_eq!(
        plan.photon_count(),
        EncodedRingAudit::new(6, 4, 2, 3).total()
    );
    assert_eq!(plan.boosted_fusion_count(), 6 * 3 + 1);

    let text = ok(
        dir.path(),
        &["plan", "clusterNd", "--dims", "2,2,2", "--m", "1"],
    );
    let plan = GenerationPlan::from_jsonl(&text).unwrap();
    assert_eq!(plan.boosted_fusion_count(), 8);
    for args in [
        &["plan", "linear", "--sizes", "2,1,3"][..],
        &["plan", "ghz", "--n", "4"],
        &["plan", "ring", "--k", "5", "--m", "2"],
    ] {
        GenerationPlan::from_jsonl(&ok(dir.path(), args)).unwrap();
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["plan", "boosted-pair", "--m", "3", "-o", "pair.jsonl"],
    );
    let args = [
        "simulate",
        "pair.jsonl",
        "--eta",
        "0.95",
        "--trials",
        "2e4",
        "--seed",
        "7",
    ];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hybridgen"))
            .args(args)
            .current_dir(dir.path())
            .env("RAYON_NUM_THREADS", threads)
            .env_remove("HYBRIDGEN_SEED")
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let a = run("1");
    assert_eq!(a, run("4"));
    assert_eq!(a, run("1"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["trials"], 20000);
    assert_eq!(v["seed"], 7);
    let (lo, hi) = (
        v["ci_low"].as_f64().unwrap(),
        v["ci_high"].as_f64().unwrap(),
    );
    assert!(lo < 0.6432 && 0.6432 < hi, "{v}");
}

#[test]
fn environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["plan", "boosted-pair", "--m", "2", "-o", "pair.jsonl"],
    );
    let plan = dir.path().join("pair.jsonl");
    let plan = plan.to_str().unwrap();
    let sim = |seed_env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_hybridgen"));
        c.args(["simulate", plan, "--eta", "0.9", "--trials", "500"])
            .args(extra)
            .current_dir(dir.path());
        c.env_remove("HYBRIDGEN_OUT_DIR");
        match seed_env {
            Some(s) => c.env("HYBRIDGEN_SEED", s),
            None => c.env_remove("HYBRIDGEN_SEED"),
        };
        let v: serde_json::Value = serde_json::from_slice(&c.output().unwrap().stdout).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(sim(None, &[]), 0);
    assert_eq!(sim(Some("11"), &[]), 11);
    assert_eq!(sim(Some("11"), &["--seed", "3"]), 3);

    let out_dir = dir.path().join("results");
    let out = Command::new(env!("CARGO_BIN_EXE_hybridgen"))
        .args(["rates", "--figure", "9", "--steps", "5"])
        .current_dir(dir.path())
        .env("HYBRIDGEN_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("schemes.csv").exists());
    let other = dir.path().join("flag");
    let out = Command::new(env!("CARGO_BIN_EXE_hybridgen"))
        .args([
            "rates",
            "--figure",
            "9",
            "--steps",
            "5",
            "--out-dir",
            other.to_str().unwrap(),
        ])
        .current_dir(dir.path())
        .env("HYBRIDGEN_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(other.join("schemes.csv").exists());
}

#[test]
fn factory_report_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(
        dir.path(),
        &[
            "factory",
            "--k",
            "6",
            "--n1",
            "4",
            "--eta",
            "0.95",
            "--epsilon",
            "0.01",
        ],
    );
    let t = Table::from_csv(&text).unwrap();
    let get = |c: &str| t.rows[0][t.column_index(c).unwrap()].as_f64().unwrap();
    assert_eq!(get("m"), 3.0);
    assert_eq!(get("c_hat"), 119.0);
    assert_eq!(get("n_a_hat"), 186.0);
    assert_eq!(get("n_b_hat"), 1726.0);
    assert!(get("p_success") >= 0.94);
    // halving epsilon adds ln 2 / |ln(1 - p_c)| attempts
    let halved = Table::from_csv(&ok(dir.path(), &["factory", "--epsilon", "0.005"])).unwrap();
    let c2 = halved.rows[0][halved.column_index("c_hat").unwrap()]
        .as_f64()
        .unwrap();
    assert!((c2 - 119.0 - get("c_hat_per_halving")).abs() <= 1.0);

    let sweep = Table::from_csv(&ok(dir.path(), &["factory", "--sweep", "NA=1..200"])).unwrap();
    let p = sweep.column_f64("p_success").unwrap();
    assert_eq!(p.len(), 200);
    assert!(p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn verify_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(
        dir.path(),
        &[
            "verify",
            "--max-qubits",
            "6",
            "--cases",
            "40",
            "--report",
            "report.json",
        ],
    );
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 14);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 14);

    ok(
        dir.path(),
        &[
            "plan",
            "cluster2d",
            "--n1",
            "2",
            "--n2",
            "2",
            "--m",
            "1",
            "-o",
            "c.jsonl",
        ],
    );
    let t = Table::from_csv(&ok(
        dir.path(),
        &[
            "compare",
            "c.jsonl",
            "--eta",
            "1",
            "--more-etas",
            "0.9",
            "--trials",
            "2e4",
        ],
    ))
    .unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r[7].to_string() == "true"));
    // an absurdly narrow interval must fail the comparison
    let out = hybridgen(
        dir.path(),
        &[
            "compare", "c.jsonl", "--eta", "0.9", "--trials", "2e4", "--sigmas", "0",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["rates", "--figure", "7"][..],
        &["rates", "--figure", "5", "--bogus"],
        &["plan", "ghz"],
        &["plan", "ring", "--k", "2", "--m", "1"],
        &["simulate", "missing.jsonl", "--eta", "0.9"],
        &["factory", "--epsilon", "2"],
        &["factory", "--sweep", "NC=1..3"],
        &["verify", "--max-qubits", "2"],
    ] {
        assert_eq!(
            hybridgen(dir.path(), args).status.code(),
            Some(2),
            "{args:?}"
        );
    }
    fs::write(dir.path().join("bad.jsonl"), "{\"family\":\"x\"}\n").unwrap();
    assert_eq!(
        hybridgen(dir.path(), &["simulate", "bad.jsonl", "--eta", "0.9"])
            .status
            .code(),
        Some(2)
    );
}
