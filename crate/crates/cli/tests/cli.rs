use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clangevin"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Header and numeric rows of a sample CSV.
fn table(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn dataset(dir: &Path) -> PathBuf {
    let p = dir.join("data.csv");
    ok(&["generate-data", "--out", s(&p)]);
    p
}

#[test]
fn generate_data_defaults_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let a = dataset(dir.path());
    let b = dir.path().join("b.csv");
    ok(&["generate-data", "--out", s(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (header, rows) = table(&a);
    assert_eq!(header, ["time", "observation"]);
    assert_eq!(rows.len(), 100);

    let c = dir.path().join("c.csv");
    ok(&["generate-data", "--noise-var", "0", "--seed", "7", "--points", "10", "--out", s(&c)]);
    let (_, noiseless) = table(&c);
    assert_eq!(noiseless.len(), 10);
    assert!((noiseless[0][1] - 1.7255692602763588f64.exp()).abs() < 1e-12);
}

#[test]
fn fixed_point_then_hopf_runs_stay_on_their_manifolds() {
    let dir = tempfile::tempdir().unwrap();
    let fp = dir.path().join("fp");
    ok(&["sample", "--mode", "fixed-point", "--steps", "3000", "--chains", "2", "--out-dir", s(&fp)]);
    let m = manifest(&fp);
    assert_eq!(m["mode"], "fixed-point");
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
    assert!(m["totals"]["acceptance_rate"].as_f64().unwrap() > 0.5);
    for c in m["chains"].as_array().unwrap() {
        assert!(c["max_residual"].as_f64().unwrap() <= 1e-8);
    }
    let (header, rows) = table(&fp.join("chain_000.csv"));
    assert_eq!(header[0], "y_0");
    assert_eq!(rows.len(), 300);

    let hopf = dir.path().join("hopf");
    ok(&[
        "sample",
        "--mode",
        "hopf",
        "--steps",
        "1000",
        "--input",
        s(&fp.join("chain_000.csv")),
        s(&fp.join("chain_001.csv")),
        "--out-dir",
        s(&hopf),
    ]);
    let m = manifest(&hopf);
    assert!(m["start"]["omega"].as_f64().unwrap() > 0.0);
    assert!(m["chains"][0]["max_residual"].as_f64().unwrap() <= 1e-8);
    let (header, _) = table(&hopf.join("chain_000.csv"));
    assert!(header.iter().any(|h| h == "omega"));
}

#[test]
fn same_seed_gives_identical_chains() {
    let dir = tempfile::tempdir().unwrap();
    let run_to = |name: &str| {
        let d = dir.path().join(name);
        ok(&["sample", "--mode", "fixed-point", "--steps", "500", "--seed", "11", "--chains", "3", "--out-dir", s(&d)]);
        d
    };
    let (a, b) = (run_to("a"), run_to("b"));
    for i in 0..3 {
        let f = format!("chain_{i:03}.csv");
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap());
    }
    assert_ne!(std::fs::read(a.join("chain_000.csv")).unwrap(), std::fs::read(a.join("chain_001.csv")).unwrap());
    assert_eq!(manifest(&a)["config_checksum"], manifest(&b)["config_checksum"]);
}

#[test]
fn limit_cycle_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let cfg = dir.path().join("lc.toml");
    std::fs::write(&cfg, "[sampler]\ndt = 0.01\n[limit_cycle]\nn_mesh = 20\n").unwrap();
    let lc = dir.path().join("lc");
    ok(&[
        "sample",
        "--mode",
        "limit-cycle",
        "--config",
        s(&cfg),
        "--dataset",
        s(&data),
        "--steps",
        "1000",
        "--out-dir",
        s(&lc),
    ]);
    let m = manifest(&lc);
    assert_eq!(m["n_mesh"], 20);
    let rate = m["totals"]["acceptance_rate"].as_f64().unwrap();
    assert!(rate > 0.5, "acceptance {rate}");
    assert!(m["chains"][0]["max_residual"].as_f64().unwrap() <= 1e-8);
    let (header, rows) = table(&lc.join("chain_000.csv"));
    assert!(header.iter().any(|h| h == "tau"));
    assert_eq!(rows.len(), 100);
}

#[test]
fn baseline_smoke_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path());
    let go = |name: &str| {
        let d = dir.path().join(name);
        ok(&["baseline", "--dataset", s(&data), "--sweeps", "30", "--seed", "5", "--out-dir", s(&d)]);
        d
    };
    let (a, b) = (go("a"), go("b"));
    let m = manifest(&a);
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 22);
    assert_eq!(m["totals"]["steps"], 22 * 30);
    let rate = m["totals"]["acceptance_rate"].as_f64().unwrap();
    assert!(rate > 0.0 && rate <= 1.0);
    for f in files {
        let f = f.as_str().unwrap();
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let (header, rows) = table(&a.join("walker_000.csv"));
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 30);
}

fn write_csv(p: &Path, header: &str, rows: &[Vec<f64>]) {
    let mut t = format!("{header}\n");
    for r in rows {
        t += &r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
        t.push('\n');
    }
    std::fs::write(p, t).unwrap();
}

fn report(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn diagnose_oracles() {
    use rand::{Rng, SeedableRng};
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let n = 4000;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let a = dir.path().join("a.csv");
    write_csv(&a, "x,y", &rows);

    let same = dir.path().join("same.json");
    ok(&["diagnose", "--samples", s(&a), s(&a), "--report", s(&same)]);
    let r = report(&same);
    let rhat = r["rhat"].as_f64().unwrap();
    assert!((rhat - (n as f64 - 1.0) / n as f64).abs() < 1e-9, "{rhat}");
    let ess = r["parameters"][0]["ess_per_step"].as_f64().unwrap();
    assert!((ess - 1.0).abs() < 0.15, "{ess}");

    let shifted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + 0.5, r[1]]).collect();
    let b = dir.path().join("b.csv");
    write_csv(&b, "x,y", &shifted);
    let kl = dir.path().join("kl.json");
    ok(&["diagnose", "--samples", s(&a), "--reference", s(&b), "--columns", "x", "--report", s(&kl)]);
    let r = report(&kl);
    assert!(r["kl"]["value"].as_f64().unwrap().is_finite());
    assert!(r["kl"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(r["parameters"].as_array().unwrap().len(), 1);
}

#[test]
fn reweight_appends_weights() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|i| {
            let t = i as f64 * 0.1;
            vec![t.cos(), t.sin()]
        })
        .collect();
    let p = dir.path().join("circle.csv");
    write_csv(&p, "x,y", &rows);
    let out = dir.path().join("w.csv");
    ok(&["reweight", "--samples", s(&p), "--coords", "x", "--manifold", "sphere", "--out", s(&out)]);
    let (header, w) = table(&out);
    assert_eq!(header, ["x", "y", "weight"]);
    assert_eq!(w.len(), 50);
    for (i, r) in w.iter().enumerate() {
        let t = i as f64 * 0.1;
        assert!((r[2] - t.sin().abs()).abs() < 1e-10, "row {i}: {}", r[2]);
    }

    let fp = dir.path().join("fp");
    ok(&["sample", "--mode", "fixed-point", "--steps", "500", "--out-dir", s(&fp)]);
    let out = dir.path().join("fpw.csv");
    ok(&["reweight", "--samples", s(&fp.join("chain_000.csv")), "--coords", "k0_0,n_0", "--out", s(&out)]);
    let (_, w) = table(&out);
    assert!(w.iter().all(|r| r.last().unwrap().is_finite() && *r.last().unwrap() > 0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["sample", "--mode", "bogus"]), 2);
    assert_eq!(code(&["sample", "--mode", "fixed-point"]), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[sampler]\nstep_size = 1\n").unwrap();
    assert_eq!(code(&["sample", "--mode", "fixed-point", "--config", s(&bad), "--out-dir", s(dir.path())]), 2);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&["diagnose", "--samples", s(&missing), "--report", s(&dir.path().join("r.json"))]), 2);

    let flat = dir.path().join("flat.csv");
    write_csv(&flat, "x", &vec![vec![1.0]; 50]);
    assert_eq!(code(&["diagnose", "--samples", s(&flat), "--reference", s(&flat), "--report", s(&dir.path().join("r.json"))]), 3);
}
