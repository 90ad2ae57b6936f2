use std::path::{Path, PathBuf};

use sbgp::cli::run;
use sbgp::model::reference_config;
use sbgp::nbe::{estimate, load_weights, summary_stats};
use sbgp::{RngState, Sample};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("sbgp").chain(args.iter().copied()))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn p(&self, name: &str) -> String {
        self.0.path().join(name).display().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn lines(path: &str) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_params(dir: &Dir) -> String {
    let path = dir.p("p.json");
    std::fs::write(&path, reference_config(1).to_json().unwrap()).unwrap();
    path
}

fn ingest(dir: &Dir, cols: &str, out: &str) -> i32 {
    cli(&[
        "ingest", "--csv", &data("rainfall.csv"), "--cols", cols, "--weekly", "--season",
        "09-21:12-21", "--level", "0.7", "--out", &dir.p(out),
    ])
}

/// Tiny training run, enough to produce a loadable file.
fn quick_train(dir: &Dir, model: &str, out: &str) {
    let cfg = dir.p("train.json");
    std::fs::write(
        &cfg,
        r#"{"num_steps": 3, "batch_size": 2, "validation_size": 2, "validation_every": 1}"#,
    )
    .unwrap();
    assert_eq!(
        cli(&["train", "--config", &cfg, "--seed", "1", "--model", model, "--out", &dir.p(out), "--trace", &dir.p("trace.csv")]),
        0
    );
    assert_eq!(lines(&dir.p("trace.csv"))[0], "step,risk");
}

#[test]
fn simulate_then_fit_round_trip() {
    let d = Dir::new();
    let params = write_params(&d);
    assert_eq!(cli(&["simulate", "--params", &params, "--n", "1000", "--seed", "4", "--out", &d.p("s.csv")]), 0);
    let rows = lines(&d.p("s.csv"));
    assert_eq!(rows[0], "y1,y2");
    assert_eq!(rows.len(), 1001);
    assert_eq!(
        cli(&["fit", "--weights", &data("sbgp_weights.json"), "--data", &d.p("s.csv"), "--out", &d.p("fit.json")]),
        0
    );
    let eta = json(&d.p("fit.json"))["estimate"][0].as_f64().unwrap();
    assert!(eta > 0.8 && eta < 1.0, "eta = {eta}");
}

#[test]
fn simulate_is_seeded() {
    let d = Dir::new();
    let params = write_params(&d);
    for out in ["a.csv", "b.csv"] {
        assert_eq!(cli(&["simulate", "--params", &params, "--n", "50", "--seed", "9", "--out", &d.p(out)]), 0);
    }
    assert_eq!(lines(&d.p("a.csv")), lines(&d.p("b.csv")));
}

#[test]
fn chi_curve_rows_match_levels() {
    let d = Dir::new();
    let params = write_params(&d);
    cli(&["simulate", "--params", &params, "--n", "2000", "--out", &d.p("s.csv")]);
    assert_eq!(cli(&["chi-curve", "--data", &d.p("s.csv"), "--levels", "0.5:0.999:50", "--out", &d.p("c.csv")]), 0);
    let rows = lines(&d.p("c.csv"));
    assert_eq!(rows[0], "q,chi");
    assert_eq!(rows.len(), 51);
    assert_eq!(cli(&["chi-curve", "--data", &d.p("s.csv"), "--levels", "0.6,0.8", "--eta", "--out", &d.p("c2.csv")]), 0);
    assert_eq!(lines(&d.p("c2.csv"))[0], "q,chi,eta");
    assert_eq!(cli(&["chi-curve", "--data", &d.p("s.csv"), "--levels", "0.8:0.6:3", "--out", &d.p("c3.csv")]), 2);
}

#[test]
fn usage_errors() {
    let d = Dir::new();
    let params = write_params(&d);
    cli(&["simulate", "--params", &params, "--n", "100", "--out", &d.p("s.csv")]);
    assert_eq!(cli(&["fit", "--weights", &d.p("missing.json"), "--data", &d.p("s.csv"), "--out", &d.p("f.json")]), 2);
    assert_eq!(cli(&["fit", "--weights", &data("sbgp_weights.json"), "--data", &d.p("s.csv")]), 2);
    assert_eq!(cli(&["simulate", "--params", &params, "--n", "100", "--out", &d.p("t.csv"), "--frobnicate"]), 2);
    assert_eq!(cli(&["ingest", "--csv", &data("rainfall.csv"), "--cols", "site_a", "--out", &d.p("e.csv")]), 2);
    assert_eq!(cli(&["ingest", "--csv", &data("rainfall.csv"), "--cols", "site_a,nope", "--out", &d.p("e.csv")]), 2);
    assert!(!d.path("f.json").exists());
}

#[test]
fn computation_failures_exit_one() {
    let d = Dir::new();
    std::fs::write(d.p("bad.csv"), "y1,y2\n1,2\nx,3\n").unwrap();
    assert_eq!(cli(&["chi-curve", "--data", &d.p("bad.csv"), "--out", &d.p("c.csv")]), 1);
    std::fs::write(d.p("bad.json"), "{\"alpha\": -1}").unwrap();
    assert_eq!(cli(&["simulate", "--params", &d.p("bad.json"), "--n", "10", "--out", &d.p("s.csv")]), 1);
}

#[test]
fn penalized_flag_checks_weights() {
    let d = Dir::new();
    let params = write_params(&d);
    cli(&["simulate", "--params", &params, "--n", "200", "--out", &d.p("s.csv")]);
    let code = cli(&[
        "fit", "--weights", &data("sbgp_weights.json"), "--data", &d.p("s.csv"), "--out", &d.p("f.json"), "--penalized",
    ]);
    assert_eq!(code, 2);
    if Path::new(&data("sbgp_weights_penalized.json")).exists() {
        let code = cli(&[
            "fit", "--weights", &data("sbgp_weights_penalized.json"), "--data", &d.p("s.csv"), "--out", &d.p("f.json"),
            "--penalized",
        ]);
        assert_eq!(code, 0);
    }
}

#[test]
fn ingest_is_deterministic_with_sidecar() {
    let d = Dir::new();
    assert_eq!(ingest(&d, "site_a,site_b", "e1.csv"), 0);
    assert_eq!(ingest(&d, "site_a,site_b", "e2.csv"), 0);
    assert_eq!(std::fs::read(d.path("e1.csv")).unwrap(), std::fs::read(d.path("e2.csv")).unwrap());
    assert_eq!(
        std::fs::read(d.path("e1.thresholds.json")).unwrap(),
        std::fs::read(d.path("e2.thresholds.json")).unwrap()
    );
    let info = json(&d.p("e1.thresholds.json"));
    let total = info["total_n"].as_u64().unwrap() as f64;
    let retained = info["retained"].as_u64().unwrap() as f64;
    assert_eq!(lines(&d.p("e1.csv")).len() as f64 - 1.0, retained);
    assert!(retained <= total && retained >= (1.0 - 0.7) * total);
    // Every retained row exceeds at least one threshold.
    let s = Sample::load_csv(&d.path("e1.csv")).unwrap();
    assert!(s.rows().iter().all(|r| r[0] > 0.0 || r[1] > 0.0));
}

#[test]
fn qq_adds_thresholds_back() {
    let d = Dir::new();
    ingest(&d, "site_a,site_b", "e.csv");
    cli(&["fit", "--weights", &data("sbgp_weights.json"), "--data", &d.p("e.csv"), "--out", &d.p("fit.json")]);
    assert_eq!(cli(&["qq", "--data", &d.p("e.csv"), "--fit", &d.p("fit.json"), "--out", &d.p("qq.csv")]), 0);
    let rows = lines(&d.p("qq.csv"));
    assert_eq!(rows[0], "margin,p,empirical,model");
    let u1 = json(&d.p("e.thresholds.json"))["u1"].as_f64().unwrap();
    let s = Sample::load_csv(&d.path("e.csv")).unwrap();
    let min1 = s.column(0).into_iter().fold(f64::INFINITY, f64::min);
    let first: Vec<f64> = rows[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(first[0], 1.0);
    assert!((first[2] - (min1 + u1)).abs() < 1e-9);
    assert_eq!(rows.len(), 1 + 2 * s.len());
    assert!(rows[1..].iter().all(|r| r.split(',').all(|c| c.parse::<f64>().unwrap().is_finite())));
}

#[test]
fn bootstrap_outputs() {
    let d = Dir::new();
    ingest(&d, "site_a,site_b", "e.csv");
    let w = data("sbgp_weights.json");
    let code = cli(&[
        "bootstrap", "--data", &d.p("e.csv"), "--weights", &w, "-B", "10", "--seed", "2", "--out", &d.p("b.csv"),
        "--summary", &d.p("b.json"), "--bands", &d.p("bands.csv"), "--band-levels", "0.5:0.9:3",
    ]);
    assert_eq!(code, 0);
    let rows = lines(&d.p("b.csv"));
    assert_eq!(rows[0], "rep,eta,xi1,xi2,beta1,beta2,sigma_T,w");
    assert_eq!(rows.len(), 11);
    assert_eq!(json(&d.p("b.json"))["intervals"].as_array().unwrap().len(), 7);
    let bands = lines(&d.p("bands.csv"));
    assert_eq!(bands[0], "q,lower,median,upper");
    assert_eq!(bands.len(), 4);

    let code = cli(&[
        "bootstrap", "--data", &d.p("e.csv"), "--weights", &w, "-B", "5", "--seed", "2", "--out", &d.p("pb.csv"),
        "--parametric",
    ]);
    assert_eq!(code, 0);
    assert_eq!(lines(&d.p("pb.csv")).len(), 6);
    // Same seed, same replicates.
    cli(&["bootstrap", "--data", &d.p("e.csv"), "--weights", &w, "-B", "10", "--seed", "2", "--out", &d.p("b2.csv")]);
    assert_eq!(lines(&d.p("b.csv")), lines(&d.p("b2.csv")));
}

#[test]
fn batch_fit_pairs_with_reference() {
    let d = Dir::new();
    let sites = d.path("sites");
    std::fs::create_dir(&sites).unwrap();
    std::fs::copy(data("rainfall.csv"), sites.join("region.csv")).unwrap();
    let code = cli(&[
        "batch-fit", "--csv-dir", &sites.display().to_string(), "--ref-col", "site_a", "--weekly", "--season",
        "09-21:12-21", "--level", "0.7", "--weights", &data("sbgp_weights.json"), "--out", &d.p("pairs.csv"),
    ]);
    assert_eq!(code, 0);
    let rows = lines(&d.p("pairs.csv"));
    assert_eq!(rows[0], "site,eta,xi1,xi2,beta1,beta2,sigma_T,w");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("site_b,") && rows[2].starts_with("site_c,"));
    assert_eq!(
        cli(&["batch-fit", "--csv-dir", &d.p("nowhere"), "--ref-col", "a", "--weights", &data("sbgp_weights.json"), "--out", &d.p("x.csv")]),
        2
    );
}

#[test]
fn train_then_compare() {
    let d = Dir::new();
    quick_train(&d, "sbgp", "ws.json");
    quick_train(&d, "bgp", "wb.json");
    let wb = load_weights(&d.path("wb.json")).unwrap();
    assert_eq!(wb.trained_steps, 3);
    ingest(&d, "site_a,site_b", "e.csv");
    let code = cli(&[
        "compare", "--data", &d.p("e.csv"), "--sbgp-weights", &d.p("ws.json"), "--bgp-weights", &d.p("wb.json"),
        "--levels", "0.5:0.9:5", "--out", &d.p("cmp.json"),
    ]);
    assert_eq!(code, 0);
    let c = json(&d.p("cmp.json"));
    for key in ["xi1", "xi2", "sigma1", "sigma2", "a_T", "b_T"] {
        assert!(c["bgp"][key].is_number(), "{key}");
    }
    assert!(c["sbgp"]["eta"].is_number());
    let chi = lines(&d.p("cmp.chi.csv"));
    assert_eq!(chi[0], "q,empirical,sbgp,bgp");
    assert_eq!(chi.len(), 6);
    assert_eq!(lines(&d.p("cmp.qq.csv"))[0], "model,margin,p,empirical,fitted");

    assert_eq!(cli(&["fit", "--weights", &d.p("wb.json"), "--data", &d.p("e.csv"), "--out", &d.p("fb.json")]), 0);
    assert!(json(&d.p("fb.json"))["a_T"].is_number());
}

#[test]
fn scaling_data_rescales_beta() {
    let w = load_weights(Path::new(&data("sbgp_weights.json"))).unwrap();
    let p = reference_config(2);
    let mut rng = RngState::seed_from_u64(12);
    let c = 2.0;
    for _ in 0..50 {
        let s = p.sample(500, &mut rng).unwrap();
        let scaled = s.map_column(0, |v| c * v).map_column(1, |v| c * v);
        assert_eq!(summary_stats(&s).unwrap(), summary_stats(&scaled).unwrap());
        let a = estimate(&w, &s).unwrap();
        let b = estimate(&w, &scaled).unwrap();
        assert!(b.get("beta1").unwrap() > a.get("beta1").unwrap());
        assert!(b.get("beta2").unwrap() > a.get("beta2").unwrap());
    }
}
