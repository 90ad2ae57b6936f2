//! Drives the command-line interface in-process: ingest, fit, bootstrap and
//! χ(q) curve on the bundled rainfall file.

use sbgp::cli::run;

fn main() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let dir = std::env::temp_dir().join("sbgp_cli_workflow");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let out = |name: &str| dir.join(name).display().to_string();
    let csv = format!("{data}/rainfall.csv");
    let weights = format!("{data}/sbgp_weights.json");

    let steps: Vec<Vec<String>> = vec![
        vec!["ingest", "--csv", &csv, "--cols", "site_a,site_b", "--weekly", "--season", "09-21:12-21", "--level", "0.7", "--out", &out("exceed.csv")]
            .into_iter().map(String::from).collect(),
        vec!["fit", "--weights", &weights, "--data", &out("exceed.csv"), "--out", &out("fit.json")]
            .into_iter().map(String::from).collect(),
        vec!["bootstrap", "--data", &out("exceed.csv"), "--weights", &weights, "-B", "50", "--seed", "1", "--out", &out("boot.csv"), "--summary", &out("boot.json")]
            .into_iter().map(String::from).collect(),
        vec!["chi-curve", "--data", &out("exceed.csv"), "--levels", "0.5:0.95:10", "--eta", "--out", &out("curve.csv")]
            .into_iter().map(String::from).collect(),
        vec!["qq", "--data", &out("exceed.csv"), "--fit", &out("fit.json"), "--out", &out("qq.csv")]
            .into_iter().map(String::from).collect(),
    ];
    for args in steps {
        let code = run(std::iter::once("sbgp".to_string()).chain(args.iter().cloned()));
        println!("sbgp {} -> exit {code}", args[0]);
        if code != 0 {
            std::process::exit(code);
        }
    }
    println!("{}", std::fs::read_to_string(dir.join("fit.json")).expect("fit.json"));
    println!("outputs in {}", dir.display());
}
