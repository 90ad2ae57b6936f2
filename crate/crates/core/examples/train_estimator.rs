//! Trains a small estimator on simulated data, saves it and applies it to
//! fresh datasets. Pass the number of steps as the first argument.

use sbgp::model::reference_config;
use sbgp::nbe::{estimate, load_weights, save_weights, train, PriorConfig, TrainConfig};
use sbgp::RngState;

fn main() -> sbgp::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let steps = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("steps must be an integer"))
        .unwrap_or(400);

    let prior = PriorConfig::default();
    let cfg = TrainConfig {
        num_steps: steps,
        validation_size: 64,
        ..TrainConfig::default()
    };
    let mut rng = RngState::seed_from_u64(5);
    let report = train(&prior, &cfg, &mut rng)?;
    for v in &report.validation {
        println!("step {:>6}  validation risk {:.3}", v.step, v.risk);
    }

    let path = std::env::temp_dir().join("sbgp_weights.json");
    save_weights(&report.weights, &path)?;
    let w = load_weights(&path)?;
    println!("saved {}", path.display());

    for i in 1..=3 {
        let p = reference_config(i);
        let s = p.sample(1000, &mut rng)?;
        let e = estimate(&w, &s)?;
        println!(
            "config {i}: true eta {:.3}, estimate {:.3}; true w {:.2}, estimate {:.2}",
            p.derived().eta,
            e.eta(),
            p.w,
            e.get("w").unwrap()
        );
    }
    Ok(())
}
