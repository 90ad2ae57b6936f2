//! Nonparametric and parametric bootstrap intervals for a fitted dataset,
//! with pointwise χ(q) bands. Uses the bundled weights, or a weights file
//! given as the first argument.

use std::path::PathBuf;

use sbgp::bootstrap::{bootstrap_chi_bands, nonparam_bootstrap, param_bootstrap};
use sbgp::dependence::level_grid;
use sbgp::model::{reference_config, CANONICAL_NAMES};
use sbgp::nbe::{estimate, load_weights};
use sbgp::RngState;

fn main() -> sbgp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sbgp_weights.json"));
    let w = load_weights(&path)?;

    let truth = reference_config(2);
    let mut rng = RngState::seed_from_u64(21);
    let data = truth.sample(1000, &mut rng)?;
    let fit = estimate(&w, &data)?;

    let np = nonparam_bootstrap(&data, &w, 100, &RngState::seed_from_u64(1))?;
    let pb = param_bootstrap(&fit.to_params()?, data.len(), &w, 100, &RngState::seed_from_u64(2))?;
    let t = truth.to_canonical();
    println!("{:>8} {:>9} {:>9} {:>21} {:>21}", "param", "true", "estimate", "nonparametric", "parametric");
    for (k, name) in CANONICAL_NAMES.iter().enumerate() {
        let (a, b) = np.intervals[k];
        let (c, d) = pb.intervals[k];
        println!(
            "{name:>8} {:>9.3} {:>9.3} [{a:>8.3}, {b:>8.3}] [{c:>8.3}, {d:>8.3}]",
            t[k], fit.theta_hat[k]
        );
    }

    let levels = level_grid(0.5, 0.99, 5)?;
    let bands = bootstrap_chi_bands(&np, &levels, 10_000, &RngState::seed_from_u64(3))?;
    bands.write_csv(std::io::stdout())?;
    Ok(())
}
