//! The bivariate generalized Pareto baseline: simulation, its χ(q) curve
//! next to an sBGP configuration, and the sBGP limit that recovers it.

use sbgp::bgp::{sample_bgp, BgpParams};
use sbgp::dependence::{chi_curve, level_grid};
use sbgp::model::reference_config;
use sbgp::stats::ks_statistic;
use sbgp::{RngState, SbgpParams};

fn main() -> sbgp::Result<()> {
    let mut rng = RngState::seed_from_u64(9);
    let levels = level_grid(0.5, 0.99, 5)?;

    let bgp = BgpParams::new(0.26, 0.2, 4.37, 5.0, 2.41, -0.02)?;
    let yb = sample_bgp(&bgp, 100_000, &mut rng)?;
    let ys = reference_config(2).sample(100_000, &mut rng)?;
    let cb = chi_curve(&yb, &levels)?;
    let cs = chi_curve(&ys, &levels)?;
    println!("{:>6} {:>8} {:>8}", "q", "bgp", "sbgp");
    for k in 0..levels.len() {
        println!("{:>6.3} {:>8.3} {:>8.3}", levels[k], cb.values[k], cs.values[k]);
    }

    // w = 1 with a large common rate: positive parts are exponential.
    let sigma = 1.5;
    let lim = SbgpParams::new(200.0, 0.0, 0.0, 200.0 * sigma, 200.0 * sigma, 0.3, 1.0)?;
    let s = lim.sample(100_000, &mut rng)?;
    for j in 0..2 {
        let mut pos: Vec<f64> = s.column(j).into_iter().filter(|v| *v > 0.0).collect();
        let d = ks_statistic(&mut pos, |x| 1.0 - (-x / sigma).exp());
        println!("margin {}: KS distance to Exp({sigma}) = {d:.4}", j + 1);
    }
    Ok(())
}
