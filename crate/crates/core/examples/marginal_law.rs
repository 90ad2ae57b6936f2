//! Density, distribution function, quantiles, moments and the generalized
//! Pareto tail approximation of one margin.

use sbgp::model::marginal_moments;
use sbgp::quadrature::{integrate, Tolerance};
use sbgp::{RngState, SbgpParams};

fn main() -> sbgp::Result<()> {
    // xi_1 = 0.2 with beta_1 = 1, sigma_T = 0.25, w = 0.8.
    let p = SbgpParams::new(5.0, 0.0, 0.0, 1.0, 1.0, 0.25, 0.8)?;
    let m = p.marginal(1)?;

    for y in [-0.5, 0.0, 0.5, 2.0, 10.0] {
        println!("y={y:>5}: f={:.5}  F={:.5}", m.density(y), m.cdf(y));
    }
    for q in [0.5, 0.9, 0.99, 0.999] {
        println!("q={q}: quantile={:.4}", m.quantile(q)?);
    }

    let (mean, var) = marginal_moments(&p, 1)?;
    let mut rng = RngState::seed_from_u64(3);
    let s = p.sample(200_000, &mut rng)?;
    let col = s.column(0);
    println!(
        "mean {mean:.4} (mc {:.4}), variance {var:.4} (mc {:.4})",
        sbgp::stats::mean(&col),
        sbgp::stats::variance(&col)
    );

    let tail = m.gp_tail_approx();
    println!(
        "tail: xi={:.3} sigma={:.4} delta={:.4}",
        tail.xi, tail.sigma, tail.delta
    );
    for x in [10.0, 100.0, 1000.0] {
        let gp = tail.gp().survival(x)?;
        println!("x={x}: P(Y>x)={:.4e}  gp={:.4e}  ratio={:.5}", m.survival(x), gp, m.survival(x) / gp);
    }

    let lo = m.quantile(1e-9)?;
    let hi = m.quantile(1.0 - 1e-9)?;
    println!("mass on [{lo:.2}, {hi:.2}] = {:.6}", integrate(|y| m.density(y), lo, hi, Tolerance::default()));
    Ok(())
}
