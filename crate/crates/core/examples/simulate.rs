//! Draws samples from the three reference configurations and writes the
//! first one to `sample.csv` in the system temp directory.

use sbgp::model::reference_config;
use sbgp::{RngState, SbgpParams};

fn main() -> sbgp::Result<()> {
    let mut rng = RngState::seed_from_u64(7);
    for i in 1..=3 {
        let p = reference_config(i);
        let d = p.derived();
        let s = p.sample(5000, &mut rng)?;
        let both = s.rows().iter().filter(|r| r[0] > 0.0 && r[1] > 0.0).count();
        println!(
            "config {i}: eta={:.3} xi=({:.3}, {:.3}) chi={:.3}  both positive in {} of {}",
            d.eta,
            d.xi1,
            d.xi2,
            d.chi,
            both,
            s.len()
        );
    }

    let p = SbgpParams::from_json(&reference_config(1).to_json()?)?;
    let path = std::env::temp_dir().join("sample.csv");
    p.sample(1000, &mut rng)?.save_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
