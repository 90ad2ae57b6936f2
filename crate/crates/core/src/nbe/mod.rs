//! Neural Bayes estimator for the sBGP parameters.
//!
//! A DeepSets network maps a dataset to a point estimate: a shared feature
//! map `ψ` is applied to every observation, the features are averaged, the
//! `χ̂(q)` summaries at [`SUMMARY_LEVELS`] are appended and a second network
//! `φ` produces the parameters. The network is trained by minimising a
//! scaled squared loss over datasets simulated from a prior.

pub mod network;
pub mod prior;
pub mod train;
pub mod weights;

pub use network::{
    loss, loss_and_gradient, summary_stats, Dense, Gradient, InputTransform, LossSpec,
    NetworkWeights, OutputHead, PreparedInput, SUMMARY_LEVELS,
};
pub use prior::{Draw, PriorConfig, SimulationPrior};
pub use train::{train, train_from, Adam, TrainConfig, TrainReport, ValidationPoint};
pub use weights::{load_weights, save_weights};

use crate::error::{Error, Result};
use crate::model::{SbgpParams, CANONICAL_NAMES};
use crate::sample::Sample;

/// sBGP point estimate in canonical order `(η, ξ1, ξ2, β1, β2, σ_T, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub theta_hat: [f64; 7],
}

impl EstimatorOutput {
    pub fn eta(&self) -> f64 {
        self.theta_hat[0]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        CANONICAL_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.theta_hat[i])
    }

    /// Simulable parameters; `η` is moved into its feasible range first.
    pub fn to_params(&self) -> Result<SbgpParams> {
        SbgpParams::from_canonical_projected(&self.theta_hat)
    }
}

/// Applies the sBGP network to `sample`.
pub fn estimate(w: &NetworkWeights, sample: &Sample) -> Result<EstimatorOutput> {
    if w.head != OutputHead::Sbgp {
        return Err(Error::Structure(format!(
            "expected sbgp weights, got {}",
            w.head.name()
        )));
    }
    let v = w.forward(sample)?;
    let mut theta_hat = [0.0; 7];
    theta_hat.copy_from_slice(&v);
    Ok(EstimatorOutput { theta_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn estimate_stays_inside_open_ranges() {
        let mut rng = RngState::seed_from_u64(1);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::SignedLog1p, &mut rng);
        let p = crate::model::reference_config(1);
        for _ in 0..5 {
            let e = estimate(&w, &p.sample(200, &mut rng).unwrap()).unwrap();
            assert!(e.eta() > 0.5 && e.eta() < 1.0);
            let wv = e.get("w").unwrap();
            assert!(wv > 0.0 && wv < 1.0);
            let q = e.to_params().unwrap();
            assert!(q.derived().eta <= 1.0);
        }
        let bgp = NetworkWeights::zeros(OutputHead::Bgp, InputTransform::Identity);
        assert!(estimate(&bgp, &p.sample(50, &mut rng).unwrap()).is_err());
    }

    #[test]
    fn estimate_survives_save_and_load() {
        let mut rng = RngState::seed_from_u64(2);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::SignedLog1p, &mut rng);
        let s = crate::model::reference_config(2).sample(300, &mut rng).unwrap();
        let back = weights::from_json(&weights::to_json(&w).unwrap()).unwrap();
        assert_eq!(estimate(&w, &s).unwrap(), estimate(&back, &s).unwrap());
    }
}
