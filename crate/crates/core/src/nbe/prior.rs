//! Prior over sBGP parameters and sample sizes used to simulate training data.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::SbgpParams;
use crate::rng::RngState;
use crate::sample::Sample;

use super::network::OutputHead;

/// Mixture prior: asymptotic independence with `η ~ U(½, 1)`, or an atom at
/// `η = 1` with probability `ad_atom_prob`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub ad_atom_prob: f64,
    pub xi1_range: (f64, f64),
    /// Cap on the conditional upper limit of `ξ2`.
    pub xi_max: f64,
    #[serde(rename = "sigma_T_range")]
    pub sigma_t_range: (f64, f64),
    pub w_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub n_range: (usize, usize),
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            ad_atom_prob: 0.1,
            xi1_range: (0.0, 0.5),
            xi_max: 0.5,
            sigma_t_range: (0.0, 1.0),
            w_range: (0.0, 1.0),
            beta_range: (0.0, 1000.0),
            n_range: (100, 1000),
        }
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if !(r.0 < r.1) || !r.0.is_finite() || !r.1.is_finite() {
        return domain(format!("{name} must be a nonempty finite interval, got {r:?}"));
    }
    Ok(())
}

/// Draws from `(lo, hi)` avoiding the endpoints.
fn open_uniform(rng: &mut RngState, r: (f64, f64)) -> f64 {
    r.0 + (r.1 - r.0) * rng.open01()
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ad_atom_prob) {
            return domain("ad_atom_prob must lie in [0, 1]");
        }
        check_range("xi1_range", self.xi1_range)?;
        check_range("sigma_T_range", self.sigma_t_range)?;
        check_range("w_range", self.w_range)?;
        check_range("beta_range", self.beta_range)?;
        if self.xi1_range.0 < 0.0 || self.xi1_range.1 > self.xi_max {
            return domain("xi1_range must lie within [0, xi_max]");
        }
        if self.beta_range.0 < 0.0 || self.sigma_t_range.0 < 0.0 {
            return domain("beta_range and sigma_T_range must be non-negative");
        }
        if self.w_range.0 < 0.0 || self.w_range.1 > 1.0 {
            return domain("w_range must lie within [0, 1]");
        }
        if self.n_range.0 < 20 || self.n_range.0 > self.n_range.1 {
            return domain("n_range must satisfy 20 <= lo <= hi");
        }
        Ok(())
    }

    /// Canonical parameter vector and a sample size.
    pub fn sample_prior(&self, rng: &mut RngState) -> ([f64; 7], usize) {
        let eta = if rng.bernoulli(self.ad_atom_prob) {
            1.0
        } else {
            0.5 + 0.5 * rng.open01()
        };
        let xi1 = open_uniform(rng, self.xi1_range);
        let xi2 = if eta == 1.0 {
            xi1
        } else {
            let r = (2.0 * eta - 1.0) / eta;
            let lo = xi1 * r;
            let hi = (xi1 / r).min(self.xi_max);
            lo + (hi - lo) * rng.open01()
        };
        let beta1 = open_uniform(rng, self.beta_range);
        let beta2 = open_uniform(rng, self.beta_range);
        let sigma_t = open_uniform(rng, self.sigma_t_range);
        let w = open_uniform(rng, self.w_range);
        let n = rng.int_inclusive(self.n_range.0, self.n_range.1);
        ([eta, xi1, xi2, beta1, beta2, sigma_t, w], n)
    }

    /// Standard deviations of the uniform marginals, used as the loss scale.
    pub fn scale_diag(&self) -> Vec<f64> {
        let sd = |r: (f64, f64)| (r.1 - r.0) / 12f64.sqrt();
        let xi = sd(self.xi1_range);
        vec![
            sd((0.5, 1.0)),
            xi,
            xi,
            sd(self.beta_range),
            sd(self.beta_range),
            sd(self.sigma_t_range),
            sd(self.w_range),
        ]
    }
}

/// One simulated training pair.
#[derive(Debug, Clone)]
pub struct Draw {
    pub theta: Vec<f64>,
    pub sample: Sample,
    /// Datasets discarded for containing non-finite values.
    pub redraws: usize,
}

/// Anything that can simulate `(θ, dataset)` pairs for a given head.
pub trait SimulationPrior: Sync {
    fn head(&self) -> OutputHead;
    fn draw(&self, rng: &mut RngState) -> Result<Draw>;
    fn scale_diag(&self) -> Vec<f64>;
}

impl SimulationPrior for PriorConfig {
    fn head(&self) -> OutputHead {
        OutputHead::Sbgp
    }

    fn draw(&self, rng: &mut RngState) -> Result<Draw> {
        let (theta, n) = self.sample_prior(rng);
        let p = SbgpParams::from_canonical(&theta)?;
        let mut redraws = 0;
        loop {
            let s = p.sample(n, rng)?;
            if s.is_finite() {
                return Ok(Draw {
                    theta: theta.to_vec(),
                    sample: s,
                    redraws,
                });
            }
            redraws += 1;
        }
    }

    fn scale_diag(&self) -> Vec<f64> {
        PriorConfig::scale_diag(self)
    }
}
