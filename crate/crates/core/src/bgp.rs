//! Standardised bivariate generalized Pareto baseline with a Gumbel
//! generator.
//!
//! `Z = E - S` with `E ~ Exp(1)` and `S_j = max(T_1, T_2) - T_j` for iid
//! Gumbel `T_j`, followed by the margin transform
//! `Z'_j = σ_j (exp(ξ_j Z_j) - 1) / ξ_j`.

use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use crate::distributions::sample_exp1;
use crate::error::{domain, Error, Result};
use crate::nbe::{Draw, NetworkWeights, OutputHead, SimulationPrior};
use crate::rng::RngState;
use crate::sample::Sample;

pub const BGP_NAMES: [&str; 6] = ["xi1", "xi2", "sigma1", "sigma2", "a_T", "b_T"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgpParams {
    pub xi1: f64,
    pub xi2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Gumbel scale.
    #[serde(rename = "a_T")]
    pub a_t: f64,
    /// Gumbel location.
    #[serde(rename = "b_T")]
    pub b_t: f64,
}

impl BgpParams {
    pub fn new(xi1: f64, xi2: f64, sigma1: f64, sigma2: f64, a_t: f64, b_t: f64) -> Result<Self> {
        let p = Self {
            xi1,
            xi2,
            sigma1,
            sigma2,
            a_t,
            b_t,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 6 {
            return domain(format!("expected 6 BGP parameters, got {}", v.len()));
        }
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.xi1, self.xi2, self.sigma1, self.sigma2, self.a_t, self.b_t]
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return domain("BGP parameters must be finite");
        }
        if self.xi1 < 0.0 || self.xi2 < 0.0 {
            return domain("BGP tail indices must be >= 0");
        }
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return domain("BGP scales must be > 0");
        }
        if !(self.a_t > 0.0) {
            return domain("Gumbel scale a_T must be > 0");
        }
        Ok(())
    }

    /// `σ_j (exp(ξ_j z) - 1) / ξ_j`, or `σ_j z` when `ξ_j = 0`.
    pub fn margin_transform(&self, j: usize, z: f64) -> f64 {
        let (xi, sigma) = if j == 1 {
            (self.xi1, self.sigma1)
        } else {
            (self.xi2, self.sigma2)
        };
        if xi == 0.0 {
            sigma * z
        } else {
            sigma * (xi * z).exp_m1() / xi
        }
    }

    /// One standardised draw `(Z_1, Z_2)`.
    pub fn draw_standard(&self, rng: &mut RngState) -> [f64; 2] {
        let g = Gumbel::new(self.b_t, self.a_t).expect("validated scale");
        let e = sample_exp1(rng);
        let t1 = g.sample(rng);
        let t2 = g.sample(rng);
        let m = t1.max(t2);
        [e - (m - t1), e - (m - t2)]
    }

    pub fn sample_standard(&self, n: usize, rng: &mut RngState) -> Result<Sample> {
        if n == 0 {
            return domain("sample size must be >= 1");
        }
        self.validate()?;
        Ok(Sample::new((0..n).map(|_| self.draw_standard(rng)).collect()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Sample on the original scale.
pub fn sample_bgp(p: &BgpParams, n: usize, rng: &mut RngState) -> Result<Sample> {
    let z = p.sample_standard(n, rng)?;
    Ok(Sample::new(
        z.rows()
            .iter()
            .map(|r| [p.margin_transform(1, r[0]), p.margin_transform(2, r[1])])
            .collect(),
    ))
}

/// Uniform prior over BGP parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BgpPrior {
    pub xi_range: (f64, f64),
    pub sigma_range: (f64, f64),
    #[serde(rename = "a_T_range")]
    pub a_t_range: (f64, f64),
    #[serde(rename = "b_T_range")]
    pub b_t_range: (f64, f64),
    pub n_range: (usize, usize),
}

impl Default for BgpPrior {
    fn default() -> Self {
        Self {
            xi_range: (0.0, 0.5),
            sigma_range: (0.0, 100.0),
            a_t_range: (0.1, 5.0),
            b_t_range: (-1.0, 1.0),
            n_range: (100, 1000),
        }
    }
}

fn sd(r: (f64, f64)) -> f64 {
    (r.1 - r.0) / 12f64.sqrt()
}

fn open_uniform(rng: &mut RngState, r: (f64, f64)) -> f64 {
    r.0 + (r.1 - r.0) * rng.open01()
}

impl BgpPrior {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("xi_range", self.xi_range),
            ("sigma_range", self.sigma_range),
            ("a_T_range", self.a_t_range),
            ("b_T_range", self.b_t_range),
        ] {
            if !(r.0 < r.1) {
                return domain(format!("{name} must be a nonempty interval"));
            }
        }
        if self.xi_range.0 < 0.0 || self.sigma_range.0 < 0.0 || self.a_t_range.0 < 0.0 {
            return domain("xi, sigma and a_T ranges must be non-negative");
        }
        if self.n_range.0 < 20 || self.n_range.0 > self.n_range.1 {
            return domain("n_range must satisfy 20 <= lo <= hi");
        }
        Ok(())
    }

    pub fn sample_prior(&self, rng: &mut RngState) -> (BgpParams, usize) {
        let p = BgpParams {
            xi1: open_uniform(rng, self.xi_range),
            xi2: open_uniform(rng, self.xi_range),
            sigma1: open_uniform(rng, self.sigma_range),
            sigma2: open_uniform(rng, self.sigma_range),
            a_t: open_uniform(rng, self.a_t_range),
            b_t: open_uniform(rng, self.b_t_range),
        };
        let n = rng.int_inclusive(self.n_range.0, self.n_range.1);
        (p, n)
    }
}

impl SimulationPrior for BgpPrior {
    fn head(&self) -> OutputHead {
        OutputHead::Bgp
    }

    fn draw(&self, rng: &mut RngState) -> Result<Draw> {
        let (p, n) = self.sample_prior(rng);
        let mut redraws = 0;
        loop {
            let s = sample_bgp(&p, n, rng)?;
            if s.is_finite() {
                return Ok(Draw {
                    theta: p.to_vec(),
                    sample: s,
                    redraws,
                });
            }
            redraws += 1;
        }
    }

    fn scale_diag(&self) -> Vec<f64> {
        vec![
            sd(self.xi_range),
            sd(self.xi_range),
            sd(self.sigma_range),
            sd(self.sigma_range),
            sd(self.a_t_range),
            sd(self.b_t_range),
        ]
    }
}

/// Point estimate from a trained six-output network.
pub fn fit_bgp(sample: &Sample, w: &NetworkWeights) -> Result<BgpParams> {
    if w.head != OutputHead::Bgp {
        return Err(Error::Structure(format!(
            "expected bgp weights, got {}",
            w.head.name()
        )));
    }
    if w.trained_steps == 0 {
        return Err(Error::Structure("bgp weights are untrained".into()));
    }
    let v = w.forward(sample)?;
    // Softplus outputs can underflow to exactly zero.
    let pos = |x: f64| x.max(f64::MIN_POSITIVE);
    BgpParams::from_slice(&[v[0], v[1], pos(v[2]), pos(v[3]), pos(v[4]), v[5]])
}
