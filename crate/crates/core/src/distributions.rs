//! Scalar building blocks: the GP law, gamma draws, the hypoexponential
//! numerator `wE + (1-w)E'`, the Gaussian-generated shift and the latent
//! ratio `V = (wE + (1-w)E') / Γ(1/ξ, 1)`.

use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erf;

use crate::error::{domain, Result};
use crate::rng::RngState;

/// Half-width of the band around `w = 1/2` where the closed forms switch to
/// their continuous extension.
pub const HALF_BAND: f64 = 1e-6;
/// Below this distance to 0 or 1 the weight is treated as an endpoint.
pub const EDGE_BAND: f64 = 1e-12;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Generalized Pareto law with non-negative tail index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub xi: f64,
    pub sigma: f64,
}

impl GpParams {
    pub fn new(xi: f64, sigma: f64) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return domain(format!("GP tail index must be >= 0, got {xi}"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("GP scale must be > 0, got {sigma}"));
        }
        Ok(Self { xi, sigma })
    }

    pub fn survival(&self, z: f64) -> Result<f64> {
        gp_survival(self, z)
    }

    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 0.0;
        }
        if self.xi == 0.0 {
            (-z / self.sigma).exp() / self.sigma
        } else {
            let t = self.xi * z / self.sigma;
            (-(1.0 / self.xi + 1.0) * t.ln_1p()).exp() / self.sigma
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return domain(format!("GP quantile level must lie in [0, 1), got {p}"));
        }
        if self.xi == 0.0 {
            Ok(-self.sigma * (-p).ln_1p())
        } else {
            Ok(self.sigma * ((-self.xi * (-p).ln_1p()).exp_m1()) / self.xi)
        }
    }
}

/// `(1 + ξz/σ)^(-1/ξ)`, or `exp(-z/σ)` when `ξ = 0`.
pub fn gp_survival(p: &GpParams, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return domain(format!("GP survival needs z >= 0, got {z}"));
    }
    if p.xi == 0.0 {
        Ok((-z / p.sigma).exp())
    } else {
        Ok((-(p.xi * z / p.sigma).ln_1p() / p.xi).exp())
    }
}

/// Draw from Γ(shape, rate).
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngState) -> Result<f64> {
    if !(shape > 0.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return domain(format!(
            "gamma needs positive finite shape and rate, got ({shape}, {rate})"
        ));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Like [`sample_gamma`] with unit rate, except that shape 0 yields the
/// constant 0.
pub(crate) fn gamma_or_zero(shape: f64, rng: &mut RngState) -> f64 {
    if shape == 0.0 {
        0.0
    } else {
        // Callers validate the shape.
        Gamma::new(shape, 1.0).expect("valid gamma shape").sample(rng)
    }
}

pub fn sample_exp1(rng: &mut RngState) -> f64 {
    Exp1.sample(rng)
}

/// Survival function of the numerator `N = wE + (1-w)E'`.
pub fn hypoexp_survival(w: f64, u: f64) -> Result<f64> {
    check_weight(w)?;
    if !(u >= 0.0) {
        return domain(format!("hypoexponential survival needs u >= 0, got {u}"));
    }
    let v = if w.min(1.0 - w) < EDGE_BAND {
        (-u).exp()
    } else if (2.0 * w - 1.0).abs() < HALF_BAND {
        (1.0 + 2.0 * u) * (-2.0 * u).exp()
    } else {
        (w * (-u / w).exp() - (1.0 - w) * (-u / (1.0 - w)).exp()) / (2.0 * w - 1.0)
    };
    Ok(v.clamp(0.0, 1.0))
}

fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("weight must lie in [0, 1], got {w}"));
    }
    Ok(())
}

/// Law of the shift `S_j = max(T_1, T_2) - T_j`, `T_j ~ N(0, σ_T²)` iid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftLaw {
    pub sigma_t: f64,
}

impl ShiftLaw {
    pub fn new(sigma_t: f64) -> Result<Self> {
        if !(sigma_t >= 0.0) || !sigma_t.is_finite() {
            return domain(format!("sigma_T must be >= 0, got {sigma_t}"));
        }
        Ok(Self { sigma_t })
    }

    /// `E[S_j] = σ_T / √π`.
    pub fn mean(&self) -> f64 {
        self.sigma_t * FRAC_1_SQRT_PI
    }

    /// `Var[S_j] = (1 - 1/π) σ_T²`.
    pub fn variance(&self) -> f64 {
        (1.0 - std::f64::consts::FRAC_1_PI) * self.sigma_t * self.sigma_t
    }

    /// Upper integration limit for the conditional half-normal law: its mean
    /// plus eight of its scale units.
    pub(crate) fn conditional_upper(&self) -> f64 {
        let scale = std::f64::consts::SQRT_2 * self.sigma_t;
        2.0 * self.sigma_t * FRAC_1_SQRT_PI + 8.0 * scale
    }

    /// Density of `S_j | S_j > 0`, a half-normal with scale `√2 σ_T`.
    pub fn conditional_density(&self, s: f64) -> f64 {
        if s < 0.0 || self.sigma_t == 0.0 {
            return 0.0;
        }
        let z = s / (2.0 * self.sigma_t);
        FRAC_1_SQRT_PI / self.sigma_t * (-z * z).exp()
    }
}

pub fn sample_shift(law: &ShiftLaw, rng: &mut RngState) -> (f64, f64) {
    if law.sigma_t == 0.0 {
        return (0.0, 0.0);
    }
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let (t1, t2) = (law.sigma_t * z1, law.sigma_t * z2);
    let m = t1.max(t2);
    (m - t1, m - t2)
}

/// `P(S_j ≤ s | S_j > 0) = 2Φ(s / (√2 σ_T)) - 1`.
pub fn halfnormal_cond_cdf(law: &ShiftLaw, s: f64) -> Result<f64> {
    if law.sigma_t == 0.0 {
        return domain("conditional shift law is degenerate when sigma_T = 0");
    }
    if !(s >= 0.0) {
        return domain(format!("half-normal cdf needs s >= 0, got {s}"));
    }
    // 2Φ(z) - 1 = erf(z / √2) with z = s / (√2 σ_T).
    Ok(erf(s / (2.0 * law.sigma_t)))
}

/// Law of `V_j = N / Γ(1/ξ, 1)` with hypoexponential numerator of weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VjLaw {
    pub xi: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum WeightRegime {
    Edge,
    Half,
    Generic,
}

fn regime(w: f64) -> WeightRegime {
    if w.min(1.0 - w) < EDGE_BAND {
        WeightRegime::Edge
    } else if (2.0 * w - 1.0).abs() < HALF_BAND {
        WeightRegime::Half
    } else {
        WeightRegime::Generic
    }
}

/// `(1 + x/c)^(-a)` evaluated through logarithms.
#[inline]
fn pow_decay(x: f64, c: f64, a: f64) -> f64 {
    (-a * (x / c).ln_1p()).exp()
}

impl VjLaw {
    pub fn new(xi: f64, w: f64) -> Result<Self> {
        if !(xi > 0.0) || !xi.is_finite() {
            return domain(format!("V law needs xi > 0, got {xi}"));
        }
        check_weight(w)?;
        Ok(Self { xi, w })
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        v_survival(self, x)
    }

    /// Survival extended by 1 on the negative half-line.
    pub(crate) fn survival_ext(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            v_survival_unchecked(self, x)
        }
    }

    /// Cdf extended by 0 on the negative half-line, computed without
    /// subtracting from one where that would lose precision.
    pub(crate) fn cdf_ext(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let a = 1.0 / self.xi;
        let w = self.w;
        match regime(w) {
            WeightRegime::Edge => -(-a * x.ln_1p()).exp_m1(),
            WeightRegime::Half => {
                let sf = v_survival_unchecked(self, x);
                1.0 - sf
            }
            WeightRegime::Generic => {
                // 1 - [w A - (1-w) B] / (2w-1) = [w(1-A) - (1-w)(1-B)] / (2w-1)
                let one_minus_a = -(-a * (x / w).ln_1p()).exp_m1();
                let one_minus_b = -(-a * (x / (1.0 - w)).ln_1p()).exp_m1();
                let v = (w * one_minus_a - (1.0 - w) * one_minus_b) / (2.0 * w - 1.0);
                v.clamp(0.0, 1.0)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        v_density(self, x)
    }

    pub fn tail_constants(&self) -> (f64, f64) {
        v_tail_constants(self)
    }

    pub fn mean(&self) -> Option<f64> {
        (self.xi < 1.0).then(|| self.xi / (1.0 - self.xi))
    }

    pub fn variance(&self) -> Option<f64> {
        if self.xi >= 0.5 {
            return None;
        }
        let (xi, w) = (self.xi, self.w);
        let r = 1.0 / xi - 1.0;
        Some((w * w + (1.0 - w) * (1.0 - w) + 2.0 * xi * w * (1.0 - w)) / (r * r * (1.0 - 2.0 * xi)))
    }
}

pub fn v_survival(law: &VjLaw, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("V survival needs x >= 0, got {x}"));
    }
    Ok(v_survival_unchecked(law, x))
}

fn v_survival_unchecked(law: &VjLaw, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let a = 1.0 / law.xi;
    let w = law.w;
    let v = match regime(w) {
        WeightRegime::Edge => pow_decay(x, 1.0, a),
        WeightRegime::Half => pow_decay(x, 0.5, a + 1.0) * (1.0 + 2.0 * x * (1.0 + a)),
        WeightRegime::Generic => {
            (w * pow_decay(x, w, a) - (1.0 - w) * pow_decay(x, 1.0 - w, a)) / (2.0 * w - 1.0)
        }
    };
    v.clamp(0.0, 1.0)
}

pub fn v_density(law: &VjLaw, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let a = 1.0 / law.xi;
    let w = law.w;
    let v = match regime(w) {
        WeightRegime::Edge => a * pow_decay(x, 1.0, a + 1.0),
        WeightRegime::Half => 4.0 * x * a * (1.0 + a) * pow_decay(x, 0.5, a + 2.0),
        WeightRegime::Generic => {
            a * (pow_decay(x, w, a + 1.0) - pow_decay(x, 1.0 - w, a + 1.0)) / (2.0 * w - 1.0)
        }
    };
    v.max(0.0)
}

/// Constants `(C, D)` of `P(V > x) = C x^(-1/ξ) (1 - D/(ξx) + o(1/x))`.
pub fn v_tail_constants(law: &VjLaw) -> (f64, f64) {
    let a = 1.0 / law.xi;
    let w = law.w;
    match regime(w) {
        WeightRegime::Edge => (1.0, 1.0),
        WeightRegime::Half => (
            (-a * std::f64::consts::LN_2).exp() * (a + 1.0),
            (1.0 + 2.0 * law.xi) / (2.0 + 2.0 * law.xi),
        ),
        WeightRegime::Generic => {
            let p1 = ((a + 1.0) * w.ln()).exp() - ((a + 1.0) * (1.0 - w).ln()).exp();
            let p2 = ((a + 2.0) * w.ln()).exp() - ((a + 2.0) * (1.0 - w).ln()).exp();
            (p1 / (2.0 * w - 1.0), p2 / p1)
        }
    }
}
