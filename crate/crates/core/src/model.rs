//! The sub-asymptotic bivariate generalized Pareto (sBGP) distribution.
//!
//! A draw is
//!
//! ```text
//! Y_j = β_j ( (w E + (1-w) E_j) / (G + G_j) - S_j ),   j = 1, 2
//! ```
//!
//! with `E, E_1, E_2 ~ Exp(1)`, `G ~ Γ(α, 1)`, `G_j ~ Γ(α_j, 1)` and the
//! Gaussian-generated shift `S_j = max(T_1, T_2) - T_j`. All variables are
//! independent. Marginal tail indices are `ξ_j = 1/(α + α_j)`.
//!
//! Parameter vectors exchanged with the estimator use the canonical order
//! `(η, ξ_1, ξ_2, β_1, β_2, σ_T, w)`, see [`CANONICAL_NAMES`].

use serde::{Deserialize, Serialize};

use crate::distributions::{gamma_or_zero, sample_exp1, sample_shift, GpParams, ShiftLaw, VjLaw};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::rng::RngState;
use crate::roots::brent;
use crate::sample::Sample;

pub const CANONICAL_NAMES: [&str; 7] = ["eta", "xi1", "xi2", "beta1", "beta2", "sigma_T", "w"];

/// Switch band around the removable singularities of the closed forms.
const SWITCH_BAND: f64 = 1e-6;

/// The seven natural parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbgpParams {
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma_t: f64,
    pub w: f64,
}

/// Marginal tail indices and the limiting dependence coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub xi1: f64,
    pub xi2: f64,
    pub eta: f64,
    pub chi: f64,
}

/// Prior coordinates `(η, ξ_1, ξ_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparamTriple {
    pub eta: f64,
    pub xi1: f64,
    pub xi2: f64,
}

/// GP approximation of the upper marginal tail: `P(Y_j > x) ≈ H̄_{ξ,σ}(x)`
/// with relative error `-Δ/x` to first order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailApprox {
    pub xi: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl TailApprox {
    pub fn gp(&self) -> GpParams {
        GpParams {
            xi: self.xi,
            sigma: self.sigma,
        }
    }
}

impl SbgpParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
        sigma_t: f64,
        w: f64,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            alpha1,
            alpha2,
            beta1,
            beta2,
            sigma_t,
            w,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a slice ordered `(α, α_1, α_2, β_1, β_2, σ_T, w)`.
    pub fn from_natural_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 7 {
            return domain(format!("expected 7 natural parameters, got {}", v.len()));
        }
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.alpha1,
            self.alpha2,
            self.beta1,
            self.beta2,
            self.sigma_t,
            self.w,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return domain("sBGP parameters must be finite");
        }
        if self.alpha < 0.0 || self.alpha1 < 0.0 || self.alpha2 < 0.0 {
            return domain("gamma shapes alpha, alpha1, alpha2 must be >= 0");
        }
        if !(self.alpha + self.alpha1.min(self.alpha2) > 0.0) {
            return domain("need alpha + min(alpha1, alpha2) > 0");
        }
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return domain("scales beta1, beta2 must be > 0");
        }
        if self.sigma_t < 0.0 {
            return domain("sigma_T must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.w) {
            return domain("w must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn xi(&self, j: usize) -> f64 {
        1.0 / (self.alpha + self.alpha_j(j))
    }

    fn alpha_j(&self, j: usize) -> f64 {
        if j == 1 {
            self.alpha1
        } else {
            self.alpha2
        }
    }

    pub fn beta(&self, j: usize) -> f64 {
        if j == 1 {
            self.beta1
        } else {
            self.beta2
        }
    }

    /// `β_j ξ_j / (1 - ξ_j)`, the scale comparable with a GP scale parameter;
    /// `None` when `ξ_j ≥ 1`.
    pub fn beta_star(&self, j: usize) -> Option<f64> {
        let xi = self.xi(j);
        (xi < 1.0).then(|| self.beta(j) * xi / (1.0 - xi))
    }

    pub fn is_asymptotically_dependent(&self) -> bool {
        self.alpha1 == 0.0 && self.alpha2 == 0.0
    }

    pub fn derived(&self) -> DerivedParams {
        derived_from_natural_unchecked(self)
    }

    /// Canonical vector `(η, ξ_1, ξ_2, β_1, β_2, σ_T, w)`.
    pub fn to_canonical(&self) -> [f64; 7] {
        let d = self.derived();
        [d.eta, d.xi1, d.xi2, self.beta1, self.beta2, self.sigma_t, self.w]
    }

    /// Inverse of [`Self::to_canonical`]; fails on infeasible `(η, ξ_1, ξ_2)`.
    pub fn from_canonical(theta: &[f64]) -> Result<Self> {
        if theta.len() != 7 {
            return domain(format!("expected 7 canonical parameters, got {}", theta.len()));
        }
        let (alpha, alpha1, alpha2) = natural_from_reparam(&ReparamTriple {
            eta: theta[0],
            xi1: theta[1],
            xi2: theta[2],
        })?;
        Self::new(alpha, alpha1, alpha2, theta[3], theta[4], theta[5], theta[6])
    }

    /// Like [`Self::from_canonical`] but first moves `η` into its feasible
    /// range `[1/2, 1/(2 - min ξ / max ξ)]` and clamps `w` to `[0, 1]`.
    ///
    /// Estimator outputs satisfy each coordinate's range separately but not
    /// the joint constraint, so this is what turns an estimate into a model
    /// that can be simulated.
    pub fn from_canonical_projected(theta: &[f64]) -> Result<Self> {
        if theta.len() != 7 {
            return domain(format!("expected 7 canonical parameters, got {}", theta.len()));
        }
        let (xi1, xi2) = (theta[1], theta[2]);
        if !(xi1 > 0.0 && xi2 > 0.0) {
            return domain("tail indices must be positive");
        }
        let bound = eta_upper_bound(xi1, xi2);
        let eta = theta[0].clamp(0.5, bound);
        let mut v = [eta, xi1, xi2, theta[3], theta[4], theta[5].max(0.0), theta[6].clamp(0.0, 1.0)];
        if eta == 1.0 && xi1 != xi2 {
            v[0] = bound.min(1.0 - 1e-12);
        }
        Self::from_canonical(&v)
    }

    pub fn marginal(&self, j: usize) -> Result<Marginal> {
        if j != 1 && j != 2 {
            return domain(format!("margin index must be 1 or 2, got {j}"));
        }
        Ok(Marginal {
            beta: self.beta(j),
            v: VjLaw {
                xi: self.xi(j),
                w: self.w,
            },
            shift: ShiftLaw {
                sigma_t: self.sigma_t,
            },
        })
    }

    /// One draw of `(Y_1, Y_2)`.
    pub fn draw(&self, rng: &mut RngState) -> [f64; 2] {
        let w = self.w;
        let e = sample_exp1(rng);
        let e1 = sample_exp1(rng);
        let e2 = sample_exp1(rng);
        let g = gamma_or_zero(self.alpha, rng);
        let g1 = gamma_or_zero(self.alpha1, rng);
        let g2 = gamma_or_zero(self.alpha2, rng);
        let (s1, s2) = sample_shift(
            &ShiftLaw {
                sigma_t: self.sigma_t,
            },
            rng,
        );
        let v1 = (w * e + (1.0 - w) * e1) / (g + g1);
        let v2 = (w * e + (1.0 - w) * e2) / (g + g2);
        [self.beta1 * (v1 - s1), self.beta2 * (v2 - s2)]
    }

    pub fn sample(&self, n: usize, rng: &mut RngState) -> Result<Sample> {
        sample(self, n, rng)
    }
}

/// Largest `η` compatible with the tail indices.
pub fn eta_upper_bound(xi1: f64, xi2: f64) -> f64 {
    1.0 / (2.0 - xi1.min(xi2) / xi1.max(xi2))
}

pub fn derived_from_natural(p: &SbgpParams) -> Result<DerivedParams> {
    p.validate()?;
    Ok(derived_from_natural_unchecked(p))
}

fn derived_from_natural_unchecked(p: &SbgpParams) -> DerivedParams {
    let xi1 = 1.0 / (p.alpha + p.alpha1);
    let xi2 = 1.0 / (p.alpha + p.alpha2);
    let amax = p.alpha1.max(p.alpha2);
    if amax > 0.0 {
        DerivedParams {
            xi1,
            xi2,
            eta: (p.alpha + amax) / (p.alpha + 2.0 * amax),
            chi: 0.0,
        }
    } else {
        DerivedParams {
            xi1,
            xi2,
            eta: 1.0,
            chi: chi_asymptotic_dependence(p.alpha, p.w),
        }
    }
}

/// Closed-form `χ` when `α_1 = α_2 = 0`, with its continuous extensions at
/// `w ∈ {1/3, 1/2}`.
pub fn chi_asymptotic_dependence(alpha: f64, w: f64) -> f64 {
    let a1 = alpha + 1.0;
    if w == 0.0 {
        return (-alpha * std::f64::consts::LN_2).exp();
    }
    if w == 1.0 {
        return 1.0;
    }
    if (w - 0.5).abs() < SWITCH_BAND {
        return (2.0 - (-alpha * std::f64::consts::LN_2).exp()) / a1;
    }
    if (w - 1.0 / 3.0).abs() < SWITCH_BAND {
        return a1 / ((a1 * std::f64::consts::LN_2).exp() - 1.0);
    }
    let wp = (a1 * w.ln()).exp();
    let vp = (a1 * (1.0 - w).ln()).exp();
    let two_pow = (-alpha * std::f64::consts::LN_2).exp();
    (2.0 * w - 1.0) / (3.0 * w - 1.0) * (2.0 * wp - two_pow * vp) / (wp - vp)
}

/// Maps `(η, ξ_1, ξ_2)` to the gamma shapes `(α, α_1, α_2)`.
pub fn natural_from_reparam(t: &ReparamTriple) -> Result<(f64, f64, f64)> {
    let ReparamTriple { eta, xi1, xi2 } = *t;
    if !(xi1 > 0.0 && xi2 > 0.0) || !xi1.is_finite() || !xi2.is_finite() {
        return domain(format!("tail indices must be positive, got ({xi1}, {xi2})"));
    }
    if !(0.5..=1.0).contains(&eta) {
        return Err(Error::Constraint(format!("eta = {eta} outside [1/2, 1]")));
    }
    if eta == 1.0 {
        if xi1 != xi2 {
            return Err(Error::Constraint(format!(
                "eta = 1 requires xi1 = xi2, got ({xi1}, {xi2})"
            )));
        }
        return Ok((1.0 / xi1, 0.0, 0.0));
    }
    let bound = eta_upper_bound(xi1, xi2);
    // Relative slack for values drawn on the boundary in floating point.
    if eta > bound * (1.0 + 1e-12) {
        return Err(Error::Constraint(format!(
            "eta = {eta} exceeds the bound {bound} implied by xi = ({xi1}, {xi2})"
        )));
    }
    let alpha = (2.0 * eta - 1.0) / (eta * xi1.min(xi2));
    let fix = |xi: f64| {
        let v = 1.0 / xi - alpha;
        if v < 0.0 && v > -1e-9 * (1.0 / xi) {
            0.0
        } else {
            v
        }
    };
    let (alpha1, alpha2) = (fix(xi1), fix(xi2));
    if alpha1 < 0.0 || alpha2 < 0.0 {
        return Err(Error::Constraint(format!(
            "infeasible triple ({eta}, {xi1}, {xi2}) gives negative shapes"
        )));
    }
    Ok((alpha, alpha1, alpha2))
}

pub fn sample(p: &SbgpParams, n: usize, rng: &mut RngState) -> Result<Sample> {
    if n == 0 {
        return domain("sample size must be >= 1");
    }
    p.validate()?;
    Ok(Sample::new((0..n).map(|_| p.draw(rng)).collect()))
}

/// One margin `Y_j = β_j (V_j - S_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginal {
    pub beta: f64,
    pub v: VjLaw,
    pub shift: ShiftLaw,
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_subdivisions: 400,
    }
}

impl Marginal {
    pub fn density(&self, y: f64) -> f64 {
        let x = y / self.beta;
        if self.shift.sigma_t == 0.0 {
            return self.v.density(x) / self.beta;
        }
        let upper = self.shift.conditional_upper();
        let lower = (-x).max(0.0);
        let integral = if lower < upper {
            integrate(
                |s| self.v.density(x + s) * self.shift.conditional_density(s),
                lower,
                upper,
                quad_tol(),
            )
        } else {
            0.0
        };
        (self.v.density(x) + integral) / (2.0 * self.beta)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let x = y / self.beta;
        if self.shift.sigma_t == 0.0 {
            return self.v.cdf_ext(x);
        }
        let upper = self.shift.conditional_upper();
        let lower = (-x).max(0.0);
        let integral = if lower < upper {
            integrate(
                |s| self.v.cdf_ext(x + s) * self.shift.conditional_density(s),
                lower,
                upper,
                quad_tol(),
            )
        } else {
            0.0
        };
        0.5 * (self.v.cdf_ext(x) + integral)
    }

    /// `P(Y_j > y)`, accurate in relative terms far in the upper tail.
    pub fn survival(&self, y: f64) -> f64 {
        let x = y / self.beta;
        if self.shift.sigma_t == 0.0 {
            return self.v.survival_ext(x);
        }
        let upper = self.shift.conditional_upper();
        let lower = (-x).max(0.0).min(upper);
        let below = if lower > 0.0 {
            libm::erf(lower / (2.0 * self.shift.sigma_t))
        } else {
            0.0
        };
        let tol = Tolerance {
            abs: 0.0,
            rel: 1e-11,
            max_subdivisions: 400,
        };
        let integral = if lower < upper {
            integrate(
                |s| self.v.survival_ext(x + s) * self.shift.conditional_density(s),
                lower,
                upper,
                tol,
            )
        } else {
            0.0
        };
        0.5 * (self.v.survival_ext(x) + below + integral)
    }

    /// Smallest value the margin can take with non-negligible probability.
    fn lower_support(&self) -> f64 {
        -self.beta * self.shift.conditional_upper()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return domain(format!("quantile level must lie in (0, 1), got {q}"));
        }
        let lo = self.lower_support();
        // Start from the GP tail quantile and double until the cdf passes q.
        let tail = self.gp_tail_approx();
        let mut hi = tail.gp().quantile(q).unwrap_or(self.beta).max(self.beta);
        let mut guard = 0;
        while self.cdf(hi) < q {
            hi = 2.0 * hi + self.beta;
            guard += 1;
            if guard > 200 || !hi.is_finite() {
                return Err(Error::RootFinding(format!(
                    "could not bracket the {q}-quantile"
                )));
            }
        }
        if self.cdf(lo) >= q {
            return Ok(lo);
        }
        let scale = 1.0 + hi.abs();
        brent(|y| self.cdf(y) - q, lo, hi, 1e-12 * scale, 0.0, 300)
    }

    pub fn moments(&self) -> Result<(f64, f64)> {
        let xi = self.v.xi;
        let mean = self.v.mean().ok_or_else(|| {
            Error::UndefinedMoment(format!("mean needs xi in (0, 1), got {xi}"))
        })?;
        let var = self.v.variance().ok_or_else(|| {
            Error::UndefinedMoment(format!("variance needs xi in (0, 1/2), got {xi}"))
        })?;
        Ok((
            self.beta * (mean - self.shift.mean()),
            self.beta * self.beta * (var + self.shift.variance()),
        ))
    }

    pub fn gp_tail_approx(&self) -> TailApprox {
        let xi = self.v.xi;
        let (c, d) = self.v.tail_constants();
        let c_xi = c.powf(xi);
        TailApprox {
            xi,
            sigma: self.beta * c_xi * xi,
            delta: (self.shift.mean() + d - c_xi) / (xi / self.beta),
        }
    }
}

pub fn marginal_density(p: &SbgpParams, j: usize, y: f64) -> Result<f64> {
    Ok(p.marginal(j)?.density(y))
}

pub fn marginal_cdf(p: &SbgpParams, j: usize, y: f64) -> Result<f64> {
    Ok(p.marginal(j)?.cdf(y))
}

pub fn marginal_quantile(p: &SbgpParams, j: usize, q: f64) -> Result<f64> {
    p.marginal(j)?.quantile(q)
}

/// Mean and variance of `Y_j`.
pub fn marginal_moments(p: &SbgpParams, j: usize) -> Result<(f64, f64)> {
    p.marginal(j)?.moments()
}

pub fn gp_tail_approx(p: &SbgpParams, j: usize) -> Result<TailApprox> {
    Ok(p.marginal(j)?.gp_tail_approx())
}

/// `p_1(x) = P(V_1 > x)` and `p_2(x) = P(V_1 > x, V_2 > x)` in the
/// asymptotically dependent case `α_1 = α_2 = 0`, selected by `s ∈ {1, 2}`.
pub fn ad_survival_pair(alpha: f64, w: f64, x: f64, s: u8) -> Result<f64> {
    if s != 1 && s != 2 {
        return domain(format!("s must be 1 or 2, got {s}"));
    }
    if !(alpha > 0.0) {
        return domain(format!("alpha must be > 0, got {alpha}"));
    }
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("w must lie in [0, 1], got {w}"));
    }
    if !(x >= 0.0) {
        return domain(format!("x must be >= 0, got {x}"));
    }
    let s = s as f64;
    let denom = (s + 1.0) * w - 1.0;
    if denom.abs() < SWITCH_BAND {
        // Continuous extension at w = 1/(s+1).
        let u = 1.0 + (s + 1.0) * x;
        return Ok((-(alpha + 1.0) * u.ln()).exp() * (1.0 + (alpha + 1.0) * (s + 1.0) * x));
    }
    let first = if w > 0.0 {
        s * w / denom * (-alpha * (x / w).ln_1p()).exp()
    } else {
        0.0
    };
    let second = if w < 1.0 {
        (1.0 - w) / denom * (-alpha * (s * x / (1.0 - w)).ln_1p()).exp()
    } else {
        0.0
    };
    Ok((first - second).clamp(0.0, 1.0))
}

/// `(χ(q), η(q))` for the asymptotically dependent model without shift.
pub fn ad_chi_at_level(alpha: f64, w: f64, q: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("q must lie in (0, 1), got {q}"));
    }
    let target = (-q).ln_1p();
    let log_p1 = |x: f64| ad_survival_pair(alpha, w, x, 1).map(f64::ln).unwrap_or(f64::NAN);
    let mut hi = 1.0;
    while log_p1(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::RootFinding("could not bracket the level".into()));
        }
    }
    let xq = brent(|x| log_p1(x) - target, 0.0, hi, 1e-14 * hi, 0.0, 500)?;
    let chi = ad_survival_pair(alpha, w, xq, 2)? / (1.0 - q);
    let eta = crate::dependence::eta_from_chi(q, chi)?;
    Ok((chi, eta))
}

/// JSON view: natural parameters plus read-only derived fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbgpParamsJson {
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(rename = "sigma_T")]
    pub sigma_t: f64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
}

impl From<&SbgpParams> for SbgpParamsJson {
    fn from(p: &SbgpParams) -> Self {
        let d = p.derived();
        Self {
            alpha: p.alpha,
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            beta1: p.beta1,
            beta2: p.beta2,
            sigma_t: p.sigma_t,
            w: p.w,
            eta: Some(d.eta),
            xi1: Some(d.xi1),
            xi2: Some(d.xi2),
            chi: Some(d.chi),
        }
    }
}

impl SbgpParams {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SbgpParamsJson::from(self))?)
    }

    /// Parses the JSON view; derived fields, if present, are ignored.
    pub fn from_json(s: &str) -> Result<Self> {
        let j: SbgpParamsJson = serde_json::from_str(s)?;
        Self::new(j.alpha, j.alpha1, j.alpha2, j.beta1, j.beta2, j.sigma_t, j.w)
    }
}

/// The three fixed configurations used for the simulation study,
/// `(α, α_1, α_2, β_1, β_2, σ_T, w)`.
pub fn reference_config(i: usize) -> SbgpParams {
    let v = match i {
        1 => [3.0, 0.0, 0.0, 20.0, 30.0, 0.1, 0.8],
        2 => [2.0, 1.0, 1.0, 20.0, 30.0, 0.1, 0.6],
        3 => [1.0, 2.0, 2.0, 20.0, 30.0, 0.1, 0.2],
        _ => panic!("reference configurations are numbered 1 to 3"),
    };
    SbgpParams::from_natural_slice(&v).expect("valid reference configuration")
}
