//! DeepSets network: `θ̂ = head(φ([mean_i ψ(y_i), S]))`.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Uniform};

use crate::dependence::{eta_hill, ranks};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sample::Sample;

/// Quantile levels of the `χ̂` summaries concatenated to the set embedding.
pub const SUMMARY_LEVELS: [f64; 8] = [0.50, 0.60, 0.70, 0.80, 0.85, 0.90, 0.95, 0.98];

pub const PSI_DIMS: [usize; 5] = [2, 64, 64, 128, 128];
pub const PHI_HIDDEN: [usize; 3] = [128, 64, 64];

/// `χ̂(q)` at [`SUMMARY_LEVELS`].
pub fn summary_stats(sample: &Sample) -> Result<[f64; 8]> {
    let r = ranks(sample)?;
    let mut out = [0.0; 8];
    for (o, &q) in out.iter_mut().zip(&SUMMARY_LEVELS) {
        *o = r.chi_hat(q)?;
    }
    Ok(out)
}

/// Map applied to each observation before `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputTransform {
    Identity,
    /// `sign(y) log(1 + |y|)`
    SignedLog1p,
}

impl InputTransform {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            InputTransform::Identity => y,
            InputTransform::SignedLog1p => y.signum() * y.abs().ln_1p(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputTransform::Identity => "identity",
            InputTransform::SignedLog1p => "signed_log1p",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(InputTransform::Identity),
            "signed_log1p" => Some(InputTransform::SignedLog1p),
            _ => None,
        }
    }
}

/// Output-layer activations per model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    /// `(η, ξ1, ξ2, β1, β2, σ_T, w)`: `½ + ½σ`, softplus ×5, sigmoid.
    Sbgp,
    /// `(ξ1, ξ2, σ1, σ2, a_T, b_T)`: softplus ×5, identity.
    Bgp,
}

impl OutputHead {
    pub fn dim(self) -> usize {
        match self {
            OutputHead::Sbgp => 7,
            OutputHead::Bgp => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputHead::Sbgp => "sbgp",
            OutputHead::Bgp => "bgp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sbgp" => Some(OutputHead::Sbgp),
            "bgp" => Some(OutputHead::Bgp),
            _ => None,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            OutputHead::Sbgp => &crate::model::CANONICAL_NAMES,
            OutputHead::Bgp => &crate::bgp::BGP_NAMES,
        }
    }

    pub fn activations(self) -> Vec<&'static str> {
        match self {
            OutputHead::Sbgp => vec![
                "half_sigmoid",
                "softplus",
                "softplus",
                "softplus",
                "softplus",
                "softplus",
                "sigmoid",
            ],
            OutputHead::Bgp => vec![
                "softplus", "softplus", "softplus", "softplus", "softplus", "identity",
            ],
        }
    }

    /// Output values and their derivatives with respect to the logits.
    fn apply(self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut out = Vec::with_capacity(z.len());
        let mut der = Vec::with_capacity(z.len());
        for (i, &zi) in z.iter().enumerate() {
            let (v, d) = match (self, i) {
                (OutputHead::Sbgp, 0) => {
                    let s = sigmoid(zi);
                    (0.5 + 0.5 * s, 0.5 * s * (1.0 - s))
                }
                (OutputHead::Sbgp, 6) => {
                    let s = sigmoid(zi);
                    (s, s * (1.0 - s))
                }
                (OutputHead::Bgp, 5) => (zi, 1.0),
                _ => (softplus(zi), sigmoid(zi)),
            };
            out.push(v);
            der.push(d);
        }
        (out, der)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Fully connected layer `x ↦ W x + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    /// Uniform on `±√(6 / fan_in)` for weights, zero biases.
    pub fn init(input: usize, output: usize, rng: &mut RngState) -> Self {
        let limit = (6.0 / input as f64).sqrt();
        let u = Uniform::new(-limit, limit).expect("valid bounds");
        Self {
            weight: Array2::from_shape_simple_fn((output, input), || u.sample(rng)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn forward_rows(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weight.t());
        y += &self.bias;
        y
    }

    fn forward_vec(&self, x: &Array1<f64>) -> Array1<f64> {
        self.weight.dot(x) + &self.bias
    }
}

/// Weights of the full estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub psi: Vec<Dense>,
    pub phi: Vec<Dense>,
    pub head: OutputHead,
    pub input_transform: InputTransform,
    /// Number of optimiser steps taken; zero for an untrained network.
    pub trained_steps: u64,
    /// Penalty weight of the loss the network was trained with.
    pub loss_lambda: f64,
}

fn phi_dims(head: OutputHead) -> Vec<usize> {
    let mut d = vec![PSI_DIMS[4] + SUMMARY_LEVELS.len()];
    d.extend_from_slice(&PHI_HIDDEN);
    d.push(head.dim());
    d
}

impl NetworkWeights {
    pub fn new(head: OutputHead, input_transform: InputTransform, rng: &mut RngState) -> Self {
        let psi = PSI_DIMS
            .windows(2)
            .map(|d| Dense::init(d[0], d[1], rng))
            .collect();
        let phi = phi_dims(head)
            .windows(2)
            .map(|d| Dense::init(d[0], d[1], rng))
            .collect();
        Self {
            psi,
            phi,
            head,
            input_transform,
            trained_steps: 0,
            loss_lambda: 0.0,
        }
    }

    pub fn zeros(head: OutputHead, input_transform: InputTransform) -> Self {
        Self {
            psi: PSI_DIMS.windows(2).map(|d| Dense::zeros(d[0], d[1])).collect(),
            phi: phi_dims(head)
                .windows(2)
                .map(|d| Dense::zeros(d[0], d[1]))
                .collect(),
            head,
            input_transform,
            trained_steps: 0,
            loss_lambda: 0.0,
        }
    }

    /// `(input, output)` of every layer, `ψ` first.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        self.layers()
            .map(|l| (l.input_dim(), l.output_dim()))
            .collect()
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.psi.iter().chain(self.phi.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.psi.iter_mut().chain(self.phi.iter_mut())
    }

    pub fn num_parameters(&self) -> usize {
        self.layers().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Checks dimensions against the fixed architecture and finiteness.
    pub fn validate(&self) -> Result<()> {
        let expect: Vec<(usize, usize)> = PSI_DIMS
            .windows(2)
            .chain(phi_dims(self.head).windows(2))
            .map(|d| (d[0], d[1]))
            .collect();
        if self.layer_dims() != expect {
            return Err(Error::Structure(format!(
                "layer dimensions {:?} do not match {:?}",
                self.layer_dims(),
                expect
            )));
        }
        for (i, l) in self.layers().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Structure(format!("layer {i}: bias length mismatch")));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Structure(format!("layer {i}: non-finite entries")));
            }
        }
        Ok(())
    }

    /// Mean of `ψ` over the rows of a prepared input.
    pub fn psi_aggregate(&self, input: &PreparedInput) -> Array1<f64> {
        let mut h = input.x.clone();
        for l in &self.psi {
            h = l.forward_rows(h.view());
            h.mapv_inplace(|v| v.max(0.0));
        }
        h.mean_axis(Axis(0)).expect("non-empty input")
    }

    fn phi_logits(&self, aggregate: &Array1<f64>, summaries: &[f64; 8]) -> Array1<f64> {
        let mut h = concat(aggregate, summaries);
        let last = self.phi.len() - 1;
        for (i, l) in self.phi.iter().enumerate() {
            h = l.forward_vec(&h);
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        h
    }

    pub fn forward_prepared(&self, input: &PreparedInput) -> Vec<f64> {
        let a = self.psi_aggregate(input);
        let z = self.phi_logits(&a, &input.summaries);
        self.head.apply(z.as_slice().expect("contiguous")).0
    }

    /// Point estimate for one dataset. Invariant to the row order of `sample`.
    pub fn forward(&self, sample: &Sample) -> Result<Vec<f64>> {
        Ok(self.forward_prepared(&PreparedInput::new(sample, self.input_transform, false)?))
    }
}

fn concat(a: &Array1<f64>, s: &[f64; 8]) -> Array1<f64> {
    let mut v = Array1::zeros(a.len() + s.len());
    v.slice_mut(s![..a.len()]).assign(a);
    for (i, &x) in s.iter().enumerate() {
        v[a.len() + i] = x;
    }
    v
}

/// A dataset reduced to what the network consumes: transformed rows in a
/// canonical order, the `χ̂` summaries and optionally the Hill-type `η̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInput {
    pub x: Array2<f64>,
    pub summaries: [f64; 8],
    pub eta_emp: Option<f64>,
}

impl PreparedInput {
    pub fn new(sample: &Sample, transform: InputTransform, with_eta: bool) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::Domain(format!(
                "estimator needs at least 2 rows, got {}",
                sample.len()
            )));
        }
        let mut rows = sample.rows().to_vec();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let sorted = Sample::new(rows);
        let summaries = summary_stats(&sorted)?;
        let eta_emp = if with_eta { Some(eta_hill(&sorted)?) } else { None };
        let x = Array2::from_shape_fn((sorted.len(), 2), |(i, j)| {
            transform.apply(sorted.rows()[i][j])
        });
        Ok(Self {
            x,
            summaries,
            eta_emp,
        })
    }
}

/// Loss weights shared by training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    /// Diagonal of the scale matrix `D`.
    pub scale: Vec<f64>,
    /// Weight of the `η` anchoring penalty.
    pub lambda: f64,
}

/// `‖D⁻¹(θ - θ̂)‖² + λ D₁₁⁻² (θ̂₁ - η̂_emp)²`.
pub fn loss(theta: &[f64], theta_hat: &[f64], eta_emp: Option<f64>, spec: &LossSpec) -> f64 {
    let mut l: f64 = theta
        .iter()
        .zip(theta_hat)
        .zip(&spec.scale)
        .map(|((t, h), d)| ((t - h) / d).powi(2))
        .sum();
    if spec.lambda != 0.0 {
        if let Some(e) = eta_emp {
            l += spec.lambda * ((theta_hat[0] - e) / spec.scale[0]).powi(2);
        }
    }
    l
}

/// Per-layer gradient buffers with the same shapes as the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Dense>,
}

impl Gradient {
    pub fn zeros_like(w: &NetworkWeights) -> Self {
        Self {
            layers: w
                .layers()
                .map(|l| Dense::zeros(l.input_dim(), l.output_dim()))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradient) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            l.weight *= c;
            l.bias *= c;
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Loss and its gradient with respect to every weight for one dataset.
/// Summaries and `η̂_emp` enter as constants.
pub fn loss_and_gradient(
    w: &NetworkWeights,
    input: &PreparedInput,
    theta: &[f64],
    spec: &LossSpec,
) -> (f64, Gradient) {
    let n = input.x.nrows() as f64;

    // ψ forward, keeping pre-activation inputs of each layer.
    let mut psi_in = Vec::with_capacity(w.psi.len());
    let mut h = input.x.clone();
    for l in &w.psi {
        let mut z = l.forward_rows(h.view());
        z.mapv_inplace(|v| v.max(0.0));
        psi_in.push(h);
        h = z;
    }
    let psi_out = h;
    let agg = psi_out.mean_axis(Axis(0)).expect("non-empty input");

    // φ forward.
    let mut phi_in = Vec::with_capacity(w.phi.len());
    let mut v = concat(&agg, &input.summaries);
    let last = w.phi.len() - 1;
    for (i, l) in w.phi.iter().enumerate() {
        let mut z = l.forward_vec(&v);
        if i < last {
            z.mapv_inplace(|t| t.max(0.0));
        }
        phi_in.push(v);
        v = z;
    }
    let logits = v;
    let (theta_hat, dout) = w.head.apply(logits.as_slice().expect("contiguous"));
    let value = loss(theta, &theta_hat, input.eta_emp, spec);

    // dL/dθ̂ then dL/dz.
    let mut g_out: Vec<f64> = theta
        .iter()
        .zip(&theta_hat)
        .zip(&spec.scale)
        .map(|((t, h), d)| 2.0 * (h - t) / (d * d))
        .collect();
    if spec.lambda != 0.0 {
        if let Some(e) = input.eta_emp {
            g_out[0] += 2.0 * spec.lambda * (theta_hat[0] - e) / (spec.scale[0] * spec.scale[0]);
        }
    }
    let mut delta = Array1::from_iter(g_out.iter().zip(&dout).map(|(g, d)| g * d));

    let mut grads: Vec<Dense> = Vec::with_capacity(w.psi.len() + w.phi.len());
    let mut phi_grads = Vec::with_capacity(w.phi.len());
    for (i, l) in w.phi.iter().enumerate().rev() {
        let x = &phi_in[i];
        let gw = delta
            .view()
            .insert_axis(Axis(1))
            .dot(&x.view().insert_axis(Axis(0)));
        let gb = delta.clone();
        let mut back = l.weight.t().dot(&delta);
        if i > 0 {
            // x is the ReLU output of the previous layer.
            back.zip_mut_with(x, |b, &xv| {
                if xv <= 0.0 {
                    *b = 0.0
                }
            });
        }
        phi_grads.push(Dense {
            weight: gw,
            bias: gb,
        });
        delta = back;
    }
    phi_grads.reverse();

    // Back into the ψ aggregate: each row receives 1/n of the signal.
    let d_agg = delta.slice(s![..agg.len()]).to_owned() / n;
    let mut d_rows = Array2::from_shape_fn(psi_out.raw_dim(), |(r, c)| {
        if psi_out[[r, c]] > 0.0 {
            d_agg[c]
        } else {
            0.0
        }
    });
    let mut psi_grads = Vec::with_capacity(w.psi.len());
    for (i, l) in w.psi.iter().enumerate().rev() {
        let x = &psi_in[i];
        let gw = d_rows.t().dot(x);
        let gb = d_rows.sum_axis(Axis(0));
        if i > 0 {
            let mut back = d_rows.dot(&l.weight);
            back.zip_mut_with(x, |b, &xv| {
                if xv <= 0.0 {
                    *b = 0.0
                }
            });
            d_rows = back;
        }
        psi_grads.push(Dense {
            weight: gw,
            bias: gb,
        });
    }
    psi_grads.reverse();
    grads.extend(psi_grads);
    grads.extend(phi_grads);
    (value, Gradient { layers: grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SbgpParams;

    fn small_sample(seed: u64, n: usize) -> Sample {
        let mut rng = RngState::seed_from_u64(seed);
        SbgpParams::new(2.0, 1.0, 0.5, 3.0, 2.0, 0.3, 0.6)
            .unwrap()
            .sample(n, &mut rng)
            .unwrap()
    }

    fn spec(lambda: f64) -> LossSpec {
        LossSpec {
            scale: vec![0.144, 0.144, 0.144, 288.7, 288.7, 0.289, 0.289],
            lambda,
        }
    }

    #[test]
    fn zero_network_outputs() {
        let w = NetworkWeights::zeros(OutputHead::Sbgp, InputTransform::Identity);
        let out = w.forward(&small_sample(1, 50)).unwrap();
        assert_eq!(out[0], 0.75);
        assert_eq!(out[6], 0.5);
        for v in &out[1..6] {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let w = NetworkWeights::zeros(OutputHead::Bgp, InputTransform::Identity);
        let out = w.forward(&small_sample(1, 50)).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(out[5], 0.0);
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let mut rng = RngState::seed_from_u64(3);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::Identity, &mut rng);
        let s = small_sample(2, 300);
        let mut rows = s.rows().to_vec();
        rows.reverse();
        rows.swap(3, 170);
        let t = Sample::new(rows);
        assert_eq!(w.forward(&s).unwrap(), w.forward(&t).unwrap());
    }

    #[test]
    fn duplicated_rows_keep_aggregate() {
        let mut rng = RngState::seed_from_u64(4);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::SignedLog1p, &mut rng);
        let s = small_sample(5, 100);
        let mut rows = s.rows().to_vec();
        rows.extend_from_slice(s.rows());
        let a = w.psi_aggregate(&PreparedInput::new(&s, w.input_transform, false).unwrap());
        let b = w.psi_aggregate(&PreparedInput::new(&Sample::new(rows), w.input_transform, false).unwrap());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn output_ranges_for_extreme_weights() {
        let mut rng = RngState::seed_from_u64(6);
        let mut w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::Identity, &mut rng);
        for l in w.layers_mut() {
            l.weight.mapv_inplace(|v| v * 50.0);
        }
        for seed in 0..5 {
            let out = w.forward(&small_sample(seed, 200)).unwrap();
            assert!(out[0] >= 0.5 && out[0] <= 1.0);
            assert!(out[6] >= 0.0 && out[6] <= 1.0);
            assert!(out[1..6].iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn summary_examples() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let s = summary_stats(&Sample::from_columns(&x, &x).unwrap()).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 0.06));
        let mut rng = RngState::seed_from_u64(8);
        let u = Sample::new((0..100_000).map(|_| [rng.open01(), rng.open01()]).collect());
        let s = summary_stats(&u).unwrap();
        for (v, q) in s.iter().zip(SUMMARY_LEVELS) {
            assert!((v - (1.0 - q)).abs() < 0.02);
        }
    }

    #[test]
    fn loss_examples() {
        let theta = [0.8, 0.2, 0.3, 10.0, 20.0, 0.5, 0.5];
        assert_eq!(loss(&theta, &theta, Some(0.6), &spec(0.0)), 0.0);
        let mut hat = theta;
        hat[0] += 0.1;
        let unit = LossSpec {
            scale: vec![1.0; 7],
            lambda: 0.0,
        };
        assert!((loss(&theta, &hat, None, &unit) - 0.01).abs() < 1e-15);
        let classical = loss(&theta, &hat, Some(hat[0]), &spec(0.0));
        assert_eq!(loss(&theta, &hat, Some(hat[0]), &spec(0.5)), classical);
        assert!(loss(&theta, &hat, Some(0.7), &spec(0.5)) > classical);
    }

    fn perturbed_loss(
        w: &NetworkWeights,
        layer: usize,
        idx: (usize, usize),
        bias: bool,
        h: f64,
        data: &[(PreparedInput, Vec<f64>)],
        spec: &LossSpec,
    ) -> f64 {
        let mut w = w.clone();
        let l = w.layers_mut().nth(layer).unwrap();
        if bias {
            l.bias[idx.0] += h;
        } else {
            l.weight[idx] += h;
        }
        data.iter()
            .map(|(inp, t)| loss(t, &w.forward_prepared(inp), inp.eta_emp, spec))
            .sum::<f64>()
            / data.len() as f64
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngState::seed_from_u64(11);
        let w = NetworkWeights::new(OutputHead::Sbgp, InputTransform::SignedLog1p, &mut rng);
        let data: Vec<(PreparedInput, Vec<f64>)> = (0..3)
            .map(|i| {
                let s = small_sample(20 + i, 40);
                let inp = PreparedInput::new(&s, w.input_transform, true).unwrap();
                (inp, vec![0.7, 0.3, 0.25, 3.0, 2.0, 0.3, 0.6])
            })
            .collect();
        let sp = spec(0.5);
        let mut g = Gradient::zeros_like(&w);
        for (inp, t) in &data {
            g.add_assign(&loss_and_gradient(&w, inp, t, &sp).1);
        }
        g.scale(1.0 / data.len() as f64);
        let dims = w.layer_dims();
        let mut checked = 0;
        while checked < 30 {
            let layer = rng.int_inclusive(0, dims.len() - 1);
            let (i, o) = dims[layer];
            let bias = rng.bernoulli(0.2);
            let idx = (rng.int_inclusive(0, o - 1), rng.int_inclusive(0, i - 1));
            let analytic = if bias {
                g.layers[layer].bias[idx.0]
            } else {
                g.layers[layer].weight[idx]
            };
            let h = 1e-5;
            let num = (perturbed_loss(&w, layer, idx, bias, h, &data, &sp)
                - perturbed_loss(&w, layer, idx, bias, -h, &data, &sp))
                / (2.0 * h);
            if analytic.abs() < 1e-8 && num.abs() < 1e-8 {
                continue;
            }
            let rel = (analytic - num).abs() / analytic.abs().max(num.abs());
            assert!(rel < 1e-4, "layer {layer} {idx:?} bias={bias}: {analytic} vs {num}");
            checked += 1;
        }
    }

    #[test]
    fn zero_weights_give_finite_gradient() {
        let w = NetworkWeights::zeros(OutputHead::Sbgp, InputTransform::Identity);
        let inp = PreparedInput::new(&small_sample(1, 30), w.input_transform, true).unwrap();
        let (l, g) = loss_and_gradient(&w, &inp, &[0.7, 0.3, 0.25, 3.0, 2.0, 0.3, 0.6], &spec(0.5));
        assert!(l.is_finite() && g.norm().is_finite());
    }

    #[test]
    fn validate_rejects_wrong_shapes() {
        let mut w = NetworkWeights::zeros(OutputHead::Sbgp, InputTransform::Identity);
        assert!(w.validate().is_ok());
        w.phi[0] = Dense::zeros(135, 128);
        assert!(matches!(w.validate(), Err(Error::Structure(_))));
    }
}
