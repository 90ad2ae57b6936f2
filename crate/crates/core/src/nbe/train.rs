//! Adam training on data simulated on the fly.

use log::{debug, info};
use ndarray::Zip;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::RngState;

use super::network::{
    loss_and_gradient, Gradient, InputTransform, LossSpec, NetworkWeights, PreparedInput,
};
use super::prior::SimulationPrior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub num_steps: usize,
    /// Weight of the `η` penalty; zero gives the classical loss.
    pub lambda: f64,
    /// Diagonal of `D`; `None` uses the prior's standard deviations.
    pub scale_matrix_diag: Option<Vec<f64>>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_size: usize,
    pub validation_every: usize,
    /// Evaluations without improvement before stopping; zero disables.
    pub patience: usize,
    #[serde(with = "transform_name")]
    pub input_transform: InputTransform,
}

mod transform_name {
    use super::InputTransform;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &InputTransform, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(t.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<InputTransform, D::Error> {
        let s = String::deserialize(d)?;
        InputTransform::from_name(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown input transform {s:?}")))
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 32,
            num_steps: 20_000,
            lambda: 0.0,
            scale_matrix_diag: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_size: 256,
            validation_every: 200,
            patience: 20,
            input_transform: InputTransform::SignedLog1p,
        }
    }
}

impl TrainConfig {
    pub fn penalized() -> Self {
        Self {
            lambda: 0.5,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return domain("learning_rate must be > 0");
        }
        if self.batch_size == 0 {
            return domain("batch_size must be >= 1");
        }
        if !(self.lambda >= 0.0) {
            return domain("lambda must be >= 0");
        }
        if let Some(d) = &self.scale_matrix_diag {
            if d.len() != dim || d.iter().any(|v| !(*v > 0.0)) {
                return domain(format!("scale_matrix_diag must hold {dim} positive values"));
            }
        }
        if self.validation_every == 0 {
            return domain("validation_every must be >= 1");
        }
        Ok(())
    }

    pub fn loss_spec(&self, prior: &dyn SimulationPrior) -> LossSpec {
        LossSpec {
            scale: self
                .scale_matrix_diag
                .clone()
                .unwrap_or_else(|| prior.scale_diag()),
            lambda: self.lambda,
        }
    }
}

/// Adam state for every weight.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Gradient,
    v: Gradient,
    t: u64,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(w: &NetworkWeights, cfg: &TrainConfig) -> Self {
        Self {
            m: Gradient::zeros_like(w),
            v: Gradient::zeros_like(w),
            t: 0,
            lr: cfg.learning_rate,
            b1: cfg.beta1,
            b2: cfg.beta2,
            eps: cfg.epsilon,
        }
    }

    pub fn step(&mut self, w: &mut NetworkWeights, g: &Gradient) {
        self.t += 1;
        let (b1, b2, eps) = (self.b1, self.b2, self.eps);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.lr;
        let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (((l, gl), ml), vl) in w
            .layers_mut()
            .zip(&g.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            Zip::from(&mut l.weight)
                .and(&gl.weight)
                .and(&mut ml.weight)
                .and(&mut vl.weight)
                .for_each(update);
            Zip::from(&mut l.bias)
                .and(&gl.bias)
                .and(&mut ml.bias)
                .and(&mut vl.bias)
                .for_each(update);
        }
    }
}

/// A simulated dataset ready for the network.
#[derive(Debug, Clone)]
pub struct Example {
    pub theta: Vec<f64>,
    pub input: PreparedInput,
}

fn simulate_example(
    prior: &dyn SimulationPrior,
    transform: InputTransform,
    with_eta: bool,
    rng: &mut RngState,
) -> Result<(Example, usize)> {
    let d = prior.draw(rng)?;
    let input = PreparedInput::new(&d.sample, transform, with_eta)?;
    Ok((
        Example {
            theta: d.theta,
            input,
        },
        d.redraws,
    ))
}

/// Draws `count` examples, example `i` from substream `i` of `rng`.
pub fn simulate_examples(
    prior: &dyn SimulationPrior,
    transform: InputTransform,
    with_eta: bool,
    count: usize,
    rng: &RngState,
) -> Result<(Vec<Example>, usize)> {
    let out: Vec<Result<(Example, usize)>> = (0..count)
        .into_par_iter()
        .map(|i| simulate_example(prior, transform, with_eta, &mut rng.substream(i as u64)))
        .collect();
    let mut examples = Vec::with_capacity(count);
    let mut redraws = 0;
    for r in out {
        let (e, k) = r?;
        examples.push(e);
        redraws += k;
    }
    Ok((examples, redraws))
}

/// Mean loss over a set of examples.
pub fn risk(w: &NetworkWeights, examples: &[Example], spec: &LossSpec) -> f64 {
    let losses: Vec<f64> = examples
        .par_iter()
        .map(|e| {
            let h = w.forward_prepared(&e.input);
            super::network::loss(&e.theta, &h, e.input.eta_emp, spec)
        })
        .collect();
    losses.iter().sum::<f64>() / examples.len() as f64
}

/// Mean batch loss and gradient, reduced in a fixed order.
pub fn batch_gradient(
    w: &NetworkWeights,
    batch: &[Example],
    spec: &LossSpec,
) -> (f64, Gradient) {
    let parts: Vec<(f64, Gradient)> = batch
        .par_iter()
        .map(|e| loss_and_gradient(w, &e.input, &e.theta, spec))
        .collect();
    let mut g = Gradient::zeros_like(w);
    let mut l = 0.0;
    for (li, gi) in &parts {
        l += li;
        g.add_assign(gi);
    }
    let inv = 1.0 / batch.len() as f64;
    g.scale(inv);
    (l * inv, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub step: usize,
    pub risk: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Weights with the lowest validation risk seen.
    pub weights: NetworkWeights,
    pub validation: Vec<ValidationPoint>,
    pub steps_run: usize,
    pub redraws: usize,
    pub stopped_early: bool,
}

/// Trains from a fresh initialisation drawn from `rng`.
pub fn train(
    prior: &dyn SimulationPrior,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<TrainReport> {
    let init = NetworkWeights::new(prior.head(), cfg.input_transform, rng);
    train_from(init, prior, cfg, rng)
}

/// Continues training `weights`.
pub fn train_from(
    mut weights: NetworkWeights,
    prior: &dyn SimulationPrior,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<TrainReport> {
    cfg.validate(prior.head().dim())?;
    if weights.head != prior.head() {
        return Err(Error::Structure("network head does not match the prior".into()));
    }
    weights.input_transform = cfg.input_transform;
    weights.loss_lambda = cfg.lambda;
    let spec = cfg.loss_spec(prior);
    let with_eta = cfg.lambda != 0.0;
    let mut redraws = 0;
    let val_rng = rng.split();
    let step_rng = rng.split();

    if cfg.num_steps == 0 {
        return Ok(TrainReport {
            weights,
            validation: Vec::new(),
            steps_run: 0,
            redraws,
            stopped_early: false,
        });
    }

    let (val_set, r) =
        simulate_examples(prior, cfg.input_transform, with_eta, cfg.validation_size, &val_rng)?;
    redraws += r;
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, weights.clone());
    let mut stale = 0;
    let mut evaluate = |w: &NetworkWeights, step: usize| -> Result<bool> {
        if val_set.is_empty() {
            return Ok(false);
        }
        let r = risk(w, &val_set, &spec);
        if !r.is_finite() {
            return Err(Error::Divergence {
                step,
                reason: format!("validation risk is {r}"),
            });
        }
        info!("step {step}: validation risk {r:.5}");
        trace.push(ValidationPoint { step, risk: r });
        if r < best.0 {
            best = (r, w.clone());
            stale = 0;
        } else {
            stale += 1;
        }
        Ok(cfg.patience > 0 && stale >= cfg.patience)
    };
    evaluate(&weights, 0)?;

    let mut adam = Adam::new(&weights, cfg);
    let mut stopped_early = false;
    let mut steps_run = 0;
    for step in 1..=cfg.num_steps {
        let (batch, r) = simulate_examples(
            prior,
            cfg.input_transform,
            with_eta,
            cfg.batch_size,
            &step_rng.substream(step as u64),
        )?;
        redraws += r;
        let (l, g) = batch_gradient(&weights, &batch, &spec);
        if !l.is_finite() || !g.norm().is_finite() {
            return Err(Error::Divergence {
                step,
                reason: format!("batch loss {l}, gradient norm {}", g.norm()),
            });
        }
        adam.step(&mut weights, &g);
        weights.trained_steps += 1;
        steps_run = step;
        if step % 100 == 0 {
            debug!("step {step}: batch loss {l:.5}");
        }
        if step % cfg.validation_every == 0 || step == cfg.num_steps {
            if evaluate(&weights, step)? {
                stopped_early = true;
                break;
            }
        }
    }
    let weights = if val_set.is_empty() { weights } else { best.1 };
    info!("training finished after {steps_run} steps, {redraws} datasets redrawn");
    Ok(TrainReport {
        weights,
        validation: trace,
        steps_run,
        redraws,
        stopped_early,
    })
}
