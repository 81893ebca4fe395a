//! Mini-batch training, accuracy scoring and metric logging.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{init_params, ModelParams, ModelShape, Network, SequenceBatch, Variant, DEFAULT_CONV_KERNEL};
use crate::error::{Error, Result};
use crate::graph::{HostGraph, DEFAULT_CHEB_ORDER};
use crate::numerics::{Adam, AdamConfig, Matrix, PROB_FLOOR};
use crate::pipeline::{sliding_windows, split, EventDataset, WindowBatch, NO_EVENT};

/// Windows per forward pass during evaluation.
const EVAL_CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    /// Window length; `s − 1` frames are input.
    pub s: usize,
    pub d_h: usize,
    /// Chebyshev order `K`.
    pub order: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub exclude_zero_event: bool,
    pub conv_kernel: usize,
    /// Reshuffle training windows every epoch when set.
    pub shuffle_seed: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Step,
            s: 10,
            d_h: 128,
            order: DEFAULT_CHEB_ORDER,
            lr: 1e-3,
            weight_decay: 1.5e-3,
            batch_size: 16,
            epochs: 100,
            seed: 0,
            train_fraction: 0.8,
            exclude_zero_event: false,
            conv_kernel: DEFAULT_CONV_KERNEL,
            shuffle_seed: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s", self.s),
            ("d_h", self.d_h),
            ("K", self.order),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if self.s < 2 {
            return Err(Error::invalid("window length s must be at least 2"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(format!("weight_decay must be non-negative, got {}", self.weight_decay)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        Ok(())
    }

    pub fn shape(&self, d: usize) -> ModelShape {
        ModelShape::new(self.variant, d, self.d_h, d, self.order).with_kernel(self.conv_kernel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Vec<EpochMetrics>,
    /// Optimizer updates applied.
    pub steps: u64,
}

impl TrainOutcome {
    pub fn final_test_acc(&self) -> f64 {
        self.metrics.last().map_or(f64::NAN, |m| m.test_acc)
    }
}

/// `−(1/n) Σ ln max(p[i, target_i], 1e-12)`.
pub fn cross_entropy(probs: &Matrix, targets: &[usize]) -> Result<f64> {
    if probs.rows() != targets.len() || targets.is_empty() {
        return Err(Error::Shape {
            op: "cross_entropy",
            left: probs.shape(),
            right: (targets.len(), 1),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= probs.cols()) {
        return Err(Error::invalid(format!("target class {t} out of range for {} classes", probs.cols())));
    }
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(r, &t)| -probs.get(r, t).max(PROB_FLOOR).ln())
        .sum();
    Ok(total / targets.len() as f64)
}

/// Fraction of counted positions where `preds` equals `targets`.
pub fn accuracy(preds: &[usize], targets: &[usize], mask: Option<&[bool]>) -> Result<f64> {
    let (hits, counted) = score(preds, targets, mask)?;
    if counted == 0 {
        return Err(Error::NoTargets);
    }
    Ok(hits as f64 / counted as f64)
}

fn score(preds: &[usize], targets: &[usize], mask: Option<&[bool]>) -> Result<(usize, usize)> {
    if preds.len() != targets.len() || mask.is_some_and(|m| m.len() != targets.len()) {
        return Err(Error::invalid(format!(
            "accuracy: {} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut hits = 0;
    let mut counted = 0;
    for (i, (p, t)) in preds.iter().zip(targets).enumerate() {
        if mask.is_none_or(|m| m[i]) {
            counted += 1;
            hits += usize::from(p == t);
        }
    }
    Ok((hits, counted))
}

/// Mask counting every position whose target is not the no-event class.
pub fn nonzero_mask(targets: &[usize]) -> Vec<bool> {
    targets.iter().map(|&t| t != NO_EVENT).collect()
}

fn argmax_rows(probs: &Matrix) -> Vec<usize> {
    (0..probs.rows()).map(|r| probs.argmax_row(r)).collect()
}

fn batch_inputs(windows: &WindowBatch<'_>, d: usize) -> Result<(SequenceBatch, Vec<usize>)> {
    let inputs: Vec<&[Vec<usize>]> = (0..windows.len()).map(|i| windows.input(i)).collect();
    let batch = SequenceBatch::one_hot(&inputs, d)?;
    let targets = (0..windows.len()).flat_map(|i| windows.target(i).iter().copied()).collect();
    Ok((batch, targets))
}

/// Argmax class per (window, host), window-major.
pub fn predict_windows(network: &Network, params: &ModelParams, windows: &WindowBatch<'_>) -> Result<Vec<usize>> {
    let d = params.shape().d;
    let chunks: Vec<Result<Vec<usize>>> = (0..windows.len())
        .step_by(EVAL_CHUNK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let chunk = windows.slice(start..(start + EVAL_CHUNK).min(windows.len()));
            let (batch, _) = batch_inputs(&chunk, d)?;
            Ok(argmax_rows(&network.predict(params, &batch)?))
        })
        .collect();
    let mut preds = Vec::with_capacity(windows.len() * network.hosts());
    for chunk in chunks {
        preds.extend(chunk?);
    }
    Ok(preds)
}

/// Test accuracy of frozen parameters over every (window, host) pair.
pub fn evaluate(
    params: &ModelParams,
    graph: &HostGraph,
    windows: &WindowBatch<'_>,
    exclude_zero_event: bool,
) -> Result<f64> {
    let network = Network::new(*params.shape(), graph)?;
    evaluate_with(&network, params, windows, exclude_zero_event)
}

fn evaluate_with(
    network: &Network,
    params: &ModelParams,
    windows: &WindowBatch<'_>,
    exclude_zero_event: bool,
) -> Result<f64> {
    let preds = predict_windows(network, params, windows)?;
    let targets: Vec<usize> = (0..windows.len()).flat_map(|i| windows.target(i).iter().copied()).collect();
    let mask = exclude_zero_event.then(|| nonzero_mask(&targets));
    accuracy(&preds, &targets, mask.as_deref())
}

/// Windows the dataset at `config.s`, splits chronologically and trains.
pub fn train(dataset: &EventDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let windows = sliding_windows(dataset, config.s)?;
    let (train_set, test_set) = split(&windows, config.train_fraction)?;
    train_windows(&dataset.graph, dataset.d(), &train_set, Some(&test_set), config)
}

/// Trains on `train_set`; `test_acc` is NaN when no test set is given.
pub fn train_windows(
    graph: &HostGraph,
    d: usize,
    train_set: &WindowBatch<'_>,
    test_set: Option<&WindowBatch<'_>>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("no training windows"));
    }
    let shape = config.shape(d);
    let network = Network::new(shape, graph)?;
    let mut params = init_params(shape, config.seed)?;
    let mut adam = Adam::new(AdamConfig::new(config.lr, config.weight_decay));
    let mut shuffler = config.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if let Some(rng) = shuffler.as_mut() {
            order.shuffle(rng);
        }
        let epoch_set = train_set.select(&order);
        let mut loss_sum = 0.0;
        let mut rows = 0usize;
        let (mut hits, mut counted) = (0usize, 0usize);
        for (b, start) in (0..epoch_set.len()).step_by(config.batch_size).enumerate() {
            let chunk = epoch_set.slice(start..(start + config.batch_size).min(epoch_set.len()));
            let (batch, targets) = batch_inputs(&chunk, d)?;
            let out = network.loss_and_gradients(&params, &batch, &targets)?;
            if !out.loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            loss_sum += out.loss * targets.len() as f64;
            rows += targets.len();
            let preds = argmax_rows(&out.probabilities);
            let mask = config.exclude_zero_event.then(|| nonzero_mask(&targets));
            let (h, c) = score(&preds, &targets, mask.as_deref())?;
            hits += h;
            counted += c;

            let mut update: Vec<(&str, &mut Matrix, &Matrix)> = crate::cells::TENSOR_NAMES
                .iter()
                .copied()
                .zip(params.tensors_mut().iter_mut())
                .zip(out.gradients.iter())
                .map(|((n, p), g)| (n, p, g))
                .collect();
            adam.step(&mut update)?;
        }
        if counted == 0 {
            return Err(Error::NoTargets);
        }
        let test_acc = match test_set {
            Some(test) => evaluate_with(&network, &params, test, config.exclude_zero_event)?,
            None => f64::NAN,
        };
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / rows as f64,
            train_acc: hits as f64 / counted as f64,
            test_acc,
        });
    }
    Ok(TrainOutcome {
        params,
        metrics,
        steps: adam.steps(),
    })
}

/// Metrics as CSV text with header `epoch,train_loss,train_acc,test_acc`.
pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,test_acc\n");
    for m in metrics {
        writeln!(out, "{},{:.8},{:.6},{:.6}", m.epoch, m.train_loss, m.train_acc, m.test_acc).unwrap();
    }
    out
}

pub fn write_metrics_csv(path: &Path, metrics: &[EpochMetrics]) -> Result<()> {
    fs::write(path, metrics_csv(metrics)).map_err(|e| Error::io(path, e))
}
