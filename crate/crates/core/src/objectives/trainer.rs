//! A small deterministic trainer whose best validation loss serves as a
//! hyperparameter-tuning fitness.
//!
//! The model is a one-hidden-layer network (ReLU hidden units, inverted
//! dropout, sigmoid output) fitted by mini-batch gradient descent with a
//! step-decay learning rate and early stopping, on two Gaussian blobs.
//! Batch size, dropout rate and hidden width come from the parameter vector
//! under evaluation. Everything is seeded, so identical inputs give a
//! bit-identical loss.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsa::Sense;
use crate::objectives::{EvalError, Objective};
use crate::random::{derive_seed, seeded, Stream, UnitDraw};
use crate::space::{ParamValue, ParamVector};

/// `1 / (1 + e^-z)`, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// `lr0 * drop^floor(epoch / period)`.
pub fn step_decay_lr(lr0: f64, epoch: usize, drop: f64, period: usize) -> f64 {
    lr0 * drop.powi((epoch / period.max(1)) as i32)
}

/// Binary cross-entropy of a sigmoid output, taken directly from the logit.
pub fn bce_with_logit(z: f64, label: f64) -> f64 {
    z.max(0.0) - z * label + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyTrainerConfig {
    pub dataset_seed: u64,
    pub samples_per_class: usize,
    /// Maximum number of epochs.
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub lr0: f64,
    pub lr_drop: f64,
    pub lr_period: usize,
    pub validation_fraction: f64,
}

impl Default for ToyTrainerConfig {
    fn default() -> Self {
        Self {
            dataset_seed: 2020,
            samples_per_class: 200,
            epochs: 10,
            patience: 7,
            lr0: 0.01,
            lr_drop: 0.5,
            lr_period: 10,
            validation_fraction: 0.3,
        }
    }
}

impl ToyTrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.samples_per_class < 2 {
            return fail("samples_per_class must be at least 2".into());
        }
        if self.epochs < 1 || self.patience < 1 || self.lr_period < 1 {
            return fail("epochs, patience and lr_period must be positive".into());
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return fail(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(self.lr_drop > 0.0 && self.lr_drop < 1.0) {
            return fail(format!("lr_drop must lie in (0, 1), got {}", self.lr_drop));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        let v = self.validation_per_class();
        if v < 1 || v >= self.samples_per_class {
            return fail(format!(
                "validation_fraction {} leaves {v} of {} samples per class for validation",
                self.validation_fraction, self.samples_per_class
            ));
        }
        Ok(())
    }

    fn validation_per_class(&self) -> usize {
        (self.validation_fraction * self.samples_per_class as f64).round() as usize
    }
}

/// Labelled 2-D points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<[f64; 2]>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Two unit-covariance blobs centred at (-1,-1) (label 0) and (1,1) (label 1),
/// split per class into training and validation sets.
pub fn make_blobs(cfg: &ToyTrainerConfig) -> (Dataset, Dataset) {
    let mut rng = seeded(cfg.dataset_seed);
    let n_val = cfg.validation_per_class();
    let mut train = Dataset {
        inputs: Vec::new(),
        labels: Vec::new(),
    };
    let mut val = Dataset {
        inputs: Vec::new(),
        labels: Vec::new(),
    };
    for (label, centre) in [(0.0, -1.0), (1.0, 1.0)] {
        for k in 0..cfg.samples_per_class {
            let x0: f64 = rng.sample(StandardNormal);
            let x1: f64 = rng.sample(StandardNormal);
            let set = if k < n_val { &mut val } else { &mut train };
            set.inputs.push([centre + x0, centre + x1]);
            set.labels.push(label);
        }
    }
    (train, val)
}

/// Hidden-layer dropout masks for one batch, already scaled by `1 / keep`.
pub type DropoutMasks = Vec<Vec<f64>>;

/// Parameters of the 2 -> hidden -> 1 network.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// Row `k` holds the two input weights of hidden unit `k`.
    pub w1: Vec<[f64; 2]>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Mlp {
    /// Weights uniform in [-0.5, 0.5].
    pub fn init<R: UnitDraw + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        let mut u = || rng.unit() - 0.5;
        let w1 = (0..hidden).map(|_| [u(), u()]).collect();
        let b1 = (0..hidden).map(|_| u()).collect();
        let w2 = (0..hidden).map(|_| u()).collect();
        let b2 = u();
        Self { w1, b1, w2, b2 }
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        4 * self.hidden() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat layout: w1 (row-major), b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.w1.iter().flat_map(|r| r.iter().copied()));
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(hidden: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), 4 * hidden + 1, "flat parameter length");
        let (w1, rest) = flat.split_at(2 * hidden);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, rest) = rest.split_at(hidden);
        Self {
            w1: w1.chunks(2).map(|c| [c[0], c[1]]).collect(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: rest[0],
        }
    }

    /// Output logit for one input, with an optional scaled dropout mask.
    pub fn logit(&self, x: &[f64; 2], mask: Option<&[f64]>) -> f64 {
        let mut z = self.b2;
        for k in 0..self.hidden() {
            let mut h = relu(self.w1[k][0] * x[0] + self.w1[k][1] * x[1] + self.b1[k]);
            if let Some(m) = mask {
                h *= m[k];
            }
            z += self.w2[k] * h;
        }
        z
    }

    pub fn predict(&self, x: &[f64; 2]) -> f64 {
        sigmoid(self.logit(x, None))
    }

    /// Mean binary cross-entropy over the given sample indices.
    pub fn mean_loss(&self, data: &Dataset, idx: &[usize], masks: Option<&DropoutMasks>) -> f64 {
        let total: f64 = idx
            .iter()
            .enumerate()
            .map(|(b, &i)| {
                let m = masks.map(|m| m[b].as_slice());
                bce_with_logit(self.logit(&data.inputs[i], m), data.labels[i])
            })
            .sum();
        total / idx.len() as f64
    }

    /// Mean loss and its gradient (flat layout) by backpropagation.
    pub fn loss_and_grad(
        &self,
        data: &Dataset,
        idx: &[usize],
        masks: Option<&DropoutMasks>,
    ) -> (f64, Vec<f64>) {
        let h = self.hidden();
        let mut grad = vec![0.0; self.len()];
        let mut loss = 0.0;
        let mut pre = vec![0.0; h];
        let mut act = vec![0.0; h];
        let scale = 1.0 / idx.len() as f64;
        for (b, &i) in idx.iter().enumerate() {
            let x = &data.inputs[i];
            let y = data.labels[i];
            let mask = masks.map(|m| m[b].as_slice());
            let mut z = self.b2;
            for k in 0..h {
                pre[k] = self.w1[k][0] * x[0] + self.w1[k][1] * x[1] + self.b1[k];
                act[k] = relu(pre[k]) * mask.map_or(1.0, |m| m[k]);
                z += self.w2[k] * act[k];
            }
            loss += bce_with_logit(z, y);
            let dz = (sigmoid(z) - y) * scale;
            for k in 0..h {
                grad[3 * h + k] += dz * act[k];
                if pre[k] > 0.0 {
                    let dpre = dz * self.w2[k] * mask.map_or(1.0, |m| m[k]);
                    grad[2 * k] += dpre * x[0];
                    grad[2 * k + 1] += dpre * x[1];
                    grad[2 * h + k] += dpre;
                }
            }
            grad[4 * h] += dz;
        }
        (loss * scale, grad)
    }

    fn apply(&mut self, grad: &[f64], lr: f64) {
        let h = self.hidden();
        for k in 0..h {
            self.w1[k][0] -= lr * grad[2 * k];
            self.w1[k][1] -= lr * grad[2 * k + 1];
            self.b1[k] -= lr * grad[2 * h + k];
            self.w2[k] -= lr * grad[3 * h + k];
        }
        self.b2 -= lr * grad[4 * h];
    }
}

/// Hyperparameters read from a parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerParams {
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub neurons: usize,
}

impl TrainerParams {
    pub fn from_params(p: &ParamVector) -> Result<Self, EvalError> {
        let whole = |name: &str| -> Result<usize, EvalError> {
            match p.get(name) {
                Some(ParamValue::Int(v)) if v >= 1 => Ok(v as usize),
                Some(ParamValue::Real(v)) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
                _ => Err(EvalError::BadParams(name.into())),
            }
        };
        let dropout_rate = match p.get("dropout_rate") {
            Some(v) if (0.0..1.0).contains(&v.as_f64()) => v.as_f64(),
            _ => return Err(EvalError::BadParams("dropout_rate".into())),
        };
        Ok(Self {
            batch_size: whole("batch_size")?,
            dropout_rate,
            neurons: whole("neurons")?,
        })
    }

    fn seed_words(&self) -> [u64; 3] {
        [
            self.batch_size as u64,
            self.dropout_rate.to_bits(),
            self.neurons as u64,
        ]
    }
}

/// Per-epoch record of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Validation loss of the initial weights.
    pub initial_loss: f64,
    /// Validation loss after each completed epoch.
    pub val_losses: Vec<f64>,
    pub best_loss: f64,
    /// Epoch (1-based) that produced `best_loss`, 0 for the initial weights.
    pub best_epoch: usize,
}

impl TrainingTrace {
    pub fn epochs_run(&self) -> usize {
        self.val_losses.len()
    }
}

/// The trainer objective; the dataset is built once at construction.
#[derive(Debug, Clone)]
pub struct ToyTrainer {
    cfg: ToyTrainerConfig,
    train: Dataset,
    val: Dataset,
}

impl ToyTrainer {
    pub fn new(cfg: ToyTrainerConfig) -> Result<Self> {
        cfg.validate()?;
        let (train, val) = make_blobs(&cfg);
        Ok(Self { cfg, train, val })
    }

    pub fn config(&self) -> &ToyTrainerConfig {
        &self.cfg
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn validation_set(&self) -> &Dataset {
        &self.val
    }

    /// The freshly initialized network a run with `params` starts from.
    pub fn initial_network(&self, params: &TrainerParams) -> Mlp {
        let seed = derive_seed(self.cfg.dataset_seed, params.seed_words());
        Mlp::init(params.neurons, &mut seeded(seed))
    }

    pub fn validation_loss(&self, net: &Mlp) -> f64 {
        let idx: Vec<usize> = (0..self.val.len()).collect();
        net.mean_loss(&self.val, &idx, None)
    }

    /// Trains from the seeded initial network and records every epoch.
    pub fn train(&self, params: &TrainerParams) -> Result<TrainingTrace, EvalError> {
        let cfg = &self.cfg;
        let base = derive_seed(self.cfg.dataset_seed, params.seed_words());
        let mut net = self.initial_network(params);
        let mut shuffle_rng: Stream = seeded(derive_seed(base, [1]));
        let mut dropout_rng: Stream = seeded(derive_seed(base, [2]));
        let keep = 1.0 - params.dropout_rate;
        let hidden = params.neurons;

        let initial_loss = self.validation_loss(&net);
        if !initial_loss.is_finite() {
            return Err(EvalError::Diverged(format!("initial loss {initial_loss}")));
        }
        let mut trace = TrainingTrace {
            initial_loss,
            val_losses: Vec::with_capacity(cfg.epochs),
            best_loss: initial_loss,
            best_epoch: 0,
        };

        let mut order: Vec<usize> = (0..self.train.len()).collect();
        let mut masks: DropoutMasks = Vec::new();
        for epoch in 0..cfg.epochs {
            let lr = step_decay_lr(cfg.lr0, epoch, cfg.lr_drop, cfg.lr_period);
            order.shuffle(&mut shuffle_rng);
            for batch in order.chunks(params.batch_size) {
                masks.clear();
                for _ in batch {
                    masks.push(
                        (0..hidden)
                            .map(|_| {
                                if dropout_rng.unit() < params.dropout_rate {
                                    0.0
                                } else {
                                    1.0 / keep
                                }
                            })
                            .collect(),
                    );
                }
                let (_, grad) = net.loss_and_grad(&self.train, batch, Some(&masks));
                net.apply(&grad, lr);
            }

            let v = self.validation_loss(&net);
            if !v.is_finite() {
                return Err(EvalError::Diverged(format!(
                    "validation loss {v} at epoch {}",
                    epoch + 1
                )));
            }
            trace.val_losses.push(v);
            if v < trace.best_loss {
                trace.best_loss = v;
                trace.best_epoch = epoch + 1;
            }
            if epoch + 1 - trace.best_epoch >= cfg.patience {
                break;
            }
        }
        Ok(trace)
    }
}

impl Objective for ToyTrainer {
    fn name(&self) -> &str {
        "toy-trainer"
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, params: &ParamVector) -> Result<f64, EvalError> {
        let p = TrainerParams::from_params(params)?;
        self.train(&p).map(|t| t.best_loss)
    }
}
