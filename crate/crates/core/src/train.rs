//! Minibatch gradient descent with row-norm projection.
//!
//! After every minibatch step each weight matrix has its rows rescaled to
//! norm at most `c`; biases are never projected. The unconstrained baselines
//! add an L1 (`λ·sign(W)`) or L2 (`2λW`) penalty gradient on the weights
//! instead.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::container::fmt_real;
use crate::error::{Error, Result};
use crate::linalg::project_rows_in_place;
use crate::net::{LabeledSample, MlpModel};
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "lowercase")]
pub enum Regularization {
    #[default]
    None,
    L1(f64),
    L2(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant {
        rate: f64,
    },
    /// `rate / (1 + decay·k)`
    InverseTime {
        rate: f64,
        decay: f64,
    },
}

impl StepSchedule {
    pub fn rate(&self, k: u64) -> f64 {
        match *self {
            StepSchedule::Constant { rate } => rate,
            StepSchedule::InverseTime { rate, decay } => rate / (1.0 + decay * k as f64),
        }
    }
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Constant { rate: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Row-norm bound; `None` trains unconstrained.
    pub c: Option<f64>,
    pub reg: Regularization,
    pub step: StepSchedule,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: None,
            reg: Regularization::None,
            step: StepSchedule::default(),
            batch_size: 64,
            max_epochs: 20,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn constrained(c: f64) -> Self {
        TrainConfig {
            c: Some(c),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(Error::param(format!("c must be > 0, got {c}")));
            }
            if self.reg != Regularization::None {
                return Err(Error::param(
                    "a run uses either the row-norm constraint or a penalty, not both",
                ));
            }
        }
        match self.reg {
            Regularization::L1(l) | Regularization::L2(l) if !(l > 0.0 && l.is_finite()) => {
                return Err(Error::param(format!(
                    "regularization weight must be > 0, got {l}"
                )));
            }
            _ => {}
        }
        let (rate, decay) = match self.step {
            StepSchedule::Constant { rate } => (rate, 0.0),
            StepSchedule::InverseTime { rate, decay } => (rate, decay),
        };
        if !(rate > 0.0 && rate.is_finite()) || !(decay >= 0.0) {
            return Err(Error::param("step size must be positive and finite"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::param("batch_size and max_epochs must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub max_row_norm: f64,
    pub layer_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub final_epoch: usize,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub steps: u64,
}

impl TrainReport {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc,max_row_norm\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.epoch,
                fmt_real(e.train_loss),
                fmt_real(e.train_acc),
                fmt_real(e.val_loss),
                fmt_real(e.val_acc),
                fmt_real(e.max_row_norm)
            );
        }
        out
    }
}

/// One projected gradient step at iteration `k`.
pub fn train_step(
    model: &mut MlpModel,
    batch: &[LabeledSample],
    cfg: &TrainConfig,
    k: u64,
) -> Result<()> {
    let grads = model.gradients(batch)?;
    for (l, g) in grads.iter().enumerate() {
        if !g.dw.is_finite() || g.db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in layer {} at step {k}",
                l + 1
            )));
        }
    }
    let rate = cfg.step.rate(k);
    for (l, g) in grads.into_iter().enumerate() {
        let w = &mut model.weights_mut()[l];
        let mut dw = g.dw;
        match cfg.reg {
            Regularization::None => {}
            Regularization::L1(lambda) => {
                for (d, &v) in dw.data_mut().iter_mut().zip(w.data()) {
                    *d += lambda * l1_subgradient(v);
                }
            }
            Regularization::L2(lambda) => {
                for (d, &v) in dw.data_mut().iter_mut().zip(w.data()) {
                    *d += 2.0 * lambda * v;
                }
            }
        }
        w.add_scaled(-rate, &dw)?;
        if let Some(c) = cfg.c {
            project_rows_in_place(w, c)?;
        }
        let b = &mut model.biases_mut()[l];
        for (bv, dv) in b.iter_mut().zip(g.db.iter()) {
            *bv -= rate * dv;
        }
    }
    Ok(())
}

fn l1_subgradient(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Trains with seeded shuffling and best-validation-accuracy early stopping.
pub fn train(
    model: MlpModel,
    train_set: &[LabeledSample],
    val_set: &[LabeledSample],
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    train_with_progress(model, train_set, val_set, cfg, |_| {})
}

pub fn train_with_progress(
    mut model: MlpModel,
    train_set: &[LabeledSample],
    val_set: &[LabeledSample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Empty("validation set".into()));
    }
    let mut rng = SeededRng::new(cfg.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport::default();
    let mut best: Option<(f64, MlpModel)> = None;
    let mut since_improved = 0usize;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i].clone()));
            train_step(&mut model, &batch, cfg, report.steps)?;
            report.steps += 1;
        }
        let layer_norms = model.layer_norms();
        let max_row_norm = layer_norms.iter().copied().fold(0.0, f64::max);
        if let Some(c) = cfg.c {
            if max_row_norm > c + 1e-12 {
                return Err(Error::Numeric(format!(
                    "row norm {max_row_norm} exceeds bound {c} after epoch {epoch}"
                )));
            }
        }
        let (train_loss, train_acc) = model.evaluate(train_set)?;
        let (val_loss, val_acc) = model.evaluate(val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
            max_row_norm,
            layer_norms,
        };
        on_epoch(&record);
        report.epochs.push(record);
        report.final_epoch = epoch;

        if best.as_ref().is_none_or(|(acc, _)| val_acc > *acc) {
            best = Some((val_acc, model.clone()));
            report.best_epoch = epoch;
            since_improved = 0;
        } else {
            since_improved += 1;
        }
        if since_improved >= cfg.patience {
            break;
        }
    }
    let (_, best_model) = best.expect("at least one epoch runs");
    Ok((best_model, report))
}
