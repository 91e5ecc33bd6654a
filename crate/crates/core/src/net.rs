//! ReLU multilayer perceptrons: evaluation, losses and exact gradients.
//!
//! Layer `l` (0-based here) maps `x_l = relu(W_l x_{l-1} + b_l)`; the last
//! layer has no ReLU and feeds the output head instead. The ReLU derivative
//! at exactly zero is taken as 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Identity,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Square,
    #[serde(alias = "cross-entropy", alias = "cross_entropy")]
    CrossEntropy,
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Head::Identity => "identity",
            Head::Softmax => "softmax",
        })
    }
}

impl FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Head::Identity),
            "softmax" => Ok(Head::Softmax),
            _ => Err(Error::param(format!("unknown head '{s}'"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Square => "square",
            LossKind::CrossEntropy => "crossentropy",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(LossKind::Square),
            "crossentropy" | "cross-entropy" | "cross_entropy" => Ok(LossKind::CrossEntropy),
            _ => Err(Error::param(format!("unknown loss '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vector,
    pub label: usize,
}

impl LabeledSample {
    pub fn new(x: impl Into<Vector>, label: usize) -> Self {
        LabeledSample { x: x.into(), label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    dims: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vector>,
    head: Head,
    loss: LossKind,
}

/// Per-layer values from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub preacts: Vec<Vector>,
    /// `acts[l] = relu(preacts[l])` for hidden layers; the last entry equals the logits.
    pub acts: Vec<Vector>,
    pub logits: Vector,
    pub head_out: Vector,
}

/// Gradient of the mean batch loss for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub dw: Matrix,
    pub db: Vector,
}

impl MlpModel {
    pub fn new(
        dims: Vec<usize>,
        weights: Vec<Matrix>,
        biases: Vec<Vector>,
        head: Head,
        loss: LossKind,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::dim("a model needs at least input and output sizes"));
        }
        if dims.contains(&0) {
            return Err(Error::dim(format!("zero-width layer in {dims:?}")));
        }
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::dim(format!(
                "{} weight and {} bias arrays for {layers} layers",
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..layers {
            if weights[l].shape() != (dims[l + 1], dims[l]) {
                return Err(Error::dim(format!(
                    "layer {} weight is {:?}, expected {:?}",
                    l + 1,
                    weights[l].shape(),
                    (dims[l + 1], dims[l])
                )));
            }
            if biases[l].len() != dims[l + 1] {
                return Err(Error::dim(format!(
                    "layer {} bias has length {}, expected {}",
                    l + 1,
                    biases[l].len(),
                    dims[l + 1]
                )));
            }
        }
        if loss == LossKind::CrossEntropy && head != Head::Softmax {
            return Err(Error::param("crossentropy loss requires a softmax head"));
        }
        Ok(MlpModel {
            dims,
            weights,
            biases,
            head,
            loss,
        })
    }

    pub fn zeros(dims: &[usize], head: Head, loss: LossKind) -> Result<Self> {
        let weights = dims.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect();
        let biases = dims[1..].iter().map(|&n| Vector::zeros(n)).collect();
        MlpModel::new(dims.to_vec(), weights, biases, head, loss)
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(dims: &[usize], head: Head, loss: LossKind, seed: u64) -> Result<Self> {
        let mut model = MlpModel::zeros(dims, head, loss)?;
        let mut rng = SeededRng::new(seed, Stream::Init);
        for w in &mut model.weights {
            let bound = 1.0 / (w.cols() as f64).sqrt();
            for v in w.data_mut() {
                *v = rng.uniform_in(-bound, bound);
            }
        }
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of weight layers, `L`.
    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Widest hidden layer (1 when there is none); the `n` of the layer-wise bounds.
    pub fn hidden_width(&self) -> usize {
        self.dims[1..self.dims.len() - 1]
            .iter()
            .copied()
            .max()
            .unwrap_or(1)
    }

    pub fn hidden_units(&self) -> usize {
        self.dims[1..self.dims.len() - 1].iter().sum()
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vector] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vector] {
        &mut self.biases
    }

    /// Largest row norm of each weight matrix.
    pub fn layer_norms(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| crate::linalg::l2_inf_norm(w).unwrap_or(0.0))
            .collect()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.layer_norms().into_iter().fold(0.0, f64::max)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims[0] {
            return Err(Error::dim(format!(
                "input of length {} for a model with {} inputs",
                x.len(),
                self.dims[0]
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let last = self.depth() - 1;
        let mut preacts = Vec::with_capacity(self.depth());
        let mut acts: Vec<Vector> = Vec::with_capacity(self.depth());
        for l in 0..self.depth() {
            let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
            let mut z = self.weights[l].matvec(input)?;
            for (zi, bi) in z.iter_mut().zip(self.biases[l].iter()) {
                *zi += bi;
            }
            let a = if l == last {
                z.clone()
            } else {
                Vector::from(z.iter().map(|&v| relu(v)).collect::<Vec<_>>())
            };
            preacts.push(z);
            acts.push(a);
        }
        let logits = acts[last].clone();
        let head_out = match self.head {
            Head::Identity => logits.clone(),
            Head::Softmax => Vector::from(softmax(&logits)),
        };
        Ok(ForwardTrace {
            preacts,
            acts,
            logits,
            head_out,
        })
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vector> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for l in 0..self.depth() {
            let mut z = self.weights[l].matvec(&cur)?;
            for (zi, bi) in z.iter_mut().zip(self.biases[l].iter()) {
                *zi += bi;
            }
            if l + 1 < self.depth() {
                z.iter_mut().for_each(|v| *v = relu(*v));
            }
            cur = z.into_inner();
        }
        Ok(Vector::from(cur))
    }

    /// Logits for every row of `xs` (one sample per row).
    pub fn logits_batch(&self, xs: &Matrix) -> Result<Matrix> {
        Ok(self.forward_batch(xs)?.pop().unwrap())
    }

    /// Row-batched forward pass. Returns pre-activations of every layer.
    fn forward_batch(&self, xs: &Matrix) -> Result<Vec<Matrix>> {
        if xs.cols() != self.dims[0] {
            return Err(Error::dim(format!(
                "batch with {} columns for a model with {} inputs",
                xs.cols(),
                self.dims[0]
            )));
        }
        let mut pre = Vec::with_capacity(self.depth());
        let mut act: Option<Matrix> = None;
        for l in 0..self.depth() {
            let input = act.as_ref().unwrap_or(xs);
            let mut z = input.matmul(&self.weights[l].transpose())?;
            let n = z.cols();
            for row in z.data_mut().chunks_exact_mut(n) {
                for (v, b) in row.iter_mut().zip(self.biases[l].iter()) {
                    *v += b;
                }
            }
            if l + 1 < self.depth() {
                let mut a = z.clone();
                a.data_mut().iter_mut().for_each(|v| *v = relu(*v));
                act = Some(a);
            }
            pre.push(z);
        }
        Ok(pre)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn predict_batch(&self, xs: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits_batch(xs)?;
        Ok(logits.row_iter().map(argmax).collect())
    }

    fn check_labels(&self, batch: &[LabeledSample]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Empty("loss over an empty batch".into()));
        }
        if let Some(s) = batch.iter().find(|s| s.label >= self.output_dim()) {
            return Err(Error::dim(format!(
                "label {} for a model with {} outputs",
                s.label,
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Per-sample loss from logits.
    pub fn sample_loss(&self, logits: &[f64], label: usize) -> f64 {
        match self.loss {
            LossKind::CrossEntropy => log_sum_exp(logits) - logits[label],
            LossKind::Square => {
                let out = match self.head {
                    Head::Identity => logits.to_vec(),
                    Head::Softmax => softmax(logits),
                };
                out.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let t = if j == label { 1.0 } else { 0.0 };
                        (v - t) * (v - t)
                    })
                    .sum()
            }
        }
    }

    /// Mean loss over the batch.
    pub fn loss(&self, batch: &[LabeledSample]) -> Result<f64> {
        self.check_labels(batch)?;
        let xs = batch_matrix(batch)?;
        let logits = self.logits_batch(&xs)?;
        let total: f64 = logits
            .row_iter()
            .zip(batch)
            .map(|(z, s)| self.sample_loss(z, s.label))
            .sum();
        Ok(total / batch.len() as f64)
    }

    /// Mean loss and accuracy in one pass.
    pub fn evaluate(&self, samples: &[LabeledSample]) -> Result<(f64, f64)> {
        self.check_labels(samples)?;
        let mut loss = 0.0;
        let mut correct = 0usize;
        for chunk in samples.chunks(256) {
            let logits = self.logits_batch(&batch_matrix(chunk)?)?;
            for (z, s) in logits.row_iter().zip(chunk) {
                loss += self.sample_loss(z, s.label);
                correct += usize::from(argmax(z) == s.label);
            }
        }
        let m = samples.len() as f64;
        Ok((loss / m, correct as f64 / m))
    }

    /// Loss derivative with respect to the logits of one sample.
    fn logit_delta(&self, logits: &[f64], label: usize, out: &mut [f64]) {
        match (self.loss, self.head) {
            (LossKind::CrossEntropy, _) => {
                let p = softmax(logits);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = p[j] - if j == label { 1.0 } else { 0.0 };
                }
            }
            (LossKind::Square, Head::Identity) => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = 2.0 * (logits[j] - if j == label { 1.0 } else { 0.0 });
                }
            }
            (LossKind::Square, Head::Softmax) => {
                let p = softmax(logits);
                let g: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(j, &pj)| 2.0 * (pj - if j == label { 1.0 } else { 0.0 }))
                    .collect();
                let gp: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
                for (j, o) in out.iter_mut().enumerate() {
                    *o = p[j] * (g[j] - gp);
                }
            }
        }
    }

    /// Exact gradient of the mean batch loss, accumulated over samples in batch order.
    pub fn gradients(&self, batch: &[LabeledSample]) -> Result<Vec<LayerGrad>> {
        self.check_labels(batch)?;
        let xs = batch_matrix(batch)?;
        let pre = self.forward_batch(&xs)?;
        let depth = self.depth();
        let k = batch.len();

        let logits = &pre[depth - 1];
        let mut delta = Matrix::zeros(k, self.output_dim());
        let n_out = self.output_dim();
        for (i, s) in batch.iter().enumerate() {
            let (z, d) = (
                logits.row(i),
                &mut delta.data_mut()[i * n_out..(i + 1) * n_out],
            );
            self.logit_delta(z, s.label, d);
        }

        let mut grads: Vec<LayerGrad> = Vec::with_capacity(depth);
        for l in (0..depth).rev() {
            let input = if l == 0 {
                xs.clone()
            } else {
                relu_matrix(&pre[l - 1])
            };
            let mut dw = delta.transpose().matmul(&input)?;
            let mut db = vec![0.0; self.dims[l + 1]];
            for row in delta.row_iter() {
                for (acc, v) in db.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            let inv = 1.0 / k as f64;
            dw.scale(inv);
            db.iter_mut().for_each(|v| *v *= inv);
            if l > 0 {
                let mut back = delta.matmul(&self.weights[l])?;
                for (b, z) in back.data_mut().iter_mut().zip(pre[l - 1].data()) {
                    if *z <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
            grads.push(LayerGrad {
                dw,
                db: Vector::from(db),
            });
        }
        grads.reverse();
        Ok(grads)
    }
}

#[inline]
pub fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

fn relu_matrix(m: &Matrix) -> Matrix {
    let mut a = m.clone();
    a.data_mut().iter_mut().for_each(|v| *v = relu(*v));
    a
}

/// Max-subtracted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Stacks sample inputs into a row-per-sample matrix.
pub fn batch_matrix(batch: &[LabeledSample]) -> Result<Matrix> {
    let cols = batch.first().map_or(0, |s| s.x.len());
    let mut data = Vec::with_capacity(batch.len() * cols);
    for s in batch {
        if s.x.len() != cols {
            return Err(Error::dim("samples of different lengths in one batch"));
        }
        data.extend_from_slice(&s.x);
    }
    Ok(Matrix::from_raw(batch.len(), cols, data))
}

#[cfg(test)]
// oracles below index several arrays in step on purpose
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};

    fn random_model(dims: &[usize], head: Head, loss: LossKind, seed: u64) -> MlpModel {
        let mut m = MlpModel::init(dims, head, loss, seed).unwrap();
        let mut rng = SeededRng::new(seed, Stream::Probe);
        for b in m.biases_mut() {
            for v in b.iter_mut() {
                *v = rng.uniform_in(-0.3, 0.3);
            }
        }
        m
    }

    fn random_batch(n0: usize, classes: usize, k: usize, seed: u64) -> Vec<LabeledSample> {
        let mut rng = SeededRng::new(seed, Stream::Noise);
        (0..k)
            .map(|_| {
                let x: Vec<f64> = (0..n0).map(|_| rng.uniform()).collect();
                LabeledSample::new(x, rng.index(classes))
            })
            .collect()
    }

    /// Straight-line evaluator with explicit loops.
    fn naive_logits(m: &MlpModel, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for l in 0..m.depth() {
            let w = &m.weights()[l];
            let mut next = Vec::new();
            for r in 0..w.rows() {
                let mut s = m.biases()[l][r];
                for c in 0..w.cols() {
                    s += w.get(r, c) * cur[c];
                }
                if l + 1 < m.depth() && s < 0.0 {
                    s = 0.0;
                }
                next.push(s);
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let m = MlpModel::zeros(&[3, 4, 2], Head::Identity, LossKind::Square).unwrap();
        assert_eq!(
            m.forward(&[0.1, 0.5, 0.9]).unwrap().logits.as_slice(),
            &[0.0, 0.0]
        );
    }

    #[test]
    fn single_identity_layer() {
        let m = MlpModel::new(
            vec![2, 2],
            vec![Matrix::identity(2)],
            vec![Vector::zeros(2)],
            Head::Identity,
            LossKind::Square,
        )
        .unwrap();
        assert_eq!(
            m.forward(&[0.2, 0.7]).unwrap().logits.as_slice(),
            &[0.2, 0.7]
        );
    }

    #[test]
    fn forward_matches_naive_evaluator() {
        let m = random_model(&[784, 16, 2], Head::Softmax, LossKind::CrossEntropy, 1);
        let batch = random_batch(784, 2, 5, 2);
        for s in &batch {
            let t = m.forward(&s.x).unwrap();
            let naive = naive_logits(&m, &s.x);
            for (a, b) in t.logits.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in t.acts[0].iter().zip(t.preacts[0].iter()) {
                assert_eq!(*a, relu(*b));
            }
            let total: f64 = t.head_out.iter().sum();
            assert!((total - 1.0).abs() < 1e-12 && t.head_out.iter().all(|&p| p > 0.0));
        }
        let xs = batch_matrix(&batch).unwrap();
        let lb = m.logits_batch(&xs).unwrap();
        for (i, s) in batch.iter().enumerate() {
            assert_eq!(lb.row(i), m.logits(&s.x).unwrap().as_slice());
        }
    }

    #[test]
    fn shape_errors() {
        let m = random_model(&[3, 2], Head::Identity, LossKind::Square, 0);
        assert!(matches!(m.forward(&[1.0]), Err(Error::Dimension(_))));
        assert!(MlpModel::zeros(&[3, 2], Head::Identity, LossKind::CrossEntropy).is_err());
        assert!(matches!(m.loss(&[]), Err(Error::Empty(_))));
        assert!(m.loss(&[LabeledSample::new(vec![0.0; 3], 5)]).is_err());
        let bad = MlpModel::new(
            vec![3, 2],
            vec![Matrix::zeros(3, 2)],
            vec![Vector::zeros(2)],
            Head::Identity,
            LossKind::Square,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn prediction_rule() {
        assert_eq!(argmax(&[1.0, 0.2]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5]), 1);
        let m = random_model(&[5, 7, 3], Head::Softmax, LossKind::CrossEntropy, 4);
        let mut shifted = m.clone();
        for v in shifted.biases_mut().last_mut().unwrap().iter_mut() {
            *v += 3.25;
        }
        for s in random_batch(5, 3, 50, 9) {
            assert_eq!(m.predict(&s.x).unwrap(), shifted.predict(&s.x).unwrap());
        }
    }

    #[test]
    fn losses() {
        let mut m = MlpModel::new(
            vec![2, 2],
            vec![Matrix::zeros(2, 2)],
            vec![Vector::from(vec![1.0, 0.0])],
            Head::Identity,
            LossKind::Square,
        )
        .unwrap();
        let batch = [LabeledSample::new(vec![0.3, 0.4], 0)];
        assert_eq!(m.loss(&batch).unwrap(), 0.0);
        m = MlpModel::zeros(&[2, 2], Head::Softmax, LossKind::CrossEntropy).unwrap();
        assert!((m.loss(&batch).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn loss_matches_scalar_loop() {
        for (head, loss) in [
            (Head::Identity, LossKind::Square),
            (Head::Softmax, LossKind::Square),
            (Head::Softmax, LossKind::CrossEntropy),
        ] {
            let m = random_model(&[6, 5, 3], head, loss, 12);
            let batch = random_batch(6, 3, 17, 13);
            let mut total = 0.0;
            for s in &batch {
                let z = naive_logits(&m, &s.x);
                let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
                let sum: f64 = e.iter().sum();
                total += match loss {
                    LossKind::CrossEntropy => -(e[s.label] / sum).ln(),
                    LossKind::Square => (0..3)
                        .map(|j| {
                            let o = if head == Head::Softmax {
                                e[j] / sum
                            } else {
                                z[j]
                            };
                            let t = if j == s.label { 1.0 } else { 0.0 };
                            (o - t).powi(2)
                        })
                        .sum(),
                };
            }
            let expected = total / batch.len() as f64;
            assert!((m.loss(&batch).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_zero_at_exact_optimum() {
        let m = MlpModel::new(
            vec![2, 2],
            vec![Matrix::zeros(2, 2)],
            vec![Vector::from(vec![0.0, 1.0])],
            Head::Identity,
            LossKind::Square,
        )
        .unwrap();
        let g = m
            .gradients(&[LabeledSample::new(vec![0.5, 0.5], 1)])
            .unwrap();
        assert!(g[0].dw.data().iter().all(|&v| v == 0.0));
        assert!(g[0].db.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_square_gradient_closed_form() {
        let w = Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.4]]).unwrap();
        let b = Vector::from(vec![0.05, -0.1]);
        let m = MlpModel::new(
            vec![2, 2],
            vec![w.clone()],
            vec![b.clone()],
            Head::Identity,
            LossKind::Square,
        )
        .unwrap();
        let x = [0.6, 0.9];
        let y = [0.0, 1.0];
        let g = m.gradients(&[LabeledSample::new(x.to_vec(), 1)]).unwrap();
        for r in 0..2 {
            let resid = w.get(r, 0) * x[0] + w.get(r, 1) * x[1] + b[r] - y[r];
            for c in 0..2 {
                assert!((g[0].dw.get(r, c) - 2.0 * resid * x[c]).abs() < 1e-15);
            }
            assert!((g[0].db[r] - 2.0 * resid).abs() < 1e-15);
        }
    }

    #[test]
    fn positive_homogeneity_without_biases() {
        let mut m = MlpModel::init(&[4, 6, 5, 2], Head::Identity, LossKind::Square, 8).unwrap();
        m.biases_mut()
            .iter_mut()
            .for_each(|b| b.iter_mut().for_each(|v| *v = 0.0));
        let x = [0.2, 0.9, 0.4, 0.7];
        let base = m.logits(&x).unwrap();
        for alpha in [0.5, 2.0, 7.5] {
            let sx: Vec<f64> = x.iter().map(|v| v * alpha).collect();
            let scaled = m.logits(&sx).unwrap();
            for (a, b) in scaled.iter().zip(base.iter()) {
                assert!((a - alpha * b).abs() < 1e-12);
            }
        }
    }
}
