#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use maxnorm::geometry::{activation_pattern, ActivationPattern, BoxBounds};
use maxnorm::linalg::project_rows;
use maxnorm::rng::{SeededRng, Stream};
use maxnorm::{Head, LossKind, Matrix, MlpModel, Vector};

/// Random ReLU net whose hidden hyperplanes pass through the unit box, rows projected to `c`.
pub fn random_box_net(dims: &[usize], c: f64, seed: u64) -> MlpModel {
    let mut rng = SeededRng::new(seed, Stream::Hypothesis);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let data: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.normal()).collect();
        let w = project_rows(&Matrix::from_vec(fan_out, fan_in, data).unwrap(), c).unwrap();
        let b: Vec<f64> = if l == 0 {
            (0..fan_out)
                .map(|j| {
                    let p: Vec<f64> = (0..fan_in).map(|_| rng.uniform()).collect();
                    -w.row(j).iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect()
        } else {
            (0..fan_out)
                .map(|_| 0.2 * c * (2.0 * rng.uniform() - 1.0))
                .collect()
        };
        weights.push(w);
        biases.push(Vector::from(b));
    }
    MlpModel::new(
        dims.to_vec(),
        weights,
        biases,
        Head::Identity,
        LossKind::Square,
    )
    .unwrap()
}

/// Pattern set seen on a `k × k` grid over a 2-D box, skipping boundary points.
pub fn grid_patterns(
    model: &MlpModel,
    bounds: &BoxBounds,
    k: usize,
) -> BTreeSet<ActivationPattern> {
    let mut seen = BTreeSet::new();
    for i in 0..k {
        for j in 0..k {
            let x = bounds.lo[0] + (bounds.hi[0] - bounds.lo[0]) * i as f64 / (k - 1) as f64;
            let y = bounds.lo[1] + (bounds.hi[1] - bounds.lo[1]) * j as f64 / (k - 1) as f64;
            let p = activation_pattern(model, &[x, y]).unwrap();
            if !p.is_boundary() {
                seen.insert(p.pattern);
            }
        }
    }
    seen
}

/// Random small net and batch whose pre-activations stay at least `margin` away from zero,
/// so central differences never straddle a ReLU kink.
pub fn random_gradcheck_case(
    head: Head,
    loss: LossKind,
    seed: u64,
    margin: f64,
) -> (MlpModel, Vec<maxnorm::LabeledSample>) {
    let mut rng = SeededRng::new(seed, Stream::Probe);
    loop {
        let depth = 2 + rng.index(3);
        let mut dims = vec![1 + rng.index(5)];
        for _ in 0..depth - 1 {
            dims.push(1 + rng.index(6));
        }
        dims.push(2 + rng.index(3));
        let model = MlpModel::init(&dims, head, loss, rng.next_u64()).unwrap();
        let mut model = model;
        for b in model.biases_mut() {
            for v in b.iter_mut() {
                *v = 0.3 * (2.0 * rng.uniform() - 1.0);
            }
        }
        let batch: Vec<maxnorm::LabeledSample> = (0..1 + rng.index(6))
            .map(|_| {
                let x: Vec<f64> = (0..dims[0]).map(|_| 2.0 * rng.uniform() - 1.0).collect();
                maxnorm::LabeledSample::new(x, rng.index(*dims.last().unwrap()))
            })
            .collect();
        let clear = batch.iter().all(|s| {
            let t = model.forward(&s.x).unwrap();
            t.preacts[..depth - 1]
                .iter()
                .all(|z| z.iter().all(|v| v.abs() > margin))
        });
        if clear {
            return (model, batch);
        }
    }
}

/// Largest relative disagreement between backprop and central differences with step `h`.
/// Entries are compared as `|g − fd| / max(|g| + |fd|, 1e-4)`: with a loss of order one the
/// difference quotient carries about 1e-11 of rounding, so tinier entries are judged absolutely.
pub fn gradcheck(model: &MlpModel, batch: &[maxnorm::LabeledSample], h: f64) -> f64 {
    let grads = model.gradients(batch).unwrap();
    let mut worst: f64 = 0.0;
    let mut compare = |g: f64, fd: f64| {
        let err = (g - fd).abs() / (g.abs() + fd.abs()).max(1e-4);
        worst = worst.max(err);
    };
    for l in 0..model.depth() {
        let (rows, cols) = model.weights()[l].shape();
        for i in 0..rows {
            for j in 0..cols {
                let mut p = model.clone();
                let w0 = p.weights()[l].get(i, j);
                p.weights_mut()[l].set(i, j, w0 + h);
                let up = p.loss(batch).unwrap();
                p.weights_mut()[l].set(i, j, w0 - h);
                let down = p.loss(batch).unwrap();
                compare(grads[l].dw.get(i, j), (up - down) / (2.0 * h));
            }
            let mut p = model.clone();
            let b0 = p.biases()[l][i];
            p.biases_mut()[l][i] = b0 + h;
            let up = p.loss(batch).unwrap();
            p.biases_mut()[l][i] = b0 - h;
            let down = p.loss(batch).unwrap();
            compare(grads[l].db[i], (up - down) / (2.0 * h));
        }
    }
    worst
}

/// Net with rows rescaled to norm exactly `c` and random biases.
pub fn random_norm_c_net(dims: &[usize], c: f64, seed: u64) -> MlpModel {
    let mut rng = SeededRng::new(seed, Stream::Hypothesis);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..dims.len() - 1 {
        let mut data = Vec::with_capacity(dims[l] * dims[l + 1]);
        for _ in 0..dims[l + 1] {
            data.extend(rng.unit_vector(dims[l]).into_iter().map(|v| v * c));
        }
        weights.push(Matrix::from_vec(dims[l + 1], dims[l], data).unwrap());
        biases.push(Vector::from(
            (0..dims[l + 1])
                .map(|_| 0.2 * (2.0 * rng.uniform() - 1.0))
                .collect::<Vec<_>>(),
        ));
    }
    MlpModel::new(
        dims.to_vec(),
        weights,
        biases,
        Head::Identity,
        LossKind::Square,
    )
    .unwrap()
}

/// Largest `max_k |F_k(x+α) − F_k(x)| / ‖α‖` over `probes` random `(x, α)` pairs.
pub fn empirical_lipschitz(model: &MlpModel, probes: usize, seed: u64) -> f64 {
    let mut rng = SeededRng::new(seed, Stream::Probe);
    let n0 = model.input_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x: Vec<f64> = (0..n0).map(|_| rng.uniform()).collect();
        let scale = 10f64.powf(-3.0 + 3.0 * rng.uniform());
        let a: Vec<f64> = rng.unit_vector(n0).into_iter().map(|v| v * scale).collect();
        let xa: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p + q).collect();
        let f0 = model.logits(&x).unwrap();
        let f1 = model.logits(&xa).unwrap();
        let change = f0
            .iter()
            .zip(f1.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        worst = worst.max(change / maxnorm::linalg::norm2(&a));
    }
    worst
}
