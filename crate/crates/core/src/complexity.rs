//! Rademacher complexity of depth-`d`, width-`n` ReLU nets with row norms `≤ c` and bias
//! magnitudes `≤ b`: the closed-form upper bound and a Monte-Carlo lower estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::rng::{SeededRng, Stream};

/// Scalar-output nets with `d − 1` hidden ReLU layers of width `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisClassSpec {
    pub d: usize,
    pub n: usize,
    pub c: f64,
    pub b: f64,
}

impl HypothesisClassSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.n < 1 {
            return Err(Error::param("depth and width must be at least 1"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::param(format!(
                "c must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::param(format!(
                "b must be non-negative and finite, got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// `c^d·√n^(d−1)·√(2/m)·xmax + b·((c√n)^d − 1)/(c√n − 1)`; the geometric factor becomes `d`
/// when `c√n` is within 1e-12 of 1.
pub fn rademacher_bound(spec: &HypothesisClassSpec, m: usize, xmax: f64) -> Result<f64> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::param("sample count must be positive"));
    }
    if !(xmax >= 0.0) {
        return Err(Error::param(format!(
            "xmax must be non-negative, got {xmax}"
        )));
    }
    let d = spec.d as i32;
    let sn = (spec.n as f64).sqrt();
    let q = spec.c * sn;
    let first = spec.c.powi(d) * sn.powi(d - 1) * (2.0 / m as f64).sqrt() * xmax;
    let series = if (q - 1.0).abs() < 1e-12 {
        spec.d as f64
    } else {
        (q.powi(d) - 1.0) / (q - 1.0)
    };
    Ok(first + spec.b * series)
}

/// A sampled member of the class: hidden layers then the output row, each `(W, bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledNet {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl SampledNet {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, (w, b)) in self.layers.iter().enumerate() {
            let mut z = w.matvec(&h).expect("layer shapes chain");
            for (v, bi) in z.iter_mut().zip(b) {
                *v += bi;
                if l < last {
                    *v = v.max(0.0);
                }
            }
            h = z.into_inner();
        }
        h[0]
    }
}

/// Rows uniform on the sphere of radius `c`, biases uniform in `[−b, b]`.
pub fn sample_hypothesis(
    spec: &HypothesisClassSpec,
    input_dim: usize,
    rng: &mut SeededRng,
) -> SampledNet {
    let mut layers = Vec::with_capacity(spec.d);
    let mut fan_in = input_dim;
    for l in 0..spec.d {
        let fan_out = if l + 1 == spec.d { 1 } else { spec.n };
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_out {
            data.extend(rng.unit_vector(fan_in).into_iter().map(|v| v * spec.c));
        }
        let w = Matrix::from_vec(fan_out, fan_in, data).expect("sized by construction");
        let bias = (0..fan_out)
            .map(|_| rng.uniform_in(-spec.b, spec.b))
            .collect();
        layers.push((w, bias));
        fan_in = fan_out;
    }
    SampledNet { layers }
}

/// `E_λ max_f (1/m)·Σ λ_i f(x_i)` over the rows of `outputs` (hypotheses × samples).
pub fn empirical_rademacher(outputs: &Matrix, trials_lambda: usize, seed: u64) -> Result<f64> {
    if outputs.rows() == 0 || outputs.cols() == 0 {
        return Err(Error::Empty(
            "need at least one hypothesis and one sample".into(),
        ));
    }
    if trials_lambda == 0 {
        return Err(Error::param("need at least one sign draw"));
    }
    let m = outputs.cols() as f64;
    let mut rng = SeededRng::new(seed, Stream::Rademacher);
    let mut total = 0.0;
    let mut lambda = vec![0.0; outputs.cols()];
    for _ in 0..trials_lambda {
        for v in lambda.iter_mut() {
            *v = if rng.next_u64() >> 63 == 1 { 1.0 } else { -1.0 };
        }
        let best = outputs
            .row_iter()
            .map(|f| f.iter().zip(&lambda).map(|(a, b)| a * b).sum::<f64>() / m)
            .fold(f64::NEG_INFINITY, f64::max);
        total += best;
    }
    Ok(total / trials_lambda as f64)
}

/// Monte-Carlo estimate: the supremum over the class is replaced by a maximum over
/// `trials_f` sampled members, so the estimate sits below the true complexity.
pub fn rademacher_mc_estimate(
    spec: &HypothesisClassSpec,
    data: &[Vec<f64>],
    trials_f: usize,
    trials_lambda: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("dataset is empty".into()));
    }
    if trials_f == 0 {
        return Err(Error::param("need at least one sampled hypothesis"));
    }
    let dim = data[0].len();
    if data.iter().any(|x| x.len() != dim) {
        return Err(Error::dim("inputs of different lengths"));
    }
    let mut rng = SeededRng::new(seed, Stream::Hypothesis);
    let mut outputs = Vec::with_capacity(trials_f * data.len());
    for _ in 0..trials_f {
        let f = sample_hypothesis(spec, dim, &mut rng);
        outputs.extend(data.iter().map(|x| f.eval(x)));
    }
    empirical_rademacher(
        &Matrix::from_vec(trials_f, data.len(), outputs)?,
        trials_lambda,
        seed,
    )
}

/// Largest input norm in the sample.
pub fn max_norm(data: &[Vec<f64>]) -> f64 {
    data.iter().map(|x| norm2(x)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RademacherResult {
    pub spec: HypothesisClassSpec,
    pub m: usize,
    pub xmax: f64,
    pub bound: f64,
    pub mc_estimate: Option<f64>,
    pub trials_f: usize,
    pub trials_lambda: usize,
    pub seed: u64,
}
