//! Lipschitz constants, certified radii, robust radius/volume measures and their
//! lower bounds in terms of training accuracy and loss.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::container::fmt_real;
use crate::error::{Error, Result};
use crate::linalg::{norm2, Vector};
use crate::net::{argmax, LabeledSample, LossKind, MlpModel};
use crate::rng::{derive_seed, SeededRng, Stream};

/// Per-coordinate Lipschitz constant `n^(L/2−1)·c^L` of a depth-`L` net with hidden width `n`
/// and row norms at most `c`, with respect to the input L2 norm.
pub fn lipschitz_bound(c: f64, depth: usize, width: usize) -> f64 {
    (width as f64).powf(depth as f64 / 2.0 - 1.0) * c.powi(depth as i32)
}

/// `n^((L−1)/2)·c^L`: each hidden layer has spectral norm at most `√n·c` and the output row
/// has norm at most `c`, so this constant holds for every such net.
pub fn lipschitz_bound_sound(c: f64, depth: usize, width: usize) -> f64 {
    (width as f64).powf((depth as f64 - 1.0) / 2.0) * c.powi(depth as i32)
}

/// Logit of `label` minus the largest other logit. Negative when misclassified.
pub fn margin(logits: &[f64], label: usize) -> f64 {
    let runner_up = logits
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    logits[label] - runner_up
}

/// Radius of an L2 ball around the input on which the prediction cannot change, given that
/// every logit moves by at most `lip·‖α‖`. Zero when the point is misclassified.
pub fn certified_radius(logits: &[f64], label: usize, lip: f64) -> f64 {
    if argmax(logits) != label {
        return 0.0;
    }
    (margin(logits, label) / (2.0 * lip)).max(0.0)
}

/// Dimensional constant multiplying `r^n` in the robust volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallConstant {
    /// `π^n / Γ(n/2 − 1)`, as used by the volume bounds. Defined for `n ≥ 3`.
    #[default]
    Stated,
    /// Volume of the unit ball, `π^(n/2) / Γ(n/2 + 1)`.
    Standard,
}

impl fmt::Display for BallConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BallConstant::Stated => "stated",
            BallConstant::Standard => "standard",
        })
    }
}

impl FromStr for BallConstant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stated" => Ok(BallConstant::Stated),
            "standard" => Ok(BallConstant::Standard),
            other => Err(Error::param(format!("unknown ball constant '{other}'"))),
        }
    }
}

impl BallConstant {
    /// Natural log of the constant for dimension `n`.
    pub fn ln_value(self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        let n = n as f64;
        match self {
            BallConstant::Stated => {
                let arg = n / 2.0 - 1.0;
                if arg <= 0.0 {
                    return Err(Error::param(format!(
                        "π^n/Γ(n/2−1) is not a positive constant for n = {n}"
                    )));
                }
                Ok(n * PI.ln() - libm::lgamma(arg))
            }
            BallConstant::Standard => Ok(n / 2.0 * PI.ln() - libm::lgamma(n / 2.0 + 1.0)),
        }
    }

    pub fn value(self, n: usize) -> Result<f64> {
        Ok(self.ln_value(n)?.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustInputs {
    pub c: f64,
    pub depth: usize,
    pub width: usize,
    /// Training accuracy.
    pub gamma: f64,
    /// Training loss.
    pub epsilon: f64,
    pub loss: LossKind,
}

impl RobustInputs {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::param(format!(
                "c must be positive and finite, got {}",
                self.c
            )));
        }
        if self.depth < 2 || self.width == 0 {
            return Err(Error::param("depth must be at least 2 and width positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::param(format!(
                "accuracy must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param(format!(
                "loss must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn lipschitz(&self) -> f64 {
        lipschitz_bound(self.c, self.depth, self.width)
    }

    /// Numerator of the radius bound: `γ − √(2εγ)` (square) or `ln2·γ − ε` (crossentropy).
    /// A non-positive value means the bound says nothing.
    pub fn numerator(&self) -> f64 {
        match self.loss {
            LossKind::Square => self.gamma - (2.0 * self.epsilon * self.gamma).sqrt(),
            LossKind::CrossEntropy => LN_2 * self.gamma - self.epsilon,
        }
    }

    fn denominator(&self) -> f64 {
        match self.loss {
            LossKind::Square => 2.0 * self.lipschitz(),
            LossKind::CrossEntropy => self.lipschitz(),
        }
    }
}

/// A lower bound together with its natural log (volumes overflow `f64` in high dimension).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub ln_value: f64,
    /// The accuracy/loss precondition fails and the bound is reported as 0.
    pub vacuous: bool,
}

impl BoundValue {
    fn vacuous() -> Self {
        BoundValue {
            value: 0.0,
            ln_value: f64::NEG_INFINITY,
            vacuous: true,
        }
    }

    fn from_ln(ln_value: f64) -> Self {
        BoundValue {
            value: ln_value.exp(),
            ln_value,
            vacuous: false,
        }
    }
}

/// Lower bound on the robust radius from training accuracy `γ` and loss `ε`.
pub fn bound_radius(inp: &RobustInputs) -> Result<BoundValue> {
    inp.validate()?;
    let num = inp.numerator();
    if !(num > 0.0) {
        return Ok(BoundValue::vacuous());
    }
    let value = num / inp.denominator();
    Ok(BoundValue {
        value,
        ln_value: value.ln(),
        vacuous: false,
    })
}

/// Lower bound on the robust volume in input dimension `n0`.
pub fn bound_volume(inp: &RobustInputs, n0: usize, constant: BallConstant) -> Result<BoundValue> {
    inp.validate()?;
    let ln_c = constant.ln_value(n0)?;
    let num = inp.numerator();
    if !(num > 0.0) {
        return Ok(BoundValue::vacuous());
    }
    let n = n0 as f64;
    Ok(BoundValue::from_ln(
        ln_c + n * (num.ln() - inp.denominator().ln()) - (n - 1.0) * inp.gamma.ln(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustMeasures {
    /// Sum of radii over correctly classified samples, divided by the sample count.
    pub r_fs: f64,
    pub v_fs: f64,
    pub ln_v_fs: f64,
    pub correct: usize,
    pub samples: usize,
}

/// Robust radius and volume from per-sample radii; misclassified samples contribute nothing.
pub fn robust_measures(
    radii: &[f64],
    correct: &[bool],
    n0: usize,
    constant: BallConstant,
) -> Result<RobustMeasures> {
    if radii.len() != correct.len() {
        return Err(Error::dim(format!(
            "{} radii for {} correctness flags",
            radii.len(),
            correct.len()
        )));
    }
    if radii.is_empty() {
        return Err(Error::Empty(
            "robust measures need at least one sample".into(),
        ));
    }
    let m = radii.len() as f64;
    let ln_c = constant.ln_value(n0)?;
    let good: Vec<f64> = radii
        .iter()
        .zip(correct)
        .filter_map(|(&r, &ok)| ok.then_some(r))
        .collect();
    let r_fs = good.iter().sum::<f64>() / m;
    // log-sum-exp of n0·ln r over the positive radii
    let logs: Vec<f64> = good
        .iter()
        .filter(|&&r| r > 0.0)
        .map(|&r| n0 as f64 * r.ln())
        .collect();
    let ln_sum = match logs.iter().cloned().reduce(f64::max) {
        None => f64::NEG_INFINITY,
        Some(mx) if mx == f64::INFINITY => f64::INFINITY,
        Some(mx) => mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln(),
    };
    let ln_v_fs = ln_c + ln_sum - m.ln();
    Ok(RobustMeasures {
        r_fs,
        v_fs: ln_v_fs.exp(),
        ln_v_fs,
        correct: good.len(),
        samples: radii.len(),
    })
}

/// Gradient of logit `k` with respect to the input at `x` (ReLU'(0) = 0).
pub fn logit_input_gradient(model: &MlpModel, x: &[f64], k: usize) -> Result<Vector> {
    let trace = model.forward(x)?;
    let depth = model.depth();
    let mut g: Vec<f64> = model.weights()[depth - 1].row(k).to_vec();
    for l in (0..depth - 1).rev() {
        for (gi, z) in g.iter_mut().zip(trace.preacts[l].iter()) {
            if *z <= 0.0 {
                *gi = 0.0;
            }
        }
        g = model.weights()[l].vecmat(&g)?.into_inner();
    }
    Ok(Vector::from(g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Number of search directions (gradient paths plus random probes).
    pub budget: usize,
    /// Largest distance searched from the input.
    pub max_radius: f64,
    pub seed: u64,
    /// Keep all searched points inside `[0, 1]^n0`.
    pub clip_to_box: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 32,
            max_radius: 100.0,
            seed: 0,
            clip_to_box: false,
        }
    }
}

const MARCH_STEPS: usize = 64;
const BISECT_STEPS: usize = 60;

fn point_at(x: &[f64], d: &[f64], t: f64, clip: bool) -> Vec<f64> {
    x.iter()
        .zip(d)
        .map(|(a, b)| {
            let v = a + t * b;
            if clip {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect()
}

/// Distance along unit direction `d` to the first prediction change, if any within `limit`.
fn flip_distance(
    model: &MlpModel,
    x: &[f64],
    label: usize,
    d: &[f64],
    limit: f64,
    clip: bool,
) -> Result<Option<f64>> {
    let mut prev = 0.0;
    for i in 1..=MARCH_STEPS {
        let t = limit * i as f64 / MARCH_STEPS as f64;
        if model.predict(&point_at(x, d, t, clip))? != label {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..BISECT_STEPS {
                let mid = 0.5 * (lo + hi);
                if model.predict(&point_at(x, d, mid, clip))? != label {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let p = point_at(x, d, hi, clip);
            let dist = norm2(&p.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
            return Ok(Some(dist));
        }
        prev = t;
    }
    Ok(None)
}

/// Gradient ascent on the runner-up logit gap; returns the first point whose label differs.
fn gradient_path(
    model: &MlpModel,
    x: &[f64],
    label: usize,
    limit: f64,
    clip: bool,
) -> Result<Option<Vec<f64>>> {
    let mut p = x.to_vec();
    let step = limit / MARCH_STEPS as f64;
    for _ in 0..4 * MARCH_STEPS {
        let logits = model.logits(&p)?;
        if argmax(&logits) != label {
            return Ok(Some(p));
        }
        let runner = logits
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != label)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        let gr = logit_input_gradient(model, &p, runner)?;
        let gl = logit_input_gradient(model, &p, label)?;
        let g: Vec<f64> = gr.iter().zip(gl.iter()).map(|(a, b)| a - b).collect();
        let gn = norm2(&g);
        if gn == 0.0 {
            return Ok(None);
        }
        // step by at most the remaining gap at the local slope, capped at `step`
        let gap = logits[label] - logits[runner];
        let s = (1.01 * gap / gn).clamp(step * 1e-3, step);
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += s * gi / gn;
            if clip {
                *pi = pi.clamp(0.0, 1.0);
            }
        }
        let moved: f64 = p
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if moved > limit {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Empirical upper bound on the robust radius at `x`: the smallest distance to a point with a
/// different prediction found by gradient ascent and random probes, refined by bisection.
/// Zero when `x` is already misclassified, `+∞` when no label change is found.
pub fn adversarial_radius_upper(
    model: &MlpModel,
    x: &[f64],
    label: usize,
    opts: &SearchOptions,
) -> Result<f64> {
    if opts.budget == 0 {
        return Err(Error::param("search budget must be positive"));
    }
    if !(opts.max_radius > 0.0) {
        return Err(Error::param("search radius must be positive"));
    }
    if model.predict(x)? != label {
        return Ok(0.0);
    }
    let clip = opts.clip_to_box;
    let mut best = f64::INFINITY;
    let mut directions: Vec<Vec<f64>> = Vec::new();
    if let Some(p) = gradient_path(model, x, label, opts.max_radius, clip)? {
        let d: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
        let n = norm2(&d);
        if n > 0.0 {
            best = n;
            directions.push(d.into_iter().map(|v| v / n).collect());
        }
    }
    for k in 0..model.output_dim() {
        if k == label || directions.len() >= opts.budget {
            continue;
        }
        let g: Vec<f64> = logit_input_gradient(model, x, k)?
            .iter()
            .zip(logit_input_gradient(model, x, label)?.iter())
            .map(|(a, b)| a - b)
            .collect();
        let n = norm2(&g);
        if n > 0.0 {
            directions.push(g.into_iter().map(|v| v / n).collect());
        }
    }
    let mut rng = SeededRng::new(opts.seed, Stream::Probe);
    while directions.len() < opts.budget {
        directions.push(rng.unit_vector(x.len()));
    }
    for d in &directions {
        let limit = best.min(opts.max_radius);
        if let Some(dist) = flip_distance(model, x, label, d, limit, clip)? {
            best = best.min(dist);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertRow {
    pub id: usize,
    pub correct: bool,
    pub margin: f64,
    pub r_cert: f64,
    pub r_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustBounds {
    pub inputs: RobustInputs,
    pub radius: BoundValue,
    pub volume: BoundValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub rows: Vec<CertRow>,
    pub lip: f64,
    pub constant: BallConstant,
    pub measures: RobustMeasures,
    pub bounds: Option<RobustBounds>,
}

impl CertReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,correct,margin,r_cert,r_upper\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.id,
                u8::from(r.correct),
                fmt_real(r.margin),
                fmt_real(r.r_cert),
                fmt_real(r.r_upper)
            ));
        }
        out
    }

    /// Samples whose certified radius exceeds the empirical upper bound.
    pub fn inconsistent(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.r_upper.is_finite() && r.r_cert > r.r_upper)
            .map(|r| r.id)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    /// Lipschitz constant used for certified radii.
    pub lip: f64,
    pub constant: BallConstant,
    /// Run the adversarial search; otherwise `r_upper` is `+∞`.
    pub search: Option<SearchOptions>,
    /// Accuracy/loss inputs for the bounds bounds, if wanted.
    pub bounds: Option<RobustInputs>,
}

/// Certifies every sample and aggregates the robust measures.
pub fn certify(
    model: &MlpModel,
    samples: &[LabeledSample],
    opts: &CertifyOptions,
) -> Result<CertReport> {
    if !(opts.lip > 0.0) {
        return Err(Error::param("Lipschitz constant must be positive"));
    }
    let mut rows = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let logits = model.logits(&s.x)?;
        let correct = argmax(&logits) == s.label;
        let r_upper = match &opts.search {
            Some(so) => {
                let so = SearchOptions {
                    seed: derive_seed(so.seed, i as u64),
                    ..so.clone()
                };
                adversarial_radius_upper(model, &s.x, s.label, &so)?
            }
            None => f64::INFINITY,
        };
        rows.push(CertRow {
            id: i,
            correct,
            margin: margin(&logits, s.label),
            r_cert: certified_radius(&logits, s.label, opts.lip),
            r_upper,
        });
    }
    let radii: Vec<f64> = rows.iter().map(|r| r.r_cert).collect();
    let flags: Vec<bool> = rows.iter().map(|r| r.correct).collect();
    let measures = robust_measures(&radii, &flags, model.input_dim(), opts.constant)?;
    let bounds = match &opts.bounds {
        Some(inp) => Some(RobustBounds {
            inputs: *inp,
            radius: bound_radius(inp)?,
            volume: bound_volume(inp, model.input_dim(), opts.constant)?,
        }),
        None => None,
    };
    Ok(CertReport {
        rows,
        lip: opts.lip,
        constant: opts.constant,
        measures,
        bounds,
    })
}
