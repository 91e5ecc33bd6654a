//! Linear regions of a ReLU network and the angles between adjacent faces of its graph.
//!
//! Inside a region every hidden ReLU keeps its on/off state, so each
//! pre-activation is an affine function of the input and the network output
//! is `W_a·x + b_a`. Regions are discovered by walking from a witness point
//! across region facets: for two-dimensional inputs the region polygon is
//! computed exactly by clipping the input box with every neuron's half-plane;
//! otherwise facets are located with seeded probe rays.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix, Vector};
use crate::net::MlpModel;
use crate::rng::{SeededRng, Stream};

/// Pre-activations closer to zero than this mark a point as lying on a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// One bit per hidden neuron, layer-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActivationPattern {
    bits: Vec<bool>,
}

impl ActivationPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        ActivationPattern { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices where the two patterns disagree.
    pub fn differing(&self, other: &ActivationPattern) -> Vec<usize> {
        self.bits
            .iter()
            .zip(&other.bits)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i))
            .collect()
    }
}

impl fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Pattern at a point, with the neurons whose pre-activation is within [`BOUNDARY_TOL`] of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternProbe {
    pub pattern: ActivationPattern,
    pub boundary: Vec<usize>,
}

impl PatternProbe {
    pub fn is_boundary(&self) -> bool {
        !self.boundary.is_empty()
    }
}

pub fn activation_pattern(model: &MlpModel, x: &[f64]) -> Result<PatternProbe> {
    let trace = model.forward(x)?;
    let mut bits = Vec::with_capacity(model.hidden_units());
    let mut boundary = Vec::new();
    for z in &trace.preacts[..model.depth() - 1] {
        for &v in z.iter() {
            if v.abs() < BOUNDARY_TOL {
                boundary.push(bits.len());
            }
            bits.push(v > 0.0);
        }
    }
    Ok(PatternProbe {
        pattern: ActivationPattern { bits },
        boundary,
    })
}

fn check_pattern(model: &MlpModel, pattern: &ActivationPattern) -> Result<()> {
    if pattern.len() != model.hidden_units() {
        return Err(Error::dim(format!(
            "pattern of {} bits for a model with {} hidden units",
            pattern.len(),
            model.hidden_units()
        )));
    }
    Ok(())
}

/// Affine maps `x ↦ A x + c` of every layer's pre-activation, valid on the region of `pattern`.
/// The last entry is the output layer.
pub fn layer_affine_maps(
    model: &MlpModel,
    pattern: &ActivationPattern,
) -> Result<Vec<(Matrix, Vector)>> {
    check_pattern(model, pattern)?;
    let mut maps = Vec::with_capacity(model.depth());
    let mut a = model.weights()[0].clone();
    let mut c = model.biases()[0].clone();
    let mut offset = 0;
    for l in 1..model.depth() {
        maps.push((a.clone(), c.clone()));
        let n = a.rows();
        for j in 0..n {
            if !pattern.get(offset + j) {
                a.row_mut(j).iter_mut().for_each(|v| *v = 0.0);
                c[j] = 0.0;
            }
        }
        offset += n;
        let w = &model.weights()[l];
        let mut next_c = w.matvec(&c)?;
        for (v, b) in next_c.iter_mut().zip(model.biases()[l].iter()) {
            *v += b;
        }
        a = w.matmul(&a)?;
        c = next_c;
    }
    maps.push((a, c));
    Ok(maps)
}

/// Output map `x ↦ W x + b` on the region of `pattern` (all output coordinates).
pub fn local_affine_map(model: &MlpModel, pattern: &ActivationPattern) -> Result<(Matrix, Vector)> {
    Ok(layer_affine_maps(model, pattern)?.pop().unwrap())
}

/// Gradient and offset of output coordinate `output` on the region of `pattern`.
pub fn local_affine_output(
    model: &MlpModel,
    pattern: &ActivationPattern,
    output: usize,
) -> Result<(Vector, f64)> {
    if output >= model.output_dim() {
        return Err(Error::dim(format!(
            "output {output} of a model with {} outputs",
            model.output_dim()
        )));
    }
    let (a, c) = local_affine_map(model, pattern)?;
    Ok((Vector::from(a.row(output).to_vec()), c[output]))
}

/// `(W_a, b_a)` of a scalar-output model on the region of `pattern`.
pub fn local_affine(model: &MlpModel, pattern: &ActivationPattern) -> Result<(Vector, f64)> {
    if model.output_dim() != 1 {
        return Err(Error::dim(format!(
            "scalar-output model required, found {} outputs; use local_affine_output",
            model.output_dim()
        )));
    }
    local_affine_output(model, pattern, 0)
}

/// Axis-aligned input box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::dim("box bounds need equal, nonzero lengths"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::param("box needs lo < hi in every coordinate"));
        }
        Ok(BoxBounds { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        BoxBounds {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Largest `t ≥ 0` keeping `x + t·d` inside the box.
    fn exit_time(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for i in 0..x.len() {
            if d[i] > 0.0 {
                t = t.min((self.hi[i] - x[i]) / d[i]);
            } else if d[i] < 0.0 {
                t = t.min((self.lo[i] - x[i]) / d[i]);
            }
        }
        t.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub id: usize,
    pub pattern: ActivationPattern,
    /// Gradient of the analysed output coordinate on this region.
    pub w_a: Vector,
    pub b_a: f64,
    /// A point strictly inside the region.
    pub witness: Vector,
    /// `(neighbor cell id, flipped neuron)`; each neighbor differs in exactly that bit.
    pub neighbors: Vec<(usize, usize)>,
}

/// A facet crossing found during enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub from: usize,
    pub to: usize,
    /// Neuron whose hyperplane was crossed.
    pub neuron: usize,
    /// All pattern bits that differ between the two cells.
    pub flipped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub cells: Vec<RegionCell>,
    pub crossings: Vec<Crossing>,
    /// Set when the cell budget ran out before the frontier emptied.
    pub partial: bool,
    pub output: usize,
}

impl Enumeration {
    pub fn patterns(&self) -> Vec<ActivationPattern> {
        let mut v: Vec<_> = self.cells.iter().map(|c| c.pattern.clone()).collect();
        v.sort();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateOptions {
    /// Maximum number of cells to record.
    pub budget: usize,
    /// Random probe rays per cell (used when the input is not two-dimensional).
    pub probes: usize,
    pub seed: u64,
    /// Output coordinate whose local gradient is stored in each cell.
    pub output: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            budget: 10_000,
            probes: 64,
            seed: 0,
            output: 0,
        }
    }
}

/// Signed half-space `sign·(a·x + c) ≥ 0` describing one neuron's side of its hyperplane.
struct Constraint {
    neuron: usize,
    a: Vec<f64>,
    c: f64,
    sign: f64,
}

impl Constraint {
    fn slack(&self, x: &[f64]) -> f64 {
        self.sign * (self.a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + self.c)
    }

    fn rate(&self, d: &[f64]) -> f64 {
        self.sign * self.a.iter().zip(d).map(|(p, q)| p * q).sum::<f64>()
    }
}

fn cell_constraints(model: &MlpModel, pattern: &ActivationPattern) -> Result<Vec<Constraint>> {
    let maps = layer_affine_maps(model, pattern)?;
    let mut out = Vec::with_capacity(pattern.len());
    let mut neuron = 0;
    for (a, c) in &maps[..maps.len() - 1] {
        for j in 0..a.rows() {
            out.push(Constraint {
                neuron,
                a: a.row(j).to_vec(),
                c: c[j],
                sign: if pattern.get(neuron) { 1.0 } else { -1.0 },
            });
            neuron += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeTag {
    Box,
    Neuron(usize),
}

/// Convex polygon clipping: keeps `sign·(a·x + c) ≥ 0`. Edge `i` runs from vertex `i` to `i+1`.
fn clip_polygon(
    verts: &[[f64; 2]],
    tags: &[EdgeTag],
    con: &Constraint,
) -> (Vec<[f64; 2]>, Vec<EdgeTag>) {
    let n = verts.len();
    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_t = Vec::with_capacity(n + 1);
    if n == 0 {
        return (out_v, out_t);
    }
    let val = |p: &[f64; 2]| con.slack(p);
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        let (vp, vq) = (val(&p), val(&q));
        if vp >= 0.0 {
            out_v.push(p);
            if vq >= 0.0 {
                out_t.push(tags[i]);
            } else {
                let t = vp / (vp - vq);
                out_t.push(tags[i]);
                out_v.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                out_t.push(EdgeTag::Neuron(con.neuron));
            }
        } else if vq >= 0.0 {
            let t = vp / (vp - vq);
            out_v.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            out_t.push(tags[i]);
        }
    }
    (out_v, out_t)
}

fn polygon_centroid(verts: &[[f64; 2]]) -> Option<[f64; 2]> {
    let n = verts.len();
    if n < 3 {
        return None;
    }
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    if a.abs() < 1e-300 {
        return None;
    }
    Some([cx / (3.0 * a), cy / (3.0 * a)])
}

/// Exact region polygon of `pattern` inside a 2-D box.
fn region_polygon(bounds: &BoxBounds, constraints: &[Constraint]) -> (Vec<[f64; 2]>, Vec<EdgeTag>) {
    let (l, h) = (&bounds.lo, &bounds.hi);
    let mut verts = vec![[l[0], l[1]], [h[0], l[1]], [h[0], h[1]], [l[0], h[1]]];
    let mut tags = vec![EdgeTag::Box; 4];
    for con in constraints {
        if con.a.iter().all(|&v| v == 0.0) {
            continue;
        }
        let (v, t) = clip_polygon(&verts, &tags, con);
        verts = v;
        tags = t;
    }
    (verts, tags)
}

/// Vertices (counter-clockwise) of the region of `pattern` inside a two-dimensional box.
/// Empty when the pattern does not occur in the box.
pub fn region_polygon_2d(
    model: &MlpModel,
    pattern: &ActivationPattern,
    bounds: &BoxBounds,
) -> Result<Vec<[f64; 2]>> {
    if bounds.dim() != 2 || model.input_dim() != 2 {
        return Err(Error::dim("region polygons need two-dimensional inputs"));
    }
    let constraints = cell_constraints(model, pattern)?;
    Ok(region_polygon(bounds, &constraints).0)
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(verts: &[[f64; 2]]) -> f64 {
    let n = verts.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a.abs()
}

/// A neuron index and a point just across the facet it defines.
type FacetStep = (usize, Vec<f64>);

/// Candidate points just across each facet of the cell, plus the cell centroid.
fn facet_steps_2d(
    bounds: &BoxBounds,
    constraints: &[Constraint],
) -> (Vec<FacetStep>, Option<Vec<f64>>) {
    let (verts, tags) = region_polygon(bounds, constraints);
    let centroid = polygon_centroid(&verts).map(|c| c.to_vec());
    let mut steps = Vec::new();
    let n = verts.len();
    for i in 0..n {
        let EdgeTag::Neuron(j) = tags[i] else {
            continue;
        };
        let p = verts[i];
        let q = verts[(i + 1) % n];
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        if len < 1e-12 * bounds.diameter() {
            continue;
        }
        let con = constraints.iter().find(|c| c.neuron == j).unwrap();
        let an = norm2(&con.a);
        let mid = [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5];
        let out = [-con.sign * con.a[0] / an, -con.sign * con.a[1] / an];
        let delta = (1e-4 * len).min(1e-7 * bounds.diameter().max(1.0));
        steps.push((j, vec![mid[0] + delta * out[0], mid[1] + delta * out[1]]));
    }
    (steps, centroid)
}

/// Probe rays from `x`: the first constraint hit along each ray marks a facet.
fn facet_steps_probe(
    bounds: &BoxBounds,
    constraints: &[Constraint],
    x: &[f64],
    rng: &mut SeededRng,
    probes: usize,
) -> Vec<(usize, Vec<f64>)> {
    let dim = x.len();
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(constraints.len() + probes);
    for con in constraints {
        let an = norm2(&con.a);
        if an > 0.0 {
            directions.push(con.a.iter().map(|v| -con.sign * v / an).collect());
        }
    }
    for _ in 0..probes {
        directions.push(rng.unit_vector(dim));
    }
    let mut seen = vec![false; constraints.len()];
    let mut steps = Vec::new();
    for d in directions {
        let t_box = bounds.exit_time(x, &d);
        let mut best: Option<(f64, usize)> = None;
        for (k, con) in constraints.iter().enumerate() {
            let r = con.rate(&d);
            if r < 0.0 {
                let t = con.slack(x) / -r;
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, k));
                }
            }
        }
        let Some((t, k)) = best else { continue };
        if t >= t_box || seen[k] {
            continue;
        }
        seen[k] = true;
        let delta = (1e-7 * bounds.diameter().max(1.0)).min(0.5 * (t_box - t));
        let y: Vec<f64> = x
            .iter()
            .zip(&d)
            .map(|(xi, di)| xi + (t + delta) * di)
            .collect();
        steps.push((constraints[k].neuron, y));
    }
    steps
}

/// Finds a non-boundary point near `x` inside the box.
fn interior_start(
    model: &MlpModel,
    bounds: &BoxBounds,
    x: &[f64],
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let mut p = x.to_vec();
    for attempt in 0..200 {
        if bounds.contains(&p) && !activation_pattern(model, &p)?.is_boundary() {
            return Ok(p);
        }
        let scale = bounds.diameter() * 1e-3 * (1.0 + attempt as f64);
        p = x
            .iter()
            .zip(bounds.lo.iter().zip(&bounds.hi))
            .map(|(v, (l, h))| (v + scale * (2.0 * rng.uniform() - 1.0)).clamp(*l, *h))
            .collect();
    }
    Err(Error::Numeric("no interior starting point found".into()))
}

/// Breadth-first discovery of the linear regions intersecting `bounds`.
pub fn enumerate_cells(
    model: &MlpModel,
    bounds: &BoxBounds,
    opts: &EnumerateOptions,
) -> Result<Enumeration> {
    if bounds.dim() != model.input_dim() {
        return Err(Error::dim(format!(
            "{}-dimensional box for a model with {} inputs",
            bounds.dim(),
            model.input_dim()
        )));
    }
    if opts.output >= model.output_dim() {
        return Err(Error::dim(format!("output {} out of range", opts.output)));
    }
    let mut rng = SeededRng::new(opts.seed, Stream::Search);
    let start = interior_start(model, bounds, &bounds.center(), &mut rng)?;
    let mut index: HashMap<ActivationPattern, usize> = HashMap::new();
    let mut cells: Vec<RegionCell> = Vec::new();
    let mut crossings = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut partial = false;

    let add_cell = |pattern: ActivationPattern,
                    witness: Vec<f64>,
                    cells: &mut Vec<RegionCell>,
                    index: &mut HashMap<ActivationPattern, usize>,
                    queue: &mut VecDeque<usize>|
     -> Result<usize> {
        let (w_a, b_a) = local_affine_output(model, &pattern, opts.output)?;
        let id = cells.len();
        index.insert(pattern.clone(), id);
        cells.push(RegionCell {
            id,
            pattern,
            w_a,
            b_a,
            witness: Vector::from(witness),
            neighbors: Vec::new(),
        });
        queue.push_back(id);
        Ok(id)
    };

    let first = activation_pattern(model, &start)?.pattern;
    add_cell(first, start, &mut cells, &mut index, &mut queue)?;

    while let Some(id) = queue.pop_front() {
        let pattern = cells[id].pattern.clone();
        let constraints = cell_constraints(model, &pattern)?;
        let steps = if bounds.dim() == 2 {
            let (steps, centroid) = facet_steps_2d(bounds, &constraints);
            if let Some(c) = centroid {
                let probe = activation_pattern(model, &c)?;
                if !probe.is_boundary() && probe.pattern == pattern {
                    cells[id].witness = Vector::from(c);
                }
            }
            steps
        } else {
            let x = cells[id].witness.to_vec();
            facet_steps_probe(bounds, &constraints, &x, &mut rng, opts.probes)
        };
        for (neuron, y) in steps {
            if !bounds.contains(&y) {
                continue;
            }
            let probe = activation_pattern(model, &y)?;
            if probe.pattern == pattern {
                continue;
            }
            let flipped = pattern.differing(&probe.pattern);
            let to = match index.get(&probe.pattern) {
                Some(&to) => to,
                None => {
                    if cells.len() >= opts.budget {
                        partial = true;
                        continue;
                    }
                    if probe.is_boundary() {
                        continue;
                    }
                    add_cell(probe.pattern.clone(), y, &mut cells, &mut index, &mut queue)?
                }
            };
            if flipped.len() == 1 && flipped[0] == neuron {
                if !cells[id].neighbors.iter().any(|&(n, _)| n == to) {
                    cells[id].neighbors.push((to, neuron));
                }
                if !cells[to].neighbors.iter().any(|&(n, _)| n == id) {
                    cells[to].neighbors.push((id, neuron));
                }
            }
            crossings.push(Crossing {
                from: id,
                to,
                neuron,
                flipped,
            });
        }
    }
    for c in &mut cells {
        c.neighbors.sort_unstable();
    }
    Ok(Enumeration {
        cells,
        crossings,
        partial,
        output: opts.output,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyReport {
    /// Unordered adjacent pairs `(a, b, flipped bits)` with `a < b`.
    pub pairs: Vec<(usize, usize, Vec<usize>)>,
    pub single_flip: usize,
    /// Adjacent pairs whose patterns differ in more than one bit.
    pub violations: Vec<(usize, usize, Vec<usize>)>,
}

impl AdjacencyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every detected adjacent pair differs in exactly one pattern bit.
pub fn adjacency_diagnostic(en: &Enumeration) -> AdjacencyReport {
    let mut pairs: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for x in &en.crossings {
        let (a, b) = (x.from.min(x.to), x.from.max(x.to));
        if a != b && !pairs.iter().any(|(p, q, _)| *p == a && *q == b) {
            pairs.push((a, b, x.flipped.clone()));
        }
    }
    for cell in &en.cells {
        for &(n, _) in &cell.neighbors {
            let (a, b) = (cell.id.min(n), cell.id.max(n));
            if !pairs.iter().any(|(p, q, _)| *p == a && *q == b) {
                let flipped = en.cells[a].pattern.differing(&en.cells[b].pattern);
                pairs.push((a, b, flipped));
            }
        }
    }
    pairs.sort();
    let violations: Vec<_> = pairs
        .iter()
        .filter(|(_, _, f)| f.len() != 1)
        .cloned()
        .collect();
    AdjacencyReport {
        single_flip: pairs.len() - violations.len(),
        pairs,
        violations,
    }
}

/// Angle between the graph faces `y = a·x + ·` and `y = b·x + ·`, from normals `(-1, a)` and `(-1, b)`.
/// Coplanar faces give π.
pub fn dihedral_angle(a: &[f64], b: &[f64]) -> f64 {
    let ab = dot(a, b).expect("gradients of equal length");
    let cos = (1.0 + ab) / ((1.0 + dot(a, a).unwrap()).sqrt() * (1.0 + dot(b, b).unwrap()).sqrt());
    PI - cos.clamp(-1.0, 1.0).acos()
}

fn bound_from_product(product: f64) -> f64 {
    let t1 = PI - (1.0 / (1.0 + product).sqrt()).clamp(-1.0, 1.0).acos();
    let t2 = PI - ((4.0 - product) / (4.0 + product)).clamp(-1.0, 1.0).acos();
    t1.min(t2)
}

/// Lower bound on the dihedral angle of adjacent faces for depth `depth`, hidden width `width`
/// and row norms at most `c`: the smaller of `π − arccos(1/√(1+B))` and
/// `π − arccos((4−B)/(4+B))` with `B = c^L · n^((L−2)/2)`.
pub fn angle_lower_bound(c: f64, depth: usize, width: usize) -> f64 {
    let b = c.powi(depth as i32) * (width as f64).powf((depth as f64 - 2.0) / 2.0);
    bound_from_product(b)
}

/// The tighter bound when the map feeding layer `k` is a multiple of an orthogonal matrix;
/// `B = c^(L−k+1) · n^((L−k−1)/2)`. The orthogonality hypothesis is the caller's to check.
pub fn orthogonal_layer_bound(c: f64, depth: usize, k: usize, width: usize) -> Result<f64> {
    if k < 1 || k + 1 > depth {
        return Err(Error::param(format!(
            "layer k={k} outside 1..={}",
            depth.saturating_sub(1)
        )));
    }
    let b =
        c.powi((depth - k + 1) as i32) * (width as f64).powf((depth as f64 - k as f64 - 1.0) / 2.0);
    Ok(bound_from_product(b))
}

/// Angle floor implied by a bound `s` on the norm of the gradient jump `l_i·w_i` between
/// adjacent faces: `π − 2·arctan(s/2)`.
pub fn angle_floor_from_jump(s: f64) -> f64 {
    PI - 2.0 * (s / 2.0).atan()
}

/// Angle floor with the jump bounded by the row-norm product `c^L · n^((L−2)/2)`.
/// Unlike [`angle_lower_bound`], this holds for every `c`.
pub fn angle_lower_bound_sharp(c: f64, depth: usize, width: usize) -> f64 {
    angle_floor_from_jump(c.powi(depth as i32) * (width as f64).powf((depth as f64 - 2.0) / 2.0))
}

/// Measures `U_{k,1}`'s distance from a scaled orthogonal matrix: `max |G/s − I|` where
/// `G = U Uᵀ` and `s` its mean diagonal. Zero for exact multiples of orthogonal matrices.
pub fn orthogonality_defect(u: &Matrix) -> Result<f64> {
    let g = u.matmul_transposed(u)?;
    let n = g.rows();
    let s = (0..n).map(|i| g.get(i, i)).sum::<f64>() / n as f64;
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) / s - target).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnglePair {
    pub pair_id: usize,
    pub cell_a: usize,
    pub cell_b: usize,
    pub neuron: usize,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub pairs: Vec<AnglePair>,
    pub min_angle: Option<f64>,
    pub bound: f64,
    pub sharp_bound: f64,
    pub partial: bool,
}

impl AngleReport {
    pub fn violations(&self, tol: f64) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.angle < self.bound - tol)
            .count()
    }
}

/// Dihedral angle of every single-flip adjacent pair, with the bounds for row-norm cap `c`.
pub fn angle_report(model: &MlpModel, en: &Enumeration, c: f64) -> AngleReport {
    let mut pairs = Vec::new();
    for cell in &en.cells {
        for &(n, neuron) in &cell.neighbors {
            if n > cell.id {
                pairs.push(AnglePair {
                    pair_id: pairs.len(),
                    cell_a: cell.id,
                    cell_b: n,
                    neuron,
                    angle: dihedral_angle(&cell.w_a, &en.cells[n].w_a),
                });
            }
        }
    }
    let min_angle = pairs.iter().map(|p| p.angle).reduce(f64::min);
    AngleReport {
        pairs,
        min_angle,
        bound: angle_lower_bound(c, model.depth(), model.hidden_width()),
        sharp_bound: angle_lower_bound_sharp(c, model.depth(), model.hidden_width()),
        partial: en.partial,
    }
}
