//! Command-line front end. The binary only parses arguments and maps errors to exit codes;
//! every command lives here so it can be driven from tests.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::checkpoint;
use crate::complexity::{rademacher_bound, HypothesisClassSpec};
use crate::data::{self, Dataset, DATA_DIR_ENV};
use crate::error::{Error, Result};
use crate::geometry::{
    adjacency_diagnostic, angle_lower_bound, angle_lower_bound_sharp, angle_report,
    enumerate_cells, orthogonal_layer_bound, BoxBounds, EnumerateOptions,
};
use crate::net::{Head, LossKind, MlpModel};
use crate::report;
use crate::robustness::{
    bound_radius, bound_volume, certify, lipschitz_bound, lipschitz_bound_sound, BallConstant,
    BoundValue, CertifyOptions, RobustInputs, SearchOptions,
};
use crate::train::{train_with_progress, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "maxnorm",
    version,
    about = "Row-norm constrained ReLU networks: training, robustness, geometry and bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a TOML config; writes a checkpoint, an epoch CSV and a manifest.
    Train(TrainArgs),
    /// Test accuracy of checkpoints under Gaussian input noise.
    NoiseBench(NoiseArgs),
    /// Certified radii, robust measures and their lower bounds.
    Certify(CertifyArgs),
    /// Linear regions and dihedral angles of a checkpoint's graph.
    Geometry(GeometryArgs),
    /// Closed-form bounds from numeric inputs only.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    #[default]
    Mnist,
    Cifar10,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory holding the dataset files.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DatasetKind::Mnist)]
    pub dataset: DatasetKind,
    /// Keep two classes, relabelled 0 and 1 (e.g. `0,1`).
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<usize>>,
    /// Use only the first N samples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the row-norm bound of the config.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Default data directory when the config has none.
    #[arg(long, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Noise levels, as a range `0..5` or a list `0,2,5`.
    #[arg(long, default_value = "0..5")]
    pub levels: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clip noisy pixels to [0, 1].
    #[arg(long)]
    pub clip: bool,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LipChoice {
    /// `n^(L/2−1)·c^L`
    Stated,
    /// `n^((L−1)/2)·c^L`
    Sound,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Bound calculator only: no model, prints radius bounds for (c, γ, ε).
    #[arg(long)]
    pub table: bool,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 784)]
    pub width: usize,
    #[arg(long, default_value = "crossentropy")]
    pub loss: LossKind,
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    #[arg(long, value_enum, default_value_t = LipChoice::Stated)]
    pub lip: LipChoice,
    /// Adversarial search directions per sample; 0 skips the search.
    #[arg(long, default_value_t = 16)]
    pub budget: usize,
    #[arg(long, default_value = "stated")]
    pub constant: BallConstant,
    /// Keep adversarial search points inside [0, 1]^n0.
    #[arg(long)]
    pub clip: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Box `lo,hi` applied to every input coordinate.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 1.0])]
    pub bounds: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// Row-norm bound for the angle bound; defaults to the model's largest row norm.
    #[arg(long)]
    pub c: Option<f64>,
    /// Output coordinate to analyse.
    #[arg(long, default_value_t = 0)]
    pub output: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub c: f64,
    /// Depth L of the network (layers of weights).
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// Hidden width n.
    #[arg(long, default_value_t = 1)]
    pub width: usize,
    /// Layer k for the orthogonal-layer angle bound.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value = "crossentropy")]
    pub loss: LossKind,
    /// Input dimension for the volume bound.
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long, default_value = "stated")]
    pub constant: BallConstant,
    /// Rademacher class depth; defaults to `--depth`.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub xmax: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub kind: DatasetKind,
    pub dir: Option<PathBuf>,
    pub classes: Option<[usize; 2]>,
    pub limit: Option<usize>,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
}

fn default_val_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dims: Vec<usize>,
    #[serde(default = "default_head")]
    pub head: Head,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default)]
    pub seed: u64,
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_head() -> Head {
    Head::Softmax
}

fn default_loss() -> LossKind {
    LossKind::CrossEntropy
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canon.as_bytes()))
    }
}

pub fn parse_levels(spec: &str) -> Result<Vec<u8>> {
    let bad = || Error::Config(format!("bad level list '{spec}'"));
    let levels: Vec<u8> = if let Some((a, b)) = spec.split_once("..") {
        let a: u8 = a.trim().parse().map_err(|_| bad())?;
        let b: u8 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if levels.is_empty() || levels.iter().any(|&l| l > 5) {
        return Err(Error::Config(format!(
            "levels must lie in 0..=5, got '{spec}'"
        )));
    }
    Ok(levels)
}

fn resolve_dir(dir: Option<&Path>) -> Result<PathBuf> {
    dir.map(Path::to_path_buf).ok_or_else(|| {
        Error::Config(format!(
            "no data directory: pass --data-dir or set {DATA_DIR_ENV}"
        ))
    })
}

pub fn load_dataset(
    kind: DatasetKind,
    dir: &Path,
    train: bool,
    classes: Option<(usize, usize)>,
    limit: Option<usize>,
) -> Result<Dataset> {
    let mut ds = match kind {
        DatasetKind::Mnist => data::load_mnist_dir(dir, train)?,
        DatasetKind::Cifar10 => {
            let files: Vec<PathBuf> = if train {
                (1..=5)
                    .map(|i| dir.join(format!("data_batch_{i}.bin")))
                    .collect()
            } else {
                vec![dir.join("test_batch.bin")]
            };
            data::load_cifar10(&files)?
        }
    };
    if let Some((a, b)) = classes {
        ds = data::filter_binary(&ds, a, b)?;
        for w in &ds.warnings {
            eprintln!("warning: {w}");
        }
    }
    if let Some(n) = limit {
        ds.samples.truncate(n);
    }
    if ds.is_empty() {
        return Err(Error::Empty(format!(
            "dataset '{}' has no samples",
            ds.name
        )));
    }
    Ok(ds)
}

fn classes_pair(v: &Option<Vec<usize>>) -> Result<Option<(usize, usize)>> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some((a, b))),
        Some(other) => Err(Error::Config(format!(
            "--classes takes two labels, got {other:?}"
        ))),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn bound_json(b: &BoundValue) -> serde_json::Value {
    json!({
        "value": b.value,
        "ln_value": if b.ln_value.is_finite() { json!(b.ln_value) } else { json!(null) },
        "vacuous": b.vacuous,
    })
}

pub fn cmd_train(args: &TrainArgs) -> Result<serde_json::Value> {
    let text = fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = args.c {
        cfg.train.c = Some(c);
    }
    cfg.train.seed = cfg.seed;
    cfg.train.validate()?;
    if cfg.data.dir.is_none() {
        cfg.data.dir = args.data_dir.clone();
    }
    let dir = resolve_dir(cfg.data.dir.as_deref())?;
    let classes = cfg.data.classes.map(|[a, b]| (a, b));
    let full = load_dataset(cfg.data.kind, &dir, true, classes, cfg.data.limit)?;
    if cfg.dims.first() != Some(&full.dim()) {
        return Err(Error::Config(format!(
            "model input size {:?} does not match data dimension {}",
            cfg.dims.first(),
            full.dim()
        )));
    }
    let (tr, va) = data::train_val_split(&full, cfg.data.val_fraction, cfg.seed)?;
    let val = if va.is_empty() { &tr } else { &va };
    let model = MlpModel::init(&cfg.dims, cfg.head, cfg.loss, cfg.seed)?;
    let (model, rep) = train_with_progress(model, &tr.samples, &val.samples, &cfg.train, |e| {
        eprintln!(
            "epoch {:>3}  train_loss {:.5}  train_acc {:.4}  val_acc {:.4}  max_row_norm {:.4}",
            e.epoch, e.train_loss, e.train_acc, e.val_acc, e.max_row_norm
        );
    })?;
    let (epsilon, gamma) = model.evaluate(&tr.samples)?;
    write_file(&args.out, "train.csv", &rep.to_csv())?;
    checkpoint::save(&model, &args.out.join("model.ckpt"))?;
    let manifest = json!({
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "dims": cfg.dims,
        "c": cfg.train.c,
        "gamma": gamma,
        "epsilon": epsilon,
        "layer_norms": model.layer_norms(),
        "max_row_norm": model.max_row_norm(),
        "best_epoch": rep.best_epoch,
        "epochs_run": rep.final_epoch,
        "train_samples": tr.len(),
        "val_samples": va.len(),
        "checkpoint": "model.ckpt",
    });
    write_file(&args.out, "manifest.json", &json_text(&manifest))?;
    Ok(manifest)
}

/// Test accuracy per model (rows) and noise level (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    pub names: Vec<String>,
    pub levels: Vec<u8>,
    pub acc: Vec<Vec<f64>>,
}

pub fn cmd_noise_bench(args: &NoiseArgs) -> Result<NoiseTable> {
    let levels = parse_levels(&args.levels)?;
    let models: Vec<(String, MlpModel)> = args
        .checkpoints
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            checkpoint::load(p).map(|m| (name, m))
        })
        .collect::<Result<_>>()?;
    let dir = resolve_dir(args.data.data_dir.as_deref())?;
    let test = load_dataset(
        args.data.dataset,
        &dir,
        false,
        classes_pair(&args.data.classes)?,
        args.data.limit,
    )?;
    let noisy: Vec<Dataset> = levels
        .iter()
        .map(|&l| data::add_noise(&test, l, args.seed, args.clip))
        .collect::<Result<_>>()?;
    let mut acc = Vec::with_capacity(models.len());
    for (_, m) in &models {
        let row: Vec<f64> = noisy
            .iter()
            .map(|d| m.evaluate(&d.samples).map(|(_, a)| a))
            .collect::<Result<_>>()?;
        acc.push(row);
    }
    let names: Vec<String> = models.into_iter().map(|(n, _)| n).collect();
    if let Some(out) = &args.out {
        write_file(
            out,
            "noise.csv",
            &report::noise_table_csv(&names, &levels, &acc),
        )?;
        write_file(
            out,
            "best.csv",
            &report::best_per_level_csv(&names, &levels, &acc),
        )?;
    }
    Ok(NoiseTable { names, levels, acc })
}

/// Rows printed by `certify --table` without explicit inputs: `(c, γ, ε)`.
pub const REFERENCE_ROWS: [(f64, f64, f64); 2] = [(0.2, 0.9996, 0.3097), (0.3, 0.9994, 0.2945)];

pub fn table_rows(args: &CertifyArgs) -> Result<Vec<(RobustInputs, BoundValue)>> {
    let rows: Vec<(f64, f64, f64)> = match (args.c, args.gamma, args.epsilon) {
        (Some(c), Some(g), Some(e)) => vec![(c, g, e)],
        (None, None, None) => REFERENCE_ROWS.to_vec(),
        _ => {
            return Err(Error::Config(
                "--table needs all of --c, --gamma, --epsilon or none".into(),
            ))
        }
    };
    rows.into_iter()
        .map(|(c, gamma, epsilon)| {
            let inp = RobustInputs {
                c,
                depth: args.depth,
                width: args.width,
                gamma,
                epsilon,
                loss: args.loss,
            };
            bound_radius(&inp).map(|b| (inp, b))
        })
        .collect()
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<serde_json::Value> {
    if args.table {
        let rows = table_rows(args)?;
        let printable: Vec<Vec<String>> = rows
            .iter()
            .map(|(i, b)| {
                vec![
                    format!("{}", i.c),
                    format!("{}", i.gamma),
                    format!("{}", i.epsilon),
                    if b.vacuous {
                        "vacuous".into()
                    } else {
                        format!("{:.3}", b.value)
                    },
                ]
            })
            .collect();
        print!(
            "{}",
            report::text_table(&["c", "gamma", "epsilon", "radius_bound"], &printable)
        );
        let v = json!({
            "rows": rows.iter().map(|(i, b)| json!({"inputs": i, "radius": bound_json(b)})).collect::<Vec<_>>()
        });
        if let Some(out) = &args.out {
            write_file(out, "table.json", &json_text(&v))?;
        }
        return Ok(v);
    }
    let ckpt = args
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("certify needs --checkpoint or --table".into()))?;
    let model = checkpoint::load(ckpt)?;
    let dir = resolve_dir(args.data.data_dir.as_deref())?;
    let ds = load_dataset(
        args.data.dataset,
        &dir,
        args.split == Split::Train,
        classes_pair(&args.data.classes)?,
        args.data.limit,
    )?;
    let c = args.c.unwrap_or_else(|| model.max_row_norm());
    let (depth, width) = (model.depth(), model.hidden_width());
    let lip = match args.lip {
        LipChoice::Stated => lipschitz_bound(c, depth, width),
        LipChoice::Sound => lipschitz_bound_sound(c, depth, width),
    };
    let (epsilon, gamma) = model.evaluate(&ds.samples)?;
    let inputs = RobustInputs {
        c,
        depth,
        width,
        gamma,
        epsilon,
        loss: model.loss_kind(),
    };
    let opts = CertifyOptions {
        lip,
        constant: args.constant,
        search: (args.budget > 0).then(|| SearchOptions {
            budget: args.budget,
            seed: args.seed,
            clip_to_box: args.clip,
            ..SearchOptions::default()
        }),
        bounds: (depth >= 2).then_some(inputs),
    };
    let rep = certify(&model, &ds.samples, &opts)?;
    let bounds = rep.bounds.as_ref().map(|t| {
        json!({
            "inputs": t.inputs,
            "radius": bound_json(&t.radius),
            "volume": bound_json(&t.volume),
            "precondition_holds": !t.radius.vacuous,
        })
    });
    let summary = json!({
        "samples": rep.measures.samples,
        "correct": rep.measures.correct,
        "lip": rep.lip,
        "lip_kind": format!("{:?}", args.lip).to_lowercase(),
        "constant": rep.constant.to_string(),
        "r_fs": rep.measures.r_fs,
        "ln_v_fs": if rep.measures.ln_v_fs.is_finite() { json!(rep.measures.ln_v_fs) } else { json!(null) },
        "bounds": bounds,
        "inconsistent_samples": rep.inconsistent(),
    });
    eprintln!(
        "samples {}  accuracy {:.4}  loss {:.5}  r_FS {:.6}  radius bound {}",
        rep.measures.samples,
        gamma,
        epsilon,
        rep.measures.r_fs,
        rep.bounds
            .as_ref()
            .map(|t| if t.radius.vacuous {
                "vacuous".to_string()
            } else {
                format!("{:.6}", t.radius.value)
            })
            .unwrap_or_else(|| "n/a".into())
    );
    if let Some(out) = &args.out {
        write_file(out, "cert.csv", &rep.to_csv())?;
        write_file(out, "cert.json", &json_text(&summary))?;
    }
    Ok(summary)
}

pub fn cmd_geometry(args: &GeometryArgs) -> Result<serde_json::Value> {
    let &[lo, hi] = args.bounds.as_slice() else {
        return Err(Error::Config(format!(
            "--box takes lo,hi, got {:?}",
            args.bounds
        )));
    };
    let model = checkpoint::load(&args.checkpoint)?;
    let n0 = model.input_dim();
    let bounds = BoxBounds::new(vec![lo; n0], vec![hi; n0])?;
    let en = enumerate_cells(
        &model,
        &bounds,
        &EnumerateOptions {
            budget: args.budget,
            seed: args.seed,
            output: args.output,
            ..EnumerateOptions::default()
        },
    )?;
    let c = args.c.unwrap_or_else(|| model.max_row_norm());
    let rep = angle_report(&model, &en, c);
    let adj = adjacency_diagnostic(&en);
    let (depth, width) = (model.depth(), model.hidden_width());
    let x = (c.powi(depth as i32) * (width as f64).powf((depth as f64 - 2.0) / 2.0)).sqrt();
    let x_max = (2.0 * x).max(3.0);
    write_file(&args.out, "angles.csv", &report::angle_csv(&rep))?;
    write_file(&args.out, "curves.csv", &report::curves_csv(x_max, 200))?;
    let measured: Vec<(f64, f64)> = rep.min_angle.map(|a| (x, a)).into_iter().collect();
    write_file(
        &args.out,
        "angles.svg",
        &report::angle_svg(x_max, &measured),
    )?;
    let summary = json!({
        "cells": en.cells.len(),
        "adjacent_pairs": rep.pairs.len(),
        "partial": en.partial,
        "min_angle": rep.min_angle,
        "bound": rep.bound,
        "sharp_bound": rep.sharp_bound,
        "c": c,
        "curve_x": x,
        "multi_bit_pairs": adj.violations.len(),
    });
    write_file(&args.out, "angles.json", &json_text(&summary))?;
    Ok(summary)
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<serde_json::Value> {
    if !(args.c > 0.0) {
        return Err(Error::param("c must be positive"));
    }
    let mut v = json!({
        "inputs": {"c": args.c, "depth": args.depth, "width": args.width},
        "lipschitz": {
            "stated": lipschitz_bound(args.c, args.depth, args.width),
            "sound": lipschitz_bound_sound(args.c, args.depth, args.width),
        },
        "angle": {
            "bound": angle_lower_bound(args.c, args.depth, args.width),
            "sharp": angle_lower_bound_sharp(args.c, args.depth, args.width),
        },
    });
    if let Some(k) = args.k {
        v["angle"]["orthogonal_layer"] =
            json!(orthogonal_layer_bound(args.c, args.depth, k, args.width)?);
    }
    match (args.gamma, args.epsilon) {
        (Some(gamma), Some(epsilon)) => {
            let inp = RobustInputs {
                c: args.c,
                depth: args.depth,
                width: args.width,
                gamma,
                epsilon,
                loss: args.loss,
            };
            let mut r = json!({"radius": bound_json(&bound_radius(&inp)?)});
            if let Some(n0) = args.n0 {
                r["volume"] = bound_json(&bound_volume(&inp, n0, args.constant)?);
            }
            v["robust"] = r;
        }
        (None, None) => {}
        _ => return Err(Error::Config("--gamma and --epsilon go together".into())),
    }
    if let (Some(m), Some(xmax)) = (args.m, args.xmax) {
        let spec = HypothesisClassSpec {
            d: args.d.unwrap_or(args.depth),
            n: args.width,
            c: args.c,
            b: args.b,
        };
        let bound = rademacher_bound(&spec, m, xmax)?;
        let mut r = json!({"spec": spec, "m": m, "xmax": xmax, "bound": bound});
        if args.b == 0.0 {
            r["note"] = json!("b = 0: the bound is c^d * sqrt(n)^(d-1) * sqrt(2/m) * xmax");
        }
        v["rademacher"] = r;
    }
    if let Some(out) = &args.out {
        write_file(out, "bounds.json", &json_text(&v))?;
    }
    Ok(v)
}

/// Runs one parsed command, printing its summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let m = cmd_train(&a)?;
            print!("{}", json_text(&m));
        }
        Command::NoiseBench(a) => {
            let NoiseTable { names, levels, acc } = cmd_noise_bench(&a)?;
            let mut headers = vec!["model".to_string()];
            headers.extend(levels.iter().map(|l| format!("level{l}")));
            let rows: Vec<Vec<String>> = names
                .iter()
                .zip(&acc)
                .map(|(n, r)| {
                    let mut row = vec![n.clone()];
                    row.extend(r.iter().map(|a| format!("{a:.4}")));
                    row
                })
                .collect();
            let h: Vec<&str> = headers.iter().map(String::as_str).collect();
            print!("{}", report::text_table(&h, &rows));
        }
        Command::Certify(a) => {
            let v = cmd_certify(&a)?;
            if !a.table {
                print!("{}", json_text(&v));
            }
        }
        Command::Geometry(a) => {
            let v = cmd_geometry(&a)?;
            print!("{}", json_text(&v));
        }
        Command::Bounds(a) => {
            let v = cmd_bounds(&a)?;
            print!("{}", json_text(&v));
        }
    }
    Ok(())
}
