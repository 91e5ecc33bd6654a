//! Dataset readers (MNIST IDX, CIFAR-10 binary batches), class filtering, Gaussian noise
//! injection and a text cache.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::container::Document;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::net::LabeledSample;
use crate::rng::{SeededRng, Stream};

/// Environment variable naming the directory with the dataset files.
pub const DATA_DIR_ENV: &str = "MAXNORM_DATA_DIR";

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;
const CIFAR_RECORD: usize = 3073;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<LabeledSample>,
    /// 0 for clean data, otherwise the noise level in 1..=5.
    pub noise_level: u8,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<LabeledSample>) -> Self {
        Dataset {
            name: name.into(),
            samples,
            noise_level: 0,
            seed: 0,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for s in &self.samples {
            if s.label < classes {
                counts[s.label] += 1;
            }
        }
        counts
    }
}

/// Reads a file, transparently inflating gzip content.
fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Format {
                context: path.display().to_string(),
                offset: 0,
                message: format!("gzip stream: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, context: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            context: context.to_string(),
            offset: offset as u64,
            message: "truncated header".into(),
        })
}

/// Parses IDX image bytes into `(count, rows·cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], context: &str) -> Result<(usize, usize, Vec<u8>)> {
    let magic = be_u32(bytes, 0, context)?;
    if magic != IDX_IMAGES {
        return Err(Error::Format {
            context: context.into(),
            offset: 0,
            message: format!("bad image magic {magic:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, context)? as usize;
    let rows = be_u32(bytes, 8, context)? as usize;
    let cols = be_u32(bytes, 12, context)? as usize;
    let dim = rows * cols;
    let need = 16 + count * dim;
    if bytes.len() != need {
        return Err(Error::Format {
            context: context.into(),
            offset: bytes.len().min(need) as u64,
            message: format!(
                "expected {need} bytes for {count} images of {rows}x{cols}, found {}",
                bytes.len()
            ),
        });
    }
    Ok((count, dim, bytes[16..].to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], context: &str) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, context)?;
    if magic != IDX_LABELS {
        return Err(Error::Format {
            context: context.into(),
            offset: 0,
            message: format!("bad label magic {magic:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, context)? as usize;
    if bytes.len() != 8 + count {
        return Err(Error::Format {
            context: context.into(),
            offset: bytes.len().min(8 + count) as u64,
            message: format!(
                "expected {} bytes for {count} labels, found {}",
                8 + count,
                bytes.len()
            ),
        });
    }
    Ok(bytes[8..].to_vec())
}

fn pixels_to_samples(pixels: &[u8], dim: usize, labels: &[u8]) -> Vec<LabeledSample> {
    pixels
        .chunks_exact(dim)
        .zip(labels)
        .map(|(p, &l)| {
            LabeledSample::new(
                Vector::from(p.iter().map(|&v| v as f64 / 255.0).collect::<Vec<_>>()),
                l as usize,
            )
        })
        .collect()
}

/// Loads an IDX image/label pair (optionally gzipped); pixels scaled to `[0, 1]`.
pub fn load_mnist(images: &Path, labels: &Path) -> Result<Dataset> {
    let img_ctx = images.display().to_string();
    let lab_ctx = labels.display().to_string();
    let (count, dim, pixels) = parse_idx_images(&read_maybe_gz(images)?, &img_ctx)?;
    let labs = parse_idx_labels(&read_maybe_gz(labels)?, &lab_ctx)?;
    if labs.len() != count {
        return Err(Error::Format {
            context: lab_ctx,
            offset: 4,
            message: format!("{} labels for {count} images", labs.len()),
        });
    }
    if let Some(pos) = labs.iter().position(|&l| l > 9) {
        return Err(Error::Format {
            context: lab_ctx,
            offset: 8 + pos as u64,
            message: format!("label {} out of range", labs[pos]),
        });
    }
    let name = images
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mnist".into());
    Ok(Dataset::new(name, pixels_to_samples(&pixels, dim, &labs)))
}

/// Image and label paths of the MNIST train (`train = true`) or test split in `dir`,
/// accepting both plain and `.gz` files.
pub fn mnist_paths(dir: &Path, train: bool) -> Result<(PathBuf, PathBuf)> {
    let prefix = if train { "train" } else { "t10k" };
    let find = |stem: String| -> Result<PathBuf> {
        for cand in [stem.clone(), format!("{stem}.gz")] {
            let p = dir.join(&cand);
            if p.is_file() {
                return Ok(p);
            }
        }
        Err(Error::io(
            dir.join(&stem),
            std::io::Error::new(std::io::ErrorKind::NotFound, "MNIST file not found"),
        ))
    };
    Ok((
        find(format!("{prefix}-images-idx3-ubyte"))?,
        find(format!("{prefix}-labels-idx1-ubyte"))?,
    ))
}

pub fn load_mnist_dir(dir: &Path, train: bool) -> Result<Dataset> {
    let (i, l) = mnist_paths(dir, train)?;
    load_mnist(&i, &l)
}

pub fn parse_cifar10(bytes: &[u8], context: &str) -> Result<Vec<LabeledSample>> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::Format {
            context: context.into(),
            offset: (bytes.len() - bytes.len() % CIFAR_RECORD) as u64,
            message: format!(
                "{} bytes is not a whole number of {CIFAR_RECORD}-byte records",
                bytes.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(bytes.len() / CIFAR_RECORD);
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] > 9 {
            return Err(Error::Format {
                context: context.into(),
                offset: (i * CIFAR_RECORD) as u64,
                message: format!("label {} out of range", rec[0]),
            });
        }
        let x: Vec<f64> = rec[1..].iter().map(|&v| v as f64 / 255.0).collect();
        out.push(LabeledSample::new(x, rec[0] as usize));
    }
    Ok(out)
}

/// Concatenates CIFAR-10 binary batches.
pub fn load_cifar10(batches: &[PathBuf]) -> Result<Dataset> {
    if batches.is_empty() {
        return Err(Error::Empty("no CIFAR-10 batch files given".into()));
    }
    let mut samples = Vec::new();
    for p in batches {
        samples.extend(parse_cifar10(&read_maybe_gz(p)?, &p.display().to_string())?);
    }
    Ok(Dataset::new("cifar10", samples))
}

/// Keeps classes `a` and `b`, relabelled 0 and 1, in original order.
pub fn filter_binary(ds: &Dataset, a: usize, b: usize) -> Result<Dataset> {
    if a == b {
        return Err(Error::param(format!("classes must differ, got {a} twice")));
    }
    let samples: Vec<LabeledSample> = ds
        .samples
        .iter()
        .filter(|s| s.label == a || s.label == b)
        .map(|s| LabeledSample::new(s.x.clone(), usize::from(s.label == b)))
        .collect();
    let mut out = Dataset {
        name: format!("{}[{a}/{b}]", ds.name),
        samples,
        ..ds.clone()
    };
    if out.samples.is_empty() {
        out.warnings.push(format!("no samples of class {a} or {b}"));
    }
    Ok(out)
}

/// Noise scale `η = 0.1·level`.
pub fn noise_scale(level: u8) -> f64 {
    0.1 * level as f64
}

/// Adds `η·z` with `z` standard normal per coordinate. The draws depend only on `seed`, so
/// all levels share one `z`. Level 0 returns the data unchanged.
pub fn add_noise(ds: &Dataset, level: u8, seed: u64, clip: bool) -> Result<Dataset> {
    if level > 5 {
        return Err(Error::param(format!(
            "noise level must be in 0..=5, got {level}"
        )));
    }
    let mut out = ds.clone();
    out.noise_level = level;
    out.seed = seed;
    if level == 0 {
        return Ok(out);
    }
    let eta = noise_scale(level);
    let mut rng = SeededRng::new(seed, Stream::Noise);
    for s in &mut out.samples {
        for v in s.x.iter_mut() {
            *v += eta * rng.normal();
            if clip {
                *v = v.clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}

/// Seeded shuffle, then the last `val_fraction` of samples become the validation set.
pub fn train_val_split(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::param(format!(
            "validation fraction must be in [0, 1), got {val_fraction}"
        )));
    }
    let mut samples = ds.samples.clone();
    SeededRng::new(seed, Stream::Split).shuffle(&mut samples);
    let n_val = (samples.len() as f64 * val_fraction).round() as usize;
    let val = samples.split_off(samples.len() - n_val);
    let mk = |suffix: &str, samples| Dataset {
        name: format!("{}:{suffix}", ds.name),
        samples,
        warnings: Vec::new(),
        ..ds.clone()
    };
    Ok((mk("train", samples), mk("val", val)))
}

pub const CACHE_KIND: &str = "dataset";
pub const CACHE_VERSION: u32 = 1;

pub fn to_document(ds: &Dataset) -> Document {
    let mut doc = Document::new(CACHE_KIND, CACHE_VERSION);
    doc.field("name", &ds.name)
        .field("noise_level", ds.noise_level)
        .field("seed", ds.seed)
        .field("count", ds.len())
        .field("dim", ds.dim());
    let x: Vec<f64> = ds
        .samples
        .iter()
        .flat_map(|s| s.x.iter().copied())
        .collect();
    doc.array("x", ds.len(), ds.dim(), x);
    doc.array(
        "labels",
        1,
        ds.len(),
        ds.samples.iter().map(|s| s.label as f64).collect(),
    );
    doc
}

pub fn from_document(doc: &Document) -> Result<Dataset> {
    if doc.kind != CACHE_KIND || doc.version != CACHE_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected a {CACHE_KIND} v{CACHE_VERSION} document"),
        });
    }
    let num = |k: &str| -> Result<u64> {
        doc.get(k)?.parse().map_err(|_| Error::Parse {
            line: 0,
            message: format!("field '{k}' is not an integer"),
        })
    };
    let count = num("count")? as usize;
    let x = doc.get_array("x")?;
    let labels = doc.get_array("labels")?;
    if x.rows != count || labels.data.len() != count {
        return Err(Error::Parse {
            line: 0,
            message: "sample count disagrees with arrays".into(),
        });
    }
    let dim = x.cols;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let l = labels.data[i];
        if l < 0.0 || l.fract() != 0.0 {
            return Err(Error::Parse {
                line: 0,
                message: format!("label {l} is not a class index"),
            });
        }
        samples.push(LabeledSample::new(
            x.data[i * dim..(i + 1) * dim].to_vec(),
            l as usize,
        ));
    }
    Ok(Dataset {
        name: doc.get("name")?.to_string(),
        samples,
        noise_level: num("noise_level")? as u8,
        seed: num("seed")?,
        warnings: Vec::new(),
    })
}

pub fn save_cache(ds: &Dataset, path: &Path) -> Result<()> {
    to_document(ds).save(path)
}

pub fn load_cache(path: &Path) -> Result<Dataset> {
    from_document(&Document::load(path)?)
}
