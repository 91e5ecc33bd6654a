//! Model checkpoints in the text container (`#maxnorm checkpoint v1`).

use std::path::Path;

use crate::container::Document;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::net::MlpModel;

pub const KIND: &str = "checkpoint";
pub const VERSION: u32 = 1;

pub fn to_document(model: &MlpModel) -> Document {
    let mut doc = Document::new(KIND, VERSION);
    let dims: Vec<String> = model.dims().iter().map(usize::to_string).collect();
    doc.field("dims", dims.join(" "))
        .field("head", model.head())
        .field("loss", model.loss_kind());
    for (l, w) in model.weights().iter().enumerate() {
        doc.array(
            &format!("w{}", l + 1),
            w.rows(),
            w.cols(),
            w.data().to_vec(),
        );
    }
    for (l, b) in model.biases().iter().enumerate() {
        doc.array(&format!("b{}", l + 1), 1, b.len(), b.to_vec());
    }
    doc
}

pub fn from_document(doc: &Document) -> Result<MlpModel> {
    if doc.kind != KIND {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected a {KIND} document, found '{}'", doc.kind),
        });
    }
    if doc.version != VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported checkpoint version {}", doc.version),
        });
    }
    let dims = doc
        .get("dims")?
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: 0,
                message: format!("bad dimension '{t}'"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let head = doc.get("head")?.parse()?;
    let loss = doc.get("loss")?.parse()?;
    let layers = dims.len().saturating_sub(1);
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for l in 1..=layers {
        let w = doc.get_array(&format!("w{l}"))?;
        weights.push(Matrix::from_vec(w.rows, w.cols, w.data.clone())?);
        let b = doc.get_array(&format!("b{l}"))?;
        biases.push(Vector::from_vec(b.data.clone())?);
    }
    MlpModel::new(dims, weights, biases, head, loss)
}

pub fn to_text(model: &MlpModel) -> String {
    to_document(model).to_text()
}

pub fn from_text(text: &str) -> Result<MlpModel> {
    from_document(&Document::parse(text)?)
}

pub fn save(model: &MlpModel, path: &Path) -> Result<()> {
    to_document(model).save(path)
}

pub fn load(path: &Path) -> Result<MlpModel> {
    from_document(&Document::load(path)?)
}
