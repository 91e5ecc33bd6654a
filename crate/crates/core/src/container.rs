//! Versioned line-oriented text container shared by checkpoints and dataset caches.
//!
//! ```text
//! #maxnorm <kind> v<version>
//! <key> <value...>
//! @<array-name> <rows> <cols>
//! <cols reals>          (repeated rows times)
//! end
//! ```
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which reparses
//! to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &str = "#maxnorm";

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub kind: String,
    pub version: u32,
    pub fields: Vec<(String, String)>,
    pub arrays: Vec<Array>,
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl Document {
    pub fn new(kind: &str, version: u32) -> Self {
        Document {
            kind: kind.to_string(),
            version,
            fields: Vec::new(),
            arrays: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn array(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> &mut Self {
        debug_assert_eq!(rows * cols, data.len());
        self.arrays.push(Array {
            name: name.to_string(),
            rows,
            cols,
            data,
        });
        self
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing field '{key}'"),
            })
    }

    pub fn get_array(&self, name: &str) -> Result<&Array> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing array '{name}'"),
            })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {} v{}", self.kind, self.version);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k} {v}");
        }
        for a in &self.arrays {
            let _ = writeln!(out, "@{} {} {}", a.name, a.rows, a.cols);
            for row in a.data.chunks(a.cols.max(1)).take(a.rows) {
                let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines
            .next()
            .ok_or_else(|| perr(1, "empty document".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(perr(1, format!("expected '{MAGIC}' header")));
        }
        let kind = parts
            .next()
            .ok_or_else(|| perr(1, "missing document kind".into()))?
            .to_string();
        let version = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| perr(1, "missing or malformed version".into()))?;
        let mut doc = Document::new(&kind, version);
        let mut ended = false;
        while let Some((no, line)) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "end" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix('@') {
                let mut p = rest.split_whitespace();
                let name = p
                    .next()
                    .ok_or_else(|| perr(no, "array without name".into()))?;
                let mut dim = || -> Result<usize> {
                    p.next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| perr(no, format!("bad shape for array '{name}'")))
                };
                let (rows, cols) = (dim()?, dim()?);
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (rno, rline) = lines
                        .next()
                        .ok_or_else(|| perr(no, format!("array '{name}' truncated")))?;
                    let before = data.len();
                    for tok in rline.split_whitespace() {
                        let v: f64 = tok
                            .parse()
                            .map_err(|_| perr(rno, format!("bad real '{tok}'")))?;
                        data.push(v);
                    }
                    if data.len() - before != cols {
                        return Err(perr(
                            rno,
                            format!("expected {cols} values, found {}", data.len() - before),
                        ));
                    }
                }
                doc.array(name, rows, cols, data);
            } else {
                let (k, v) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                doc.field(k, v.trim());
            }
        }
        if !ended {
            return Err(perr(text.lines().count(), "missing 'end' marker".into()));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Document::parse(&text)
    }
}
