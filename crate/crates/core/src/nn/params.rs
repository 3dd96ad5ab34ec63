//! Named parameter blocks and their checkpoint text format.
//!
//! ```text
//! antijam-params 1
//! arch <label>
//! blocks <count>
//! block <name> <rows> <cols>
//! <cols values>          (repeated <rows> times)
//! ...
//! ```
//!
//! Values are written in shortest round-trip exponent notation, so a
//! save/load cycle reproduces every parameter bit-for-bit. Blocks appear in
//! the network's fixed parameter order; matrices are row-major.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

const MAGIC: &str = "antijam-params 1";

/// Row-major matrix (a bias is a `rows × 1` block).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ParamBlock {
    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self { name: name.into(), rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill_uniform<R: Rng + ?Sized>(&mut self, limit: f64, rng: &mut R) {
        for x in &mut self.data {
            *x = if limit > 0.0 { rng.random_range(-limit..limit) } else { 0.0 };
        }
    }
}

/// Ordered collection of parameter blocks. Gradients and optimizer moments
/// use the same shape as the parameters they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub blocks: Vec<ParamBlock>,
}

impl Params {
    pub fn new(blocks: Vec<ParamBlock>) -> Self {
        Self { blocks }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| ParamBlock::zeros(b.name.clone(), b.rows, b.cols))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero(&mut self) {
        self.blocks.iter_mut().for_each(|b| b.data.iter_mut().for_each(|x| *x = 0.0));
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.rows == b.rows && a.cols == b.cols)
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.blocks.iter().flat_map(|b| b.data.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.blocks.iter_mut().flat_map(|b| b.data.iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|x| x.is_finite())
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += scale * b;
        }
    }

    pub fn dot(&self, other: &Params) -> f64 {
        self.values().zip(other.values()).map(|(a, b)| a * b).sum()
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn to_text(&self, arch: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "arch {arch}");
        let _ = writeln!(out, "blocks {}", self.blocks.len());
        for b in &self.blocks {
            let _ = writeln!(out, "block {} {} {}", b.name, b.rows, b.cols);
            for r in 0..b.rows {
                let line: Vec<String> = b.row(r).iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    /// Parses the text format, returning the architecture label and blocks.
    pub fn from_text(text: &str) -> Result<(String, Params)> {
        let bad = |msg: String| Error::ParamFormat(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(bad(format!("missing '{MAGIC}' header")));
        }
        let arch = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("arch "))
            .ok_or_else(|| bad("missing arch line".into()))?
            .trim()
            .to_string();
        let count: usize = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("blocks "))
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad("missing block count".into()))?;
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let header = lines.next().ok_or_else(|| bad("truncated file".into()))?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            let (name, rows, cols) = match fields.as_slice() {
                ["block", name, rows, cols] => (
                    name.to_string(),
                    rows.parse::<usize>().map_err(|e| bad(format!("rows: {e}")))?,
                    cols.parse::<usize>().map_err(|e| bad(format!("cols: {e}")))?,
                ),
                _ => return Err(bad(format!("bad block header '{header}'"))),
            };
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| bad(format!("block {name} truncated")))?;
                let before = data.len();
                for tok in line.split_whitespace() {
                    let v: f64 = tok.parse().map_err(|e| bad(format!("value '{tok}': {e}")))?;
                    if !v.is_finite() {
                        return Err(bad(format!("non-finite value in block {name}")));
                    }
                    data.push(v);
                }
                if data.len() - before != cols {
                    return Err(bad(format!("block {name} row {r} has wrong width")));
                }
            }
            blocks.push(ParamBlock { name, rows, cols, data });
        }
        if lines.next().is_some() {
            return Err(bad("trailing data after last block".into()));
        }
        Ok((arch, Params { blocks }))
    }
}
