//! Plain-text CSV formats.
//!
//! A file is a sequence of blocks. Each block starts with a header line
//!
//! ```text
//! # <kind> key=value key=value ...
//! ```
//!
//! followed by comma-separated numeric rows. Known kinds and their required
//! keys:
//!
//! | kind       | keys           | rows                                  |
//! |------------|----------------|---------------------------------------|
//! | `spd`      | `dim`          | `dim` rows of `dim` values            |
//! | `subspace` | `n`, `k`       | `n` rows of `k` values (any spanning set) |
//! | `state`    | `qubits`       | `2^qubits` rows of `re,im`            |
//! | `matrix`   | `rows`, `cols` | `rows` rows of `cols` values          |
//!
//! `schema_version` is optional on input and must equal
//! [`SCHEMA_VERSION`] when present. Lines starting with `#` that are not
//! headers, and blank lines, are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grassmann::{orthonormalize, Subspace};
use crate::spd::SpdMatrix;
use crate::state::{CVector, StateVector};

pub const SCHEMA_VERSION: u32 = 1;

const KINDS: [&str; 4] = ["spd", "subspace", "state", "matrix"];

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub kind: String,
    pub attrs: BTreeMap<String, String>,
    pub rows: Vec<Vec<f64>>,
    /// Line number of the header (1-based).
    pub line: usize,
}

impl Block {
    fn usize_attr(&self, key: &str) -> Result<usize> {
        let raw = self.attrs.get(key).ok_or_else(|| Error::Parse {
            line: self.line,
            message: format!("`{}` header lacks `{key}=`", self.kind),
        })?;
        raw.parse().map_err(|_| Error::Parse {
            line: self.line,
            message: format!("`{key}={raw}` is not a non-negative integer"),
        })
    }

    fn expect_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows.len() != rows {
            return Err(Error::Parse {
                line: self.line,
                message: format!("`{}` block expects {rows} rows, found {}", self.kind, self.rows.len()),
            });
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Parse {
                    line: self.line + i + 1,
                    message: format!("expected {cols} values, found {}", r.len()),
                });
            }
        }
        Ok(())
    }

    fn to_matrix(&self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        self.expect_shape(rows, cols)?;
        Ok(DMatrix::from_fn(rows, cols, |i, j| self.rows[i][j]))
    }
}

fn parse_header(line: &str) -> Option<(String, BTreeMap<String, String>)> {
    let body = line.strip_prefix('#')?.trim();
    let mut tokens = body.split_whitespace();
    let kind = tokens.next()?;
    if !KINDS.contains(&kind) {
        return None;
    }
    let mut attrs = BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok.split_once('=')?;
        attrs.insert(k.to_string(), v.to_string());
    }
    Some((kind.to_string(), attrs))
}

/// Splits a file into blocks without interpreting them.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((kind, attrs)) = parse_header(line) {
                if let Some(v) = attrs.get("schema_version") {
                    if v.parse::<u32>().ok() != Some(SCHEMA_VERSION) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unsupported schema_version `{v}`"),
                        });
                    }
                }
                blocks.push(Block { kind, attrs, rows: Vec::new(), line: line_no });
            }
            continue;
        }
        let block = blocks.last_mut().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "data row before any `# <kind> ...` header".into(),
        })?;
        let row = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{cell}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        block.rows.push(row);
    }
    Ok(blocks)
}

fn blocks_of_kind(text: &str, kind: &str) -> Result<Vec<Block>> {
    let blocks = parse_blocks(text)?;
    if blocks.is_empty() {
        return Err(Error::Parse { line: 0, message: format!("no `# {kind}` block found") });
    }
    for b in &blocks {
        if b.kind != kind {
            return Err(Error::Parse {
                line: b.line,
                message: format!("expected a `{kind}` block, found `{}`", b.kind),
            });
        }
    }
    Ok(blocks)
}

/// Reads every `spd` block. Shape problems are parse errors; symmetry and
/// positive-definiteness failures come back as invariant errors.
pub fn read_spd(text: &str) -> Result<Vec<SpdMatrix>> {
    blocks_of_kind(text, "spd")?
        .iter()
        .map(|b| {
            let n = b.usize_attr("dim")?;
            SpdMatrix::new(b.to_matrix(n, n)?)
        })
        .collect()
}

pub fn read_subspaces(text: &str) -> Result<Vec<Subspace>> {
    blocks_of_kind(text, "subspace")?
        .iter()
        .map(|b| {
            let n = b.usize_attr("n")?;
            let k = b.usize_attr("k")?;
            orthonormalize(&b.to_matrix(n, k)?)
        })
        .collect()
}

pub fn read_states(text: &str) -> Result<Vec<StateVector>> {
    blocks_of_kind(text, "state")?
        .iter()
        .map(|b| {
            let q = b.usize_attr("qubits")?;
            let m = b.to_matrix(1 << q, 2)?;
            StateVector::new(CVector::from_fn(1 << q, |i, _| Complex64::new(m[(i, 0)], m[(i, 1)])))
        })
        .collect()
}

pub fn read_matrices(text: &str) -> Result<Vec<DMatrix<f64>>> {
    blocks_of_kind(text, "matrix")?
        .iter()
        .map(|b| {
            let r = b.usize_attr("rows")?;
            let c = b.usize_attr("cols")?;
            b.to_matrix(r, c)
        })
        .collect()
}

fn write_rows(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

pub fn write_spd(points: &[SpdMatrix]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "# spd dim={} schema_version={SCHEMA_VERSION}", p.dim());
        write_rows(&mut out, p.as_matrix());
    }
    out
}

pub fn write_subspace(s: &Subspace) -> String {
    let mut out = format!(
        "# subspace n={} k={} schema_version={SCHEMA_VERSION}\n",
        s.ambient_dim(),
        s.sub_dim()
    );
    write_rows(&mut out, s.basis());
    out
}

pub fn write_state(s: &StateVector) -> String {
    let mut out = format!("# state qubits={} schema_version={SCHEMA_VERSION}\n", s.num_qubits());
    for a in s.amplitudes().iter() {
        let _ = writeln!(out, "{},{}", a.re, a.im);
    }
    out
}

/// Writes a labelled dense matrix (`label` becomes a `label=` attribute).
pub fn write_matrix(label: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!(
        "# matrix rows={} cols={} label={label} schema_version={SCHEMA_VERSION}\n",
        m.nrows(),
        m.ncols()
    );
    write_rows(&mut out, m);
    out
}
