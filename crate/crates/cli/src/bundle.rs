//! Operator bundles: a versioned text header followed by little-endian
//! binary payload.
//!
//! ```text
//! qstiefel-bundle 1
//! n 3
//! m 2
//! q 0.5
//! shape 1 12 12
//! dim 144
//! labels none
//! encoding dense
//! operators 6
//! end
//! ```
//!
//! After the `end` line come the labels (one `u64` per basis vector, only if
//! the header says `labels present`) and then the generators `w_k^i`, rows
//! `n−m+1..=n` outer and columns `1..=n` inner. A `dense` operator is
//! `dim × dim` pairs of `f64` (real, imaginary) in row-major order. A `coo`
//! operator is a `u64` entry count followed by `(u64 row, u64 col, f64 re,
//! f64 im)` records sorted by row then column.

use std::io::{BufRead, Read, Write};

use qstiefel_core::fock::{FactorShape, Frame, QParam, TruncOp, C64};
use qstiefel_core::stiefel::StiefelGenerators;

use crate::CliError;

pub const MAGIC: &str = "qstiefel-bundle";
pub const VERSION: u32 = 1;
/// Dense payloads above this many bytes are written as coordinate lists.
pub const DENSE_LIMIT_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Dense,
    Coo,
}

impl Encoding {
    fn name(self) -> &'static str {
        match self {
            Encoding::Dense => "dense",
            Encoding::Coo => "coo",
        }
    }

    /// Dense when the whole payload fits under [`DENSE_LIMIT_BYTES`].
    pub fn choose(g: &StiefelGenerators) -> Self {
        let ops = g.n() * g.m();
        let bytes = g.dim().checked_mul(g.dim()).and_then(|x| x.checked_mul(16 * ops));
        match bytes {
            Some(b) if b <= DENSE_LIMIT_BYTES => Encoding::Dense,
            _ => Encoding::Coo,
        }
    }
}

/// Header facts echoed in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleInfo {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub q: f64,
    pub shape: Vec<usize>,
    pub dim: usize,
    pub labeled: bool,
    pub encoding: Encoding,
}

impl BundleInfo {
    pub fn encoding_name(&self) -> &'static str {
        self.encoding.name()
    }
}

pub fn write(g: &StiefelGenerators, encoding: Encoding, out: &mut impl Write) -> std::io::Result<()> {
    let frame = g.frame();
    let dims: Vec<String> = frame.shape().dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "n {}", g.n())?;
    writeln!(out, "m {}", g.m())?;
    writeln!(out, "q {:?}", g.q().value())?;
    writeln!(out, "shape {}", dims.join(" "))?;
    writeln!(out, "dim {}", g.dim())?;
    writeln!(out, "labels {}", if frame.is_plain() { "none" } else { "present" })?;
    writeln!(out, "encoding {}", encoding.name())?;
    writeln!(out, "operators {}", g.n() * g.m())?;
    writeln!(out, "end")?;
    if let Some(labels) = frame.labels() {
        for &l in labels {
            out.write_all(&(l as u64).to_le_bytes())?;
        }
    }
    let dim = g.dim();
    for op in g.rows().iter().flatten() {
        match encoding {
            Encoding::Dense => {
                let mut row = vec![C64::new(0.0, 0.0); dim];
                for (r, vec) in op.matrix().outer_iterator().enumerate() {
                    debug_assert!(r < dim);
                    row.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                    for (c, &v) in vec.iter() {
                        row[c] = v;
                    }
                    for v in &row {
                        out.write_all(&v.re.to_le_bytes())?;
                        out.write_all(&v.im.to_le_bytes())?;
                    }
                }
            }
            Encoding::Coo => {
                let entries: Vec<_> = op.entries().collect();
                out.write_all(&(entries.len() as u64).to_le_bytes())?;
                for (r, c, v) in entries {
                    out.write_all(&(r as u64).to_le_bytes())?;
                    out.write_all(&(c as u64).to_le_bytes())?;
                    out.write_all(&v.re.to_le_bytes())?;
                    out.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> CliError {
    CliError::Io(format!("malformed bundle: {}", msg.into()))
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str, CliError> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| corrupt(format!("expected `{key} …`, found `{line}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| corrupt(format!("bad {what} `{s}`")))
}

fn read_u64(r: &mut impl Read) -> Result<u64, CliError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| corrupt(format!("truncated payload: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, CliError> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_index(r: &mut impl Read, bound: usize, what: &str) -> Result<usize, CliError> {
    let x = read_u64(r)?;
    usize::try_from(x)
        .ok()
        .filter(|&x| x < bound)
        .ok_or_else(|| corrupt(format!("{what} {x} out of range")))
}

pub fn read(input: &mut impl BufRead) -> Result<(StiefelGenerators, BundleInfo), CliError> {
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        let got = input
            .read_line(&mut line)
            .map_err(|e| corrupt(format!("unreadable header: {e}")))?;
        if got == 0 {
            return Err(corrupt("header ends before `end`"));
        }
        let line = line.trim_end_matches(['\n', '\r']).to_string();
        if line == "end" {
            break;
        }
        if lines.len() > 16 {
            return Err(corrupt("header too long"));
        }
        lines.push(line);
    }
    if lines.len() != 9 {
        return Err(corrupt(format!("expected 9 header lines, found {}", lines.len())));
    }
    let version: u32 = parse_num(header_value(&lines[0], MAGIC)?, "version")?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let n: usize = parse_num(header_value(&lines[1], "n")?, "n")?;
    let m: usize = parse_num(header_value(&lines[2], "m")?, "m")?;
    let q: f64 = parse_num(header_value(&lines[3], "q")?, "q")?;
    let shape: Vec<usize> = header_value(&lines[4], "shape")?
        .split_whitespace()
        .map(|s| parse_num(s, "shape"))
        .collect::<Result<_, _>>()?;
    let dim: usize = parse_num(header_value(&lines[5], "dim")?, "dim")?;
    let labeled = match header_value(&lines[6], "labels")? {
        "none" => false,
        "present" => true,
        other => return Err(corrupt(format!("bad labels flag `{other}`"))),
    };
    let encoding = match header_value(&lines[7], "encoding")? {
        "dense" => Encoding::Dense,
        "coo" => Encoding::Coo,
        other => return Err(corrupt(format!("unknown encoding `{other}`"))),
    };
    let count: usize = parse_num(header_value(&lines[8], "operators")?, "operator count")?;
    if count != n * m || n == 0 {
        return Err(corrupt(format!("{count} operators for n = {n}, m = {m}")));
    }
    let qp = QParam::new(q).map_err(|e| corrupt(e.to_string()))?;
    let fshape = FactorShape::new(shape.clone()).map_err(|e| corrupt(e.to_string()))?;
    let frame = if labeled {
        let total = fshape.total();
        let labels = (0..dim)
            .map(|_| read_index(input, total, "label"))
            .collect::<Result<Vec<_>, _>>()?;
        Frame::labeled(fshape, labels).map_err(|e| corrupt(e.to_string()))?
    } else {
        if fshape.total() != dim {
            return Err(corrupt(format!("dim {dim} does not match shape {fshape}")));
        }
        Frame::plain(fshape)
    };
    let mut ops = Vec::with_capacity(count);
    for _ in 0..count {
        let mut entries = Vec::new();
        match encoding {
            Encoding::Dense => {
                for r in 0..dim {
                    for c in 0..dim {
                        let v = C64::new(read_f64(input)?, read_f64(input)?);
                        if v != C64::new(0.0, 0.0) {
                            entries.push((r, c, v));
                        }
                    }
                }
            }
            Encoding::Coo => {
                let nnz = read_u64(input)?;
                for _ in 0..nnz {
                    let r = read_index(input, dim, "row")?;
                    let c = read_index(input, dim, "column")?;
                    entries.push((r, c, C64::new(read_f64(input)?, read_f64(input)?)));
                }
            }
        }
        if entries.iter().any(|(_, _, v)| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(corrupt("non-finite entry"));
        }
        ops.push(TruncOp::from_triplets(frame.clone(), entries).map_err(|e| corrupt(e.to_string()))?);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing).map_err(|e| corrupt(e.to_string()))? != 0 {
        return Err(corrupt("trailing bytes after the last operator"));
    }
    let rows: Vec<Vec<TruncOp>> = {
        let mut it = ops.into_iter();
        (0..m).map(|_| it.by_ref().take(n).collect()).collect()
    };
    let g = StiefelGenerators::from_rows(n, m, qp, rows).map_err(|e| corrupt(e.to_string()))?;
    let info = BundleInfo {
        version,
        n,
        m,
        q,
        shape,
        dim,
        labeled,
        encoding,
    };
    Ok((g, info))
}
