//! Plain-text sparse triplet format for cone program data, for diffing
//! against fixtures and feeding the generic `solve-cone` entry point.
//!
//! ```text
//! # optional comments
//! vars <n>
//! rows <m>
//! c <nnz>
//! <index> <value>      (nnz lines)
//! A <nnz>
//! <row> <col> <value>  (nnz lines)
//! b <nnz>
//! <index> <value>      (nnz lines)
//! cones <k>
//! zero|nonneg|soc <dim>  (k lines)
//! end
//! ```
//!
//! Values print with full round-trip precision; entries equal to zero are
//! omitted.

use super::{ConeBlock, ConeProgram};
use crate::sparse::CscMatrix;
use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Write `(c, A, b, cones)` in the triplet format.
pub fn write_triplets(cp: &ConeProgram, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "vars {}", cp.nvars())?;
    writeln!(w, "rows {}", cp.nrows())?;
    let c_nz: Vec<(usize, f64)> =
        cp.c.iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect();
    writeln!(w, "c {}", c_nz.len())?;
    for (i, v) in c_nz {
        writeln!(w, "{} {:?}", i, v)?;
    }
    writeln!(w, "A {}", cp.a.nnz())?;
    for (i, j, v) in cp.a.triplets() {
        writeln!(w, "{} {} {:?}", i, j, v)?;
    }
    let b_nz: Vec<(usize, f64)> =
        cp.b.iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(i, &v)| (i, v)).collect();
    writeln!(w, "b {}", b_nz.len())?;
    for (i, v) in b_nz {
        writeln!(w, "{} {:?}", i, v)?;
    }
    writeln!(w, "cones {}", cp.cones.len())?;
    for cone in &cp.cones {
        match cone {
            ConeBlock::Zero(d) => writeln!(w, "zero {}", d)?,
            ConeBlock::Nonneg(d) => writeln!(w, "nonneg {}", d)?,
            ConeBlock::SecondOrder(d) => writeln!(w, "soc {}", d)?,
        }
    }
    writeln!(w, "end")
}

/// Parse the triplet format back into a cone program (`var_map` is empty:
/// the format carries solver data only).
pub fn parse_triplets(r: &mut impl BufRead) -> Result<ConeProgram, DumpError> {
    let mut lines = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim().to_string();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed));
    }
    let mut it = lines.into_iter();

    let mut next = |what: &str| {
        it.next().ok_or_else(|| DumpError::Parse {
            line: 0,
            message: format!("unexpected end of input, expected {what}"),
        })
    };

    let parse_err = |line: usize, message: &str| DumpError::Parse { line, message: message.into() };

    let (ln, l) = next("vars")?;
    let n = parse_tagged(&l, "vars").ok_or_else(|| parse_err(ln, "expected `vars <n>`"))?;
    let (ln, l) = next("rows")?;
    let m = parse_tagged(&l, "rows").ok_or_else(|| parse_err(ln, "expected `rows <m>`"))?;

    let (ln, l) = next("c")?;
    let c_nnz = parse_tagged(&l, "c").ok_or_else(|| parse_err(ln, "expected `c <nnz>`"))?;
    let mut c = vec![0.0; n];
    for _ in 0..c_nnz {
        let (ln, l) = next("c entry")?;
        let mut parts = l.split_whitespace();
        let i: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad c index"))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad c value"))?;
        if i >= n {
            return Err(parse_err(ln, "c index out of range"));
        }
        c[i] = v;
    }

    let (ln, l) = next("A")?;
    let a_nnz = parse_tagged(&l, "A").ok_or_else(|| parse_err(ln, "expected `A <nnz>`"))?;
    let mut triplets = Vec::with_capacity(a_nnz);
    for _ in 0..a_nnz {
        let (ln, l) = next("A entry")?;
        let mut parts = l.split_whitespace();
        let i: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad A row"))?;
        let j: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad A col"))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad A value"))?;
        if i >= m || j >= n {
            return Err(parse_err(ln, "A entry out of range"));
        }
        triplets.push((i, j, v));
    }

    let (ln, l) = next("b")?;
    let b_nnz = parse_tagged(&l, "b").ok_or_else(|| parse_err(ln, "expected `b <nnz>`"))?;
    let mut b = vec![0.0; m];
    for _ in 0..b_nnz {
        let (ln, l) = next("b entry")?;
        let mut parts = l.split_whitespace();
        let i: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad b index"))?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad b value"))?;
        if i >= m {
            return Err(parse_err(ln, "b index out of range"));
        }
        b[i] = v;
    }

    let (ln, l) = next("cones")?;
    let k = parse_tagged(&l, "cones").ok_or_else(|| parse_err(ln, "expected `cones <k>`"))?;
    let mut cones = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, l) = next("cone")?;
        let mut parts = l.split_whitespace();
        let kind = parts.next().ok_or_else(|| parse_err(ln, "missing cone kind"))?;
        let d: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad cone dim"))?;
        cones.push(match kind {
            "zero" => ConeBlock::Zero(d),
            "nonneg" => ConeBlock::Nonneg(d),
            "soc" => ConeBlock::SecondOrder(d),
            other => return Err(parse_err(ln, &format!("unknown cone kind `{other}`"))),
        });
    }
    let (ln, l) = next("end")?;
    if l != "end" {
        return Err(parse_err(ln, "expected `end`"));
    }

    let cp = ConeProgram {
        c,
        a: CscMatrix::from_triplets(m, n, &triplets),
        b,
        cones,
        var_map: BTreeMap::new(),
    };
    cp.validate();
    Ok(cp)
}

fn parse_tagged(line: &str, tag: &str) -> Option<usize> {
    let mut parts = line.split_whitespace();
    (parts.next()? == tag).then(|| parts.next()?.parse().ok())?
}
