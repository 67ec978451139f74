//! Matrix Market coordinate files (`real`/`integer`, `general`/`symmetric`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::csc::{CscMatrix, Triplets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<Triplets> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    mm_parse(BufReader::new(f), path)
}

/// Parses Matrix Market text from any reader; `origin` is used in errors.
pub fn mm_parse(reader: impl BufRead, origin: &Path) -> Result<Triplets> {
    let err = |line: usize, msg: String| Error::MatrixMarket {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate();

    let (lno, header) = match lines.next() {
        Some((i, l)) => (i + 1, l.map_err(|e| io_err(origin, e))?),
        None => return Err(err(1, "empty file".into())),
    };
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(err(lno, format!("bad header `{header}`")));
    }
    if toks[2] != "coordinate" {
        return Err(err(lno, format!("unsupported format `{}`", toks[2])));
    }
    match toks[3].as_str() {
        "real" | "integer" => {}
        other => return Err(err(lno, format!("unsupported field `{other}`"))),
    }
    let sym = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(err(lno, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut t = Triplets::default();
    let mut seen = 0usize;
    for (i, line) in lines {
        let lno = i + 1;
        let line = line.map_err(|e| io_err(origin, e))?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('%') {
            continue;
        }
        let mut it = s.split_whitespace();
        match size {
            None => {
                let mut next = || -> Result<usize> {
                    it.next()
                        .ok_or_else(|| err(lno, "size line needs 3 fields".into()))?
                        .parse()
                        .map_err(|e| err(lno, format!("bad size field: {e}")))
                };
                let (m, n, nz) = (next()?, next()?, next()?);
                if sym == Symmetry::Symmetric && m != n {
                    return Err(err(lno, "symmetric matrix must be square".into()));
                }
                size = Some((m, n, nz));
                t = Triplets::with_capacity(m, n, if sym == Symmetry::Symmetric { 2 * nz } else { nz });
            }
            Some((m, n, nz)) => {
                if seen == nz {
                    return Err(err(lno, format!("more than the {nz} declared entries")));
                }
                let r: usize = parse_field(it.next(), lno, "row", &err)?;
                let c: usize = parse_field(it.next(), lno, "column", &err)?;
                let v: f64 = parse_field(it.next(), lno, "value", &err)?;
                if r == 0 || c == 0 || r > m || c > n {
                    return Err(err(lno, format!("index ({r}, {c}) outside {m}x{n}")));
                }
                let (r, c) = (r - 1, c - 1);
                t.push(r, c, v);
                if sym == Symmetry::Symmetric && r != c {
                    t.push(c, r, v);
                }
                seen += 1;
            }
        }
    }
    match size {
        None => Err(err(lno, "missing size line".into())),
        Some((_, _, nz)) if seen != nz => Err(err(
            lno,
            format!("header declares {nz} entries but {seen} were read"),
        )),
        Some(_) => Ok(t),
    }
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    lno: usize,
    what: &str,
    err: &impl Fn(usize, String) -> Error,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.ok_or_else(|| err(lno, format!("missing {what}")))?
        .parse()
        .map_err(|e| err(lno, format!("bad {what}: {e}")))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `a` as a general real coordinate file with 17 significant digits.
pub fn mm_write(path: impl AsRef<Path>, a: &CscMatrix) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    mm_write_to(&mut w, a).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn mm_write_to(w: &mut impl Write, a: &CscMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt_g17(v))?;
    }
    Ok(())
}

/// C `%.17g` formatting.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..P).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
