//! Matrix Market and dense array files, and problem bundles on disk.
//!
//! Numbers are written with 17 significant digits so every `f64` reads back
//! bit-identical.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::LowRankFactor;
use crate::newton::RiccatiProblem;
use crate::problems::GeneratedProblem;
use crate::sparse::SparseMatrix;

/// Name of the manifest inside a bundle directory.
pub const MANIFEST_NAME: &str = "bundle.toml";

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse { context: context.to_string(), message: message.into() }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, context: &str, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(context, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(context, format!("bad {what} '{tok}'")))
}

/// Reads a `matrix coordinate real {general|symmetric}` file.
pub fn read_matrix_market<R: Read>(reader: R, context: &str) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().transpose()?.ok_or_else(|| parse_err(context, "empty file"))?;
    let words: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" || words[3] != "real" {
        return Err(parse_err(context, format!("unsupported header '{header}'")));
    }
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(context, format!("unsupported symmetry '{other}'"))),
    };
    let mut size = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match size {
            None => {
                let r: usize = parse_num(tok.next(), context, "row count")?;
                let c: usize = parse_num(tok.next(), context, "column count")?;
                let nnz: usize = parse_num(tok.next(), context, "entry count")?;
                if symmetric && r != c {
                    return Err(parse_err(context, "symmetric matrix must be square"));
                }
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
                size = Some((r, c, nnz));
            }
            Some((r, c, _)) => {
                let i: usize = parse_num(tok.next(), context, "row index")?;
                let j: usize = parse_num(tok.next(), context, "column index")?;
                let v: f64 = parse_num(tok.next(), context, "value")?;
                if i == 0 || j == 0 || i > r || j > c {
                    return Err(parse_err(context, format!("entry ({i}, {j}) outside {r}x{c}")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| parse_err(context, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(parse_err(context, format!("expected {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(r, c, &triplets)
}

pub fn load_matrix_market(path: &Path) -> Result<SparseMatrix> {
    read_matrix_market(fs::File::open(path)?, &path.display().to_string())
}

/// Writes all stored entries in general coordinate format.
pub fn write_matrix_market<W: Write>(mut w: W, m: &SparseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(path: &Path, m: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_matrix_market(&mut w, m)?;
    w.flush()?;
    Ok(())
}

/// Dense array: a `rows cols` line then one whitespace separated row per line.
pub fn write_dense<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

fn read_dense_tokens<'a>(tok: &mut impl Iterator<Item = &'a str>, context: &str) -> Result<DMatrix<f64>> {
    let r: usize = parse_num(tok.next(), context, "row count")?;
    let c: usize = parse_num(tok.next(), context, "column count")?;
    let mut m = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            m[(i, j)] = parse_num(tok.next(), context, "value")?;
        }
    }
    Ok(m)
}

pub fn read_dense<R: Read>(mut reader: R, context: &str) -> Result<DMatrix<f64>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut tok = text.split_whitespace();
    let m = read_dense_tokens(&mut tok, context)?;
    if tok.next().is_some() {
        return Err(parse_err(context, "trailing data after array"));
    }
    Ok(m)
}

pub fn save_dense(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_dense(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_dense(path: &Path) -> Result<DMatrix<f64>> {
    read_dense(fs::File::open(path)?, &path.display().to_string())
}

/// `Z` then `Y`, both as dense arrays in one file.
pub fn write_factor(path: &Path, x: &LowRankFactor) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_dense(&mut w, x.z())?;
    write_dense(&mut w, x.y())?;
    w.flush()?;
    Ok(())
}

pub fn read_factor(path: &Path) -> Result<LowRankFactor> {
    let context = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut tok = text.split_whitespace();
    let z = read_dense_tokens(&mut tok, &context)?;
    let y = read_dense_tokens(&mut tok, &context)?;
    if tok.next().is_some() {
        return Err(parse_err(&context, "trailing data after factor"));
    }
    LowRankFactor::new(z, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleFiles {
    #[serde(rename = "A")]
    pub a: String,
    /// Missing or empty means identity.
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<String>,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Generator string the bundle was produced from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub files: BundleFiles,
}

fn one() -> f64 {
    1.0
}

/// Writes `A.mtx`, `E.mtx` (unless identity), `B.txt`, `C.txt` and the manifest.
pub fn save_bundle(dir: &Path, g: &GeneratedProblem) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = &g.problem;
    save_matrix_market(&dir.join("A.mtx"), p.a())?;
    let e = if p.e().is_identity() {
        None
    } else {
        save_matrix_market(&dir.join("E.mtx"), p.e())?;
        Some("E.mtx".to_string())
    };
    save_dense(&dir.join("B.txt"), p.b())?;
    save_dense(&dir.join("C.txt"), p.c())?;
    let manifest = BundleManifest {
        n: p.n(),
        m: p.inputs(),
        q: p.outputs(),
        beta: g.spec.beta,
        seed: g.spec.seed,
        generator: Some(g.spec.to_string()),
        files: BundleFiles { a: "A.mtx".into(), e, b: "B.txt".into(), c: "C.txt".into() },
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Bundle(e.to_string()))?;
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, text)?;
    Ok(path)
}

/// Accepts the bundle directory or the manifest path.
pub fn load_bundle(path: &Path) -> Result<(RiccatiProblem, BundleManifest)> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = fs::read_to_string(&manifest_path)?;
    let manifest: BundleManifest = toml::from_str(&text).map_err(|e| Error::Bundle(format!("{}: {e}", manifest_path.display())))?;
    let f = &manifest.files;
    let a = load_matrix_market(&dir.join(&f.a))?;
    let e = match f.e.as_deref().map(str::trim) {
        None | Some("") => SparseMatrix::identity(a.nrows()),
        Some(name) => load_matrix_market(&dir.join(name))?,
    };
    let b = load_dense(&dir.join(&f.b))?;
    let c = load_dense(&dir.join(&f.c))?;
    let n = manifest.n;
    let checks = [
        ("A rows", a.nrows(), n),
        ("A columns", a.ncols(), n),
        ("E rows", e.nrows(), n),
        ("E columns", e.ncols(), n),
        ("B rows", b.nrows(), n),
        ("B columns", b.ncols(), manifest.m),
        ("C rows", c.nrows(), manifest.q),
        ("C columns", c.ncols(), n),
    ];
    for (what, got, want) in checks {
        if got != want {
            return Err(Error::Bundle(format!("{what}: found {got}, manifest says {want}")));
        }
    }
    Ok((RiccatiProblem::new(a, e, b, c)?, manifest))
}
