//! Timed end-to-end runs backing the `hblu` command line tool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{factor_values, refactor, NumericFactor};
use crate::solve::{relative_residual, solve};
use crate::sparse::{mm_read, CscMatrix};
use crate::symbolic::{analyze, Options, SymbolicPlan};

/// Largest residual accepted as a pass.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// One row of the benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub matrix: String,
    pub n: usize,
    pub nnz: usize,
    pub factor_nnz: usize,
    pub fill_density: f64,
    pub btf_blocks: usize,
    pub btf_pct: f64,
    pub t_symbolic_s: f64,
    pub t_numeric_s: f64,
    pub t_solve_s: f64,
    pub residual: f64,
    pub threads: usize,
    pub reallocs: u64,
}

pub const CSV_HEADER: &str =
    "matrix,n,nnz,factor_nnz,fill_density,btf_blocks,btf_pct,t_symbolic_s,t_numeric_s,t_solve_s,residual,threads,reallocs";

impl BenchReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{},{:.3},{:.6},{:.6},{:.6},{:.3e},{},{}",
            self.matrix,
            self.n,
            self.nnz,
            self.factor_nnz,
            self.fill_density,
            self.btf_blocks,
            self.btf_pct,
            self.t_symbolic_s,
            self.t_numeric_s,
            self.t_solve_s,
            self.residual,
            self.threads,
            self.reallocs
        )
    }

    pub fn passed(&self) -> bool {
        self.residual <= RESIDUAL_LIMIT
    }
}

/// A finished run: the report plus the factor's checksum.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub checksum: u64,
}

fn report(
    name: &str,
    a: &CscMatrix,
    plan: &SymbolicPlan,
    f: &NumericFactor,
    times: [f64; 3],
    residual: f64,
) -> BenchReport {
    BenchReport {
        matrix: name.to_string(),
        n: a.nrows(),
        nnz: a.nnz(),
        factor_nnz: f.nnz(),
        fill_density: if a.nnz() == 0 { 0.0 } else { f.nnz() as f64 / a.nnz() as f64 },
        btf_blocks: plan.btf_block_count(),
        btf_pct: plan.btf_pct(),
        t_symbolic_s: times[0],
        t_numeric_s: times[1],
        t_solve_s: times[2],
        residual,
        threads: plan.options.threads,
        reallocs: f.stats.reallocs,
    }
}

fn solve_timed(a: &CscMatrix, f: &NumericFactor, b: &[f64]) -> Result<(f64, f64)> {
    let t = Instant::now();
    let x = solve(f, b)?;
    let dt = t.elapsed().as_secs_f64();
    Ok((dt, relative_residual(a, &x, b)))
}

/// Analyses, factors and solves `a x = b`. Without `rhs` the right-hand
/// side is `A · 1`.
pub fn run_bench(name: &str, a: &CscMatrix, rhs: Option<&[f64]>, opts: &Options) -> Result<BenchRun> {
    let b = match rhs {
        Some(b) => b.to_vec(),
        None => a.mul_vec(&vec![1.0; a.ncols()]),
    };
    let t = Instant::now();
    let plan = analyze(a, opts)?;
    let t_sym = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let f = factor_values(&plan, a.values())?;
    let t_num = t.elapsed().as_secs_f64();
    if f.is_singular() {
        return Err(Error::SingularColumn {
            column: f.singular[0].column,
        });
    }
    let (t_sol, residual) = solve_timed(a, &f, &b)?;
    Ok(BenchRun {
        report: report(name, a, &plan, &f, [t_sym, t_num, t_sol], residual),
        checksum: f.checksum(),
    })
}

/// Aggregate of a sequence run.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub runs: Vec<BenchReport>,
    #[serde(skip)]
    pub checksums: Vec<u64>,
    /// Times the symbolic phase ran; 1 for any non-empty sequence.
    pub symbolic_runs: usize,
    pub t_symbolic_s: f64,
    pub t_numeric_total_s: f64,
    pub max_residual: f64,
}

/// Failure of a sequence run.
#[derive(Debug, thiserror::Error)]
pub enum SequenceError {
    #[error("matrix {index} ({name}) does not share the sequence pattern: {source}")]
    Mismatch {
        index: usize,
        name: String,
        #[source]
        source: Error,
    },
    #[error("matrix {index} ({name}): {source}")]
    Failed {
        index: usize,
        name: String,
        #[source]
        source: Error,
    },
    #[error("empty sequence")]
    Empty,
}

/// Factors a stream of matrices that share one pattern, running the
/// symbolic phase only for the first.
pub fn run_sequence<I>(matrices: I, opts: &Options) -> std::result::Result<SequenceReport, SequenceError>
where
    I: IntoIterator<Item = (String, Result<CscMatrix>)>,
{
    let mut plan: Option<SymbolicPlan> = None;
    let mut prev: Option<NumericFactor> = None;
    let mut out = SequenceReport {
        runs: Vec::new(),
        checksums: Vec::new(),
        symbolic_runs: 0,
        t_symbolic_s: 0.0,
        t_numeric_total_s: 0.0,
        max_residual: 0.0,
    };
    for (index, (name, a)) in matrices.into_iter().enumerate() {
        let failed = |source| SequenceError::Failed {
            index,
            name: name.clone(),
            source,
        };
        let a = a.map_err(failed)?;
        let mut t_sym = 0.0;
        if plan.is_none() {
            let t = Instant::now();
            plan = Some(analyze(&a, opts).map_err(failed)?);
            t_sym = t.elapsed().as_secs_f64();
            out.t_symbolic_s = t_sym;
            out.symbolic_runs += 1;
        }
        let p = plan.as_ref().unwrap();
        p.check_pattern(&a).map_err(|source| SequenceError::Mismatch {
            index,
            name: name.clone(),
            source,
        })?;
        let t = Instant::now();
        let f = match prev.as_ref() {
            Some(old) => refactor(p, old, a.values()),
            None => factor_values(p, a.values()),
        }
        .map_err(failed)?;
        let t_num = t.elapsed().as_secs_f64();
        if f.is_singular() {
            return Err(failed(Error::SingularColumn {
                column: f.singular[0].column,
            }));
        }
        let b = a.mul_vec(&vec![1.0; a.ncols()]);
        let (t_sol, residual) = solve_timed(&a, &f, &b).map_err(failed)?;
        out.t_numeric_total_s += t_num;
        out.max_residual = out.max_residual.max(residual);
        out.runs.push(report(&name, &a, p, &f, [t_sym, t_num, t_sol], residual));
        out.checksums.push(f.checksum());
        prev = Some(f);
    }
    if out.runs.is_empty() {
        return Err(SequenceError::Empty);
    }
    Ok(out)
}

/// Matrix Market files of a directory, sorted by file name.
pub fn sequence_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mtx"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads a Matrix Market file into CSC form.
pub fn read_matrix(path: &Path) -> Result<CscMatrix> {
    CscMatrix::from_triplets(&mm_read(path)?)
}

/// Reads a dense vector: one value per line, `%` comments allowed, and an
/// optional Matrix Market array size line.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    let mut saw_size = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !saw_size && out.is_empty() && fields.len() == 2 {
            saw_size = true;
            continue;
        }
        let bad = |msg: String| Error::MatrixMarket {
            path: path.to_path_buf(),
            line: ln + 1,
            msg,
        };
        if fields.len() != 1 {
            return Err(bad(format!("expected one value, found {}", fields.len())));
        }
        out.push(fields[0].parse().map_err(|_| bad(format!("not a number: {}", fields[0])))?);
    }
    Ok(out)
}
