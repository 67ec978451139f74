use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hblu::bench::{
    read_matrix, read_vector, run_bench, run_sequence, sequence_files, BenchReport, SequenceError, CSV_HEADER,
};
use hblu::gen;
use hblu::sparse::CscMatrix;
use hblu::{Error, Options};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_SEQUENCE: u8 = 4;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    Grid,
    Blockdiag,
    Arrowhead,
    Blockrich,
}

/// Sparse LU benchmark: analyse, factor and solve one matrix, or refactor a
/// directory of same-pattern matrices.
#[derive(Debug, Parser)]
#[command(name = "hblu", version)]
struct Args {
    /// Matrix Market file.
    #[arg(long, conflicts_with_all = ["gen", "seq"])]
    matrix: Option<PathBuf>,
    /// Built-in synthetic matrix instead of a file.
    #[arg(long, value_enum, conflicts_with = "seq")]
    gen: Option<Generator>,
    /// Approximate dimension of the generated matrix.
    #[arg(long, default_value_t = 10_000)]
    size: usize,
    /// Right-hand side file, or `manufactured` for `A · 1`.
    #[arg(long, default_value = "manufactured")]
    rhs: String,
    /// Worker threads (default: available parallelism rounded down to a
    /// power of two).
    #[arg(long)]
    threads: Option<usize>,
    /// Leaves of the nested-dissection tree (power of two). Fixing it makes
    /// checksums independent of --threads.
    #[arg(long)]
    nd_leaves: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    pivot_tol: f64,
    /// Diagonal blocks larger than this use nested dissection.
    #[arg(long)]
    nd_threshold: Option<usize>,
    /// Treat the whole matrix as one nested-dissection block.
    #[arg(long)]
    no_btf: bool,
    /// Directory of same-pattern `.mtx` files, factored in name order.
    #[arg(long)]
    seq: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    out: OutFormat,
    /// Seed of the synthetic generators.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn default_threads() -> usize {
    let p = std::thread::available_parallelism().map_or(1, |n| n.get());
    1 << (usize::BITS - 1 - p.leading_zeros())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::StructurallySingular { .. } | Error::SingularColumn { .. } | Error::SingularFactor => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn generate(g: Generator, size: usize, seed: u64) -> (String, CscMatrix) {
    match g {
        Generator::Grid => {
            let side = ((size as f64).sqrt() as usize).max(2);
            (format!("grid{side}x{side}"), gen::grid5(side, seed))
        }
        Generator::Blockdiag => {
            let sizes = vec![20; (size / 20).max(1)];
            (format!("blockdiag{}", 20 * sizes.len()), gen::block_diagonal(&sizes, 0.2, seed))
        }
        Generator::Arrowhead => (format!("arrowhead{}", size.max(2)), gen::arrowhead(size.max(2), seed)),
        Generator::Blockrich => {
            let nb = (size / 50).max(1);
            (format!("blockrich{}", 50 * nb), gen::block_rich(nb, 50, 0.1, seed))
        }
    }
}

fn print_reports(rows: &[BenchReport], out: OutFormat) {
    match out {
        OutFormat::Csv => {
            println!("{CSV_HEADER}");
            for r in rows {
                println!("{}", r.csv_row());
            }
        }
        OutFormat::Json => {
            let text = if rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            };
            println!("{}", text.expect("reports serialize"));
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = Options {
        threads: args.threads.unwrap_or_else(default_threads),
        nd_leaves: args.nd_leaves,
        pivot_tol: args.pivot_tol,
        nd_threshold: args.nd_threshold,
        use_btf: !args.no_btf,
        ..Options::default()
    };

    if let Some(dir) = &args.seq {
        let files = match sequence_files(dir) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        };
        let mats = files.iter().map(|p| (p.display().to_string(), read_matrix(p)));
        return match run_sequence(mats, &opts) {
            Ok(rep) => {
                match args.out {
                    OutFormat::Csv => print_reports(&rep.runs, OutFormat::Csv),
                    OutFormat::Json => println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes")),
                }
                eprintln!(
                    "sequence: {} matrices, symbolic runs {}, numeric total {:.6} s, max residual {:.3e}",
                    rep.runs.len(),
                    rep.symbolic_runs,
                    rep.t_numeric_total_s,
                    rep.max_residual
                );
                if let Some((first, last)) = rep.checksums.first().zip(rep.checksums.last()) {
                    eprintln!("checksum first {first:016x} last {last:016x}");
                }
                if rep.max_residual > hblu::bench::RESIDUAL_LIMIT {
                    eprintln!("error: residual above {:e}", hblu::bench::RESIDUAL_LIMIT);
                    ExitCode::from(EXIT_NUMERIC)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(match &e {
                    SequenceError::Mismatch { .. } => EXIT_SEQUENCE,
                    SequenceError::Failed { source, .. } => exit_code(source),
                    SequenceError::Empty => EXIT_INPUT,
                })
            }
        };
    }

    let (name, a) = match (&args.matrix, args.gen) {
        (Some(p), _) => match read_matrix(p) {
            Ok(a) => (p.display().to_string(), a),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        },
        (None, Some(g)) => generate(g, args.size, args.seed),
        (None, None) => {
            eprintln!("error: one of --matrix, --gen or --seq is required");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let rhs = if args.rhs == "manufactured" {
        None
    } else {
        match read_vector(args.rhs.as_ref()) {
            Ok(b) => Some(b),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        }
    };
    match run_bench(&name, &a, rhs.as_deref(), &opts) {
        Ok(run) => {
            print_reports(std::slice::from_ref(&run.report), args.out);
            eprintln!("checksum {:016x}", run.checksum);
            if run.report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "error: residual {:.3e} above {:e}",
                    run.report.residual,
                    hblu::bench::RESIDUAL_LIMIT
                );
                ExitCode::from(EXIT_NUMERIC)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
