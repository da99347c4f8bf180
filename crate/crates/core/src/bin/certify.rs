use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use decaycert::certify::Mode;
use decaycert::cli::{export_table, parse_delta, run_certify, JobConfig};
use decaycert::contraction::write_trace_csv;
use decaycert::Error;

#[derive(Parser)]
#[command(
    name = "certify",
    version,
    about = "Certified mixing and escape-rate bounds for interval maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay of correlations for a closed system
    Mixing(Opts),
    /// Escape rate for a system with a hole
    Escape(Opts),
}

#[derive(Args)]
struct Opts {
    /// Job description (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Partition size, e.g. 2^-13 or 1/8192
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    lambda2_target: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Worker threads for matrix assembly and iteration
    #[arg(long)]
    threads: Option<usize>,
    /// Certificate output; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Finite-time table, CSV or .json
    #[arg(long)]
    table: Option<PathBuf>,
    /// Contraction trace as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Sparse Ulam matrix export
    #[arg(long)]
    ulam: Option<PathBuf>,
    /// Also certify the invariant density (mixing only)
    #[arg(long)]
    density: bool,
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(mode: Mode, o: Opts) -> Result<i32, Error> {
    let mut cfg = JobConfig::load(&o.config)?;
    if let Some(d) = &o.delta {
        cfg.k = parse_delta(d)?;
    }
    if let Some(t) = o.lambda2_target {
        cfg.lambda2_target = t;
    }
    if let Some(n) = o.n_max {
        cfg.n_max = n;
    }
    cfg.density |= o.density;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(o.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| run_certify(&cfg, mode))?;
    let report = &outcome.report;

    let text = report.to_json_string();
    match &o.out {
        Some(p) => std::fs::write(p, &text).map_err(io_err(p))?,
        None => print!("{text}"),
    }
    if let Some(p) = &o.table {
        export_table(report, p)?;
    }
    if let Some(p) = &o.trace {
        let f = std::fs::File::create(p).map_err(io_err(p))?;
        write_trace_csv(&report.contraction_trace, f).map_err(io_err(p))?;
    }
    if let Some(p) = &o.ulam {
        let u = outcome
            .matrix
            .as_ref()
            .ok_or_else(|| Error::Config("no Ulam matrix was assembled".into()))?;
        let f = std::fs::File::create(p).map_err(io_err(p))?;
        u.export(std::io::BufWriter::new(f)).map_err(io_err(p))?;
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, opts) = match cli.command {
        Command::Mixing(o) => (Mode::Mixing, o),
        Command::Escape(o) => (Mode::Escape, o),
    };
    match run(mode, opts) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
