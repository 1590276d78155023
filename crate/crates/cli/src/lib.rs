//! Command-line front end: argument parsing, campaign wiring, and reports.
//!
//! Exit codes: 0 no findings, 1 findings, 2 usage or configuration error,
//! 3 environment error (a configured tool or runner cannot be launched).

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use diffharness::matrix::MatrixMode;
use thiserror::Error;

use config::Loaded;
use report::{render_report, CampaignReport, Format, Timing};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENVIRONMENT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("environment error: {0}")]
    Environment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Environment(_) => EXIT_ENVIRONMENT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "diffharness",
    version,
    about = "Differential testing harness for compilers and assemblers"
)]
pub struct Cli {
    /// JSON file with `tools` and `campaign` sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parallel tool invocations; defaults to the number of logical CPUs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus root to scan; repeatable. Defaults to the configured roots.
    #[arg(long = "root")]
    pub roots: Vec<PathBuf>,
    /// File extension to keep; repeatable. Defaults to the configured list.
    #[arg(long = "ext")]
    pub extensions: Vec<String>,
    /// Glob, relative to a root, of files to skip; repeatable.
    #[arg(long)]
    pub ignore: Vec<String>,
    /// Individual files, used instead of the configured roots.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub compiler: Option<String>,
    #[arg(long)]
    pub runner: Option<String>,
    /// Option cell as a canonical key, e.g. `debug=-g;opt=-O2`.
    #[arg(long)]
    pub cell: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List candidate files.
    Scan(CorpusArgs),
    /// Run one tool over the corpus at one cell.
    Assess {
        #[arg(long)]
        tool: Option<String>,
        #[arg(long)]
        cell: Option<String>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Compare accept/reject/crash verdicts of reference and subject.
    Partition {
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long)]
        reference_cell: Option<String>,
        #[arg(long)]
        subject_cell: Option<String>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Run a tool over every file at every matrix cell and report crashes.
    Sweep {
        #[arg(long)]
        tool: Option<String>,
        #[arg(long)]
        mode: Option<MatrixMode>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Replay each file over the option matrix and report odd cells out.
    Matrix {
        #[arg(long)]
        tool: Option<String>,
        #[arg(long)]
        mode: Option<MatrixMode>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Embed the reference build's output into each file.
    Capture {
        #[command(flatten)]
        build: BuildArgs,
        /// Write annotated copies here instead of rewriting in place.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Check subject builds against the embedded expected output.
    Verify {
        #[command(flatten)]
        build: BuildArgs,
        /// Treat a differing exit status as a failure.
        #[arg(long)]
        compare_exit: bool,
        /// File listing quarantined paths, one per line, to skip.
        #[arg(long)]
        quarantine: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Verify with the reference itself and quarantine files that fail.
    Selfcheck {
        #[command(flatten)]
        build: BuildArgs,
        /// Write the quarantined paths here.
        #[arg(long)]
        write_quarantine: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Generate constant-by-operator arithmetic programs.
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// default, integer, or small. Defaults to the configured preset.
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated operators, by token or name. Defaults to all.
        #[arg(long)]
        ops: Option<String>,
        #[arg(long, default_value_t = 400)]
        chunk: usize,
        #[arg(long, default_value = "lp64")]
        data_model: String,
        /// Capture expected output with the reference build.
        #[arg(long)]
        annotate: bool,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Combine annotated tests into one driver program.
    Combine {
        /// Input list: one path per line, `#` comments, optional ` output-free` suffix.
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Linker diagnostics to scan for duplicate symbols.
        #[arg(long)]
        link_log: Option<PathBuf>,
    },
    /// Shrink a failing input while the test command keeps exiting 0.
    Reduce {
        input: PathBuf,
        /// Shell command; receives the candidate path as its last argument.
        #[arg(long)]
        test: String,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "line")]
        granularity: diffharness::reducer::Granularity,
        /// Maximum number of test runs.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 60.0)]
        test_timeout: f64,
    },
    /// Compare machine code of two objects, sources, baselines, or directories.
    Asmdiff {
        a: PathBuf,
        b: Option<PathBuf>,
        /// Assembler profile for source inputs.
        #[arg(long)]
        assembler: Option<String>,
        #[arg(long)]
        cell: Option<String>,
        /// Dialect rewrite rules (JSON) applied to source inputs.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Mask table (JSON); relocations are masked regardless.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Compare raw bytes with no masking at all.
        #[arg(long)]
        no_mask: bool,
        #[arg(long, default_value = ".text")]
        section: String,
        #[arg(long, default_value_t = 4)]
        word_size: usize,
        #[arg(long, default_value = "little")]
        endian: diffharness::asmdiff::Endianness,
        /// Record the masked code of `a` as a baseline file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Re-render a saved JSON report.
    Report {
        #[arg(long)]
        from: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Assess { .. } => "assess",
            Command::Partition { .. } => "partition",
            Command::Sweep { .. } => "sweep",
            Command::Matrix { .. } => "matrix",
            Command::Capture { .. } => "capture",
            Command::Verify { .. } => "verify",
            Command::Selfcheck { .. } => "selfcheck",
            Command::Gen { .. } => "gen",
            Command::Combine { .. } => "combine",
            Command::Reduce { .. } => "reduce",
            Command::Asmdiff { .. } => "asmdiff",
            Command::Report { .. } => "report",
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_CLEAN };
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("diffharness: {e}");
            e.exit_code()
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<i32, CliError> {
    let loaded = match &cli.config {
        Some(p) => Loaded::load(p)?,
        None => Loaded::default(),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Environment(e.to_string()))?;
    let started = Instant::now();
    let mut report = pool.install(|| commands::dispatch(&cli.command, &loaded))?;
    if cli.timing {
        report.timing = Some(Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }
    if cli.config.is_some() && report.config.is_none() {
        report.config = Some(loaded.campaign.clone());
    }
    report.finalize();
    for e in &report.errors {
        eprintln!("diffharness: {}: {}", e.path, e.message);
    }
    emit(cli, &loaded, &report)?;
    Ok(if report.has_findings() {
        EXIT_FINDINGS
    } else {
        EXIT_CLEAN
    })
}

fn emit(cli: &Cli, loaded: &Loaded, report: &CampaignReport) -> Result<(), CliError> {
    use std::io::Write;
    let path = cli.report.clone().or_else(|| loaded.campaign.report.clone());
    let rendered = render_report(report, cli.format);
    let mut stdout = std::io::stdout().lock();
    match path {
        Some(p) => {
            std::fs::write(&p, &rendered)
                .map_err(|e| CliError::Usage(format!("cannot write report {}: {e}", p.display())))?;
            let _ = stdout.write_all(&render_report(report, Format::Text));
        }
        None => {
            let _ = stdout.write_all(&rendered);
        }
    }
    Ok(())
}
