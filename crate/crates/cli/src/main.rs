use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resdist::config::{parse_param, parse_strategy, parse_sweep};
use resdist::pipeline::{EXIT_USAGE, EXIT_VIOLATION};
use resdist::{compare_files, run_pipeline, Artifacts, CliError, Command, JobConfig, Mode};
use resdist_core::frontend::CostModel;

#[derive(Parser)]
#[command(name = "resdist", version, about = "Output distributions of resource usage for mini-C and intermediate programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Insert the step counter into a C source.
    Instrument(Job),
    /// Slice an instrumented C source and print the intermediate program.
    Translate(Job),
    /// Run the whole pipeline and print the closed form.
    Analyze(Job),
    /// Evaluate a function on --args, or tabulate a probability function.
    Eval(Job),
    /// Brute-force output distribution.
    Oracle(Job),
    /// Check an analyzed CSV distribution against an oracle CSV.
    Compare { analyzed: PathBuf, oracle: PathBuf },
}

#[derive(Args)]
struct Job {
    input: PathBuf,
    /// Function to analyze or evaluate.
    #[arg(long)]
    target: Option<String>,
    /// Input probability function, when several fit.
    #[arg(long = "input")]
    input_dist: Option<String>,
    /// Treat the input as C or intermediate text regardless of extension.
    #[arg(long, value_parser = ["c", "ir"])]
    lang: Option<String>,
    /// name=value, integer or rational.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// out=lo..hi for the output, x=lo..hi for an input variable.
    #[arg(long = "range", value_name = "NAME=LO..HI")]
    ranges: Vec<String>,
    /// Statement costs, e.g. assign=1,decl=0,call=0.
    #[arg(long)]
    cost: Option<String>,
    /// Integer arguments for eval, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    args: Vec<i128>,
    /// priority or shuffled:SEED.
    #[arg(long, default_value = "priority")]
    strategy: String,
    /// Maximum rule applications per phase.
    #[arg(long)]
    budget: Option<u64>,
    /// p=lo..hi [step S]: evaluate the closed form along one parameter.
    #[arg(long, num_args = 1..=3, value_name = "SPEC")]
    sweep: Vec<String>,
    /// Sweep step, when not given inline.
    #[arg(long = "step", default_value = "1/10")]
    sweep_step: String,
    /// Print the rule trace.
    #[arg(long)]
    trace: bool,
    /// Run enumerations beyond the size guard.
    #[arg(long)]
    force: bool,
    /// Check the tabulated result against the oracle.
    #[arg(long)]
    compare: bool,
    /// Write the program text here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Two-column `z value` data for plotting.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long = "trace-out")]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Job {
    fn config(&self, command: Command) -> Result<JobConfig, CliError> {
        let mut cfg = JobConfig::new(command, &self.input);
        match self.lang.as_deref() {
            Some("c") => cfg.mode = Mode::CSource,
            Some(_) => cfg.mode = Mode::Intermediate,
            None => {}
        }
        cfg.target = self.target.clone();
        cfg.input_dist = self.input_dist.clone();
        for p in &self.params {
            let (k, v) = parse_param(p).map_err(CliError::usage)?;
            cfg.params.insert(k, v);
        }
        for r in &self.ranges {
            cfg.add_range(r).map_err(CliError::usage)?;
        }
        if let Some(c) = &self.cost {
            cfg.cost = CostModel::parse(c).map_err(CliError::usage)?;
        }
        cfg.args = self.args.clone();
        cfg.options.strategy = parse_strategy(&self.strategy).map_err(CliError::usage)?;
        if let Some(b) = self.budget {
            cfg.options.budget = b;
        }
        cfg.sweep = match self.sweep.as_slice() {
            [] => None,
            [spec] => Some(parse_sweep(spec, &self.sweep_step)),
            [spec, kw, step] if kw == "step" => Some(parse_sweep(spec, step)),
            _ => Some(Err("expected --sweep p=lo..hi [step S]".to_string())),
        }
        .transpose()
        .map_err(CliError::usage)?;
        cfg.trace = self.trace || self.trace_out.is_some();
        cfg.force = self.force;
        cfg.compare = self.compare;
        Ok(cfg)
    }
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Program text and the CSV go to stdout unless redirected; the trace and
/// diagnostics go to stderr.
fn emit(job: &Job, art: &Artifacts) -> Result<(), CliError> {
    if let Some(p) = &art.program {
        write(job.output.as_deref(), p)?;
    }
    if let Some(c) = &art.csv {
        write(job.csv.as_deref(), c)?;
    }
    if let (Some(p), Some(path)) = (&art.plot, &job.plot) {
        write(Some(path), p)?;
    }
    if let Some(r) = &art.report {
        write(job.report.as_deref(), r)?;
    }
    if let Some(s) = &art.sweep {
        print!("{s}");
    }
    if let Some(t) = &art.trace {
        match &job.trace_out {
            Some(p) => write(Some(p), t)?,
            None => eprint!("{t}"),
        }
    }
    for d in &art.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (job, command) = match cli.cmd {
        Cmd::Instrument(j) => (j, Command::Instrument),
        Cmd::Translate(j) => (j, Command::Translate),
        Cmd::Analyze(j) => (j, Command::Analyze),
        Cmd::Eval(j) => (j, Command::Eval),
        Cmd::Oracle(j) => (j, Command::Oracle),
        Cmd::Compare { analyzed, oracle } => {
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())));
            let report = compare_files(&read(&analyzed)?, &read(&oracle)?)?;
            print!("{report}");
            return Ok(if report.passed() { 0 } else { EXIT_VIOLATION });
        }
    };
    let art = run_pipeline(&job.config(command)?)?;
    emit(&job, &art)?;
    Ok(art.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
