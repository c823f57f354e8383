use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qvi::cli::{self, config, Command, PartialConfig};
use qvi::experiments::ExampleId;

#[derive(Parser, Debug)]
#[command(
    name = "qvi",
    version,
    about = "Adaptive Tseng solver for quasimonotone variational inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve a scalar example and write the full iteration trace.
    Solve(Flags),
    /// Iteration-count table for the cubic example.
    Table1(Flags),
    /// Iteration-count table for the sine example.
    Table2(Flags),
    /// Sparse signal recovery with an l1 constraint.
    Recovery(Flags),
    /// Empirical convergence rate of a scalar run.
    Rates(Flags),
    /// Ratio |<F(z_n), z_n - u*>| / |z_n - u*|^(2+eps) along a scalar run.
    Ratio(Flags),
    /// Separation certificate for a finite set of points.
    Certify(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cubic, sine or piecewise.
    #[arg(long, value_parser = parse_example)]
    example: Option<ExampleId>,
    /// Starting point; repeat for several runs.
    #[arg(long, allow_negative_numbers = true)]
    u1: Vec<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    xi_scale: Option<f64>,
    #[arg(long)]
    xi_exp: Option<f64>,
    /// Stopping tolerance; repeat for several.
    #[arg(long)]
    tol: Vec<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop on ||u_{n+1} - u_n||^2 instead of the unsquared norm.
    #[arg(long)]
    squared_error: bool,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "K")]
    k: Option<usize>,
    /// Falls back to QVI_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds for an ensemble recovery run.
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    reference: Option<f64>,
    #[arg(long)]
    tail_window: Option<usize>,
    /// Comma-separated coordinates; repeat per point.
    #[arg(long = "point", value_parser = parse_point, allow_negative_numbers = true)]
    points: Vec<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG figures.
    #[arg(long)]
    plot: bool,
}

fn parse_example(s: &str) -> Result<ExampleId, String> {
    match s {
        "cubic" => Ok(ExampleId::Cubic),
        "sine" => Ok(ExampleId::Sine),
        "piecewise" => Ok(ExampleId::Piecewise),
        _ => Err(format!(
            "unknown example {s:?} (expected cubic, sine or piecewise)"
        )),
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
        .collect()
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Flags {
    fn into_partial(self, command: Command) -> (Option<PathBuf>, PartialConfig) {
        let p = PartialConfig {
            command: Some(command),
            example: self.example,
            u1: nonempty(self.u1),
            lambda1: self.lambda1,
            mu: self.mu,
            xi_scale: self.xi_scale,
            xi_exp: self.xi_exp,
            tol: nonempty(self.tol),
            max_iters: self.max_iters,
            squared_error: self.squared_error.then_some(true),
            m: self.m,
            n: self.n,
            k: self.k,
            seed: self.seed,
            ensemble: self.ensemble,
            epsilon: self.epsilon,
            reference: self.reference,
            tail_window: self.tail_window,
            points: nonempty(self.points),
            samples: self.samples,
            out: self.out,
            plot: self.plot.then_some(true),
        };
        (self.config, p)
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (command, flags) = match args.command {
        Cmd::Solve(f) => (Command::Solve, f),
        Cmd::Table1(f) => (Command::Table1, f),
        Cmd::Table2(f) => (Command::Table2, f),
        Cmd::Recovery(f) => (Command::Recovery, f),
        Cmd::Rates(f) => (Command::Rates, f),
        Cmd::Ratio(f) => (Command::Ratio, f),
        Cmd::Certify(f) => (Command::Certify, f),
    };
    let (file, partial) = flags.into_partial(command);
    let result = config::env_seed()
        .and_then(|seed| config::parse_config(file.as_deref(), partial, seed))
        .and_then(|cfg| cli::run(&cfg));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
