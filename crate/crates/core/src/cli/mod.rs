//! Command dispatch for the `qvi` binary.
//!
//! Each command writes one CSV file into the output directory (plus `.svg`
//! siblings when plotting is enabled) and returns a short text summary.
//!
//! | command    | file                       | columns                                                              |
//! |------------|----------------------------|----------------------------------------------------------------------|
//! | `solve`    | `solve.csv`                | `u1, n, u, z, lambda, error, residual`                               |
//! | `table1/2` | `table1.csv`, `table2.csv` | `u1, tol, iterations, cpu_seconds, limit`                            |
//! | `recovery` | `recovery.csv`             | `n, mse, lambda, ratio`                                              |
//! | `recovery` | `recovery_ensemble.csv`    | `seed, iterations, status, cpu_seconds, final_mse, l1_ratio, signs_match` (with `ensemble > 1`) |
//! | `rates`    | `rates.csv`                | `n, error`                                                           |
//! | `ratio`    | `ratio.csv`                | `n, ratio`                                                           |
//! | `certify`  | `certify.csv`              | `i, j, distance, delta`                                              |

pub mod config;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use crate::diagnostics::{
    a5_ratio_series, build_separation_certificate, estimate_rates, verify_disjointness,
};
use crate::error::{Error, Result};
use crate::experiments::{
    gen_recovery, recovery_ensemble, run_example_table, run_recovery, InitialPoint, RecoveryParams,
    StepCriterion, TableSpec, LIMIT_SNAP,
};
use crate::linalg::{dist, norm1};
use crate::operators::Mapping;
use crate::solver::{solve, SolveResult, SolverConfig, TraceLevel, XiSequence};

pub use config::{parse_config, Command, PartialConfig, RunConfig};
pub use output::{emit_csv, Cell};
pub use plot::{emit_svg_plot, PlotKind, Series};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) => EXIT_INPUT,
        Error::Numeric { .. } => EXIT_NUMERIC,
        Error::Io(_) => EXIT_IO,
        Error::Internal(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunConfig {
    fn xi(&self) -> Result<XiSequence> {
        XiSequence::new(self.xi_scale, self.xi_exp)
    }

    fn criterion(&self) -> StepCriterion {
        if self.squared_error {
            StepCriterion::Squared
        } else {
            StepCriterion::Norm
        }
    }

    fn scalar_config(&self, tol: f64) -> Result<SolverConfig> {
        Ok(SolverConfig::new(
            self.lambda1,
            self.mu,
            self.xi()?,
            self.criterion().rule(tol),
            self.max_iters,
        )?
        .with_trace(TraceLevel::Full))
    }

    fn solve_scalar(&self, u1: f64, tol: f64) -> Result<(Mapping, SolveResult)> {
        let f = self.example.mapping();
        let set = self.example.feasible_set();
        let r = solve(&f, &set, &[u1], &self.scalar_config(tol)?)?;
        Ok((f, r))
    }

    /// `reference`, else the nearest known solution, else the raw final point.
    fn limit_of(&self, f: &Mapping, r: &SolveResult) -> f64 {
        self.reference.unwrap_or_else(|| {
            f.nearest_known_solution(&r.final_point, LIMIT_SNAP)
                .map_or(r.final_point[0], |s| s[0])
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    match cfg.command {
        Command::Solve => run_solve(cfg, &mut report)?,
        Command::Table1 | Command::Table2 => run_table(cfg, &mut report)?,
        Command::Recovery => run_recovery_cmd(cfg, &mut report)?,
        Command::Rates => run_rates(cfg, &mut report)?,
        Command::Ratio => run_ratio(cfg, &mut report)?,
        Command::Certify => run_certify(cfg, &mut report)?,
    }
    Ok(report)
}

fn write(
    report: &mut RunReport,
    cfg: &RunConfig,
    name: &str,
    header: &[&str],
    rows: &[Vec<Cell>],
) -> Result<()> {
    let path = cfg.path(name);
    emit_csv(&path, header, rows)?;
    report.files.push(path);
    Ok(())
}

fn plot(
    report: &mut RunReport,
    cfg: &RunConfig,
    name: &str,
    series: &[Series],
    kind: PlotKind,
    title: &str,
) -> Result<()> {
    if !cfg.plot {
        return Ok(());
    }
    let path = cfg.path(name);
    emit_svg_plot(series, kind, title, &path)?;
    report.files.push(path);
    Ok(())
}

fn run_solve(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let tol = cfg.tol[0];
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &u1 in &cfg.u1 {
        let (f, r) = cfg.solve_scalar(u1, tol)?;
        let trace = r.trace.as_ref().expect("full trace");
        for rec in &trace.records {
            rows.push(vec![
                u1.into(),
                rec.n.into(),
                rec.u[0].into(),
                rec.z[0].into(),
                rec.lambda.into(),
                rec.error.into(),
                rec.residual.into(),
            ]);
        }
        series.push(Series::indexed(format!("u1 = {u1}"), &trace.errors()));
        report.summary.push(format!(
            "u1={u1}: {:?} after {} iterations, final {:.9}, limit {}",
            r.status,
            r.iterations,
            r.final_point[0],
            cfg.limit_of(&f, &r)
        ));
    }
    write(
        report,
        cfg,
        "solve.csv",
        &["u1", "n", "u", "z", "lambda", "error", "residual"],
        &rows,
    )?;
    plot(
        report,
        cfg,
        "solve.svg",
        &series,
        PlotKind::ErrorVsIterLogLog,
        "Error vs iterations",
    )
}

fn run_table(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let spec = TableSpec {
        example: cfg.example,
        starts: cfg.u1.iter().copied().map(InitialPoint::Fixed).collect(),
        lambda1: cfg.lambda1,
        mu: cfg.mu,
        xi: cfg.xi()?,
        tolerances: cfg.tol.clone(),
        max_iters: cfg.max_iters,
        criterion: cfg.criterion(),
    };
    let rows = run_example_table(&spec)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.u1.into(),
                r.tol.into(),
                r.iterations.into(),
                r.cpu_seconds.into(),
                r.limit.into(),
            ]
        })
        .collect();
    for r in &rows {
        report.summary.push(format!(
            "u1={:<6} tol={:e}  iter={:<4} limit={}",
            r.u1, r.tol, r.iterations, r.limit
        ));
    }
    let name = format!("{}.csv", cfg.command.name());
    write(
        report,
        cfg,
        &name,
        &["u1", "tol", "iterations", "cpu_seconds", "limit"],
        &cells,
    )
}

fn run_recovery_cmd(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let params = RecoveryParams {
        lambda1: cfg.lambda1,
        mu: cfg.mu,
        xi: cfg.xi()?,
        tol: cfg.tol[0],
        max_iters: cfg.max_iters,
    };
    if cfg.ensemble > 1 {
        let seeds: Vec<u64> = (0..cfg.ensemble as u64).map(|i| cfg.seed + i).collect();
        let runs = recovery_ensemble(cfg.m, cfg.n, cfg.k, &seeds, &params)?;
        let rows: Vec<Vec<Cell>> = runs
            .iter()
            .map(|r| {
                vec![
                    r.seed.into(),
                    r.iterations.into(),
                    Cell::Text(format!("{:?}", r.status).to_lowercase()),
                    r.cpu_seconds.into(),
                    r.final_mse.into(),
                    r.l1_ratio.into(),
                    r.signs_match.into(),
                ]
            })
            .collect();
        let mut iters: Vec<usize> = runs.iter().map(|r| r.iterations).collect();
        iters.sort_unstable();
        report.summary.push(format!(
            "M={} N={} K={}: {} runs, median iterations {}",
            cfg.m,
            cfg.n,
            cfg.k,
            runs.len(),
            iters[iters.len() / 2]
        ));
        return write(
            report,
            cfg,
            "recovery_ensemble.csv",
            &[
                "seed",
                "iterations",
                "status",
                "cpu_seconds",
                "final_mse",
                "l1_ratio",
                "signs_match",
            ],
            &rows,
        );
    }

    let inst = gen_recovery(cfg.m, cfg.n, cfg.k, cfg.seed)?;
    let run = run_recovery(&inst, &params.config(&inst)?)?;
    let trace = run.result.trace.as_ref().expect("full trace");
    let ratio_at = |n: usize| {
        run.ratios
            .values
            .binary_search_by_key(&n, |v| v.0)
            .ok()
            .map(|i| run.ratios.values[i].1)
    };
    let rows: Vec<Vec<Cell>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.n.into(),
                r.error.into(),
                r.lambda.into(),
                ratio_at(r.n).into(),
            ]
        })
        .collect();
    report.summary.push(format!(
        "M={} N={} K={} seed={}: {:?} after {} iterations ({:.3} s), final MSE {:.3e}, ‖u‖₁/K = {:.4}, min ratio {:?}",
        cfg.m,
        cfg.n,
        cfg.k,
        cfg.seed,
        run.result.status,
        run.result.iterations,
        run.result.wall_time.as_secs_f64(),
        run.mse_series.last().copied().unwrap_or(0.0),
        if cfg.k == 0 { 0.0 } else { norm1(&run.result.final_point) / cfg.k as f64 },
        run.ratios.min()
    ));
    write(
        report,
        cfg,
        "recovery.csv",
        &["n", "mse", "lambda", "ratio"],
        &rows,
    )?;
    plot(
        report,
        cfg,
        "recovery_mse.svg",
        &[Series::indexed("Error", &run.mse_series)],
        PlotKind::ErrorVsIterLogLog,
        "Error vs iterations",
    )?;
    let ratio_pts: Vec<(f64, f64)> = run
        .ratios
        .values
        .iter()
        .map(|(n, v)| (*n as f64, *v))
        .collect();
    if !ratio_pts.is_empty() {
        plot(
            report,
            cfg,
            "recovery_ratio.svg",
            &[Series::new("Ratio", ratio_pts)],
            PlotKind::RatioVsIter,
            "Ratio vs iterations",
        )?;
    }
    plot(
        report,
        cfg,
        "recovery_signal.svg",
        &[
            Series::indexed("original", &inst.u_star),
            Series::indexed("recovered", &run.result.final_point),
        ],
        PlotKind::SignalStem,
        "Signal",
    )
}

fn run_rates(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let (f, r) = cfg.solve_scalar(cfg.u1[0], cfg.tol[0])?;
    let limit = cfg.limit_of(&f, &r);
    let trace = r.trace.as_ref().expect("full trace");
    let errs: Vec<(usize, f64)> = trace
        .records
        .iter()
        .map(|rec| (rec.n + 1, dist(&rec.u_next, &[limit])))
        .filter(|(_, e)| *e > 0.0)
        .collect();
    let rows: Vec<Vec<Cell>> = errs
        .iter()
        .map(|(n, e)| vec![(*n).into(), (*e).into()])
        .collect();
    let values: Vec<f64> = errs.iter().map(|e| e.1).collect();
    match estimate_rates(&values, cfg.tail_window) {
        Ok(est) => report.summary.push(format!(
            "limit {limit}: q_factor {:.6}, sublinear order {:.4} over the last {} errors",
            est.q_factor, est.sublinear_order, est.tail_window
        )),
        Err(e) => report
            .summary
            .push(format!("limit {limit}: no rate estimate ({e})")),
    }
    write(report, cfg, "rates.csv", &["n", "error"], &rows)?;
    let pts: Vec<(f64, f64)> = errs.iter().map(|(n, e)| (*n as f64, *e)).collect();
    if pts.is_empty() {
        return Ok(());
    }
    plot(
        report,
        cfg,
        "rates.svg",
        &[Series::new("‖u_n − u*‖", pts)],
        PlotKind::ErrorVsIterLogLog,
        "Error vs iterations",
    )
}

fn run_ratio(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let (f, r) = cfg.solve_scalar(cfg.u1[0], cfg.tol[0])?;
    let reference = cfg.limit_of(&f, &r);
    let series = a5_ratio_series(
        r.trace.as_ref().expect("full trace"),
        &f,
        &[reference],
        cfg.epsilon,
    )?;
    let rows: Vec<Vec<Cell>> = series
        .values
        .iter()
        .map(|(n, v)| vec![(*n).into(), (*v).into()])
        .collect();
    report.summary.push(format!(
        "reference {reference}, epsilon {}: {} retained entries, min ratio {:?}",
        cfg.epsilon,
        series.values.len(),
        series.min()
    ));
    write(report, cfg, "ratio.csv", &["n", "ratio"], &rows)?;
    let pts: Vec<(f64, f64)> = series.values.iter().map(|(n, v)| (*n as f64, *v)).collect();
    if pts.is_empty() {
        return Ok(());
    }
    plot(
        report,
        cfg,
        "ratio.svg",
        &[Series::new("Ratio", pts)],
        PlotKind::RatioVsIter,
        "Ratio vs iterations",
    )
}

fn run_certify(cfg: &RunConfig, report: &mut RunReport) -> Result<()> {
    let cert = build_separation_certificate(&cfg.points)?;
    let disjoint = verify_disjointness(&cert, cfg.samples, cfg.seed);
    let rows: Vec<Vec<Cell>> = cert
        .directions
        .iter()
        .map(|d| {
            vec![
                d.i.into(),
                d.j.into(),
                dist(&cert.points[d.i], &cert.points[d.j]).into(),
                cert.delta.into(),
            ]
        })
        .collect();
    report.summary.push(format!(
        "{} points, delta {}, certificate {}, disjointness over {} samples: {}",
        cert.points.len(),
        cert.delta,
        if cert.is_valid() { "valid" } else { "INVALID" },
        cfg.samples,
        if disjoint { "ok" } else { "VIOLATED" }
    ));
    write(
        report,
        cfg,
        "certify.csv",
        &["i", "j", "distance", "delta"],
        &rows,
    )
}
