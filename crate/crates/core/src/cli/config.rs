//! Run configuration: command defaults, overlaid by a flat JSON file,
//! overlaid by command-line flags.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExampleId;

pub const SEED_ENV: &str = "QVI_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Table1,
    Table2,
    Recovery,
    Rates,
    Ratio,
    Certify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Recovery => "recovery",
            Command::Rates => "rates",
            Command::Ratio => "ratio",
            Command::Certify => "certify",
        }
    }
}

/// Every key optional; used for both the JSON file and the flag layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<Command>,
    pub example: Option<ExampleId>,
    pub u1: Option<Vec<f64>>,
    pub lambda1: Option<f64>,
    pub mu: Option<f64>,
    pub xi_scale: Option<f64>,
    pub xi_exp: Option<f64>,
    pub tol: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub squared_error: Option<bool>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    pub epsilon: Option<f64>,
    pub reference: Option<f64>,
    pub tail_window: Option<usize>,
    pub points: Option<Vec<Vec<f64>>>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
}

impl PartialConfig {
    /// Keys set in `top` win.
    pub fn overlay(self, top: PartialConfig) -> PartialConfig {
        macro_rules! pick {
            ($($f:ident),*) => { PartialConfig { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            command,
            example,
            u1,
            lambda1,
            mu,
            xi_scale,
            xi_exp,
            tol,
            max_iters,
            squared_error,
            m,
            n,
            k,
            seed,
            ensemble,
            epsilon,
            reference,
            tail_window,
            points,
            samples,
            out,
            plot
        )
    }

    pub fn from_json_str(text: &str) -> Result<PartialConfig> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<PartialConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::input(format!("config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub example: ExampleId,
    pub u1: Vec<f64>,
    pub lambda1: f64,
    pub mu: f64,
    pub xi_scale: f64,
    pub xi_exp: f64,
    pub tol: Vec<f64>,
    pub max_iters: usize,
    pub squared_error: bool,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub ensemble: usize,
    pub epsilon: f64,
    /// Reference solution for `ratio`/`rates`; `None` means "the identified limit".
    pub reference: Option<f64>,
    pub tail_window: usize,
    pub points: Vec<Vec<f64>>,
    pub samples: usize,
    pub out: PathBuf,
    pub plot: bool,
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_partial(&self) -> PartialConfig {
        PartialConfig {
            command: Some(self.command),
            example: Some(self.example),
            u1: Some(self.u1.clone()),
            lambda1: Some(self.lambda1),
            mu: Some(self.mu),
            xi_scale: Some(self.xi_scale),
            xi_exp: Some(self.xi_exp),
            tol: Some(self.tol.clone()),
            max_iters: Some(self.max_iters),
            squared_error: Some(self.squared_error),
            m: Some(self.m),
            n: Some(self.n),
            k: Some(self.k),
            seed: Some(self.seed),
            ensemble: Some(self.ensemble),
            epsilon: Some(self.epsilon),
            reference: self.reference,
            tail_window: Some(self.tail_window),
            points: Some(self.points.clone()),
            samples: Some(self.samples),
            out: Some(self.out.clone()),
            plot: Some(self.plot),
        }
    }
}

/// First members of `{0} ∪ {2kπ + 3π/2}`.
pub fn sine_limit_points(count: usize) -> Vec<Vec<f64>> {
    std::iter::once(0.0)
        .chain((0..).map(|k| 2.0 * k as f64 * PI + 1.5 * PI))
        .take(count)
        .map(|p| vec![p])
        .collect()
}

fn defaults(command: Command) -> RunConfig {
    let mut c = RunConfig {
        command,
        example: ExampleId::Cubic,
        u1: vec![0.6],
        lambda1: 1.0,
        mu: 0.3,
        xi_scale: 100.0,
        xi_exp: 1.1,
        tol: vec![1e-6],
        max_iters: 500,
        squared_error: false,
        m: 256,
        n: 512,
        k: 20,
        seed: 0,
        ensemble: 1,
        epsilon: 1.0,
        reference: None,
        tail_window: 20,
        points: sine_limit_points(5),
        samples: 10_000,
        out: PathBuf::from("out"),
        plot: false,
    };
    match command {
        Command::Table1 => {
            c.u1 = vec![0.6, 0.9, 2.0, 3.0, -3.0];
            c.tol = vec![1e-6, 1e-8];
        }
        Command::Table2 => {
            c.example = ExampleId::Sine;
            c.u1 = vec![2.0, 0.1, -0.5, 4.0, -2.0];
            c.mu = 0.5;
            c.tol = vec![1e-6, 1e-8];
        }
        Command::Recovery => {
            c.lambda1 = 0.1;
            c.max_iters = 2000;
        }
        Command::Rates => c.tol = vec![1e-8],
        _ => {}
    }
    c
}

fn bad(key: &str, why: impl std::fmt::Display) -> Error {
    Error::input(format!("{key}: {why}"))
}

fn validate(c: &RunConfig) -> Result<()> {
    if !(c.lambda1 > 0.0 && c.lambda1.is_finite()) {
        return Err(bad(
            "lambda1",
            format!("must be positive, got {}", c.lambda1),
        ));
    }
    if !(c.mu > 0.0 && c.mu < 1.0) {
        return Err(bad("mu", format!("must lie in (0, 1), got {}", c.mu)));
    }
    if !(c.xi_scale >= 0.0 && c.xi_scale.is_finite()) {
        return Err(bad(
            "xi_scale",
            format!("must be nonnegative, got {}", c.xi_scale),
        ));
    }
    if !(c.xi_exp > 1.0 && c.xi_exp.is_finite()) {
        return Err(bad("xi_exp", format!("must exceed 1, got {}", c.xi_exp)));
    }
    if c.tol.is_empty() {
        return Err(bad("tol", "at least one tolerance is required"));
    }
    if let Some(t) = c.tol.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(bad("tol", format!("must be positive, got {t}")));
    }
    if c.max_iters == 0 {
        return Err(bad("max_iters", "must be positive"));
    }
    if c.u1.is_empty() {
        return Err(bad("u1", "at least one initial point is required"));
    }
    if let Some(u) = c.u1.iter().find(|u| !u.is_finite()) {
        return Err(bad("u1", format!("must be finite, got {u}")));
    }
    if c.k > c.n {
        return Err(bad("k", format!("K = {} exceeds N = {}", c.k, c.n)));
    }
    if c.ensemble == 0 {
        return Err(bad("ensemble", "must be positive"));
    }
    if c.epsilon.is_nan() || c.epsilon < 0.0 {
        return Err(bad(
            "epsilon",
            format!("must be nonnegative, got {}", c.epsilon),
        ));
    }
    if c.tail_window < 3 {
        return Err(bad("tail_window", "must be at least 3"));
    }
    if c.command == Command::Certify && c.points.len() < 2 {
        return Err(bad("points", "at least two points are required"));
    }
    Ok(())
}

/// Resolves `file` (optional) and `flags` over the command defaults. The
/// seed falls back to `env_seed` (normally `QVI_SEED`) when neither sets it.
pub fn parse_config(
    file: Option<&Path>,
    flags: PartialConfig,
    env_seed: Option<u64>,
) -> Result<RunConfig> {
    let from_file = match file {
        Some(p) => PartialConfig::from_file(p)?,
        None => PartialConfig::default(),
    };
    resolve(from_file.overlay(flags), env_seed)
}

pub fn resolve(p: PartialConfig, env_seed: Option<u64>) -> Result<RunConfig> {
    let command = p.command.ok_or_else(|| bad("command", "missing"))?;
    let d = defaults(command);
    let c = RunConfig {
        command,
        example: p.example.unwrap_or(d.example),
        u1: p.u1.unwrap_or(d.u1),
        lambda1: p.lambda1.unwrap_or(d.lambda1),
        mu: p.mu.unwrap_or(d.mu),
        xi_scale: p.xi_scale.unwrap_or(d.xi_scale),
        xi_exp: p.xi_exp.unwrap_or(d.xi_exp),
        tol: p.tol.unwrap_or(d.tol),
        max_iters: p.max_iters.unwrap_or(d.max_iters),
        squared_error: p.squared_error.unwrap_or(d.squared_error),
        m: p.m.unwrap_or(d.m),
        n: p.n.unwrap_or(d.n),
        k: p.k.unwrap_or(d.k),
        seed: p.seed.or(env_seed).unwrap_or(d.seed),
        ensemble: p.ensemble.unwrap_or(d.ensemble),
        epsilon: p.epsilon.unwrap_or(d.epsilon),
        reference: p.reference.or(d.reference),
        tail_window: p.tail_window.unwrap_or(d.tail_window),
        points: p.points.unwrap_or(d.points),
        samples: p.samples.unwrap_or(d.samples),
        out: p.out.unwrap_or(d.out),
        plot: p.plot.unwrap_or(d.plot),
    };
    validate(&c)?;
    Ok(c)
}

/// Parses `QVI_SEED` if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| bad(SEED_ENV, format!("not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmd(c: Command) -> PartialConfig {
        PartialConfig {
            command: Some(c),
            ..Default::default()
        }
    }

    #[test]
    fn table_tolerances_from_flags() {
        let flags = PartialConfig {
            tol: Some(vec![1e-6, 1e-8]),
            ..cmd(Command::Table1)
        };
        let c = resolve(flags, None).unwrap();
        assert_eq!(c.tol, vec![1e-6, 1e-8]);
        assert_eq!(c.u1.len(), 5);
    }

    #[test]
    fn recovery_shape_from_flags() {
        let flags = PartialConfig {
            m: Some(512),
            n: Some(1024),
            k: Some(60),
            seed: Some(3),
            ..cmd(Command::Recovery)
        };
        let c = resolve(flags, None).unwrap();
        assert_eq!((c.m, c.n, c.k, c.seed), (512, 1024, 60, 3));
        assert_eq!((c.lambda1, c.mu, c.max_iters), (0.1, 0.3, 2000));
    }

    #[test]
    fn defaults_applied() {
        let c = resolve(cmd(Command::Solve), None).unwrap();
        assert_eq!(c.mu, 0.3);
        assert_eq!(
            (c.lambda1, c.xi_scale, c.xi_exp, c.max_iters),
            (1.0, 100.0, 1.1, 500)
        );
        assert_eq!(c.tol, vec![1e-6]);
        assert_eq!(resolve(cmd(Command::Table2), None).unwrap().mu, 0.5);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve(cmd(Command::Recovery), Some(9)).unwrap().seed, 9);
        let flags = PartialConfig {
            seed: Some(4),
            ..cmd(Command::Recovery)
        };
        assert_eq!(resolve(flags, Some(9)).unwrap().seed, 4);
    }

    #[test]
    fn errors_name_the_key() {
        let e = resolve(
            PartialConfig {
                mu: Some(1.5),
                ..cmd(Command::Solve)
            },
            None,
        )
        .unwrap_err();
        assert!(e.to_string().contains("mu"), "{e}");
        let e = resolve(PartialConfig::default(), None).unwrap_err();
        assert!(e.to_string().contains("command"), "{e}");
        let e = PartialConfig::from_json_str(r#"{"command":"solve","lamda1":2}"#).unwrap_err();
        assert!(e.to_string().contains("lamda1"), "{e}");
        let e = PartialConfig::from_json_str(r#"{"command":"solve","mu":"x"}"#).unwrap_err();
        assert!(e.to_string().contains("config"), "{e}");
    }

    #[test]
    fn defaults_round_trip() {
        for command in [
            Command::Solve,
            Command::Table1,
            Command::Table2,
            Command::Recovery,
            Command::Rates,
            Command::Ratio,
            Command::Certify,
        ] {
            let c = resolve(cmd(command), None).unwrap();
            let back = resolve(PartialConfig::from_json_str(&c.to_json()).unwrap(), None).unwrap();
            assert_eq!(back, c);
            assert_eq!(resolve(c.to_partial(), Some(77)).unwrap(), c);
        }
    }

    #[test]
    fn flags_override_file() {
        let file =
            PartialConfig::from_json_str(r#"{"command":"table1","mu":0.4,"seed":5}"#).unwrap();
        let flags = PartialConfig {
            mu: Some(0.2),
            ..Default::default()
        };
        let c = resolve(file.overlay(flags), None).unwrap();
        assert_eq!((c.mu, c.seed), (0.2, 5));
    }
}
