//! Run configuration: one schema shared by the config file and the
//! command-line flags, aggregated validation that reports every problem
//! at once, and a record of every default that was filled in.

use serde::{Deserialize, Serialize};
use shellwave::estimate_bench::{ChiKind, FieldFamily};
use shellwave::lp_decomp::LPBasis;
use shellwave::resolvent::{ResolventBackend, ResolventSign};
use shellwave::spectral_core::Grid;
use shellwave::{Result, ShellwaveError};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SHELLWAVE_OUT";

/// Subcommand selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GridInfo,
    Norm,
    DirectSolve,
    DataGen,
    Invert,
    Bench,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::GridInfo => "grid-info",
            CommandKind::Norm => "norm",
            CommandKind::DirectSolve => "direct-solve",
            CommandKind::DataGen => "data-gen",
            CommandKind::Invert => "invert",
            CommandKind::Bench => "bench",
        };
        f.write_str(s)
    }
}

/// Norm selector for the `norm` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    XStar,
    XUpper,
    YStar,
    Ah,
    AhDual,
    Bourgain,
    Ytm,
}

impl SpaceKind {
    pub fn id(self) -> &'static str {
        match self {
            SpaceKind::XStar => "x_star",
            SpaceKind::XUpper => "x_upper",
            SpaceKind::YStar => "y_star",
            SpaceKind::Ah => "ah",
            SpaceKind::AhDual => "ah_dual",
            SpaceKind::Bourgain => "bourgain",
            SpaceKind::Ytm => "ytm",
        }
    }

    pub fn wants_lambda(self) -> bool {
        matches!(self, SpaceKind::XStar | SpaceKind::XUpper | SpaceKind::YStar)
    }

    pub fn wants_tau(self) -> bool {
        matches!(self, SpaceKind::Bourgain | SpaceKind::Ytm)
    }
}

impl FromStr for SpaceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<SpaceKind, String> {
        match s {
            "x_star" => Ok(SpaceKind::XStar),
            "x_upper" => Ok(SpaceKind::XUpper),
            "y_star" => Ok(SpaceKind::YStar),
            "ah" => Ok(SpaceKind::Ah),
            "ah_dual" => Ok(SpaceKind::AhDual),
            "bourgain" => Ok(SpaceKind::Bourgain),
            "ytm" => Ok(SpaceKind::Ytm),
            other => Err(format!(
                "unknown space {other:?}; expected one of x_star, x_upper, y_star, \
                 ah, ah_dual, bourgain, ytm"
            )),
        }
    }
}

/// Grid geometry as written in configs and flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub d: usize,
    pub half_side: f64,
    pub n: usize,
}

impl GridParams {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.d, self.half_side, self.n)
    }
}

impl FromStr for GridParams {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<GridParams, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected d,half_side,n, got {s:?}"));
        }
        let d = parts[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("dimension: {e}"))?;
        let half_side = parts[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("half side: {e}"))?;
        let n = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("samples per axis: {e}"))?;
        Ok(GridParams { d, half_side, n })
    }
}

/// The full run configuration. Every field except `command` is optional
/// in the file; [`normalize`] fills defaults and rejects combinations
/// the chosen command cannot use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    // norm
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<LPBasis>,

    // direct-solve and data-gen
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<ResolventSign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<ResolventBackend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann_max_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_fields: Option<bool>,

    // invert
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials_a: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials_b: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cgo_seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,

    // bench
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FieldFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_witness: Option<bool>,
}

impl RunConfig {
    /// Blank configuration for one command; everything else defaults.
    pub fn bare(command: CommandKind) -> RunConfig {
        RunConfig {
            command,
            grid: None,
            seed: None,
            output_dir: None,
            threads: None,
            space: None,
            field: None,
            lambda: None,
            tau: None,
            weight_m: None,
            sobolev_s: None,
            basis: None,
            potentials: None,
            lambda_grid: None,
            r0: None,
            boundary_order: None,
            sign: None,
            backend: None,
            neumann_tol: None,
            neumann_max_terms: None,
            save_fields: None,
            potentials_a: None,
            potentials_b: None,
            kappa_grid: None,
            kappa_cap: None,
            tau_grid: None,
            cgo_seeds: None,
            tol: None,
            inequality: None,
            param_grid: None,
            param_m: None,
            family: None,
            samples: None,
            radius: None,
            exponent: None,
            chi: None,
            save_witness: None,
        }
    }

    /// Parses a config file without validating; schema violations
    /// (unknown keys, wrong types) come back as a one-entry list.
    pub fn from_file(path: &Path) -> std::result::Result<RunConfig, Vec<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![format!("{}: {e}", path.display())])?;
        serde_json::from_str(&text).map_err(|e| vec![format!("{}: schema: {e}", path.display())])
    }
}

/// A validated configuration plus the list of defaults that were
/// filled in, ready to be echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigReport {
    pub config: RunConfig,
    pub defaulted: Vec<String>,
}

/// Reads, schema-checks, normalizes, and validates a config file.
/// Problems are aggregated: the error list names every failing field,
/// never just the first.
pub fn validate_config(path: &Path) -> std::result::Result<ConfigReport, Vec<String>> {
    let config = RunConfig::from_file(path)?;
    normalize(config, &path.display().to_string())
}

fn require<T: Copy>(
    value: Option<T>,
    name: &str,
    command: CommandKind,
    errors: &mut Vec<String>,
) -> Option<T> {
    if value.is_none() {
        errors.push(format!("{command} requires {name}"));
    }
    value
}

fn default_note<T: fmt::Display>(defaulted: &mut Vec<String>, name: &str, value: T) {
    defaulted.push(format!("{name} = {value}"));
}

fn check_positive(value: Option<f64>, name: &str, errors: &mut Vec<String>) {
    if let Some(v) = value {
        if !(v > 0.0) || !v.is_finite() {
            errors.push(format!("{name} must be positive and finite, got {v}"));
        }
    }
}

fn check_path(path: &Option<PathBuf>, name: &str, errors: &mut Vec<String>) {
    if let Some(p) = path {
        if !p.exists() {
            errors.push(format!("{name} path {} does not exist", p.display()));
        }
    }
}

/// Fills defaults and checks every command-specific requirement,
/// returning the normalized config and the default ledger, or the full
/// list of problems. `context` (usually the config path) prefixes
/// messages that surface from deeper constructors.
pub fn normalize(
    mut config: RunConfig,
    context: &str,
) -> std::result::Result<ConfigReport, Vec<String>> {
    let mut errors = Vec::new();
    let mut defaulted = Vec::new();
    let command = config.command;

    if config.seed.is_none() {
        config.seed = Some(0);
        default_note(&mut defaulted, "seed", 0);
    }
    if config.output_dir.is_none() {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("shellwave-out"));
        default_note(&mut defaulted, "output_dir", dir.display());
        config.output_dir = Some(dir);
    }

    let needs_grid = command != CommandKind::Norm;
    let grid = match (config.grid, needs_grid) {
        (Some(params), _) => match params.build() {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(format!("{context}: grid: {e}"));
                None
            }
        },
        (None, true) => {
            errors.push(format!("{command} requires grid"));
            None
        }
        (None, false) => None,
    };

    check_positive(config.tol, "tol", &mut errors);
    check_positive(config.neumann_tol, "neumann_tol", &mut errors);
    check_positive(config.lambda, "lambda", &mut errors);
    check_positive(config.tau, "tau", &mut errors);

    match command {
        CommandKind::GridInfo => {}
        CommandKind::Norm => {
            let space = require(config.space, "space", command, &mut errors);
            if config.field.is_none() {
                errors.push("norm requires field (path to a stored field)".into());
            }
            check_path(&config.field, "field", &mut errors);
            if let Some(space) = space {
                if space.wants_lambda() && config.lambda.is_none() {
                    errors.push(format!("norm in space {} requires lambda", space.id()));
                }
                if space.wants_tau() && config.tau.is_none() {
                    errors.push(format!("norm in space {} requires tau", space.id()));
                }
                if space == SpaceKind::Ytm && config.weight_m.is_none() {
                    errors.push("norm in space ytm requires weight_m".into());
                }
                if space.wants_tau() && config.sobolev_s.is_none() {
                    config.sobolev_s = Some(0.5);
                    default_note(&mut defaulted, "sobolev_s", 0.5);
                }
            }
            if config.basis.is_none() {
                config.basis = Some(LPBasis::default());
                default_note(&mut defaulted, "basis", "smooth");
            }
        }
        CommandKind::DirectSolve | CommandKind::DataGen => {
            if command == CommandKind::DataGen {
                match &config.lambda_grid {
                    None => errors.push("data-gen requires lambda_grid".into()),
                    Some(grid) if grid.is_empty() => {
                        errors.push("lambda_grid must be nonempty".into())
                    }
                    Some(grid) => {
                        for v in grid {
                            if !(*v > 0.0) || !v.is_finite() {
                                errors.push(format!(
                                    "lambda_grid entries must be positive and finite, got {v}"
                                ));
                            }
                        }
                    }
                }
            } else {
                require(config.lambda, "lambda", command, &mut errors);
            }
            check_path(&config.potentials, "potentials", &mut errors);
            if config.r0.is_none() {
                config.r0 = Some(1.5);
                default_note(&mut defaulted, "r0", 1.5);
            }
            let r0 = config.r0.unwrap();
            if !(r0 >= 1.0) || !r0.is_finite() {
                errors.push(format!("r0 must satisfy r0 >= 1, got {r0}"));
            } else if let Some(g) = &grid {
                let margin = g.half_side() / 2.0;
                if r0 > margin {
                    errors.push(format!(
                        "r0 = {r0} violates the quarter-side margin: the measurement \
                         sphere must satisfy r0 <= {margin} on this box so padded \
                         kernels stay image-free"
                    ));
                }
            }
            if config.boundary_order.is_none() {
                config.boundary_order = Some(2);
                default_note(&mut defaulted, "boundary_order", 2);
            }
            if config.sign.is_none() {
                config.sign = Some(ResolventSign::Outgoing);
                default_note(&mut defaulted, "sign", "outgoing");
            }
            if config.backend.is_none() {
                config.backend = Some(ResolventBackend::PvSphere);
                default_note(&mut defaulted, "backend", "pv_sphere");
            }
            if config.neumann_tol.is_none() {
                config.neumann_tol = Some(1e-11);
                default_note(&mut defaulted, "neumann_tol", 1e-11);
            }
            if config.neumann_max_terms.is_none() {
                config.neumann_max_terms = Some(30);
                default_note(&mut defaulted, "neumann_max_terms", 30);
            }
            if config.save_fields.is_none() {
                config.save_fields = Some(false);
                default_note(&mut defaulted, "save_fields", false);
            }
            if config.basis.is_none() {
                config.basis = Some(LPBasis::default());
                default_note(&mut defaulted, "basis", "smooth");
            }
        }
        CommandKind::Invert => {
            if let Some(g) = &grid {
                if g.dimension() != 3 {
                    errors.push("invert requires a three-dimensional grid".into());
                }
            }
            require(config.lambda, "lambda", command, &mut errors);
            if config.potentials_a.is_none() {
                errors.push("invert requires potentials_a".into());
            }
            check_path(&config.potentials_a, "potentials_a", &mut errors);
            check_path(&config.potentials_b, "potentials_b", &mut errors);
            match &config.kappa_grid {
                None => errors.push("invert requires kappa_grid (axis values)".into()),
                Some(axis) if axis.is_empty() => {
                    errors.push("kappa_grid must be nonempty".into())
                }
                Some(axis) => {
                    if axis.iter().any(|v| !v.is_finite()) {
                        errors.push("kappa_grid entries must be finite".into());
                    }
                }
            }
            match &config.tau_grid {
                None => errors.push("invert requires tau_grid".into()),
                Some(taus) if taus.is_empty() => errors.push("tau_grid must be nonempty".into()),
                Some(taus) => {
                    for t in taus {
                        if !(*t > 0.0) || !t.is_finite() {
                            errors.push(format!(
                                "tau_grid entries must be positive and finite, got {t}"
                            ));
                        }
                    }
                }
            }
            if let Some(cap) = config.kappa_cap {
                if !(cap > 0.0) || !cap.is_finite() {
                    errors.push(format!("kappa_cap must be positive and finite, got {cap}"));
                }
            }
            if config.cgo_seeds.is_none() {
                config.cgo_seeds = Some(2);
                default_note(&mut defaulted, "cgo_seeds", 2);
            } else if config.cgo_seeds == Some(0) {
                errors.push("cgo_seeds must be at least 1".into());
            }
            if config.tol.is_none() {
                config.tol = Some(1e-10);
                default_note(&mut defaulted, "tol", 1e-10);
            }
        }
        CommandKind::Bench => {
            let ineq = match &config.inequality {
                None => {
                    errors.push("bench requires inequality (the --ineq flag)".into());
                    None
                }
                Some(id) => match shellwave::estimate_bench::Inequality::from_id(id) {
                    Ok(i) => Some(i),
                    Err(e) => {
                        errors.push(format!("{e}"));
                        None
                    }
                },
            };
            match &config.param_grid {
                None => errors.push("bench requires param_grid".into()),
                Some(grid) if grid.is_empty() => {
                    errors.push("param_grid must be nonempty".into())
                }
                _ => {}
            }
            if let Some(i) = ineq {
                if i.id() == "carleman" && config.param_m.is_none() {
                    errors.push("bench --ineq carleman requires param_m".into());
                }
            }
            if config.family.is_none() {
                config.family = Some(FieldFamily::Gaussian);
                default_note(&mut defaulted, "family", "gaussian");
            }
            if config.samples.is_none() {
                config.samples = Some(64);
                default_note(&mut defaulted, "samples", 64);
            }
            if config.basis.is_none() {
                config.basis = Some(LPBasis::default());
                default_note(&mut defaulted, "basis", "smooth");
            }
            if config.radius.is_none() {
                config.radius = Some(1.0);
                default_note(&mut defaulted, "radius", 1.0);
            }
            if config.backend.is_none() {
                config.backend = Some(ResolventBackend::PvSphere);
                default_note(&mut defaulted, "backend", "pv_sphere");
            }
            if config.chi.is_none() {
                config.chi = Some(ChiKind::Calibrated);
                default_note(&mut defaulted, "chi", "calibrated");
            }
            if config.save_witness.is_none() {
                config.save_witness = Some(false);
                default_note(&mut defaulted, "save_witness", false);
            }
        }
    }

    if errors.is_empty() {
        Ok(ConfigReport { config, defaulted })
    } else {
        Err(errors)
    }
}

/// Joins an aggregated error list into one `ShellwaveError` carrying
/// exit code 2.
pub fn config_error(errors: Vec<String>) -> ShellwaveError {
    ShellwaveError::Parameter(errors.join("\n"))
}
