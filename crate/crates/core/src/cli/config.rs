use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use serde::{Deserialize, Serialize};

use crate::data::{DataKind, DataParams};
use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::scheme::{Direction, SchemeParams};

/// Environment variable that overrides the output directory of a config
/// file (but not `--out`).
pub const OUT_ENV: &str = "BRANCHFLOW_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ClapSubcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    /// Divergence, vorticity, decay and singularity diagnostics of the data.
    CheckData,
    /// Solve Euler on [s, T] by Picard iteration.
    Solve,
    /// Measure contraction of the Picard increments.
    Contraction,
    /// Two-branch pipeline on a grid ladder.
    Witness,
    /// Evaluate the linear-time bound integral.
    IntegralBound,
}

#[derive(Debug, Parser)]
#[command(name = "branchflow", version, about = "Heat-regularized Picard scheme for Euler and two-branch NSE witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Subcommand,
    #[command(flatten)]
    pub flags: Flags,
}

/// Every flag is optional so that unset flags fall through to the config
/// file and then to the defaults.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    #[arg(long = "T", global = true)]
    pub end: Option<f64>,
    #[arg(long = "L", global = true)]
    pub half_extent: Option<f64>,
    #[arg(long = "N", global = true)]
    pub points: Option<usize>,
    #[arg(long = "M", global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Solve the time-reversed system.
    #[arg(long, global = true)]
    pub reverse: bool,
    #[arg(long = "grid-ladder", global = true, value_delimiter = ',')]
    pub grid_ladder: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// singular | smooth
    #[arg(long, global = true)]
    pub data: Option<String>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    /// Spatial dimension, 2 or 3.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Horizons for `integral-bound`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub lipschitz: Option<f64>,
    #[arg(long = "min-horizon", global = true)]
    pub min_horizon: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Keys accepted in a JSON config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub eps: Option<f64>,
    pub s: Option<f64>,
    pub nu: Option<f64>,
    #[serde(rename = "T")]
    pub end: Option<f64>,
    #[serde(rename = "L")]
    pub half_extent: Option<f64>,
    #[serde(rename = "N")]
    pub points: Option<usize>,
    #[serde(rename = "M")]
    pub nodes: Option<usize>,
    pub kmax: Option<usize>,
    pub tol: Option<f64>,
    pub reverse: Option<bool>,
    pub grid_ladder: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub data: Option<String>,
    pub amplitude: Option<f64>,
    pub dim: Option<usize>,
    pub delta: Option<Vec<f64>>,
    pub lipschitz: Option<f64>,
    pub min_horizon: Option<f64>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Fully resolved configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub data: DataKind,
    pub eps: f64,
    pub amplitude: f64,
    pub dim: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub s: f64,
    pub nu: Option<f64>,
    #[serde(rename = "T")]
    pub end: f64,
    #[serde(rename = "M")]
    pub nodes: usize,
    pub kmax: usize,
    pub tol: f64,
    pub reverse: bool,
    pub min_horizon: f64,
    pub grid_ladder: Vec<usize>,
    pub delta: Vec<f64>,
    pub lipschitz: f64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    pub fn defaults(subcommand: Subcommand) -> Self {
        let sp = SchemeParams::default();
        Self {
            subcommand,
            data: DataKind::Singular,
            eps: DataParams::DEFAULT_EPS,
            amplitude: 1.0,
            dim: 3,
            points: 32,
            half_extent: 8.0,
            s: sp.s,
            nu: None,
            end: sp.end,
            nodes: sp.nodes,
            kmax: sp.k_max,
            tol: sp.tol,
            reverse: false,
            min_horizon: sp.min_horizon,
            grid_ladder: vec![32, 48, 64],
            delta: vec![1.0, 0.1, 0.01],
            lipschitz: 1.0,
            out_dir: PathBuf::from("branchflow-out"),
            threads: None,
            seed: 0,
        }
    }

    /// Every violated constraint.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps > 0.0 && self.eps <= DataParams::MAX_EPS) {
            out.push(format!("eps must lie in (0, {}], got {}", DataParams::MAX_EPS, self.eps));
        }
        if self.data == DataKind::Custom {
            out.push("data must be 'singular' or 'smooth'".to_string());
        }
        if !self.amplitude.is_finite() {
            out.push("amplitude must be finite".to_string());
        }
        if !(2..=3).contains(&self.dim) {
            out.push(format!("dim must be 2 or 3, got {}", self.dim));
        }
        let grid_problem = |n: usize, what: &str| -> Option<String> {
            GridSpec::new(self.dim.clamp(2, 3), n, self.half_extent)
                .err()
                .map(|e| format!("{what}: {e}"))
        };
        out.extend(grid_problem(self.points, "N"));
        for &n in &self.grid_ladder {
            out.extend(grid_problem(n, "grid ladder"));
        }
        if self.grid_ladder.is_empty() {
            out.push("grid ladder must not be empty".to_string());
        }
        if self.delta.is_empty() || self.delta.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            out.push(format!("delta values must be positive, got {:?}", self.delta));
        }
        if !(self.lipschitz >= 0.0 && self.lipschitz.is_finite()) {
            out.push(format!("lipschitz must be >= 0, got {}", self.lipschitz));
        }
        if self.threads == Some(0) {
            out.push("threads must be >= 1".to_string());
        }
        let sp = SchemeParams {
            s: self.s,
            nu: self.nu,
            end: self.end,
            nodes: self.nodes,
            k_max: self.kmax,
            tol: self.tol,
            min_horizon: self.min_horizon,
            ..SchemeParams::default()
        };
        out.extend(sp.problems());
        // GridSpec errors repeat for every bad ladder entry; keep one copy.
        out.dedup();
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn data_params(&self) -> Result<DataParams> {
        DataParams::new(self.eps, self.data)?.with_amplitude(self.amplitude)
    }

    pub fn scheme_params(&self) -> Result<SchemeParams> {
        let sp = SchemeParams {
            s: self.s,
            nu: self.nu,
            end: self.end,
            nodes: self.nodes,
            k_max: self.kmax,
            tol: self.tol,
            direction: if self.reverse { Direction::Reversed } else { Direction::Forward },
            data: self.data_params()?,
            exclusion_window: None,
            min_horizon: self.min_horizon,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.points, self.half_extent)
    }
}

/// Resolve `args` (program name first) against an optional config file
/// and the environment. Precedence: flags, then `BRANCHFLOW_OUT` for the
/// output directory, then the file, then defaults. `file` takes priority
/// over a `--config` flag.
pub fn parse_config<I, T>(args: I, file: Option<&Path>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::invalid(e.to_string()))?;
    resolve(cli, file, std::env::var_os(OUT_ENV).map(PathBuf::from))
}

/// [`parse_config`] with the environment passed in.
pub fn resolve(cli: Cli, file: Option<&Path>, env_out: Option<PathBuf>) -> Result<RunConfig> {
    let path = file.map(Path::to_path_buf).or_else(|| cli.flags.config.clone());
    let fc = match &path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let f = cli.flags;
    let mut cfg = RunConfig::defaults(cli.command);
    let mut problems = Vec::new();

    macro_rules! layer {
        ($field:ident, $flag:expr, $file:expr) => {
            if let Some(v) = $flag.or($file) {
                cfg.$field = v;
            }
        };
    }
    layer!(eps, f.eps, fc.eps);
    layer!(s, f.s, fc.s);
    layer!(end, f.end, fc.end);
    layer!(half_extent, f.half_extent, fc.half_extent);
    layer!(points, f.points, fc.points);
    layer!(nodes, f.nodes, fc.nodes);
    layer!(kmax, f.kmax, fc.kmax);
    layer!(tol, f.tol, fc.tol);
    layer!(grid_ladder, f.grid_ladder, fc.grid_ladder);
    layer!(amplitude, f.amplitude, fc.amplitude);
    layer!(dim, f.dim, fc.dim);
    layer!(delta, f.delta, fc.delta);
    layer!(lipschitz, f.lipschitz, fc.lipschitz);
    layer!(min_horizon, f.min_horizon, fc.min_horizon);
    layer!(seed, f.seed, fc.seed);
    cfg.nu = f.nu.or(fc.nu);
    cfg.threads = f.threads.or(fc.threads);
    cfg.reverse = f.reverse || fc.reverse.unwrap_or(false);
    if let Some(out) = f.out.or(env_out).or(fc.out) {
        cfg.out_dir = out;
    }
    if let Some(kind) = f.data.or(fc.data) {
        match kind.parse::<DataKind>() {
            Ok(k) => cfg.data = k,
            Err(e) => problems.push(e.to_string()),
        }
    }
    problems.extend(cfg.problems());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(problems))
    }
}

/// Write `config.json` into the output directory.
pub fn echo_config(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(format!("creating {}", cfg.out_dir.display()), e))?;
    let path = cfg.out_dir.join("config.json");
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("branchflow").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn empty_args_give_defaults() {
        let cfg = resolve(cli(&["solve"]), None, None).unwrap();
        assert_eq!(cfg, RunConfig::defaults(Subcommand::Solve));
        assert_eq!((cfg.eps, cfg.s, cfg.end, cfg.points, cfg.nodes, cfg.half_extent, cfg.tol), (0.1, 0.05, 0.1, 32, 17, 8.0, 1e-8));
    }

    #[test]
    fn eps_cap_is_a_validation_error() {
        match resolve(cli(&["check-data", "--eps", "0.3"]), None, None) {
            Err(Error::Validation(v)) => assert!(v[0].contains("eps"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violations_are_aggregated() {
        match resolve(cli(&["solve", "--eps", "0.3", "--N", "7", "--M", "2", "--data", "wavy"]), None, None) {
            Err(Error::Validation(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"N": 64, "M": 9, "out": "from-file"}"#).unwrap();
        let cfg = resolve(cli(&["solve", "--N", "32"]), Some(&path), None).unwrap();
        assert_eq!(cfg.points, 32);
        assert_eq!(cfg.nodes, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("from-file"));
        let cfg = resolve(cli(&["solve"]), Some(&path), Some("from-env".into())).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("from-env"));
        let cfg = resolve(cli(&["solve", "--out", "from-flag"]), Some(&path), Some("from-env".into())).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("from-flag"));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"N": 64, "viscosity": 1.0}"#).unwrap();
        assert!(matches!(resolve(cli(&["solve"]), Some(&path), None), Err(Error::Format { .. })));
    }

    #[test]
    fn ladder_and_delta_lists() {
        let cfg = resolve(cli(&["witness", "--grid-ladder", "16,24", "--delta", "0.5,0.25"]), None, None).unwrap();
        assert_eq!(cfg.grid_ladder, vec![16, 24]);
        assert_eq!(cfg.delta, vec![0.5, 0.25]);
    }
}
