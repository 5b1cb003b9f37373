use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;
use serde_json::json;

use super::config::{echo_config, RunConfig, Subcommand};
use crate::check::{all_pass, write_checks, Check};
use crate::data::{
    decay_report, divergence_sup, make_data, singularity_scaling, vorticity, AnnulusLadder, DataKind,
};
use crate::error::{Error, Result};
use crate::field::snapshot::write_vector;
use crate::norms::{norm_suite, DEFAULT_DECAY_CAP};
use crate::scheme::{
    find_admissible, solve_fixed_point, solve_reversed, ContractionReport, Detail, Trajectory, CONTRACTION_LIMIT,
};
use crate::witness::{bound_integral, euler_residual, max_sup, run_witness, save_residual_csv, WitnessConfig};

/// What a run produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    /// 0 when every diagnostic passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if all_pass(&self.checks) {
            0
        } else {
            2
        }
    }
}

struct Stages {
    subcommand: &'static str,
}

impl Stages {
    fn run<T>(&self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let clock = Instant::now();
        let out = f().map_err(|e| e.in_stage(self.subcommand, name));
        info!("{} / {name}: {:.3?}", self.subcommand, clock.elapsed());
        out
    }
}

fn subcommand_name(sub: Subcommand) -> &'static str {
    match sub {
        Subcommand::CheckData => "check-data",
        Subcommand::Solve => "solve",
        Subcommand::Contraction => "contraction",
        Subcommand::Witness => "witness",
        Subcommand::IntegralBound => "integral-bound",
    }
}

/// Execute the configured subcommand, writing artifacts under `out_dir`.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let stages = Stages {
        subcommand: subcommand_name(cfg.subcommand),
    };
    let config_path = stages.run("config", || echo_config(cfg))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut outcome = pool.install(|| match cfg.subcommand {
        Subcommand::CheckData => check_data(cfg, &stages),
        Subcommand::Solve => solve(cfg, &stages),
        Subcommand::Contraction => contraction(cfg, &stages),
        Subcommand::Witness => witness(cfg, &stages),
        Subcommand::IntegralBound => integral_bound(cfg, &stages),
    })?;
    outcome.artifacts.insert(0, config_path);
    Ok(outcome)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path.to_path_buf())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e.into())
}

fn check_data(cfg: &RunConfig, stages: &Stages) -> Result<Outcome> {
    let dp = cfg.data_params()?;
    let grid = cfg.grid()?;
    let h = stages.run("data", || make_data(&dp, grid))?;
    let scale = h.gradient_sup().max(f64::MIN_POSITIVE);
    let singular = dp.kind() == DataKind::Singular;
    let mut checks = Vec::new();

    stages.run("divergence", || {
        // The planar singular analogue is curl-free, not divergence-free.
        if !(singular && grid.dim() == 2) {
            let limit = if singular { 1e-8 } else { 1e-12 };
            checks.push(Check::at_most("divergence_relative", divergence_sup(&h) / scale, limit));
        }
        if singular {
            checks.push(Check::at_most(
                "vorticity_axial_relative",
                vorticity(&h).axial().sup_norm() / scale,
                1e-8,
            ));
        }
        Ok(())
    })?;
    stages.run("decay", || {
        let order = 2 * (grid.dim() as u32 + 1);
        for (i, c) in h.components().iter().enumerate() {
            let r = decay_report(c, order, 2, DEFAULT_DECAY_CAP)?;
            checks.push(Check::at_most(format!("decay_constant_c{i}"), r.max_constant, r.cap).informational());
        }
        Ok(())
    })?;
    if singular {
        stages.run("scaling", || {
            let r = singularity_scaling(&dp, &AnnulusLadder::half_decades())?;
            checks.push(Check::at_most(
                "singularity_slope_error",
                (r.fitted_slope + 2.0 * dp.eps()).abs(),
                0.15,
            ));
            Ok(())
        })?;
    }

    let path = cfg.out_dir.join("check_data.csv");
    stages.run("write", || write_checks(&checks, create(&path)?))?;
    let mut artifacts = vec![path];
    artifacts.extend(stages.run("snapshots", || write_vector(&cfg.out_dir.join("snapshots"), "data", &h))?);
    Ok(Outcome { checks, artifacts })
}

fn contraction_checks(report: &ContractionReport) -> Vec<Check> {
    vec![
        Check::at_most("final_increment", final_increment(report), report.tol),
        Check::at_most("max_ratio", report.max_ratio().unwrap_or(0.0), CONTRACTION_LIMIT),
    ]
}

fn final_increment(report: &ContractionReport) -> f64 {
    report.rows.last().map_or(0.0, |r| r.norm_dvstar)
}

fn write_norms(path: &Path, traj: &Trajectory, k: usize) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["k", "node", "multiindex", "value"]).map_err(&err)?;
    let dim = traj.grid().dim();
    for (m, f) in traj.frames().iter().enumerate() {
        for row in norm_suite(f).csv_rows(k, m, dim) {
            w.write_record(&row).map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (m, f) in traj.frames().iter().enumerate() {
        out.extend(write_vector(dir, &format!("v_m{m:03}"), f)?);
    }
    Ok(out)
}

fn solve(cfg: &RunConfig, stages: &Stages) -> Result<Outcome> {
    let sp = cfg.scheme_params()?;
    let h = stages.run("data", || make_data(&sp.data, cfg.grid()?))?;
    let (traj, report, path_gap) = if cfg.reverse {
        let r = stages.run("solve-reversed", || solve_reversed(&h, &sp))?;
        (r.trajectory, r.report, Some(r.path_gap))
    } else {
        let s = stages.run("solve", || solve_fixed_point(&h, &sp))?;
        (s.trajectory, s.report, None)
    };
    let residual = stages.run("residual", || Ok(euler_residual(&traj)))?;

    let dir = &cfg.out_dir;
    let mut checks = contraction_checks(&report);
    if let Some(gap) = path_gap {
        checks.push(Check::at_most("reversed_path_gap", gap, 1e-10));
    }
    let mut artifacts = Vec::new();
    stages.run("write", || {
        let path = dir.join("contraction.csv");
        report.save_csv(&path)?;
        artifacts.push(path);
        let path = dir.join("norms.csv");
        write_norms(&path, &traj, report.k_stop)?;
        artifacts.push(path);
        let path = dir.join("residual.csv");
        save_residual_csv(&residual, &path)?;
        artifacts.push(path);
        artifacts.extend(write_trajectory(&dir.join("snapshots"), &traj)?);
        let summary = json!({
            "k_stop": report.k_stop,
            "converged": report.converged,
            "max_ratio": report.max_ratio(),
            "final_increment": final_increment(&report),
            "residual_sup": max_sup(&residual),
            "path_gap": path_gap,
            "checks": checks,
        });
        artifacts.push(write_json(&dir.join("summary.json"), &summary)?);
        Ok(())
    })?;
    Ok(Outcome { checks, artifacts })
}

fn contraction(cfg: &RunConfig, stages: &Stages) -> Result<Outcome> {
    let sp = cfg.scheme_params()?;
    let h = stages.run("data", || make_data(&sp.data, cfg.grid()?))?;
    let found = stages.run("horizon-search", || match find_admissible(&h, &sp, Detail::Full) {
        Ok(sol) => Ok(Some(sol)),
        Err(Error::ContractionFailed { min_horizon, detail }) => {
            log::warn!("no admissible horizon above {min_horizon:.3e}: {detail}");
            Ok(None)
        }
        Err(e) => Err(e),
    })?;
    let Some(sol) = found else {
        let checks = vec![Check::at_least("admissible_horizon", 0.0, sp.min_horizon)];
        let path = write_json(&cfg.out_dir.join("contraction.json"), &json!({ "admissible": false, "checks": checks }))?;
        return Ok(Outcome {
            checks,
            artifacts: vec![path],
        });
    };
    let mut checks = contraction_checks(&sol.report);
    checks.push(Check::at_least("admissible_horizon", sol.params.horizon(), sp.min_horizon));
    let mut artifacts = Vec::new();
    stages.run("write", || {
        let path = cfg.out_dir.join("contraction.csv");
        sol.report.save_csv(&path)?;
        artifacts.push(path);
        let summary = json!({
            "admissible": true,
            "end": sol.params.end,
            "report": sol.report,
            "linear_term_vanishes": sol.report.linear_term_vanishes(),
            "checks": checks,
        });
        artifacts.push(write_json(&cfg.out_dir.join("contraction.json"), &summary)?);
        Ok(())
    })?;
    Ok(Outcome { checks, artifacts })
}

fn witness(cfg: &RunConfig, stages: &Stages) -> Result<Outcome> {
    let sp = cfg.scheme_params()?;
    let wc = WitnessConfig {
        half_extent: cfg.half_extent,
        dim: cfg.dim,
        ladder: cfg.grid_ladder.clone(),
        cross_check: true,
        snapshot_dir: Some(cfg.out_dir.join("snapshots")),
    };
    let report = stages.run("ladder", || run_witness(&sp, &wc))?;
    let checks = report.checks(sp.tol);
    let mut artifacts = Vec::new();
    stages.run("write", || {
        for g in &report.grids {
            for (branch, rows) in [("a", &g.residual_a), ("b", &g.residual_b)] {
                let path = cfg.out_dir.join(format!("residual_{branch}_N{}.csv", g.points));
                save_residual_csv(rows, &path)?;
                artifacts.push(path);
            }
        }
        let value = json!({ "report": report, "checks": checks });
        artifacts.push(write_json(&cfg.out_dir.join("witness.json"), &value)?);
        Ok(())
    })?;
    Ok(Outcome { checks, artifacts })
}

fn integral_bound(cfg: &RunConfig, stages: &Stages) -> Result<Outcome> {
    let path = cfg.out_dir.join("integral_bound.csv");
    stages.run("quadrature", || {
        let err = csv_err(&path);
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["delta", "lipschitz", "dim", "integral", "integral_over_delta"])
            .map_err(&err)?;
        for &delta in &cfg.delta {
            let value = bound_integral(delta, cfg.lipschitz, cfg.dim)?;
            println!("delta = {delta:e}  I = {value:.15e}  I/delta = {:.15e}", value / delta);
            w.write_record([
                format!("{delta:.17e}"),
                format!("{:.17e}", cfg.lipschitz),
                cfg.dim.to_string(),
                format!("{value:.17e}"),
                format!("{:.17e}", value / delta),
            ])
            .map_err(&err)?;
        }
        w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
    })?;
    Ok(Outcome {
        checks: Vec::new(),
        artifacts: vec![path],
    })
}
