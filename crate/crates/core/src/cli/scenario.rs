//! Scenario orchestration: run one configuration to steady state (or the
//! steady verification solve), write the output files, and drive parameter
//! sweeps.
//!
//! Output locations honor `DARCY_BENARD_OUTPUT_DIR` over the configured
//! directory. All CSV numbers use the shortest round-trip representation.

use crate::cli::config::{Scenario, SimulationConfig};
use crate::cli::vtk::write_vtk;
use crate::dofs::FieldVector;
use crate::error::{Error, Result};
use crate::mms;
use crate::postprocess::{l2_error, line_probe, local_nusselt, ProbeLine};
use crate::solver::Simulation;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const OUTPUT_DIR_ENV: &str = "DARCY_BENARD_OUTPUT_DIR";

/// Summary of a finished run plus the files it wrote.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub scenario: &'static str,
    pub ra: f64,
    pub n: usize,
    pub nu_average: Option<f64>,
    pub steps: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub manifest: Vec<PathBuf>,
}

fn effective_output_dir(configured: &str) -> PathBuf {
    match std::env::var(OUTPUT_DIR_ENV) {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(configured),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

fn csv_pairs(header: &str, rows: &[(f64, f64)]) -> String {
    let mut text = String::from(header);
    text.push('\n');
    for &(a, b) in rows {
        let _ = writeln!(text, "{a},{b}");
    }
    text
}

/// Run one scenario to completion and write its artifacts.
pub fn run_scenario(config: &SimulationConfig) -> Result<RunResult> {
    let out_dir = effective_output_dir(&config.output_dir);
    std::fs::create_dir_all(&out_dir)?;
    match config.scenario {
        Scenario::Mms => run_mms_point(config, &out_dir),
        Scenario::LeftHeated | Scenario::BottomHeated => run_transient(config, &out_dir),
    }
}

fn run_transient(config: &SimulationConfig, out_dir: &Path) -> Result<RunResult> {
    let mut manifest = Vec::new();
    let progress_path = out_dir.join("progress.csv");
    let progress_file = std::fs::File::create(&progress_path)?;
    let mut progress = std::io::BufWriter::new(progress_file);
    writeln!(progress, "step,time,residual,inner_sweeps,nu")?;

    let mut sim = Simulation::new(config)?;
    let nu_boundary = sim.heated_boundary();
    let vel_space_order = sim.vel_space.clone();
    let report = {
        let mesh = sim.mesh.clone();
        sim.run_to_steady(|state, residual, stats| {
            let nu = local_nusselt(&state.theta, &vel_space_order, &mesh, nu_boundary, 2)
                .map(|p| p.average)
                .unwrap_or(f64::NAN);
            let _ = writeln!(
                progress,
                "{},{},{},{},{}",
                state.step_index, state.time, residual, stats.inner_sweeps, nu
            );
        })?
    };
    progress.flush()?;
    manifest.push(progress_path);

    let profile = local_nusselt(
        &sim.state.theta,
        &sim.vel_space,
        &sim.mesh,
        nu_boundary,
        101,
    )?;
    let nu_path = out_dir.join("nusselt_profile.csv");
    write_file(&nu_path, &csv_pairs("x,nu_local", &profile.samples))?;
    manifest.push(nu_path);

    for (name, field, line) in [
        ("midline_u.csv", &sim.state.u_x, ProbeLine::HorizontalAtZ(0.5)),
        ("midline_w.csv", &sim.state.u_z, ProbeLine::HorizontalAtZ(0.5)),
        ("midline_theta.csv", &sim.state.theta, ProbeLine::HorizontalAtZ(0.5)),
    ] {
        let rows = line_probe(field, &sim.vel_space, &sim.mesh, line, 101);
        let path = out_dir.join(name);
        write_file(&path, &csv_pairs("coord,value", &rows))?;
        manifest.push(path);
    }
    let p_rows = line_probe(
        &sim.state.p,
        &sim.pres_space,
        &sim.mesh,
        ProbeLine::VerticalAtX(0.5),
        101,
    );
    let p_path = out_dir.join("midline_p.csv");
    write_file(&p_path, &csv_pairs("coord,value", &p_rows))?;
    manifest.push(p_path);

    let vtk_path = out_dir.join("fields.vtk");
    write_vtk(
        &sim.mesh,
        &sim.vel_space,
        &sim.pres_space,
        &sim.state.u_x,
        &sim.state.u_z,
        &sim.state.p,
        &sim.state.theta,
        &vtk_path,
    )?;
    manifest.push(vtk_path);

    let summary_path = out_dir.join("summary.csv");
    let mut summary = String::from("scenario,ra,n,nu,steps,residual,converged\n");
    let _ = writeln!(
        summary,
        "{},{},{},{},{},{},{}",
        config.scenario.name(),
        config.ra,
        config.n,
        profile.average,
        report.steps_taken,
        report.final_residual,
        report.converged
    );
    write_file(&summary_path, &summary)?;
    manifest.push(summary_path);

    Ok(RunResult {
        scenario: config.scenario.name(),
        ra: config.ra,
        n: config.n,
        nu_average: Some(profile.average),
        steps: report.steps_taken,
        final_residual: report.final_residual,
        converged: report.converged,
        manifest,
    })
}

/// Steady verification solve at the configured resolution: midline tables
/// against the exact fields plus an error summary.
fn run_mms_point(config: &SimulationConfig, out_dir: &Path) -> Result<RunResult> {
    let mut manifest = Vec::new();
    let sol = mms::solve_steady(config.n, config.quad_points)?;

    let midlines: [(&str, &FieldVector, &crate::dofs::DofMap, ProbeLine, fn(f64, f64) -> f64); 4] = [
        (
            "midline_u.csv",
            &sol.u_x,
            &sol.vel_space,
            ProbeLine::HorizontalAtZ(0.5),
            mms::exact_u,
        ),
        (
            "midline_w.csv",
            &sol.u_z,
            &sol.vel_space,
            ProbeLine::HorizontalAtZ(0.5),
            mms::exact_w,
        ),
        (
            "midline_theta.csv",
            &sol.theta,
            &sol.vel_space,
            ProbeLine::HorizontalAtZ(0.5),
            mms::exact_theta,
        ),
        (
            "midline_p.csv",
            &sol.p,
            &sol.pres_space,
            ProbeLine::VerticalAtX(0.5),
            mms::exact_p,
        ),
    ];
    for (name, field, space, line, exact) in midlines {
        let rows = line_probe(field, space, &sol.mesh, line, 11);
        let mut text = String::from("coord,computed,exact,error\n");
        for (s, v) in rows {
            let (x, z) = match line {
                ProbeLine::HorizontalAtZ(z) => (s, z),
                ProbeLine::VerticalAtX(x) => (x, s),
            };
            let e = exact(x, z);
            let _ = writeln!(text, "{s},{v},{e},{}", (v - e).abs());
        }
        let path = out_dir.join(name);
        write_file(&path, &text)?;
        manifest.push(path);
    }

    let quad = crate::element::gauss_rule(6)?;
    let eux = l2_error(&sol.u_x, &sol.vel_space, &sol.mesh, mms::exact_u, &quad);
    let euz = l2_error(&sol.u_z, &sol.vel_space, &sol.mesh, mms::exact_w, &quad);
    let err_u = (eux * eux + euz * euz).sqrt();
    let err_p = l2_error(&sol.p, &sol.pres_space, &sol.mesh, mms::exact_p, &quad);
    let err_theta = l2_error(&sol.theta, &sol.vel_space, &sol.mesh, mms::exact_theta, &quad);
    let errors_path = out_dir.join("errors.csv");
    write_file(
        &errors_path,
        &format!("field,l2_error\nu,{err_u}\np,{err_p}\ntheta,{err_theta}\n"),
    )?;
    manifest.push(errors_path);

    let vtk_path = out_dir.join("fields.vtk");
    write_vtk(
        &sol.mesh,
        &sol.vel_space,
        &sol.pres_space,
        &sol.u_x,
        &sol.u_z,
        &sol.p,
        &sol.theta,
        &vtk_path,
    )?;
    manifest.push(vtk_path);

    let summary_path = out_dir.join("summary.csv");
    write_file(
        &summary_path,
        &format!(
            "scenario,n,err_u,err_p,err_theta\nmms,{},{err_u},{err_p},{err_theta}\n",
            config.n
        ),
    )?;
    manifest.push(summary_path);

    Ok(RunResult {
        scenario: "mms",
        ra: config.ra,
        n: config.n,
        nu_average: None,
        steps: 0,
        final_residual: err_theta,
        converged: true,
        manifest,
    })
}

/// Refinement study: convergence.csv plus midline tables at the finest
/// level.
pub fn run_mms(levels: usize, base_n: usize, output_dir: &str) -> Result<RunResult> {
    let out_dir = effective_output_dir(output_dir);
    std::fs::create_dir_all(&out_dir)?;
    let table = mms::run_convergence(levels, base_n)?;

    let mut text = String::from("level,n,total_dofs,err_u,rate_u,err_p,rate_p,err_theta,rate_theta\n");
    for row in &table.rows {
        let fmt_rate = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{}",
            row.level,
            row.n,
            row.total_dofs,
            row.err_u,
            fmt_rate(row.rate_u),
            row.err_p,
            fmt_rate(row.rate_p),
            row.err_theta,
            fmt_rate(row.rate_theta)
        );
    }
    let conv_path = out_dir.join("convergence.csv");
    write_file(&conv_path, &text)?;

    // midline tables at the finest level
    let finest = base_n << (levels - 1);
    let mut point_config = mms::mms_config(finest);
    point_config.output_dir = out_dir.to_string_lossy().into_owned();
    let mut result = run_mms_point(&point_config, &out_dir)?;
    result.manifest.insert(0, conv_path);
    Ok(result)
}

/// Values swept by `run_sweep`.
#[derive(Clone, Debug)]
pub enum Sweep {
    Ra(Vec<f64>),
    /// cells per side, i.e. 1/h
    MeshN(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub manifest: Vec<PathBuf>,
    pub all_converged: bool,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub nu: Option<f64>,
    pub steps: usize,
    pub residual: f64,
    pub status: &'static str,
}

/// One run per value; a failed member is recorded and does not abort the
/// sweep.
pub fn run_sweep(base_config: &SimulationConfig, sweep: &Sweep) -> Result<SweepResult> {
    let values: Vec<(String, SimulationConfig, f64)> = match sweep {
        Sweep::Ra(list) => {
            if list.is_empty() {
                return Err(Error::InvalidArgument("empty Ra sweep".into()));
            }
            list.iter()
                .map(|&ra| {
                    let mut c = base_config.clone();
                    c.ra = ra;
                    (format!("ra_{ra}"), c, ra)
                })
                .collect()
        }
        Sweep::MeshN(list) => {
            if list.is_empty() {
                return Err(Error::InvalidArgument("empty mesh sweep".into()));
            }
            list.iter()
                .map(|&n| {
                    let mut c = base_config.clone();
                    c.n = n;
                    (format!("n_{n}"), c, n as f64)
                })
                .collect()
        }
    };

    let base_dir = effective_output_dir(&base_config.output_dir);
    std::fs::create_dir_all(&base_dir)?;
    let mut rows = Vec::new();
    let mut manifest = Vec::new();
    let mut all_converged = true;

    for (label, mut member, value) in values {
        let member_dir = base_dir.join(&label);
        member.output_dir = member_dir.to_string_lossy().into_owned();
        // member paths are explicit; the env override already shaped base_dir
        let run = {
            let saved = std::env::var(OUTPUT_DIR_ENV).ok();
            std::env::remove_var(OUTPUT_DIR_ENV);
            let r = run_scenario(&member);
            if let Some(v) = saved {
                std::env::set_var(OUTPUT_DIR_ENV, v);
            }
            r
        };
        match run {
            Ok(result) => {
                all_converged &= result.converged;
                manifest.extend(result.manifest.iter().cloned());
                rows.push(SweepRow {
                    value,
                    nu: result.nu_average,
                    steps: result.steps,
                    residual: result.final_residual,
                    status: if result.converged { "converged" } else { "max_steps" },
                });
            }
            Err(err) => {
                eprintln!("sweep member {label} failed: {err}");
                all_converged = false;
                rows.push(SweepRow {
                    value,
                    nu: None,
                    steps: 0,
                    residual: f64::NAN,
                    status: "failed",
                });
            }
        }
    }

    let mut text = String::from("value,nu,steps,residual,status\n");
    for row in &rows {
        let nu = row.nu.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            row.value, nu, row.steps, row.residual, row.status
        );
    }
    let sweep_path = base_dir.join("sweep.csv");
    write_file(&sweep_path, &text)?;
    manifest.push(sweep_path);

    Ok(SweepResult {
        rows,
        manifest,
        all_converged,
    })
}
