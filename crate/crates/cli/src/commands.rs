//! The three commands. Each writes its artifacts into the output directory
//! and returns the reproduction checks it evaluated.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use coupled_transport::dg1d::{DgParams, DEFAULT_SIGMA_MIN};
use coupled_transport::field::{Field, TimeSignal, VelocityField};
use coupled_transport::geometry::{PermeabilityProfile, RadiusProfile, Vec3, VesselGeometry};
use coupled_transport::stepper::{vessel_mass, CoupledSystem, Discretization, TransportProblem};
use coupled_transport::verify::{
    convergence_study, self_convergence, DiagonalCase, StudySettings, WallTreatment,
};
use coupled_transport::{Error, Parallelism, Result};

use crate::checks::{manufactured_checks, self_convergence_checks, Check};
use crate::config::{Command, RadiusConfig, RunConfig};
use crate::output::{
    sci, write_convergence_tables, write_self_convergence_table, write_snapshot, Summary,
};

fn settings(cfg: &RunConfig) -> Result<StudySettings> {
    Ok(StudySettings {
        degree: cfg.degree,
        dg: DgParams::new(cfg.epsilon, cfg.sigma, DEFAULT_SIGMA_MIN)?,
        parallelism: if cfg.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Rayon
        },
    })
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn execute(cfg: &RunConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    prepare(&cfg.out)?;
    match cfg.command {
        Command::Manufactured => manufactured(cfg),
        Command::Diagonal => diagonal(cfg),
        Command::Run => single(cfg),
    }
}

fn report_checks(summary: &mut Summary, checks: &[Check]) {
    for c in checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        summary.line(&format!("check {}", c.name), format!("{status} ({})", c.detail));
    }
}

fn manufactured(cfg: &RunConfig) -> Result<Vec<Check>> {
    if cfg.levels.iter().any(|n| ![4, 8, 16, 32, 64].contains(n)) {
        return Err(Error::Config(format!(
            "manufactured levels must be among 4, 8, 16, 32, 64, got {:?}",
            cfg.levels
        )));
    }
    let settings = settings(cfg)?;
    let finest = *cfg.levels.last().expect("validated non-empty");
    let geometry = coupled_transport::verify::ManufacturedSolution::default().geometry()?;
    let mut snapshot = Ok(());
    let report = convergence_study(&cfg.levels, &settings, WallTreatment::Consistent, |n, sys, state| {
        if n == finest {
            snapshot = write_snapshot(&cfg.out, "", &geometry, sys, state);
        }
    })?;
    snapshot?;
    write_convergence_tables(&cfg.out, &report)?;

    let mut summary = Summary::default();
    summary.line("command", "manufactured");
    for l in &report.levels {
        summary.line(
            &format!("level {}", l.n),
            format!(
                "steps {} max_residual {} wall_time {:.2}s",
                l.report.steps,
                sci(l.report.max_residual),
                l.report.wall_time
            ),
        );
        for w in &l.report.warnings {
            summary.line("warning", w);
        }
    }
    summary.line("max_residual", sci(report.max_residual()));
    let checks = if cfg.check { manufactured_checks(&report) } else { Vec::new() };
    report_checks(&mut summary, &checks);
    summary.write(&cfg.out)?;
    Ok(checks)
}

fn diagonal(cfg: &RunConfig) -> Result<Vec<Check>> {
    let case = DiagonalCase::from_id(cfg.case)?;
    let settings = settings(cfg)?;
    let geometry = case.geometry()?;
    let prefix = format!("case{}_", case.id());
    let mut snapshot = Ok(());
    let report = self_convergence(case, &cfg.levels, cfg.fine, &settings, &cfg.snapshots, |sys, state| {
        if snapshot.is_ok() {
            snapshot = write_snapshot(&cfg.out, &prefix, &geometry, sys, state);
        }
    })?;
    snapshot?;
    write_self_convergence_table(&cfg.out, &report)?;

    let mut summary = Summary::default();
    summary.line("command", format!("diagonal case {}", case.id()));
    summary.line("fine level", report.fine);
    summary.line("fine vessel mass at T", sci(report.fine_vessel_mass));
    for l in &report.levels {
        summary.line(
            &format!("level {}", l.n),
            format!(
                "vessel mass {} max_residual {} wall_time {:.2}s",
                sci(l.vessel_mass),
                sci(l.report.max_residual),
                l.report.wall_time
            ),
        );
    }
    summary.line("max_residual", sci(report.max_residual()));
    let checks = if cfg.check { self_convergence_checks(&report) } else { Vec::new() };
    report_checks(&mut summary, &checks);
    summary.write(&cfg.out)?;
    Ok(checks)
}

/// Problem of the generic `run` command.
pub fn custom_problem(cfg: &RunConfig) -> Result<TransportProblem> {
    let p0 = Vec3::from(cfg.p0);
    let p1 = Vec3::from(cfg.p1);
    let length = (p1 - p0).norm();
    let radius = match cfg.radius {
        RadiusConfig::Constant(r) => RadiusProfile::Constant(r),
        RadiusConfig::Tanh { r_min, r_max, beta } => RadiusProfile::Tanh { r_min, r_max, beta },
    };
    let permeability = if cfg.gamma.len() == 1 {
        PermeabilityProfile::Constant(cfg.gamma[0])
    } else {
        let k = cfg.gamma.len();
        let breaks: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
        PermeabilityProfile::from_fractions(length, &breaks, &cfg.gamma)?
    };
    let geometry = VesselGeometry::new(p0, p1, radius, permeability)?;
    let mut p = TransportProblem::homogeneous(geometry, cfg.u_hat, cfg.final_time);
    p.kappa = Field::Constant(cfg.kappa);
    p.kappa_hat = cfg.kappa_hat;
    p.velocity = VelocityField::Constant(Vec3::from(cfg.velocity));
    p.inflow = match cfg.inflow_until {
        Some(until) => TimeSignal::Pulse {
            value: cfg.inflow_value,
            until,
        },
        None => TimeSignal::Function(Arc::new({
            let v = cfg.inflow_value;
            move |_| v
        })),
    };
    Ok(p)
}

fn single(cfg: &RunConfig) -> Result<Vec<Check>> {
    let problem = custom_problem(cfg)?;
    let settings = settings(cfg)?;
    let n = *cfg.levels.last().expect("validated non-empty");
    let mut disc = Discretization::matched(&problem, n, settings.degree, settings.dg);
    disc.time_step *= cfg.time_step_factor / 0.1;
    disc.circle_points = cfg.circle_points;
    disc.parallelism = settings.parallelism;
    let system = CoupledSystem::build(&problem, &disc)?;
    let mut snapshot = Ok(());
    let (state, report) = system.run_from(
        &problem,
        system.initialize(&problem),
        disc.n_steps(problem.final_time),
        &cfg.snapshots,
        |state| {
            if snapshot.is_ok() {
                snapshot = write_snapshot(&cfg.out, "", &problem.geometry, &system, state);
            }
        },
    )?;
    snapshot?;

    let mut summary = Summary::default();
    summary.line("command", "run");
    summary.line("level", n);
    summary.line("steps", report.steps);
    summary.line("final time", state.t);
    summary.line("vessel mass at T", sci(vessel_mass(&system, &problem.geometry, &state.c_hat)));
    summary.line("energy at T", sci(*report.energy.last().unwrap_or(&0.0)));
    summary.line("max_residual", sci(report.max_residual));
    summary.line("wall_time", format!("{:.2}s", report.wall_time));
    for w in &report.warnings {
        summary.line("warning", w);
    }
    summary.write(&cfg.out)?;
    Ok(Vec::new())
}
