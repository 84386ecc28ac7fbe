//! CSV tables, VTK snapshots and run summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use coupled_transport::stepper::{CoupledState, CoupledSystem};
use coupled_transport::verify::{rates, ConvergenceReport, SelfConvergenceReport};
use coupled_transport::vtk::{write_vtk_1d, write_vtk_3d};
use coupled_transport::{Error, Result};
use coupled_transport::geometry::VesselGeometry;

/// Six significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// Renders columns as CSV. Each rate column holds `log2(e_k / e_{k+1})` and
/// is empty on the first row.
pub fn render_table(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(sci).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn with_rates(errors: &[f64]) -> Vec<(f64, Option<f64>)> {
    let r = rates(errors);
    errors
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, if i == 0 { None } else { Some(r[i - 1]) }))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const NORM_HEADER: [&str; 5] = ["h", "grad_error", "grad_rate", "l2_error", "l2_rate"];

fn norm_table(h: &[f64], grad: &[f64], l2: &[f64]) -> String {
    let g = with_rates(grad);
    let l = with_rates(l2);
    let rows: Vec<Vec<Option<f64>>> = (0..h.len())
        .map(|i| vec![Some(h[i]), Some(g[i].0), g[i].1, Some(l[i].0), l[i].1])
        .collect();
    render_table(&NORM_HEADER, &rows)
}

/// Writes `table1_3d.csv` and `table2_1d.csv`.
pub fn write_convergence_tables(dir: &Path, report: &ConvergenceReport) -> Result<()> {
    let h = report.h();
    write(&dir.join("table1_3d.csv"), &norm_table(&h, &report.grad_3d(), &report.l2_3d()))?;
    write(&dir.join("table2_1d.csv"), &norm_table(&h, &report.grad_1d(), &report.l2_1d()))
}

pub const SELF_HEADER: [&str; 7] = ["h", "err3d", "rate3d", "err1d", "rate1d", "rel_err3d", "rel_err1d"];

/// Writes `table3_caseK.csv`.
pub fn write_self_convergence_table(dir: &Path, report: &SelfConvergenceReport) -> Result<()> {
    let e3 = with_rates(&report.err_3d());
    let e1 = with_rates(&report.err_1d());
    let rows: Vec<Vec<Option<f64>>> = report
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            vec![
                Some(1.0 / l.n as f64),
                Some(e3[i].0),
                e3[i].1,
                Some(e1[i].0),
                e1[i].1,
                Some(l.rel_3d),
                Some(l.rel_1d),
            ]
        })
        .collect();
    let name = format!("table3_case{}.csv", report.case.id());
    write(&dir.join(name), &render_table(&SELF_HEADER, &rows))
}

/// Writes the tissue and vessel fields of `state` as `{prefix}tissue_t{t}.vtk`
/// and `{prefix}vessel_t{t}.vtk`.
pub fn write_snapshot(
    dir: &Path,
    prefix: &str,
    geometry: &VesselGeometry,
    system: &CoupledSystem,
    state: &CoupledState,
) -> Result<()> {
    let t = format!("{:.4}", state.t);
    write_vtk_3d(&dir.join(format!("{prefix}tissue_t{t}.vtk")), &system.fem.mesh, &state.c, "c")?;
    write_vtk_1d(
        &dir.join(format!("{prefix}vessel_t{t}.vtk")),
        geometry,
        &system.dg,
        &state.c_hat,
        "c_hat",
    )
}

/// Plain `key: value` summary lines.
#[derive(Debug, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.text, "{key}: {value}").unwrap();
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write(&dir.join("summary.txt"), &self.text)
    }
}
