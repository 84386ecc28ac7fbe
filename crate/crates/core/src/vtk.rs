//! Legacy ASCII VTK output: the tissue field on the tetrahedral mesh and the
//! vessel field sampled along the centerline.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dg1d::DgSpace;
use crate::error::{Error, Result};
use crate::geometry::VesselGeometry;
use crate::mesh3d::TetMesh;

const TETRA: u8 = 10;

/// Renders a P1 field as an unstructured grid of tetrahedra with point data.
pub fn render_vtk_3d(mesh: &TetMesh, field: &[f64], name: &str) -> Result<String> {
    if field.len() != mesh.n_vertices() {
        return Err(Error::Shape(format!(
            "field of length {} on a mesh with {} vertices",
            field.len(),
            mesh.n_vertices()
        )));
    }
    let mut out = String::new();
    header(&mut out, "tissue concentration", "UNSTRUCTURED_GRID");
    writeln!(out, "POINTS {} double", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(out, "{:e} {:e} {:e}", v.x, v.y, v.z).unwrap();
    }
    writeln!(out, "CELLS {} {}", mesh.n_tets(), 5 * mesh.n_tets()).unwrap();
    for t in &mesh.tets {
        writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_tets()).unwrap();
    for _ in 0..mesh.n_tets() {
        writeln!(out, "{TETRA}").unwrap();
    }
    point_scalars(&mut out, name, field);
    Ok(out)
}

/// Renders a DG field as poly-lines, one per element, with `k + 1` equally
/// spaced samples per element (the samples at shared nodes are duplicated
/// so the discontinuities stay visible).
pub fn render_vtk_1d(geometry: &VesselGeometry, dg: &DgSpace, field: &[f64], name: &str) -> Result<String> {
    if field.len() != dg.n_dofs() {
        return Err(Error::Shape(format!(
            "field of length {} for a space with {} dofs",
            field.len(),
            dg.n_dofs()
        )));
    }
    let per = dg.degree + 1;
    let n_el = dg.partition.n_elements();
    let mut points = Vec::with_capacity(n_el * per);
    let mut values = Vec::with_capacity(n_el * per);
    for e in 0..n_el {
        let (a, b) = dg.partition.element(e);
        for j in 0..per {
            let s = a + (b - a) * j as f64 / dg.degree as f64;
            points.push(geometry.point_at(s)?);
            values.push(dg.eval_in(field, e, s));
        }
    }
    let mut out = String::new();
    header(&mut out, "vessel concentration", "POLYDATA");
    writeln!(out, "POINTS {} double", points.len()).unwrap();
    for p in &points {
        writeln!(out, "{:e} {:e} {:e}", p.x, p.y, p.z).unwrap();
    }
    writeln!(out, "LINES {} {}", n_el, n_el * (per + 1)).unwrap();
    for e in 0..n_el {
        let ids: Vec<String> = (0..per).map(|j| (e * per + j).to_string()).collect();
        writeln!(out, "{per} {}", ids.join(" ")).unwrap();
    }
    point_scalars(&mut out, name, &values);
    Ok(out)
}

pub fn write_vtk_3d(path: &Path, mesh: &TetMesh, field: &[f64], name: &str) -> Result<()> {
    let text = render_vtk_3d(mesh, field, name)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_vtk_1d(path: &Path, geometry: &VesselGeometry, dg: &DgSpace, field: &[f64], name: &str) -> Result<()> {
    let text = render_vtk_1d(geometry, dg, field, name)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn header(out: &mut String, title: &str, dataset: &str) {
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "{title}").unwrap();
    writeln!(out, "ASCII").unwrap();
    writeln!(out, "DATASET {dataset}").unwrap();
}

fn point_scalars(out: &mut String, name: &str, values: &[f64]) {
    writeln!(out, "POINT_DATA {}", values.len()).unwrap();
    writeln!(out, "SCALARS {name} double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for v in values {
        writeln!(out, "{v:e}").unwrap();
    }
}
