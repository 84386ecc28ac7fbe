//! Exchange term between the tissue and the vessel.
//!
//! The wall flux `gamma |dD| (avg(c) - c_hat)` is integrated along the
//! centerline with Gauss points. At each point the lateral average of a P1
//! field is the mean of its values at the circle quadrature points, which is
//! the only discrete averaging operator used anywhere in the crate.

use crate::dg1d::DgSpace;
use crate::error::Result;
use crate::geometry::VesselGeometry;
use crate::linalg::SparseMatrix;
use crate::mesh3d::FemSpace;
use crate::par::{map_range, Parallelism};

/// The four coupling blocks, indexed `[test][trial]`:
/// `C_OO` (tissue x tissue), `C_OL` (tissue x vessel), `C_LO` (vessel x tissue)
/// and `C_LL` (vessel x vessel).
#[derive(Debug, Clone)]
pub struct CouplingBlocks {
    pub c_oo: SparseMatrix,
    pub c_ol: SparseMatrix,
    pub c_lo: SparseMatrix,
    pub c_ll: SparseMatrix,
    pub gauss_points: usize,
    pub circle_points: usize,
}

/// Sparse row of circle-averaged P1 basis values: `(dof, (1/n) sum_j phi_dof(x_j))`.
pub fn averaged_shape_row(
    geometry: &VesselGeometry,
    space: &FemSpace,
    s: f64,
    n_circ: usize,
) -> Result<Vec<(usize, f64)>> {
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(4 * n_circ);
    let scale = 1.0 / n_circ as f64;
    for (x, _) in geometry.circle_points(s, n_circ)? {
        let (t, bary) = space.mesh.locate(&x)?;
        for (&v, &l) in space.mesh.tets[t].iter().zip(&bary) {
            row.push((v, scale * l));
        }
    }
    row.sort_by_key(|&(v, _)| v);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (v, w) in row {
        match merged.last_mut() {
            Some((last, acc)) if *last == v => *acc += w,
            _ => merged.push((v, w)),
        }
    }
    Ok(merged)
}

/// Lateral average of the P1 field `c` over the wall circle at `s`.
pub fn lateral_average(
    geometry: &VesselGeometry,
    space: &FemSpace,
    c: &[f64],
    s: f64,
    n_circ: usize,
) -> Result<f64> {
    Ok(averaged_shape_row(geometry, space, s, n_circ)?
        .iter()
        .map(|&(v, w)| c[v] * w)
        .sum())
}

/// Assembles the coupling blocks with `gauss_points` Gauss points per vessel
/// element and `n_circ` points on each wall circle.
pub fn assemble_coupling(
    geometry: &VesselGeometry,
    space: &FemSpace,
    dg: &DgSpace,
    gauss_points: usize,
    n_circ: usize,
    par: Parallelism,
) -> Result<CouplingBlocks> {
    let n_el = dg.partition.n_elements();
    let nl = dg.n_local();
    type Entries = (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>);
    let per_element = map_range(par, n_el, |e| -> Result<Entries> {
        let mut oo = Vec::new();
        let mut ol = Vec::new();
        let mut ll = Vec::new();
        for (s, w) in dg.element_quadrature(e, gauss_points) {
            let weight = w * geometry.permeability_at(s) * geometry.circumference_unchecked(s);
            if weight == 0.0 {
                continue;
            }
            let avg = averaged_shape_row(geometry, space, s, n_circ)?;
            let (phi, _) = dg.basis(e, s);
            for &(i, ai) in &avg {
                for &(j, aj) in &avg {
                    oo.push((i, j, weight * ai * aj));
                }
                for (b, pb) in phi.iter().enumerate() {
                    ol.push((i, dg.dof(e, b), weight * ai * pb));
                }
            }
            for a in 0..nl {
                for b in 0..nl {
                    ll.push((dg.dof(e, a), dg.dof(e, b), weight * phi[a] * phi[b]));
                }
            }
        }
        Ok((oo, ol, ll))
    });

    let (mut oo, mut ol, mut ll) = (Vec::new(), Vec::new(), Vec::new());
    for part in per_element {
        let (a, b, c) = part?;
        oo.extend(a);
        ol.extend(b);
        ll.extend(c);
    }
    let n3 = space.n_dofs();
    let n1 = dg.n_dofs();
    let c_oo = SparseMatrix::from_triplets(n3, n3, &oo)?;
    let c_ol = SparseMatrix::from_triplets(n3, n1, &ol)?;
    let lo: Vec<_> = ol.iter().map(|&(i, j, v)| (j, i, v)).collect();
    let c_lo = SparseMatrix::from_triplets(n1, n3, &lo)?;
    let c_ll = SparseMatrix::from_triplets(n1, n1, &ll)?;
    Ok(CouplingBlocks {
        c_oo,
        c_ol,
        c_lo,
        c_ll,
        gauss_points,
        circle_points: n_circ,
    })
}

/// Tissue load `int_Lambda q(s) avg(v)(s) ds` of a line source `q` placed on
/// the vessel wall, with the same quadrature as the coupling blocks.
pub fn assemble_wall_load(
    geometry: &VesselGeometry,
    space: &FemSpace,
    dg: &DgSpace,
    q: &(dyn Fn(f64) -> f64 + Sync),
    gauss_points: usize,
    n_circ: usize,
    par: Parallelism,
) -> Result<Vec<f64>> {
    let per_element = map_range(par, dg.partition.n_elements(), |e| -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for (s, w) in dg.element_quadrature(e, gauss_points) {
            let weight = w * q(s);
            for (i, a) in averaged_shape_row(geometry, space, s, n_circ)? {
                out.push((i, weight * a));
            }
        }
        Ok(out)
    });
    let mut load = vec![0.0; space.n_dofs()];
    for part in per_element {
        for (i, v) in part? {
            load[i] += v;
        }
    }
    Ok(load)
}

impl CouplingBlocks {
    /// `u^T C_OO u - 2 u^T C_OL u_hat + u_hat^T C_LL u_hat`, the discrete
    /// `int gamma |dD| (avg(u) - u_hat)^2`.
    pub fn exchange_energy(&self, u: &[f64], u_hat: &[f64]) -> Result<f64> {
        Ok(self.c_oo.bilinear(u, u)? - 2.0 * self.c_ol.bilinear(u, u_hat)?
            + self.c_ll.bilinear(u_hat, u_hat)?)
    }

    /// Largest entrywise difference between the blocks and those of `other`.
    pub fn max_difference(&self, other: &CouplingBlocks) -> Result<f64> {
        let diff = |a: &SparseMatrix, b: &SparseMatrix| -> Result<f64> {
            let d = SparseMatrix::add_scaled(a, -1.0, b)?;
            Ok(d.triplets().map(|(_, _, v)| v.abs()).fold(0.0, f64::max))
        };
        Ok(diff(&self.c_oo, &other.c_oo)?
            .max(diff(&self.c_ol, &other.c_ol)?)
            .max(diff(&self.c_ll, &other.c_ll)?))
    }
}
