//! P1 operators in the tissue: mass, diffusion, convection, load and
//! strongly imposed Dirichlet data.

use crate::error::{Error, Result};
use crate::field::{ScalarField3, VelocityField};
use crate::linalg::SparseMatrix;
use crate::mesh3d::{FemSpace, TetRule};
use crate::par::{flat_map_chunks, map_range, Parallelism};

const TET_CHUNK: usize = 2048;

/// Quadrature order for bilinear forms.
pub const FORM_ORDER: usize = 2;
/// Quadrature order for loads and error norms.
pub const LOAD_ORDER: usize = 4;

fn assemble_local<F>(space: &FemSpace, par: Parallelism, local: F) -> Result<SparseMatrix>
where
    F: Fn(usize) -> Result<[[f64; 4]; 4]> + Sync + Send,
{
    let mesh = &space.mesh;
    let entries = flat_map_chunks(par, mesh.n_tets(), TET_CHUNK, |range, out| {
        for t in range {
            let tet = mesh.tets[t];
            match local(t) {
                Ok(k) => {
                    for a in 0..4 {
                        for b in 0..4 {
                            out.push(Ok((tet[a], tet[b], k[a][b])));
                        }
                    }
                }
                Err(e) => out.push(Err(e)),
            }
        }
    });
    let triplets = entries.into_iter().collect::<Result<Vec<_>>>()?;
    SparseMatrix::from_triplets(space.n_dofs(), space.n_dofs(), &triplets)
}

/// `M[i][j] = int phi_j phi_i`
pub fn assemble_mass(space: &FemSpace, par: Parallelism) -> SparseMatrix {
    let rule = TetRule::new(FORM_ORDER).expect("supported order");
    assemble_local(space, par, |t| {
        let vol6 = 6.0 * space.mesh.volume(t);
        let mut k = [[0.0; 4]; 4];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += w * vol6 * p[a] * p[b];
                }
            }
        }
        Ok(k)
    })
    .expect("mass assembly cannot fail")
}

/// `A[i][j] = int kappa grad phi_j . grad phi_i`; fails if `kappa <= 0` at a quadrature point.
pub fn assemble_stiffness(space: &FemSpace, kappa: &ScalarField3, par: Parallelism) -> Result<SparseMatrix> {
    let rule = TetRule::new(FORM_ORDER)?;
    assemble_local(space, par, |t| {
        let mesh = &space.mesh;
        let vol6 = 6.0 * mesh.volume(t);
        let grads = mesh.shape_gradients(t);
        let mut weight = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.point(t, p);
            let k = kappa.eval(&x, 0.0);
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Coefficient(format!(
                    "diffusion coefficient {k} at ({:.4}, {:.4}, {:.4}) is not positive",
                    x.x, x.y, x.z
                )));
            }
            weight += w * vol6 * k;
        }
        let mut out = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                out[a][b] = weight * grads[a].dot(&grads[b]);
            }
        }
        Ok(out)
    })
}

/// `B[i][j] = - int (U phi_j) . grad phi_i`
pub fn assemble_convection(space: &FemSpace, u: &VelocityField, par: Parallelism) -> SparseMatrix {
    if u.is_zero() {
        return SparseMatrix::zeros(space.n_dofs(), space.n_dofs());
    }
    let rule = TetRule::new(FORM_ORDER).expect("supported order");
    assemble_local(space, par, |t| {
        let mesh = &space.mesh;
        let vol6 = 6.0 * mesh.volume(t);
        let grads = mesh.shape_gradients(t);
        let mut k = [[0.0; 4]; 4];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let uq = u.eval(&mesh.point(t, p));
            for a in 0..4 {
                let flux = uq.dot(&grads[a]);
                for b in 0..4 {
                    k[a][b] -= w * vol6 * p[b] * flux;
                }
            }
        }
        Ok(k)
    })
    .expect("convection assembly cannot fail")
}

/// `F[i] = int f(., t) phi_i` with the order-4 rule.
pub fn assemble_load(space: &FemSpace, f: &ScalarField3, t: f64, par: Parallelism) -> Vec<f64> {
    let mut out = vec![0.0; space.n_dofs()];
    if f.is_zero() {
        return out;
    }
    let rule = TetRule::new(LOAD_ORDER).expect("supported order");
    let mesh = &space.mesh;
    let locals = map_range(par, mesh.n_tets(), |tet| {
        let vol6 = 6.0 * mesh.volume(tet);
        let mut k = [0.0; 4];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let fv = w * vol6 * f.eval(&mesh.point(tet, p), t);
            for a in 0..4 {
                k[a] += fv * p[a];
            }
        }
        k
    });
    for (tet, k) in mesh.tets.iter().zip(&locals) {
        for a in 0..4 {
            out[tet[a]] += k[a];
        }
    }
    out
}

/// Replaces the Dirichlet rows of `matrix` by identity rows (the first
/// `space.n_dofs()` rows of a possibly larger system).
pub fn constrain_rows(matrix: &mut SparseMatrix, space: &FemSpace) {
    let mut mask = space.dirichlet_mask().to_vec();
    mask.resize(matrix.nrows(), false);
    matrix.set_identity_rows(&mask);
}

/// Writes `g(x_i, t)` into the Dirichlet entries of `rhs`.
pub fn dirichlet_rhs(rhs: &mut [f64], space: &FemSpace, g: &ScalarField3, t: f64) {
    for (i, (&fixed, x)) in space
        .dirichlet_mask()
        .iter()
        .zip(&space.mesh.vertices)
        .enumerate()
    {
        if fixed {
            rhs[i] = g.eval(x, t);
        }
    }
}

/// Strong Dirichlet imposition by row replacement; columns are left untouched.
pub fn apply_dirichlet(
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
    space: &FemSpace,
    g: &ScalarField3,
    t: f64,
) -> Result<()> {
    if matrix.nrows() < space.n_dofs() || rhs.len() != matrix.nrows() {
        return Err(Error::Shape(format!(
            "Dirichlet data for {} dofs on a {}-row system with rhs of length {}",
            space.n_dofs(),
            matrix.nrows(),
            rhs.len()
        )));
    }
    constrain_rows(matrix, space);
    dirichlet_rhs(rhs, space, g, t);
    Ok(())
}

/// Sampled check of the bounded-velocity condition `||U||_inf <= k0 / (2 C0)`,
/// with the cube Poincare estimate `C0 = side / (pi sqrt 3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityBound {
    pub max_speed: f64,
    pub bound: f64,
}

impl VelocityBound {
    pub fn satisfied(&self) -> bool {
        self.max_speed <= self.bound
    }
}

pub fn velocity_bound(space: &FemSpace, u: &VelocityField, k0: f64) -> VelocityBound {
    let mesh = &space.mesh;
    let side = (mesh.hi - mesh.lo).max();
    let c0 = side / (std::f64::consts::PI * 3f64.sqrt());
    let rule = TetRule::new(FORM_ORDER).expect("supported order");
    let max_speed = (0..mesh.n_tets())
        .flat_map(|t| rule.points.iter().map(move |p| u.eval(&mesh.point(t, p)).norm()))
        .fold(0.0, f64::max);
    VelocityBound {
        max_speed,
        bound: k0 / (2.0 * c0),
    }
}

/// `||c||^2_{L2}` of a P1 field via the mass matrix.
pub fn l2_norm_squared(mass: &SparseMatrix, c: &[f64]) -> Result<f64> {
    mass.bilinear(c, c)
}
