//! Structured Kuhn tetrahedral meshes of a box and the P1 space on them.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Axis orderings of the six Kuhn tetrahedra of a cell. Tetrahedron `k`
/// covers the local coordinates with `xi[p0] >= xi[p1] >= xi[p2]`.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Odd permutations store their last two vertices swapped to keep a positive orientation.
const KUHN_SWAPPED: [bool; 6] = [false, true, true, false, false, true];

#[derive(Debug, Clone)]
pub struct TetMesh {
    pub lo: Vec3,
    pub hi: Vec3,
    pub n: usize,
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub boundary_vertex: Vec<bool>,
    spacing: Vec3,
}

impl TetMesh {
    /// Kuhn triangulation of `[lo, hi]` with `n` cells per axis (6 n^3 tetrahedra).
    pub fn build_box(lo: Vec3, hi: Vec3, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!(
                "box mesh needs at least 2 cells per axis, got {n}"
            )));
        }
        if !(0..3).all(|a| lo[a] < hi[a]) {
            return Err(Error::Config(format!(
                "box bounds must satisfy lo < hi componentwise (lo={lo:?}, hi={hi:?})"
            )));
        }
        let spacing = (hi - lo) / n as f64;
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np * np);
        let mut boundary_vertex = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let coord = |a: usize, idx: usize| {
                        if idx == n {
                            hi[a]
                        } else {
                            lo[a] + spacing[a] * idx as f64
                        }
                    };
                    vertices.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                    let on_face = |idx: usize| idx == 0 || idx == n;
                    boundary_vertex.push(on_face(i) || on_face(j) || on_face(k));
                }
            }
        }

        let mut tets = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let corner = |bits: [usize; 3]| {
                        (i + bits[0]) + np * ((j + bits[1]) + np * (k + bits[2]))
                    };
                    for (perm, &swapped) in KUHN_PERMUTATIONS.iter().zip(&KUHN_SWAPPED) {
                        let mut bits = [0usize; 3];
                        let v0 = corner(bits);
                        bits[perm[0]] = 1;
                        let v1 = corner(bits);
                        bits[perm[1]] = 1;
                        let v2 = corner(bits);
                        let v3 = corner([1, 1, 1]);
                        tets.push(if swapped {
                            [v0, v1, v3, v2]
                        } else {
                            [v0, v1, v2, v3]
                        });
                    }
                }
            }
        }

        Ok(TetMesh {
            lo,
            hi,
            n,
            vertices,
            tets,
            boundary_vertex,
            spacing,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Cell size `1/n` relative to the box (the table label `h`).
    pub fn cell_size(&self) -> f64 {
        self.spacing.max()
    }

    /// Longest tetrahedron edge, the cell main diagonal.
    pub fn diameter(&self) -> f64 {
        self.spacing.norm()
    }

    pub fn signed_volume(&self, t: usize) -> f64 {
        self.jacobian(t).determinant() / 6.0
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.signed_volume(t).abs()
    }

    fn jacobian(&self, t: usize) -> Matrix3<f64> {
        let [a, b, c, d] = self.tets[t].map(|v| self.vertices[v]);
        Matrix3::from_columns(&[b - a, c - a, d - a])
    }

    /// Physical point of barycentric coordinates `bary` in tetrahedron `t`.
    pub fn point(&self, t: usize, bary: &[f64; 4]) -> Vec3 {
        self.tets[t]
            .iter()
            .zip(bary)
            .fold(Vec3::zeros(), |acc, (&v, &l)| acc + self.vertices[v] * l)
    }

    /// P1 basis values at barycentric coordinates: the coordinates themselves.
    pub fn shape_values(&self, _t: usize, bary: &[f64; 4]) -> [f64; 4] {
        *bary
    }

    /// Constant gradients of the four P1 basis functions of tetrahedron `t`.
    pub fn shape_gradients(&self, t: usize) -> [Vec3; 4] {
        let inv = self
            .jacobian(t)
            .try_inverse()
            .expect("Kuhn tetrahedra are never degenerate");
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        let g3 = inv.row(2).transpose();
        [-(g1 + g2 + g3), g1, g2, g3]
    }

    /// Finds the tetrahedron containing `x` and its barycentric coordinates.
    ///
    /// Constant time: the cell comes from floor division, the tetrahedron
    /// from the ordering of the cell-local coordinates.
    pub fn locate(&self, x: &Vec3) -> Result<(usize, [f64; 4])> {
        let mut cell = [0usize; 3];
        let mut xi = [0.0; 3];
        for a in 0..3 {
            let tol = 1e-12 * (self.hi[a] - self.lo[a]).max(1.0);
            if !(x[a] >= self.lo[a] - tol && x[a] <= self.hi[a] + tol) {
                return Err(Error::Location {
                    x: x[0],
                    y: x[1],
                    z: x[2],
                });
            }
            let g = (x[a] - self.lo[a]) / self.spacing[a];
            let c = (g.floor().max(0.0) as usize).min(self.n - 1);
            cell[a] = c;
            xi[a] = g - c as f64;
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| xi[b].total_cmp(&xi[a]));
        let local = KUHN_PERMUTATIONS
            .iter()
            .position(|p| *p == order)
            .expect("every axis ordering is a Kuhn permutation");
        let mut bary = [
            1.0 - xi[order[0]],
            xi[order[0]] - xi[order[1]],
            xi[order[1]] - xi[order[2]],
            xi[order[2]],
        ];
        if KUHN_SWAPPED[local] {
            bary.swap(2, 3);
        }
        let t = 6 * (cell[0] + self.n * (cell[1] + self.n * cell[2])) + local;
        Ok((t, bary))
    }
}

/// Quadrature rule on the reference tetrahedron in barycentric coordinates;
/// weights sum to the reference volume 1/6.
#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Rule exact for polynomials of total degree `order` (1, 2 or 4).
    /// Order 4 uses a 14-point positive rule that is exact through degree 5.
    pub fn new(order: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut orbit_aaab = |a: f64, w: f64| {
            let b = 1.0 - 3.0 * a;
            for i in 0..4 {
                let mut p = [a; 4];
                p[i] = b;
                points.push(p);
                weights.push(w);
            }
        };
        match order {
            1 => orbit_aaab(0.25, 1.0 / 24.0),
            2 => orbit_aaab(0.138_196_601_125_010_5, 1.0 / 24.0),
            4 => {
                orbit_aaab(0.092_735_250_310_891_2, 0.012_248_840_519_393_66);
                orbit_aaab(0.310_885_919_263_300_6, 0.018_781_320_953_002_64);
                let a = 0.045_503_704_125_649_6;
                let b = 0.5 - a;
                for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
                    let mut p = [b; 4];
                    p[i] = a;
                    p[j] = a;
                    points.push(p);
                    weights.push(0.007_091_003_462_846_911);
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unsupported tetrahedron quadrature order {other} (use 1, 2 or 4)"
                )))
            }
        }
        if order == 1 {
            // The centroid rule is a single point.
            points.truncate(1);
            weights = vec![1.0 / 6.0];
        }
        Ok(TetRule { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Continuous P1 space: one dof per vertex, Dirichlet on every boundary vertex.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub mesh: TetMesh,
}

impl FemSpace {
    pub fn new(mesh: TetMesh) -> Self {
        FemSpace { mesh }
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.mesh.boundary_vertex
    }

    /// Vertex-nodal interpolant of `g`.
    pub fn interpolate(&self, g: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(g).collect()
    }

    /// Evaluates the P1 field `dofs` at `x`.
    pub fn eval(&self, dofs: &[f64], x: &Vec3) -> Result<f64> {
        let (t, bary) = self.mesh.locate(x)?;
        Ok(self.eval_in(dofs, t, &bary))
    }

    pub fn eval_in(&self, dofs: &[f64], t: usize, bary: &[f64; 4]) -> f64 {
        self.mesh.tets[t]
            .iter()
            .zip(bary)
            .map(|(&v, &l)| dofs[v] * l)
            .sum()
    }

    pub fn gradient_in(&self, dofs: &[f64], t: usize) -> Vec3 {
        self.mesh
            .shape_gradients(t)
            .iter()
            .zip(&self.mesh.tets[t])
            .fold(Vec3::zeros(), |acc, (g, &v)| acc + g * dofs[v])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_cube(n: usize) -> TetMesh {
        TetMesh::build_box(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), n).unwrap()
    }

    fn centered_cube(n: usize) -> TetMesh {
        TetMesh::build_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), n).unwrap()
    }

    #[test]
    fn counts_and_volume() {
        let m = unit_cube(2);
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.n_tets(), 48);
        let m4 = centered_cube(4);
        assert_eq!((m4.n_vertices(), m4.n_tets()), (125, 384));
        let m8 = unit_cube(8);
        let total: f64 = (0..m8.n_tets()).map(|t| m8.signed_volume(t)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((0..m8.n_tets()).all(|t| m8.signed_volume(t) > 0.0));
        assert!(matches!(
            TetMesh::build_box(Vec3::zeros(), Vec3::repeat(1.0), 1),
            Err(Error::Config(_))
        ));
        assert!((m8.diameter() - 3f64.sqrt() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn conforming_faces() {
        use std::collections::HashMap;
        let m = centered_cube(3);
        let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
        for tet in &m.tets {
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| tet[i]).collect();
                f.sort_unstable();
                *faces.entry([f[0], f[1], f[2]]).or_default() += 1;
            }
        }
        for (f, count) in faces {
            let on_boundary = (0..3).any(|a| {
                f.iter().all(|&v| (m.vertices[v][a] + 0.5).abs() < 1e-14)
                    || f.iter().all(|&v| (m.vertices[v][a] - 0.5).abs() < 1e-14)
            });
            assert_eq!(count, if on_boundary { 1 } else { 2 }, "face {f:?}");
        }
    }

    #[test]
    fn locate_vertex_and_centroid() {
        let m = centered_cube(4);
        for v in [0, 31, 62, 124] {
            let (t, bary) = m.locate(&m.vertices[v]).unwrap();
            let local = m.tets[t].iter().position(|&w| w == v).unwrap();
            assert!((bary[local] - 1.0).abs() < 1e-12);
        }
        let centroid = m.point(0, &[0.25; 4]);
        let (t, bary) = m.locate(&centroid).unwrap();
        assert_eq!(t, 0);
        for l in bary {
            assert!((l - 0.25).abs() < 1e-12);
        }
        assert!(matches!(
            m.locate(&Vec3::new(0.6, 0.0, 0.0)),
            Err(Error::Location { .. })
        ));
    }

    #[test]
    fn locate_reproduces_affine_functions() {
        let m = centered_cube(5);
        let space = FemSpace::new(m);
        let g = |x: &Vec3| 0.7 - 1.3 * x.x + 2.2 * x.y + 0.4 * x.z;
        let dofs = space.interpolate(g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let x = Vec3::new(
                rng.random_range(-0.5..=0.5),
                rng.random_range(-0.5..=0.5),
                rng.random_range(-0.5..=0.5),
            );
            let (t, bary) = space.mesh.locate(&x).unwrap();
            assert!(bary.iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
            assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((space.mesh.point(t, &bary) - x).norm() < 1e-12);
            assert!((space.eval_in(&dofs, t, &bary) - g(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_functions() {
        let m = centered_cube(3);
        let space = FemSpace::new(m.clone());
        let g = |x: &Vec3| 1.0 + 2.0 * x.x - 3.0 * x.y + 0.5 * x.z;
        let dofs = space.interpolate(g);
        for t in 0..m.n_tets() {
            let grads = m.shape_gradients(t);
            let sum = grads.iter().fold(Vec3::zeros(), |a, g| a + g);
            assert!(sum.norm() < 1e-13);
            let grad = space.gradient_in(&dofs, t);
            assert!((grad - Vec3::new(2.0, -3.0, 0.5)).norm() < 1e-12);
            for j in 0..4 {
                let mut e = [0.0; 4];
                e[j] = 1.0;
                assert_eq!(m.shape_values(t, &e), e);
            }
        }
    }

    /// `int_ref x^a y^b z^c = a! b! c! / (a+b+c+3)!`
    fn reference_moment(a: u32, b: u32, c: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        fact(a) * fact(b) * fact(c) / fact(a + b + c + 3)
    }

    fn rule_moment(rule: &TetRule, a: i32, b: i32, c: i32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(a) * p[2].powi(b) * p[3].powi(c))
            .sum()
    }

    #[test]
    fn quadrature_exactness() {
        for (order, degree) in [(1, 1), (2, 2), (4, 4)] {
            let rule = TetRule::new(order).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
            for a in 0..=degree {
                for b in 0..=degree - a {
                    for c in 0..=degree - a - b {
                        let exact = reference_moment(a, b, c);
                        let got = rule_moment(&rule, a as i32, b as i32, c as i32);
                        assert!((got - exact).abs() < 1e-14, "order {order}: x^{a} y^{b} z^{c}");
                    }
                }
            }
        }
        let rule = TetRule::new(1).unwrap();
        assert_eq!(rule.len(), 1);
        assert_eq!(rule.points[0], [0.25; 4]);
        let r4 = TetRule::new(4).unwrap();
        assert!((rule_moment(&r4, 2, 2, 0) - 1.0 / 1260.0).abs() < 1e-14);
        assert!(matches!(TetRule::new(3), Err(Error::Config(_))));
    }
}
