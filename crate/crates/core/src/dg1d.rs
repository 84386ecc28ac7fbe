//! Interior penalty DG along the vessel centerline.
//!
//! Each element carries the (unnormalized) Legendre polynomials
//! `P_0, ..., P_k` of the local coordinate `xi = 2 (s - s_{e}) / h_e - 1`.
//! Dof `(e, j)` is stored at `e * (k + 1) + j`. Matrices are indexed
//! `[test][trial]`.
//!
//! Jumps and averages at an interior node `s_i` follow
//! `[v] = v(s_i^-) - v(s_i^+)` and `{v} = (v(s_i^-) + v(s_i^+)) / 2`.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::quadrature::{gauss_legendre, legendre_with_derivative};

/// Default penalty threshold for the symmetric and incomplete variants.
pub const DEFAULT_SIGMA_MIN: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition1D {
    nodes: Vec<f64>,
}

impl Partition1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("a partition needs at least one element".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("partition nodes must be strictly increasing".into()));
        }
        Ok(Partition1D { nodes })
    }

    pub fn uniform(length: f64, n_elements: usize) -> Result<Self> {
        if n_elements == 0 || !(length > 0.0) {
            return Err(Error::Config(format!(
                "uniform partition needs N >= 1 and L > 0 (N={n_elements}, L={length})"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n_elements)
            .map(|i| length * i as f64 / n_elements as f64)
            .collect();
        nodes[n_elements] = length;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// `h_Lambda`: the largest element length.
    pub fn h_max(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Element containing `s`; interior nodes belong to the element on their right.
    pub fn find_element(&self, s: f64) -> Result<usize> {
        let (a, b) = (self.nodes[0], self.nodes[self.nodes.len() - 1]);
        let tol = 1e-12 * (b - a).max(1.0);
        if !(s >= a - tol && s <= b + tol) {
            return Err(Error::Domain(format!("arclength {s} outside [{a}, {b}]")));
        }
        let idx = self.nodes.partition_point(|&x| x <= s);
        Ok(idx.saturating_sub(1).min(self.n_elements() - 1))
    }
}

/// Symmetric (`+1`), incomplete (`0`) or nonsymmetric (`-1`) interior penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgParams {
    pub epsilon: f64,
    pub sigma: f64,
}

impl DgParams {
    pub fn new(epsilon: i32, sigma: f64, sigma_min: f64) -> Result<Self> {
        if !matches!(epsilon, -1..=1) {
            return Err(Error::Config(format!(
                "epsilon must be -1, 0 or +1, got {epsilon}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("penalty sigma must be positive, got {sigma}")));
        }
        if epsilon == -1 && sigma < 1.0 {
            return Err(Error::Config(format!(
                "nonsymmetric IPDG needs sigma >= 1, got {sigma}"
            )));
        }
        if epsilon != -1 && sigma < sigma_min {
            return Err(Error::Config(format!(
                "epsilon = {epsilon} needs sigma >= {sigma_min}, got {sigma}"
            )));
        }
        Ok(DgParams {
            epsilon: f64::from(epsilon),
            sigma,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Discontinuous piecewise polynomials of degree `k` on a partition.
#[derive(Debug, Clone)]
pub struct DgSpace {
    pub partition: Partition1D,
    pub degree: usize,
    quad_points: usize,
    gauss: (Vec<f64>, Vec<f64>),
}

impl DgSpace {
    /// Element integrals use `k + 2` Gauss points.
    pub fn new(partition: Partition1D, degree: usize) -> Result<Self> {
        Self::with_quadrature(partition, degree, degree + 2)
    }

    pub fn with_quadrature(partition: Partition1D, degree: usize, quad_points: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Config(format!("DG degree must be >= 1, got {degree}")));
        }
        if quad_points < degree + 1 {
            return Err(Error::Config(format!(
                "{quad_points} Gauss points cannot integrate the degree-{degree} mass matrix"
            )));
        }
        Ok(DgSpace {
            partition,
            degree,
            quad_points,
            gauss: gauss_legendre(quad_points),
        })
    }

    pub fn n_local(&self) -> usize {
        self.degree + 1
    }

    pub fn n_dofs(&self) -> usize {
        self.partition.n_elements() * self.n_local()
    }

    pub fn dof(&self, e: usize, j: usize) -> usize {
        e * self.n_local() + j
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    fn local_coordinate(&self, e: usize, s: f64) -> (f64, f64) {
        let (a, b) = self.partition.element(e);
        let h = b - a;
        (2.0 * (s - a) / h - 1.0, h)
    }

    /// Values and `s`-derivatives of the local basis of element `e` at `s`.
    pub fn basis(&self, e: usize, s: f64) -> (Vec<f64>, Vec<f64>) {
        let (xi, h) = self.local_coordinate(e, s);
        self.basis_at_reference(xi, h)
    }

    fn basis_at_reference(&self, xi: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
        (0..self.n_local())
            .map(|j| {
                let (p, dp) = legendre_with_derivative(j, xi);
                (p, dp * 2.0 / h)
            })
            .unzip()
    }

    /// Physical Gauss points and weights on element `e`, with `npts` points.
    pub fn element_quadrature(&self, e: usize, npts: usize) -> Vec<(f64, f64)> {
        let (a, b) = self.partition.element(e);
        let h = b - a;
        let (x, w) = if npts == self.quad_points {
            self.gauss.clone()
        } else {
            gauss_legendre(npts)
        };
        x.iter()
            .zip(&w)
            .map(|(xi, wi)| (a + 0.5 * h * (xi + 1.0), 0.5 * h * wi))
            .collect()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n_dofs() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "DG vector of length {} for {} dofs",
                v.len(),
                self.n_dofs()
            )))
        }
    }

    fn local<'a>(&self, v: &'a [f64], e: usize) -> &'a [f64] {
        &v[e * self.n_local()..(e + 1) * self.n_local()]
    }

    /// Value of `v` at `s` taken from element `e`.
    pub fn eval_in(&self, v: &[f64], e: usize, s: f64) -> f64 {
        let (phi, _) = self.basis(e, s);
        self.local(v, e).iter().zip(&phi).map(|(c, p)| c * p).sum()
    }

    pub fn derivative_in(&self, v: &[f64], e: usize, s: f64) -> f64 {
        let (_, dphi) = self.basis(e, s);
        self.local(v, e).iter().zip(&dphi).map(|(c, p)| c * p).sum()
    }

    pub fn eval(&self, v: &[f64], s: f64) -> Result<f64> {
        self.check_len(v)?;
        let e = self.partition.find_element(s)?;
        Ok(self.eval_in(v, e, s))
    }

    /// One-sided trace at node `i` (`0..=N`). `Left` is `v(s_i^-)`.
    pub fn trace_eval(&self, v: &[f64], i: usize, side: Side) -> Result<f64> {
        self.check_len(v)?;
        let n = self.partition.n_elements();
        let e = match side {
            Side::Left if i >= 1 && i <= n => i - 1,
            Side::Right if i < n => i,
            _ => {
                return Err(Error::Domain(format!(
                    "no {side:?} trace at node {i} of a partition with {n} elements"
                )))
            }
        };
        Ok(self.eval_in(v, e, self.partition.nodes()[i]))
    }

    fn check_interior(&self, i: usize) -> Result<()> {
        if i >= 1 && i < self.partition.n_elements() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "node {i} is not an interior node (valid range 1..{})",
                self.partition.n_elements()
            )))
        }
    }

    pub fn jump(&self, v: &[f64], i: usize) -> Result<f64> {
        self.check_interior(i)?;
        Ok(self.trace_eval(v, i, Side::Left)? - self.trace_eval(v, i, Side::Right)?)
    }

    pub fn average(&self, v: &[f64], i: usize) -> Result<f64> {
        self.check_interior(i)?;
        Ok(0.5 * (self.trace_eval(v, i, Side::Left)? + self.trace_eval(v, i, Side::Right)?))
    }

    /// `(sum_e ||v'||^2 + sigma / h_Lambda * sum_i [v]^2)^(1/2)`
    pub fn dg_seminorm(&self, v: &[f64], sigma: f64) -> Result<f64> {
        self.check_len(v)?;
        let n = self.partition.n_elements();
        let mut sum = 0.0;
        for e in 0..n {
            for (s, w) in self.element_quadrature(e, self.quad_points) {
                sum += w * self.derivative_in(v, e, s).powi(2);
            }
        }
        let h = self.partition.h_max();
        for i in 1..n {
            sum += sigma / h * self.jump(v, i)?.powi(2);
        }
        Ok(sum.sqrt())
    }

    /// Element-wise unweighted L2 projection.
    pub fn l2_project(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let npts = self.degree + 4;
        let (x, w) = gauss_legendre(npts);
        let mut out = vec![0.0; self.n_dofs()];
        for e in 0..self.partition.n_elements() {
            let (a, b) = self.partition.element(e);
            let h = b - a;
            for (xi, wi) in x.iter().zip(&w) {
                let fv = f(a + 0.5 * h * (xi + 1.0));
                let (phi, _) = self.basis_at_reference(*xi, h);
                for (j, p) in phi.iter().enumerate() {
                    // Legendre orthogonality: int_{-1}^{1} P_j^2 = 2 / (2j + 1).
                    out[self.dof(e, j)] += 0.5 * (2 * j + 1) as f64 * wi * fv * p;
                }
            }
        }
        out
    }

    /// `M[a][b] = int |D| phi_b phi_a`
    pub fn assemble_mass_weighted(&self, area: &dyn Fn(f64) -> f64) -> SparseMatrix {
        let nl = self.n_local();
        let mut t = Vec::with_capacity(self.partition.n_elements() * nl * nl);
        for e in 0..self.partition.n_elements() {
            let mut local = vec![0.0; nl * nl];
            for (s, w) in self.element_quadrature(e, self.quad_points) {
                let (phi, _) = self.basis(e, s);
                let c = w * area(s);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a * nl + b] += c * phi[a] * phi[b];
                    }
                }
            }
            push_block(&mut t, self.dof(e, 0), self.dof(e, 0), nl, nl, &local);
        }
        SparseMatrix::from_triplets(self.n_dofs(), self.n_dofs(), &t).expect("indices in range")
    }

    /// Interior penalty diffusion form `a_Lambda` with weight `|D| kappa_hat`.
    pub fn assemble_a_lambda(
        &self,
        kappa_hat: &dyn Fn(f64) -> f64,
        area: &dyn Fn(f64) -> f64,
        params: &DgParams,
    ) -> SparseMatrix {
        let nl = self.n_local();
        let n = self.partition.n_elements();
        let mut t = Vec::new();
        for e in 0..n {
            let mut local = vec![0.0; nl * nl];
            for (s, w) in self.element_quadrature(e, self.quad_points) {
                let (_, dphi) = self.basis(e, s);
                let c = w * area(s) * kappa_hat(s);
                for a in 0..nl {
                    for b in 0..nl {
                        local[a * nl + b] += c * dphi[a] * dphi[b];
                    }
                }
            }
            push_block(&mut t, self.dof(e, 0), self.dof(e, 0), nl, nl, &local);
        }

        let penalty = params.sigma / self.partition.h_max();
        for i in 1..n {
            let s = self.partition.nodes()[i];
            let weight = area(s) * kappa_hat(s);
            let (jump, avg_flux) = self.interface_vectors(i, weight);
            // Couples dofs of elements i-1 and i, which are contiguous.
            let m = 2 * nl;
            let mut local = vec![0.0; m * m];
            for a in 0..m {
                for b in 0..m {
                    local[a * m + b] = -avg_flux[b] * jump[a] - params.epsilon * avg_flux[a] * jump[b]
                        + penalty * jump[b] * jump[a];
                }
            }
            push_block(&mut t, self.dof(i - 1, 0), self.dof(i - 1, 0), m, m, &local);
        }
        SparseMatrix::from_triplets(self.n_dofs(), self.n_dofs(), &t).expect("indices in range")
    }

    /// Jump of each basis function of elements `i-1, i` at node `i`, and the
    /// average of `weight * phi'`.
    fn interface_vectors(&self, i: usize, weight: f64) -> (Vec<f64>, Vec<f64>) {
        let s = self.partition.nodes()[i];
        let (phi_l, dphi_l) = self.basis(i - 1, s);
        let (phi_r, dphi_r) = self.basis(i, s);
        let jump = phi_l.iter().copied().chain(phi_r.iter().map(|p| -p)).collect();
        let avg = dphi_l
            .iter()
            .chain(&dphi_r)
            .map(|d| 0.5 * weight * d)
            .collect();
        (jump, avg)
    }

    /// Upwind advection form `b_Lambda` for a positive constant velocity.
    pub fn assemble_b_lambda(&self, u_hat: f64, area: &dyn Fn(f64) -> f64) -> Result<SparseMatrix> {
        if !(u_hat > 0.0 && u_hat.is_finite()) {
            return Err(Error::Config(format!(
                "vessel velocity must be a positive constant, got {u_hat}"
            )));
        }
        let nl = self.n_local();
        let n = self.partition.n_elements();
        let mut t = Vec::new();
        for e in 0..n {
            let mut local = vec![0.0; nl * nl];
            for (s, w) in self.element_quadrature(e, self.quad_points) {
                let (phi, dphi) = self.basis(e, s);
                let c = w * area(s) * u_hat;
                for a in 0..nl {
                    for b in 0..nl {
                        local[a * nl + b] -= c * phi[b] * dphi[a];
                    }
                }
            }
            push_block(&mut t, self.dof(e, 0), self.dof(e, 0), nl, nl, &local);
        }
        for i in 1..n {
            let s = self.partition.nodes()[i];
            let (jump, _) = self.interface_vectors(i, 0.0);
            let (upwind, _) = self.basis(i - 1, s);
            let c = area(s) * u_hat;
            let m = 2 * nl;
            let mut local = vec![0.0; m * m];
            for a in 0..m {
                for (b, up) in upwind.iter().enumerate() {
                    local[a * m + b] = c * up * jump[a];
                }
            }
            push_block(&mut t, self.dof(i - 1, 0), self.dof(i - 1, 0), m, m, &local);
        }
        let end = self.partition.nodes()[n];
        let (phi, _) = self.basis(n - 1, end);
        let c = area(end) * u_hat;
        let local: Vec<f64> = (0..nl * nl).map(|k| c * phi[k / nl] * phi[k % nl]).collect();
        push_block(&mut t, self.dof(n - 1, 0), self.dof(n - 1, 0), nl, nl, &local);
        Ok(SparseMatrix::from_triplets(self.n_dofs(), self.n_dofs(), &t).expect("indices in range"))
    }

    /// `|D(0)| U_hat c_in v(0)` paired with each basis function.
    pub fn assemble_inflow_rhs(&self, c_in: f64, u_hat: f64, area: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        let s0 = self.partition.nodes()[0];
        let (phi, _) = self.basis(0, s0);
        let c = area(s0) * u_hat * c_in;
        for (j, p) in phi.iter().enumerate() {
            out[self.dof(0, j)] = c * p;
        }
        out
    }

    /// `int f(s) phi_a` with `npts` Gauss points per element.
    pub fn assemble_load(&self, f: &dyn Fn(f64) -> f64, npts: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for e in 0..self.partition.n_elements() {
            for (s, w) in self.element_quadrature(e, npts) {
                let (phi, _) = self.basis(e, s);
                let fv = w * f(s);
                for (j, p) in phi.iter().enumerate() {
                    out[self.dof(e, j)] += fv * p;
                }
            }
        }
        out
    }
}

fn push_block(
    t: &mut Vec<(usize, usize, f64)>,
    row0: usize,
    col0: usize,
    nr: usize,
    nc: usize,
    local: &[f64],
) {
    for a in 0..nr {
        for b in 0..nc {
            t.push((row0 + a, col0 + b, local[a * nc + b]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space(n: usize, k: usize) -> DgSpace {
        DgSpace::new(Partition1D::uniform(1.0, n).unwrap(), k).unwrap()
    }

    fn one(_: f64) -> f64 {
        1.0
    }

    fn constant(space: &DgSpace, c: f64) -> Vec<f64> {
        space.l2_project(|_| c)
    }

    #[test]
    fn partition_validation() {
        assert!(Partition1D::new(vec![0.0]).is_err());
        assert!(Partition1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        let p = Partition1D::new(vec![0.0, 0.2, 0.7, 1.0]).unwrap();
        assert!((p.h_max() - 0.5).abs() < 1e-15);
        assert_eq!(p.find_element(0.2).unwrap(), 1);
        assert_eq!(p.find_element(1.0).unwrap(), 2);
        assert_eq!(p.find_element(0.0).unwrap(), 0);
        assert!(p.find_element(1.5).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DgParams::new(1, 50.0, DEFAULT_SIGMA_MIN).is_ok());
        assert!(DgParams::new(0, 10.0, DEFAULT_SIGMA_MIN).is_err());
        assert!(DgParams::new(0, 10.0, 5.0).is_ok());
        assert!(DgParams::new(-1, 1.0, DEFAULT_SIGMA_MIN).is_ok());
        assert!(DgParams::new(-1, 0.5, DEFAULT_SIGMA_MIN).is_err());
        assert!(DgParams::new(2, 50.0, DEFAULT_SIGMA_MIN).is_err());
    }

    #[test]
    fn mass_matrix_values() {
        let s = space(1, 1);
        let m = s.assemble_mass_weighted(&one);
        let d = m.to_dense();
        assert!((d[0][0] - 1.0).abs() < 1e-15 && (d[1][1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(d[0][1].abs() < 1e-15 && d[1][0].abs() < 1e-15);

        let r = 0.05;
        let area = move |_: f64| PI * r * r;
        let s = space(4, 2);
        let m = s.assemble_mass_weighted(&area);
        let ones = constant(&s, 1.0);
        assert!((m.bilinear(&ones, &ones).unwrap() - PI * r * r).abs() < 1e-15);
        assert!(m.max_asymmetry() < 1e-14);
    }

    #[test]
    fn a_lambda_kills_constants() {
        for eps in [-1, 0, 1] {
            let s = space(5, 2);
            let p = DgParams::new(eps, 50.0, DEFAULT_SIGMA_MIN).unwrap();
            let a = s.assemble_a_lambda(&one, &|x| 1.0 + x, &p);
            let av = a.spmv(&constant(&s, 3.0)).unwrap();
            assert!(av.iter().all(|v| v.abs() < 1e-12));
            if eps == 1 {
                assert!(a.max_asymmetry() < 1e-13);
            } else {
                assert!(a.max_asymmetry() > 1e-3);
            }
        }
    }

    #[test]
    fn nonsymmetric_form_cancels_cross_terms() {
        let s = space(6, 2);
        let p = DgParams::new(-1, 1.0, DEFAULT_SIGMA_MIN).unwrap();
        let area = |x: f64| 0.5 + x * x;
        let a = s.assemble_a_lambda(&one, &area, &p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v: Vec<f64> = (0..s.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut expected = 0.0;
            for e in 0..6 {
                for (x, w) in s.element_quadrature(e, s.quad_points()) {
                    expected += w * area(x) * s.derivative_in(&v, e, x).powi(2);
                }
            }
            let h = s.partition.h_max();
            for i in 1..6 {
                expected += 1.0 / h * s.jump(&v, i).unwrap().powi(2);
            }
            let got = a.bilinear(&v, &v).unwrap();
            assert!((got - expected).abs() <= 1e-10 * expected.abs());
        }
    }

    #[test]
    fn b_lambda_on_constants() {
        let s = space(4, 1);
        let area = |x: f64| 1.0 + 0.5 * x;
        let b = s.assemble_b_lambda(2.0, &area).unwrap();
        let ones = constant(&s, 1.0);
        assert!((b.bilinear(&ones, &ones).unwrap() - area(1.0) * 2.0).abs() < 1e-13);
        assert!(matches!(s.assemble_b_lambda(0.0, &area), Err(Error::Config(_))));
        assert!(matches!(s.assemble_b_lambda(-1.0, &area), Err(Error::Config(_))));
    }

    #[test]
    fn inflow_vector() {
        let s = space(3, 2);
        let area = |_: f64| PI * 0.05 * 0.05;
        assert!(s.assemble_inflow_rhs(0.0, 1.0, &area).iter().all(|v| *v == 0.0));
        let f5 = s.assemble_inflow_rhs(5.0, 1.0, &area);
        let pairing: f64 = f5.iter().zip(constant(&s, 1.0)).map(|(a, b)| a * b).sum();
        assert!((pairing - PI * 0.0025 * 5.0).abs() < 1e-15);
        assert!(f5[s.n_local()..].iter().all(|v| *v == 0.0));
        let f1 = s.assemble_inflow_rhs(1.0, 1.0, &area);
        assert!(f5.iter().zip(&f1).all(|(a, b)| (a - 5.0 * b).abs() < 1e-15));
    }

    #[test]
    fn jumps_and_averages() {
        let s = space(2, 1);
        let lin = s.l2_project(|x| 2.0 * x - 1.0);
        assert!(s.jump(&lin, 1).unwrap().abs() < 1e-14);
        let indicator = vec![1.0, 0.0, 0.0, 0.0];
        assert!((s.jump(&indicator, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.average(&indicator, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(s.jump(&indicator, 0), Err(Error::Domain(_))));
        assert!(matches!(s.jump(&indicator, 2), Err(Error::Domain(_))));
        assert!((s.trace_eval(&indicator, 0, Side::Right).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.trace_eval(&indicator, 0, Side::Left).is_err());
    }

    #[test]
    fn seminorm_values() {
        let s = space(2, 1);
        assert!(s.dg_seminorm(&constant(&s, 4.0), 50.0).unwrap() < 1e-12);
        let indicator = vec![1.0, 0.0, 0.0, 0.0];
        assert!((s.dg_seminorm(&indicator, 50.0).unwrap().powi(2) - 100.0).abs() < 1e-12);
        for n in [1, 3, 7] {
            let s = space(n, 2);
            let v = s.l2_project(|x| x);
            assert!((s.dg_seminorm(&v, 50.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let s = space(5, 2);
        let p = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x;
        let v = s.l2_project(p);
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            assert!((s.eval(&v, x).unwrap() - p(x)).abs() < 1e-12);
        }
        assert!(s.l2_project(|_| 0.0).iter().all(|c| *c == 0.0));
    }

    #[test]
    fn projection_converges_at_k_plus_one() {
        for k in [1usize, 2] {
            let errors: Vec<f64> = [4usize, 8, 16]
                .iter()
                .map(|&n| {
                    let s = space(n, k);
                    let v = s.l2_project(|x| (PI * x).sin());
                    let mut err = 0.0;
                    for e in 0..n {
                        for (x, w) in s.element_quadrature(e, k + 6) {
                            err += w * (s.eval_in(&v, e, x) - (PI * x).sin()).powi(2);
                        }
                    }
                    err.sqrt()
                })
                .collect();
            for pair in errors.windows(2) {
                let rate = (pair[0] / pair[1]).log2();
                assert!((rate - (k + 1) as f64).abs() < 0.15, "k={k} rate={rate}");
            }
        }
    }
}
