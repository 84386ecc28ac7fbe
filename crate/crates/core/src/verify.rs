//! Manufactured-solution convergence study, error norms and the
//! self-convergence study on the diagonal vessel.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dg1d::{DgParams, DgSpace};
use crate::error::{Error, Result};
use crate::fem3d::LOAD_ORDER;
use crate::field::{Field, SpaceFn, TimeFn, TimeSignal, VelocityField};
use crate::geometry::{PermeabilityProfile, RadiusProfile, Vec3, VesselGeometry};
use crate::mesh3d::{FemSpace, TetRule};
use crate::par::{sum_range, Parallelism};
use crate::stepper::{run, vessel_mass, CoupledState, CoupledSystem, Discretization, RunReport, TransportProblem};

/// How the tissue load of the manufactured problem treats the vessel wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WallTreatment {
    /// Only the volume source `f`; the wall carries no extra load. The
    /// discrete solution then converges to a different pair.
    VolumeOnly,
    /// Adds the wall load `-|dD| c_hat` so that the manufactured pair solves
    /// the weak tissue equation exactly (the conormal jump of `c` across the
    /// wall and the exchange term have the same sign and do not cancel).
    #[default]
    Consistent,
}

/// Exact pair on the vertical vessel `x = y = 0`, `z in (-1/2, 1/2)`:
/// `c_hat = t (sin(pi z) + 2)` and `c = w(r) c_hat / 2` with
/// `w(r) = 1 + R ln(r / R)` outside the vessel and `1` inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub radius: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        ManufacturedSolution { radius: 0.05 }
    }
}

fn profile(z: f64) -> f64 {
    (PI * z).sin() + 2.0
}

/// `-d2/dz2 profile + d/dz profile`, the part of the sources multiplied by `t`.
fn profile_operator(z: f64) -> f64 {
    PI * PI * (PI * z).sin() + PI * (PI * z).cos()
}

impl ManufacturedSolution {
    pub fn length(&self) -> f64 {
        1.0
    }

    pub fn geometry(&self) -> Result<VesselGeometry> {
        VesselGeometry::straight(Vec3::new(0.0, 0.0, -0.5), Vec3::new(0.0, 0.0, 0.5), self.radius, 1.0)
    }

    fn weight(&self, x: &Vec3) -> f64 {
        let r = x.x.hypot(x.y);
        if r > self.radius {
            1.0 + self.radius * (r / self.radius).ln()
        } else {
            1.0
        }
    }

    pub fn c_hat(&self, s: f64, t: f64) -> f64 {
        t * profile(s - 0.5)
    }

    pub fn c_hat_ds(&self, s: f64, t: f64) -> f64 {
        t * PI * (PI * (s - 0.5)).cos()
    }

    pub fn c(&self, x: &Vec3, t: f64) -> f64 {
        0.5 * self.weight(x) * t * profile(x.z)
    }

    pub fn grad_c(&self, x: &Vec3, t: f64) -> Vec3 {
        let r2 = x.x * x.x + x.y * x.y;
        let ch = t * profile(x.z);
        let radial = if r2 > self.radius * self.radius {
            // d/dx of R ln(r/R) is R x / r^2.
            0.5 * ch * self.radius / r2
        } else {
            0.0
        };
        Vec3::new(
            radial * x.x,
            radial * x.y,
            0.5 * self.weight(x) * t * PI * (PI * x.z).cos(),
        )
    }

    /// `f = w(r)/2 [ (sin(pi z) + 2) + t (pi^2 sin(pi z) + pi cos(pi z)) ]`.
    pub fn source(&self) -> Field<Vec3> {
        let m = *self;
        let a0: SpaceFn<Vec3> = Arc::new(move |x| 0.5 * m.weight(x) * profile(x.z));
        let a1: SpaceFn<Vec3> = Arc::new(move |x| 0.5 * m.weight(x) * profile_operator(x.z));
        let one: TimeFn = Arc::new(|_| 1.0);
        let t: TimeFn = Arc::new(|t| t);
        Field::Separable(vec![(a0, one), (a1, t)])
    }

    /// `f_hat = pi R^2 [ (sin + 2) + t (pi^2 sin + pi cos) ] + pi R t (sin + 2)`.
    pub fn source_hat(&self) -> Field<f64> {
        let r = self.radius;
        let area = PI * r * r;
        let a0: SpaceFn<f64> = Arc::new(move |s| area * profile(s - 0.5));
        let a1: SpaceFn<f64> =
            Arc::new(move |s| area * profile_operator(s - 0.5) + PI * r * profile(s - 0.5));
        let one: TimeFn = Arc::new(|_| 1.0);
        let t: TimeFn = Arc::new(|t| t);
        Field::Separable(vec![(a0, one), (a1, t)])
    }

    /// `-|dD| c_hat`, used with [`WallTreatment::Consistent`].
    pub fn wall_source(&self) -> Field<f64> {
        let r = self.radius;
        let a: SpaceFn<f64> = Arc::new(move |s| -2.0 * PI * r * profile(s - 0.5));
        Field::Separable(vec![(a, Arc::new(|t| t))])
    }

    /// Inlet value `c_hat(0, t) - (kappa_hat / U_hat) c_hat_s(0, t) = t`.
    pub fn inflow(&self) -> TimeSignal {
        TimeSignal::Function(Arc::new(|t| t))
    }

    pub fn dirichlet(&self) -> Field<Vec3> {
        let m = *self;
        let a: SpaceFn<Vec3> = Arc::new(move |x| 0.5 * m.weight(x) * profile(x.z));
        Field::Separable(vec![(a, Arc::new(|t| t))])
    }

    pub fn problem(&self, wall: WallTreatment) -> Result<TransportProblem> {
        let mut p = TransportProblem::homogeneous(self.geometry()?, 1.0, 1.0);
        p.velocity = VelocityField::Constant(Vec3::new(0.0, 0.0, 1.0));
        p.source = self.source();
        p.source_hat = self.source_hat();
        if wall == WallTreatment::Consistent {
            p.wall_source = self.wall_source();
        }
        p.inflow = self.inflow();
        p.dirichlet = self.dirichlet();
        Ok(p)
    }
}

/// `(L2 error, gradient error)` of a P1 field with the order-4 rule.
pub fn error_norms_3d(
    space: &FemSpace,
    c_h: &[f64],
    exact: &(dyn Fn(&Vec3) -> f64 + Sync),
    grad: &(dyn Fn(&Vec3) -> Vec3 + Sync),
    par: Parallelism,
) -> (f64, f64) {
    let rule = TetRule::new(LOAD_ORDER).expect("supported order");
    let mesh = &space.mesh;
    let l2 = sum_range(par, mesh.n_tets(), |t| {
        let vol6 = 6.0 * mesh.volume(t);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| {
                let d = exact(&mesh.point(t, p)) - space.eval_in(c_h, t, p);
                w * vol6 * d * d
            })
            .sum::<f64>()
    });
    let h1 = sum_range(par, mesh.n_tets(), |t| {
        let vol6 = 6.0 * mesh.volume(t);
        let gh = space.gradient_in(c_h, t);
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * vol6 * (grad(&mesh.point(t, p)) - gh).norm_squared())
            .sum::<f64>()
    });
    (l2.sqrt(), h1.sqrt())
}

/// `(L2 error, broken derivative error)` of a DG field, `k + 3` Gauss points
/// per element.
pub fn error_norms_1d(
    dg: &DgSpace,
    c_h: &[f64],
    exact: &dyn Fn(f64) -> f64,
    derivative: &dyn Fn(f64) -> f64,
) -> (f64, f64) {
    let npts = dg.degree + 3;
    let (mut l2, mut h1) = (0.0, 0.0);
    for e in 0..dg.partition.n_elements() {
        for (s, w) in dg.element_quadrature(e, npts) {
            let d = exact(s) - dg.eval_in(c_h, e, s);
            let dd = derivative(s) - dg.derivative_in(c_h, e, s);
            l2 += w * d * d;
            h1 += w * dd * dd;
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// `log2(e_k / e_{k+1})` for consecutive entries.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Errors of one level of the manufactured study at `T`.
#[derive(Debug, Clone)]
pub struct LevelErrors {
    pub n: usize,
    pub grad_3d: f64,
    pub l2_3d: f64,
    pub grad_1d: f64,
    pub l2_1d: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelErrors>,
}

impl ConvergenceReport {
    fn column(&self, f: impl Fn(&LevelErrors) -> f64) -> Vec<f64> {
        self.levels.iter().map(f).collect()
    }

    pub fn h(&self) -> Vec<f64> {
        self.column(|l| 1.0 / l.n as f64)
    }
    pub fn grad_3d(&self) -> Vec<f64> {
        self.column(|l| l.grad_3d)
    }
    pub fn l2_3d(&self) -> Vec<f64> {
        self.column(|l| l.l2_3d)
    }
    pub fn grad_1d(&self) -> Vec<f64> {
        self.column(|l| l.grad_1d)
    }
    pub fn l2_1d(&self) -> Vec<f64> {
        self.column(|l| l.l2_1d)
    }
    pub fn max_residual(&self) -> f64 {
        self.levels.iter().map(|l| l.report.max_residual).fold(0.0, f64::max)
    }
}

/// Settings shared by every level of a study.
#[derive(Debug, Clone, Copy)]
pub struct StudySettings {
    pub degree: usize,
    pub dg: DgParams,
    pub parallelism: Parallelism,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            degree: 1,
            dg: DgParams { epsilon: 1.0, sigma: 50.0 },
            parallelism: Parallelism::default(),
        }
    }
}

fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] < 2 {
        return Err(Error::Config(format!(
            "levels must be strictly increasing and at least 2, got {levels:?}"
        )));
    }
    Ok(())
}

fn discretization(problem: &TransportProblem, n: usize, settings: &StudySettings) -> Discretization {
    let mut d = Discretization::matched(problem, n, settings.degree, settings.dg);
    d.parallelism = settings.parallelism;
    d
}

/// Runs the manufactured problem on each level to `T = 1` and measures the
/// four error norms. `on_level` sees the final system and state of each level.
pub fn convergence_study(
    levels: &[usize],
    settings: &StudySettings,
    wall: WallTreatment,
    mut on_level: impl FnMut(usize, &CoupledSystem, &CoupledState),
) -> Result<ConvergenceReport> {
    check_levels(levels)?;
    let m = ManufacturedSolution::default();
    let problem = m.problem(wall)?;
    let mut report = ConvergenceReport::default();
    for &n in levels {
        let disc = discretization(&problem, n, settings);
        let (system, state, run_report) = run(&problem, &disc, &[], |_| {})?;
        let t = state.t;
        let (l2_3d, grad_3d) = error_norms_3d(
            &system.fem,
            &state.c,
            &|x| m.c(x, t),
            &|x| m.grad_c(x, t),
            settings.parallelism,
        );
        let (l2_1d, grad_1d) = error_norms_1d(
            &system.dg,
            &state.c_hat,
            &|s| m.c_hat(s, t),
            &|s| m.c_hat_ds(s, t),
        );
        on_level(n, &system, &state);
        report.levels.push(LevelErrors {
            n,
            grad_3d,
            l2_3d,
            grad_1d,
            l2_1d,
            report: run_report,
        });
    }
    Ok(report)
}

/// The three vessel configurations of the diagonal-line experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalCase {
    /// Constant radius 0.05, permeability 0.1.
    Uniform,
    /// Tanh radius from 0.05 to 0.08, permeability 0.1.
    Widening,
    /// Tanh radius, permeability 0, 0.05, 0.1 on the thirds of the vessel.
    Graded,
}

impl DiagonalCase {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(DiagonalCase::Uniform),
            2 => Ok(DiagonalCase::Widening),
            3 => Ok(DiagonalCase::Graded),
            _ => Err(Error::Config(format!("case must be 1, 2 or 3, got {id}"))),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            DiagonalCase::Uniform => 1,
            DiagonalCase::Widening => 2,
            DiagonalCase::Graded => 3,
        }
    }

    pub fn geometry(self) -> Result<VesselGeometry> {
        let p0 = Vec3::repeat(-0.4);
        let p1 = Vec3::repeat(0.4);
        let tanh = RadiusProfile::Tanh {
            r_min: 0.05,
            r_max: 0.08,
            beta: 8.0,
        };
        let length = (p1 - p0).norm();
        match self {
            DiagonalCase::Uniform => VesselGeometry::straight(p0, p1, 0.05, 0.1),
            DiagonalCase::Widening => {
                VesselGeometry::new(p0, p1, tanh, PermeabilityProfile::Constant(0.1))
            }
            DiagonalCase::Graded => VesselGeometry::new(
                p0,
                p1,
                tanh,
                PermeabilityProfile::from_fractions(length, &[1.0 / 3.0, 2.0 / 3.0], &[0.0, 0.05, 0.1])?,
            ),
        }
    }

    /// Pulse of height 5 at the inlet until `t = 0.1`, flow along the
    /// diagonal, zero initial and boundary data, `T = 1`.
    pub fn problem(self) -> Result<TransportProblem> {
        let mut p = TransportProblem::homogeneous(self.geometry()?, 1.0, 1.0);
        p.velocity = VelocityField::Constant(Vec3::repeat(1.0 / 3f64.sqrt()));
        p.inflow = TimeSignal::Pulse {
            value: 5.0,
            until: 0.1,
        };
        Ok(p)
    }
}

/// Differences of one coarse level against the fine reference at `T`.
#[derive(Debug, Clone)]
pub struct SelfConvergenceLevel {
    pub n: usize,
    pub err_3d: f64,
    pub err_1d: f64,
    pub rel_3d: f64,
    pub rel_1d: f64,
    pub vessel_mass: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct SelfConvergenceReport {
    pub case: DiagonalCase,
    pub fine: usize,
    pub levels: Vec<SelfConvergenceLevel>,
    pub fine_vessel_mass: f64,
    pub fine_report: RunReport,
}

impl SelfConvergenceReport {
    pub fn err_3d(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.err_3d).collect()
    }
    pub fn err_1d(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.err_1d).collect()
    }
    pub fn max_residual(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.report.max_residual)
            .fold(self.fine_report.max_residual, f64::max)
    }
}

/// `||a - b||_{L2(Omega)}` with the order-4 rule on the mesh of `a`; `b` is
/// evaluated by point location.
pub fn l2_difference_3d(a_space: &FemSpace, a: &[f64], b_space: &FemSpace, b: &[f64], par: Parallelism) -> Result<f64> {
    let rule = TetRule::new(LOAD_ORDER)?;
    let mesh = &a_space.mesh;
    let parts = crate::par::map_range(par, mesh.n_tets(), |t| -> Result<f64> {
        let vol6 = 6.0 * mesh.volume(t);
        let mut acc = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let d = a_space.eval_in(a, t, p) - b_space.eval(b, &mesh.point(t, p))?;
            acc += w * vol6 * d * d;
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total.sqrt())
}

/// `||a - b||_{L2(Lambda)}` over the common refinement of both partitions.
pub fn l2_difference_1d(a_space: &DgSpace, a: &[f64], b_space: &DgSpace, b: &[f64]) -> Result<f64> {
    let mut nodes: Vec<f64> = a_space
        .partition
        .nodes()
        .iter()
        .chain(b_space.partition.nodes())
        .copied()
        .collect();
    nodes.sort_by(f64::total_cmp);
    let tol = 1e-12 * a_space.partition.length();
    nodes.dedup_by(|x, y| (*x - *y).abs() <= tol);
    let npts = a_space.degree.max(b_space.degree) + 3;
    let (gx, gw) = crate::quadrature::gauss_legendre(npts);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let ea = a_space.partition.find_element(mid)?;
        let eb = b_space.partition.find_element(mid)?;
        for (x, wt) in gx.iter().zip(&gw) {
            let s = mid + 0.5 * (hi - lo) * x;
            let d = a_space.eval_in(a, ea, s) - b_space.eval_in(b, eb, s);
            total += 0.5 * (hi - lo) * wt * d * d;
        }
    }
    Ok(total.sqrt())
}

/// Runs the diagonal problem on the fine level and every coarse level, and
/// measures coarse-minus-fine differences at `T`. `on_snapshot` receives the
/// fine-level state at the steps nearest to `snapshot_times`.
pub fn self_convergence(
    case: DiagonalCase,
    levels: &[usize],
    fine: usize,
    settings: &StudySettings,
    snapshot_times: &[f64],
    mut on_snapshot: impl FnMut(&CoupledSystem, &CoupledState),
) -> Result<SelfConvergenceReport> {
    check_levels(levels)?;
    if levels.iter().any(|&n| n > fine) {
        return Err(Error::Config(format!(
            "fine level {fine} must not be coarser than the levels {levels:?}"
        )));
    }
    let problem = case.problem()?;
    let geometry = problem.geometry.clone();
    let fine_disc = discretization(&problem, fine, settings);
    let fine_sys = CoupledSystem::build(&problem, &fine_disc)?;
    let (fine_state, fine_report) = fine_sys.run_from(
        &problem,
        fine_sys.initialize(&problem),
        fine_disc.n_steps(problem.final_time),
        snapshot_times,
        |state| on_snapshot(&fine_sys, state),
    )?;
    let fine_norm_3d = fine_sys.mass.bilinear(&fine_state.c, &fine_state.c)?.sqrt();
    let zero_hat = vec![0.0; fine_state.c_hat.len()];
    let fine_norm_1d = l2_difference_1d(&fine_sys.dg, &fine_state.c_hat, &fine_sys.dg, &zero_hat)?;
    let fine_vessel_mass = vessel_mass(&fine_sys, &geometry, &fine_state.c_hat);

    let mut out = Vec::new();
    for &n in levels {
        let (sys, state, report) = run(&problem, &discretization(&problem, n, settings), &[], |_| {})?;
        let err_3d = l2_difference_3d(&sys.fem, &state.c, &fine_sys.fem, &fine_state.c, settings.parallelism)?;
        let err_1d = l2_difference_1d(&sys.dg, &state.c_hat, &fine_sys.dg, &fine_state.c_hat)?;
        out.push(SelfConvergenceLevel {
            n,
            err_3d,
            err_1d,
            rel_3d: err_3d / fine_norm_3d,
            rel_1d: err_1d / fine_norm_1d,
            vessel_mass: vessel_mass(&sys, &geometry, &state.c_hat),
            report,
        });
    }
    Ok(SelfConvergenceReport {
        case,
        fine,
        levels: out,
        fine_vessel_mass,
        fine_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg1d::Partition1D;
    use crate::mesh3d::TetMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
        loop {
            let x = Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let rad = x.x.hypot(x.y);
            if !(0.9 * r..1.1 * r).contains(&rad) {
                return x;
            }
        }
    }

    #[test]
    fn tissue_source_matches_finite_differences() {
        let m = ManufacturedSolution::default();
        let f = m.source();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Balances the truncation error near the wall against round-off.
        let h = 2e-5;
        for _ in 0..1000 {
            let x = random_point(&mut rng, m.radius);
            let t = rng.random_range(0.0..1.0);
            let c = |y: &Vec3, t: f64| m.c(y, t);
            let dt = (c(&x, t + h) - c(&x, t - h)) / (2.0 * h);
            let mut lap = 0.0;
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                lap += (c(&(x + e), t) - 2.0 * c(&x, t) + c(&(x - e), t)) / (h * h);
            }
            let dz = (c(&(x + Vec3::new(0.0, 0.0, h)), t) - c(&(x - Vec3::new(0.0, 0.0, h)), t)) / (2.0 * h);
            let residual = dt - lap + dz - f.eval(&x, t);
            assert!(residual.abs() < 1e-5, "residual {residual} at {x:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = ManufacturedSolution::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-6;
        for _ in 0..200 {
            let x = random_point(&mut rng, m.radius);
            let g = m.grad_c(&x, 0.7);
            for k in 0..3 {
                let mut e = Vec3::zeros();
                e[k] = h;
                let fd = (m.c(&(x + e), 0.7) - m.c(&(x - e), 0.7)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn vessel_source_matches_finite_differences() {
        let m = ManufacturedSolution::default();
        let f = m.source_hat();
        let r = m.radius;
        let (area, perim) = (PI * r * r, 2.0 * PI * r);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-4;
        for _ in 0..1000 {
            let s = rng.random_range(0.0..1.0);
            let t = rng.random_range(0.0..1.0);
            let c = |s: f64, t: f64| m.c_hat(s, t);
            let dt = (c(s, t + h) - c(s, t - h)) / (2.0 * h);
            let dss = (c(s + h, t) - 2.0 * c(s, t) + c(s - h, t)) / (h * h);
            let ds = (c(s + h, t) - c(s - h, t)) / (2.0 * h);
            // On the wall c = c_hat / 2, so c_hat - avg(c) = c_hat / 2.
            let residual = area * (dt - dss + ds) + perim * 0.5 * c(s, t) - f.eval(&s, t);
            assert!(residual.abs() < 1e-8, "residual {residual}");
        }
    }

    #[test]
    fn inflow_and_trace_examples() {
        let m = ManufacturedSolution::default();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(m.inflow().eval(t), t);
            assert!((m.c_hat(0.0, t) - m.c_hat_ds(0.0, t) - t).abs() < 1e-15);
        }
        let f = m.source();
        let z = 0.2;
        assert!((f.eval(&Vec3::new(0.01, 0.0, z), 0.0) - 0.5 * profile(z)).abs() < 1e-15);
        let on_wall = Vec3::new(m.radius, 0.0, z);
        let outside = Vec3::new(m.radius * (1.0 + 1e-12), 0.0, z);
        assert!((f.eval(&on_wall, 0.4) - f.eval(&outside, 0.4)).abs() < 1e-10);
        assert!((m.c(&on_wall, 0.4) - 0.5 * m.c_hat(z + 0.5, 0.4)).abs() < 1e-15);
    }

    #[test]
    fn rates_of_geometric_sequence() {
        assert_eq!(rates(&[1.0, 0.25]), vec![2.0]);
        assert!(rates(&[1.0, 0.5, 0.25]).iter().all(|r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn interpolation_errors_decrease() {
        let m = ManufacturedSolution::default();
        let errs: Vec<(f64, f64)> = [4usize, 8]
            .iter()
            .map(|&n| {
                let s = FemSpace::new(TetMesh::build_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), n).unwrap());
                let c = s.interpolate(|x| m.c(x, 1.0));
                error_norms_3d(&s, &c, &|x| m.c(x, 1.0), &|x| m.grad_c(x, 1.0), Parallelism::Sequential)
            })
            .collect();
        assert!(errs[0].0 > 0.0 && errs[1].0 < errs[0].0 && errs[1].1 < errs[0].1);

        let s = FemSpace::new(TetMesh::build_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), 2).unwrap());
        let zero = vec![0.0; s.n_dofs()];
        assert_eq!(
            error_norms_3d(&s, &zero, &|_| 0.0, &|_| Vec3::zeros(), Parallelism::Sequential),
            (0.0, 0.0)
        );
    }

    #[test]
    fn projection_errors_are_small() {
        let m = ManufacturedSolution::default();
        let dg = DgSpace::new(Partition1D::uniform(1.0, 8).unwrap(), 1).unwrap();
        let p = dg.l2_project(|s| m.c_hat(s, 1.0));
        let (l2, h1) = error_norms_1d(&dg, &p, &|s| m.c_hat(s, 1.0), &|s| m.c_hat_ds(s, 1.0));
        assert!(l2 < 1e-2 && h1 < 0.5 && l2 > 0.0);
        assert_eq!(error_norms_1d(&dg, &vec![0.0; dg.n_dofs()], &|_| 0.0, &|_| 0.0), (0.0, 0.0));
    }

    #[test]
    fn lateral_average_of_exact_solution_approaches_half() {
        let m = ManufacturedSolution::default();
        let g = m.geometry().unwrap();
        let gaps: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&n| {
                let s = FemSpace::new(TetMesh::build_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), n).unwrap());
                let c = s.interpolate(|x| m.c(x, 1.0));
                (0..9)
                    .map(|k| {
                        let sv = 0.05 + 0.1 * k as f64;
                        let avg = crate::coupling::lateral_average(&g, &s, &c, sv, 16).unwrap();
                        (avg - 0.5 * m.c_hat(sv, 1.0)).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        // While h exceeds R the vertices nearest the wall see the logarithm at
        // distance ~h, so the gap is bounded by R ln(sqrt(3) h / R) max(c_hat) / 2.
        for (gap, n) in gaps.iter().zip([4.0f64, 8.0, 16.0]) {
            let bound = 0.5 * 3.0 * m.radius * (3f64.sqrt() / n / m.radius).ln();
            assert!(*gap <= bound, "{gaps:?}");
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn common_refinement_difference() {
        let a = DgSpace::new(Partition1D::uniform(1.0, 3).unwrap(), 1).unwrap();
        let b = DgSpace::new(Partition1D::uniform(1.0, 4).unwrap(), 2).unwrap();
        let pa = a.l2_project(|s| s);
        let pb = b.l2_project(|s| 1.0 + s);
        assert!((l2_difference_1d(&a, &pa, &b, &pb).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_equal_to_fine_gives_zero() {
        let settings = StudySettings {
            parallelism: Parallelism::Rayon,
            ..Default::default()
        };
        let r = self_convergence(DiagonalCase::Uniform, &[4], 4, &settings, &[], |_, _| {}).unwrap();
        // Point location reproduces the vertex values up to round-off.
        assert!(r.levels[0].err_3d < 1e-12);
        assert_eq!(r.levels[0].err_1d, 0.0);
    }
}
