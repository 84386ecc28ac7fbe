//! Backward Euler time loop for the coupled tissue/vessel system.
//!
//! Every block of the operator is time independent, so the monolithic matrix
//! is assembled and factorized once. Each step only builds a right-hand side
//! and back-substitutes.

use std::time::Instant;

use crate::coupling::{assemble_coupling, assemble_wall_load, CouplingBlocks};
use crate::dg1d::{DgParams, DgSpace, Partition1D};
use crate::error::{Error, Result};
use crate::fem3d::{
    assemble_convection, assemble_load, assemble_mass, assemble_stiffness, constrain_rows,
    dirichlet_rhs, velocity_bound,
};
use crate::field::{Field, LineField, ScalarField3, TimeFn, TimeSignal, VelocityField};
use crate::geometry::{Vec3, VesselGeometry, DEFAULT_CIRCLE_POINTS};
use crate::linalg::{Factorization, SparseMatrix};
use crate::mesh3d::{FemSpace, TetMesh};
use crate::par::Parallelism;

/// Coefficients and data of one coupled transport problem.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    /// Box `[lo, hi]` of the tissue domain.
    pub domain: (Vec3, Vec3),
    pub geometry: VesselGeometry,
    pub kappa: ScalarField3,
    pub kappa_hat: f64,
    pub velocity: VelocityField,
    pub u_hat: f64,
    pub source: ScalarField3,
    pub source_hat: LineField,
    /// Extra tissue load `int_Lambda q avg(v)` carried by the vessel wall.
    pub wall_source: LineField,
    pub inflow: TimeSignal,
    pub dirichlet: ScalarField3,
    pub initial: ScalarField3,
    pub initial_hat: LineField,
    pub final_time: f64,
}

impl TransportProblem {
    /// Unit cube centered at the origin, unit diffusivities, no sources and
    /// zero data everywhere.
    pub fn homogeneous(geometry: VesselGeometry, u_hat: f64, final_time: f64) -> Self {
        TransportProblem {
            domain: (Vec3::repeat(-0.5), Vec3::repeat(0.5)),
            geometry,
            kappa: Field::Constant(1.0),
            kappa_hat: 1.0,
            velocity: VelocityField::Zero,
            u_hat,
            source: Field::Zero,
            source_hat: Field::Zero,
            wall_source: Field::Zero,
            inflow: TimeSignal::Constant(0.0),
            dirichlet: Field::Zero,
            initial: Field::Zero,
            initial_hat: Field::Zero,
            final_time,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        if !(self.kappa_hat > 0.0 && self.kappa_hat.is_finite()) {
            return Err(Error::Coefficient(format!(
                "vessel diffusivity must be positive, got {}",
                self.kappa_hat
            )));
        }
        let (lo, hi) = self.domain;
        self.geometry.check_inside_box(&lo, &hi)
    }
}

/// Mesh sizes, polynomial degree, penalty and time step.
#[derive(Debug, Clone)]
pub struct Discretization {
    /// Cells per side of the tissue mesh.
    pub n_cells: usize,
    pub n_elements: usize,
    pub degree: usize,
    pub dg: DgParams,
    pub time_step: f64,
    pub circle_points: usize,
    /// Gauss points per vessel element for the coupling; `degree + 2` if unset.
    pub coupling_gauss: Option<usize>,
    pub parallelism: Parallelism,
}

impl Discretization {
    /// Matching tissue and vessel mesh sizes `h = side / n` and `tau = 0.1 h`.
    pub fn matched(problem: &TransportProblem, n: usize, degree: usize, dg: DgParams) -> Self {
        let side = (problem.domain.1 - problem.domain.0).max();
        let h = side / n as f64;
        let n_elements = ((problem.geometry.length / h).round() as usize).max(1);
        Discretization {
            n_cells: n,
            n_elements,
            degree,
            dg,
            time_step: 0.1 * h,
            circle_points: DEFAULT_CIRCLE_POINTS,
            coupling_gauss: None,
            parallelism: Parallelism::default(),
        }
    }

    pub fn n_steps(&self, final_time: f64) -> usize {
        ((final_time / self.time_step) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Solution pair at time `t = step * tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub c: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

/// A load vector as a function of time, precomputed where the data allow it.
enum Load {
    Zero,
    Fixed(Vec<f64>),
    Separable(Vec<(Vec<f64>, TimeFn)>),
    Dynamic(Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>),
}

impl Load {
    fn build<X: 'static>(
        field: &Field<X>,
        assemble: impl Fn(&Field<X>) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Result<Load> {
        Ok(match field {
            Field::Zero => Load::Zero,
            Field::Constant(_) | Field::Space(_) => Load::Fixed(assemble(field)?),
            Field::Separable(terms) => Load::Separable(
                terms
                    .iter()
                    .map(|(a, b)| Ok((assemble(&Field::Space(a.clone()))?, b.clone())))
                    .collect::<Result<_>>()?,
            ),
            Field::SpaceTime(f) => {
                let f = f.clone();
                Load::Dynamic(Box::new(move |t| {
                    let g = f.clone();
                    assemble(&Field::space(move |x: &X| g(x, t)))
                }))
            }
        })
    }

    fn add_to(&self, rhs: &mut [f64], t: f64) -> Result<()> {
        match self {
            Load::Zero => {}
            Load::Fixed(v) => rhs.iter_mut().zip(v).for_each(|(r, v)| *r += v),
            Load::Separable(terms) => {
                for (v, b) in terms {
                    let bt = b(t);
                    rhs.iter_mut().zip(v).for_each(|(r, v)| *r += bt * v);
                }
            }
            Load::Dynamic(f) => {
                let v = f(t)?;
                rhs.iter_mut().zip(&v).for_each(|(r, v)| *r += v);
            }
        }
        Ok(())
    }
}

/// Assembled and factorized discrete system.
pub struct CoupledSystem {
    pub fem: FemSpace,
    pub dg: DgSpace,
    pub mass: SparseMatrix,
    pub mass_hat: SparseMatrix,
    pub coupling: CouplingBlocks,
    /// Monolithic operator with Dirichlet rows replaced by identity rows.
    pub operator: SparseMatrix,
    pub time_step: f64,
    pub warnings: Vec<String>,
    factorization: Factorization,
    load: Load,
    load_hat: Load,
    wall_load: Load,
    inflow_unit: Vec<f64>,
}

impl std::fmt::Debug for CoupledSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoupledSystem")
            .field("n_tissue", &self.fem.n_dofs())
            .field("n_vessel", &self.dg.n_dofs())
            .field("nnz", &self.operator.nnz())
            .field("time_step", &self.time_step)
            .finish()
    }
}

impl CoupledSystem {
    pub fn build(problem: &TransportProblem, disc: &Discretization) -> Result<Self> {
        problem.validate()?;
        if !(disc.time_step > 0.0 && disc.time_step <= problem.final_time) {
            return Err(Error::Config(format!(
                "time step {} must lie in (0, T = {}]",
                disc.time_step, problem.final_time
            )));
        }
        let par = disc.parallelism;
        let (lo, hi) = problem.domain;
        let fem = FemSpace::new(TetMesh::build_box(lo, hi, disc.n_cells)?);
        let geometry = problem.geometry.clone();
        let dg = DgSpace::new(
            Partition1D::uniform(geometry.length, disc.n_elements)?,
            disc.degree,
        )?;
        let gauss = disc.coupling_gauss.unwrap_or(disc.degree + 2);

        let mut warnings = Vec::new();
        let bound = velocity_bound(&fem, &problem.velocity, kappa_floor(problem, &fem));
        if !bound.satisfied() {
            warnings.push(format!(
                "tissue velocity {:.3e} exceeds the stability bound {:.3e}",
                bound.max_speed, bound.bound
            ));
        }

        let mass = assemble_mass(&fem, par);
        let stiffness = assemble_stiffness(&fem, &problem.kappa, par)?;
        let convection = assemble_convection(&fem, &problem.velocity, par);
        let area = |s: f64| geometry.area_unchecked(s);
        let kappa_hat = problem.kappa_hat;
        let mass_hat = dg.assemble_mass_weighted(&area);
        let a_hat = dg.assemble_a_lambda(&|_| kappa_hat, &area, &disc.dg);
        let b_hat = dg.assemble_b_lambda(problem.u_hat, &area)?;
        let coupling = assemble_coupling(&geometry, &fem, &dg, gauss, disc.circle_points, par)?;

        let inv_tau = 1.0 / disc.time_step;
        let tissue = SparseMatrix::linear_combination(&[
            (inv_tau, &mass),
            (1.0, &stiffness),
            (1.0, &convection),
            (1.0, &coupling.c_oo),
        ])?;
        let vessel = SparseMatrix::linear_combination(&[
            (inv_tau, &mass_hat),
            (1.0, &a_hat),
            (1.0, &b_hat),
            (1.0, &coupling.c_ll),
        ])?;
        let c_ol = coupling.c_ol.scale(-1.0);
        let c_lo = coupling.c_lo.scale(-1.0);
        let mut operator = SparseMatrix::block_compose([
            [Some(&tissue), Some(&c_ol)],
            [Some(&c_lo), Some(&vessel)],
        ])?;
        constrain_rows(&mut operator, &fem);
        let factorization = Factorization::new(&operator)?;

        let fem_load = fem.clone();
        let load = Load::build(&problem.source, move |f| {
            Ok(assemble_load(&fem_load, f, 0.0, par))
        })?;
        let dg_load = dg.clone();
        let npts = dg.quad_points() + 2;
        let load_hat = Load::build(&problem.source_hat, move |f| {
            Ok(dg_load.assemble_load(&|s| f.eval(&s, 0.0), npts))
        })?;
        let (fem_w, dg_w, geom_w, n_circ) = (fem.clone(), dg.clone(), geometry.clone(), disc.circle_points);
        let wall_load = Load::build(&problem.wall_source, move |q| {
            assemble_wall_load(&geom_w, &fem_w, &dg_w, &|s| q.eval(&s, 0.0), gauss, n_circ, par)
        })?;
        let inflow_unit = dg.assemble_inflow_rhs(1.0, problem.u_hat, &area);

        Ok(CoupledSystem {
            fem,
            dg,
            mass,
            mass_hat,
            coupling,
            operator,
            time_step: disc.time_step,
            warnings,
            factorization,
            load,
            load_hat,
            wall_load,
            inflow_unit,
        })
    }

    pub fn n_tissue(&self) -> usize {
        self.fem.n_dofs()
    }

    pub fn n_vessel(&self) -> usize {
        self.dg.n_dofs()
    }

    /// Nodal interpolant of the tissue data and `L2` projection of the vessel data.
    pub fn initialize(&self, problem: &TransportProblem) -> CoupledState {
        let c = self.fem.interpolate(|x| problem.initial.eval(x, 0.0));
        let c_hat = self.dg.l2_project(|s| problem.initial_hat.eval(&s, 0.0));
        CoupledState {
            c,
            c_hat,
            t: 0.0,
            step: 0,
        }
    }

    /// `c^T M c + c_hat^T M_Lambda c_hat`.
    pub fn energy(&self, state: &CoupledState) -> Result<f64> {
        Ok(self.mass.bilinear(&state.c, &state.c)? + self.mass_hat.bilinear(&state.c_hat, &state.c_hat)?)
    }

    /// Right-hand side of the step ending at time `t`.
    pub fn rhs(&self, problem: &TransportProblem, state: &CoupledState, t: f64) -> Result<Vec<f64>> {
        let n3 = self.n_tissue();
        let inv_tau = 1.0 / self.time_step;
        let mut rhs = self.mass.spmv(&state.c)?;
        rhs.extend(self.mass_hat.spmv(&state.c_hat)?);
        rhs.iter_mut().for_each(|r| *r *= inv_tau);
        let (tissue, vessel) = rhs.split_at_mut(n3);
        self.load.add_to(tissue, t)?;
        self.wall_load.add_to(tissue, t)?;
        self.load_hat.add_to(vessel, t)?;
        let c_in = problem.inflow.eval(t);
        vessel
            .iter_mut()
            .zip(&self.inflow_unit)
            .for_each(|(r, u)| *r += c_in * u);
        dirichlet_rhs(tissue, &self.fem, &problem.dirichlet, t);
        Ok(rhs)
    }

    /// One backward Euler step; returns the new state and the solve residual.
    pub fn step(&self, problem: &TransportProblem, state: &CoupledState) -> Result<(CoupledState, f64)> {
        let step = state.step + 1;
        let t = step as f64 * self.time_step;
        let rhs = self.rhs(problem, state, t)?;
        let sol = self.factorization.solve(&rhs)?;
        let mut c = sol.x;
        let c_hat = c.split_off(self.n_tissue());
        Ok((CoupledState { c, c_hat, t, step }, sol.residual))
    }

    /// Runs from `state` to the final time. `observe` is called with the
    /// state at step 0 and after every step for which `fire(step)` holds.
    pub fn run_from(
        &self,
        problem: &TransportProblem,
        mut state: CoupledState,
        n_steps: usize,
        snapshot_times: &[f64],
        mut observe: impl FnMut(&CoupledState),
    ) -> Result<(CoupledState, RunReport)> {
        let start = Instant::now();
        let snapshot_steps: Vec<usize> = snapshot_times
            .iter()
            .map(|&t| (t / self.time_step).round() as usize)
            .collect();
        let mut report = RunReport {
            steps: 0,
            max_residual: 0.0,
            energy: vec![self.energy(&state)?],
            wall_time: 0.0,
            warnings: self.warnings.clone(),
        };
        if snapshot_steps.contains(&state.step) {
            observe(&state);
        }
        for _ in 0..n_steps {
            let (next, residual) = self.step(problem, &state)?;
            state = next;
            report.steps += 1;
            report.max_residual = report.max_residual.max(residual);
            report.energy.push(self.energy(&state)?);
            if snapshot_steps.contains(&state.step) {
                observe(&state);
            }
        }
        report.wall_time = start.elapsed().as_secs_f64();
        Ok((state, report))
    }
}

fn kappa_floor(problem: &TransportProblem, fem: &FemSpace) -> f64 {
    match &problem.kappa {
        Field::Constant(k) => *k,
        field => fem
            .mesh
            .vertices
            .iter()
            .map(|x| field.eval(x, 0.0))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Diagnostics of one run.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub steps: usize,
    pub max_residual: f64,
    /// Energy before the first step and after each step.
    pub energy: Vec<f64>,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

/// Builds the system, initializes and runs to `T`, calling `observe` at the
/// steps nearest to `snapshot_times`.
pub fn run(
    problem: &TransportProblem,
    disc: &Discretization,
    snapshot_times: &[f64],
    observe: impl FnMut(&CoupledState),
) -> Result<(CoupledSystem, CoupledState, RunReport)> {
    let system = CoupledSystem::build(problem, disc)?;
    let state = system.initialize(problem);
    let n_steps = disc.n_steps(problem.final_time);
    let (state, report) = system.run_from(problem, state, n_steps, snapshot_times, observe)?;
    Ok((system, state, report))
}

/// `int_Lambda |D| c_hat`, the solute mass carried by the vessel.
pub fn vessel_mass(system: &CoupledSystem, geometry: &VesselGeometry, c_hat: &[f64]) -> f64 {
    let dg = &system.dg;
    (0..dg.partition.n_elements())
        .flat_map(|e| {
            dg.element_quadrature(e, dg.quad_points())
                .into_iter()
                .map(move |(s, w)| w * geometry.area_unchecked(s) * dg.eval_in(c_hat, e, s))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vertical_problem() -> TransportProblem {
        let g = VesselGeometry::straight(Vec3::new(0.0, 0.0, -0.5), Vec3::new(0.0, 0.0, 0.5), 0.05, 1.0)
            .unwrap();
        TransportProblem::homogeneous(g, 1.0, 1.0)
    }

    fn disc(p: &TransportProblem, n: usize) -> Discretization {
        Discretization::matched(p, n, 1, DgParams::new(1, 50.0, 50.0).unwrap())
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let p = vertical_problem();
        let mut d = disc(&p, 4);
        d.time_step = 0.25;
        let (_, state, report) = run(&p, &d, &[], |_| {}).unwrap();
        assert_eq!(report.steps, 4);
        assert!(state.c.iter().chain(&state.c_hat).all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_when_tau_equals_t() {
        let mut p = vertical_problem();
        p.final_time = 0.1;
        let mut d = disc(&p, 4);
        d.time_step = 0.1;
        assert_eq!(d.n_steps(p.final_time), 1);
        let (_, _, report) = run(&p, &d, &[], |_| {}).unwrap();
        assert_eq!(report.steps, 1);
    }

    #[test]
    fn observers_fire_at_nearest_step() {
        let mut p = vertical_problem();
        p.final_time = 0.5;
        let mut d = disc(&p, 4);
        d.time_step = 0.0125;
        let mut seen = Vec::new();
        run(&p, &d, &[0.0, 0.5], |s| seen.push(s.step)).unwrap();
        assert_eq!(seen, vec![0, 40]);
    }

    #[test]
    fn energy_of_unit_field_is_volume() {
        let p = vertical_problem();
        let sys = CoupledSystem::build(&p, &disc(&p, 4)).unwrap();
        let state = CoupledState {
            c: vec![1.0; sys.n_tissue()],
            c_hat: vec![0.0; sys.n_vessel()],
            t: 0.0,
            step: 0,
        };
        assert!((sys.energy(&state).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_without_sources() {
        let mut p = vertical_problem();
        p.velocity = VelocityField::Constant(Vec3::new(0.0, 0.0, 1.0));
        let sys = CoupledSystem::build(&p, &disc(&p, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = sys.initialize(&p);
        for (v, &b) in state.c.iter_mut().zip(sys.fem.dirichlet_mask()) {
            *v = if b { 0.0 } else { rng.random_range(-1.0..1.0) };
        }
        state.c_hat.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let (_, report) = sys.run_from(&p, state, 20, &[], |_| {}).unwrap();
        for w in report.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn scheme_is_linear() {
        let mut p = vertical_problem();
        p.final_time = 0.2;
        p.source = Field::space(|x: &Vec3| x.x + 1.0);
        p.source_hat = Field::space_time(|s: &f64, t| s * t);
        p.inflow = TimeSignal::Constant(2.0);
        p.dirichlet = Field::space(|x: &Vec3| x.z);
        let d = disc(&p, 4);
        let (_, a, _) = run(&p, &d, &[], |_| {}).unwrap();
        let mut q = p.clone();
        q.source = p.source.scaled(3.0);
        q.source_hat = p.source_hat.scaled(3.0);
        q.inflow = p.inflow.scaled(3.0);
        q.dirichlet = p.dirichlet.scaled(3.0);
        let (_, b, _) = run(&q, &d, &[], |_| {}).unwrap();
        for (x, y) in a.c.iter().chain(&a.c_hat).zip(b.c.iter().chain(&b.c_hat)) {
            assert!((3.0 * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let mut p = vertical_problem();
        p.final_time = 0.1;
        p.inflow = TimeSignal::Constant(1.0);
        let d = disc(&p, 4);
        let (_, a, _) = run(&p, &d, &[], |_| {}).unwrap();
        let (_, b, _) = run(&p, &d, &[], |_| {}).unwrap();
        assert_eq!(a, b);
    }
}
