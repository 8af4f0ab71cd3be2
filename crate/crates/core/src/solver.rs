//! Time stepping for the decoupled scheme: pressure-first Schur solve of
//! the Darcy block, GMRES for the temperature system, velocity-temperature
//! inner iterations, and the march to steady state.
//!
//! The velocity block A is the chi-weighted vector mass matrix and never
//! changes during a simulation, so its solver is set up once. On the
//! structured grid with every wall velocity constrained, the constrained
//! scalar block separates into a tensor product of two 1-D mass matrices,
//! giving an O(N) exact solve; otherwise a skyline factorization of the
//! constrained block is used. The Schur system B A^-1 B^T P = rhs is solved
//! by conjugate gradients with constant-vector deflation, preconditioned by
//! a factorized 1/chi-weighted pressure Laplacian.

use crate::assembly::{
    self, assemble_darcy, buoyancy_load, convection_into, scalar_mass, scalar_pattern,
    scalar_stiffness, CoefficientPoly, DarcySystem, TemperatureSystem,
};
use crate::cli::config::{Scenario, SimulationConfig};
use crate::dofs::{build_dof_map, dirichlet_dofs, DofMap, FieldRole, FieldVector};
use crate::element::{gauss_1d, gauss_rule, QuadratureRule};
use crate::error::{Error, Result};
use crate::linalg::{
    cg_with, factorize, gmres_with_guess, norm2, FactorKind, FactorPrecond, Factorization,
    IluPrecond, LinearOp, SparseMatrix,
};
use crate::mesh::{build_unit_square, BoundaryTag, Mesh};
use crate::postprocess::local_nusselt;

/// Iterative-solver settings.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub schur_tol: f64,
    pub schur_max_iter: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            schur_tol: 1e-10,
            schur_max_iter: 5000,
            gmres_tol: 1e-10,
            gmres_restart: 30,
            gmres_max_iter: 2000,
        }
    }
}

/// Solution snapshot at one time level.
#[derive(Clone, Debug)]
pub struct SimState {
    pub u_x: FieldVector,
    pub u_z: FieldVector,
    pub p: FieldVector,
    pub theta: FieldVector,
    pub step_index: usize,
    pub time: f64,
}

/// Outcome of the steady-state march.
#[derive(Clone, Debug)]
pub struct SteadyReport {
    pub converged: bool,
    pub steps_taken: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
}

/// Diagnostics for one time step.
#[derive(Clone, Debug, Default)]
pub struct StepStats {
    pub inner_sweeps: usize,
    /// inner-iteration temperature changes, one entry per sweep after the first
    pub inner_changes: Vec<f64>,
    pub schur_iterations: usize,
    pub gmres_iterations: usize,
    pub divergence_residual: f64,
    pub pressure_mean: f64,
}

/// Exact O(N) solver for a constrained velocity mass block whose Dirichlet
/// set is a union of full grid lines (entire walls): the free block is then
/// the tensor product of two restricted 1-D mass matrices, the z-direction
/// one carrying chi.
struct TensorMassSolver {
    nodes: usize,
    keep_x: Vec<usize>,
    keep_z: Vec<usize>,
    fx: Factorization,
    fz: Factorization,
}

impl TensorMassSolver {
    /// Returns None when the constrained set is not a union of grid lines.
    fn build(
        mesh: &Mesh,
        chi: &CoefficientPoly,
        quad_points: usize,
        constrained: &[bool],
    ) -> Result<Option<Self>> {
        let n = mesh.n_cells_per_side;
        let nodes = 2 * n + 1;
        debug_assert_eq!(constrained.len(), nodes * nodes);

        // a line index is constrained when every node on it is
        let line_x: Vec<bool> = (0..nodes)
            .map(|ix| (0..nodes).all(|iz| constrained[iz * nodes + ix]))
            .collect();
        let line_z: Vec<bool> = (0..nodes)
            .map(|iz| (0..nodes).all(|ix| constrained[iz * nodes + ix]))
            .collect();
        for iz in 0..nodes {
            for ix in 0..nodes {
                let expected = line_x[ix] || line_z[iz];
                if constrained[iz * nodes + ix] != expected {
                    return Ok(None);
                }
            }
        }
        let keep_x: Vec<usize> = (0..nodes).filter(|&i| !line_x[i]).collect();
        let keep_z: Vec<usize> = (0..nodes).filter(|&i| !line_z[i]).collect();
        if keep_x.is_empty() || keep_z.is_empty() {
            return Ok(None);
        }

        let h = mesh.cell_size_h;
        let (gp, gw) = gauss_1d(quad_points)?;
        let assemble_1d = |weighted: bool| -> Result<SparseMatrix> {
            let mut triplets = Vec::new();
            for c in 0..n {
                for (&t, &w) in gp.iter().zip(&gw) {
                    let coord = (c as f64 + t) * h;
                    let coeff = if weighted { chi.eval(coord) } else { 1.0 };
                    let l = [
                        (2.0 * t - 1.0) * (t - 1.0),
                        4.0 * t * (1.0 - t),
                        t * (2.0 * t - 1.0),
                    ];
                    for a in 0..3 {
                        for b in 0..3 {
                            triplets.push((2 * c + a, 2 * c + b, w * h * coeff * l[a] * l[b]));
                        }
                    }
                }
            }
            SparseMatrix::from_triplets(nodes, nodes, &triplets)
        };
        let restrict = |m: &SparseMatrix, keep: &[usize]| -> SparseMatrix {
            let mut renumber = vec![usize::MAX; nodes];
            for (new, &old) in keep.iter().enumerate() {
                renumber[old] = new;
            }
            let mut triplets = Vec::new();
            for (new_r, &old_r) in keep.iter().enumerate() {
                let (cols, vals) = m.row(old_r);
                for (&c, &v) in cols.iter().zip(vals) {
                    if renumber[c] != usize::MAX {
                        triplets.push((new_r, renumber[c], v));
                    }
                }
            }
            SparseMatrix::from_triplets(keep.len(), keep.len(), &triplets).unwrap()
        };

        let mx = assemble_1d(false)?;
        let mz = assemble_1d(true)?;
        let fx = factorize(&restrict(&mx, &keep_x), FactorKind::Spd)?;
        let fz = factorize(&restrict(&mz, &keep_z), FactorKind::Spd)?;
        Ok(Some(TensorMassSolver {
            nodes,
            keep_x,
            keep_z,
            fx,
            fz,
        }))
    }

    /// Solve the constrained block: constrained entries pass through, free
    /// entries get the tensor-product solve.
    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let nodes = self.nodes;
        let (wx, wz) = (self.keep_x.len(), self.keep_z.len());
        x.copy_from_slice(b);
        let mut grid = vec![0.0; wx * wz];
        for (jz, &iz) in self.keep_z.iter().enumerate() {
            for (jx, &ix) in self.keep_x.iter().enumerate() {
                grid[jz * wx + jx] = b[iz * nodes + ix];
            }
        }
        // solve Mx along each x-line (contiguous)
        let mut line = vec![0.0; wx];
        for jz in 0..wz {
            let slice = &mut grid[jz * wx..(jz + 1) * wx];
            line.copy_from_slice(slice);
            self.fx.solve_into(&line, slice).expect("1-D mass solve");
        }
        // solve Mz along each z-line (strided)
        let mut rhs = vec![0.0; wz];
        let mut sol = vec![0.0; wz];
        for jx in 0..wx {
            for jz in 0..wz {
                rhs[jz] = grid[jz * wx + jx];
            }
            self.fz.solve_into(&rhs, &mut sol).expect("1-D mass solve");
            for jz in 0..wz {
                grid[jz * wx + jx] = sol[jz];
            }
        }
        for (jz, &iz) in self.keep_z.iter().enumerate() {
            for (jx, &ix) in self.keep_x.iter().enumerate() {
                x[iz * nodes + ix] = grid[jz * wx + jx];
            }
        }
    }
}

enum MassSolver {
    Tensor(TensorMassSolver),
    Skyline(Factorization),
}

impl MassSolver {
    /// Pick the tensor fast path when the constraint set allows it,
    /// otherwise factorize the constrained block extracted from the
    /// assembled system.
    fn new(
        mesh: &Mesh,
        chi: &CoefficientPoly,
        quad_points: usize,
        system: &DarcySystem,
        n_scalar: usize,
        component: usize,
        scalar_bc: &[usize],
    ) -> Result<Self> {
        let mut constrained = vec![false; n_scalar];
        for &d in scalar_bc {
            constrained[d] = true;
        }
        if let Some(tensor) = TensorMassSolver::build(mesh, chi, quad_points, &constrained)? {
            return Ok(MassSolver::Tensor(tensor));
        }
        let offset = component * n_scalar;
        let mut triplets = Vec::new();
        for r in 0..n_scalar {
            let (cols, vals) = system.a.row(r + offset);
            for (&c, &v) in cols.iter().zip(vals) {
                if c >= offset && c < offset + n_scalar && v != 0.0 {
                    triplets.push((r, c - offset, v));
                }
            }
        }
        let block = SparseMatrix::from_triplets(n_scalar, n_scalar, &triplets)?;
        Ok(MassSolver::Skyline(factorize(&block, FactorKind::Spd)?))
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        match self {
            MassSolver::Tensor(t) => t.solve(b, x),
            MassSolver::Skyline(f) => f.solve_into(b, x).expect("mass block solve"),
        }
    }
}

/// Matrix-free Schur operator S = B A^-1 B^T over pressure vectors.
struct SchurOp<'a> {
    b: &'a SparseMatrix,
    mass_x: &'a MassSolver,
    mass_z: &'a MassSolver,
    n_scalar: usize,
}

impl LinearOp for SchurOp<'_> {
    fn dim(&self) -> usize {
        self.b.n_rows
    }

    fn apply_into(&self, p: &[f64], y: &mut [f64]) {
        let n_u = 2 * self.n_scalar;
        let mut v = vec![0.0; n_u];
        self.b.spmv_transpose_into(p, &mut v);
        let mut av = vec![0.0; n_u];
        self.mass_x.solve(&v[..self.n_scalar], &mut av[..self.n_scalar]);
        self.mass_z.solve(&v[self.n_scalar..], &mut av[self.n_scalar..]);
        self.b.spmv_into(&av, y);
    }
}

/// Per-simulation Darcy solve machinery: the constrained velocity mass
/// solvers (one per component), the Schur preconditioner, and pressure
/// normalization weights.
pub struct DarcySolver {
    n_scalar: usize,
    mass_x: MassSolver,
    mass_z: MassSolver,
    schur_precond: Factorization,
    /// integral of each pressure basis function, for the mean shift
    pres_weights: Vec<f64>,
    deflate: bool,
    opts: SolverOptions,
}

pub struct DarcyStats {
    pub schur_iterations: usize,
    pub divergence_residual: f64,
}

impl DarcySolver {
    /// Set up for one simulation. `bc_x`/`bc_z` list the constrained scalar
    /// dofs of each velocity component; `system` must already have its
    /// constraints applied. Pressure deflation switches on when the
    /// constrained divergence operator annihilates constants.
    pub fn new(
        mesh: &Mesh,
        vel_space: &DofMap,
        pres_space: &DofMap,
        chi: &CoefficientPoly,
        quad: &QuadratureRule,
        quad_points: usize,
        system: &DarcySystem,
        bc_x: &[usize],
        bc_z: &[usize],
        opts: SolverOptions,
    ) -> Result<Self> {
        let n_scalar = vel_space.n_dofs;
        let mass_x = MassSolver::new(mesh, chi, quad_points, system, n_scalar, 0, bc_x)?;
        let mass_z = MassSolver::new(mesh, chi, quad_points, system, n_scalar, 1, bc_z)?;

        // Schur preconditioner: 1/chi-weighted pressure Laplacian plus the
        // pressure mass matrix to shift the constant mode
        let stiff = assembly::scalar_stiffness_fn(mesh, pres_space, |z| 1.0 / chi.eval(z), quad);
        let p_mass = scalar_mass(mesh, pres_space, None, quad);
        let precond_matrix = stiff.add_scaled(1.0, &p_mass)?;
        let schur_precond = factorize(&precond_matrix, FactorKind::Spd)?;
        let pres_weights = p_mass.spmv(&vec![1.0; pres_space.n_dofs])?;

        // constants lie in the pressure nullspace iff B^T 1 vanishes on the
        // free velocity dofs
        let ones = vec![1.0; pres_space.n_dofs];
        let mut bt1 = vec![0.0; 2 * n_scalar];
        system.b.spmv_transpose_into(&ones, &mut bt1);
        let deflate = crate::linalg::norm_inf(&bt1) <= 1e-10;

        Ok(DarcySolver {
            n_scalar,
            mass_x,
            mass_z,
            schur_precond,
            pres_weights,
            deflate,
            opts,
        })
    }

    /// Pressure-first solve of the constrained saddle-point system:
    /// S P = continuity_rhs - B A^-1 F, then U = A^-1 (F + B^T P), then the
    /// pressure is shifted to zero discrete mean.
    pub fn solve(
        &self,
        system: &DarcySystem,
        warm_pressure: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>, DarcyStats)> {
        let n_u = 2 * self.n_scalar;
        let n_p = system.b.n_rows;
        debug_assert_eq!(system.f.len(), n_u);

        let mut a_inv_f = vec![0.0; n_u];
        self.mass_x
            .solve(&system.f[..self.n_scalar], &mut a_inv_f[..self.n_scalar]);
        self.mass_z
            .solve(&system.f[self.n_scalar..], &mut a_inv_f[self.n_scalar..]);

        let mut rhs = vec![0.0; n_p];
        system.b.spmv_into(&a_inv_f, &mut rhs);
        for (r, g) in rhs.iter_mut().zip(&system.continuity_rhs) {
            *r = g - *r;
        }

        let (pressure, schur_iterations) = {
            let op = SchurOp {
                b: &system.b,
                mass_x: &self.mass_x,
                mass_z: &self.mass_z,
                n_scalar: self.n_scalar,
            };
            let precond = FactorPrecond(&self.schur_precond);
            let out = cg_with(
                &op,
                &rhs,
                &precond,
                warm_pressure,
                self.opts.schur_tol,
                self.opts.schur_max_iter,
                self.deflate,
            )
            .map_err(|e| match e {
                Error::NonConvergence {
                    iterations,
                    residual,
                    history,
                    ..
                } => Error::NonConvergence {
                    solver: "schur pressure cg",
                    iterations,
                    residual,
                    history,
                },
                other => other,
            })?;
            (out.x, out.iterations)
        };

        // zero discrete mean: subtract integral(p_h) / |Omega|
        let mut pressure = pressure;
        if self.deflate {
            let total_weight: f64 = self.pres_weights.iter().sum();
            let mean: f64 = pressure
                .iter()
                .zip(&self.pres_weights)
                .map(|(p, w)| p * w)
                .sum::<f64>()
                / total_weight;
            for p in pressure.iter_mut() {
                *p -= mean;
            }
        }

        // velocity recovery
        let mut momentum_rhs = system.f.clone();
        let mut btp = vec![0.0; n_u];
        system.b.spmv_transpose_into(&pressure, &mut btp);
        for (m, b) in momentum_rhs.iter_mut().zip(&btp) {
            *m += b;
        }
        let mut velocity = vec![0.0; n_u];
        self.mass_x
            .solve(&momentum_rhs[..self.n_scalar], &mut velocity[..self.n_scalar]);
        self.mass_z
            .solve(&momentum_rhs[self.n_scalar..], &mut velocity[self.n_scalar..]);

        let mut div = vec![0.0; n_p];
        system.b.spmv_into(&velocity, &mut div);
        for (d, g) in div.iter_mut().zip(&system.continuity_rhs) {
            *d -= g;
        }
        // the divergence residual lives orthogonal to the deflated constant
        if self.deflate {
            let mean = div.iter().sum::<f64>() / div.len() as f64;
            for d in div.iter_mut() {
                *d -= mean;
            }
        }
        Ok((
            velocity,
            pressure,
            DarcyStats {
                schur_iterations,
                divergence_residual: norm2(&div),
            },
        ))
    }

    pub fn pressure_mean(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.pres_weights)
            .map(|(p, w)| p * w)
            .sum::<f64>()
    }
}

/// Solve an assembled temperature system by preconditioned GMRES.
pub fn solve_temperature_step(
    system: &TemperatureSystem,
    opts: &SolverOptions,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, usize)> {
    let precond = IluPrecond::new(&system.matrix);
    let out = gmres_with_guess(
        &system.matrix,
        &system.rhs,
        &precond,
        guess,
        opts.gmres_tol,
        opts.gmres_restart,
        opts.gmres_max_iter,
    )
    .map_err(|e| match e {
        Error::NonConvergence {
            iterations,
            residual,
            history,
            ..
        } => Error::NonConvergence {
            solver: "temperature gmres",
            iterations,
            residual,
            history,
        },
        other => other,
    })?;
    Ok((out.x, out.iterations))
}

/// A fully assembled transient problem ready to step.
pub struct Simulation {
    pub mesh: Mesh,
    pub vel_space: DofMap,
    pub pres_space: DofMap,
    pub quad: QuadratureRule,
    pub config: SimulationConfig,
    pub state: SimState,

    darcy_template: DarcySystem,
    darcy_solver: DarcySolver,
    velocity_bc: Vec<(usize, f64)>,
    theta_bc: Vec<(usize, f64)>,
    nu_boundary: BoundaryTag,

    temp_mass: SparseMatrix,
    temp_stiffness: SparseMatrix,
    temp_convection: SparseMatrix,
    temp_matrix: SparseMatrix,
}

impl Simulation {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        if config.scenario == Scenario::Mms {
            return Err(Error::InvalidArgument(
                "the mms scenario is steady; use the mms driver".into(),
            ));
        }
        let mesh = build_unit_square(config.n)?;
        let vel_space = build_dof_map(&mesh, 2)?;
        let pres_space = build_dof_map(&mesh, 1)?;
        let quad = gauss_rule(config.quad_points)?;
        let chi = config.chi()?;
        let zeta = config.zeta()?;

        // no-slip velocity on every wall
        let n_scalar = vel_space.n_dofs;
        let wall_dofs: Vec<usize> = dirichlet_dofs(&vel_space, &BoundaryTag::ALL)
            .iter()
            .map(|&(d, _)| d)
            .collect();
        let velocity_bc: Vec<(usize, f64)> = wall_dofs
            .iter()
            .flat_map(|&d| [(d, 0.0), (d + n_scalar, 0.0)])
            .collect();

        // scenario temperature walls and initial profile
        let (theta_bc, theta0, nu_boundary): (Vec<(usize, f64)>, _, _) = match config.scenario {
            Scenario::LeftHeated => {
                let mut bc: Vec<(usize, f64)> = dirichlet_dofs(&vel_space, &[BoundaryTag::Left])
                    .iter()
                    .map(|&(d, _)| (d, 1.0))
                    .collect();
                bc.extend(
                    dirichlet_dofs(&vel_space, &[BoundaryTag::Right])
                        .iter()
                        .map(|&(d, _)| (d, 0.0)),
                );
                let profile = move |x: f64, _z: f64| 1.0 - x;
                (
                    bc,
                    Box::new(profile) as Box<dyn Fn(f64, f64) -> f64>,
                    BoundaryTag::Left,
                )
            }
            Scenario::BottomHeated => {
                let mut bc: Vec<(usize, f64)> = dirichlet_dofs(&vel_space, &[BoundaryTag::Bottom])
                    .iter()
                    .map(|&(d, _)| (d, 1.0))
                    .collect();
                bc.extend(
                    dirichlet_dofs(&vel_space, &[BoundaryTag::Top])
                        .iter()
                        .map(|&(d, _)| (d, 0.0)),
                );
                let amp = config.perturb_amp;
                let pi = std::f64::consts::PI;
                let profile = move |x: f64, z: f64| {
                    (1.0 - z) + amp * (pi * z).sin() * (2.0 * pi * x).cos()
                };
                (
                    bc,
                    Box::new(profile) as Box<dyn Fn(f64, f64) -> f64>,
                    BoundaryTag::Bottom,
                )
            }
            Scenario::Mms => unreachable!(),
        };

        let theta0 = crate::dofs::l2_project(&vel_space, &mesh, FieldRole::Temperature, theta0, &quad)?;

        // assemble the Darcy blocks once; only the buoyancy load changes
        let mut darcy_template = assemble_darcy(
            &mesh,
            &vel_space,
            &pres_space,
            &chi,
            config.ra,
            &theta0,
            &quad,
        )?;
        darcy_template.apply_dirichlet(&velocity_bc)?;
        let opts = config.solver_options();
        let darcy_solver = DarcySolver::new(
            &mesh,
            &vel_space,
            &pres_space,
            &chi,
            &quad,
            config.quad_points,
            &darcy_template,
            &wall_dofs,
            &wall_dofs,
            opts,
        )?;

        let temp_mass = scalar_mass(&mesh, &vel_space, None, &quad);
        let temp_stiffness = scalar_stiffness(&mesh, &vel_space, &zeta, &quad);
        let temp_convection =
            SparseMatrix::from_pattern(vel_space.n_dofs, &scalar_pattern(&mesh, &vel_space));
        let temp_matrix = temp_mass.clone();

        let state = SimState {
            u_x: FieldVector::zeros(FieldRole::VelocityX, n_scalar),
            u_z: FieldVector::zeros(FieldRole::VelocityZ, n_scalar),
            p: FieldVector::zeros(FieldRole::Pressure, pres_space.n_dofs),
            theta: theta0,
            step_index: 0,
            time: 0.0,
        };

        Ok(Simulation {
            mesh,
            vel_space,
            pres_space,
            quad,
            config: config.clone(),
            state,
            darcy_template,
            darcy_solver,
            velocity_bc,
            theta_bc,
            nu_boundary,
            temp_mass,
            temp_stiffness,
            temp_convection,
            temp_matrix,
        })
    }

    /// Rebuild the momentum rhs for a buoyancy temperature and re-impose the
    /// constrained entries (homogeneous walls, so no elimination term).
    fn buoyancy_rhs(&self, theta: &FieldVector) -> Vec<f64> {
        let mut f = buoyancy_load(
            &self.mesh,
            &self.vel_space,
            self.config.ra,
            &theta.values,
            &self.quad,
        );
        for &(dof, value) in &self.velocity_bc {
            f[dof] = value;
        }
        f
    }

    fn solve_darcy_for(
        &mut self,
        theta: &FieldVector,
        warm_pressure: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>, DarcyStats)> {
        self.darcy_template.f = self.buoyancy_rhs(theta);
        self.darcy_solver.solve(&self.darcy_template, warm_pressure)
    }

    /// Assemble (M + dt B_conv + dt S) with boundary rows replaced, and the
    /// rhs M theta_old with boundary values.
    fn temperature_system_for(
        &mut self,
        u_x: &[f64],
        u_z: &[f64],
        theta_old: &[f64],
    ) -> Result<Vec<f64>> {
        let dt = self.config.dt;
        convection_into(
            &self.mesh,
            &self.vel_space,
            u_x,
            u_z,
            &self.quad,
            &mut self.temp_convection,
        );
        let values = &mut self.temp_matrix.values;
        values.copy_from_slice(&self.temp_mass.values);
        for ((v, c), s) in values
            .iter_mut()
            .zip(&self.temp_convection.values)
            .zip(&self.temp_stiffness.values)
        {
            *v += dt * (c + s);
        }
        let mut rhs = self.temp_mass.spmv(theta_old)?;
        for &(dof, value) in &self.theta_bc {
            let (start, end) = (
                self.temp_matrix.row_offsets[dof],
                self.temp_matrix.row_offsets[dof + 1],
            );
            for k in start..end {
                self.temp_matrix.values[k] =
                    if self.temp_matrix.col_indices[k] == dof { 1.0 } else { 0.0 };
            }
            rhs[dof] = value;
        }
        Ok(rhs)
    }

    /// One time step with velocity-temperature inner iterations.
    pub fn advance(&mut self) -> Result<StepStats> {
        let opts = self.config.solver_options();
        let max_inner = self.config.max_inner.max(1);
        let theta_old = self.state.theta.clone();
        let mut stats = StepStats::default();

        let mut theta_latest = theta_old.clone();
        let mut u_x = Vec::new();
        let mut u_z = Vec::new();
        let mut pressure = self.state.p.values.clone();
        let mut have_pressure = self.state.step_index > 0;

        for sweep in 1..=max_inner {
            let warm = if have_pressure {
                Some(pressure.as_slice())
            } else {
                None
            };
            let (vel, p, dstats) = self.solve_darcy_for(&theta_latest, warm)?;
            stats.schur_iterations += dstats.schur_iterations;
            stats.divergence_residual = dstats.divergence_residual;
            pressure = p;
            have_pressure = true;
            let n = self.vel_space.n_dofs;
            u_x = vel[..n].to_vec();
            u_z = vel[n..].to_vec();

            let rhs = self.temperature_system_for(&u_x, &u_z, &theta_old.values)?;
            let precond = IluPrecond::new(&self.temp_matrix);
            let out = gmres_with_guess(
                &self.temp_matrix,
                &rhs,
                &precond,
                Some(&theta_latest.values),
                opts.gmres_tol,
                opts.gmres_restart,
                opts.gmres_max_iter,
            )
            .map_err(|e| match e {
                Error::NonConvergence {
                    iterations,
                    residual,
                    history,
                    ..
                } => Error::NonConvergence {
                    solver: "temperature gmres",
                    iterations,
                    residual,
                    history,
                },
                other => other,
            })?;
            let (theta_new, gmres_iters) = (out.x, out.iterations);
            stats.gmres_iterations += gmres_iters;
            stats.inner_sweeps = sweep;

            if sweep > 1 {
                let change = {
                    let mut diff = theta_new.clone();
                    for (d, t) in diff.iter_mut().zip(&theta_latest.values) {
                        *d -= t;
                    }
                    norm2(&diff)
                };
                stats.inner_changes.push(change);
                theta_latest.values = theta_new;
                if change <= self.config.inner_tol {
                    break;
                }
            } else {
                theta_latest.values = theta_new;
            }
        }

        self.state.u_x.values = u_x;
        self.state.u_z.values = u_z;
        self.state.p.values = pressure;
        self.state.theta = theta_latest;
        self.state.step_index += 1;
        self.state.time += self.config.dt;
        stats.pressure_mean = self.darcy_solver.pressure_mean(&self.state.p.values);
        Ok(stats)
    }

    /// Boundary-averaged Nusselt number on the scenario's heated wall.
    pub fn nusselt_average(&self) -> Result<f64> {
        Ok(local_nusselt(
            &self.state.theta,
            &self.vel_space,
            &self.mesh,
            self.nu_boundary,
            2,
        )?
        .average)
    }

    pub fn heated_boundary(&self) -> BoundaryTag {
        self.nu_boundary
    }

    /// March until the temperature increment criterion is met or the step or
    /// time budget runs out. The observer sees every completed step.
    pub fn run_to_steady(
        &mut self,
        mut observer: impl FnMut(&SimState, f64, &StepStats),
    ) -> Result<SteadyReport> {
        let mut history = Vec::new();
        let mut converged = false;
        let mut final_residual = f64::NAN;
        while self.state.step_index < self.config.max_steps {
            let theta_prev = self.state.theta.values.clone();
            let stats = self.advance()?;
            let residual = {
                let mut diff = self.state.theta.values.clone();
                for (d, t) in diff.iter_mut().zip(&theta_prev) {
                    *d -= t;
                }
                norm2(&diff)
            };
            history.push(residual);
            final_residual = residual;
            observer(&self.state, residual, &stats);
            if !residual.is_finite() {
                break;
            }
            if residual < self.config.steady_tol {
                converged = true;
                break;
            }
            if self.state.time >= self.config.t_final {
                break;
            }
        }
        Ok(SteadyReport {
            converged,
            steps_taken: self.state.step_index,
            final_residual,
            residual_history: history,
        })
    }
}

/// Convenience wrapper: build and march a scenario in one call.
pub fn run_to_steady(
    config: &SimulationConfig,
    observer: impl FnMut(&SimState, f64, &StepStats),
) -> Result<(Simulation, SteadyReport)> {
    let mut sim = Simulation::new(config)?;
    let report = sim.run_to_steady(observer)?;
    Ok((sim, report))
}
