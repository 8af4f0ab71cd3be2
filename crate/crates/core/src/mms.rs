//! Manufactured-solution verification: closed-form fields, forcing terms,
//! the steady solve at one resolution, and the refinement-study driver.
//!
//! The verification system is steady with unit coefficients: the momentum
//! equation carries a body force f, and the temperature equation (without
//! the time derivative) carries a source g, both derived by substituting
//! the exact fields.

use crate::assembly::{
    assemble_darcy, convection_matrix, scalar_load, scalar_stiffness, vector_load,
    CoefficientPoly,
};
use crate::cli::config::SimulationConfig;
use crate::dofs::{build_dof_map, dirichlet_dofs, DofMap, FieldRole, FieldVector};
use crate::element::gauss_rule;
use crate::error::{Error, Result};
use crate::linalg::{gmres_with_guess, IluPrecond};
use crate::mesh::{build_unit_square, BoundaryTag, Mesh};
use crate::postprocess::{convergence_rate, l2_error};
use crate::solver::{DarcySolver, SolverOptions};

use std::f64::consts::PI;

/// x-velocity sin(pi x).
pub fn exact_u(x: f64, _z: f64) -> f64 {
    (PI * x).sin()
}

/// z-velocity -pi z cos(pi x).
pub fn exact_w(x: f64, z: f64) -> f64 {
    -PI * z * (PI * x).cos()
}

/// pressure sin(pi x) cos(pi z), zero mean on the unit square.
pub fn exact_p(x: f64, z: f64) -> f64 {
    (PI * x).sin() * (PI * z).cos()
}

/// temperature sin(pi x + pi z).
pub fn exact_theta(x: f64, z: f64) -> f64 {
    (PI * (x + z)).sin()
}

/// (u, w, p, theta) at a point.
pub fn exact_fields(x: f64, z: f64) -> (f64, f64, f64, f64) {
    (exact_u(x, z), exact_w(x, z), exact_p(x, z), exact_theta(x, z))
}

/// Analytic divergence of the exact velocity; identically zero.
pub fn exact_divergence(x: f64, z: f64) -> f64 {
    let du_dx = PI * (PI * x).cos();
    let dw_dz = -PI * (PI * x).cos();
    let _ = z;
    du_dx + dw_dz
}

/// Momentum forcing so the exact fields satisfy u - theta k + grad p = f.
pub fn forcing_f(x: f64, z: f64) -> (f64, f64) {
    let f1 = (PI * x).sin() + PI * (PI * x).cos() * (PI * z).cos();
    let f2 = -PI * z * (PI * x).cos() - PI * (PI * x).sin() * (PI * z).sin()
        - (PI * (x + z)).sin();
    (f1, f2)
}

/// Heat source so the exact fields satisfy u . grad theta - lap theta = g.
pub fn forcing_g(x: f64, z: f64) -> f64 {
    2.0 * PI * PI * (PI * (x + z)).sin()
        + PI * (PI * (x + z)).cos() * ((PI * x).sin() - PI * z * (PI * x).cos())
}

/// Steady verification solve at one resolution.
pub struct MmsSolution {
    pub mesh: Mesh,
    pub vel_space: DofMap,
    pub pres_space: DofMap,
    pub u_x: FieldVector,
    pub u_z: FieldVector,
    pub p: FieldVector,
    pub theta: FieldVector,
}

pub fn solve_steady(n: usize, quad_points: usize) -> Result<MmsSolution> {
    let mesh = build_unit_square(n)?;
    let vel_space = build_dof_map(&mesh, 2)?;
    let pres_space = build_dof_map(&mesh, 1)?;
    let quad = gauss_rule(quad_points)?;
    let one = CoefficientPoly::one();
    let opts = SolverOptions::default();

    // momentum: buoyancy from the interpolated exact temperature plus f,
    // velocity boundary data from the exact solution
    let theta_data = vel_space.interpolate(FieldRole::Temperature, exact_theta);
    let mut darcy = assemble_darcy(&mesh, &vel_space, &pres_space, &one, 1.0, &theta_data, &quad)?;
    let body = vector_load(&mesh, &vel_space, forcing_f, &quad);
    for (f, b) in darcy.f.iter_mut().zip(&body) {
        *f += b;
    }
    let n_scalar = vel_space.n_dofs;
    let wall = dirichlet_dofs(&vel_space, &BoundaryTag::ALL);
    let wall_dofs: Vec<usize> = wall.iter().map(|&(d, _)| d).collect();
    let velocity_bc: Vec<(usize, f64)> = wall
        .iter()
        .flat_map(|&(d, (x, z))| [(d, exact_u(x, z)), (d + n_scalar, exact_w(x, z))])
        .collect();
    darcy.apply_dirichlet(&velocity_bc)?;

    let darcy_solver = DarcySolver::new(
        &mesh,
        &vel_space,
        &pres_space,
        &one,
        &quad,
        quad_points,
        &darcy,
        &wall_dofs,
        &wall_dofs,
        opts,
    )?;
    let (velocity, pressure, _) = darcy_solver.solve(&darcy, None)?;
    let u_x = FieldVector {
        values: velocity[..n_scalar].to_vec(),
        role: FieldRole::VelocityX,
    };
    let u_z = FieldVector {
        values: velocity[n_scalar..].to_vec(),
        role: FieldRole::VelocityZ,
    };

    // steady temperature: convection by the computed velocity plus unit
    // diffusion, source g, exact Dirichlet data
    let stiffness = scalar_stiffness(&mesh, &vel_space, &one, &quad);
    let convection = convection_matrix(&mesh, &vel_space, &u_x.values, &u_z.values, &quad);
    let mut matrix = crate::assembly::compose_same_pattern(&[(1.0, &convection), (1.0, &stiffness)]);
    let mut rhs = scalar_load(&mesh, &vel_space, forcing_g, &quad);
    for &(dof, (x, z)) in &wall {
        let (start, end) = (matrix.row_offsets[dof], matrix.row_offsets[dof + 1]);
        for k in start..end {
            matrix.values[k] = if matrix.col_indices[k] == dof { 1.0 } else { 0.0 };
        }
        rhs[dof] = exact_theta(x, z);
    }
    let guess = vel_space.interpolate(FieldRole::Temperature, exact_theta);
    let precond = IluPrecond::new(&matrix);
    let out = gmres_with_guess(
        &matrix,
        &rhs,
        &precond,
        Some(&guess.values),
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
            solver: "steady temperature gmres",
            iterations,
            residual,
            history,
        },
        other => other,
    })?;
    let theta = FieldVector {
        values: out.x,
        role: FieldRole::Temperature,
    };

    Ok(MmsSolution {
        mesh,
        vel_space,
        pres_space,
        u_x,
        u_z,
        p: FieldVector {
            values: pressure,
            role: FieldRole::Pressure,
        },
        theta,
    })
}

/// One row of the refinement study.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n: usize,
    /// velocity plus pressure unknowns
    pub total_dofs: usize,
    pub err_u: f64,
    pub err_p: f64,
    pub err_theta: f64,
    pub rate_u: Option<f64>,
    pub rate_p: Option<f64>,
    pub rate_theta: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Solve on `levels` meshes starting at `base_n`, doubling each time, and
/// record L2 errors and observed rates. Errors are measured with a 6-point
/// rule, two orders above the assembly quadrature.
pub fn run_convergence(levels: usize, base_n: usize) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least two levels".into(),
        ));
    }
    let error_quad = gauss_rule(6)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut errs_u = Vec::new();
    let mut errs_p = Vec::new();
    let mut errs_t = Vec::new();
    let mut sizes = Vec::new();

    for level in 0..levels {
        let n = base_n << level;
        let sol = solve_steady(n, 4)?;
        let eux = l2_error(&sol.u_x, &sol.vel_space, &sol.mesh, exact_u, &error_quad);
        let euz = l2_error(&sol.u_z, &sol.vel_space, &sol.mesh, exact_w, &error_quad);
        let err_u = (eux * eux + euz * euz).sqrt();
        let err_p = l2_error(&sol.p, &sol.pres_space, &sol.mesh, exact_p, &error_quad);
        let err_theta = l2_error(&sol.theta, &sol.vel_space, &sol.mesh, exact_theta, &error_quad);
        errs_u.push(err_u);
        errs_p.push(err_p);
        errs_t.push(err_theta);
        sizes.push(1.0 / n as f64);
        rows.push(ConvergenceRow {
            level,
            n,
            total_dofs: 2 * sol.vel_space.n_dofs + sol.pres_space.n_dofs,
            err_u,
            err_p,
            err_theta,
            rate_u: None,
            rate_p: None,
            rate_theta: None,
        });
    }

    let ru = convergence_rate(&errs_u, &sizes)?;
    let rp = convergence_rate(&errs_p, &sizes)?;
    let rt = convergence_rate(&errs_t, &sizes)?;
    for (k, row) in rows.iter_mut().enumerate().skip(1) {
        row.rate_u = Some(ru[k - 1]);
        row.rate_p = Some(rp[k - 1]);
        row.rate_theta = Some(rt[k - 1]);
    }
    Ok(ConvergenceTable { rows })
}

/// Default MMS configuration used by the command line.
pub fn mms_config(n: usize) -> SimulationConfig {
    let mut config = SimulationConfig::defaults(crate::cli::config::Scenario::Mms);
    config.n = n;
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn midline_field_values() {
        let (u, w, p, theta) = exact_fields(0.5, 0.5);
        assert!((u - 1.0).abs() <= 1e-15);
        assert!(w.abs() <= 1e-15);
        assert!(p.abs() <= 1e-15);
        assert!(theta.abs() <= 1e-15);

        // w at the left end of the midline is -pi/2
        let (_, w, _, _) = exact_fields(0.0, 0.5);
        assert!((w + 1.570_796_326_794_9).abs() <= 1e-12);

        // p at the bottom of the vertical midline is 1
        let (_, _, p, _) = exact_fields(0.5, 0.0);
        assert!((p - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn forcing_values_at_reference_points() {
        let (f1, f2) = forcing_f(0.5, 0.5);
        assert!((f1 - 1.0).abs() <= 1e-14);
        assert!((f2 + PI).abs() <= 1e-14);

        let (f1, f2) = forcing_f(0.0, 0.0);
        assert!((f1 - PI).abs() <= 1e-14);
        assert!(f2.abs() <= 1e-14);

        assert!((forcing_g(0.5, 0.5) + PI).abs() <= 1e-13);
        assert!(forcing_g(0.0, 0.0).abs() <= 1e-14);
    }

    #[test]
    fn exact_fields_satisfy_the_equations() {
        // residuals of the steady system at random points, via analytic
        // derivatives of the closed forms
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let x: f64 = rng.gen();
            let z: f64 = rng.gen();
            let (u, w, _, theta) = exact_fields(x, z);
            let dp_dx = PI * (PI * x).cos() * (PI * z).cos();
            let dp_dz = -PI * (PI * x).sin() * (PI * z).sin();
            let (f1, f2) = forcing_f(x, z);
            assert!((u + dp_dx - f1).abs() <= 1e-12);
            assert!((w - theta + dp_dz - f2).abs() <= 1e-12);

            let grad_theta = PI * (PI * (x + z)).cos();
            let lap_theta = -2.0 * PI * PI * (PI * (x + z)).sin();
            let res = u * grad_theta + w * grad_theta - lap_theta - forcing_g(x, z);
            assert!(res.abs() <= 1e-12);
        }
    }

    #[test]
    fn divergence_free_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(59);
        for _ in 0..1000 {
            let d = exact_divergence(rng.gen(), rng.gen());
            assert!(d.abs() <= 1e-14);
        }
    }
}
