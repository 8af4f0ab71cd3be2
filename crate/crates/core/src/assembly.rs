//! Assembly of the Darcy saddle-point blocks and the temperature system
//! from the weak forms, with height-dependent coefficients and Dirichlet
//! constraint application.
//!
//! Velocity unknowns are stored as one stacked block vector
//! [all u_x; all u_z] over the scalar Q2 map; the divergence coupling B has
//! pressure rows and stacked velocity columns.

use crate::dofs::{DofMap, FieldVector};
use crate::element::{map_to_physical, QuadratureRule};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;

/// Quadratic polynomial coefficient c0 + c1 z + c2 z^2, positive on [0,1].
#[derive(Clone, Copy, Debug)]
pub struct CoefficientPoly {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl CoefficientPoly {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Result<Self> {
        let poly = CoefficientPoly { c0, c1, c2 };
        for i in 0..=1000 {
            let z = i as f64 / 1000.0;
            let v = poly.eval(z);
            if v <= 0.0 {
                return Err(Error::CoefficientNotPositive { z, value: v });
            }
        }
        Ok(poly)
    }

    pub fn one() -> Self {
        CoefficientPoly {
            c0: 1.0,
            c1: 0.0,
            c2: 0.0,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.c0 + z * (self.c1 + z * self.c2)
    }
}

/// Shape values and reference gradients tabulated at the quadrature points.
struct ShapeTable {
    /// values[q][a]
    values: Vec<Vec<f64>>,
    /// grads[q][a], reference-cell derivatives
    grads: Vec<Vec<(f64, f64)>>,
}

fn tabulate(space: &DofMap, quad: &QuadratureRule) -> ShapeTable {
    ShapeTable {
        values: quad
            .points
            .iter()
            .map(|&p| space.element.shape_values(p).unwrap())
            .collect(),
        grads: quad
            .points
            .iter()
            .map(|&p| space.element.shape_gradients(p).unwrap())
            .collect(),
    }
}

/// Sorted sparsity pattern coupling every pair of dofs sharing a cell.
pub fn scalar_pattern(mesh: &Mesh, space: &DofMap) -> Vec<Vec<usize>> {
    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); space.n_dofs];
    for cell in 0..mesh.n_cells() {
        let dofs = space.cell_dofs(cell);
        for &r in dofs {
            pattern[r].extend_from_slice(dofs);
        }
    }
    for row in &mut pattern {
        row.sort_unstable();
        row.dedup();
    }
    pattern
}

/// Scalar mass matrix, optionally weighted by a height-dependent
/// coefficient evaluated at the physical quadrature points.
pub fn scalar_mass(
    mesh: &Mesh,
    space: &DofMap,
    weight: Option<&CoefficientPoly>,
    quad: &QuadratureRule,
) -> SparseMatrix {
    let table = tabulate(space, quad);
    let mut m = SparseMatrix::from_pattern(space.n_dofs, &scalar_pattern(mesh, space));
    let npc = space.element.nodes_per_cell();
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    let mut local = vec![0.0; npc * npc];
    for cell in 0..mesh.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let mp = map_to_physical(mesh, cell, quad.points[q]);
            let coeff = weight.map_or(1.0, |c| c.eval(mp.z));
            let w = w_ref * det_j * coeff;
            let vals = &table.values[q];
            for a in 0..npc {
                let wa = w * vals[a];
                for b in 0..npc {
                    local[a * npc + b] += wa * vals[b];
                }
            }
        }
        let dofs = space.cell_dofs(cell);
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                m.add_at(ga, gb, local[a * npc + b]);
            }
        }
    }
    m
}

/// Scalar diffusion matrix (grad phi_i, zeta grad phi_j).
pub fn scalar_stiffness(
    mesh: &Mesh,
    space: &DofMap,
    zeta: &CoefficientPoly,
    quad: &QuadratureRule,
) -> SparseMatrix {
    scalar_stiffness_fn(mesh, space, |z| zeta.eval(z), quad)
}

/// Diffusion matrix with an arbitrary height-dependent weight; the Schur
/// preconditioner needs 1/chi, which is not polynomial.
pub fn scalar_stiffness_fn(
    mesh: &Mesh,
    space: &DofMap,
    weight: impl Fn(f64) -> f64,
    quad: &QuadratureRule,
) -> SparseMatrix {
    let table = tabulate(space, quad);
    let mut s = SparseMatrix::from_pattern(space.n_dofs, &scalar_pattern(mesh, space));
    let npc = space.element.nodes_per_cell();
    let h = mesh.cell_size_h;
    let det_j = h * h;
    let inv_h2 = 1.0 / (h * h);
    let mut local = vec![0.0; npc * npc];
    for cell in 0..mesh.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let mp = map_to_physical(mesh, cell, quad.points[q]);
            let w = w_ref * det_j * weight(mp.z) * inv_h2;
            let grads = &table.grads[q];
            for a in 0..npc {
                let (gax, gaz) = grads[a];
                for b in 0..npc {
                    let (gbx, gbz) = grads[b];
                    local[a * npc + b] += w * (gax * gbx + gaz * gbz);
                }
            }
        }
        let dofs = space.cell_dofs(cell);
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                s.add_at(ga, gb, local[a * npc + b]);
            }
        }
    }
    s
}

/// Convection matrix (phi_i, u . grad phi_j) for a velocity given by its
/// two scalar component vectors on the same Q2 space.
pub fn convection_matrix(
    mesh: &Mesh,
    space: &DofMap,
    u_x: &[f64],
    u_z: &[f64],
    quad: &QuadratureRule,
) -> SparseMatrix {
    let mut c = SparseMatrix::from_pattern(space.n_dofs, &scalar_pattern(mesh, space));
    convection_into(mesh, space, u_x, u_z, quad, &mut c);
    c
}

/// Re-assemble the convection matrix into an existing pattern, zeroing it
/// first. The pattern must come from `scalar_pattern`.
pub fn convection_into(
    mesh: &Mesh,
    space: &DofMap,
    u_x: &[f64],
    u_z: &[f64],
    quad: &QuadratureRule,
    out: &mut SparseMatrix,
) {
    let table = tabulate(space, quad);
    out.set_all(0.0);
    let npc = space.element.nodes_per_cell();
    let h = mesh.cell_size_h;
    let det_j = h * h;
    let inv_h = 1.0 / h;
    let mut local = vec![0.0; npc * npc];
    for cell in 0..mesh.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let dofs = space.cell_dofs(cell);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let vals = &table.values[q];
            let grads = &table.grads[q];
            let mut ux_q = 0.0;
            let mut uz_q = 0.0;
            for (c_loc, &g) in dofs.iter().enumerate() {
                ux_q += u_x[g] * vals[c_loc];
                uz_q += u_z[g] * vals[c_loc];
            }
            let w = w_ref * det_j;
            for a in 0..npc {
                let wa = w * vals[a];
                for b in 0..npc {
                    let (gbx, gbz) = grads[b];
                    local[a * npc + b] += wa * (ux_q * gbx + uz_q * gbz) * inv_h;
                }
            }
        }
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                out.add_at(ga, gb, local[a * npc + b]);
            }
        }
    }
}

/// Divergence coupling: rows test pressure bases against div u over the
/// stacked velocity vector [u_x; u_z].
pub fn divergence_matrix(
    mesh: &Mesh,
    vel_space: &DofMap,
    pres_space: &DofMap,
    quad: &QuadratureRule,
) -> SparseMatrix {
    let vel_table = tabulate(vel_space, quad);
    let pres_table = tabulate(pres_space, quad);
    let n_scalar = vel_space.n_dofs;

    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); pres_space.n_dofs];
    for cell in 0..mesh.n_cells() {
        let p_dofs = pres_space.cell_dofs(cell);
        let v_dofs = vel_space.cell_dofs(cell);
        for &p in p_dofs {
            for &v in v_dofs {
                pattern[p].push(v);
                pattern[p].push(v + n_scalar);
            }
        }
    }
    for row in &mut pattern {
        row.sort_unstable();
        row.dedup();
    }
    let mut b = SparseMatrix::from_pattern(2 * n_scalar, &pattern);

    let npp = pres_space.element.nodes_per_cell();
    let npv = vel_space.element.nodes_per_cell();
    let h = mesh.cell_size_h;
    let det_j = h * h;
    let inv_h = 1.0 / h;
    let mut local = vec![0.0; npp * npv * 2];
    for cell in 0..mesh.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let w = w_ref * det_j;
            let p_vals = &pres_table.values[q];
            let v_grads = &vel_table.grads[q];
            for (pi, &pv) in p_vals.iter().enumerate() {
                let wp = w * pv;
                for (vi, &(gx, gz)) in v_grads.iter().enumerate() {
                    local[(pi * npv + vi) * 2] += wp * gx * inv_h;
                    local[(pi * npv + vi) * 2 + 1] += wp * gz * inv_h;
                }
            }
        }
        let p_dofs = pres_space.cell_dofs(cell);
        let v_dofs = vel_space.cell_dofs(cell);
        for (pi, &gp) in p_dofs.iter().enumerate() {
            for (vi, &gv) in v_dofs.iter().enumerate() {
                b.add_at(gp, gv, local[(pi * npv + vi) * 2]);
                b.add_at(gp, gv + n_scalar, local[(pi * npv + vi) * 2 + 1]);
            }
        }
    }
    b
}

/// Buoyancy load Ra (v, theta k): enters the z-velocity block only.
pub fn buoyancy_load(
    mesh: &Mesh,
    vel_space: &DofMap,
    ra: f64,
    theta: &[f64],
    quad: &QuadratureRule,
) -> Vec<f64> {
    let table = tabulate(vel_space, quad);
    let n_scalar = vel_space.n_dofs;
    let mut f = vec![0.0; 2 * n_scalar];
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    for cell in 0..mesh.n_cells() {
        let dofs = vel_space.cell_dofs(cell);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let vals = &table.values[q];
            let mut theta_q = 0.0;
            for (c, &g) in dofs.iter().enumerate() {
                theta_q += theta[g] * vals[c];
            }
            let w = w_ref * det_j * ra * theta_q;
            for (a, &g) in dofs.iter().enumerate() {
                f[g + n_scalar] += w * vals[a];
            }
        }
    }
    f
}

/// Body-force load (v, f) over the stacked velocity vector.
pub fn vector_load(
    mesh: &Mesh,
    vel_space: &DofMap,
    force: impl Fn(f64, f64) -> (f64, f64),
    quad: &QuadratureRule,
) -> Vec<f64> {
    let table = tabulate(vel_space, quad);
    let n_scalar = vel_space.n_dofs;
    let mut f = vec![0.0; 2 * n_scalar];
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    for cell in 0..mesh.n_cells() {
        let dofs = vel_space.cell_dofs(cell);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let mp = map_to_physical(mesh, cell, quad.points[q]);
            let (fx, fz) = force(mp.x, mp.z);
            let w = w_ref * det_j;
            let vals = &table.values[q];
            for (a, &g) in dofs.iter().enumerate() {
                f[g] += w * fx * vals[a];
                f[g + n_scalar] += w * fz * vals[a];
            }
        }
    }
    f
}

/// Scalar load (phi, g).
pub fn scalar_load(
    mesh: &Mesh,
    space: &DofMap,
    g: impl Fn(f64, f64) -> f64,
    quad: &QuadratureRule,
) -> Vec<f64> {
    let table = tabulate(space, quad);
    let mut f = vec![0.0; space.n_dofs];
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    for cell in 0..mesh.n_cells() {
        let dofs = space.cell_dofs(cell);
        for (q, &w_ref) in quad.weights.iter().enumerate() {
            let mp = map_to_physical(mesh, cell, quad.points[q]);
            let w = w_ref * det_j * g(mp.x, mp.z);
            let vals = &table.values[q];
            for (a, &gdof) in dofs.iter().enumerate() {
                f[gdof] += w * vals[a];
            }
        }
    }
    f
}

/// Sum matrices sharing one sparsity pattern: sum_k scale_k * m_k.
pub fn compose_same_pattern(terms: &[(f64, &SparseMatrix)]) -> SparseMatrix {
    let first = terms[0].1;
    let mut out = first.clone();
    for v in out.values.iter_mut() {
        *v *= terms[0].0;
    }
    for &(scale, m) in &terms[1..] {
        assert_eq!(m.nnz(), out.nnz(), "patterns must match");
        debug_assert_eq!(m.col_indices, out.col_indices);
        for (o, v) in out.values.iter_mut().zip(&m.values) {
            *o += scale * v;
        }
    }
    out
}

/// Darcy saddle-point blocks: A U - B^T P = F (momentum rows),
/// B U = continuity_rhs (continuity rows).
#[derive(Clone, Debug)]
pub struct DarcySystem {
    /// chi-weighted vector mass matrix over [u_x; u_z].
    pub a: SparseMatrix,
    /// divergence coupling, pressure rows by stacked velocity columns.
    pub b: SparseMatrix,
    /// momentum right-hand side.
    pub f: Vec<f64>,
    /// continuity right-hand side, nonzero only after constraint
    /// elimination with inhomogeneous velocity data.
    pub continuity_rhs: Vec<f64>,
    pub bc_applied: bool,
}

pub fn assemble_darcy(
    mesh: &Mesh,
    vel_space: &DofMap,
    pres_space: &DofMap,
    chi: &CoefficientPoly,
    ra: f64,
    theta_old: &FieldVector,
    quad: &QuadratureRule,
) -> Result<DarcySystem> {
    if theta_old.len() != vel_space.n_dofs {
        return Err(Error::DimensionMismatch {
            expected: vel_space.n_dofs,
            found: theta_old.len(),
            context: "buoyancy temperature field",
        });
    }
    let a_scalar = scalar_mass(mesh, vel_space, Some(chi), quad);
    let n = vel_space.n_dofs;
    // stack two copies block-diagonally
    let mut triplets = Vec::with_capacity(2 * a_scalar.nnz());
    for r in 0..n {
        let (cols, vals) = a_scalar.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            triplets.push((r, c, v));
            triplets.push((r + n, c + n, v));
        }
    }
    let a = SparseMatrix::from_triplets(2 * n, 2 * n, &triplets)?;
    let b = divergence_matrix(mesh, vel_space, pres_space, quad);
    let f = buoyancy_load(mesh, vel_space, ra, &theta_old.values, quad);
    let continuity_rhs = vec![0.0; pres_space.n_dofs];
    Ok(DarcySystem {
        a,
        b,
        f,
        continuity_rhs,
        bc_applied: false,
    })
}

/// Temperature system (M + dt B_conv + dt S) theta = M theta_old, with the
/// component matrices retained.
#[derive(Clone, Debug)]
pub struct TemperatureSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub mass: SparseMatrix,
    pub convection: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub bc_applied: bool,
}

pub fn assemble_temperature(
    mesh: &Mesh,
    temp_space: &DofMap,
    zeta: &CoefficientPoly,
    u_new: (&FieldVector, &FieldVector),
    dt: f64,
    theta_old: &FieldVector,
    quad: &QuadratureRule,
) -> Result<TemperatureSystem> {
    let n = temp_space.n_dofs;
    for len in [u_new.0.len(), u_new.1.len(), theta_old.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
                context: "temperature assembly fields",
            });
        }
    }
    let mass = scalar_mass(mesh, temp_space, None, quad);
    let stiffness = scalar_stiffness(mesh, temp_space, zeta, quad);
    let convection = convection_matrix(mesh, temp_space, &u_new.0.values, &u_new.1.values, quad);
    let matrix = compose_same_pattern(&[(1.0, &mass), (dt, &convection), (dt, &stiffness)]);
    let rhs = mass.spmv(&theta_old.values)?;
    Ok(TemperatureSystem {
        matrix,
        rhs,
        mass,
        convection,
        stiffness,
        bc_applied: false,
    })
}

/// Check a Dirichlet list for conflicting duplicates; returns a dense
/// lookup (value by dof, NaN for unconstrained).
fn bc_lookup(n: usize, bcs: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut lookup = vec![f64::NAN; n];
    for &(dof, value) in bcs {
        if dof >= n {
            return Err(Error::InvalidArgument(format!(
                "boundary dof {dof} out of range {n}"
            )));
        }
        if !lookup[dof].is_nan() && lookup[dof] != value {
            return Err(Error::ConflictingBoundaryValue {
                dof,
                first: lookup[dof],
                second: value,
            });
        }
        lookup[dof] = value;
    }
    Ok(lookup)
}

impl DarcySystem {
    /// Impose velocity values by symmetric elimination: constrained rows and
    /// columns of A are replaced by the identity with the data moved to the
    /// right-hand sides, and the matching B columns are folded into the
    /// continuity rhs. A stays SPD.
    pub fn apply_dirichlet(&mut self, bcs: &[(usize, f64)]) -> Result<()> {
        if bcs.is_empty() {
            return Ok(());
        }
        let n = self.a.n_rows;
        let lookup = bc_lookup(n, bcs)?;
        let constrained = |d: usize| !lookup[d].is_nan();

        for r in 0..n {
            let (start, end) = (self.a.row_offsets[r], self.a.row_offsets[r + 1]);
            if constrained(r) {
                for k in start..end {
                    let c = self.a.col_indices[k];
                    self.a.values[k] = if c == r { 1.0 } else { 0.0 };
                }
                self.f[r] = lookup[r];
            } else {
                for k in start..end {
                    let c = self.a.col_indices[k];
                    if constrained(c) {
                        self.f[r] -= self.a.values[k] * lookup[c];
                        self.a.values[k] = 0.0;
                    }
                }
            }
        }
        for r in 0..self.b.n_rows {
            let (start, end) = (self.b.row_offsets[r], self.b.row_offsets[r + 1]);
            for k in start..end {
                let c = self.b.col_indices[k];
                if constrained(c) {
                    self.continuity_rhs[r] -= self.b.values[k] * lookup[c];
                    self.b.values[k] = 0.0;
                }
            }
        }
        self.bc_applied = true;
        Ok(())
    }
}

impl TemperatureSystem {
    /// Impose temperature values by row replacement; the matrix is
    /// nonsymmetric anyway, so columns are kept.
    pub fn apply_dirichlet(&mut self, bcs: &[(usize, f64)]) -> Result<()> {
        if bcs.is_empty() {
            return Ok(());
        }
        let lookup = bc_lookup(self.matrix.n_rows, bcs)?;
        for r in 0..self.matrix.n_rows {
            if lookup[r].is_nan() {
                continue;
            }
            let (start, end) = (self.matrix.row_offsets[r], self.matrix.row_offsets[r + 1]);
            for k in start..end {
                self.matrix.values[k] = if self.matrix.col_indices[k] == r { 1.0 } else { 0.0 };
            }
            self.rhs[r] = lookup[r];
        }
        self.bc_applied = true;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::{build_dof_map, dirichlet_dofs, FieldRole};
    use crate::element::gauss_rule;
    use crate::linalg::{factorize, norm_inf, FactorKind};
    use crate::mesh::{build_unit_square, BoundaryTag};
    use rand::Rng;
    use rand::SeedableRng;

    fn setup(n: usize) -> (Mesh, DofMap, DofMap, QuadratureRule) {
        let mesh = build_unit_square(n).unwrap();
        let q2 = build_dof_map(&mesh, 2).unwrap();
        let q1 = build_dof_map(&mesh, 1).unwrap();
        (mesh, q2, q1, gauss_rule(4).unwrap())
    }

    #[test]
    fn coefficient_positivity_enforced() {
        assert!(CoefficientPoly::new(1.0, 0.0, 0.0).is_ok());
        assert!(CoefficientPoly::new(1.0, -2.0, 0.0).is_err());
        assert!(CoefficientPoly::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn single_cell_weighted_mass_entry() {
        // chi = 1 on one cell: the center-node diagonal entry of the Q2 mass
        // matrix is (8/15)^2 from the 1-D quadratic Lagrange integral
        let (mesh, q2, q1, quad) = setup(1);
        let theta = FieldVector::zeros(FieldRole::Temperature, q2.n_dofs);
        let sys = assemble_darcy(
            &mesh,
            &q2,
            &q1,
            &CoefficientPoly::one(),
            1.0,
            &theta,
            &quad,
        )
        .unwrap();
        let center = q2
            .dof_coords
            .iter()
            .position(|&(x, z)| x == 0.5 && z == 0.5)
            .unwrap();
        let expected = (8.0 / 15.0) * (8.0 / 15.0);
        assert!((sys.a.get(center, center) - expected).abs() <= 1e-14);
        // z-component block carries the same entry
        let n = q2.n_dofs;
        assert!((sys.a.get(center + n, center + n) - expected).abs() <= 1e-14);
    }

    #[test]
    fn zero_temperature_means_zero_buoyancy() {
        let (mesh, q2, q1, quad) = setup(2);
        let theta = FieldVector::zeros(FieldRole::Temperature, q2.n_dofs);
        let sys = assemble_darcy(
            &mesh,
            &q2,
            &q1,
            &CoefficientPoly::one(),
            100.0,
            &theta,
            &quad,
        )
        .unwrap();
        assert!(sys.f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn a_is_symmetric_before_constraints() {
        let (mesh, q2, q1, quad) = setup(3);
        let chi = CoefficientPoly::new(1.0, 1.0, 0.0).unwrap();
        let theta = q2.interpolate(FieldRole::Temperature, |x, z| x + z);
        let sys = assemble_darcy(&mesh, &q2, &q1, &chi, 50.0, &theta, &quad).unwrap();
        assert!(sys.a.asymmetry() <= 1e-13);
    }

    #[test]
    fn mass_is_spd() {
        let (mesh, q2, _, quad) = setup(3);
        let m = scalar_mass(&mesh, &q2, None, &quad);
        assert!(factorize(&m, FactorKind::Spd).is_ok());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mx = m.spmv(&x).unwrap();
            let quad_form: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
            assert!(quad_form > 0.0);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let (mesh, q2, _, quad) = setup(4);
        let zeta = CoefficientPoly::new(1.0, 1.0, 1.0).unwrap();
        let s = scalar_stiffness(&mesh, &q2, &zeta, &quad);
        let ones = vec![1.0; s.n_rows];
        let s1 = s.spmv(&ones).unwrap();
        assert!(norm_inf(&s1) <= 1e-12);
        assert!(s.asymmetry() <= 1e-13);
    }

    #[test]
    fn convection_of_constant_field_is_zero() {
        let (mesh, q2, _, quad) = setup(3);
        let ux = vec![0.3; q2.n_dofs];
        let uz = vec![-0.7; q2.n_dofs];
        let c = convection_matrix(&mesh, &q2, &ux, &uz, &quad);
        let ones = vec![1.0; q2.n_dofs];
        let c1 = c.spmv(&ones).unwrap();
        assert!(norm_inf(&c1) <= 1e-12);
    }

    #[test]
    fn temperature_matrix_symmetric_without_convection() {
        let (mesh, q2, _, quad) = setup(3);
        let zero = FieldVector::zeros(FieldRole::VelocityX, q2.n_dofs);
        let theta = q2.interpolate(FieldRole::Temperature, |_, z| 1.0 - z);
        let sys = assemble_temperature(
            &mesh,
            &q2,
            &CoefficientPoly::one(),
            (&zero, &zero),
            1e-2,
            &theta,
            &quad,
        )
        .unwrap();
        assert!(sys.matrix.asymmetry() <= 1e-13);
    }

    #[test]
    fn zero_dt_temperature_solve_returns_old_field() {
        let (mesh, q2, _, quad) = setup(2);
        let zero = FieldVector::zeros(FieldRole::VelocityX, q2.n_dofs);
        let theta = q2.interpolate(FieldRole::Temperature, |x, z| x * x + 0.5 * z);
        let sys = assemble_temperature(
            &mesh,
            &q2,
            &CoefficientPoly::one(),
            (&zero, &zero),
            0.0,
            &theta,
            &quad,
        )
        .unwrap();
        // matrix reduces to the mass matrix; solving must return theta_old
        let f = factorize(&sys.matrix, FactorKind::Spd).unwrap();
        let x = f.solve(&sys.rhs).unwrap();
        for (a, b) in x.iter().zip(&theta.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn pure_neumann_keeps_constants_stationary() {
        let (mesh, q2, _, quad) = setup(3);
        let zero = FieldVector::zeros(FieldRole::VelocityX, q2.n_dofs);
        let ones = FieldVector {
            values: vec![1.0; q2.n_dofs],
            role: FieldRole::Temperature,
        };
        let sys = assemble_temperature(
            &mesh,
            &q2,
            &CoefficientPoly::new(1.0, 1.0, 0.0).unwrap(),
            (&zero, &zero),
            0.05,
            &ones,
            &quad,
        )
        .unwrap();
        let f = factorize(&sys.matrix, FactorKind::General).unwrap();
        let x = f.solve(&sys.rhs).unwrap();
        for &v in &x {
            assert!((v - 1.0).abs() <= 1e-11);
        }
    }

    #[test]
    fn chi_one_matches_explicit_constant_poly_bitwise() {
        let (mesh, q2, _, quad) = setup(3);
        let weighted = scalar_mass(&mesh, &q2, Some(&CoefficientPoly::one()), &quad);
        let unweighted = scalar_mass(&mesh, &q2, None, &quad);
        assert_eq!(weighted.values, unweighted.values);
    }

    #[test]
    fn empty_bc_list_leaves_system_bitwise_unchanged() {
        let (mesh, q2, q1, quad) = setup(2);
        let theta = q2.interpolate(FieldRole::Temperature, |x, _| x);
        let mut sys = assemble_darcy(
            &mesh,
            &q2,
            &q1,
            &CoefficientPoly::one(),
            10.0,
            &theta,
            &quad,
        )
        .unwrap();
        let before_a = sys.a.values.clone();
        let before_f = sys.f.clone();
        sys.apply_dirichlet(&[]).unwrap();
        assert_eq!(sys.a.values, before_a);
        assert_eq!(sys.f, before_f);
        assert!(!sys.bc_applied);
    }

    #[test]
    fn conflicting_bc_values_rejected() {
        let (mesh, q2, q1, quad) = setup(2);
        let theta = FieldVector::zeros(FieldRole::Temperature, q2.n_dofs);
        let mut sys = assemble_darcy(
            &mesh,
            &q2,
            &q1,
            &CoefficientPoly::one(),
            1.0,
            &theta,
            &quad,
        )
        .unwrap();
        let err = sys.apply_dirichlet(&[(0, 1.0), (0, 2.0)]);
        assert!(matches!(err, Err(Error::ConflictingBoundaryValue { .. })));
    }

    #[test]
    fn pressure_constants_leave_unconstrained_momentum_rows() {
        // with all velocity dofs constrained on the boundary, B^T applied to
        // a constant pressure vanishes on the remaining rows
        let (mesh, q2, q1, quad) = setup(3);
        let theta = FieldVector::zeros(FieldRole::Temperature, q2.n_dofs);
        let mut sys = assemble_darcy(
            &mesh,
            &q2,
            &q1,
            &CoefficientPoly::one(),
            1.0,
            &theta,
            &quad,
        )
        .unwrap();
        let n = q2.n_dofs;
        let bcs: Vec<(usize, f64)> = dirichlet_dofs(&q2, &BoundaryTag::ALL)
            .iter()
            .flat_map(|&(d, _)| [(d, 0.0), (d + n, 0.0)])
            .collect();
        sys.apply_dirichlet(&bcs).unwrap();
        let ones = vec![1.0; q1.n_dofs];
        let mut bt1 = vec![0.0; 2 * n];
        sys.b.spmv_transpose_into(&ones, &mut bt1);
        assert!(norm_inf(&bt1) <= 1e-12);
    }

    #[test]
    fn divergence_of_interpolated_solenoidal_field_decays() {
        // interpolation error only: || B u_I ||_inf = O(h^2)
        let pi = std::f64::consts::PI;
        let mut norms = Vec::new();
        for n in [4usize, 8, 16] {
            let (mesh, q2, q1, quad) = setup(n);
            let ux = q2.interpolate(FieldRole::VelocityX, |x, _| (pi * x).sin());
            let uz = q2.interpolate(FieldRole::VelocityZ, |x, z| -pi * z * (pi * x).cos());
            let b = divergence_matrix(&mesh, &q2, &q1, &quad);
            let mut stacked = ux.values.clone();
            stacked.extend_from_slice(&uz.values);
            let div = b.spmv(&stacked).unwrap();
            norms.push(norm_inf(&div));
        }
        assert!(norms[1] < 0.5 * norms[0]);
        assert!(norms[2] < 0.5 * norms[1]);
    }
}
