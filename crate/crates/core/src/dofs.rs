//! Global degree-of-freedom numbering for scalar Q1/Q2 spaces on the
//! structured mesh, Dirichlet dof identification, nodal interpolation and
//! L2 projection.
//!
//! Global dofs live on the (order*n + 1)^2 node grid and are numbered
//! lexicographically with x fastest, so numbering is reproducible run to
//! run. Velocity uses two stacked scalar maps handled by the assembly and
//! solver layers.

use crate::element::{QuadratureRule, ReferenceElement};
use crate::error::{Error, Result};
use crate::linalg::cg::cg_with;
use crate::linalg::ops::JacobiPrecond;
use crate::mesh::{BoundaryTag, Mesh};

/// What a coefficient vector represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    VelocityX,
    VelocityZ,
    Pressure,
    Temperature,
}

/// Coefficient vector over one scalar dof map.
#[derive(Clone, Debug)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub role: FieldRole,
}

impl FieldVector {
    pub fn zeros(role: FieldRole, n: usize) -> Self {
        FieldVector {
            values: vec![0.0; n],
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Scalar nodal space over the mesh.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub order: usize,
    pub n_dofs: usize,
    /// Nodes per side of the dof grid, order*n + 1.
    pub nodes_per_side: usize,
    /// Per-cell global dof ids, `nodes_per_cell` entries each, in the
    /// reference element's local ordering.
    cell_to_global: Vec<usize>,
    nodes_per_cell: usize,
    pub dof_coords: Vec<(f64, f64)>,
    pub element: ReferenceElement,
}

/// Number the scalar unknowns of a Qk space over the mesh.
pub fn build_dof_map(mesh: &Mesh, order: usize) -> Result<DofMap> {
    let element = ReferenceElement::new(order)?;
    let n = mesh.n_cells_per_side;
    let m = order * n; // node intervals per side
    let nodes_per_side = m + 1;
    let n_dofs = nodes_per_side * nodes_per_side;

    let mut dof_coords = Vec::with_capacity(n_dofs);
    for j in 0..nodes_per_side {
        for i in 0..nodes_per_side {
            dof_coords.push((i as f64 / m as f64, j as f64 / m as f64));
        }
    }

    let npc = element.nodes_per_cell();
    let mut cell_to_global = Vec::with_capacity(mesh.n_cells() * npc);
    for cz in 0..n {
        for cx in 0..n {
            for a in 0..npc {
                let (li, lj) = element.node_ij(a);
                let gi = order * cx + li;
                let gj = order * cz + lj;
                cell_to_global.push(gj * nodes_per_side + gi);
            }
        }
    }

    Ok(DofMap {
        order,
        n_dofs,
        nodes_per_side,
        cell_to_global,
        nodes_per_cell: npc,
        dof_coords,
        element,
    })
}

impl DofMap {
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let s = cell * self.nodes_per_cell;
        &self.cell_to_global[s..s + self.nodes_per_cell]
    }

    /// Nodal interpolant of a pointwise function.
    pub fn interpolate(&self, role: FieldRole, f: impl Fn(f64, f64) -> f64) -> FieldVector {
        FieldVector {
            values: self.dof_coords.iter().map(|&(x, z)| f(x, z)).collect(),
            role,
        }
    }

    /// Evaluate a coefficient vector at an arbitrary point of the domain.
    pub fn eval(&self, mesh: &Mesh, values: &[f64], x: f64, z: f64) -> f64 {
        let (cell, p) = self.locate(mesh, x, z);
        let shapes = self.element.shape_values(p).expect("point inside cell");
        self.cell_dofs(cell)
            .iter()
            .zip(&shapes)
            .map(|(&g, &s)| values[g] * s)
            .sum()
    }

    /// Evaluate the physical gradient of a coefficient vector at a point.
    pub fn eval_gradient(&self, mesh: &Mesh, values: &[f64], x: f64, z: f64) -> (f64, f64) {
        let (cell, p) = self.locate(mesh, x, z);
        let grads = self.element.shape_gradients(p).expect("point inside cell");
        let inv_h = 1.0 / mesh.cell_size_h;
        let mut g = (0.0, 0.0);
        for (&dof, &(gx, gz)) in self.cell_dofs(cell).iter().zip(&grads) {
            g.0 += values[dof] * gx * inv_h;
            g.1 += values[dof] * gz * inv_h;
        }
        g
    }

    fn locate(&self, mesh: &Mesh, x: f64, z: f64) -> (usize, (f64, f64)) {
        let cell = mesh.cell_containing(x, z);
        let (x0, z0) = mesh.cell_origin(cell);
        let h = mesh.cell_size_h;
        let clamp = |t: f64| t.clamp(0.0, 1.0);
        (cell, (clamp((x - x0) / h), clamp((z - z0) / h)))
    }
}

/// All nodal dofs whose coordinates lie on the tagged edges, each listed
/// once, in ascending dof order.
pub fn dirichlet_dofs(dofmap: &DofMap, tags: &[BoundaryTag]) -> Vec<(usize, (f64, f64))> {
    let on_edge = |tag: BoundaryTag, x: f64, z: f64| match tag {
        BoundaryTag::Bottom => z == 0.0,
        BoundaryTag::Top => z == 1.0,
        BoundaryTag::Left => x == 0.0,
        BoundaryTag::Right => x == 1.0,
    };
    dofmap
        .dof_coords
        .iter()
        .enumerate()
        .filter(|&(_, &(x, z))| tags.iter().any(|&t| on_edge(t, x, z)))
        .map(|(i, &c)| (i, c))
        .collect()
}

/// L2 projection of a pointwise function onto the space: solves the mass
/// system M c = b with conjugate gradients.
pub fn l2_project(
    dofmap: &DofMap,
    mesh: &Mesh,
    role: FieldRole,
    f: impl Fn(f64, f64) -> f64,
    quad: &QuadratureRule,
) -> Result<FieldVector> {
    let mass = crate::assembly::scalar_mass(mesh, dofmap, None, quad);
    let mut rhs = vec![0.0; dofmap.n_dofs];
    let shapes: Vec<Vec<f64>> = quad
        .points
        .iter()
        .map(|&p| dofmap.element.shape_values(p).unwrap())
        .collect();
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    for cell in 0..mesh.n_cells() {
        let dofs = dofmap.cell_dofs(cell);
        for (q, &(xi, eta)) in quad.points.iter().enumerate() {
            let m = crate::element::map_to_physical(mesh, cell, (xi, eta));
            let w = quad.weights[q] * det_j;
            let fv = f(m.x, m.z);
            for (a, &dof) in dofs.iter().enumerate() {
                rhs[dof] += w * fv * shapes[q][a];
            }
        }
    }
    let jacobi = JacobiPrecond::new(&mass);
    let out = cg_with(&mass, &rhs, &jacobi, None, 1e-13, 10 * dofmap.n_dofs, false)
        .map_err(|e| match e {
            Error::NonConvergence {
                iterations,
                residual,
                history,
                ..
            } => Error::NonConvergence {
                solver: "l2 projection mass solve",
                iterations,
                residual,
                history,
            },
            other => other,
        })?;
    Ok(FieldVector {
        values: out.x,
        role,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::gauss_rule;
    use crate::mesh::build_unit_square;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn dof_counts() {
        let mesh = build_unit_square(128).unwrap();
        let q2 = build_dof_map(&mesh, 2).unwrap();
        assert_eq!(q2.n_dofs, 66049);
        assert_eq!(2 * q2.n_dofs, 132098);
        let q1 = build_dof_map(&mesh, 1).unwrap();
        assert_eq!(q1.n_dofs, 16641);

        let tiny = build_unit_square(1).unwrap();
        assert_eq!(build_dof_map(&tiny, 2).unwrap().n_dofs, 9);
    }

    #[test]
    fn shared_interface_nodes_have_one_index() {
        let mesh = build_unit_square(2).unwrap();
        let map = build_dof_map(&mesh, 2).unwrap();
        // cell 0 right edge matches cell 1 left edge
        let c0 = map.cell_dofs(0);
        let c1 = map.cell_dofs(1);
        // local right-edge nodes of cell 0: corners 1, 2 and midpoint 5
        // local left-edge nodes of cell 1: corners 0, 3 and midpoint 7
        assert_eq!(c0[1], c1[0]);
        assert_eq!(c0[2], c1[3]);
        assert_eq!(c0[5], c1[7]);
    }

    #[test]
    fn dirichlet_counts() {
        let mesh = build_unit_square(2).unwrap();
        let q1 = build_dof_map(&mesh, 1).unwrap();
        let all = dirichlet_dofs(&q1, &BoundaryTag::ALL);
        assert_eq!(all.len(), 8);

        let q2 = build_dof_map(&mesh, 2).unwrap();
        let bottom = dirichlet_dofs(&q2, &[BoundaryTag::Bottom]);
        assert_eq!(bottom.len(), 5);
        assert!(bottom.iter().all(|&(_, (_, z))| z == 0.0));

        let mesh4 = build_unit_square(4).unwrap();
        let q2 = build_dof_map(&mesh4, 2).unwrap();
        let sides = dirichlet_dofs(&q2, &[BoundaryTag::Left, BoundaryTag::Right]);
        assert_eq!(sides.len(), 18);
    }

    #[test]
    fn interpolate_constants_and_linears() {
        let mesh = build_unit_square(3).unwrap();
        let map = build_dof_map(&mesh, 2).unwrap();
        let ones = map.interpolate(FieldRole::Temperature, |_, _| 1.0);
        assert!(ones.values.iter().all(|&v| v == 1.0));

        let lin = map.interpolate(FieldRole::Temperature, |_, z| 1.0 - z);
        for (&v, &(_, z)) in lin.values.iter().zip(&map.dof_coords) {
            assert_eq!(v, 1.0 - z);
        }
        // linear functions are reproduced exactly away from nodes
        let at = map.eval(&mesh, &lin.values, 0.3721, 0.6183);
        assert!((at - (1.0 - 0.6183)).abs() <= 1e-14);
    }

    #[test]
    fn interpolate_sin_vanishes_at_center() {
        let mesh = build_unit_square(2).unwrap();
        let map = build_dof_map(&mesh, 2).unwrap();
        let f = map.interpolate(FieldRole::Temperature, |x, z| {
            (std::f64::consts::PI * (x + z)).sin()
        });
        let center = map
            .dof_coords
            .iter()
            .position(|&(x, z)| x == 0.5 && z == 0.5)
            .unwrap();
        assert!(f.values[center].abs() <= 1e-15);
    }

    #[test]
    fn interpolation_reproduces_space_members() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let mesh = build_unit_square(3).unwrap();
        for order in [1usize, 2] {
            let map = build_dof_map(&mesh, order).unwrap();
            let coeffs: Vec<f64> = (0..map.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let as_fn = |x: f64, z: f64| map.eval(&mesh, &coeffs, x, z);
            let redone = map.interpolate(FieldRole::Temperature, as_fn);
            for (a, b) in coeffs.iter().zip(&redone.values) {
                assert!((a - b).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn l2_projection_of_constants_and_members() {
        let mesh = build_unit_square(3).unwrap();
        let map = build_dof_map(&mesh, 2).unwrap();
        let quad = gauss_rule(4).unwrap();

        let ones = l2_project(&map, &mesh, FieldRole::Temperature, |_, _| 1.0, &quad).unwrap();
        for &v in &ones.values {
            assert!((v - 1.0).abs() <= 1e-11);
        }

        // a member of the space projects to itself (idempotence)
        let member = map.interpolate(FieldRole::Temperature, |x, _| 0.5 + 0.25 * x);
        let projected = l2_project(
            &map,
            &mesh,
            FieldRole::Temperature,
            |x, z| map.eval(&mesh, &member.values, x, z),
            &quad,
        )
        .unwrap();
        for (a, b) in member.values.iter().zip(&projected.values) {
            assert!((a - b).abs() <= 1e-11);
        }
    }

    #[test]
    fn l2_projection_preserves_mean_of_jump() {
        let mesh = build_unit_square(4).unwrap();
        let map = build_dof_map(&mesh, 2).unwrap();
        let quad = gauss_rule(4).unwrap();
        let proj = l2_project(
            &map,
            &mesh,
            FieldRole::Temperature,
            |x, _| if x > 0.5 { 1.0 } else { -1.0 },
            &quad,
        )
        .unwrap();
        // mean against the constant test function: integrate the projection
        let mut mean = 0.0;
        let det_j = mesh.cell_size_h * mesh.cell_size_h;
        for cell in 0..mesh.n_cells() {
            for (q, &p) in quad.points.iter().enumerate() {
                let shapes = map.element.shape_values(p).unwrap();
                let v: f64 = map
                    .cell_dofs(cell)
                    .iter()
                    .zip(&shapes)
                    .map(|(&g, &s)| proj.values[g] * s)
                    .sum();
                mean += quad.weights[q] * det_j * v;
            }
        }
        assert!(mean.abs() <= 1e-12);
    }
}
