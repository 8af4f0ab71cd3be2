//! Postprocessing: Nusselt numbers on tagged boundaries, midline probes,
//! L2 errors against analytic fields, and convergence rates.
//!
//! The local Nusselt number is the outward-normal temperature gradient
//! evaluated from the finite element gradient on the boundary; with the
//! conduction profile it is +1 on the heated wall.

use crate::dofs::{DofMap, FieldVector};
use crate::element::{gauss_1d, QuadratureRule};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Local Nusselt profile along one boundary plus its integrated average.
#[derive(Clone, Debug)]
pub struct NusseltProfile {
    pub boundary: BoundaryTag,
    /// (arclength coordinate, local Nu), ordered by coordinate.
    pub samples: Vec<(f64, f64)>,
    pub average: f64,
}

fn outward_normal(tag: BoundaryTag) -> (f64, f64) {
    match tag {
        BoundaryTag::Bottom => (0.0, -1.0),
        BoundaryTag::Top => (0.0, 1.0),
        BoundaryTag::Left => (-1.0, 0.0),
        BoundaryTag::Right => (1.0, 0.0),
    }
}

fn boundary_point(tag: BoundaryTag, s: f64) -> (f64, f64) {
    match tag {
        BoundaryTag::Bottom => (s, 0.0),
        BoundaryTag::Top => (s, 1.0),
        BoundaryTag::Left => (0.0, s),
        BoundaryTag::Right => (1.0, s),
    }
}

/// Sampled local Nu = n . grad(theta) and its boundary average computed
/// with a 4-point Gauss rule per boundary face.
pub fn local_nusselt(
    theta: &FieldVector,
    space: &DofMap,
    mesh: &Mesh,
    boundary: BoundaryTag,
    n_samples: usize,
) -> Result<NusseltProfile> {
    if theta.len() != space.n_dofs {
        return Err(Error::DimensionMismatch {
            expected: space.n_dofs,
            found: theta.len(),
            context: "nusselt field",
        });
    }
    let normal = outward_normal(boundary);
    let nu_at = |s: f64| {
        let (x, z) = boundary_point(boundary, s);
        let g = space.eval_gradient(mesh, &theta.values, x, z);
        normal.0 * g.0 + normal.1 * g.1
    };

    let n_samples = n_samples.max(2);
    let samples: Vec<(f64, f64)> = (0..n_samples)
        .map(|i| {
            let s = i as f64 / (n_samples - 1) as f64;
            (s, nu_at(s))
        })
        .collect();

    let (gp, gw) = gauss_1d(4)?;
    let h = mesh.cell_size_h;
    let mut average = 0.0;
    for face in 0..mesh.n_cells_per_side {
        let s0 = face as f64 / mesh.n_cells_per_side as f64;
        for (&t, &w) in gp.iter().zip(&gw) {
            average += w * h * nu_at(s0 + t * h);
        }
    }
    Ok(NusseltProfile {
        boundary,
        samples,
        average,
    })
}

/// A probe line across the domain.
#[derive(Clone, Copy, Debug)]
pub enum ProbeLine {
    HorizontalAtZ(f64),
    VerticalAtX(f64),
}

/// Field values at uniformly spaced points along a probe line, endpoints
/// included.
pub fn line_probe(
    field: &FieldVector,
    space: &DofMap,
    mesh: &Mesh,
    line: ProbeLine,
    n_samples: usize,
) -> Vec<(f64, f64)> {
    let n_samples = n_samples.max(2);
    (0..n_samples)
        .map(|i| {
            let s = i as f64 / (n_samples - 1) as f64;
            let (x, z) = match line {
                ProbeLine::HorizontalAtZ(z) => (s, z),
                ProbeLine::VerticalAtX(x) => (x, s),
            };
            (s, space.eval(mesh, &field.values, x, z))
        })
        .collect()
}

/// L2 norm of (field - exact) by elementwise quadrature.
pub fn l2_error(
    field: &FieldVector,
    space: &DofMap,
    mesh: &Mesh,
    exact: impl Fn(f64, f64) -> f64,
    quad: &QuadratureRule,
) -> f64 {
    let shapes: Vec<Vec<f64>> = quad
        .points
        .iter()
        .map(|&p| space.element.shape_values(p).unwrap())
        .collect();
    let det_j = mesh.cell_size_h * mesh.cell_size_h;
    let mut acc = 0.0;
    for cell in 0..mesh.n_cells() {
        let dofs = space.cell_dofs(cell);
        for (q, &w) in quad.weights.iter().enumerate() {
            let mp = crate::element::map_to_physical(mesh, cell, quad.points[q]);
            let mut fe = 0.0;
            for (a, &g) in dofs.iter().enumerate() {
                fe += field.values[g] * shapes[q][a];
            }
            let diff = fe - exact(mp.x, mp.z);
            acc += w * det_j * diff * diff;
        }
    }
    acc.sqrt()
}

/// Observed rates log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for consecutive
/// refinement levels.
pub fn convergence_rate(errors: &[f64], mesh_sizes: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 || errors.len() != mesh_sizes.len() {
        return Err(Error::InvalidArgument(
            "need at least two matching error/mesh-size entries".into(),
        ));
    }
    if errors.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument(
            "errors must be positive to take rates".into(),
        ));
    }
    if mesh_sizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "mesh sizes must strictly decrease".into(),
        ));
    }
    Ok(errors
        .windows(2)
        .zip(mesh_sizes.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::{build_dof_map, FieldRole};
    use crate::element::gauss_rule;
    use crate::mesh::build_unit_square;

    #[test]
    fn conduction_profile_has_unit_nusselt() {
        let mesh = build_unit_square(8).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let theta = space.interpolate(FieldRole::Temperature, |_, z| 1.0 - z);
        let profile = local_nusselt(&theta, &space, &mesh, BoundaryTag::Bottom, 11).unwrap();
        assert!((profile.average - 1.0).abs() <= 1e-12);
        for &(_, nu) in &profile.samples {
            assert!((nu - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rotated_conduction_profile_on_left_wall() {
        let mesh = build_unit_square(8).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let theta = space.interpolate(FieldRole::Temperature, |x, _| 1.0 - x);
        let profile = local_nusselt(&theta, &space, &mesh, BoundaryTag::Left, 11).unwrap();
        assert!((profile.average - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn constant_field_probes_constant() {
        let mesh = build_unit_square(4).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let field = space.interpolate(FieldRole::Temperature, |_, _| 2.5);
        for line in [ProbeLine::HorizontalAtZ(0.5), ProbeLine::VerticalAtX(0.25)] {
            for (_, v) in line_probe(&field, &space, &mesh, line, 21) {
                assert!((v - 2.5).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn probe_at_node_returns_nodal_coefficient() {
        let mesh = build_unit_square(4).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let field = space.interpolate(FieldRole::Temperature, |x, z| (1.3 * x - 0.4 * z).cos());
        // 9 samples on n=4 Q2 hits the nodes exactly
        let probes = line_probe(&field, &space, &mesh, ProbeLine::HorizontalAtZ(0.5), 9);
        for (s, v) in probes {
            let dof = space
                .dof_coords
                .iter()
                .position(|&(x, z)| x == s && z == 0.5)
                .unwrap();
            assert!((v - field.values[dof]).abs() <= 1e-13);
        }
    }

    #[test]
    fn l2_error_of_member_is_zero() {
        let mesh = build_unit_square(3).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let field = space.interpolate(FieldRole::Temperature, |x, z| x * z + 0.5 * x * x);
        let quad = gauss_rule(6).unwrap();
        let err = l2_error(
            &field,
            &space,
            &mesh,
            |x, z| x * z + 0.5 * x * x,
            &quad,
        );
        assert!(err <= 1e-13);
    }

    #[test]
    fn l2_error_of_zero_field_against_one() {
        let mesh = build_unit_square(3).unwrap();
        let space = build_dof_map(&mesh, 2).unwrap();
        let field = FieldVector::zeros(FieldRole::Temperature, space.n_dofs);
        let quad = gauss_rule(6).unwrap();
        let err = l2_error(&field, &space, &mesh, |_, _| 1.0, &quad);
        assert!((err - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn textbook_rates() {
        let rates = convergence_rate(&[0.1, 0.025], &[0.5, 0.25]).unwrap();
        assert!((rates[0] - 2.0).abs() <= 1e-12);
        let rates = convergence_rate(&[8e-3, 1e-3], &[0.1, 0.05]).unwrap();
        assert!((rates[0] - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn rate_input_validation() {
        assert!(convergence_rate(&[0.1], &[0.5]).is_err());
        assert!(convergence_rate(&[0.1, 0.0], &[0.5, 0.25]).is_err());
        assert!(convergence_rate(&[0.1, 0.05], &[0.25, 0.5]).is_err());
    }
}
