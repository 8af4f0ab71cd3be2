//! Reference-cell machinery: Q1/Q2 tensor-product Lagrange shape functions,
//! Gauss-Legendre quadrature, and the affine map to physical cells.
//!
//! The reference cell is [0,1] x [0,1]. Node ordering:
//! - Q1: corners counterclockwise (0,0), (1,0), (1,1), (0,1).
//! - Q2: corners counterclockwise, then edge midpoints bottom, right, top,
//!   left, then the center.

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Nodal Lagrange element of order 1 or 2 on the unit reference cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceElement {
    pub order: usize,
}

/// Q2 local node -> (i, j) indices into the 1-D node set {0, 1/2, 1}.
const Q2_NODE_IJ: [(usize, usize); 9] = [
    (0, 0),
    (2, 0),
    (2, 2),
    (0, 2),
    (1, 0),
    (2, 1),
    (1, 2),
    (0, 1),
    (1, 1),
];

const Q1_NODE_IJ: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

fn lagrange_1d(order: usize, i: usize, t: f64) -> f64 {
    match order {
        1 => match i {
            0 => 1.0 - t,
            _ => t,
        },
        _ => match i {
            0 => (2.0 * t - 1.0) * (t - 1.0),
            1 => 4.0 * t * (1.0 - t),
            _ => t * (2.0 * t - 1.0),
        },
    }
}

fn lagrange_1d_deriv(order: usize, i: usize, t: f64) -> f64 {
    match order {
        1 => match i {
            0 => -1.0,
            _ => 1.0,
        },
        _ => match i {
            0 => 4.0 * t - 3.0,
            1 => 4.0 - 8.0 * t,
            _ => 4.0 * t - 1.0,
        },
    }
}

impl ReferenceElement {
    pub fn new(order: usize) -> Result<Self> {
        if order == 1 || order == 2 {
            Ok(ReferenceElement { order })
        } else {
            Err(Error::InvalidArgument(format!(
                "unsupported element order {order}"
            )))
        }
    }

    pub fn q1() -> Self {
        ReferenceElement { order: 1 }
    }

    pub fn q2() -> Self {
        ReferenceElement { order: 2 }
    }

    pub fn nodes_per_cell(&self) -> usize {
        (self.order + 1) * (self.order + 1)
    }

    /// 1-D node coordinates on [0,1]: {0,1} for Q1, {0, 1/2, 1} for Q2.
    pub fn node_coords_1d(&self) -> Vec<f64> {
        (0..=self.order).map(|i| i as f64 / self.order as f64).collect()
    }

    /// Local node -> (i, j) indices into the 1-D node set.
    pub fn node_ij(&self, local: usize) -> (usize, usize) {
        match self.order {
            1 => Q1_NODE_IJ[local],
            _ => Q2_NODE_IJ[local],
        }
    }

    /// Reference coordinates of a local node.
    pub fn node_coords(&self, local: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(local);
        let k = self.order as f64;
        (i as f64 / k, j as f64 / k)
    }

    fn check_point(p: (f64, f64)) -> Result<()> {
        let (xi, eta) = p;
        if !(0.0..=1.0).contains(&xi) || !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "point ({xi}, {eta}) outside the reference cell"
            )));
        }
        Ok(())
    }

    /// All nodal basis values at a reference point.
    pub fn shape_values(&self, p: (f64, f64)) -> Result<Vec<f64>> {
        Self::check_point(p)?;
        let (xi, eta) = p;
        Ok((0..self.nodes_per_cell())
            .map(|a| {
                let (i, j) = self.node_ij(a);
                lagrange_1d(self.order, i, xi) * lagrange_1d(self.order, j, eta)
            })
            .collect())
    }

    /// Reference-cell gradients (d/dxi, d/deta) of all nodal bases.
    pub fn shape_gradients(&self, p: (f64, f64)) -> Result<Vec<(f64, f64)>> {
        Self::check_point(p)?;
        let (xi, eta) = p;
        Ok((0..self.nodes_per_cell())
            .map(|a| {
                let (i, j) = self.node_ij(a);
                (
                    lagrange_1d_deriv(self.order, i, xi) * lagrange_1d(self.order, j, eta),
                    lagrange_1d(self.order, i, xi) * lagrange_1d_deriv(self.order, j, eta),
                )
            })
            .collect())
    }
}

/// Tensor-product quadrature rule on the unit reference cell.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre abscissae/weights on [-1,1], up to six points.
fn gauss_1d_reference(q: usize) -> (Vec<f64>, Vec<f64>) {
    match q {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 0.577_350_269_189_625_8;
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = 0.774_596_669_241_483_4;
            (
                vec![-a, 0.0, a],
                vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
            )
        }
        4 => {
            let a = 0.339_981_043_584_856_3;
            let b = 0.861_136_311_594_052_6;
            let wa = 0.652_145_154_862_546_1;
            let wb = 0.347_854_845_137_453_9;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = 0.538_469_310_105_683_1;
            let b = 0.906_179_845_938_664_0;
            let w0 = 0.568_888_888_888_888_9;
            let wa = 0.478_628_670_499_366_5;
            let wb = 0.236_926_885_056_189_1;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, w0, wa, wb])
        }
        _ => {
            let a = 0.238_619_186_083_196_9;
            let b = 0.661_209_386_466_264_5;
            let c = 0.932_469_514_203_152_1;
            let wa = 0.467_913_934_572_691_0;
            let wb = 0.360_761_573_048_138_6;
            let wc = 0.171_324_492_379_170_4;
            (vec![-c, -b, -a, a, b, c], vec![wc, wb, wa, wa, wb, wc])
        }
    }
}

/// 1-D Gauss points and weights mapped to [0,1].
pub fn gauss_1d(points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if points == 0 || points > 6 {
        return Err(Error::InvalidArgument(format!(
            "gauss rule supports 1..=6 points per direction, got {points}"
        )));
    }
    let (xs, ws) = gauss_1d_reference(points);
    Ok((
        xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        ws.iter().map(|w| 0.5 * w).collect(),
    ))
}

/// Tensor-product Gauss-Legendre rule on [0,1]^2, exact for polynomials of
/// degree 2q-1 per direction.
pub fn gauss_rule(points_per_direction: usize) -> Result<QuadratureRule> {
    let (xs, ws) = gauss_1d(points_per_direction)?;
    let mut points = Vec::with_capacity(xs.len() * xs.len());
    let mut weights = Vec::with_capacity(xs.len() * xs.len());
    for (j, &eta) in xs.iter().enumerate() {
        for (i, &xi) in xs.iter().enumerate() {
            points.push((xi, eta));
            weights.push(ws[i] * ws[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}

/// Result of mapping a reference point into a physical cell. The map is
/// affine for axis-aligned square cells, so the Jacobian is h times the
/// identity.
#[derive(Clone, Copy, Debug)]
pub struct MappedPoint {
    pub x: f64,
    pub z: f64,
    pub jacobian_det: f64,
    /// Scalar inverse Jacobian: physical gradient = reference gradient / h.
    pub inv_jacobian: f64,
}

pub fn map_to_physical(mesh: &Mesh, cell_id: usize, p: (f64, f64)) -> MappedPoint {
    let (x0, z0) = mesh.cell_origin(cell_id);
    let h = mesh.cell_size_h;
    MappedPoint {
        x: x0 + h * p.0,
        z: z0 + h * p.1,
        jacobian_det: h * h,
        inv_jacobian: 1.0 / h,
    }
}
