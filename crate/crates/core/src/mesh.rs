//! Structured quadrilateral meshes of the unit square.
//!
//! Cells and vertices are numbered lexicographically with x running fastest.
//! Each cell stores its four vertex ids counterclockwise:
//! lower-left, lower-right, upper-right, upper-left.
//!
//! Local face convention (counterclockwise around the cell):
//! - face 0: bottom (z = z0)
//! - face 1: right  (x = x0 + h)
//! - face 2: top    (z = z0 + h)
//! - face 3: left   (x = x0)

use crate::error::{Error, Result};

/// One of the four edges of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// z = 0
    Bottom,
    /// z = 1
    Top,
    /// x = 0
    Left,
    /// x = 1
    Right,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Bottom,
        BoundaryTag::Top,
        BoundaryTag::Left,
        BoundaryTag::Right,
    ];
}

/// Uniform n-by-n grid of axis-aligned square cells covering [0,1]^2.
#[derive(Clone, Debug)]
pub struct Mesh {
    /// Cells per side.
    pub n_cells_per_side: usize,
    /// Vertex coordinates (x, z), lexicographic with x fastest.
    pub vertex_coords: Vec<(f64, f64)>,
    /// Per-cell vertex ids, counterclockwise from the lower-left corner.
    pub cell_vertex_ids: Vec<[usize; 4]>,
    /// Side length of every cell, 1/n.
    pub cell_size_h: f64,
}

/// Build the uniform unit-square mesh with `n` cells per side.
pub fn build_unit_square(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mesh must have at least one cell per side".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let mut vertex_coords = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // divide rather than multiply by h so boundary coordinates are
            // exactly 0 and 1
            vertex_coords.push((i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut cell_vertex_ids = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let v0 = j * (n + 1) + i;
            cell_vertex_ids.push([v0, v0 + 1, v0 + n + 2, v0 + n + 1]);
        }
    }
    Ok(Mesh {
        n_cells_per_side: n,
        vertex_coords,
        cell_vertex_ids,
        cell_size_h: h,
    })
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.n_cells_per_side * self.n_cells_per_side
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_coords.len()
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell_id: usize) -> (f64, f64) {
        let n = self.n_cells_per_side;
        let (cx, cz) = (cell_id % n, cell_id / n);
        (cx as f64 * self.cell_size_h, cz as f64 * self.cell_size_h)
    }

    /// Cell containing the point, clamping onto the grid so that points on
    /// the far boundary land in the last cell.
    pub fn cell_containing(&self, x: f64, z: f64) -> usize {
        let n = self.n_cells_per_side;
        let clamp = |t: f64| ((t * n as f64).floor() as usize).min(n - 1);
        clamp(z) * n + clamp(x)
    }

    /// Faces lying on a tagged boundary edge, ordered by increasing
    /// coordinate along that edge. Exactly `n` faces per tag.
    pub fn boundary_faces(&self, tag: BoundaryTag) -> Vec<(usize, usize)> {
        let n = self.n_cells_per_side;
        (0..n)
            .map(|k| match tag {
                BoundaryTag::Bottom => (k, 0),
                BoundaryTag::Top => ((n - 1) * n + k, 2),
                BoundaryTag::Left => (k * n, 3),
                BoundaryTag::Right => (k * n + n - 1, 1),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_mesh() {
        assert!(build_unit_square(0).is_err());
    }

    #[test]
    fn single_cell_grid() {
        let mesh = build_unit_square(1).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.cell_size_h, 1.0);
    }

    #[test]
    fn two_by_two_counts() {
        let mesh = build_unit_square(2).unwrap();
        assert_eq!(mesh.n_cells(), 4);
        assert_eq!(mesh.n_vertices(), 9);
    }

    #[test]
    fn large_grid_cell_count() {
        let mesh = build_unit_square(128).unwrap();
        assert_eq!(mesh.n_cells(), 16384);
    }

    #[test]
    fn cells_tile_the_unit_square() {
        let mesh = build_unit_square(7).unwrap();
        let area: f64 = (0..mesh.n_cells())
            .map(|_| mesh.cell_size_h * mesh.cell_size_h)
            .sum();
        assert!((area - 1.0).abs() <= 1e-14);
        for &(x, z) in &mesh.vertex_coords {
            assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&z));
        }
    }

    #[test]
    fn cell_vertices_are_counterclockwise_squares() {
        let mesh = build_unit_square(3).unwrap();
        let h = mesh.cell_size_h;
        for cell in 0..mesh.n_cells() {
            let ids = mesh.cell_vertex_ids[cell];
            let (x0, z0) = mesh.vertex_coords[ids[0]];
            assert_eq!(mesh.vertex_coords[ids[1]], (x0 + h, z0));
            assert_eq!(mesh.vertex_coords[ids[2]], (x0 + h, z0 + h));
            assert_eq!(mesh.vertex_coords[ids[3]], (x0, z0 + h));
        }
    }

    #[test]
    fn vertex_cell_incidence() {
        let mesh = build_unit_square(4).unwrap();
        let n = mesh.n_cells_per_side;
        let mut counts = vec![0usize; mesh.n_vertices()];
        for ids in &mesh.cell_vertex_ids {
            for &v in ids {
                counts[v] += 1;
            }
        }
        // interior vertices touch 4 cells, corners exactly 1
        for (v, &(x, z)) in mesh.vertex_coords.iter().enumerate() {
            let on_x = x == 0.0 || x == 1.0;
            let on_z = z == 0.0 || z == 1.0;
            let expected = match (on_x, on_z) {
                (true, true) => 1,
                (true, false) | (false, true) => 2,
                (false, false) => 4,
            };
            assert_eq!(counts[v], expected, "vertex {v} at ({x}, {z})");
        }
        assert_eq!(mesh.boundary_faces(BoundaryTag::Bottom).len(), n);
    }

    #[test]
    fn boundary_faces_per_tag() {
        let mesh = build_unit_square(4).unwrap();
        for tag in BoundaryTag::ALL {
            assert_eq!(mesh.boundary_faces(tag).len(), 4);
        }
        let mesh1 = build_unit_square(1).unwrap();
        for tag in BoundaryTag::ALL {
            assert_eq!(mesh1.boundary_faces(tag).len(), 1);
        }
        let mesh64 = build_unit_square(64).unwrap();
        let total: usize = BoundaryTag::ALL
            .iter()
            .map(|&t| mesh64.boundary_faces(t).len())
            .sum();
        assert_eq!(total, 256);
    }

    #[test]
    fn boundary_faces_ordered_along_edge() {
        let mesh = build_unit_square(5).unwrap();
        let faces = mesh.boundary_faces(BoundaryTag::Right);
        let mut last = -1.0;
        for (cell, face) in faces {
            assert_eq!(face, 1);
            let (_, z0) = mesh.cell_origin(cell);
            assert!(z0 > last);
            last = z0;
        }
    }
}
