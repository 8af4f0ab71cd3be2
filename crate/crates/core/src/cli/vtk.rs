//! Legacy ASCII VTK output: the Q2 node grid as points, each cell split
//! into four bilinear quads, velocity as point vectors, temperature and
//! pressure as point scalars (pressure interpolated to the Q2 nodes).

use crate::dofs::{DofMap, FieldVector};
use crate::error::Result;
use crate::mesh::Mesh;
use std::io::Write;
use std::path::Path;

pub fn write_vtk(
    mesh: &Mesh,
    vel_space: &DofMap,
    pres_space: &DofMap,
    u_x: &FieldVector,
    u_z: &FieldVector,
    p: &FieldVector,
    theta: &FieldVector,
    path: &Path,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    let nodes = vel_space.nodes_per_side;
    let n_points = vel_space.n_dofs;

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "hydro-thermal convection fields")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(out, "POINTS {n_points} double")?;
    for &(x, z) in &vel_space.dof_coords {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", x, z, 0.0)?;
    }

    let quads_per_side = nodes - 1;
    let n_quads = quads_per_side * quads_per_side;
    writeln!(out, "CELLS {n_quads} {}", 5 * n_quads)?;
    for j in 0..quads_per_side {
        for i in 0..quads_per_side {
            let v0 = j * nodes + i;
            writeln!(out, "4 {} {} {} {}", v0, v0 + 1, v0 + nodes + 1, v0 + nodes)?;
        }
    }
    writeln!(out, "CELL_TYPES {n_quads}")?;
    for _ in 0..n_quads {
        writeln!(out, "9")?;
    }

    writeln!(out, "POINT_DATA {n_points}")?;
    writeln!(out, "VECTORS velocity double")?;
    for i in 0..n_points {
        writeln!(
            out,
            "{:.16e} {:.16e} {:.16e}",
            u_x.values[i], u_z.values[i], 0.0
        )?;
    }
    writeln!(out, "SCALARS temperature double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for i in 0..n_points {
        writeln!(out, "{:.16e}", theta.values[i])?;
    }
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for &(x, z) in &vel_space.dof_coords {
        let value = pres_space.eval(mesh, &p.values, x, z);
        writeln!(out, "{:.16e}", value)?;
    }
    out.flush()?;
    Ok(())
}
