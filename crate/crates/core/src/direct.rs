//! Neumann problem `-Δu + u = f` on the full brush.

use crate::error::FemError;
use crate::fem::{assemble, load, solve_spd, CgOptions, CgStats, DiscreteField};
use crate::mesh::BrushMesh;
use crate::source::Evaluate;

/// Discrete solution on the brush mesh. No boundary conditions are imposed,
/// so the Neumann condition holds in the natural sense.
pub fn solve_direct(
    brush: &BrushMesh,
    f: &dyn Evaluate,
    opts: CgOptions,
) -> Result<(DiscreteField, CgStats), FemError> {
    let a = assemble(&brush.mesh, None)?;
    let b = load(&brush.mesh, f, None)?;
    let (u, stats) = solve_spd(&a, &b, opts)?;
    Ok((DiscreteField::new(brush.mesh.clone(), u)?, stats))
}

/// `int f u` over the brush, with the same quadrature as the load vector.
pub fn source_pairing(brush: &BrushMesh, f: &dyn Evaluate, u: &[f64]) -> Result<f64, FemError> {
    let b = load(&brush.mesh, f, None)?;
    Ok(crate::fem::dot(&b, u))
}
