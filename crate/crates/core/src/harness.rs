//! The epsilon sweep: direct and limit solves per scale, error quantities
//! and energies, written as a versioned CSV table.

use std::io::Write;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::direct::solve_direct;
use crate::error::Error;
use crate::fem::{h1_distance_subset, CgOptions};
use crate::graph::decompose;
use crate::limit::{brush_trace_nodes, energies, solve_limit_for_brush};
use crate::mesh::mesh_brush;
use crate::unfolding::unfold;

pub const CSV_HEADER: &str = "# brushfem-converge v1";
pub const CSV_COLUMNS: &str =
    "eps,base_h1_err,teeth_h1_err,tau_grad_x_l2,E_eps,E,abs_E_diff,E_bar,n_teeth,n_vertices,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `|u_eps - u^b|_{H1(Ω^b)}`
    pub base_err: f64,
    /// `|u_eps - ubar|_{H1(Ω^a_eps)}`
    pub teeth_err: f64,
    /// `|tau(d_x u_eps)|_{L2(W)}`
    pub tau_grad_x: f64,
    pub e_eps: f64,
    pub e_limit: f64,
    pub e_bar: f64,
    pub n_teeth: usize,
    pub n_vertices: usize,
    /// Set when the limit carries no information on the teeth.
    pub note: Option<String>,
}

impl ConvergenceRow {
    pub fn energy_gap(&self) -> f64 {
        (self.e_eps - self.e_limit).abs()
    }
}

pub type RowResult = Result<ConvergenceRow, (f64, Error)>;

/// Runs one scale of the sweep.
pub fn run_row(cfg: &RunConfig, eps: f64) -> Result<ConvergenceRow, Error> {
    let spec = cfg.build_spec(eps)?;
    let brush = mesh_brush(&spec, cfg.mesh.params())?;
    let opts = CgOptions { tol: cfg.solver.cg_tol, max_iter: None };
    let (u, _) = solve_direct(&brush, &cfg.source, opts)?;
    let decomp = decompose(&brush.reference)?;
    let trace = brush_trace_nodes(&brush);
    let xs: Vec<f64> = trace.iter().map(|&v| brush.mesh.vertices[v][0]).collect();
    let theta = cfg.density(&spec, &xs)?;
    let lim = solve_limit_for_brush(&brush, &decomp, cfg.mesh.h_y, &theta, &cfg.source, opts)?;
    let ubar = lim.reconstruct_ubar(&brush)?;

    let nb = brush.n_base_vertices;
    let (bl2, bsemi) = h1_distance_subset(&brush.mesh, 0..brush.n_base_triangles, &u.values[..nb], &lim.base.values);
    let (tl2, tsemi) = h1_distance_subset(&brush.mesh, brush.tooth_triangles(), &u.values, &ubar.values);
    let unf = unfold(&brush, &u)?;
    let en = energies(&u, &unf, &brush, &lim);
    let note = theta.is_zero().then(|| "no limit info: theta = 0".to_string());
    Ok(ConvergenceRow {
        eps,
        base_err: (bl2 * bl2 + bsemi * bsemi).sqrt(),
        teeth_err: (tl2 * tl2 + tsemi * tsemi).sqrt(),
        tau_grad_x: unf.grad_x_norm(),
        e_eps: en.e_eps,
        e_limit: en.e_limit,
        e_bar: en.e_bar,
        n_teeth: spec.n_teeth(),
        n_vertices: brush.mesh.n_vertices(),
        note,
    })
}

/// Runs every configured scale, in parallel, returning rows in the order of
/// `brush.epsilons`. A failing scale yields an error row; the others still run.
pub fn run_convergence(cfg: &RunConfig) -> Vec<RowResult> {
    cfg.brush
        .epsilons
        .par_iter()
        .map(|&eps| run_row(cfg, eps).map_err(|e| (eps, e)))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[RowResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for r in rows {
        match r {
            Ok(r) => writeln!(
                w,
                "{:e},{:.10e},{:.10e},{:.10e},{:.12e},{:.12e},{:.10e},{:.12e},{},{},{}",
                r.eps,
                r.base_err,
                r.teeth_err,
                r.tau_grad_x,
                r.e_eps,
                r.e_limit,
                r.energy_gap(),
                r.e_bar,
                r.n_teeth,
                r.n_vertices,
                r.note.as_deref().unwrap_or("ok")
            )?,
            Err((eps, e)) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                writeln!(w, "{eps:e},,,,,,,,,,error: {msg}")?
            }
        }
    }
    Ok(())
}
