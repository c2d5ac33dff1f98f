//! The homogenized limit problem: the base Neumann problem coupled through
//! its trace on `Ω'` to a `theta`-weighted graph problem at every point of
//! `Ω'`.
//!
//! The `x`-dependence of the graph part is discretized by P1 hats `psi_k` on
//! the trace nodes, tensorized with P1 in `y` on every edge. At a trace node
//! the root bottom unknown is the base unknown itself, and every joint is a
//! single unknown shared by the incident edge ends, so continuity holds by
//! construction. Kirchhoff conditions are natural and only checked.

use std::io::Write;
use std::sync::Arc;

use crate::density::DensityField;
use crate::error::LimitError;
use crate::fem::{assemble, dot, load, solve_spd, CgOptions, CgStats, DiscreteField, SparseSpd};
use crate::geometry::GEOM_TOL;
use crate::graph::{edge_element, flux_report, FluxReport, GraphDecomposition, GraphDofMap, GraphMesh};
use crate::mesh::{BrushMesh, TriMesh};
use crate::source::Evaluate;
use crate::unfolding::UnfoldedField;

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Placement of the unknowns of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLayout {
    pub n_base: usize,
    /// Base vertices on `Ω'`, sorted by `x`.
    pub trace_nodes: Vec<usize>,
    pub xs: Vec<f64>,
    /// Slot of each trace node among the surviving ones.
    pub slot: Vec<Option<usize>>,
    pub dofmap: GraphDofMap,
}

impl LimitLayout {
    pub fn n_dofs(&self) -> usize {
        let surviving = self.slot.iter().flatten().count();
        self.n_base + surviving * (self.dofmap.n_dofs - 1)
    }

    /// Global unknown of local graph unknown `d` at trace node `k`.
    pub fn global(&self, k: usize, d: usize) -> Option<usize> {
        let s = self.slot[k]?;
        Some(if d == 0 { self.trace_nodes[k] } else { self.n_base + s * (self.dofmap.n_dofs - 1) + d - 1 })
    }
}

/// Assembled coupled system.
#[derive(Debug, Clone)]
pub struct LimitSystem {
    pub matrix: SparseSpd,
    pub rhs: Vec<f64>,
    pub layout: LimitLayout,
}

#[derive(Debug, Clone)]
pub struct LimitSolution {
    pub base: DiscreteField,
    pub decomp: GraphDecomposition,
    pub graph_mesh: GraphMesh,
    pub layout: LimitLayout,
    pub density: DensityField,
    /// Per trace node, nodal values of every edge; `None` on the zero set.
    pub graph_fields: Vec<Option<Vec<Vec<f64>>>>,
    pub dropped: Vec<usize>,
    /// Full solution vector of the coupled system.
    pub coefficients: Vec<f64>,
    pub rhs: Vec<f64>,
    pub stats: CgStats,
}

fn check_inputs(base: &TriMesh, trace_nodes: &[usize], theta: &DensityField) -> Result<Vec<f64>, LimitError> {
    if theta.samples.len() != trace_nodes.len() {
        return Err(LimitError::Inconsistent(format!(
            "{} density samples for {} trace nodes",
            theta.samples.len(),
            trace_nodes.len()
        )));
    }
    let xs: Vec<f64> = trace_nodes.iter().map(|&v| base.vertices[v][0]).collect();
    for (k, &v) in trace_nodes.iter().enumerate() {
        if base.vertices[v][1].abs() > GEOM_TOL {
            return Err(LimitError::Inconsistent(format!("trace node {v} is not on y = 0")));
        }
        if k > 0 && xs[k] <= xs[k - 1] {
            return Err(LimitError::Inconsistent("trace nodes not sorted by x".into()));
        }
        if (theta.xs[k] - xs[k]).abs() > GEOM_TOL {
            return Err(LimitError::Inconsistent(format!("density sample {k} not at its trace node")));
        }
    }
    Ok(xs)
}

/// Density samples with everything at or below the cutoff set to zero.
pub fn effective_theta(theta: &DensityField) -> Vec<f64> {
    theta.samples.iter().map(|&t| if t > theta.theta_min { t } else { 0.0 }).collect()
}

/// Assembles the coupled system. A trace node carries graph unknowns unless
/// the interpolated density vanishes on the whole support of its hat.
pub fn assemble_limit(
    base: &TriMesh,
    trace_nodes: &[usize],
    decomp: &GraphDecomposition,
    gm: &GraphMesh,
    theta: &DensityField,
    f: &dyn Evaluate,
) -> Result<LimitSystem, LimitError> {
    let xs = check_inputs(base, trace_nodes, theta)?;
    let dofmap = GraphDofMap::new(decomp, gm);
    let eff = effective_theta(theta);
    let mut next = 0;
    let slot: Vec<Option<usize>> = (0..eff.len())
        .map(|k| {
            let live = eff[k] > 0.0 || (k > 0 && eff[k - 1] > 0.0) || eff.get(k + 1).is_some_and(|&t| t > 0.0);
            live.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let layout = LimitLayout { n_base: base.n_vertices(), trace_nodes: trace_nodes.to_vec(), xs: xs.clone(), slot, dofmap };
    let n = layout.n_dofs();

    let abase = assemble(base, None)?;
    let mut trip = Vec::with_capacity(abase.nnz());
    for i in 0..abase.dim() {
        trip.extend(abase.row(i).map(|(j, v)| (i, j, v)));
    }
    let mut rhs = load(base, f, None)?;
    rhs.resize(n, 0.0);

    // Per-edge element matrices K + M, shared by all trace nodes.
    let elems: Vec<Vec<[[f64; 2]; 2]>> = decomp
        .edges
        .iter()
        .zip(&gm.ys)
        .map(|(e, ys)| {
            ys.windows(2)
                .map(|w| {
                    let (k, m) = edge_element(&e.p, w[0], w[1]);
                    [[k[0][0] + m[0][0], k[0][1] + m[0][1]], [k[1][0] + m[1][0], k[1][1] + m[1][1]]]
                })
                .collect()
        })
        .collect();

    for k in 0..xs.len().saturating_sub(1) {
        let h = xs[k + 1] - xs[k];
        let th = [eff[k], eff[k + 1]];
        // int theta psi_a psi_b for linear theta.
        let mt = [
            [h * (3.0 * th[0] + th[1]) / 12.0, h * (th[0] + th[1]) / 12.0],
            [h * (th[0] + th[1]) / 12.0, h * (th[0] + 3.0 * th[1]) / 12.0],
        ];
        let nodes = [k, k + 1];
        for a in 0..2 {
            for b in 0..2 {
                if layout.slot[nodes[a]].is_none() || layout.slot[nodes[b]].is_none() {
                    continue;
                }
                for (e, edofs) in layout.dofmap.edge_dofs.iter().enumerate() {
                    for (s, el) in elems[e].iter().enumerate() {
                        for r in 0..2 {
                            for c in 0..2 {
                                let gi = layout.global(nodes[a], edofs[s + r]).unwrap();
                                let gj = layout.global(nodes[b], edofs[s + c]).unwrap();
                                trip.push((gi, gj, mt[a][b] * el[r][c]));
                            }
                        }
                    }
                }
            }
        }
        // Source int theta psi_a p f phi.
        for &(gx, wx) in &GAUSS3 {
            let x = xs[k] + 0.5 * h * (1.0 + gx);
            let t = (x - xs[k]) / h;
            let psi = [1.0 - t, t];
            let thx = th[0] * psi[0] + th[1] * psi[1];
            for (e, edge) in decomp.edges.iter().enumerate() {
                let ys = &gm.ys[e];
                for s in 0..ys.len() - 1 {
                    let (mid, half) = (0.5 * (ys[s] + ys[s + 1]), 0.5 * (ys[s + 1] - ys[s]));
                    for &(gy, wy) in &GAUSS2 {
                        let y = mid + half * gy;
                        let phi = [(ys[s + 1] - y) / (2.0 * half), (y - ys[s]) / (2.0 * half)];
                        let common = 0.5 * h * wx * thx * half * wy * edge.p.eval(y) * f.value(x, y);
                        for a in 0..2 {
                            for r in 0..2 {
                                if let Some(g) = layout.global(nodes[a], layout.dofmap.edge_dofs[e][s + r]) {
                                    rhs[g] += common * psi[a] * phi[r];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(LimitSystem { matrix: SparseSpd::from_triplets(n, trip), rhs, layout })
}

/// Solves the coupled limit problem on `base` with graph copies at the
/// given trace nodes.
pub fn solve_limit(
    base: Arc<TriMesh>,
    trace_nodes: &[usize],
    decomp: &GraphDecomposition,
    h_y: f64,
    theta: &DensityField,
    f: &dyn Evaluate,
    opts: CgOptions,
) -> Result<LimitSolution, LimitError> {
    let gm = GraphMesh::new(decomp, h_y);
    let sys = assemble_limit(&base, trace_nodes, decomp, &gm, theta, f)?;
    let (x, stats) = solve_spd(&sys.matrix, &sys.rhs, opts)?;
    let layout = sys.layout;
    let graph_fields = (0..trace_nodes.len())
        .map(|k| {
            layout.slot[k].map(|_| {
                layout
                    .dofmap
                    .edge_dofs
                    .iter()
                    .map(|d| d.iter().map(|&l| x[layout.global(k, l).unwrap()]).collect())
                    .collect()
            })
        })
        .collect();
    let dropped = (0..trace_nodes.len()).filter(|&k| layout.slot[k].is_none()).collect();
    let base_field = DiscreteField::new(base.clone(), x[..base.n_vertices()].to_vec())?;
    Ok(LimitSolution {
        base: base_field,
        decomp: decomp.clone(),
        graph_mesh: gm,
        layout,
        density: theta.clone(),
        graph_fields,
        dropped,
        coefficients: x,
        rhs: sys.rhs,
        stats,
    })
}

/// Trace nodes of a brush that lie on the closure of `Ω'`.
pub fn brush_trace_nodes(brush: &BrushMesh) -> Vec<usize> {
    let (lo, hi) = brush.spec.omega_prime;
    brush
        .trace_nodes
        .iter()
        .copied()
        .filter(|&v| {
            let x = brush.mesh.vertices[v][0];
            x >= lo - GEOM_TOL && x <= hi + GEOM_TOL
        })
        .collect()
}

/// Limit problem on the base part of a brush mesh, so both solutions share
/// the base triangulation.
pub fn solve_limit_for_brush(
    brush: &BrushMesh,
    decomp: &GraphDecomposition,
    h_y: f64,
    theta: &DensityField,
    f: &dyn Evaluate,
    opts: CgOptions,
) -> Result<LimitSolution, LimitError> {
    let trace = brush_trace_nodes(brush);
    solve_limit(Arc::new(brush.base_mesh()), &trace, decomp, h_y, theta, f, opts)
}

fn interp_1d(ys: &[f64], vals: &[f64], y: f64) -> f64 {
    let n = ys.len() - 1;
    let h = (ys[n] - ys[0]) / n as f64;
    let k = (((y - ys[0]) / h).floor().max(0.0) as usize).min(n - 1);
    let t = ((y - ys[k]) / (ys[k + 1] - ys[k])).clamp(0.0, 1.0);
    vals[k] + t * (vals[k + 1] - vals[k])
}

/// `int_a^b psi_k(x) dx` for the hats on `xs`.
fn hat_integrals(xs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0; xs.len()];
    for k in 0..xs.len().saturating_sub(1) {
        let (lo, hi) = (a.max(xs[k]), b.min(xs[k + 1]));
        if hi <= lo {
            continue;
        }
        let h = xs[k + 1] - xs[k];
        let t = |x: f64| (x - xs[k]) / h;
        // int (1 - t) and int t over [lo, hi]
        let (t0, t1) = (t(lo), t(hi));
        let right = 0.5 * (t0 + t1) * (hi - lo);
        out[k] += (hi - lo) - right;
        out[k + 1] += right;
    }
    out
}

impl LimitSolution {
    fn node_values(&self, k: usize) -> Option<&Vec<Vec<f64>>> {
        self.graph_fields[k].as_ref()
    }

    /// `u_i^j(x_k)(y)` on edge position `e`; zero on the vanishing set.
    pub fn graph_value(&self, k: usize, e: usize, y: f64) -> f64 {
        self.node_values(k).map_or(0.0, |v| interp_1d(&self.graph_mesh.ys[e], &v[e], y))
    }

    /// Reconstruction on the brush: at tooth nodes, the average over
    /// `omega_n` of the limit graph field of the component containing the
    /// reference point; at the other base nodes, the base field.
    pub fn reconstruct_ubar(&self, brush: &BrushMesh) -> Result<DiscreteField, LimitError> {
        let rm = &brush.reference.mesh;
        let mut tri_edge = vec![usize::MAX; rm.n_triangles()];
        for (e, edge) in self.decomp.edges.iter().enumerate() {
            for &t in &edge.triangles {
                tri_edge[t] = e;
            }
        }
        let mut vert_edges: Vec<Vec<usize>> = vec![Vec::new(); rm.n_vertices()];
        for (t, tri) in rm.triangles.iter().enumerate() {
            for &v in tri {
                if !vert_edges[v].contains(&tri_edge[t]) {
                    vert_edges[v].push(tri_edge[t]);
                }
            }
        }
        let mut out = vec![0.0; brush.mesh.n_vertices()];
        out[..self.base.values.len()].copy_from_slice(&self.base.values);
        let xs = &self.layout.xs;
        for n in 0..brush.spec.n_teeth() {
            let (a, b) = brush.spec.tooth_base(n);
            let c: Vec<f64> = hat_integrals(xs, a, b).into_iter().map(|v| v / (b - a)).collect();
            let active: Vec<usize> = (0..xs.len()).filter(|&k| c[k] != 0.0).collect();
            for (r, &v) in brush.tooth_nodes[n].iter().enumerate() {
                let y = rm.vertices[r][1];
                let mut vals = vert_edges[r]
                    .iter()
                    .map(|&e| active.iter().map(|&k| c[k] * self.graph_value(k, e, y)).sum::<f64>());
                let first = vals.next().unwrap();
                for other in vals {
                    if (other - first).abs() > 1e-10 * (1.0 + first.abs()) {
                        return Err(LimitError::Inconsistent(format!(
                            "averaged graph values disagree at reference vertex {r}: {first} vs {other}"
                        )));
                    }
                }
                out[v] = first;
            }
        }
        Ok(DiscreteField::new(brush.mesh.clone(), out)?)
    }

    fn edge_energy(&self, vals: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        for (e, edge) in self.decomp.edges.iter().enumerate() {
            let ys = &self.graph_mesh.ys[e];
            for i in 0..ys.len() - 1 {
                let (k, m) = edge_element(&edge.p, ys[i], ys[i + 1]);
                let u = [vals[e][i], vals[e][i + 1]];
                for a in 0..2 {
                    for b in 0..2 {
                        s += u[a] * (k[a][b] + m[a][b]) * u[b];
                    }
                }
            }
        }
        s
    }

    fn blend(&self, k: usize, t: f64) -> Vec<Vec<f64>> {
        let zero = |e: usize| vec![0.0; self.graph_mesh.ys[e].len()];
        (0..self.decomp.edges.len())
            .map(|e| {
                let a = self.node_values(k).map_or_else(|| zero(e), |v| v[e].clone());
                let b = self.node_values(k + 1).map_or_else(|| zero(e), |v| v[e].clone());
                a.iter().zip(&b).map(|(p, q)| (1.0 - t) * p + t * q).collect()
            })
            .collect()
    }

    /// `int w(x) sum_e int p (u_y^2 + u^2) dy dx` over the pieces
    /// `(k, a, b, w_a, w_b)` of trace interval `k`, with `w` linear on `[a, b]`.
    fn graph_energy_pieces(&self, pieces: &[(usize, f64, f64, f64, f64)]) -> f64 {
        let xs = &self.layout.xs;
        let mut s = 0.0;
        for &(k, a, b, wa, wb) in pieces {
            let h = xs[k + 1] - xs[k];
            for &(g, w) in &GAUSS2 {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * g;
                let wx = wa + (wb - wa) * (x - a) / (b - a);
                s += 0.5 * (b - a) * w * wx * self.edge_energy(&self.blend(k, (x - xs[k]) / h));
            }
        }
        s
    }

    /// `theta`-weighted graph energy.
    pub fn graph_energy(&self) -> f64 {
        let xs = &self.layout.xs;
        let th = &effective_theta(&self.density);
        let pieces: Vec<_> = (0..xs.len().saturating_sub(1)).map(|k| (k, xs[k], xs[k + 1], th[k], th[k + 1])).collect();
        self.graph_energy_pieces(&pieces)
    }

    /// Graph energy with the indicator of `omega_eps` in place of `theta`.
    pub fn graph_energy_indicator(&self, bases: &[(f64, f64)]) -> f64 {
        let xs = &self.layout.xs;
        let mut pieces = Vec::new();
        for k in 0..xs.len().saturating_sub(1) {
            for &(a, b) in bases {
                let (lo, hi) = (a.max(xs[k]), b.min(xs[k + 1]));
                if hi > lo {
                    pieces.push((k, lo, hi, 1.0, 1.0));
                }
            }
        }
        self.graph_energy_pieces(&pieces)
    }

    pub fn base_energy(&self) -> f64 {
        self.base.h1_norm_sq()
    }

    /// `E = |u^b|^2_{H1} + theta-weighted graph energy`.
    pub fn energy(&self) -> f64 {
        self.base_energy() + self.graph_energy()
    }

    /// Right-hand side paired with the solution: `int f u^b` plus the graph
    /// source term, both with the quadrature used in assembly.
    pub fn source_pairing(&self) -> f64 {
        dot(&self.rhs, &self.coefficients)
    }

    /// Flux diagnostics. Joint and free-end residuals use one-sided element
    /// derivatives; `trace` compares `theta p(0) u'_root(0)` with the base
    /// normal derivative `du^b/dy` at each surviving trace node.
    pub fn flux_residuals(&self) -> LimitFluxReport {
        let mut per_node = Vec::new();
        let mut trace = 0.0f64;
        let base = &self.base.mesh;
        let root = self.decomp.edge_id(1, 1).unwrap_or(0);
        let p0 = self.decomp.edges[root].p.eval(0.0);
        let eff = effective_theta(&self.density);
        for (k, vals) in self.graph_fields.iter().enumerate() {
            let Some(vals) = vals else { continue };
            per_node.push(flux_report(&self.decomp, &self.graph_mesh, vals));
            let ys = &self.graph_mesh.ys[root];
            let du = (vals[root][1] - vals[root][0]) / (ys[1] - ys[0]);
            let g = eff[k] * p0 * du;
            let v = self.layout.trace_nodes[k];
            let (mut sum, mut cnt) = (0.0, 0);
            for (t, tri) in base.triangles.iter().enumerate() {
                if tri.contains(&v) {
                    sum += base.gradient(t, &self.base.values)[1];
                    cnt += 1;
                }
            }
            if cnt > 0 {
                trace = trace.max((sum / cnt as f64 - g).abs());
            }
        }
        let joint = per_node.iter().map(|r| r.max_joint()).fold(0.0, f64::max);
        let top = per_node.iter().map(|r| r.top).fold(0.0, f64::max);
        LimitFluxReport { joint, top, trace, per_node }
    }

    /// Export: header, graph export, base coefficients, then for each trace
    /// node `node <k> <x> <theta>` followed by `edge <i> <j> v_0 v_1 ...`
    /// lines (absent on the vanishing set).
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# brushfem-limit v1")?;
        self.decomp.write_text(&mut w)?;
        writeln!(w, "base {}", self.base.values.len())?;
        for v in &self.base.values {
            writeln!(w, "{v:.17e}")?;
        }
        for (k, vals) in self.graph_fields.iter().enumerate() {
            writeln!(w, "node {k} {:.17e} {:.17e}", self.layout.xs[k], self.density.samples[k])?;
            if let Some(vals) = vals {
                for (e, edge) in self.decomp.edges.iter().enumerate() {
                    let s: Vec<String> = vals[e].iter().map(|v| format!("{v:.17e}")).collect();
                    writeln!(w, "edge {} {} {}", edge.stage, edge.index, s.join(" "))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitFluxReport {
    pub joint: f64,
    pub top: f64,
    pub trace: f64,
    pub per_node: Vec<FluxReport>,
}

/// Energies of the direct and limit solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    /// `|u_eps|^2_{H1(Ω_eps)}` split as base part plus unfolded tooth part.
    pub e_eps: f64,
    /// Limit energy with weight `theta`.
    pub e_limit: f64,
    /// Limit energy with weight `chi_{omega_eps}`.
    pub e_bar: f64,
}

pub fn energies(u_eps: &DiscreteField, unfolded: &UnfoldedField, brush: &BrushMesh, limit: &LimitSolution) -> Energies {
    let base = u_eps.h1_norm_sq_subset(0..brush.n_base_triangles);
    let (_, dy) = unfolded.gradient_norms();
    let teeth = unfolded.l2_norm_sq() + unfolded.grad_x_norm().powi(2) + dy * dy;
    let bases: Vec<(f64, f64)> = (0..brush.spec.n_teeth()).map(|n| brush.spec.tooth_base(n)).collect();
    let lb = limit.base_energy();
    Energies { e_eps: base + teeth, e_limit: lb + limit.graph_energy(), e_bar: lb + limit.graph_energy_indicator(&bases) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{theta_exact, DensityField};
    use crate::fem::solve_spd;
    use crate::geometry::{place_periodic, BaseRect, ModelTooth};
    use crate::graph::decompose;
    use crate::mesh::{mesh_brush, MeshParams};

    fn setup(fill: f64) -> (BrushMesh, GraphDecomposition) {
        let spec = place_periodic(BaseRect { x0: -0.25, x1: 1.25, depth: 0.5 }, (0.0, 1.0), 0.25, fill, &ModelTooth::cylinder(1.0))
            .unwrap();
        let bm = mesh_brush(&spec, MeshParams::uniform(0.125)).unwrap();
        let d = decompose(&bm.reference).unwrap();
        (bm, d)
    }

    #[test]
    fn zero_density_is_the_base_problem() {
        let (bm, d) = setup(0.5);
        let trace = brush_trace_nodes(&bm);
        let xs: Vec<f64> = trace.iter().map(|&v| bm.mesh.vertices[v][0]).collect();
        let theta = DensityField::constant(&xs, 0.0);
        let f = |x: f64, y: f64| 1.0 + y + (2.0 * x).sin();
        let lim = solve_limit_for_brush(&bm, &d, 0.125, &theta, &f, CgOptions::default()).unwrap();
        let base = bm.base_mesh();
        let (u, _) = solve_spd(&assemble(&base, None).unwrap(), &load(&base, &f, None).unwrap(), CgOptions::default()).unwrap();
        assert_eq!(lim.base.values, u);
        assert_eq!(lim.dropped.len(), trace.len());
    }

    #[test]
    fn constant_source_gives_constant_limit() {
        let (bm, d) = setup(0.5);
        let trace = brush_trace_nodes(&bm);
        let xs: Vec<f64> = trace.iter().map(|&v| bm.mesh.vertices[v][0]).collect();
        let theta = theta_exact(&bm.spec, &xs).unwrap();
        let lim = solve_limit_for_brush(&bm, &d, 0.125, &theta, &|_: f64, _: f64| 1.0, CgOptions::default()).unwrap();
        assert!(lim.coefficients.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let ubar = lim.reconstruct_ubar(&bm).unwrap();
        assert!(ubar.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let fr = lim.flux_residuals();
        assert!(fr.top < 1e-8 && fr.trace < 1e-8 && fr.joint < 1e-8);
        // E = |Ω^b| + |Y| theta |Ω'|
        assert!((lim.energy() - (0.75 + 0.5)).abs() < 1e-8);
    }

    #[test]
    fn system_is_symmetric() {
        let (bm, d) = setup(0.5);
        let trace = brush_trace_nodes(&bm);
        let xs: Vec<f64> = trace.iter().map(|&v| bm.mesh.vertices[v][0]).collect();
        let samples = xs.iter().map(|x| 0.5 * (1.0 - x)).collect();
        let theta = DensityField::sampled(xs, samples, 1e-12);
        let gm = GraphMesh::new(&d, 0.125);
        let sys = assemble_limit(&bm.base_mesh(), &trace, &d, &gm, &theta, &|_: f64, _: f64| 1.0).unwrap();
        assert!(sys.matrix.asymmetry() <= 1e-14);
        // theta vanishes only at x = 1, whose hat still sees positive density
        assert!(sys.layout.slot.iter().all(|s| s.is_some()));
        let n = sys.layout.xs.len();
        let samples = sys.layout.xs.iter().map(|&x| (0.5 - x).max(0.0)).collect();
        let tail = DensityField::sampled(sys.layout.xs.clone(), samples, 1e-12);
        let sys = assemble_limit(&bm.base_mesh(), &trace, &d, &gm, &tail, &|_: f64, _: f64| 1.0).unwrap();
        let live = sys.layout.slot.iter().filter(|s| s.is_some()).count();
        let first_zero = sys.layout.xs.iter().position(|&x| x >= 0.5).unwrap();
        assert_eq!(live, first_zero + 1);
        assert!(live < n);
    }
}
