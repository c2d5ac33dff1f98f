//! Metric-graph structure of a nicely decomposed tooth.
//!
//! Edges are the connected pieces `Y_i^j` of the horizontal slabs
//! `a_{i-1} < y < a_i`, weighted by their section width `p_i^j(y)`. Joints are
//! the connected components of the doubled slabs `a_{i-1} < y < a_{i+1}`;
//! each joint collects the edges below it (`B`) and above it (`A`).

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use crate::error::{FemError, GraphError};
use crate::fem::{solve_spd, CgOptions, SparseSpd};
use crate::geometry::{Trapezoid, GEOM_TOL};
use crate::mesh::{Region, ToothMesh, TriMesh};

/// Continuous piecewise-linear function given by breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    /// `(y, value)` with strictly increasing `y`.
    pub breaks: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn eval(&self, y: f64) -> f64 {
        let b = &self.breaks;
        if y <= b[0].0 {
            return b[0].1;
        }
        for w in b.windows(2) {
            if y <= w[1].0 {
                let t = (y - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        b[b.len() - 1].1
    }

    pub fn integral(&self) -> f64 {
        self.breaks.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.breaks.iter().map(|b| b.1).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Slab index `i` (1-based).
    pub stage: usize,
    /// Component index `j` within the slab (1-based, left to right).
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    /// Section width; endpoint values are the one-sided limits.
    pub p: PiecewiseLinear,
    pub trapezoid: Trapezoid,
    /// Reference-mesh triangles of this component.
    pub triangles: Vec<usize>,
}

/// Joint `T_i^k` on the level line `y = a_i`, `1 <= i < M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Joint {
    pub stage: usize,
    /// 1-based number `k` of the joint at this stage.
    pub k: usize,
    /// Component indices `j` of slab `i` (edges ending here from below).
    pub below: Vec<usize>,
    /// Component indices `j` of slab `i + 1` (edges starting here).
    pub above: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GraphDecomposition {
    pub levels: Vec<f64>,
    /// Sorted by `(stage, index)`; the root `(1, 1)` comes first.
    pub edges: Vec<Edge>,
    pub joints: Vec<Joint>,
}

fn flood_components(mesh: &TriMesh, selected: &[usize]) -> Vec<Vec<usize>> {
    let in_set: HashMap<usize, usize> = selected.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let emap = mesh.edge_map();
    let mut label = vec![usize::MAX; selected.len()];
    let mut comps = Vec::new();
    for start in 0..selected.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(k) = queue.pop_front() {
            let t = selected[k];
            comp.push(t);
            let tri = mesh.triangles[t];
            for a in 0..3 {
                let (u, v) = (tri[a], tri[(a + 1) % 3]);
                let e = if u < v { [u, v] } else { [v, u] };
                for &s in &emap[&e] {
                    if let Some(&ks) = in_set.get(&s) {
                        if label[ks] == usize::MAX {
                            label[ks] = id;
                            queue.push_back(ks);
                        }
                    }
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

fn centroid(mesh: &TriMesh, t: usize) -> [f64; 2] {
    let c = mesh.corners(t);
    [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]
}

/// Builds the graph of the meshed tooth.
pub fn decompose(tm: &ToothMesh) -> Result<GraphDecomposition, GraphError> {
    let mesh = &tm.mesh;
    let levels = tm.structure.levels.clone();
    let m = levels.len() - 1;
    let centroids: Vec<[f64; 2]> = (0..mesh.n_triangles()).map(|t| centroid(mesh, t)).collect();
    let in_band = |lo: f64, hi: f64| -> Vec<usize> {
        (0..mesh.n_triangles()).filter(|&t| centroids[t][1] > lo && centroids[t][1] < hi).collect()
    };

    let mut edges = Vec::new();
    for i in 1..=m {
        let traps = &tm.structure.slabs[i - 1];
        let comps = flood_components(mesh, &in_band(levels[i - 1], levels[i]));
        if i == 1 && comps.len() != 1 {
            return Err(GraphError::NotNicelyDecomposed(format!(
                "lowest slab has {} components, expected 1",
                comps.len()
            )));
        }
        let mut by_trap: Vec<Option<Vec<usize>>> = vec![None; traps.len()];
        for comp in comps {
            let owner = |t: usize| traps.iter().position(|tr| tr.contains(centroids[t][0], centroids[t][1]));
            let j = owner(comp[0]).ok_or_else(|| {
                GraphError::NotNicelyDecomposed(format!("slab {i}: component outside the slab pieces"))
            })?;
            if comp.iter().any(|&t| owner(t) != Some(j)) {
                return Err(GraphError::NotNicelyDecomposed(format!(
                    "slab {i}: a component has a disconnected horizontal section"
                )));
            }
            by_trap[j] = Some(comp);
        }
        for (j, (tr, tris)) in traps.iter().zip(by_trap).enumerate() {
            let tris = tris.ok_or_else(|| {
                GraphError::NotNicelyDecomposed(format!("slab {i}: piece {} has no triangles", j + 1))
            })?;
            let p = PiecewiseLinear { breaks: vec![(tr.lower, tr.width_at(tr.lower)), (tr.upper, tr.width_at(tr.upper))] };
            if p.min_value() <= GEOM_TOL {
                return Err(GraphError::NotNicelyDecomposed(format!(
                    "thickness of Y_{i}^{} vanishes",
                    j + 1
                )));
            }
            edges.push(Edge { stage: i, index: j + 1, lower: tr.lower, upper: tr.upper, p, trapezoid: *tr, triangles: tris });
        }
    }

    let mut joints = Vec::new();
    for i in 1..m {
        let comps = flood_components(mesh, &in_band(levels[i - 1], levels[i + 1]));
        let mut stage_joints: Vec<Joint> = comps
            .iter()
            .map(|comp| {
                let mut below = Vec::new();
                let mut above = Vec::new();
                for e in edges.iter().filter(|e| e.stage == i || e.stage == i + 1) {
                    if e.triangles.iter().any(|t| comp.binary_search(t).is_ok()) {
                        if e.stage == i {
                            below.push(e.index);
                        } else {
                            above.push(e.index);
                        }
                    }
                }
                Joint { stage: i, k: 0, below, above }
            })
            .collect();
        stage_joints.sort_by(|a, b| (a.below.first(), a.above.first()).cmp(&(b.below.first(), b.above.first())));
        for (k, j) in stage_joints.iter_mut().enumerate() {
            j.k = k + 1;
        }
        joints.extend(stage_joints);
    }
    Ok(GraphDecomposition { levels, edges, joints })
}

impl GraphDecomposition {
    pub fn n_stages(&self) -> usize {
        self.levels.len() - 1
    }

    /// Position of edge `(i, j)` in `edges`.
    pub fn edge_id(&self, stage: usize, index: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.stage == stage && e.index == index)
    }

    pub fn edge(&self, stage: usize, index: usize) -> Option<&Edge> {
        self.edge_id(stage, index).map(|k| &self.edges[k])
    }

    pub fn components_in(&self, stage: usize) -> usize {
        self.edges.iter().filter(|e| e.stage == stage).count()
    }

    /// Joint containing the top end of edge `(i, j)`, if `i < M`.
    pub fn joint_above(&self, stage: usize, index: usize) -> Option<&Joint> {
        self.joints.iter().find(|jt| jt.stage == stage && jt.below.contains(&index))
    }

    /// Joint containing the bottom end of edge `(i, j)`, if `i > 1`.
    pub fn joint_below(&self, stage: usize, index: usize) -> Option<&Joint> {
        self.joints.iter().find(|jt| jt.stage + 1 == stage && jt.above.contains(&index))
    }

    /// `sum over edges of int p`, which equals the area of the tooth.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.p.integral()).sum()
    }

    /// Line-oriented export:
    ///
    /// ```text
    /// # brushfem-graph v1
    /// levels <a_0> ... <a_M>
    /// edge <i> <j> <y_0>:<p_0> <y_1>:<p_1> ...
    /// joint <i> <k> below <j ...> above <j ...>
    /// ```
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# brushfem-graph v1")?;
        let lv: Vec<String> = self.levels.iter().map(|a| format!("{a}")).collect();
        writeln!(w, "levels {}", lv.join(" "))?;
        for e in &self.edges {
            let b: Vec<String> = e.p.breaks.iter().map(|(y, v)| format!("{y}:{v}")).collect();
            writeln!(w, "edge {} {} {}", e.stage, e.index, b.join(" "))?;
        }
        let join = |v: &[usize]| v.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ");
        for j in &self.joints {
            writeln!(w, "joint {} {} below {} above {}", j.stage, j.k, join(&j.below), join(&j.above))?;
        }
        Ok(())
    }

    /// Table of `p` at the ends of every edge.
    pub fn write_p_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,a_lo,a_hi,p_lo,p_hi,integral")?;
        for e in &self.edges {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e.stage,
                e.index,
                e.lower,
                e.upper,
                e.p.eval(e.lower),
                e.p.eval(e.upper),
                e.p.integral()
            )?;
        }
        Ok(())
    }
}

/// Whether `Y_i^j` and `Y_{i+1}^{j'}` share a piece of `y = a_i` of positive length.
pub fn joins(decomp: &GraphDecomposition, stage: usize, j: usize, j_up: usize) -> bool {
    let (Some(lo), Some(hi)) = (decomp.edge(stage, j), decomp.edge(stage + 1, j_up)) else {
        return false;
    };
    let (a, b) = (lo.trapezoid.left[1], lo.trapezoid.right[1]);
    let (c, d) = (hi.trapezoid.left[0], hi.trapezoid.right[0]);
    b.min(d) - a.max(c) > GEOM_TOL
}

/// A one-dimensional function on one edge.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeFn {
    /// Polynomial in `y` with coefficients in increasing degree.
    Poly(Vec<f64>),
    /// Nodal values on the edge's uniform 1D mesh.
    Nodal(Vec<f64>),
}

impl EdgeFn {
    /// Value and derivative at `y` on an edge spanning `[lo, hi]`.
    pub fn eval(&self, y: f64, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            EdgeFn::Poly(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for (k, &ck) in c.iter().enumerate().rev() {
                    v = v * y + ck;
                    if k > 0 {
                        d = d * y + k as f64 * ck;
                    }
                }
                (v, d)
            }
            EdgeFn::Nodal(vals) => {
                let n = vals.len() - 1;
                let h = (hi - lo) / n as f64;
                let k = (((y - lo) / h).floor().max(0.0) as usize).min(n - 1);
                let t = (y - lo) / h - k as f64;
                (vals[k] + t * (vals[k + 1] - vals[k]), (vals[k + 1] - vals[k]) / h)
            }
        }
    }
}

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

/// `|phi|^2 = sum over edges of int p (phi^2 + phi'^2)`, integrated exactly
/// for polynomial data of moderate degree (8-point Gauss per edge piece).
pub fn graph_norm_sq(decomp: &GraphDecomposition, phi: &[EdgeFn]) -> f64 {
    const G8: [(f64, f64); 4] = [
        (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
        (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    ];
    let mut s = 0.0;
    for (e, f) in decomp.edges.iter().zip(phi) {
        let pieces: Vec<f64> = match f {
            EdgeFn::Poly(_) => vec![e.lower, e.upper],
            EdgeFn::Nodal(v) => {
                let n = v.len() - 1;
                (0..=n).map(|k| e.lower + (e.upper - e.lower) * k as f64 / n as f64).collect()
            }
        };
        for w in pieces.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for &(x, wt) in &G8 {
                for y in [mid - half * x, mid + half * x] {
                    let (v, d) = f.eval(y, e.lower, e.upper);
                    s += wt * half * e.p.eval(y) * (v * v + d * d);
                }
            }
        }
    }
    s
}

/// Largest spread of the edge end values at each joint.
pub fn check_continuity(decomp: &GraphDecomposition, phi: &[EdgeFn], tol: f64) -> Result<(), GraphError> {
    for jt in &decomp.joints {
        let mut vals = Vec::new();
        for &j in &jt.below {
            let k = decomp.edge_id(jt.stage, j).unwrap();
            let e = &decomp.edges[k];
            vals.push(phi[k].eval(e.upper, e.lower, e.upper).0);
        }
        for &j in &jt.above {
            let k = decomp.edge_id(jt.stage + 1, j).unwrap();
            let e = &decomp.edges[k];
            vals.push(phi[k].eval(e.lower, e.lower, e.upper).0);
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > tol {
            return Err(GraphError::Continuity { stage: jt.stage, joint: jt.k, spread: hi - lo });
        }
    }
    Ok(())
}

/// `phi(xi, y) = phi_i^j(y)` on `Y_i^j`: a field on the reference tooth that
/// depends on `y` only inside each component.
#[derive(Debug, Clone)]
pub struct CellField<'a> {
    pub decomp: &'a GraphDecomposition,
    pub phi: Vec<EdgeFn>,
    /// Edge position of each reference triangle.
    tri_edge: Vec<usize>,
}

/// Extends continuity-respecting edge functions to the reference cell.
pub fn extend_to_cell<'a>(
    decomp: &'a GraphDecomposition,
    mesh: &TriMesh,
    phi: Vec<EdgeFn>,
) -> Result<CellField<'a>, GraphError> {
    if phi.len() != decomp.edges.len() {
        return Err(GraphError::Fem(FemError::Dimension(format!(
            "{} edge functions for {} edges",
            phi.len(),
            decomp.edges.len()
        ))));
    }
    check_continuity(decomp, &phi, 1e-10)?;
    let mut tri_edge = vec![usize::MAX; mesh.n_triangles()];
    for (k, e) in decomp.edges.iter().enumerate() {
        for &t in &e.triangles {
            tri_edge[t] = k;
        }
    }
    Ok(CellField { decomp, phi, tri_edge })
}

// Degree-4 rule on triangles (6 points, barycentric, weights sum to 1).
const DUNAVANT4: [([f64; 3], f64); 6] = [
    ([0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070], 0.223_381_589_678_011),
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
];

impl CellField<'_> {
    /// `int_Y (phi^2 + |grad phi|^2)` by a degree-4 triangle rule.
    pub fn h1_norm_sq(&self, mesh: &TriMesh) -> f64 {
        let mut s = 0.0;
        for t in 0..mesh.n_triangles() {
            let k = self.tri_edge[t];
            let e = &self.decomp.edges[k];
            let c = mesh.corners(t);
            let area = mesh.area(t);
            for (b, w) in &DUNAVANT4 {
                let y = b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1];
                let (v, d) = self.phi[k].eval(y, e.lower, e.upper);
                s += w * area * (v * v + d * d);
            }
        }
        s
    }

    /// Values at the mesh vertices.
    pub fn nodal_values(&self, mesh: &TriMesh) -> Vec<f64> {
        let mut out = vec![f64::NAN; mesh.n_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let k = self.tri_edge[t];
            let e = &self.decomp.edges[k];
            for &v in tri {
                if out[v].is_nan() {
                    out[v] = self.phi[k].eval(mesh.vertices[v][1], e.lower, e.upper).0;
                }
            }
        }
        out
    }
}

/// Uniform 1D meshes of the edges with `ceil(length / h_y)` elements each.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMesh {
    pub ys: Vec<Vec<f64>>,
}

impl GraphMesh {
    pub fn new(decomp: &GraphDecomposition, h_y: f64) -> Self {
        let ys = decomp
            .edges
            .iter()
            .map(|e| {
                let n = ((e.upper - e.lower) / h_y - 1e-9).ceil().max(1.0) as usize;
                (0..=n).map(|k| e.lower + (e.upper - e.lower) * k as f64 / n as f64).collect()
            })
            .collect();
        Self { ys }
    }
}

/// Restricts a field on the reference mesh that is constant on the
/// horizontal sections of each component to nodal edge functions on `gm`.
pub fn restrict_to_graph(
    decomp: &GraphDecomposition,
    gm: &GraphMesh,
    mesh: &TriMesh,
    values: &[f64],
    tol: f64,
) -> Result<Vec<EdgeFn>, GraphError> {
    let mut out = Vec::with_capacity(decomp.edges.len());
    for (k, e) in decomp.edges.iter().enumerate() {
        let mut verts: Vec<usize> = e.triangles.iter().flat_map(|&t| mesh.triangles[t]).collect();
        verts.sort_unstable();
        verts.dedup();
        let mut nodal = Vec::with_capacity(gm.ys[k].len());
        for &y in &gm.ys[k] {
            let row: Vec<f64> = verts
                .iter()
                .filter(|&&v| (mesh.vertices[v][1] - y).abs() <= 1e-12)
                .map(|&v| values[v])
                .collect();
            if row.is_empty() {
                return Err(GraphError::NotXiConstant(format!(
                    "edge ({}, {}) has no mesh row at y = {y}",
                    e.stage, e.index
                )));
            }
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > tol {
                return Err(GraphError::NotXiConstant(format!(
                    "edge ({}, {}) varies by {:e} at y = {y}",
                    e.stage,
                    e.index,
                    hi - lo
                )));
            }
            nodal.push(0.5 * (lo + hi));
        }
        out.push(EdgeFn::Nodal(nodal));
    }
    Ok(out)
}

/// Numbering of the graph unknowns of one copy of the graph. The root bottom
/// node is unknown `0`; each joint is one unknown shared by all incident
/// edge ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDofMap {
    pub n_dofs: usize,
    /// Unknown of every node of every edge mesh.
    pub edge_dofs: Vec<Vec<usize>>,
}

impl GraphDofMap {
    pub fn new(decomp: &GraphDecomposition, gm: &GraphMesh) -> Self {
        let mut next = 1;
        let mut joint_dof = HashMap::new();
        for jt in &decomp.joints {
            joint_dof.insert((jt.stage, jt.k), next);
            next += 1;
        }
        let mut edge_dofs = Vec::with_capacity(decomp.edges.len());
        for (k, e) in decomp.edges.iter().enumerate() {
            let n = gm.ys[k].len();
            let mut d = vec![0; n];
            d[0] = if e.stage == 1 {
                0
            } else {
                let jt = decomp.joint_below(e.stage, e.index).expect("edge without lower joint");
                joint_dof[&(jt.stage, jt.k)]
            };
            for slot in d.iter_mut().take(n - 1).skip(1) {
                *slot = next;
                next += 1;
            }
            d[n - 1] = match decomp.joint_above(e.stage, e.index) {
                Some(jt) => joint_dof[&(jt.stage, jt.k)],
                None => {
                    next += 1;
                    next - 1
                }
            };
            edge_dofs.push(d);
        }
        Self { n_dofs: next, edge_dofs }
    }
}

/// Element matrices `int p phi_a' phi_b'` and `int p phi_a phi_b` on
/// `[y0, y1]`, exact for linear `p`.
pub fn edge_element(p: &PiecewiseLinear, y0: f64, y1: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let h = y1 - y0;
    let (mid, half) = (0.5 * (y0 + y1), 0.5 * h);
    let mut k = [[0.0; 2]; 2];
    let mut m = [[0.0; 2]; 2];
    for &(x, w) in &GAUSS2 {
        let y = mid + half * x;
        let pw = p.eval(y) * w * half;
        let phi = [(y1 - y) / h, (y - y0) / h];
        let dphi = [-1.0 / h, 1.0 / h];
        for a in 0..2 {
            for b in 0..2 {
                k[a][b] += pw * dphi[a] * dphi[b];
                m[a][b] += pw * phi[a] * phi[b];
            }
        }
    }
    (k, m)
}

/// Solves `sum int p (u'v' + uv) = sum int p f v` on one copy of the graph
/// with the root bottom value fixed to `g`. Returns nodal values per edge.
pub fn solve_graph_fixed_trace(
    decomp: &GraphDecomposition,
    gm: &GraphMesh,
    f: &dyn Fn(f64) -> f64,
    g: f64,
) -> Result<Vec<Vec<f64>>, GraphError> {
    let map = GraphDofMap::new(decomp, gm);
    let n = map.n_dofs;
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    for (k, e) in decomp.edges.iter().enumerate() {
        let ys = &gm.ys[k];
        for s in 0..ys.len() - 1 {
            let (ke, me) = edge_element(&e.p, ys[s], ys[s + 1]);
            let d = [map.edge_dofs[k][s], map.edge_dofs[k][s + 1]];
            let (mid, half) = (0.5 * (ys[s] + ys[s + 1]), 0.5 * (ys[s + 1] - ys[s]));
            for &(x, w) in &GAUSS2 {
                let y = mid + half * x;
                let phi = [(ys[s + 1] - y) / (2.0 * half), (y - ys[s]) / (2.0 * half)];
                for a in 0..2 {
                    rhs[d[a]] += w * half * e.p.eval(y) * f(y) * phi[a];
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    trip.push((d[a], d[b], ke[a][b] + me[a][b]));
                }
            }
        }
    }
    // Eliminate unknown 0 (the root trace).
    let full = SparseSpd::from_triplets(n, trip);
    let mut red = Vec::new();
    let mut b = vec![0.0; n - 1];
    for i in 1..n {
        b[i - 1] = rhs[i];
        for (j, v) in full.row(i) {
            if j == 0 {
                b[i - 1] -= v * g;
            } else {
                red.push((i - 1, j - 1, v));
            }
        }
    }
    let a = SparseSpd::from_triplets(n - 1, red);
    let (x, _) = solve_spd(&a, &b, CgOptions { tol: 1e-13, max_iter: None })?;
    let mut all = vec![g];
    all.extend(x);
    Ok(map.edge_dofs.iter().map(|d| d.iter().map(|&i| all[i]).collect()).collect())
}

/// Flux residuals of nodal edge functions: one entry per joint
/// `|sum_B p u'(a_i-) - sum_A p u'(a_i+)|`, plus the largest free-end
/// derivative `|p u'|` over edges whose top end lies in no joint.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxReport {
    pub joints: Vec<(usize, usize, f64)>,
    pub top: f64,
}

impl FluxReport {
    pub fn max_joint(&self) -> f64 {
        self.joints.iter().map(|j| j.2).fold(0.0, f64::max)
    }
}

pub fn flux_report(decomp: &GraphDecomposition, gm: &GraphMesh, vals: &[Vec<f64>]) -> FluxReport {
    let slope_lo = |k: usize| (vals[k][1] - vals[k][0]) / (gm.ys[k][1] - gm.ys[k][0]);
    let slope_hi = |k: usize| {
        let n = gm.ys[k].len() - 1;
        (vals[k][n] - vals[k][n - 1]) / (gm.ys[k][n] - gm.ys[k][n - 1])
    };
    let joints = decomp
        .joints
        .iter()
        .map(|jt| {
            let mut r = 0.0;
            for &j in &jt.below {
                let k = decomp.edge_id(jt.stage, j).unwrap();
                r += decomp.edges[k].p.eval(decomp.edges[k].upper) * slope_hi(k);
            }
            for &j in &jt.above {
                let k = decomp.edge_id(jt.stage + 1, j).unwrap();
                r -= decomp.edges[k].p.eval(decomp.edges[k].lower) * slope_lo(k);
            }
            (jt.stage, jt.k, r.abs())
        })
        .collect();
    let top = decomp
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.stage == decomp.n_stages())
        .map(|(k, e)| (e.p.eval(e.upper) * slope_hi(k)).abs())
        .fold(0.0, f64::max);
    FluxReport { joints, top }
}

/// Region tag helper: component of a reference triangle.
pub fn component_of(mesh: &TriMesh, t: usize) -> Option<(usize, usize)> {
    match mesh.regions[t] {
        Region::Component { stage, index } => Some((stage, index)),
        _ => None,
    }
}
