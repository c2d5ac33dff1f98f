//! Conforming triangulations of the model tooth, the base rectangle and the
//! whole brush.
//!
//! The tooth is meshed once on the reference cell. Every tooth of a brush is
//! an affine image `(xi, y) -> (xbar + l xi, y)` of that mesh, glued node to
//! node onto the top side of the base mesh. This makes unfolding a pure
//! relabeling of nodal values.
//!
//! All meshes are built row by row: a region between two horizontal rows of
//! nodes that span the same pair of straight sides is triangulated by a
//! merge ("zipper") of the two rows, which always yields positively oriented
//! triangles.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::MeshError;
use crate::geometry::{BaseRect, BrushSpec, ModelTooth, SlabStructure, GEOM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Base,
    /// Tooth `n` of a brush (0-based).
    Tooth(usize),
    /// Component `Y_i^j` of the reference tooth (both indices 1-based).
    Component { stage: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Outer,
    /// Interface between the base and tooth `n` (`0` on the reference tooth).
    ToothBase(usize),
    /// Edge on the level line `y = a_i`, `0 < i < M`.
    SlabInterface(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex indices, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Tagged edges, each stored with sorted vertex indices.
    pub edge_tags: Vec<([usize; 2], EdgeTag)>,
}

fn sorted_edge(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [p, q, r] = self.corners(t);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Gradients of the three barycentric basis functions and the area.
    pub fn basis_gradients(&self, t: usize) -> ([[f64; 2]; 3], f64) {
        let [p, q, r] = self.corners(t);
        let area = self.area(t);
        let inv = 1.0 / (2.0 * area);
        (
            [
                [(q[1] - r[1]) * inv, (r[0] - q[0]) * inv],
                [(r[1] - p[1]) * inv, (p[0] - r[0]) * inv],
                [(p[1] - q[1]) * inv, (q[0] - p[0]) * inv],
            ],
            area,
        )
    }

    /// Gradient of the P1 interpolant of `values` on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> [f64; 2] {
        let (g, _) = self.basis_gradients(t);
        let tri = self.triangles[t];
        let mut out = [0.0, 0.0];
        for k in 0..3 {
            out[0] += values[tri[k]] * g[k][0];
            out[1] += values[tri[k]] * g[k][1];
        }
        out
    }

    /// Map from sorted edge to the triangles using it.
    pub fn edge_map(&self) -> HashMap<[usize; 2], Vec<usize>> {
        let mut map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(sorted_edge(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        let used = {
            let mut u = vec![false; self.n_vertices()];
            for tri in &self.triangles {
                for &v in tri {
                    u[v] = true;
                }
            }
            u.into_iter().filter(|&b| b).count()
        };
        used as i64 - self.edge_map().len() as i64 + self.n_triangles() as i64
    }

    /// Checks orientation, minimum area and conformity (no edge shared by
    /// more than two triangles, no vertex hanging inside a boundary edge).
    pub fn check_conforming(&self, min_area: f64) -> Result<(), String> {
        for t in 0..self.n_triangles() {
            let a = self.area(t);
            if a <= min_area {
                return Err(format!("triangle {t} has area {a:e}"));
            }
        }
        let map = self.edge_map();
        let mut boundary = Vec::new();
        for (e, ts) in &map {
            match ts.len() {
                1 => boundary.push(*e),
                2 => {}
                n => return Err(format!("edge {e:?} shared by {n} triangles")),
            }
        }
        let mut bverts: Vec<usize> = boundary.iter().flat_map(|e| [e[0], e[1]]).collect();
        bverts.sort_unstable();
        bverts.dedup();
        // Sort boundary vertices by x so each edge only scans its x-range.
        bverts.sort_by(|a, b| self.vertices[*a][0].total_cmp(&self.vertices[*b][0]));
        let xs: Vec<f64> = bverts.iter().map(|&v| self.vertices[v][0]).collect();
        for e in &boundary {
            let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
            let (xlo, xhi) = (p[0].min(q[0]), p[0].max(q[0]));
            let start = xs.partition_point(|&x| x < xlo - 1e-12);
            for (k, &v) in bverts.iter().enumerate().skip(start) {
                if xs[k] > xhi + 1e-12 {
                    break;
                }
                if v == e[0] || v == e[1] {
                    continue;
                }
                let r = self.vertices[v];
                let len2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
                let dot = (r[0] - p[0]) * (q[0] - p[0]) + (r[1] - p[1]) * (q[1] - p[1]);
                if cross.abs() <= 1e-12 * len2.sqrt() && dot > 0.0 && dot < len2 {
                    return Err(format!("vertex {v} hangs on boundary edge {e:?}"));
                }
            }
        }
        Ok(())
    }

    /// Triangle containing `p` (closed), by exhaustive search.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        (0..self.n_triangles()).find_map(|t| {
            let b = self.barycentric(t, p);
            (b.iter().all(|&l| l >= -1e-12)).then_some((t, b))
        })
    }

    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    fn tag_boundary(&mut self, mut special: impl FnMut([usize; 2]) -> Option<EdgeTag>) {
        let mut tags = Vec::new();
        let mut edges: Vec<([usize; 2], usize)> =
            self.edge_map().into_iter().map(|(e, ts)| (e, ts.len())).collect();
        edges.sort_unstable();
        for (e, count) in edges {
            if let Some(tag) = special(e) {
                tags.push((e, tag));
            } else if count == 1 {
                tags.push((e, EdgeTag::Outer));
            }
        }
        self.edge_tags = tags;
    }

    /// Line-oriented text export.
    ///
    /// ```text
    /// # brushfem-mesh v1
    /// vertices <n>
    /// <x> <y>                      (n lines)
    /// triangles <m>
    /// <a> <b> <c> <region>         (m lines; base | tooth:<n> | comp:<i>:<j>)
    /// edges <k>
    /// <a> <b> <tag>                (k lines; outer | tooth_base:<n> | slab:<i>)
    /// ```
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# brushfem-mesh v1")?;
        writeln!(w, "vertices {}", self.n_vertices())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        writeln!(w, "triangles {}", self.n_triangles())?;
        for (tri, reg) in self.triangles.iter().zip(&self.regions) {
            let r = match reg {
                Region::Base => "base".to_string(),
                Region::Tooth(n) => format!("tooth:{n}"),
                Region::Component { stage, index } => format!("comp:{stage}:{index}"),
            };
            writeln!(w, "{} {} {} {r}", tri[0], tri[1], tri[2])?;
        }
        writeln!(w, "edges {}", self.edge_tags.len())?;
        for (e, tag) in &self.edge_tags {
            let t = match tag {
                EdgeTag::Outer => "outer".to_string(),
                EdgeTag::ToothBase(n) => format!("tooth_base:{n}"),
                EdgeTag::SlabInterface(i) => format!("slab:{i}"),
            };
            writeln!(w, "{} {} {t}", e[0], e[1])?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, MeshError> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.starts_with('#') && !s.trim().is_empty()).unwrap_or(true));
        let err = |line: usize, msg: &str| MeshError::Parse { line: line + 1, msg: msg.to_string() };
        let mut next = |what: &str| -> Result<(usize, String), MeshError> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i, l)),
                Some((i, Err(e))) => Err(err(i, &e.to_string())),
                None => Err(err(0, &format!("unexpected end of file, expected {what}"))),
            }
        };
        fn header(line: (usize, String), key: &str) -> Result<usize, MeshError> {
            let mut it = line.1.split_whitespace();
            if it.next() != Some(key) {
                return Err(MeshError::Parse { line: line.0 + 1, msg: format!("expected '{key}'") });
            }
            it.next()
                .and_then(|s| s.parse().ok())
                .ok_or(MeshError::Parse { line: line.0 + 1, msg: "bad count".into() })
        }
        fn num<T: std::str::FromStr>(s: Option<&str>, line: usize) -> Result<T, MeshError> {
            s.and_then(|s| s.parse().ok())
                .ok_or(MeshError::Parse { line: line + 1, msg: "bad number".into() })
        }
        let mut mesh = TriMesh::default();
        let nv = header(next("vertices")?, "vertices")?;
        for _ in 0..nv {
            let (i, l) = next("vertex")?;
            let mut it = l.split_whitespace();
            mesh.vertices.push([num(it.next(), i)?, num(it.next(), i)?]);
        }
        let nt = header(next("triangles")?, "triangles")?;
        for _ in 0..nt {
            let (i, l) = next("triangle")?;
            let mut it = l.split_whitespace();
            mesh.triangles.push([num(it.next(), i)?, num(it.next(), i)?, num(it.next(), i)?]);
            let reg = it.next().unwrap_or("");
            let parts: Vec<&str> = reg.split(':').collect();
            let region = match parts.as_slice() {
                ["base"] => Region::Base,
                ["tooth", n] => Region::Tooth(num(Some(n), i)?),
                ["comp", s, j] => Region::Component { stage: num(Some(s), i)?, index: num(Some(j), i)? },
                _ => return Err(err(i, "unknown region")),
            };
            mesh.regions.push(region);
        }
        let ne = header(next("edges")?, "edges")?;
        for _ in 0..ne {
            let (i, l) = next("edge")?;
            let mut it = l.split_whitespace();
            let e = [num(it.next(), i)?, num(it.next(), i)?];
            let tag = it.next().unwrap_or("");
            let parts: Vec<&str> = tag.split(':').collect();
            let tag = match parts.as_slice() {
                ["outer"] => EdgeTag::Outer,
                ["tooth_base", n] => EdgeTag::ToothBase(num(Some(n), i)?),
                ["slab", s] => EdgeTag::SlabInterface(num(Some(s), i)?),
                _ => return Err(err(i, "unknown edge tag")),
            };
            mesh.edge_tags.push((e, tag));
        }
        Ok(mesh)
    }
}

// Triangulates the strip between two rows given as (parameter, vertex) with
// parameters increasing from 0 (left side) to 1 (right side). The bottom row
// must lie below the top row.
fn zip_rows(bottom: &[(f64, usize)], top: &[(f64, usize)], out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    let (nb, nt) = (bottom.len(), top.len());
    while i + 1 < nb || j + 1 < nt {
        let advance_bottom = if i + 1 == nb {
            false
        } else if j + 1 == nt {
            true
        } else {
            bottom[i + 1].0 <= top[j + 1].0
        };
        if advance_bottom {
            out.push([bottom[i].1, bottom[i + 1].1, top[j].1]);
            i += 1;
        } else {
            out.push([bottom[i].1, top[j + 1].1, top[j].1]);
            j += 1;
        }
    }
}

fn row_params(xs: &[f64], lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
    let w = hi - lo;
    xs.iter().map(move |&x| if w > GEOM_TOL { (x - lo) / w } else { 0.5 })
}

/// Reference tooth mesh with its slab structure.
#[derive(Debug, Clone)]
pub struct ToothMesh {
    pub mesh: TriMesh,
    pub structure: SlabStructure,
    /// Vertices on `y = 0`, sorted by `xi`.
    pub base_nodes: Vec<usize>,
    pub h_xi: f64,
    pub h_y: f64,
}

/// Triangulates the model tooth with target spacing `h` in both directions.
pub fn mesh_tooth_reference(tooth: &ModelTooth, h: f64) -> Result<ToothMesh, MeshError> {
    mesh_tooth_reference_aniso(tooth, h, h)
}

/// Triangulates the model tooth with `xi` spacing `h_xi` and row spacing
/// `h_y`. Every level line `y = a_i` is a union of mesh edges and every
/// triangle is tagged with the component `Y_i^j` it lies in.
pub fn mesh_tooth_reference_aniso(tooth: &ModelTooth, h_xi: f64, h_y: f64) -> Result<ToothMesh, MeshError> {
    if !(h_xi > 0.0 && h_y > 0.0 && h_xi.is_finite() && h_y.is_finite()) {
        return Err(MeshError::Parameter(format!("spacing ({h_xi}, {h_y}) must be positive")));
    }
    tooth.validate_shape()?;
    if h_y > tooth.delta0 + GEOM_TOL {
        return Err(MeshError::Refinement(format!(
            "row spacing {h_y} does not resolve the collar of height {}",
            tooth.delta0
        )));
    }
    let structure = tooth.slab_structure()?;
    let levels = &structure.levels;
    let m = levels.len() - 1;
    let mut mesh = TriMesh::default();

    // Node partition of each level line, shared by the slabs on both sides.
    let mut level_nodes: Vec<Vec<(f64, usize)>> = Vec::with_capacity(m + 1);
    for li in 0..=m {
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        if li >= 1 {
            intervals.extend(structure.slabs[li - 1].iter().map(|t| (t.left[1], t.right[1])));
        }
        if li < m {
            intervals.extend(structure.slabs[li].iter().map(|t| (t.left[0], t.right[0])));
        }
        let mut ends: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup_by(|a, b| (*a - *b).abs() <= GEOM_TOL);
        let mut xs = vec![ends[0]];
        for w in ends.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let covered = intervals.iter().any(|&(a, b)| a < mid && mid < b);
            if covered {
                let k = ((w[1] - w[0]) / h_xi - 1e-9).ceil().max(1.0) as usize;
                for s in 1..k {
                    xs.push(w[0] + (w[1] - w[0]) * s as f64 / k as f64);
                }
            }
            xs.push(w[1]);
        }
        let nodes = xs
            .into_iter()
            .map(|x| {
                mesh.vertices.push([x, levels[li]]);
                (x, mesh.vertices.len() - 1)
            })
            .collect();
        level_nodes.push(nodes);
    }

    for (si, comps) in structure.slabs.iter().enumerate() {
        let (lower, upper) = (levels[si], levels[si + 1]);
        let rows = ((upper - lower) / h_y - 1e-9).ceil().max(1.0) as usize;
        for (j, trap) in comps.iter().enumerate() {
            let pick = |nodes: &[(f64, usize)], lo: f64, hi: f64| -> Vec<(f64, usize)> {
                let sel: Vec<(f64, usize)> = nodes
                    .iter()
                    .copied()
                    .filter(|&(x, _)| x >= lo - GEOM_TOL && x <= hi + GEOM_TOL)
                    .collect();
                let xs: Vec<f64> = sel.iter().map(|p| p.0).collect();
                row_params(&xs, lo, hi).zip(sel.iter().map(|p| p.1)).collect()
            };
            let bottom = pick(&level_nodes[si], trap.left[0], trap.right[0]);
            let top = pick(&level_nodes[si + 1], trap.left[1], trap.right[1]);
            let (nb, nt) = (bottom.len() as f64 - 1.0, top.len() as f64 - 1.0);
            let mut prev = bottom;
            for r in 1..=rows {
                let row = if r == rows {
                    top.clone()
                } else {
                    let y = lower + (upper - lower) * r as f64 / rows as f64;
                    let segs = (nb + (nt - nb) * r as f64 / rows as f64).round().max(1.0) as usize;
                    let (l, rr) = (trap.left_at(y), trap.right_at(y));
                    (0..=segs)
                        .map(|s| {
                            let t = s as f64 / segs as f64;
                            mesh.vertices.push([l + (rr - l) * t, y]);
                            (t, mesh.vertices.len() - 1)
                        })
                        .collect()
                };
                let before = mesh.triangles.len();
                zip_rows(&prev, &row, &mut mesh.triangles);
                let added = mesh.triangles.len() - before;
                mesh.regions.extend(std::iter::repeat_n(
                    Region::Component { stage: si + 1, index: j + 1 },
                    added,
                ));
                prev = row;
            }
        }
    }

    let verts = mesh.vertices.clone();
    let level_of = |v: usize| -> Option<usize> {
        let y = verts[v][1];
        levels.iter().position(|&a| (a - y).abs() <= GEOM_TOL)
    };
    let mut base_nodes: Vec<usize> = level_nodes[0].iter().map(|p| p.1).collect();
    base_nodes.sort_by(|a, b| verts[*a][0].total_cmp(&verts[*b][0]));
    let emap = mesh.edge_map();
    mesh.tag_boundary(|e| {
        let (la, lb) = (level_of(e[0]), level_of(e[1]));
        match (la, lb) {
            (Some(0), Some(0)) => Some(EdgeTag::ToothBase(0)),
            (Some(a), Some(b)) if a == b && a < m && emap[&e].len() == 2 => Some(EdgeTag::SlabInterface(a)),
            _ => None,
        }
    });
    Ok(ToothMesh { mesh, structure, base_nodes, h_xi, h_y })
}

/// Triangulation of the base rectangle together with the ids of its top row.
#[derive(Debug, Clone)]
pub struct BaseMesh {
    pub mesh: TriMesh,
    /// Vertices on `y = 0`, sorted by `x`.
    pub top_nodes: Vec<usize>,
    /// Vertex id of each requested top point, in request order.
    pub mandatory_ids: Vec<usize>,
}

/// Meshes `rect` with spacing `h`, forcing every point of `mandatory` into
/// the top row. Uniform top points falling in (or within `h/4` of) any of the
/// `keep_clear` intervals are dropped so those intervals carry only the
/// mandatory points. Top edges inside `keep_clear[n]` are tagged
/// `ToothBase(n)`.
pub fn mesh_base(
    rect: &BaseRect,
    h: f64,
    mandatory: &[f64],
    keep_clear: &[(f64, f64)],
) -> Result<BaseMesh, MeshError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::Parameter(format!("spacing {h} must be positive")));
    }
    let width = rect.x1 - rect.x0;
    let nx = (width / h - 1e-9).ceil().max(1.0) as usize;
    let ny = (rect.depth / h - 1e-9).ceil().max(1.0) as usize;
    let dx = width / nx as f64;
    let mut mesh = TriMesh::default();

    let mut prev: Vec<(f64, usize)> = Vec::new();
    for r in 0..ny {
        let y = -rect.depth + rect.depth * r as f64 / ny as f64;
        let row: Vec<(f64, usize)> = (0..=nx)
            .map(|k| {
                let t = k as f64 / nx as f64;
                mesh.vertices.push([rect.x0 + width * t, y]);
                (t, mesh.vertices.len() - 1)
            })
            .collect();
        if r > 0 {
            zip_rows(&prev, &row, &mut mesh.triangles);
        }
        prev = row;
    }

    // Top row: mandatory points plus uniform points away from the clear zones.
    let guard = 0.25 * dx;
    let mut top: Vec<(f64, Option<usize>)> = mandatory.iter().enumerate().map(|(i, &x)| (x, Some(i))).collect();
    for k in 0..=nx {
        let x = rect.x0 + dx * k as f64;
        let endpoint = k == 0 || k == nx;
        let blocked = keep_clear.iter().any(|&(a, b)| x > a - guard && x < b + guard)
            || mandatory.iter().any(|&m| (m - x).abs() < guard);
        if endpoint || !blocked {
            top.push((x, None));
        }
    }
    top.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.is_none().cmp(&b.1.is_none())));
    let mut mandatory_ids = vec![usize::MAX; mandatory.len()];
    let mut top_row: Vec<(f64, usize)> = Vec::with_capacity(top.len());
    let mut last_x = f64::NEG_INFINITY;
    for (x, tag) in top {
        if x < rect.x0 - GEOM_TOL || x > rect.x1 + GEOM_TOL {
            return Err(MeshError::Parameter(format!("top point {x} outside the base")));
        }
        if (x - last_x).abs() > 1e-13 {
            mesh.vertices.push([x, 0.0]);
            top_row.push(((x - rect.x0) / width, mesh.vertices.len() - 1));
            last_x = x;
        }
        if let Some(i) = tag {
            mandatory_ids[i] = top_row.last().unwrap().1;
        }
    }
    zip_rows(&prev, &top_row, &mut mesh.triangles);
    mesh.regions = vec![Region::Base; mesh.triangles.len()];

    let verts = mesh.vertices.clone();
    mesh.tag_boundary(|e| {
        let (p, q) = (verts[e[0]], verts[e[1]]);
        if p[1] == 0.0 && q[1] == 0.0 {
            let mid = 0.5 * (p[0] + q[0]);
            keep_clear
                .iter()
                .position(|&(a, b)| a < mid && mid < b)
                .map(EdgeTag::ToothBase)
        } else {
            None
        }
    });
    let top_nodes = top_row.iter().map(|p| p.1).collect();
    Ok(BaseMesh { mesh, top_nodes, mandatory_ids })
}

/// Mesh resolution of a brush.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Spacing in the base rectangle.
    pub h_base: f64,
    /// `xi` spacing on the reference tooth (relative to `|omega| = 1`).
    pub h_tooth: f64,
    /// Row spacing inside the teeth.
    pub h_y: f64,
}

impl MeshParams {
    pub fn uniform(h: f64) -> Self {
        Self { h_base: h, h_tooth: h, h_y: h }
    }
}

/// Conforming triangulation of a whole brush domain.
#[derive(Debug, Clone)]
pub struct BrushMesh {
    pub mesh: Arc<TriMesh>,
    pub reference: Arc<ToothMesh>,
    pub spec: BrushSpec,
    /// Vertices `0..n_base_vertices` belong to the base rectangle.
    pub n_base_vertices: usize,
    /// Triangles `0..n_base_triangles` belong to the base rectangle.
    pub n_base_triangles: usize,
    /// Top row of the base (the trace nodes), sorted by `x`.
    pub trace_nodes: Vec<usize>,
    /// `tooth_nodes[n][r]`: brush vertex of reference vertex `r` in tooth `n`.
    pub tooth_nodes: Vec<Vec<usize>>,
}

impl BrushMesh {
    /// Brush triangle that is the image of reference triangle `t` in tooth `n`.
    pub fn tooth_triangle(&self, n: usize, t: usize) -> usize {
        self.n_base_triangles + n * self.reference.mesh.n_triangles() + t
    }

    pub fn tooth_triangles(&self) -> std::ops::Range<usize> {
        self.n_base_triangles..self.mesh.n_triangles()
    }

    /// The base rectangle part as a standalone mesh with the same vertex
    /// and triangle numbering.
    pub fn base_mesh(&self) -> TriMesh {
        let nb = self.n_base_vertices;
        TriMesh {
            vertices: self.mesh.vertices[..nb].to_vec(),
            triangles: self.mesh.triangles[..self.n_base_triangles].to_vec(),
            regions: self.mesh.regions[..self.n_base_triangles].to_vec(),
            edge_tags: self
                .mesh
                .edge_tags
                .iter()
                .filter(|(e, _)| e[0] < nb && e[1] < nb)
                .copied()
                .collect(),
        }
    }
}

/// Builds the brush mesh: base rectangle with every tooth-base node in its
/// top row, and one affine copy of the reference tooth mesh per tooth.
pub fn mesh_brush(spec: &BrushSpec, params: MeshParams) -> Result<BrushMesh, MeshError> {
    spec.validate()?;
    let reference = mesh_tooth_reference_aniso(&spec.tooth, params.h_tooth, params.h_y)?;
    mesh_brush_with_reference(spec, params.h_base, Arc::new(reference))
}

pub fn mesh_brush_with_reference(
    spec: &BrushSpec,
    h_base: f64,
    reference: Arc<ToothMesh>,
) -> Result<BrushMesh, MeshError> {
    let rmesh = &reference.mesh;
    let ref_base: Vec<f64> = reference.base_nodes.iter().map(|&v| rmesh.vertices[v][0]).collect();
    let mut mandatory = vec![spec.omega_prime.0, spec.omega_prime.1];
    for p in &spec.placements {
        mandatory.extend(ref_base.iter().map(|xi| p.center + p.width * xi));
    }
    let clear: Vec<(f64, f64)> = (0..spec.n_teeth()).map(|n| spec.tooth_base(n)).collect();
    let base = mesh_base(&spec.base, h_base, &mandatory, &clear)?;

    let mut mesh = base.mesh;
    let n_base_vertices = mesh.n_vertices();
    let n_base_triangles = mesh.n_triangles();
    let nr = ref_base.len();
    let is_base: HashMap<usize, usize> = reference.base_nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();

    let mut tooth_nodes = Vec::with_capacity(spec.n_teeth());
    for (n, p) in spec.placements.iter().enumerate() {
        let map: Vec<usize> = (0..rmesh.n_vertices())
            .map(|r| match is_base.get(&r) {
                Some(&k) => base.mandatory_ids[2 + n * nr + k],
                None => {
                    let [xi, y] = rmesh.vertices[r];
                    mesh.vertices.push([p.center + p.width * xi, y]);
                    mesh.vertices.len() - 1
                }
            })
            .collect();
        for tri in &rmesh.triangles {
            mesh.triangles.push([map[tri[0]], map[tri[1]], map[tri[2]]]);
            mesh.regions.push(Region::Tooth(n));
        }
        for (e, tag) in &rmesh.edge_tags {
            let tag = match tag {
                EdgeTag::ToothBase(_) => continue,
                other => *other,
            };
            mesh.edge_tags.push((sorted_edge(map[e[0]], map[e[1]]), tag));
        }
        tooth_nodes.push(map);
    }
    mesh.edge_tags.sort_unstable_by_key(|(e, _)| *e);

    let trace_nodes = base.top_nodes;
    Ok(BrushMesh {
        mesh: Arc::new(mesh),
        reference,
        spec: spec.clone(),
        n_base_vertices,
        n_base_triangles,
        trace_nodes,
        tooth_nodes,
    })
}
