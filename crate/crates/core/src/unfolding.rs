//! The unfolding operator on instanced brush meshes.
//!
//! Since tooth `n` is the image of the reference mesh under
//! `(xi, y) -> (xbar_n + l_n xi, y)`, unfolding a P1 field is a relabeling of
//! its tooth coefficients. The unfolded function lives on `W = Ω' x Y`, is
//! constant in `x` on each `omega_n` and vanishes elsewhere, so integrals over
//! `W` reduce to `sum_n l_n * (integral over Y)`.

use std::io::Write;
use std::sync::Arc;

use crate::error::UnfoldError;
use crate::fem::{quad_point, DiscreteField, QUAD_BARY};
use crate::geometry::BrushSpec;
use crate::mesh::{BrushMesh, ToothMesh, TriMesh};
use crate::source::Evaluate;

/// Unfolded P1 field: one block of reference-vertex values per tooth.
#[derive(Debug, Clone)]
pub struct UnfoldedField {
    pub spec: BrushSpec,
    pub reference: Arc<ToothMesh>,
    pub blocks: Vec<Vec<f64>>,
}

/// Piecewise-constant derivatives of an unfolded field, per tooth and
/// reference triangle.
#[derive(Debug, Clone)]
pub struct UnfoldedGradients {
    pub d_xi: Vec<Vec<f64>>,
    pub d_y: Vec<Vec<f64>>,
}

fn check_mesh(brush: &BrushMesh, u: &DiscreteField) -> Result<(), UnfoldError> {
    if u.values.len() != brush.mesh.n_vertices() {
        return Err(UnfoldError::ForeignMesh(format!(
            "{} coefficients for {} brush vertices",
            u.values.len(),
            brush.mesh.n_vertices()
        )));
    }
    if !Arc::ptr_eq(&u.mesh, &brush.mesh) && *u.mesh != *brush.mesh {
        return Err(UnfoldError::ForeignMesh("field mesh differs from the brush mesh".into()));
    }
    Ok(())
}

pub fn unfold(brush: &BrushMesh, u: &DiscreteField) -> Result<UnfoldedField, UnfoldError> {
    check_mesh(brush, u)?;
    let blocks = brush
        .tooth_nodes
        .iter()
        .map(|map| map.iter().map(|&v| u.values[v]).collect())
        .collect();
    Ok(UnfoldedField { spec: brush.spec.clone(), reference: brush.reference.clone(), blocks })
}

/// Integral of `g(values at the quadrature point)` over `Y` with the 3-point rule.
fn integrate_ref(mesh: &TriMesh, block: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.area(t);
        for b in &QUAD_BARY {
            let v = b[0] * block[tri[0]] + b[1] * block[tri[1]] + b[2] * block[tri[2]];
            s += g(v) * a / 3.0;
        }
    }
    s
}

impl UnfoldedField {
    pub fn n_teeth(&self) -> usize {
        self.blocks.len()
    }

    fn width(&self, n: usize) -> f64 {
        self.spec.placements[n].width
    }

    /// `|tau u|^2_{L2(omega_n x Y)}`.
    pub fn block_l2_sq(&self, n: usize) -> f64 {
        self.width(n) * integrate_ref(&self.reference.mesh, &self.blocks[n], |v| v * v)
    }

    /// `|tau u|^2_{L2(W)}`.
    pub fn l2_norm_sq(&self) -> f64 {
        (0..self.n_teeth()).map(|n| self.block_l2_sq(n)).sum()
    }

    /// `int_W tau u`.
    pub fn integral(&self) -> f64 {
        (0..self.n_teeth())
            .map(|n| self.width(n) * integrate_ref(&self.reference.mesh, &self.blocks[n], |v| v))
            .sum()
    }

    pub fn gradients(&self) -> UnfoldedGradients {
        let m = &self.reference.mesh;
        let mut d_xi = Vec::with_capacity(self.n_teeth());
        let mut d_y = Vec::with_capacity(self.n_teeth());
        for block in &self.blocks {
            let g: Vec<[f64; 2]> = (0..m.n_triangles()).map(|t| m.gradient(t, block)).collect();
            d_xi.push(g.iter().map(|g| g[0]).collect());
            d_y.push(g.iter().map(|g| g[1]).collect());
        }
        UnfoldedGradients { d_xi, d_y }
    }

    /// `|d_xi tau u|_{L2(W)}` and `|d_y tau u|_{L2(W)}`.
    pub fn gradient_norms(&self) -> (f64, f64) {
        let g = self.gradients();
        let m = &self.reference.mesh;
        let (mut sx, mut sy) = (0.0, 0.0);
        for n in 0..self.n_teeth() {
            for t in 0..m.n_triangles() {
                let a = self.width(n) * m.area(t);
                sx += a * g.d_xi[n][t].powi(2);
                sy += a * g.d_y[n][t].powi(2);
            }
        }
        (sx.sqrt(), sy.sqrt())
    }

    /// `|tau(d_x u)|_{L2(W)}`, i.e. the `xi`-derivative divided by `l_n`.
    pub fn grad_x_norm(&self) -> f64 {
        let g = self.gradients();
        let m = &self.reference.mesh;
        let mut s = 0.0;
        for n in 0..self.n_teeth() {
            let l = self.width(n);
            for t in 0..m.n_triangles() {
                s += l * m.area(t) * (g.d_xi[n][t] / l).powi(2);
            }
        }
        s.sqrt()
    }

    /// Line-oriented export: header, then per tooth a line
    /// `tooth <n> <xbar> <l>` followed by one value per reference vertex.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# brushfem-unfolded v1")?;
        writeln!(w, "teeth {} reference_vertices {}", self.n_teeth(), self.reference.mesh.n_vertices())?;
        for (n, block) in self.blocks.iter().enumerate() {
            let p = self.spec.placements[n];
            writeln!(w, "tooth {n} {:.17e} {:.17e}", p.center, p.width)?;
            for v in block {
                writeln!(w, "{v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Largest difference between the unfolded values at the reference base
/// nodes and the field values at the base-side nodes located at the same
/// physical points. Zero whenever teeth and base share their interface nodes.
pub fn trace_compat(brush: &BrushMesh, u: &DiscreteField, unfolded: &UnfoldedField) -> f64 {
    let rm = &brush.reference.mesh;
    let verts = &brush.mesh.vertices;
    let mut worst = 0.0f64;
    for (n, p) in brush.spec.placements.iter().enumerate() {
        for &r in &brush.reference.base_nodes {
            let x = p.center + p.width * rm.vertices[r][0];
            let k = brush.trace_nodes.partition_point(|&v| verts[v][0] < x);
            let near = [k.saturating_sub(1), k.min(brush.trace_nodes.len() - 1)]
                .into_iter()
                .map(|i| brush.trace_nodes[i])
                .min_by(|a, b| (verts[*a][0] - x).abs().total_cmp(&(verts[*b][0] - x).abs()))
                .unwrap();
            worst = worst.max((unfolded.blocks[n][r] - u.values[near]).abs());
        }
    }
    worst
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `int_W |tau(f) - f(x, y) chi(x)|^2`, with Gauss quadrature in `x` on each
/// `omega_n` and the 3-point rule on the reference mesh.
pub fn f_unfold_gap(f: &dyn Evaluate, spec: &BrushSpec, reference: &ToothMesh) -> f64 {
    let m = &reference.mesh;
    let mut s = 0.0;
    for (n, p) in spec.placements.iter().enumerate() {
        let (a, b) = spec.tooth_base(n);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for t in 0..m.n_triangles() {
            let c = m.corners(t);
            let area = m.area(t);
            for q in &QUAD_BARY {
                let [xi, y] = quad_point(&c, q);
                let tf = f.value(p.center + p.width * xi, y);
                for &(gx, gw) in &GAUSS4 {
                    let x = mid + half * gx;
                    s += gw * half * area / 3.0 * (tf - f.value(x, y)).powi(2);
                }
            }
        }
    }
    s
}
