//! P1 finite elements: weighted stiffness-plus-mass assembly, load vectors,
//! a preconditioned conjugate gradient solver and error norms.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::FemError;
use crate::mesh::TriMesh;
use crate::source::{Evaluate, SmoothField};

/// Barycentric coordinates of the 3-point interior rule (weights 1/3 each),
/// exact for quadratics.
pub const QUAD_BARY: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

pub fn quad_point(c: &[[f64; 2]; 3], b: &[f64; 3]) -> [f64; 2] {
    [
        b[0] * c[0][0] + b[1] * c[1][0] + b[2] * c[2][0],
        b[0] * c[0][1] + b[1] * c[1][1] + b[2] * c[2][1],
    ]
}

/// Symmetric sparse matrix in compressed row form (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpd {
    /// Sums duplicate entries. The result does not depend on triplet order
    /// up to the summation order of duplicates, which is fixed by a stable
    /// sort.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range {n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[row.clone()].binary_search(&j) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().with_min_len(512).enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        });
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul(y))
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weight_at(w: Option<&dyn Evaluate>, p: [f64; 2]) -> Result<f64, FemError> {
    match w {
        None => Ok(1.0),
        Some(w) => {
            let v = w.value(p[0], p[1]);
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(FemError::Weight { value: v, x: p[0], y: p[1] })
            }
        }
    }
}

/// Element matrix of `int w (grad phi_a . grad phi_b + phi_a phi_b)`.
pub fn element_matrix(mesh: &TriMesh, t: usize, w: Option<&dyn Evaluate>) -> Result<[[f64; 3]; 3], FemError> {
    let (g, area) = mesh.basis_gradients(t);
    let c = mesh.corners(t);
    let mut k = [[0.0; 3]; 3];
    for b in &QUAD_BARY {
        let wq = weight_at(w, quad_point(&c, b))? * area / 3.0;
        for a in 0..3 {
            for d in 0..3 {
                k[a][d] += wq * (g[a][0] * g[d][0] + g[a][1] * g[d][1] + b[a] * b[d]);
            }
        }
    }
    Ok(k)
}

/// Assembles over all triangles.
pub fn assemble(mesh: &TriMesh, w: Option<&dyn Evaluate>) -> Result<SparseSpd, FemError> {
    assemble_subset(mesh, 0..mesh.n_triangles(), w)
}

/// Assembles over the given triangles only; the matrix still has one row
/// per mesh vertex (rows of untouched vertices are empty).
pub fn assemble_subset(
    mesh: &TriMesh,
    triangles: impl IntoIterator<Item = usize>,
    w: Option<&dyn Evaluate>,
) -> Result<SparseSpd, FemError> {
    let tris: Vec<usize> = triangles.into_iter().collect();
    let locals: Vec<[[f64; 3]; 3]> = tris
        .par_iter()
        .map(|&t| element_matrix(mesh, t, w))
        .collect::<Result<_, _>>()?;
    let mut trip = Vec::with_capacity(9 * tris.len());
    for (&t, k) in tris.iter().zip(&locals) {
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for d in 0..3 {
                trip.push((tri[a], tri[d], k[a][d]));
            }
        }
    }
    Ok(SparseSpd::from_triplets(mesh.n_vertices(), trip))
}

/// Load vector `b_v = int w f phi_v`.
pub fn load(mesh: &TriMesh, f: &dyn Evaluate, w: Option<&dyn Evaluate>) -> Result<Vec<f64>, FemError> {
    load_subset(mesh, 0..mesh.n_triangles(), f, w)
}

pub fn load_subset(
    mesh: &TriMesh,
    triangles: impl IntoIterator<Item = usize>,
    f: &dyn Evaluate,
    w: Option<&dyn Evaluate>,
) -> Result<Vec<f64>, FemError> {
    let tris: Vec<usize> = triangles.into_iter().collect();
    let locals: Vec<[f64; 3]> = tris
        .par_iter()
        .map(|&t| {
            let c = mesh.corners(t);
            let area = mesh.area(t);
            let mut e = [0.0; 3];
            for b in &QUAD_BARY {
                let p = quad_point(&c, b);
                let v = weight_at(w, p)? * f.value(p[0], p[1]) * area / 3.0;
                for a in 0..3 {
                    e[a] += v * b[a];
                }
            }
            Ok(e)
        })
        .collect::<Result<_, FemError>>()?;
    let mut out = vec![0.0; mesh.n_vertices()];
    for (&t, e) in tris.iter().zip(&locals) {
        for (a, &v) in mesh.triangles[t].iter().enumerate() {
            out[v] += e[a];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `|b - Ax| <= tol |b|`.
    pub tol: f64,
    /// `None` means `10 n + 100`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_spd(a: &SparseSpd, b: &[f64], opts: CgOptions) -> Result<(Vec<f64>, CgStats), FemError> {
    let n = a.dim();
    if b.len() != n {
        return Err(FemError::Dimension(format!("rhs has {} entries, matrix {n}", b.len())));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(FemError::NotSpd(format!("diagonal entry {i} is {}", diag[i])));
    }
    let asym = a.asymmetry();
    if asym > 1e-14 {
        return Err(FemError::NotSpd(format!("relative asymmetry {asym:e}")));
    }
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, CgStats { iterations: 0, residual: 0.0 }));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n + 100);
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 0..max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::NotSpd(format!("p^T A p = {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= opts.tol {
            return Ok((x, CgStats { iterations: it + 1, residual: res }));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NoConvergence { iterations: max_iter, residual: res })
}

/// `(|u - v|_{L2}, |grad u - grad v|_{L2})` over the given triangles, where
/// `u` is the P1 field with nodal values `u`.
pub fn h1_error_subset(
    mesh: &TriMesh,
    triangles: impl IntoIterator<Item = usize>,
    u: &[f64],
    v: &dyn SmoothField,
) -> (f64, f64) {
    let tris: Vec<usize> = triangles.into_iter().collect();
    let (l2, semi) = tris
        .par_iter()
        .map(|&t| {
            let c = mesh.corners(t);
            let area = mesh.area(t);
            let tri = mesh.triangles[t];
            let gu = mesh.gradient(t, u);
            let mut acc = (0.0, 0.0);
            for b in &QUAD_BARY {
                let p = quad_point(&c, b);
                let uq = b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]];
                let gv = v.gradient(p[0], p[1]);
                acc.0 += (uq - v.value(p[0], p[1])).powi(2) * area / 3.0;
                acc.1 += ((gu[0] - gv[0]).powi(2) + (gu[1] - gv[1]).powi(2)) * area / 3.0;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (l2.sqrt(), semi.sqrt())
}

pub fn h1_error(mesh: &TriMesh, u: &[f64], v: &dyn SmoothField) -> (f64, f64) {
    h1_error_subset(mesh, 0..mesh.n_triangles(), u, v)
}

/// `(|u - v|_{L2}, |grad(u - v)|_{L2})` for two P1 fields on the same mesh.
pub fn h1_distance_subset(
    mesh: &TriMesh,
    triangles: impl IntoIterator<Item = usize>,
    u: &[f64],
    v: &[f64],
) -> (f64, f64) {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let zero = |_: f64, _: f64| 0.0;
    struct Zero<F>(F);
    impl<F: Fn(f64, f64) -> f64 + Sync> Evaluate for Zero<F> {
        fn value(&self, x: f64, y: f64) -> f64 {
            (self.0)(x, y)
        }
    }
    impl<F: Fn(f64, f64) -> f64 + Sync> SmoothField for Zero<F> {
        fn gradient(&self, _: f64, _: f64) -> [f64; 2] {
            [0.0, 0.0]
        }
    }
    h1_error_subset(mesh, triangles, &d, &Zero(zero))
}

/// P1 coefficient vector on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.n_vertices() {
            return Err(FemError::Dimension(format!(
                "{} coefficients for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(FemError::Dimension(format!("non-finite coefficient {v}")));
        }
        Ok(Self { mesh, values })
    }

    pub fn interpolate(mesh: Arc<TriMesh>, f: &dyn Evaluate) -> Self {
        let values = mesh.vertices.iter().map(|p| f.value(p[0], p[1])).collect();
        Self { mesh, values }
    }

    /// `int |u|^2 + |grad u|^2` over the given triangles.
    pub fn h1_norm_sq_subset(&self, triangles: impl IntoIterator<Item = usize>) -> f64 {
        let (a, b) = h1_distance_subset(&self.mesh, triangles, &self.values, &vec![0.0; self.values.len()]);
        a * a + b * b
    }

    pub fn h1_norm_sq(&self) -> f64 {
        self.h1_norm_sq_subset(0..self.mesh.n_triangles())
    }

    /// Writes the mesh followed by a `values <n>` block.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        self.mesh.write_text(&mut w)?;
        writeln!(w, "values {}", self.values.len())?;
        for v in &self.values {
            writeln!(w, "{v:.17e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BaseRect;
    use crate::mesh::{mesh_base, Region};

    fn two_triangle_square() -> TriMesh {
        TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            regions: vec![Region::Base; 2],
            edge_tags: vec![],
        }
    }

    #[test]
    fn partition_of_unity_and_constants() {
        let m = two_triangle_square();
        let b = load(&m, &|_: f64, _: f64| 1.0, None).unwrap();
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let a = assemble(&m, None).unwrap();
        let c = vec![3.0; 4];
        assert!((a.bilinear(&c, &c) - 9.0).abs() < 1e-13);
    }

    #[test]
    fn negative_weight_rejected() {
        let m = two_triangle_square();
        let w = |x: f64, _: f64| x - 0.5;
        assert!(matches!(assemble(&m, Some(&w)), Err(FemError::Weight { .. })));
    }

    #[test]
    fn identity_and_indefinite() {
        let a = SparseSpd::identity(4);
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let (x, _) = solve_spd(&a, &b, CgOptions::default()).unwrap();
        assert_eq!(x, b);
        let bad = SparseSpd::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(solve_spd(&bad, &[1.0, 0.0], CgOptions::default()), Err(FemError::NotSpd(_))));
        let neg = SparseSpd::from_triplets(1, vec![(0, 0, -1.0)]);
        assert!(matches!(solve_spd(&neg, &[1.0], CgOptions::default()), Err(FemError::NotSpd(_))));
    }

    #[test]
    fn no_convergence_reports_residual() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSpd::from_triplets(n, t);
        let r = solve_spd(&a, &vec![1.0; n], CgOptions { tol: 1e-12, max_iter: Some(3) });
        assert!(matches!(r, Err(FemError::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let f = crate::source::ScalarFn::Product(vec![
            crate::source::ScalarFn::Sin { amp: 1.0, kx: std::f64::consts::PI, ky: 0.0, phase: 0.0 },
            crate::source::ScalarFn::Sin { amp: 1.0, kx: 0.0, ky: std::f64::consts::PI, phase: 0.0 },
        ]);
        let rect = BaseRect { x0: 0.0, x1: 1.0, depth: 1.0 };
        let err = |h: f64| {
            let m = Arc::new(mesh_base(&rect, h, &[], &[]).unwrap().mesh);
            let u = DiscreteField::interpolate(m.clone(), &f);
            h1_error(&m, &u.values, &f).0
        };
        let ratio = err(1.0 / 16.0) / err(1.0 / 32.0);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
