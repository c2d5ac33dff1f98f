use std::sync::{Arc, OnceLock};

use brushfem::fem::{h1_distance_subset, DiscreteField};
use brushfem::geometry::{place_periodic, BaseRect, ModelTooth};
use brushfem::mesh::{mesh_brush, BrushMesh, MeshParams};
use brushfem::unfolding::{f_unfold_gap, trace_compat, unfold};
use proptest::prelude::*;

const BASE: BaseRect = BaseRect { x0: -0.25, x1: 1.25, depth: 0.5 };

fn brush() -> &'static BrushMesh {
    static B: OnceLock<BrushMesh> = OnceLock::new();
    B.get_or_init(|| {
        let spec = place_periodic(BASE, (0.0, 1.0), 0.25, 0.5, &ModelTooth::two_branch_normalized()).unwrap();
        mesh_brush(&spec, MeshParams::uniform(1.0 / 8.0)).unwrap()
    })
}

fn field(values: Vec<f64>) -> DiscreteField {
    DiscreteField::new(brush().mesh.clone(), values).unwrap()
}

fn values(seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..brush().mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_and_multiplicative(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0..3.0f64) {
        let (u, v) = (values(s1), values(s2));
        let b = brush();
        let tu = unfold(b, &field(u.clone())).unwrap();
        let tv = unfold(b, &field(v.clone())).unwrap();
        let comb: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + q).collect();
        let prod: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p * q).collect();
        let tc = unfold(b, &field(comb)).unwrap();
        let tp = unfold(b, &field(prod)).unwrap();
        for n in 0..tu.n_teeth() {
            for r in 0..tu.blocks[n].len() {
                prop_assert!((tc.blocks[n][r] - (a * tu.blocks[n][r] + tv.blocks[n][r])).abs() < 1e-14);
                prop_assert_eq!(tp.blocks[n][r], tu.blocks[n][r] * tv.blocks[n][r]);
            }
        }
    }

    #[test]
    fn norms_integrals_and_derivatives(seed in any::<u64>()) {
        let b = brush();
        let u = field(values(seed));
        let tu = unfold(b, &u).unwrap();
        let nt = b.reference.mesh.n_triangles();
        let zero = vec![0.0; u.values.len()];
        let mut total = 0.0;
        for n in 0..tu.n_teeth() {
            let tris = (0..nt).map(|t| b.tooth_triangle(n, t));
            let (l2, _) = h1_distance_subset(&b.mesh, tris, &u.values, &zero);
            prop_assert!((tu.block_l2_sq(n) - l2 * l2).abs() < 1e-12);
            total += l2 * l2;
        }
        prop_assert!((tu.l2_norm_sq() - total).abs() < 1e-12);

        let mut integral = 0.0;
        for t in b.tooth_triangles() {
            let tri = b.mesh.triangles[t];
            integral += b.mesh.area(t) * tri.iter().map(|&v| u.values[v]).sum::<f64>() / 3.0;
        }
        prop_assert!((tu.integral() - integral).abs() < 1e-12);

        let g = tu.gradients();
        let mut dx2 = 0.0;
        for n in 0..tu.n_teeth() {
            let l = b.spec.placements[n].width;
            for t in 0..nt {
                let phys = b.tooth_triangle(n, t);
                let gp = b.mesh.gradient(phys, &u.values);
                prop_assert!((g.d_y[n][t] - gp[1]).abs() < 1e-13 * (1.0 + gp[1].abs()));
                prop_assert!((g.d_xi[n][t] - l * gp[0]).abs() < 1e-13 * (1.0 + gp[0].abs()));
                dx2 += b.mesh.area(phys) * gp[0] * gp[0];
            }
        }
        prop_assert!((tu.grad_x_norm() - dx2.sqrt()).abs() < 1e-10 * (1.0 + dx2.sqrt()));
        let (dxi, _) = tu.gradient_norms();
        prop_assert!(dxi <= b.spec.c_scale * b.spec.epsilon * dx2.sqrt() * (1.0 + 1e-12));
    }
}

#[test]
fn trace_mismatch_detects_broken_gluing() {
    let b = brush();
    let u = field(values(3));
    let mut tu = unfold(b, &u).unwrap();
    assert_eq!(trace_compat(b, &u, &tu), 0.0);
    let r = b.reference.base_nodes[1];
    tu.blocks[2][r] += 0.25;
    assert!((trace_compat(b, &u, &tu) - 0.25).abs() < 1e-15);
}

#[test]
fn unfolded_source_gap() {
    let tooth = ModelTooth::cylinder(1.0);
    let gap = |f: &(dyn Fn(f64, f64) -> f64 + Sync), eps: f64| {
        let spec = place_periodic(BASE, (0.0, 1.0), eps, 0.5, &tooth).unwrap();
        let b = mesh_brush(&spec, MeshParams::uniform(1.0 / 8.0)).unwrap();
        let f = |x: f64, y: f64| f(x, y);
        f_unfold_gap(&f, &spec, &b.reference).sqrt()
    };
    assert!(gap(&|_, _| 2.0, 0.25) < 1e-14);
    let lin = |x: f64, _: f64| x;
    for eps in [0.25, 0.125, 1.0 / 16.0] {
        assert!(gap(&lin, eps / 2.0) <= 0.5 * gap(&lin, eps) + 1e-15);
    }
    let wave = |x: f64, y: f64| (3.0 * x).sin() * y.cos();
    let gaps: Vec<f64> = (3..=6).map(|k| gap(&wave, 0.5f64.powi(k))).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn solution_trace_matches() {
    let b = brush();
    let f = |_: f64, y: f64| 1.0 + y;
    let (u, _) = brushfem::direct::solve_direct(b, &f, Default::default()).unwrap();
    let tu = unfold(b, &u).unwrap();
    assert_eq!(trace_compat(b, &u, &tu), 0.0);
    assert!(Arc::ptr_eq(&tu.reference, &b.reference));
}
