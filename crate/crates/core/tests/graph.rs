use std::collections::VecDeque;

use brushfem::geometry::ModelTooth;
use brushfem::graph::{decompose, joins, GraphDecomposition};
use brushfem::mesh::mesh_tooth_reference_aniso;

const PX: f64 = 1.0 / 128.0;

/// Pixel components of the tooth inside the band `lo < y < hi`, each as the
/// set of pixel columns it touches on the band's bottom and top rows and its
/// pixel count.
fn raster_components(t: &ModelTooth, lo: f64, hi: f64) -> Vec<(Vec<i64>, Vec<i64>, usize)> {
    let (c0, c1) = ((-t.r1 / PX).floor() as i64, (t.r1 / PX).ceil() as i64);
    let (r0, r1) = ((lo / PX).round() as i64, (hi / PX).round() as i64);
    let inside = |c: i64, r: i64| t.contains([(c as f64 + 0.5) * PX, (r as f64 + 0.5) * PX]);
    let w = (c1 - c0) as usize;
    let mut seen = vec![false; w * (r1 - r0) as usize];
    let idx = |c: i64, r: i64| (r - r0) as usize * w + (c - c0) as usize;
    let mut out = Vec::new();
    for r in r0..r1 {
        for c in c0..c1 {
            if seen[idx(c, r)] || !inside(c, r) {
                continue;
            }
            let (mut bottom, mut top, mut count) = (Vec::new(), Vec::new(), 0);
            let mut queue = VecDeque::from([(c, r)]);
            seen[idx(c, r)] = true;
            while let Some((c, r)) = queue.pop_front() {
                count += 1;
                if r == r0 {
                    bottom.push(c);
                }
                if r == r1 - 1 {
                    top.push(c);
                }
                for (dc, dr) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (nc, nr) = (c + dc, r + dr);
                    if nc >= c0 && nc < c1 && nr >= r0 && nr < r1 && !seen[idx(nc, nr)] && inside(nc, nr) {
                        seen[idx(nc, nr)] = true;
                        queue.push_back((nc, nr));
                    }
                }
            }
            bottom.sort();
            top.sort();
            out.push((bottom, top, count));
        }
    }
    out.sort_by_key(|c| c.0.first().or(c.1.first()).copied());
    out
}

fn check_against_raster(t: &ModelTooth) -> GraphDecomposition {
    let tm = mesh_tooth_reference_aniso(t, 1.0 / 8.0, 1.0 / 8.0).unwrap();
    let d = decompose(&tm).unwrap();
    let mut raster = Vec::new();
    for i in 1..d.levels.len() {
        let comps = raster_components(t, d.levels[i - 1], d.levels[i]);
        assert_eq!(comps.len(), d.components_in(i), "stage {i}");
        for (j, c) in comps.iter().enumerate() {
            let e = d.edge(i, j + 1).unwrap();
            let area = c.2 as f64 * PX * PX;
            assert!((area - e.p.integral()).abs() < 1e-12, "stage {i} comp {}", j + 1);
        }
        raster.push(comps);
    }
    // joins oracle: touching pixel columns across each interior level
    for i in 1..d.levels.len() - 1 {
        for (j, below) in raster[i - 1].iter().enumerate() {
            for (k, above) in raster[i].iter().enumerate() {
                let touch = below.1.iter().any(|c| above.0.binary_search(c).is_ok());
                assert_eq!(joins(&d, i, j + 1, k + 1), touch, "({i},{}) ~ ({},{})", j + 1, i + 1, k + 1);
            }
        }
    }
    d
}

#[test]
fn t_shape_matches_raster() {
    let t = ModelTooth::t_shape();
    let d = check_against_raster(&t);
    assert_eq!(d.n_stages(), 2);
    assert_eq!(d.components_in(2), 1);
    let j = d.joint_above(1, 1).unwrap();
    assert_eq!(j.below, vec![1]);
    assert_eq!(j.above, vec![1]);
    assert!((d.total_weight() - t.area()).abs() < 1e-12);
}

#[test]
fn two_branch_matches_raster() {
    for t in [ModelTooth::two_branch(), ModelTooth::two_branch_normalized()] {
        let d = check_against_raster(&t);
        assert!((d.total_weight() - t.area()).abs() < 1e-12);
        // (2,2) ends at y = 2 beside the top component
        assert!(!joins(&d, 2, 2, 1));
        assert!(joins(&d, 1, 1, 1) && joins(&d, 1, 1, 2) && joins(&d, 2, 1, 1));
    }
}

#[test]
fn every_edge_chains_to_the_root() {
    for t in [ModelTooth::two_branch(), ModelTooth::t_shape(), ModelTooth::cylinder(2.0)] {
        let tm = mesh_tooth_reference_aniso(&t, 1.0 / 8.0, 1.0 / 8.0).unwrap();
        let d = decompose(&tm).unwrap();
        let mut reach = vec![vec![false]];
        reach[0][0] = true;
        for i in 2..=d.n_stages() {
            let row = (1..=d.components_in(i))
                .map(|j| (1..=d.components_in(i - 1)).any(|k| reach[i - 2][k - 1] && joins(&d, i - 1, k, j)))
                .collect();
            reach.push(row);
        }
        assert!(reach.iter().flatten().all(|&r| r));
        assert_eq!(d.components_in(1), 1);
    }
}
