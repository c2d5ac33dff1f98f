//! Model tooth, brush domains and teeth placement families.
//!
//! Everything here is two dimensional: a tooth is a simple polygon in the
//! `(xi, y)` plane and teeth are obtained from it by scaling `xi` only.

use crate::error::{GeometryError, ToothAssumption};

/// Absolute tolerance used for coordinate comparisons of polygon data.
pub const GEOM_TOL: f64 = 1e-12;

/// Reference cell `Y` from which every tooth is obtained by horizontal scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTooth {
    /// Closed simple polygon, vertices in order (either orientation).
    pub polygon: Vec<[f64; 2]>,
    /// Base interval `omega = (lo, hi)`.
    pub omega: (f64, f64),
    /// Height `L`.
    pub height: f64,
    /// Horizontal bound `R1`.
    pub r1: f64,
    /// Collar height `delta0`.
    pub delta0: f64,
}

impl ModelTooth {
    /// Pure cylinder `(-1/2, 1/2) x (0, height)`.
    pub fn cylinder(height: f64) -> Self {
        Self {
            polygon: vec![[-0.5, 0.0], [0.5, 0.0], [0.5, height], [-0.5, height]],
            omega: (-0.5, 0.5),
            height,
            r1: 0.75,
            delta0: height,
        }
    }

    /// Two-branch tooth with thickness profile 2 | (1/2, (3-y)/2) | 1 on the
    /// slabs (0,1), (1,2), (2,3). Drawn with a base of width 2, so it fails
    /// the unit base normalization; see [`ModelTooth::two_branch_normalized`].
    pub fn two_branch() -> Self {
        Self {
            polygon: vec![
                [-1.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.5, 2.0],
                [0.0, 2.0],
                [0.0, 1.0],
                [-0.5, 1.0],
                [-0.5, 2.0],
                [-0.25, 2.0],
                [-0.25, 3.0],
                [-1.25, 3.0],
                [-1.25, 2.0],
                [-1.0, 2.0],
            ],
            omega: (-1.0, 1.0),
            height: 3.0,
            r1: 1.5,
            delta0: 1.0,
        }
    }

    /// [`ModelTooth::two_branch`] with `xi` halved so that `|omega| = 1`.
    pub fn two_branch_normalized() -> Self {
        let t = Self::two_branch();
        Self {
            polygon: t.polygon.iter().map(|p| [0.5 * p[0], p[1]]).collect(),
            omega: (-0.5, 0.5),
            height: 3.0,
            r1: 0.75,
            delta0: 1.0,
        }
    }

    /// Stem `(-1/2,1/2) x (0,1)` under a crossbar `(-3/2,3/2) x (1,3/2)`.
    pub fn t_shape() -> Self {
        Self {
            polygon: vec![
                [-0.5, 0.0],
                [0.5, 0.0],
                [0.5, 1.0],
                [1.5, 1.0],
                [1.5, 1.5],
                [-1.5, 1.5],
                [-1.5, 1.0],
                [-0.5, 1.0],
            ],
            omega: (-0.5, 0.5),
            height: 1.5,
            r1: 2.0,
            delta0: 1.0,
        }
    }

    pub fn base_length(&self) -> f64 {
        self.omega.1 - self.omega.0
    }

    /// Unsigned polygon area `|Y|`.
    pub fn area(&self) -> f64 {
        signed_area(&self.polygon).abs()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        point_in_polygon(&self.polygon, p)
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| (self.polygon[i], self.polygon[(i + 1) % n]))
    }

    /// Checks the standing assumptions and reports the first one that fails.
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.check(true)
    }

    /// As `validate`, without the unit base length. Enough for meshing and
    /// graph decomposition.
    pub fn validate_shape(&self) -> Result<(), GeometryError> {
        self.check(false)
    }

    fn check(&self, unit_base: bool) -> Result<(), GeometryError> {
        check_simple(&self.polygon)?;
        let viol = |assumption, detail: String| Err(GeometryError::Violation { assumption, detail });

        if !(self.height > 0.0 && self.r1 > 0.0) {
            return viol(ToothAssumption::Containment, "L and R1 must be positive".into());
        }
        for p in &self.polygon {
            if p[0].abs() >= self.r1 || p[1] < -GEOM_TOL || p[1] > self.height + GEOM_TOL {
                return viol(
                    ToothAssumption::Containment,
                    format!("vertex ({}, {}) outside the box", p[0], p[1]),
                );
            }
        }

        // Union of boundary segments on y = 0 must be exactly [omega_lo, omega_hi].
        let mut on_axis: Vec<(f64, f64)> = self
            .edges()
            .filter(|(a, b)| a[1].abs() <= GEOM_TOL && b[1].abs() <= GEOM_TOL)
            .map(|(a, b)| (a[0].min(b[0]), a[0].max(b[0])))
            .collect();
        on_axis.sort_by(|a, b| a.0.total_cmp(&b.0));
        let merged = merge_intervals(&on_axis);
        let (lo, hi) = self.omega;
        let trace_ok = merged.len() == 1
            && (merged[0].0 - lo).abs() <= GEOM_TOL
            && (merged[0].1 - hi).abs() <= GEOM_TOL;
        let stray = self
            .polygon
            .iter()
            .any(|p| p[1].abs() <= GEOM_TOL && (p[0] < lo - GEOM_TOL || p[0] > hi + GEOM_TOL));
        if !trace_ok || stray {
            return viol(
                ToothAssumption::BaseTrace,
                format!("segments on y=0: {merged:?}, omega = ({lo}, {hi})"),
            );
        }

        if unit_base && (self.base_length() - 1.0).abs() > GEOM_TOL {
            return viol(
                ToothAssumption::BaseMeasure,
                format!("|omega| = {}", self.base_length()),
            );
        }
        if !(lo < 0.0 && 0.0 < hi) {
            return viol(ToothAssumption::OriginInBase, format!("omega = ({lo}, {hi})"));
        }

        if !(self.delta0 > 0.0 && self.delta0 <= self.height) {
            return viol(ToothAssumption::Collar, format!("delta0 = {}", self.delta0));
        }
        let rect = [lo, 0.0, hi, self.delta0];
        let centre = [0.5 * (lo + hi), 0.5 * self.delta0];
        if !self.contains(centre) || self.edges().any(|(a, b)| segment_enters_open_rect(a, b, rect)) {
            return viol(
                ToothAssumption::Collar,
                format!("collar of height {} leaves the tooth", self.delta0),
            );
        }
        Ok(())
    }

    /// Horizontal slab structure: levels at every vertex height and, inside
    /// each slab, the trapezoidal connected components ordered by `xi`.
    pub fn slab_structure(&self) -> Result<SlabStructure, GeometryError> {
        check_simple(&self.polygon)?;
        let mut ys: Vec<f64> = self.polygon.iter().map(|p| p[1]).collect();
        ys.sort_by(f64::total_cmp);
        let mut levels: Vec<f64> = Vec::new();
        for y in ys {
            if levels.last().is_none_or(|l| y - l > GEOM_TOL) {
                levels.push(y);
            }
        }
        if levels.len() < 2 {
            return Err(GeometryError::NonSimplePolygon("polygon has no height".into()));
        }
        // Snap vertex heights onto the merged levels.
        let snap = |y: f64| -> f64 {
            *levels
                .iter()
                .min_by(|a, b| (*a - y).abs().total_cmp(&(*b - y).abs()))
                .unwrap()
        };
        let poly: Vec<[f64; 2]> = self.polygon.iter().map(|p| [p[0], snap(p[1])]).collect();
        let n = poly.len();

        let mut slabs = Vec::with_capacity(levels.len() - 1);
        for w in levels.windows(2) {
            let (lower, upper) = (w[0], w[1]);
            let mid = 0.5 * (lower + upper);
            let mut crossings: Vec<(f64, [f64; 2])> = Vec::new();
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let (ylo, yhi) = (a[1].min(b[1]), a[1].max(b[1]));
                if ylo < mid && mid < yhi {
                    let at = |y: f64| a[0] + (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]);
                    crossings.push((at(mid), [at(lower), at(upper)]));
                }
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            debug_assert!(crossings.len() % 2 == 0);
            let comps = crossings
                .chunks(2)
                .map(|c| Trapezoid {
                    lower,
                    upper,
                    left: c[0].1,
                    right: c[1].1,
                })
                .collect();
            slabs.push(comps);
        }
        Ok(SlabStructure { levels, slabs })
    }
}

/// Connected component of the tooth inside one open slab; its left and right
/// sides are straight segments spanning the slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub lower: f64,
    pub upper: f64,
    /// `xi` of the left side at `lower` and at `upper`.
    pub left: [f64; 2],
    /// `xi` of the right side at `lower` and at `upper`.
    pub right: [f64; 2],
}

impl Trapezoid {
    fn t(&self, y: f64) -> f64 {
        (y - self.lower) / (self.upper - self.lower)
    }
    pub fn left_at(&self, y: f64) -> f64 {
        let t = self.t(y);
        self.left[0] * (1.0 - t) + self.left[1] * t
    }
    pub fn right_at(&self, y: f64) -> f64 {
        let t = self.t(y);
        self.right[0] * (1.0 - t) + self.right[1] * t
    }
    pub fn width_at(&self, y: f64) -> f64 {
        self.right_at(y) - self.left_at(y)
    }
    pub fn area(&self) -> f64 {
        0.5 * (self.width_at(self.lower) + self.width_at(self.upper)) * (self.upper - self.lower)
    }
    pub fn contains(&self, xi: f64, y: f64) -> bool {
        y > self.lower && y < self.upper && xi > self.left_at(y) && xi < self.right_at(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabStructure {
    /// `0 = a_0 < a_1 < ... < a_M`.
    pub levels: Vec<f64>,
    /// `slabs[i - 1]` holds the components of slab `i`, left to right.
    pub slabs: Vec<Vec<Trapezoid>>,
}

/// Rectangle `[x0, x1] x [-depth, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseRect {
    pub x0: f64,
    pub x1: f64,
    pub depth: f64,
}

impl BaseRect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * self.depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToothPlacement {
    /// Attachment point `xbar^n`.
    pub center: f64,
    /// Horizontal scale `l^n`.
    pub width: f64,
}

/// How the placements of a brush were generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementFamily {
    /// Teeth at cell midpoints, all of width `fill * eps`.
    Periodic { fill: f64 },
    /// Equal widths with gaps growing towards the right end of `Omega'`.
    LinearGaps,
    /// A fixed number of teeth whose widths shrink with `eps`.
    Isolated,
    /// Anything else; no closed-form density.
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrushSpec {
    pub base: BaseRect,
    /// Attachment interval `Omega'` on the top side of the base.
    pub omega_prime: (f64, f64),
    pub tooth: ModelTooth,
    pub placements: Vec<ToothPlacement>,
    pub epsilon: f64,
    /// Constant `C` with `l^n <= C eps`.
    pub c_scale: f64,
    pub family: PlacementFamily,
}

impl BrushSpec {
    /// Base interval `omega^n = xbar^n + l^n omega` of tooth `n` (0-based).
    pub fn tooth_base(&self, n: usize) -> (f64, f64) {
        let p = self.placements[n];
        (p.center + p.width * self.tooth.omega.0, p.center + p.width * self.tooth.omega.1)
    }

    pub fn n_teeth(&self) -> usize {
        self.placements.len()
    }

    /// `|omega_eps| = sum_n l^n |omega|`.
    pub fn covered_length(&self) -> f64 {
        (0..self.n_teeth())
            .map(|n| {
                let (a, b) = self.tooth_base(n);
                b - a
            })
            .sum()
    }

    /// Exact measure of the brush `|Omega^b| + sum_n l^n |Y|`.
    pub fn area(&self) -> f64 {
        self.base.area() + self.placements.iter().map(|p| p.width).sum::<f64>() * self.tooth.area()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let (olo, ohi) = self.omega_prime;
        let b = &self.base;
        if !(b.x0 < b.x1 && b.depth > 0.0) {
            return Err(GeometryError::Brush("degenerate base rectangle".into()));
        }
        if !(b.x0 - GEOM_TOL <= olo && olo < ohi && ohi <= b.x1 + GEOM_TOL) {
            return Err(GeometryError::Brush(format!(
                "Omega' = ({olo}, {ohi}) not on the top side [{}, {}]",
                b.x0, b.x1
            )));
        }
        if !(self.epsilon > 0.0 && self.c_scale > 0.0) {
            return Err(GeometryError::Brush("eps and C must be positive".into()));
        }
        for (n, p) in self.placements.iter().enumerate() {
            if !(p.width > 0.0 && p.width <= self.c_scale * self.epsilon * (1.0 + 1e-12)) {
                return Err(GeometryError::Brush(format!(
                    "tooth {n}: width {} not in (0, C eps = {}]",
                    p.width,
                    self.c_scale * self.epsilon
                )));
            }
            let (a, bb) = self.tooth_base(n);
            if !(a > olo && bb < ohi) {
                return Err(GeometryError::Brush(format!(
                    "tooth {n}: base ({a}, {bb}) not strictly inside Omega'"
                )));
            }
        }
        for (n, w) in self.placements.windows(2).enumerate() {
            if w[1].center <= w[0].center {
                return Err(GeometryError::Brush(format!("placements not sorted at {n}")));
            }
            let r1 = self.tooth.r1;
            if w[0].center + r1 * w[0].width >= w[1].center - r1 * w[1].width {
                return Err(GeometryError::Brush(format!(
                    "guard intervals of teeth {n} and {} intersect",
                    n + 1
                )));
            }
        }
        Ok(())
    }
}

/// Periodic placement: one tooth of width `fill * eps` centered in each of the
/// `floor(|Omega'| / eps)` cells of length `eps`.
pub fn place_periodic(
    base: BaseRect,
    omega_prime: (f64, f64),
    eps: f64,
    fill: f64,
    tooth: &ModelTooth,
) -> Result<BrushSpec, GeometryError> {
    if !(fill > 0.0 && fill <= 1.0) || eps <= 0.0 {
        return Err(GeometryError::Placement(format!("fill {fill} / eps {eps} out of range")));
    }
    let len = omega_prime.1 - omega_prime.0;
    let cells = (len / eps + 1e-9).floor() as usize;
    if cells == 0 {
        return Err(GeometryError::Placement("eps larger than Omega'".into()));
    }
    let placements = (0..cells)
        .map(|n| ToothPlacement {
            center: omega_prime.0 + (n as f64 + 0.5) * eps - fill * eps * tooth_offset(tooth),
            width: fill * eps,
        })
        .collect();
    let spec = BrushSpec {
        base,
        omega_prime,
        tooth: tooth.clone(),
        placements,
        epsilon: eps,
        c_scale: fill,
        family: PlacementFamily::Periodic { fill },
    };
    spec.validate().map_err(|e| GeometryError::Placement(e.to_string()))?;
    Ok(spec)
}

// Shift that centers the base interval of a tooth on its cell midpoint.
fn tooth_offset(tooth: &ModelTooth) -> f64 {
    0.5 * (tooth.omega.0 + tooth.omega.1)
}

/// Equal widths `eps / 2`, each tooth centered in a cell `[c_{n-1}, c_n]`
/// where the cell ends solve `int_0^{c_n} (1 - s)/2 ds = n eps / 2` in the
/// normalized coordinate of `Omega'`. The gaps grow monotonically and the
/// covered fraction tends to `(1 - x)/2`.
pub fn place_linear_gaps(
    base: BaseRect,
    omega_prime: (f64, f64),
    eps: f64,
    tooth: &ModelTooth,
) -> Result<BrushSpec, GeometryError> {
    let len = omega_prime.1 - omega_prime.0;
    let width = 0.5 * eps;
    let count = (len / (4.0 * width) + 1e-9).floor() as usize;
    if count < 2 {
        return Err(GeometryError::Placement(format!(
            "only {count} teeth fit for eps = {eps}"
        )));
    }
    // Normalized cell end s_n = 1 - sqrt(1 - 4 n l / |Omega'|).
    let cell_end = |n: usize| 1.0 - (1.0 - 4.0 * n as f64 * width / len).max(0.0).sqrt();
    let placements = (1..=count)
        .map(|n| {
            let mid = 0.5 * (cell_end(n - 1) + cell_end(n));
            ToothPlacement {
                center: omega_prime.0 + len * mid - width * tooth_offset(tooth),
                width,
            }
        })
        .collect();
    let spec = BrushSpec {
        base,
        omega_prime,
        tooth: tooth.clone(),
        placements,
        epsilon: eps,
        c_scale: 0.5,
        family: PlacementFamily::LinearGaps,
    };
    spec.validate().map_err(|e| GeometryError::Placement(e.to_string()))?;
    Ok(spec)
}

/// A single tooth of width `fill * eps` centered at `center`; its density
/// vanishes in the limit.
pub fn place_single(
    base: BaseRect,
    omega_prime: (f64, f64),
    eps: f64,
    fill: f64,
    center: f64,
    tooth: &ModelTooth,
) -> Result<BrushSpec, GeometryError> {
    let spec = BrushSpec {
        base,
        omega_prime,
        tooth: tooth.clone(),
        placements: vec![ToothPlacement {
            center: center - fill * eps * tooth_offset(tooth),
            width: fill * eps,
        }],
        epsilon: eps,
        c_scale: fill,
        family: PlacementFamily::Isolated,
    };
    spec.validate().map_err(|e| GeometryError::Placement(e.to_string()))?;
    Ok(spec)
}

pub(crate) fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

pub(crate) fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) - GEOM_TOL
        && p[0] <= a[0].max(b[0]) + GEOM_TOL
        && p[1] >= a[1].min(b[1]) - GEOM_TOL
        && p[1] <= a[1].max(b[1]) + GEOM_TOL
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let sgn = |v: f64| if v.abs() <= GEOM_TOL { 0 } else if v > 0.0 { 1 } else { -1 };
    let (o1, o2) = (sgn(orient(a, b, c)), sgn(orient(a, b, d)));
    let (o3, o4) = (sgn(orient(c, d, a)), sgn(orient(c, d, b)));
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && on_segment(a, b, c))
        || (o2 == 0 && on_segment(a, b, d))
        || (o3 == 0 && on_segment(c, d, a))
        || (o4 == 0 && on_segment(c, d, b))
}

fn check_simple(poly: &[[f64; 2]]) -> Result<(), GeometryError> {
    let n = poly.len();
    if n < 3 {
        return Err(GeometryError::NonSimplePolygon("fewer than 3 vertices".into()));
    }
    if signed_area(poly).abs() <= GEOM_TOL {
        return Err(GeometryError::NonSimplePolygon("zero area".into()));
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[0] - b[0]).abs() <= GEOM_TOL && (a[1] - b[1]).abs() <= GEOM_TOL {
            return Err(GeometryError::NonSimplePolygon(format!("repeated vertex {i}")));
        }
        // Adjacent edge folding back onto this one.
        let c = poly[(i + 2) % n];
        if orient(a, b, c).abs() <= GEOM_TOL {
            let d1 = [b[0] - a[0], b[1] - a[1]];
            let d2 = [c[0] - b[0], c[1] - b[1]];
            if d1[0] * d2[0] + d1[1] * d2[1] < 0.0 {
                return Err(GeometryError::NonSimplePolygon(format!("edge {i} folds back")));
            }
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_touch(a, b, c, d) {
                return Err(GeometryError::NonSimplePolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn merge_intervals(sorted: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in sorted {
        match out.last_mut() {
            Some(last) if a <= last.1 + GEOM_TOL => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

// Whether segment ab has points strictly inside the open rectangle
// [x0, y0, x1, y1].
fn segment_enters_open_rect(a: [f64; 2], b: [f64; 2], r: [f64; 4]) -> bool {
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    let d = [b[0] - a[0], b[1] - a[1]];
    let clip = [(-d[0], a[0] - r[0]), (d[0], r[2] - a[0]), (-d[1], a[1] - r[1]), (d[1], r[3] - a[1])];
    for (p, q) in clip {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return false;
    }
    let tm = 0.5 * (t0 + t1);
    let m = [a[0] + tm * d[0], a[1] + tm * d[1]];
    m[0] > r[0] + GEOM_TOL && m[0] < r[2] - GEOM_TOL && m[1] > r[1] + GEOM_TOL && m[1] < r[3] - GEOM_TOL
}
