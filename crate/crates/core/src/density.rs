//! Limit density `theta` of the tooth bases and its zero set.

use std::io::Write;

use crate::error::DensityError;
use crate::geometry::{BrushSpec, PlacementFamily};

/// Default cutoff for exact densities.
pub const THETA_MIN_EXACT: f64 = 1e-12;
/// Default cutoff for windowed estimates.
pub const THETA_MIN_EMPIRICAL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Constant(f64),
    /// `(1 - s)/2` with `s` the normalized coordinate of `(lo, hi)`.
    Linear { lo: f64, hi: f64 },
    Sampled,
}

/// `theta` sampled at the trace nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub kind: DensityKind,
    pub xs: Vec<f64>,
    pub samples: Vec<f64>,
    pub theta_min: f64,
}

impl DensityField {
    /// Arbitrary samples, clipped to `[0, 1]`.
    pub fn sampled(xs: Vec<f64>, samples: Vec<f64>, theta_min: f64) -> Self {
        let samples = samples.into_iter().map(|t| t.clamp(0.0, 1.0)).collect();
        Self { kind: DensityKind::Sampled, xs, samples, theta_min }
    }

    pub fn constant(xs: &[f64], rho: f64) -> Self {
        Self {
            kind: DensityKind::Constant(rho),
            xs: xs.to_vec(),
            samples: vec![rho.clamp(0.0, 1.0); xs.len()],
            theta_min: THETA_MIN_EXACT,
        }
    }

    /// Indices `k` with `theta(x_k) <= theta_min`.
    pub fn vanishing(&self) -> Vec<usize> {
        (0..self.samples.len()).filter(|&k| self.samples[k] <= self.theta_min).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&t| t <= self.theta_min)
    }

    /// Two-column CSV `x,theta`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,theta")?;
        for (x, t) in self.xs.iter().zip(&self.samples) {
            writeln!(w, "{x:.17e},{t:.17e}")?;
        }
        Ok(())
    }
}

/// Closed-form density of the built-in placement families, sampled at `xs`.
pub fn theta_exact(spec: &BrushSpec, xs: &[f64]) -> Result<DensityField, DensityError> {
    let omega_len = spec.tooth.base_length();
    match spec.family {
        PlacementFamily::Periodic { fill } => Ok(DensityField::constant(xs, fill * omega_len)),
        PlacementFamily::Isolated => Ok(DensityField::constant(xs, 0.0)),
        PlacementFamily::LinearGaps => {
            let (lo, hi) = spec.omega_prime;
            let samples = xs
                .iter()
                .map(|&x| (0.5 * (1.0 - (x - lo) / (hi - lo))).clamp(0.0, 1.0))
                .collect();
            Ok(DensityField {
                kind: DensityKind::Linear { lo, hi },
                xs: xs.to_vec(),
                samples,
                theta_min: THETA_MIN_EXACT,
            })
        }
        PlacementFamily::Custom => Err(DensityError::Unsupported),
    }
}

/// Windowed estimate `|omega_eps ∩ I| / |I|` with `I = (x - h_w, x + h_w) ∩ Ω'`,
/// computed exactly from the placements.
pub fn theta_empirical(spec: &BrushSpec, xs: &[f64], h_w: f64) -> Result<DensityField, DensityError> {
    let min = 2.0 * spec.c_scale * spec.epsilon;
    if !(h_w > min) {
        return Err(DensityError::WindowTooSmall { window: h_w, min });
    }
    let bases: Vec<(f64, f64)> = (0..spec.n_teeth()).map(|n| spec.tooth_base(n)).collect();
    let (olo, ohi) = spec.omega_prime;
    let samples = xs
        .iter()
        .map(|&x| {
            let (a, b) = ((x - h_w).max(olo), (x + h_w).min(ohi));
            if b <= a {
                return 0.0;
            }
            let covered: f64 = bases.iter().map(|&(p, q)| (q.min(b) - p.max(a)).max(0.0)).sum();
            covered / (b - a)
        })
        .collect();
    Ok(DensityField::sampled(xs.to_vec(), samples, THETA_MIN_EMPIRICAL))
}
