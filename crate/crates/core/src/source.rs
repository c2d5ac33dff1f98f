//! Closed-form scalar fields on the plane, used as source terms and as
//! exact reference solutions.

use serde::{Deserialize, Serialize};

/// Anything that can be evaluated pointwise.
pub trait Evaluate: Sync {
    fn value(&self, x: f64, y: f64) -> f64;
}

/// A field whose gradient is also available in closed form.
pub trait SmoothField: Evaluate {
    fn gradient(&self, x: f64, y: f64) -> [f64; 2];
}

impl<F: Fn(f64, f64) -> f64 + Sync> Evaluate for F {
    fn value(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// Built-in closed-form functions. Sums and products nest freely, so
/// polynomials, trigonometric terms and tensor products are all expressible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarFn {
    Const(f64),
    /// `coef * x^px * y^py`
    Monomial { coef: f64, px: u32, py: u32 },
    /// `amp * sin(kx x + ky y + phase)`
    Sin {
        amp: f64,
        #[serde(default)]
        kx: f64,
        #[serde(default)]
        ky: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amp * cos(kx x + ky y + phase)`
    Cos {
        amp: f64,
        #[serde(default)]
        kx: f64,
        #[serde(default)]
        ky: f64,
        #[serde(default)]
        phase: f64,
    },
    Sum(Vec<ScalarFn>),
    Product(Vec<ScalarFn>),
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Const(c)
    }

    /// `1 + y + sin(2x)`, the default smooth source of the sweeps.
    pub fn one_plus_y_plus_sin2x() -> Self {
        ScalarFn::Sum(vec![
            ScalarFn::Const(1.0),
            ScalarFn::Monomial { coef: 1.0, px: 0, py: 1 },
            ScalarFn::Sin { amp: 1.0, kx: 2.0, ky: 0.0, phase: 0.0 },
        ])
    }
}

fn powi(x: f64, p: u32) -> f64 {
    x.powi(p as i32)
}

impl Evaluate for ScalarFn {
    fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarFn::Const(c) => *c,
            ScalarFn::Monomial { coef, px, py } => coef * powi(x, *px) * powi(y, *py),
            ScalarFn::Sin { amp, kx, ky, phase } => amp * (kx * x + ky * y + phase).sin(),
            ScalarFn::Cos { amp, kx, ky, phase } => amp * (kx * x + ky * y + phase).cos(),
            ScalarFn::Sum(terms) => terms.iter().map(|t| t.value(x, y)).sum(),
            ScalarFn::Product(factors) => factors.iter().map(|t| t.value(x, y)).product(),
        }
    }
}

impl SmoothField for ScalarFn {
    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ScalarFn::Const(_) => [0.0, 0.0],
            ScalarFn::Monomial { coef, px, py } => {
                let dx = if *px == 0 {
                    0.0
                } else {
                    coef * *px as f64 * powi(x, px - 1) * powi(y, *py)
                };
                let dy = if *py == 0 {
                    0.0
                } else {
                    coef * *py as f64 * powi(x, *px) * powi(y, py - 1)
                };
                [dx, dy]
            }
            ScalarFn::Sin { amp, kx, ky, phase } => {
                let c = amp * (kx * x + ky * y + phase).cos();
                [kx * c, ky * c]
            }
            ScalarFn::Cos { amp, kx, ky, phase } => {
                let s = -amp * (kx * x + ky * y + phase).sin();
                [kx * s, ky * s]
            }
            ScalarFn::Sum(terms) => terms.iter().fold([0.0, 0.0], |acc, t| {
                let g = t.gradient(x, y);
                [acc[0] + g[0], acc[1] + g[1]]
            }),
            ScalarFn::Product(factors) => {
                let mut g = [0.0, 0.0];
                for (i, fi) in factors.iter().enumerate() {
                    let rest: f64 = factors
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, fj)| fj.value(x, y))
                        .product();
                    let gi = fi.gradient(x, y);
                    g[0] += gi[0] * rest;
                    g[1] += gi[1] * rest;
                }
                g
            }
        }
    }
}
