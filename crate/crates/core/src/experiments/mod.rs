//! Desk-scale experiments: each harness solves the system, evaluates the
//! relevant seminorms and reports measured constants and fitted exponents.
//!
//! Every experiment is deterministic for a given configuration and seed.

mod comparison;
mod decay;
mod hoelder;
mod intrinsic_bmo;
mod main_bmo;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use comparison::{run_comparison, ComparisonConfig, ForcingFamily};
pub use decay::{run_caloric_decay, DecayConfig, DecayReport, InitialData};
pub use hoelder::{run_hoelder_transfer, HoelderConfig, HoelderProfile};
pub use intrinsic_bmo::{run_intrinsic_bmo, IntrinsicBmoConfig};
pub use main_bmo::{run_main_bmo, MainBmoConfig};

use crate::grid::{GradientField, Grid, Point};
use crate::oscillation::v_map;

/// Least-squares line `y = slope x + intercept` with its coefficient of
/// determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

impl Fit {
    /// Fits with `R^2 < 0.8` are flagged, never silently accepted.
    pub fn flagged(&self) -> bool {
        !(self.r2 >= 0.8)
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Some(Fit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: n,
    })
}

/// Fit of `log y` against `log x` over the pairs with both entries positive.
pub fn log_fit(x: &[f64], y: &[f64]) -> Option<Fit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// One measured point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Value of the control variable (amplitude, exponent, ...).
    pub control: f64,
    /// Cells per axis of the grid the point was measured on.
    pub cells: usize,
    pub measured: f64,
    pub rhs: f64,
    /// `measured / rhs`.
    pub constant: f64,
    pub extra: BTreeMap<String, f64>,
}

/// Stability of an empirical constant across one grid refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub coarse_cells: usize,
    pub fine_cells: usize,
    pub coarse: f64,
    pub fine: f64,
    /// `max(a, b) / min(a, b)`.
    pub factor: f64,
    /// Change within a factor 3.
    pub converged: bool,
}

impl Refinement {
    pub fn new(coarse_cells: usize, coarse: f64, fine_cells: usize, fine: f64) -> Self {
        let factor = if coarse > 0.0 && fine > 0.0 {
            coarse.max(fine) / coarse.min(fine)
        } else if coarse == fine {
            1.0
        } else {
            f64::INFINITY
        };
        Refinement {
            coarse_cells,
            fine_cells,
            coarse,
            fine,
            factor,
            converged: factor <= 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: String,
    pub p: f64,
    pub control: String,
    pub points: Vec<SweepPoint>,
    /// Fitted scaling exponent of `measured` against the control.
    pub fit: Option<Fit>,
    pub refinement: Vec<Refinement>,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl SweepReport {
    fn new(experiment: &str, p: f64, control: &str) -> Self {
        SweepReport {
            experiment: experiment.to_string(),
            p,
            control: control.to_string(),
            points: Vec::new(),
            fit: None,
            refinement: Vec::new(),
            scalars: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// `max / min` of the empirical constants of the points on `cells`.
    pub fn constant_spread(&self, cells: usize) -> f64 {
        let c: Vec<f64> = self
            .points
            .iter()
            .filter(|pt| pt.cells == cells)
            .map(|pt| pt.constant)
            .collect();
        spread(&c)
    }

    pub fn converged(&self) -> bool {
        self.refinement.iter().all(|r| r.converged)
    }
}

pub(crate) fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if v.is_empty() {
        f64::NAN
    } else if min > 0.0 {
        max / min
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Cellwise `V(Du)`.
pub fn v_field(grad: &GradientField, p: f64) -> crate::grid::FieldData {
    grad.map(grad.width(), |q, out| out.copy_from_slice(&v_map(q, p)))
}

/// Smooth switch-on `eta(t) = 3 s^2 - 2 s^3`, `s = min(t / ramp, 1)`.
pub fn ramp(t: f64, ramp: f64) -> f64 {
    if ramp <= 0.0 {
        return 1.0;
    }
    let s = (t / ramp).clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// `g(t, x) = A eta(t) log|x - x0| E` with a fixed unit direction `E`
/// (one entry per gradient component). `x0` should avoid cell centers.
pub fn log_forcing(
    grid: Grid,
    amplitude: f64,
    x0: Point,
    direction: &[f64],
    eta: impl Fn(f64) -> f64,
) -> GradientField {
    let norm = direction.iter().map(|e| e * e).sum::<f64>().sqrt();
    let dir: Vec<f64> = direction.iter().map(|e| e / norm).collect();
    GradientField::from_fn(grid, |t, x, out| {
        let d = grid.distance(x, x0);
        let v = amplitude * eta(t) * d.ln();
        for (o, e) in out.iter_mut().zip(&dir) {
            *o = v * e;
        }
    })
}

/// A point at the corner shared by the cells around `x`, so no cell center
/// coincides with it.
pub fn cell_corner_near(grid: &Grid, x: Point) -> Point {
    let h = grid.spacing();
    let mut out = [0.0; 2];
    for d in 0..grid.dim() {
        out[d] = (x[d] / h).round() * h;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x: Vec<f64> = (1..8).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
        let f = log_fit(&x, &y).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(!f.flagged());
    }

    #[test]
    fn ramp_is_smooth_step() {
        assert_eq!(ramp(0.0, 0.1), 0.0);
        assert_eq!(ramp(0.2, 0.1), 1.0);
        assert!((ramp(0.05, 0.1) - 0.5).abs() < 1e-15);
    }
}
