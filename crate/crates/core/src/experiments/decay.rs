use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{log_fit, v_field, Fit, Refinement};
use crate::error::Result;
use crate::geometry::{build_family, Ladder, PowerField, ScaledCylinder, Status};
use crate::grid::{Boundary, GradientField, Grid, Point, SpaceTimeField};
use crate::oscillation::{mean_osc, osc};
use crate::solver::{solve, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `sum_k a_k sin(2 pi k x + phi_k)` with random `a_k`, `phi_k`.
    RandomTrig { modes: usize, amplitude: f64 },
    /// `amplitude sin(2 pi x)`.
    Sine { amplitude: f64 },
    /// `slope . x`.
    Affine { slope: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub grid: Grid,
    pub solver: SolverConfig,
    pub seeds: Vec<u64>,
    pub initial: InitialData,
    pub outer_radius: f64,
    pub b: f64,
    /// Intrinsic tolerance `K`.
    pub k: f64,
    pub ladder: Ladder,
    /// `theta = 2^{-l}` for `l` in this range.
    pub theta_levels: (u32, u32),
    /// Repeat every seed on the refined grid to test the Harnack constant.
    pub refine: bool,
}

impl DecayConfig {
    pub fn new(p: f64) -> Self {
        DecayConfig {
            grid: Grid::new(1, 1, 512, 1.0, 2.5e-4, 0.1, Boundary::Periodic)
                .expect("valid default grid"),
            solver: SolverConfig::with_p(p),
            seeds: (1..=5).collect(),
            initial: InitialData::RandomTrig {
                modes: 3,
                amplitude: 0.3,
            },
            outer_radius: 0.25,
            b: 1.0,
            k: 2.0,
            ladder: Ladder::default(),
            theta_levels: (2, 5),
            refine: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub p: f64,
    pub seed: u64,
    pub cells: usize,
    pub center: Point,
    pub time: f64,
    pub lambda: f64,
    pub rho: f64,
    pub s: f64,
    /// `Phi(rho) = (⨍_Q |V(Dh) - <V(Dh)>|^2)^{1/2}`.
    pub phi_rho: f64,
    pub thetas: Vec<f64>,
    pub phi: Vec<f64>,
    pub osc: Vec<f64>,
    /// Slope of `log osc^2` against `log theta`.
    pub fit: Option<Fit>,
    /// All oscillations vanish (affine data); no exponent is defined.
    pub exact_zero: bool,
    /// `sup_{Q/2} |Dh| / lambda`.
    pub harnack: f64,
    pub refinement: Option<Refinement>,
    pub skipped: Option<String>,
}

impl DecayReport {
    pub fn alpha_hat(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Largest relative increase of the oscillation as `theta` decreases.
    pub fn monotonicity_defect(&self) -> f64 {
        self.osc
            .windows(2)
            .map(|w| {
                if w[0] > 0.0 {
                    (w[1] - w[0]) / w[0]
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

impl InitialData {
    /// One value per cell; `seed` drives the random coefficients.
    pub fn sample(&self, grid: &Grid, seed: u64) -> Vec<f64> {
        initial_state(grid, self, seed)
    }
}

fn initial_state(grid: &Grid, init: &InitialData, seed: u64) -> Vec<f64> {
    use std::f64::consts::PI;
    let l = grid.side();
    match *init {
        InitialData::RandomTrig { modes, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coef: Vec<(f64, f64, f64)> = (1..=modes)
                .map(|k| {
                    let a = amplitude * rng.gen_range(-1.0..1.0) / k as f64;
                    let b = amplitude * rng.gen_range(-1.0..1.0) / k as f64;
                    (a, b, rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            (0..grid.cell_count())
                .map(|c| {
                    let x = grid.cell_center(c);
                    coef.iter()
                        .enumerate()
                        .map(|(i, &(a, b, ph))| {
                            let k = 2.0 * PI * (i + 1) as f64 / l;
                            let y = if grid.dim() == 2 {
                                b * (k * x[1] + ph).cos()
                            } else {
                                0.0
                            };
                            a * (k * x[0] + ph).sin() + y
                        })
                        .sum()
                })
                .collect()
        }
        InitialData::Sine { amplitude } => (0..grid.cell_count())
            .map(|c| amplitude * (2.0 * PI * grid.cell_center(c)[0] / l).sin())
            .collect(),
        InitialData::Affine { slope } => (0..grid.cell_count())
            .map(|c| {
                let x = grid.cell_center(c);
                slope[0] * x[0] + slope[1] * x[1]
            })
            .collect(),
    }
}

fn caloric_run(
    grid: &Grid,
    cfg: &DecayConfig,
    seed: u64,
) -> Result<(SpaceTimeField, GradientField)> {
    let grid = grid.with_components(1)?;
    let u0 = initial_state(&grid, &cfg.initial, seed);
    let g = GradientField::zeros(grid);
    let out = solve(&u0, &g, &cfg.solver)?;
    let grad = GradientField::of(&out.u);
    Ok((out.u, grad))
}

fn sup_grad(grad: &GradientField, cyl: &ScaledCylinder) -> Result<f64> {
    let region = cyl.region(grad.grid())?;
    let mut s = 0.0f64;
    for &(k, _) in region.slices() {
        for &c in region.cells() {
            s = s.max(grad.at(k, c).iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    Ok(s)
}

/// Center of the largest gradient at the final slice, on an admissible cell.
fn pick_center(grid: &Grid, grad: &GradientField, radius: f64) -> Point {
    let k = grid.steps();
    let mut best = (f64::NEG_INFINITY, [0.5 * grid.side(); 2]);
    for c in 0..grid.cell_count() {
        let x = grid.cell_center(c);
        if !grid.ball_inside(x, radius) {
            continue;
        }
        let v = grad.at(k, c).iter().map(|x| x * x).sum::<f64>();
        if v > best.0 {
            best = (v, x);
        }
    }
    best.1
}

fn one_seed(cfg: &DecayConfig, seed: u64) -> Result<DecayReport> {
    let p = cfg.solver.p;
    let grid = cfg.grid.with_components(1)?;
    let (_, grad) = caloric_run(&grid, cfg, seed)?;
    let t = grid.final_time();
    let center = pick_center(&grid, &grad, cfg.outer_radius);
    let (lo, hi) = cfg.theta_levels;
    let thetas: Vec<f64> = (lo..=hi).map(|l| 0.5f64.powi(l as i32)).collect();
    let min_rho = 2.0 * grid.spacing() / thetas.last().copied().unwrap_or(1.0);
    let mut rep = DecayReport {
        p,
        seed,
        cells: grid.cells_per_axis(),
        center,
        time: t,
        lambda: f64::NAN,
        rho: f64::NAN,
        s: f64::NAN,
        phi_rho: f64::NAN,
        thetas: thetas.clone(),
        phi: Vec::new(),
        osc: Vec::new(),
        fit: None,
        exact_zero: false,
        harnack: f64::NAN,
        refinement: None,
        skipped: None,
    };
    let power = PowerField::new(&grad, p);
    let family = build_family(&power, t, center, cfg.outer_radius, t, cfg.b, &cfg.ladder)?;
    let index = if p == 2.0 {
        Some(0)
    } else {
        (0..family.len()).find(|&j| {
            family.radii[j] >= min_rho && family.class(j, cfg.k).status == Status::Intrinsic
        })
    };
    let Some(j) = index else {
        rep.skipped = Some(format!(
            "no {}-intrinsic cylinder with radius >= {min_rho} on the ladder",
            cfg.k
        ));
        return Ok(rep);
    };
    let base = family.cylinder(j);
    rep.lambda = base.lambda;
    rep.rho = base.r;
    rep.s = base.s;
    let v = v_field(&grad, p);
    rep.phi_rho = mean_osc(&v, &base.region(&grid)?, 2.0)?;
    for &th in &thetas {
        let region = base.scaled(th).region(&grid)?;
        rep.phi.push(mean_osc(&v, &region, 2.0)?);
        rep.osc.push(osc(&v, &region)?);
    }
    let scale = v.max_abs().max(f64::MIN_POSITIVE);
    if rep.osc.iter().all(|&o| o <= 1e-12 * scale) {
        rep.exact_zero = true;
    } else {
        let sq: Vec<f64> = rep.osc.iter().map(|o| o * o).collect();
        rep.fit = log_fit(&thetas, &sq);
    }
    rep.harnack = sup_grad(&grad, &base.scaled(0.5))? / base.lambda;
    if cfg.refine {
        let fine = grid.refined();
        let (_, fgrad) = caloric_run(&fine, cfg, seed)?;
        let c = sup_grad(&fgrad, &base.scaled(0.5))? / base.lambda;
        rep.refinement = Some(Refinement::new(
            grid.cells_per_axis(),
            rep.harnack,
            fine.cells_per_axis(),
            c,
        ));
    }
    Ok(rep)
}

/// Solves the homogeneous system from every seed, locates a K-intrinsic
/// cylinder at the final time, and measures the decay of
/// `osc_{theta Q} V(Dh)` together with the Harnack ratio.
pub fn run_caloric_decay(cfg: &DecayConfig) -> Result<Vec<DecayReport>> {
    cfg.solver.validate(cfg.grid.dim())?;
    cfg.seeds.iter().map(|&s| one_seed(cfg, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_seed_has_zero_oscillation() {
        let mut cfg = DecayConfig::new(3.0);
        cfg.grid = Grid::new(1, 1, 256, 1.0, 1e-3, 0.1, Boundary::Dirichlet).unwrap();
        cfg.initial = InitialData::Affine { slope: [1.5, 0.0] };
        cfg.seeds = vec![1];
        cfg.refine = false;
        let rep = &run_caloric_decay(&cfg).unwrap()[0];
        assert!(rep.skipped.is_none(), "{:?}", rep.skipped);
        assert!(rep.exact_zero, "{:?}", rep.osc);
        assert!(rep.alpha_hat().is_none());
    }
}
