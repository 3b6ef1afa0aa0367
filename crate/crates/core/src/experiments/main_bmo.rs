use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cell_corner_near, log_fit, log_forcing, ramp, Refinement, SweepPoint, SweepReport};
use crate::error::{Error, Result};
use crate::geometry::PowerField;
use crate::grid::{Boundary, FieldData, GradientField, Grid, Point, Region};
use crate::oscillation::{blo_seminorm, bochner_bmo, Scan, ScanDomain, SpatialDomain, Weight};
use crate::solver::{solve, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainBmoConfig {
    pub grid: Grid,
    pub solver: SolverConfig,
    pub amplitudes: Vec<f64>,
    /// Singularity of the forcing and center of the interior ball.
    pub center: Point,
    /// Radius `r` of the interior ball; the gradient term uses `Q_{2r}`.
    pub radius: f64,
    pub ramp: f64,
    pub scan: Scan,
    /// Also run every amplitude on the grid with half the cells per axis.
    pub coarse_level: bool,
    /// Exponent of the weighted variant `omega(r) = r^gamma`.
    pub weight_gamma: Option<f64>,
}

impl MainBmoConfig {
    pub fn new(p: f64) -> Self {
        MainBmoConfig {
            grid: Grid::new(2, 1, 64, 1.0, 0.01, 1.0, Boundary::Dirichlet)
                .expect("valid default grid"),
            solver: SolverConfig::with_p(p),
            amplitudes: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            center: [0.5, 0.5],
            radius: 0.25,
            ramp: 0.2,
            scan: Scan::default(),
            coarse_level: true,
            weight_gamma: None,
        }
    }
}

fn coarse(grid: &Grid) -> Result<Grid> {
    Grid::new(
        grid.dim(),
        grid.components(),
        grid.cells_per_axis() / 2,
        grid.side(),
        grid.tau(),
        grid.final_time(),
        grid.bc(),
    )
}

fn one_point(grid: Grid, cfg: &MainBmoConfig, a: f64) -> Result<SweepPoint> {
    let p = cfg.solver.p;
    let x0 = cell_corner_near(&grid, cfg.center);
    let dir: Vec<f64> = (0..grid.components() * grid.dim())
        .map(|i| if i == 0 { 1.0 } else { 0.5 })
        .collect();
    let g = log_forcing(grid, a, x0, &dir, |t| ramp(t, cfg.ramp));
    let u0 = vec![0.0; grid.cell_count() * grid.components()];
    let u = solve(&u0, &g, &cfg.solver)?.u;
    let t = grid.final_time();
    let r = cfg.radius;
    let ball = SpatialDomain::Ball {
        center: x0,
        radius: r,
    };
    let window = ScanDomain::new(ball, t - r * r, t);
    let udata: &FieldData = &u;
    let blo = blo_seminorm(udata, &window, &Weight::one(), 1.0, &cfg.scan)?;
    // g = A eta(t) G(x): the sup over slices is attained once eta = 1
    let gdom = ScanDomain::at_time(
        SpatialDomain::Ball {
            center: x0,
            radius: 2.0 * r,
        },
        t,
    );
    let gdata: &FieldData = &g;
    let g_bmo = bochner_bmo(gdata, &gdom, &Weight::one(), &cfg.scan)?.value;
    let grad = GradientField::of(&u);
    let power = PowerField::new(&grad, p);
    let q2r = Region::cylinder(&grid, t, x0, 2.0 * r, 4.0 * r * r)?;
    let grad_term = power.mean(&q2r).powf(1.0 / p);
    let g_term = g_bmo.powf(1.0 / (p - 1.0));
    let rhs = g_term + grad_term + 1.0;
    let mut extra = BTreeMap::new();
    extra.insert("g_bmo".into(), g_bmo);
    extra.insert("rhs_g_term".into(), g_term);
    extra.insert("rhs_gradient_term".into(), grad_term);
    extra.insert("rhs_constant_term".into(), 1.0);
    extra.insert("witness_radius".into(), blo.witness.r);
    extra.insert("witness_time".into(), blo.witness.time);
    if let Some(gamma) = cfg.weight_gamma {
        let w = Weight::power(gamma)?;
        let wp = w.pow(p - 1.0);
        let bw = blo_seminorm(udata, &window, &w, 1.0, &cfg.scan)?.value;
        let gw = bochner_bmo(gdata, &gdom, &wp, &cfg.scan)?.value;
        extra.insert("blo_weighted".into(), bw);
        extra.insert("g_bmo_weighted".into(), gw);
        extra.insert(
            "constant_weighted".into(),
            bw / (gw.powf(1.0 / (p - 1.0)) + grad_term / w.eval(r) + 1.0),
        );
    }
    Ok(SweepPoint {
        control: a,
        cells: grid.cells_per_axis(),
        measured: blo.value,
        rhs,
        constant: blo.value / rhs,
        extra,
    })
}

/// Sweeps the amplitude of a logarithmic forcing and fits the growth of
/// `sup_t [u(t)]_{BLO(B_r)}` against it. The three terms of the bound are
/// reported separately and `c = measured / (sum of terms)` per level.
pub fn run_main_bmo(cfg: &MainBmoConfig) -> Result<SweepReport> {
    let p = cfg.solver.p;
    if p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "the BMO experiments need p >= 2, got {p}"
        )));
    }
    cfg.solver.validate(cfg.grid.dim())?;
    let mut rep = SweepReport::new("main_bmo", p, "amplitude");
    let mut levels = Vec::new();
    if cfg.coarse_level {
        levels.push(coarse(&cfg.grid)?);
    }
    levels.push(cfg.grid);
    for grid in &levels {
        for &a in &cfg.amplitudes {
            rep.points.push(one_point(*grid, cfg, a)?);
        }
    }
    let fine = cfg.grid.cells_per_axis();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rep
        .points
        .iter()
        .filter(|pt| pt.cells == fine)
        .map(|pt| (pt.control, pt.measured))
        .unzip();
    rep.fit = log_fit(&xs, &ys);
    rep.scalars
        .insert("predicted_exponent".into(), 1.0 / (p - 1.0));
    if let Some(f) = rep.fit {
        if f.flagged() {
            rep.notes
                .push(format!("growth fit has R^2 = {} < 0.8", f.r2));
        }
    }
    if cfg.coarse_level {
        let cc = levels[0].cells_per_axis();
        let c_max = |cells: usize| {
            rep.points
                .iter()
                .filter(|pt| pt.cells == cells)
                .map(|pt| pt.constant)
                .fold(0.0, f64::max)
        };
        rep.refinement
            .push(Refinement::new(cc, c_max(cc), fine, c_max(fine)));
        if !rep.converged() {
            rep.notes.push(
                "not converged: the constant changes by more than a factor 3 under refinement"
                    .into(),
            );
        }
    }
    Ok(rep)
}
