//! Run configuration, report files and the command implementations used by
//! the `plap` binary.

mod config;
mod report;
pub mod suites;

use serde_json::{json, Value};

pub use config::{
    default_grid, parse_config, ConfigError, ExperimentBlock, ExperimentName, FieldChoice,
    ForcingChoice, GeometryBlock, GridBlock, InitialChoice, RunConfig, SeminormChoice,
};
pub use report::{
    decay_table, family_table, format_number, status_code, suite_table, sweep_table, unix_now,
    write_outputs, Meta, Report, Table,
};
pub use suites::{
    ellipticity_suite, experiment_smoke, grid_fields_invariants, heat_validation,
    mean_value_inequalities, run_module, scaling_suite, seminorm_closed_forms, stationary_drift,
    Check, Module, SuiteReport,
};

use crate::error::Result;
use crate::experiments::{
    cell_corner_near, log_forcing, ramp, run_caloric_decay, run_comparison, run_hoelder_transfer,
    run_intrinsic_bmo, run_main_bmo, v_field, InitialData, SweepReport,
};
use crate::geometry::{build_family, verify_items, PowerField};
use crate::grid::{FieldData, GradientField, Grid};
use crate::oscillation::{
    blo_seminorm, bmo_par, bochner_bmo, zygmund_seminorm, Scan, ScanDomain, WeightKind,
};
use crate::solver::{solve, SolveResult};

/// Options shared by every command.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides `experiment.seed` (and shifts the decay seed list).
    pub seed: Option<u64>,
    /// Ladder and scan refinement depth.
    pub refine: Option<u32>,
}

fn config_value(cfg: &RunConfig, opts: &RunOptions) -> Value {
    json!({
        "run": cfg,
        "seed_override": opts.seed,
        "refine": opts.refine,
    })
}

fn initial_values(cfg: &RunConfig, grid: &Grid, seed: u64) -> Vec<f64> {
    let e = &cfg.experiment;
    let init = match e.initial {
        InitialChoice::Zero => InitialData::Sine { amplitude: 0.0 },
        InitialChoice::Sine => InitialData::Sine {
            amplitude: e.amplitude,
        },
        InitialChoice::RandomTrig => InitialData::RandomTrig {
            modes: 3,
            amplitude: e.amplitude,
        },
        InitialChoice::Affine => InitialData::Affine {
            slope: [e.amplitude, 0.0],
        },
    };
    let one = init.sample(grid, seed);
    let n = grid.components();
    (0..grid.cell_count() * n).map(|i| one[i / n]).collect()
}

fn forcing_field(cfg: &RunConfig, grid: Grid) -> GradientField {
    let e = &cfg.experiment;
    let x0 = cell_corner_near(&grid, cfg.geometry.center);
    let width = grid.components() * grid.dim();
    let dir: Vec<f64> = (0..width).map(|i| if i == 0 { 1.0 } else { 0.5 }).collect();
    let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a = e.amplitude;
    match e.forcing {
        ForcingChoice::Zero => GradientField::zeros(grid),
        ForcingChoice::Log => log_forcing(grid, a, x0, &dir, |t| ramp(t, 0.05)),
        ForcingChoice::SpaceConstant => GradientField::from_fn(grid, |t, _, o| {
            for (v, d) in o.iter_mut().zip(&dir) {
                *v = a * ramp(t, 0.05) * d / nrm;
            }
        }),
        ForcingChoice::Fractional => {
            let gamma = e.gamma;
            GradientField::from_fn(grid, |_, x, o| {
                let v = a * grid.distance(x, x0).powf(gamma);
                for (out, d) in o.iter_mut().zip(&dir) {
                    *out = v * d / nrm;
                }
            })
        }
    }
}

fn run_solver(cfg: &RunConfig, opts: &RunOptions) -> Result<(Grid, SolveResult)> {
    let grid = cfg.grid_for(None)?;
    let seed = opts.seed.unwrap_or(cfg.experiment.seed);
    let u0 = initial_values(cfg, &grid, seed);
    let g = forcing_field(cfg, grid);
    Ok((grid, solve(&u0, &g, &cfg.solver)?))
}

fn l2(grid: &Grid, v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// `solve`: runs the solver and reports per-step norms, energy and Newton
/// statistics.
pub fn solve_command(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let (grid, res) = run_solver(cfg, opts)?;
    let mut t = Table::new(&[
        "time",
        "l2_norm",
        "max_abs",
        "energy",
        "newton_iterations",
        "residual",
    ]);
    for k in 0..grid.slice_count() {
        let s = res.u.slice(k);
        let (it, r) = if k == 0 {
            (0.0, 0.0)
        } else {
            (res.iterations[k - 1] as f64, res.residuals[k - 1])
        };
        t.push(vec![
            grid.time_of(k),
            l2(&grid, s),
            s.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            res.energy[k],
            it,
            r,
        ]);
    }
    let last = res.u.slice(grid.steps());
    let result = json!({
        "grid": grid,
        "steps": grid.steps(),
        "total_newton_iterations": res.iterations.iter().sum::<usize>(),
        "max_residual": res.residuals.iter().cloned().fold(0.0f64, f64::max),
        "final_l2_norm": l2(&grid, last),
        "energy_nonincreasing": res.energy.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)),
    });
    Ok(Report {
        command: "solve".into(),
        config: config_value(cfg, opts),
        result,
        table: t,
        ok: true,
    })
}

/// `geometry`: solves, builds the cylinder family at the configured center
/// and final time, and checks the family properties.
pub fn geometry_command(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let (grid, res) = run_solver(cfg, opts)?;
    let power = PowerField::new(&GradientField::of(&res.u), cfg.solver.p);
    let t = grid.final_time();
    let r = cfg.geometry.outer_radius;
    let s = cfg.geometry.outer_duration.unwrap_or((r * r).min(t));
    let mut ladder = cfg.geometry.ladder;
    if let Some(d) = opts.refine {
        ladder.refine = d;
    }
    let center = grid.cell_center(grid.nearest_cell(cfg.geometry.center));
    let fam = build_family(&power, t, center, r, s, cfg.geometry.b, &ladder)?;
    let items = verify_items(&fam, &grid, 1e-6, cfg.geometry.k);
    let table = family_table(&fam, cfg.geometry.k);
    let result = json!({
        "center": center,
        "time": t,
        "outer_radius": r,
        "outer_duration": s,
        "beta": fam.beta,
        "items": items,
        "all_items_hold": items.all_hold(),
    });
    Ok(Report {
        command: "geometry".into(),
        config: config_value(cfg, opts),
        result,
        table,
        ok: items.all_hold(),
    })
}

/// `seminorm`: solves and evaluates the configured seminorm of `u`, `Du`
/// or `V(Du)` over the whole space-time grid.
pub fn seminorm_command(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let (grid, res) = run_solver(cfg, opts)?;
    let grad = GradientField::of(&res.u);
    let field: FieldData = match cfg.experiment.field {
        FieldChoice::U => res.u.into_data(),
        FieldChoice::Grad => grad.into_data(),
        FieldChoice::V => v_field(&grad, cfg.solver.p),
    };
    let mut scan = Scan::default();
    if let Some(d) = opts.refine {
        scan = Scan::refined(d);
    }
    let domain = ScanDomain::whole(&grid);
    let w = &cfg.weight;
    let q = cfg.experiment.q;
    let mut t = Table::new(&[
        "value",
        "witness_r",
        "witness_s",
        "witness_time",
        "witness_x",
        "witness_y",
    ]);
    let result = match cfg.experiment.seminorm {
        SeminormChoice::Zygmund => {
            let gamma = match w.kind {
                WeightKind::Power { gamma } if gamma > 0.0 => gamma,
                _ => 1.0,
            };
            let z = zygmund_seminorm(&field, &domain, gamma)?;
            match &z.witness {
                Some(wi) => {
                    let x = grid.cell_center(wi.cell);
                    let h = wi.step as f64 * grid.spacing();
                    t.push(vec![
                        z.second_difference,
                        h,
                        0.0,
                        grid.time_of(wi.slice),
                        x[0],
                        x[1],
                    ]);
                }
                None => t.push(vec![
                    z.second_difference,
                    f64::NAN,
                    0.0,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                ]),
            }
            json!({ "zygmund": z, "norm": z.norm() })
        }
        kind => {
            let v = match kind {
                SeminormChoice::BmoPar => bmo_par(&field, &domain, w, q, &scan)?,
                SeminormChoice::Bochner => bochner_bmo(&field, &domain, w, &scan)?,
                _ => blo_seminorm(&field, &domain, w, q, &scan)?,
            };
            let wi = &v.witness;
            t.push(vec![
                v.value,
                wi.r,
                wi.s,
                wi.time,
                wi.center[0],
                wi.center[1],
            ]);
            serde_json::to_value(&v)?
        }
    };
    Ok(Report {
        command: "seminorm".into(),
        config: config_value(cfg, opts),
        result,
        table: t,
        ok: true,
    })
}

fn sweep_report(
    name: ExperimentName,
    cfg: &RunConfig,
    opts: &RunOptions,
    rep: SweepReport,
) -> Result<Report> {
    let table = sweep_table(&rep);
    Ok(Report {
        command: format!("experiment {name}"),
        config: config_value(cfg, opts),
        result: serde_json::to_value(&rep)?,
        table,
        ok: true,
    })
}

/// `experiment <name>`.
pub fn experiment_command(
    name: ExperimentName,
    cfg: &RunConfig,
    opts: &RunOptions,
) -> Result<Report> {
    cfg.validate(Some(name))?;
    match name {
        ExperimentName::CaloricDecay => {
            let mut dc = cfg.decay(opts.refine)?;
            if let Some(s) = opts.seed {
                let n = dc.seeds.len() as u64;
                dc.seeds = (s..s + n).collect();
            }
            let reps = run_caloric_decay(&dc)?;
            let table = decay_table(&reps);
            Ok(Report {
                command: format!("experiment {name}"),
                config: config_value(cfg, opts),
                result: json!({ "config": dc, "seeds": reps }),
                table,
                ok: true,
            })
        }
        ExperimentName::Comparison => sweep_report(
            name,
            cfg,
            opts,
            run_comparison(&cfg.comparison(opts.refine)?)?,
        ),
        ExperimentName::MainBmo => {
            sweep_report(name, cfg, opts, run_main_bmo(&cfg.main_bmo(opts.refine)?)?)
        }
        ExperimentName::IntrinsicBmo => sweep_report(
            name,
            cfg,
            opts,
            run_intrinsic_bmo(&cfg.intrinsic_bmo(opts.refine)?)?,
        ),
        ExperimentName::HoelderTransfer => {
            sweep_report(name, cfg, opts, run_hoelder_transfer(&cfg.hoelder()?)?)
        }
    }
}

/// `validate --module <m>`; `ok` is false when any check fails.
pub fn validate_command(module: Module, cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let seed = opts.seed.unwrap_or(cfg.experiment.seed);
    let rep = run_module(module, seed)?;
    let table = suite_table(&rep);
    Ok(Report {
        command: "validate".into(),
        config: config_value(cfg, opts),
        ok: rep.passed(),
        result: serde_json::to_value(&rep)?,
        table,
    })
}
