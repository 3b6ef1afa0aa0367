//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits non-zero if any fails.
//!
//! Build with optimizations; the test profile of the workspace already sets
//! `opt-level = 3`.

use std::process::ExitCode;
use std::time::Instant;

use plap_core::cli_report::{
    ellipticity_suite, heat_validation, mean_value_inequalities, scaling_suite,
    seminorm_closed_forms, stationary_drift, Check,
};
use plap_core::experiments::{
    run_caloric_decay, run_comparison, run_hoelder_transfer, run_main_bmo, ComparisonConfig,
    DecayConfig, ForcingFamily, HoelderConfig, MainBmoConfig,
};
use plap_core::Result;

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            detail: String::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&what());
            self.passed = false;
        }
    }

    fn note(&mut self, s: String) {
        if self.passed {
            if !self.detail.is_empty() {
                self.detail.push_str(", ");
            }
            self.detail.push_str(&s);
        }
    }
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        let metrics: Vec<String> = c
            .metrics
            .iter()
            .take(6)
            .map(|(k, v)| format!("{k}={v:.4e}"))
            .collect();
        Outcome {
            passed: c.passed,
            detail: if c.passed {
                metrics.join(", ")
            } else {
                c.detail
            },
        }
    }
}

fn heat() -> Result<Outcome> {
    Ok(heat_validation()?.into())
}

fn drift() -> Result<Outcome> {
    Ok(stationary_drift(100)?.into())
}

fn ellipticity() -> Result<Outcome> {
    Ok(ellipticity_suite(10_000, SEED)?.into())
}

fn scaling() -> Result<Outcome> {
    Ok(scaling_suite(100, SEED)?.into())
}

fn decay() -> Result<Outcome> {
    let start = Instant::now();
    let mut out = Outcome::new();
    for p in [2.0, 3.0, 4.0] {
        let cfg = DecayConfig::new(p);
        out.require(cfg.seeds.len() >= 5, || {
            format!("p = {p}: fewer than 5 seeds")
        });
        let reps = run_caloric_decay(&cfg)?;
        let (mut worst_r2, mut worst_alpha, mut worst_defect, mut worst_factor) =
            (f64::INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
        for r in &reps {
            let seed = r.seed;
            out.require(r.skipped.is_none(), || {
                format!("p = {p}, seed {seed} skipped: {:?}", r.skipped)
            });
            let (alpha, r2) = r.fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r2));
            worst_alpha = worst_alpha.min(alpha);
            worst_r2 = worst_r2.min(r2);
            out.require(alpha > 0.0 && r2 >= 0.9, || {
                format!("p = {p}, seed {seed}: alpha_hat {alpha}, R^2 {r2}")
            });
            let d = r.monotonicity_defect();
            worst_defect = worst_defect.max(d);
            out.require(d <= 0.1, || {
                format!("p = {p}, seed {seed}: monotonicity defect {d}")
            });
            out.require(r.harnack.is_finite(), || {
                format!("p = {p}, seed {seed}: Harnack ratio {}", r.harnack)
            });
            let factor = r.refinement.as_ref().map_or(f64::NAN, |x| x.factor);
            worst_factor = worst_factor.max(factor);
            out.require(factor <= 3.0, || {
                format!("p = {p}, seed {seed}: Harnack ratio changes by {factor} under refinement")
            });
        }
        out.note(format!(
            "p={p}: min alpha_hat={worst_alpha:.3} min R2={worst_r2:.3} defect={worst_defect:.3} harnack factor={worst_factor:.3}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    out.require(secs < 600.0, || format!("took {secs:.0} s"));
    Ok(out)
}

fn comparison() -> Result<Outcome> {
    let mut out = Outcome::new();
    for p in [2.0, 3.0] {
        let cfg = ComparisonConfig::new(p);
        out.require(cfg.amplitudes == [1.0, 2.0, 4.0, 8.0], || {
            "amplitudes differ from 1, 2, 4, 8".into()
        });
        let rep = run_comparison(&cfg)?;
        let spread = rep.scalars["normalized_spread"];
        out.require(spread <= 3.0, || {
            format!("p = {p}: normalized spread {spread}")
        });
        out.note(format!("p={p}: spread={spread:.3}"));

        let mut zero = ComparisonConfig::new(p);
        zero.forcing = ForcingFamily::Zero;
        zero.amplitudes = vec![1.0];
        let lhs = run_comparison(&zero)?.points[0].measured;
        let tol = zero.solver.newton_tol;
        out.require(lhs <= tol, || {
            format!("p = {p}: g = 0 gives {lhs:e} > {tol:e}")
        });
        out.note(format!("p={p}: zero-forcing lhs={lhs:.2e}"));
    }
    Ok(out)
}

fn main_bmo() -> Result<Outcome> {
    let start = Instant::now();
    let mut out = Outcome::new();
    for p in [2.0, 3.0, 4.0] {
        let rep = run_main_bmo(&MainBmoConfig::new(p))?;
        let Some(fit) = rep.fit else {
            out.require(false, || format!("p = {p}: no growth fit"));
            continue;
        };
        if p == 2.0 {
            out.require((fit.slope - 1.0).abs() <= 0.1, || {
                format!("p = 2: slope {}", fit.slope)
            });
        } else {
            let bound = 1.0 / (p - 1.0) + 0.15;
            out.require(fit.slope <= bound && fit.r2 >= 0.8, || {
                format!(
                    "p = {p}: slope {} (bound {bound}), R^2 {}",
                    fit.slope, fit.r2
                )
            });
        }
        out.note(format!("p={p}: slope={:.3} R2={:.3}", fit.slope, fit.r2));
    }
    let secs = start.elapsed().as_secs_f64();
    out.require(secs < 1200.0, || format!("took {secs:.0} s"));
    Ok(out)
}

fn hoelder() -> Result<Outcome> {
    let mut out = Outcome::new();
    let (p, gamma) = (3.0, 0.3);
    let rep = run_hoelder_transfer(&HoelderConfig::new(p, gamma))?;
    let get = |k: &str| rep.scalars.get(k).copied().unwrap_or(f64::NAN);
    let (e, slope, r2) = (get("spatial_exponent"), get("time_slope"), get("time_r2"));
    let target = gamma * p / 2.0 - 0.1;
    out.require(e >= 0.25, || format!("spatial exponent {e} < 0.25"));
    out.require(slope > 0.0 && r2 >= 0.8, || {
        format!("time slope {slope} with R^2 {r2}")
    });
    out.require(slope >= target, || format!("time slope {slope} < {target}"));
    out.note(format!(
        "spatial exponent={e:.3}, time slope={slope:.3} (R2={r2:.3})"
    ));
    Ok(out)
}

fn mean_value() -> Result<Outcome> {
    Ok(mean_value_inequalities(10_000, SEED)?.into())
}

fn closed_forms() -> Result<Outcome> {
    Ok(seminorm_closed_forms()?.into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("heat_linear_limit", heat),
        ("stationary_drift", drift),
        ("ellipticity_ratios", ellipticity),
        ("scaling_families", scaling),
        ("caloric_decay", decay),
        ("comparison_energy", comparison),
        ("main_bmo_growth", main_bmo),
        ("hoelder_transfer", hoelder),
        ("mean_value_inequalities", mean_value),
        ("seminorm_closed_forms", closed_forms),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        let secs = start.elapsed().as_secs_f64();
        failed += usize::from(!outcome.passed);
        println!(
            "{} {:>2} {name} ({secs:.1} s): {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
