use std::f64::consts::PI;

use plap_core::grid::{Boundary, GradientField, Grid};
use plap_core::solver::{flux, solve, SolverConfig};
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn trig(grid: &Grid, c: &[f64; 3]) -> Vec<f64> {
    (0..grid.cell_count())
        .map(|i| {
            let x = grid.cell_center(i)[0];
            c[0] * (2.0 * PI * x).sin() + c[1] * (4.0 * PI * x).cos() + c[2] * (6.0 * PI * x).sin()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // u_A(t) = A u(A^{p-2} t) solves the system with forcing A^{p-1} g(A^{p-2} t).
    // On the discrete side the step shrinks by A^{2-p}; A = 2 keeps it exact.
    #[test]
    fn amplitude_equivariance(p in prop::sample::select(vec![2.0, 3.0, 4.0]),
                              c in prop::array::uniform3(0.2f64..1.0),
                              gs in -1.0f64..1.0) {
        let a: f64 = 2.0;
        let (tau, steps) = (2e-3, 10);
        let mut cfg = SolverConfig::with_p(p);
        cfg.epsilon = 0.0;
        cfg.newton_tol = 1e-11;
        let grid = Grid::new(1, 1, 32, 1.0, tau, tau * steps as f64, Boundary::Periodic).unwrap();
        let f = a.powf(2.0 - p);
        let scaled = grid.with_time(tau * f, tau * f * steps as f64).unwrap();
        let u0 = trig(&grid, &c);
        let g = GradientField::from_fn(grid, |t, x, o| o[0] = gs * (2.0 * PI * x[0]).cos() * (1.0 + t));
        let gscaled = GradientField::from_fn(scaled, |t, x, o| {
            o[0] = a.powf(p - 1.0) * gs * (2.0 * PI * x[0]).cos() * (1.0 + t / f)
        });
        let base = solve(&u0, &g, &cfg).unwrap();
        let au0: Vec<f64> = u0.iter().map(|v| a * v).collect();
        let big = solve(&au0, &gscaled, &cfg).unwrap();
        for k in 0..=steps {
            let expect: Vec<f64> = base.u.slice(k).iter().map(|v| a * v).collect();
            let d = max_diff(big.u.slice(k), &expect);
            prop_assert!(d <= 1e-7, "slice {k}: {d:e}");
        }
    }

    #[test]
    fn flux_is_monotone(p in 1.5f64..5.0,
                        q in prop::array::uniform4(-3.0f64..3.0),
                        r in prop::array::uniform4(-3.0f64..3.0)) {
        let (fq, fr) = (flux(&q, p, 0.0), flux(&r, p, 0.0));
        let s: f64 = (0..4).map(|i| (fq[i] - fr[i]) * (q[i] - r[i])).sum();
        prop_assert!(s >= -1e-12 * (1.0 + fq.iter().chain(&fr).map(|x| x.abs()).sum::<f64>()));
    }

    // Without forcing each step lowers the Dirichlet energy.
    #[test]
    fn energy_decreases_without_forcing(p in prop::sample::select(vec![2.0, 2.5, 3.0, 4.0]),
                                        c in prop::array::uniform3(-1.0f64..1.0)) {
        let grid = Grid::new(1, 1, 32, 1.0, 1e-3, 2e-2, Boundary::Periodic).unwrap();
        let res = solve(&trig(&grid, &c), &GradientField::zeros(grid), &SolverConfig::with_p(p)).unwrap();
        for w in res.energy.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1e-300), "{} -> {}", w[0], w[1]);
        }
        let tol = SolverConfig::with_p(p).newton_tol;
        prop_assert!(res.residuals.iter().all(|&r| r <= tol.max(1e-12)));
    }

    #[test]
    fn constants_stay_constant(p in 1.8f64..4.0, c in -5.0f64..5.0) {
        let grid = Grid::new(2, 2, 8, 1.0, 0.01, 0.05, Boundary::Dirichlet).unwrap();
        let u0 = vec![c; grid.cell_count() * 2];
        let res = solve(&u0, &GradientField::zeros(grid), &SolverConfig::with_p(p)).unwrap();
        for k in 0..grid.slice_count() {
            prop_assert!(max_diff(res.u.slice(k), &u0) <= 1e-12);
        }
    }
}

#[test]
fn smaller_epsilon_converges() {
    let grid = Grid::new(1, 1, 64, 1.0, 1e-3, 0.02, Boundary::Periodic).unwrap();
    let u0 = trig(&grid, &[1.0, 0.3, 0.0]);
    let g = GradientField::zeros(grid);
    let run = |eps: f64| {
        let mut cfg = SolverConfig::with_p(3.0);
        cfg.epsilon = eps;
        solve(&u0, &g, &cfg).unwrap().u
    };
    let (a, b, c) = (run(1e-2), run(5e-3), run(2.5e-3));
    let last = grid.steps();
    let d1 = max_diff(a.slice(last), b.slice(last));
    let d2 = max_diff(b.slice(last), c.slice(last));
    assert!(d2 < d1, "{d1:e} {d2:e}");
}
