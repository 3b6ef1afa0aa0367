use plap_core::experiments::{
    run_caloric_decay, run_comparison, run_hoelder_transfer, run_main_bmo, ComparisonConfig,
    DecayConfig, ForcingFamily, HoelderConfig, MainBmoConfig,
};
use plap_core::grid::{Boundary, Grid};
use proptest::prelude::*;

fn small_comparison(p: f64) -> ComparisonConfig {
    let mut c = ComparisonConfig::new(p);
    c.grid = Grid::new(1, 1, 64, 1.0, 4e-3, 0.2, Boundary::Periodic).unwrap();
    c.amplitudes = vec![1.0, 3.0];
    c.outer_duration = 0.08;
    c.forcing = ForcingFamily::Log { ramp: 0.04 };
    c
}

#[test]
fn experiments_are_deterministic() {
    let c = small_comparison(3.0);
    assert_eq!(run_comparison(&c).unwrap(), run_comparison(&c).unwrap());

    let mut m = MainBmoConfig::new(3.0);
    m.grid = Grid::new(1, 1, 64, 1.0, 0.01, 0.3, Boundary::Dirichlet).unwrap();
    m.amplitudes = vec![1.0, 4.0];
    m.coarse_level = false;
    assert_eq!(run_main_bmo(&m).unwrap(), run_main_bmo(&m).unwrap());

    let mut h = HoelderConfig::new(3.0, 0.3);
    h.grid = Grid::new(1, 1, 128, 1.0, 2e-3, 0.1, Boundary::Dirichlet).unwrap();
    h.time_levels = 4;
    let (a, b) = (
        run_hoelder_transfer(&h).unwrap(),
        run_hoelder_transfer(&h).unwrap(),
    );
    // NaN entries compare unequal, so compare the serialized form
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );

    let mut d = DecayConfig::new(3.0);
    d.seeds = vec![7];
    d.refine = false;
    let (a, b) = (
        run_caloric_decay(&d).unwrap(),
        run_caloric_decay(&d).unwrap(),
    );
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    // (g, u0) -> (A^{p-1} g(A^{p-2} t), A u0) maps u to A u(A^{p-2} t), so with
    // every duration shrunk by A^{2-p} the comparison constants are unchanged.
    #[test]
    fn comparison_ratios_survive_rescaling(p in prop::sample::select(vec![2.0, 3.0, 4.0]),
                                           amp in 0.5f64..2.0) {
        let a: f64 = 2.0;
        let f = a.powf(2.0 - p);
        let mut base = small_comparison(p);
        base.solver.epsilon = 0.0;
        base.solver.newton_tol = 1e-12;
        base.amplitudes = vec![amp];
        let mut scaled = base.clone();
        scaled.grid = base.grid.with_time(base.grid.tau() * f, base.grid.final_time() * f).unwrap();
        scaled.outer_duration *= f;
        scaled.forcing = ForcingFamily::Log { ramp: 0.04 * f };
        scaled.amplitudes = vec![amp * a.powf(p - 1.0)];
        let (r0, r1) = (run_comparison(&base).unwrap(), run_comparison(&scaled).unwrap());
        let (c0, c1) = (r0.points[0].constant, r1.points[0].constant);
        prop_assert!((c0 - c1).abs() <= 1e-6 * c0.abs(), "{c0} vs {c1}");
        let (m0, m1) = (r0.points[0].measured, r1.points[0].measured);
        prop_assert!((m1 - a.powf(p) * m0).abs() <= 1e-6 * m1.abs(), "{m0} vs {m1}");
    }
}
