use std::f64::consts::PI;

use plap_core::geometry::{build_family, verify_items, CylinderFamily, Ladder, PowerField};
use plap_core::grid::{Boundary, GradientField, Grid};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(2, 1, 32, 1.0, 1.0 / 32.0, 1.0, Boundary::Periodic).unwrap()
}

fn constant(l: f64) -> GradientField {
    GradientField::from_fn(grid(), |_, _, o| {
        o[0] = 0.6 * l;
        o[1] = -0.8 * l;
    })
}

/// Piecewise-constant blocks in space and time with magnitudes over two decades.
fn blocks() -> impl Strategy<Value = (usize, usize, Vec<(f64, f64)>)> {
    (1usize..5, 1usize..4).prop_flat_map(|(bx, bt)| {
        let cells = bx * bx * bt;
        (
            Just(bx),
            Just(bt),
            prop::collection::vec((-1.0f64..1.0, 0.0f64..2.0 * PI), cells),
        )
    })
}

fn field(bx: usize, bt: usize, vals: &[(f64, f64)]) -> GradientField {
    GradientField::from_fn(grid(), |t, x, o| {
        let i = ((x[0] * bx as f64) as usize).min(bx - 1);
        let j = ((x[1] * bx as f64) as usize).min(bx - 1);
        let k = ((t * bt as f64) as usize).min(bt - 1);
        let (lm, a) = vals[(k * bx + j) * bx + i];
        let m = 10f64.powf(lm);
        o[0] = m * a.cos();
        o[1] = m * a.sin();
    })
}

fn family(g: &GradientField, p: f64, b: f64, r: f64, s: f64) -> CylinderFamily {
    build_family(
        &PowerField::new(g, p),
        1.0,
        [0.5, 0.5],
        r,
        s,
        b,
        &Ladder::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_fields_scale_linearly(l in 1.0f64..3.0, a in 1.0f64..4.0,
                                      p in prop::sample::select(vec![3.0, 4.0]),
                                      b in prop::sample::select(vec![0.5, 1.0, 1.5])) {
        let f1 = family(&constant(l), p, b, 0.25, 1.0);
        let fa = family(&constant(a * l), p, b, 0.25, 1.0);
        for (x, y) in f1.lambda.iter().zip(&fa.lambda) {
            prop_assert!((x - l).abs() <= 1e-9 * l);
            prop_assert!((y - a * x).abs() <= 1e-9 * y);
        }
    }

    #[test]
    fn family_shape((bx, bt, vals) in blocks(),
                    p in prop::sample::select(vec![3.0, 4.0]),
                    b in prop::sample::select(vec![0.5, 1.0, 1.5]),
                    big_r in 0.15f64..0.3, big_s in 0.2f64..1.0) {
        let g = field(bx, bt, &vals);
        let fam = family(&g, p, b, big_r, big_s);
        let power = PowerField::new(&g, p);
        let n = fam.len();
        for j in 0..n {
            let (r, s, l) = (fam.radii[j], fam.s[j], fam.lambda[j]);
            prop_assert!(s <= big_s * (1.0 + 1e-12));
            prop_assert!((s - l.powf(2.0 - p) * r * r).abs() <= 1e-9 * s);
            prop_assert!(l > 0.0);
            // sub-intrinsic: the mean of |Du|^p over the cylinder is at most lambda^p
            let mean = power.mean(&fam.cylinder(j).region(&grid()).unwrap());
            prop_assert!(mean <= (1.0 + 1e-6) * l.powf(p), "j = {j}: {mean} > {}", l.powf(p));
            for k in j + 1..n {
                // radii decrease along the ladder, so k is the smaller one
                prop_assert!(fam.s[k] < s);
                let bound = (fam.radii[k] / r).powf(b) * s;
                prop_assert!(fam.s[k] <= bound * (1.0 + 1e-6));
            }
        }
        let rep = verify_items(&fam, &grid(), 1e-6, 1.1);
        prop_assert!(rep.item1 && rep.item2 && rep.item3 && rep.item7 && rep.item8,
                     "{:?}", rep.violations);
    }

    #[test]
    fn zero_field_on_standard_cube(p in 2.5f64..5.0, b in 0.2f64..1.9, big_r in 0.1f64..0.3) {
        let fam = family(&GradientField::zeros(grid()), p, b, big_r, big_r * big_r);
        prop_assert!((fam.lambda[0] - 1.0).abs() <= 1e-12);
        prop_assert!(fam.means.iter().all(|&m| m == 0.0));
    }
}

#[test]
fn p_two_is_the_standard_family() {
    let fam = family(&constant(2.0), 2.0, 1.0, 0.25, 1.0);
    for j in 0..fam.len() {
        assert_eq!(fam.lambda[j], 1.0);
        assert!((fam.s[j] - fam.radii[j].powi(2)).abs() <= 1e-15);
    }
}
