use plap_core::field_io;
use plap_core::grid::{
    divergence_slice, gradient_slice, mean_over, Boundary, FieldData, Grid, Region,
};
use proptest::prelude::*;

fn grid2(m: usize, bc: Boundary) -> Grid {
    Grid::new(2, 1, m, 1.0, 0.1, 0.3, bc).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_is_linear(f in values(144), g in values(144), a in -3.0f64..3.0, b in -3.0f64..3.0,
                          periodic in any::<bool>()) {
        let grid = grid2(12, if periodic { Boundary::Periodic } else { Boundary::Dirichlet });
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let (df, dg) = (gradient_slice(&grid, &f, 1), gradient_slice(&grid, &g, 1));
        for (i, d) in gradient_slice(&grid, &mix, 1).iter().enumerate() {
            let e = a * df[i] + b * dg[i];
            prop_assert!((d - e).abs() <= 1e-10 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn mean_shifts_with_constants(f in values(144 * 4), c in -100.0f64..100.0,
                                  x in 0.0f64..1.0, y in 0.0f64..1.0, r in 0.1f64..0.4) {
        let grid = grid2(12, Boundary::Periodic);
        let field = FieldData::from_values(grid, 1, f.clone()).unwrap();
        let shifted = FieldData::from_values(grid, 1, f.iter().map(|v| v + c).collect()).unwrap();
        let region = Region::cylinder(&grid, 0.3, [x, y], r, 0.17).unwrap();
        let m0 = mean_over(&field, &region).unwrap()[0];
        let m1 = mean_over(&shifted, &region).unwrap()[0];
        prop_assert!((m1 - (m0 + c)).abs() <= 1e-12 * (1.0 + c.abs() + m0.abs()));
    }

    // Discrete integration by parts on the torus: the divergence of any
    // gradient-shaped slice sums to zero.
    #[test]
    fn periodic_divergence_sums_to_zero(f in values(144)) {
        let grid = grid2(12, Boundary::Periodic);
        let g = gradient_slice(&grid, &f, 1);
        let total: f64 = divergence_slice(&grid, &g, 1).iter().sum();
        let scale: f64 = g.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        prop_assert!(total.abs() <= 1e-12 * scale * 144.0);
    }

    // The divergence is the negative adjoint of the gradient.
    #[test]
    fn divergence_is_adjoint(f in values(100), q in values(200), periodic in any::<bool>()) {
        let grid = grid2(10, if periodic { Boundary::Periodic } else { Boundary::Dirichlet });
        let df = gradient_slice(&grid, &f, 1);
        let dq = divergence_slice(&grid, &q, 1);
        let lhs: f64 = df.iter().zip(&q).map(|(a, b)| a * b).sum();
        let rhs: f64 = -f.iter().zip(&dq).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn wrapped_ball_keeps_its_count(x in 0.0f64..1.0, y in 0.0f64..1.0, r in 0.05f64..0.45) {
        let grid = grid2(16, Boundary::Periodic);
        let h = grid.spacing();
        // brute force over cell centers with the minimum-image distance
        let brute = |cx: f64, cy: f64| {
            let mut n = 0;
            for i in 0..16 {
                for j in 0..16 {
                    let wrap = |d: f64| d - (d).round();
                    let dx = wrap((i as f64 + 0.5) * h - cx);
                    let dy = wrap((j as f64 + 0.5) * h - cy);
                    if (dx * dx + dy * dy).sqrt() < r {
                        n += 1;
                    }
                }
            }
            n
        };
        let ball = Region::ball(&grid, [x, y], r, 0).unwrap();
        prop_assert_eq!(ball.cells().len(), brute(x, y));
        // the same ball moved by whole cells keeps the same count
        let moved = Region::ball(&grid, [(x + 5.0 * h) % 1.0, (y + 9.0 * h) % 1.0], r, 0).unwrap();
        prop_assert_eq!(moved.cells().len(), ball.cells().len());
    }

    #[test]
    fn field_files_round_trip(f in values(2 * 64 * 3)) {
        let grid = Grid::new(1, 2, 64, 1.0, 0.05, 0.1, Boundary::Dirichlet).unwrap();
        let field = FieldData::from_values(grid, 2, f).unwrap();
        let mut bin = Vec::new();
        field_io::write_binary(&field, &mut bin).unwrap();
        prop_assert_eq!(&field_io::read_binary(bin.as_slice()).unwrap(), &field);
        let mut csv = Vec::new();
        field_io::write_csv(&field, &mut csv).unwrap();
        prop_assert_eq!(&field_io::read_csv(csv.as_slice()).unwrap(), &field);
    }
}

#[test]
fn smooth_gradient_converges_at_second_order() {
    use std::f64::consts::PI;
    let err = |m: usize| {
        let grid = Grid::new(2, 1, m, 1.0, 0.1, 0.1, Boundary::Periodic).unwrap();
        let f: Vec<f64> = (0..grid.cell_count())
            .map(|c| {
                let x = grid.cell_center(c);
                (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
            })
            .collect();
        let g = gradient_slice(&grid, &f, 1);
        (0..grid.cell_count())
            .map(|c| {
                let x = grid.cell_center(c);
                let ex = 2.0 * PI * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos();
                let ey = -2.0 * PI * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
                (g[2 * c] - ex).abs().max((g[2 * c + 1] - ey).abs())
            })
            .fold(0.0, f64::max)
    };
    for m in [16, 32, 64] {
        let order = (err(m) / err(2 * m)).log2();
        assert!(order >= 1.9, "m = {m}: order {order}");
    }
}
