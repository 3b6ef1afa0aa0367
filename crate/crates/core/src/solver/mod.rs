//! Implicit variational time stepping for `u_t - div(|Du|^{p-2} Du) = -div g`.
//!
//! Each backward-Euler step minimizes a strictly convex energy over P1
//! lattice elements whose nodes are the cell centers (see [`mesh`]). The
//! flux is regularized to `(|Q|^2 + eps^2)^{(p-2)/2} Q`; for `p >= 2` the
//! solver also runs with `eps = 0`, the lumped mass keeping every Newton
//! system positive definite.

mod mesh;
mod newton;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScaledCylinder;
use crate::grid::{GradientField, Grid, SpaceTimeField};

use mesh::Mesh;
use newton::Stepper;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: f64,
    pub epsilon: f64,
    /// Sup-norm tolerance on the nodal residual `dJ/dv / M`. Values below
    /// the roundoff level of a step are raised to that level.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor during backtracking.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Lower bound for the relative CG tolerance (inexact Newton forcing).
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: 2.0,
            epsilon: 1e-8,
            newton_tol: 1e-8,
            newton_max_iter: 100,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            cg_rel_tol: 1e-10,
            cg_max_iter: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        SolverConfig {
            p,
            ..Default::default()
        }
    }

    /// Checks the invariants for a problem in `dim` space dimensions.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let pmin = 2.0 * dim as f64 / (dim as f64 + 2.0);
        let bad = |m: String| Err(Error::InvalidSolverConfig(m));
        if !(self.p > pmin) || !self.p.is_finite() {
            return bad(format!("p must exceed 2n/(n+2) = {pmin}, got {}", self.p));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if self.p < 2.0 && self.epsilon == 0.0 {
            return bad("p < 2 needs epsilon > 0".into());
        }
        if !(self.newton_tol > 0.0) {
            return bad(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            ));
        }
        if self.newton_max_iter == 0 || self.max_backtracks == 0 || self.cg_max_iter == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad(format!(
                "armijo constant must lie in (0, 1/2), got {}",
                self.armijo
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!(
                "backtrack factor must lie in (0, 1), got {}",
                self.backtrack
            ));
        }
        if !(self.cg_rel_tol > 0.0 && self.cg_rel_tol < 1.0) {
            return bad(format!(
                "cg_rel_tol must lie in (0, 1), got {}",
                self.cg_rel_tol
            ));
        }
        Ok(())
    }
}

/// `(a, b)` with `flux(Q) = a Q` and `D flux(Q)[W] = a W + b (Q : W) Q`.
pub(crate) fn flux_factors(q: &[f64], p: f64, eps: f64) -> (f64, f64) {
    if p == 2.0 {
        return (1.0, 0.0);
    }
    let s: f64 = q.iter().map(|x| x * x).sum::<f64>() + eps * eps;
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let a = s.powf(0.5 * (p - 2.0));
    (a, (p - 2.0) * a / s)
}

/// `Phi_eps(Q) = ((|Q|^2 + eps^2)^{p/2} - eps^p) / p`, the primitive of the flux.
pub(crate) fn primitive(q: &[f64], p: f64, eps: f64) -> f64 {
    let s: f64 = q.iter().map(|x| x * x).sum::<f64>();
    if eps == 0.0 {
        return s.powf(0.5 * p) / p;
    }
    ((s + eps * eps).powf(0.5 * p) - eps.powf(p)) / p
}

/// Regularized flux `(|Q|^2 + eps^2)^{(p-2)/2} Q`; equals `|Q|^{p-2} Q`
/// with `flux(0) = 0` when `eps = 0`.
pub fn flux(q: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let (a, _) = flux_factors(q, p, eps);
    q.iter().map(|x| a * x).collect()
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: SpaceTimeField,
    /// Newton iterations per step (entry `k - 1` for slice `k`).
    pub iterations: Vec<usize>,
    /// Final nodal residual per step.
    pub residuals: Vec<f64>,
    /// `E_k = int |Du(t_k)|^p / p - g(t_k) : Du(t_k)` for `k = 0..=steps`.
    pub energy: Vec<f64>,
}

/// One backward-Euler step on the whole grid. Dirichlet grids hold the
/// boundary-ring values of `u_prev`.
pub fn step_implicit(
    grid: &Grid,
    u_prev: &[f64],
    g_slice: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    cfg.validate(grid.dim())?;
    check_slice(grid, u_prev, grid.components(), "u_prev")?;
    check_slice(grid, g_slice, grid.components() * grid.dim(), "g slice")?;
    let mesh = Mesh::full(grid);
    let mut stepper = Stepper::new(&mesh, cfg, grid.tau(), grid.components());
    let mut v = u_prev.to_vec();
    stepper.solve(&mut v, u_prev, g_slice, 1)?;
    Ok(v)
}

fn check_slice(grid: &Grid, values: &[f64], width: usize, what: &str) -> Result<()> {
    if values.len() != grid.cell_count() * width {
        return Err(Error::ShapeMismatch(format!(
            "{what} has {} values, expected {}",
            values.len(),
            grid.cell_count() * width
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: 0,
            what: what.to_string(),
        });
    }
    Ok(())
}

/// Integrates from `u0` over every slice of `g`'s grid. Slice `k` of the
/// result solves the step driven by slice `k` of `g`. On Dirichlet grids
/// the boundary ring keeps the values of `u0`.
pub fn solve(u0: &[f64], g: &GradientField, cfg: &SolverConfig) -> Result<SolveResult> {
    let grid = *g.grid();
    cfg.validate(grid.dim())?;
    if g.width() != grid.components() * grid.dim() {
        return Err(Error::ShapeMismatch(
            "forcing must be gradient-shaped".into(),
        ));
    }
    check_slice(&grid, u0, grid.components(), "u0")?;
    let mesh = Mesh::full(&grid);
    let mut stepper = Stepper::new(&mesh, cfg, grid.tau(), grid.components());
    let mut u = SpaceTimeField::zeros(grid);
    u.slice_mut(0).copy_from_slice(u0);
    let mut iterations = Vec::with_capacity(grid.steps());
    let mut residuals = Vec::with_capacity(grid.steps());
    let mut v = u0.to_vec();
    for k in 1..=grid.steps() {
        let prev = u.slice(k - 1).to_vec();
        let out = stepper.solve(&mut v, &prev, g.slice(k), k)?;
        iterations.push(out.iterations);
        residuals.push(out.residual);
        u.slice_mut(k).copy_from_slice(&v);
    }
    let energy = (0..grid.slice_count())
        .map(|k| energy_of(&mesh, &grid, u.slice(k), g.slice(k), cfg.p))
        .collect();
    Ok(SolveResult {
        u,
        iterations,
        residuals,
        energy,
    })
}

fn energy_of(mesh: &Mesh, grid: &Grid, u: &[f64], g: &[f64], p: f64) -> f64 {
    let k = grid.components();
    let w = k * grid.dim();
    let mut q = vec![0.0; w];
    let mut ge = vec![0.0; w];
    let mut total = 0.0;
    for e in &mesh.elements {
        mesh.element_gradient(e, u, k, &mut q);
        mesh.element_average(e, g, w, &mut ge);
        let qq: f64 = q.iter().map(|x| x * x).sum();
        let work: f64 = q.iter().zip(&ge).map(|(a, b)| a * b).sum();
        total += mesh.area * (qq.powf(0.5 * p) / p - work);
    }
    total
}

/// Slice range `(initial, top)` of a cylinder on the grid: the comparison
/// problem starts from slice `initial` and is solved up to `top`.
pub fn cylinder_slices(grid: &Grid, cyl: &ScaledCylinder) -> Result<(usize, usize)> {
    let tau = grid.tau();
    let top = ((cyl.time / tau) + 1e-9).floor().min(grid.steps() as f64);
    let bottom = ((cyl.time - cyl.s) / tau + 1e-9).floor().max(0.0);
    if !(top > bottom) {
        return Err(Error::DegenerateRegion(format!(
            "cylinder ({}, {}] contains no full time step",
            cyl.time - cyl.s,
            cyl.time
        )));
    }
    Ok((bottom as usize, top as usize))
}

/// The p-caloric comparison function on a cylinder: `g = 0` inside, the
/// values of `u` on the lateral boundary layer of the clipped ball at every
/// slice, and `h = u` on the initial slice. Outside the cylinder the
/// returned field equals `u`.
pub fn solve_caloric(
    u: &SpaceTimeField,
    cyl: &ScaledCylinder,
    cfg: &SolverConfig,
) -> Result<SpaceTimeField> {
    let grid = *u.grid();
    cfg.validate(grid.dim())?;
    let region = cyl.region(&grid)?;
    let (bottom, top) = cylinder_slices(&grid, cyl)?;
    let mut inside = vec![false; grid.cell_count()];
    for &c in region.cells() {
        inside[c] = true;
    }
    let mesh = Mesh::restricted(&grid, &inside);
    let mut h = u.clone();
    if mesh.free_nodes.is_empty() {
        return Ok(h);
    }
    let k = grid.components();
    let mut stepper = Stepper::new(&mesh, cfg, grid.tau(), k);
    let zero_g = vec![0.0; grid.cell_count() * k * grid.dim()];
    let mut v = h.slice(bottom).to_vec();
    for step in bottom + 1..=top {
        let prev = h.slice(step - 1).to_vec();
        // boundary layer and exterior follow u; interior starts from h
        let target = u.slice(step);
        for node in 0..grid.cell_count() {
            if !mesh.free[node] {
                v[node * k..(node + 1) * k].copy_from_slice(&target[node * k..(node + 1) * k]);
            }
        }
        stepper.solve(&mut v, &prev, &zero_g, step)?;
        h.slice_mut(step).copy_from_slice(&v);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, Point};
    use std::f64::consts::PI;

    #[test]
    fn flux_examples() {
        assert_eq!(flux(&[0.0, 0.0], 3.0, 0.0), vec![0.0, 0.0]);
        assert_eq!(flux(&[1.5, -2.0], 2.0, 0.3), vec![1.5, -2.0]);
        assert_eq!(flux(&[2.0, 0.0], 4.0, 0.0), vec![8.0, 0.0]);
        let f = flux(&[3.0, 4.0], 3.0, 0.0);
        assert!((f[0] - 15.0).abs() < 1e-12 && (f[1] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn flux_is_derivative_of_primitive() {
        let q = [0.7, -1.3, 0.2, 0.9];
        for &(p, eps) in &[(3.0, 0.0), (4.0, 0.1), (1.5, 0.2), (2.0, 0.0)] {
            let f = flux(&q, p, eps);
            for i in 0..4 {
                let mut a = q;
                let mut b = q;
                a[i] += 1e-6;
                b[i] -= 1e-6;
                let fd = (primitive(&a, p, eps) - primitive(&b, p, eps)) / 2e-6;
                assert!((fd - f[i]).abs() < 1e-6, "p={p} i={i} {fd} vs {}", f[i]);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::with_p(1.2).validate(2).is_ok());
        assert!(SolverConfig::with_p(1.0).validate(2).is_err());
        let mut c = SolverConfig::with_p(1.5);
        c.epsilon = 0.0;
        assert!(c.validate(1).is_err());
        c.p = 3.0;
        assert!(c.validate(1).is_ok());
        c.newton_tol = 0.0;
        assert!(c.validate(1).is_err());
    }

    fn periodic_1d(m: usize, tau: f64, t: f64) -> Grid {
        Grid::new(1, 1, m, 1.0, tau, t, Boundary::Periodic).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(2, 2, 8, 1.0, 0.1, 0.1, Boundary::Periodic).unwrap();
        let u = step_implicit(
            &g,
            &vec![0.0; 128],
            &vec![0.0; 256],
            &SolverConfig::with_p(3.0),
        )
        .unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_step_matches_backward_euler_fourier_factor() {
        // the P1 lattice stiffness in 1D is the standard three-point
        // Laplacian, whose symbol on sin(2 pi x) is 4 sin^2(pi h)/h^2
        let m = 64;
        let tau = 1e-3;
        let g = periodic_1d(m, tau, tau);
        let u0: Vec<f64> = (0..m)
            .map(|c| (2.0 * PI * g.cell_center(c)[0]).sin())
            .collect();
        let mut cfg = SolverConfig::with_p(2.0);
        cfg.newton_tol = 1e-12;
        let u1 = step_implicit(&g, &u0, &vec![0.0; m], &cfg).unwrap();
        let h = g.spacing();
        let symbol = 4.0 * (PI * h).sin().powi(2) / (h * h);
        let exact_discrete = 1.0 / (1.0 + tau * symbol);
        let exact_continuum = 1.0 / (1.0 + 4.0 * PI * PI * tau);
        for c in 0..m {
            assert!((u1[c] - exact_discrete * u0[c]).abs() < 1e-11);
            assert!((u1[c] - exact_continuum * u0[c]).abs() < 1e-4);
        }
    }

    #[test]
    fn constants_are_stationary() {
        let g = Grid::new(2, 1, 8, 1.0, 0.05, 0.5, Boundary::Dirichlet).unwrap();
        let u0 = vec![2.5; 64];
        let r = solve(&u0, &GradientField::zeros(g), &SolverConfig::with_p(3.0)).unwrap();
        assert!(r.u.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn heat_mode_decays() {
        let g = periodic_1d(128, 1e-4, 0.01);
        let u0: Vec<f64> = (0..128)
            .map(|c| (2.0 * PI * g.cell_center(c)[0]).sin())
            .collect();
        let r = solve(&u0, &GradientField::zeros(g), &SolverConfig::with_p(2.0)).unwrap();
        let decay = (-4.0 * PI * PI * 0.01f64).exp();
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..128 {
            let e = decay * u0[c];
            num += (r.u.at(g.steps(), c)[0] - e).powi(2);
            den += e * e;
        }
        assert!((num / den).sqrt() < 0.01);
        assert!(r.residuals.iter().all(|&x| x <= 1e-8));
    }

    #[test]
    fn energy_decreases_per_step() {
        let g = Grid::new(2, 1, 12, 1.0, 0.01, 0.05, Boundary::Dirichlet).unwrap();
        let u0: Vec<f64> = (0..g.cell_count())
            .map(|c| {
                let x = g.cell_center(c);
                (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[0] * x[1]
            })
            .collect();
        let cfg = SolverConfig::with_p(3.0);
        let mesh = Mesh::full(&g);
        let mut st = Stepper::new(&mesh, &cfg, g.tau(), 1);
        let zero = vec![0.0; 2 * g.cell_count()];
        let mut v = u0.clone();
        st.solve(&mut v, &u0, &zero, 1).unwrap();
        assert!(st.energy_of(&v, &u0) <= st.energy_of(&u0, &u0));
    }

    #[test]
    fn affine_data_gives_affine_caloric_function() {
        let g = Grid::new(2, 1, 16, 1.0, 0.02, 0.2, Boundary::Dirichlet).unwrap();
        let u = SpaceTimeField::from_fn(g, |_, x, o| o[0] = 0.3 * x[0] - 0.7 * x[1] + 1.0);
        let cyl = ScaledCylinder::standard(0.2, [0.5, 0.5], 0.3, 0.1, 3.0);
        let h = solve_caloric(&u, &cyl, &SolverConfig::with_p(3.0)).unwrap();
        for (a, b) in h.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn caloric_solution_reproduces_caloric_u() {
        let g = Grid::new(1, 1, 64, 1.0, 1e-3, 0.05, Boundary::Periodic).unwrap();
        let u0: Vec<f64> = (0..64)
            .map(|c| (2.0 * PI * g.cell_center(c)[0]).sin())
            .collect();
        let mut cfg = SolverConfig::with_p(3.0);
        cfg.newton_tol = 1e-11;
        let r = solve(&u0, &GradientField::zeros(g), &cfg).unwrap();
        let center: Point = [0.4, 0.0];
        let cyl = ScaledCylinder::standard(0.05, center, 0.2, 0.03, 3.0);
        let h = solve_caloric(&r.u, &cyl, &cfg).unwrap();
        let err = h
            .values()
            .iter()
            .zip(r.u.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8, "{err}");
    }
}
