//! One backward-Euler step as a convex minimization.
//!
//! `J(v) = sum_free M |v - u_prev|^2 / (2 tau) + sum_e A_e [Phi(grad v_e) - g_e : grad v_e]`
//! is minimized over the free nodes by damped Newton with Armijo
//! backtracking; Newton systems are solved matrix-free by Jacobi-
//! preconditioned conjugate gradients.

use super::mesh::Mesh;
use super::{flux_factors, primitive, SolverConfig};
use crate::error::{Error, Result};

pub(crate) struct StepOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Per-element linearization data cached by a gradient evaluation.
struct Linearization {
    q: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

pub(crate) struct Stepper<'a> {
    mesh: &'a Mesh,
    cfg: &'a SolverConfig,
    tau: f64,
    comps: usize,
    /// Element averages of the forcing for the current step.
    g_elem: Vec<f64>,
    lin: Linearization,
}

impl<'a> Stepper<'a> {
    pub fn new(mesh: &'a Mesh, cfg: &'a SolverConfig, tau: f64, comps: usize) -> Self {
        let w = comps * mesh.grid.dim();
        let ne = mesh.elements.len();
        Stepper {
            mesh,
            cfg,
            tau,
            comps,
            g_elem: vec![0.0; ne * w],
            lin: Linearization {
                q: vec![0.0; ne * w],
                a: vec![0.0; ne],
                b: vec![0.0; ne],
            },
        }
    }

    fn width(&self) -> usize {
        self.comps * self.mesh.grid.dim()
    }

    fn set_forcing(&mut self, g_slice: &[f64]) {
        let w = self.width();
        for (e, out) in self
            .mesh
            .elements
            .iter()
            .zip(self.g_elem.chunks_exact_mut(w))
        {
            self.mesh.element_average(e, g_slice, w, out);
        }
    }

    /// Energy and a magnitude scale for roundoff-aware comparisons.
    fn energy(&self, v: &[f64], u_prev: &[f64]) -> (f64, f64) {
        let mesh = self.mesh;
        let w = self.width();
        let k = self.comps;
        let mut j = 0.0;
        let mut scale = 0.0;
        let coef = mesh.mass / (2.0 * self.tau);
        for &node in &mesh.free_nodes {
            for c in 0..k {
                let d = v[node * k + c] - u_prev[node * k + c];
                j += coef * d * d;
                scale += coef * d * d;
            }
        }
        let mut q = vec![0.0; w];
        for (e, g) in mesh.elements.iter().zip(self.g_elem.chunks_exact(w)) {
            mesh.element_gradient(e, v, k, &mut q);
            let phi = primitive(&q, self.cfg.p, self.cfg.epsilon);
            let work: f64 = q.iter().zip(g).map(|(a, b)| a * b).sum();
            j += mesh.area * (phi - work);
            scale += mesh.area * (phi.abs() + work.abs());
        }
        (j, scale)
    }

    /// Gradient of `J` (zero on fixed nodes); caches the linearization and
    /// returns the sup-norm residual together with its roundoff floor.
    fn gradient(&mut self, v: &[f64], u_prev: &[f64], out: &mut [f64]) -> (f64, f64) {
        let mesh = self.mesh;
        let w = self.width();
        let k = self.comps;
        let n = mesh.grid.dim();
        let (p, eps) = (self.cfg.p, self.cfg.epsilon);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut mag = vec![0.0; out.len() / k];
        let mut t = vec![0.0; w];
        for (idx, e) in mesh.elements.iter().enumerate() {
            let q = &mut self.lin.q[idx * w..(idx + 1) * w];
            mesh.element_gradient(e, v, k, q);
            let (a, b) = flux_factors(q, p, eps);
            self.lin.a[idx] = a;
            self.lin.b[idx] = b;
            let g = &self.g_elem[idx * w..(idx + 1) * w];
            let mut size = 0.0f64;
            for i in 0..w {
                t[i] = a * q[i] - g[i];
                size = size.max((a * q[i]).abs() + g[i].abs());
            }
            mesh.scatter(e, &t, k, mesh.area, out);
            // roundoff in the differences feeding q is amplified by the
            // local stiffness (a + |b| |Q|^2) / h
            let vmax = e.nodes[..e.nverts]
                .iter()
                .flat_map(|&nd| v[nd * k..(nd + 1) * k].iter())
                .fold(0.0f64, |m, x| m.max(x.abs()));
            let qq: f64 = q.iter().map(|x| x * x).sum();
            let stiff = (a + b.abs() * qq) * vmax * mesh.inv_h;
            let contrib = mesh.area * mesh.inv_h * (size + stiff) * n as f64;
            for &nd in &e.nodes[..e.nverts] {
                mag[nd] += contrib;
            }
        }
        let coef = mesh.mass / self.tau;
        let mut res = 0.0f64;
        let mut floor = 0.0f64;
        for node in 0..mag.len() {
            if !mesh.free[node] {
                out[node * k..(node + 1) * k]
                    .iter_mut()
                    .for_each(|o| *o = 0.0);
                continue;
            }
            let mut m = mag[node];
            for c in 0..k {
                let i = node * k + c;
                out[i] += coef * (v[i] - u_prev[i]);
                res = res.max(out[i].abs() / mesh.mass);
                m += coef * (v[i].abs() + u_prev[i].abs());
            }
            floor = floor.max(m / mesh.mass);
        }
        (res, 64.0 * f64::EPSILON * floor)
    }

    /// Hessian-vector product at the cached linearization.
    fn hess_vec(&self, x: &[f64], out: &mut [f64]) {
        let mesh = self.mesh;
        let w = self.width();
        let k = self.comps;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut dq = vec![0.0; w];
        for (idx, e) in mesh.elements.iter().enumerate() {
            mesh.element_gradient(e, x, k, &mut dq);
            let q = &self.lin.q[idx * w..(idx + 1) * w];
            let (a, b) = (self.lin.a[idx], self.lin.b[idx]);
            let qd: f64 = q.iter().zip(&dq).map(|(u, v)| u * v).sum();
            for i in 0..w {
                dq[i] = a * dq[i] + b * qd * q[i];
            }
            mesh.scatter(e, &dq, k, mesh.area, out);
        }
        let coef = mesh.mass / self.tau;
        for node in 0..mesh.free.len() {
            for c in 0..k {
                let i = node * k + c;
                if mesh.free[node] {
                    out[i] += coef * x[i];
                } else {
                    out[i] = 0.0;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mesh = self.mesh;
        let w = self.width();
        let k = self.comps;
        let n = mesh.grid.dim();
        let mut diag = vec![0.0; mesh.free.len() * k];
        let h2 = mesh.inv_h * mesh.inv_h;
        for (idx, e) in mesh.elements.iter().enumerate() {
            let q = &self.lin.q[idx * w..(idx + 1) * w];
            let (a, b) = (self.lin.a[idx], self.lin.b[idx]);
            for &node in &e.nodes[..e.nverts] {
                for c in 0..k {
                    let mut ss = 0.0;
                    let mut sq = 0.0;
                    for d in 0..n {
                        let (pl, mi) = e.diff[d];
                        let s = if pl == node {
                            1.0
                        } else if mi == node {
                            -1.0
                        } else {
                            0.0
                        };
                        ss += s * s;
                        sq += s * q[c * n + d];
                    }
                    diag[node * k + c] += mesh.area * h2 * (a * ss + b * sq * sq);
                }
            }
        }
        let coef = mesh.mass / self.tau;
        for node in 0..mesh.free.len() {
            for c in 0..k {
                let i = node * k + c;
                diag[i] = if mesh.free[node] { diag[i] + coef } else { 1.0 };
            }
        }
        diag
    }

    /// Jacobi-preconditioned CG for `H x = rhs` on the free nodes.
    fn pcg(&self, rhs: &[f64], rtol: f64) -> Vec<f64> {
        let diag = self.diagonal();
        let nn = rhs.len();
        let mut x = vec![0.0; nn];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut hp = vec![0.0; nn];
        let mut rz: f64 = dot(&r, &z);
        let r0 = dot(&r, &r).sqrt();
        if r0 == 0.0 {
            return x;
        }
        let max_iter = self.cfg.cg_max_iter.max(10);
        for _ in 0..max_iter {
            self.hess_vec(&p, &mut hp);
            let php = dot(&p, &hp);
            if !(php > 0.0) {
                break;
            }
            let alpha = rz / php;
            for i in 0..nn {
                x[i] += alpha * p[i];
                r[i] -= alpha * hp[i];
            }
            if dot(&r, &r).sqrt() <= rtol * r0 {
                break;
            }
            for i in 0..nn {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..nn {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }

    /// Minimizes `J` starting from `v` (fixed nodes must already hold their
    /// boundary values). `step` only labels errors.
    pub fn solve(
        &mut self,
        v: &mut [f64],
        u_prev: &[f64],
        g_slice: &[f64],
        step: usize,
    ) -> Result<StepOutcome> {
        self.set_forcing(g_slice);
        let nn = v.len();
        let mut grad = vec![0.0; nn];
        let mut trial = vec![0.0; nn];
        let mut trial_grad = vec![0.0; nn];
        let (mut res, mut floor) = self.gradient(v, u_prev, &mut grad);
        let (mut j, mut jscale) = self.energy(v, u_prev);
        let res0 = res.max(f64::MIN_POSITIVE);
        let mut iterations = 0;
        loop {
            if !res.is_finite() || !j.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    what: "Newton residual".into(),
                });
            }
            let tol = self.cfg.newton_tol.max(floor);
            if res <= tol {
                return Ok(StepOutcome {
                    iterations,
                    residual: res,
                });
            }
            if iterations >= self.cfg.newton_max_iter {
                return Err(Error::NewtonStagnation {
                    step,
                    iterations,
                    residual: res,
                });
            }
            iterations += 1;

            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let forcing = (res / res0).sqrt().min(0.1).max(self.cfg.cg_rel_tol);
            let mut dir = self.pcg(&rhs, forcing);
            let mut slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                let diag = self.diagonal();
                dir = rhs.iter().zip(&diag).map(|(r, d)| r / d).collect();
                slope = dot(&grad, &dir);
            }

            let slack = 16.0 * f64::EPSILON * (j.abs() + jscale);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..self.cfg.max_backtracks {
                for i in 0..nn {
                    trial[i] = v[i] + alpha * dir[i];
                }
                let (jt, st) = self.energy(&trial, u_prev);
                if jt.is_finite() && jt <= j + self.cfg.armijo * alpha * slope {
                    j = jt;
                    jscale = st;
                    accepted = true;
                    break;
                }
                // Near the minimizer the decrease drops below roundoff in J;
                // accept when J is unchanged to roundoff and the residual
                // improves.
                if jt.is_finite() && jt <= j + slack {
                    let (rt, _) = self.gradient(&trial, u_prev, &mut trial_grad);
                    if rt < res {
                        j = jt;
                        jscale = st;
                        accepted = true;
                        break;
                    }
                }
                alpha *= self.cfg.backtrack;
            }
            if !accepted {
                return Err(Error::NewtonStagnation {
                    step,
                    iterations,
                    residual: res,
                });
            }
            v.copy_from_slice(&trial);
            let (r, f) = self.gradient(v, u_prev, &mut grad);
            res = r;
            floor = f;
        }
    }

    /// Energy of `v` for the forcing set by the last [`Stepper::solve`].
    #[cfg(test)]
    pub fn energy_of(&self, v: &[f64], u_prev: &[f64]) -> f64 {
        self.energy(v, u_prev).0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
