//! Mean oscillations and the sup-type seminorms built on them.
//!
//! A true supremum over all balls is not computable, so every seminorm is
//! the maximum over a fixed scan: radii on the ladder `(L/2) q^j`, centers
//! on a lattice of cell centers with stride `max(h, stride_factor r)`,
//! cylinder tops on multiples of a slice stride. The lattice depends only
//! on the grid and the scan parameters, never on the domain, so the scan
//! over a subdomain is a subset of the scan over the domain.

use serde::{Deserialize, Serialize};

use super::weight::Weight;
use crate::error::{Error, Result};
use crate::grid::{clip_region, mean_over, Boundary, FieldData, Grid, Point, Region, RegionSpec};

const REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum SpatialDomain {
    /// The whole box (the whole torus for periodic grids).
    Whole,
    Box {
        lo: Point,
        hi: Point,
    },
    Ball {
        center: Point,
        radius: f64,
    },
}

/// Where a scan may place its regions: a spatial set and a time window
/// `[t_lo, t_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanDomain {
    pub space: SpatialDomain,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl ScanDomain {
    pub fn whole(grid: &Grid) -> Self {
        ScanDomain {
            space: SpatialDomain::Whole,
            t_lo: 0.0,
            t_hi: grid.final_time(),
        }
    }

    pub fn new(space: SpatialDomain, t_lo: f64, t_hi: f64) -> Self {
        ScanDomain { space, t_lo, t_hi }
    }

    /// A spatial domain at the single time `t`.
    pub fn at_time(space: SpatialDomain, t: f64) -> Self {
        ScanDomain {
            space,
            t_lo: t,
            t_hi: t,
        }
    }

    fn contains_point(&self, grid: &Grid, x: Point) -> bool {
        let tol = REL_TOL * grid.side();
        match self.space {
            SpatialDomain::Whole => true,
            SpatialDomain::Box { lo, hi } => {
                (0..grid.dim()).all(|d| x[d] >= lo[d] - tol && x[d] <= hi[d] + tol)
            }
            SpatialDomain::Ball { center, radius } => {
                grid.distance(x, center) < radius * (1.0 - REL_TOL)
            }
        }
    }

    fn contains_ball(&self, grid: &Grid, center: Point, r: f64) -> bool {
        let tol = REL_TOL * grid.side();
        match self.space {
            SpatialDomain::Whole => grid.ball_inside(center, r),
            SpatialDomain::Box { lo, hi } => {
                grid.ball_inside(center, r)
                    && (0..grid.dim())
                        .all(|d| center[d] - r >= lo[d] - tol && center[d] + r <= hi[d] + tol)
            }
            SpatialDomain::Ball { center: c, radius } => {
                grid.ball_inside(center, r) && grid.distance(center, c) + r <= radius + tol
            }
        }
    }

    fn max_radius(&self, grid: &Grid) -> f64 {
        match self.space {
            SpatialDomain::Whole => 0.5 * grid.side(),
            SpatialDomain::Box { lo, hi } => (0..grid.dim())
                .map(|d| 0.5 * (hi[d] - lo[d]))
                .fold(0.5 * grid.side(), f64::min),
            SpatialDomain::Ball { radius, .. } => radius.min(0.5 * grid.side()),
        }
    }

    /// Coordinate range of admissible centers along one axis.
    fn center_range(&self, grid: &Grid, d: usize, r: f64) -> (f64, f64) {
        match self.space {
            SpatialDomain::Whole => match grid.bc() {
                Boundary::Periodic => (0.0, grid.side()),
                Boundary::Dirichlet => (r, grid.side() - r),
            },
            SpatialDomain::Box { lo, hi } => (lo[d] + r, hi[d] - r),
            SpatialDomain::Ball { center, radius } => {
                (center[d] - radius + r, center[d] + radius - r)
            }
        }
    }

    /// Slices whose time lies in the window.
    pub fn slices(&self, grid: &Grid) -> Vec<usize> {
        let tol = 1e-9 * grid.tau();
        (0..grid.slice_count())
            .filter(|&k| {
                let t = grid.time_of(k);
                t >= self.t_lo - tol && t <= self.t_hi + tol
            })
            .collect()
    }
}

/// Density of the sup scan. `refine` doubles both the radius ladder and
/// the center lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub stride_factor: f64,
    /// Smallest radius in cells.
    pub min_cells: f64,
    pub refine: u32,
}

impl Default for Scan {
    fn default() -> Self {
        Scan {
            stride_factor: 0.25,
            min_cells: 2.0,
            refine: 0,
        }
    }
}

impl Scan {
    pub fn refined(refine: u32) -> Self {
        Scan {
            refine,
            ..Scan::default()
        }
    }

    /// Ratio of consecutive ladder radii, `2^{-1/2^{refine+1}}`.
    pub fn ratio(&self) -> f64 {
        2f64.powf(-1.0 / 2f64.powi(self.refine as i32 + 1))
    }

    /// Ladder radii in `[min_cells h, rmax]`, decreasing.
    pub fn radii(&self, grid: &Grid, rmax: f64) -> Vec<f64> {
        let rmin = self.min_cells * grid.spacing();
        let q = self.ratio();
        let mut out = Vec::new();
        let mut j = 0;
        loop {
            let r = 0.5 * grid.side() * q.powi(j);
            if r < rmin * (1.0 - REL_TOL) {
                break;
            }
            if r <= rmax * (1.0 + REL_TOL) {
                out.push(r);
            }
            j += 1;
        }
        out
    }

    fn stride_cells(&self, grid: &Grid, r: f64) -> usize {
        let f = self.stride_factor / 2f64.powi(self.refine as i32);
        ((r * f / grid.spacing()) + 1e-9).floor().max(1.0) as usize
    }

    /// Lattice centers `(i stride + 1/2) h` of balls of radius `r` inside the domain.
    pub fn centers(&self, grid: &Grid, domain: &ScanDomain, r: f64) -> Vec<Point> {
        let h = grid.spacing();
        let m = grid.cells_per_axis() as i64;
        let step = self.stride_cells(grid, r) as i64;
        let mut axes: Vec<Vec<f64>> = Vec::new();
        for d in 0..grid.dim() {
            let (a, b) = domain.center_range(grid, d, r);
            let lo = ((a / h - 0.5) / step as f64 - 1e-9).ceil() as i64;
            let hi = ((b / h - 0.5) / step as f64 + 1e-9).floor() as i64;
            let vals: Vec<f64> = (lo..=hi)
                .map(|i| i * step)
                .filter(|&c| grid.bc() == Boundary::Periodic || (0..m).contains(&c))
                .map(|c| {
                    let c = if grid.bc() == Boundary::Periodic {
                        c.rem_euclid(m)
                    } else {
                        c
                    };
                    (c as f64 + 0.5) * h
                })
                .collect();
            axes.push(vals);
        }
        let mut out = Vec::new();
        if grid.dim() == 1 {
            for &x in &axes[0] {
                out.push([x, 0.0]);
            }
        } else {
            for &x in &axes[0] {
                for &y in &axes[1] {
                    out.push([x, y]);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out.retain(|&c| domain.contains_ball(grid, c, r));
        out
    }

    /// Top slices of cylinders of duration `s` inside the time window.
    pub fn tops(&self, grid: &Grid, domain: &ScanDomain, s: f64) -> Vec<usize> {
        let tau = grid.tau();
        let f = self.stride_factor / 2f64.powi(self.refine as i32);
        let step = ((s * f / tau) + 1e-9).floor().max(1.0) as usize;
        let lo = ((domain.t_lo + s) / tau - 1e-9).ceil().max(1.0) as usize;
        let hi = ((domain.t_hi / tau + 1e-9).floor() as usize).min(grid.steps());
        let first = lo.div_ceil(step) * step;
        (first..=hi).step_by(step).filter(|&k| k >= 1).collect()
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "exponent q must lie in [1, inf), got {q}"
        )));
    }
    Ok(())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(⨍_R |f - c|^q)^{1/q}` with the exact measure weights of `R`.
pub fn mean_osc_about(f: &FieldData, region: &Region, q: f64, c: &[f64]) -> Result<f64> {
    check_q(q)?;
    if c.len() != f.width() {
        return Err(Error::ShapeMismatch(format!(
            "constant has {} values, field has width {}",
            c.len(),
            f.width()
        )));
    }
    let tw = region.time_measure();
    if region.cells().is_empty() || !(tw > 0.0) {
        return Err(Error::DegenerateRegion("region has zero measure".into()));
    }
    let mut acc = 0.0;
    for &(k, w) in region.slices() {
        let mut s = 0.0;
        for &cell in region.cells() {
            let d = dist(f.at(k, cell), c);
            s += if q == 1.0 { d } else { d.powf(q) };
        }
        acc += w * s;
    }
    let mean = acc / (tw * region.cells().len() as f64);
    Ok(if q == 1.0 { mean } else { mean.powf(1.0 / q) })
}

/// `(⨍_R |f - <f>_R|^q)^{1/q}`.
pub fn mean_osc(f: &FieldData, region: &Region, q: f64) -> Result<f64> {
    let m = mean_over(f, region)?;
    mean_osc_about(f, region, q, &m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormKind {
    /// Parabolic BMO over cylinders `Q_{r^2, r}`.
    BmoPar,
    /// Sup over slices of the spatial BMO.
    Bochner,
    /// Bounded linear oscillation over balls of single slices.
    Blo,
}

/// Region that attains the scanned maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: Point,
    pub r: f64,
    /// Duration; zero for single-slice balls.
    pub s: f64,
    pub time: f64,
    pub slice: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanDensity {
    pub regions: usize,
    pub refine: u32,
    pub stride_factor: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormValue {
    pub name: String,
    pub kind: SeminormKind,
    pub weight: Weight,
    pub q: f64,
    pub value: f64,
    pub witness: Witness,
    pub scan_density: ScanDensity,
}

impl SeminormValue {
    fn witness_region(&self, grid: &Grid) -> Result<Region> {
        let w = &self.witness;
        match self.kind {
            SeminormKind::BmoPar => {
                clip_region(&RegionSpec::cylinder(w.time, w.center, w.r, w.s), grid)
            }
            SeminormKind::Bochner | SeminormKind::Blo => Region::ball(grid, w.center, w.r, w.slice),
        }
    }
}

/// Value of the normalized oscillation on the witness region, computed by
/// the same path the scan uses.
pub fn evaluate_witness(f: &FieldData, value: &SeminormValue) -> Result<f64> {
    let region = value.witness_region(f.grid())?;
    let r = value.witness.r;
    let raw = match value.kind {
        SeminormKind::BmoPar | SeminormKind::Bochner => mean_osc(f, &region, value.q)?,
        SeminormKind::Blo => blo_on(f, &region, value.q, r)?,
    };
    Ok(raw / value.weight.eval(r))
}

struct Best {
    value: f64,
    witness: Option<Witness>,
    regions: usize,
}

impl Best {
    fn new() -> Self {
        Best {
            value: 0.0,
            witness: None,
            regions: 0,
        }
    }

    fn offer(&mut self, v: f64, w: Witness) {
        self.regions += 1;
        if self.witness.is_none() || v > self.value {
            self.value = v;
            self.witness = Some(w);
        }
    }

    fn finish(
        self,
        name: &str,
        kind: SeminormKind,
        weight: &Weight,
        q: f64,
        scan: &Scan,
    ) -> Result<SeminormValue> {
        let witness = self
            .witness
            .ok_or_else(|| Error::DegenerateRegion(format!("{name}: the scan set is empty")))?;
        Ok(SeminormValue {
            name: name.to_string(),
            kind,
            weight: weight.clone(),
            q,
            value: self.value,
            witness,
            scan_density: ScanDensity {
                regions: self.regions,
                refine: scan.refine,
                stride_factor: scan.stride_factor,
                ratio: scan.ratio(),
            },
        })
    }
}

/// `sup (1/omega(r)) (⨍_{Q_{r^2,r}} |f - <f>|^q)^{1/q}` over the scan.
pub fn bmo_par(
    f: &FieldData,
    domain: &ScanDomain,
    weight: &Weight,
    q: f64,
    scan: &Scan,
) -> Result<SeminormValue> {
    check_q(q)?;
    let grid = *f.grid();
    let window = domain.t_hi - domain.t_lo;
    let mut best = Best::new();
    for r in scan.radii(&grid, domain.max_radius(&grid)) {
        let s = r * r;
        if s > window * (1.0 + REL_TOL) {
            continue;
        }
        let tops = scan.tops(&grid, domain, s);
        if tops.is_empty() {
            continue;
        }
        let om = weight.eval(r);
        for c in scan.centers(&grid, domain, r) {
            for &k in &tops {
                let time = k as f64 * grid.tau();
                let region = clip_region(&RegionSpec::cylinder(time, c, r, s), &grid)?;
                let v = mean_osc(f, &region, q)? / om;
                best.offer(
                    v,
                    Witness {
                        center: c,
                        r,
                        s,
                        time,
                        slice: k,
                    },
                );
            }
        }
    }
    best.finish("bmo_par", SeminormKind::BmoPar, weight, q, scan)
}

/// `sup_t sup_B (1/omega(r)) ⨍_B |f(t) - <f(t)>_B|` over the scan.
///
/// On a slice lattice the sup over time intervals of interval averages is
/// attained on single slices, so only those are scanned.
pub fn bochner_bmo(
    f: &FieldData,
    domain: &ScanDomain,
    weight: &Weight,
    scan: &Scan,
) -> Result<SeminormValue> {
    bochner_q(f, domain, weight, 1.0, scan)
}

fn bochner_q(
    f: &FieldData,
    domain: &ScanDomain,
    weight: &Weight,
    q: f64,
    scan: &Scan,
) -> Result<SeminormValue> {
    let grid = *f.grid();
    let slices = domain.slices(&grid);
    let mut best = Best::new();
    for r in scan.radii(&grid, domain.max_radius(&grid)) {
        let om = weight.eval(r);
        for c in scan.centers(&grid, domain, r) {
            let base = Region::ball(&grid, c, r, 0)?;
            for &k in &slices {
                let region = base.at_slice(k);
                let v = mean_osc(f, &region, q)? / om;
                best.offer(
                    v,
                    Witness {
                        center: c,
                        r,
                        s: 0.0,
                        time: grid.time_of(k),
                        slice: k,
                    },
                );
            }
        }
    }
    best.finish("bochner_bmo", SeminormKind::Bochner, weight, q, scan)
}

/// Affine map `x -> value + slope (x - center)` per component, with
/// `slope` stored `width x n` row-major and displacements taken as
/// minimum images on periodic grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub center: Point,
    pub value: Vec<f64>,
    pub slope: Vec<f64>,
}

impl Affine {
    pub fn eval(&self, grid: &Grid, x: Point, out: &mut [f64]) {
        let n = grid.dim();
        let dx = [
            grid.axis_delta(self.center[0], x[0]),
            grid.axis_delta(self.center[1], x[1]),
        ];
        for (c, o) in out.iter_mut().enumerate() {
            let mut v = self.value[c];
            for d in 0..n {
                v += self.slope[c * n + d] * dx[d];
            }
            *o = v;
        }
    }
}

/// Least-squares affine fit of `f` over the cells of a single-slice region.
pub fn best_linear(f: &FieldData, region: &Region) -> Result<Affine> {
    let grid = f.grid();
    let n = grid.dim();
    let width = f.width();
    let k = match region.slices() {
        [(k, _)] => *k,
        _ => {
            return Err(Error::InvalidArgument(
                "best_linear needs a single-slice region".into(),
            ))
        }
    };
    if region.cells().len() < n + 1 {
        return Err(Error::DegenerateRegion(format!(
            "{} cells cannot determine an affine map in {n} dimensions",
            region.cells().len()
        )));
    }
    let center = region.spec.center;
    // scale displacements for conditioning
    let scale = if region.spec.radius.is_finite() && region.spec.radius > 0.0 {
        region.spec.radius
    } else {
        grid.side()
    };
    let nb = n + 1;
    let mut a = [[0.0f64; 3]; 3];
    let mut rhs = vec![[0.0f64; 3]; width];
    for &cell in region.cells() {
        let x = grid.cell_center(cell);
        let phi = [
            1.0,
            grid.axis_delta(center[0], x[0]) / scale,
            grid.axis_delta(center[1], x[1]) / scale,
        ];
        for i in 0..nb {
            for j in 0..nb {
                a[i][j] += phi[i] * phi[j];
            }
        }
        for (c, v) in f.at(k, cell).iter().enumerate() {
            for i in 0..nb {
                rhs[c][i] += phi[i] * v;
            }
        }
    }
    let coef = solve_small(a, &rhs, nb, region.cells().len() as f64)?;
    let mut value = vec![0.0; width];
    let mut slope = vec![0.0; width * n];
    for c in 0..width {
        value[c] = coef[c][0];
        for d in 0..n {
            slope[c * n + d] = coef[c][d + 1] / scale;
        }
    }
    Ok(Affine {
        center,
        value,
        slope,
    })
}

/// Gaussian elimination with partial pivoting on the `nb x nb` normal
/// equations, one right-hand side per component.
fn solve_small(
    mut a: [[f64; 3]; 3],
    rhs: &[[f64; 3]],
    nb: usize,
    count: f64,
) -> Result<Vec<[f64; 3]>> {
    let mut b: Vec<[f64; 3]> = rhs.to_vec();
    for col in 0..nb {
        let piv = (col..nb)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() <= 1e-12 * count {
            return Err(Error::DegenerateRegion(
                "cell set is affinely degenerate".into(),
            ));
        }
        a.swap(col, piv);
        for r in b.iter_mut() {
            r.swap(col, piv);
        }
        for row in col + 1..nb {
            let f = a[row][col] / a[col][col];
            for j in col..nb {
                a[row][j] -= f * a[col][j];
            }
            for r in b.iter_mut() {
                r[row] -= f * r[col];
            }
        }
    }
    for r in b.iter_mut() {
        for row in (0..nb).rev() {
            let mut s = r[row];
            for j in row + 1..nb {
                s -= a[row][j] * r[j];
            }
            r[row] = s / a[row][row];
        }
    }
    Ok(b)
}

/// `(⨍_B |f - l|^q)^{1/q} / r` with `l` the least-squares fit.
fn blo_on(f: &FieldData, region: &Region, q: f64, r: f64) -> Result<f64> {
    let fit = best_linear(f, region)?;
    let grid = f.grid();
    let k = region.slices()[0].0;
    let mut l = vec![0.0; f.width()];
    let mut acc = 0.0;
    for &cell in region.cells() {
        fit.eval(grid, grid.cell_center(cell), &mut l);
        let d = dist(f.at(k, cell), &l);
        acc += d.powf(q);
    }
    Ok((acc / region.cells().len() as f64).powf(1.0 / q) / r)
}

/// `sup_t sup_B (1/omega(r)) (⨍_B |(f(t) - l_B)/r|^q)^{1/q}` over the
/// scan, with `l_B` the least-squares affine fit.
pub fn blo_seminorm(
    f: &FieldData,
    domain: &ScanDomain,
    weight: &Weight,
    q: f64,
    scan: &Scan,
) -> Result<SeminormValue> {
    check_q(q)?;
    let grid = *f.grid();
    let n = grid.dim();
    let slices = domain.slices(&grid);
    let mut best = Best::new();
    for r in scan.radii(&grid, domain.max_radius(&grid)) {
        let om = weight.eval(r);
        for c in scan.centers(&grid, domain, r) {
            let base = Region::ball(&grid, c, r, 0)?;
            if base.cells().len() < n + 1 {
                continue;
            }
            for &k in &slices {
                let region = base.at_slice(k);
                let v = blo_on(f, &region, q, r)? / om;
                best.offer(
                    v,
                    Witness {
                        center: c,
                        r,
                        s: 0.0,
                        time: grid.time_of(k),
                        slice: k,
                    },
                );
            }
        }
    }
    best.finish("blo", SeminormKind::Blo, weight, q, scan)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZygmundWitness {
    pub slice: usize,
    pub cell: usize,
    pub direction: [i64; 2],
    pub step: usize,
}

/// The second-difference part and the sup-norm part of the
/// Hölder-Zygmund norm, reported separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZygmundValue {
    pub gamma: f64,
    pub second_difference: f64,
    pub sup_norm: f64,
    pub witness: Option<ZygmundWitness>,
}

impl ZygmundValue {
    pub fn norm(&self) -> f64 {
        self.second_difference + self.sup_norm
    }
}

fn walk(grid: &Grid, cell: usize, dir: [i64; 2], steps: i64) -> Option<usize> {
    let c = grid.shift(cell, 0, dir[0] * steps)?;
    if grid.dim() == 1 {
        Some(c)
    } else {
        grid.shift(c, 1, dir[1] * steps)
    }
}

/// `sup |f(x + 2h) - 2 f(x + h) + f(x)| / |h|^gamma` over lattice steps
/// along the axes (and diagonals in 2D), with all three points in the
/// domain, plus `sup |f|`.
pub fn zygmund_seminorm(f: &FieldData, domain: &ScanDomain, gamma: f64) -> Result<ZygmundValue> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 2], got {gamma}"
        )));
    }
    let grid = *f.grid();
    let h = grid.spacing();
    let m = grid.cells_per_axis();
    let dirs: &[[i64; 2]] = if grid.dim() == 1 {
        &[[1, 0]]
    } else {
        &[[1, 0], [0, 1], [1, 1], [1, -1]]
    };
    // periodic steps stay below a quarter period so |h| is the true length
    let max_step = match grid.bc() {
        Boundary::Periodic => m / 4,
        Boundary::Dirichlet => (m - 1) / 2,
    };
    let inside: Vec<bool> = (0..grid.cell_count())
        .map(|c| domain.contains_point(&grid, grid.cell_center(c)))
        .collect();
    let width = f.width();
    let mut out = ZygmundValue {
        gamma,
        second_difference: 0.0,
        sup_norm: 0.0,
        witness: None,
    };
    let mut buf = vec![0.0; width];
    for k in domain.slices(&grid) {
        for c in (0..grid.cell_count()).filter(|&c| inside[c]) {
            let v = f.at(k, c).iter().map(|x| x * x).sum::<f64>().sqrt();
            out.sup_norm = out.sup_norm.max(v);
        }
        for &dir in dirs {
            let len = ((dir[0] * dir[0] + dir[1] * dir[1]) as f64).sqrt() * h;
            for j in 1..=max_step {
                let denom = (len * j as f64).powf(gamma);
                for c in 0..grid.cell_count() {
                    if !inside[c] {
                        continue;
                    }
                    let (Some(c1), Some(c2)) = (
                        walk(&grid, c, dir, j as i64),
                        walk(&grid, c, dir, 2 * j as i64),
                    ) else {
                        continue;
                    };
                    if !inside[c1] || !inside[c2] {
                        continue;
                    }
                    let (a, b, e) = (f.at(k, c), f.at(k, c1), f.at(k, c2));
                    for i in 0..width {
                        buf[i] = e[i] - 2.0 * b[i] + a[i];
                    }
                    let v = buf.iter().map(|x| x * x).sum::<f64>().sqrt() / denom;
                    if v > out.second_difference || out.witness.is_none() {
                        out.second_difference = v.max(out.second_difference);
                        out.witness = Some(ZygmundWitness {
                            slice: k,
                            cell: c,
                            direction: dir,
                            step: j,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact diameter `sup_{x,y} |f(x) - f(y)|` of the values of `f` on the
/// region's cells and slices.
pub fn osc(f: &FieldData, region: &Region) -> Result<f64> {
    if region.cells().is_empty() || region.slices().is_empty() {
        return Err(Error::DegenerateRegion("region is empty".into()));
    }
    let width = f.width();
    let pts: Vec<&[f64]> = region
        .slices()
        .iter()
        .flat_map(|&(k, _)| region.cells().iter().map(move |&c| f.at(k, c)))
        .collect();
    Ok(match width {
        1 => {
            let (lo, hi) = pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[0]), hi.max(v[0]))
                });
            hi - lo
        }
        2 => {
            let hull = convex_hull(pts.iter().map(|v| [v[0], v[1]]).collect());
            pairwise_max(&hull.iter().map(|p| &p[..]).collect::<Vec<_>>())
        }
        _ => pairwise_max(&pts),
    })
}

fn pairwise_max(pts: &[&[f64]]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(dist(pts[i], pts[j]));
        }
    }
    best
}

/// Andrew's monotone chain; the diameter of a planar set is attained on
/// its hull.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnNirenberg {
    pub q: f64,
    /// `(⨍_B |f - <f>_B|^q)^{1/q}`.
    pub lhs: f64,
    /// Scanned `||f||_{BMO(B)}` (the ball itself included).
    pub bmo_norm: f64,
    /// `lhs / bmo_norm`; `None` when the norm vanishes.
    pub ratio: Option<f64>,
}

/// Ratio of the `q`-mean oscillation on a ball to the BMO norm of `f` on
/// that ball.
pub fn john_nirenberg_check(
    f: &FieldData,
    ball: &Region,
    q: f64,
    scan: &Scan,
) -> Result<JohnNirenberg> {
    if !(1.0..=8.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "John-Nirenberg exponent must lie in [1, 8], got {q}"
        )));
    }
    let grid = *f.grid();
    let k = match ball.slices() {
        [(k, _)] => *k,
        _ => {
            return Err(Error::InvalidArgument(
                "John-Nirenberg check needs a single-slice ball".into(),
            ))
        }
    };
    let lhs = mean_osc(f, ball, q)?;
    let mut norm = mean_osc(f, ball, 1.0)?;
    let domain = ScanDomain::at_time(
        SpatialDomain::Ball {
            center: ball.spec.center,
            radius: ball.spec.radius,
        },
        grid.time_of(k),
    );
    if let Ok(v) = bochner_bmo(f, &domain, &Weight::one(), scan) {
        norm = norm.max(v.value);
    }
    let ratio = if norm > 0.0 { Some(lhs / norm) } else { None };
    Ok(JohnNirenberg {
        q,
        lhs,
        bmo_norm: norm,
        ratio,
    })
}
