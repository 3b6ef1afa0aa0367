//! Intrinsic cylinder families.
//!
//! For a center `(t, x)`, an outer cylinder `(t - S, t] x B_R(x)` and
//! `b in (0, 2)` the family assigns to every ladder radius `r` a duration
//! `s(r)` and a scale `lambda_r = (r^2 / s(r))^{1/(p-2)}` such that the
//! cylinders `Q_r^{lambda_r} = (t - s(r), t] x B_r(x)` are sub-intrinsic,
//! nested and shrink at least like `(r/R)^b`.
//!
//! All measures are the discrete ones of [`crate::grid`]: `|B_r|` counts
//! cell centers, time integrals use exact slice overlaps. With that choice
//! the closed forms (constant fields, zero fields) hold to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{time_weights, GradientField, Grid, Point, Region, RegionSpec};

/// `Q_r^lambda(t, x) = (t - s, t] x B_r(x)` with `s = lambda^{2-p} r^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledCylinder {
    pub time: f64,
    pub center: Point,
    pub r: f64,
    pub s: f64,
    pub lambda: f64,
    pub p: f64,
}

impl ScaledCylinder {
    /// Cylinder with scale `lambda`; for `p = 2` the duration is `r^2`.
    pub fn new(time: f64, center: Point, r: f64, lambda: f64, p: f64) -> Self {
        let s = if p == 2.0 {
            r * r
        } else {
            lambda.powf(2.0 - p) * r * r
        };
        ScaledCylinder {
            time,
            center,
            r,
            s,
            lambda,
            p,
        }
    }

    /// Cylinder with an explicit duration; `lambda` follows from `s`.
    pub fn standard(time: f64, center: Point, r: f64, s: f64, p: f64) -> Self {
        let lambda = if p == 2.0 {
            1.0
        } else {
            (r * r / s).powf(1.0 / (p - 2.0))
        };
        ScaledCylinder {
            time,
            center,
            r,
            s,
            lambda,
            p,
        }
    }

    /// `theta Q`: radius `theta r`, duration `theta^2 s`, same top point and scale.
    pub fn scaled(&self, theta: f64) -> ScaledCylinder {
        ScaledCylinder {
            r: theta * self.r,
            s: theta * theta * self.s,
            ..*self
        }
    }

    pub fn spec(&self) -> RegionSpec {
        RegionSpec::cylinder(self.time, self.center, self.r, self.s)
    }

    pub fn region(&self, grid: &Grid) -> Result<Region> {
        Region::cylinder(grid, self.time, self.center, self.r, self.s)
    }
}

/// Cellwise `|Du|^p`, the integrand of every intrinsic test.
#[derive(Clone, Debug)]
pub struct PowerField {
    grid: Grid,
    p: f64,
    values: Vec<f64>,
}

impl PowerField {
    pub fn new(grad: &GradientField, p: f64) -> Self {
        PowerField {
            grid: *grad.grid(),
            p,
            values: grad.norm_pow(p).values().to_vec(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `h^n sum_{c in cells} |Du(k, c)|^p` for every slice `k`.
    fn slice_integrals(&self, cells: &[usize]) -> Vec<f64> {
        let nc = self.grid.cell_count();
        let vol = self.grid.cell_volume();
        (0..self.grid.slice_count())
            .map(|k| {
                let row = &self.values[k * nc..(k + 1) * nc];
                vol * cells.iter().map(|&c| row[c]).sum::<f64>()
            })
            .collect()
    }

    /// Mean of `|Du|^p` over a region.
    pub fn mean(&self, region: &Region) -> f64 {
        let ints = self.slice_integrals(region.cells());
        let num: f64 = region.slices().iter().map(|&(k, w)| w * ints[k]).sum();
        num / region.measure()
    }
}

/// `int_{t-s}^t int_{B} |Du|^p` for per-slice spatial integrals `ints`.
fn time_integral(grid: &Grid, ints: &[f64], t: f64, s: f64) -> f64 {
    time_weights(grid, t, s)
        .iter()
        .map(|&(k, w)| w * ints[k])
        .sum()
}

fn ball_cells(grid: &Grid, center: Point, r: f64) -> Result<Vec<usize>> {
    Ok(Region::ball(grid, center, r, 0)?.cells().to_vec())
}

/// Largest `s <= S` with `(int_{t-s}^t int_{B_r} |Du|^p)^{p-2} s^2 <= r^{2p} |B_r|^{p-2}`.
fn s_tilde_from(
    grid: &Grid,
    ints: &[f64],
    ball_measure: f64,
    t: f64,
    r: f64,
    big_s: f64,
    p: f64,
) -> f64 {
    let rhs = 2.0 * p * r.ln() + (p - 2.0) * ball_measure.ln();
    let holds = |s: f64| {
        let i = time_integral(grid, ints, t, s);
        if i <= 0.0 {
            return true;
        }
        (p - 2.0) * i.ln() + 2.0 * s.ln() <= rhs
    };
    if holds(big_s) {
        return big_s;
    }
    let (mut lo, mut hi) = (0.0, big_s);
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn check_outer(grid: &Grid, t: f64, big_s: f64) -> Result<()> {
    if !(big_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "outer duration must be positive, got {big_s}"
        )));
    }
    if big_s > t * (1.0 + 1e-12) + 1e-15 || t > grid.final_time() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "time window ({}, {t}] leaves the grid interval [0, {}]",
            t - big_s,
            grid.final_time()
        )));
    }
    Ok(())
}

/// `s~(r)` at `(t, x)` below the outer duration `S` (`p > 2`).
pub fn s_tilde(power: &PowerField, t: f64, center: Point, r: f64, big_s: f64) -> Result<f64> {
    let grid = power.grid();
    if !(r > 0.0) {
        return Err(Error::DegenerateRegion(format!(
            "radius {r} is not positive"
        )));
    }
    if !(power.p() > 2.0) {
        return Err(Error::InvalidArgument("s~ needs p > 2".into()));
    }
    check_outer(grid, t, big_s)?;
    let cells = ball_cells(grid, center, r)?;
    let ints = power.slice_integrals(&cells);
    let measure = cells.len() as f64 * grid.cell_volume();
    Ok(s_tilde_from(grid, &ints, measure, t, r, big_s, power.p()))
}

/// Ladder of radii `R q^i`, `q = 2^{-1/2^{refine+1}}`, stopping before
/// the radius drops below `min_cells * h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub refine: u32,
    pub min_cells: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            refine: 1,
            min_cells: 4.0,
        }
    }
}

impl Ladder {
    pub fn ratio(&self) -> f64 {
        2f64.powf(-1.0 / 2f64.powi(self.refine as i32 + 1))
    }

    pub fn radii(&self, outer: f64, h: f64) -> Vec<f64> {
        let q = self.ratio();
        let mut out = Vec::new();
        let mut i = 0;
        loop {
            let r = outer * q.powi(i);
            if r < self.min_cells * h * (1.0 - 1e-12) && !out.is_empty() {
                break;
            }
            out.push(r);
            i += 1;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sub,
    Intrinsic,
    Super,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Sub => "sub",
            Status::Intrinsic => "intrinsic",
            Status::Super => "super",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicClass {
    pub status: Status,
    pub k: f64,
    /// `(mean |Du|^p)^{1/p} / lambda`.
    pub ratio: f64,
}

impl IntrinsicClass {
    pub fn from_ratio(ratio: f64, k: f64) -> Self {
        let status = if ratio > k {
            Status::Super
        } else if ratio < 1.0 / k {
            Status::Sub
        } else {
            Status::Intrinsic
        };
        IntrinsicClass { status, k, ratio }
    }

    /// Sub-intrinsic in the one-sided sense.
    pub fn is_sub_intrinsic(&self) -> bool {
        self.status != Status::Super
    }
}

pub fn classify(cyl: &ScaledCylinder, power: &PowerField, k: f64) -> Result<IntrinsicClass> {
    let region = cyl.region(power.grid())?;
    let mean = power.mean(&region);
    Ok(IntrinsicClass::from_ratio(
        mean.powf(1.0 / power.p()) / cyl.lambda,
        k,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderFamily {
    pub time: f64,
    pub center: Point,
    pub outer_radius: f64,
    pub outer_duration: f64,
    pub b: f64,
    pub p: f64,
    pub beta: f64,
    pub radii: Vec<f64>,
    pub s_tilde: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Mean of `|Du|^p` over each ladder cylinder.
    pub means: Vec<f64>,
}

impl CylinderFamily {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn cylinder(&self, j: usize) -> ScaledCylinder {
        ScaledCylinder {
            time: self.time,
            center: self.center,
            r: self.radii[j],
            s: self.s[j],
            lambda: self.lambda[j],
            p: self.p,
        }
    }

    pub fn ratio(&self, j: usize) -> f64 {
        self.means[j].powf(1.0 / self.p) / self.lambda[j]
    }

    pub fn class(&self, j: usize, k: f64) -> IntrinsicClass {
        IntrinsicClass::from_ratio(self.ratio(j), k)
    }

    /// CSV dump with columns `r,s_tilde,s,lambda,status`.
    pub fn to_csv(&self, k: f64) -> String {
        let mut out = String::from("r,s_tilde,s,lambda,status\n");
        for j in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.radii[j],
                self.s_tilde[j],
                self.s[j],
                self.lambda[j],
                self.class(j, k).status
            ));
        }
        out
    }
}

/// `s(r_j) = min_{i <= j} (r_j / r_i)^b s~(r_i)` over a decreasing ladder.
pub fn s_of_r(radii: &[f64], s_tilde: &[f64], b: f64) -> Vec<f64> {
    (0..radii.len())
        .map(|j| {
            (0..=j)
                .map(|i| (radii[j] / radii[i]).powf(b) * s_tilde[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Builds the family at `(t, x)` for the outer cylinder `(t - S, t] x B_R(x)`.
/// For `p = 2` the family is the standard one: `lambda = 1`, `s = r^2`.
pub fn build_family(
    power: &PowerField,
    t: f64,
    center: Point,
    outer_radius: f64,
    outer_duration: f64,
    b: f64,
    ladder: &Ladder,
) -> Result<CylinderFamily> {
    let grid = power.grid();
    let p = power.p();
    if !(b > 0.0 && b < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "b must lie in (0,2), got {b}"
        )));
    }
    if p < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "cylinder families need p >= 2, got {p}"
        )));
    }
    if !grid.ball_inside(center, outer_radius) {
        return Err(Error::InvalidArgument(format!(
            "outer ball B_{outer_radius}({:?}) leaves the domain",
            center
        )));
    }
    check_outer(grid, t, outer_duration)?;
    let radii = ladder.radii(outer_radius, grid.spacing());
    let mut s_tilde_v = Vec::with_capacity(radii.len());
    let mut ints_v = Vec::with_capacity(radii.len());
    let mut measures = Vec::with_capacity(radii.len());
    for &r in &radii {
        let cells = ball_cells(grid, center, r)?;
        let ints = power.slice_integrals(&cells);
        let measure = cells.len() as f64 * grid.cell_volume();
        let st = if p == 2.0 {
            outer_duration
        } else {
            s_tilde_from(grid, &ints, measure, t, r, outer_duration, p)
        };
        s_tilde_v.push(st);
        ints_v.push(ints);
        measures.push(measure);
    }
    let (s, lambda) = if p == 2.0 {
        if outer_radius * outer_radius > outer_duration * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(
                "for p = 2 the outer duration must cover R^2".into(),
            ));
        }
        (
            radii.iter().map(|r| r * r).collect::<Vec<_>>(),
            vec![1.0; radii.len()],
        )
    } else {
        let s = s_of_r(&radii, &s_tilde_v, b);
        let lambda = radii
            .iter()
            .zip(&s)
            .map(|(r, s)| (r * r / s).powf(1.0 / (p - 2.0)))
            .collect();
        (s, lambda)
    };
    let means = (0..radii.len())
        .map(|j| {
            let w = time_weights(grid, t, s[j]);
            let total: f64 = w.iter().map(|&(_, x)| x).sum();
            let num: f64 = w.iter().map(|&(k, x)| x * ints_v[j][k]).sum();
            num / (total * measures[j])
        })
        .collect();
    let beta = if p == 2.0 {
        f64::INFINITY
    } else {
        (2.0 - b) / (p - 2.0)
    };
    Ok(CylinderFamily {
        time: t,
        center,
        outer_radius,
        outer_duration,
        b,
        p,
        beta,
        radii,
        s_tilde: s_tilde_v,
        s,
        lambda,
        means,
    })
}

/// Smallest ladder radius whose cylinder is `K`-intrinsic.
pub fn first_intrinsic_radius(family: &CylinderFamily, k: f64) -> Option<f64> {
    (0..family.len())
        .rev()
        .find(|&j| family.class(j, k).status == Status::Intrinsic)
        .map(|j| family.radii[j])
}

/// Largest ladder radius whose cylinder is `K`-intrinsic.
pub fn largest_intrinsic_index(family: &CylinderFamily, k: f64) -> Option<usize> {
    (0..family.len()).find(|&j| family.class(j, k).status == Status::Intrinsic)
}

/// Result of checking the family properties on the ladder.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ItemReport {
    pub item1: bool,
    pub item2: bool,
    pub item3: bool,
    pub item4: bool,
    pub item6: bool,
    pub item7: bool,
    pub item8: bool,
    pub violations: Vec<String>,
}

impl ItemReport {
    pub fn all_hold(&self) -> bool {
        self.item1
            && self.item2
            && self.item3
            && self.item4
            && self.item6
            && self.item7
            && self.item8
    }
}

/// Checks items 1, 2, 3, 4, 6, 7 and 8 on all ladder pairs. Exact items use
/// relative tolerance `tol`; intrinsic detection uses the tolerance `k`.
///
/// The upper bound of item 7 uses the discrete constant
/// `max(1, theta^{-1} (|B_r| / |B_{theta r}|)^{1/2})`, which reduces to
/// `theta^{-(n+2)/2}` for exact ball measures.
pub fn verify_items(family: &CylinderFamily, grid: &Grid, tol: f64, k: f64) -> ItemReport {
    let mut rep = ItemReport {
        item1: true,
        item2: true,
        item3: true,
        item4: true,
        item6: true,
        item7: true,
        item8: true,
        violations: Vec::new(),
    };
    let p = family.p;
    let b = family.b;
    let n = family.len();
    let k_int = k;
    let big_s = family.outer_duration;
    let measure = |r: f64| {
        Region::ball(grid, family.center, r, 0)
            .map(|b| b.spatial_measure())
            .unwrap_or(0.0)
    };
    let measures: Vec<f64> = family.radii.iter().map(|&r| measure(r)).collect();

    for j in 0..n {
        let (r, s, l) = (family.radii[j], family.s[j], family.lambda[j]);
        let closed = if p == 2.0 {
            r * r
        } else {
            l.powf(2.0 - p) * r * r
        };
        if !(s >= 0.0 && s <= big_s * (1.0 + tol)) || (closed - s).abs() > tol * s {
            rep.item1 = false;
            rep.violations
                .push(format!("item 1 at r = {r}: s = {s}, S = {big_s}"));
        }
        if family.means[j] > (1.0 + tol) * l.powf(p) {
            rep.item3 = false;
            rep.violations.push(format!(
                "item 3 at r = {r}: mean {} > lambda^p {}",
                family.means[j],
                l.powf(p)
            ));
        }
    }
    if p == 2.0 {
        return rep;
    }
    let beta = family.beta;
    for k in 0..n {
        for j in k + 1..n {
            // r = r_j < rho = r_k
            let (r, rho) = (family.radii[j], family.radii[k]);
            let (sr, srho) = (family.s[j], family.s[k]);
            let bound = (r / rho).powf(b) * srho;
            if sr > bound * (1.0 + tol) || sr >= srho {
                rep.item2 = false;
                rep.violations
                    .push(format!("item 2 on ({r}, {rho}): s = {sr}, bound {bound}"));
            }
            if sr < bound * (1.0 - tol) {
                let found = (k + 1..=j).any(|i| family.class(i, k_int).status == Status::Intrinsic);
                if !found {
                    rep.item4 = false;
                    rep.violations.push(format!(
                        "item 4 on ({r}, {rho}): no intrinsic ladder radius"
                    ));
                }
            }
            let strictly_sub = (k + 1..=j).all(|i| family.class(i, k_int).status == Status::Sub);
            if strictly_sub {
                let bound6 = (r / rho).powf(beta) * family.lambda[k];
                if family.lambda[j] > bound6 * (1.0 + tol) {
                    rep.item6 = false;
                    rep.violations.push(format!(
                        "item 6 on ({r}, {rho}): lambda {} > {bound6}",
                        family.lambda[j]
                    ));
                }
            }
            // item 7 with theta = r / rho
            let theta = r / rho;
            let lower = theta.powf(beta) * family.lambda[k];
            let c = (1.0f64).max((measures[k] / measures[j]).sqrt() / theta);
            let upper = c * family.lambda[k];
            if family.lambda[j] < lower * (1.0 - tol) || family.lambda[j] > upper * (1.0 + tol) {
                rep.item7 = false;
                rep.violations.push(format!(
                    "item 7 on ({r}, {rho}): lambda {} outside [{lower}, {upper}]",
                    family.lambda[j]
                ));
            }
            // item 8 with sigma = r / rho and theta = sigma^{b/2}
            let theta8 = theta.powf(0.5 * b);
            let outer = family.cylinder(k).scaled(theta8);
            if sr > theta8 * theta8 * srho * (1.0 + tol) {
                rep.item8 = false;
                rep.violations.push(format!(
                    "item 8 on ({r}, {rho}): duration {sr} > {}",
                    theta8 * theta8 * srho
                ));
            } else if let (Ok(inner), Ok(outer)) =
                (family.cylinder(j).region(grid), outer.region(grid))
            {
                if !inner.cells().iter().all(|&c| outer.contains_cell(c)) {
                    rep.item8 = false;
                    rep.violations
                        .push(format!("item 8 on ({r}, {rho}): cell sets not nested"));
                }
            }
        }
    }
    rep
}

/// How the scale of a standard parabolic cube is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum CubeNormalization {
    /// `lambda_0 = max{(mean |Du|^p)^{1/2}, 1}`: the choice under which the
    /// rescaled outer cube is provably sub-intrinsic.
    #[default]
    Half,
    /// `lambda_0 = max{(mean |Du|^p)^{1/p}, 1}`.
    InverseP,
}

/// The cylinder a starting cube is taken inside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outer {
    /// A sub-intrinsic `Q_R^{lambda_0}`.
    SubIntrinsic(ScaledCylinder),
    /// The standard cube `(t - R^2, t] x B_R(x)`.
    Standard { time: f64, center: Point, r: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartingCube {
    pub cube: ScaledCylinder,
    /// Scale of the sub-intrinsic outer cylinder.
    pub lambda0: f64,
    pub normalization: CubeNormalization,
    pub class: IntrinsicClass,
}

/// The sub-intrinsic cube `Q_{R/2}^{lambda_{R/2}}(z)` with
/// `lambda_{R/2} = 2^{(n+2)/(p-2)} lambda_0`, verified by [`classify`].
/// The guarantee behind the scaling needs `p <= 4`; for larger `p` the
/// verification may legitimately fail.
pub fn starting_cube(
    z_time: f64,
    z: Point,
    outer: Outer,
    power: &PowerField,
    normalization: CubeNormalization,
    k: f64,
) -> Result<StartingCube> {
    let grid = power.grid();
    let p = power.p();
    if !(p > 2.0) {
        return Err(Error::InvalidArgument("starting cubes need p > 2".into()));
    }
    let outer_cyl = match outer {
        Outer::SubIntrinsic(c) => c,
        Outer::Standard { time, center, r } => {
            let q = Region::cylinder(grid, time, center, r, r * r)?;
            let mean = power.mean(&q);
            let e = match normalization {
                CubeNormalization::Half => 0.5,
                CubeNormalization::InverseP => 1.0 / p,
            };
            let lambda0 = mean.powf(e).max(1.0);
            ScaledCylinder::new(time, center, r, lambda0, p)
        }
    };
    let half = outer_cyl.scaled(0.5);
    let dist = grid.distance(z, half.center);
    if !(dist < half.r) || !(z_time <= half.time + 1e-12 && z_time > half.time - half.s) {
        return Err(Error::InvalidArgument(format!(
            "z = ({z_time}, {:?}) is not in the half cylinder",
            z
        )));
    }
    let n = grid.dim() as f64;
    let lambda = 2f64.powf((n + 2.0) / (p - 2.0)) * outer_cyl.lambda;
    let cube = ScaledCylinder::new(z_time, z, 0.5 * outer_cyl.r, lambda, p);
    let class = classify(&cube, power, k)?;
    if !class.is_sub_intrinsic() {
        return Err(Error::StartingCube {
            ratio: class.ratio,
            tolerance: k,
        });
    }
    Ok(StartingCube {
        cube,
        lambda0: outer_cyl.lambda,
        normalization,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn grid2(m: usize) -> Grid {
        Grid::new(2, 1, m, 1.0, 1.0 / 64.0, 1.0, Boundary::Periodic).unwrap()
    }

    fn constant_power(grid: Grid, lambda0: f64, p: f64) -> PowerField {
        let g = GradientField::from_fn(grid, |_, _, o| {
            o[0] = lambda0 * 0.6;
            o[1] = lambda0 * 0.8;
        });
        PowerField::new(&g, p)
    }

    #[test]
    fn s_tilde_closed_forms() {
        let g = grid2(32);
        let zero = PowerField::new(&GradientField::zeros(g), 3.0);
        assert_eq!(s_tilde(&zero, 1.0, [0.5, 0.5], 0.25, 0.7).unwrap(), 0.7);
        let c = constant_power(g, 2.0, 4.0);
        let s = s_tilde(&c, 1.0, [0.5, 0.5], 0.25, 1.0).unwrap();
        assert!((s - 1.0 / 64.0).abs() < 1e-8 / 64.0, "{s}");
        let s = s_tilde(&c, 1.0, [0.5, 0.5], 0.25, 0.01).unwrap();
        assert_eq!(s, 0.01);
    }

    #[test]
    fn s_of_r_closed_forms() {
        let radii = [1.0, 0.5, 0.25];
        let s = s_of_r(&radii, &[2.0, 2.0, 2.0], 1.0);
        assert_eq!(s, vec![2.0, 1.0, 0.5]);
        // s~ proportional to r^2: min at a = r
        let st: Vec<f64> = radii.iter().map(|r| 3.0 * r * r).collect();
        assert_eq!(s_of_r(&radii, &st, 1.0), st);
    }

    #[test]
    fn constant_field_family_is_intrinsic() {
        let g = grid2(64);
        let lambda0 = 1.7;
        let c = constant_power(g, lambda0, 3.0);
        let fam = build_family(&c, 1.0, [0.5, 0.5], 0.25, 1.0, 1.0, &Ladder::default()).unwrap();
        for j in 0..fam.len() {
            assert!((fam.lambda[j] - lambda0).abs() < 1e-6 * lambda0);
            assert_eq!(fam.class(j, 1.05).status, Status::Intrinsic);
        }
        assert_eq!(
            first_intrinsic_radius(&fam, 1.05),
            Some(*fam.radii.last().unwrap())
        );
        let rep = verify_items(&fam, &g, 1e-6, 1.1);
        assert!(rep.all_hold(), "{:?}", rep.violations);
    }

    #[test]
    fn zero_field_family_closed_form() {
        let g = grid2(64);
        let zero = PowerField::new(&GradientField::zeros(g), 4.0);
        let (big_r, big_s, b) = (0.25, 0.5, 1.5);
        let fam =
            build_family(&zero, 1.0, [0.5, 0.5], big_r, big_s, b, &Ladder::default()).unwrap();
        for j in 0..fam.len() {
            let r = fam.radii[j];
            let expect = (r.powf(2.0 - b) * big_r.powf(b) / big_s).powf(0.5);
            assert!((fam.lambda[j] - expect).abs() < 1e-12 * expect);
        }
        assert_eq!(first_intrinsic_radius(&fam, 1.1), None);
        assert!(verify_items(&fam, &g, 1e-6, 1.1).all_hold());
    }

    #[test]
    fn classify_detects_scaling() {
        let g = grid2(32);
        let c = constant_power(g, 1.0, 3.0);
        let fam = build_family(&c, 1.0, [0.5, 0.5], 0.25, 1.0, 1.0, &Ladder::default()).unwrap();
        let cyl = fam.cylinder(0);
        assert_eq!(classify(&cyl, &c, 1.05).unwrap().status, Status::Intrinsic);
        let big = constant_power(g, 10.0, 3.0);
        let cl = classify(&cyl, &big, 2.0).unwrap();
        assert_eq!(cl.status, Status::Super);
        assert!((cl.ratio - 10.0).abs() < 1e-9);
        let zero = PowerField::new(&GradientField::zeros(g), 3.0);
        assert_eq!(classify(&cyl, &zero, 2.0).unwrap().status, Status::Sub);
    }

    #[test]
    fn lambda_scales_linearly_for_constant_fields() {
        let g = grid2(32);
        let base = build_family(
            &constant_power(g, 1.0, 3.0),
            1.0,
            [0.5, 0.5],
            0.25,
            1.0,
            1.0,
            &Ladder::default(),
        )
        .unwrap();
        let big = build_family(
            &constant_power(g, 4.0, 3.0),
            1.0,
            [0.5, 0.5],
            0.25,
            1.0,
            1.0,
            &Ladder::default(),
        )
        .unwrap();
        for j in 0..base.len() {
            assert!((big.lambda[j] - 4.0 * base.lambda[j]).abs() < 1e-6 * big.lambda[j]);
        }
    }

    #[test]
    fn vanishing_core_pushes_intrinsic_radius_out() {
        let g = Grid::new(2, 1, 64, 1.0, 1.0 / 256.0, 1.0, Boundary::Periodic).unwrap();
        let big_r = 0.4;
        let grad = GradientField::from_fn(g, |_, x, o| {
            let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
            o[0] = if d < big_r / 4.0 { 0.0 } else { 2.0 };
        });
        let pw = PowerField::new(&grad, 3.0);
        let fam = build_family(&pw, 1.0, [0.5, 0.5], big_r, 1.0, 1.0, &Ladder::default()).unwrap();
        let r = first_intrinsic_radius(&fam, 1.1).unwrap();
        assert!(r >= big_r / 4.0, "{r}");
    }

    #[test]
    fn starting_cube_scaling() {
        let g = Grid::new(2, 1, 64, 1.0, 1.0 / 256.0, 1.0, Boundary::Periodic).unwrap();
        let lambda0 = 1.5;
        let c = constant_power(g, lambda0, 4.0);
        let outer = ScaledCylinder::new(1.0, [0.5, 0.5], 0.4, lambda0, 4.0);
        let sc = starting_cube(
            1.0,
            [0.55, 0.5],
            Outer::SubIntrinsic(outer),
            &c,
            CubeNormalization::Half,
            1.1,
        )
        .unwrap();
        assert!((sc.cube.lambda - 4.0 * lambda0).abs() < 1e-12);
        assert!(sc.class.is_sub_intrinsic());

        let zero = PowerField::new(&GradientField::zeros(g), 3.0);
        let sc = starting_cube(
            1.0,
            [0.5, 0.5],
            Outer::Standard {
                time: 1.0,
                center: [0.5, 0.5],
                r: 0.4,
            },
            &zero,
            CubeNormalization::Half,
            1.1,
        )
        .unwrap();
        assert_eq!(sc.lambda0, 1.0);
        assert_eq!(sc.class.status, Status::Sub);
    }
}
