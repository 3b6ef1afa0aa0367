//! Structured space-time grids, sampled fields, collocated differential
//! operators and cell-set regions.
//!
//! Values live at cell centers `x_i = (i + 1/2) h` of the box `[0, L]^n`.
//! Time slice `k >= 1` holds the state at `t_k = k tau` and stands for the
//! interval `((k-1) tau, k tau]`; slice 0 is the initial state and carries
//! no time measure. Spatial membership in a region follows the cell-center
//! rule, temporal membership is the exact overlap with the slice interval.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the spatial box. One-dimensional grids only use the first
/// coordinate.
pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::Dirichlet => write!(f, "dirichlet"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::InvalidGrid(format!(
                "unknown boundary condition `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    components: usize,
    cells_per_axis: usize,
    side: f64,
    tau: f64,
    steps: usize,
    bc: Boundary,
}

impl Grid {
    /// `final_time / tau` must be a positive integer up to rounding.
    pub fn new(
        dim: usize,
        components: usize,
        cells_per_axis: usize,
        side: f64,
        tau: f64,
        final_time: f64,
        bc: Boundary,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "spatial dimension must be 1 or 2, got {dim}"
            )));
        }
        if components == 0 {
            return Err(Error::InvalidGrid(
                "target dimension must be at least 1".into(),
            ));
        }
        if cells_per_axis < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 cells per axis, got {cells_per_axis}"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box side must be positive, got {side}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let ratio = final_time / tau;
        let steps = ratio.round();
        if !(steps >= 1.0) || (ratio - steps).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "final time {final_time} is not a positive integer multiple of tau {tau}"
            )));
        }
        Ok(Grid {
            dim,
            components,
            cells_per_axis,
            side,
            tau,
            steps: steps as usize,
            bc,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.cells_per_axis as f64
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn final_time(&self) -> f64 {
        self.steps as f64 * self.tau
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn slice_count(&self) -> usize {
        self.steps + 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn time_of(&self, slice: usize) -> f64 {
        slice as f64 * self.tau
    }

    /// Same box and time axis with a different target dimension.
    pub fn with_components(&self, components: usize) -> Result<Grid> {
        Grid::new(
            self.dim,
            components,
            self.cells_per_axis,
            self.side,
            self.tau,
            self.final_time(),
            self.bc,
        )
    }

    /// Same box with a different time axis.
    pub fn with_time(&self, tau: f64, final_time: f64) -> Result<Grid> {
        Grid::new(
            self.dim,
            self.components,
            self.cells_per_axis,
            self.side,
            tau,
            final_time,
            self.bc,
        )
    }

    /// Twice as many cells per axis, same time axis.
    pub fn refined(&self) -> Grid {
        Grid {
            cells_per_axis: 2 * self.cells_per_axis,
            ..*self
        }
    }

    /// Multi-index `(i, j)` of a linear cell index (`j = 0` for `n = 1`).
    pub fn cell_multi(&self, cell: usize) -> [usize; 2] {
        if self.dim == 1 {
            [cell, 0]
        } else {
            [cell / self.cells_per_axis, cell % self.cells_per_axis]
        }
    }

    pub fn cell_linear(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.cells_per_axis + idx[1]
        }
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        let h = self.spacing();
        let idx = self.cell_multi(cell);
        let mut x = [0.0; 2];
        for d in 0..self.dim {
            x[d] = (idx[d] as f64 + 0.5) * h;
        }
        x
    }

    /// Cell whose center is nearest to `x` (wrapped for periodic grids,
    /// clamped into the box otherwise).
    pub fn nearest_cell(&self, x: Point) -> usize {
        let h = self.spacing();
        let m = self.cells_per_axis as i64;
        let mut idx = [0usize; 2];
        for d in 0..self.dim {
            let i = (x[d] / h - 0.5).round() as i64;
            idx[d] = match self.bc {
                Boundary::Periodic => i.rem_euclid(m) as usize,
                Boundary::Dirichlet => i.clamp(0, m - 1) as usize,
            };
        }
        self.cell_linear(idx)
    }

    /// Signed displacement `b - a` along one axis, minimum image for
    /// periodic grids.
    pub fn axis_delta(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        match self.bc {
            Boundary::Periodic => d - self.side * (d / self.side).round(),
            Boundary::Dirichlet => d,
        }
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let mut s = 0.0;
        for d in 0..self.dim {
            let dx = self.axis_delta(a[d], b[d]);
            s += dx * dx;
        }
        s.sqrt()
    }

    /// Whether the open ball `B_r(center)` lies inside the spatial domain.
    /// Periodic boxes accept any ball narrower than half the box.
    pub fn ball_inside(&self, center: Point, radius: f64) -> bool {
        match self.bc {
            Boundary::Periodic => radius <= 0.5 * self.side,
            Boundary::Dirichlet => (0..self.dim)
                .all(|d| center[d] - radius >= -1e-12 && center[d] + radius <= self.side + 1e-12),
        }
    }

    /// Neighbor of `cell` shifted by `offset` cells along `axis`; `None`
    /// outside a Dirichlet box.
    pub fn shift(&self, cell: usize, axis: usize, offset: i64) -> Option<usize> {
        let mut idx = self.cell_multi(cell);
        let m = self.cells_per_axis as i64;
        let i = idx[axis] as i64 + offset;
        idx[axis] = match self.bc {
            Boundary::Periodic => i.rem_euclid(m) as usize,
            Boundary::Dirichlet => {
                if i < 0 || i >= m {
                    return None;
                }
                i as usize
            }
        };
        Some(self.cell_linear(idx))
    }

    /// Whether a cell touches the boundary of a Dirichlet box.
    pub fn is_boundary_cell(&self, cell: usize) -> bool {
        if self.bc == Boundary::Periodic {
            return false;
        }
        let idx = self.cell_multi(cell);
        let m = self.cells_per_axis;
        (0..self.dim).any(|d| idx[d] == 0 || idx[d] == m - 1)
    }
}

/// Raw storage shared by every sampled quantity: `width` values per cell
/// per slice, ordered slice-major, then cell, then value.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldData {
    grid: Grid,
    width: usize,
    values: Vec<f64>,
}

impl FieldData {
    pub fn zeros(grid: Grid, width: usize) -> Self {
        FieldData {
            grid,
            width,
            values: vec![0.0; grid.slice_count() * grid.cell_count() * width],
        }
    }

    pub fn from_values(grid: Grid, width: usize, values: Vec<f64>) -> Result<Self> {
        let expected = grid.slice_count() * grid.cell_count() * width;
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let per_slice = grid.cell_count() * width;
            return Err(Error::NonFinite {
                step: pos / per_slice,
                what: format!("field value at flat index {pos}"),
            });
        }
        Ok(FieldData {
            grid,
            width,
            values,
        })
    }

    /// Samples `f(t, x, out)` at every slice time and cell center.
    pub fn from_fn(grid: Grid, width: usize, mut f: impl FnMut(f64, Point, &mut [f64])) -> Self {
        let mut data = FieldData::zeros(grid, width);
        for k in 0..grid.slice_count() {
            let t = grid.time_of(k);
            for c in 0..grid.cell_count() {
                let x = grid.cell_center(c);
                f(t, x, data.at_mut(k, c));
            }
        }
        data
    }

    /// Applies `f(input, output)` cellwise to build a derived quantity.
    pub fn map(&self, width: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> FieldData {
        let mut out = FieldData::zeros(self.grid, width);
        for (src, dst) in self
            .values
            .chunks_exact(self.width)
            .zip(out.values.chunks_exact_mut(width))
        {
            f(src, dst);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, slice: usize, cell: usize) -> &[f64] {
        let start = (slice * self.grid.cell_count() + cell) * self.width;
        &self.values[start..start + self.width]
    }

    pub fn at_mut(&mut self, slice: usize, cell: usize) -> &mut [f64] {
        let start = (slice * self.grid.cell_count() + cell) * self.width;
        &mut self.values[start..start + self.width]
    }

    pub fn slice(&self, slice: usize) -> &[f64] {
        let len = self.grid.cell_count() * self.width;
        &self.values[slice * len..(slice + 1) * len]
    }

    pub fn slice_mut(&mut self, slice: usize) -> &mut [f64] {
        let len = self.grid.cell_count() * self.width;
        &mut self.values[slice * len..(slice + 1) * len]
    }

    pub fn scaled(&self, factor: f64) -> FieldData {
        self.map(self.width, |a, b| {
            for (x, y) in a.iter().zip(b.iter_mut()) {
                *y = factor * x;
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The `N`-vector valued unknown (or data) on the space-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField(FieldData);

impl SpaceTimeField {
    pub fn zeros(grid: Grid) -> Self {
        SpaceTimeField(FieldData::zeros(grid, grid.components()))
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64, Point, &mut [f64])) -> Self {
        SpaceTimeField(FieldData::from_fn(grid, grid.components(), f))
    }

    pub fn from_data(data: FieldData) -> Result<Self> {
        if data.width != data.grid.components() {
            return Err(Error::ShapeMismatch(format!(
                "space-time field needs width N = {}, got {}",
                data.grid.components(),
                data.width
            )));
        }
        Ok(SpaceTimeField(data))
    }

    /// A field whose every slice equals the given spatial state.
    pub fn constant_in_time(grid: Grid, state: &[f64]) -> Result<Self> {
        let mut f = SpaceTimeField::zeros(grid);
        if state.len() != f.slice(0).len() {
            return Err(Error::ShapeMismatch(
                "spatial state has wrong length".into(),
            ));
        }
        for k in 0..grid.slice_count() {
            f.slice_mut(k).copy_from_slice(state);
        }
        Ok(f)
    }

    pub fn into_data(self) -> FieldData {
        self.0
    }
}

impl Deref for SpaceTimeField {
    type Target = FieldData;
    fn deref(&self) -> &FieldData {
        &self.0
    }
}

impl DerefMut for SpaceTimeField {
    fn deref_mut(&mut self) -> &mut FieldData {
        &mut self.0
    }
}

/// `R^{N x n}`-valued samples, entry `(component, direction)` stored at
/// `component * n + direction`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField(FieldData);

impl GradientField {
    pub fn zeros(grid: Grid) -> Self {
        GradientField(FieldData::zeros(grid, grid.components() * grid.dim()))
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64, Point, &mut [f64])) -> Self {
        GradientField(FieldData::from_fn(grid, grid.components() * grid.dim(), f))
    }

    pub fn from_data(data: FieldData) -> Result<Self> {
        let w = data.grid.components() * data.grid.dim();
        if data.width != w {
            return Err(Error::ShapeMismatch(format!(
                "gradient field needs width N*n = {w}, got {}",
                data.width
            )));
        }
        Ok(GradientField(data))
    }

    /// Collocated gradient of every slice of `f`.
    pub fn of(f: &SpaceTimeField) -> Self {
        let grid = *f.grid();
        let mut out = GradientField::zeros(grid);
        for k in 0..grid.slice_count() {
            let g = gradient_slice(&grid, f.slice(k), grid.components());
            out.slice_mut(k).copy_from_slice(&g);
        }
        out
    }

    /// Cellwise `|Q|^p` (Frobenius norm).
    pub fn norm_pow(&self, p: f64) -> FieldData {
        self.map(1, |q, out| {
            let s: f64 = q.iter().map(|v| v * v).sum();
            out[0] = s.sqrt().powf(p);
        })
    }

    pub fn into_data(self) -> FieldData {
        self.0
    }
}

impl Deref for GradientField {
    type Target = FieldData;
    fn deref(&self) -> &FieldData {
        &self.0
    }
}

impl DerefMut for GradientField {
    fn deref_mut(&mut self) -> &mut FieldData {
        &mut self.0
    }
}

/// Stencil of the collocated derivative along `axis` at `cell`: pairs of
/// (cell, weight). Centered in the interior, second-order one-sided at
/// Dirichlet walls, wrapped when periodic.
fn derivative_stencil(grid: &Grid, cell: usize, axis: usize) -> [(usize, f64); 3] {
    let h = grid.spacing();
    let inv = 1.0 / (2.0 * h);
    match (grid.shift(cell, axis, -1), grid.shift(cell, axis, 1)) {
        (Some(l), Some(r)) => [(r, inv), (l, -inv), (cell, 0.0)],
        (None, Some(r)) => {
            let r2 = grid
                .shift(cell, axis, 2)
                .expect("grid has at least 8 cells per axis");
            [(cell, -3.0 * inv), (r, 4.0 * inv), (r2, -inv)]
        }
        (Some(l), None) => {
            let l2 = grid
                .shift(cell, axis, -2)
                .expect("grid has at least 8 cells per axis");
            [(cell, 3.0 * inv), (l, -4.0 * inv), (l2, inv)]
        }
        (None, None) => unreachable!("grid has at least 8 cells per axis"),
    }
}

/// Collocated gradient of one slice (`width` components per cell). Output
/// holds `width * n` values per cell.
pub fn gradient_slice(grid: &Grid, values: &[f64], width: usize) -> Vec<f64> {
    let n = grid.dim();
    let mut out = vec![0.0; grid.cell_count() * width * n];
    for c in 0..grid.cell_count() {
        for d in 0..n {
            let stencil = derivative_stencil(grid, c, d);
            for comp in 0..width {
                let mut acc = 0.0;
                for &(cc, w) in &stencil {
                    acc += w * values[cc * width + comp];
                }
                out[(c * width + comp) * n + d] = acc;
            }
        }
    }
    out
}

/// Gradient of slice `k` of `f`, laid out like one slice of a
/// [`GradientField`].
pub fn gradient(f: &SpaceTimeField, k: usize) -> Vec<f64> {
    gradient_slice(f.grid(), f.slice(k), f.width())
}

/// Discrete divergence of one gradient-valued slice: the negative adjoint
/// of [`gradient_slice`] in the cell-volume inner product.
pub fn divergence_slice(grid: &Grid, values: &[f64], width: usize) -> Vec<f64> {
    let n = grid.dim();
    let mut out = vec![0.0; grid.cell_count() * width];
    for c in 0..grid.cell_count() {
        for d in 0..n {
            for &(cc, w) in &derivative_stencil(grid, c, d) {
                for comp in 0..width {
                    out[cc * width + comp] -= w * values[(c * width + comp) * n + d];
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// A spatial ball at a single time slice.
    Ball,
    /// `(t - s, t] x B_r(x)`.
    Cylinder,
    /// `(t - s, t] x` whole box.
    Slab,
}

/// Geometric description of a region before it is intersected with a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    /// Top time of a cylinder/slab; for a ball, the time of its slice.
    pub time: f64,
    pub center: Point,
    pub radius: f64,
    pub duration: f64,
    /// Slice index of a ball region.
    pub slice: usize,
}

impl RegionSpec {
    pub fn ball(center: Point, radius: f64, slice: usize) -> Self {
        RegionSpec {
            kind: RegionKind::Ball,
            time: f64::NAN,
            center,
            radius,
            duration: 0.0,
            slice,
        }
    }

    pub fn cylinder(time: f64, center: Point, radius: f64, duration: f64) -> Self {
        RegionSpec {
            kind: RegionKind::Cylinder,
            time,
            center,
            radius,
            duration,
            slice: 0,
        }
    }

    pub fn slab(time: f64, duration: f64) -> Self {
        RegionSpec {
            kind: RegionKind::Slab,
            time,
            center: [0.0; 2],
            radius: f64::INFINITY,
            duration,
            slice: 0,
        }
    }
}

/// A clipped set of grid cells with their measures.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub spec: RegionSpec,
    cells: Vec<usize>,
    /// `(slice, time measure)`; a ball uses a unit weight on its slice.
    slices: Vec<(usize, f64)>,
    cell_volume: f64,
}

impl Region {
    pub fn ball(grid: &Grid, center: Point, radius: f64, slice: usize) -> Result<Region> {
        clip_region(&RegionSpec::ball(center, radius, slice), grid)
    }

    pub fn cylinder(
        grid: &Grid,
        time: f64,
        center: Point,
        radius: f64,
        duration: f64,
    ) -> Result<Region> {
        clip_region(&RegionSpec::cylinder(time, center, radius, duration), grid)
    }

    pub fn slab(grid: &Grid, time: f64, duration: f64) -> Result<Region> {
        clip_region(&RegionSpec::slab(time, duration), grid)
    }

    /// An explicit cell set on one slice (used for dyadic cubes and other
    /// shapes that are not balls).
    pub fn from_cells(
        grid: &Grid,
        spec: RegionSpec,
        mut cells: Vec<usize>,
        slices: Vec<(usize, f64)>,
    ) -> Result<Region> {
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() || slices.iter().all(|&(_, w)| w <= 0.0) {
            return Err(Error::DegenerateRegion(
                "explicit region has no measure".into(),
            ));
        }
        if let Some(&c) = cells.iter().find(|&&c| c >= grid.cell_count()) {
            return Err(Error::DegenerateRegion(format!(
                "cell {c} lies outside the grid"
            )));
        }
        Ok(Region {
            spec,
            cells,
            slices,
            cell_volume: grid.cell_volume(),
        })
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn slices(&self) -> &[(usize, f64)] {
        &self.slices
    }

    /// Space-time measure (spatial measure for a ball).
    pub fn measure(&self) -> f64 {
        self.spatial_measure() * self.time_measure()
    }

    pub fn spatial_measure(&self) -> f64 {
        self.cells.len() as f64 * self.cell_volume
    }

    pub fn time_measure(&self) -> f64 {
        self.slices.iter().map(|&(_, w)| w).sum()
    }

    pub fn contains_cell(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Cell-set inclusion with pointwise smaller time weights.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        let cells_ok = self.cells.iter().all(|&c| other.contains_cell(c));
        let slices_ok = self.slices.iter().all(|&(k, w)| {
            other
                .slices
                .iter()
                .any(|&(k2, w2)| k2 == k && w <= w2 * (1.0 + 1e-12) + 1e-15)
        });
        cells_ok && slices_ok
    }

    /// The same region with one cell removed.
    pub fn excluding_cell(&self, cell: usize) -> Result<Region> {
        let cells: Vec<usize> = self.cells.iter().copied().filter(|&c| c != cell).collect();
        if cells.is_empty() {
            return Err(Error::DegenerateRegion(
                "removing the cell empties the region".into(),
            ));
        }
        Ok(Region {
            cells,
            ..self.clone()
        })
    }

    /// The same spatial cells restricted to one slice with unit weight.
    pub fn at_slice(&self, slice: usize) -> Region {
        Region {
            spec: RegionSpec {
                kind: RegionKind::Ball,
                slice,
                ..self.spec
            },
            cells: self.cells.clone(),
            slices: vec![(slice, 1.0)],
            cell_volume: self.cell_volume,
        }
    }
}

/// Intersects a geometric region with the grid. A cell is included iff its
/// center lies in the open ball; time slices carry their exact overlap with
/// `(t - s, t]`.
pub fn clip_region(spec: &RegionSpec, grid: &Grid) -> Result<Region> {
    let cells: Vec<usize> = match spec.kind {
        RegionKind::Slab => (0..grid.cell_count()).collect(),
        RegionKind::Ball | RegionKind::Cylinder => {
            if !(spec.radius > 0.0) {
                return Err(Error::DegenerateRegion(format!(
                    "radius {} is not positive",
                    spec.radius
                )));
            }
            let limit = spec.radius * (1.0 - 1e-12);
            let mut cells: Vec<usize> = ball_candidates(grid, spec.center, spec.radius)
                .into_iter()
                .filter(|&c| grid.distance(grid.cell_center(c), spec.center) < limit)
                .collect();
            cells.sort_unstable();
            cells.dedup();
            cells
        }
    };
    if cells.is_empty() {
        return Err(Error::DegenerateRegion(format!(
            "no cell center inside ball of radius {} at {:?}",
            spec.radius, spec.center
        )));
    }
    let slices = match spec.kind {
        RegionKind::Ball => {
            if spec.slice >= grid.slice_count() {
                return Err(Error::DegenerateRegion(format!(
                    "slice {} out of range",
                    spec.slice
                )));
            }
            vec![(spec.slice, 1.0)]
        }
        RegionKind::Cylinder | RegionKind::Slab => time_weights(grid, spec.time, spec.duration),
    };
    if slices.is_empty() {
        return Err(Error::DegenerateRegion(format!(
            "time window ({}, {}] has no overlap with the grid",
            spec.time - spec.duration,
            spec.time
        )));
    }
    Ok(Region {
        spec: *spec,
        cells,
        slices,
        cell_volume: grid.cell_volume(),
    })
}

/// Cells whose index lies in the bounding box of `B_r(center)`.
fn ball_candidates(grid: &Grid, center: Point, radius: f64) -> Vec<usize> {
    let h = grid.spacing();
    let m = grid.cells_per_axis() as i64;
    let mut ranges = [(0i64, 0i64); 2];
    for d in 0..grid.dim() {
        let lo = ((center[d] - radius) / h - 0.5).floor() as i64;
        let hi = ((center[d] + radius) / h - 0.5).ceil() as i64;
        ranges[d] = match grid.bc() {
            Boundary::Periodic if hi - lo + 1 >= m => (0, m - 1),
            Boundary::Periodic => (lo, hi),
            Boundary::Dirichlet => (lo.max(0), hi.min(m - 1)),
        };
    }
    let wrap = |i: i64| i.rem_euclid(m) as usize;
    let mut out = Vec::new();
    if grid.dim() == 1 {
        for i in ranges[0].0..=ranges[0].1 {
            out.push(wrap(i));
        }
    } else {
        for i in ranges[0].0..=ranges[0].1 {
            for j in ranges[1].0..=ranges[1].1 {
                out.push(grid.cell_linear([wrap(i), wrap(j)]));
            }
        }
    }
    out
}

/// Overlaps of `(top - duration, top]` with the slice intervals.
pub fn time_weights(grid: &Grid, top: f64, duration: f64) -> Vec<(usize, f64)> {
    let tau = grid.tau();
    let lo = top - duration;
    let mut out = Vec::new();
    if !(duration > 0.0) {
        return out;
    }
    let first = ((lo / tau).floor().max(0.0) as usize).max(1);
    let last = ((top / tau).ceil() as usize).min(grid.steps());
    for k in first..=last {
        let a = ((k - 1) as f64 * tau).max(lo);
        let b = (k as f64 * tau).min(top);
        let w = b - a;
        if w > 1e-12 * tau {
            out.push((k, w));
        }
    }
    out
}

/// Measure-weighted mean of `f` over `region` (one value per component).
pub fn mean_over(f: &FieldData, region: &Region) -> Result<Vec<f64>> {
    let total_w = region.time_measure();
    if region.cells.is_empty() || !(total_w > 0.0) {
        return Err(Error::DegenerateRegion("region has zero measure".into()));
    }
    let w = f.width();
    let mut acc = vec![0.0; w];
    for &(k, tw) in &region.slices {
        let mut slice_acc = vec![0.0; w];
        for &c in &region.cells {
            for (a, v) in slice_acc.iter_mut().zip(f.at(k, c)) {
                *a += v;
            }
        }
        for (a, s) in acc.iter_mut().zip(&slice_acc) {
            *a += tw * s;
        }
    }
    let denom = total_w * region.cells.len() as f64;
    Ok(acc.into_iter().map(|a| a / denom).collect())
}

/// Measure-weighted integral of `f` over `region`.
pub fn integral_over(f: &FieldData, region: &Region) -> Result<Vec<f64>> {
    let mean = mean_over(f, region)?;
    let m = region.measure();
    Ok(mean.into_iter().map(|v| v * m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(m: usize, bc: Boundary) -> Grid {
        Grid::new(1, 1, m, 1.0, 0.1, 1.0, bc).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 1, 16, 1.0, 0.1, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 1, 4, 1.0, 0.1, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 1, 16, 1.0, 0.3, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 1, 16, 1.0, -0.1, 1.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 0, 16, 1.0, 0.1, 1.0, Boundary::Periodic).is_err());
        let g = Grid::new(2, 3, 16, 2.0, 0.1, 1.0, Boundary::Dirichlet).unwrap();
        assert_eq!(g.steps(), 10);
        assert_eq!(g.cell_count(), 256);
        assert!((g.spacing() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        for bc in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::new(2, 2, 12, 1.0, 0.5, 1.0, bc).unwrap();
            let f = SpaceTimeField::from_fn(g, |_, _, out| {
                out[0] = 3.0;
                out[1] = -1.5;
            });
            assert!(gradient(&f, 1).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_exact_for_linear_dirichlet() {
        let g = Grid::new(2, 1, 16, 1.0, 0.5, 1.0, Boundary::Dirichlet).unwrap();
        let f = SpaceTimeField::from_fn(g, |_, x, out| out[0] = x[0]);
        let grad = gradient(&f, 0);
        for c in 0..g.cell_count() {
            assert!((grad[2 * c] - 1.0).abs() < 1e-12);
            assert!(grad[2 * c + 1].abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_refinement_is_second_order() {
        let err = |m: usize| {
            let g = grid1(m, Boundary::Periodic);
            let f = SpaceTimeField::from_fn(g, |_, x, out| out[0] = (2.0 * PI * x[0]).sin());
            let grad = gradient(&f, 0);
            (0..m)
                .map(|c| {
                    let x = g.cell_center(c)[0];
                    (grad[c] - 2.0 * PI * (2.0 * PI * x).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        for m in [16, 32, 64, 128] {
            let order = (err(m) / err(2 * m)).log2();
            assert!(order >= 1.9, "order {order} at m = {m}");
        }
    }

    #[test]
    fn dirichlet_one_sided_gradient_is_second_order() {
        let err = |m: usize| {
            let g = grid1(m, Boundary::Dirichlet);
            let f = SpaceTimeField::from_fn(g, |_, x, out| out[0] = (1.3 * x[0]).exp());
            let grad = gradient(&f, 0);
            (0..m)
                .map(|c| (grad[c] - 1.3 * (1.3 * g.cell_center(c)[0]).exp()).abs())
                .fold(0.0, f64::max)
        };
        let order = (err(64) / err(128)).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn periodic_divergence_sums_to_zero() {
        let g = Grid::new(2, 1, 16, 1.0, 0.5, 1.0, Boundary::Periodic).unwrap();
        let f = SpaceTimeField::from_fn(g, |_, x, out| {
            out[0] = (2.0 * PI * x[0]).sin() * x[1].cos() + x[1]
        });
        let grad = gradient(&f, 0);
        let div = divergence_slice(&g, &grad, 1);
        let total: f64 = div.iter().sum();
        assert!(total.abs() < 1e-9, "{total}");
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let g = Grid::new(2, 1, 10, 1.0, 0.5, 1.0, Boundary::Dirichlet).unwrap();
        let u: Vec<f64> = (0..g.cell_count())
            .map(|c| ((c * 7919) % 101) as f64 / 101.0)
            .collect();
        let q: Vec<f64> = (0..2 * g.cell_count())
            .map(|c| ((c * 104729) % 97) as f64 / 97.0 - 0.5)
            .collect();
        let gu = gradient_slice(&g, &u, 1);
        let dq = divergence_slice(&g, &q, 1);
        let lhs: f64 = gu.iter().zip(&q).map(|(a, b)| a * b).sum();
        let rhs: f64 = -u.iter().zip(&dq).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn mean_over_examples() {
        let g = Grid::new(1, 1, 256, 2.0, 0.5, 1.0, Boundary::Dirichlet).unwrap();
        let c = [1.0, 0.0];
        let r = 0.5;
        let ball = Region::ball(&g, c, r, 0).unwrap();
        let five = SpaceTimeField::from_fn(g, |_, _, o| o[0] = 5.0);
        assert!((mean_over(&five, &ball).unwrap()[0] - 5.0).abs() < 1e-14);
        let lin = SpaceTimeField::from_fn(g, |_, x, o| o[0] = x[0] - 1.0);
        assert!(mean_over(&lin, &ball).unwrap()[0].abs() < 1e-14);
        let sq = SpaceTimeField::from_fn(g, |_, x, o| o[0] = (x[0] - 1.0).powi(2));
        let m = mean_over(&sq, &ball).unwrap()[0];
        // midpoint quadrature of r^2/3 on cell centers
        assert!((m - r * r / 3.0).abs() < 1e-3 * r * r, "{m}");
    }

    #[test]
    fn mean_over_shifts_by_constant() {
        let g = Grid::new(2, 1, 16, 1.0, 0.25, 1.0, Boundary::Periodic).unwrap();
        let f = SpaceTimeField::from_fn(g, |t, x, o| o[0] = (x[0] * 7.0).sin() + t * x[1]);
        let f2 = SpaceTimeField::from_fn(g, |t, x, o| o[0] = (x[0] * 7.0).sin() + t * x[1] + 2.5);
        let cyl = Region::cylinder(&g, 1.0, [0.3, 0.6], 0.3, 0.6).unwrap();
        let a = mean_over(&f, &cyl).unwrap()[0];
        let b = mean_over(&f2, &cyl).unwrap()[0];
        assert!((b - a - 2.5).abs() < 1e-14);
    }

    #[test]
    fn clip_examples() {
        let g = Grid::new(2, 1, 16, 1.0, 0.5, 1.0, Boundary::Periodic).unwrap();
        let h = g.spacing();
        let c = g.cell_center(g.cell_linear([5, 7]));
        let tiny = Region::ball(&g, c, h / 4.0, 0).unwrap();
        assert_eq!(tiny.cells(), &[g.cell_linear([5, 7])]);

        let interior = Region::ball(&g, [0.5, 0.5], 0.2, 0).unwrap();
        let wrapped = Region::ball(&g, [0.02, 0.97], 0.2, 0).unwrap();
        // brute-force count of cell centers within the minimum-image distance
        let brute = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                let dx = [x - 0.02, x - 0.02 + 1.0, x - 0.02 - 1.0]
                    .into_iter()
                    .map(f64::abs)
                    .fold(f64::INFINITY, f64::min);
                let dy = [y - 0.97, y - 0.97 + 1.0, y - 0.97 - 1.0]
                    .into_iter()
                    .map(f64::abs)
                    .fold(f64::INFINITY, f64::min);
                (dx * dx + dy * dy).sqrt() < 0.2
            })
            .count();
        assert_eq!(wrapped.cells().len(), brute);
        // translate by half the box (a whole number of cells) into the interior
        let shifted = Region::ball(&g, [0.52, 0.47], 0.2, 0).unwrap();
        assert_eq!(wrapped.cells().len(), shifted.cells().len());
        assert!(!interior.cells().is_empty());

        assert!(Region::ball(&g, [0.5, 0.5], 0.0, 0).is_err());
    }

    #[test]
    fn cylinder_time_weights_are_exact_overlaps() {
        let g = Grid::new(1, 1, 16, 1.0, 0.1, 1.0, Boundary::Periodic).unwrap();
        let cyl = Region::cylinder(&g, 0.8, [0.5, 0.0], 0.2, 0.25).unwrap();
        let total = cyl.time_measure();
        assert!((total - 0.25).abs() < 1e-12);
        assert_eq!(cyl.slices().first().unwrap().0, 6);
        assert!((cyl.slices()[0].1 - 0.05).abs() < 1e-12);
        // clipped at t = 0
        let early = Region::cylinder(&g, 0.2, [0.5, 0.0], 0.2, 0.5).unwrap();
        assert!((early.time_measure() - 0.2).abs() < 1e-12);
    }
}
