//! Mean value inequalities and the passage from decaying mean
//! oscillations to pointwise oscillation bounds, checked with explicit
//! constants on discrete regions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::seminorms::{mean_osc, mean_osc_about, osc};
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::grid::{mean_over, Boundary, FieldData, Grid, Region, RegionSpec};

const TOL: f64 = 1e-12;

/// An axis-aligned block of `size^n` cells starting at `origin` (cell
/// indices). Children halve every side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub origin: [usize; 2],
    pub size: usize,
}

impl DyadicCube {
    pub fn children(&self, dim: usize) -> Vec<DyadicCube> {
        let h = self.size / 2;
        if h == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for a in 0..2 {
            for b in 0..if dim == 2 { 2 } else { 1 } {
                out.push(DyadicCube {
                    origin: [self.origin[0] + a * h, self.origin[1] + b * h],
                    size: h,
                });
            }
        }
        out
    }

    /// All descendants at `depth` levels below, in a fixed order.
    pub fn descendants(&self, dim: usize, depth: usize) -> Vec<DyadicCube> {
        let mut level = vec![*self];
        for _ in 0..depth {
            level = level.iter().flat_map(|c| c.children(dim)).collect();
        }
        level
    }

    pub fn region(&self, grid: &Grid, slice: usize) -> Result<Region> {
        let cells = dyadic_cells(grid, self)?;
        let h = grid.spacing();
        let half = 0.5 * self.size as f64 * h;
        let center = [
            self.origin[0] as f64 * h + half,
            if grid.dim() == 2 {
                self.origin[1] as f64 * h + half
            } else {
                0.0
            },
        ];
        let spec = RegionSpec::ball(center, half * (grid.dim() as f64).sqrt(), slice);
        Region::from_cells(grid, spec, cells, vec![(slice, 1.0)])
    }
}

pub fn dyadic_cells(grid: &Grid, cube: &DyadicCube) -> Result<Vec<usize>> {
    let m = grid.cells_per_axis();
    let dim = grid.dim();
    if cube.size == 0 || (0..dim).any(|d| cube.origin[d] + cube.size > m) {
        return Err(Error::DegenerateRegion(format!(
            "cube {cube:?} does not fit the grid"
        )));
    }
    let mut out = Vec::new();
    for i in 0..cube.size {
        if dim == 1 {
            out.push(grid.cell_linear([cube.origin[0] + i, 0]));
        } else {
            for j in 0..cube.size {
                out.push(grid.cell_linear([cube.origin[0] + i, cube.origin[1] + j]));
            }
        }
    }
    Ok(out)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup_abs(f: &FieldData, region: &Region) -> f64 {
    let mut s = 0.0f64;
    for &(k, _) in region.slices() {
        for &c in region.cells() {
            s = s.max(norm(f.at(k, c)));
        }
    }
    s
}

fn leq(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + TOL * (rhs.abs() + scale)
}

/// `|<f>_{Q1} - <f>_{Q2}| <= (⨍_{Q1} |f - <f>_{Q2}|^q)^{1/q}
/// <= ((|Q2|/|Q1|) ⨍_{Q2} |f - <f>_{Q2}|^q)^{1/q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeansCheck {
    pub gap: f64,
    pub middle: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_means(f: &FieldData, q1: &Region, q2: &Region, q: f64) -> Result<MeansCheck> {
    if !q1.is_subset_of(q2) {
        return Err(Error::InvalidArgument(
            "the inner region is not contained in the outer one".into(),
        ));
    }
    let m1 = mean_over(f, q1)?;
    let m2 = mean_over(f, q2)?;
    let gap = m1
        .iter()
        .zip(&m2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let middle = mean_osc_about(f, q1, q, &m2)?;
    let ratio = q2.measure() / q1.measure();
    let bound = ratio.powf(1.0 / q) * mean_osc(f, q2, q)?;
    let scale = sup_abs(f, q2);
    Ok(MeansCheck {
        gap,
        middle,
        bound,
        holds: leq(gap, middle, scale) && leq(middle, bound, scale),
    })
}

/// Iterated form along a chain `Q_0 ⊃ Q_1 ⊃ ... ⊃ Q_k` with the explicit
/// constant `c^{1/q}`, `c` the largest consecutive measure ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanitCheck {
    pub gap: f64,
    pub telescoped: f64,
    pub constant: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn check_meanit(f: &FieldData, chain: &[Region], q: f64) -> Result<MeanitCheck> {
    if chain.len() < 2 {
        return Err(Error::InvalidArgument(
            "a chain needs at least two regions".into(),
        ));
    }
    for w in chain.windows(2) {
        if !w[1].is_subset_of(&w[0]) {
            return Err(Error::InvalidArgument(
                "chain regions are not nested".into(),
            ));
        }
    }
    let means: Vec<Vec<f64>> = chain
        .iter()
        .map(|r| mean_over(f, r))
        .collect::<Result<_>>()?;
    let d = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let gap = d(&means[chain.len() - 1], &means[0]);
    let telescoped: f64 = means.windows(2).map(|w| d(&w[1], &w[0])).sum();
    let c = chain
        .windows(2)
        .map(|w| w[0].measure() / w[1].measure())
        .fold(1.0f64, f64::max);
    let constant = c.powf(1.0 / q);
    let mut sum = 0.0;
    for r in &chain[..chain.len() - 1] {
        sum += mean_osc(f, r, q)?;
    }
    let bound = constant * sum;
    let scale = sup_abs(f, &chain[0]);
    Ok(MeanitCheck {
        gap,
        telescoped,
        constant,
        bound,
        holds: leq(gap, telescoped, scale) && leq(telescoped, bound, scale),
    })
}

/// Outcome of an inequality that carries a hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LemmaOutcome {
    Holds { lhs: f64, rhs: f64 },
    Violated { lhs: f64, rhs: f64 },
    HypothesisNotMet { reason: String },
}

impl LemmaOutcome {
    fn judge(lhs: f64, rhs: f64, scale: f64) -> Self {
        if leq(lhs, rhs, scale) {
            LemmaOutcome::Holds { lhs, rhs }
        } else {
            LemmaOutcome::Violated { lhs, rhs }
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, LemmaOutcome::Violated { .. })
    }
}

/// If `|<f>_{Q1}| <= eps <|f|^q>_Q^{1/q}` then
/// `eps <|f|^q>_Q^{1/q} <= eps/(1-eps) (1 + (|Q|/|Q1|)^{1/q}) (⨍_Q |f - <f>_Q|^q)^{1/q}`.
pub fn check_osc_lemma(
    f: &FieldData,
    q1: &Region,
    big: &Region,
    q: f64,
    eps: f64,
) -> Result<LemmaOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    if !q1.is_subset_of(big) {
        return Err(Error::InvalidArgument(
            "the inner region is not contained in the outer one".into(),
        ));
    }
    let zero = vec![0.0; f.width()];
    let m1 = norm(&mean_over(f, q1)?);
    let lq = mean_osc_about(f, big, q, &zero)?;
    if m1 > eps * lq {
        return Ok(LemmaOutcome::HypothesisNotMet {
            reason: format!("|<f>_Q1| = {m1} exceeds eps <|f|^q>^(1/q) = {}", eps * lq),
        });
    }
    let ratio = big.measure() / q1.measure();
    let rhs = eps / (1.0 - eps) * (1.0 + ratio.powf(1.0 / q)) * mean_osc(f, big, q)?;
    Ok(LemmaOutcome::judge(eps * lq, rhs, sup_abs(f, big)))
}

/// Result of the dyadic oscillation lemma on one root cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Osc2Outcome {
    pub outcome: LemmaOutcome,
    /// Smallest constant with `osc_q(Q') <= c1 omega(2^-j) osc_q(Q_0)` for
    /// every descendant `Q'` at depth `j`.
    pub c1_min: f64,
    /// `c = 2 D^{1/q} c1`, `D = 2^n`.
    pub c: f64,
    /// `sum_i omega(2^-i theta) / omega(theta)` over the chain.
    pub dini_sum: f64,
}

/// On a dyadic hierarchy under `root`, the decay hypothesis
/// `osc_q(Q') <= c1 omega(2^-j) osc_q(root)` for depth-`j` descendants
/// implies, for every depth-`level` cube `theta Q` (`theta = 2^-level`),
/// `osc_{theta Q} f <= c K omega(theta) osc_q(root)` with `c = 2 D^{1/q} c1`
/// whenever `sum_i omega(2^-i theta) <= K omega(theta)`.
///
/// The chain from `theta Q` down to a single cell telescopes the means with
/// ratio `D` per step. With `c1 = None` the minimal constant is used.
pub fn check_osc2_lemma(
    f: &FieldData,
    root: &DyadicCube,
    slice: usize,
    q: f64,
    level: usize,
    weight: &Weight,
    k_dini: f64,
    c1: Option<f64>,
) -> Result<Osc2Outcome> {
    let grid = f.grid();
    let dim = grid.dim();
    if !root.size.is_power_of_two() {
        return Err(Error::InvalidArgument(
            "root cube side must be a power of two".into(),
        ));
    }
    let depth = root.size.trailing_zeros() as usize;
    if level < 2 || level > depth {
        return Err(Error::InvalidArgument(format!(
            "theta = 2^-{level} must lie in (0, 1/2) and above the cell scale (depth {depth})"
        )));
    }
    let root_region = root.region(grid, slice)?;
    let base = mean_osc(f, &root_region, q)?;
    let theta = 0.5f64.powi(level as i32);
    let dini_sum: f64 = (level..depth)
        .map(|i| weight.eval(0.5f64.powi(i as i32)))
        .sum::<f64>()
        / weight.eval(theta);
    let mut c1_min = 0.0f64;
    if base > 0.0 {
        for j in 0..depth {
            let om = weight.eval(0.5f64.powi(j as i32));
            for cube in root.descendants(dim, j) {
                let o = mean_osc(f, &cube.region(grid, slice)?, q)?;
                c1_min = c1_min.max(o / (om * base));
            }
        }
    }
    let c1 = match c1 {
        Some(c) if c < c1_min * (1.0 - TOL) => {
            return Ok(Osc2Outcome {
                outcome: LemmaOutcome::HypothesisNotMet {
                    reason: format!("decay hypothesis needs c1 >= {c1_min}, got {c}"),
                },
                c1_min,
                c: f64::NAN,
                dini_sum,
            })
        }
        Some(c) => c,
        None => c1_min,
    };
    let d = (1usize << dim) as f64;
    let c = 2.0 * d.powf(1.0 / q) * c1;
    if dini_sum > k_dini * (1.0 + TOL) {
        return Ok(Osc2Outcome {
            outcome: LemmaOutcome::HypothesisNotMet {
                reason: format!("Dini sum {dini_sum} exceeds K = {k_dini}"),
            },
            c1_min,
            c,
            dini_sum,
        });
    }
    let mut lhs = 0.0f64;
    for cube in root.descendants(dim, level) {
        lhs = lhs.max(osc(f, &cube.region(grid, slice)?)?);
    }
    let rhs = c * k_dini * weight.eval(theta) * base;
    Ok(Osc2Outcome {
        outcome: LemmaOutcome::judge(lhs, rhs, sup_abs(f, &root_region)),
        c1_min,
        c,
        dini_sum,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub cases: usize,
    pub holds: usize,
    pub violations: usize,
    pub hypothesis_not_met: usize,
    /// Largest `lhs / rhs` among cases that were checked.
    pub worst_ratio: f64,
}

impl Tally {
    fn record(&mut self, lhs: f64, rhs: f64, holds: bool) {
        self.cases += 1;
        if holds {
            self.holds += 1;
        } else {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(lhs / rhs);
        }
    }

    fn record_outcome(&mut self, o: &LemmaOutcome) {
        match o {
            LemmaOutcome::Holds { lhs, rhs } => self.record(*lhs, *rhs, true),
            LemmaOutcome::Violated { lhs, rhs } => self.record(*lhs, *rhs, false),
            LemmaOutcome::HypothesisNotMet { .. } => {
                self.cases += 1;
                self.hypothesis_not_met += 1;
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanValueReport {
    pub means: Tally,
    pub meanit: Tally,
    pub osc: Tally,
    pub osc2: Tally,
}

impl MeanValueReport {
    pub fn violations(&self) -> usize {
        self.means.violations + self.meanit.violations + self.osc.violations + self.osc2.violations
    }
}

const SIDE: usize = 16;
const DEPTH: usize = 4;

fn random_field(rng: &mut ChaCha8Rng, dim: usize) -> Result<FieldData> {
    let grid = Grid::new(dim, 1, SIDE, 1.0, 1.0, 1.0, Boundary::Dirichlet)?;
    let width = if rng.gen_bool(0.5) { 1 } else { 2 };
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    let offset: Vec<f64> = (0..width)
        .map(|_| scale * rng.gen_range(-3.0..3.0))
        .collect();
    let kind = rng.gen_range(0..4);
    let freq = rng.gen_range(0.5..6.0);
    let mut values = Vec::with_capacity(grid.slice_count() * grid.cell_count() * width);
    for _k in 0..grid.slice_count() {
        for c in 0..grid.cell_count() {
            let x = grid.cell_center(c);
            for &o in &offset {
                let v = match kind {
                    0 => rng.gen_range(-1.0..1.0),
                    1 => rng.gen_range(-1.0f64..1.0).powi(5),
                    2 => (freq * (x[0] + 0.7 * x[1])).sin() + 0.01 * rng.gen_range(-1.0..1.0),
                    _ => {
                        if rng.gen_bool(0.05) {
                            rng.gen_range(-50.0..50.0)
                        } else {
                            0.0
                        }
                    }
                };
                values.push(o + scale * v);
            }
        }
    }
    FieldData::from_values(grid, width, values)
}

fn random_descendant(
    rng: &mut ChaCha8Rng,
    cube: &DyadicCube,
    dim: usize,
    depth: usize,
) -> DyadicCube {
    let mut c = *cube;
    for _ in 0..depth {
        c = *c.children(dim).choose(rng).unwrap();
    }
    c
}

const EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];

/// Runs each mean-value inequality on `cases` random fields and nested
/// dyadic regions.
pub fn run_mean_value_suite(cases: usize, seed: u64) -> Result<MeanValueReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = MeanValueReport::default();
    let root = DyadicCube {
        origin: [0, 0],
        size: SIDE,
    };
    for i in 0..cases {
        let dim = if i % 3 == 0 { 1 } else { 2 };
        let f = random_field(&mut rng, dim)?;
        let grid = *f.grid();
        let slice = rng.gen_range(0..grid.slice_count());
        let q = *EXPONENTS.choose(&mut rng).unwrap();

        let d2 = rng.gen_range(0..DEPTH);
        let outer = random_descendant(&mut rng, &root, dim, d2);
        let di = rng.gen_range(1..=DEPTH - d2);
        let inner = random_descendant(&mut rng, &outer, dim, di);
        let (ro, ri) = (outer.region(&grid, slice)?, inner.region(&grid, slice)?);
        let m = check_means(&f, &ri, &ro, q)?;
        rep.means.record(m.middle.max(m.gap), m.bound, m.holds);

        let d0 = rng.gen_range(0..2);
        let mut chain = vec![random_descendant(&mut rng, &root, dim, d0)];
        let mut depth = (chain[0].size as f64).log2() as usize;
        while depth > 0 {
            let step = rng.gen_range(1..=depth.min(2));
            let next = random_descendant(&mut rng, chain.last().unwrap(), dim, step);
            chain.push(next);
            depth -= step;
            if rng.gen_bool(0.2) {
                break;
            }
        }
        if chain.len() >= 2 {
            let regions: Vec<Region> = chain
                .iter()
                .map(|c| c.region(&grid, slice))
                .collect::<Result<_>>()?;
            let m = check_meanit(&f, &regions, q)?;
            rep.meanit.record(m.telescoped.max(m.gap), m.bound, m.holds);
        }

        // Most raw fields miss the smallness hypothesis because of their
        // offset. Usually recentre on Q1 and put back an inner mean of size
        // u eps L, L the L^q size of the recentred field on Q; the triangle
        // inequality keeps the hypothesis for u <= 1/(1 + eps).
        let eps = rng.gen_range(0.01..0.99);
        let o = if rng.gen_bool(0.9) {
            let m1 = mean_over(&f, &ri)?;
            let centred = f.map(f.width(), |v, out| {
                for ((o, x), m) in out.iter_mut().zip(v).zip(&m1) {
                    *o = x - m;
                }
            });
            let zero = vec![0.0; f.width()];
            let l = mean_osc_about(&centred, &ro, q, &zero)?;
            let u = rng.gen_range(0.0..1.0) / (1.0 + eps);
            let dir: Vec<f64> = (0..f.width()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let shifted = centred.map(f.width(), |v, out| {
                for ((o, x), d) in out.iter_mut().zip(v).zip(&dir) {
                    *o = x + u * eps * l * d / dn;
                }
            });
            check_osc_lemma(&shifted, &ri, &ro, q, eps)?
        } else {
            check_osc_lemma(&f, &ri, &ro, q, eps)?
        };
        rep.osc.record_outcome(&o);

        let gamma = rng.gen_range(0.1..1.0);
        let weight = Weight::power(gamma)?;
        let k_dini = 1.0 / (1.0 - 0.5f64.powf(gamma));
        let level = rng.gen_range(2..DEPTH);
        let o2 = check_osc2_lemma(&f, &root, slice, q, level, &weight, k_dini, None)?;
        rep.osc2.record_outcome(&o2.outcome);
    }
    Ok(rep)
}
