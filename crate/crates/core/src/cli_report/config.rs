//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [grid]
//! n = 1
//! m = 256
//! bc = periodic
//! [solver]
//! p = 3
//! [experiment]
//! name = caloric_decay
//! seeds = 1, 2, 3
//! ```
//!
//! Keys left out keep the defaults of the experiment being run (or of the
//! plain solver when no experiment is named).

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{
    ComparisonConfig, DecayConfig, ForcingFamily, HoelderConfig, HoelderProfile, InitialData,
    IntrinsicBmoConfig, MainBmoConfig,
};
use crate::geometry::Ladder;
use crate::grid::{Boundary, Grid, Point};
use crate::oscillation::{Scan, Weight};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },

    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },

    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },

    /// A value that parses but breaks a constraint. `line` is 0 when the
    /// offending value is a default.
    #[error("line {line}: {message}")]
    Constraint { line: usize, message: String },
}

impl ConfigError {
    pub fn line(&self) -> usize {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownSection { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::DuplicateKey { line, .. }
            | ConfigError::TypeMismatch { line, .. }
            | ConfigError::Constraint { line, .. } => *line,
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    CaloricDecay,
    Comparison,
    MainBmo,
    IntrinsicBmo,
    HoelderTransfer,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] = [
        ExperimentName::CaloricDecay,
        ExperimentName::Comparison,
        ExperimentName::MainBmo,
        ExperimentName::IntrinsicBmo,
        ExperimentName::HoelderTransfer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::CaloricDecay => "caloric_decay",
            ExperimentName::Comparison => "comparison",
            ExperimentName::MainBmo => "main_bmo",
            ExperimentName::IntrinsicBmo => "intrinsic_bmo",
            ExperimentName::HoelderTransfer => "hoelder_transfer",
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = String;

    /// Accepts the bare name or the `run_` form.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bare = s.strip_prefix("run_").unwrap_or(s);
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == bare)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Grid keys; unset entries fall back to the base grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridBlock {
    pub n: Option<usize>,
    pub components: Option<usize>,
    pub m: Option<usize>,
    pub side: Option<f64>,
    pub tau: Option<f64>,
    pub final_time: Option<f64>,
    pub bc: Option<Boundary>,
}

impl GridBlock {
    pub fn apply(&self, base: &Grid) -> crate::Result<Grid> {
        Grid::new(
            self.n.unwrap_or(base.dim()),
            self.components.unwrap_or(base.components()),
            self.m.unwrap_or(base.cells_per_axis()),
            self.side.unwrap_or(base.side()),
            self.tau.unwrap_or(base.tau()),
            self.final_time.unwrap_or(base.final_time()),
            self.bc.unwrap_or(base.bc()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryBlock {
    pub b: f64,
    pub k: f64,
    pub ladder: Ladder,
    pub center: Point,
    pub outer_radius: f64,
    pub outer_duration: Option<f64>,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock {
            b: 1.0,
            k: 2.0,
            ladder: Ladder::default(),
            center: [0.5, 0.5],
            outer_radius: 0.25,
            outer_duration: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    U,
    Grad,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormChoice {
    BmoPar,
    Bochner,
    Blo,
    Zygmund,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialChoice {
    Zero,
    Sine,
    RandomTrig,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingChoice {
    Zero,
    Log,
    SpaceConstant,
    Fractional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBlock {
    pub name: Option<ExperimentName>,
    pub amplitudes: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub seed: u64,
    pub refine: Option<bool>,
    pub gamma: f64,
    pub intrinsic_g_norm: bool,
    pub initial: InitialChoice,
    pub forcing: ForcingChoice,
    pub amplitude: f64,
    pub field: FieldChoice,
    pub seminorm: SeminormChoice,
    pub q: f64,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        ExperimentBlock {
            name: None,
            amplitudes: None,
            seeds: None,
            seed: 1,
            refine: None,
            gamma: 0.3,
            intrinsic_g_norm: false,
            initial: InitialChoice::Sine,
            forcing: ForcingChoice::Zero,
            amplitude: 1.0,
            field: FieldChoice::Grad,
            seminorm: SeminormChoice::BmoPar,
            q: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub solver: SolverConfig,
    pub geometry: GeometryBlock,
    pub weight: Weight,
    pub experiment: ExperimentBlock,
    /// Source line of every key that was set, as `section.key`.
    #[serde(skip)]
    pub lines: BTreeMap<String, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridBlock::default(),
            solver: SolverConfig::default(),
            geometry: GeometryBlock::default(),
            weight: Weight::one(),
            experiment: ExperimentBlock::default(),
            lines: BTreeMap::new(),
        }
    }
}

/// Grid used by `solve`, `geometry` and `seminorm` when keys are missing.
pub fn default_grid() -> Grid {
    Grid::new(1, 1, 64, 1.0, 1e-3, 0.1, Boundary::Periodic).expect("valid default grid")
}

struct Value<'a> {
    key: &'a str,
    raw: &'a str,
    line: usize,
}

impl<'a> Value<'a> {
    fn mismatch(&self, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            line: self.line,
            key: self.key.to_string(),
            expected,
            value: self.raw.to_string(),
        }
    }

    fn float(&self) -> Result<f64> {
        self.raw.parse().map_err(|_| self.mismatch("a number"))
    }

    fn uint<T: FromStr>(&self) -> Result<T> {
        self.raw
            .parse()
            .map_err(|_| self.mismatch("a non-negative integer"))
    }

    fn boolean(&self) -> Result<bool> {
        match self.raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(self.mismatch("a boolean")),
        }
    }

    fn floats(&self) -> Result<Vec<f64>> {
        self.raw
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.mismatch("a comma-separated list of numbers"))
    }

    fn uints(&self) -> Result<Vec<u64>> {
        self.raw
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.mismatch("a comma-separated list of integers"))
    }

    fn point(&self) -> Result<Point> {
        let v = self
            .floats()
            .map_err(|_| self.mismatch("one or two numbers"))?;
        match v.as_slice() {
            [x] => Ok([*x, 0.0]),
            [x, y] => Ok([*x, *y]),
            _ => Err(self.mismatch("one or two numbers")),
        }
    }

    fn choice<T: Copy>(&self, options: &[(&str, T)], expected: &'static str) -> Result<T> {
        options
            .iter()
            .find(|(s, _)| *s == self.raw)
            .map(|(_, v)| *v)
            .ok_or_else(|| self.mismatch(expected))
    }
}

const SECTIONS: [&str; 5] = ["grid", "solver", "geometry", "weight", "experiment"];

/// Parses and validates a configuration. The first error is reported.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    let mut weight_kind: Option<(String, usize)> = None;
    let mut weight_gamma: Option<f64> = None;
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                text: content.to_string(),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: content.to_string(),
        })?;
        let (key, raw) = (key.trim(), raw.trim());
        let Some(sec) = section.as_deref() else {
            return Err(ConfigError::Syntax {
                line,
                text: format!("{content} (key outside a section)"),
            });
        };
        let full = format!("{sec}.{key}");
        if cfg.lines.contains_key(&full) {
            return Err(ConfigError::DuplicateKey { line, key: full });
        }
        let v = Value { key, raw, line };
        let unknown = || ConfigError::UnknownKey {
            line,
            section: sec.to_string(),
            key: key.to_string(),
        };
        match sec {
            "grid" => {
                let g = &mut cfg.grid;
                match key {
                    "n" => g.n = Some(v.uint()?),
                    "N" | "components" => g.components = Some(v.uint()?),
                    "m" => g.m = Some(v.uint()?),
                    "L" | "side" => g.side = Some(v.float()?),
                    "tau" => g.tau = Some(v.float()?),
                    "T" | "final_time" => g.final_time = Some(v.float()?),
                    "bc" => {
                        g.bc = Some(v.choice(
                            &[
                                ("periodic", Boundary::Periodic),
                                ("dirichlet", Boundary::Dirichlet),
                            ],
                            "periodic or dirichlet",
                        )?)
                    }
                    _ => return Err(unknown()),
                }
            }
            "solver" => {
                let s = &mut cfg.solver;
                match key {
                    "p" => s.p = v.float()?,
                    "epsilon" => s.epsilon = v.float()?,
                    "newton_tol" => s.newton_tol = v.float()?,
                    "newton_max_iter" => s.newton_max_iter = v.uint()?,
                    "armijo" => s.armijo = v.float()?,
                    "backtrack" => s.backtrack = v.float()?,
                    "max_backtracks" => s.max_backtracks = v.uint()?,
                    "cg_rel_tol" => s.cg_rel_tol = v.float()?,
                    "cg_max_iter" => s.cg_max_iter = v.uint()?,
                    _ => return Err(unknown()),
                }
            }
            "geometry" => {
                let g = &mut cfg.geometry;
                match key {
                    "b" => g.b = v.float()?,
                    "K" | "k" => g.k = v.float()?,
                    "ladder_refine" | "ladder_depth" => g.ladder.refine = v.uint()?,
                    "ladder_min_cells" => g.ladder.min_cells = v.float()?,
                    "center" => g.center = v.point()?,
                    "outer_radius" | "R" => g.outer_radius = v.float()?,
                    "outer_duration" | "S" => g.outer_duration = Some(v.float()?),
                    _ => return Err(unknown()),
                }
            }
            "weight" => match key {
                "kind" => {
                    v.choice(&[("one", ()), ("power", ())], "one or power")?;
                    weight_kind = Some((raw.to_string(), line));
                }
                "gamma" => weight_gamma = Some(v.float()?),
                _ => return Err(unknown()),
            },
            "experiment" => {
                let e = &mut cfg.experiment;
                match key {
                    "name" => {
                        e.name = Some(raw.parse().map_err(|_| v.mismatch("an experiment name"))?)
                    }
                    "amplitudes" => e.amplitudes = Some(v.floats()?),
                    "seeds" => e.seeds = Some(v.uints()?),
                    "seed" => e.seed = v.uint()?,
                    "refine" => e.refine = Some(v.boolean()?),
                    "gamma" => e.gamma = v.float()?,
                    "intrinsic_g_norm" => e.intrinsic_g_norm = v.boolean()?,
                    "amplitude" => e.amplitude = v.float()?,
                    "q" => e.q = v.float()?,
                    "initial" => {
                        e.initial = v.choice(
                            &[
                                ("zero", InitialChoice::Zero),
                                ("sine", InitialChoice::Sine),
                                ("random_trig", InitialChoice::RandomTrig),
                                ("affine", InitialChoice::Affine),
                            ],
                            "zero, sine, random_trig or affine",
                        )?
                    }
                    "forcing" => {
                        e.forcing = v.choice(
                            &[
                                ("zero", ForcingChoice::Zero),
                                ("log", ForcingChoice::Log),
                                ("space_constant", ForcingChoice::SpaceConstant),
                                ("fractional", ForcingChoice::Fractional),
                            ],
                            "zero, log, space_constant or fractional",
                        )?
                    }
                    "field" => {
                        e.field = v.choice(
                            &[
                                ("u", FieldChoice::U),
                                ("grad", FieldChoice::Grad),
                                ("v", FieldChoice::V),
                            ],
                            "u, grad or v",
                        )?
                    }
                    "seminorm" => {
                        e.seminorm = v.choice(
                            &[
                                ("bmo_par", SeminormChoice::BmoPar),
                                ("bochner", SeminormChoice::Bochner),
                                ("blo", SeminormChoice::Blo),
                                ("zygmund", SeminormChoice::Zygmund),
                            ],
                            "bmo_par, bochner, blo or zygmund",
                        )?
                    }
                    _ => return Err(unknown()),
                }
            }
            _ => unreachable!("sections are checked on entry"),
        }
        cfg.lines.insert(full, line);
    }
    cfg.weight = match weight_kind.as_ref().map(|(k, _)| k.as_str()) {
        Some("power") => {
            Weight::power(weight_gamma.unwrap_or(0.3)).map_err(|e| ConfigError::Constraint {
                line: cfg.line("weight.gamma"),
                message: e.to_string(),
            })?
        }
        _ => Weight::one(),
    };
    if let (Some(("one", line)), Some(_)) = (
        weight_kind.as_ref().map(|(k, l)| (k.as_str(), *l)),
        weight_gamma,
    ) {
        return Err(ConfigError::Constraint {
            line,
            message: "gamma is only meaningful for kind = power".into(),
        });
    }
    cfg.validate(cfg.experiment.name)?;
    Ok(cfg)
}

impl RunConfig {
    /// Source line of `section.key`, or 0 when the key was not set.
    pub fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn constraint(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Constraint {
            line: self.line(key),
            message: message.into(),
        }
    }

    /// Cross-field checks for a run of `name` (or a plain solve).
    pub fn validate(&self, name: Option<ExperimentName>) -> Result<()> {
        let p = self.solver.p;
        let p_line_key = if self.lines.contains_key("solver.p") {
            "solver.p"
        } else {
            "experiment.name"
        };
        match name {
            Some(ExperimentName::IntrinsicBmo) if !(p > 2.0) => {
                return Err(
                    self.constraint(p_line_key, "p must exceed 2 for intrinsic experiments")
                );
            }
            Some(
                ExperimentName::Comparison
                | ExperimentName::MainBmo
                | ExperimentName::HoelderTransfer,
            ) if p < 2.0 => {
                return Err(self.constraint(p_line_key, "p must be at least 2 for BMO experiments"));
            }
            _ => {}
        }
        let g = &self.geometry;
        if !(g.b > 0.0 && g.b < 2.0) {
            return Err(self.constraint("geometry.b", format!("b must lie in (0,2), got {}", g.b)));
        }
        if !(g.k >= 1.0) {
            return Err(self.constraint("geometry.K", format!("K must be at least 1, got {}", g.k)));
        }
        if !(g.outer_radius > 0.0) {
            return Err(self.constraint("geometry.outer_radius", "outer_radius must be positive"));
        }
        if !(g.ladder.min_cells >= 1.0) {
            return Err(self.constraint(
                "geometry.ladder_min_cells",
                "ladder_min_cells must be at least 1",
            ));
        }
        if let Some(s) = g.outer_duration {
            if !(s > 0.0) {
                return Err(
                    self.constraint("geometry.outer_duration", "outer_duration must be positive")
                );
            }
        }
        let grid = self.grid_for(name).map_err(|e| ConfigError::Constraint {
            line: self.first_line("grid."),
            message: e.to_string(),
        })?;
        self.solver
            .validate(grid.dim())
            .map_err(|e| ConfigError::Constraint {
                line: self.first_line("solver."),
                message: e.to_string(),
            })?;
        let e = &self.experiment;
        if let Some(a) = &e.amplitudes {
            if a.is_empty() || a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(self.constraint(
                    "experiment.amplitudes",
                    "amplitudes must be finite and non-negative",
                ));
            }
        }
        if let Some(s) = &e.seeds {
            if s.is_empty() {
                return Err(self.constraint("experiment.seeds", "seeds must not be empty"));
            }
        }
        if !(e.q >= 1.0) {
            return Err(
                self.constraint("experiment.q", format!("q must be at least 1, got {}", e.q))
            );
        }
        if name == Some(ExperimentName::HoelderTransfer) && !(e.gamma > 0.0 && e.gamma < 1.0) {
            return Err(self.constraint(
                "experiment.gamma",
                format!("gamma must lie in (0,1), got {}", e.gamma),
            ));
        }
        if e.initial == InitialChoice::Affine && grid.bc() == Boundary::Periodic {
            return Err(self.constraint(
                "experiment.initial",
                "affine initial data needs bc = dirichlet",
            ));
        }
        Ok(())
    }

    fn first_line(&self, prefix: &str) -> usize {
        self.lines
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, l)| *l)
            .min()
            .unwrap_or(0)
    }

    /// The grid of a run: the experiment's default overlaid with the keys set.
    pub fn grid_for(&self, name: Option<ExperimentName>) -> crate::Result<Grid> {
        let p = self.solver.p;
        let base = match name {
            None => default_grid(),
            Some(ExperimentName::CaloricDecay) => DecayConfig::new(p).grid,
            Some(ExperimentName::Comparison) => ComparisonConfig::new(p).grid,
            Some(ExperimentName::MainBmo) => MainBmoConfig::new(p).grid,
            Some(ExperimentName::IntrinsicBmo) => IntrinsicBmoConfig::new(p).grid,
            Some(ExperimentName::HoelderTransfer) => {
                HoelderConfig::new(p, self.experiment.gamma).grid
            }
        };
        self.grid.apply(&base)
    }

    fn ladder(&self, refine: Option<u32>) -> Ladder {
        let mut l = self.geometry.ladder;
        if let Some(r) = refine {
            l.refine = r;
        }
        l
    }

    pub fn decay(&self, refine: Option<u32>) -> crate::Result<DecayConfig> {
        let p = self.solver.p;
        let mut c = DecayConfig::new(p);
        c.grid = self.grid_for(Some(ExperimentName::CaloricDecay))?;
        c.solver = self.solver.clone();
        if let Some(s) = &self.experiment.seeds {
            c.seeds = s.clone();
        }
        c.initial = match self.experiment.initial {
            InitialChoice::Sine => InitialData::Sine {
                amplitude: self.experiment.amplitude,
            },
            InitialChoice::Affine => InitialData::Affine {
                slope: [self.experiment.amplitude, 0.0],
            },
            _ if self.lines.contains_key("experiment.initial") => {
                InitialData::Sine { amplitude: 0.0 }
            }
            _ => c.initial,
        };
        if self.lines.contains_key("experiment.initial")
            && self.experiment.initial == InitialChoice::RandomTrig
        {
            c.initial = InitialData::RandomTrig {
                modes: 3,
                amplitude: self.experiment.amplitude,
            };
        }
        self.set_common(&mut c.outer_radius, &mut c.b);
        if self.lines.contains_key("geometry.K") {
            c.k = self.geometry.k;
        }
        c.ladder = self.ladder(refine);
        if let Some(r) = self.experiment.refine {
            c.refine = r;
        }
        Ok(c)
    }

    fn set_common(&self, outer_radius: &mut f64, b: &mut f64) {
        if self.lines.contains_key("geometry.outer_radius") || self.lines.contains_key("geometry.R")
        {
            *outer_radius = self.geometry.outer_radius;
        }
        *b = self.geometry.b;
    }

    pub fn comparison(&self, refine: Option<u32>) -> crate::Result<ComparisonConfig> {
        let mut c = ComparisonConfig::new(self.solver.p);
        c.grid = self.grid_for(Some(ExperimentName::Comparison))?;
        c.solver = self.solver.clone();
        if let Some(a) = &self.experiment.amplitudes {
            c.amplitudes = a.clone();
        }
        c.forcing = match self.experiment.forcing {
            ForcingChoice::Zero if self.lines.contains_key("experiment.forcing") => {
                ForcingFamily::Zero
            }
            ForcingChoice::SpaceConstant => ForcingFamily::SpaceConstant { ramp: 0.05 },
            _ => c.forcing,
        };
        if self.lines.contains_key("geometry.center") {
            c.center = self.geometry.center;
        }
        self.set_common(&mut c.outer_radius, &mut c.b);
        if let Some(s) = self.geometry.outer_duration {
            c.outer_duration = s;
        }
        c.ladder = self.ladder(refine);
        if let Some(r) = self.experiment.refine {
            c.refine = r;
        }
        Ok(c)
    }

    pub fn main_bmo(&self, refine: Option<u32>) -> crate::Result<MainBmoConfig> {
        let mut c = MainBmoConfig::new(self.solver.p);
        c.grid = self.grid_for(Some(ExperimentName::MainBmo))?;
        c.solver = self.solver.clone();
        if let Some(a) = &self.experiment.amplitudes {
            c.amplitudes = a.clone();
        }
        if self.lines.contains_key("geometry.center") {
            c.center = self.geometry.center;
        }
        if let Some(r) = refine {
            c.scan = Scan::refined(r);
        }
        if let Some(r) = self.experiment.refine {
            c.coarse_level = r;
        }
        if let crate::oscillation::WeightKind::Power { gamma } = self.weight.kind {
            c.weight_gamma = Some(gamma);
        }
        Ok(c)
    }

    pub fn intrinsic_bmo(&self, refine: Option<u32>) -> crate::Result<IntrinsicBmoConfig> {
        let mut c = IntrinsicBmoConfig::new(self.solver.p);
        c.grid = self.grid_for(Some(ExperimentName::IntrinsicBmo))?;
        c.solver = self.solver.clone();
        if let Some(a) = &self.experiment.amplitudes {
            c.amplitudes = a.clone();
        }
        if self.lines.contains_key("geometry.center") {
            c.center = self.geometry.center;
        }
        self.set_common(&mut c.outer_radius, &mut c.b);
        if self.lines.contains_key("geometry.K") {
            c.k = self.geometry.k;
        }
        c.ladder = self.ladder(refine);
        c.weight = self.weight.clone();
        c.intrinsic_g_norm = self.experiment.intrinsic_g_norm;
        if let Some(r) = self.experiment.refine {
            c.refine = r;
        }
        if self.experiment.initial == InitialChoice::Affine {
            c.affine_slope = Some(self.experiment.amplitude);
        }
        Ok(c)
    }

    pub fn hoelder(&self) -> crate::Result<HoelderConfig> {
        let mut c = HoelderConfig::new(self.solver.p, self.experiment.gamma);
        c.grid = self.grid_for(Some(ExperimentName::HoelderTransfer))?;
        c.solver = self.solver.clone();
        c.profile = match self.experiment.forcing {
            ForcingChoice::Zero if self.lines.contains_key("experiment.forcing") => {
                HoelderProfile::Zero
            }
            ForcingChoice::Log | ForcingChoice::SpaceConstant => HoelderProfile::Smooth,
            _ => HoelderProfile::Fractional,
        };
        if self.lines.contains_key("experiment.amplitude") {
            c.amplitude = self.experiment.amplitude;
        }
        if self.lines.contains_key("geometry.center") {
            c.center = self.geometry.center;
        }
        Ok(c)
    }
}
