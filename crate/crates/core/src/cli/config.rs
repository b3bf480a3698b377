//! Run configuration: one TOML file per experiment.
//!
//! Field names here are the frozen schema; `configs/SCHEMA.md` documents them.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::admissibility::{DEFAULT_KERNEL_TOL, DEFAULT_N_XI, DEFAULT_RH_TOL};
use crate::analysis::DEFAULT_TRACE_WIDTH;
use crate::error::{Error, Result};
use crate::flux::{presets, CurveSpec, FluxPair, DEFAULT_TOL_MATCH};
use crate::solver::{Grid1D, InitialProfile, SolverConfig, DEFAULT_CFL};

/// Random streams split off the run seed. Each sampled suite owns one.
pub const STREAM_SHOCKS: u64 = 1;
pub const STREAM_PAIRS: u64 = 2;

/// `ChaCha8` seeded from `seed`, positioned on stream `stream`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxBlock {
    /// One of the built-in pairs: `flux-a`, `flux-b`, `flux-c`.
    Preset { name: String },
    /// Coefficients from low to high degree.
    Poly {
        a: f64,
        b: f64,
        f: Vec<f64>,
        g: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol_match: Option<f64>,
    },
    /// Polynomials for both sides; `g` also gets `amplitude sin(frequency π (u - a) / (b - a))`.
    PolySine {
        a: f64,
        b: f64,
        f: Vec<f64>,
        g: Vec<f64>,
        amplitude: f64,
        frequency: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol_match: Option<f64>,
    },
    /// `(u, value)` samples per side.
    Table {
        a: f64,
        b: f64,
        f: Vec<(f64, f64)>,
        g: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol_match: Option<f64>,
    },
}

impl FluxBlock {
    pub fn build(&self) -> Result<FluxPair> {
        let tol = |t: &Option<f64>| t.unwrap_or(DEFAULT_TOL_MATCH);
        match self {
            FluxBlock::Preset { name } => presets::by_name(name)
                .ok_or_else(|| Error::config("flux.name", format!("unknown preset `{name}`"))),
            FluxBlock::Poly { a, b, f, g, tol_match } => FluxPair::with_tolerance(
                CurveSpec::Poly { coeffs: f.clone() },
                CurveSpec::Poly { coeffs: g.clone() },
                *a,
                *b,
                tol(tol_match),
            ),
            FluxBlock::PolySine {
                a,
                b,
                f,
                g,
                amplitude,
                frequency,
                tol_match,
            } => FluxPair::with_tolerance(
                CurveSpec::Poly { coeffs: f.clone() },
                CurveSpec::PolySine {
                    coeffs: g.clone(),
                    amplitude: *amplitude,
                    frequency: *frequency,
                },
                *a,
                *b,
                tol(tol_match),
            ),
            FluxBlock::Table { a, b, f, g, tol_match } => FluxPair::with_tolerance(
                CurveSpec::Table { points: f.clone() },
                CurveSpec::Table { points: g.clone() },
                *a,
                *b,
                tol(tol_match),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "one")]
    pub store_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Radius `R` of the observation ball `B(0, R)`.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Speed `C` of the contraction estimate; the flux's maximal speed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    /// ξ grid for the admissibility checkers.
    #[serde(default = "default_n_xi")]
    pub n_xi: usize,
    /// ξ grid for the weak-form residual.
    #[serde(default = "default_residual_n_xi")]
    pub residual_n_xi: usize,
    #[serde(default = "eight")]
    pub n_time_hats: usize,
    #[serde(default = "eight")]
    pub n_space_hats: usize,
    /// Interface cutoff widths in cells.
    #[serde(default = "default_cutoffs")]
    pub cutoff_cells: Vec<usize>,
    #[serde(default = "default_trace_width")]
    pub trace_width: usize,
    #[serde(default = "default_kernel_tol")]
    pub kernel_tol: f64,
    #[serde(default = "default_rh_tol")]
    pub rh_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_max_principle_tol")]
    pub max_principle_tol: f64,
    /// States per axis for `enumerate`.
    #[serde(default = "default_n_states")]
    pub n_states: usize,
    /// Sampled ordered pairs for `contract` when `initial_v` is absent.
    #[serde(default = "one")]
    pub n_pairs: usize,
    /// Residual of the frozen initial profile with this constant interface value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_p: Option<f64>,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            radius: default_radius(),
            speed: None,
            n_xi: default_n_xi(),
            residual_n_xi: default_residual_n_xi(),
            n_time_hats: 8,
            n_space_hats: 8,
            cutoff_cells: default_cutoffs(),
            trace_width: default_trace_width(),
            kernel_tol: default_kernel_tol(),
            rh_tol: default_rh_tol(),
            residual_tol: default_residual_tol(),
            max_principle_tol: default_max_principle_tol(),
            n_states: default_n_states(),
            n_pairs: 1,
            frozen_p: None,
        }
    }
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}
fn one() -> usize {
    1
}
fn eight() -> usize {
    8
}
fn default_radius() -> f64 {
    1.0
}
fn default_n_xi() -> usize {
    DEFAULT_N_XI
}
fn default_residual_n_xi() -> usize {
    128
}
fn default_cutoffs() -> Vec<usize> {
    vec![2, 4, 8]
}
fn default_trace_width() -> usize {
    DEFAULT_TRACE_WIDTH
}
fn default_kernel_tol() -> f64 {
    DEFAULT_KERNEL_TOL
}
fn default_rh_tol() -> f64 {
    DEFAULT_RH_TOL
}
fn default_residual_tol() -> f64 {
    0.01
}
fn default_max_principle_tol() -> f64 {
    1e-10
}
fn default_n_states() -> usize {
    64
}

/// Scalars come before the tables so the struct serializes back to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root of every sampled suite; TOML limits it to `0..=i64::MAX`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Viscosity of a single run; `0` selects the finite-volume scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Strictly decreasing viscosities for `sweep` and `residual`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    pub flux: FluxBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid1D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialProfile>,
    /// Second initial profile for `contract`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_v: Option<InitialProfile>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
}

/// Dotted path (`table.key`) of the text under a parse-error span. Falls back
/// to the table, or the line number when the span is not a plain key.
fn key_path(text: &str, span: std::ops::Range<usize>) -> String {
    let (start, end) = (span.start.min(text.len()), span.end.min(text.len()));
    let before = &text[..start];
    let header = |l: &&str| l.starts_with('[') && l.ends_with(']');
    // a span over a whole table starts at its header
    let own = text[start..end].lines().next().map(str::trim).filter(header);
    let table = own
        .or_else(|| before.lines().rev().map(str::trim).find(header))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let key = if own.is_some() { "" } else { text[start..end].trim().trim_matches('"') };
    let is_key = !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    match (table, is_key) {
        (Some(t), true) => format!("{t}.{key}"),
        (None, true) => key.to_string(),
        (Some(t), false) => t,
        (None, false) => format!("line {}", before.lines().count().max(1)),
    }
}

/// What a subcommand needs from the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    FluxOnly,
    SingleRun,
    Sweep,
    Contract,
    Residual,
    Riemann,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| key_path(text, s)).unwrap_or_default();
            Error::config(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn flux_pair(&self) -> Result<FluxPair> {
        self.flux.build()
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let g = self.grid.ok_or_else(|| Error::config("grid", "missing [grid] block"))?;
        g.validate()?;
        Ok(g)
    }

    pub fn time(&self) -> Result<TimeBlock> {
        self.time.ok_or_else(|| Error::config("time", "missing [time] block"))
    }

    pub fn initial(&self) -> Result<&InitialProfile> {
        self.initial.as_ref().ok_or_else(|| Error::config("initial", "missing [initial] block"))
    }

    pub fn solver_config(&self, epsilon: f64) -> Result<SolverConfig> {
        let time = self.time()?;
        let cfg = SolverConfig {
            epsilon,
            cfl: time.cfl,
            t_end: time.t_end,
            store_every: time.store_every,
            max_dt: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.0)
    }

    pub fn epsilons(&self) -> Result<&[f64]> {
        let eps = self
            .epsilons
            .as_deref()
            .ok_or_else(|| Error::config("epsilons", "missing list of viscosities"))?;
        if eps.is_empty() {
            return Err(Error::config("epsilons", "empty list"));
        }
        if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::config("epsilons", "all values must be finite and positive"));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("epsilons", "must be strictly decreasing"));
        }
        Ok(eps)
    }

    /// Contraction speed `C`, defaulting to the maximal flux speed.
    pub fn speed(&self, flux: &FluxPair) -> f64 {
        self.analysis.speed.unwrap_or_else(|| flux.max_speed())
    }

    /// Every cross-field constraint the subcommand relies on, checked before any run.
    pub fn validate(&self, needs: Needs) -> Result<FluxPair> {
        let flux = self.flux_pair()?;
        self.validate_analysis()?;
        if needs == Needs::FluxOnly {
            return Ok(flux);
        }
        let grid = self.grid()?;
        // sampled contraction pairs need no [initial] block
        if !(needs == Needs::Contract && self.initial_v.is_none()) {
            self.initial()?.validate(&flux)?;
        }
        let base = self.solver_config(self.epsilon())?;
        match needs {
            Needs::Sweep => {
                self.epsilons()?;
            }
            Needs::Residual if self.analysis.frozen_p.is_none() && self.epsilons.is_some() => {
                self.epsilons()?;
            }
            _ => {}
        }
        if let Some(p) = self.analysis.frozen_p {
            if !(p >= flux.a() && p <= flux.b()) {
                return Err(Error::config("analysis.frozen_p", "outside [a, b]"));
            }
        }
        if needs == Needs::Riemann && !matches!(self.initial()?, InitialProfile::Riemann { .. }) {
            return Err(Error::config("initial.kind", "riemann subcommand needs Riemann data"));
        }
        let half = (-grid.x_min).min(grid.x_max);
        if needs == Needs::Contract {
            if let Some(v0) = &self.initial_v {
                v0.validate(&flux)?;
            } else if self.analysis.n_pairs == 0 {
                return Err(Error::config("analysis.n_pairs", "need initial_v or n_pairs >= 1"));
            }
            let c = self.speed(&flux);
            let lambda = flux.max_speed();
            if c < lambda {
                return Err(Error::config(
                    "analysis.speed",
                    format!("C = {c} is below the maximal flux speed {lambda}"),
                ));
            }
            let reach = self.analysis.radius + c * base.t_end;
            if reach > half {
                return Err(Error::config(
                    "grid",
                    format!("R + C T = {reach} exceeds the domain half-width {half}"),
                ));
            }
        }
        if self.analysis.trace_width > grid.n_left().min(grid.n_cells - grid.n_left()) {
            return Err(Error::config("analysis.trace_width", "wider than one side of the grid"));
        }
        Ok(flux)
    }

    fn validate_analysis(&self) -> Result<()> {
        let an = &self.analysis;
        if !(an.radius > 0.0) || !an.radius.is_finite() {
            return Err(Error::config("analysis.radius", "must be finite and positive"));
        }
        if let Some(c) = an.speed {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::config("analysis.speed", "must be finite and positive"));
            }
        }
        if an.n_xi < 64 {
            return Err(Error::config("analysis.n_xi", "must be at least 64"));
        }
        if an.residual_n_xi < 1 {
            return Err(Error::config("analysis.residual_n_xi", "must be at least 1"));
        }
        if an.n_time_hats == 0 || an.n_space_hats == 0 {
            return Err(Error::config("analysis.n_time_hats", "hat counts must be positive"));
        }
        if an.cutoff_cells.contains(&0) {
            return Err(Error::config("analysis.cutoff_cells", "widths must be at least one cell"));
        }
        if an.trace_width < 2 {
            return Err(Error::config("analysis.trace_width", "must be at least 2"));
        }
        for (name, v) in [
            ("analysis.kernel_tol", an.kernel_tol),
            ("analysis.rh_tol", an.rh_tol),
            ("analysis.residual_tol", an.residual_tol),
            ("analysis.max_principle_tol", an.max_principle_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(name, "must be finite and nonnegative"));
            }
        }
        if an.n_states < 16 {
            return Err(Error::config("analysis.n_states", "must be at least 16"));
        }
        Ok(())
    }
}

/// An ordered pair `u₀ <= v₀` of piecewise-linear profiles with knots every
/// 0.25 on `[-2, 2]`, constant outside.
pub fn sample_ordered_pair<R: Rng>(flux: &FluxPair, rng: &mut R) -> (InitialProfile, InitialProfile) {
    let (a, b) = (flux.a(), flux.b());
    let mut u = Vec::with_capacity(17);
    let mut v = Vec::with_capacity(17);
    for k in 0..17 {
        let x = -2.0 + 0.25 * k as f64;
        let lo = rng.gen_range(a..=b);
        let hi = rng.gen_range(lo..=b);
        u.push((x, lo));
        v.push((x, hi));
    }
    (InitialProfile::Table { points: u }, InitialProfile::Table { points: v })
}
