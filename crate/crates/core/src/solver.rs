//! Explicit conservative solvers for `u_t + (H(x) f(u) + H(-x) g(u))_x = ε u_xx`.
//!
//! Edge fluxes are local Lax–Friedrichs built from the flux of each adjacent
//! cell's side, so the edge at `x = 0` combines `g` from the left cell with
//! `f` from the right cell. `ε = 0` gives the plain finite-volume scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::flux::{FluxPair, Side};

pub const DEFAULT_CFL: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Grid1D> {
        let grid = Grid1D { x_min, x_max, n_cells };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < 0.0) || !self.x_min.is_finite() {
            return Err(Error::config("grid.x_min", "must be finite and negative"));
        }
        if !(self.x_max > 0.0) || !self.x_max.is_finite() {
            return Err(Error::config("grid.x_max", "must be finite and positive"));
        }
        if self.n_cells < 4 || self.n_cells % 2 != 0 {
            return Err(Error::config("grid.n_cells", "must be even and at least 4"));
        }
        let left = self.n_cells as f64 * (-self.x_min) / (self.x_max - self.x_min);
        if (left - left.round()).abs() > 1e-9 * self.n_cells as f64 || left.round() < 1.0 {
            return Err(Error::config(
                "grid.n_cells",
                format!("x = 0 is not a cell edge: n_cells * |x_min| / (x_max - x_min) = {left}"),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Number of cells left of the interface; the interface is the left edge of this cell index.
    pub fn n_left(&self) -> usize {
        (self.n_cells as f64 * (-self.x_min) / (self.x_max - self.x_min)).round() as usize
    }

    pub fn center(&self, j: usize) -> f64 {
        // Measured from the interface so that mirrored grids are exact.
        (j as f64 - self.n_left() as f64 + 0.5) * self.dx()
    }

    /// Position of edge `k` (edge `k` is the left edge of cell `k`).
    pub fn edge(&self, k: usize) -> f64 {
        (k as f64 - self.n_left() as f64) * self.dx()
    }

    pub fn side(&self, j: usize) -> Side {
        if j < self.n_left() {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    pub fn mirrored(&self) -> Grid1D {
        Grid1D {
            x_min: -self.x_max,
            x_max: -self.x_min,
            n_cells: self.n_cells,
        }
    }
}

/// Initial data. Values are sampled at cell centers and clamped to `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant { value: f64 },
    Riemann { u_left: f64, u_right: f64 },
    /// `mean + amplitude * sin(2 pi x / wavelength)`.
    Sine { mean: f64, amplitude: f64, wavelength: f64 },
    /// `base + height * cos^2(pi (x - center) / (2 width))` for `|x - center| < width`.
    Bump { base: f64, height: f64, center: f64, width: f64 },
    /// Piecewise linear through `(x, u)` samples, constant beyond the ends.
    Table { points: Vec<(f64, f64)> },
}

impl InitialProfile {
    pub fn validate(&self, flux: &FluxPair) -> Result<()> {
        let in_range = |v: f64| v >= flux.a() && v <= flux.b();
        match self {
            InitialProfile::Constant { value } if !in_range(*value) => {
                Err(Error::config("initial.value", "outside [a, b]"))
            }
            InitialProfile::Riemann { u_left, u_right } if !in_range(*u_left) || !in_range(*u_right) => {
                Err(Error::config("initial", "Riemann states outside [a, b]"))
            }
            InitialProfile::Sine { wavelength, .. } if !(*wavelength > 0.0) => {
                Err(Error::config("initial.wavelength", "must be positive"))
            }
            InitialProfile::Bump { width, .. } if !(*width > 0.0) => {
                Err(Error::config("initial.width", "must be positive"))
            }
            InitialProfile::Table { points } => {
                if points.is_empty() || points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config("initial.points", "need strictly increasing x samples"));
                }
                if points.iter().any(|p| !in_range(p.1)) {
                    return Err(Error::config("initial.points", "values outside [a, b]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialProfile::Constant { value } => *value,
            InitialProfile::Riemann { u_left, u_right } => {
                if x < 0.0 {
                    *u_left
                } else {
                    *u_right
                }
            }
            InitialProfile::Sine {
                mean,
                amplitude,
                wavelength,
            } => mean + amplitude * (2.0 * std::f64::consts::PI * x / wavelength).sin(),
            InitialProfile::Bump {
                base,
                height,
                center,
                width,
            } => {
                let s = (x - center) / width;
                if s.abs() < 1.0 {
                    base + height * (0.5 * std::f64::consts::PI * s).cos().powi(2)
                } else {
                    *base
                }
            }
            InitialProfile::Table { points } => {
                let i = points.partition_point(|p| p.0 <= x);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (x0, u0) = points[i - 1];
                    let (x1, u1) = points[i];
                    u0 + (x - x0) / (x1 - x0) * (u1 - u0)
                }
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D, flux: &FluxPair) -> Vec<f64> {
        grid.centers().into_iter().map(|x| flux.clamp(self.value(x))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
    /// Optional cap on the time step, used to put several runs on one time grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dt: Option<f64>,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_store_every() -> usize {
    1
}

impl SolverConfig {
    pub fn new(epsilon: f64, t_end: f64) -> SolverConfig {
        SolverConfig {
            epsilon,
            cfl: DEFAULT_CFL,
            t_end,
            store_every: 1,
            max_dt: None,
        }
    }

    pub fn with_store_every(mut self, store_every: usize) -> Self {
        self.store_every = store_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config("epsilon", "must be finite and nonnegative"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config("time.cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::config("time.t_end", "must be finite and positive"));
        }
        if self.store_every == 0 {
            return Err(Error::config("time.store_every", "must be at least 1"));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0) {
                return Err(Error::config("max_dt", "must be positive"));
            }
        }
        Ok(())
    }

    /// `cfl * min(dx / Λ, dx² / (2ε))`, further capped by `max_dt`.
    pub fn time_step(&self, flux: &FluxPair, grid: &Grid1D) -> f64 {
        let dx = grid.dx();
        let lambda = flux.max_speed();
        let mut bound = if lambda > 0.0 { dx / lambda } else { f64::INFINITY };
        if self.epsilon > 0.0 {
            bound = bound.min(dx * dx / (2.0 * self.epsilon));
        }
        let mut dt = self.cfl * bound;
        if !dt.is_finite() {
            dt = self.t_end;
        }
        if let Some(cap) = self.max_dt {
            dt = dt.min(cap);
        }
        dt
    }
}

/// Per-step diagnostics, one entry per completed step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub t: Vec<f64>,
    pub dt: Vec<f64>,
    pub umin: Vec<f64>,
    pub umax: Vec<f64>,
    /// `Σ |u^{n+1} - u^n| dx`.
    pub l1_time_diff: Vec<f64>,
    /// `ε Σ ((u_{j+1} - u_j) / dx)² dx`.
    pub dissipation: Vec<f64>,
    /// Cumulative `∫ (F_in - F_out) dt` through the two boundary edges.
    pub boundary_inflow: Vec<f64>,
}

impl Monitors {
    /// Largest ratio of a step's `l1_time_diff / dt` to the run median.
    pub fn time_regularity_ratio(&self) -> f64 {
        let mut rates: Vec<f64> = self.l1_time_diff.iter().zip(&self.dt).map(|(d, dt)| d / dt).collect();
        if rates.is_empty() {
            return 0.0;
        }
        let max = rates.iter().copied().fold(0.0, f64::max);
        rates.sort_by(f64::total_cmp);
        let median = rates[rates.len() / 2];
        if median > 0.0 {
            max / median
        } else if max > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn max_dissipation(&self) -> f64 {
        self.dissipation.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ViscousLlf,
    FvLlf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub epsilon: f64,
    pub scheme: Scheme,
    pub a: f64,
    pub b: f64,
    pub flux: String,
    pub dt: f64,
    pub monitors: Monitors,
    pub warnings: Vec<String>,
}

/// Snapshots of cell averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub meta: FieldMeta,
}

impl SolutionField {
    /// Constant-in-time field, mainly for synthetic tests of the analysis tools.
    pub fn frozen(grid: Grid1D, times: Vec<f64>, profile: Vec<f64>, a: f64, b: f64) -> SolutionField {
        let values = vec![profile; times.len()];
        SolutionField {
            grid,
            times,
            values,
            meta: FieldMeta {
                epsilon: 0.0,
                scheme: Scheme::FvLlf,
                a,
                b,
                flux: String::from("synthetic"),
                dt: 0.0,
                monitors: Monitors::default(),
                warnings: Vec::new(),
            },
        }
    }

    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("a field has at least one snapshot")
    }

    pub fn mass(&self, snapshot: usize) -> f64 {
        self.values[snapshot].iter().sum::<f64>() * self.grid.dx()
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| {
            (lo.min(u), hi.max(u))
        })
    }

    /// All stored values within `[a - tol, b + tol]`.
    pub fn satisfies_max_principle(&self, tol: f64) -> bool {
        let (lo, hi) = self.value_range();
        lo >= self.meta.a - tol && hi <= self.meta.b + tol
    }

    /// Largest `|mass(t_n) - mass(0) - inflow(t_n)|` over the stored snapshots.
    pub fn mass_defect(&self) -> f64 {
        let m0 = self.mass(0);
        let mon = &self.meta.monitors;
        self.times
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, t)| {
                let k = mon.t.iter().position(|s| s == t).expect("snapshot times are step times");
                (self.mass(n) - m0 - mon.boundary_inflow[k]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// The field seen through `x -> -x`.
    pub fn mirrored(&self) -> SolutionField {
        let mut out = self.clone();
        out.grid = self.grid.mirrored();
        for row in &mut out.values {
            row.reverse();
        }
        out
    }

    pub fn write_snapshots_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,u")?;
        let xs = self.grid.centers();
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, u) in xs.iter().zip(row) {
                writeln!(w, "{t},{x},{u}")?;
            }
        }
        Ok(())
    }

    pub fn write_monitors_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,umin,umax,l1_time_diff,dissipation")?;
        let m = &self.meta.monitors;
        for k in 0..m.t.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                m.t[k], m.umin[k], m.umax[k], m.l1_time_diff[k], m.dissipation[k]
            )?;
        }
        Ok(())
    }
}

fn flux_label(flux: &FluxPair) -> String {
    serde_json::json!({
        "f": flux.spec(Side::Right),
        "g": flux.spec(Side::Left),
        "a": flux.a(),
        "b": flux.b(),
    })
    .to_string()
}

/// Shared explicit update; `cfg.epsilon = 0` gives the finite-volume scheme.
pub fn solve(flux: &FluxPair, u0: &InitialProfile, grid: &Grid1D, cfg: &SolverConfig) -> Result<SolutionField> {
    grid.validate()?;
    cfg.validate()?;
    u0.validate(flux)?;

    let n = grid.n_cells;
    let dx = grid.dx();
    let dt_full = cfg.time_step(flux, grid);
    let eps = cfg.epsilon;
    let sides: Vec<Side> = (0..n).map(|j| grid.side(j)).collect();

    let mut warnings = Vec::new();
    let reach = flux.max_speed() * cfg.t_end;
    let margin = (-grid.x_min).min(grid.x_max);
    if reach > margin {
        warnings.push(format!(
            "waves may reach the boundary: max speed * t_end = {reach} exceeds {margin}"
        ));
    }

    let mut u = u0.sample(grid, flux);
    let mut next = vec![0.0; n];
    let mut edge_flux = vec![0.0; n + 1];
    let mut cell_flux = vec![0.0; n];

    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut monitors = Monitors::default();
    let mut inflow = 0.0;

    let scheme = if eps > 0.0 { Scheme::ViscousLlf } else { Scheme::FvLlf };
    let make_field = |times: Vec<f64>, values: Vec<Vec<f64>>, monitors: Monitors, warnings: Vec<String>| SolutionField {
        grid: *grid,
        times,
        values,
        meta: FieldMeta {
            epsilon: eps,
            scheme,
            a: flux.a(),
            b: flux.b(),
            flux: flux_label(flux),
            dt: dt_full,
            monitors,
            warnings,
        },
    };

    if !(dt_full > 0.0) {
        return Err(Error::Numerical {
            time: 0.0,
            message: format!("time step {dt_full} from max speed {}", flux.max_speed()),
            last_good: Some(Box::new(make_field(times, values, monitors, warnings))),
        });
    }

    let mut step: usize = 0;
    let mut t = 0.0;
    // Guard against a final sliver step produced by rounding.
    let t_stop = cfg.t_end * (1.0 - 1e-13);
    while t < t_stop {
        let t_next = ((step + 1) as f64 * dt_full).min(cfg.t_end);
        let dt = t_next - t;

        for j in 0..n {
            cell_flux[j] = flux.eval(sides[j], u[j]);
        }
        // Interior edges, then zero-gradient boundary edges.
        for k in 1..n {
            let (l, r) = (k - 1, k);
            let lambda = flux
                .max_speed_between(sides[l], u[l], u[r])
                .max(flux.max_speed_between(sides[r], u[l], u[r]));
            let jump = u[r] - u[l];
            edge_flux[k] = 0.5 * (cell_flux[l] + cell_flux[r]) - 0.5 * lambda * jump - eps * jump / dx;
        }
        edge_flux[0] = cell_flux[0];
        edge_flux[n] = cell_flux[n - 1];

        let ratio = dt / dx;
        let mut l1 = 0.0;
        for j in 0..n {
            next[j] = u[j] - ratio * (edge_flux[j + 1] - edge_flux[j]);
            l1 += (next[j] - u[j]).abs();
        }
        inflow += dt * (edge_flux[0] - edge_flux[n]);
        step += 1;
        t = t_next;

        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                time: t,
                message: format!("non-finite state after step {step}"),
                last_good: Some(Box::new(make_field(times, values, monitors, warnings))),
            });
        }
        std::mem::swap(&mut u, &mut next);

        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let dissipation = if eps > 0.0 {
            eps * u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dx
        } else {
            0.0
        };
        monitors.t.push(t);
        monitors.dt.push(dt);
        monitors.umin.push(lo);
        monitors.umax.push(hi);
        monitors.l1_time_diff.push(l1 * dx);
        monitors.dissipation.push(dissipation);
        monitors.boundary_inflow.push(inflow);

        if step % cfg.store_every == 0 || t >= t_stop {
            times.push(t);
            values.push(u.clone());
        }
    }

    Ok(make_field(times, values, monitors, warnings))
}

/// Vanishing-viscosity approximation; requires `ε > 0`.
pub fn solve_viscous(
    flux: &FluxPair,
    u0: &InitialProfile,
    grid: &Grid1D,
    cfg: &SolverConfig,
) -> Result<SolutionField> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::config("epsilon", "the viscous solver needs epsilon > 0"));
    }
    solve(flux, u0, grid, cfg)
}

/// Finite-volume scheme without viscosity; requires `ε = 0`.
pub fn solve_fv(flux: &FluxPair, u0: &InitialProfile, grid: &Grid1D, cfg: &SolverConfig) -> Result<SolutionField> {
    if cfg.epsilon != 0.0 {
        return Err(Error::config("epsilon", "the finite-volume solver needs epsilon = 0"));
    }
    solve(flux, u0, grid, cfg)
}

/// Interface value per snapshot: mean of the two cells touching `x = 0`.
pub fn p_epsilon(field: &SolutionField) -> Vec<f64> {
    let k = field.grid.n_left();
    field.values.iter().map(|row| 0.5 * (row[k - 1] + row[k])).collect()
}

/// `Σ_{|x_j| <= r} |u_j - v_j| dx` for two profiles on the same grid.
pub fn l1_window(grid: &Grid1D, u: &[f64], v: &[f64], r: f64) -> f64 {
    let dx = grid.dx();
    (0..grid.n_cells)
        .filter(|&j| grid.center(j).abs() <= r)
        .map(|j| (u[j] - v[j]).abs())
        .sum::<f64>()
        * dx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub epsilons: Vec<f64>,
    pub fields: Vec<SolutionField>,
    /// L1 distance over `B(0, window)` at `t_end` between consecutive runs.
    pub cauchy_l1: Vec<f64>,
    pub times: Vec<f64>,
    /// Running maximum of the interface values over the trailing half of the sweep.
    pub p_limsup: Vec<f64>,
    pub window: f64,
}

impl SweepResult {
    pub fn finest(&self) -> &SolutionField {
        self.fields.last().expect("a sweep has at least one run")
    }
}

/// Runs the viscous solver for each `ε` on a shared grid and a shared time step.
pub fn epsilon_sweep(
    flux: &FluxPair,
    u0: &InitialProfile,
    grid: &Grid1D,
    epsilons: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepResult> {
    if epsilons.is_empty() {
        return Err(Error::config("epsilons", "empty list"));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::config("epsilons", "all values must be positive"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("epsilons", "must be strictly decreasing"));
    }
    // A common step (the most restrictive one) gives every run the same snapshot times.
    let dt = epsilons
        .iter()
        .map(|&eps| SolverConfig { epsilon: eps, ..*cfg }.time_step(flux, grid))
        .fold(f64::INFINITY, f64::min);
    let fields = epsilons
        .par_iter()
        .map(|&eps| {
            let run = SolverConfig {
                epsilon: eps,
                max_dt: Some(dt),
                ..*cfg
            };
            solve_viscous(flux, u0, grid, &run).map_err(|e| annotate(e, eps))
        })
        .collect::<Result<Vec<_>>>()?;

    let window = 0.8 * (-grid.x_min).min(grid.x_max);
    let cauchy_l1 = fields
        .windows(2)
        .map(|w| l1_window(grid, w[0].final_values(), w[1].final_values(), window))
        .collect();
    let times = fields[0].times.clone();
    let tail = &fields[epsilons.len() / 2..];
    let tail_p: Vec<Vec<f64>> = tail.iter().map(p_epsilon).collect();
    let p_limsup = (0..times.len())
        .map(|n| tail_p.iter().map(|p| p[n]).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    Ok(SweepResult {
        epsilons: epsilons.to_vec(),
        fields,
        cauchy_l1,
        times,
        p_limsup,
        window,
    })
}

fn annotate(err: Error, eps: f64) -> Error {
    match err {
        Error::Numerical {
            time,
            message,
            last_good,
        } => Error::Numerical {
            time,
            message: format!("epsilon = {eps}: {message}"),
            last_good,
        },
        Error::Config { field, message } => Error::Config {
            field,
            message: format!("epsilon = {eps}: {message}"),
        },
        other => other,
    }
}
