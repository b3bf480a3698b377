//! Subcommand execution and artifact layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{rng_stream, sample_ordered_pair, Needs, RunConfig, STREAM_PAIRS};
use crate::admissibility::{
    enumerate_stationary_shocks, is_admissible_cases, is_admissible_grid, state_samples, xi_grid, AdmissibilityReport,
    InterfaceShock,
};
use crate::analysis::{
    contraction_check, entropy_residual, extract_traces, kato_boundary_check, ResidualReport, TestFunctionFamily,
    TraceSeries,
};
use crate::error::{Error, Result};
use crate::flux::FluxPair;
use crate::solver::{epsilon_sweep, p_epsilon, solve, Grid1D, SolutionField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    NumericalFailure,
}

/// Pass/fail flags a run contributes to the report bundle; absent when not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_principle: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rh_traces: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub label: String,
    pub epsilon: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub umin: f64,
    pub umax: f64,
    pub mass_defect: f64,
    pub time_regularity_ratio: f64,
    pub max_dissipation: f64,
    pub warnings: Vec<String>,
}

impl MonitorSummary {
    pub fn of(label: impl Into<String>, field: &SolutionField) -> Self {
        let (umin, umax) = field.value_range();
        let m = &field.meta.monitors;
        MonitorSummary {
            label: label.into(),
            epsilon: field.meta.epsilon,
            dt: field.meta.dt,
            n_steps: m.t.len(),
            umin,
            umax,
            mass_defect: if m.t.is_empty() { 0.0 } else { field.mass_defect() },
            time_regularity_ratio: m.time_regularity_ratio(),
            max_dissipation: m.max_dissipation(),
            warnings: field.meta.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub time: f64,
    pub message: String,
}

/// Written last by every subcommand. Wall time lives in `timing.json` so that
/// reruns reproduce this file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub status: RunStatus,
    pub config: Option<RunConfig>,
    pub artifacts: Vec<String>,
    pub monitors: Vec<MonitorSummary>,
    pub verdicts: Verdicts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Riemann,
    Contract,
    Residual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Riemann => "riemann",
            Command::Contract => "contract",
            Command::Residual => "residual",
        }
    }

    fn needs(self) -> Needs {
        match self {
            Command::Solve => Needs::SingleRun,
            Command::Sweep => Needs::Sweep,
            Command::Riemann => Needs::Riemann,
            Command::Contract => Needs::Contract,
            Command::Residual => Needs::Residual,
        }
    }
}

/// Artifact sink rooted at one output directory.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Artifacts> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_with(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        if !self.written.iter().any(|n| n == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn field(&mut self, suffix: &str, field: &SolutionField) -> Result<()> {
        self.write_with(&format!("snapshots{suffix}.csv"), |w| field.write_snapshots_csv(w))?;
        self.write_with(&format!("monitors{suffix}.csv"), |w| field.write_monitors_csv(w))
    }

    fn traces(&mut self, name: &str, traces: &TraceSeries) -> Result<()> {
        self.write_with(name, |w| traces.write_csv(w))
    }

    fn finish(mut self, subcommand: &str, config: Option<&RunConfig>, body: RunBody) -> Result<()> {
        let echo = config.map(|c| RunConfig {
            output_dir: None,
            ..c.clone()
        });
        let mut artifacts = std::mem::take(&mut self.written);
        artifacts.push(MANIFEST.to_string());
        let manifest = Manifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: if body.failure.is_some() {
                RunStatus::NumericalFailure
            } else {
                RunStatus::Ok
            },
            config: echo,
            artifacts,
            monitors: body.monitors,
            verdicts: body.verdicts,
            failure: body.failure,
        };
        self.json(MANIFEST, &manifest)
    }
}

#[derive(Default)]
struct RunBody {
    monitors: Vec<MonitorSummary>,
    verdicts: Verdicts,
    failure: Option<Failure>,
}

fn all_in_range(fields: &[&SolutionField], tol: f64) -> bool {
    fields.iter().all(|f| f.satisfies_max_principle(tol))
}

/// Exit code of a finished run and, for a numerical failure, what went wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub failure: Option<Failure>,
}

/// Runs `cmd`, leaving its artifacts under `dir`.
pub fn execute(cmd: Command, cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let flux = cfg.validate(cmd.needs())?;
    let started = std::time::Instant::now();
    let mut out = Artifacts::create(dir)?;
    let mut body = RunBody::default();
    let result = match cmd {
        Command::Solve => run_solve(cfg, &flux, &mut out, &mut body),
        Command::Sweep => run_sweep(cfg, &flux, &mut out, &mut body),
        Command::Riemann => run_riemann(cfg, &flux, &mut out, &mut body),
        Command::Contract => run_contract(cfg, &flux, &mut out, &mut body),
        Command::Residual => run_residual(cfg, &flux, &mut out, &mut body),
    };
    let code = match result {
        Ok(()) => EXIT_OK,
        Err(Error::Numerical {
            time,
            message,
            last_good,
        }) => {
            if let Some(field) = last_good {
                out.field("_partial", &field)?;
                body.monitors.push(MonitorSummary::of("partial", &field));
            }
            body.failure = Some(Failure { time, message });
            EXIT_NUMERICAL
        }
        Err(e) => return Err(e),
    };
    let wall = started.elapsed().as_secs_f64();
    let failure = body.failure.clone();
    out.finish(cmd.name(), Some(cfg), body)?;
    write_timing(dir, wall)?;
    Ok(Outcome { code, failure })
}

fn write_timing(dir: &Path, wall: f64) -> Result<()> {
    let text = serde_json::to_string_pretty(&serde_json::json!({ "wall_seconds": wall }))
        .map_err(|e| Error::argument(e.to_string()))?;
    std::fs::write(dir.join(TIMING), text + "\n")?;
    Ok(())
}

fn run_solve(cfg: &RunConfig, flux: &FluxPair, out: &mut Artifacts, body: &mut RunBody) -> Result<()> {
    let grid = cfg.grid()?;
    let field = solve(flux, cfg.initial()?, &grid, &cfg.solver_config(cfg.epsilon())?)?;
    out.field("", &field)?;
    out.traces("traces.csv", &extract_traces(&field, cfg.analysis.trace_width)?)?;
    body.monitors.push(MonitorSummary::of("run", &field));
    body.verdicts.max_principle = Some(all_in_range(&[&field], cfg.analysis.max_principle_tol));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct SweepSummary<'a> {
    epsilons: &'a [f64],
    cauchy_l1: &'a [f64],
    window: f64,
    common_dt: f64,
}

fn run_sweep(cfg: &RunConfig, flux: &FluxPair, out: &mut Artifacts, body: &mut RunBody) -> Result<()> {
    let grid = cfg.grid()?;
    let eps = cfg.epsilons()?;
    let sweep = epsilon_sweep(flux, cfg.initial()?, &grid, eps, &cfg.solver_config(eps[0])?)?;
    for (k, field) in sweep.fields.iter().enumerate() {
        out.write_with(&format!("monitors_eps{k}.csv"), |w| field.write_monitors_csv(w))?;
        body.monitors.push(MonitorSummary::of(format!("eps{k}"), field));
    }
    let finest = sweep.finest();
    out.write_with("snapshots.csv", |w| finest.write_snapshots_csv(w))?;
    let mut traces = extract_traces(finest, cfg.analysis.trace_width)?;
    traces.p = sweep.p_limsup.clone();
    out.traces("traces.csv", &traces)?;
    out.json(
        "sweep.json",
        &SweepSummary {
            epsilons: &sweep.epsilons,
            cauchy_l1: &sweep.cauchy_l1,
            window: sweep.window,
            common_dt: finest.meta.dt,
        },
    )?;
    let fields: Vec<&SolutionField> = sweep.fields.iter().collect();
    body.verdicts.max_principle = Some(all_in_range(&fields, cfg.analysis.max_principle_tol));
    Ok(())
}

/// Second-half averages of extracted traces, read as one interface shock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannReport {
    pub mean_left: f64,
    pub mean_right: f64,
    pub mean_p: f64,
    pub rh_gap: f64,
    pub rh_bound: f64,
    /// Verdict with `p` taken from the interface cells.
    pub at_measured_p: AdmissibilityReport,
    /// The `p` (measured value or lattice state) with the smallest worst margin.
    pub best_p: f64,
    pub best: AdmissibilityReport,
}

/// Interface data of a run averaged over `t >= t_end / 2`. The averaged
/// shock is judged with both the Rankine–Hugoniot and the kernel tolerance
/// widened by `rh_bound`: outside the state hull the kernel equals
/// `g(u⁻) - f(u⁺)`, so an approximate shock shifts it by its own defect.
/// A finite-volume run has no interface value of its own, so the verdict
/// also scans `p` over 65 lattice states.
pub fn riemann_report(
    flux: &FluxPair,
    traces: &TraceSeries,
    grid: &Grid1D,
    n_xi: usize,
    kernel_tol: f64,
) -> Result<RiemannReport> {
    let t_half = 0.5 * traces.times.last().copied().unwrap_or(0.0);
    let idx: Vec<usize> = (0..traces.len()).filter(|&n| traces.times[n] >= t_half).collect();
    let mean = |v: &[f64]| idx.iter().map(|&n| v[n]).sum::<f64>() / idx.len().max(1) as f64;
    let (l, r, p) = (flux.clamp(mean(&traces.left)), flux.clamp(mean(&traces.right)), flux.clamp(mean(&traces.p)));
    let rh_gap = traces.mean_rh_gap(flux, t_half);
    let rh_bound = 5.0 * grid.dx() * flux.max_speed();
    let judge = |p: f64| is_admissible_grid(flux, &InterfaceShock::new(flux, l, r, p)?, n_xi, kernel_tol + rh_bound, rh_bound);
    let at_measured_p = judge(p)?;
    let (mut best_p, mut best) = (p, at_measured_p.clone());
    for q in state_samples(flux, 65) {
        let rep = judge(q)?;
        if rep.worst_margin < best.worst_margin {
            best_p = q;
            best = rep;
        }
    }
    Ok(RiemannReport {
        mean_left: l,
        mean_right: r,
        mean_p: p,
        rh_gap,
        rh_bound,
        at_measured_p,
        best_p,
        best,
    })
}

fn run_riemann(cfg: &RunConfig, flux: &FluxPair, out: &mut Artifacts, body: &mut RunBody) -> Result<()> {
    let grid = cfg.grid()?;
    let field = solve(flux, cfg.initial()?, &grid, &cfg.solver_config(cfg.epsilon())?)?;
    out.field("", &field)?;
    let traces = extract_traces(&field, cfg.analysis.trace_width)?;
    out.traces("traces.csv", &traces)?;
    let report = riemann_report(flux, &traces, &grid, cfg.analysis.n_xi, cfg.analysis.kernel_tol)?;
    out.json("riemann.json", &report)?;
    body.monitors.push(MonitorSummary::of("run", &field));
    body.verdicts.max_principle = Some(all_in_range(&[&field], cfg.analysis.max_principle_tol));
    body.verdicts.rh_traces = Some(report.rh_gap <= report.rh_bound);
    body.verdicts.admissibility = Some(report.best.verdict);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: bool,
    /// Time integral of `S(u^±, v^±)` along the extracted traces.
    pub kato_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub radius: f64,
    pub speed: f64,
    pub pairs: Vec<PairReport>,
    pub verdict: bool,
}

fn run_contract(cfg: &RunConfig, flux: &FluxPair, out: &mut Artifacts, body: &mut RunBody) -> Result<()> {
    let grid = cfg.grid()?;
    let solver = cfg.solver_config(cfg.epsilon())?;
    let pairs = match &cfg.initial_v {
        Some(v0) => vec![(cfg.initial()?.clone(), v0.clone())],
        None => {
            let mut rng = rng_stream(cfg.seed, STREAM_PAIRS);
            (0..cfg.analysis.n_pairs).map(|_| sample_ordered_pair(flux, &mut rng)).collect()
        }
    };
    let (r, c) = (cfg.analysis.radius, cfg.speed(flux));
    let mut reports = Vec::new();
    let mut in_range = true;
    for (k, (u0, v0)) in pairs.iter().enumerate() {
        let fu = solve(flux, u0, &grid, &solver)?;
        let fv = solve(flux, v0, &grid, &solver)?;
        in_range &= all_in_range(&[&fu, &fv], cfg.analysis.max_principle_tol);
        let rep = contraction_check(flux, &fu, &fv, r, c)?;
        let width = cfg.analysis.trace_width;
        let kato = kato_boundary_check(&extract_traces(&fu, width)?, &extract_traces(&fv, width)?, flux)?;
        body.monitors.push(MonitorSummary::of(format!("pair{k}.u"), &fu));
        body.monitors.push(MonitorSummary::of(format!("pair{k}.v"), &fv));
        reports.push(PairReport {
            index: k,
            lhs: rep.lhs,
            rhs: rep.rhs,
            slack: rep.slack,
            verdict: rep.verdict,
            kato_integral: kato.integral,
        });
    }
    let verdict = reports.iter().all(|p| p.verdict);
    out.json(
        "contraction.json",
        &ContractionSummary {
            radius: r,
            speed: c,
            pairs: reports,
            verdict,
        },
    )?;
    body.verdicts.max_principle = Some(in_range);
    body.verdicts.contraction = Some(verdict);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRun {
    pub label: String,
    pub p_source: String,
    pub report: ResidualReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub tol: f64,
    pub runs: Vec<ResidualRun>,
    pub verdict: bool,
}

fn run_residual(cfg: &RunConfig, flux: &FluxPair, out: &mut Artifacts, body: &mut RunBody) -> Result<()> {
    let grid = cfg.grid()?;
    let time = cfg.time()?;
    let an = &cfg.analysis;
    let family = TestFunctionFamily::standard(&grid, time.t_end, an.n_time_hats, an.n_space_hats, &an.cutoff_cells);
    let xi = xi_grid(flux, an.residual_n_xi);
    let u0 = cfg.initial()?;
    let mut runs = Vec::new();
    let mut fields_ok = true;
    if let Some(p) = an.frozen_p {
        let times: Vec<f64> = (0..=40).map(|k| time.t_end * k as f64 / 40.0).collect();
        let field = SolutionField::frozen(grid, times, u0.sample(&grid, flux), flux.a(), flux.b());
        let ps = vec![p; field.times.len()];
        runs.push(ResidualRun {
            label: "frozen".into(),
            p_source: format!("constant {p}"),
            report: entropy_residual(&field, &ps, flux, &xi, &family)?,
        });
    } else if let Some(eps) = &cfg.epsilons {
        let sweep = epsilon_sweep(flux, u0, &grid, eps, &cfg.solver_config(eps[0])?)?;
        let finest = sweep.finest();
        let mut fv_cfg = cfg.solver_config(0.0)?;
        fv_cfg.max_dt = Some(finest.meta.dt);
        let fv = solve(flux, u0, &grid, &fv_cfg)?;
        for (k, f) in sweep.fields.iter().enumerate() {
            body.monitors.push(MonitorSummary::of(format!("eps{k}"), f));
        }
        body.monitors.push(MonitorSummary::of("fv", &fv));
        fields_ok = sweep.fields.iter().chain([&fv]).all(|f| f.satisfies_max_principle(an.max_principle_tol));
        for (label, field) in [(format!("eps={}", finest.meta.epsilon), finest), ("fv".to_string(), &fv)] {
            runs.push(ResidualRun {
                label,
                p_source: "p_limsup".into(),
                report: entropy_residual(field, &sweep.p_limsup, flux, &xi, &family)?,
            });
        }
    } else {
        let field = solve(flux, u0, &grid, &cfg.solver_config(cfg.epsilon())?)?;
        body.monitors.push(MonitorSummary::of("run", &field));
        fields_ok = field.satisfies_max_principle(an.max_principle_tol);
        runs.push(ResidualRun {
            label: format!("eps={}", field.meta.epsilon),
            p_source: "p_epsilon".into(),
            report: entropy_residual(&field, &p_epsilon(&field), flux, &xi, &family)?,
        });
    }
    let verdict = runs.iter().all(|r| r.report.worst >= -an.residual_tol);
    out.json(
        "residual.json",
        &ResidualSummary {
            tol: an.residual_tol,
            runs,
            verdict,
        },
    )?;
    if an.frozen_p.is_none() {
        body.verdicts.max_principle = Some(fields_ok);
    }
    body.verdicts.residual = Some(verdict);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleQuery {
    pub shock: InterfaceShock,
    pub grid: AdmissibilityReport,
    pub cases: AdmissibilityReport,
    /// Both checkers reach the same verdict.
    pub agree: bool,
}

pub fn admissible_query(flux: &FluxPair, shock: InterfaceShock, cfg_tol: (usize, f64, f64)) -> Result<AdmissibleQuery> {
    let (n_xi, kernel_tol, rh_tol) = cfg_tol;
    let grid = is_admissible_grid(flux, &shock, n_xi, kernel_tol, rh_tol)?;
    let cases = is_admissible_cases(flux, &shock, n_xi, kernel_tol)?;
    Ok(AdmissibleQuery {
        shock,
        agree: grid.verdict == cases.verdict,
        grid,
        cases,
    })
}

/// `admissible`: both checkers on one shock. JSON goes to stdout and, with a
/// directory, to `admissibility.json` plus a manifest.
pub fn run_admissible(
    flux: &FluxPair,
    shock: InterfaceShock,
    cfg: Option<&RunConfig>,
    dir: Option<&Path>,
) -> Result<AdmissibleQuery> {
    let an = cfg.map(|c| c.analysis.clone()).unwrap_or_default();
    let q = admissible_query(flux, shock, (an.n_xi, an.kernel_tol, an.rh_tol))?;
    if let Some(dir) = dir {
        let mut out = Artifacts::create(dir)?;
        out.json("admissibility.json", &q)?;
        let body = RunBody {
            verdicts: Verdicts {
                admissibility: Some(q.agree),
                ..Verdicts::default()
            },
            ..RunBody::default()
        };
        out.finish("admissible", cfg, body)?;
    }
    Ok(q)
}

pub fn write_enumeration_csv<W: Write + ?Sized>(
    w: &mut W,
    rows: &[(InterfaceShock, AdmissibilityReport)],
) -> std::io::Result<()> {
    writeln!(w, "u_minus,u_plus,p,verdict,worst_margin,violated_condition")?;
    for (s, r) in rows {
        let cond = r.violated_condition.map(|c| c.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{},{}", s.u_minus, s.u_plus, s.p, r.verdict, r.worst_margin, cond)?;
    }
    Ok(())
}

/// `enumerate`: every stationary R-H shock on an `n_states` lattice with its grid verdict.
pub fn run_enumerate(
    flux: &FluxPair,
    n_states: usize,
    n_xi: usize,
    cfg: Option<&RunConfig>,
    dir: Option<&Path>,
) -> Result<Vec<(InterfaceShock, AdmissibilityReport)>> {
    let rows = enumerate_stationary_shocks(flux, n_states, n_xi)?;
    if let Some(dir) = dir {
        let mut out = Artifacts::create(dir)?;
        out.write_with("enumerate.csv", |w| write_enumeration_csv(w, &rows))?;
        out.finish("enumerate", cfg, RunBody::default())?;
    }
    Ok(rows)
}
