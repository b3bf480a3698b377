//! The discontinuous flux `H(x) f(u) + H(-x) g(u)`.
//!
//! `f` acts on the right of the interface, `g` on the left. Both curves live
//! on a common state interval `[a, b]` and agree at its endpoints, which is
//! what makes `[a, b]` invariant under the evolution.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_TOL_MATCH: f64 = 1e-12;
pub const DEFAULT_N_SCAN: usize = 1024;
pub const DEFAULT_BISECT_TOL: f64 = 1e-10;

const SPEED_BINS: usize = 512;
const SAMPLES_PER_BIN: usize = 8;

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `x < 0`, governed by `g`.
    Left,
    /// `x > 0`, governed by `f`.
    Right,
}

impl Side {
    pub fn of_position(x: f64) -> Side {
        if x < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn mirror(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// User-facing description of one flux curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    /// Coefficients from low to high degree.
    Poly { coeffs: Vec<f64> },
    /// Polynomial plus `amplitude * sin(frequency * pi * (u - a) / (b - a))`.
    /// The sinusoid vanishes at both ends of `[a, b]` for integer frequencies.
    PolySine {
        coeffs: Vec<f64>,
        amplitude: f64,
        frequency: i64,
    },
    /// Piecewise linear through `(u, value)` samples with strictly increasing `u`.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone)]
enum Curve {
    Poly {
        coeffs: Vec<f64>,
    },
    PolySine {
        coeffs: Vec<f64>,
        amplitude: f64,
        omega: f64,
        a: f64,
    },
    Table {
        u: Vec<f64>,
        v: Vec<f64>,
    },
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn poly_deriv(coeffs: &[f64], u: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * u + k as f64 * c)
}

fn poly_deriv2(coeffs: &[f64], u: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * u + (k * (k - 1)) as f64 * c)
}

impl Curve {
    fn build(spec: &CurveSpec, a: f64, b: f64, name: &str) -> Result<Curve> {
        let check_coeffs = |coeffs: &[f64]| -> Result<()> {
            if coeffs.is_empty() {
                return Err(Error::config(name, "empty coefficient list"));
            }
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::config(name, "non-finite coefficient"));
            }
            Ok(())
        };
        match spec {
            CurveSpec::Poly { coeffs } => {
                check_coeffs(coeffs)?;
                Ok(Curve::Poly {
                    coeffs: coeffs.clone(),
                })
            }
            CurveSpec::PolySine {
                coeffs,
                amplitude,
                frequency,
            } => {
                check_coeffs(coeffs)?;
                if !amplitude.is_finite() {
                    return Err(Error::config(name, "non-finite amplitude"));
                }
                Ok(Curve::PolySine {
                    coeffs: coeffs.clone(),
                    amplitude: *amplitude,
                    omega: *frequency as f64 * PI / (b - a),
                    a,
                })
            }
            CurveSpec::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::config(name, "table needs at least two samples"));
                }
                if points.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
                    return Err(Error::config(name, "non-finite table entry"));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::config(name, "table abscissae must strictly increase"));
                }
                let first = points[0].0;
                let last = points[points.len() - 1].0;
                if first > a || last < b {
                    return Err(Error::config(
                        name,
                        format!("table covers [{first}, {last}], which does not contain [{a}, {b}]"),
                    ));
                }
                Ok(Curve::Table {
                    u: points.iter().map(|p| p.0).collect(),
                    v: points.iter().map(|p| p.1).collect(),
                })
            }
        }
    }

    /// Index of the table segment used at `u`; knots belong to the segment on their right.
    fn segment(u_knots: &[f64], u: f64) -> usize {
        let n = u_knots.len();
        match u_knots.partition_point(|&k| k <= u) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn value(&self, u: f64) -> f64 {
        match self {
            Curve::Poly { coeffs } => horner(coeffs, u),
            Curve::PolySine {
                coeffs,
                amplitude,
                omega,
                a,
            } => horner(coeffs, u) + amplitude * (omega * (u - a)).sin(),
            Curve::Table { u: knots, v } => {
                let i = Self::segment(knots, u);
                let t = (u - knots[i]) / (knots[i + 1] - knots[i]);
                v[i] + t * (v[i + 1] - v[i])
            }
        }
    }

    fn slope(&self, u: f64) -> f64 {
        match self {
            Curve::Poly { coeffs } => poly_deriv(coeffs, u),
            Curve::PolySine {
                coeffs,
                amplitude,
                omega,
                a,
            } => poly_deriv(coeffs, u) + amplitude * omega * (omega * (u - a)).cos(),
            Curve::Table { u: knots, v } => {
                let i = Self::segment(knots, u);
                (v[i + 1] - v[i]) / (knots[i + 1] - knots[i])
            }
        }
    }

    fn curvature(&self, u: f64) -> f64 {
        match self {
            Curve::Poly { coeffs } => poly_deriv2(coeffs, u),
            Curve::PolySine {
                coeffs,
                amplitude,
                omega,
                a,
            } => poly_deriv2(coeffs, u) - amplitude * omega * omega * (omega * (u - a)).sin(),
            Curve::Table { .. } => 0.0,
        }
    }

    /// Upper bounds of `|slope|` on `n_bins` uniform bins of `[a, b]`.
    fn speed_bins(&self, a: f64, b: f64, n_bins: usize) -> Vec<f64> {
        let width = (b - a) / n_bins as f64;
        (0..n_bins)
            .map(|k| {
                let lo = a + k as f64 * width;
                let hi = lo + width;
                match self {
                    Curve::Table { u: knots, v } => {
                        // Exact: max over the segments meeting [lo, hi].
                        let first = Self::segment(knots, lo);
                        let last = Self::segment(knots, hi);
                        (first..=last)
                            .map(|i| ((v[i + 1] - v[i]) / (knots[i + 1] - knots[i])).abs())
                            .fold(0.0, f64::max)
                    }
                    _ => {
                        let step = width / SAMPLES_PER_BIN as f64;
                        let mut slope_max: f64 = 0.0;
                        let mut curv_max: f64 = 0.0;
                        for s in 0..=SAMPLES_PER_BIN {
                            let u = lo + s as f64 * step;
                            slope_max = slope_max.max(self.slope(u).abs());
                            curv_max = curv_max.max(self.curvature(u).abs());
                        }
                        // Between samples |slope| can exceed the sampled max by at most
                        // half a sample spacing times sup |curvature|.
                        slope_max + step * curv_max
                    }
                }
            })
            .collect()
    }
}

/// The pair `(f, g)` on `[a, b]`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct FluxPair {
    f_spec: CurveSpec,
    g_spec: CurveSpec,
    f: Curve,
    g: Curve,
    a: f64,
    b: f64,
    tol_match: f64,
    f_speed: Vec<f64>,
    g_speed: Vec<f64>,
}

/// Result of scanning `f - g` for sign changes.
#[derive(Debug, Clone, PartialEq)]
pub enum Crossings {
    /// `max |f - g|` over the scan is within tolerance.
    Identical,
    Points(Vec<f64>),
}

impl Crossings {
    pub fn points(&self) -> &[f64] {
        match self {
            Crossings::Identical => &[],
            Crossings::Points(p) => p,
        }
    }
}

/// A violating pair for the single-crossing ordering: `f(u) - g(u) < 0 < f(v) - g(v)` with `u >= v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingWitness {
    pub u: f64,
    pub v: f64,
}

impl FluxPair {
    pub fn new(f_spec: CurveSpec, g_spec: CurveSpec, a: f64, b: f64) -> Result<FluxPair> {
        Self::with_tolerance(f_spec, g_spec, a, b, DEFAULT_TOL_MATCH)
    }

    pub fn with_tolerance(
        f_spec: CurveSpec,
        g_spec: CurveSpec,
        a: f64,
        b: f64,
        tol_match: f64,
    ) -> Result<FluxPair> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::config("flux.a", "state bounds must be finite"));
        }
        if b <= a {
            return Err(Error::config("flux.b", format!("need b > a, got a = {a}, b = {b}")));
        }
        if !(tol_match >= 0.0) {
            return Err(Error::config("flux.tol_match", "must be nonnegative"));
        }
        let f = Curve::build(&f_spec, a, b, "flux.f")?;
        let g = Curve::build(&g_spec, a, b, "flux.g")?;
        for (end, name) in [(a, "a"), (b, "b")] {
            let gap = (f.value(end) - g.value(end)).abs();
            if !(gap <= tol_match) {
                return Err(Error::config(
                    "flux",
                    format!("f and g differ by {gap:e} at u = {name} (tolerance {tol_match:e})"),
                ));
            }
        }
        let f_speed = f.speed_bins(a, b, SPEED_BINS);
        let g_speed = g.speed_bins(a, b, SPEED_BINS);
        Ok(FluxPair {
            f_spec,
            g_spec,
            f,
            g,
            a,
            b,
            tol_match,
            f_speed,
            g_speed,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn tol_match(&self) -> f64 {
        self.tol_match
    }

    pub fn spec(&self, side: Side) -> &CurveSpec {
        match side {
            Side::Left => &self.g_spec,
            Side::Right => &self.f_spec,
        }
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.a, self.b)
    }

    fn curve(&self, side: Side) -> &Curve {
        match side {
            Side::Left => &self.g,
            Side::Right => &self.f,
        }
    }

    /// `f(u)` on the right, `g(u)` on the left; `u` is clamped to `[a, b]`.
    pub fn eval(&self, side: Side, u: f64) -> f64 {
        self.curve(side).value(self.clamp(u))
    }

    pub fn eval_deriv(&self, side: Side, u: f64) -> f64 {
        self.curve(side).slope(self.clamp(u))
    }

    pub fn f(&self, u: f64) -> f64 {
        self.eval(Side::Right, u)
    }

    pub fn g(&self, u: f64) -> f64 {
        self.eval(Side::Left, u)
    }

    /// `f(u) - g(u)`.
    pub fn gap(&self, u: f64) -> f64 {
        self.f(u) - self.g(u)
    }

    /// Upper bound of `|F'|` over the states between `u1` and `u2` for the given side.
    pub fn max_speed_between(&self, side: Side, u1: f64, u2: f64) -> f64 {
        let bins = match side {
            Side::Left => &self.g_speed,
            Side::Right => &self.f_speed,
        };
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let n = bins.len();
        let scale = n as f64 / (self.b - self.a);
        let idx = |u: f64| (((self.clamp(u) - self.a) * scale) as usize).min(n - 1);
        bins[idx(lo)..=idx(hi)].iter().copied().fold(0.0, f64::max)
    }

    /// `max(|f'|, |g'|)` over `[a, b]` (upper bound).
    pub fn max_speed(&self) -> f64 {
        self.f_speed
            .iter()
            .chain(self.g_speed.iter())
            .copied()
            .fold(0.0, f64::max)
    }

    fn scan_points(&self, n_scan: usize) -> impl Iterator<Item = f64> + '_ {
        let h = (self.b - self.a) / n_scan as f64;
        (0..=n_scan).map(move |i| if i == n_scan { self.b } else { self.a + i as f64 * h })
    }

    /// Interior sign changes of `f - g`, located by a uniform scan and bisection.
    pub fn find_crossings(&self, n_scan: usize, tol: f64) -> Result<Crossings> {
        check_scan(n_scan)?;
        let us: Vec<f64> = self.scan_points(n_scan).collect();
        let ds: Vec<f64> = us.iter().map(|&u| self.gap(u)).collect();
        if ds.iter().all(|d| d.abs() <= tol) {
            return Ok(Crossings::Identical);
        }
        let mut out = Vec::new();
        for i in 0..n_scan {
            let (d0, d1) = (ds[i], ds[i + 1]);
            if d0 == 0.0 {
                // Exact zero on a sample: count it once, if the sign really changes there.
                if i > 0 && ds[i - 1] * d1 < 0.0 {
                    out.push(us[i]);
                }
                continue;
            }
            if d0 * d1 < 0.0 {
                out.push(bisect(|u| self.gap(u), us[i], us[i + 1], tol));
            }
        }
        Ok(Crossings::Points(out))
    }

    /// Checks the single-crossing ordering on the scan grid. Values of `f - g`
    /// within `tol_match` of zero are treated as zero.
    pub fn check_crossing_condition(&self, n_scan: usize) -> Result<(bool, Option<CrossingWitness>)> {
        check_scan(n_scan)?;
        let mut max_neg: Option<f64> = None;
        let mut min_pos: Option<f64> = None;
        for u in self.scan_points(n_scan) {
            let d = self.gap(u);
            if d < -self.tol_match {
                max_neg = Some(u);
            } else if d > self.tol_match && min_pos.is_none() {
                min_pos = Some(u);
            }
        }
        match (max_neg, min_pos) {
            (Some(u), Some(v)) if u >= v => Ok((false, Some(CrossingWitness { u, v }))),
            _ => Ok((true, None)),
        }
    }

    /// Maximal subintervals on which the selected curve varies by less than `tol`.
    pub fn detect_flat_intervals(&self, side: Side, tol: f64, n_scan: usize) -> Result<Vec<(f64, f64)>> {
        check_scan(n_scan)?;
        let us: Vec<f64> = self.scan_points(n_scan).collect();
        let vs: Vec<f64> = us.iter().map(|&u| self.eval(side, u)).collect();
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut start = 0;
        while start < n_scan {
            let (mut lo, mut hi) = (vs[start], vs[start]);
            let mut end = start;
            while end < n_scan {
                let v = vs[end + 1];
                let (nlo, nhi) = (lo.min(v), hi.max(v));
                if nhi - nlo >= tol {
                    break;
                }
                lo = nlo;
                hi = nhi;
                end += 1;
            }
            if end > start {
                match out.last_mut() {
                    Some(last) if last.1 >= us[start] => last.1 = us[end],
                    _ => out.push((us[start], us[end])),
                }
                start = end;
            } else {
                start += 1;
            }
        }
        Ok(out)
    }

    /// All `u` in `[a, b]` with `F(u) = target` for the chosen side. Monotone
    /// pieces are split at sign changes of the slope and each piece is bisected.
    pub fn inverse(&self, side: Side, target: f64, n_scan: usize, tol: f64) -> Vec<f64> {
        let us: Vec<f64> = self.scan_points(n_scan).collect();
        let h = |u: f64| self.eval(side, u) - target;
        let mut out: Vec<f64> = Vec::new();
        let push = |out: &mut Vec<f64>, r: f64| {
            if out.last().map_or(true, |&l| (r - l).abs() > 10.0 * tol) {
                out.push(r);
            }
        };
        for w in us.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // Split at an interior slope sign change so both halves are monotone.
            let s0 = self.eval_deriv(side, lo);
            let s1 = self.eval_deriv(side, hi);
            let mut knots = vec![lo];
            if s0 * s1 < 0.0 {
                knots.push(bisect(|u| self.eval_deriv(side, u), lo, hi, tol * 1e-2));
            }
            knots.push(hi);
            for k in knots.windows(2) {
                let (l, r) = (k[0], k[1]);
                let (hl, hr) = (h(l), h(r));
                if hl == 0.0 {
                    push(&mut out, l);
                } else if hl * hr < 0.0 {
                    push(&mut out, bisect(h, l, r, tol));
                }
            }
        }
        if h(self.b) == 0.0 {
            push(&mut out, self.b);
        }
        out
    }
}

fn check_scan(n_scan: usize) -> Result<()> {
    if n_scan < 16 {
        return Err(Error::argument(format!("n_scan must be at least 16, got {n_scan}")));
    }
    Ok(())
}

/// Bisection for a sign change of `h` on `[lo, hi]`.
pub fn bisect(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut hlo = h(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        if hm == 0.0 {
            return mid;
        }
        if (hm < 0.0) == (hlo < 0.0) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max(l, min(r, u))`.
pub fn truncate(l: f64, r: f64, u: f64) -> Result<f64> {
    if !(l < r) {
        return Err(Error::argument(format!("truncation needs l < r, got l = {l}, r = {r}")));
    }
    Ok(l.max(r.min(u)))
}

/// The test fluxes used throughout the documentation and test-suite.
pub mod presets {
    use super::*;

    /// `f = g = u^2 / 2` on `[0, 1]`: the classical Burgers case.
    pub fn flux_a() -> FluxPair {
        let burgers = CurveSpec::Poly {
            coeffs: vec![0.0, 0.0, 0.5],
        };
        FluxPair::new(burgers.clone(), burgers, 0.0, 1.0).expect("valid preset")
    }

    /// `f = u(1 - u)`, `g = 2u(1 - u)` on `[0, 1]`; `f < g` inside.
    pub fn flux_b() -> FluxPair {
        FluxPair::new(
            CurveSpec::Poly {
                coeffs: vec![0.0, 1.0, -1.0],
            },
            CurveSpec::Poly {
                coeffs: vec![0.0, 2.0, -2.0],
            },
            0.0,
            1.0,
        )
        .expect("valid preset")
    }

    /// `f = u(1 - u)`, `g = u(1 - u) + 0.1 sin(4 pi u)` on `[0, 1]`; three crossings.
    pub fn flux_c() -> FluxPair {
        FluxPair::new(
            CurveSpec::Poly {
                coeffs: vec![0.0, 1.0, -1.0],
            },
            CurveSpec::PolySine {
                coeffs: vec![0.0, 1.0, -1.0],
                amplitude: 0.1,
                frequency: 4,
            },
            0.0,
            1.0,
        )
        .expect("valid preset")
    }

    pub fn by_name(name: &str) -> Option<FluxPair> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "flux-a" | "a" => Some(flux_a()),
            "flux-b" | "b" => Some(flux_b()),
            "flux-c" | "c" => Some(flux_c()),
            _ => None,
        }
    }
}
