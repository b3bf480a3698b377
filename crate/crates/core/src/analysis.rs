//! Post-processing of solution fields: interface traces, the weak-form
//! entropy residual with an interface term, the Kato boundary term along
//! traces, and L1 contraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::admissibility::{kato_s, KatoResult};
use crate::error::{Error, Result};
use crate::flux::{sgn, FluxPair, Side};
use crate::solver::{l1_window, p_epsilon, Grid1D, SolutionField};

pub const DEFAULT_TRACE_WIDTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSeries {
    pub times: Vec<f64>,
    /// `u(t, 0-)`
    pub left: Vec<f64>,
    /// `u(t, 0+)`
    pub right: Vec<f64>,
    pub p: Vec<f64>,
}

impl TraceSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,u_left,u_right,p")?;
        for n in 0..self.len() {
            writeln!(w, "{},{},{},{}", self.times[n], self.left[n], self.right[n], self.p[n])?;
        }
        Ok(())
    }

    /// Time average of `|g(left) - f(right)|` over snapshots with `t >= t_from`.
    pub fn mean_rh_gap(&self, flux: &FluxPair, t_from: f64) -> f64 {
        let gaps: Vec<f64> = (0..self.len())
            .filter(|&n| self.times[n] >= t_from)
            .map(|n| (flux.g(self.left[n]) - flux.f(self.right[n])).abs())
            .collect();
        if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        }
    }
}

/// Least-squares line through `(x, u)` evaluated at `x = 0`.
fn extrapolate_to_zero(xs: &[f64], us: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mu = us.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxu: f64 = xs.iter().zip(us).map(|(x, u)| (x - mx) * (u - mu)).sum();
    let slope = sxu / sxx;
    mu - slope * mx
}

/// One-sided traces at `x = 0` by linear extrapolation from `width` cells on
/// each side; `p` is the mean of the two interface cells.
pub fn extract_traces(field: &SolutionField, width: usize) -> Result<TraceSeries> {
    let grid = &field.grid;
    let k = grid.n_left();
    let half = k.min(grid.n_cells - k);
    if width < 2 {
        return Err(Error::argument(format!("trace width must be at least 2, got {width}")));
    }
    if width > half {
        return Err(Error::argument(format!(
            "trace width {width} exceeds the {half} cells available on one side"
        )));
    }
    let (a, b) = (field.meta.a, field.meta.b);
    // Distances from the interface, nearest cell first, identical on both sides.
    let dist: Vec<f64> = (0..width).map(|i| (i as f64 + 0.5) * grid.dx()).collect();
    let mut left = Vec::with_capacity(field.times.len());
    let mut right = Vec::with_capacity(field.times.len());
    let mut buf = vec![0.0; width];
    for row in &field.values {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = row[k - 1 - i];
        }
        left.push(extrapolate_to_zero(&dist, &buf).clamp(a, b));
        right.push(extrapolate_to_zero(&dist, &row[k..k + width]).clamp(a, b));
    }
    Ok(TraceSeries {
        times: field.times.clone(),
        left,
        right,
        p: p_epsilon(field),
    })
}

/// Piecewise-linear function described by its knots; zero outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn hat(center: f64, half_width: f64) -> Self {
        PiecewiseLinear {
            knots: vec![(center - half_width, 0.0), (center, 1.0), (center + half_width, 0.0)],
        }
    }

    /// The interface cutoff: 1 on `[-h, h]`, linear ramps to 0 at `±2h`.
    pub fn interface_cutoff(h: f64) -> Self {
        PiecewiseLinear {
            knots: vec![(-2.0 * h, 0.0), (-h, 1.0), (h, 1.0), (2.0 * h, 0.0)],
        }
    }

    /// `(1 - μ_h) ψ` for a hat `ψ`, interpolated linearly between the joint knots.
    pub fn excised_hat(center: f64, half_width: f64, h: f64) -> Self {
        let hat = Self::hat(center, half_width);
        let cut = Self::interface_cutoff(h);
        let mut xs: Vec<f64> = hat.knots.iter().chain(&cut.knots).map(|k| k.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let (lo, hi) = (center - half_width, center + half_width);
        let knots = xs
            .into_iter()
            .filter(|x| *x >= lo && *x <= hi)
            .map(|x| (x, hat.value(x) * (1.0 - cut.value(x))))
            .collect();
        PiecewiseLinear { knots }
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = &self.knots;
        if k.is_empty() || x < k[0].0 || x > k[k.len() - 1].0 {
            return 0.0;
        }
        let i = k.partition_point(|p| p.0 <= x);
        if i == k.len() {
            return k[i - 1].1;
        }
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let mut xs = vec![lo];
        xs.extend(self.knots.iter().map(|k| k.0).filter(|x| *x > lo && *x < hi));
        xs.push(hi);
        xs.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.value(w[0]) + self.value(w[1]))).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn max(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(0.0, f64::max)
    }
}

/// A tensor test function `ψ(t, x) = φ(t) χ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub label: String,
    pub time: PiecewiseLinear,
    pub space: PiecewiseLinear,
}

impl TestFunction {
    pub fn norm_area(&self) -> f64 {
        let (t0, t1) = self.time.support();
        let (x0, x1) = self.space.support();
        self.time.max() * self.space.max() * (t1 - t0) * (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionFamily {
    /// `n_time` time hats times `n_space` space hats tiling `[-R, R]`, plus
    /// `(1 - μ_h) ψ` for every space hat `ψ` reaching into `(-2h, 2h)`, with
    /// `h = m dx` for each `m` in `cutoff_cells`.
    pub fn standard(grid: &Grid1D, t_end: f64, n_time: usize, n_space: usize, cutoff_cells: &[usize]) -> Self {
        let window = 0.8 * (-grid.x_min).min(grid.x_max);
        let tw = t_end / (n_time + 1) as f64;
        let sw = 2.0 * window / (n_space + 1) as f64;
        let times: Vec<(usize, PiecewiseLinear)> =
            (1..=n_time).map(|k| (k, PiecewiseLinear::hat(k as f64 * tw, tw))).collect();
        let centers: Vec<f64> = (1..=n_space).map(|k| -window + k as f64 * sw).collect();
        let mut spaces: Vec<(String, PiecewiseLinear)> = centers
            .iter()
            .map(|&c| (format!("hat(x={c:.4},w={sw:.4})"), PiecewiseLinear::hat(c, sw)))
            .collect();
        for &m in cutoff_cells {
            let h = m as f64 * grid.dx();
            for &c in centers.iter().filter(|c| (c.abs() - sw) < 2.0 * h) {
                spaces.push((
                    format!("excised(x={c:.4},w={sw:.4},h={h})"),
                    PiecewiseLinear::excised_hat(c, sw, h),
                ));
            }
        }
        let mut functions = Vec::new();
        for (k, phi) in &times {
            for (name, chi) in &spaces {
                functions.push(TestFunction {
                    label: format!("t{k}:{name}"),
                    time: phi.clone(),
                    space: chi.clone(),
                });
            }
        }
        TestFunctionFamily { functions }
    }

    pub fn default_for(grid: &Grid1D, t_end: f64) -> Self {
        Self::standard(grid, t_end, 8, 8, &[2, 4, 8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Minimum over `(ξ, ψ)` of the normalized residual.
    pub worst: f64,
    pub witness_xi: f64,
    pub witness_function: String,
    pub xi: Vec<f64>,
    pub per_xi_min: Vec<f64>,
}

/// `Q(x, u, ξ) = sgn(u - ξ) (F(u) - F(ξ))` with `F = f` on the right and `g` on the left.
pub fn entropy_flux(flux: &FluxPair, side: Side, u: f64, xi: f64) -> f64 {
    sgn(u - xi) * (flux.eval(side, u) - flux.eval(side, xi))
}

/// Weak-form residual of the interface entropy inequality,
///
/// ```text
/// R(ξ, ψ) = ∬ |u-ξ| ψ_t + Q ψ_x  -  ∫ sgn(p(t)-ξ)(f(ξ)-g(ξ)) ψ(t,0) dt  +  ∫ |u₀-ξ| ψ(0,x) dx,
/// ```
///
/// normalized by `‖ψ‖∞ · |supp ψ|`. The inequality holds when every value is `>= -tol`.
///
/// Cell averages are treated as piecewise constant in `x`, so the flux term
/// is `Σ_j Q_j (χ(x_{j+1/2}) - χ(x_{j-1/2}))` and the interface column splits
/// exactly at the edge `x = 0`. The time-derivative term is summed by parts
/// over the snapshots; the remaining time integrals use the trapezoid rule.
pub fn entropy_residual(
    field: &SolutionField,
    p_series: &[f64],
    flux: &FluxPair,
    xi_grid: &[f64],
    family: &TestFunctionFamily,
) -> Result<ResidualReport> {
    if p_series.len() != field.times.len() {
        return Err(Error::argument(format!(
            "p series has {} entries for {} snapshots",
            p_series.len(),
            field.times.len()
        )));
    }
    if field.times.len() < 2 {
        return Err(Error::argument("need at least two snapshots"));
    }
    if family.functions.is_empty() || xi_grid.is_empty() {
        return Err(Error::argument("empty test family or xi grid"));
    }
    let grid = &field.grid;
    let n = grid.n_cells;
    let times = &field.times;
    let n_snap = times.len();
    let sides: Vec<Side> = (0..n).map(|j| grid.side(j)).collect();
    let t_last = times[n_snap - 1];

    // Trapezoid weights on the snapshot grid.
    let mut trap = vec![0.0; n_snap];
    for w in 0..n_snap - 1 {
        let dt = times[w + 1] - times[w];
        trap[w] += 0.5 * dt;
        trap[w + 1] += 0.5 * dt;
    }

    // Distinct time and space factors, evaluated once.
    let mut time_fns: Vec<&PiecewiseLinear> = Vec::new();
    let mut space_fns: Vec<&PiecewiseLinear> = Vec::new();
    let mut pairs = Vec::with_capacity(family.functions.len());
    for tf in &family.functions {
        let ti = time_fns.iter().position(|p| **p == tf.time).unwrap_or_else(|| {
            time_fns.push(&tf.time);
            time_fns.len() - 1
        });
        let si = space_fns.iter().position(|p| **p == tf.space).unwrap_or_else(|| {
            space_fns.push(&tf.space);
            space_fns.len() - 1
        });
        pairs.push((ti, si, tf.norm_area()));
    }

    struct TimeFactor {
        at_snap: Vec<f64>,
        interval_mean: Vec<f64>,
        at_end: f64,
        at_start: f64,
        span: (usize, usize),
    }
    let time_factors: Vec<TimeFactor> = time_fns
        .iter()
        .map(|phi| {
            let at_snap: Vec<f64> = times.iter().map(|&t| phi.value(t)).collect();
            let interval_mean = times
                .windows(2)
                .map(|w| phi.integral(w[0], w[1]) / (w[1] - w[0]))
                .collect();
            let (s0, s1) = phi.support();
            let first = times.partition_point(|&t| t < s0).saturating_sub(1);
            let last = times.partition_point(|&t| t <= s1).min(n_snap - 1);
            TimeFactor {
                at_snap,
                interval_mean,
                at_end: phi.value(t_last),
                at_start: phi.value(times[0]),
                span: (first, last),
            }
        })
        .collect();

    struct SpaceFactor {
        cell_integral: Vec<f64>,
        edge_diff: Vec<f64>,
        at_interface: f64,
        cells: (usize, usize),
    }
    let space_factors: Vec<SpaceFactor> = space_fns
        .iter()
        .map(|chi| {
            let cell_integral: Vec<f64> = (0..n).map(|j| chi.integral(grid.edge(j), grid.edge(j + 1))).collect();
            let edge_diff: Vec<f64> = (0..n).map(|j| chi.value(grid.edge(j + 1)) - chi.value(grid.edge(j))).collect();
            let (x0, x1) = chi.support();
            let lo = (0..n).find(|&j| grid.edge(j + 1) > x0).unwrap_or(n);
            let hi = (0..n).rev().find(|&j| grid.edge(j) < x1).map_or(0, |j| j + 1);
            SpaceFactor {
                cell_integral,
                edge_diff,
                at_interface: chi.value(0.0),
                cells: (lo, hi.max(lo)),
            }
        })
        .collect();

    let evaluate_xi = |xi: f64| -> (f64, usize) {
        let gap = flux.gap(xi);
        let interface: Vec<f64> = p_series.iter().map(|&p| sgn(p - xi) * gap).collect();
        let (mut best, mut best_k) = (f64::INFINITY, 0);
        // Cache per time factor the per-cell time-derivative term.
        let time_terms: Vec<Vec<f64>> = time_factors
            .iter()
            .map(|tf| {
                let (s0, s1) = tf.span;
                (0..n)
                    .map(|j| {
                        let mut acc = (field.values[n_snap - 1][j] - xi).abs() * tf.at_end
                            - (field.values[0][j] - xi).abs() * tf.at_start;
                        for w in s0..s1.min(n_snap - 1) {
                            let d = (field.values[w + 1][j] - xi).abs() - (field.values[w][j] - xi).abs();
                            acc -= d * tf.interval_mean[w];
                        }
                        // initial-data term ∫|u₀-ξ| ψ(0,x) dx
                        acc + (field.values[0][j] - xi).abs() * tf.at_start
                    })
                    .collect()
            })
            .collect();
        // Per space factor, the flux term as a function of the snapshot.
        let flux_terms: Vec<Vec<f64>> = space_factors
            .iter()
            .map(|sf| {
                (0..n_snap)
                    .map(|w| {
                        let row = &field.values[w];
                        (sf.cells.0..sf.cells.1)
                            .map(|j| entropy_flux(flux, sides[j], row[j], xi) * sf.edge_diff[j])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        for (k, &(ti, si, norm)) in pairs.iter().enumerate() {
            let tf = &time_factors[ti];
            let sf = &space_factors[si];
            let (c0, c1) = sf.cells;
            let t_term: f64 = (c0..c1).map(|j| time_terms[ti][j] * sf.cell_integral[j]).sum();
            let (s0, s1) = tf.span;
            let mut x_term = 0.0;
            let mut i_term = 0.0;
            for w in s0..=s1 {
                let weight = trap[w] * tf.at_snap[w];
                x_term += weight * flux_terms[si][w];
                i_term += weight * interface[w];
            }
            let r = (t_term + x_term - i_term * sf.at_interface) / norm;
            if r < best {
                best = r;
                best_k = k;
            }
        }
        (best, best_k)
    };

    let per_xi: Vec<(f64, usize)> = xi_grid.par_iter().map(|&xi| evaluate_xi(xi)).collect();
    let (mut worst, mut wi, mut wk) = (f64::INFINITY, 0, 0);
    for (i, &(r, k)) in per_xi.iter().enumerate() {
        if r < worst {
            worst = r;
            wi = i;
            wk = k;
        }
    }
    Ok(ResidualReport {
        worst,
        witness_xi: xi_grid[wi],
        witness_function: family.functions[wk].label.clone(),
        xi: xi_grid.to_vec(),
        per_xi_min: per_xi.iter().map(|r| r.0).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoBoundary {
    pub times: Vec<f64>,
    pub s: Vec<KatoResult>,
    pub integral: f64,
}

impl KatoBoundary {
    /// Smallest `S(t)` over `t >= t_from`.
    pub fn min_after(&self, t_from: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.s)
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, s)| s.s_value)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `S(u^±, v^±)` along two aligned trace series, with its trapezoid time integral.
pub fn kato_boundary_check(u: &TraceSeries, v: &TraceSeries, flux: &FluxPair) -> Result<KatoBoundary> {
    if u.len() != v.len() || u.times.iter().zip(&v.times).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::argument("trace series are not aligned in time"));
    }
    let s: Vec<KatoResult> = (0..u.len())
        .map(|n| kato_s(flux, (u.left[n], u.right[n]), (v.left[n], v.right[n])))
        .collect();
    let integral = (1..u.len())
        .map(|n| 0.5 * (u.times[n] - u.times[n - 1]) * (s[n].s_value + s[n - 1].s_value))
        .sum();
    Ok(KatoBoundary {
        times: u.times.clone(),
        s,
        integral,
    })
}

fn check_same_layout(a: &SolutionField, b: &SolutionField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::argument("fields live on different grids"));
    }
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12) {
        return Err(Error::argument("fields have different snapshot times"));
    }
    Ok(())
}

/// `Σ_{|x_j| <= R} |u_a - u_b| dx` per snapshot.
pub fn l1_distance(a: &SolutionField, b: &SolutionField, r: f64) -> Result<Vec<f64>> {
    check_same_layout(a, b)?;
    Ok(a.values.iter().zip(&b.values).map(|(u, v)| l1_window(&a.grid, u, v, r)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: bool,
}

/// `∫₀ᵀ ∫_{B(0,R)} |u - v| dx dt <= T ∫_{B(0,R+CT)} |u₀ - v₀| dx + slack`
/// with `slack = 0.01 T (b - a) 2R`. `C` must dominate the flux speeds.
pub fn contraction_check(
    flux: &FluxPair,
    a: &SolutionField,
    b: &SolutionField,
    r: f64,
    c: f64,
) -> Result<ContractionReport> {
    check_same_layout(a, b)?;
    let lambda = flux.max_speed();
    if c < lambda {
        return Err(Error::argument(format!("C = {c} is below the maximal speed {lambda}")));
    }
    let t = *a.times.last().expect("non-empty field");
    let reach = r + c * t;
    let half = (-a.grid.x_min).min(a.grid.x_max);
    if reach > half {
        return Err(Error::argument(format!(
            "domain too small: B(0, R + C T) = B(0, {reach}) exceeds the half-width {half}"
        )));
    }
    let per_snap = l1_distance(a, b, r)?;
    let lhs = (1..per_snap.len())
        .map(|n| 0.5 * (a.times[n] - a.times[n - 1]) * (per_snap[n] + per_snap[n - 1]))
        .sum();
    let rhs = t * l1_window(&a.grid, &a.values[0], &b.values[0], reach);
    let slack = 0.01 * t * (flux.b() - flux.a()) * 2.0 * r;
    Ok(ContractionReport {
        lhs,
        rhs,
        slack,
        verdict: lhs <= rhs + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::xi_grid;
    use crate::flux::presets::*;

    fn grid() -> Grid1D {
        Grid1D::new(-1.0, 1.0, 100).unwrap()
    }

    fn frozen_shock(um: f64, up: f64) -> SolutionField {
        let g = grid();
        let profile = (0..g.n_cells).map(|j| if j < g.n_left() { um } else { up }).collect();
        let times = (0..=20).map(|k| k as f64 * 0.05).collect();
        SolutionField::frozen(g, times, profile, 0.0, 1.0)
    }

    #[test]
    fn traces_of_constant_field() {
        let field = SolutionField::frozen(grid(), vec![0.0, 0.5], vec![0.4; 100], 0.0, 1.0);
        let tr = extract_traces(&field, 4).unwrap();
        for n in 0..2 {
            assert!((tr.left[n] - 0.4).abs() < 1e-14);
            assert!((tr.right[n] - 0.4).abs() < 1e-14);
            assert!((tr.p[n] - 0.4).abs() < 1e-14);
        }
        assert!(extract_traces(&field, 1).is_err());
        assert!(extract_traces(&field, 51).is_err());
    }

    #[test]
    fn linear_profiles_extrapolate_exactly() {
        let g = grid();
        let profile: Vec<f64> = (0..100)
            .map(|j| {
                let x = g.center(j);
                if x < 0.0 {
                    0.3 + 0.1 * x
                } else {
                    0.6 - 0.2 * x
                }
            })
            .collect();
        let tr = extract_traces(&SolutionField::frozen(g, vec![0.0], profile, 0.0, 1.0), 4).unwrap();
        assert!((tr.left[0] - 0.3).abs() < 1e-12);
        assert!((tr.right[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn mirroring_swaps_traces() {
        let g = Grid1D::new(-1.0, 3.0, 40).unwrap();
        let profile: Vec<f64> = (0..40).map(|j| ((j * 37) % 11) as f64 / 11.0).collect();
        let field = SolutionField::frozen(g, vec![0.0], profile, 0.0, 1.0);
        let a = extract_traces(&field, 4).unwrap();
        let b = extract_traces(&field.mirrored(), 4).unwrap();
        assert_eq!(a.left, b.right);
        assert_eq!(a.right, b.left);
    }

    #[test]
    fn entropy_flux_properties() {
        let c = flux_c();
        let lip = c.max_speed();
        for side in [Side::Left, Side::Right] {
            for i in 0..=40 {
                let xi = i as f64 / 40.0;
                assert_eq!(entropy_flux(&c, side, xi, xi), 0.0);
                for k in 0..40 {
                    let u = k as f64 / 40.0;
                    let v = u + 0.025;
                    let dq = (entropy_flux(&c, side, u, xi) - entropy_flux(&c, side, v, xi)).abs();
                    assert!(dq <= lip * 0.025 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn piecewise_linear_integrals() {
        let hat = PiecewiseLinear::hat(0.0, 1.0);
        assert!((hat.integral(-2.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((hat.integral(0.0, 0.5) - 0.375).abs() < 1e-15);
        let mu = PiecewiseLinear::interface_cutoff(0.1);
        assert!((mu.integral(-1.0, 1.0) - 0.3).abs() < 1e-15);
        let ex = PiecewiseLinear::excised_hat(0.0, 1.0, 0.1);
        assert_eq!(ex.value(0.0), 0.0);
        assert!((ex.value(0.5) - 0.5).abs() < 1e-15);
        // interpolated between the joint knots 0.1 and 0.2
        assert!((ex.value(0.15) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let a = flux_a();
        let g = grid();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let field = SolutionField::frozen(g, times, vec![0.3; 100], 0.0, 1.0);
        let p = vec![0.3; 11];
        let fam = TestFunctionFamily::default_for(&g, 1.0);
        let rep = entropy_residual(&field, &p, &a, &xi_grid(&a, 64), &fam).unwrap();
        assert!(rep.worst.abs() <= 1e-10, "{rep:?}");
        assert!(entropy_residual(&field, &p[..5], &a, &xi_grid(&a, 64), &fam).is_err());
    }

    #[test]
    fn standard_family_shape() {
        let g = Grid1D::new(-4.0, 4.0, 800).unwrap();
        let fam = TestFunctionFamily::default_for(&g, 1.0);
        // two space hats straddle the interface, each excised at three widths
        assert_eq!(fam.functions.len(), 8 * (8 + 2 * 3));
        for tf in &fam.functions {
            assert!(tf.time.knots.iter().chain(&tf.space.knots).all(|k| k.1 >= 0.0));
            let (x0, x1) = tf.space.support();
            assert!(x0 >= g.x_min && x1 <= g.x_max);
            if let Some(h) = tf.label.split("h=").nth(1) {
                let h: f64 = h.trim_end_matches(')').parse().unwrap();
                assert_eq!(tf.space.value(0.0), 0.0);
                assert_eq!(tf.space.value(0.999 * h), 0.0);
            }
        }
    }

    #[test]
    fn frozen_shock_residual_is_minus_kernel() {
        // For a time-independent shock R = -E(ξ) ∫ψ(t,0)dt exactly.
        let b = flux_b();
        let up = (1.0 + 0.28_f64.sqrt()) / 2.0;
        let field = frozen_shock(0.1, up);
        let g = field.grid;
        let phi = PiecewiseLinear::hat(0.5, 0.25);
        let chi = PiecewiseLinear::interface_cutoff(4.0 * g.dx());
        let tf = TestFunction {
            label: "probe".into(),
            time: phi.clone(),
            space: chi,
        };
        let fam = TestFunctionFamily {
            functions: vec![tf.clone()],
        };
        for p in [0.0, 0.9] {
            let ps = vec![p; field.times.len()];
            let xi = [0.05];
            let rep = entropy_residual(&field, &ps, &b, &xi, &fam).unwrap();
            let shock = crate::admissibility::InterfaceShock {
                u_minus: 0.1,
                u_plus: up,
                p,
            };
            let e = crate::admissibility::entropy_kernel(&b, &shock, 0.05);
            let expect = -e * phi.integral(0.0, 1.0) / tf.norm_area();
            assert!((rep.worst - expect).abs() < 1e-12, "{} vs {}", rep.worst, expect);
        }
    }

    #[test]
    fn residual_is_linear_in_psi() {
        let b = flux_b();
        let field = frozen_shock(0.1, 0.5);
        let ps = vec![0.2; field.times.len()];
        let base = TestFunction {
            label: "a".into(),
            time: PiecewiseLinear::hat(0.5, 0.3),
            space: PiecewiseLinear::hat(0.1, 0.3),
        };
        let mut scaled = base.clone();
        for k in &mut scaled.space.knots {
            k.1 *= 3.0;
        }
        let one = |tf: &TestFunction| {
            let fam = TestFunctionFamily {
                functions: vec![tf.clone()],
            };
            entropy_residual(&field, &ps, &b, &[0.3], &fam).unwrap().worst * tf.norm_area()
        };
        assert!((one(&scaled) - 3.0 * one(&base)).abs() < 1e-12);
    }

    #[test]
    fn l1_distance_examples() {
        let g = grid();
        let a = SolutionField::frozen(g, vec![0.0, 1.0], vec![0.3; 100], 0.0, 1.0);
        let b = SolutionField::frozen(g, vec![0.0, 1.0], vec![0.4; 100], 0.0, 1.0);
        assert_eq!(l1_distance(&a, &a, 0.5).unwrap(), vec![0.0, 0.0]);
        // |x_j| <= 0.5 holds for 50 centers
        for d in l1_distance(&a, &b, 0.5).unwrap() {
            assert!((d - 0.1 * 50.0 * g.dx()).abs() < 1e-12);
        }
        let c = SolutionField::frozen(g, vec![0.0, 0.5], vec![0.4; 100], 0.0, 1.0);
        assert!(l1_distance(&a, &c, 0.5).is_err());
    }

    #[test]
    fn contraction_preconditions() {
        let b = flux_b();
        let g = Grid1D::new(-4.0, 4.0, 80).unwrap();
        let a = SolutionField::frozen(g, vec![0.0, 1.0], vec![0.3; 80], 0.0, 1.0);
        let rep = contraction_check(&b, &a, &a, 1.0, b.max_speed()).unwrap();
        assert!(rep.verdict && rep.lhs == 0.0);
        assert!(contraction_check(&b, &a, &a, 1.0, 1.0).is_err());
        assert!(contraction_check(&b, &a, &a, 2.5, b.max_speed()).is_err());
    }

    #[test]
    fn kato_boundary_examples() {
        let b = flux_b();
        let times = vec![0.0, 0.5, 1.0];
        let tr = |l: f64, r: f64| TraceSeries {
            times: times.clone(),
            left: vec![l; 3],
            right: vec![r; 3],
            p: vec![0.5; 3],
        };
        let up = (1.0 + 0.28_f64.sqrt()) / 2.0;
        let same = kato_boundary_check(&tr(0.1, up), &tr(0.1, up), &b).unwrap();
        assert!(same.s.iter().all(|s| s.s_value == 0.0));
        // uncrossed: u⁻ > v⁻ and u⁺ > v⁺, both satisfying RH
        let vp = (1.0 + (1.0 - 4.0 * 0.095_f64).sqrt()) / 2.0;
        let (um2, up2) = (0.1, up);
        let lower = (1.0 - (1.0 - 4.0 * 0.095_f64).sqrt()) / 2.0;
        let unc = kato_boundary_check(&tr(um2, up2), &tr(0.05, lower), &b).unwrap();
        assert!(unc.s.iter().all(|s| s.s_value.abs() < 1e-12));
        let crossed = kato_boundary_check(&tr(0.1, up), &tr(0.05, vp), &b).unwrap();
        assert!((crossed.integral - 0.17).abs() < 1e-12);
        let short = TraceSeries {
            times: vec![0.0],
            left: vec![0.1],
            right: vec![0.1],
            p: vec![0.1],
        };
        assert!(kato_boundary_check(&short, &tr(0.1, 0.1), &b).is_err());
    }
}
