//! Admissibility of stationary interface discontinuities.
//!
//! A shock `u = u⁻` for `x < 0`, `u = u⁺` for `x > 0` is a weak solution iff
//! `g(u⁻) = f(u⁺)`. It is entropy admissible with interface value `p` iff for
//! every `ξ`
//!
//! ```text
//! E(ξ) = sgn(u⁺-ξ)(f(u⁺)-f(ξ)) - sgn(u⁻-ξ)(g(u⁻)-g(ξ)) + sgn(p-ξ)(f(ξ)-g(ξ)) <= 0.
//! ```
//!
//! Two independent checks are provided: a brute-force scan of `E` over a
//! ξ-grid, and the case table that splits the state hull into ranges on which
//! `E` reduces to a single comparison.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::flux::{sgn, FluxPair, Side, DEFAULT_N_SCAN};

pub const DEFAULT_RH_TOL: f64 = 1e-8;
pub const DEFAULT_KERNEL_TOL: f64 = 1e-9;
pub const DEFAULT_N_XI: usize = 4096;

/// Root tolerance used when solving `f(u⁺) = g(u⁻)`.
const ROOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceShock {
    pub u_minus: f64,
    pub u_plus: f64,
    pub p: f64,
}

impl InterfaceShock {
    pub fn new(flux: &FluxPair, u_minus: f64, u_plus: f64, p: f64) -> Result<Self> {
        for (name, v) in [("u_minus", u_minus), ("u_plus", u_plus), ("p", p)] {
            if !(v >= flux.a() && v <= flux.b()) {
                return Err(Error::argument(format!(
                    "{name} = {v} outside [{}, {}]",
                    flux.a(),
                    flux.b()
                )));
            }
        }
        Ok(InterfaceShock { u_minus, u_plus, p })
    }

    pub fn hull(&self) -> (f64, f64) {
        let lo = self.u_minus.min(self.u_plus).min(self.p);
        let hi = self.u_minus.max(self.u_plus).max(self.p);
        (lo, hi)
    }
}

/// The range conditions of the case table, plus the Rankine–Hugoniot check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    I1,
    Ii1,
    Iii1,
    Iv1,
    V1,
    Vi1,
    I2,
    Ii2,
    Iii2,
    Iv2,
    V2,
    Vi2,
    Rh,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::I1 => "i1",
            Condition::Ii1 => "ii1",
            Condition::Iii1 => "iii1",
            Condition::Iv1 => "iv1",
            Condition::V1 => "v1",
            Condition::Vi1 => "vi1",
            Condition::I2 => "i2",
            Condition::Ii2 => "ii2",
            Condition::Iii2 => "iii2",
            Condition::Iv2 => "iv2",
            Condition::V2 => "v2",
            Condition::Vi2 => "vi2",
            Condition::Rh => "rh",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdict: bool,
    pub rh_residual: f64,
    /// Largest kernel value over the tested ξ (for the case checker: the
    /// largest condition margin, on the same scale as the kernel).
    pub worst_margin: f64,
    pub worst_xi: f64,
    pub violated_condition: Option<Condition>,
    /// Set when the case checker handed the decision to the grid scan.
    #[serde(default)]
    pub delegated: bool,
}

/// `g(u⁻) - f(u⁺)`.
pub fn rh_residual(flux: &FluxPair, shock: &InterfaceShock) -> f64 {
    flux.g(shock.u_minus) - flux.f(shock.u_plus)
}

/// The shock inserted into the interface entropy inequality.
pub fn entropy_kernel(flux: &FluxPair, shock: &InterfaceShock, xi: f64) -> f64 {
    let (fx, gx) = (flux.f(xi), flux.g(xi));
    sgn(shock.u_plus - xi) * (flux.f(shock.u_plus) - fx) - sgn(shock.u_minus - xi) * (flux.g(shock.u_minus) - gx)
        + sgn(shock.p - xi) * (fx - gx)
}

/// The same quantity with the interface term replaced by `-|f(ξ) - g(ξ)|`.
pub fn krt_kernel(flux: &FluxPair, u_minus: f64, u_plus: f64, xi: f64) -> f64 {
    let (fx, gx) = (flux.f(xi), flux.g(xi));
    sgn(u_plus - xi) * (flux.f(u_plus) - fx) - sgn(u_minus - xi) * (flux.g(u_minus) - gx) - (fx - gx).abs()
}

/// Midpoints of `n_xi` uniform subintervals of `[a, b]`.
pub fn xi_grid(flux: &FluxPair, n_xi: usize) -> Vec<f64> {
    let h = (flux.b() - flux.a()) / n_xi as f64;
    (0..n_xi).map(|k| flux.a() + (k as f64 + 0.5) * h).collect()
}

fn check_n_xi(n_xi: usize) -> Result<()> {
    if n_xi < 64 {
        return Err(Error::argument(format!("n_xi must be at least 64, got {n_xi}")));
    }
    Ok(())
}

/// Brute-force check of the kernel on the midpoint ξ-grid.
pub fn is_admissible_grid(
    flux: &FluxPair,
    shock: &InterfaceShock,
    n_xi: usize,
    kernel_tol: f64,
    rh_tol: f64,
) -> Result<AdmissibilityReport> {
    check_n_xi(n_xi)?;
    let rh = rh_residual(flux, shock);
    let (mut worst, mut worst_xi) = (f64::NEG_INFINITY, flux.a());
    for xi in xi_grid(flux, n_xi) {
        let e = entropy_kernel(flux, shock, xi);
        if e > worst {
            worst = e;
            worst_xi = xi;
        }
    }
    let rh_ok = rh.abs() <= rh_tol;
    let kernel_ok = worst <= kernel_tol;
    let violated_condition = if !rh_ok {
        Some(Condition::Rh)
    } else if !kernel_ok {
        case_ranges(shock).into_iter().find(|r| r.contains(worst_xi)).map(|r| r.condition)
    } else {
        None
    };
    Ok(AdmissibilityReport {
        verdict: rh_ok && kernel_ok,
        rh_residual: rh,
        worst_margin: worst,
        worst_xi,
        violated_condition,
        delegated: false,
    })
}

/// What a range condition compares. Each margin is the kernel value on that
/// range after eliminating `g(u⁻)` or `f(u⁺)` through Rankine–Hugoniot.
#[derive(Debug, Clone, Copy)]
enum Comparison {
    /// `f(ξ) <= g(ξ)`
    FBelowG,
    /// `g(ξ) <= f(ξ)`
    GBelowF,
    /// `f(ξ) <= f(u⁺)`
    FBelowFPlus,
    /// `g(ξ) <= g(u⁻)`
    GBelowGMinus,
    /// `g(u⁻) <= g(ξ)`
    GMinusBelowG,
    /// `f(u⁺) <= f(ξ)`
    FPlusBelowF,
}

#[derive(Debug, Clone, Copy)]
struct CaseRange {
    condition: Condition,
    lo: f64,
    hi: f64,
    comparison: Comparison,
}

impl CaseRange {
    fn contains(&self, xi: f64) -> bool {
        xi >= self.lo && xi <= self.hi
    }

    fn margin(&self, flux: &FluxPair, shock: &InterfaceShock, xi: f64) -> f64 {
        let d = match self.comparison {
            Comparison::FBelowG => flux.f(xi) - flux.g(xi),
            Comparison::GBelowF => flux.g(xi) - flux.f(xi),
            Comparison::FBelowFPlus => flux.f(xi) - flux.f(shock.u_plus),
            Comparison::GBelowGMinus => flux.g(xi) - flux.g(shock.u_minus),
            Comparison::GMinusBelowG => flux.g(shock.u_minus) - flux.g(xi),
            Comparison::FPlusBelowF => flux.f(shock.u_plus) - flux.f(xi),
        };
        2.0 * d
    }
}

/// The two ranges that cover the state hull for the shock's ordering.
fn case_ranges(shock: &InterfaceShock) -> [CaseRange; 2] {
    use Comparison::*;
    use Condition::*;
    let (um, up, p) = (shock.u_minus, shock.u_plus, shock.p);
    let r = |condition, lo, hi, comparison| CaseRange {
        condition,
        lo,
        hi,
        comparison,
    };
    if up <= um {
        if um <= p {
            [r(I1, um, p, FBelowG), r(Ii1, up, um, FBelowFPlus)]
        } else if up <= p {
            [r(Iii1, p, um, GBelowGMinus), r(Iv1, up, p, FBelowFPlus)]
        } else {
            // On p <= u⁺ <= ξ <= u⁻ the kernel equals 2(g(ξ) - g(u⁻)).
            [r(V1, up, um, GBelowGMinus), r(Vi1, p, up, GBelowF)]
        }
    } else if up <= p {
        [r(I2, up, p, FBelowG), r(Ii2, um, up, GMinusBelowG)]
    } else if um <= p {
        [r(Iii2, p, up, FPlusBelowF), r(Iv2, um, p, GMinusBelowG)]
    } else {
        [r(V2, um, up, FPlusBelowF), r(Vi2, p, um, GBelowF)]
    }
}

/// Case-table check. The shock must satisfy Rankine–Hugoniot within `tol`;
/// each range condition is then verified on the ξ-grid points inside its range.
/// A failing report names the condition holding the largest margin.
///
/// Exact ties between states are resolved by the first matching branch (the
/// two candidate branches impose the same conditions there). If a grid point
/// coincides with one of the states, the verdict is taken from the grid scan
/// and the report is marked as delegated.
pub fn is_admissible_cases(
    flux: &FluxPair,
    shock: &InterfaceShock,
    n_xi: usize,
    tol: f64,
) -> Result<AdmissibilityReport> {
    check_n_xi(n_xi)?;
    let rh = rh_residual(flux, shock);
    if rh.abs() > tol {
        return Ok(AdmissibilityReport {
            verdict: false,
            rh_residual: rh,
            worst_margin: f64::NAN,
            worst_xi: f64::NAN,
            violated_condition: Some(Condition::Rh),
            delegated: false,
        });
    }
    let grid = xi_grid(flux, n_xi);
    let tie = 1e-14 * (flux.b() - flux.a());
    let states = [shock.u_minus, shock.u_plus, shock.p];
    if grid.iter().any(|xi| states.iter().any(|s| (s - xi).abs() <= tie)) {
        let mut report = is_admissible_grid(flux, shock, n_xi, tol, tol)?;
        report.delegated = true;
        return Ok(report);
    }

    let ranges = case_ranges(shock);
    let (mut worst, mut worst_xi) = (f64::NEG_INFINITY, f64::NAN);
    let mut violated = None;
    for range in ranges {
        for &xi in grid.iter().filter(|&&xi| range.contains(xi)) {
            let m = range.margin(flux, shock, xi);
            if m > worst {
                worst = m;
                worst_xi = xi;
            }
            if m > tol && m >= worst {
                violated = Some(range.condition);
            }
        }
    }
    if worst_xi.is_nan() {
        // every range is free of grid points
        worst = 0.0;
    }
    Ok(AdmissibilityReport {
        verdict: violated.is_none(),
        rh_residual: rh,
        worst_margin: worst,
        worst_xi,
        violated_condition: violated,
        delegated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KatoConfiguration {
    /// `u⁻ > v⁻` and `u⁺ < v⁺`.
    Crossed1,
    /// `u⁻ < v⁻` and `u⁺ > v⁺`.
    Crossed2,
    Uncrossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoResult {
    pub s_value: f64,
    pub configuration: KatoConfiguration,
}

impl KatoResult {
    /// For uncrossed pairs that satisfy Rankine–Hugoniot `S` is zero in theory.
    pub fn zero_by_theory(&self) -> bool {
        self.configuration == KatoConfiguration::Uncrossed
    }
}

/// Boundary term of the Kato inequality at the interface:
/// `S = -sgn(u⁺-v⁺)(f(u⁺)-f(v⁺)) + sgn(u⁻-v⁻)(g(u⁻)-g(v⁻))`.
pub fn kato_s(flux: &FluxPair, u: (f64, f64), v: (f64, f64)) -> KatoResult {
    let (um, up) = u;
    let (vm, vp) = v;
    let s_value = -sgn(up - vp) * (flux.f(up) - flux.f(vp)) + sgn(um - vm) * (flux.g(um) - flux.g(vm));
    let configuration = if um > vm && up < vp {
        KatoConfiguration::Crossed1
    } else if um < vm && up > vp {
        KatoConfiguration::Crossed2
    } else {
        KatoConfiguration::Uncrossed
    };
    KatoResult {
        s_value,
        configuration,
    }
}

/// `n` evenly spaced values covering `[a, b]` including both ends.
pub fn state_samples(flux: &FluxPair, n: usize) -> Vec<f64> {
    let h = (flux.b() - flux.a()) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { flux.b() } else { flux.a() + i as f64 * h })
        .collect()
}

/// All `u⁺` in `[a, b]` with `f(u⁺) = g(u⁻)`.
pub fn rh_partners(flux: &FluxPair, u_minus: f64) -> Vec<f64> {
    flux.inverse(Side::Right, flux.g(u_minus), DEFAULT_N_SCAN, ROOT_TOL)
}

/// Every Rankine–Hugoniot shock reachable from `n_states` left states, paired
/// with `n_states` interface values and the grid verdict for each.
pub fn enumerate_stationary_shocks(
    flux: &FluxPair,
    n_states: usize,
    n_xi: usize,
) -> Result<Vec<(InterfaceShock, AdmissibilityReport)>> {
    if n_states < 16 {
        return Err(Error::argument(format!("n_states must be at least 16, got {n_states}")));
    }
    check_n_xi(n_xi)?;
    let states = state_samples(flux, n_states);
    let shocks: Vec<InterfaceShock> = states
        .iter()
        .flat_map(|&um| {
            rh_partners(flux, um)
                .into_iter()
                .flat_map(|up| states.iter().map(move |&p| InterfaceShock { u_minus: um, u_plus: up, p }))
                .collect::<Vec<_>>()
        })
        .collect();
    shocks
        .into_par_iter()
        .map(|s| {
            is_admissible_grid(flux, &s, n_xi, DEFAULT_KERNEL_TOL, DEFAULT_RH_TOL).map(|r| (s, r))
        })
        .collect()
}

/// Distinct `(u⁻, u⁺)` pairs admissible for at least one tested `p`, in
/// enumeration order, each with the first admissible `p`.
pub fn admissible_states(enumeration: &[(InterfaceShock, AdmissibilityReport)]) -> Vec<InterfaceShock> {
    let mut out: Vec<InterfaceShock> = Vec::new();
    for (shock, _) in enumeration.iter().filter(|(_, r)| r.verdict) {
        if !out.iter().any(|l| l.u_minus == shock.u_minus && l.u_plus == shock.u_plus) {
            out.push(*shock);
        }
    }
    out
}

/// Random Rankine–Hugoniot shocks: `u⁻` and `p` uniform on `[a, b]`, `u⁺`
/// a uniformly chosen partner of `u⁻`.
pub fn sample_rh_shocks<R: Rng>(flux: &FluxPair, n: usize, rng: &mut R) -> Vec<InterfaceShock> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let um = rng.gen_range(flux.a()..=flux.b());
        let partners = rh_partners(flux, um);
        if partners.is_empty() {
            continue;
        }
        let up = partners[rng.gen_range(0..partners.len())];
        let p = rng.gen_range(flux.a()..=flux.b());
        out.push(InterfaceShock { u_minus: um, u_plus: up, p });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::presets::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // u⁺ with u(1-u) = 0.18 on the upper branch
    fn up_b() -> f64 {
        (1.0 + 0.28_f64.sqrt()) / 2.0
    }

    fn shock(um: f64, up: f64, p: f64) -> InterfaceShock {
        InterfaceShock {
            u_minus: um,
            u_plus: up,
            p,
        }
    }

    #[test]
    fn shock_validation() {
        let b = flux_b();
        assert!(InterfaceShock::new(&b, 0.1, 0.5, 0.9).is_ok());
        assert!(InterfaceShock::new(&b, 0.1, 1.5, 0.9).is_err());
        assert!(InterfaceShock::new(&b, 0.1, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn rh_examples() {
        assert_eq!(rh_residual(&flux_a(), &shock(0.3, 0.3, 0.3)), 0.0);
        assert!(rh_residual(&flux_b(), &shock(0.1, 0.76458, 0.9)).abs() < 1e-4);
        assert_abs_diff_eq!(rh_residual(&flux_b(), &shock(0.1, 0.5, 0.9)), -0.07, epsilon = 1e-14);
    }

    #[test]
    fn kernel_examples() {
        let a = flux_a();
        for i in 0..=20 {
            assert_eq!(entropy_kernel(&a, &shock(0.3, 0.3, 0.3), i as f64 / 20.0), 0.0);
        }
        let b = flux_b();
        assert_abs_diff_eq!(entropy_kernel(&b, &shock(0.1, 0.76458, 0.9), 0.5), -0.64, epsilon = 1e-4);
        assert_abs_diff_eq!(krt_kernel(&b, 0.1, 0.76458, 0.5), -0.64, epsilon = 1e-4);
        assert_eq!(krt_kernel(&a, 0.3, 0.3, 0.7), 0.0);
    }

    #[test]
    fn kernel_vanishes_outside_hull() {
        let b = flux_b();
        let s = shock(0.1, up_b(), 0.9);
        for xi in [0.0, 0.03, 0.09, 0.91, 0.95, 1.0] {
            assert!(entropy_kernel(&b, &s, xi).abs() <= 1e-12);
        }
    }

    #[test]
    fn grid_examples() {
        let r = is_admissible_grid(&flux_a(), &shock(0.3, 0.3, 0.3), 4096, 1e-9, 1e-8).unwrap();
        assert!(r.verdict);
        assert_eq!(r.worst_margin, 0.0);

        let b = flux_b();
        let r = is_admissible_grid(&b, &shock(0.1, up_b(), 0.9), 4096, 1e-9, 1e-8).unwrap();
        assert!(r.verdict, "{r:?}");

        let r = is_admissible_grid(&b, &shock(0.1, up_b(), 0.0), 4096, 1e-9, 1e-8).unwrap();
        assert!(!r.verdict);
        assert!(r.worst_xi > 0.0 && r.worst_xi < 0.1);
        // E = 2 xi (1 - xi) there, maximal at the right end of (0, 0.1)
        assert_abs_diff_eq!(r.worst_margin, 2.0 * r.worst_xi * (1.0 - r.worst_xi), epsilon = 1e-12);
        assert_eq!(r.violated_condition, Some(Condition::Vi2));

        assert!(is_admissible_grid(&b, &shock(0.1, 0.5, 0.9), 4096, 1e-9, 1e-8)
            .unwrap()
            .violated_condition
            .is_some_and(|c| c == Condition::Rh));
        assert!(is_admissible_grid(&b, &shock(0.1, 0.5, 0.9), 32, 1e-9, 1e-8).is_err());
    }

    #[test]
    fn case_examples() {
        let b = flux_b();
        let r = is_admissible_cases(&b, &shock(0.1, up_b(), 0.9), 4096, 1e-9).unwrap();
        assert!(r.verdict && !r.delegated, "{r:?}");

        let r = is_admissible_cases(&b, &shock(0.1, up_b(), 0.0), 4096, 1e-9).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.violated_condition, Some(Condition::Vi2));

        let r = is_admissible_cases(&flux_a(), &shock(0.3, 0.3, 0.3), 4096, 1e-9).unwrap();
        assert!(r.verdict);

        let r = is_admissible_cases(&b, &shock(0.1, 0.5, 0.9), 4096, 1e-9).unwrap();
        assert_eq!(r.violated_condition, Some(Condition::Rh));
    }

    #[test]
    fn case_ranges_reproduce_kernel_values() {
        // On each range the margin must equal the kernel itself for RH shocks.
        let c = flux_c();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in sample_rh_shocks(&c, 300, &mut rng) {
            for range in case_ranges(&s) {
                // interior points only: at xi equal to a state sgn(0) = 0 halves some terms
                for k in 1..16 {
                    let xi = range.lo + (range.hi - range.lo) * k as f64 / 16.0;
                    let e = entropy_kernel(&c, &s, xi);
                    assert!((range.margin(&c, &s, xi) - e).abs() < 1e-10, "{:?} {s:?} xi={xi}", range.condition);
                }
            }
        }
    }

    #[test]
    fn v1_range_uses_left_flux() {
        // p <= u⁺ <= ξ <= u⁻ on FLUX-C, with u⁺ < u⁻ on the same level of f.
        let c = flux_c();
        let um = 0.8;
        let up = *rh_partners(&c, um).first().unwrap();
        assert!(up < um);
        let s = shock(um, up, 0.0);
        let ranges = case_ranges(&s);
        assert_eq!(ranges[0].condition, Condition::V1);
        let xi = 0.5 * (up + um);
        assert_abs_diff_eq!(
            entropy_kernel(&c, &s, xi),
            2.0 * (c.g(xi) - c.g(um)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kato_examples() {
        let b = flux_b();
        let r = kato_s(&b, (0.3, 0.4), (0.3, 0.4));
        assert_eq!(r.s_value, 0.0);
        assert_eq!(r.configuration, KatoConfiguration::Uncrossed);

        let vp = (1.0 + (1.0 - 4.0 * 0.095_f64).sqrt()) / 2.0;
        assert_abs_diff_eq!(vp, 0.89373, epsilon = 1e-4);
        let r = kato_s(&b, (0.1, up_b()), (0.05, vp));
        assert_eq!(r.configuration, KatoConfiguration::Crossed1);
        assert_abs_diff_eq!(r.s_value, 0.17, epsilon = 1e-12);
        assert_abs_diff_eq!(r.s_value, 2.0 * (b.g(0.1) - b.g(0.05)), epsilon = 1e-12);
        let back = kato_s(&b, (0.05, vp), (0.1, up_b()));
        assert_eq!(back.s_value, r.s_value);
        assert_eq!(back.configuration, KatoConfiguration::Crossed2);
    }

    #[test]
    fn enumeration_examples() {
        let a = flux_a();
        let en = enumerate_stationary_shocks(&a, 16, 256).unwrap();
        for c in state_samples(&a, 16) {
            assert!(en.iter().any(|(s, r)| s.u_minus == c && (s.u_plus - c).abs() < 1e-12 && r.verdict));
        }

        let b = flux_b();
        let en = enumerate_stationary_shocks(&b, 16, 256).unwrap();
        assert!(!en.is_empty());
        for (s, _) in &en {
            assert!(b.g(s.u_minus) <= 0.25 + 1e-12);
        }

        let c = flux_c();
        let en = enumerate_stationary_shocks(&c, 16, 256).unwrap();
        let adm = admissible_states(&en);
        assert!(adm.iter().any(|s| (s.u_minus - s.u_plus).abs() < 1e-12));
        assert!(enumerate_stationary_shocks(&c, 8, 256).is_err());
    }

    #[test]
    fn enumeration_is_deterministic() {
        let c = flux_c();
        let x = enumerate_stationary_shocks(&c, 16, 128).unwrap();
        let y = enumerate_stationary_shocks(&c, 16, 128).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn constant_state_kernel_reduces() {
        // (c, c, c): E(xi) = sgn(c - xi)(f(c) - g(c)), no RH needed
        for flux in [flux_a(), flux_b(), flux_c()] {
            for k in 0..=20 {
                let c0 = k as f64 / 20.0;
                let s = shock(c0, c0, c0);
                for xi in xi_grid(&flux, 256) {
                    let e = entropy_kernel(&flux, &s, xi);
                    assert!((e - sgn(c0 - xi) * flux.gap(c0)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn equal_states_at_a_crossing() {
        // (c, c, p) with f(c) = g(c): E = (sgn(p - xi) - sgn(c - xi))(f - g)(xi),
        // which vanishes identically only when f = g between c and p.
        let c = flux_c();
        for cross in [0.25, 0.5, 0.75] {
            let crossing = crate::flux::bisect(|u| c.gap(u), cross - 0.01, cross + 0.01, 1e-15);
            for k in 0..=10 {
                let s = shock(crossing, crossing, k as f64 / 10.0);
                for xi in xi_grid(&c, 512) {
                    let e = entropy_kernel(&c, &s, xi);
                    let want = (sgn(s.p - xi) - sgn(crossing - xi)) * c.gap(xi);
                    assert!((e - want).abs() <= 1e-12);
                }
            }
        }
        let a = flux_a();
        for c0 in [0.0, 0.2, 0.7, 1.0] {
            for k in 0..=10 {
                let s = shock(c0, c0, k as f64 / 10.0);
                let r = is_admissible_grid(&a, &s, 256, 1e-9, 1e-8).unwrap();
                assert!(r.verdict && r.worst_margin == 0.0);
            }
        }
    }
}
