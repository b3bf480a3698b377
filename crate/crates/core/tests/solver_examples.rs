use discflux::admissibility::{is_admissible_grid, DEFAULT_KERNEL_TOL};
use discflux::flux::presets::{flux_a, flux_b};
use discflux::solver::{p_epsilon, solve_fv, solve_viscous};
use discflux::{Grid1D, InitialProfile, InterfaceShock, SolverConfig};

fn grid800() -> Grid1D {
    Grid1D::new(-4.0, 4.0, 800).unwrap()
}

fn crossing(grid: &Grid1D, u: &[f64], level: f64) -> f64 {
    let j = (1..u.len()).find(|&j| (u[j - 1] - level) * (u[j] - level) <= 0.0).unwrap();
    let (x0, x1) = (grid.center(j - 1), grid.center(j));
    x0 + (level - u[j - 1]) / (u[j] - u[j - 1]) * (x1 - x0)
}

#[test]
fn burgers_shock_moves_at_half_speed() {
    let grid = grid800();
    let u0 = InitialProfile::Riemann { u_left: 1.0, u_right: 0.0 };
    let field = solve_fv(&flux_a(), &u0, &grid, &SolverConfig::new(0.0, 1.0).with_store_every(50)).unwrap();
    let x = crossing(&grid, field.final_values(), 0.5);
    assert!((x - 0.5).abs() <= 3.0 * grid.dx(), "shock at {x}");
}

#[test]
fn burgers_rarefaction_matches_fan() {
    let grid = Grid1D::new(-2.0, 2.0, 800).unwrap();
    let u0 = InitialProfile::Riemann { u_left: 0.0, u_right: 1.0 };
    let field = solve_fv(&flux_a(), &u0, &grid, &SolverConfig::new(0.0, 1.0).with_store_every(50)).unwrap();
    let exact = |x: f64| x.clamp(0.0, 1.0);
    let err: f64 = field
        .final_values()
        .iter()
        .enumerate()
        .map(|(j, u)| (u - exact(grid.center(j))).abs() * grid.dx())
        .sum();
    assert!(err <= 0.02, "L1 error {err}");
}

#[test]
fn viscous_burgers_travelling_wave() {
    // u = 1 / (1 + exp((x - t/2) / (2 eps))) solves u_t + (u^2/2)_x = eps u_xx
    let eps = 0.05;
    let grid = Grid1D::new(-2.0, 2.0, 800).unwrap();
    let wave = |t: f64, x: f64| 1.0 / (1.0 + ((x - 0.5 * t) / (2.0 * eps)).exp());
    let points: Vec<(f64, f64)> = grid.centers().into_iter().map(|x| (x, wave(0.0, x))).collect();
    let u0 = InitialProfile::Table { points };
    let field = solve_viscous(&flux_a(), &u0, &grid, &SolverConfig::new(eps, 1.0).with_store_every(100)).unwrap();
    let err = field
        .final_values()
        .iter()
        .enumerate()
        .map(|(j, u)| (u - wave(1.0, grid.center(j))).abs())
        .fold(0.0, f64::max);
    assert!(err < 0.02, "max error {err}");
}

#[test]
fn stationary_admissible_shock_stays_put() {
    // g(0.1) = 0.18 = f(u+) on the upper branch; p = 1 admits it.
    let flux = flux_b();
    let up = (1.0 + 0.28_f64.sqrt()) / 2.0;
    let shock = InterfaceShock::new(&flux, 0.1, up, 1.0).unwrap();
    assert!(is_admissible_grid(&flux, &shock, 4096, DEFAULT_KERNEL_TOL, 1e-12).unwrap().verdict);

    let grid = grid800();
    let u0 = InitialProfile::Riemann { u_left: 0.1, u_right: up };

    let fv = solve_fv(&flux, &u0, &grid, &SolverConfig::new(0.0, 1.0).with_store_every(10)).unwrap();
    // the layer is a few cells wide; outside it both states are untouched
    let k = grid.n_left();
    let u = fv.final_values();
    assert!(u[..k - 4].iter().all(|v| (v - 0.1).abs() < 1e-6));
    assert!(u[k + 4..].iter().all(|v| (v - up).abs() < 1e-6));
    assert!(fv.mass_defect() < 1e-12);

    // the interface value settles once the viscous layer has formed
    let visc = solve_viscous(&flux, &u0, &grid, &SolverConfig::new(0.0125, 1.0).with_store_every(10)).unwrap();
    let p = p_epsilon(&visc);
    let n = p.len();
    let spread = p[n / 2..].iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - p[n / 2..].iter().fold(f64::INFINITY, |m, v| m.min(*v));
    assert!(spread < 0.02, "p spread {spread}");
    assert!(visc.satisfies_max_principle(1e-10));
}
