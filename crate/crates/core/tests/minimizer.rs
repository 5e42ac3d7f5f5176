use borninfeld::minimizer::{
    action_gradient, build_grid, coulomb_pair_values, el_residual, max_saturation, minimize, minimize_with,
    read_solution, scaled_action, write_solution, AxisymGrid, Initialization, MinimizerOptions, PotentialSolution,
    SATURATION_MARGIN,
};
use borninfeld::{DipoleConfig, Error};

fn solve(grid: &AxisymGrid, cfg: &DipoleConfig, init: Initialization) -> PotentialSolution {
    let options = MinimizerOptions {
        init,
        ..MinimizerOptions::default()
    };
    minimize_with(grid, cfg, &options, None).unwrap()
}

fn setup(r: f64, beta: f64, n: usize, extent: f64) -> (AxisymGrid, DipoleConfig) {
    let cfg = DipoleConfig::new(r, beta).unwrap();
    (build_grid(&cfg, n, n, extent).unwrap(), cfg)
}

/// Deterministic pseudo-random direction supported on the free nodes.
fn direction(grid: &AxisymGrid, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut d = vec![0.0; grid.len()];
    for j in 0..grid.n_z() {
        for i in 0..grid.n_rho() {
            let v = next();
            if !grid.is_fixed(i, j) {
                d[grid.index(i, j)] = v;
            }
        }
    }
    d
}

#[test]
fn gradient_matches_central_differences() {
    for beta in [0.0, 0.3, 1.0] {
        let (grid, cfg) = setup(2.0, beta, 33, 5.0);
        let base: Vec<f64> = solve(&grid, &cfg, Initialization::default())
            .phi()
            .iter()
            .map(|v| 0.8 * v)
            .collect();
        let g = action_gradient(&base, &grid, &cfg).unwrap();
        for seed in 0..20 {
            let d = direction(&grid, seed);
            let eps = 1e-6;
            let at = |s: f64| {
                let p: Vec<f64> = base.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                scaled_action(&p, &grid, &cfg).unwrap()
            };
            let fd = (at(eps) - at(-eps)) / (2.0 * eps);
            let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            let rel = (fd - exact).abs() / exact.abs();
            assert!(rel < 1e-6, "beta={beta} seed={seed}: fd {fd} vs {exact} ({rel:e})");
        }
    }
}

#[test]
fn fixed_nodes_carry_no_gradient() {
    let (grid, cfg) = setup(2.0, 0.4, 33, 5.0);
    let phi = coulomb_pair_values(&grid, &cfg)
        .iter()
        .map(|v| 0.1 * v)
        .collect::<Vec<_>>();
    let g = action_gradient(&phi, &grid, &cfg).unwrap();
    for j in 0..grid.n_z() {
        for i in 0..grid.n_rho() {
            if grid.is_fixed(i, j) {
                assert_eq!(g[grid.index(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn infeasible_field_names_the_cell() {
    let (grid, cfg) = setup(2.0, 1.0, 33, 5.0);
    let mut phi = vec![0.0; grid.len()];
    phi[grid.index(3, 7)] = 50.0;
    match scaled_action(&phi, &grid, &cfg) {
        Err(Error::Constraint { i, j, value }) => {
            assert!((2..=3).contains(&i) && (6..=7).contains(&j), "({i}, {j})");
            assert!(value > 1.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn solutions_are_feasible_antisymmetric_and_converged() {
    for beta in [0.0, 0.3, 0.8] {
        let (grid, cfg) = setup(2.0, beta, 65, 5.0);
        let sol = solve(&grid, &cfg, Initialization::default());
        assert!(sol.report().converged);
        assert!(sol.report().gradient_norm <= 1e-8);
        assert!(max_saturation(&sol) <= 1.0 - SATURATION_MARGIN);
        for i in 0..grid.n_rho() {
            assert_eq!(sol.phi()[grid.index(i, 0)], 0.0);
        }
        assert!(sol.value_at(1.0, -0.5).unwrap() == -sol.value_at(1.0, 0.5).unwrap());
    }
}

#[test]
fn independent_starts_reach_the_same_minimizer() {
    let (grid, cfg) = setup(2.0, 0.5, 65, 5.0);
    let tol = MinimizerOptions::default().tolerance;
    let a = solve(&grid, &cfg, Initialization::Zero);
    let b = solve(&grid, &cfg, Initialization::CoulombPair);
    let c = solve(&grid, &cfg, Initialization::BornSuperposition);
    for other in [&b, &c] {
        let diff = a
            .phi()
            .iter()
            .zip(other.phi())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 10.0 * tol, "{diff:e}");
    }
}

/// Relative L² error against the Coulomb pair on the nodes of `coarse` at
/// least two coarse spacings from the charge.
fn maxwell_error(sol: &PotentialSolution, coarse: &AxisymGrid) -> f64 {
    let exact = coulomb_pair_values(coarse, sol.config());
    let zp = 0.5 * sol.config().separation();
    let h = coarse.h_rho().max(coarse.h_z());
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..coarse.n_z() {
        for i in 0..coarse.n_rho() {
            let (rho, z) = (coarse.rho(i), coarse.z(j));
            if rho.hypot(z - zp) < 2.0 * h - 1e-12 {
                continue;
            }
            let k = coarse.index(i, j);
            num += (sol.value_at(rho, z).unwrap() - exact[k]).powi(2);
            den += exact[k].powi(2);
        }
    }
    (num / den).sqrt()
}

#[test]
fn maxwell_limit_converges_at_second_order() {
    let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
    let coarse = build_grid(&cfg, 33, 33, 5.0).unwrap();
    let errors: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let grid = build_grid(&cfg, n, n, 5.0).unwrap();
            maxwell_error(&solve(&grid, &cfg, Initialization::default()), &coarse)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.5, "{errors:?}");
    }
}

#[test]
fn maxwell_residual_is_at_solver_level() {
    let (grid, cfg) = setup(2.0, 0.0, 65, 5.0);
    let sol = solve(&grid, &cfg, Initialization::default());
    assert!(el_residual(&sol) <= 10.0 * 1e-8, "{}", el_residual(&sol));
}

#[test]
fn axis_derivative_vanishes_under_refinement() {
    // One-sided ρ-difference at the axis, at the fixed height z = 2r.
    let slope = |n: usize| {
        let (grid, cfg) = setup(2.0, 0.3, n, 5.0);
        let sol = solve(&grid, &cfg, Initialization::default());
        let j = 4 * grid.source_row();
        assert_eq!(grid.z(j), 4.0);
        (sol.phi()[grid.index(1, j)] - sol.phi()[grid.index(0, j)]) / grid.h_rho()
    };
    let (coarse, fine) = (slope(65), slope(129));
    assert!(coarse.abs() / fine.abs() > 1.8, "{coarse} {fine}");
}

#[test]
fn maxwell_action_carries_the_divergent_self_energy() {
    // The point-charge self-energy makes Ã(φ_C) grow like 1/h at β = 0.
    let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
    let action = |n: usize| {
        let grid = build_grid(&cfg, n, n, 10.0).unwrap();
        scaled_action(&coulomb_pair_values(&grid, &cfg), &grid, &cfg).unwrap()
    };
    let (a, b) = (action(129), action(257));
    assert!(b < a && (b / a - 2.0).abs() < 0.1, "{a} {b}");
}

#[test]
fn born_infeld_action_converges_under_refinement() {
    let actions: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let (grid, cfg) = setup(2.0, 0.3, n, 5.0);
            solve(&grid, &cfg, Initialization::default()).report().action
        })
        .collect();
    let ratio = (actions[1] - actions[0]) / (actions[2] - actions[1]);
    assert!(ratio > 1.8, "{actions:?}");
}

#[test]
fn nonlinear_departure_lowers_the_potential_and_grows_with_beta() {
    // Deviation from the same-grid β = 0 solution at (ρ, z) = (1, 1).
    let cfg0 = DipoleConfig::new(2.0, 0.0).unwrap();
    let grid = build_grid(&cfg0, 65, 65, 5.0).unwrap();
    let maxwell = solve(&grid, &cfg0, Initialization::default()).value_at(1.0, 1.0).unwrap();
    let dev: Vec<f64> = [0.01, 0.02, 0.04, 0.08]
        .iter()
        .map(|&b| {
            let cfg = DipoleConfig::new(2.0, b).unwrap();
            solve(&grid, &cfg, Initialization::default()).value_at(1.0, 1.0).unwrap() - maxwell
        })
        .collect();
    assert!(dev.iter().all(|d| *d < 0.0), "{dev:?}");
    assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
    assert!(dev[0].abs() < 1e-6 * maxwell.abs(), "{dev:?}");
}

#[test]
fn persistence_is_bit_exact_and_reports_corruption() {
    let (grid, cfg) = setup(1.3, 0.37, 33, 6.0);
    let sol = solve(&grid, &cfg, Initialization::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    write_solution(&sol, &path).unwrap();
    let back = read_solution(&path).unwrap();
    assert_eq!(back.grid(), sol.grid());
    assert_eq!(back.config(), sol.config());
    assert!(back.phi().iter().zip(sol.phi()).all(|(a, b)| a.to_bits() == b.to_bits()));

    let copy = dir.path().join("copy.txt");
    write_solution(&back, &copy).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&copy).unwrap());

    let text = std::fs::read_to_string(&path).unwrap();
    let truncated: String = text.lines().take(40).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, truncated).unwrap();
    match read_solution(&path) {
        Err(Error::Format { path: p, .. }) => assert_eq!(p, path),
        other => panic!("{other:?}"),
    }
}

#[test]
fn repeated_solves_are_identical() {
    let (grid, cfg) = setup(0.7, 0.3, 65, 8.0);
    let a = minimize(&grid, &cfg, 1e-8, None).unwrap();
    let b = minimize(&grid, &cfg, 1e-8, None).unwrap();
    assert!(a.phi().iter().zip(b.phi()).all(|(x, y)| x.to_bits() == y.to_bits()));
}
