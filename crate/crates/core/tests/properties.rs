use borninfeld::extraction::{Method, RadialPotential};
use borninfeld::fields::{
    approx_field, circulation, d_from_e, e_from_d, exact_born_potential, line_integral_potential, Path, Vec3,
};
use borninfeld::DipoleConfig;
use proptest::prelude::*;

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z)| {
            let v = Vec3::new(x, y, z);
            v * (1.0 / v.norm())
        })
}

proptest! {
    #[test]
    fn constitutive_round_trip(dir in unit_vector(), log_d in -11.0f64..1.0, log_b in -3.0f64..3.0) {
        let beta = 10f64.powf(log_b);
        let d = dir * (10f64.powf(log_d) / (beta * beta));
        let back = d_from_e(e_from_d(d, beta).unwrap(), beta).unwrap();
        prop_assert!((back - d).norm() <= 1e-12 * d.norm(), "{:?} -> {:?}", d, back);
    }

    #[test]
    fn field_stays_below_saturation(dir in unit_vector(), log_d in -5.0f64..15.0, beta in 0.01f64..3.0) {
        let d = 10f64.powf(log_d);
        let sat = beta * beta * e_from_d(dir * d, beta).unwrap().norm();
        // Beyond β²|D| ≈ 1e8 the gap to saturation is below one ulp of 1.
        if beta * beta * d <= 1e7 {
            prop_assert!(sat < 1.0, "{}", sat);
        } else {
            prop_assert!(sat <= 1.0, "{}", sat);
        }
    }

    #[test]
    fn born_potential_is_bounded_and_decreasing(s in 0.0f64..50.0, ds in 1e-3f64..5.0, beta in 0.05f64..2.0) {
        let a = exact_born_potential(s, beta).unwrap();
        let b = exact_born_potential(s + ds, beta).unwrap();
        prop_assert!(b < a);
        prop_assert!(a <= exact_born_potential(0.0, beta).unwrap());
        if s > 0.0 {
            prop_assert!(a < 1.0 / s);
        }
    }

    #[test]
    fn born_potential_scales_with_beta(s in 0.0f64..20.0, beta in 0.05f64..2.0, k in 0.5f64..4.0) {
        // φ(s; β) = φ(s/β; 1)/β.
        let lhs = exact_born_potential(k * s, k * beta).unwrap();
        let rhs = exact_born_potential(s, beta).unwrap() / k;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn approximate_field_is_bounded(x in -5.0f64..5.0, z in -5.0f64..5.0, beta in 0.05f64..2.0) {
        let cfg = DipoleConfig::new(2.0, beta).unwrap();
        let p = Vec3::new(x, 0.3, z);
        let e = approx_field(p, &cfg).unwrap();
        prop_assert!(e.norm() < 1.0 / (beta * beta));
    }

    #[test]
    fn maxwell_loops_have_no_circulation(
        x0 in 0.05f64..3.0, w in 0.1f64..3.0, z0 in -4.0f64..2.0, h in 0.1f64..3.0, r in 0.5f64..3.0,
    ) {
        let cfg = DipoleConfig::new(r, 0.0).unwrap();
        let lp = Path::meridian_rectangle((x0, x0 + w), (z0, z0 + h)).unwrap();
        prop_assert!(circulation(&lp, &cfg, 1e-10).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn maxwell_line_integrals_are_path_independent(x in 0.2f64..3.0, z in -3.0f64..3.0, bend in -2.0f64..2.0) {
        let cfg = DipoleConfig::new(2.0, 0.0).unwrap();
        let start = Vec3::new(4.0, 0.0, 5.0);
        let end = Vec3::new(x, 0.0, z);
        let direct = Path::open(vec![start, end]).unwrap();
        let bent = Path::open(vec![start, Vec3::new(5.0, 1.0, bend), end]).unwrap();
        let a = line_integral_potential(&direct, &cfg, 1e-11).unwrap();
        let b = line_integral_potential(&bent, &cfg, 1e-11).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn interpolated_potential_hits_its_samples(vals in prop::collection::vec(-3.0f64..-0.01, 2..12)) {
        let samples: Vec<(f64, f64)> = vals.iter().enumerate().map(|(k, v)| (0.2 + 0.5 * k as f64, *v)).collect();
        let pot = RadialPotential::new(&samples, 0.1, Method::PathA).unwrap();
        for &(r, v) in &samples {
            prop_assert!((pot.value(r) - v).abs() <= 1e-12 * v.abs());
        }
    }
}

#[test]
fn constitutive_examples() {
    let e = e_from_d(Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
    assert!((e.x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    let d = d_from_e(e, 1.0).unwrap();
    assert!((d.x - 1.0).abs() < 1e-15);
    assert!(d_from_e(Vec3::new(1.0, 0.0, 0.0), 1.0).is_err());
    let sat = e_from_d(Vec3::new(1e6, 0.0, 0.0), 1.0).unwrap();
    assert!((sat.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn large_distance_expansion() {
    let phi = exact_born_potential(10.0, 1.0).unwrap();
    assert!((phi - (0.1 - 1.0 / (10.0 * 1e5))).abs() < 1e-8);
}
