use std::f64::consts::TAU;

use hopfinf_core::field::{det, norm, polar, trace};
use hopfinf_core::parse::parse_expr;
use hopfinf_core::{
    catalog_family, certify_class, certify_infinity_stability, divergence_integral, eigs2, flux, integrate,
    parse_field, winding_number, Direction, FlowControls, QuadratureControls, SampleGrid, ScaledField,
    SpectralClass, StabilityControls, StabilityVerdict, VectorField,
};
use proptest::prelude::*;

const CATALOG: [&str; 4] = ["rot", "focus", "inv", "rotinv"];

fn field_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(CATALOG.to_vec())
}

fn point(r_lo: f64, r_hi: f64) -> impl Strategy<Value = [f64; 2]> {
    (r_lo..r_hi, 0.0..TAU).prop_map(|(r, t)| polar(r, t))
}

/// Random DSL source over the full grammar, kept away from poles by
/// shifting denominators and square-root arguments.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("mu".to_string()),
        Just("r2".to_string()),
        (-5.0..5.0f64).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} / (2 + r2 + ({b})^2)")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), 0..4i32).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("atan2({a}, 1 + ({b})^2)")),
        ]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobian_matches_central_differences(name in field_name(), z in point(1.2, 20.0), mu in -1.0..1.0f64) {
        let f = catalog_family(name).unwrap();
        let jac = f.jet(z, mu).unwrap().jacobian;
        let h = 1e-6 * norm(z);
        for k in 0..2 {
            let (mut zp, mut zm) = (z, z);
            zp[k] += h;
            zm[k] -= h;
            let (vp, vm) = (f.eval(zp, mu).unwrap(), f.eval(zm, mu).unwrap());
            for i in 0..2 {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                prop_assert!(close(jac[i][k], fd, 1e-6), "{name} d{i}/d{k}: {} vs {fd}", jac[i][k]);
            }
        }
    }

    #[test]
    fn family_adds_mu_z(name in field_name(), z in point(1.05, 100.0), mu in -2.0..2.0f64) {
        let f = catalog_family(name).unwrap();
        let (a, b) = (f.eval(z, mu).unwrap(), f.eval(z, 0.0).unwrap());
        for i in 0..2 {
            prop_assert!(close(a[i] - b[i], mu * z[i], 1e-12));
        }
        let (ja, jb) = (f.jet(z, mu).unwrap().jacobian, f.jet(z, 0.0).unwrap().jacobian);
        prop_assert!(close(trace(&ja) - trace(&jb), 2.0 * mu, 1e-12));
    }

    #[test]
    fn printed_expression_reparses_to_same_values(src in expr_source()) {
        let e = parse_expr(&src).unwrap();
        let back = parse_expr(&e.to_string()).unwrap();
        for k in 0..100 {
            let t = k as f64 * 0.37;
            let (x, y, mu) = (3.0 * t.cos(), 2.0 * (1.3 * t).sin(), 0.1 * k as f64 - 5.0);
            let (u, v) = (e.eval(x, y, mu), back.eval(x, y, mu));
            prop_assert!(u == v || (u.is_nan() && v.is_nan()) || close(u, v, 1e-12), "{src}: {u} vs {v}");
        }
    }

    #[test]
    fn eigenvalues_reconstruct_trace_and_det(m in prop::array::uniform2(prop::array::uniform2(-1e3..1e3f64))) {
        let s = eigs2(&m).unwrap();
        let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        let sum = s.lambda1 + s.lambda2;
        let prod = s.lambda1 * s.lambda2;
        prop_assert!((sum.re - trace(&m)).abs() <= 1e-12 * scale && sum.im.abs() <= 1e-12 * scale);
        prop_assert!((prod.re - det(&m)).abs() <= 1e-10 * scale * scale && prod.im.abs() <= 1e-10 * scale * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn refined_grid_never_loses_violations(mu in -2.0..2.0f64, n_r in 8..16usize, n_t in 8..24usize) {
        // Trace 1 + 2 mu - r2/10 - x^2/5 changes sign inside the annulus.
        let f = parse_field("f = -y + x*(1 - r2/10) + mu*x; g = x + mu*y", 1.0).unwrap();
        let coarse = SampleGrid::new(1.1, 6.0, n_r, n_t);
        let fine = SampleGrid::new(1.1, 6.0, 2 * n_r, 3 * n_t);
        let a = certify_class(&f, mu, &coarse, SpectralClass::Dissipative).unwrap();
        let b = certify_class(&f, mu, &fine, SpectralClass::Dissipative).unwrap();
        prop_assert!(b.violation_count >= a.violation_count);
    }

    #[test]
    fn flux_shift_is_two_pi_mu_r_squared(name in field_name(), r in 1.5..50.0f64, mu in -1.0..1.0f64) {
        let f = catalog_family(name).unwrap();
        let qc = QuadratureControls::default();
        let shift = flux(&f, mu, r, &qc).unwrap().value - flux(&f, 0.0, r, &qc).unwrap().value;
        let want = TAU * mu * r * r;
        prop_assert!((shift - want).abs() <= 1e-9 * want.abs().max(1.0), "{shift} vs {want}");
    }

    #[test]
    fn winding_is_the_same_on_large_circles(name in field_name(), mu in -1.0..1.0f64) {
        let f = catalog_family(name).unwrap();
        let w: Vec<i64> = [5.0, 10.0, 20.0].iter().map(|&r| winding_number(&f, mu, r).unwrap().winding).collect();
        prop_assert!(w.iter().all(|&k| k == w[0]), "{w:?}");
    }

    #[test]
    fn green_identity_holds(name in field_name(), mu in -1.0..1.0f64, a in 1.5..20.0f64, width in 1.0..20.0f64) {
        let f = catalog_family(name).unwrap();
        let qc = QuadratureControls::default();
        let b = a + width;
        let d = divergence_integral(&f, mu, (a, b), &qc).unwrap();
        let (pa, pb) = (flux(&f, mu, a, &qc).unwrap(), flux(&f, mu, b, &qc).unwrap());
        let gap = (d.value - (pb.value - pa.value)).abs();
        prop_assert!(gap <= d.error + pa.error + pb.error, "gap {gap:e}");
    }

    #[test]
    fn reversed_field_runs_backward(name in field_name(), z0 in point(2.0, 6.0), mu in -0.5..0.5f64) {
        let f = catalog_family(name).unwrap();
        let rev = ScaledField::reversed(&f);
        let fc = FlowControls { t_max: 3.0, detect_loops: false, ..FlowControls::default() };
        let a = integrate(&f, mu, z0, Direction::Backward, &fc).unwrap();
        let b = integrate(&rev, mu, z0, Direction::Forward, &fc).unwrap();
        prop_assert_eq!(a.termination, b.termination);
        let (p, q) = (a.final_point(), b.final_point());
        prop_assert!(close(p[0], q[0], 1e-7) && close(p[1], q[1], 1e-7), "{p:?} vs {q:?}");
    }

    #[test]
    fn backward_orbits_stay_between_start_and_cycle(r0 in 3.0..7.0f64, t0 in 0.0..TAU) {
        // inv + z/25 has the repelling cycle |z| = 5; in backward time the
        // annulus between the start and the cycle is trapping.
        let f = catalog_family("inv").unwrap();
        let fc = FlowControls { t_max: 60.0, ..FlowControls::default() };
        let tr = integrate(&f, 0.04, polar(r0, t0), Direction::Backward, &fc).unwrap();
        let (lo, hi) = (r0.min(5.0) - 1e-6, r0.max(5.0) + 1e-6);
        prop_assert!(tr.points.iter().all(|p| (lo..=hi).contains(&norm(*p))));
    }
}

#[test]
fn reversal_swaps_stability() {
    let sc = StabilityControls::default();
    for name in CATALOG {
        let f = catalog_family(name).unwrap();
        let rev = ScaledField::reversed(&f);
        for mu in [-0.3, 0.3] {
            let a = certify_infinity_stability(&f, mu, &sc).unwrap().verdict;
            let b = certify_infinity_stability(&rev, mu, &sc).unwrap().verdict;
            assert_eq!(b, a.swapped(), "{name} at mu = {mu}");
            if name == "rot" {
                assert_ne!(a, StabilityVerdict::Undetermined);
            }
        }
    }
}
