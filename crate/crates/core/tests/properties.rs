use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use naturalbc::field::{evaluate, kge_residual, CylindricalMode, FieldState, PhysicalConstants, SpacetimePoint};
use naturalbc::hypersurface::export::parse_mesh_csv;
use naturalbc::quantization::{bohr_sommerfeld_from_seam, quantize_seam};
use naturalbc::stress_energy::stress_energy_at;
use naturalbc::Averaging;

fn mode() -> impl Strategy<Value = CylindricalMode> {
    (0.1..2.0_f64, -4..=4_i32, 0.0..0.5_f64, -0.3..0.3_f64, 0.0..(2.0 * PI))
        .prop_map(|(a, l, kr, kz, ph)| CylindricalMode::new(a, l, kr, kz).with_phase(ph))
}

fn point() -> impl Strategy<Value = SpacetimePoint> {
    (-20.0..20.0_f64, 0.0..40.0_f64, 0.0..(2.0 * PI), -5.0..5.0_f64)
        .prop_map(|(t, r, th, z)| SpacetimePoint::cylindrical(t, r, th, z))
}

fn field(modes: Vec<CylindricalMode>) -> FieldState {
    FieldState::new(PhysicalConstants::natural(), modes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn superposition_is_linear(a in prop::collection::vec(mode(), 1..3), b in prop::collection::vec(mode(), 1..3), p in point()) {
        let (fa, fb) = (field(a), field(b));
        let sum = fa.superpose(&fb).unwrap();
        let (sa, sb, ss) = (evaluate(&fa, &p, false).unwrap(), evaluate(&fb, &p, false).unwrap(), evaluate(&sum, &p, false).unwrap());
        let scale = 1.0 + sa.phi.abs() + sb.phi.abs() + sa.d_t.abs() + sb.d_t.abs();
        prop_assert!((ss.phi - sa.phi - sb.phi).abs() < 1e-13 * scale);
        prop_assert!((ss.d_t - sa.d_t - sb.d_t).abs() < 1e-13 * scale);
        for k in 0..3 {
            prop_assert!((ss.grad[k] - sa.grad[k] - sb.grad[k]).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn every_mode_sum_solves_the_wave_equation(m in prop::collection::vec(mode(), 1..4), p in point()) {
        prop_assert!(kge_residual(&field(m), &p).unwrap() < 1e-10);
    }

    #[test]
    fn energy_density_is_quadratic_and_nonnegative(m in prop::collection::vec(mode(), 1..3), p in point(), s in 0.1..5.0_f64) {
        let f = field(m);
        for avg in [Averaging::Instantaneous, Averaging::CycleAveraged] {
            let a = stress_energy_at(&f, &p, avg).t00;
            let b = stress_energy_at(&f.scaled(s), &p, avg).t00;
            prop_assert!(a >= 0.0);
            prop_assert!((b - s * s * a).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn time_derivative_matches_central_difference(m in prop::collection::vec(mode(), 1..3), p in point()) {
        let f = field(m);
        let h = 1e-4;
        let at = |dt: f64| evaluate(&f, &SpacetimePoint { t: p.t + dt, ..p }, false).unwrap().phi;
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let exact = evaluate(&f, &p, false).unwrap().d_t;
        prop_assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn seam_rounding_recovers_integers(n in -40_i64..40, jitter in -0.45..0.45_f64) {
        let pc = PhysicalConstants::natural();
        let q = quantize_seam((n as f64 + jitter) * PI, &pc).unwrap();
        prop_assert_eq!(q.n_est, n);
        prop_assert!((q.n_residual - jitter.abs()).abs() < 1e-12);
    }

    #[test]
    fn loop_rule_ratio_is_seam_in_half_periods(dt in -100.0..100.0_f64, c in 0.5..3.0_f64, hbar in 0.5..3.0_f64, m in 0.5..3.0_f64) {
        let pc = PhysicalConstants::new(c, hbar, m).unwrap();
        let b = bohr_sommerfeld_from_seam(dt, &pc);
        prop_assert!(b.identity_residual < 1e-12);
        assert_relative_eq!(b.bs_ratio, dt * pc.omega0() / PI, max_relative = 1e-12, epsilon = 1e-300);
    }

    #[test]
    fn mesh_csv_parser_rejects_wrong_column_counts(cols in 1_usize..8) {
        prop_assume!(cols != 5);
        let row = vec!["1.0"; cols].join(",");
        let text = format!("r,theta,z,t_surface,seam_flag\n{row}\n");
        prop_assert!(parse_mesh_csv(&text).is_err());
    }
}
