//! Cross-checks between the closed form, the sideband solver, the integrator
//! and the Jacobian, each against an independently written reference.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use omtx::model::{
    b_plus_closed_form, eta, f_denominator, steady_state_roots, OptomechParams, SteadyState,
};
use omtx::oracles::{
    demodulate, integrate_dynamics, jacobian_eigenvalues, linearized_response, sideband_matrix,
    time_domain_response, DynamicsOptions, EscapeCriterion, InitialState, TimeDomainSettings,
};
use omtx::sweep::{divergence_track, instability_threshold};
use omtx::{BranchPolicy, DriveConfig, Error};
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn reference() -> OptomechParams {
    OptomechParams::transistor_reference()
}

fn lower(p: &OptomechParams, e: f64) -> SteadyState {
    steady_state_roots(p, e).unwrap()[0]
}

/// 3×3 determinant by cofactor expansion along the first row.
fn det3(m: &Matrix3<Complex64>) -> Complex64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Cramer's rule for the first unknown with right-hand side (E_s, 0, 0).
fn cramer_b_plus(m: &Matrix3<Complex64>, e_signal: f64) -> Complex64 {
    let minor = m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    e_signal * minor / det3(m)
}

/// Hand-derived numerator of b₊ after eliminating c and Q₊:
/// (κ − iδ − iΔ_p)ωₘ² + iωₘG₀²w₀(η + 1).
fn derived_numerator(delta: f64, p: &OptomechParams, w0: f64) -> Complex64 {
    let eta = eta(delta, p).unwrap();
    Complex64::new(p.kappa, -delta - p.delta_p) * p.omega_m * p.omega_m
        + I * p.omega_m * p.g0 * p.g0 * w0 * (eta + 1.0)
}

#[test]
fn f_equals_eta_times_sideband_determinant() {
    let p = reference();
    for e in [0.0, 2.0, 6.0, 11.0] {
        let s = lower(&p, e);
        for delta in [-14.0, -10.0, -3.0, 0.5, 10.0, 13.0] {
            let m = sideband_matrix(delta, &p, &s);
            let oracle = eta(delta, &p).unwrap() * det3(&m);
            let f = f_denominator(delta, &p, s.w0).unwrap();
            assert!(
                (f - oracle).norm() <= 1e-11 * oracle.norm(),
                "E={e} δ={delta}"
            );
        }
    }
}

#[test]
fn sideband_solver_matches_cramer() {
    let p = reference();
    for e in [1.0, 5.0, 9.0] {
        let s = lower(&p, e);
        for delta in [-12.0, -10.0, -9.3, 8.0, 10.0, 12.7] {
            let m = sideband_matrix(delta, &p, &s);
            let oracle = cramer_b_plus(&m, 1e-3);
            let got = linearized_response(delta, &p, &s, 1e-3).unwrap().b_plus;
            assert!((got - oracle).norm() <= 1e-12 * oracle.norm());
        }
    }
}

#[test]
fn printed_closed_form_differs_from_sideband_solution_only_in_numerator() {
    let p = reference();
    let s = lower(&p, 7.0);
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let delta = p.omega_m - 3.0 * p.kappa + 6.0 * p.kappa * i as f64 / 40.0;
        let f = f_denominator(delta, &p, s.w0).unwrap();
        let derived = 1e-3 * derived_numerator(delta, &p, s.w0) / f;
        let oracle = linearized_response(delta, &p, &s, 1e-3).unwrap().b_plus;
        assert!((derived - oracle).norm() <= 1e-10 * oracle.norm());

        let printed = b_plus_closed_form(delta, &p, s.w0, 1e-3).unwrap();
        // the printed numerator carries G₀²w₀(η+1) without the factor ωₘ
        let eta = eta(delta, &p).unwrap();
        let gap = 1e-3 * I * p.g0 * p.g0 * s.w0 * (eta + 1.0) * (1.0 - p.omega_m) / f;
        assert!((printed - oracle - gap).norm() <= 1e-10 * oracle.norm());
        worst = worst.max((printed - oracle).norm() / oracle.norm());
    }
    assert!(worst > 1e-6, "forms unexpectedly agree: {worst}");
}

#[test]
fn printed_and_derived_forms_agree_when_photon_free() {
    let p = reference();
    for delta in [-11.0, -10.0, 0.0, 10.0] {
        let printed = b_plus_closed_form(delta, &p, 0.0, 1.0).unwrap();
        let oracle = linearized_response(delta, &p, &lower(&p, 0.0), 1.0)
            .unwrap()
            .b_plus;
        assert!((printed - oracle).norm() <= 1e-13 * oracle.norm());
    }
}

/// Companion-matrix roots of k²w³ − 2kΔ_p w² + (κ² + Δ_p²)w − E² = 0.
fn companion_roots(p: &OptomechParams, e: f64) -> Vec<f64> {
    let k = p.shift_per_photon();
    let a2 = -2.0 * p.delta_p / k;
    let a1 = (p.kappa * p.kappa + p.delta_p * p.delta_p) / (k * k);
    let a0 = -e * e / (k * k);
    let c = DMatrix::from_row_slice(3, 3, &[-a2, -a1, -a0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let mut r: Vec<f64> = c
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * z.norm().max(1.0) && z.re >= 0.0)
        .map(|z| z.re)
        .collect();
    r.sort_by(f64::total_cmp);
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn roots_match_companion_matrix(
        g0 in 0.2f64..2.0,
        omega_m in 2.0f64..20.0,
        kappa in 0.2f64..3.0,
        delta_p in -20.0f64..20.0,
        e in 0.1f64..60.0,
    ) {
        let p = OptomechParams::new(g0, omega_m, kappa, 0.5, delta_p).unwrap();
        let ours = steady_state_roots(&p, e).unwrap();
        let oracle = companion_roots(&p, e);
        // skip samples sitting on a fold, where the oracle itself is ill-conditioned
        let nearly_double = oracle.windows(2).any(|w| (w[1] - w[0]) < 1e-4 * w[1]);
        prop_assume!(!nearly_double);
        prop_assert_eq!(ours.len(), oracle.len());
        for (s, w) in ours.iter().zip(&oracle) {
            prop_assert!((s.w0 - w).abs() <= 1e-8 * w.max(1e-12), "{} vs {}", s.w0, w);
            prop_assert!(s.relative_residual(&p) < 1e-10);
        }
        if delta_p <= 0.0 {
            prop_assert_eq!(ours.len(), 1);
        }
    }

    #[test]
    fn eta_conjugation(delta in -50.0f64..50.0, gamma in 0.01f64..3.0) {
        let p = OptomechParams { gamma_m: gamma, ..reference() };
        let a = eta(-delta, &p).unwrap();
        let b = eta(delta, &p).unwrap().conj();
        prop_assert!((a - b).norm() <= 1e-14 * a.norm());
    }

    #[test]
    fn eps_independent_of_signal_strength(delta in -15.0f64..15.0, e in 0.0f64..10.0) {
        let p = reference();
        let s = lower(&p, e);
        let a = b_plus_closed_form(delta, &p, s.w0, 1e-3).unwrap() / 1e-3;
        let b = b_plus_closed_form(delta, &p, s.w0, 1e-2).unwrap() / 1e-2;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn empty_cavity_is_lorentzian(delta in -30.0f64..30.0, dp in -15.0f64..15.0) {
        let p = reference().with_delta_p(dp);
        let expect = Complex64::new(1.0, 0.0) / Complex64::new(p.kappa, dp - delta);
        let got = b_plus_closed_form(delta, &p, 0.0, 1.0).unwrap();
        prop_assert!((got - expect).norm() <= 1e-12 * expect.norm());
        let uncoupled = b_plus_closed_form(delta, &p.with_g0(0.0), 3.0, 1.0).unwrap();
        prop_assert!((uncoupled - expect).norm() <= 1e-12 * expect.norm());
    }
}

#[test]
fn time_domain_matches_sideband_solver() {
    let p = reference();
    let e = 6.0;
    let s = lower(&p, e);
    let settings = TimeDomainSettings::default();
    for delta in [
        p.omega_m - 2.0 * p.kappa,
        p.omega_m,
        p.omega_m + 1.5 * p.kappa,
    ] {
        let lin = linearized_response(delta, &p, &s, 1e-3 * e).unwrap().b_plus;
        let td = time_domain_response(delta, &p, &s, 1e-3 * e, &settings).unwrap();
        let rel = (td.b_plus_est - lin).norm() / lin.norm();
        assert!(rel < 5e-3, "δ={delta}: rel {rel}");
        assert!((td.b0_est - s.b0).norm() < 1e-3 * s.b0.norm());
        assert!(td.converged);
    }
}

#[test]
fn time_domain_converges_in_tolerance() {
    let p = reference();
    let s = lower(&p, 4.0);
    let delta = p.omega_m;
    let coarse = TimeDomainSettings {
        tolerance: 1e-8,
        ..Default::default()
    };
    let fine = TimeDomainSettings {
        tolerance: 0.5e-8,
        ..Default::default()
    };
    let a = time_domain_response(delta, &p, &s, 4e-3, &coarse)
        .unwrap()
        .b_plus_est;
    let b = time_domain_response(delta, &p, &s, 4e-3, &fine)
        .unwrap()
        .b_plus_est;
    assert!((a - b).norm() / b.norm() < 5e-3);
}

#[test]
fn demodulated_integration_recovers_sidebands() {
    let p = reference();
    let s = lower(&p, 5.0);
    let delta = -p.omega_m;
    let drive = DriveConfig::new(5.0, 5e-3, delta).unwrap();
    let period = 2.0 * std::f64::consts::PI / p.omega_m;
    let t_end = 10.0 / omtx::oracles::slowest_decay_rate(&p, &s) + 20.0 * period;
    let init = InitialState {
        b: s.b0,
        q: s.q0,
        v: 0.0,
    };
    let traj = integrate_dynamics(
        &p,
        &drive,
        init,
        t_end,
        &DynamicsOptions::new(1e-10, period / 32.0),
    )
    .unwrap();
    let r = demodulate(&traj, delta, 20).unwrap();
    let lin = linearized_response(delta, &p, &s, 5e-3).unwrap();
    assert!((r.b_plus_est - lin.b_plus).norm() < 5e-3 * lin.b_plus.norm());
    // idler sideband: b₋ = c*
    let idler = lin.b_minus_conj.conj();
    assert!((r.b_minus_est - idler).norm() < 2e-2 * idler.norm());
    assert!(r.residual < 0.01 * r.b0_est.norm());
}

#[test]
fn above_threshold_the_steady_state_is_left() {
    let p = reference();
    let e = 14.0;
    let s = lower(&p, e);
    let growth = s.leading_real_part();
    assert!(growth > 0.0);
    let drive = DriveConfig::new(e, 0.0, 0.0).unwrap();
    let mut opts = DynamicsOptions::new(1e-9, 0.05);
    opts.escape = EscapeCriterion::DeviationFromInitial(0.5 * s.b0.norm());
    let init = InitialState {
        b: s.b0 + Complex64::new(1e-6, 0.0),
        q: s.q0,
        v: 0.0,
    };
    match integrate_dynamics(&p, &drive, init, 40.0 / growth, &opts) {
        Err(Error::Divergence { time, .. }) => assert!(time.is_finite() && time > 0.0),
        other => panic!("expected escape, got {other:?}"),
    }
}

#[test]
fn below_threshold_the_steady_state_holds() {
    let p = reference();
    let s = lower(&p, 10.0);
    let drive = DriveConfig::new(10.0, 0.0, 0.0).unwrap();
    let init = InitialState {
        b: s.b0 + Complex64::new(1e-6, 0.0),
        q: s.q0,
        v: 0.0,
    };
    let traj =
        integrate_dynamics(&p, &drive, init, 50.0, &DynamicsOptions::new(1e-10, 0.1)).unwrap();
    assert!((traj.b.last().unwrap() - s.b0).norm() < 1e-6);
}

#[test]
fn uncoupled_eigenvalues_any_pump() {
    let p = reference().with_g0(0.0);
    let nu = (p.omega_m.powi(2) - p.gamma_m.powi(2) / 4.0).sqrt();
    for e in [0.0, 10.0, 100.0] {
        let ev = jacobian_eigenvalues(&p, &lower(&p, e));
        for expect in [
            Complex64::new(-p.kappa, p.delta_p),
            Complex64::new(-p.kappa, -p.delta_p),
            Complex64::new(-p.gamma_m / 2.0, nu),
            Complex64::new(-p.gamma_m / 2.0, -nu),
        ] {
            assert!(ev.iter().any(|z| (z - expect).norm() < 1e-9));
        }
    }
}

#[test]
fn threshold_anchor_and_divergence_tracking() {
    let p = reference();
    let thr = instability_threshold(&p, (1.0, 20.0), BranchPolicy::Lowest).unwrap();
    // bisection of the numpy eigenvalues of the same Jacobian
    assert!((thr / 12.442373525688495 - 1.0).abs() < 2e-6, "{thr}");

    let pumps: Vec<f64> = (0..=30).map(|i| i as f64 * 0.5).collect();
    let track = divergence_track(&p, &pumps, 4).unwrap();
    let argmin = track
        .iter()
        .min_by(|a, b| a.min_f.total_cmp(&b.min_f))
        .unwrap();
    assert!(
        (argmin.amplitude - thr).abs() <= 0.5,
        "{} vs {thr}",
        argmin.amplitude
    );
}

#[test]
fn signal_does_not_move_the_threshold() {
    use omtx::sweep::{transistor_curve, Axis, SweepSpec};
    use omtx::ResponseSettings;
    let p = reference();
    let grid = SweepSpec::linear(Axis::PumpAmplitude, 0.0, 15.0, 31);
    let st = ResponseSettings::default();
    let weak = transistor_curve(&p, &grid, 1e-4, 0.0, &st, 1).unwrap();
    let strong = transistor_curve(&p, &grid, 1e-1, 0.0, &st, 1).unwrap();
    assert!(weak.threshold_estimate.is_some());
    assert_eq!(weak.threshold_estimate, strong.threshold_estimate);
}
