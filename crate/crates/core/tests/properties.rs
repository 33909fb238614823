use proptest::prelude::*;

use qobb_core::bounds::{bound_report, moments_phase_cs, moments_phase_smsvs, moments_su2, PriorWindow};
use qobb_core::fock::{
    coherent_thermal, expectation, make_coherent, make_smsvs, qfi_pure, state_expectation, FockOperator, C64,
};
use qobb_core::measurement::{
    mmse, mmse_closed_form_su2, phase_model_cs, phase_model_smsvs, qubit_model, su2_model, OutcomeModel,
};
use qobb_core::quadrature::QuadratureSpec;
use qobb_core::scenarios::{parse_csv, render_csv, SweepRow};

const TOL: f64 = 1e-8;

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * (1.0 + y.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coherent_moments_match_oracle(n in 0.01f64..4.0) {
        let psi = make_coherent(C64::new(n.sqrt(), 0.0), 60).unwrap();
        let op = FockOperator::number(psi.space());
        let m = moments_phase_cs(n).unwrap();
        prop_assert!(close(state_expectation(&psi, &op).unwrap(), m.h_mean(), TOL));
        prop_assert!(close(state_expectation(&psi, &op.square()).unwrap(), m.h_sq_mean(), TOL));
        prop_assert!(close(qfi_pure(&psi, &op).unwrap(), m.qfi(), TOL));
    }

    #[test]
    fn squeezed_moments_match_oracle(n in 0.01f64..1.0) {
        let psi = make_smsvs(n.sqrt().asinh(), 100).unwrap();
        let op = FockOperator::number(psi.space());
        let m = moments_phase_smsvs(n).unwrap();
        prop_assert!(close(state_expectation(&psi, &op).unwrap(), m.h_mean(), TOL));
        prop_assert!(close(state_expectation(&psi, &op.square()).unwrap(), m.h_sq_mean(), TOL));
        prop_assert!(close(qfi_pure(&psi, &op).unwrap(), m.qfi(), TOL));
    }

    #[test]
    fn ordering_chain_holds(n in 0.01f64..20.0, beta_sq in 0.0f64..4.0, a in 0.05f64..6.0) {
        let w = PriorWindow::new(a).unwrap();
        for m in [moments_phase_cs(n).unwrap(), moments_phase_smsvs(n).unwrap(), moments_su2(beta_sq, n).unwrap()] {
            let r = bound_report(&m, &w).unwrap();
            prop_assert!(r.ordering_holds(1e-12), "{r:?}");
        }
    }

    #[test]
    fn models_are_normalized(x in -4.0f64..4.0, n in 0.0f64..10.0, v in 1u32..60) {
        let models: [Box<dyn OutcomeModel>; 4] = [
            Box::new(phase_model_cs(n).unwrap()),
            Box::new(phase_model_smsvs(n).unwrap()),
            Box::new(su2_model(1.0, n).unwrap()),
            Box::new(qubit_model(v).unwrap()),
        ];
        for m in &models {
            let p = m.probabilities(x);
            prop_assert_eq!(p.len(), m.outcome_count());
            prop_assert!(p.iter().all(|&q| (0.0..=1.0).contains(&q)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mmse_is_bracketed(n in 0.01f64..8.0, a in 0.1f64..3.0) {
        let w = PriorWindow::new(a).unwrap();
        let q = QuadratureSpec::default();
        let checks = [
            (mmse(&phase_model_cs(n).unwrap(), &w, &q).unwrap(), moments_phase_cs(n).unwrap()),
            (mmse(&su2_model(1.0, n).unwrap(), &w, &q).unwrap(), moments_su2(1.0, n).unwrap()),
        ];
        for (e, m) in checks {
            let r = bound_report(&m, &w).unwrap();
            prop_assert!(e >= r.qobb0 * (1.0 - 1e-12), "mmse {e} below qobb0 {}", r.qobb0);
            prop_assert!(e <= w.variance() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn su2_closed_form_matches_quadrature(beta_sq in 0.0f64..4.0, n_th in 0.01f64..5.0, a in 0.1f64..3.0) {
        let w = PriorWindow::new(a).unwrap();
        let quad = mmse(&su2_model(beta_sq, n_th).unwrap(), &w, &QuadratureSpec::default()).unwrap();
        prop_assert!((quad - mmse_closed_form_su2(beta_sq, n_th, a).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn csv_round_trips_bit_exact(
        vals in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>(), any::<f64>(), any::<f64>(), prop::option::of(any::<f64>())), 1..12)
    ) {
        let rows: Vec<SweepRow> = vals
            .into_iter()
            .filter(|v| ![v.0, v.1, v.2, v.3, v.4, v.5.unwrap_or(0.0)].iter().any(|x| x.is_nan()))
            .map(|(s, c, q0, q1, q2, m)| SweepRow { sweep_value: s, qcrb: c, qobb0: q0, qobb1: q1, qobb2: q2, mmse: m })
            .collect();
        let text = render_csv(&rows);
        prop_assert!(!text.contains('\r'));
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in back.iter().zip(&rows) {
            prop_assert_eq!(x.sweep_value.to_bits(), y.sweep_value.to_bits());
            prop_assert_eq!(x.qobb1.to_bits(), y.qobb1.to_bits());
            prop_assert_eq!(x.mmse.map(f64::to_bits), y.mmse.map(f64::to_bits));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn su2_moments_match_oracle(beta_sq in 0.1f64..1.5, n_th in 0.1f64..1.0) {
        let rho = coherent_thermal(C64::new(beta_sq.sqrt(), 0.0), n_th, 40).unwrap();
        let jy = FockOperator::j_y(rho.space()).unwrap();
        let m = moments_su2(beta_sq, n_th).unwrap();
        prop_assert!(close(expectation(&rho, &jy).unwrap(), m.h_mean(), TOL));
        prop_assert!(close(expectation(&rho, &jy.square()).unwrap(), m.h_sq_mean(), TOL));
    }
}
