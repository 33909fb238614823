//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::process::ExitCode;

use nalgebra::DVector;
use qobb_core::bias::{bound_integral, solve_bias_bvp, BiasGrid, VariationalProblem};
use qobb_core::bounds::{
    bound_report, moments_phase_cs, moments_phase_smsvs, moments_su2, qobb_closed_form, MomentSet, PriorWindow,
};
use qobb_core::fock::{
    born_prob, coherent_thermal, expectation, make_coherent, make_smsvs, qfi_mixed, qfi_pure, state_expectation,
    Effect, EvolvePhase, FockOperator, FockState, Truncation, C64,
};
use qobb_core::measurement::{
    mmse, mmse_closed_form_phase, mmse_closed_form_su2, phase_model_cs, phase_model_smsvs, qubit_model, su2_model,
    OutcomeModel, PhaseProbe,
};
use qobb_core::quadrature::{uniform_grid, QuadratureSpec};
use qobb_core::scenarios::{
    emit_csv, emit_svg, parse_csv, render_csv, run_sweep, PlotStyle, Scenario, ScenarioId, SweepRow,
};
use qobb_core::Result;

const A: f64 = FRAC_PI_2;

// Tolerances, one block per criterion.
const BOUND_IDENTITY_TOL: f64 = 1e-8;
const BOUND_IDENTITY_NODES: usize = 100_001;
const BVP_TOL: f64 = 1e-6;
const BVP_NODES: usize = 4097;
const RICHARDSON_BAND: (f64, f64) = (3.5, 4.5);
const LIMIT_REL_TOL: f64 = 1e-6;
const LIMIT_WIDE_TOL: f64 = 1e-5;
const ORDERING_SLACK: f64 = 1e-12;
const MOMENT_TOL: f64 = 1e-8;
const PROBABILITY_TOL: f64 = 1e-10;
const QFI_TOL: f64 = 2e-3;
const MMSE_CROSS_TOL: f64 = 1e-9;
const SATURATION_FACTOR: f64 = 2.0;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn max_abs(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn bound_identity() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for k in [0.1, 1.0, 4.0, 16.0, 100.0] {
        for a in [0.1, FRAC_PI_2, PI] {
            let p = VariationalProblem::uniform(k, a, BOUND_IDENTITY_NODES)?;
            let b = BiasGrid::analytic(k, a, BOUND_IDENTITY_NODES)?;
            worst = worst.max((bound_integral(&b, &p)? - qobb_closed_form(k, a)?).abs());
        }
    }
    Ok(verdict(
        worst <= BOUND_IDENTITY_TOL,
        format!("max |functional - closed form| = {worst:e} (tol {BOUND_IDENTITY_TOL:e})"),
    ))
}

fn bvp_convergence() -> Result<Verdict> {
    let mut worst_err = 0.0f64;
    let mut ratios = Vec::new();
    for (k, a) in [(4.0, A), (1.0, PI), (16.0, 0.5)] {
        let err = |n: usize| -> Result<f64> {
            let b = solve_bias_bvp(&VariationalProblem::uniform(k, a, n)?)?;
            let exact = BiasGrid::analytic(k, a, n)?;
            Ok(max_abs(b.values.iter().zip(&exact.values).map(|(x, y)| x - y)))
        };
        let (coarse, fine) = (err(BVP_NODES.div_ceil(2))?, err(BVP_NODES)?);
        worst_err = worst_err.max(fine);
        ratios.push(coarse / fine);
    }
    let in_band = ratios
        .iter()
        .all(|r| (RICHARDSON_BAND.0..=RICHARDSON_BAND.1).contains(r));
    Ok(verdict(
        worst_err <= BVP_TOL && in_band,
        format!("max error {worst_err:e} at {BVP_NODES} nodes, Richardson ratios {ratios:.3?}"),
    ))
}

fn limits() -> Result<Verdict> {
    let prior = A * A / 12.0;
    let small = (qobb_closed_form(1e-10, A)? - prior).abs() / prior;
    let wide = (qobb_closed_form(4.0, 1e6)? - 0.25).abs();
    Ok(verdict(
        small <= LIMIT_REL_TOL && wide <= LIMIT_WIDE_TOL,
        format!("K -> 0 relative {small:e}, a -> inf {wide:e}"),
    ))
}

fn le(lo: f64, hi: f64) -> bool {
    lo <= hi || lo - hi <= ORDERING_SLACK * hi.abs()
}

fn ordering() -> Result<Verdict> {
    let mut problems = Vec::new();
    for id in ScenarioId::ALL {
        let rows = run_sweep(&Scenario::default_for(id))?;
        for r in &rows {
            if !(le(r.qobb1, r.qobb2) && le(r.qobb2, r.qobb0) && le(r.qobb0, r.qcrb)) {
                problems.push(format!("{id} chain at {}", r.sweep_value));
            }
            match id {
                ScenarioId::PhaseCs | ScenarioId::PhaseSmsvs if r.qobb2 != r.qobb0 => {
                    problems.push(format!("{id} qobb2 != qobb0 at {}", r.sweep_value));
                }
                ScenarioId::Su2CsTs => {
                    if r.sweep_value > 0.0 && r.qobb2 >= r.qobb0 {
                        problems.push(format!("{id} qobb2 >= qobb0 at {}", r.sweep_value));
                    }
                    if r.qobb1 != r.qobb2 {
                        problems.push(format!("{id} qobb1 != qobb2 at {}", r.sweep_value));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "all rows of all four scenarios".into()
        } else {
            problems.join("; ")
        },
    ))
}

fn psi0(n_max: usize) -> Result<FockState> {
    FockState::superposition(
        &[(0, C64::new(FRAC_1_SQRT_2, 0.0)), (2, C64::new(FRAC_1_SQRT_2, 0.0))],
        n_max,
    )
}

fn oracle_moments(psi: &FockState) -> Result<MomentSet> {
    let n = FockOperator::number(psi.space());
    MomentSet::new(
        state_expectation(psi, &n)?,
        state_expectation(psi, &n.square())?,
        qfi_pure(psi, &n)?,
        1,
    )
}

fn closed_form_vs_oracle() -> Result<Verdict> {
    let w = PriorWindow::new(A)?;
    let diff = |x: &MomentSet, y: &MomentSet| -> Result<f64> {
        let (p, q) = (bound_report(x, &w)?, bound_report(y, &w)?);
        Ok(max_abs([
            p.qcrb - q.qcrb,
            p.qobb0 - q.qobb0,
            p.qobb1 - q.qobb1,
            p.qobb2 - q.qobb2,
        ]))
    };
    let mut bound_err = 0.0f64;
    for n in [0.25f64, 1.0, 2.0] {
        let psi = make_coherent(C64::new(n.sqrt(), 0.0), 40)?;
        bound_err = bound_err.max(diff(&moments_phase_cs(n)?, &oracle_moments(&psi)?)?);
    }
    for n in [0.25f64, 1.0] {
        let psi = make_smsvs(n.sqrt().asinh(), 80)?;
        bound_err = bound_err.max(diff(&moments_phase_smsvs(n)?, &oracle_moments(&psi)?)?);
    }
    for n_th in [0.5, 1.0] {
        let rho = coherent_thermal(C64::new(1.0, 0.0), n_th, 40)?;
        let jy = FockOperator::j_y(rho.space())?;
        let formula = moments_su2(1.0, n_th)?;
        let mean = expectation(&rho, &jy)?;
        let sq = expectation(&rho, &jy.square())?;
        let oracle = MomentSet::new(mean, sq, formula.qfi(), 1)?;
        bound_err = bound_err.max(diff(&formula, &oracle)?);
    }

    let mut prob_err = 0.0f64;
    let cs = make_coherent(C64::new(1.0, 0.0), 40)?;
    let sq = make_smsvs(1f64.asinh(), 80)?;
    let (ecs, esq) = (Effect::projector(&psi0(40)?)?, Effect::projector(&psi0(80)?)?);
    let su2_trunc = Truncation::new(30).with_leakage_budget(1e-8);
    let rho = coherent_thermal(C64::new(1.0, 0.0), 1.0, su2_trunc)?;
    let s = rho.space();
    let mut amps = DVector::zeros(s.dim());
    amps[s.index2(1, 0).expect("fits")] = C64::new(1.0, 0.0);
    let e10 = Effect::projector(&FockState::from_amplitudes(s, amps)?)?;
    let plus = FockState::superposition(&[(0, C64::new(1.0, 0.0)), (1, C64::new(1.0, 0.0))], 1)?;
    let eplus = Effect::projector(&plus)?;
    let (mcs, msq, msu) = (phase_model_cs(1.0)?, phase_model_smsvs(1.0)?, su2_model(1.0, 1.0)?);
    let mq = qubit_model(10)?;
    for x in [0.0, 0.3, 0.9, FRAC_PI_2, 2.4] {
        prob_err = prob_err.max((born_prob(&cs.evolve_phase(x)?.to_density(), &ecs)? - mcs.p0(x)).abs());
        prob_err = prob_err.max((born_prob(&sq.evolve_phase(x)?.to_density(), &esq)? - msq.p0(x)).abs());
        prob_err = prob_err.max((born_prob(&rho.evolve_su2(x)?, &e10)? - msu.p0(x)).abs());
        let shot = plus.evolve_phase(x)?.to_density();
        let (p0, p1) = (born_prob(&shot, &eplus)?, born_prob(&shot, &eplus.complement())?);
        let mut binom = 1.0;
        for (j, got) in mq.probabilities(x).into_iter().enumerate() {
            prob_err = prob_err.max((got - binom * p0.powi(10 - j as i32) * p1.powi(j as i32)).abs());
            binom *= (10 - j) as f64 / (j + 1) as f64;
        }
    }

    let jy = FockOperator::j_y(rho.space())?;
    let qfi_err = (qfi_mixed(&rho, &jy)? - moments_su2(1.0, 1.0)?.qfi()).abs();

    Ok(verdict(
        bound_err <= MOMENT_TOL && prob_err <= PROBABILITY_TOL && qfi_err <= QFI_TOL,
        format!("bounds {bound_err:e}, probabilities {prob_err:e}, two-mode QFI at n_max 30 {qfi_err:e}"),
    ))
}

fn mmse_cross_check() -> Result<Verdict> {
    let w = PriorWindow::new(A)?;
    let q = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for x in uniform_grid(0.1, 5.0, 20) {
        worst =
            worst.max((mmse(&phase_model_cs(x)?, &w, &q)? - mmse_closed_form_phase(PhaseProbe::Coherent, x, A)?).abs());
        worst = worst.max(
            (mmse(&phase_model_smsvs(x)?, &w, &q)? - mmse_closed_form_phase(PhaseProbe::SqueezedVacuum, x, A)?).abs(),
        );
        worst = worst.max((mmse(&su2_model(1.0, x)?, &w, &q)? - mmse_closed_form_su2(1.0, x, A)?).abs());
    }
    let mut outside = Vec::new();
    for id in ScenarioId::ALL {
        for r in run_sweep(&Scenario::default_for(id))? {
            let m = r.mmse.expect("every scenario binds a model");
            if !(le(r.qobb0, m) && le(m, w.variance())) {
                outside.push(format!("{id} at {}", r.sweep_value));
            }
        }
    }
    Ok(verdict(
        worst <= MMSE_CROSS_TOL && outside.is_empty(),
        format!(
            "closed form vs quadrature {worst:e}; rows outside [qobb0, a^2/12]: {}",
            outside.len()
        ),
    ))
}

fn saturation() -> Result<Verdict> {
    let rows = run_sweep(&Scenario::default_for(ScenarioId::QubitRepeat))?;
    let gap: Vec<f64> = rows
        .iter()
        .map(|r| (r.mmse.expect("model bound") - r.qobb0).abs())
        .collect();
    let rises: Vec<f64> = gap
        .windows(2)
        .zip(&rows[1..])
        .filter(|(p, _)| p[1] > p[0])
        .map(|(_, r)| r.sweep_value)
        .collect();
    let rel = |v: usize| gap[v - 1] / rows[v - 1].qobb0;
    let factor = rel(10) / rel(100);
    Ok(verdict(
        rises.is_empty() && factor >= SATURATION_FACTOR,
        format!(
            "gap increases at v = {rises:?}; relative gap factor v=10/v=100 = {factor:.3}; endpoint gap {:e}",
            gap[gap.len() - 1]
        ),
    ))
}

fn determinism_and_io() -> Result<Verdict> {
    let dir = tempfile::tempdir().map_err(qobb_core::Error::from)?;
    let s = Scenario::default_for(ScenarioId::Su2CsTs);
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let rows = run_sweep(&s)?;
    emit_csv(&rows, &p1)?;
    emit_csv(&run_sweep(&s)?, &p2)?;
    let (b1, b2) = (std::fs::read(&p1)?, std::fs::read(&p2)?);
    let identical = b1 == b2;

    let back = parse_csv(&String::from_utf8_lossy(&b1))?;
    let bits = |r: &SweepRow| {
        [
            r.sweep_value,
            r.qcrb,
            r.qobb0,
            r.qobb1,
            r.qobb2,
            r.mmse.unwrap_or(f64::NAN),
        ]
        .map(f64::to_bits)
    };
    let round_trip = back.len() == rows.len() && back.iter().zip(&rows).all(|(x, y)| bits(x) == bits(y));

    let svg_path = dir.path().join("plot.svg");
    emit_svg(&rows, &svg_path, &PlotStyle::default())?;
    let svg = std::fs::read_to_string(&svg_path)?;
    let xml = roxmltree::Document::parse(&svg);
    let xml_ok = matches!(&xml, Ok(d) if d.root_element().tag_name().name() == "svg");
    Ok(verdict(
        identical && round_trip && xml_ok && render_csv(&rows).as_bytes() == b1.as_slice(),
        format!("byte-identical {identical}, bit-exact round trip {round_trip}, SVG parses {xml_ok}"),
    ))
}

fn main() -> ExitCode {
    type Criterion = fn() -> Result<Verdict>;
    let criteria: [(&str, Criterion); 8] = [
        ("1 bound identity", bound_identity),
        ("2 BVP convergence", bvp_convergence),
        ("3 limits", limits),
        ("4 ordering chain", ordering),
        ("5 closed form vs Fock oracle", closed_form_vs_oracle),
        ("6 MMSE cross-check", mmse_cross_check),
        ("7 saturation in v", saturation),
        ("8 determinism and I/O", determinism_and_io),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        println!("{} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.passed);
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
