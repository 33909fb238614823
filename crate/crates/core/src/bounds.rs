//! Closed-form error bounds for unitary parameter encoding.
//!
//! Every Bayesian bound here has the same shape: for a constant information
//! rate `K` and a uniform prior on `[0, a]`,
//!
//! ```text
//! bound(K, a) = 1/K - 2/(a K^{3/2}) tanh(a sqrt(K) / 2)
//! ```
//!
//! The three bounds differ only in the rate: the quantum Fisher information
//! `F` (QOBB), `Xi = 4<H^2>` (QOBB1) and `Lambda = 4 Var(H)` (QOBB2). All
//! rates scale linearly with the number of independent repetitions.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Below this value of `t = a sqrt(K) / 2` the bound is evaluated from its
/// Taylor series; `1 - tanh(t)/t` cancels catastrophically near zero.
const SERIES_THRESHOLD: f64 = 1e-2;

const MOMENT_REL_TOL: f64 = 1e-10;
const MOMENT_ABS_TOL: f64 = 1e-14;

/// Uniform prior on `[0, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorWindow {
    a: f64,
}

impl PriorWindow {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(domain("a", a, "prior window width must be positive and finite"));
        }
        Ok(Self { a })
    }

    pub fn width(&self) -> f64 {
        self.a
    }

    pub fn density(&self) -> f64 {
        1.0 / self.a
    }

    /// `∫ p(x) x^2 dx = a^2 / 3`.
    pub fn second_moment(&self) -> f64 {
        self.a * self.a / 3.0
    }

    /// Variance of the prior, `a^2 / 12`: the error of always guessing `a/2`.
    pub fn variance(&self) -> f64 {
        self.a * self.a / 12.0
    }
}

/// Generator moments and Fisher information of a probe state.
///
/// `h_mean`, `h_sq_mean` and `qfi` are per probe; `shots` is the number of
/// independent repetitions and multiplies every information rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    h_mean: f64,
    h_sq_mean: f64,
    h_variance: f64,
    qfi: f64,
    shots: u32,
}

impl MomentSet {
    /// Builds a moment set from raw moments; the variance is `<H^2> - <H>^2`.
    pub fn new(h_mean: f64, h_sq_mean: f64, qfi: f64, shots: u32) -> Result<Self> {
        let variance = h_sq_mean - h_mean * h_mean;
        Self::checked(h_mean, h_sq_mean, variance, qfi, shots)
    }

    /// Builds a moment set from the mean and an exactly known variance.
    ///
    /// Used by the scenario formulas so that pure-state identities such as
    /// `F = 4 Var(H)` hold bit-for-bit rather than up to rounding.
    pub fn from_variance(h_mean: f64, h_variance: f64, qfi: f64, shots: u32) -> Result<Self> {
        let h_sq_mean = h_variance + h_mean * h_mean;
        Self::checked(h_mean, h_sq_mean, h_variance, qfi, shots)
    }

    fn checked(h_mean: f64, h_sq_mean: f64, variance: f64, qfi: f64, shots: u32) -> Result<Self> {
        for (name, v) in [("h_mean", h_mean), ("h_sq_mean", h_sq_mean), ("qfi", qfi)] {
            if !v.is_finite() {
                return Err(Error::InvalidMoments(format!("{name} is not finite ({v})")));
            }
        }
        if shots == 0 {
            return Err(Error::InvalidMoments("shots must be at least 1".into()));
        }
        if h_sq_mean < 0.0 {
            return Err(Error::InvalidMoments(format!("<H^2> = {h_sq_mean} is negative")));
        }
        if qfi < 0.0 {
            return Err(Error::InvalidMoments(format!("QFI = {qfi} is negative")));
        }
        let slack = MOMENT_REL_TOL * h_sq_mean + MOMENT_ABS_TOL;
        if variance < -slack {
            return Err(Error::InvalidMoments(format!(
                "<H^2> = {h_sq_mean} < <H>^2 = {}",
                h_mean * h_mean
            )));
        }
        let variance = variance.max(0.0);
        if qfi > 4.0 * variance + 4.0 * slack {
            return Err(Error::InvalidMoments(format!(
                "QFI = {qfi} exceeds 4 Var(H) = {}",
                4.0 * variance
            )));
        }
        Ok(Self {
            h_mean,
            h_sq_mean,
            h_variance: variance,
            qfi,
            shots,
        })
    }

    pub fn with_shots(self, shots: u32) -> Result<Self> {
        Self::checked(self.h_mean, self.h_sq_mean, self.h_variance, self.qfi, shots)
    }

    pub fn h_mean(&self) -> f64 {
        self.h_mean
    }

    pub fn h_sq_mean(&self) -> f64 {
        self.h_sq_mean
    }

    pub fn h_variance(&self) -> f64 {
        self.h_variance
    }

    pub fn qfi(&self) -> f64 {
        self.qfi
    }

    pub fn shots(&self) -> u32 {
        self.shots
    }

    /// Total Fisher information `v F`.
    pub fn fisher_rate(&self) -> f64 {
        f64::from(self.shots) * self.qfi
    }

    /// Total `v Xi = 4 v <H^2>`.
    pub fn xi_rate(&self) -> f64 {
        f64::from(self.shots) * (4.0 * self.h_sq_mean)
    }

    /// Total `v Lambda = 4 v Var(H)` (uniform prior, so no prior term).
    pub fn lambda_rate(&self) -> f64 {
        f64::from(self.shots) * (4.0 * self.h_variance)
    }
}

/// QCRB, QOBB, QOBB1 and QOBB2 for one probe and prior window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `1/(vF)`; `+inf` when the Fisher information vanishes.
    pub qcrb: f64,
    pub qobb0: f64,
    pub qobb1: f64,
    pub qobb2: f64,
}

impl BoundReport {
    /// Checks `qobb1 <= qobb2 <= qobb0 <= qcrb` allowing `rel_slack` of rounding.
    pub fn ordering_holds(&self, rel_slack: f64) -> bool {
        let le = |lo: f64, hi: f64| lo <= hi || lo - hi <= rel_slack * hi.abs();
        le(self.qobb1, self.qobb2) && le(self.qobb2, self.qobb0) && le(self.qobb0, self.qcrb)
    }
}

/// `(1/K)(1 - tanh(t)/t)` with `t = a sqrt(K)/2`.
///
/// Returns `a^2/12` at `K = 0` and `0` for `K = +inf`.
pub fn qobb_closed_form(rate: f64, a: f64) -> Result<f64> {
    if rate.is_nan() || rate < 0.0 {
        return Err(domain("K", rate, "information rate must be nonnegative"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(domain("a", a, "prior window width must be positive and finite"));
    }
    if rate == 0.0 {
        return Ok(a * a / 12.0);
    }
    if rate.is_infinite() {
        return Ok(0.0);
    }
    let t = 0.5 * a * rate.sqrt();
    if t < SERIES_THRESHOLD {
        let t2 = t * t;
        return Ok(0.25 * a * a * (1.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (17.0 / 315.0))));
    }
    Ok((1.0 - t.tanh() / t) / rate)
}

pub fn qcrb(m: &MomentSet) -> Result<f64> {
    let f = m.fisher_rate();
    if f == 0.0 {
        return Err(Error::UnboundedQcrb);
    }
    Ok(1.0 / f)
}

pub fn bound_report(m: &MomentSet, w: &PriorWindow) -> Result<BoundReport> {
    let a = w.width();
    let qcrb = match qcrb(m) {
        Ok(v) => v,
        Err(Error::UnboundedQcrb) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        qcrb,
        qobb0: qobb_closed_form(m.fisher_rate(), a)?,
        qobb1: qobb_closed_form(m.xi_rate(), a)?,
        qobb2: qobb_closed_form(m.lambda_rate(), a)?,
    })
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(domain(name, v, "must be positive and finite"))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(domain(name, v, "must be nonnegative and finite"))
    }
}

/// Coherent probe under `H = n`: Poissonian, `Var(n) = <n> = N`, `F = 4N`.
pub fn moments_phase_cs(n_mean: f64) -> Result<MomentSet> {
    let n = positive("n_mean", n_mean)?;
    MomentSet::from_variance(n, n, 4.0 * n, 1)
}

/// Single-mode squeezed vacuum under `H = n`, with `N = sinh^2 r`:
/// `Var(n) = 2N(N+1)`, `<n^2> = N(3N+2)`, `F = 8N(N+1)`.
pub fn moments_phase_smsvs(n_mean: f64) -> Result<MomentSet> {
    let n = positive("n_mean", n_mean)?;
    let variance = 2.0 * n * (n + 1.0);
    MomentSet::from_variance(n, variance, 4.0 * variance, 1)
}

/// Coherent `|beta>` in mode a and thermal `n_th` in mode b under `H = J_y`.
pub fn moments_su2(beta_sq: f64, n_th: f64) -> Result<MomentSet> {
    let b2 = positive("beta_sq", beta_sq)?;
    let nt = nonnegative("n_th", n_th)?;
    let jy_sq = (b2 + nt + 2.0 * b2 * nt) / 4.0;
    let qfi = nt + b2 / (2.0 * nt + 1.0);
    MomentSet::from_variance(0.0, jy_sq, qfi, 1)
}

/// `(|0> + |1>)/sqrt 2` under `H = n`.
pub fn moments_qubit_plus() -> MomentSet {
    MomentSet {
        h_mean: 0.5,
        h_sq_mean: 0.5,
        h_variance: 0.25,
        qfi: 1.0,
        shots: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_information_gives_prior_variance() {
        let a = FRAC_PI_2;
        assert_eq!(qobb_closed_form(0.0, a).unwrap(), a * a / 12.0);
        let v = qobb_closed_form(1e-10, a).unwrap();
        assert!(rel(v, PI * PI / 48.0) < 1e-6, "{v}");
    }

    #[test]
    fn wide_window_recovers_qcrb() {
        let v = qobb_closed_form(4.0, 1e6).unwrap();
        assert!(rel(v, 0.25) < 1e-5);
    }

    #[test]
    fn analytic_value_at_k4() {
        let v = qobb_closed_form(4.0, FRAC_PI_2).unwrap();
        let expected = 0.25 - (FRAC_PI_2).tanh() / (2.0 * PI);
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn series_and_direct_agree_across_threshold() {
        let a = 1.0;
        let t = SERIES_THRESHOLD;
        let k = (2.0 * t / a).powi(2);
        let below = qobb_closed_form(k * (1.0 - 1e-9), a).unwrap();
        let above = qobb_closed_form(k * (1.0 + 1e-9), a).unwrap();
        assert!(rel(below, above) < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(qobb_closed_form(-1.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(qobb_closed_form(1.0, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(qobb_closed_form(f64::NAN, 1.0), Err(Error::Domain { .. })));
        assert!(moments_phase_cs(0.0).is_err());
        assert!(moments_phase_smsvs(-1.0).is_err());
        assert!(moments_su2(1.0, -0.1).is_err());
        assert!(PriorWindow::new(0.0).is_err());
    }

    #[test]
    fn qcrb_values() {
        assert_eq!(qcrb(&moments_phase_cs(1.0).unwrap()).unwrap(), 0.25);
        let su2 = moments_su2(1.0, 1.0).unwrap();
        assert!((qcrb(&su2).unwrap() - 0.75).abs() < 1e-15);
        let m = moments_phase_cs(1.0).unwrap().with_shots(7).unwrap();
        assert!((qcrb(&m).unwrap() - 0.25 / 7.0).abs() < 1e-16);
    }

    #[test]
    fn zero_qfi_is_unbounded_not_nan() {
        // thermal-like: mixed, commuting with H, so F = 0 while Var(H) > 0
        let m = MomentSet::new(1.0, 3.0, 0.0, 1).unwrap();
        assert_eq!(qcrb(&m), Err(Error::UnboundedQcrb));
        let w = PriorWindow::new(FRAC_PI_2).unwrap();
        let r = bound_report(&m, &w).unwrap();
        assert!(r.qcrb.is_infinite());
        assert_eq!(r.qobb0, w.variance());
        assert!(r.ordering_holds(0.0));
    }

    #[test]
    fn moment_formulas() {
        let cs = moments_phase_cs(1.0).unwrap();
        assert_eq!((cs.h_mean(), cs.h_sq_mean(), cs.qfi()), (1.0, 2.0, 4.0));
        let cs2 = moments_phase_cs(2.0).unwrap();
        assert_eq!(cs2.xi_rate(), 24.0);
        let sq = moments_phase_smsvs(1.0).unwrap();
        assert_eq!((sq.qfi(), sq.xi_rate(), sq.h_sq_mean()), (16.0, 20.0, 5.0));
        let su2 = moments_su2(1.0, 1.0).unwrap();
        assert_eq!(su2.h_mean(), 0.0);
        assert!((su2.h_sq_mean() - 1.0).abs() < 1e-15);
        assert!((su2.qfi() - 4.0 / 3.0).abs() < 1e-15);
        let pure = moments_su2(1.0, 0.0).unwrap();
        assert_eq!((pure.qfi(), pure.h_sq_mean()), (1.0, 0.25));
        assert_eq!(pure.lambda_rate(), pure.fisher_rate());
        assert_eq!(pure.xi_rate(), pure.fisher_rate());
        let q = moments_qubit_plus();
        assert_eq!((q.fisher_rate(), q.xi_rate(), q.lambda_rate()), (1.0, 2.0, 1.0));
    }

    #[test]
    fn vacuum_limit() {
        let cs = moments_phase_cs(1e-300).unwrap();
        assert!(cs.h_sq_mean() < 1e-299 && cs.qfi() < 1e-299);
        let sq = moments_phase_smsvs(1e-300).unwrap();
        assert!(sq.qfi() < 1e-298 && sq.xi_rate() < 1e-298);
    }

    #[test]
    fn qubit_report_matches_repeated_measurement_formula() {
        let a = FRAC_PI_2;
        let w = PriorWindow::new(a).unwrap();
        for v in [1u32, 5, 50] {
            let m = moments_qubit_plus().with_shots(v).unwrap();
            let r = bound_report(&m, &w).unwrap();
            let vf = f64::from(v);
            let q0 = 1.0 / vf - 2.0 / (a * vf.powf(1.5)) * (a * vf.sqrt() / 2.0).tanh();
            let q1 = 1.0 / (2.0 * vf) - 2.0 / (a * (2.0 * vf).powf(1.5)) * (a * (2.0 * vf).sqrt() / 2.0).tanh();
            assert!(rel(r.qobb0, q0) < 1e-13);
            assert!(rel(r.qobb1, q1) < 1e-13);
            assert_eq!(r.qobb2, r.qobb0);
        }
    }

    #[test]
    fn closed_forms_match_phase_probe_expressions() {
        // Explicit N-parametrised forms for the coherent and squeezed probes.
        let a = FRAC_PI_2;
        let w = PriorWindow::new(a).unwrap();
        for n in [0.3, 1.0, 2.5] {
            let r = bound_report(&moments_phase_cs(n).unwrap(), &w).unwrap();
            let q0 = 1.0 / (4.0 * n) - (a * n.sqrt()).tanh() / (4.0 * a * n.powf(1.5));
            let x = n * (n + 1.0);
            let q1 = 1.0 / (4.0 * x) - (a * x.sqrt()).tanh() / (4.0 * a * x.powf(1.5));
            assert!(rel(r.qobb0, q0) < 1e-12);
            assert!(rel(r.qobb1, q1) < 1e-12);
            assert_eq!(r.qobb2, r.qobb0);

            let r = bound_report(&moments_phase_smsvs(n).unwrap(), &w).unwrap();
            let y = 2.0 * n * (n + 1.0);
            let q0 = 1.0 / (8.0 * n * (n + 1.0)) - (a * y.sqrt()).tanh() / (4.0 * a * y.powf(1.5));
            let z = n * (2.0 + 3.0 * n);
            let q1 = 1.0 / (4.0 * z) - (a * z.sqrt()).tanh() / (4.0 * a * z.powf(1.5));
            assert!(rel(r.qobb0, q0) < 1e-12);
            assert!(rel(r.qobb1, q1) < 1e-12);
            assert_eq!(r.qobb2, r.qobb0);
        }
    }

    #[test]
    fn su2_zero_mean_makes_qobb1_equal_qobb2() {
        let w = PriorWindow::new(FRAC_PI_2).unwrap();
        let r = bound_report(&moments_su2(1.0, 1.0).unwrap(), &w).unwrap();
        assert_eq!(r.qobb1, r.qobb2);
        assert!(r.qobb2 < r.qobb0);
    }

    #[test]
    fn invalid_moment_sets_rejected() {
        assert!(MomentSet::new(2.0, 3.0, 0.0, 1).is_err());
        assert!(MomentSet::new(0.0, 1.0, 4.1, 1).is_err());
        assert!(MomentSet::new(0.0, 1.0, 1.0, 0).is_err());
    }

    fn arb_moments() -> impl Strategy<Value = MomentSet> {
        (-5.0..5.0f64, 0.0..20.0f64, 0.0..=1.0f64, 1u32..200)
            .prop_map(|(mean, var, frac, shots)| MomentSet::from_variance(mean, var, 4.0 * var * frac, shots).unwrap())
    }

    proptest! {
        #[test]
        fn ordering_chain(m in arb_moments(), a in 0.01..10.0f64) {
            let r = bound_report(&m, &PriorWindow::new(a).unwrap()).unwrap();
            prop_assert!(r.ordering_holds(0.0), "{r:?}");
            prop_assert!(r.qobb0 <= a * a / 12.0 * (1.0 + 1e-15));
        }

        #[test]
        fn decreasing_in_rate(k in 1e-8..1e4f64, f in 1.001..10.0f64, a in 0.01..10.0f64) {
            prop_assert!(qobb_closed_form(k * f, a).unwrap() < qobb_closed_form(k, a).unwrap());
        }

        #[test]
        fn increasing_in_width(k in 1e-6..1e3f64, a in 0.01..10.0f64, f in 1.001..10.0f64) {
            prop_assert!(qobb_closed_form(k, a * f).unwrap() > qobb_closed_form(k, a).unwrap());
        }

        #[test]
        fn shot_scaling(m in arb_moments(), a in 0.01..10.0f64) {
            let w = PriorWindow::new(a).unwrap();
            let v = m.shots();
            let one = m.with_shots(1).unwrap();
            let r = bound_report(&m, &w).unwrap();
            let vf = f64::from(v);
            prop_assert_eq!(r.qobb0, qobb_closed_form(vf * one.fisher_rate(), a).unwrap());
            prop_assert_eq!(r.qobb1, qobb_closed_form(vf * one.xi_rate(), a).unwrap());
            prop_assert_eq!(r.qobb2, qobb_closed_form(vf * one.lambda_rate(), a).unwrap());
        }
    }
}
