//! Conditional outcome models and the minimum mean-square error.
//!
//! Every model is a map `x -> p(. | x)` over a finite outcome set. The MMSE
//! for the uniform prior on `[0, a]` is
//!
//! ```text
//! MMSE = a^2/3 - (1/a) sum_y I1(y)^2 / I0(y),
//! I0(y) = int_0^a p(y|x) dx,   I1(y) = int_0^a x p(y|x) dx,
//! ```
//!
//! evaluated by composite Simpson quadrature with a refinement pass. The
//! closed forms for the phase and SU(2) models serve as an independent check.

use std::f64::consts::SQRT_2;

use crate::bounds::PriorWindow;
use crate::error::{domain, Error, Result};
use crate::quadrature::{refine, simpson_weights, uniform_grid, QuadratureSpec};

/// Allowed deviation of `sum_y p(y|x)` from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Outcomes whose marginal `I0(y)` is below this carry no posterior mass.
pub const ZERO_MASS: f64 = 1e-300;

/// A finite-outcome measurement model `p(y | x)`.
pub trait OutcomeModel: Sync {
    fn outcome_count(&self) -> usize;

    /// Writes `p(y | x)` for every outcome into `out`.
    fn probabilities_into(&self, x: f64, out: &mut [f64]);

    fn label(&self) -> String;

    fn probabilities(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.outcome_count()];
        self.probabilities_into(x, &mut out);
        out
    }
}

/// Probe for the single-mode phase scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseProbe {
    Coherent,
    SqueezedVacuum,
}

/// Two-outcome model for a phase-encoded probe measured with
/// `{|psi0><psi0|, I - |psi0><psi0|}`, `psi0 = (|0> + |2>)/sqrt 2`.
///
/// Both probes give `p0(phi) = c0 + c1 cos 2phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseModel {
    kind: PhaseProbe,
    n_mean: f64,
    c0: f64,
    c1: f64,
}

impl PhaseModel {
    pub fn kind(&self) -> PhaseProbe {
        self.kind
    }

    pub fn n_mean(&self) -> f64 {
        self.n_mean
    }

    pub fn p0(&self, phi: f64) -> f64 {
        self.c0 + self.c1 * (2.0 * phi).cos()
    }
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

/// Coherent probe: `p0 = e^{-N}(1 + N^2/2 + sqrt2 N cos 2phi)/2`.
pub fn phase_model_cs(n_mean: f64) -> Result<PhaseModel> {
    let n = positive("n_mean", n_mean)?;
    let e = (-n).exp();
    Ok(PhaseModel {
        kind: PhaseProbe::Coherent,
        n_mean: n,
        c0: e * (1.0 + 0.5 * n * n) / 2.0,
        c1: e * SQRT_2 * n / 2.0,
    })
}

/// Squeezed vacuum with `sinh^2 r = N`:
/// `p0 = [1 + tanh^2 r / 2 - sqrt2 tanh r cos 2phi] / (2 cosh r)`.
pub fn phase_model_smsvs(n_mean: f64) -> Result<PhaseModel> {
    let n = positive("n_mean", n_mean)?;
    let r = n.sqrt().asinh();
    let (t, ch) = (r.tanh(), r.cosh());
    Ok(PhaseModel {
        kind: PhaseProbe::SqueezedVacuum,
        n_mean: n,
        c0: (1.0 + 0.5 * t * t) / (2.0 * ch),
        c1: -SQRT_2 * t / (2.0 * ch),
    })
}

impl OutcomeModel for PhaseModel {
    fn outcome_count(&self) -> usize {
        2
    }

    fn probabilities_into(&self, x: f64, out: &mut [f64]) {
        let p0 = self.p0(x);
        out[0] = p0;
        out[1] = 1.0 - p0;
    }

    fn label(&self) -> String {
        match self.kind {
            PhaseProbe::Coherent => format!("phase-cs(N={})", self.n_mean),
            PhaseProbe::SqueezedVacuum => format!("phase-smsvs(N={})", self.n_mean),
        }
    }
}

/// SU(2) interferometer fed with `|beta> (x) thermal(n_th)`, detected by the
/// projector onto `|1, 0>`:
/// `p0(theta) = A cos^2(theta/2) + B sin^2(theta/2)` with
/// `A = beta^2 e^{-beta^2}/(n_th+1)` and `B = n_th e^{-beta^2}/(n_th+1)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Model {
    beta_sq: f64,
    n_th: f64,
    coef_a: f64,
    coef_b: f64,
}

pub fn su2_model(beta_sq: f64, n_th: f64) -> Result<Su2Model> {
    let b2 = positive("beta_sq", beta_sq)?;
    let nt = nonnegative("n_th", n_th)?;
    let e = (-b2).exp();
    Ok(Su2Model {
        beta_sq: b2,
        n_th: nt,
        coef_a: b2 * e / (nt + 1.0),
        coef_b: nt * e / ((nt + 1.0) * (nt + 1.0)),
    })
}

impl Su2Model {
    pub fn beta_sq(&self) -> f64 {
        self.beta_sq
    }

    pub fn n_th(&self) -> f64 {
        self.n_th
    }

    pub fn coefficients(&self) -> (f64, f64) {
        (self.coef_a, self.coef_b)
    }

    pub fn p0(&self, theta: f64) -> f64 {
        let h = 0.5 * theta;
        self.coef_a * h.cos().powi(2) + self.coef_b * h.sin().powi(2)
    }
}

impl OutcomeModel for Su2Model {
    fn outcome_count(&self) -> usize {
        2
    }

    fn probabilities_into(&self, x: f64, out: &mut [f64]) {
        let p0 = self.p0(x);
        out[0] = p0;
        out[1] = 1.0 - p0;
    }

    fn label(&self) -> String {
        format!("su2-cs-ts(beta^2={}, n_th={})", self.beta_sq, self.n_th)
    }
}

/// `v` repeated measurements of `(|0> + e^{i phi}|1>)/sqrt 2` in the `|+>`
/// basis: `m` results on `|+>` occur with `C(v, m) p0^m p1^{v-m}`,
/// `p0 = cos^2(phi/2)`.
///
/// Entry `j` of the outcome vector holds `m = v - j`, so for `v = 1` the
/// vector is the single-shot `(p0, p1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitModel {
    shots: u32,
    ln_binom: Vec<f64>,
}

pub fn qubit_model(v: u32) -> Result<QubitModel> {
    if v == 0 {
        return Err(domain("v", 0.0, "at least one measurement is required"));
    }
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=v).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let n = v as usize;
    let ln_binom = (0..=n).map(|m| ln_fact[n] - ln_fact[m] - ln_fact[n - m]).collect();
    Ok(QubitModel { shots: v, ln_binom })
}

impl QubitModel {
    pub fn shots(&self) -> u32 {
        self.shots
    }
}

/// `k ln p`, with `0 ln 0 = 0`.
fn xlogy(k: f64, p: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * p.ln()
    }
}

impl OutcomeModel for QubitModel {
    fn outcome_count(&self) -> usize {
        self.shots as usize + 1
    }

    fn probabilities_into(&self, x: f64, out: &mut [f64]) {
        let p0 = (0.5 * x).cos().powi(2);
        let p1 = (0.5 * x).sin().powi(2);
        let v = self.shots as f64;
        for (j, slot) in out.iter_mut().enumerate() {
            let m = self.shots as usize - j;
            let k = m as f64;
            *slot = (self.ln_binom[m] + xlogy(k, p0) + xlogy(v - k, p1)).exp();
        }
    }

    fn label(&self) -> String {
        format!("qubit-repeat(v={})", self.shots)
    }
}

/// Model backed by a closure.
pub struct FnModel<F> {
    outcomes: usize,
    label: String,
    f: F,
}

impl<F: Fn(f64, &mut [f64]) + Sync> FnModel<F> {
    pub fn new(outcomes: usize, label: impl Into<String>, f: F) -> Result<Self> {
        if outcomes < 2 {
            return Err(domain("outcome_count", outcomes as f64, "need at least two outcomes"));
        }
        Ok(Self {
            outcomes,
            label: label.into(),
            f,
        })
    }
}

impl<F: Fn(f64, &mut [f64]) + Sync> OutcomeModel for FnModel<F> {
    fn outcome_count(&self) -> usize {
        self.outcomes
    }

    fn probabilities_into(&self, x: f64, out: &mut [f64]) {
        (self.f)(x, out)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

fn check_normalized(model: &dyn OutcomeModel, x: f64, p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    let negative = p.iter().any(|&q| q < -NORMALIZATION_TOL || !q.is_finite());
    if negative || (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization {
            label: model.label(),
            x,
            sum,
        });
    }
    Ok(())
}

/// `I0(y)` and `I1(y)` for every outcome on an `n`-node Simpson grid.
pub fn outcome_integrals(model: &dyn OutcomeModel, a: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = model.outcome_count();
    let xs = uniform_grid(0.0, a, n);
    let w = simpson_weights(n, a / (n - 1) as f64)?;
    let mut i0 = vec![0.0; k];
    let mut i1 = vec![0.0; k];
    let mut p = vec![0.0; k];
    for (&x, &wx) in xs.iter().zip(&w) {
        model.probabilities_into(x, &mut p);
        check_normalized(model, x, &p)?;
        for y in 0..k {
            i0[y] += wx * p[y];
            i1[y] += wx * x * p[y];
        }
    }
    Ok((i0, i1))
}

fn mmse_from_integrals(a: f64, i0: &[f64], i1: &[f64]) -> f64 {
    let explained: f64 = i0
        .iter()
        .zip(i1)
        .filter(|(m, _)| **m >= ZERO_MASS)
        .map(|(m, f)| f * f / m)
        .sum();
    a * a / 3.0 - explained / a
}

/// MMSE of `model` under the uniform prior `w`, by refined Simpson quadrature.
pub fn mmse(model: &dyn OutcomeModel, w: &PriorWindow, q: &QuadratureSpec) -> Result<f64> {
    let a = w.width();
    refine(q, |n| {
        let (i0, i1) = outcome_integrals(model, a, n)?;
        Ok(mmse_from_integrals(a, &i0, &i1))
    })
}

/// `I0, I1` of `p0 = c0 + c1 cos 2x` and of its complement `1 - p0`.
fn cos2_integrals(c0: f64, c1: f64, a: f64) -> ([f64; 2], [f64; 2]) {
    let s2 = (2.0 * a).sin();
    let c2 = (2.0 * a).cos();
    let i0 = c0 * a + c1 * s2 / 2.0;
    let i1 = c0 * a * a / 2.0 + c1 * (a * s2 / 2.0 + (c2 - 1.0) / 4.0);
    ([i0, a - i0], [i1, a * a / 2.0 - i1])
}

/// Closed-form MMSE of the phase models from the antiderivatives of `p0`.
pub fn mmse_closed_form_phase(kind: PhaseProbe, n_mean: f64, a: f64) -> Result<f64> {
    let w = PriorWindow::new(a)?;
    let n = positive("n_mean", n_mean)?;
    let (i0, i1) = match kind {
        PhaseProbe::Coherent => {
            // int p0 = e^{-N}[(1 + N^2/2) a + N sin(2a)/sqrt2]/2
            // int x p0 = e^{-N}[(1 + N^2/2) a^2 + sqrt2 N (a sin 2a + cos(2a)/2 - 1/2)]/4
            let e = (-n).exp();
            let k = 1.0 + 0.5 * n * n;
            let s2 = (2.0 * a).sin();
            let c2 = (2.0 * a).cos();
            let i0 = e * (k * a + n * s2 / SQRT_2) / 2.0;
            let i1 = e * (k * a * a + SQRT_2 * n * (a * s2 + c2 / 2.0 - 0.5)) / 4.0;
            ([i0, a - i0], [i1, a * a / 2.0 - i1])
        }
        PhaseProbe::SqueezedVacuum => {
            let r = n.sqrt().asinh();
            let (t, ch) = (r.tanh(), r.cosh());
            cos2_integrals((1.0 + 0.5 * t * t) / (2.0 * ch), -SQRT_2 * t / (2.0 * ch), a)
        }
    };
    Ok(mmse_from_integrals(w.width(), &i0, &i1))
}

/// Closed-form MMSE of the SU(2) model.
pub fn mmse_closed_form_su2(beta_sq: f64, n_th: f64, a: f64) -> Result<f64> {
    let w = PriorWindow::new(a)?;
    let (ca, cb) = su2_model(beta_sq, n_th)?.coefficients();
    let (s, c) = (a.sin(), a.cos());
    // int p0 = A(a + sin a)/2 + B(a - sin a)/2
    let i0 = ca * (a + s) / 2.0 + cb * (a - s) / 2.0;
    // int x cos x = a sin a + cos a - 1
    let xc = a * s + c - 1.0;
    let i1 = ca / 2.0 * (a * a / 2.0 + xc) + cb / 2.0 * (a * a / 2.0 - xc);
    Ok(mmse_from_integrals(w.width(), &[i0, a - i0], &[i1, a * a / 2.0 - i1]))
}
