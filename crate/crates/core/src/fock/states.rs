use nalgebra::{DMatrix, DVector};

use super::{FockDensity, FockSpace, FockState, Truncation, C64};
use crate::error::{domain, Error, Result};

/// Photon-number weights are generated until the remaining tail is below
/// this fraction of the leakage budget.
const TAIL_GUARD: f64 = 1e-6;

/// Validates the tail mass above `n_max` given a generator of `|c_n|^2`.
///
/// `weight(n)` is evaluated well past `n_max` so that the tail is summed
/// directly instead of obtained as `1 - sum`.
fn check_leakage(weight: impl Fn(usize) -> f64, mean: f64, trunc: Truncation) -> Result<()> {
    let budget = trunc.leakage_budget;
    let floor = (2.0 * mean + 50.0).ceil() as usize;
    let mut weights = Vec::new();
    let mut n = 0usize;
    loop {
        let w = weight(n);
        weights.push(w);
        if n > trunc.n_max && n > floor && w < budget * TAIL_GUARD * 1e-3 {
            break;
        }
        if n > 100_000 {
            break;
        }
        n += 1;
    }
    // suffix[k] = sum_{m >= k} w_m
    let mut suffix = vec![0.0; weights.len() + 1];
    for k in (0..weights.len()).rev() {
        suffix[k] = suffix[k + 1] + weights[k];
    }
    let leakage = suffix[trunc.n_max + 1];
    if leakage <= budget {
        return Ok(());
    }
    let required_n_max = (trunc.n_max..weights.len())
        .find(|&k| suffix[k + 1] <= budget)
        .unwrap_or(weights.len());
    Err(Error::Truncation {
        leakage,
        budget,
        n_max: trunc.n_max,
        required_n_max,
    })
}

/// `ln n!` by direct summation; exact enough for the `n` used here.
fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent state `e^{-|alpha|^2/2} sum alpha^n / sqrt(n!) |n>`, not
/// renormalised after truncation.
pub fn make_coherent(alpha: C64, trunc: impl Into<Truncation>) -> Result<FockState> {
    let trunc = trunc.into();
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(domain("alpha", alpha.norm(), "must be finite"));
    }
    let mean = alpha.norm_sqr();
    let poisson = |n: usize| {
        if mean == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
    };
    check_leakage(poisson, mean, trunc)?;
    let space = FockSpace::Single { n_max: trunc.n_max };
    let mut amps = DVector::zeros(space.dim());
    let mut c = C64::new((-0.5 * mean).exp(), 0.0);
    for n in 0..=trunc.n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    FockState::from_amplitudes(space, amps)
}

/// Squeezed vacuum `S(r)|0>` with `S(r) = exp[r (a^2 - a^dag^2)/2]`:
/// `c_{2m} = (-tanh r)^m sqrt((2m)!) / (2^m m!) / sqrt(cosh r)`, odd terms zero.
pub fn make_smsvs(r: f64, trunc: impl Into<Truncation>) -> Result<FockState> {
    let trunc = trunc.into();
    if !r.is_finite() {
        return Err(domain("r", r, "must be finite"));
    }
    let t = r.tanh();
    let t2 = t * t;
    let ch = r.cosh();
    // |c_{2m}|^2 = t^{2m} (2m)! / (4^m (m!)^2) / cosh r
    let weight = |n: usize| {
        if n % 2 == 1 {
            return 0.0;
        }
        if t2 == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let m = n / 2;
        let ln = m as f64 * t2.ln() + ln_factorial(2 * m) - 2.0 * ln_factorial(m) - m as f64 * 4f64.ln();
        ln.exp() / ch
    };
    check_leakage(weight, r.sinh().powi(2), trunc)?;
    let space = FockSpace::Single { n_max: trunc.n_max };
    let mut amps = DVector::zeros(space.dim());
    let mut c = 1.0 / ch.sqrt();
    amps[0] = C64::new(c, 0.0);
    let mut n = 2;
    while n <= trunc.n_max {
        c *= -t * (((n - 1) as f64) / n as f64).sqrt();
        amps[n] = C64::new(c, 0.0);
        n += 2;
    }
    FockState::from_amplitudes(space, amps)
}

/// Thermal state with weights `n_bar^n / (n_bar + 1)^{n+1}`.
pub fn make_thermal(n_bar: f64, trunc: impl Into<Truncation>) -> Result<FockDensity> {
    let trunc = trunc.into();
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(domain("n_bar", n_bar, "mean photon number must be nonnegative"));
    }
    let q = n_bar / (n_bar + 1.0);
    let leakage = q.powi(trunc.n_max as i32 + 1);
    if leakage > trunc.leakage_budget {
        let required_n_max = (trunc.leakage_budget.ln() / q.ln()).ceil() as usize;
        return Err(Error::Truncation {
            leakage,
            budget: trunc.leakage_budget,
            n_max: trunc.n_max,
            required_n_max,
        });
    }
    let space = FockSpace::Single { n_max: trunc.n_max };
    let diag: Vec<C64> = (0..=trunc.n_max)
        .map(|n| C64::new(q.powi(n as i32) / (n_bar + 1.0), 0.0))
        .collect();
    FockDensity::from_matrix(space, DMatrix::from_diagonal(&DVector::from_vec(diag)))
}

/// Coherent `|beta>` in mode a and thermal `n_th` in mode b, truncated on the
/// total photon number.
pub fn coherent_thermal(beta: C64, n_th: f64, trunc: impl Into<Truncation>) -> Result<FockDensity> {
    let trunc = trunc.into();
    let a = make_coherent(beta, trunc)?.to_density();
    let b = make_thermal(n_th, trunc)?;
    FockDensity::two_mode_product(&a, &b, trunc)
}
