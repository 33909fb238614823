use super::{hermitian_deviation, hermitian_eigen, FockDensity, FockOperator, FockSpace, FockState, C64};
use crate::error::{Error, Result};

/// Slack allowed outside `[0, 1]` before a probability is an error.
const PROBABILITY_SLACK: f64 = 1e-10;

/// Eigenvalue pairs whose sum is below this are skipped in the spectral QFI.
const QFI_PAIR_CUTOFF: f64 = 1e-12;

/// A POVM element: Hermitian with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(FockOperator);

impl Effect {
    /// Validates `op` by diagonalisation.
    pub fn new(op: FockOperator) -> Result<Self> {
        let dev = hermitian_deviation(op.matrix());
        if dev > super::HERMITIAN_TOL {
            return Err(Error::InvalidEffect(format!("not Hermitian (deviation {dev:e})")));
        }
        let (values, _) = hermitian_eigen(op.matrix())?;
        for &l in &values {
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&l) {
                return Err(Error::InvalidEffect(format!("eigenvalue {l} outside [0, 1]")));
            }
        }
        Ok(Self(op))
    }

    /// `|psi><psi|` for a unit vector `psi`.
    pub fn projector(psi: &FockState) -> Result<Self> {
        let norm = psi.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidEffect(format!(
                "projector onto a vector of norm^2 {norm}"
            )));
        }
        Ok(Self(FockOperator::projector(psi)))
    }

    pub fn identity(space: FockSpace) -> Self {
        Self(FockOperator::identity(space))
    }

    /// `I - self`.
    pub fn complement(&self) -> Self {
        let space = self.0.space();
        let id = FockOperator::identity(space);
        Self(FockOperator::new(space, id.matrix() - self.0.matrix(), true).expect("Hermitian difference"))
    }

    pub fn operator(&self) -> &FockOperator {
        &self.0
    }
}

fn trace_product(rho: &FockDensity, op: &FockOperator) -> Result<C64> {
    rho.space().same(&op.space())?;
    let (r, a) = (rho.matrix(), op.matrix());
    let n = r.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += r[(i, j)] * a[(j, i)];
        }
    }
    Ok(acc)
}

/// `Tr(rho Pi)`; values within `1e-10` outside `[0, 1]` are clamped.
pub fn born_prob(rho: &FockDensity, effect: &Effect) -> Result<f64> {
    let p = trace_product(rho, effect.operator())?.re;
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `Tr(rho A)` for Hermitian `A`.
pub fn expectation(rho: &FockDensity, op: &FockOperator) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_deviation(op.matrix())));
    }
    Ok(trace_product(rho, op)?.re)
}

/// `<psi|A|psi>` for Hermitian `A`.
pub fn state_expectation(psi: &FockState, op: &FockOperator) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_deviation(op.matrix())));
    }
    psi.space().same(&op.space())?;
    Ok(psi.amplitudes().dotc(&(op.matrix() * psi.amplitudes())).re)
}

/// `4 (<H^2> - <H>^2)` for a pure state.
pub fn qfi_pure(psi: &FockState, h: &FockOperator) -> Result<f64> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_deviation(h.matrix())));
    }
    psi.space().same(&h.space())?;
    let hpsi = h.matrix() * psi.amplitudes();
    let mean = psi.amplitudes().dotc(&hpsi).re;
    let second = hpsi.norm_squared();
    Ok((4.0 * (second - mean * mean)).max(0.0))
}

/// Spectral QFI `2 sum_{ij} (l_i - l_j)^2 / (l_i + l_j) |<i|H|j>|^2`.
pub fn qfi_mixed(rho: &FockDensity, h: &FockOperator) -> Result<f64> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_deviation(h.matrix())));
    }
    rho.space().same(&h.space())?;
    let (l, v) = hermitian_eigen(rho.matrix())?;
    let hv = v.adjoint() * h.matrix() * &v;
    let n = l.len();
    let mut f = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = l[i] + l[j];
            if s < QFI_PAIR_CUTOFF {
                continue;
            }
            let d = l[i] - l[j];
            f += d * d / s * hv[(i, j)].norm_sqr();
        }
    }
    Ok((2.0 * f).max(0.0))
}
