use nalgebra::{DMatrix, DVector};

use super::{hermitian_eigen, FockDensity, FockOperator, FockSpace, FockState, C64};
use crate::error::{Error, Result};

/// Phase encoding `exp(i n phi)`, with `n` the single-mode photon number.
pub trait EvolvePhase: Sized {
    fn evolve_phase(&self, phi: f64) -> Result<Self>;
}

fn phase_factors(space: FockSpace, phi: f64) -> Result<Vec<C64>> {
    match space {
        FockSpace::Single { n_max } => Ok((0..=n_max).map(|n| C64::from_polar(1.0, n as f64 * phi)).collect()),
        FockSpace::Two { .. } => Err(Error::WrongSpace("phase encoding acts on a single mode".into())),
    }
}

impl EvolvePhase for FockState {
    fn evolve_phase(&self, phi: f64) -> Result<Self> {
        let f = phase_factors(self.space, phi)?;
        let amps = DVector::from_iterator(f.len(), self.amplitudes.iter().zip(&f).map(|(c, p)| c * p));
        FockState::from_amplitudes(self.space, amps)
    }
}

impl EvolvePhase for FockDensity {
    /// `rho_{nm} -> e^{i(n-m)phi} rho_{nm}`.
    fn evolve_phase(&self, phi: f64) -> Result<Self> {
        let f = phase_factors(self.space, phi)?;
        let dim = f.len();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| self.matrix[(i, j)] * f[i] * f[j].conj());
        Ok(FockDensity {
            space: self.space,
            matrix,
        })
    }
}

/// `exp(-i theta J_y)` restricted to the block of total photon number `n`,
/// via the eigendecomposition of the Hermitian generator block.
pub fn su2_unitary_block(jy: &FockOperator, n: usize, theta: f64) -> Result<DMatrix<C64>> {
    let range = jy.space().block(n);
    let size = range.len();
    let block = jy.matrix().view((range.start, range.start), (size, size)).into_owned();
    let (values, v) = hermitian_eigen(&block)?;
    let phases = DVector::from_iterator(size, values.iter().map(|&l| C64::from_polar(1.0, -theta * l)));
    Ok(&v * DMatrix::from_diagonal(&phases) * v.adjoint())
}

fn su2_blocks(space: FockSpace, theta: f64) -> Result<Vec<DMatrix<C64>>> {
    let jy = FockOperator::j_y(space)?;
    (0..=space.n_max()).map(|n| su2_unitary_block(&jy, n, theta)).collect()
}

impl FockState {
    /// `exp(-i theta J_y) |psi>`, applied block by block.
    pub fn evolve_su2(&self, theta: f64) -> Result<FockState> {
        let blocks = su2_blocks(self.space, theta)?;
        let mut out = DVector::zeros(self.space.dim());
        for (n, u) in blocks.iter().enumerate() {
            let r = self.space.block(n);
            let seg = u * self.amplitudes.rows(r.start, r.len());
            out.rows_mut(r.start, r.len()).copy_from(&seg);
        }
        FockState::from_amplitudes(self.space, out)
    }
}

impl FockDensity {
    /// `exp(-i theta J_y) rho exp(i theta J_y)`.
    ///
    /// The unitary is block diagonal in the total photon number, so each
    /// block pair `(I, J)` of `rho` transforms as `U_I rho_IJ U_J^dag`.
    pub fn evolve_su2(&self, theta: f64) -> Result<FockDensity> {
        let blocks = su2_blocks(self.space, theta)?;
        let mut out = DMatrix::zeros(self.space.dim(), self.space.dim());
        for (i, ui) in blocks.iter().enumerate() {
            let ri = self.space.block(i);
            for (j, uj) in blocks.iter().enumerate() {
                let rj = self.space.block(j);
                let sub = self.matrix.view((ri.start, rj.start), (ri.len(), rj.len()));
                if sub.iter().all(|c| c.norm_sqr() == 0.0) {
                    continue;
                }
                let t = ui * sub * uj.adjoint();
                out.view_mut((ri.start, rj.start), (ri.len(), rj.len())).copy_from(&t);
            }
        }
        Ok(FockDensity {
            space: self.space,
            matrix: out,
        })
    }
}
