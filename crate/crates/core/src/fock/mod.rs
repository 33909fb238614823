//! Truncated Fock-space simulator.
//!
//! This module is the brute-force oracle for every closed-form expression in
//! the crate: it builds probe states as explicit amplitude vectors or density
//! matrices, applies the phase and SU(2) encodings, and evaluates Born
//! probabilities, moments and quantum Fisher information directly.
//!
//! Truncation never renormalises. Each constructor computes the probability
//! mass lost above `n_max` and fails with [`Error::Truncation`] when it
//! exceeds the leakage budget of the supplied [`Truncation`].
//!
//! Two-mode spaces are truncated on the *total* photon number
//! `n_a + n_b <= n_max`. `J_y` conserves the total, so each total-number
//! block is closed under the SU(2) evolution and is exponentiated exactly.

mod evolve;
mod measure;
mod states;

pub use evolve::{su2_unitary_block, EvolvePhase};
pub use measure::{born_prob, expectation, qfi_mixed, qfi_pure, state_expectation, Effect};
pub use states::{coherent_thermal, make_coherent, make_smsvs, make_thermal};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default truncation leakage budget.
pub const DEFAULT_LEAKAGE: f64 = 1e-10;

/// Tolerance on Hermiticity of operators and density matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Photon-number cutoff plus the probability mass allowed above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_max: usize,
    pub leakage_budget: f64,
}

impl Truncation {
    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            leakage_budget: DEFAULT_LEAKAGE,
        }
    }

    pub fn with_leakage_budget(mut self, budget: f64) -> Self {
        self.leakage_budget = budget;
        self
    }
}

impl From<usize> for Truncation {
    fn from(n_max: usize) -> Self {
        Self::new(n_max)
    }
}

/// Index set of a truncated one- or two-mode Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FockSpace {
    /// `|n>`, `0 <= n <= n_max`.
    Single { n_max: usize },
    /// `|n_a, n_b>` with `n_a + n_b <= n_max`, grouped by total photon
    /// number; within block `n` position `k` holds `|n - k, k>`.
    Two { n_max: usize },
}

fn triangular(n: usize) -> usize {
    n * (n + 1) / 2
}

impl FockSpace {
    pub fn n_max(&self) -> usize {
        match *self {
            FockSpace::Single { n_max } | FockSpace::Two { n_max } => n_max,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FockSpace::Single { n_max } => n_max + 1,
            FockSpace::Two { n_max } => triangular(n_max + 1),
        }
    }

    pub fn is_two_mode(&self) -> bool {
        matches!(self, FockSpace::Two { .. })
    }

    /// Position of `|n_a, n_b>` in a two-mode space.
    pub fn index2(&self, n_a: usize, n_b: usize) -> Option<usize> {
        match *self {
            FockSpace::Two { n_max } if n_a + n_b <= n_max => Some(triangular(n_a + n_b) + n_b),
            _ => None,
        }
    }

    /// Photon numbers `(n_a, n_b)` of every basis vector; `n_b = 0` for one mode.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        match *self {
            FockSpace::Single { n_max } => (0..=n_max).map(|n| (n, 0)).collect(),
            FockSpace::Two { n_max } => (0..=n_max).flat_map(|n| (0..=n).map(move |k| (n - k, k))).collect(),
        }
    }

    /// Index range of the total-photon-number block `n` in a two-mode space.
    pub fn block(&self, n: usize) -> std::ops::Range<usize> {
        triangular(n)..triangular(n + 1)
    }

    fn same(&self, other: &FockSpace) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

/// Pure state: complex amplitudes over a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    space: FockSpace,
    amplitudes: DVector<C64>,
}

impl FockState {
    pub fn from_amplitudes(space: FockSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(amplitudes.len(), space.dim()));
        }
        Ok(Self { space, amplitudes })
    }

    /// Number state `|n>` of a single mode.
    pub fn number(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::WrongSpace(format!("|{n}> does not fit below n_max = {n_max}")));
        }
        let space = FockSpace::Single { n_max };
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[n] = C64::new(1.0, 0.0);
        Ok(Self { space, amplitudes })
    }

    /// Normalised superposition `sum_k c_k |n_k>` of single-mode number states.
    pub fn superposition(terms: &[(usize, C64)], n_max: usize) -> Result<Self> {
        let space = FockSpace::Single { n_max };
        let mut amplitudes = DVector::zeros(space.dim());
        for &(n, c) in terms {
            if n > n_max {
                return Err(Error::WrongSpace(format!("|{n}> does not fit below n_max = {n_max}")));
            }
            amplitudes[n] += c;
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::WrongSpace("superposition has zero norm".into()));
        }
        amplitudes /= C64::new(norm, 0.0);
        Ok(Self { space, amplitudes })
    }

    /// `|psi_a> (x) |psi_b>` restricted to `n_a + n_b <= n_max`.
    pub fn two_mode_product(a: &FockState, b: &FockState, trunc: impl Into<Truncation>) -> Result<Self> {
        let trunc = trunc.into();
        let (pa, pb) = (single_n_max(&a.space)?, single_n_max(&b.space)?);
        let space = FockSpace::Two { n_max: trunc.n_max };
        let mut amplitudes = DVector::zeros(space.dim());
        for (i, (na, nb)) in space.labels().into_iter().enumerate() {
            if na <= pa && nb <= pb {
                amplitudes[i] = a.amplitudes[na] * b.amplitudes[nb];
            }
        }
        let state = Self { space, amplitudes };
        let weights_a: Vec<f64> = a.amplitudes.iter().map(|c| c.norm_sqr()).collect();
        let weights_b: Vec<f64> = b.amplitudes.iter().map(|c| c.norm_sqr()).collect();
        check_product_leakage(&weights_a, &weights_b, trunc)?;
        Ok(state)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Photon-number distribution `|c_n|^2` (single mode) or the joint
    /// distribution in basis order (two modes).
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> FockDensity {
        FockDensity {
            space: self.space,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density matrix over a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    space: FockSpace,
    matrix: DMatrix<C64>,
}

impl FockDensity {
    pub fn from_matrix(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(matrix.nrows(), space.dim()));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { space, matrix })
    }

    /// `rho_a (x) rho_b` restricted to `n_a + n_b <= n_max`.
    pub fn two_mode_product(a: &FockDensity, b: &FockDensity, trunc: impl Into<Truncation>) -> Result<Self> {
        let trunc = trunc.into();
        let (pa, pb) = (single_n_max(&a.space)?, single_n_max(&b.space)?);
        let space = FockSpace::Two { n_max: trunc.n_max };
        let labels = space.labels();
        let dim = space.dim();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let (na, nb) = labels[i];
            let (ma, mb) = labels[j];
            if na <= pa && ma <= pa && nb <= pb && mb <= pb {
                a.matrix[(na, ma)] * b.matrix[(nb, mb)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        check_product_leakage(&a.populations(), &b.populations(), trunc)?;
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    /// Diagonal of the density matrix.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    /// Checks Hermiticity, trace within `[1 - budget, 1]` and positivity.
    pub fn validate(&self, leakage_budget: f64) -> Result<()> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-12 || tr < 1.0 - leakage_budget {
            return Err(Error::Truncation {
                leakage: 1.0 - tr,
                budget: leakage_budget,
                n_max: self.space.n_max(),
                required_n_max: self.space.n_max() + 1,
            });
        }
        let (values, _) = hermitian_eigen(&self.matrix)?;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(Error::InvalidEffect(format!("density matrix has eigenvalue {min}")));
        }
        Ok(())
    }
}

/// Operator on a [`FockSpace`]; `hermitian` is verified at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    space: FockSpace,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl FockOperator {
    /// Wraps `matrix`; when `hermitian` is set it must equal its adjoint
    /// within [`HERMITIAN_TOL`].
    pub fn new(space: FockSpace, matrix: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch(matrix.nrows(), space.dim()));
        }
        if hermitian {
            let dev = hermitian_deviation(&matrix);
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(Self {
            space,
            matrix,
            hermitian,
        })
    }

    pub fn identity(space: FockSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::identity(space.dim(), space.dim()),
            hermitian: true,
        }
    }

    /// `n = a^dag a` on one mode, or the total photon number on two modes.
    pub fn number(space: FockSpace) -> Self {
        let diag: Vec<C64> = space
            .labels()
            .into_iter()
            .map(|(na, nb)| C64::new((na + nb) as f64, 0.0))
            .collect();
        Self::diagonal(space, diag)
    }

    /// `n_a` on a two-mode space.
    pub fn number_a(space: FockSpace) -> Result<Self> {
        two_mode(&space)?;
        let diag = space
            .labels()
            .into_iter()
            .map(|(na, _)| C64::new(na as f64, 0.0))
            .collect();
        Ok(Self::diagonal(space, diag))
    }

    /// `n_b` on a two-mode space.
    pub fn number_b(space: FockSpace) -> Result<Self> {
        two_mode(&space)?;
        let diag = space
            .labels()
            .into_iter()
            .map(|(_, nb)| C64::new(nb as f64, 0.0))
            .collect();
        Ok(Self::diagonal(space, diag))
    }

    /// `J_y = -(i/2)(a^dag b - a b^dag)`.
    ///
    /// With this sign `<1,0| exp(-i theta J_y) |1,0> = cos(theta/2)`.
    pub fn j_y(space: FockSpace) -> Result<Self> {
        two_mode(&space)?;
        let dim = space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, (na, nb)) in space.labels().into_iter().enumerate() {
            if nb > 0 {
                let j = space.index2(na + 1, nb - 1).expect("same block");
                m[(j, i)] += C64::new(0.0, -0.5 * (((na + 1) * nb) as f64).sqrt());
            }
            if na > 0 {
                let j = space.index2(na - 1, nb + 1).expect("same block");
                m[(j, i)] += C64::new(0.0, 0.5 * ((na * (nb + 1)) as f64).sqrt());
            }
        }
        Ok(Self {
            space,
            matrix: m,
            hermitian: true,
        })
    }

    /// `|psi><psi|`.
    pub fn projector(psi: &FockState) -> Self {
        Self {
            space: psi.space,
            matrix: &psi.amplitudes * psi.amplitudes.adjoint(),
            hermitian: true,
        }
    }

    fn diagonal(space: FockSpace, diag: Vec<C64>) -> Self {
        Self {
            space,
            matrix: DMatrix::from_diagonal(&DVector::from_vec(diag)),
            hermitian: true,
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        self.space.same(&other.space)?;
        let matrix = &self.matrix * &other.matrix;
        let hermitian = self.hermitian && other.hermitian && hermitian_deviation(&matrix) <= HERMITIAN_TOL;
        Ok(Self {
            space: self.space,
            matrix,
            hermitian,
        })
    }

    pub fn square(&self) -> FockOperator {
        self.compose(self).expect("same space")
    }
}

/// Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian
/// matrix. Only the lower triangle is read.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = m.nrows();
    let fm = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::LinearSolve(format!("Hermitian eigendecomposition: {e:?}")))?;
    let values = eig.S().column_vector().iter().map(|c| c.re).collect();
    let u = eig.U();
    Ok((values, DMatrix::from_fn(n, n, |i, j| u[(i, j)])))
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn single_n_max(space: &FockSpace) -> Result<usize> {
    match *space {
        FockSpace::Single { n_max } => Ok(n_max),
        FockSpace::Two { .. } => Err(Error::WrongSpace("expected a single-mode factor".into())),
    }
}

fn two_mode(space: &FockSpace) -> Result<()> {
    if space.is_two_mode() {
        Ok(())
    } else {
        Err(Error::WrongSpace("operator needs a two-mode space".into()))
    }
}

/// Mass of `pa (x) pb` outside `n_a + n_b <= n`.
fn product_leakage(pa: &[f64], pb: &[f64], n: usize) -> f64 {
    let kept: f64 = pa
        .iter()
        .enumerate()
        .take(n + 1)
        .map(|(na, wa)| wa * pb.iter().take(n + 1 - na).sum::<f64>())
        .sum();
    1.0 - kept
}

fn check_product_leakage(pa: &[f64], pb: &[f64], trunc: Truncation) -> Result<()> {
    let leakage = product_leakage(pa, pb, trunc.n_max);
    if leakage <= trunc.leakage_budget {
        return Ok(());
    }
    let reach = pa.len() + pb.len() - 2;
    let required_n_max = (trunc.n_max..=reach)
        .find(|&n| product_leakage(pa, pb, n) <= trunc.leakage_budget)
        .unwrap_or(reach + 1);
    Err(Error::Truncation {
        leakage,
        budget: trunc.leakage_budget,
        n_max: trunc.n_max,
        required_n_max,
    })
}
