//! Optimal bias functions.
//!
//! The optimal bias minimises `∫ p (b^2 + (f' + b')^2 / K) dx` over `[0, a]`.
//! Its Euler-Lagrange equation is the linear two-point problem
//!
//! ```text
//! p b = d/dx [ p (f' + b') / K ],     b'(0) = -f'(0),  b'(a) = -f'(a)
//! ```
//!
//! [`solve_bias_bvp`] discretises it with centred second-order differences
//! and ghost-node Neumann rows, giving a tridiagonal system. For a uniform
//! prior, constant `K` and `f(x) = x` the solution is [`analytic_bias`].
//! [`bound_integral`] evaluates the functional itself so that either bias
//! can be checked against the closed-form bound.
//!
//! The Neumann rows are applied even when `K` varies strongly with `x`.

use crate::error::{domain, Error, Result};
use crate::quadrature::{simpson, uniform_grid};

/// Above this value of `a sqrt(K)` the analytic bias is evaluated in
/// exponential form; `cosh`/`sinh` overflow near 710.
const EXP_FORM_THRESHOLD: f64 = 40.0;

const PRIOR_NORM_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-10;

/// Sampled coefficients of the bias problem on a uniform grid over `[0, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalProblem {
    a: f64,
    rate: Vec<f64>,
    prior: Vec<f64>,
    fprime: Vec<f64>,
}

impl VariationalProblem {
    /// Uniform prior, constant rate, `f(x) = x`.
    pub fn uniform(rate: f64, a: f64, grid_n: usize) -> Result<Self> {
        Self::from_fns(a, grid_n, |_| rate, |_| 1.0 / a, |_| 1.0)
    }

    pub fn from_fns(
        a: f64,
        grid_n: usize,
        rate: impl Fn(f64) -> f64,
        prior: impl Fn(f64) -> f64,
        fprime: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if grid_n < 3 {
            return Err(Error::InvalidProblem(format!("grid_n must be >= 3, got {grid_n}")));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(domain("a", a, "prior window width must be positive and finite"));
        }
        let xs = uniform_grid(0.0, a, grid_n);
        Self::from_samples(
            a,
            xs.iter().map(|&x| rate(x)).collect(),
            xs.iter().map(|&x| prior(x)).collect(),
            xs.iter().map(|&x| fprime(x)).collect(),
        )
    }

    pub fn from_samples(a: f64, rate: Vec<f64>, prior: Vec<f64>, fprime: Vec<f64>) -> Result<Self> {
        let n = rate.len();
        if n < 3 {
            return Err(Error::InvalidProblem(format!("grid_n must be >= 3, got {n}")));
        }
        if prior.len() != n || fprime.len() != n {
            return Err(Error::InvalidProblem(format!(
                "sample lengths differ: rate {n}, prior {}, fprime {}",
                prior.len(),
                fprime.len()
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(domain("a", a, "prior window width must be positive and finite"));
        }
        if let Some(k) = rate.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(domain("K(x)", *k, "rate samples must be positive"));
        }
        if let Some(p) = prior.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(domain("p(x)", *p, "prior samples must be nonnegative"));
        }
        if let Some(f) = fprime.iter().find(|f| !f.is_finite()) {
            return Err(domain("f'(x)", *f, "must be finite"));
        }
        let h = a / (n - 1) as f64;
        let mass = if n % 2 == 1 {
            simpson(&prior, h)?
        } else {
            h * (prior.iter().sum::<f64>() - 0.5 * (prior[0] + prior[n - 1]))
        };
        if (mass - 1.0).abs() > PRIOR_NORM_TOL {
            return Err(Error::InvalidProblem(format!("prior integrates to {mass}, not 1")));
        }
        Ok(Self { a, rate, prior, fprime })
    }

    pub fn width(&self) -> f64 {
        self.a
    }

    pub fn grid_n(&self) -> usize {
        self.rate.len()
    }

    pub fn step(&self) -> f64 {
        self.a / (self.grid_n() - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        uniform_grid(0.0, self.a, self.grid_n())
    }

    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn fprime(&self) -> &[f64] {
        &self.fprime
    }
}

/// Bias sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasGrid {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// `(b'(0), b'(a))` from second-order one-sided differences.
    pub end_slopes: (f64, f64),
    /// Relative residual of the linear system, when produced by the solver.
    pub residual: Option<f64>,
}

impl BiasGrid {
    pub fn from_values(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 || xs.len() != n {
            return Err(Error::GridMismatch(format!(
                "need matching grids with >= 3 nodes, got {} nodes and {n} values",
                xs.len()
            )));
        }
        let h = xs[1] - xs[0];
        let left = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
        let right = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
        Ok(Self {
            xs,
            values,
            end_slopes: (left, right),
            residual: None,
        })
    }

    /// [`analytic_bias`] sampled at `grid_n` nodes.
    pub fn analytic(rate: f64, a: f64, grid_n: usize) -> Result<Self> {
        if grid_n < 3 {
            return Err(Error::InvalidProblem(format!("grid_n must be >= 3, got {grid_n}")));
        }
        let xs = uniform_grid(0.0, a, grid_n);
        let values = xs
            .iter()
            .map(|&x| analytic_bias(rate, a, x))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(xs, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `b(x) = [cosh(s(a-x)) - cosh(s x)] / (s sinh(s a))`, `s = sqrt(K)`.
pub fn analytic_bias(rate: f64, a: f64, x: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(domain("K", rate, "rate must be positive and finite"));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(domain("a", a, "prior window width must be positive and finite"));
    }
    if !(0.0..=a).contains(&x) {
        return Err(domain("x", x, "outside the prior window [0, a]"));
    }
    let s = rate.sqrt();
    if s * a > EXP_FORM_THRESHOLD {
        // Divide numerator and denominator by e^{sa}/2.
        let num = (-s * x).exp() + (-s * (2.0 * a - x)).exp() - (s * (x - a)).exp() - (-s * (x + a)).exp();
        let den = s * (1.0 - (-2.0 * s * a).exp());
        return Ok(num / den);
    }
    Ok(((s * (a - x)).cosh() - (s * x).cosh()) / (s * (s * a).sinh()))
}

/// Centred first derivative on a uniform grid, second-order one-sided at the
/// ends.
fn gradient(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Tridiagonal system `sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
#[derive(Debug, Clone)]
struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl Tridiagonal {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.sub
            .iter()
            .chain(&self.diag)
            .chain(&self.sup)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Gaussian elimination with partial pivoting; pivoting fills one extra
    /// superdiagonal.
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut sub = self.sub.clone();
        let mut diag = self.diag.clone();
        let mut sup = self.sup.clone();
        let mut sup2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if diag[i].abs() >= sub[i].abs() {
                if diag[i] == 0.0 {
                    return Err(Error::LinearSolve(format!("zero pivot at row {i}")));
                }
                let m = sub[i] / diag[i];
                diag[i + 1] -= m * sup[i];
                b[i + 1] -= m * b[i];
                sub[i] = 0.0;
            } else {
                let m = diag[i] / sub[i];
                let next_diag = diag[i + 1];
                let next_sup = if i + 1 < n - 1 { sup[i + 1] } else { 0.0 };
                let cur_sup = sup[i];
                diag[i] = sub[i];
                sup[i] = next_diag;
                if i < n - 2 {
                    sup2[i] = next_sup;
                    sup[i + 1] = -m * next_sup;
                }
                diag[i + 1] = cur_sup - m * next_diag;
                let bi = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bi - m * b[i + 1];
                sub[i] = 0.0;
            }
        }
        if diag[n - 1] == 0.0 || !diag[n - 1].is_finite() {
            return Err(Error::LinearSolve(format!("zero pivot at row {}", n - 1)));
        }
        let mut x = vec![0.0; n];
        x[n - 1] = b[n - 1] / diag[n - 1];
        x[n - 2] = (b[n - 2] - sup[n - 2] * x[n - 1]) / diag[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (b[i] - sup[i] * x[i + 1] - sup2[i] * x[i + 2]) / diag[i];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("non-finite solution".into()));
        }
        Ok(x)
    }
}

fn zero_prior_interval(p: &VariationalProblem) -> Option<(f64, f64)> {
    let xs = p.xs();
    let first = p.prior.iter().position(|&v| v == 0.0)?;
    let len = p.prior[first..].iter().take_while(|&&v| v == 0.0).count();
    Some((xs[first], xs[first + len - 1]))
}

/// Solves the Euler-Lagrange problem for the optimal bias.
pub fn solve_bias_bvp(p: &VariationalProblem) -> Result<BiasGrid> {
    if let Some((start, end)) = zero_prior_interval(p) {
        return Err(Error::SingularDiscretization { start, end });
    }
    let n = p.grid_n();
    let h = p.step();
    let h2 = h * h;
    // c = p/K is the diffusion coefficient, g = c f' the source flux.
    let c: Vec<f64> = p.prior.iter().zip(&p.rate).map(|(p, k)| p / k).collect();
    let g: Vec<f64> = c.iter().zip(&p.fprime).map(|(c, f)| c * f).collect();
    let dc = gradient(&c, h);
    let dg = gradient(&g, h);

    let lower: Vec<f64> = (0..n).map(|i| c[i] / h2 - dc[i] / (2.0 * h)).collect();
    let upper: Vec<f64> = (0..n).map(|i| c[i] / h2 + dc[i] / (2.0 * h)).collect();
    let diag: Vec<f64> = (0..n).map(|i| -2.0 * c[i] / h2 - p.prior[i]).collect();
    let mut rhs: Vec<f64> = dg.iter().map(|v| -v).collect();

    // Ghost nodes: b[-1] = b[1] + 2h f'(0), b[n] = b[n-2] - 2h f'(a).
    let mut sup: Vec<f64> = upper[..n - 1].to_vec();
    let mut sub: Vec<f64> = lower[1..].to_vec();
    sup[0] += lower[0];
    rhs[0] -= lower[0] * 2.0 * h * p.fprime[0];
    sub[n - 2] += upper[n - 1];
    rhs[n - 1] += upper[n - 1] * 2.0 * h * p.fprime[n - 1];

    let system = Tridiagonal { sub, diag, sup };
    let values = system.solve(&rhs)?;

    let applied = system.apply(&values);
    let worst = applied.iter().zip(&rhs).fold(0.0f64, |m, (a, r)| m.max((a - r).abs()));
    let x_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r_max = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = system.max_abs() * x_max + r_max;
    let residual = if scale > 0.0 { worst / scale } else { worst };
    if residual > RESIDUAL_TOL {
        return Err(Error::LinearSolve(format!(
            "relative residual {residual:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }

    let mut grid = BiasGrid::from_values(p.xs(), values)?;
    grid.residual = Some(residual);
    Ok(grid)
}

/// `∫ p (b^2 + (f' + b')^2 / K) dx` by composite Simpson.
///
/// `b'` uses centred differences in the interior and the grid's recorded end
/// slopes at the two boundary nodes. The grid must have an odd node count.
pub fn bound_integral(b: &BiasGrid, p: &VariationalProblem) -> Result<f64> {
    let n = p.grid_n();
    if b.len() != n {
        return Err(Error::GridMismatch(format!(
            "bias has {} nodes, problem has {n}",
            b.len()
        )));
    }
    let last = *b.xs.last().expect("non-empty");
    if b.xs[0] != 0.0 || (last - p.width()).abs() > 1e-12 * p.width() {
        return Err(Error::GridMismatch(format!(
            "bias grid spans [{}, {last}], problem spans [0, {}]",
            b.xs[0],
            p.width()
        )));
    }
    if n.is_multiple_of(2) {
        return Err(Error::GridMismatch(format!(
            "Simpson quadrature needs an odd node count, got {n}"
        )));
    }
    let h = p.step();
    let v = &b.values;
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let slope = if i == 0 {
                b.end_slopes.0
            } else if i == n - 1 {
                b.end_slopes.1
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            };
            let drift = p.fprime[i] + slope;
            p.prior[i] * (v[i] * v[i] + drift * drift / p.rate[i])
        })
        .collect();
    simpson(&integrand, h)
}
