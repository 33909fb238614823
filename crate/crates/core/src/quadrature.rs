//! Composite Simpson quadrature on uniform grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute disagreement allowed between a Simpson estimate and its
/// refinement before the result is accepted.
pub const REFINEMENT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Simpson nodes over the prior window; odd and at least 3.
    pub node_count: usize,
    /// Number of interval-doubling passes used to confirm convergence.
    pub refinement: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 2049,
            refinement: 1,
        }
    }
}

impl QuadratureSpec {
    pub fn new(node_count: usize, refinement: usize) -> Result<Self> {
        let q = Self { node_count, refinement };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 3 || self.node_count.is_multiple_of(2) {
            return Err(Error::InvalidQuadrature(format!(
                "node_count must be odd and >= 3, got {}",
                self.node_count
            )));
        }
        if self.refinement == 0 {
            return Err(Error::InvalidQuadrature(
                "at least one refinement pass is required".into(),
            ));
        }
        Ok(())
    }

    /// Node counts for the base pass followed by every refinement.
    pub fn passes(&self) -> impl Iterator<Item = usize> {
        let base = self.node_count;
        (0..=self.refinement).map(move |k| ((base - 1) << k) + 1)
    }
}

/// Uniform grid of `n` nodes on `[lo, hi]`, endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

/// Composite Simpson rule over equally spaced samples with spacing `h`.
///
/// `samples.len()` must be odd and at least 3.
pub fn simpson(samples: &[f64], h: f64) -> Result<f64> {
    let n = samples.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidQuadrature(format!(
            "Simpson needs an odd number (>= 3) of samples, got {n}"
        )));
    }
    let interior: f64 = samples[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, &v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    Ok(h / 3.0 * (samples[0] + interior + samples[n - 1]))
}

/// Simpson weights (including `h/3`) for `n` equally spaced nodes.
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidQuadrature(format!(
            "Simpson needs an odd number (>= 3) of nodes, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect())
}

/// Integrates `f` over `[lo, hi]`, refining per `spec` and requiring the last
/// two passes to agree within [`REFINEMENT_TOLERANCE`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    refine(spec, |n| {
        let xs = uniform_grid(lo, hi, n);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        simpson(&ys, (hi - lo) / (n - 1) as f64)
    })
}

/// Runs `eval` at every pass of `spec` and accepts the finest value when the
/// last refinement moved it by no more than [`REFINEMENT_TOLERANCE`].
pub fn refine<F: FnMut(usize) -> Result<f64>>(spec: &QuadratureSpec, mut eval: F) -> Result<f64> {
    spec.validate()?;
    let mut previous: Option<f64> = None;
    let mut delta = f64::INFINITY;
    for n in spec.passes() {
        let v = eval(n)?;
        if let Some(p) = previous {
            delta = (v - p).abs();
        }
        previous = Some(v);
    }
    if delta.is_nan() || delta > REFINEMENT_TOLERANCE {
        return Err(Error::QuadratureNotConverged {
            delta,
            tolerance: REFINEMENT_TOLERANCE,
        });
    }
    Ok(previous.expect("at least two passes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let xs = uniform_grid(0.0, 2.0, 5);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x + 1.0).collect();
        let v = simpson(&ys, 0.5).unwrap();
        assert!((v - (4.0 - 2.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn weights_agree_with_rule() {
        let ys = [1.0, 3.0, -2.0, 5.0, 0.5];
        let w = simpson_weights(5, 0.1).unwrap();
        let dot: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
        assert!((dot - simpson(&ys, 0.1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rejects_even_counts() {
        assert!(simpson(&[1.0, 2.0], 1.0).is_err());
        assert!(QuadratureSpec::new(4, 1).is_err());
        assert!(QuadratureSpec::new(5, 0).is_err());
    }

    #[test]
    fn passes_double_intervals() {
        let q = QuadratureSpec::new(5, 2).unwrap();
        assert_eq!(q.passes().collect::<Vec<_>>(), vec![5, 9, 17]);
    }

    #[test]
    fn integrate_sine() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, &QuadratureSpec::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_reports_non_convergence() {
        let q = QuadratureSpec::new(3, 1).unwrap();
        let r = integrate(|x| (30.0 * x).sin(), 0.0, 3.0, &q);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }
}
