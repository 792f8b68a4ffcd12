//! Gauss-Legendre rules on `[-1, 1]` and their tensor products on the
//! reference square.

use crate::basis1d::legendre_eval_with_deriv;
use crate::{Error, Result};

pub const MAX_POINTS_1D: usize = 64;

/// A rule on `[-1, 1]^2`: points and positive weights summing to 4.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// `n x n` tensor Gauss rule, exact for `ξ^a η^b` with `a, b <= 2n - 1`.
    pub fn tensor_gauss(n: usize) -> Result<Self> {
        let (x, w) = gauss_rule_1d(n)?;
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&xj, &wj) in x.iter().zip(&w) {
            for (&xi, &wi) in x.iter().zip(&w) {
                points.push([xi, xj]);
                weights.push(wi * wj);
            }
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points per direction.
    pub fn order(&self) -> usize {
        (self.points.len() as f64).sqrt().round() as usize
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&[x, y], &w)| w * f(x, y)).sum()
    }
}

/// The default rule for degree-`p` mass and stiffness integrands: `p + 1`
/// points per direction.
pub fn reference_rule(p: usize) -> QuadRule {
    QuadRule::tensor_gauss(p + 1).expect("degree within supported range")
}

/// `n`-point Gauss-Legendre nodes (ascending) and weights.
///
/// Nodes are the roots of `P_n`, found by Newton's method from Chebyshev-like
/// initial guesses; weights are `2 / ((1 - x^2) P_n'(x)^2)`.
pub fn gauss_rule_1d(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_POINTS_1D).contains(&n) {
        return Err(Error::InvalidQuadratureOrder(n));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut root = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_eval_with_deriv(n, root);
            let step = p / dp;
            root -= step;
            deriv = dp;
            if step.abs() <= 1e-15 {
                deriv = legendre_eval_with_deriv(n, root).1;
                break;
            }
        }
        let weight = 2.0 / ((1.0 - root * root) * deriv * deriv);
        // Guesses run from the right end; mirror to keep the rule symmetric.
        x[n - 1 - i] = root;
        x[i] = -root;
        w[n - 1 - i] = weight;
        w[i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}
