//! Legendre polynomials and the 1D hierarchic shape functions on `[-1, 1]`.
//!
//! ```text
//!   N_1(ξ) = (1 - ξ)/2,   N_2(ξ) = (1 + ξ)/2,
//!   N_m(ξ) = (P_{m-1}(ξ) - P_{m-3}(ξ)) / sqrt(2(2m - 3)),   m >= 3
//! ```
//!
//! Every `N_m` with `m >= 3` vanishes at both endpoints. Arguments outside
//! `[-1, 1]` are a caller bug; debug builds assert on them.

#[inline]
fn check_coord(xi: f64) {
    debug_assert!(
        (-1.0 - 1e-12..=1.0 + 1e-12).contains(&xi),
        "reference coordinate {xi} outside [-1, 1]"
    );
}

/// `P_n(xi)` by the three-term recurrence.
pub fn legendre_eval(n: usize, xi: f64) -> f64 {
    legendre_eval_with_deriv(n, xi).0
}

/// `P_n'(xi)` via `P'_{k+1} = P'_{k-1} + (2k + 1) P_k`.
pub fn legendre_deriv(n: usize, xi: f64) -> f64 {
    legendre_eval_with_deriv(n, xi).1
}

/// `(P_n(xi), P_n'(xi))` in a single sweep.
pub fn legendre_eval_with_deriv(n: usize, xi: f64) -> (f64, f64) {
    check_coord(xi);
    if n == 0 {
        return (1.0, 0.0);
    }
    // (P_{k-1}, P_k) and (P'_{k-1}, P'_k), starting at k = 1.
    let (mut p_prev, mut p) = (1.0, xi);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * xi * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Fills `values[k] = P_k(xi)` and `derivs[k] = P_k'(xi)` for `k < values.len()`.
pub fn legendre_table(xi: f64, values: &mut [f64], derivs: &mut [f64]) {
    check_coord(xi);
    assert_eq!(values.len(), derivs.len());
    let n = values.len();
    if n == 0 {
        return;
    }
    values[0] = 1.0;
    derivs[0] = 0.0;
    if n == 1 {
        return;
    }
    values[1] = xi;
    derivs[1] = 1.0;
    for k in 1..n - 1 {
        let kf = k as f64;
        values[k + 1] = ((2.0 * kf + 1.0) * xi * values[k] - kf * values[k - 1]) / (kf + 1.0);
        derivs[k + 1] = derivs[k - 1] + (2.0 * kf + 1.0) * values[k];
    }
}

#[inline]
fn scale(m: usize) -> f64 {
    1.0 / (2.0 * (2.0 * m as f64 - 3.0)).sqrt()
}

/// Hierarchic shape function `N_m(xi)`, `m >= 1`.
pub fn shape1d_eval(m: usize, xi: f64) -> f64 {
    assert!(m >= 1, "1D shape functions are numbered from 1");
    check_coord(xi);
    match m {
        1 => 0.5 * (1.0 - xi),
        2 => 0.5 * (1.0 + xi),
        _ => scale(m) * (legendre_eval(m - 1, xi) - legendre_eval(m - 3, xi)),
    }
}

/// Derivative `N_m'(xi)`.
pub fn shape1d_deriv(m: usize, xi: f64) -> f64 {
    assert!(m >= 1, "1D shape functions are numbered from 1");
    check_coord(xi);
    match m {
        1 => -0.5,
        2 => 0.5,
        _ => scale(m) * (legendre_deriv(m - 1, xi) - legendre_deriv(m - 3, xi)),
    }
}

/// Values and derivatives of `N_1 ..= N_{m_max}` at one point.
///
/// Entry `k` of each output holds `N_{k+1}`; both slices must have length
/// `m_max`. The Legendre table is built once, so the cost is `O(m_max)`.
pub fn shape1d_table(xi: f64, values: &mut [f64], derivs: &mut [f64]) {
    assert_eq!(values.len(), derivs.len());
    let m_max = values.len();
    if m_max == 0 {
        return;
    }
    let mut p = vec![0.0; m_max.max(2)];
    let mut dp = vec![0.0; m_max.max(2)];
    legendre_table(xi, &mut p, &mut dp);
    values[0] = 0.5 * (1.0 - xi);
    derivs[0] = -0.5;
    if m_max >= 2 {
        values[1] = 0.5 * (1.0 + xi);
        derivs[1] = 0.5;
    }
    for m in 3..=m_max {
        let c = scale(m);
        values[m - 1] = c * (p[m - 1] - p[m - 3]);
        derivs[m - 1] = c * (dp[m - 1] - dp[m - 3]);
    }
}

/// `N_m` at many points.
pub fn shape1d_eval_many(m: usize, xis: &[f64]) -> Vec<f64> {
    xis.iter().map(|&xi| shape1d_eval(m, xi)).collect()
}

/// `N_m'` at many points.
pub fn shape1d_deriv_many(m: usize, xis: &[f64]) -> Vec<f64> {
    xis.iter().map(|&xi| shape1d_deriv(m, xi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binomial(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Explicit expansion `P_n(x) = 2^-n Σ_k (-1)^k C(n,k) C(2n-2k, n) x^(n-2k)`.
    fn legendre_explicit(n: u64, x: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..=n / 2 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binomial(n, k) * binomial(2 * n - 2 * k, n) * x.powi((n - 2 * k) as i32);
        }
        s / 2f64.powi(n as i32)
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_eval(0, 0.37), 1.0);
        assert_eq!(legendre_eval(1, -0.5), -0.5);
        assert_abs_diff_eq!(legendre_eval(2, 0.5), -0.125, epsilon = 1e-15);
        assert_eq!(legendre_deriv(0, 0.9), 0.0);
        assert_eq!(legendre_deriv(1, 0.9), 1.0);
        assert_abs_diff_eq!(legendre_deriv(2, 0.5), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn recurrence_matches_explicit_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            for n in 0..=10 {
                assert_abs_diff_eq!(legendre_eval(n, x), legendre_explicit(n as u64, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn table_agrees_with_scalar() {
        let mut v = [0.0; 9];
        let mut d = [0.0; 9];
        legendre_table(0.3, &mut v, &mut d);
        for n in 0..9 {
            assert_abs_diff_eq!(v[n], legendre_eval(n, 0.3), epsilon = 1e-15);
            assert_abs_diff_eq!(d[n], legendre_deriv(n, 0.3), epsilon = 1e-13);
        }
        let mut sv = [0.0; 9];
        let mut sd = [0.0; 9];
        shape1d_table(-0.41, &mut sv, &mut sd);
        for m in 1..=9 {
            assert_abs_diff_eq!(sv[m - 1], shape1d_eval(m, -0.41), epsilon = 1e-15);
            assert_abs_diff_eq!(sd[m - 1], shape1d_deriv(m, -0.41), epsilon = 1e-13);
        }
    }

    #[test]
    fn shape_examples() {
        assert_eq!(shape1d_eval(1, -1.0), 1.0);
        assert_abs_diff_eq!(shape1d_eval(3, 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(shape1d_eval(3, 0.0), -(3.0f64 / 8.0).sqrt(), epsilon = 1e-14);
        assert_eq!(shape1d_deriv(1, 0.3), -0.5);
        assert_eq!(shape1d_deriv(2, -0.7), 0.5);
        assert_abs_diff_eq!(shape1d_deriv(3, 0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bubbles_vanish_at_endpoints() {
        for m in 3..=20 {
            assert!(shape1d_eval(m, -1.0).abs() <= 1e-13, "m = {m}");
            assert!(shape1d_eval(m, 1.0).abs() <= 1e-13, "m = {m}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for m in 1..=10 {
            for i in 0..=40 {
                let x = -0.95 + 1.9 * i as f64 / 40.0;
                let fd = (shape1d_eval(m, x + h) - shape1d_eval(m, x - h)) / (2.0 * h);
                let d = shape1d_deriv(m, x);
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "m = {m}, x = {x}");
            }
        }
    }

    #[test]
    fn batch_matches_scalar() {
        let xs = [-1.0, -0.2, 0.0, 0.6, 1.0];
        let v = shape1d_eval_many(5, &xs);
        let d = shape1d_deriv_many(5, &xs);
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(v[i], shape1d_eval(5, x));
            assert_eq!(d[i], shape1d_deriv(5, x));
        }
    }

    proptest::proptest! {
        #[test]
        fn parity(m in 3usize..=14, x in -1.0f64..=1.0) {
            let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let lhs = shape1d_eval(m, -x);
            let rhs = sign * shape1d_eval(m, x);
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-13);
        }
    }
}
