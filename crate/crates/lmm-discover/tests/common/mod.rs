//! Shared oracles for the integration suites. Everything here is coded
//! independently of the library's production paths: quadrature instead of
//! symbolic expansion, finite differences instead of exact derivatives, and
//! a direct linear solve of the order conditions instead of the Lagrange
//! construction.

// each integration suite uses its own subset of these oracles
#![allow(dead_code)]

use lmm_discover::rational::{self, Rational};
use lmm_discover::schemes::Family;
use num::Zero;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact (to roundoff) for polynomials of degree
/// up to `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
        let mut prev = 1.0;
        let mut curr = x;
        for k in 2..=n {
            let next = ((2 * k - 1) as f64 * x * curr - (k - 1) as f64 * prev) / k as f64;
            prev = curr;
            curr = next;
        }
        let deriv = n as f64 * (x * curr - prev) / (x * x - 1.0);
        (curr, deriv)
    }

    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrates `f` over [0, 1] with 32-point Gauss-Legendre.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(32);
    0.5 * nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * f(0.5 * (x + 1.0)))
        .sum::<f64>()
}

/// The scaled Lagrange basis product for node `k` over the given lattice,
/// evaluated pointwise (no polynomial expansion anywhere).
pub fn lagrange_product(k: i64, lattice: &[i64], u: f64) -> f64 {
    lattice
        .iter()
        .filter(|&&i| i != k)
        .map(|&i| (u - 1.0 - i as f64) / (k - i) as f64)
        .product()
}

/// Quadrature value of the Adams coefficient integral for node `k`.
pub fn lagrange_integral_quadrature(k: i64, lattice: &[i64]) -> f64 {
    integrate_unit(|u| lagrange_product(k, lattice, u))
}

/// Derivative of the basis product at the right endpoint by Richardson
/// extrapolation of central differences (fourth order in the step).
pub fn lagrange_derivative_fd(k: i64, lattice: &[i64]) -> f64 {
    let central = |h: f64| {
        (lagrange_product(k, lattice, 1.0 + h) - lagrange_product(k, lattice, 1.0 - h)) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

/// Exact Gaussian elimination with partial (first-nonzero) pivoting.
/// Panics on singular systems; the order-condition systems are Vandermonde
/// and never singular.
pub fn solve_exact(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Vec<Rational> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("singular system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot_row[col];
            for (entry, pivot) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *entry -= &factor * pivot;
            }
            let scaled = &factor * &b[col];
            b[r] -= scaled;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for c in row + 1..n {
            acc -= &a[row][c] * &x[c];
        }
        x[row] = acc / &a[row][row];
    }
    x
}

/// `k^e` with the `0^0 = 1` convention, as a rational.
fn kpow(k: u32, e: u32) -> Rational {
    rational::int_pow(k as i64, e)
}

/// Brute-force scheme coefficients: solve the truncation-constant conditions
/// `C_m = 0` directly as an exact linear system. Returns `(alpha, beta)`
/// with the same normalization the library uses.
///
/// - AB-M fixes `alpha = (1, -1, 0, ...)`, `beta_0 = 0` and solves
///   `sum_k k^{m-1} beta_k = 1/m` for `m = 1..M`.
/// - AM-M fixes the same `alpha` and solves the system for `m = 1..M+1`
///   including `beta_0`.
/// - BDF-M fixes `beta = (1, 0, ...)` and solves `sum alpha_k = 0`,
///   `sum k alpha_k = -1`, `sum k^m alpha_k = 0` for `m = 2..M`.
pub fn order_condition_scheme(family: Family, m: u32) -> (Vec<Rational>, Vec<Rational>) {
    let one = rational::from_int(1);
    match family {
        Family::Ab => {
            let n = m as usize;
            let a: Vec<Vec<Rational>> = (1..=n)
                .map(|row| (1..=n).map(|k| kpow(k as u32, row as u32 - 1)).collect())
                .collect();
            let b: Vec<Rational> = (1..=n)
                .map(|row| &one / rational::from_int(row as i64))
                .collect();
            let solved = solve_exact(a, b);
            let mut alpha = vec![Rational::zero(); n + 1];
            alpha[0] = rational::from_int(1);
            alpha[1] = rational::from_int(-1);
            let mut beta = vec![Rational::zero(); n + 1];
            beta[1..].clone_from_slice(&solved);
            (alpha, beta)
        }
        Family::Am => {
            let n = m as usize + 1; // beta_0..beta_M
            let a: Vec<Vec<Rational>> = (1..=n)
                .map(|row| (0..n).map(|k| kpow(k as u32, row as u32 - 1)).collect())
                .collect();
            let b: Vec<Rational> = (1..=n)
                .map(|row| &one / rational::from_int(row as i64))
                .collect();
            let beta_solved = solve_exact(a, b);
            let steps = (m as usize).max(1);
            let mut alpha = vec![Rational::zero(); steps + 1];
            alpha[0] = rational::from_int(1);
            alpha[1] = rational::from_int(-1);
            let mut beta = vec![Rational::zero(); steps + 1];
            beta[..n].clone_from_slice(&beta_solved);
            (alpha, beta)
        }
        Family::Bdf => {
            let n = m as usize + 1; // alpha_0..alpha_M
            let a: Vec<Vec<Rational>> = (0..n)
                .map(|row| (0..n).map(|k| kpow(k as u32, row as u32)).collect())
                .collect();
            let mut b = vec![Rational::zero(); n];
            b[1] = rational::from_int(-1);
            let alpha = solve_exact(a, b);
            let mut beta = vec![Rational::zero(); n];
            beta[0] = rational::from_int(1);
            (alpha, beta)
        }
    }
}
