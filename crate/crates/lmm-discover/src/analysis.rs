//! Characteristic polynomials, root conditions, and stability classification
//! for dynamics discovery.
//!
//! For the forward problem, stability is governed by the first characteristic
//! polynomial `rho`. For discovery it is governed by the *reduced second*
//! characteristic polynomial `sigma_hat`, built from the nonzero support of
//! the `beta` coefficients. The graded root conditions on `sigma_hat`
//! translate into the four-way classification here:
//!
//! - all roots strictly inside the unit disc -> `Stable`;
//! - unit-modulus roots allowed but simple -> `MarginallyStable`;
//! - unit-modulus roots of multiplicity `k - 1 >= 2` -> `WeaklyStable(k)`;
//! - any root outside -> `Unstable`.
//!
//! Roots are found by Aberth-Ehrlich simultaneous iteration with a
//! companion-matrix eigenvalue fallback. Candidate roots at exactly +-1 are
//! certified (or rejected) by evaluating the exact rational polynomial, so
//! cases like the trapezoid scheme's root at -1 never hinge on a float
//! tolerance.

use std::fmt;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::{One, Zero};

use crate::rational::{self, Rational};
use crate::schemes::Scheme;
use crate::{Error, Result};

/// Float tolerance for comparing a root modulus against 1. Roots exactly at
/// +-1 are decided by exact rational evaluation instead.
pub const TOL_UNIT: f64 = 1e-8;

/// Roots closer than this are merged into a single root with summed
/// multiplicity.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Aberth-Ehrlich iteration cap.
pub const ABERTH_MAX_ITER: usize = 500;

/// Aberth-Ehrlich convergence: stop when the largest correction step is
/// below this.
pub const ABERTH_TOL: f64 = 1e-14;

/// A polynomial with exact rational coefficients, highest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharPoly {
    coeffs: Vec<Rational>,
}

impl CharPoly {
    /// Builds from highest-degree-first coefficients, trimming leading zeros.
    /// The zero polynomial is rejected.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        let first_nonzero = coeffs
            .iter()
            .position(|c| !rational::is_zero(c))
            .ok_or_else(|| Error::InvalidScheme("zero polynomial has no degree".into()))?;
        Ok(CharPoly {
            coeffs: coeffs[first_nonzero..].to_vec(),
        })
    }

    /// Coefficients, highest degree first; the leading one is nonzero.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational::to_f64).collect()
    }

    /// The polynomial `r^deg * p(1/r)`: coefficients reversed. Used for
    /// terminal-data discovery, whose roots are the reciprocals of the
    /// forward ones.
    pub fn reversed(&self) -> Result<CharPoly> {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        CharPoly::new(coeffs)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, x: &Rational) -> Rational {
        let ascending: Vec<Rational> = self.coeffs.iter().rev().cloned().collect();
        rational::poly_eval(&ascending, x)
    }

    /// Exact multiplicity of `x` as a root: the number of leading derivatives
    /// (including the value itself) that vanish exactly. Zero means `x` is
    /// not a root.
    pub fn exact_root_multiplicity(&self, x: &Rational) -> usize {
        self.exact_root_multiplicity_gaussian(x, &Rational::zero())
    }

    /// Exact multiplicity of the Gaussian-rational point `re + im i` as a
    /// root, by the same vanishing-derivative count in exact complex
    /// rational arithmetic.
    pub fn exact_root_multiplicity_gaussian(&self, re: &Rational, im: &Rational) -> usize {
        let point = ComplexRational {
            re: re.clone(),
            im: im.clone(),
        };
        let mut coeffs = self.coeffs.clone();
        let mut mult = 0;
        while mult <= self.degree() {
            let value = eval_exact_complex(&coeffs, &point);
            if !rational::is_zero(&value.re) || !rational::is_zero(&value.im) {
                break;
            }
            mult += 1;
            // the degree-th derivative is a nonzero constant, so the loop
            // always breaks before differentiating a constant
            coeffs = derivative_exact(&coeffs);
        }
        mult
    }
}

impl fmt::Display for CharPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = self.degree();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if rational::is_zero(c) && deg > 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", rational::format(c))?;
            let p = deg - i;
            if p > 0 {
                write!(f, " r^{p}")?;
            }
        }
        Ok(())
    }
}

/// Complex roots with multiplicities.
#[derive(Debug, Clone)]
pub struct RootSet {
    /// `(root value, multiplicity)` pairs; multiplicities sum to the degree.
    pub roots: Vec<(Complex64, usize)>,
    /// Largest scaled residual `|p(r)| / max(1, |r|)^deg` over the returned
    /// roots, evaluated in floats from the exact coefficients. The scaling
    /// keeps the bound meaningful for roots of large modulus, where the raw
    /// value `|p(r)|` is dominated by the conditioning of the evaluation
    /// itself.
    pub residual_bound: f64,
}

impl RootSet {
    pub fn max_modulus_root(&self) -> Option<(Complex64, usize)> {
        self.roots
            .iter()
            .copied()
            .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
    }
}

/// Outcome of the graded root-condition classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityTag {
    /// Strong root condition: every root strictly inside the unit disc.
    Stable,
    /// Algebraic root condition: unit-modulus roots exist but are simple.
    MarginallyStable,
    /// Unit-modulus roots of multiplicity `k - 1 >= 2`; the degree is
    /// reported as `k`, matching the `(k-1)`-multiplicity root condition.
    WeaklyStable(u32),
    /// Some root lies outside the unit disc.
    Unstable,
}

impl fmt::Display for StabilityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityTag::Stable => write!(f, "Stable"),
            StabilityTag::MarginallyStable => write!(f, "MarginallyStable"),
            StabilityTag::WeaklyStable(k) => write!(f, "WeaklyStable(-{k})"),
            StabilityTag::Unstable => write!(f, "Unstable"),
        }
    }
}

/// Classification plus the root that decided it. `witness` is `None` only in
/// the degenerate constant-polynomial case (BDF), where stability holds
/// vacuously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityClass {
    pub tag: StabilityTag,
    pub witness: Option<(Complex64, usize)>,
}

impl StabilityClass {
    pub fn max_root_modulus(&self) -> f64 {
        self.witness.map(|(r, _)| r.norm()).unwrap_or(0.0)
    }

    pub fn witness_multiplicity(&self) -> usize {
        self.witness.map(|(_, m)| m).unwrap_or(0)
    }
}

/// Whether discovery runs forward from initial dynamics data or backward
/// from terminal data. Terminal-data stability is governed by the
/// reversed-coefficient polynomial (reciprocal roots).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Terminal,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward => write!(f, "forward"),
            Direction::Terminal => write!(f, "terminal"),
        }
    }
}

/// Truncation-error constants up to the first nonzero one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    /// `C_0, C_1, ..., C_{order+1}`; all but the last vanish.
    pub constants: Vec<Rational>,
    /// Truncation-error order `p`: the first nonzero constant is `C_{p+1}`.
    pub order: u32,
    /// Consistency degree for discovery; equals the order.
    pub degree: u32,
    /// Order at least two forces the 1-norm of the truncation error to
    /// vanish with the mesh as well.
    pub strongly_consistent: bool,
}

/// First characteristic polynomial `rho(z) = sum_m alpha_{M-m} z^m`
/// (coefficients are `alpha` read highest-degree-first).
pub fn first_char_poly(s: &Scheme) -> CharPoly {
    CharPoly::new(s.alpha().to_vec()).expect("alpha_0 != 0")
}

/// Reduced second characteristic polynomial
/// `sigma_hat(r) = sum_{m = m0}^{M0} beta_m r^{M0 - m}`: the zero-trimmed
/// `beta` support read highest-degree-first. Leading and constant
/// coefficients are both nonzero by construction.
pub fn reduced_second_char_poly(s: &Scheme) -> CharPoly {
    CharPoly::new(s.beta()[s.beta_first()..=s.beta_last()].to_vec())
        .expect("beta support is nonzero")
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::zero();
    for c in coeffs {
        acc = acc * z + c;
    }
    acc
}

fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c * ((deg - i) as f64))
        .collect()
}

/// Scaled residual `|p(r)| / max(1, |r|)^deg`. For `|r| > 1` this is
/// evaluated as `|q(1/r)|` with `q` the reversed polynomial, which keeps the
/// float evaluation well conditioned.
fn scaled_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    if z.norm() <= 1.0 {
        horner(coeffs, z).norm()
    } else {
        let reversed: Vec<Complex64> = coeffs.iter().rev().copied().collect();
        horner(&reversed, z.inv()).norm()
    }
}

/// Aberth-Ehrlich simultaneous iteration on a monic polynomial.
fn aberth(monic: &[Complex64], tol: f64, max_iter: usize) -> Option<Vec<Complex64>> {
    let degree = monic.len() - 1;
    let deriv = derivative_coeffs(monic);

    // initial guesses on a circle inside the Cauchy bound, rotated off any
    // symmetry axis of real-coefficient polynomials
    let cauchy = 1.0 + monic[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let radius = 0.8 * cauchy.max(1e-3);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * (j as f64) / (degree as f64) + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    for _ in 0..max_iter {
        let mut max_step = 0.0f64;
        for j in 0..degree {
            let p = horner(monic, z[j]);
            let dp = horner(&deriv, z[j]);
            let newton = if dp.norm() > 0.0 {
                p / dp
            } else {
                // sitting on a stationary point; nudge away
                Complex64::new(tol.sqrt(), tol.sqrt())
            };
            let mut repulsion = Complex64::zero();
            for k in 0..degree {
                if k != j {
                    let diff = z[j] - z[k];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let denom = Complex64::one() - newton * repulsion;
            let step = if denom.norm() > 0.0 {
                newton / denom
            } else {
                newton
            };
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z[j] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < tol {
            return Some(z);
        }
    }
    None
}

/// Complex number with exact rational parts, for polishing roots against the
/// exact polynomial. Floats round to dyadic rationals exactly, so evaluating
/// the exact coefficients at a float point carries no arithmetic error at
/// all; the only error left in a polished root is the final rounding of the
/// root itself back to a double.
#[derive(Clone)]
struct ComplexRational {
    re: Rational,
    im: Rational,
}

impl ComplexRational {
    fn from_f64(z: Complex64) -> Option<Self> {
        Some(ComplexRational {
            re: rational::from_f64(z.re)?,
            im: rational::from_f64(z.im)?,
        })
    }

    fn to_f64(&self) -> Complex64 {
        Complex64::new(rational::to_f64(&self.re), rational::to_f64(&self.im))
    }

    fn mul_add(&self, z: &ComplexRational, c: &Rational) -> ComplexRational {
        ComplexRational {
            re: &self.re * &z.re - &self.im * &z.im + c,
            im: &self.re * &z.im + &self.im * &z.re,
        }
    }
}

/// Horner evaluation of an exact polynomial (highest degree first) at a
/// complex rational point.
fn eval_exact_complex(coeffs: &[Rational], z: &ComplexRational) -> ComplexRational {
    let mut acc = ComplexRational {
        re: coeffs[0].clone(),
        im: Rational::zero(),
    };
    for c in &coeffs[1..] {
        acc = acc.mul_add(z, c);
    }
    acc
}

fn derivative_exact(coeffs: &[Rational]) -> Vec<Rational> {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c * rational::from_int((deg - i) as i64))
        .collect()
}

/// Newton iteration with residuals evaluated in exact rational arithmetic.
///
/// Float root finding is limited by the conditioning of the float-rounded
/// coefficients; around twenty steps that already costs ~1e-7 of root
/// accuracy and smears multiple roots apart. Exact residuals remove the
/// evaluation error entirely, so simple roots land at full double precision
/// and m-fold roots contract by (m-1)/m per sweep from wherever the float
/// pass left them.
fn polish_exact(coeffs: &[Rational], deriv: &[Rational], mut z: Complex64) -> Complex64 {
    for _ in 0..60 {
        let zr = match ComplexRational::from_f64(z) {
            Some(zr) => zr,
            None => return z,
        };
        let p = eval_exact_complex(coeffs, &zr).to_f64();
        let dp = eval_exact_complex(deriv, &zr).to_f64();
        if dp.norm() == 0.0 || !p.is_finite() || !dp.is_finite() {
            return z;
        }
        let step = p / dp;
        if !step.is_finite() {
            return z;
        }
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Eigenvalues of the Frobenius companion matrix of a monic polynomial.
fn companion_eigenvalues(monic: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = monic.len() - 1;
    // the imaginary parts of our polynomials are zero by construction
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for i in 0..degree {
        m[(0, i)] = -monic[i + 1].re;
    }
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    let schur = nalgebra::Schur::try_new(m, 1e-14, 10_000).ok_or(Error::RootFindingFailed {
        iterations: ABERTH_MAX_ITER,
        degree,
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Greedy clustering by centroid distance; returns member indices per cluster.
fn cluster_roots(raw: &[Complex64], cluster_tol: f64) -> Vec<(Complex64, Vec<usize>)> {
    let mut clusters: Vec<(Complex64, Vec<usize>)> = Vec::new();
    for (i, &r) in raw.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|(center, _)| (*center - r).norm() <= cluster_tol)
        {
            Some((center, members)) => {
                let n = members.len() as f64;
                *center = (*center * n + r) / (n + 1.0);
                members.push(i);
            }
            None => clusters.push((r, vec![i])),
        }
    }
    clusters
}

/// All complex roots of `p` with multiplicities.
///
/// Aberth-Ehrlich with `tol` as the step-convergence threshold, falling back
/// to companion-matrix eigenvalues if the iteration does not settle within
/// [`ABERTH_MAX_ITER`] sweeps. Roots within [`CLUSTER_TOL`] of one another
/// are merged with summed multiplicity, and each merged multiplicity `m` is
/// cross-checked by requiring the first `m - 1` derivatives to be small at
/// the cluster center (splitting the cluster back apart if not).
pub fn poly_roots(p: &CharPoly, tol: f64) -> Result<RootSet> {
    let degree = p.degree();
    if degree == 0 {
        return Ok(RootSet {
            roots: Vec::new(),
            residual_bound: 0.0,
        });
    }

    let float_coeffs = p.coeffs_f64();
    let leading = float_coeffs[0];
    let monic: Vec<Complex64> = float_coeffs
        .iter()
        .map(|c| Complex64::new(c / leading, 0.0))
        .collect();

    let mut raw = match aberth(&monic, tol, ABERTH_MAX_ITER) {
        Some(roots) => roots,
        None => companion_eigenvalues(&monic)?,
    };

    let exact_deriv = derivative_exact(p.coeffs());
    for z in &mut raw {
        *z = polish_exact(p.coeffs(), &exact_deriv, *z);
    }

    // multiplicity cross-check: a genuine m-fold root kills the first m-1
    // derivatives; clusters that fail are split back into simple roots
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for (center, members) in cluster_roots(&raw, CLUSTER_TOL) {
        let count = members.len();
        if count == 1 {
            clusters.push((center, 1));
            continue;
        }
        let mut dcoeffs = monic.clone();
        let mut ok = true;
        for _ in 0..count - 1 {
            dcoeffs = derivative_coeffs(&dcoeffs);
            if scaled_residual(&dcoeffs, center) > 1e-4 {
                ok = false;
                break;
            }
        }
        if ok {
            clusters.push((center, count));
        } else {
            clusters.extend(members.iter().map(|&i| (raw[i], 1)));
        }
    }

    let total: usize = clusters.iter().map(|(_, m)| m).sum();
    if total != degree {
        return Err(Error::RootFindingFailed {
            iterations: ABERTH_MAX_ITER,
            degree,
        });
    }

    let residual_bound = clusters
        .iter()
        .map(|(r, _)| scaled_residual(&monic, *r))
        .fold(0.0, f64::max);

    Ok(RootSet {
        roots: clusters,
        residual_bound,
    })
}

// ---------------------------------------------------------------------------
// Stability classification
// ---------------------------------------------------------------------------

/// Classifies an arbitrary rational-coefficient polynomial by the graded
/// root conditions.
///
/// Float moduli within [`TOL_UNIT`] of 1 count as unit-modulus roots, except
/// that candidates at the rational points of the unit circle (+-1, +-i) are
/// first settled exactly: the rational polynomial (and its derivatives, for
/// the multiplicity) is evaluated there, and the float root is snapped to
/// the exact value when it really is a root. The trapezoid scheme's root at
/// exactly -1 is the case that must never hinge on a float tolerance.
pub fn classify_poly(p: &CharPoly) -> Result<StabilityClass> {
    if p.degree() == 0 {
        return Ok(StabilityClass {
            tag: StabilityTag::Stable,
            witness: None,
        });
    }

    let roots = poly_roots(p, ABERTH_TOL)?;
    let mut entries: Vec<(Complex64, usize, f64)> =
        roots.roots.iter().map(|&(r, m)| (r, m, r.norm())).collect();

    // exact certification at +-1 and +-i
    for (re, im) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
        let exact_mult =
            p.exact_root_multiplicity_gaussian(&rational::from_int(re), &rational::from_int(im));
        let target = Complex64::new(re as f64, im as f64);
        let near: Vec<usize> = (0..entries.len())
            .filter(|&i| (entries[i].0 - target).norm() <= CLUSTER_TOL)
            .collect();
        let float_mult: usize = near.iter().map(|&i| entries[i].1).sum();
        if exact_mult > 0 && exact_mult == float_mult && !near.is_empty() {
            // snap: one certified root at the exact point, exact multiplicity
            entries.retain(|(r, _, _)| (r - target).norm() > CLUSTER_TOL);
            entries.push((target, exact_mult, 1.0));
        }
    }

    let &(max_root, max_mult, max_modulus) = entries
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("degree >= 1 has roots");

    if max_modulus > 1.0 + TOL_UNIT {
        return Ok(StabilityClass {
            tag: StabilityTag::Unstable,
            witness: Some((max_root, max_mult)),
        });
    }

    let unit: Vec<&(Complex64, usize, f64)> = entries
        .iter()
        .filter(|(_, _, modulus)| (modulus - 1.0).abs() <= TOL_UNIT)
        .collect();

    match unit.iter().max_by_key(|(_, m, _)| *m) {
        None => Ok(StabilityClass {
            tag: StabilityTag::Stable,
            witness: Some((max_root, max_mult)),
        }),
        Some(&&(root, mult, _)) if mult == 1 => Ok(StabilityClass {
            tag: StabilityTag::MarginallyStable,
            witness: Some((root, mult)),
        }),
        Some(&&(root, mult, _)) => Ok(StabilityClass {
            tag: StabilityTag::WeaklyStable(mult as u32 + 1),
            witness: Some((root, mult)),
        }),
    }
}

/// Stability classification of a scheme for dynamics discovery.
///
/// `Forward` classifies the roots of the reduced second characteristic
/// polynomial; `Terminal` classifies the reversed-coefficient polynomial,
/// whose roots are the reciprocals.
pub fn classify_stability(s: &Scheme, direction: Direction) -> Result<StabilityClass> {
    let sigma_hat = reduced_second_char_poly(s);
    let poly = match direction {
        Direction::Forward => sigma_hat,
        Direction::Terminal => sigma_hat.reversed()?,
    };
    classify_poly(&poly)
}

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

/// Truncation constant `C_m` in exact rational arithmetic:
/// `C_0 = sum_k alpha_k`,
/// `C_m = (-1)^m [ (1/m!) sum_{k>=1} k^m alpha_k
///                + (1/(m-1)!) sum_{k>=0} k^{m-1} beta_k ]`
/// with the `0^0 = 1` convention in the `beta` sum.
pub fn truncation_constant(s: &Scheme, m: u32) -> Rational {
    if m == 0 {
        return s.alpha().iter().sum();
    }
    let mut alpha_sum = Rational::zero();
    for (k, a) in s.alpha().iter().enumerate().skip(1) {
        alpha_sum += a * rational::int_pow(k as i64, m);
    }
    let mut beta_sum = Rational::zero();
    for (k, b) in s.beta().iter().enumerate() {
        beta_sum += b * rational::int_pow(k as i64, m - 1);
    }
    let value = alpha_sum / rational::factorial(m) + beta_sum / rational::factorial(m - 1);
    if m.is_multiple_of(2) {
        value
    } else {
        -value
    }
}

/// Computes truncation constants up to the first nonzero one and derives the
/// truncation order / consistency degree.
///
/// Errors with [`Error::OrderExceedsMaxOrder`] if every constant through
/// `C_max_order` vanishes.
pub fn consistency_report(s: &Scheme, max_order: u32) -> Result<ConsistencyReport> {
    assert!(max_order >= 1, "max_order must be at least 1");
    let mut constants = Vec::new();
    for m in 0..=max_order {
        let c = truncation_constant(s, m);
        let nonzero = !rational::is_zero(&c);
        constants.push(c);
        if nonzero {
            let order = m - 1;
            return Ok(ConsistencyReport {
                constants,
                order,
                degree: order,
                strongly_consistent: order >= 2,
            });
        }
    }
    Err(Error::OrderExceedsMaxOrder { max_order })
}

/// Truncation order via the series route: the scheme has order `p` exactly
/// when `rho(e^z) - z sigma(e^z) = O(z^{p+1})`. Taylor coefficients are
/// computed in exact rational arithmetic; this is an algebraically
/// independent cross-check of [`consistency_report`].
pub fn order_from_series(s: &Scheme, max_order: u32) -> Result<u32> {
    let steps = s.steps() as i64;
    for j in 0..=max_order {
        // coefficient of z^j in rho(e^z): sum_k alpha_k (steps - k)^j / j!
        let mut diff = Rational::zero();
        for (k, a) in s.alpha().iter().enumerate() {
            diff += a * rational::int_pow(steps - k as i64, j);
        }
        diff /= rational::factorial(j);
        // minus coefficient of z^j in z sigma(e^z)
        if j >= 1 {
            let mut sig = Rational::zero();
            for (k, b) in s.beta().iter().enumerate() {
                sig += b * rational::int_pow(steps - k as i64, j - 1);
            }
            diff -= sig / rational::factorial(j - 1);
        }
        if !rational::is_zero(&diff) {
            if j == 0 {
                return Err(Error::InvalidScheme(
                    "rho(1) != 0: scheme is not consistent".into(),
                ));
            }
            return Ok(j - 1);
        }
    }
    Err(Error::OrderExceedsMaxOrder { max_order })
}

// ---------------------------------------------------------------------------
// Companion matrix and power norms
// ---------------------------------------------------------------------------

/// Companion matrix of the `beta` recurrence: size
/// `(beta_last - beta_first)` square, first row
/// `-(beta_{m0+1}, ..., beta_{M0}) / beta_{m0}`, identity subdiagonal.
/// Empty (0 x 0) when the recurrence is trivial (BDF).
pub fn companion_matrix(s: &Scheme) -> DMatrix<f64> {
    let size = s.beta_last() - s.beta_first();
    let beta = s.beta_f64();
    let lead = beta[s.beta_first()];
    let mut z = DMatrix::<f64>::zeros(size, size);
    for k in 1..=size {
        z[(0, k - 1)] = -beta[s.beta_first() + k] / lead;
    }
    for i in 1..size {
        z[(i, i - 1)] = 1.0;
    }
    z
}

/// Induced infinity norm (max absolute row sum).
fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Infinity norms of successive companion-matrix powers.
///
/// These are the numerical witnesses behind the classification: a bounded
/// running sum witnesses stability, a bounded max with linearly growing sum
/// witnesses marginal stability, and exponential growth witnesses
/// instability.
#[derive(Debug, Clone)]
pub struct PowerNormProfile {
    /// Running max of `||Z^n||_inf`.
    pub max_norm: f64,
    /// Running sum of `||Z^n||_inf`.
    pub sum_norm: f64,
    /// `||Z^n||_inf` for `n = 1..` (stops early at overflow).
    pub per_step: Vec<f64>,
    /// First step at which the norm overflowed, if any; `max_norm` and
    /// `sum_norm` are reported as infinite in that case.
    pub overflow_at: Option<usize>,
}

pub fn power_norm_profile(s: &Scheme, n_max: usize) -> PowerNormProfile {
    assert!(n_max >= 1, "n_max must be at least 1");
    let z = companion_matrix(s);
    if z.nrows() == 0 {
        // trivial recurrence: powers contribute nothing
        return PowerNormProfile {
            max_norm: 0.0,
            sum_norm: 0.0,
            per_step: Vec::new(),
            overflow_at: None,
        };
    }

    let mut power = z.clone();
    let mut max_norm = 0.0f64;
    let mut sum_norm = 0.0f64;
    let mut per_step = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let norm = inf_norm(&power);
        per_step.push(norm);
        if !norm.is_finite() {
            return PowerNormProfile {
                max_norm: f64::INFINITY,
                sum_norm: f64::INFINITY,
                per_step,
                overflow_at: Some(n),
            };
        }
        max_norm = max_norm.max(norm);
        sum_norm += norm;
        if n < n_max {
            power = &power * &z;
        }
    }
    PowerNormProfile {
        max_norm,
        sum_norm,
        per_step,
        overflow_at: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{from_int, ratio};
    use crate::schemes::{ab_scheme, am_scheme, bdf_scheme, catalogue, scheme, Family};

    fn poly(coeffs: &[(i64, i64)]) -> CharPoly {
        CharPoly::new(coeffs.iter().map(|&(n, d)| ratio(n, d)).collect()).unwrap()
    }

    #[test]
    fn first_char_poly_examples() {
        // AB-1: z - 1
        let p = first_char_poly(&ab_scheme(1).unwrap());
        assert_eq!(p.coeffs(), &[from_int(1), from_int(-1)]);
        // BDF-2: (3/2) z^2 - 2 z + 1/2
        let p = first_char_poly(&bdf_scheme(2).unwrap());
        assert_eq!(p.coeffs(), &[ratio(3, 2), from_int(-2), ratio(1, 2)]);
        // any Adams scheme: z^M - z^{M-1}
        for m in 1..=6 {
            let p = first_char_poly(&ab_scheme(m).unwrap());
            assert_eq!(p.degree(), m as usize);
            assert_eq!(p.coeffs()[0], from_int(1));
            assert_eq!(p.coeffs()[1], from_int(-1));
            assert!(p.coeffs()[2..].iter().all(rational::is_zero));
        }
    }

    #[test]
    fn reduced_second_char_poly_examples() {
        // BDF: constant 1
        for m in [1, 5, 20] {
            let p = reduced_second_char_poly(&bdf_scheme(m).unwrap());
            assert_eq!(p.degree(), 0);
            assert_eq!(p.coeffs(), &[from_int(1)]);
        }
        // AM-1: (1/2) r + 1/2
        let p = reduced_second_char_poly(&am_scheme(1).unwrap());
        assert_eq!(p.coeffs(), &[ratio(1, 2), ratio(1, 2)]);
        // AB-2: (3/2) r - 1/2
        let p = reduced_second_char_poly(&ab_scheme(2).unwrap());
        assert_eq!(p.coeffs(), &[ratio(3, 2), ratio(-1, 2)]);
    }

    #[test]
    fn roots_of_constant_poly_are_empty() {
        let p = poly(&[(1, 1)]);
        let roots = poly_roots(&p, ABERTH_TOL).unwrap();
        assert!(roots.roots.is_empty());
        assert_eq!(roots.residual_bound, 0.0);
    }

    #[test]
    fn ab2_single_root_one_third() {
        let p = reduced_second_char_poly(&ab_scheme(2).unwrap());
        let roots = poly_roots(&p, ABERTH_TOL).unwrap();
        assert_eq!(roots.roots.len(), 1);
        let (r, m) = roots.roots[0];
        assert_eq!(m, 1);
        assert!((r - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn am2_largest_root_matches_quadratic_formula() {
        // 5 r^2 + 8 r - 1 = 0 -> r = (-8 - sqrt(84)) / 10
        let p = reduced_second_char_poly(&am_scheme(2).unwrap());
        let roots = poly_roots(&p, ABERTH_TOL).unwrap();
        let expected = (-8.0 - 84.0f64.sqrt()) / 10.0;
        let max = roots.max_modulus_root().unwrap().0;
        assert!((max.re - expected).abs() < 1e-12, "got {max}");
        assert!(max.im.abs() < 1e-12);
    }

    #[test]
    fn repeated_roots_are_merged_with_multiplicity() {
        // (r + 1)^2 = r^2 + 2r + 1
        let p = poly(&[(1, 1), (2, 1), (1, 1)]);
        let roots = poly_roots(&p, ABERTH_TOL).unwrap();
        assert_eq!(roots.roots.len(), 1);
        let (r, m) = roots.roots[0];
        assert_eq!(m, 2);
        assert!((r - Complex64::new(-1.0, 0.0)).norm() < 1e-6);

        // (r - 1/2)^3 = r^3 - (3/2) r^2 + (3/4) r - 1/8
        let p = poly(&[(1, 1), (-3, 2), (3, 4), (-1, 8)]);
        let roots = poly_roots(&p, ABERTH_TOL).unwrap();
        assert_eq!(roots.roots.len(), 1);
        assert_eq!(roots.roots[0].1, 3);
    }

    #[test]
    fn multiplicities_sum_to_degree_across_catalogue() {
        for s in catalogue() {
            let p = reduced_second_char_poly(&s);
            let roots = poly_roots(&p, ABERTH_TOL).unwrap();
            let total: usize = roots.roots.iter().map(|(_, m)| m).sum();
            assert_eq!(total, p.degree(), "{}", s.label());
            assert!(roots.residual_bound < 1e-8, "{}", s.label());
        }
    }

    #[test]
    fn classification_forward_examples() {
        let class = classify_stability(&bdf_scheme(4).unwrap(), Direction::Forward).unwrap();
        assert_eq!(class.tag, StabilityTag::Stable);
        assert!(class.witness.is_none());

        let class = classify_stability(&am_scheme(1).unwrap(), Direction::Forward).unwrap();
        assert_eq!(class.tag, StabilityTag::MarginallyStable);
        let (root, mult) = class.witness.unwrap();
        assert_eq!(root, Complex64::new(-1.0, 0.0));
        assert_eq!(mult, 1);

        let class = classify_stability(&am_scheme(3).unwrap(), Direction::Forward).unwrap();
        assert_eq!(class.tag, StabilityTag::Unstable);
    }

    #[test]
    fn classification_terminal_examples() {
        let class = classify_stability(&ab_scheme(2).unwrap(), Direction::Terminal).unwrap();
        assert_eq!(class.tag, StabilityTag::Unstable);
        assert!((class.max_root_modulus() - 3.0).abs() < 1e-10);

        let class = classify_stability(&bdf_scheme(3).unwrap(), Direction::Terminal).unwrap();
        assert_eq!(class.tag, StabilityTag::Stable);
    }

    #[test]
    fn trapezoid_root_is_certified_exactly() {
        let p = reduced_second_char_poly(&am_scheme(1).unwrap());
        assert_eq!(p.exact_root_multiplicity(&from_int(-1)), 1);
        assert_eq!(p.exact_root_multiplicity(&from_int(1)), 0);
    }

    #[test]
    fn double_unit_root_classifies_weakly_stable() {
        // sigma_hat(r) = (1/4)(r + 1)^2: consistent-scheme shape with a
        // double root on the unit circle
        let p = poly(&[(1, 4), (1, 2), (1, 4)]);
        assert_eq!(p.exact_root_multiplicity(&from_int(-1)), 2);
        let class = classify_poly(&p).unwrap();
        assert_eq!(class.tag, StabilityTag::WeaklyStable(3));
        assert_eq!(class.witness_multiplicity(), 2);
    }

    #[test]
    fn imaginary_unit_roots_are_certified_exactly() {
        // sigma_hat(r) = (1/2)(r^2 + 1): simple roots at exactly +-i
        let p = poly(&[(1, 2), (0, 1), (1, 2)]);
        assert_eq!(
            p.exact_root_multiplicity_gaussian(&from_int(0), &from_int(1)),
            1
        );
        assert_eq!(
            p.exact_root_multiplicity_gaussian(&from_int(0), &from_int(-1)),
            1
        );
        assert_eq!(p.exact_root_multiplicity(&from_int(1)), 0);
        let class = classify_poly(&p).unwrap();
        assert_eq!(class.tag, StabilityTag::MarginallyStable);
        // snapped: the witness sits at exactly +-i, not a float neighbor
        let (root, _) = class.witness.unwrap();
        assert_eq!(root.re, 0.0);
        assert_eq!(root.im.abs(), 1.0);

        // (r^2 + 1)^2: double roots at +-i
        let p = poly(&[(1, 1), (0, 1), (2, 1), (0, 1), (1, 1)]);
        assert_eq!(
            p.exact_root_multiplicity_gaussian(&from_int(0), &from_int(1)),
            2
        );
        let class = classify_poly(&p).unwrap();
        assert_eq!(class.tag, StabilityTag::WeaklyStable(3));

        // the full scheme route: alpha = (1, -1, 0), beta = (1/2, 0, 1/2)
        // is consistent and marginally stable with unit roots at +-i
        let json = r#"{"family":"AM","M":2,
            "alpha":["1/1","-1/1","0/1"],
            "beta":["1/2","0/1","1/2"]}"#;
        let s: Scheme = serde_json::from_str(json).unwrap();
        let class = classify_stability(&s, Direction::Forward).unwrap();
        assert_eq!(class.tag, StabilityTag::MarginallyStable);
    }

    #[test]
    fn weakly_stable_scheme_end_to_end() {
        // a consistent two-step scheme whose beta polynomial is
        // (1/4)(r + 1)^2: double unit root, so weakly stable of degree -3,
        // with companion powers growing linearly (Jordan block at -1)
        let json = r#"{"family":"AM","M":2,
            "alpha":["1/1","-1/1","0/1"],
            "beta":["1/4","1/2","1/4"]}"#;
        let s: Scheme = serde_json::from_str(json).unwrap();
        for direction in [Direction::Forward, Direction::Terminal] {
            let class = classify_stability(&s, direction).unwrap();
            assert_eq!(class.tag, StabilityTag::WeaklyStable(3), "{direction}");
            let (root, mult) = class.witness.unwrap();
            assert_eq!(root, Complex64::new(-1.0, 0.0));
            assert_eq!(mult, 2);
        }
        let profile = power_norm_profile(&s, 2000);
        assert!(profile.max_norm.is_finite());
        let at_1000 = profile.per_step[999];
        let at_2000 = profile.per_step[1999];
        assert!(
            (at_2000 / at_1000 - 2.0).abs() < 0.01,
            "norms should grow linearly: {at_1000} -> {at_2000}"
        );
    }

    #[test]
    fn am_real_root_below_minus_one() {
        // a real root < -1 exists for every AM-M with M >= 2
        for m in 2..=20 {
            let p = reduced_second_char_poly(&am_scheme(m).unwrap());
            let roots = poly_roots(&p, ABERTH_TOL).unwrap();
            let found = roots
                .roots
                .iter()
                .any(|(r, _)| r.im.abs() < 1e-8 && r.re < -1.0);
            assert!(found, "AM-{m}");
        }
    }

    #[test]
    fn reversal_duality_of_root_magnitudes() {
        for s in catalogue() {
            let p = reduced_second_char_poly(&s);
            if p.degree() == 0 {
                continue;
            }
            let mut fwd: Vec<f64> = poly_roots(&p, ABERTH_TOL)
                .unwrap()
                .roots
                .iter()
                .flat_map(|&(r, m)| std::iter::repeat_n(r.norm(), m))
                .collect();
            let mut rev: Vec<f64> = poly_roots(&p.reversed().unwrap(), ABERTH_TOL)
                .unwrap()
                .roots
                .iter()
                .flat_map(|&(r, m)| std::iter::repeat_n(1.0 / r.norm(), m))
                .collect();
            fwd.sort_by(f64::total_cmp);
            rev.sort_by(f64::total_cmp);
            for (a, b) in fwd.iter().zip(&rev) {
                assert!((a - b).abs() < 1e-8, "{}: {a} vs {b}", s.label());
            }
        }
    }

    #[test]
    fn consistency_orders() {
        // AB-3 and BDF-3 are order 3; AM-2 is order 3
        assert_eq!(
            consistency_report(&ab_scheme(3).unwrap(), 10)
                .unwrap()
                .order,
            3
        );
        assert_eq!(
            consistency_report(&bdf_scheme(3).unwrap(), 10)
                .unwrap()
                .order,
            3
        );
        assert_eq!(
            consistency_report(&am_scheme(2).unwrap(), 10)
                .unwrap()
                .order,
            3
        );
        // trapezoid: C_3 = -1/12
        let report = consistency_report(&am_scheme(1).unwrap(), 10).unwrap();
        assert_eq!(report.order, 2);
        assert_eq!(report.constants.last().unwrap(), &ratio(-1, 12));
        assert!(report.strongly_consistent);
        // forward/backward Euler are order 1, not strongly consistent
        let report = consistency_report(&ab_scheme(1).unwrap(), 10).unwrap();
        assert_eq!(report.order, 1);
        assert!(!report.strongly_consistent);
    }

    #[test]
    fn leading_constants_vanish_exactly() {
        for s in catalogue() {
            let report = consistency_report(&s, 25).unwrap();
            for c in &report.constants[..report.constants.len() - 1] {
                assert!(rational::is_zero(c), "{}", s.label());
            }
            assert!(!rational::is_zero(report.constants.last().unwrap()));
        }
    }

    #[test]
    fn order_exceeding_max_order_is_reported() {
        assert!(matches!(
            consistency_report(&am_scheme(3).unwrap(), 2),
            Err(Error::OrderExceedsMaxOrder { max_order: 2 })
        ));
    }

    #[test]
    fn series_route_agrees_with_constants_route() {
        for s in catalogue() {
            let report = consistency_report(&s, 25).unwrap();
            let series = order_from_series(&s, 25).unwrap();
            assert_eq!(report.order, series, "{}", s.label());
        }
    }

    #[test]
    fn companion_matrix_examples() {
        // AM-1: 1x1 [-1]
        let z = companion_matrix(&am_scheme(1).unwrap());
        assert_eq!(z.nrows(), 1);
        assert_eq!(z[(0, 0)], -1.0);

        // AB-3: first row (16/23, -5/23)
        let z = companion_matrix(&ab_scheme(3).unwrap());
        assert_eq!(z.nrows(), 2);
        assert!((z[(0, 0)] - 16.0 / 23.0).abs() < 1e-15);
        assert!((z[(0, 1)] + 5.0 / 23.0).abs() < 1e-15);
        assert_eq!(z[(1, 0)], 1.0);
        assert_eq!(z[(1, 1)], 0.0);

        // BDF: empty
        let z = companion_matrix(&bdf_scheme(7).unwrap());
        assert_eq!(z.nrows(), 0);
    }

    #[test]
    fn power_norms_bdf_and_am1() {
        let profile = power_norm_profile(&bdf_scheme(3).unwrap(), 100);
        assert_eq!(profile.max_norm, 0.0);
        assert_eq!(profile.sum_norm, 0.0);

        let profile = power_norm_profile(&am_scheme(1).unwrap(), 1000);
        assert_eq!(profile.max_norm, 1.0);
        assert_eq!(profile.sum_norm, 1000.0);
        assert!(profile.overflow_at.is_none());
    }

    #[test]
    fn power_norms_grow_for_am2() {
        // dominant root 1.7165...: by n = 200 the norm must exceed
        // |root|^{200 (1 - eps)}, far above 1e30
        let profile = power_norm_profile(&am_scheme(2).unwrap(), 200);
        assert!(profile.max_norm > 1e30, "max = {}", profile.max_norm);
        // spot check against direct powering at small n
        let z = companion_matrix(&am_scheme(2).unwrap());
        let z3 = &z * &(&z * &z);
        assert!((profile.per_step[2] - inf_norm(&z3)).abs() < 1e-12);
    }

    #[test]
    fn classification_crosscheck_power_norms() {
        for s in catalogue() {
            let class = classify_stability(&s, Direction::Forward).unwrap();
            match class.tag {
                StabilityTag::Stable => {
                    let p = power_norm_profile(&s, 2000);
                    let at_1000: f64 = p.per_step.iter().take(1000).sum();
                    assert!(
                        (p.sum_norm - at_1000).abs() <= 0.01 * at_1000.max(1e-300),
                        "{}: sum grows past n = 1000",
                        s.label()
                    );
                }
                StabilityTag::MarginallyStable => {
                    let p = power_norm_profile(&s, 2000);
                    let at_1000: f64 = p.per_step.iter().take(1000).sum();
                    assert!(p.max_norm.is_finite() && p.max_norm < 1e3, "{}", s.label());
                    assert!(
                        (p.sum_norm - 2.0 * at_1000).abs() <= 0.01 * p.sum_norm,
                        "{}: sum not linear",
                        s.label()
                    );
                }
                StabilityTag::Unstable => {
                    let p = power_norm_profile(&s, 200);
                    assert!(p.max_norm > 1e6, "{}: max = {}", s.label(), p.max_norm);
                }
                StabilityTag::WeaklyStable(_) => {
                    panic!("{}: no catalogued scheme is weakly stable", s.label())
                }
            }
        }
    }

    #[test]
    fn stability_matrix_forward() {
        for m in 1..=20 {
            let c =
                classify_stability(&scheme(Family::Bdf, m).unwrap(), Direction::Forward).unwrap();
            assert_eq!(c.tag, StabilityTag::Stable, "BDF-{m}");
        }
        for m in 1..=6 {
            let c =
                classify_stability(&scheme(Family::Ab, m).unwrap(), Direction::Forward).unwrap();
            assert_eq!(c.tag, StabilityTag::Stable, "AB-{m}");
        }
        for m in 7..=20 {
            let c =
                classify_stability(&scheme(Family::Ab, m).unwrap(), Direction::Forward).unwrap();
            assert_eq!(c.tag, StabilityTag::Unstable, "AB-{m}");
        }
        assert_eq!(
            classify_stability(&am_scheme(0).unwrap(), Direction::Forward)
                .unwrap()
                .tag,
            StabilityTag::Stable
        );
        assert_eq!(
            classify_stability(&am_scheme(1).unwrap(), Direction::Forward)
                .unwrap()
                .tag,
            StabilityTag::MarginallyStable
        );
        for m in 2..=20 {
            let c =
                classify_stability(&scheme(Family::Am, m).unwrap(), Direction::Forward).unwrap();
            assert_eq!(c.tag, StabilityTag::Unstable, "AM-{m}");
        }
    }
}
