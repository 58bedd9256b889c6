//! Exact rational coefficients for the Adams-Bashforth, Adams-Moulton, and
//! BDF families.
//!
//! An M-step LMM relates state and dynamics samples through
//!
//! ```text
//! sum_{m=0}^{M} alpha_m x_{n-m} = h sum_{m=0}^{M} beta_m f_{n-m}
//! ```
//!
//! The Adams schemes integrate a Lagrange interpolant of the dynamics over
//! one mesh cell; BDF differentiates a Lagrange interpolant of the state at
//! the right endpoint. Working on the unit cell `u = (t - t_{n-1})/h`, every
//! coefficient is the integral (or endpoint derivative) of a product of
//! linear rational factors, so all coefficients here are exact rationals.
//! That exactness matters: classification of roots sitting exactly on the
//! unit circle (AM-1) cannot be trusted to float-rounded coefficients, and
//! around ten steps the float error in naively computed coefficients is
//! already visible in the root radii.

use std::fmt;
use std::str::FromStr;

use num::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Largest supported step count; instability of the high-step schemes has
/// been validated numerically up to here and no further.
pub const MAX_STEPS: u32 = 20;

/// The three generated scheme families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Ab,
    Am,
    Bdf,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Ab, Family::Am, Family::Bdf];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Ab => "AB",
            Family::Am => "AM",
            Family::Bdf => "BDF",
        }
    }

    /// Smallest admissible step parameter (AM alone admits M = 0).
    pub fn min_steps(&self) -> u32 {
        match self {
            Family::Am => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AB" => Ok(Family::Ab),
            "AM" => Ok(Family::Am),
            "BDF" => Ok(Family::Bdf),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Family::from_str(&s).map_err(D::Error::custom)
    }
}

/// Interpolation lattice on the unit cell, indexed relative to `t_n`.
///
/// `IncludingCurrent` is `{-M, ..., 0}` (the interpolant sees the current
/// point, giving implicit schemes: AM, BDF). `HistoryOnly` is
/// `{-M, ..., -1}` (explicit schemes: AB).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    IncludingCurrent,
    HistoryOnly,
}

impl Lattice {
    fn name(&self) -> &'static str {
        match self {
            Lattice::IncludingCurrent => "{-M..0}",
            Lattice::HistoryOnly => "{-M..-1}",
        }
    }

    fn indices(&self, m: u32) -> std::ops::RangeInclusive<i64> {
        match self {
            Lattice::IncludingCurrent => -(m as i64)..=0,
            Lattice::HistoryOnly => -(m as i64)..=-1,
        }
    }
}

/// An M-step linear multistep scheme with exact rational coefficients.
///
/// `alpha` and `beta` both have `steps() + 1` entries, indexed by how far
/// back the sample sits (`alpha[m]` multiplies `x_{n-m}`). `beta_first` and
/// `beta_last` bracket the nonzero support of `beta`; everything between the
/// discovery system's bandwidth and the reduced second characteristic
/// polynomial is derived from that support.
///
/// AM-0 is stored as the 1-step scheme `alpha = (1, -1)`, `beta = (1, 0)`,
/// coinciding with BDF-1: the Adams construction always reaches back to
/// `x_{n-1}` even when the dynamics interpolant uses the current point only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    family: Family,
    m: u32,
    alpha: Vec<Rational>,
    beta: Vec<Rational>,
    beta_first: usize,
    beta_last: usize,
}

impl Scheme {
    /// Validating constructor; every generation path funnels through here.
    fn from_parts(
        family: Family,
        m: u32,
        alpha: Vec<Rational>,
        beta: Vec<Rational>,
    ) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.len() < 2 {
            return Err(Error::InvalidScheme(format!(
                "coefficient vectors must have equal length >= 2, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        if alpha[0].is_zero() {
            return Err(Error::InvalidScheme("alpha_0 must be nonzero".into()));
        }
        let beta_first = beta
            .iter()
            .position(|b| !b.is_zero())
            .ok_or_else(|| Error::InvalidScheme("beta is identically zero".into()))?;
        let beta_last = beta.iter().rposition(|b| !b.is_zero()).unwrap();

        // consistency: sum alpha = 0 and C_1 = 0
        let sum_alpha: Rational = alpha.iter().sum();
        if !sum_alpha.is_zero() {
            return Err(Error::InvalidScheme("sum of alpha must vanish".into()));
        }
        let mut weighted_alpha = Rational::zero();
        for (k, a) in alpha.iter().enumerate() {
            weighted_alpha += a * rational::from_int(k as i64);
        }
        let sum_beta: Rational = beta.iter().sum();
        // C_1 = -(sum_k k alpha_k + sum_k beta_k)
        if !(weighted_alpha + sum_beta).is_zero() {
            return Err(Error::InvalidScheme(
                "first truncation constant C_1 must vanish".into(),
            ));
        }

        match family {
            Family::Ab => {
                if !beta[0].is_zero() {
                    return Err(Error::InvalidScheme(
                        "AB must be explicit (beta_0 = 0)".into(),
                    ));
                }
            }
            Family::Am | Family::Bdf => {
                if beta[0].is_zero() {
                    return Err(Error::InvalidScheme(
                        "AM/BDF must be implicit (beta_0 != 0)".into(),
                    ));
                }
            }
        }
        if family == Family::Bdf && beta_last != 0 {
            return Err(Error::InvalidScheme(
                "BDF must have beta_m = 0 for m >= 1".into(),
            ));
        }

        Ok(Scheme {
            family,
            m,
            alpha,
            beta,
            beta_first,
            beta_last,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Nominal step parameter M of the family (0 allowed for AM).
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Actual step count of the recurrence, `alpha.len() - 1`
    /// (`max(M, 1)`; differs from `m()` only for AM-0).
    pub fn steps(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self) -> &[Rational] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Rational] {
        &self.beta
    }

    /// Smallest index with nonzero beta (0 for implicit schemes, 1 for AB).
    pub fn beta_first(&self) -> usize {
        self.beta_first
    }

    /// Largest index with nonzero beta.
    pub fn beta_last(&self) -> usize {
        self.beta_last
    }

    /// Bandwidth of the discovery matrix, `beta_last - beta_first + 1`.
    pub fn band_width(&self) -> usize {
        self.beta_last - self.beta_first + 1
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.family, self.m)
    }

    pub fn alpha_f64(&self) -> Vec<f64> {
        self.alpha.iter().map(rational::to_f64).collect()
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(rational::to_f64).collect()
    }

    /// Rescales both coefficient vectors by a common nonzero factor.
    ///
    /// The discovery solution is invariant under this, and so are all scheme
    /// invariants; the family tag is kept.
    pub fn scaled(&self, factor: &Rational) -> Result<Scheme> {
        if factor.is_zero() {
            return Err(Error::InvalidScheme(
                "scaling factor must be nonzero".into(),
            ));
        }
        Scheme::from_parts(
            self.family,
            self.m,
            self.alpha.iter().map(|a| a * factor).collect(),
            self.beta.iter().map(|b| b * factor).collect(),
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Serialize, Deserialize)]
struct SchemeJson {
    family: String,
    #[serde(rename = "M")]
    m: u32,
    alpha: Vec<String>,
    beta: Vec<String>,
}

impl Serialize for Scheme {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SchemeJson {
            family: self.family.name().to_string(),
            m: self.m,
            alpha: self.alpha.iter().map(rational::format).collect(),
            beta: self.beta.iter().map(rational::format).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = SchemeJson::deserialize(deserializer)?;
        let family = Family::from_str(&raw.family).map_err(D::Error::custom)?;
        let parse_all = |v: &[String]| -> std::result::Result<Vec<Rational>, D::Error> {
            v.iter()
                .map(|s| rational::parse(s).map_err(D::Error::custom))
                .collect()
        };
        Scheme::from_parts(family, raw.m, parse_all(&raw.alpha)?, parse_all(&raw.beta)?)
            .map_err(D::Error::custom)
    }
}

/// Scaled Lagrange basis polynomial for lattice node `k` on the unit cell,
/// as ascending rational coefficients in `u`:
/// `prod_{i in lattice, i != k} (u - 1 - i) / (k - i)`.
fn lagrange_basis_poly(k: i64, lattice: Lattice, m: u32) -> Result<Vec<Rational>> {
    let indices = lattice.indices(m);
    if !indices.contains(&k) {
        return Err(Error::LatticeIndexOutOfRange {
            k,
            lattice: lattice.name(),
            m,
        });
    }
    let mut poly = vec![rational::from_int(1)];
    for i in indices {
        if i == k {
            continue;
        }
        let scale = rational::from_int(k - i);
        let factor = [
            rational::from_int(-1 - i) / &scale,
            rational::from_int(1) / &scale,
        ];
        poly = rational::poly_mul(&poly, &factor);
    }
    Ok(poly)
}

/// Exact integral over the unit cell of the scaled Lagrange basis polynomial
/// for lattice node `k`; this is the Adams coefficient `beta_{-k}`.
///
/// The product of linear factors is expanded by exact convolution and
/// integrated term by term with `u^j -> 1/(j+1)`.
pub fn lagrange_basis_integral(k: i64, lattice: Lattice, m: u32) -> Result<Rational> {
    let poly = lagrange_basis_poly(k, lattice, m)?;
    Ok(rational::poly_integral_unit(&poly))
}

/// Exact derivative of the scaled Lagrange basis polynomial at the right
/// endpoint of the unit cell (the `u`-coordinate of `t_n`); this is the raw
/// BDF weight for lattice node `k`.
fn lagrange_basis_derivative_at_current(k: i64, m: u32) -> Result<Rational> {
    let poly = lagrange_basis_poly(k, Lattice::IncludingCurrent, m)?;
    let deriv = rational::poly_derivative(&poly);
    Ok(rational::poly_eval(&deriv, &rational::from_int(1)))
}

fn check_steps(family: Family, m: u32) -> Result<()> {
    let min = family.min_steps();
    if m < min || m > MAX_STEPS {
        return Err(Error::StepCountOutOfRange {
            family: family.name(),
            m,
            min,
            max: MAX_STEPS,
        });
    }
    Ok(())
}

fn adams_alpha(steps: usize) -> Vec<Rational> {
    let mut alpha = vec![Rational::zero(); steps + 1];
    alpha[0] = rational::from_int(1);
    alpha[1] = rational::from_int(-1);
    alpha
}

/// Adams-Bashforth: explicit, interpolates the dynamics on past nodes only.
/// `alpha = (1, -1, 0, ...)`, `beta_0 = 0`,
/// `beta_m = lagrange_basis_integral(-m, HistoryOnly, M)`.
pub fn ab_scheme(m: u32) -> Result<Scheme> {
    check_steps(Family::Ab, m)?;
    let steps = m as usize;
    let mut beta = vec![Rational::zero(); steps + 1];
    for (idx, b) in beta.iter_mut().enumerate().skip(1) {
        *b = lagrange_basis_integral(-(idx as i64), Lattice::HistoryOnly, m)?;
    }
    Scheme::from_parts(Family::Ab, m, adams_alpha(steps), beta)
}

/// Adams-Moulton: implicit, interpolates the dynamics including the current
/// node. `beta_m = lagrange_basis_integral(-m, IncludingCurrent, M)`.
/// AM-0 degenerates to backward Euler (identical to BDF-1).
pub fn am_scheme(m: u32) -> Result<Scheme> {
    check_steps(Family::Am, m)?;
    let steps = (m as usize).max(1);
    let mut beta = vec![Rational::zero(); steps + 1];
    for (idx, b) in beta.iter_mut().enumerate().take(m as usize + 1) {
        *b = lagrange_basis_integral(-(idx as i64), Lattice::IncludingCurrent, m)?;
    }
    Scheme::from_parts(Family::Am, m, adams_alpha(steps), beta)
}

/// BDF: interpolates the *state* on `{-M..0}` and differentiates at the
/// current point. Normalized so that the dynamics side is exactly `h f_n`:
/// `beta = (1, 0, ..., 0)` and `alpha_m` is the endpoint derivative of the
/// scaled basis polynomial for node `-m`.
pub fn bdf_scheme(m: u32) -> Result<Scheme> {
    check_steps(Family::Bdf, m)?;
    let steps = m as usize;
    let mut alpha = Vec::with_capacity(steps + 1);
    for idx in 0..=steps {
        alpha.push(lagrange_basis_derivative_at_current(-(idx as i64), m)?);
    }
    let mut beta = vec![Rational::zero(); steps + 1];
    beta[0] = rational::from_int(1);
    Scheme::from_parts(Family::Bdf, m, alpha, beta)
}

/// Generates the scheme for a (family, M) pair.
pub fn scheme(family: Family, m: u32) -> Result<Scheme> {
    match family {
        Family::Ab => ab_scheme(m),
        Family::Am => am_scheme(m),
        Family::Bdf => bdf_scheme(m),
    }
}

/// Every scheme this crate vouches for: AB-1..20, AM-0..20, BDF-1..20.
pub fn catalogue() -> Vec<Scheme> {
    let mut all = Vec::new();
    for family in Family::ALL {
        for m in family.min_steps()..=MAX_STEPS {
            all.push(scheme(family, m).expect("catalogue schemes are in range"));
        }
    }
    all
}
