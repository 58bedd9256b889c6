//! Experiment pipelines: mesh-refinement convergence studies on a fixed time
//! domain, and long-time studies on a fixed mesh with a growing domain.
//!
//! Every (scheme, mesh) or (scheme, horizon) cell is an independent
//! deterministic computation; cells run in parallel and results are
//! assembled in input order, so identical inputs give identical reports.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{classify_stability, consistency_report, Direction, StabilityTag};
use crate::discovery::{
    error_vs_truth, exact_initial_dynamics, restrict_to_learned, solve_discovery, DiscoveryProblem,
    GridFunction,
};
use crate::reference::{
    exact_dynamics_on_grid, integrate_reference, system_by_name, DEFAULT_REFINE,
};
use crate::schemes::{scheme, Family, Scheme};
use crate::{Error, Result};

/// Empirical convergence slopes are accepted within this distance of the
/// theoretical order; 3-4 point fits on a nonlinear system wobble, and this
/// margin still separates consecutive integer orders unambiguously.
pub const ORDER_FIT_TOL: f64 = 0.35;

/// Errors below this multiple of the true-dynamics scale are considered
/// floor-limited (drowned in reference/solve roundoff) and are excluded from
/// order fits.
pub const ERROR_FLOOR_FACTOR: f64 = 1e-12;

/// Long-time growth counts as exponential when the fitted slope of
/// log10(error) against the horizon exceeds this, i.e. an order of magnitude
/// of error growth every ten time units.
pub const GROWTH_SLOPE_THRESHOLD: f64 = 0.1;

/// Least-squares fit of `log(error)` against `log(h)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub r_squared: f64,
}

/// Fits the empirical convergence order from (error, mesh) pairs.
///
/// Non-finite and non-positive errors are dropped; fewer than two surviving
/// points is an error.
pub fn estimate_order(errors: &[f64], hs: &[f64]) -> Result<OrderFit> {
    assert_eq!(errors.len(), hs.len(), "errors and hs must pair up");
    let points: Vec<(f64, f64)> = errors
        .iter()
        .zip(hs)
        .filter(|(e, h)| e.is_finite() && **e > 0.0 && h.is_finite() && **h > 0.0)
        .map(|(e, h)| (h.ln(), e.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(OrderFit { slope, r_squared })
}

/// One discovery run: solve on the given exact state and return the max
/// error over the learned indices together with the truth scale (for floor
/// detection). Non-finite results are reported as `+inf`.
fn discovery_linf_error(
    s: &Scheme,
    state: &GridFunction,
    f_true: &GridFunction,
) -> Result<(f64, f64)> {
    let init = exact_initial_dynamics(s, f_true);
    let problem = DiscoveryProblem::new(s.clone(), state.clone(), init)?;
    let result = solve_discovery(&problem);
    let truth = restrict_to_learned(s, f_true)?;
    let report = error_vs_truth(&result, &truth)?;
    let err = if report.linf.is_finite() {
        report.linf
    } else {
        f64::INFINITY
    };
    Ok((err, truth.linf()))
}

/// Configuration of a fixed-domain, mesh-refinement convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceSpec {
    pub schemes: Vec<(Family, u32)>,
    /// Strictly decreasing mesh sizes, at least two.
    pub h_values: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub system: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceCell {
    pub h: f64,
    pub linf_error: f64,
    /// Max-abs of the true dynamics over the learned indices.
    pub truth_scale: f64,
    /// Error is at or below the roundoff floor and excluded from the fit.
    pub floor_limited: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeConvergence {
    pub family: Family,
    pub m: u32,
    pub cells: Vec<ConvergenceCell>,
    /// Least-squares order over the usable cells; absent if fewer than two.
    pub fit: Option<OrderFit>,
    /// Some cell overflowed (the scheme is amplifying errors unboundedly).
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub system: String,
    pub t0: f64,
    pub t1: f64,
    pub h_values: Vec<f64>,
    pub per_scheme: Vec<SchemeConvergence>,
}

fn validate_mesh(t0: f64, t1: f64, h: f64) -> Result<usize> {
    let ratio = (t1 - t0) / h;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-12 * ratio.max(1.0) {
        return Err(Error::NonIntegralStepCount { ratio });
    }
    Ok(rounded as usize)
}

/// Runs the convergence study: for every scheme and mesh, build the exact
/// reference state, supply exact initial dynamics, solve discovery, record
/// the max error over learned indices, and fit the order per scheme.
pub fn run_convergence(spec: &ConvergenceSpec) -> Result<ConvergenceStudy> {
    if spec.h_values.len() < 2 {
        return Err(Error::InvalidStudy("need at least two mesh sizes".into()));
    }
    if !spec.h_values.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::InvalidStudy(
            "mesh sizes must be strictly decreasing".into(),
        ));
    }
    if spec.schemes.is_empty() {
        return Err(Error::InvalidStudy("no schemes selected".into()));
    }
    let sys = system_by_name(&spec.system)?;
    for &h in &spec.h_values {
        validate_mesh(spec.t0, spec.t1, h)?;
    }
    let schemes: Vec<Scheme> = spec
        .schemes
        .iter()
        .map(|&(family, m)| scheme(family, m))
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|i| (0..spec.h_values.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<ConvergenceCell> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<ConvergenceCell> {
            let h = spec.h_values[j];
            let state = integrate_reference(&sys, spec.t0, spec.t1, h, DEFAULT_REFINE)?;
            let f_true = exact_dynamics_on_grid(&sys, &state)?;
            let (err, scale) = discovery_linf_error(&schemes[i], &state, &f_true)?;
            Ok(ConvergenceCell {
                h,
                linf_error: err,
                truth_scale: scale,
                floor_limited: err.is_finite() && err < ERROR_FLOOR_FACTOR * scale,
            })
        })
        .collect::<Result<_>>()?;

    let per_scheme = schemes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let cells: Vec<ConvergenceCell> =
                results[i * spec.h_values.len()..(i + 1) * spec.h_values.len()].to_vec();
            let diverged = cells.iter().any(|c| !c.linf_error.is_finite());
            let usable: Vec<&ConvergenceCell> = cells
                .iter()
                .filter(|c| c.linf_error.is_finite() && !c.floor_limited)
                .collect();
            let errors: Vec<f64> = usable.iter().map(|c| c.linf_error).collect();
            let hs: Vec<f64> = usable.iter().map(|c| c.h).collect();
            let fit = estimate_order(&errors, &hs).ok();
            SchemeConvergence {
                family: s.family(),
                m: s.m(),
                cells,
                fit,
                diverged,
            }
        })
        .collect();

    Ok(ConvergenceStudy {
        system: spec.system.clone(),
        t0: spec.t0,
        t1: spec.t1,
        h_values: spec.h_values.clone(),
        per_scheme,
    })
}

/// Checks the convergence study against the theory: every scheme classified
/// stable (plus the marginally stable trapezoid case) must show a measured
/// slope within [`ORDER_FIT_TOL`] of its consistency order. Returns the
/// failures; an empty list means the study concords.
pub fn convergence_concordance(study: &ConvergenceStudy) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    for per in &study.per_scheme {
        let s = scheme(per.family, per.m)?;
        let class = classify_stability(&s, Direction::Forward)?;
        let expected = match class.tag {
            StabilityTag::Stable | StabilityTag::MarginallyStable => {
                consistency_report(&s, 30)?.order as f64
            }
            _ => continue, // no convergence claim for unstable schemes
        };
        match &per.fit {
            None => failures.push(format!("{}-{}: no usable order fit", per.family, per.m)),
            Some(fit) if (fit.slope - expected).abs() > ORDER_FIT_TOL => failures.push(format!(
                "{}-{}: slope {:.3} outside {:.2} +- {ORDER_FIT_TOL}",
                per.family, per.m, fit.slope, expected
            )),
            Some(_) => {}
        }
    }
    Ok(failures)
}

/// Long-time error growth at a fixed mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Growth {
    Constant,
    Exponential,
}

impl std::fmt::Display for Growth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Growth::Constant => write!(f, "Constant"),
            Growth::Exponential => write!(f, "Exponential"),
        }
    }
}

/// Configuration of a fixed-mesh, growing-domain study.
#[derive(Debug, Clone)]
pub struct LongTimeSpec {
    pub schemes: Vec<(Family, u32)>,
    pub h: f64,
    /// Strictly increasing horizons, at least two.
    pub t_values: Vec<f64>,
    pub system: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LongTimeCell {
    pub t_end: f64,
    pub linf_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeLongTime {
    pub family: Family,
    pub m: u32,
    pub cells: Vec<LongTimeCell>,
    pub growth: Growth,
}

#[derive(Debug, Clone, Serialize)]
pub struct LongTimeStudy {
    pub system: String,
    pub h: f64,
    pub t_values: Vec<f64>,
    pub per_scheme: Vec<SchemeLongTime>,
}

/// Runs the long-time study. The reference state is generated once over
/// `[0, max T]` and sliced per horizon, so every horizon sees the same data.
pub fn run_longtime(spec: &LongTimeSpec) -> Result<LongTimeStudy> {
    if spec.t_values.len() < 2 {
        return Err(Error::InvalidStudy("need at least two horizons".into()));
    }
    if !spec.t_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidStudy(
            "horizons must be strictly increasing".into(),
        ));
    }
    if spec.schemes.is_empty() {
        return Err(Error::InvalidStudy("no schemes selected".into()));
    }
    let sys = system_by_name(&spec.system)?;
    let t_max = *spec.t_values.last().unwrap();
    let points_per_t: Vec<usize> = spec
        .t_values
        .iter()
        .map(|&t| validate_mesh(0.0, t, spec.h).map(|n| n + 1))
        .collect::<Result<_>>()?;

    let state_full = integrate_reference(&sys, 0.0, t_max, spec.h, DEFAULT_REFINE)?;
    let f_full = exact_dynamics_on_grid(&sys, &state_full)?;
    let schemes: Vec<Scheme> = spec
        .schemes
        .iter()
        .map(|&(family, m)| scheme(family, m))
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|i| (0..spec.t_values.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<LongTimeCell> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<LongTimeCell> {
            let state = state_full.prefix(points_per_t[j])?;
            let f_true = f_full.prefix(points_per_t[j])?;
            let (err, _) = discovery_linf_error(&schemes[i], &state, &f_true)?;
            Ok(LongTimeCell {
                t_end: spec.t_values[j],
                linf_error: err,
            })
        })
        .collect::<Result<_>>()?;

    let per_scheme = schemes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let cells: Vec<LongTimeCell> =
                results[i * spec.t_values.len()..(i + 1) * spec.t_values.len()].to_vec();
            let growth = classify_growth(&cells);
            SchemeLongTime {
                family: s.family(),
                m: s.m(),
                cells,
                growth,
            }
        })
        .collect();

    Ok(LongTimeStudy {
        system: spec.system.clone(),
        h: spec.h,
        t_values: spec.t_values.clone(),
        per_scheme,
    })
}

/// Exponential when any horizon overflowed, or when the fitted slope of
/// log10(error) per unit time exceeds [`GROWTH_SLOPE_THRESHOLD`].
fn classify_growth(cells: &[LongTimeCell]) -> Growth {
    if cells.iter().any(|c| !c.linf_error.is_finite()) {
        return Growth::Exponential;
    }
    let n = cells.len() as f64;
    let mean_t = cells.iter().map(|c| c.t_end).sum::<f64>() / n;
    let mean_y = cells
        .iter()
        .map(|c| c.linf_error.max(1e-300).log10())
        .sum::<f64>()
        / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for c in cells {
        let x = c.t_end - mean_t;
        sxx += x * x;
        sxy += x * (c.linf_error.max(1e-300).log10() - mean_y);
    }
    if sxy / sxx > GROWTH_SLOPE_THRESHOLD {
        Growth::Exponential
    } else {
        Growth::Constant
    }
}

/// Checks the long-time study against the theory: schemes classified stable
/// or marginally stable must show constant error, unstable ones exponential
/// growth. Returns the failures.
pub fn longtime_concordance(study: &LongTimeStudy) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    for per in &study.per_scheme {
        let s = scheme(per.family, per.m)?;
        let class = classify_stability(&s, Direction::Forward)?;
        let expected = match class.tag {
            StabilityTag::Stable | StabilityTag::MarginallyStable => Growth::Constant,
            _ => Growth::Exponential,
        };
        if per.growth != expected {
            failures.push(format!(
                "{}-{}: growth {} but classification {} implies {}",
                per.family, per.m, per.growth, class.tag, expected
            ));
        }
    }
    Ok(failures)
}

/// CSV version stamp shared by all report writers.
pub const CSV_VERSION_HEADER: &str = "# lmm-discover v1";

fn format_error(e: f64) -> String {
    if e.is_finite() {
        format!("{e:e}")
    } else {
        "inf".to_string()
    }
}

/// Writes `family,M,h_or_T,linf_error,estimated_order_or_growth` rows, one
/// per (scheme, mesh) cell, with the per-scheme fitted order repeated on
/// each of its rows.
pub fn write_convergence_csv<W: std::io::Write>(study: &ConvergenceStudy, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_VERSION_HEADER}")?;
    writeln!(w, "family,M,h_or_T,linf_error,estimated_order_or_growth")?;
    for per in &study.per_scheme {
        let order = match (&per.fit, per.diverged) {
            (_, true) => "divergent".to_string(),
            (Some(fit), _) => format!("{:.4}", fit.slope),
            (None, _) => "na".to_string(),
        };
        for cell in &per.cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                per.family,
                per.m,
                cell.h,
                format_error(cell.linf_error),
                order
            )?;
        }
    }
    Ok(())
}

/// Same row schema as the convergence writer, with the growth class in the
/// last column.
pub fn write_longtime_csv<W: std::io::Write>(study: &LongTimeStudy, mut w: W) -> Result<()> {
    writeln!(w, "{CSV_VERSION_HEADER}")?;
    writeln!(w, "family,M,h_or_T,linf_error,estimated_order_or_growth")?;
    for per in &study.per_scheme {
        for cell in &per.cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                per.family,
                per.m,
                cell.t_end,
                format_error(cell.linf_error),
                per.growth
            )?;
        }
    }
    Ok(())
}
