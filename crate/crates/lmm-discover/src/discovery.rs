//! The discovery linear system: recovering dynamics values from exact states.
//!
//! Rewriting the LMM relation with the state known and the dynamics unknown
//! gives, for each equation index `n = M..N`,
//!
//! ```text
//! sum_{m = m0}^{M0} beta_m f_hat_{n-m} = (1/h) sum_{m=0}^{M} alpha_m x_{n-m}
//! ```
//!
//! The unknowns are the dynamics values at grid indices
//! `I = {M - m0, ..., N - m0}`; the values at `I_M = {M - M0, ..., M - m0 - 1}`
//! must be supplied (they fold into the right-hand side as `g_hat`). In
//! matrix form `B f_hat = h^-1 A x - g_hat` with `B` banded lower-triangular,
//! diagonal `beta_{m0}` and k-th subdiagonal `beta_{m0+k}`. Since
//! `beta_{m0} != 0`, forward substitution solves the system in
//! `O(N * bandwidth * d)` with no pivoting.

use std::collections::BTreeMap;

use crate::schemes::Scheme;
use crate::{Error, Result};

/// Values of a d-dimensional function on `N + 1` equidistant time points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    t0: f64,
    h: f64,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    /// `values` is row-major `(N+1) x dim`: row `n` holds the value at
    /// `t0 + n h`.
    pub fn new(t0: f64, h: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidGrid(format!("mesh h = {h} must be positive")));
        }
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidGrid(format!(
                "value buffer length {} is not a nonzero multiple of dim {dim}",
                values.len()
            )));
        }
        Ok(GridFunction { t0, h, dim, values })
    }

    pub fn zeros(t0: f64, h: f64, dim: usize, n_points: usize) -> Result<Self> {
        GridFunction::new(t0, h, dim, vec![0.0; dim * n_points])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points, `N + 1`.
    pub fn n_points(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Number of mesh intervals, `N`.
    pub fn n_steps(&self) -> usize {
        self.n_points() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.h
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The first `n_points` rows as a grid over the same origin and mesh.
    pub fn prefix(&self, n_points: usize) -> Result<GridFunction> {
        if n_points == 0 || n_points > self.n_points() {
            return Err(Error::GridMismatch(format!(
                "prefix of {n_points} points from a grid of {}",
                self.n_points()
            )));
        }
        GridFunction::new(
            self.t0,
            self.h,
            self.dim,
            self.values[..n_points * self.dim].to_vec(),
        )
    }

    /// Rows `first..=last` as a grid (the origin shifts accordingly).
    pub fn window(&self, first: usize, last: usize) -> Result<GridFunction> {
        if first > last || last >= self.n_points() {
            return Err(Error::GridMismatch(format!(
                "window {first}..={last} out of bounds for {} points",
                self.n_points()
            )));
        }
        GridFunction::new(
            self.time(first),
            self.h,
            self.dim,
            self.values[first * self.dim..(last + 1) * self.dim].to_vec(),
        )
    }

    /// Max absolute entry.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Indices of the initial dynamics data the scheme consumes:
/// `I_M = {M - M0, ..., M - m0 - 1}` (empty for BDF and one-step schemes).
pub fn initial_index_set(s: &Scheme) -> std::ops::Range<usize> {
    let steps = s.steps();
    (steps - s.beta_last())..(steps - s.beta_first())
}

/// Indices of the learned dynamics values: `I = {M - m0, ..., N - m0}`.
pub fn learned_index_set(s: &Scheme, n_steps: usize) -> std::ops::RangeInclusive<usize> {
    (s.steps() - s.beta_first())..=(n_steps - s.beta_first())
}

/// A discovery instance: scheme, exact state grid, and the supplied initial
/// dynamics values on exactly the index set [`initial_index_set`].
#[derive(Debug, Clone)]
pub struct DiscoveryProblem {
    scheme: Scheme,
    state: GridFunction,
    initial_dynamics: BTreeMap<usize, Vec<f64>>,
}

impl DiscoveryProblem {
    pub fn new(
        scheme: Scheme,
        state: GridFunction,
        initial_dynamics: BTreeMap<usize, Vec<f64>>,
    ) -> Result<Self> {
        let steps = scheme.steps();
        if state.n_steps() < steps {
            return Err(Error::GridTooShort {
                n: state.n_steps(),
                needed: steps,
            });
        }
        let wanted = initial_index_set(&scheme);
        for index in wanted.clone() {
            match initial_dynamics.get(&index) {
                None => return Err(Error::MissingInitialDynamics { index }),
                Some(v) if v.len() != state.dim() => {
                    return Err(Error::GridMismatch(format!(
                        "initial dynamics at index {index} has dimension {}, state has {}",
                        v.len(),
                        state.dim()
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(&index) = initial_dynamics.keys().find(|k| !wanted.contains(k)) {
            return Err(Error::UnexpectedInitialDynamics { index });
        }
        Ok(DiscoveryProblem {
            scheme,
            state,
            initial_dynamics,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn state(&self) -> &GridFunction {
        &self.state
    }

    pub fn initial_dynamics(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.initial_dynamics
    }

    /// Number of equations (and unknowns), `N - M + 1`.
    pub fn n_equations(&self) -> usize {
        self.state.n_steps() - self.scheme.steps() + 1
    }
}

/// Right-hand side `h^-1 A x - g_hat`, row-major `n_equations x dim`.
///
/// Row `r` corresponds to equation `n = M + r`:
/// `(1/h) sum_m alpha_m x_{n-m}` minus the initial-dynamics contribution
/// `g_hat_n = sum_{m >= n - M0, m in I_M} beta_{n-m} f_hat_m`, which is
/// nonzero only in the first `M0 - m0` equations.
pub fn assemble_rhs(p: &DiscoveryProblem) -> Vec<f64> {
    let scheme = p.scheme();
    let state = p.state();
    let dim = state.dim();
    let steps = scheme.steps();
    let alpha = scheme.alpha_f64();
    let beta = scheme.beta_f64();
    let n_eq = p.n_equations();
    let inv_h = 1.0 / state.h();

    let mut rhs = vec![0.0; n_eq * dim];
    for r in 0..n_eq {
        let n = steps + r;
        let row = &mut rhs[r * dim..(r + 1) * dim];
        for (m, am) in alpha.iter().enumerate() {
            if *am == 0.0 {
                continue;
            }
            let x = state.row(n - m);
            for (acc, value) in row.iter_mut().zip(x) {
                *acc += am * value;
            }
        }
        for acc in row.iter_mut() {
            *acc *= inv_h;
        }
    }

    // g_hat: supplied values feed the first equations through their beta weights
    for (&idx, f0) in p.initial_dynamics() {
        for (m, bm) in beta.iter().enumerate() {
            if *bm == 0.0 {
                continue;
            }
            let n = idx + m;
            if n >= steps && n - steps < n_eq {
                let row = &mut rhs[(n - steps) * dim..(n - steps + 1) * dim];
                for c in 0..dim {
                    row[c] -= bm * f0[c];
                }
            }
        }
    }
    rhs
}

/// Recovered dynamics on the learned index set, plus the solve residual.
#[derive(Debug, Clone)]
pub struct DiscoveryResult {
    f_hat: Vec<f64>,
    first_index: usize,
    dim: usize,
    /// Infinity norm of `B f_hat - rhs` recomputed after the solve. For
    /// stable solves this sits at the rounding floor of the right-hand side.
    pub residual_norm: f64,
}

impl DiscoveryResult {
    /// Number of learned values.
    pub fn len(&self) -> usize {
        self.f_hat.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.f_hat.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid index of the first learned value (`M - m0`).
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    /// Learned value for row `r` (grid index `first_index + r`).
    pub fn row(&self, r: usize) -> &[f64] {
        &self.f_hat[r * self.dim..(r + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.f_hat
    }
}

/// Solves the discovery system by forward substitution on the banded
/// lower-triangular `B`.
pub fn solve_discovery(p: &DiscoveryProblem) -> DiscoveryResult {
    let scheme = p.scheme();
    let dim = p.state().dim();
    let n_eq = p.n_equations();
    let beta = scheme.beta_f64();
    let band = &beta[scheme.beta_first()..=scheme.beta_last()];
    let diag = band[0];

    let rhs = assemble_rhs(p);
    let mut f_hat = vec![0.0; n_eq * dim];
    for r in 0..n_eq {
        let reach = (band.len() - 1).min(r);
        for c in 0..dim {
            let mut acc = rhs[r * dim + c];
            for k in 1..=reach {
                acc -= band[k] * f_hat[(r - k) * dim + c];
            }
            f_hat[r * dim + c] = acc / diag;
        }
    }

    // residual of the recomputed product
    let mut residual_norm = 0.0f64;
    for r in 0..n_eq {
        let reach = (band.len() - 1).min(r);
        for c in 0..dim {
            let mut acc = -rhs[r * dim + c];
            for k in 0..=reach {
                acc += band[k] * f_hat[(r - k) * dim + c];
            }
            residual_norm = residual_norm.max(acc.abs());
        }
    }

    DiscoveryResult {
        f_hat,
        first_index: scheme.steps() - scheme.beta_first(),
        dim,
        residual_norm,
    }
}

/// Error norms of a discovery result against the true dynamics restricted to
/// the learned index set (same row count, same dimension).
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Max over learned indices of the per-index max-abs component error.
    pub linf: f64,
    /// Sum over learned indices of the per-index max-abs component error.
    pub l1: f64,
    /// Per-index max-abs component error, in learned-index order.
    pub per_index: Vec<f64>,
}

pub fn error_vs_truth(result: &DiscoveryResult, truth: &GridFunction) -> Result<ErrorReport> {
    if truth.n_points() != result.len() || truth.dim() != result.dim() {
        return Err(Error::GridMismatch(format!(
            "result is {} x {}, truth restriction is {} x {}",
            result.len(),
            result.dim(),
            truth.n_points(),
            truth.dim()
        )));
    }
    let mut per_index = Vec::with_capacity(result.len());
    for r in 0..result.len() {
        let learned = result.row(r);
        let exact = truth.row(r);
        let err = learned
            .iter()
            .zip(exact)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        per_index.push(err);
    }
    let linf = per_index.iter().fold(0.0f64, |a, b| a.max(*b));
    let l1 = per_index.iter().sum();
    Ok(ErrorReport {
        linf,
        l1,
        per_index,
    })
}

/// Restriction of a full dynamics grid to the learned index set of a scheme:
/// the ground truth to compare a [`DiscoveryResult`] against.
pub fn restrict_to_learned(s: &Scheme, f_full: &GridFunction) -> Result<GridFunction> {
    let range = learned_index_set(s, f_full.n_steps());
    f_full.window(*range.start(), *range.end())
}

/// Exact initial dynamics pulled from a full dynamics grid (the idealized
/// supplied-data assumption).
pub fn exact_initial_dynamics(s: &Scheme, f_full: &GridFunction) -> BTreeMap<usize, Vec<f64>> {
    initial_index_set(s)
        .map(|i| (i, f_full.row(i).to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{ab_scheme, am_scheme, bdf_scheme};

    fn linear_state(t0: f64, h: f64, n_points: usize, x0: f64, slope: f64) -> GridFunction {
        let values: Vec<f64> = (0..n_points)
            .map(|n| x0 + slope * (t0 + n as f64 * h))
            .collect();
        GridFunction::new(t0, h, 1, values).unwrap()
    }

    #[test]
    fn grid_accessors() {
        let g = GridFunction::new(1.0, 0.5, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(g.n_points(), 3);
        assert_eq!(g.n_steps(), 2);
        assert_eq!(g.row(1), &[3.0, 4.0]);
        assert_eq!(g.time(2), 2.0);
        assert_eq!(g.linf(), 6.0);
        let w = g.window(1, 2).unwrap();
        assert_eq!(w.n_points(), 2);
        assert_eq!(w.t0(), 1.5);
        assert!(GridFunction::new(0.0, -1.0, 1, vec![0.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn index_sets() {
        // BDF: no initial data needed
        let s = bdf_scheme(3).unwrap();
        assert!(initial_index_set(&s).is_empty());
        assert_eq!(learned_index_set(&s, 10), 3..=10);

        // AB-2 (m0 = 1, M0 = 2): one supplied value at index 0
        let s = ab_scheme(2).unwrap();
        assert_eq!(initial_index_set(&s), 0..1);
        assert_eq!(learned_index_set(&s, 10), 1..=9);

        // AM-2 (m0 = 0, M0 = 2): supplied at 0 and 1
        let s = am_scheme(2).unwrap();
        assert_eq!(initial_index_set(&s), 0..2);
        assert_eq!(learned_index_set(&s, 10), 2..=10);

        // AM-0 degenerates like BDF-1
        let s = am_scheme(0).unwrap();
        assert!(initial_index_set(&s).is_empty());
    }

    #[test]
    fn missing_and_extra_initial_dynamics_are_rejected() {
        let s = am_scheme(2).unwrap();
        let state = linear_state(0.0, 0.1, 8, 1.0, 2.0);
        let err = DiscoveryProblem::new(s.clone(), state.clone(), BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::MissingInitialDynamics { index: 0 }));

        let mut init = BTreeMap::new();
        init.insert(0, vec![2.0]);
        init.insert(1, vec![2.0]);
        init.insert(5, vec![2.0]);
        let err = DiscoveryProblem::new(s, state, init).unwrap_err();
        assert!(matches!(err, Error::UnexpectedInitialDynamics { index: 5 }));
    }

    #[test]
    fn short_grid_is_rejected() {
        let s = ab_scheme(3).unwrap();
        let state = linear_state(0.0, 0.1, 3, 0.0, 1.0); // N = 2 < 3
        let mut init = BTreeMap::new();
        init.insert(0, vec![1.0]);
        init.insert(1, vec![1.0]);
        let err = DiscoveryProblem::new(s, state, init).unwrap_err();
        assert!(matches!(err, Error::GridTooShort { n: 2, needed: 3 }));
    }

    #[test]
    fn bdf_rhs_needs_no_ghat_and_constant_state_gives_zero() {
        let s = bdf_scheme(2).unwrap();
        let state = GridFunction::new(0.0, 0.25, 1, vec![3.5; 9]).unwrap();
        let p = DiscoveryProblem::new(s, state, BTreeMap::new()).unwrap();
        let rhs = assemble_rhs(&p);
        // sum alpha = 0 makes every row vanish on a constant state
        assert!(rhs.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn ab2_ghat_hits_only_the_first_equation() {
        // g_hat_n = beta_2 f_hat_0 = -(1/2) f_hat_0 only at n = 2
        let s = ab_scheme(2).unwrap();
        let state = GridFunction::new(0.0, 1.0, 1, vec![0.0; 7]).unwrap();
        let mut init = BTreeMap::new();
        init.insert(0, vec![4.0]);
        let p = DiscoveryProblem::new(s, state, init).unwrap();
        let rhs = assemble_rhs(&p);
        // state is zero, so rhs is pure -g_hat: -(-1/2 * 4) = 2 in row 0
        assert_eq!(rhs[0], 2.0);
        assert!(rhs[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bdf1_recovers_divided_differences_exactly() {
        let s = bdf_scheme(1).unwrap();
        let values = vec![0.0, 0.3, -1.2, 2.0, 2.0];
        let h = 0.5;
        let state = GridFunction::new(0.0, h, 1, values.clone()).unwrap();
        let p = DiscoveryProblem::new(s, state, BTreeMap::new()).unwrap();
        let result = solve_discovery(&p);
        assert_eq!(result.first_index(), 1);
        for r in 0..result.len() {
            let expected = (values[r + 1] - values[r]) / h;
            assert_eq!(result.row(r)[0], expected);
        }
        assert_eq!(result.residual_norm, 0.0);
    }

    #[test]
    fn linear_state_recovers_constant_dynamics() {
        // x(t) = x0 + c t has zero truncation error for any consistent
        // scheme, so the recovered dynamics is exactly c (to roundoff).
        let slope = -0.75;
        for s in [
            ab_scheme(3).unwrap(),
            am_scheme(2).unwrap(),
            bdf_scheme(4).unwrap(),
        ] {
            let state = linear_state(0.0, 0.125, 12, 2.0, slope);
            let init = initial_index_set(&s).map(|i| (i, vec![slope])).collect();
            let p = DiscoveryProblem::new(s.clone(), state, init).unwrap();
            let result = solve_discovery(&p);
            for r in 0..result.len() {
                assert!(
                    (result.row(r)[0] - slope).abs() < 1e-11,
                    "{}: index {r} -> {}",
                    s.label(),
                    result.row(r)[0]
                );
            }
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let s = am_scheme(2).unwrap();
        let state = linear_state(0.0, 0.1, 20, 1.0, 3.0);
        let init: BTreeMap<_, _> = initial_index_set(&s).map(|i| (i, vec![3.0])).collect();
        let p = DiscoveryProblem::new(s, state, init).unwrap();
        let a = solve_discovery(&p);
        let b = solve_discovery(&p);
        assert_eq!(a.values(), b.values());
        assert_eq!(a.residual_norm, b.residual_norm);
    }

    #[test]
    fn error_report_basics() {
        let s = bdf_scheme(1).unwrap();
        let state = linear_state(0.0, 1.0, 4, 0.0, 1.0);
        let p = DiscoveryProblem::new(s.clone(), state, BTreeMap::new()).unwrap();
        let result = solve_discovery(&p);

        // perfect truth: zero errors
        let truth = GridFunction::new(1.0, 1.0, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let report = error_vs_truth(&result, &truth).unwrap();
        assert_eq!(report.linf, 0.0);
        assert_eq!(report.l1, 0.0);

        // single deviation delta: linf = l1 = |delta|
        let truth = GridFunction::new(1.0, 1.0, 1, vec![1.0, 1.25, 1.0]).unwrap();
        let report = error_vs_truth(&result, &truth).unwrap();
        assert_eq!(report.linf, 0.25);
        assert_eq!(report.l1, 0.25);
        assert_eq!(report.per_index, vec![0.0, 0.25, 0.0]);

        // shape mismatch
        let truth = GridFunction::new(0.0, 1.0, 1, vec![0.0; 2]).unwrap();
        assert!(error_vs_truth(&result, &truth).is_err());
    }

    #[test]
    fn scaling_the_scheme_leaves_the_solution_unchanged() {
        use crate::rational::ratio;
        let s = am_scheme(2).unwrap();
        let state = GridFunction::new(
            0.0,
            0.2,
            1,
            (0..10).map(|n| ((n as f64) * 0.37).sin()).collect(),
        )
        .unwrap();
        let init: BTreeMap<_, _> = initial_index_set(&s).map(|i| (i, vec![0.1])).collect();
        let base = solve_discovery(
            &DiscoveryProblem::new(s.clone(), state.clone(), init.clone()).unwrap(),
        );
        let scaled = s.scaled(&ratio(-13, 7)).unwrap();
        let other = solve_discovery(&DiscoveryProblem::new(scaled, state, init).unwrap());
        for (a, b) in base.values().iter().zip(other.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
