//! Ground-truth trajectories, exact dynamics evaluation, and truncation-error
//! measurement for the benchmark systems.
//!
//! States are produced by classical fixed-step RK4 on an internal mesh much
//! finer than the output mesh, and every trajectory is self-verified by
//! doubling the internal refinement and requiring agreement to
//! [`REFERENCE_RTOL`]. Fixed-step integration keeps grids deterministic and
//! bit-reproducible, which the slicing and determinism guarantees elsewhere
//! lean on.

use std::io::{BufRead, Write};

use crate::discovery::GridFunction;
use crate::schemes::Scheme;
use crate::{Error, Result};

/// Default internal refinement factor of the reference integrator.
pub const DEFAULT_REFINE: usize = 100;

/// Relative agreement (against the trajectory scale) required between two
/// successive refinement levels.
pub const REFERENCE_RTOL: f64 = 1e-10;

/// An autonomous first-order system `dx/dt = f(x)` with its initial state.
type DynamicsFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

pub struct DynamicalSystem {
    name: &'static str,
    dim: usize,
    x0: Vec<f64>,
    f: DynamicsFn,
}

impl DynamicalSystem {
    pub fn new(
        name: &'static str,
        dim: usize,
        x0: Vec<f64>,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(x0.len(), dim);
        DynamicalSystem {
            name,
            dim,
            x0,
            f: Box::new(f),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Evaluates the dynamics into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, &mut out);
        out
    }
}

impl std::fmt::Debug for DynamicalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynamicalSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x0", &self.x0)
            .finish()
    }
}

/// Nonlinearly damped 2D cubic oscillator:
/// `dx1 = -0.1 x1^3 + 2.0 x2^3`, `dx2 = -2.0 x1^3 - 0.1 x2^3`,
/// starting at `(2, 0)`.
pub fn cubic_2d() -> DynamicalSystem {
    DynamicalSystem::new("cubic2d", 2, vec![2.0, 0.0], |x, out| {
        let (c1, c2) = (x[0] * x[0] * x[0], x[1] * x[1] * x[1]);
        out[0] = -0.1 * c1 + 2.0 * c2;
        out[1] = -2.0 * c1 - 0.1 * c2;
    })
}

/// Scalar exponential growth `dx = x`, `x(0) = 1`; closed form `e^t`.
pub fn linear_scalar() -> DynamicalSystem {
    DynamicalSystem::new("linear", 1, vec![1.0], |x, out| {
        out[0] = x[0];
    })
}

/// Uniform rotation `dx1 = -x2`, `dx2 = x1`, starting at `(1, 0)`;
/// closed form `(cos t, sin t)`.
pub fn rotation_2d() -> DynamicalSystem {
    DynamicalSystem::new("rotation", 2, vec![1.0, 0.0], |x, out| {
        out[0] = -x[1];
        out[1] = x[0];
    })
}

pub fn available_systems() -> [&'static str; 3] {
    ["cubic2d", "linear", "rotation"]
}

pub fn system_by_name(name: &str) -> Result<DynamicalSystem> {
    match name {
        "cubic2d" => Ok(cubic_2d()),
        "linear" => Ok(linear_scalar()),
        "rotation" => Ok(rotation_2d()),
        _ => Err(Error::UnknownSystem(name.to_string())),
    }
}

fn rk4_step(sys: &DynamicalSystem, x: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let dim = x.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    sys.eval(x, k1);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    sys.eval(tmp, k2);
    for i in 0..dim {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    sys.eval(tmp, k3);
    for i in 0..dim {
        tmp[i] = x[i] + h * k3[i];
    }
    sys.eval(tmp, k4);
    for i in 0..dim {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn rk4_trajectory(
    sys: &DynamicalSystem,
    t0: f64,
    h_out: f64,
    n_out: usize,
    refine: usize,
) -> Result<GridFunction> {
    let dim = sys.dim();
    let mut grid = GridFunction::zeros(t0, h_out, dim, n_out + 1)?;
    let mut x = sys.x0().to_vec();
    grid.row_mut(0).copy_from_slice(&x);
    let h_in = h_out / refine as f64;
    let mut scratch = [
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    ];
    for n in 1..=n_out {
        for _ in 0..refine {
            rk4_step(sys, &mut x, h_in, &mut scratch);
        }
        grid.row_mut(n).copy_from_slice(&x);
    }
    Ok(grid)
}

/// Integrates the system over `[t0, t1]` sampled at mesh `h_out`, using RK4
/// with internal step `h_out / refine`.
///
/// The trajectory is recomputed at `2 * refine` and the two must agree to
/// [`REFERENCE_RTOL`] relative to the trajectory scale; the finer one is
/// returned. Disagreement is an error, not a warning.
pub fn integrate_reference(
    sys: &DynamicalSystem,
    t0: f64,
    t1: f64,
    h_out: f64,
    refine: usize,
) -> Result<GridFunction> {
    assert!(refine >= 1, "refine must be at least 1");
    if !h_out.is_finite() || h_out <= 0.0 || t1 <= t0 {
        return Err(Error::InvalidGrid(format!(
            "bad time range [{t0}, {t1}] with h = {h_out}"
        )));
    }
    let ratio = (t1 - t0) / h_out;
    let n_out = ratio.round();
    if (ratio - n_out).abs() > 1e-12 * ratio.max(1.0) {
        return Err(Error::NonIntegralStepCount { ratio });
    }
    let n_out = n_out as usize;

    let coarse = rk4_trajectory(sys, t0, h_out, n_out, refine)?;
    let fine = rk4_trajectory(sys, t0, h_out, n_out, refine * 2)?;
    let scale = fine.linf().max(1.0);
    let diff = coarse
        .values()
        .iter()
        .zip(fine.values())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    if diff > REFERENCE_RTOL * scale {
        return Err(Error::ReferenceNotConverged {
            achieved: diff / scale,
            required: REFERENCE_RTOL,
        });
    }
    Ok(fine)
}

/// Pointwise application of the system dynamics to a state grid.
pub fn exact_dynamics_on_grid(sys: &DynamicalSystem, x: &GridFunction) -> Result<GridFunction> {
    if x.dim() != sys.dim() {
        return Err(Error::GridMismatch(format!(
            "state grid has dimension {}, system {} has {}",
            x.dim(),
            sys.name(),
            sys.dim()
        )));
    }
    let mut f = GridFunction::zeros(x.t0(), x.h(), x.dim(), x.n_points())?;
    for n in 0..x.n_points() {
        let row = x.row(n).to_vec();
        sys.eval(&row, f.row_mut(n));
    }
    Ok(f)
}

/// Truncation error of a scheme on a (state, dynamics) grid pair:
/// `tau_n = (1/h) sum_m alpha_m x_{n-m} - sum_m beta_m f_{n-m}` for
/// `n = M..N`, row-major `(N - M + 1) x dim`.
pub fn truncation_on_grid(s: &Scheme, x: &GridFunction, f: &GridFunction) -> Result<Vec<f64>> {
    if x.n_points() != f.n_points() || x.dim() != f.dim() {
        return Err(Error::GridMismatch(format!(
            "state is {} x {}, dynamics is {} x {}",
            x.n_points(),
            x.dim(),
            f.n_points(),
            f.dim()
        )));
    }
    let steps = s.steps();
    if x.n_steps() < steps {
        return Err(Error::GridTooShort {
            n: x.n_steps(),
            needed: steps,
        });
    }
    let dim = x.dim();
    let alpha = s.alpha_f64();
    let beta = s.beta_f64();
    let inv_h = 1.0 / x.h();
    let n_rows = x.n_steps() - steps + 1;
    let mut tau = vec![0.0; n_rows * dim];
    for r in 0..n_rows {
        let n = steps + r;
        let row = &mut tau[r * dim..(r + 1) * dim];
        for m in 0..=steps {
            let xs = x.row(n - m);
            let fs = f.row(n - m);
            for c in 0..dim {
                row[c] += inv_h * alpha[m] * xs[c] - beta[m] * fs[c];
            }
        }
    }
    Ok(tau)
}

/// Writes a grid as CSV with header `t,x_1..x_d`. Doubles carry 17
/// significant digits so that reading the file back reproduces them exactly.
pub fn write_grid_csv<W: Write>(grid: &GridFunction, mut w: W) -> Result<()> {
    write!(w, "t")?;
    for c in 1..=grid.dim() {
        write!(w, ",x_{c}")?;
    }
    writeln!(w)?;
    for n in 0..grid.n_points() {
        write!(w, "{:.16e}", grid.time(n))?;
        for v in grid.row(n) {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a grid written by [`write_grid_csv`]. Comment lines starting with
/// `#` are skipped; the time column must be uniformly spaced.
pub fn read_grid_csv<R: BufRead>(r: R) -> Result<GridFunction> {
    let mut dim = None;
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (line_no, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with('t') {
            // header row fixes the dimension
            dim = Some(trimmed.split(',').count() - 1);
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        let expected = dim.ok_or(Error::MalformedCsv {
            line: line_no + 1,
            message: "data before header".into(),
        })? + 1;
        if fields.len() != expected {
            return Err(Error::MalformedCsv {
                line: line_no + 1,
                message: format!("expected {expected} fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::MalformedCsv {
                line: line_no + 1,
                message: format!("bad float `{s}`"),
            })
        };
        times.push(parse(fields[0])?);
        for field in &fields[1..] {
            values.push(parse(field)?);
        }
    }
    let dim = dim.ok_or(Error::MalformedCsv {
        line: 0,
        message: "missing header".into(),
    })?;
    if times.len() < 2 {
        return Err(Error::MalformedCsv {
            line: 0,
            message: "need at least two rows".into(),
        });
    }
    let h = times[1] - times[0];
    for (i, pair) in times.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::MalformedCsv {
                line: i + 3,
                message: "time column is not uniformly spaced".into(),
            });
        }
    }
    GridFunction::new(times[0], h, dim, values)
}
