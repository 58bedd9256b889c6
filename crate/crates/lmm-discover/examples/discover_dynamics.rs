//! Recover the dynamics of the 2D cubic oscillator from its exact states
//! with AB-3, and compare against the true dynamics.
//!
//! ```bash
//! cargo run --example discover_dynamics
//! ```

use lmm_discover::discovery::{
    error_vs_truth, exact_initial_dynamics, restrict_to_learned, solve_discovery, DiscoveryProblem,
};
use lmm_discover::reference::{
    cubic_2d, exact_dynamics_on_grid, integrate_reference, DEFAULT_REFINE,
};
use lmm_discover::schemes::ab_scheme;

fn main() {
    let sys = cubic_2d();
    let scheme = ab_scheme(3).unwrap();
    let (t0, t1, h) = (0.0, 0.2, 0.005);

    let state = integrate_reference(&sys, t0, t1, h, DEFAULT_REFINE).unwrap();
    let f_true = exact_dynamics_on_grid(&sys, &state).unwrap();
    let init = exact_initial_dynamics(&scheme, &f_true);
    println!(
        "{} on {} over [{t0}, {t1}] at h = {h}: {} states, {} supplied dynamics values",
        scheme.label(),
        sys.name(),
        state.n_points(),
        init.len()
    );

    let problem = DiscoveryProblem::new(scheme.clone(), state, init).unwrap();
    let result = solve_discovery(&problem);
    let truth = restrict_to_learned(&scheme, &f_true).unwrap();
    let report = error_vs_truth(&result, &truth).unwrap();

    println!("solve residual:        {:.3e}", result.residual_norm);
    println!("max recovery error:    {:.3e}", report.linf);
    println!("summed recovery error: {:.3e}", report.l1);
    println!();
    println!(
        "{:>6}  {:>11} {:>11}  {:>11} {:>11}  {:>9}",
        "t", "f_hat_1", "f_hat_2", "f_true_1", "f_true_2", "abs_err"
    );
    for r in (0..result.len()).step_by(5) {
        let learned = result.row(r);
        let exact = truth.row(r);
        println!(
            "{:>6.3}  {:>11.6} {:>11.6}  {:>11.6} {:>11.6}  {:>9.2e}",
            truth.time(r),
            learned[0],
            learned[1],
            exact[0],
            exact[1],
            report.per_index[r]
        );
    }
}
