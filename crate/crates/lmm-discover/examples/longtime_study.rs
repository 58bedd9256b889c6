//! Long-time discovery at a fixed mesh: AB and BDF keep a constant error as
//! the horizon grows (and AM-1 joins them thanks to its error cancellation),
//! while AM-2 blows up exponentially with the number of steps.
//!
//! ```bash
//! cargo run --example longtime_study
//! ```

use lmm_discover::experiments::{run_longtime, LongTimeSpec};
use lmm_discover::schemes::Family;

fn main() {
    let spec = LongTimeSpec {
        schemes: vec![
            (Family::Ab, 2),
            (Family::Bdf, 2),
            (Family::Am, 1),
            (Family::Am, 2),
        ],
        h: 0.01,
        t_values: vec![12.5, 25.0, 37.5],
        system: "cubic2d".into(),
    };
    let study = run_longtime(&spec).unwrap();

    println!(
        "max discovery error on {} at fixed h = {} over [0, T]:",
        study.system, study.h
    );
    print!("{:>8}", "scheme");
    for t in &study.t_values {
        print!("  {:>11}", format!("T = {t}"));
    }
    println!("  {:>12}", "growth");
    for per in &study.per_scheme {
        print!("{:>7}-{}", per.family, per.m);
        for cell in &per.cells {
            if cell.linf_error.is_finite() {
                print!("  {:>11.3e}", cell.linf_error);
            } else {
                print!("  {:>11}", "overflow");
            }
        }
        println!("  {:>12}", per.growth.to_string());
    }
    println!();
    println!("the AM-2 row is driven by its root at magnitude 1.7165: every");
    println!("extra step multiplies the amplification, so a longer horizon at");
    println!("the same mesh is strictly worse.");
}
