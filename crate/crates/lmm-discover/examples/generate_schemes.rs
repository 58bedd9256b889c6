//! Generate exact rational coefficients for the three scheme families and
//! export one scheme as JSON.
//!
//! ```bash
//! cargo run --example generate_schemes
//! ```

use lmm_discover::rational;
use lmm_discover::schemes::{ab_scheme, am_scheme, bdf_scheme, Scheme};

fn print_table(title: &str, schemes: &[Scheme]) {
    println!("{title}");
    for s in schemes {
        let alpha: Vec<String> = s.alpha().iter().map(rational::format).collect();
        let beta: Vec<String> = s.beta().iter().map(rational::format).collect();
        println!("  {:6}  alpha = [{}]", s.label(), alpha.join(", "));
        println!("          beta  = [{}]", beta.join(", "));
    }
    println!();
}

fn main() {
    let ab: Vec<Scheme> = (1..=4).map(|m| ab_scheme(m).unwrap()).collect();
    print_table("Adams-Bashforth (explicit: beta_0 = 0)", &ab);

    let am: Vec<Scheme> = (0..=4).map(|m| am_scheme(m).unwrap()).collect();
    print_table("Adams-Moulton (implicit; AM-0 coincides with BDF-1)", &am);

    let bdf: Vec<Scheme> = (1..=4).map(|m| bdf_scheme(m).unwrap()).collect();
    print_table(
        "BDF (state-side weights; dynamics side is exactly h f_n)",
        &bdf,
    );

    let s = am_scheme(2).unwrap();
    println!("AM-2 as JSON:");
    println!("{}", serde_json::to_string_pretty(&s).unwrap());
}
