//! Euclidean projection onto `{x >= 0, sum x = K}`.
//!
//! cargo run --example simplex_projection

use arml::reweight::project_simplex;

fn main() -> arml::Result<()> {
    let cases: [&[f64]; 4] = [&[1.0, 1.0, 1.0], &[3.0, -1.0, 0.5], &[-2.0, -2.0], &[10.0, 0.2, 0.1, 0.0]];
    for v in cases {
        let k = v.len() as f64;
        let p = project_simplex(v, k)?;
        println!("{v:?} -> {p:?}  (sum {})", p.iter().sum::<f64>());
    }
    Ok(())
}
