//! The empirical 1-D Wasserstein distance on small samples.
//!
//! Run with: `cargo run --release --example wasserstein_demo`

use calocal::metrics::wasserstein1_empirical;

fn main() -> calocal::Result<()> {
    // Identical multisets are at distance zero.
    let a = [3.0, 1.0, 2.0];
    println!(
        "W1(a, shuffled a) = {}",
        wasserstein1_empirical(&a, &[2.0, 3.0, 1.0])?
    );

    // A unit shift moves every point by one.
    println!(
        "W1({{0, 2}}, {{1, 3}}) = {}",
        wasserstein1_empirical(&[0.0, 2.0], &[1.0, 3.0])?
    );

    // Different sample sizes are fine: the distance integrates |F_a - F_b|.
    println!(
        "W1({{0, 1}}, {{0, 0.5, 1}}) = {:.6}",
        wasserstein1_empirical(&[0.0, 1.0], &[0.0, 0.5, 1.0])?
    );

    // Translation invariance.
    let b = [0.4, -1.0, 2.2, 0.9];
    let c = [1.5, 0.1, -0.3];
    let shift = 17.0;
    let bs: Vec<f64> = b.iter().map(|v| v + shift).collect();
    let cs: Vec<f64> = c.iter().map(|v| v + shift).collect();
    println!(
        "W1(b, c) = {:.6}; W1(b+17, c+17) = {:.6}",
        wasserstein1_empirical(&b, &c)?,
        wasserstein1_empirical(&bs, &cs)?
    );

    // Scale sensitivity: stretching one sample costs transport.
    let narrow: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    let wide: Vec<f64> = (0..100).map(|i| 2.0 * i as f64 / 100.0).collect();
    println!(
        "W1(uniform[0,1), uniform[0,2)) = {:.4}",
        wasserstein1_empirical(&narrow, &wide)?
    );
    Ok(())
}
