//! Kernel two-sample test on simulated star graphs.
//!
//! Run with `cargo run --release --example star_ktst -- [delta]`.

use graphtest::embedding::{dce_embed, embedded_gram, Bandwidth};
use graphtest::ktst::{ktst_labeled, KtstConfig};
use graphtest::simulation::gen_star_dataset;

fn main() -> graphtest::Result<()> {
    let delta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.75);

    let data = gen_star_dataset(5, delta, 20, 20, 7)?;
    let k = embedded_gram(&dce_embed(&data)?, Bandwidth::MedianHeuristic)?;

    let cfg = KtstConfig { permutations: 10_000, seed: 1, ..Default::default() };
    let report = ktst_labeled(&k, data.labels(), &cfg)?;

    println!("delta        {delta}");
    println!("MMD2u        {:.6}", report.statistic);
    println!("p-value      {}", report.p_value);
    let s = report.null_summary();
    println!("null range   [{:.6}, {:.6}]", s.min, s.max);
    for (q, v) in &s.quantiles {
        println!("  q{:<5} {v:.6}", q);
    }
    for theta in [0.05, 0.01] {
        println!("reject at {theta}: {}", report.rejects(theta));
    }
    Ok(())
}
