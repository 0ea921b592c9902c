//! Classification-based test: repeated nested cross-validation gives a
//! spread of accuracies, while MMD² on the same kernel is a single number.

use graphtest::cbt::{cbt, CbtConfig};
use graphtest::embedding::{dce_embed, embedded_gram, Bandwidth};
use graphtest::ktst::mmd2u;
use graphtest::simulation::gen_star_dataset;

fn main() -> graphtest::Result<()> {
    let data = gen_star_dataset(5, 0.75, 20, 20, 3)?;
    let k = embedded_gram(&dce_embed(&data)?, Bandwidth::MedianHeuristic)?;

    let cfg = CbtConfig { repetitions: 20, permutations: 200, seed: 11, ..Default::default() };
    let report = cbt(&k, data.labels(), &cfg)?;

    println!("median acc_CV {:.4}  p = {}", report.test.statistic, report.test.p_value);
    println!("repetition  acc_CV   p-value");
    for (r, (acc, p)) in report.acc_cv_all.iter().zip(&report.p_values_per_repetition).enumerate() {
        println!("{r:>10}  {acc:.4}   {p:.3}");
    }
    println!("selected C:");
    for (c, count) in &report.c_selected_histogram {
        println!("  {c:>10.3e}  {count}");
    }

    let (m, n) = data.group_sizes();
    println!("MMD2u (deterministic) = {:.6}", mmd2u(&k, m, n)?);
    Ok(())
}
