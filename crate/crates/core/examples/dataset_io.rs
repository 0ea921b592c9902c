//! Writing and reading the on-disk formats: a dataset manifest with one
//! adjacency CSV per subject, and a precomputed kernel with its JSON sidecar.

use graphtest::embedding::{dce_embed, embedded_gram, Bandwidth};
use graphtest::graph::{load_dataset, save_dataset};
use graphtest::simulation::gen_star_dataset;
use graphtest::KernelMatrix;

fn main() -> graphtest::Result<()> {
    let dir = std::env::temp_dir().join(format!("graphtest-io-{}", std::process::id()));
    let data = gen_star_dataset(5, 1.0, 8, 8, 2)?;

    let manifest = save_dataset(&data, &dir)?;
    println!("manifest: {}", manifest.display());
    println!("{}", std::fs::read_to_string(&manifest).unwrap_or_default());

    let loaded = load_dataset(&manifest)?;
    println!("loaded {} graphs, groups {:?}", loaded.len(), loaded.group_sizes());

    let k = embedded_gram(&dce_embed(&loaded)?, Bandwidth::MedianHeuristic)?;
    let kpath = dir.join("K.csv");
    let sidecar = k.save(&kpath, Some(loaded.labels()))?;
    let (back, labels) = KernelMatrix::load(&kpath)?;
    println!("kernel {} x {} -> {}, sidecar {}", back.size(), back.size(), kpath.display(), sidecar.display());
    println!("labels from sidecar: {}", labels.map_or(0, |l| l.len()));

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
