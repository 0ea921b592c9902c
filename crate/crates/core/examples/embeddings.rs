//! Direct connectivity and dissimilarity representations, with the median
//! heuristic for the Gaussian bandwidth.

use graphtest::embedding::{
    dce_embed, dre_embed, embedded_gram, gaussian_gram, median_heuristic, random_prototypes, Bandwidth,
};
use graphtest::simulation::gen_star_dataset;

fn main() -> graphtest::Result<()> {
    let data = gen_star_dataset(4, 0.5, 6, 6, 5)?;

    let dce = dce_embed(&data)?;
    println!("DCE: {} vectors of dimension {}", dce.vectors.len(), dce.dim());
    println!("first vector {:.3?}", dce.vectors[0]);

    let sigma = median_heuristic(&dce.vectors)?;
    println!("median heuristic sigma = {sigma:.4}");
    let k = gaussian_gram(&dce.vectors, sigma)?;
    println!("K[0][1] = {:.4}, K[0][11] = {:.4}", k.get(0, 1), k.get(0, 11));

    let all: Vec<usize> = (0..data.len()).collect();
    let dre = dre_embed(&data, &all)?;
    println!("DRE on all graphs: dimension {}", dre.dim());

    let protos = random_prototypes(data.len(), 4, 9)?;
    let dre4 = dre_embed(&data, &protos)?;
    println!("DRE on prototypes {protos:?}: first vector {:.3?}", dre4.vectors[0]);

    let k = embedded_gram(&dre4, Bandwidth::Fixed(1.0))?;
    println!("provenance {}", serde_json::to_string(&k.provenance).unwrap());
    Ok(())
}
