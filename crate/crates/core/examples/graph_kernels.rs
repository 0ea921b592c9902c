//! Weisfeiler-Lehman and shortest-path kernels on small labelled graphs,
//! and on weighted graphs after thresholding.

use graphtest::graph::{Edge, Graph};
use graphtest::graph_kernels::{graph_kernel_matrix, GraphKernel, KernelConfig};
use graphtest::simulation::star_graph;

fn labelled(labels: &[&str], edges: &[(usize, usize)]) -> Graph {
    let edges = edges.iter().map(|&(u, v)| Edge::new(u, v, 1.0)).collect();
    Graph::new(labels.len(), Some(labels.iter().map(|s| s.to_string()).collect()), edges).unwrap()
}

fn print(name: &str, k: &graphtest::KernelMatrix) {
    println!("{name}");
    for row in k.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:8.3}")).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> graphtest::Result<()> {
    let graphs = vec![
        labelled(&["C", "C", "O"], &[(0, 1), (1, 2)]),
        labelled(&["C", "O", "C"], &[(0, 1), (1, 2)]),
        labelled(&["C", "C", "C", "O"], &[(0, 1), (0, 2), (0, 3)]),
        labelled(&["C", "C", "C"], &[(0, 1), (1, 2), (0, 2)]),
    ];

    let cfg = KernelConfig::default();
    print("WL subtree, h = 3", &graph_kernel_matrix(&graphs, GraphKernel::WeisfeilerLehman, &cfg)?);
    print("shortest path", &graph_kernel_matrix(&graphs, GraphKernel::ShortestPath, &cfg)?);
    let normalized = KernelConfig { normalize: true, ..cfg };
    print("WL, cosine-normalized", &graph_kernel_matrix(&graphs, GraphKernel::WeisfeilerLehman, &normalized)?);

    // weighted graphs need an explicit edge threshold
    let weighted = vec![star_graph(&[0.9, -0.2, 1.4]), star_graph(&[0.1, 0.3, -1.1])];
    assert!(graph_kernel_matrix(&weighted, GraphKernel::ShortestPath, &cfg).is_err());
    let thresholded = KernelConfig { edge_threshold: Some(0.5), ..cfg };
    print("SP, |w| >= 0.5", &graph_kernel_matrix(&weighted, GraphKernel::ShortestPath, &thresholded)?);
    Ok(())
}
