use std::collections::{BTreeMap, HashMap, VecDeque};

use graphtest::cbt::{nested_cv_accuracy, stratified_kfold, CbtConfig};
use graphtest::embedding::{dce_vector, dre_embed, gaussian_gram, graph_from_dce, median_heuristic};
use graphtest::graph::{load_dataset, save_dataset, split_by_label, Edge};
use graphtest::graph_kernels::{sp_kernel_matrix, wl_kernel_matrix, DiscreteGraph};
use graphtest::kernel::{KernelMatrix, Provenance};
use graphtest::ktst::{mmd2u, mmd2u_split};
use graphtest::svm::{kkt_gap, svm_train};
use graphtest::{Graph, Group, LabeledGraphDataset};
use proptest::prelude::*;

fn group(b: bool) -> Group {
    if b {
        Group::B
    } else {
        Group::A
    }
}

/// Label vector with at least `min_each` members in each class.
fn labels(max: usize, min_each: usize) -> impl Strategy<Value = Vec<Group>> {
    prop::collection::vec(any::<bool>(), 2 * min_each..=max)
        .prop_map(|v| v.into_iter().map(group).collect::<Vec<_>>())
        .prop_filter("both classes", move |l| {
            let a = l.iter().filter(|&&g| g == Group::A).count();
            a >= min_each && l.len() - a >= min_each
        })
}

fn points(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), n)
}

fn gaussian(pts: &[Vec<f64>], sigma: f64) -> KernelMatrix {
    gaussian_gram(pts, sigma).unwrap()
}

fn discrete_graph(max_nodes: usize, alphabet: usize) -> impl Strategy<Value = DiscreteGraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        let labels = prop::collection::vec(0..alphabet, n);
        let edges = prop::collection::vec(any::<bool>(), n * (n - 1) / 2);
        (labels, edges).prop_map(move |(labels, mask)| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .zip(mask)
                .filter_map(|(p, keep)| keep.then_some(p))
                .collect();
            DiscreteGraph::new(labels.iter().map(|l| format!("L{l}")).collect(), &pairs)
        })
    })
}

fn graph_with_permutation(max_nodes: usize) -> impl Strategy<Value = (DiscreteGraph, Vec<usize>)> {
    discrete_graph(max_nodes, 3).prop_flat_map(|g| {
        let perm = Just((0..g.node_count()).collect::<Vec<_>>()).prop_shuffle();
        (Just(g), perm)
    })
}

fn weighted_graph(nodes: usize) -> impl Strategy<Value = Graph> {
    prop::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], nodes * (nodes - 1) / 2).prop_map(move |w| {
        let mut edges = Vec::new();
        let mut t = 0;
        for u in 0..nodes {
            for v in (u + 1)..nodes {
                if w[t] != 0.0 {
                    edges.push(Edge::new(u, v, w[t]));
                }
                t += 1;
            }
        }
        Graph::new(nodes, None, edges).unwrap()
    })
}

fn bfs_distances(g: &DiscreteGraph, s: usize) -> Vec<Option<u32>> {
    let mut d = vec![None; g.node_count()];
    d[s] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &g.neighbors[u] {
            if d[v].is_none() {
                d[v] = Some(d[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    d
}

fn sp_oracle_features(g: &DiscreteGraph) -> HashMap<(String, String, u32), f64> {
    let mut f = HashMap::new();
    for u in 0..g.node_count() {
        let d = bfs_distances(g, u);
        for v in (u + 1)..g.node_count() {
            if let Some(len) = d[v] {
                let (a, b) = (&g.node_labels[u], &g.node_labels[v]);
                let key = (a.min(b).clone(), a.max(b).clone(), len);
                *f.entry(key).or_insert(0.0) += 1.0;
            }
        }
    }
    f
}

fn dot<K: std::hash::Hash + Eq>(a: &HashMap<K, f64>, b: &HashMap<K, f64>) -> f64 {
    a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or(0.0)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_disjoint_cover(l in labels(30, 0)) {
        let (a, b) = split_by_label(&l);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..l.len()).collect::<Vec<_>>());
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.iter().all(|&i| l[i] == Group::A));
    }

    #[test]
    fn folds_partition_and_stratify(l in labels(40, 5), k in 2usize..=5, seed in any::<u64>()) {
        let folds = stratified_kfold(&l, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..l.len()).collect::<Vec<_>>());
        for g in [Group::A, Group::B] {
            let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| l[i] == g).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
        prop_assert_eq!(folds, stratified_kfold(&l, k, seed).unwrap());
    }

    #[test]
    fn mmd_block_permutation_and_swap(
        (pts, m) in (4usize..12).prop_flat_map(|n| (points(n, 2), 2..=n - 2)),
        seed in any::<u64>(),
    ) {
        let k = gaussian(&pts, 1.0);
        let n = pts.len() - m;
        let a: Vec<usize> = (0..m).collect();
        let b: Vec<usize> = (m..pts.len()).collect();
        let base = mmd2u(&k, m, n).unwrap();

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let (mut pa, mut pb) = (a.clone(), b.clone());
        rand::seq::SliceRandom::shuffle(&mut pa[..], &mut rng);
        rand::seq::SliceRandom::shuffle(&mut pb[..], &mut rng);
        let permuted = mmd2u_split(&k, &pa, &pb).unwrap();
        prop_assert!((permuted - base).abs() <= 1e-12 * base.abs().max(1.0));

        let swapped = mmd2u_split(&k, &b, &a).unwrap();
        prop_assert!((swapped - base).abs() <= 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn median_heuristic_ignores_order(pts in points(7, 3), seed in any::<u64>()) {
        let mut shuffled = pts.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        prop_assert_eq!(median_heuristic(&pts).unwrap(), median_heuristic(&shuffled).unwrap());
    }

    #[test]
    fn gaussian_gram_is_psd(pts in points(10, 3), sigma in 0.1f64..5.0) {
        prop_assert!(gaussian(&pts, sigma).check().is_ok());
    }

    #[test]
    fn dce_round_trip(g in weighted_graph(6)) {
        let back = graph_from_dce(6, &dce_vector(&g));
        prop_assert_eq!(back.adjacency(), g.adjacency());
    }

    #[test]
    fn dre_is_permutation_equivariant(
        graphs in prop::collection::vec(weighted_graph(4), 6),
        seed in any::<u64>(),
    ) {
        let labels = vec![Group::A, Group::A, Group::A, Group::B, Group::B, Group::B];
        let mut perm: Vec<usize> = (0..6).collect();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);

        let all: Vec<usize> = (0..6).collect();
        let base = dre_embed(&LabeledGraphDataset::new(graphs.clone(), labels.clone(), true).unwrap(), &all).unwrap();
        let permuted_graphs = perm.iter().map(|&i| graphs[i].clone()).collect();
        let permuted_labels = perm.iter().map(|&i| labels[i]).collect();
        let permuted = dre_embed(&LabeledGraphDataset::new(permuted_graphs, permuted_labels, true).unwrap(), &all).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                prop_assert_eq!(permuted.vectors[r][c], base.vectors[perm[r]][perm[c]]);
            }
        }
    }

    #[test]
    fn wl_and_sp_are_isomorphism_invariant((g, perm) in graph_with_permutation(8)) {
        let pair = vec![g.clone(), g.permute_nodes(&perm)];
        for k in [wl_kernel_matrix(&pair, 3), sp_kernel_matrix(&pair)] {
            prop_assert_eq!(k.get(0, 1), k.get(0, 0));
            prop_assert_eq!(k.get(1, 1), k.get(0, 0));
        }
    }

    #[test]
    fn wl_h0_is_label_count_product(gs in prop::collection::vec(discrete_graph(6, 3), 2..5)) {
        let k = wl_kernel_matrix(&gs, 0);
        let counts: Vec<BTreeMap<&str, f64>> = gs
            .iter()
            .map(|g| {
                let mut c = BTreeMap::new();
                for l in &g.node_labels {
                    *c.entry(l.as_str()).or_insert(0.0) += 1.0;
                }
                c
            })
            .collect();
        for i in 0..gs.len() {
            for j in 0..gs.len() {
                let want: f64 = counts[i].iter().map(|(l, x)| x * counts[j].get(l).copied().unwrap_or(0.0)).sum();
                prop_assert_eq!(k.get(i, j), want);
            }
        }
        prop_assert!(k.check().is_ok());
    }

    #[test]
    fn sp_matches_bfs_oracle(gs in prop::collection::vec(discrete_graph(8, 3), 2..5)) {
        let k = sp_kernel_matrix(&gs);
        let feats: Vec<_> = gs.iter().map(sp_oracle_features).collect();
        for i in 0..gs.len() {
            for j in 0..gs.len() {
                prop_assert_eq!(k.get(i, j), dot(&feats[i], &feats[j]));
            }
        }
        prop_assert!(k.check().is_ok());
    }

    #[test]
    fn wl_isolated_fresh_label_adds_only_its_matches(g1 in discrete_graph(5, 2), g2 in discrete_graph(5, 2)) {
        let add = |g: &DiscreteGraph| {
            let mut labels = g.node_labels.clone();
            labels.push("fresh".into());
            let edges: Vec<(usize, usize)> = g
                .neighbors
                .iter()
                .enumerate()
                .flat_map(|(u, l)| l.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
                .collect();
            DiscreteGraph::new(labels, &edges)
        };
        let h = 2;
        let before = wl_kernel_matrix(&[g1.clone(), g2.clone()], h);
        let both = wl_kernel_matrix(&[add(&g1), add(&g2)], h);
        let one = wl_kernel_matrix(&[add(&g1), g2.clone()], h);
        // an isolated node keeps its own (unique) signature at every iteration
        prop_assert_eq!(both.get(0, 1), before.get(0, 1) + (h + 1) as f64);
        prop_assert_eq!(one.get(0, 1), before.get(0, 1));
    }

    #[test]
    fn svm_dual_feasibility(
        (pts, l) in labels(16, 3).prop_flat_map(|l| (points(l.len(), 2), Just(l))),
        c_exp in -3i32..=3,
    ) {
        let c = 10f64.powi(c_exp);
        let k = gaussian(&pts, 1.0);
        let y: Vec<f64> = l.iter().map(|g| g.sign()).collect();
        let model = svm_train(k.as_slice(), &y, c).unwrap();
        let mut sum = 0.0;
        for a in model.alphas() {
            prop_assert!((0.0..=c).contains(&a));
        }
        for &v in &model.dual_coef {
            sum += v;
        }
        prop_assert!(sum.abs() <= 1e-6);
        prop_assert!(kkt_gap(k.as_slice(), &y, &model) <= 1e-3 + 1e-9);
    }

    #[test]
    fn load_save_round_trip(graphs in prop::collection::vec(weighted_graph(5), 4)) {
        let labels = vec![Group::A, Group::B, Group::A, Group::B];
        let data = LabeledGraphDataset::new(graphs, labels, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let back = load_dataset(save_dataset(&data, dir.path()).unwrap()).unwrap();
        prop_assert_eq!(back.labels(), data.labels());
        for (g, h) in data.graphs().iter().zip(back.graphs()) {
            prop_assert_eq!(g.edges.len(), h.edges.len());
            for (e, f) in g.edges.iter().zip(&h.edges) {
                prop_assert_eq!((e.u, e.v), (f.u, f.v));
                prop_assert!((e.weight - f.weight).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn acc_cv_is_equivariant_under_label_permutation(
        pts in points(20, 2),
        shuffle_seed in any::<u64>(),
        rep_seed in any::<u64>(),
    ) {
        let labels: Vec<Group> = (0..20).map(|i| group(i >= 10)).collect();
        let k = gaussian(&pts, 1.5);
        let cfg = CbtConfig { c_grid: vec![0.1, 1.0, 10.0], ..Default::default() };
        let base = nested_cv_accuracy(&k, &labels, &cfg, rep_seed).unwrap();

        // interleave the two classes at random positions, keeping order within each class
        let mut slots = labels.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(shuffle_seed);
        rand::seq::SliceRandom::shuffle(&mut slots[..], &mut rng);
        let (mut next_a, mut next_b) = (0, 10);
        let order: Vec<usize> = slots
            .iter()
            .map(|g| {
                let slot = if *g == Group::A { &mut next_a } else { &mut next_b };
                *slot += 1;
                *slot - 1
            })
            .collect();
        let permuted = nested_cv_accuracy(&k.select(&order), &slots, &cfg, rep_seed).unwrap();
        prop_assert_eq!(permuted, base);
    }
}

#[test]
fn unknown_provenance_kernel_checks_psd() {
    let k = KernelMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], Provenance::new("test")).unwrap();
    assert!(k.check().is_err());
}
