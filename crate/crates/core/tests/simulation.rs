use graphtest::rng::{stream, BoxMuller, Purpose};
use graphtest::simulation::{gen_star_dataset, run_error_experiment, SimConfig, TestKind};
use graphtest::Group;

#[test]
fn group_b_edge_means_track_delta() {
    let data = gen_star_dataset(5, 1.0, 2, 100_000, 17).unwrap();
    let mut sums = [0.0; 5];
    let mut count = 0.0;
    for (g, l) in data.graphs().iter().zip(data.labels()) {
        if *l == Group::B {
            for e in &g.edges {
                sums[e.v - 1] += e.weight;
            }
            count += 1.0;
        }
    }
    for s in sums {
        assert!((s / count - 1.0).abs() < 0.02, "mean {}", s / count);
    }
}

#[test]
fn box_muller_stream_is_standard_normal() {
    let mut z = BoxMuller::new(stream(3, Purpose::StarGraphs, 0));
    let xs: Vec<f64> = (0..200_000).map(|_| z.next_normal()).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    let tail = xs.iter().filter(|x| x.abs() > 1.959964).count() as f64 / xs.len() as f64;
    assert!(mean.abs() < 0.01);
    assert!((var - 1.0).abs() < 0.01);
    assert!((tail - 0.05).abs() < 0.003);
}

#[test]
fn shape_and_row_kinds() {
    let cfg = SimConfig { repetitions: 3, permutations: 20, ..SimConfig::default() };
    let r = run_error_experiment(&cfg).unwrap();
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0].split(',').count(), 12);
    assert!(lines[1].starts_with("H0 true,0,"));
    assert!(lines[2..].iter().all(|l| l.starts_with("H0 false,")));
    assert_eq!(r.cells.len(), 5 * 2 * 2);
    assert!(r.cell(0.0, 0.05, TestKind::Ktst).is_some());
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = SimConfig { deltas: vec![0.0, 0.5], repetitions: 4, permutations: 30, ..SimConfig::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run_error_experiment(&cfg).unwrap());
    let b = three.install(|| run_error_experiment(&cfg).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn ktst_power_grows_with_delta() {
    let cfg = SimConfig {
        deltas: vec![0.0, 0.5, 1.0],
        repetitions: 60,
        permutations: 200,
        run_cbt: false,
        ..SimConfig::default()
    };
    let r = run_error_experiment(&cfg).unwrap();
    let reject = |d| r.cell(d, 0.05, TestKind::Ktst).unwrap().rejection_frequency;
    assert!(reject(0.0) < reject(0.5));
    assert!(reject(0.5) <= reject(1.0));
    assert!(reject(1.0) > 0.95);
}
