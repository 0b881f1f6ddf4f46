mod common;

use common::*;
use eghwt::partition::*;
use eghwt::{bipartition_by_fiedler, fiedler_vector, EigenConfig, Error, Graph, LaplacianKind, Region, Violation};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::array;
use proptest::prelude::*;

fn cfg() -> EigenConfig {
    EigenConfig::default()
}

#[test]
fn degree_examples() {
    assert_eq!(Graph::path(3).degree_vector(), vec![1.0, 2.0, 1.0]);
    assert_eq!(Graph::path(1).degree_vector(), vec![0.0]);
    let k2 = Graph::from_edges(2, [(0, 1, 2.5)]).unwrap();
    assert_eq!(k2.degree_vector(), vec![2.5, 2.5]);
}

#[test]
fn laplacian_examples() {
    let p2 = Graph::path(2);
    let want = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
    assert_eq!(p2.laplacian(LaplacianKind::Unnormalized).unwrap(), want);
    assert_eq!(p2.laplacian(LaplacianKind::RandomWalk).unwrap(), want);
    let lrw = Graph::path(3).laplacian(LaplacianKind::RandomWalk).unwrap();
    let want = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -0.5, 1.0, -0.5, 0.0, -1.0, 1.0]);
    assert!((lrw - want).abs().max() < 1e-15);
    let isolated = Graph::from_edges(3, [(0, 1, 1.0)]).unwrap();
    assert!(matches!(isolated.laplacian(LaplacianKind::RandomWalk), Err(Error::ZeroDegreeNode { node: 2 })));
}

#[test]
fn malformed_edges_are_rejected() {
    assert!(Graph::from_edges(2, [(0, 0, 1.0)]).is_err());
    assert!(Graph::from_edges(2, [(0, 1, -1.0)]).is_err());
    assert!(Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    assert!(Graph::from_edges(2, [(0, 5, 1.0)]).is_err());
    let g = Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
    assert_eq!(g.num_edges(), 1);
}

#[test]
fn fiedler_examples() {
    let f = fiedler_vector(&Graph::path(3), LaplacianKind::RandomWalk, &cfg()).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in f.vector.iter().zip([s, 0.0, -s]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((f.eigenvalue - 1.0).abs() < 1e-12);
    let f = fiedler_vector(&Graph::path(2), LaplacianKind::RandomWalk, &cfg()).unwrap();
    assert!((f.vector[0] - s).abs() < 1e-12 && (f.vector[1] + s).abs() < 1e-12);
    assert!((f.eigenvalue - 2.0).abs() < 1e-12);
    let f = fiedler_vector(&Graph::path(6), LaplacianKind::RandomWalk, &cfg()).unwrap();
    assert!(f.vector[..3].iter().all(|&v| v > 0.0) && f.vector[3..].iter().all(|&v| v < 0.0));
    let two = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
    assert!(matches!(fiedler_vector(&two, LaplacianKind::Unnormalized, &cfg()), Err(Error::NotConnected { components: 2 })));
}

#[test]
fn bipartition_examples() {
    let all = |n: usize| (0..n).collect::<Vec<_>>();
    assert_eq!(bipartition_by_fiedler(&Graph::path(6), &all(6), &cfg()).unwrap(), (vec![0, 1, 2], vec![3, 4, 5]));
    assert_eq!(bipartition_by_fiedler(&Graph::path(2), &all(2), &cfg()).unwrap(), (vec![0], vec![1]));
    assert_eq!(bipartition_by_fiedler(&Graph::path(3), &all(3), &cfg()).unwrap(), (vec![0, 1], vec![2]));
}

#[test]
fn lanczos_handles_large_graphs() {
    let mut r = rng(77);
    for n in [200usize, 600] {
        let g = random_connected_graph(&mut r, n, 2 * n);
        for kind in [LaplacianKind::RandomWalk, LaplacianKind::Unnormalized] {
            let sparse = fiedler_vector(&g, kind, &cfg()).unwrap();
            let dense = fiedler_vector(&g, kind, &EigenConfig { dense_threshold: usize::MAX, ..cfg() }).unwrap();
            assert!(rel_close(sparse.eigenvalue, dense.eigenvalue, 1e-6), "{} vs {}", sparse.eigenvalue, dense.eigenvalue);
        }
    }
    let p = Graph::path(1000);
    let tree = build_partition_tree_spectral(&p, &cfg()).unwrap();
    assert!(tree.validate(1000).is_valid());
    assert_eq!(tree.region(1, 0).unwrap().nodes, (0..500).collect::<Vec<_>>());
}

#[test]
fn p6_spectral_tree() {
    let tree = build_partition_tree_spectral(&Graph::path(6), &cfg()).unwrap();
    assert_eq!(tree.jmax(), 3);
    let level = |j: usize| tree.level(j).iter().map(|r| (r.k, r.nodes.clone())).collect::<Vec<_>>();
    assert_eq!(level(1), vec![(0, vec![0, 1, 2]), (1, vec![3, 4, 5])]);
    assert_eq!(level(2), vec![(0, vec![0, 1]), (1, vec![2]), (2, vec![3, 4]), (3, vec![5])]);
    assert_eq!(tree.level(3).iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 1, 2, 4, 5, 6]);
    assert!(tree.validate(6).is_valid());
}

#[test]
fn trivial_trees() {
    let t = build_partition_tree_spectral(&Graph::path(1), &cfg()).unwrap();
    assert_eq!(t.jmax(), 0);
    let t = build_partition_tree_spectral(&Graph::path(2), &cfg()).unwrap();
    assert_eq!(t.jmax(), 1);
    assert_eq!(t.level(1).len(), 2);
    assert_eq!(build_partition_tree_midpoint(1).unwrap().jmax(), 0);
}

#[test]
fn relabel_examples() {
    let p6: RawTree = vec![
        vec![(0..6).collect()],
        vec![vec![0, 1, 2], vec![3, 4, 5]],
        vec![vec![0, 1], vec![2], vec![3, 4], vec![5]],
        vec![vec![0], vec![1], vec![2], vec![3], vec![4], vec![5]],
    ];
    let t = relabel_tree(&p6).unwrap();
    assert_eq!(t.level(3).iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 1, 2, 4, 5, 6]);

    let p8 = build_partition_tree_midpoint(8).unwrap();
    for j in 0..=p8.jmax() {
        assert_eq!(p8.level(j).iter().map(|r| r.k).collect::<Vec<_>>(), (0..1usize << j).collect::<Vec<_>>());
    }

    let chain: RawTree = vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]], vec![vec![0], vec![1], vec![2]]];
    let t = relabel_tree(&chain).unwrap();
    assert_eq!(t.level(2).iter().map(|r| r.k).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn validation_negative_cases() {
    let overlap = PartitionTree::from_levels_unchecked(
        3,
        vec![
            vec![Region { k: 0, nodes: vec![0, 1, 2] }],
            vec![Region { k: 0, nodes: vec![0, 1] }, Region { k: 1, nodes: vec![1, 2] }],
        ],
    );
    assert!(overlap.validate(3).violations.contains(&Violation::DisjointnessViolation { j: 1 }));
    let fat_leaf = PartitionTree::from_levels_unchecked(
        3,
        vec![vec![Region { k: 0, nodes: vec![0, 1, 2] }], vec![Region { k: 0, nodes: vec![0, 1] }, Region { k: 1, nodes: vec![2] }]],
    );
    assert!(fat_leaf.validate(3).violations.iter().any(|v| matches!(v, Violation::LeafSizeViolation { .. })));
}

#[test]
fn midpoint_examples() {
    let t = build_partition_tree_midpoint(512).unwrap();
    assert_eq!(t.levels().len(), 10);
    assert!(t.level(9).iter().all(|r| r.nodes.len() == 1));
    let t = build_partition_tree_midpoint(6).unwrap();
    assert_eq!(t.level(1).iter().map(|r| r.nodes.len()).collect::<Vec<_>>(), vec![3, 3]);
    assert_eq!(t.level(2).iter().map(|r| r.nodes.len()).collect::<Vec<_>>(), vec![2, 1, 2, 1]);
}

#[test]
fn ptv_examples() {
    let flat = ndarray::Array2::from_elem((3, 7), 0.4);
    assert_eq!(build_partition_tree_ptv(&flat, Axis::Columns, 3.0).unwrap(), build_partition_tree_midpoint(7).unwrap());
    assert_eq!(build_partition_tree_ptv(&flat, Axis::Rows, 1.0).unwrap(), build_partition_tree_midpoint(3).unwrap());
    let img = array![[0.0, 0.0, 9.0, 9.0], [0.0, 0.0, 9.0, 9.0]];
    let t = build_partition_tree_ptv(&img, Axis::Columns, 3.0).unwrap();
    assert_eq!(t.level(1)[0].nodes, vec![0, 1]);
    // an off-center edge pulls the cut away from the middle
    let img = array![[0.0, 9.0, 9.0, 9.0, 9.0, 9.0]];
    let t = build_partition_tree_ptv(&img, Axis::Columns, 1.0).unwrap();
    assert_eq!(t.level(1)[0].nodes, vec![0]);
}

#[test]
fn json_round_trip_and_disconnected_input() {
    let g = Graph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
    assert!(matches!(build_partition_tree_spectral(&g, &cfg()), Err(Error::NotConnected { components: 2 })));
    let t = build_partition_tree_spectral(&Graph::path(7), &cfg()).unwrap();
    let back = PartitionTree::from_json(&t.to_json().unwrap()).unwrap();
    assert_eq!(back, t);
    assert!(PartitionTree::from_json("{\"jmax\":0}").is_err());
}

fn dense_lrw_spectrum(g: &Graph) -> Vec<f64> {
    let l = g.laplacian(LaplacianKind::Symmetric).unwrap();
    let mut ev: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn dense_lrw_lambda1(g: &Graph) -> f64 {
    dense_lrw_spectrum(g)[1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_trees_are_valid(seed in any::<u64>(), n in 1usize..90, extra in 0usize..60) {
        let g = random_connected_graph(&mut rng(seed), n, extra);
        let t = build_partition_tree_spectral(&g, &cfg()).unwrap();
        prop_assert!(t.validate(n).is_valid(), "{:?}", t.validate(n).violations);
        let again = relabel_tree(&t.to_raw()).unwrap();
        prop_assert_eq!(again, t);
    }

    #[test]
    fn weight_scaling_keeps_the_split(seed in any::<u64>(), n in 2usize..50, c in 0.01f64..100.0) {
        let g = random_connected_graph(&mut rng(seed), n, n / 2);
        // A repeated first nonzero eigenvalue (stars, for one) has no unique Fiedler vector.
        let ev = dense_lrw_spectrum(&g);
        prop_assume!(n == 2 || ev[2] - ev[1] > 1e-6);
        let all: Vec<usize> = (0..n).collect();
        let a = bipartition_by_fiedler(&g, &all, &cfg()).unwrap();
        let b = bipartition_by_fiedler(&g.scaled(c), &all, &cfg()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lanczos_matches_dense(seed in any::<u64>(), n in 3usize..50) {
        let g = random_connected_graph(&mut rng(seed), n, n);
        let lanczos = EigenConfig { dense_threshold: 0, ..cfg() };
        let f = fiedler_vector(&g, LaplacianKind::RandomWalk, &lanczos).unwrap();
        prop_assert!(rel_close(f.eigenvalue, dense_lrw_lambda1(&g), 1e-7));
        let nrm: f64 = f.vector.iter().map(|v| v * v).sum();
        prop_assert!((nrm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn midpoint_and_random_trees_valid(seed in any::<u64>(), n in 1usize..200) {
        prop_assert!(build_partition_tree_midpoint(n).unwrap().validate(n).is_valid());
        prop_assert!(random_path_tree(&mut rng(seed), n).validate(n).is_valid());
    }
}
