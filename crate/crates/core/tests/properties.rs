//! Property tests for the invariants each component promises.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use foxforest::boost::{fit_gbt, softmax_gradients, GbtConfig};
use foxforest::data::{read_csv, split_indices, write_csv_to, Dataset, SplitSpec};
use foxforest::explain::{expected_value_subset, shapley_values, ShapConfig};
use foxforest::forest::{fit_forest, ForestConfig, ForestModel};
use foxforest::foxopt::{fox_optimize, random_search, Bounds, FoxConfig, Objective};
use foxforest::preprocess::{
    apply_normalizer, default_importance_forest, fit_normalizer, rank_features_gini, select_top_k, NormalizerKind,
};
use foxforest::report::{confusion_matrix, metrics};
use foxforest::tree::Node;
use foxforest::tune::{stratified_folds, ParamKind, ParamSpec};
use proptest::prelude::*;
use rand::Rng;

fn dataset(seed: u64, rows: usize, features: usize, classes: usize) -> Dataset {
    common::random_dataset(&mut common::rng(seed), rows, features, classes)
}

/// Rows drawn from the continuous range only, so no duplicates.
fn continuous(seed: u64, n: usize, m: usize, k: usize) -> Dataset {
    let mut r = common::rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
    let mut labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    labels[0] = 0;
    labels[1] = 1;
    Dataset::new(common::names("f", m), common::names("c", k), rows, labels).unwrap()
}

fn leaf_sums_ok(node: &Node<Vec<f64>>) -> bool {
    match node {
        Node::Leaf { value, cover } => *cover >= 1 && (value.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
        Node::Split { left, right, cover, .. } => {
            *cover == left.cover() + right.cover() && leaf_sums_ok(left) && leaf_sums_ok(right)
        }
    }
}

/// Class counts at every node, rebuilt from leaf distributions and covers,
/// accumulated into per-feature sample-weighted Gini decreases.
fn tree_importance(node: &Node<Vec<f64>>, root: f64, acc: &mut [f64]) -> Vec<f64> {
    let gini = |c: &[f64]| {
        let n: f64 = c.iter().sum();
        1.0 - c.iter().map(|v| (v / n) * (v / n)).sum::<f64>()
    };
    match node {
        Node::Leaf { value, cover } => value.iter().map(|p| (p * *cover as f64).round()).collect(),
        Node::Split { feature, left, right, .. } => {
            let l = tree_importance(left, root, acc);
            let r = tree_importance(right, root, acc);
            let c: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
            let (nl, nr) = (l.iter().sum::<f64>(), r.iter().sum::<f64>());
            let n = nl + nr;
            acc[*feature] += n / root * (gini(&c) - nl / n * gini(&l) - nr / n * gini(&r));
            c
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_rows(seed in any::<u64>(), frac in 0.05f64..0.95, stratified in any::<bool>()) {
        let ds = dataset(seed, 40, 2, 4);
        let spec = SplitSpec::new(frac, seed ^ 1, stratified).unwrap();
        let (train, test) = split_indices(&ds, &spec).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.n_rows()).collect::<Vec<_>>());
        prop_assert_eq!(split_indices(&ds, &spec).unwrap(), (train, test));
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>()) {
        let ds = dataset(seed, 30, 4, 3);
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf, "label").unwrap();
        let back = read_csv(buf.as_slice(), "label").unwrap();
        prop_assert_eq!(back.rows(), ds.rows());
        let names = |d: &Dataset| d.labels().iter().map(|&k| d.class_names()[k].clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&back), names(&ds));
    }

    #[test]
    fn zscore_standardizes_training_columns(seed in any::<u64>()) {
        let ds = continuous(seed, 25, 3, 2);
        let out = apply_normalizer(&ds, &fit_normalizer(&ds, NormalizerKind::Zscore).unwrap()).unwrap();
        for col in out.columns() {
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-9 && (std - 1.0).abs() <= 1e-9, "mean {mean}, std {std}");
        }
    }

    #[test]
    fn minmax_hits_unit_interval(seed in any::<u64>()) {
        let ds = continuous(seed, 25, 3, 2);
        let out = apply_normalizer(&ds, &fit_normalizer(&ds, NormalizerKind::Minmax).unwrap()).unwrap();
        for col in out.columns() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!((lo, hi), (0.0, 1.0));
        }
    }

    #[test]
    fn gini_ranking_matches_tree_bookkeeping(seed in any::<u64>()) {
        let ds = dataset(seed, 30, 4, 3);
        let cfg = ForestConfig { n_trees: 8, ..default_importance_forest(seed) };
        let ranking = rank_features_gini(&ds, &cfg).unwrap();
        let forest = fit_forest(&ds, &cfg).unwrap();
        let mut expected = vec![0.0; ds.n_features()];
        for tree in &forest.trees {
            tree_importance(tree, ds.n_rows() as f64, &mut expected);
        }
        for (s, e) in ranking.scores.iter().zip(&expected) {
            prop_assert!(*s >= 0.0);
            prop_assert!((s - e / cfg.n_trees as f64).abs() <= 1e-9, "score {s} vs {}", e / cfg.n_trees as f64);
        }
        prop_assert!(ranking.order.windows(2).all(|w| ranking.scores[w[0]] >= ranking.scores[w[1]]));
        let k = ds.n_features().div_ceil(2);
        let once = select_top_k(&ds, &ranking, k).unwrap();
        let twice = select_top_k(&once, &ranking.restrict(k), k).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn forest_trees_are_consistent(seed in any::<u64>()) {
        let ds = dataset(seed, 30, 4, 3);
        let model = fit_forest(&ds, &ForestConfig { n_trees: 10, seed, ..Default::default() }).unwrap();
        for tree in &model.trees {
            prop_assert!(leaf_sums_ok(tree));
            prop_assert!(tree.max_feature().is_none_or(|f| f < ds.n_features()));
        }
        for row in ds.rows() {
            let p = model.predict_proba(row).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn unbootstrapped_full_depth_forest_fits_training_data(seed in any::<u64>()) {
        let ds = continuous(seed, 30, 3, 3);
        let cfg = ForestConfig { n_trees: 3, bootstrap: false, seed, ..Default::default() };
        let model = fit_forest(&ds, &cfg).unwrap();
        prop_assert_eq!(model.predict(ds.rows()).unwrap(), ds.labels().to_vec());
    }

    #[test]
    fn gbt_logits_are_additive(seed in any::<u64>()) {
        let ds = dataset(seed, 30, 4, 3);
        let model = fit_gbt(&ds, &GbtConfig { n_rounds: 6, subsample: 0.8, colsample: 0.7, seed, ..Default::default() }).unwrap();
        prop_assert_eq!(model.trees.len(), 6);
        prop_assert!(model.trees.iter().all(|round| round.len() == ds.n_classes()));
        for row in ds.rows() {
            let mut z = model.base_score.clone();
            for round in &model.trees {
                for (zk, tree) in z.iter_mut().zip(round) {
                    *zk += tree.leaf(row);
                }
            }
            let logits = model.predict_logits(row).unwrap();
            prop_assert!(logits.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-12 && a.is_finite()));
            let p = model.predict_proba(row).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn softmax_gradient_bounds(z in prop::collection::vec(-20.0f64..20.0, 2..8), pick in any::<prop::sample::Index>()) {
        let y = pick.index(z.len());
        let (g, h) = softmax_gradients(&z, y).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-12);
        prop_assert!(h.iter().all(|&v| (0.0..=0.25).contains(&v)));
    }

    #[test]
    fn fox_history_bounds_and_accounting(seed in any::<u64>(), dim in 1usize..6, pop in 2usize..12, iters in 1usize..20) {
        struct Counted(AtomicUsize);
        impl Objective for Counted {
            fn evaluate(&self, x: &[f64]) -> f64 {
                self.0.fetch_add(1, Ordering::Relaxed);
                x.iter().map(|v| (v - 0.3).abs()).sum()
            }
        }
        let f = Counted(AtomicUsize::new(0));
        let bounds = Bounds::uniform(dim, -2.0, 3.0).unwrap();
        let cfg = FoxConfig { pop_size: pop, max_iters: iters, seed, ..Default::default() };
        let res = fox_optimize(&f, &bounds, &cfg).unwrap();
        prop_assert_eq!(res.evaluations, f.0.load(Ordering::Relaxed));
        prop_assert_eq!(res.history.len(), iters + 1);
        prop_assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*res.history.last().unwrap(), res.best_fitness);
        prop_assert!(bounds.contains(&res.best_x));
        prop_assert_eq!(f.evaluate(&res.best_x), res.best_fitness);
        prop_assert_eq!(fox_optimize(&f, &bounds, &cfg).unwrap(), res);

        let rs = random_search(&f, &bounds, pop * (iters + 1), seed).unwrap();
        prop_assert!(rs.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(bounds.contains(&rs.best_x));
    }

    #[test]
    fn param_decode_stays_in_range(lo in 1e-3f64..5.0, width in 1e-3f64..50.0, x in -0.5f64..1.5) {
        for kind in [ParamKind::Integer, ParamKind::Real, ParamKind::LogReal] {
            let spec = match kind {
                ParamKind::Integer => ParamSpec::new("p", kind, lo.round(), (lo + width).round() + 1.0),
                _ => ParamSpec::new("p", kind, lo, lo + width),
            };
            let v = spec.decode(x);
            prop_assert!(v >= spec.lo && v <= spec.hi, "{kind:?} decoded {v}");
            if kind == ParamKind::Integer {
                prop_assert_eq!(v, v.round());
                prop_assert_eq!(spec.decode(spec.encode(v)), v);
            }
        }
    }

    #[test]
    fn folds_partition_eligible_rows(seed in any::<u64>(), k in 2usize..6) {
        let ds = dataset(seed, 30, 1, 4);
        let counts = foxforest::data::class_distribution(&ds);
        let eligible: Vec<usize> = (0..ds.n_rows()).filter(|&i| counts[ds.labels()[i]] >= 2).collect();
        prop_assume!(eligible.len() >= k);
        let folds = stratified_folds(ds.labels(), ds.n_classes(), k, seed).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, eligible);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn metrics_identities(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..80), shift in any::<prop::sample::Index>()) {
        let (y, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = metrics(&y, &p, 5).unwrap();
        let acc = y.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        prop_assert!((m.weighted_recall - acc).abs() <= 1e-12);
        prop_assert_eq!(m.accuracy, m.confusion.trace() as f64 / m.confusion.total() as f64);
        for c in &m.per_class {
            prop_assert!([c.precision, c.recall, c.f1].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let cm = confusion_matrix(&y, &p, 5).unwrap();
        prop_assert_eq!(cm.total(), y.len() as u64);
        for k in 0..5 {
            prop_assert_eq!(cm.support()[k], y.iter().filter(|&&v| v == k).count() as u64);
            prop_assert_eq!(cm.predicted()[k], p.iter().filter(|&&v| v == k).count() as u64);
        }
        // Rotating sample order changes nothing.
        let s = shift.index(y.len());
        let (mut y2, mut p2) = (y.clone(), p.clone());
        y2.rotate_left(s);
        p2.rotate_left(s);
        prop_assert_eq!(metrics(&y2, &p2, 5).unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_shapley_is_efficient_and_ignores_dummies(seed in any::<u64>()) {
        let base = continuous(seed, 30, 5, 3);
        // Append a constant column no tree can split on.
        let rows: Vec<Vec<f64>> = base.rows().iter().map(|r| { let mut r = r.clone(); r.push(7.0); r }).collect();
        let ds = Dataset::new(common::names("f", 6), base.class_names().to_vec(), rows, base.labels().to_vec()).unwrap();
        let forest = fit_forest(&ds, &ForestConfig { n_trees: 8, max_depth: Some(5), seed, ..Default::default() }).unwrap();
        let gbt = fit_gbt(&ds, &GbtConfig { n_rounds: 5, seed, ..Default::default() }).unwrap();
        for row in ds.rows().iter().take(4) {
            for e in [
                shapley_values(&forest, row, &ShapConfig::default()).unwrap(),
                shapley_values(&gbt, row, &ShapConfig::default()).unwrap(),
            ] {
                prop_assert!(e.efficiency_gap() <= 1e-9);
                prop_assert!(e.contributions[5].iter().all(|&c| c == 0.0));
            }
            let mut known = vec![true; 6];
            prop_assert_eq!(expected_value_subset(&forest, row, &known).unwrap(), forest.predict_proba(row).unwrap());
            known[2] = false;
            let without = expected_value_subset(&forest, row, &known).unwrap();
            known[5] = false;
            prop_assert_eq!(expected_value_subset(&forest, row, &known).unwrap(), without);
        }
    }

    #[test]
    fn sampled_shapley_is_efficient_and_seeded(seed in any::<u64>()) {
        let ds = continuous(seed, 30, 8, 2);
        let forest = fit_forest(&ds, &ForestConfig { n_trees: 6, seed, ..Default::default() }).unwrap();
        let cfg = ShapConfig { max_features_exact: 4, permutations: 30, seed, ..Default::default() };
        let a = shapley_values(&forest, ds.row(0), &cfg).unwrap();
        prop_assert!(a.efficiency_gap() <= 1e-9);
        prop_assert_eq!(shapley_values(&forest, ds.row(0), &cfg).unwrap(), a);
    }

    #[test]
    fn interchangeable_features_are_symmetric(seed in any::<u64>()) {
        // Two trees, the second a copy of the first with features 0 and 1
        // swapped; at a row with x0 = x1 the two players are interchangeable.
        let mut r = common::rng(seed);
        let tree = random_tree(&mut r, 3);
        let model = ForestModel {
            config: ForestConfig::default(),
            n_classes: 2,
            n_features: 3,
            trees: vec![tree.clone(), swap_features(&tree)],
        };
        let x = r.random_range(-1.0..1.0);
        let row = [x, x, r.random_range(-1.0..1.0)];
        for other in [false, true] {
            let v0 = expected_value_subset(&model, &row, &[true, false, other]).unwrap();
            let v1 = expected_value_subset(&model, &row, &[false, true, other]).unwrap();
            prop_assert!(v0.iter().zip(&v1).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
        let e = shapley_values(&model, &row, &ShapConfig::default()).unwrap();
        prop_assert!(e.contributions[0].iter().zip(&e.contributions[1]).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}

fn random_tree(r: &mut rand_chacha::ChaCha8Rng, depth: usize) -> Node<Vec<f64>> {
    if depth == 0 || r.random_bool(0.25) {
        let p = r.random_range(0.0..1.0);
        return Node::Leaf { value: vec![p, 1.0 - p], cover: r.random_range(1..10) };
    }
    let left = random_tree(r, depth - 1);
    let right = random_tree(r, depth - 1);
    Node::Split {
        feature: r.random_range(0..3),
        threshold: r.random_range(-1.0..1.0),
        cover: left.cover() + right.cover(),
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn swap_features(node: &Node<Vec<f64>>) -> Node<Vec<f64>> {
    match node {
        Node::Leaf { .. } => node.clone(),
        Node::Split { feature, threshold, cover, left, right } => Node::Split {
            feature: match feature {
                0 => 1,
                1 => 0,
                f => *f,
            },
            threshold: *threshold,
            cover: *cover,
            left: Box::new(swap_features(left)),
            right: Box::new(swap_features(right)),
        },
    }
}

#[test]
fn fits_do_not_depend_on_thread_count() {
    let ds = dataset(11, 30, 4, 3);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let forest = fit_forest(&ds, &ForestConfig { n_trees: 16, seed: 3, ..Default::default() }).unwrap();
            let gbt = fit_gbt(&ds, &GbtConfig { n_rounds: 8, subsample: 0.7, seed: 3, ..Default::default() }).unwrap();
            let bounds = Bounds::uniform(4, -5.0, 5.0).unwrap();
            let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
            let fox = fox_optimize(&sphere, &bounds, &FoxConfig { pop_size: 9, max_iters: 12, seed: 3, ..Default::default() }).unwrap();
            (forest, gbt, fox)
        })
    };
    assert_eq!(run(1), run(4));
}
