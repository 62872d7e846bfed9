use super::{ClassifyError, FeatureVector, Ranking, TrainingSet, FEATURE_COUNT};

/// Per-feature mean and standard deviation over the training rows.
/// Constant features get a unit scale.
pub(crate) fn zscore_stats(ts: &TrainingSet) -> ([f64; FEATURE_COUNT], [f64; FEATURE_COUNT]) {
    let n = ts.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    let mut scale = [0.0; FEATURE_COUNT];
    for row in ts.rows() {
        for (m, v) in mean.iter_mut().zip(row.values()) {
            *m += v / n;
        }
    }
    for row in ts.rows() {
        for f in 0..FEATURE_COUNT {
            let d = row.values()[f] - mean[f];
            scale[f] += d * d / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

/// Gaussian-weighted k-nearest-neighbour vote.
///
/// Features are z-scored with the training statistics. The k nearest rows
/// (ties at equal distance resolved by row order) vote with weight
/// `exp(−d²/2σ²)`, σ being the distance of the k-th neighbour.
pub fn knn_classify(query: &FeatureVector, ts: &TrainingSet, k: usize) -> Result<Ranking, ClassifyError> {
    if ts.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if k == 0 {
        return Err(ClassifyError::InvalidK);
    }
    let (mean, scale) = zscore_stats(ts);
    let normalize =
        |v: &[f64; FEATURE_COUNT]| -> [f64; FEATURE_COUNT] { std::array::from_fn(|f| (v[f] - mean[f]) / scale[f]) };
    let q = normalize(query.values());
    let mut neighbours: Vec<(f64, usize)> = ts
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let r = normalize(row.values());
            let d2: f64 = q.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), i)
        })
        .collect();
    neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    neighbours.truncate(k.min(ts.len()));

    let kth = neighbours[neighbours.len() - 1].0;
    let sigma = if kth > 0.0 { kth } else { 1e-9 };
    let mut votes = vec![0.0; ts.classes().len()];
    for &(d, i) in &neighbours {
        votes[ts.class_index(ts.label_of(i))] += (-(d * d) / (2.0 * sigma * sigma)).exp();
    }
    let total: f64 = votes.iter().sum();
    let scores = ts.classes().iter().cloned().zip(votes.into_iter().map(|w| w / total)).collect();
    Ok(Ranking::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(values: [f64; FEATURE_COUNT], label: &str) -> FeatureVector {
        FeatureVector::labeled(values, label)
    }

    fn random_set(rng: &mut ChaCha8Rng, rows: usize, classes: usize) -> TrainingSet {
        let rows = (0..rows)
            .map(|i| {
                let label = format!("c{}", i % classes);
                row(std::array::from_fn(|_| rng.random_range(-3.0..3.0)), &label)
            })
            .collect();
        TrainingSet::new(rows).unwrap()
    }

    #[test]
    fn single_row() {
        let ts = TrainingSet::new(vec![row([0.3; FEATURE_COUNT], "Head")]).unwrap();
        let r = knn_classify(&row([0.3; FEATURE_COUNT], "?"), &ts, 50).unwrap();
        assert_eq!(r.entries(), [("Head".to_string(), 1.0)]);
    }

    #[test]
    fn errors() {
        let q = row([0.0; FEATURE_COUNT], "?");
        assert_eq!(knn_classify(&q, &TrainingSet::default(), 3), Err(ClassifyError::EmptyTrainingSet));
        let ts = TrainingSet::new(vec![row([0.0; FEATURE_COUNT], "a")]).unwrap();
        assert_eq!(knn_classify(&q, &ts, 0), Err(ClassifyError::InvalidK));
    }

    #[test]
    fn k1_matches_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let ts = random_set(&mut rng, 20, 4);
            let q = row(std::array::from_fn(|_| rng.random_range(-3.0..3.0)), "?");
            let (mean, scale) = zscore_stats(&ts);
            let nearest = ts
                .rows()
                .iter()
                .min_by(|a, b| {
                    let d = |r: &FeatureVector| -> f64 {
                        (0..FEATURE_COUNT).map(|f| ((q.values()[f] - r.values()[f]) / scale[f]).powi(2)).sum()
                    };
                    d(a).total_cmp(&d(b))
                })
                .unwrap();
            let _ = mean;
            let r = knn_classify(&q, &ts, 1).unwrap();
            assert_eq!(r.top_label(), nearest.label.as_deref());
            assert_eq!(r.top_confidence(), 1.0);
        }
    }

    #[test]
    fn constant_feature_gets_unit_scale() {
        let ts = TrainingSet::new(vec![row([1.0; FEATURE_COUNT], "a"), row([1.0; FEATURE_COUNT], "b")]).unwrap();
        let (mean, scale) = zscore_stats(&ts);
        assert_eq!(mean, [1.0; FEATURE_COUNT]);
        assert_eq!(scale, [1.0; FEATURE_COUNT]);
        // exact tie at distance zero: both rows weigh the same
        let r = knn_classify(&row([1.0; FEATURE_COUNT], "?"), &ts, 2).unwrap();
        assert_eq!(r.entries(), [("a".to_string(), 0.5), ("b".to_string(), 0.5)]);
    }

    proptest! {
        #[test]
        fn ranking_invariants(seed in any::<u64>(), n in 1usize..30, classes in 1usize..6, k in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ts = random_set(&mut rng, n, classes.min(n));
            let q = row(std::array::from_fn(|_| rng.random_range(-3.0..3.0)), "?");
            let r = knn_classify(&q, &ts, k).unwrap();
            prop_assert_eq!(r.len(), ts.classes().len().min(3));
            let confs: Vec<f64> = r.entries().iter().map(|e| e.1).collect();
            prop_assert!(confs.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(confs.iter().all(|c| (0.0..=1.0).contains(c)));
            let sum: f64 = confs.iter().sum();
            prop_assert!(sum <= 1.0 + 1e-12);
            if ts.classes().len() <= 3 {
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn permutation_invariant(seed in any::<u64>(), k in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ts = random_set(&mut rng, 15, 3);
            let q = row(std::array::from_fn(|_| rng.random_range(-3.0..3.0)), "?");
            let mut rows = ts.rows().to_vec();
            rows.reverse();
            let shuffled = TrainingSet::with_classes(rows, ts.classes().to_vec()).unwrap();
            let a = knn_classify(&q, &ts, k).unwrap();
            let b = knn_classify(&q, &shuffled, k).unwrap();
            prop_assert_eq!(a.labels().collect::<Vec<_>>(), b.labels().collect::<Vec<_>>());
            for (x, y) in a.entries().iter().zip(b.entries()) {
                prop_assert!((x.1 - y.1).abs() < 1e-9);
            }
        }

        #[test]
        fn affine_column_rescale_keeps_top_label(seed in any::<u64>(), col in 0usize..FEATURE_COUNT,
                                                 a in 0.1f64..50.0, b in -100.0f64..100.0, k in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ts = random_set(&mut rng, 20, 3);
            let q = row(std::array::from_fn(|_| rng.random_range(-3.0..3.0)), "?");
            let rescale = |r: &FeatureVector| {
                let mut v = *r.values();
                v[col] = a * v[col] + b;
                FeatureVector::new(v, r.label.clone())
            };
            let ts2 = TrainingSet::with_classes(ts.rows().iter().map(rescale).collect(), ts.classes().to_vec()).unwrap();
            let r1 = knn_classify(&q, &ts, k).unwrap();
            let r2 = knn_classify(&rescale(&q), &ts2, k).unwrap();
            prop_assert_eq!(r1.top_label(), r2.top_label());
        }
    }
}
