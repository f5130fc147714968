//! Property tests for the structural invariants.

use proptest::prelude::*;

use tidgan_core::data::{split, Normalizer, NormalizerMode, SampleTable, SplitSpec};
use tidgan_core::diagnostics::{ecdf, ks_statistic};
use tidgan_core::tensor::{ComputationRecord, Tensor};

fn finite_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len)
}

proptest! {
    #[test]
    fn softmax_rows_are_simplex_points(values in finite_vec(1..=24), cols in 1..=6usize) {
        let cols = cols.min(values.len());
        let rows = values.len() / cols;
        prop_assume!(rows >= 1);
        let data: Vec<f64> = values[..rows * cols].to_vec();
        let x = Tensor::new(vec![rows, cols], data).unwrap();
        let mut rec = ComputationRecord::new();
        let y = rec.softmax_rows(&x).unwrap().values();
        for r in 0..rows {
            let row = &y[r * cols..(r + 1) * cols];
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn concat_then_slice_is_identity(
        a in finite_vec(2..=12),
        b in finite_vec(2..=12),
        rows in 1..=3usize,
    ) {
        let wa = a.len() / rows;
        let wb = b.len() / rows;
        prop_assume!(wa >= 1 && wb >= 1);
        let ta = Tensor::new(vec![rows, wa], a[..rows * wa].to_vec()).unwrap();
        let tb = Tensor::new(vec![rows, wb], b[..rows * wb].to_vec()).unwrap();
        let mut rec = ComputationRecord::new();
        let c = rec.concat_cols(&[ta.clone(), tb.clone()]).unwrap();
        let sa = rec.slice_cols(&c, 0, wa).unwrap();
        let sb = rec.slice_cols(&c, wa, wb).unwrap();
        prop_assert_eq!(sa.values(), ta.values());
        prop_assert_eq!(sb.values(), tb.values());
    }

    #[test]
    fn ecdf_is_monotone_and_ends_at_one(values in finite_vec(1..=40)) {
        let points = ecdf(&values).unwrap();
        prop_assert_eq!(points.last().unwrap().1, 1.0);
        for w in points.windows(2) {
            prop_assert!(w[1].0 > w[0].0);
            prop_assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn ks_is_symmetric_and_in_unit_interval(a in finite_vec(1..=30), b in finite_vec(1..=30)) {
        let ab = ks_statistic(&a, &b).unwrap();
        let ba = ks_statistic(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn normalizer_inverts_exactly_enough(rows in prop::collection::vec(finite_vec(3..=3), 2..20)) {
        for mode in [NormalizerMode::MinMaxSymmetric, NormalizerMode::ZScore] {
            let norm = Normalizer::fit(&rows, mode).unwrap();
            for row in &rows {
                let back = norm.invert_row(&norm.apply_row(row));
                for (x, y) in row.iter().zip(&back) {
                    // tolerance scales with magnitude; inputs reach 1e3
                    prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
                }
            }
        }
    }

    #[test]
    fn split_partitions_rows_exactly(
        n_inc in 2..40usize,
        n_non in 2..60usize,
        seed in 0..1000u64,
    ) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..(n_inc + n_non) {
            features.push(vec![i as f64]);
            labels.push((i < n_inc) as u8);
        }
        let n = features.len();
        let table = SampleTable::new(vec!["x".into()], features, labels, vec![0; n]).unwrap();
        let spec = SplitSpec { train_fraction: 0.6, stratified: true, seed };
        let (train, test) = split(&table, &spec).unwrap();

        // multiset partition
        let mut ids: Vec<i64> = train.features.iter().chain(&test.features).map(|r| r[0] as i64).collect();
        ids.sort_unstable();
        let expected: Vec<i64> = (0..n as i64).collect();
        prop_assert_eq!(ids, expected);

        // stratification: per-class train counts follow the ceil rule
        prop_assert_eq!(train.n_incident(), (0.6 * n_inc as f64).ceil() as usize);
        prop_assert_eq!(train.n_non_incident(), (0.6 * n_non as f64).ceil() as usize);
    }
}
