use fracflow_core::analysis::{bootstrap_r2_ci, BootstrapConfig};
use fracflow_core::impute::{fill_column_means, fill_group_means, nnmf_impute, tsvd_impute, CompletedTable, NnmfParams};
use fracflow_core::regress::{Dataset, ModelSpec, TrainerSpec};
use fracflow_core::structure::{dbscan, isolation_forest_scores, NOISE};
use fracflow_core::{seed, Column, ColumnGroup, ColumnMeta, FieldTable, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn build(cols: &[Vec<Option<f64>>]) -> FieldTable {
    FieldTable::with_row_numbers(
        cols.iter()
            .enumerate()
            .map(|(j, c)| Column::from_numeric(ColumnMeta::numeric(format!("c{j}"), ColumnGroup::Formation), c.clone()))
            .collect(),
    )
    .unwrap()
}

/// Columns with at least one observed cell; `lo` bounds the values.
fn columns(lo: f64) -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    (2usize..20, 1usize..6).prop_flat_map(move |(n, m)| {
        prop::collection::vec((lo..100.0, prop::collection::vec(prop::option::weighted(0.7, lo..100.0), n)), m).prop_map(
            |cols| {
                cols.into_iter()
                    .map(|(first, mut c)| {
                        c[0] = Some(first);
                        c
                    })
                    .collect()
            },
        )
    })
}

fn check_completion(src: &FieldTable, ct: &CompletedTable) -> Result<(), TestCaseError> {
    prop_assert_eq!(ct.table.missing_count(), 0);
    for (k, &j) in ct.flag_columns.iter().enumerate() {
        let before = &src.columns()[j];
        let after = &ct.table.columns()[j];
        for i in 0..src.n_rows() {
            match before.num(i) {
                Some(v) => {
                    prop_assert!(!ct.flags[k][i]);
                    prop_assert_eq!(after.num(i).unwrap().to_bits(), v.to_bits());
                }
                None => prop_assert!(ct.flags[k][i]),
            }
        }
    }
    prop_assert_eq!(ct.imputed_count(), src.missing_count());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_imputer_keeps_observed_cells_and_flags_the_mask(cols in columns(-100.0)) {
        let t = build(&cols);
        check_completion(&t, &fill_column_means(&t).unwrap())?;
        let groups: Vec<String> = (0..t.n_rows()).map(|i| format!("g{}", i % 3)).collect();
        check_completion(&t, &fill_group_means(&t, &groups).unwrap())?;
        check_completion(&t, &tsvd_impute(&t, 1, 50, 1e-6).unwrap())?;
    }

    #[test]
    fn nnmf_fills_nonnegative_tables_with_nonnegative_values(cols in columns(0.0), s in 0u64..1000) {
        let t = build(&cols);
        let ct = nnmf_impute(&t, NnmfParams { rank: 1, max_iters: 50, tol: 1e-6, seed: s }).unwrap();
        check_completion(&t, &ct)?;
        for c in ct.table.columns() {
            for i in 0..t.n_rows() {
                prop_assert!(c.num(i).unwrap() >= 0.0);
            }
        }
        for w in ct.objective_log.windows(2) {
            // roundoff only, measured against the starting objective
            prop_assert!(w[1] <= w[0] + 1e-12 * ct.objective_log[0], "{:?}", ct.objective_log);
        }
    }

    #[test]
    fn dbscan_core_and_noise_ignore_row_order(
        pts in prop::collection::vec((0u8..12, 0u8..12), 1..40),
        shuffle in any::<u64>(),
        min_pts in 1usize..5,
    ) {
        let rows: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a as f64, b as f64]).collect();
        let eps = 1.5;
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        let mut rng = seed::rng(shuffle);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let a = dbscan(&Matrix::from_rows(&rows).unwrap(), eps, min_pts).unwrap();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&p| rows[p].clone()).collect();
        let b = dbscan(&Matrix::from_rows(&permuted).unwrap(), eps, min_pts).unwrap();

        // core status by brute-force neighbor count
        let d2 = |x: &[f64], y: &[f64]| (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        let core: Vec<bool> = rows.iter().map(|x| rows.iter().filter(|y| d2(x, y) <= eps * eps).count() >= min_pts).collect();
        for (k, &p) in perm.iter().enumerate() {
            prop_assert_eq!(a.labels[p] == NOISE, b.labels[k] == NOISE);
            if core[p] {
                prop_assert!(a.labels[p] != NOISE);
            }
        }
        // core points share a cluster in one order exactly when they do in the other
        for (k1, &p1) in perm.iter().enumerate() {
            for (k2, &p2) in perm.iter().enumerate() {
                if core[p1] && core[p2] {
                    prop_assert_eq!(a.labels[p1] == a.labels[p2], b.labels[k1] == b.labels[k2]);
                }
            }
        }
    }
}

#[test]
fn isolation_scores_stay_in_range_with_duplicates() {
    for s in 0..5u64 {
        let mut rng = seed::rng(s);
        let mut rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let twin = rows[rng.random_range(0..rows.len())].clone();
        rows.push(twin);
        let scores = isolation_forest_scores(&Matrix::from_rows(&rows).unwrap(), 100, 64, s).unwrap();
        assert!(scores.scores.iter().all(|&v| v > 0.0 && v <= 1.0));
    }
}

#[test]
fn bootstrap_lower_bound_rarely_exceeds_the_point_estimate() {
    let trainer = TrainerSpec::new(ModelSpec::Tree { depth: 2, min_leaf: 5, l2: 0.0 });
    let reps = 40;
    let below = (0..reps)
        .filter(|&r| {
            let mut rng = seed::rng(seed::derive_indexed(11, "bootstrap-rep", r));
            let n = 200;
            let x = Matrix::from_fn(n, 3, |_, _| rng.random::<f64>());
            let y: Vec<f64> = (0..n)
                .map(|i| 2.0 * (x.get(i, 0) > 0.5) as u8 as f64 + x.get(i, 1) + rng.random::<f64>())
                .collect();
            let data = Dataset { x, y, features: vec!["a".into(), "b".into(), "c".into()], target: "y".into() };
            let cfg = BootstrapConfig { iters: 40, seed: r, ..BootstrapConfig::default() };
            let ci = bootstrap_r2_ci(&data, &trainer, &cfg).unwrap();
            ci.lower <= ci.point
        })
        .count();
    assert!(below * 10 >= reps as usize * 9, "{below} of {reps}");
}
