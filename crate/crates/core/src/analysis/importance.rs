use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{Model, TreeNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Position of the feature in the model input vector.
    pub index: usize,
    pub importance: f64,
}

/// Split gain summed per feature over every tree that takes part in
/// prediction, normalized to sum 1. Sorted by importance, ties by index.
/// A model without splits gets all zeros.
pub fn gain_importance(model: &Model, features: &[String]) -> Result<Vec<Importance>> {
    let trees = model.trees();
    if trees.is_empty() {
        return Err(Error::invalid(format!("{} model has no trees to attribute gain to", model.name())));
    }
    let mut gain = vec![0.0; features.len()];
    for t in trees {
        if let Some(f) = max_feature(t).filter(|&f| f >= features.len()) {
            return Err(Error::invalid(format!(
                "model splits on feature {f} but only {} names were given",
                features.len()
            )));
        }
        t.accumulate_gain(&mut gain);
    }
    let total: f64 = gain.iter().sum();
    if total > 0.0 {
        gain.iter_mut().for_each(|g| *g /= total);
    }
    let mut out: Vec<Importance> = gain
        .into_iter()
        .enumerate()
        .map(|(index, importance)| Importance { feature: features[index].clone(), index, importance })
        .collect();
    out.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.index.cmp(&b.index)));
    Ok(out)
}

fn max_feature(t: &TreeNode) -> Option<usize> {
    match t {
        TreeNode::Leaf { .. } => None,
        TreeNode::Split { feature, left, right, .. } => {
            Some(*feature).max(max_feature(left)).max(max_feature(right))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::regress::{fit_forest, fit_tree, ForestMode, ForestParams};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn leaf_only_model_is_all_zero() {
        let m = Model::Tree { root: TreeNode::Leaf { value: 3.0, count: 10 } };
        let imp = gain_importance(&m, &names(3)).unwrap();
        assert!(imp.iter().all(|i| i.importance == 0.0));
        assert_eq!(imp.iter().map(|i| i.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn single_relevant_feature_takes_everything() {
        let x = Matrix::from_fn(200, 3, |i, j| ((i * (j + 3) * 7919) % 200) as f64);
        let y: Vec<f64> = (0..200).map(|i| (x.get(i, 1) / 20.0).floor()).collect();
        let m = Model::Tree { root: fit_tree(&x, &y, 6, 1, 0.0).unwrap() };
        let imp = gain_importance(&m, &names(3)).unwrap();
        assert_eq!(imp[0].feature, "x1");
        assert_eq!(imp[0].importance, 1.0);
    }

    #[test]
    fn forest_importance_sums_to_one() {
        let x = Matrix::from_fn(150, 4, |i, j| ((i * 31 + j * 17) % 23) as f64);
        let y: Vec<f64> = (0..150).map(|i| x.get(i, 0) + 2.0 * x.get(i, 2)).collect();
        let p = ForestParams { n_trees: 8, ..ForestParams::default() };
        let m = Model::Forest(fit_forest(&x, &y, ForestMode::RandomForest, p, 3).unwrap());
        let imp = gain_importance(&m, &names(4)).unwrap();
        let s: f64 = imp.iter().map(|i| i.importance).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(imp.windows(2).all(|w| w[0].importance >= w[1].importance));
    }

    #[test]
    fn dropping_zero_importance_features_keeps_predictions() {
        use crate::regress::{GbdtParams, ModelSpec, Predictor, TrainerSpec};
        use rand::Rng;
        let mut rng = crate::seed::rng(8);
        // columns 1 and 3 are constant, so no tree can split on them
        let x = Matrix::from_fn(300, 5, |_, j| if j % 2 == 1 { 1.0 } else { rng.random::<f64>() });
        let y: Vec<f64> = (0..300).map(|i| x.get(i, 0) * 3.0 + (x.get(i, 4) > 0.3) as u8 as f64).collect();
        let tr = TrainerSpec::new(ModelSpec::gbdt(GbdtParams { n_rounds: 60, depth: 3, ..GbdtParams::default() }));
        let full = tr.fit(&x, &y, 11).unwrap();
        let imp = gain_importance(&full.model, &names(5)).unwrap();
        let keep: Vec<usize> = {
            let mut k: Vec<usize> = imp.iter().filter(|i| i.importance > 0.0).map(|i| i.index).collect();
            k.sort_unstable();
            k
        };
        assert!(!keep.contains(&1) && !keep.contains(&3));
        let xs = x.select_cols(&keep);
        let reduced = tr.fit(&xs, &y, 11).unwrap();
        let a = full.predict_rows(&x);
        let b = reduced.predict_rows(&xs);
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn knn_has_no_gain() {
        let x = Matrix::from_fn(5, 1, |i, _| i as f64);
        let m = Model::Knn(crate::regress::KnnModel::fit(&x, &[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap());
        assert!(gain_importance(&m, &names(1)).is_err());
    }
}
