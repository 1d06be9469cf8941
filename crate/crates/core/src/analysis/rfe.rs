use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{r2_score, CvConfig, CvPlan, Dataset, Predictor, TrainerSpec};
use crate::seed;

/// Default plateau tolerance on R².
pub const RFE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfePoint {
    pub n_features: usize,
    pub test_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeCurve {
    /// Ascending in `n_features`.
    pub points: Vec<RfePoint>,
    pub selected: usize,
    pub tolerance: f64,
    /// Names of the top `selected` features, most important first.
    pub selected_features: Vec<String>,
}

/// `step, 2 step, ...` up to and always including `m`.
pub fn rfe_grid(m: usize, step: usize) -> Vec<usize> {
    let step = step.max(1);
    let mut g: Vec<usize> = (1..).map(|i| i * step).take_while(|&n| n < m).collect();
    g.push(m);
    g
}

/// Retrain on the top-n features of `order` for each n in `grid` and score
/// on the held-out test rows of `cfg`. Columns keep their original relative
/// order, so n = all features reproduces the full model exactly.
pub fn rfe_curve(
    data: &Dataset,
    order: &[usize],
    grid: &[usize],
    trainer: &TrainerSpec,
    cfg: &CvConfig,
    tolerance: f64,
) -> Result<RfeCurve> {
    let m = data.x.cols();
    if grid.is_empty() {
        return Err(Error::invalid("RFE grid is empty"));
    }
    let mut seen = vec![false; m];
    for &j in order {
        if j >= m || std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid("importance order must be a permutation of the features"));
        }
    }
    if order.len() != m {
        return Err(Error::invalid(format!("importance order covers {} of {m} features", order.len())));
    }
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid[0] == 0 || grid[grid.len() - 1] > m {
        return Err(Error::invalid(format!("feature counts must lie in 1..={m}")));
    }
    let plan = CvPlan::new(&data.y, cfg)?;
    let points = grid
        .par_iter()
        .map(|&n| {
            let mut cols = order[..n].to_vec();
            cols.sort_unstable();
            let sub = data.select_features(&cols);
            let (xt, yt) = sub.rows(&plan.cv_rows);
            let model = trainer.fit(&xt, &yt, seed::derive(cfg.seed, "final"))?;
            let (xs, ys) = sub.rows(&plan.test_rows);
            Ok(RfePoint { n_features: n, test_r2: r2_score(&ys, &model.predict_rows(&xs))? })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points.iter().map(|p| p.test_r2).fold(f64::NEG_INFINITY, f64::max);
    let selected = points.iter().find(|p| p.test_r2 >= best - tolerance).map_or(m, |p| p.n_features);
    Ok(RfeCurve {
        points,
        selected,
        tolerance,
        selected_features: order[..selected].iter().map(|&j| data.features[j].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::regress::{kfold_cv, GbdtParams, ModelSpec};
    use rand::Rng;

    fn fixture(n: usize, m: usize, seed_v: u64) -> Dataset {
        let mut rng = seed::rng(seed_v);
        let x = Matrix::from_fn(n, m, |_, _| rng.random::<f64>());
        let y = (0..n)
            .map(|i| {
                let r = x.row(i);
                3.0 * r[2] + 2.0 * (r[7] > 0.5) as u8 as f64 + 4.0 * r[11] * r[11] + 0.1 * rng.random::<f64>()
            })
            .collect();
        Dataset { x, y, features: (0..m).map(|j| format!("x{j}")).collect(), target: "y".into() }
    }

    fn trainer() -> TrainerSpec {
        TrainerSpec::new(ModelSpec::gbdt(GbdtParams { n_rounds: 300, depth: 4, learning_rate: 0.1, ..GbdtParams::default() }))
    }

    #[test]
    fn grid_helper() {
        assert_eq!(rfe_grid(12, 5), vec![5, 10, 12]);
        assert_eq!(rfe_grid(10, 5), vec![5, 10]);
        assert_eq!(rfe_grid(3, 5), vec![3]);
    }

    #[test]
    fn full_count_matches_full_model_and_few_features_suffice() {
        let data = fixture(600, 20, 5);
        let cfg = CvConfig { seed: 9, ..CvConfig::default() };
        let tr = trainer();
        let full = kfold_cv(&data, &tr, &cfg).unwrap();
        let mut order: Vec<usize> = vec![2, 11, 7];
        order.extend((0..20).filter(|j| ![2, 7, 11].contains(j)));
        let curve = rfe_curve(&data, &order, &[20, 1, 3, 5, 10, 3], &tr, &cfg, RFE_TOLERANCE).unwrap();
        let ns: Vec<usize> = curve.points.iter().map(|p| p.n_features).collect();
        assert_eq!(ns, vec![1, 3, 5, 10, 20]);
        assert_eq!(curve.points[4].test_r2, full.test_r2);
        assert!(curve.selected <= 5, "selected {}", curve.selected);
        assert_eq!(curve.selected_features[0], "x2");
    }

    #[test]
    fn bad_inputs() {
        let data = fixture(60, 12, 1);
        let cfg = CvConfig::default();
        let tr = trainer();
        let all: Vec<usize> = (0..12).collect();
        assert!(rfe_curve(&data, &all, &[], &tr, &cfg, 0.0).is_err());
        assert!(rfe_curve(&data, &all[..11], &[2], &tr, &cfg, 0.0).is_err());
        let mut dup = all.clone();
        dup[3] = 1;
        assert!(rfe_curve(&data, &dup, &[2], &tr, &cfg, 0.0).is_err());
        assert!(rfe_curve(&data, &all, &[13], &tr, &cfg, 0.0).is_err());
        assert!(rfe_curve(&data, &all, &[0, 2], &tr, &cfg, 0.0).is_err());
    }
}
