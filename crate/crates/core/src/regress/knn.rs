//! k-nearest-neighbour regression.

use serde::{Deserialize, Serialize};

use super::tree::check_xy;
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

/// Mean target of the `k` Euclidean-nearest training rows for each query.
/// Equal distances are ordered by training row index.
pub fn knn_regress(xtrain: &Matrix, ytrain: &[f64], xquery: &Matrix, k: usize) -> Result<Vec<f64>> {
    check_xy(xtrain, ytrain)?;
    if k < 1 || k > ytrain.len() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", ytrain.len())));
    }
    if xquery.rows() > 0 && xquery.cols() != xtrain.cols() {
        return Err(Error::invalid("query width differs from training width"));
    }
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(ytrain.len());
    Ok((0..xquery.rows())
        .map(|q| {
            dist.clear();
            dist.extend((0..xtrain.rows()).map(|i| (squared_distance(xtrain.row(i), xquery.row(q)), i)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let mut near: Vec<_> = dist[..k].to_vec();
            near.sort_by(cmp);
            near.iter().map(|&(_, i)| ytrain[i]).sum::<f64>() / k as f64
        })
        .collect())
}

/// Training rows kept together with the standardization applied to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Result<KnnModel> {
        check_xy(x, y)?;
        if k < 1 || k > y.len() {
            return Err(Error::invalid(format!("k = {k} outside 1..={}", y.len())));
        }
        let n = x.rows() as f64;
        let means: Vec<f64> = (0..x.cols()).map(|j| x.column(j).iter().sum::<f64>() / n).collect();
        let scales: Vec<f64> = (0..x.cols())
            .map(|j| {
                let var = x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 { var.sqrt() } else { 1.0 }
            })
            .collect();
        let mut m = KnnModel { k, means, scales, x: Matrix::zeros(0, x.cols()), y: y.to_vec() };
        m.x = m.transform(x);
        Ok(m)
    }

    fn transform(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| (x.get(i, j) - self.means[j]) / self.scales[j])
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        knn_regress(&self.x, &self.y, &self.transform(x), self.k).expect("validated at fit time")
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let q = Matrix::from_vec(1, row.len(), row.to_vec()).expect("row shape");
        self.predict_matrix(&q)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn examples() {
        let x = m(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 3.0]]);
        let y = [1.0, 2.0, 6.0];
        assert_eq!(knn_regress(&x, &y, &m(&[&[1.0, 0.0]]), 1).unwrap(), vec![2.0]);
        let all = knn_regress(&x, &y, &m(&[&[5.0, 5.0], &[-1.0, 0.0]]), 3).unwrap();
        assert!(all.iter().all(|&v| (v - 3.0).abs() < 1e-12));
        let two = m(&[&[0.0], &[2.0]]);
        assert_eq!(knn_regress(&two, &[4.0, 10.0], &m(&[&[1.0]]), 2).unwrap(), vec![7.0]);
        assert!(knn_regress(&x, &y, &x, 0).is_err());
    }

    #[test]
    fn ties_go_to_lower_index() {
        let x = m(&[&[-1.0], &[1.0], &[1.0]]);
        assert_eq!(knn_regress(&x, &[5.0, 7.0, 9.0], &m(&[&[0.0]]), 1).unwrap(), vec![5.0]);
        assert_eq!(knn_regress(&x, &[5.0, 7.0, 9.0], &m(&[&[1.0]]), 1).unwrap(), vec![7.0]);
    }

    #[test]
    fn model_standardizes() {
        // second column has a huge scale that would dominate raw distances
        let x = m(&[&[0.0, 0.0], &[1.0, 1000.0], &[0.1, 2000.0]]);
        let model = KnnModel::fit(&x, &[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(model.predict(&[0.05, 2000.0]), 3.0);
        assert_eq!(model.predict(&[1.0, 1000.0]), 2.0);
    }
}
