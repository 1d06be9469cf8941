//! Reference implementations used to check the production algorithms.

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::structure::{ClusterLabels, NOISE};

/// Frobenius error of the best rank-k approximation, from the singular
/// values of an independent SVD: `sqrt(sum_{i>k} s_i^2)`.
pub fn best_rank_k_error(x: &Matrix, k: usize) -> Result<f64> {
    let (n, m) = (x.rows(), x.cols());
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput);
    }
    if k > n.min(m) {
        return Err(Error::invalid(format!("rank {k} exceeds min({n}, {m})")));
    }
    let a = nalgebra::DMatrix::from_row_slice(n, m, x.as_slice());
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s[k..].iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// DBSCAN by explicit transitive closure of eps-reachability among core
/// points. Cubic in N; meant for small oracle instances.
pub fn brute_force_dbscan(x: &Matrix, eps: f64, min_pts: usize) -> Result<ClusterLabels> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let e2 = eps * eps;
    let near = |i: usize, j: usize| squared_distance(x.row(i), x.row(j)) <= e2;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    // reach[i][j]: core i and core j are connected through core points
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && near(i, j);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut labels = vec![NOISE; n];
    let mut next = 0;
    for i in 0..n {
        if core[i] && labels[i] == NOISE {
            for j in 0..n {
                if reach[i][j] {
                    labels[j] = next;
                }
            }
            next += 1;
        }
    }
    for i in 0..n {
        if !core[i] {
            if let Some(c) = (0..n).find(|&j| core[j] && near(i, j)) {
                labels[i] = labels[c];
            }
        }
    }
    Ok(ClusterLabels { labels, eps, min_pts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::structure::dbscan;
    use rand::Rng;

    #[test]
    fn rank_k_error_properties() {
        let mut r = seed::rng(1);
        let a = Matrix::from_fn(10, 2, |_, _| r.random::<f64>());
        let b = Matrix::from_fn(2, 8, |_, _| r.random::<f64>());
        assert!(best_rank_k_error(&a.matmul(&b), 2).unwrap() < 1e-9);
        let x = Matrix::from_fn(10, 8, |_, _| r.random::<f64>());
        assert!(best_rank_k_error(&x, 8).unwrap() < 1e-9);
        let errs: Vec<f64> = (0..=8).map(|k| best_rank_k_error(&x, k).unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!((errs[0] - x.frobenius_norm()).abs() < 1e-9);
        assert!(best_rank_k_error(&x, 9).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![5.0, 0.0],
            vec![5.1, 0.0],
            vec![5.0, 0.1],
            vec![50.0, 50.0],
        ])
        .unwrap();
        let b = brute_force_dbscan(&x, 0.5, 2).unwrap();
        assert_eq!(b.labels, vec![0, 0, 0, 1, 1, 1, NOISE]);
        assert_eq!(b.labels, dbscan(&x, 0.5, 2).unwrap().labels);
        let one = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(brute_force_dbscan(&one, 1.0, 2).unwrap().labels, vec![NOISE]);
    }
}
