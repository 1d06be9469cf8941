//! Density-based clustering with deterministic border assignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::stats::percentile;

/// Neighbourhood size used when none is configured.
pub const DEFAULT_MIN_PTS: usize = 30;

pub const NOISE: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabels {
    /// Cluster id per row, [`NOISE`] for noise.
    pub labels: Vec<i64>,
    pub eps: f64,
    pub min_pts: usize,
}

impl ClusterLabels {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

/// Indices within `eps` of every point (itself included), ascending.
fn neighborhoods(points: &Matrix, eps: f64) -> Vec<Vec<usize>> {
    let eps2 = eps * eps;
    (0..points.rows())
        .into_par_iter()
        .map(|i| {
            let pi = points.row(i);
            (0..points.rows())
                .filter(|&j| squared_distance(pi, points.row(j)) <= eps2)
                .collect()
        })
        .collect()
}

/// DBSCAN under the Euclidean metric. A point is core when at least
/// `min_pts` points (itself included) lie within `eps`. Clusters are the
/// eps-connected components of core points, numbered by their lowest core
/// index; a border point joins the cluster of its lowest-index core
/// neighbor; everything else is noise.
pub fn dbscan(points: &Matrix, eps: f64, min_pts: usize) -> Result<ClusterLabels> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if !(eps > 0.0) || min_pts == 0 {
        return Err(Error::invalid(format!("eps {eps} must be > 0 and min_pts {min_pts} >= 1")));
    }
    let nb = neighborhoods(points, eps);
    let core: Vec<bool> = nb.iter().map(|v| v.len() >= min_pts).collect();
    let mut labels = vec![NOISE; n];
    let mut next = 0i64;
    let mut stack = Vec::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for &q in &nb[p] {
                if core[q] && labels[q] == NOISE {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            if let Some(&j) = nb[i].iter().find(|&&j| core[j]) {
                labels[i] = labels[j];
            }
        }
    }
    Ok(ClusterLabels { labels, eps, min_pts })
}

/// 95th percentile of the distance from each point to its `min_pts`-th
/// nearest point (itself counted first).
pub fn default_eps(points: &Matrix, min_pts: usize) -> Result<f64> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if min_pts == 0 || min_pts > n {
        return Err(Error::invalid(format!("min_pts {min_pts} outside 1..={n}")));
    }
    let kd: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .map(|j| squared_distance(points.row(i), points.row(j)))
                .collect();
            d.select_nth_unstable_by(min_pts - 1, f64::total_cmp);
            d[min_pts - 1].sqrt()
        })
        .collect();
    let eps = percentile(&kd, 0.95);
    Ok(if eps > 0.0 { eps } else { f64::MIN_POSITIVE })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_point_is_noise() {
        let l = dbscan(&pts(&[[0.0, 0.0]]), 1.0, 2).unwrap();
        assert_eq!(l.labels, vec![NOISE]);
    }

    #[test]
    fn two_triads_and_noise() {
        let p = pts(&[
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 0.0],
            [5.1, 0.0],
            [5.0, 0.1],
            [50.0, 50.0],
        ]);
        let l = dbscan(&p, 0.5, 2).unwrap();
        assert_eq!(l.labels, vec![0, 0, 0, 1, 1, 1, NOISE]);
        assert_eq!(l.n_clusters(), 2);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let p = pts(&[[1.0, 1.0]; 5]);
        assert_eq!(dbscan(&p, 0.1, 5).unwrap().labels, vec![0; 5]);
    }

    #[test]
    fn border_joins_lowest_core() {
        // point 0 is within eps of both clusters but is not core itself
        let p = pts(&[
            [1.3, 0.0],
            [2.6, 0.0],
            [2.9, 0.0],
            [3.2, 0.0],
            [3.5, 0.0],
            [0.0, 0.0],
            [-0.3, 0.0],
            [-0.6, 0.0],
            [-0.9, 0.0],
        ]);
        let l = dbscan(&p, 1.35, 4).unwrap();
        assert_eq!(l.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1]);
        assert!(dbscan(&Matrix::zeros(0, 2), 1.0, 1).is_err());
    }

    #[test]
    fn eps_heuristic() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        // 2-NN distances: 1, 1, 2
        let e = default_eps(&p, 2).unwrap();
        assert!((e - 1.9).abs() < 1e-12);
    }
}
