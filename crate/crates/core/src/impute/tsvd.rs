//! Iterative truncated-SVD imputation and default rank selection.

use super::svd::jacobi_svd;
use super::{CompletedTable, ImputeMethod, Masked};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::table::FieldTable;

/// Upper bound of the automatically selected rank.
pub const MAX_DEFAULT_RANK: usize = 10;
/// Share of observed-cell variance the selected rank must explain.
pub const RANK_VARIANCE_TARGET: f64 = 0.9;

/// Column scale: root mean square of observed values, or 1 when zero.
fn rms_scales(m: &Masked) -> Vec<f64> {
    (0..m.m)
        .map(|jj| {
            let (mut s, mut c) = (0.0, 0usize);
            for i in 0..m.n {
                if !m.missing[i * m.m + jj] {
                    s += m.data[i * m.m + jj].powi(2);
                    c += 1;
                }
            }
            let v = if c > 0 { (s / c as f64).sqrt() } else { 0.0 };
            if v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect()
}

/// Scaled matrix with missing cells set to the scaled column mean.
fn mean_filled(m: &Masked, table: &FieldTable, scales: &[f64]) -> Result<Matrix> {
    let means = m.column_means(table)?;
    Ok(Matrix::from_fn(m.n, m.m, |i, j| {
        let idx = i * m.m + j;
        if m.missing[idx] {
            means[j] / scales[j]
        } else {
            m.data[idx] / scales[j]
        }
    }))
}

/// Smallest rank (capped at [`MAX_DEFAULT_RANK`]) whose truncated SVD of the
/// scaled, mean-filled matrix explains at least [`RANK_VARIANCE_TARGET`] of
/// the variance of the observed cells.
pub fn select_rank(table: &FieldTable) -> Result<usize> {
    let m = Masked::from_table(table)?;
    if m.n == 0 || m.m == 0 {
        return Err(Error::EmptyInput);
    }
    let scales = rms_scales(&m);
    let z = mean_filled(&m, table, &scales)?;
    let col_mean: Vec<f64> = (0..m.m)
        .map(|j| {
            let obs: Vec<f64> = (0..m.n).filter(|&i| !m.missing[i * m.m + j]).map(|i| z.get(i, j)).collect();
            obs.iter().sum::<f64>() / obs.len() as f64
        })
        .collect();
    let mut ss_tot = 0.0;
    for i in 0..m.n {
        for j in 0..m.m {
            if !m.missing[i * m.m + j] {
                ss_tot += (z.get(i, j) - col_mean[j]).powi(2);
            }
        }
    }
    let cap = MAX_DEFAULT_RANK.min(m.n).min(m.m);
    if ss_tot == 0.0 {
        return Ok(1);
    }
    let svd = jacobi_svd(&z, None);
    for k in 1..=cap {
        let rec = svd.truncated(k);
        let mut ss_res = 0.0;
        for i in 0..m.n {
            for j in 0..m.m {
                if !m.missing[i * m.m + j] {
                    ss_res += (z.get(i, j) - rec.get(i, j)).powi(2);
                }
            }
        }
        if 1.0 - ss_res / ss_tot >= RANK_VARIANCE_TARGET {
            return Ok(k);
        }
    }
    Ok(cap)
}

/// Iterative SVD imputation: start from column means, then repeatedly
/// replace the missing cells by the best rank-`rank` approximation of the
/// completed matrix until the relative change of the imputed cells drops
/// below `tol` or `max_iters` projections ran. Columns are divided by their
/// observed RMS (not centered). Observed cells are never modified.
pub fn tsvd_impute(table: &FieldTable, rank: usize, max_iters: usize, tol: f64) -> Result<CompletedTable> {
    let m = Masked::from_table(table)?;
    if m.n == 0 || m.m == 0 {
        return Err(Error::EmptyInput);
    }
    if rank == 0 || rank > m.n.min(m.m) {
        return Err(Error::invalid(format!(
            "rank {rank} outside 1..={} for a {}x{} matrix",
            m.n.min(m.m),
            m.n,
            m.m
        )));
    }
    let scales = rms_scales(&m);
    let mut z = mean_filled(&m, table, &scales)?;
    let missing: Vec<(usize, usize)> = (0..m.n * m.m)
        .filter(|&idx| m.missing[idx])
        .map(|idx| (idx / m.m, idx % m.m))
        .collect();
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut warm: Option<Matrix> = None;
    let mut objective = 0.0;
    if !missing.is_empty() {
        while iterations < max_iters {
            let svd = jacobi_svd(&z, warm.as_ref());
            let rec = svd.truncated(rank);
            warm = Some(svd.into_warm_start());
            let (mut diff, mut norm) = (0.0, 0.0);
            for &(i, j) in &missing {
                let (old, new) = (z.get(i, j), rec.get(i, j));
                diff += (new - old).powi(2);
                norm += old * old;
                z.set(i, j, new);
            }
            objective = 0.0;
            for i in 0..m.n {
                for j in 0..m.m {
                    if !m.missing[i * m.m + j] {
                        objective += (z.get(i, j) - rec.get(i, j)).powi(2);
                    }
                }
            }
            log.push(objective);
            iterations += 1;
            let change = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
            if change < tol {
                break;
            }
        }
    }
    let (t, flags) = m.complete(table, ImputeMethod::Tsvd, |i, j| z.get(i, j) * scales[j])?;
    Ok(CompletedTable {
        table: t,
        flag_columns: m.cols.clone(),
        flags,
        method: ImputeMethod::Tsvd,
        rank: Some(rank),
        iterations,
        final_objective: objective,
        objective_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_util::table;
    use super::*;
    use crate::seed::rng;
    use rand::Rng;

    fn planted(n: usize, m: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        let u: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let v: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        (0..m)
            .map(|j| (0..n).map(|i| (0..k).map(|a| u[i][a] * v[a][j]).sum()).collect())
            .collect()
    }

    #[test]
    fn no_missing_is_identity() {
        let cols = planted(8, 5, 2, 1);
        let opt: Vec<Vec<Option<f64>>> = cols.iter().map(|c| c.iter().map(|&v| Some(v)).collect()).collect();
        let refs: Vec<&[Option<f64>]> = opt.iter().map(|c| c.as_slice()).collect();
        let t = table(&refs);
        let c = tsvd_impute(&t, 2, 50, 1e-9).unwrap();
        assert_eq!(c.table, t);
        assert_eq!(c.iterations, 0);
    }

    #[test]
    fn planted_rank_two_recovered() {
        let cols = planted(20, 15, 2, 7);
        let mut r = rng(99);
        let mut masked = Vec::new();
        let opt: Vec<Vec<Option<f64>>> = cols
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if r.random_bool(0.2) {
                            masked.push((i, j, v));
                            None
                        } else {
                            Some(v)
                        }
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<&[Option<f64>]> = opt.iter().map(|c| c.as_slice()).collect();
        let t = table(&refs);
        let c = tsvd_impute(&t, 2, 500, 1e-10).unwrap();
        let all: Vec<f64> = cols.iter().flatten().copied().collect();
        let range = all.iter().cloned().fold(f64::MIN, f64::max) - all.iter().cloned().fold(f64::MAX, f64::min);
        let mse: f64 = masked
            .iter()
            .map(|&(i, j, v)| (c.table.columns()[j].num(i).unwrap() - v).powi(2))
            .sum::<f64>()
            / masked.len() as f64;
        assert!(mse.sqrt() < 0.05 * range, "rmse {} range {range}", mse.sqrt());
        // observed cells bitwise equal
        for (j, col) in opt.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    assert_eq!(c.table.columns()[j].num(i).unwrap().to_bits(), v.to_bits());
                }
            }
        }
    }

    #[test]
    fn single_iteration_is_deterministic() {
        let t = table(&[&[Some(1.0), None, Some(3.0)], &[Some(2.0), Some(1.0), None], &[Some(0.5), Some(4.0), Some(1.0)]]);
        let a = tsvd_impute(&t, 1, 1, 0.0).unwrap();
        let b = tsvd_impute(&t, 1, 1, 0.0).unwrap();
        assert_eq!(a.iterations, 1);
        assert_eq!(a.table, b.table);
        assert!(tsvd_impute(&t, 4, 1, 0.0).is_err());
    }

    #[test]
    fn rank_selection_finds_planted_rank() {
        let cols = planted(40, 12, 3, 5);
        let opt: Vec<Vec<Option<f64>>> = cols.iter().map(|c| c.iter().map(|&v| Some(v)).collect()).collect();
        let refs: Vec<&[Option<f64>]> = opt.iter().map(|c| c.as_slice()).collect();
        let k = select_rank(&table(&refs)).unwrap();
        assert!((1..=3).contains(&k), "{k}");
    }
}
