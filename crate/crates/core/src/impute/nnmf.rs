//! Masked non-negative matrix factorization imputation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CompletedTable, ImputeMethod, Masked};
use crate::error::{Error, Result};
use crate::seed;
use crate::table::FieldTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnmfParams {
    pub rank: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

/// Per-column scale: observed maximum, or 1 for an all-zero column.
fn column_scales(m: &Masked) -> Vec<f64> {
    (0..m.m)
        .map(|jj| {
            let mx = (0..m.n)
                .filter(|&i| !m.missing[i * m.m + jj])
                .map(|i| m.data[i * m.m + jj])
                .fold(0.0, f64::max);
            if mx > 0.0 {
                mx
            } else {
                1.0
            }
        })
        .collect()
}

/// Fill missing cells from a non-negative factorization `W H` fitted to the
/// observed cells only (Lee-Seung multiplicative updates on the masked
/// Frobenius objective). Columns are divided by their observed maximum
/// before fitting, so every value lies in [0, 1] and exact low-rank
/// structure is preserved.
pub fn nnmf_impute(table: &FieldTable, params: NnmfParams) -> Result<CompletedTable> {
    let m = Masked::from_table(table)?;
    let (n, k, r) = (m.n, m.m, params.rank);
    if n == 0 || k == 0 {
        return Err(Error::EmptyInput);
    }
    if r == 0 || r > n.min(k) {
        return Err(Error::invalid(format!(
            "rank {r} outside 1..={} for a {n}x{k} matrix",
            n.min(k)
        )));
    }
    for (idx, (&v, &miss)) in m.data.iter().zip(&m.missing).enumerate() {
        if !miss && v < 0.0 {
            return Err(Error::NegativeInput(m.column_name(table, idx % k).to_string()));
        }
    }
    let scales = column_scales(&m);
    // masked scaled data; missing cells are 0 and carry weight 0
    let x: Vec<f64> = (0..n * k)
        .map(|idx| if m.missing[idx] { 0.0 } else { m.data[idx] / scales[idx % k] })
        .collect();
    let w_mask: Vec<f64> = m.missing.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();

    let mut rng = seed::rng(seed::derive(params.seed, "nnmf-init"));
    let mut w: Vec<f64> = (0..n * r).map(|_| rng.random_range(0.1..1.1)).collect();
    let mut h: Vec<f64> = (0..r * k).map(|_| rng.random_range(0.1..1.1)).collect();
    let mut wh = vec![0.0; n * k];
    product(&w, &h, n, r, k, &mut wh);
    let mut obj = objective(&x, &wh, &w_mask);
    let mut log = vec![obj];
    let mut iterations = 0;

    let mut num_h = vec![0.0; r * k];
    let mut den_h = vec![0.0; r * k];
    let mut num_w = vec![0.0; n * r];
    let mut den_w = vec![0.0; n * r];
    while iterations < params.max_iters && obj > 0.0 {
        // H <- H * (Wᵀ(M∘X)) / (Wᵀ(M∘WH))
        num_h.fill(0.0);
        den_h.fill(0.0);
        for i in 0..n {
            for a in 0..r {
                let wia = w[i * r + a];
                for j in 0..k {
                    let idx = i * k + j;
                    num_h[a * k + j] += wia * x[idx];
                    den_h[a * k + j] += wia * w_mask[idx] * wh[idx];
                }
            }
        }
        multiplicative(&mut h, &num_h, &den_h);
        product(&w, &h, n, r, k, &mut wh);
        // W <- W * ((M∘X)Hᵀ) / ((M∘WH)Hᵀ)
        for i in 0..n {
            for a in 0..r {
                let (mut nu, mut de) = (0.0, 0.0);
                for j in 0..k {
                    let idx = i * k + j;
                    nu += x[idx] * h[a * k + j];
                    de += w_mask[idx] * wh[idx] * h[a * k + j];
                }
                num_w[i * r + a] = nu;
                den_w[i * r + a] = de;
            }
        }
        multiplicative(&mut w, &num_w, &den_w);
        product(&w, &h, n, r, k, &mut wh);
        let next = objective(&x, &wh, &w_mask);
        iterations += 1;
        log.push(next);
        let decrease = (obj - next) / obj;
        obj = next;
        if decrease < params.tol {
            break;
        }
    }

    let (t, flags) = m.complete(table, ImputeMethod::Nnmf, |i, jj| wh[i * k + jj] * scales[jj])?;
    Ok(CompletedTable {
        table: t,
        flag_columns: m.cols.clone(),
        flags,
        method: ImputeMethod::Nnmf,
        rank: Some(r),
        iterations,
        final_objective: obj,
        objective_log: log,
    })
}

fn multiplicative(f: &mut [f64], num: &[f64], den: &[f64]) {
    for ((v, &nu), &de) in f.iter_mut().zip(num).zip(den) {
        if de > 0.0 {
            *v *= nu / de;
        }
    }
}

fn product(w: &[f64], h: &[f64], n: usize, r: usize, k: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..n {
        let row = &mut out[i * k..(i + 1) * k];
        for a in 0..r {
            let wia = w[i * r + a];
            for (o, &hv) in row.iter_mut().zip(&h[a * k..(a + 1) * k]) {
                *o += wia * hv;
            }
        }
    }
}

fn objective(x: &[f64], wh: &[f64], mask: &[f64]) -> f64 {
    x.iter()
        .zip(wh)
        .zip(mask)
        .map(|((a, b), m)| m * (a - b) * (a - b))
        .sum()
}
