//! One-sided (Hestenes) Jacobi singular value decomposition.

use crate::matrix::Matrix;

/// `A = U diag(s) Vᵀ` with singular values in descending order and
/// `p = min(rows, cols)` of them.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × p`, columns of unit norm (zero where `s` is zero).
    pub u: Matrix,
    pub s: Vec<f64>,
    /// `cols × p`, orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    /// Best rank-`k` approximation `Σ_{i<k} s_i u_i v_iᵀ`.
    pub fn truncated(&self, k: usize) -> Matrix {
        let (n, m) = (self.u.rows(), self.v.rows());
        let k = k.min(self.s.len());
        let mut out = Matrix::zeros(n, m);
        for i in 0..n {
            let row = out.row_mut(i);
            for r in 0..k {
                let a = self.s[r] * self.u.get(i, r);
                if a == 0.0 {
                    continue;
                }
                for (j, o) in row.iter_mut().enumerate() {
                    *o += a * self.v.get(j, r);
                }
            }
        }
        out
    }

    /// The square factor, to seed the next [`jacobi_svd`] of a matrix with
    /// the same shape.
    pub fn into_warm_start(self) -> Matrix {
        if self.u.rows() < self.v.rows() {
            self.u
        } else {
            self.v
        }
    }
}

const MAX_SWEEPS: usize = 80;

/// SVD of `a` by one-sided Jacobi rotations on the columns of `a`, or of
/// `aᵀ` when `a` is wide. When `warm` is given (an orthogonal square matrix of
/// side `min(rows, cols)`, e.g. [`Svd::into_warm_start`] of a nearby matrix)
/// rotations start from it, which usually needs one or two sweeps.
pub fn jacobi_svd(a: &Matrix, warm: Option<&Matrix>) -> Svd {
    if a.cols() > a.rows() {
        let t = jacobi_tall(&a.transpose(), warm);
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    jacobi_tall(a, warm)
}

fn jacobi_tall(a: &Matrix, warm: Option<&Matrix>) -> Svd {
    let (n, m) = (a.rows(), a.cols());
    // column-major working copies
    let mut v: Vec<Vec<f64>> = match warm {
        Some(w) => (0..m).map(|j| w.column(j)).collect(),
        None => (0..m)
            .map(|j| {
                let mut e = vec![0.0; m];
                e[j] = 1.0;
                e
            })
            .collect(),
    };
    let mut cols: Vec<Vec<f64>> = match warm {
        Some(_) => (0..m)
            .map(|j| {
                (0..n)
                    .map(|i| a.row(i).iter().zip(&v[j]).map(|(x, y)| x * y).sum())
                    .collect()
            })
            .collect(),
        None => (0..m).map(|j| a.column(j)).collect(),
    };
    let eps = f64::EPSILON;
    // columns this small only carry rounding noise; rotating them never settles
    let floor = eps * eps * cols.iter().flatten().map(|x| x * x).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let mut u = Matrix::zeros(n, m);
    let mut vm = Matrix::zeros(m, m);
    let mut s = Vec::with_capacity(m);
    for (r, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        if norms[j] > 0.0 {
            for i in 0..n {
                u.set(i, r, cols[j][i] / norms[j]);
            }
        }
        for i in 0..m {
            vm.set(i, r, v[j][i]);
        }
    }
    Svd { u, s, v: vm }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}
