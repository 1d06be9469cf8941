//! Regression trees and the shared split-search grower.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binning::{bin_features, Binned, EXACT_BINS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::Rng as SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Loss reduction achieved by this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Add each split's gain to `out[feature]`.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        if let TreeNode::Split { feature, gain, left, right, .. } = self {
            out[*feature] += gain;
            left.accumulate_gain(out);
            right.accumulate_gain(out);
        }
    }

    /// Features used by at least one split.
    pub fn used_features(&self, out: &mut Vec<bool>) {
        if let TreeNode::Split { feature, left, right, .. } = self {
            out[*feature] = true;
            left.used_features(out);
            right.used_features(out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub l2: f64,
    /// Share of features considered at each split (random subset when < 1).
    pub feature_frac: f64,
    /// Draw one uniform threshold per candidate feature instead of scanning.
    pub random_thresholds: bool,
}

impl GrowParams {
    pub fn exact(max_depth: usize, min_leaf: usize, l2: f64) -> Self {
        GrowParams {
            max_depth,
            min_leaf,
            l2,
            feature_frac: 1.0,
            random_thresholds: false,
        }
    }
}

/// Nodes at most this large are always searched by sorting.
const SMALL_NODE: usize = 8;

/// A histogram pays off once the node fills a decent share of its bins.
fn wants_hist(n: usize, d: usize, total_bins: usize) -> bool {
    n > SMALL_NODE && 8 * n * d >= total_bins
}

struct Hist {
    sum: Vec<f64>,
    count: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    /// Bin boundary (left gets bins ≤ bin) or raw threshold.
    bin: usize,
    threshold: f64,
    gain: f64,
}

/// Greedy depth-first tree grower over binned features. Split gain is
/// `G_L²/(n_L+λ) + G_R²/(n_R+λ) - G²/(n+λ)` and leaf values are `G/(n+λ)`,
/// where `G` sums the node's targets (residuals when boosting). Ties keep
/// the first candidate in (feature, threshold) order.
pub(crate) struct Grower<'a> {
    pub binned: &'a Binned,
    /// Raw features, needed only for random thresholds.
    pub raw: Option<&'a Matrix>,
    pub g: &'a [f64],
    pub params: GrowParams,
    pub rng: Option<&'a mut SeededRng>,
    /// When set, receives each row's leaf value.
    pub leaf_out: Option<&'a mut [f64]>,
    scratch: Vec<u32>,
    pairs: Vec<(u64, f64)>,
    pool: Vec<Hist>,
}

impl<'a> Grower<'a> {
    pub fn new(binned: &'a Binned, g: &'a [f64], params: GrowParams) -> Self {
        Grower {
            binned,
            raw: None,
            g,
            params,
            rng: None,
            leaf_out: None,
            scratch: Vec::new(),
            pairs: Vec::new(),
            pool: Vec::new(),
        }
    }

    pub fn grow(&mut self, rows: &mut [u32]) -> TreeNode {
        let hist = (!self.params.random_thresholds && self.wants_hist(rows.len())).then(|| self.build_hist(rows));
        self.node(rows, 0, hist)
    }

    fn wants_hist(&self, n: usize) -> bool {
        wants_hist(n, self.binned.d, self.binned.total_bins)
    }

    fn build_hist(&mut self, rows: &[u32]) -> Hist {
        let b = self.binned;
        let mut h = match self.pool.pop() {
            Some(mut h) => {
                h.sum.fill(0.0);
                h.count.fill(0);
                h
            }
            None => Hist {
                sum: vec![0.0; b.total_bins],
                count: vec![0; b.total_bins],
            },
        };
        for &r in rows {
            let r = r as usize;
            let gv = self.g[r];
            let row = &b.bins[r * b.d..(r + 1) * b.d];
            for (f, &bin) in row.iter().enumerate() {
                let k = b.offsets[f] + bin as usize;
                h.sum[k] += gv;
                h.count[k] += 1;
            }
        }
        h
    }

    fn leaf(&mut self, rows: &[u32], sum: f64) -> TreeNode {
        let value = sum / (rows.len() as f64 + self.params.l2);
        if let Some(out) = self.leaf_out.as_deref_mut() {
            for &r in rows {
                out[r as usize] = value;
            }
        }
        TreeNode::Leaf {
            value,
            count: rows.len(),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.binned.d;
        let frac = self.params.feature_frac;
        match self.rng.as_deref_mut() {
            Some(rng) if frac < 1.0 => {
                let k = ((frac * d as f64).round() as usize).clamp(1, d);
                let mut f = sample(rng, d, k).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn node(&mut self, rows: &mut [u32], depth: usize, hist: Option<Hist>) -> TreeNode {
        let n = rows.len();
        let (sum, sq) = rows.iter().fold((0.0, 0.0), |(s, q), &r| {
            let v = self.g[r as usize];
            (s + v, q + v * v)
        });
        let p = self.params;
        if depth >= p.max_depth || n < 2 * p.min_leaf.max(1) || sq == 0.0 {
            return self.leaf(rows, sum);
        }
        let features = self.candidate_features();
        let parent = sum * sum / (n as f64 + p.l2);
        let best = if p.random_thresholds {
            self.search_random(rows, &features, sum, parent)
        } else if let Some(h) = &hist {
            self.search_hist(h, n, &features, sum, parent)
        } else {
            self.search_sorted(rows, &features, sum, parent)
        };
        let best = match best {
            Some(c) if c.gain > 1e-12 * sq => c,
            _ => {
                self.pool.extend(hist);
                return self.leaf(rows, sum);
            }
        };

        // stable partition: left rows keep their order, then right rows
        let b = self.binned;
        self.scratch.clear();
        let mut nl = 0;
        for i in 0..n {
            let r = rows[i];
            let left = match (p.random_thresholds, self.raw) {
                (true, Some(raw)) => raw.get(r as usize, best.feature) <= best.threshold,
                _ => b.bin(r as usize, best.feature) <= best.bin,
            };
            if left {
                rows[nl] = r;
                nl += 1;
            } else {
                self.scratch.push(r);
            }
        }
        rows[nl..].copy_from_slice(&self.scratch);
        let (lrows, rrows) = rows.split_at_mut(nl);

        let (lh, rh) = match hist {
            Some(parent_hist) if self.wants_hist(lrows.len()) || self.wants_hist(rrows.len()) => {
                let (small, small_is_left) = if lrows.len() <= rrows.len() {
                    (&*lrows, true)
                } else {
                    (&*rrows, false)
                };
                let sh = self.build_hist(small);
                let mut big = parent_hist;
                for (a, b) in big.sum.iter_mut().zip(&sh.sum) {
                    *a -= b;
                }
                for (a, b) in big.count.iter_mut().zip(&sh.count) {
                    *a -= b;
                }
                let (d, total) = (self.binned.d, self.binned.total_bins);
                let pool = &mut self.pool;
                let mut keep = |h: Hist, len: usize| {
                    if wants_hist(len, d, total) {
                        Some(h)
                    } else {
                        pool.push(h);
                        None
                    }
                };
                if small_is_left {
                    (keep(sh, lrows.len()), keep(big, rrows.len()))
                } else {
                    (keep(big, lrows.len()), keep(sh, rrows.len()))
                }
            }
            other => {
                self.pool.extend(other);
                (None, None)
            }
        };
        let left = self.node(lrows, depth + 1, lh);
        let right = self.node(rrows, depth + 1, rh);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain: best.gain,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn gain(&self, gl: f64, nl: usize, g: f64, n: usize, parent: f64) -> f64 {
        let l2 = self.params.l2;
        let gr = g - gl;
        gl * gl / (nl as f64 + l2) + gr * gr / ((n - nl) as f64 + l2) - parent
    }

    fn search_hist(&self, h: &Hist, n: usize, features: &[usize], sum: f64, parent: f64) -> Option<Candidate> {
        let b = self.binned;
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        for &f in features {
            let off = b.offsets[f];
            let nb = b.n_bins(f);
            let (mut gl, mut nl) = (0.0, 0usize);
            for bin in 0..nb - 1 {
                let c = h.count[off + bin] as usize;
                if c == 0 {
                    continue;
                }
                gl += h.sum[off + bin];
                nl += c;
                if nl < min_leaf {
                    continue;
                }
                if n - nl < min_leaf {
                    break;
                }
                let gain = self.gain(gl, nl, sum, n, parent);
                if best.is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        feature: f,
                        bin,
                        threshold: b.thresholds[f][bin],
                        gain,
                    });
                }
            }
        }
        best
    }

    fn search_sorted(&mut self, rows: &[u32], features: &[usize], sum: f64, parent: f64) -> Option<Candidate> {
        let b = self.binned;
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        let mut pairs = std::mem::take(&mut self.pairs);
        for &f in features {
            pairs.clear();
            // (bin, position) keys: an unstable sort then matches a stable one
            pairs.extend(
                rows.iter()
                    .enumerate()
                    .map(|(i, &r)| (((b.bin(r as usize, f) as u64) << 32) | i as u64, self.g[r as usize])),
            );
            pairs.sort_unstable_by_key(|p| p.0);
            let (mut gl, mut nl) = (0.0, 0usize);
            for i in 0..n - 1 {
                gl += pairs[i].1;
                nl += 1;
                if pairs[i].0 >> 32 == pairs[i + 1].0 >> 32 || nl < min_leaf {
                    continue;
                }
                if n - nl < min_leaf {
                    break;
                }
                let gain = self.gain(gl, nl, sum, n, parent);
                if best.is_none_or(|c| gain > c.gain) {
                    let bin = (pairs[i].0 >> 32) as usize;
                    best = Some(Candidate {
                        feature: f,
                        bin,
                        threshold: b.thresholds[f][bin],
                        gain,
                    });
                }
            }
        }
        self.pairs = pairs;
        best
    }

    fn search_random(&mut self, rows: &[u32], features: &[usize], sum: f64, parent: f64) -> Option<Candidate> {
        let raw = self.raw.expect("random thresholds need raw features");
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        for &f in features {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in rows {
                let v = raw.get(r as usize, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(hi > lo) {
                continue;
            }
            let rng = self.rng.as_deref_mut().expect("random thresholds need a generator");
            let t = rng.random_range(lo..hi);
            let (mut gl, mut nl) = (0.0, 0usize);
            for &r in rows {
                if raw.get(r as usize, f) <= t {
                    gl += self.g[r as usize];
                    nl += 1;
                }
            }
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let gain = self.gain(gl, nl, sum, n, parent);
            if best.is_none_or(|c| gain > c.gain) {
                best = Some(Candidate {
                    feature: f,
                    bin: 0,
                    threshold: t,
                    gain,
                });
            }
        }
        best
    }
}

pub(crate) fn check_xy(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in training data"));
    }
    Ok(())
}

/// Row order sorted by feature values, then target, so that the tree does
/// not depend on the input row order.
pub(crate) fn canonical_rows(x: &Matrix, y: &[f64]) -> Vec<u32> {
    let mut rows: Vec<u32> = (0..x.rows() as u32).collect();
    rows.sort_by(|&a, &b| {
        let (ra, rb) = (x.row(a as usize), x.row(b as usize));
        ra.iter()
            .zip(rb)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a as usize].total_cmp(&y[b as usize]))
    });
    rows
}

/// Exact greedy regression tree: every midpoint between adjacent distinct
/// values is a candidate threshold.
pub fn fit_tree(x: &Matrix, y: &[f64], depth: usize, min_leaf: usize, l2: f64) -> Result<TreeNode> {
    check_xy(x, y)?;
    if min_leaf == 0 || x.rows() < min_leaf {
        return Err(Error::invalid(format!("min_leaf {min_leaf} with {} rows", x.rows())));
    }
    if !(l2 >= 0.0) {
        return Err(Error::invalid("l2 must be nonnegative"));
    }
    let binned = bin_features(x, EXACT_BINS);
    let mut rows = canonical_rows(x, y);
    Ok(Grower::new(&binned, y, GrowParams::exact(depth, min_leaf, l2)).grow(&mut rows))
}
