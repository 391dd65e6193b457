//! Dual SVM on a precomputed kernel, solved by sequential minimal
//! optimization (SMO), with the regularization strength chosen by 5-fold
//! cross-validation over a fixed 9-value grid.
//!
//! The solver maximizes `Σλ_i − ½ Σ_ij λ_i λ_j y_i y_j K_ij` under
//! `0 ≤ λ_i ≤ α` and `Σ λ_i y_i = 0`, scanning candidate pairs in a fixed
//! order (largest error gap first, ties to the lowest index) so repeated
//! runs are identical. Shot-estimated kernels are frequently indefinite;
//! before training, negative eigenvalues are clipped to zero with a warning,
//! and a matrix that somehow stays non-PSD afterwards is a hard error.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::eigh_symmetric;
use crate::spinchain::write_bytes_atomic;

/// Regularization grid searched by cross-validation: 10^−4 … 10^4.
pub const ALPHA_GRID: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

/// KKT slack allowed while optimizing; comfortably inside the 1e-3 contract.
const SMO_TOL: f64 = 1e-5;
/// Smallest multiplier change counted as progress.
const SMO_EPS: f64 = 1e-12;
/// Outer scan passes before the solver gives up.
const MAX_PASSES: usize = 10_000;

/// Trained kernel classifier over ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Box constraint chosen by cross-validation.
    pub alpha: f64,
    /// `λ_i y_i` per training point; zero for non-support points.
    pub coeffs: Vec<f64>,
    pub bias: f64,
    /// Positions of the support vectors among the training points.
    pub support_indices: Vec<usize>,
    /// Gram row behind each training position (0..n unless the caller
    /// re-maps excluded samples).
    pub train_indices: Vec<usize>,
    /// Mean cross-validation accuracy per [`ALPHA_GRID`] entry.
    pub cv_accuracy: Vec<f64>,
    /// Whether the kernel needed eigenvalue clipping to become PSD.
    pub eigen_clipped: bool,
}

impl SvmModel {
    /// `Σ_i coeffs_i · k(x_i, t) + bias` for a kernel row over the training
    /// points.
    pub fn decision(&self, kernel_row: &[f64]) -> Result<f64> {
        if kernel_row.len() != self.coeffs.len() {
            return Err(Error::Dimension {
                context: "kernel row",
                expected: self.coeffs.len(),
                actual: kernel_row.len(),
            });
        }
        let dot: f64 = self.coeffs.iter().zip(kernel_row).map(|(c, k)| c * k).sum();
        Ok(dot + self.bias)
    }

    /// ±1 prediction: strictly positive decision value ⇒ +1.
    pub fn predict(&self, kernel_row: &[f64]) -> Result<f64> {
        Ok(if self.decision(kernel_row)? > 0.0 { 1.0 } else { -1.0 })
    }

    fn support_threshold(alpha: f64) -> f64 {
        1e-12 * alpha.max(1.0)
    }
}

struct SmoSolution {
    lambdas: Vec<f64>,
    bias: f64,
}

/// `Σλ − ½ ΣΣ λλyyK`, the quantity SMO maximizes.
fn dual_objective(gram: &Array2<f64>, labels: &[f64], lambdas: &[f64]) -> f64 {
    let n = labels.len();
    let mut value: f64 = lambdas.iter().sum();
    for i in 0..n {
        if lambdas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            value -= 0.5 * lambdas[i] * lambdas[j] * labels[i] * labels[j] * gram[[i, j]];
        }
    }
    value
}

struct Solver<'a> {
    gram: &'a Array2<f64>,
    labels: &'a [f64],
    c: f64,
    lambdas: Vec<f64>,
    /// `f(x_i) − y_i` under the current multipliers.
    errors: Vec<f64>,
    bias: f64,
}

impl<'a> Solver<'a> {
    fn new(gram: &'a Array2<f64>, labels: &'a [f64], c: f64) -> Self {
        Solver {
            gram,
            labels,
            c,
            lambdas: vec![0.0; labels.len()],
            errors: labels.iter().map(|y| -y).collect(),
            bias: 0.0,
        }
    }

    fn is_free(&self, i: usize) -> bool {
        self.lambdas[i] > 0.0 && self.lambdas[i] < self.c
    }

    /// Bias certified by the terminal multipliers. The running bias is only
    /// a per-step heuristic; at the end, free points pin `b` exactly, and a
    /// solution with every multiplier at a bound leaves an interval whose
    /// midpoint balances the one-sided margin conditions.
    fn calibrated_bias(&self) -> f64 {
        let n = self.labels.len();
        let bound_eps = 1e-9 * self.c.max(1.0);
        let g: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.lambdas[j] * self.labels[j] * self.gram[[i, j]])
                    .sum()
            })
            .collect();
        let free: Vec<usize> = (0..n)
            .filter(|&i| self.lambdas[i] > bound_eps && self.lambdas[i] < self.c - bound_eps)
            .collect();
        if !free.is_empty() {
            return free.iter().map(|&i| self.labels[i] - g[i]).sum::<f64>() / free.len() as f64;
        }
        // λ = 0 wants its margin ≥ 1, λ = C wants ≤ 1; with y = ±1 each
        // condition bounds b from one side.
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..n {
            let edge = if self.labels[i] > 0.0 { 1.0 - g[i] } else { -1.0 - g[i] };
            let at_zero = self.lambdas[i] <= bound_eps;
            if at_zero == (self.labels[i] > 0.0) {
                lo = lo.max(edge);
            } else {
                hi = hi.min(edge);
            }
        }
        match (lo > f64::NEG_INFINITY, hi < f64::INFINITY) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.lambdas[i1], self.lambdas[i2]);
        let (y1, y2) = (self.labels[i1], self.labels[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if lo >= hi {
            return false;
        }
        let (k11, k22, k12) = (
            self.gram[[i1, i1]],
            self.gram[[i2, i2]],
            self.gram[[i1, i2]],
        );
        let eta = k11 + k22 - 2.0 * k12;
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat or concave direction (possible after eigen-clipping):
            // compare the full dual objective at the segment ends.
            let eval = |a2_t: f64| {
                let mut trial = self.lambdas.clone();
                trial[i2] = a2_t;
                trial[i1] = a1 + s * (a2 - a2_t);
                dual_objective(self.gram, self.labels, &trial)
            };
            let (w_lo, w_hi) = (eval(lo), eval(hi));
            if w_lo > w_hi + SMO_EPS {
                lo
            } else if w_hi > w_lo + SMO_EPS {
                hi
            } else {
                return false;
            }
        };
        if (a2_new - a2).abs() < SMO_EPS * (a2_new + a2 + SMO_EPS) {
            return false;
        }
        let a1_new = (a1 + s * (a2 - a2_new)).clamp(0.0, self.c);
        let (d1, d2) = (a1_new - a1, a2_new - a2);

        // Re-anchor the bias on a point that ends up free; with both at a
        // bound, any value between the two candidates satisfies KKT.
        let b1 = self.bias - e1 - y1 * d1 * k11 - y2 * d2 * k12;
        let b2 = self.bias - e2 - y1 * d1 * k12 - y2 * d2 * k22;
        let new_bias = if a1_new > 0.0 && a1_new < self.c {
            b1
        } else if a2_new > 0.0 && a2_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let bias_delta = new_bias - self.bias;
        self.lambdas[i1] = a1_new;
        self.lambdas[i2] = a2_new;
        self.bias = new_bias;
        for k in 0..self.labels.len() {
            self.errors[k] +=
                y1 * d1 * self.gram[[i1, k]] + y2 * d2 * self.gram[[i2, k]] + bias_delta;
        }
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let (y2, a2, e2) = (self.labels[i2], self.lambdas[i2], self.errors[i2]);
        let r2 = e2 * y2;
        if !((r2 < -SMO_TOL && a2 < self.c) || (r2 > SMO_TOL && a2 > 0.0)) {
            return false;
        }
        // Largest error gap among free points first, ties to the lowest
        // index; then every free point; then everything.
        let n = self.labels.len();
        let mut best: Option<usize> = None;
        for i1 in 0..n {
            if i1 != i2 && self.is_free(i1) {
                let gap = (self.errors[i1] - e2).abs();
                if best.map_or(true, |b| gap > (self.errors[b] - e2).abs()) {
                    best = Some(i1);
                }
            }
        }
        if let Some(i1) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        for i1 in 0..n {
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        for i1 in 0..n {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn solve(mut self) -> Result<SmoSolution> {
        let n = self.labels.len();
        let mut examine_all = true;
        let mut changed = 1;
        let mut passes = 0;
        while changed > 0 || examine_all {
            passes += 1;
            if passes > MAX_PASSES {
                return Err(Error::Numeric(format!(
                    "SMO failed to converge within {MAX_PASSES} passes (α = {})",
                    self.c
                )));
            }
            changed = 0;
            for i in 0..n {
                if (examine_all || self.is_free(i)) && self.examine(i) {
                    changed += 1;
                }
            }
            if examine_all {
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
        Ok(SmoSolution {
            bias: self.calibrated_bias(),
            lambdas: self.lambdas,
        })
    }
}

fn smo_solve(gram: &Array2<f64>, labels: &[f64], c: f64) -> Result<SmoSolution> {
    Solver::new(gram, labels, c).solve()
}

/// Worst KKT violation of a trained model on its own training kernel: free
/// points must sit on the margin, zero multipliers outside it, box-bound
/// ones inside it.
pub fn kkt_violation(gram: &Array2<f64>, labels: &[f64], model: &SvmModel) -> Result<f64> {
    let lambdas: Vec<f64> = model
        .coeffs
        .iter()
        .zip(labels)
        .map(|(c, y)| c * y)
        .collect();
    Ok(kkt_of(gram, labels, &lambdas, model.bias, model.alpha))
}

fn kkt_of(gram: &Array2<f64>, labels: &[f64], lambdas: &[f64], bias: f64, c: f64) -> f64 {
    let n = labels.len();
    let bound_eps = 1e-9 * c.max(1.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        let f: f64 = (0..n)
            .map(|j| lambdas[j] * labels[j] * gram[[i, j]])
            .sum::<f64>()
            + bias;
        let margin = labels[i] * f;
        let violation = if lambdas[i] <= bound_eps {
            (1.0 - margin).max(0.0)
        } else if lambdas[i] >= c - bound_eps {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

/// Symmetrize and, if needed, clip negative eigenvalues to zero (with a
/// warning); a matrix still non-PSD afterwards is a numeric error.
fn ensure_psd(gram: &Array2<f64>) -> Result<(Array2<f64>, bool)> {
    let n = gram.nrows();
    let scale = gram.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
    let mut sym = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if (gram[[i, j]] - gram[[j, i]]).abs() > 1e-8 * scale {
                return Err(Error::Config(format!(
                    "gram matrix is not symmetric at ({i}, {j})"
                )));
            }
            sym[[i, j]] = 0.5 * (gram[[i, j]] + gram[[j, i]]);
        }
    }
    let (values, vectors) = eigh_symmetric(&sym)?;
    let tol = 1e-10 * scale;
    if values[0] >= -tol {
        return Ok((sym, false));
    }
    eprintln!(
        "warning: kernel matrix has negative eigenvalues (min {:.3e}); clipping to PSD",
        values[0]
    );
    let mut clipped = Array2::zeros((n, n));
    for m in 0..n {
        let v = values[m].max(0.0);
        if v == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = v * vectors[[i, m]];
            for j in 0..n {
                clipped[[i, j]] += vi * vectors[[j, m]];
            }
        }
    }
    let (check, _) = eigh_symmetric(&clipped)?;
    if check[0] < -tol {
        return Err(Error::Numeric(format!(
            "kernel matrix remained non-PSD after eigenvalue clipping (min {:.3e})",
            check[0]
        )));
    }
    Ok((clipped, true))
}

/// Cross-validated SVM on a precomputed kernel: every [`ALPHA_GRID`] value
/// is scored by `min(5, n)`-fold CV (folds assigned round-robin by index),
/// the best mean accuracy wins with ties going to the smaller α, and the
/// final model is refit on all points.
pub fn svm_train_cv(gram: &Array2<f64>, labels: &[f64]) -> Result<SvmModel> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::Dimension {
            context: "gram matrix",
            expected: n,
            actual: gram.ncols(),
        });
    }
    if labels.len() != n {
        return Err(Error::Dimension {
            context: "svm labels",
            expected: n,
            actual: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::Config("svm training needs at least two points".into()));
    }
    if let Some(&y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::Config(format!("svm labels must be ±1, got {y}")));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::Config("svm training needs both classes".into()));
    }

    let (kernel, eigen_clipped) = ensure_psd(gram)?;
    let folds = n.min(5);
    let mut cv_accuracy = Vec::with_capacity(ALPHA_GRID.len());
    let (mut best_alpha, mut best_acc) = (ALPHA_GRID[0], -1.0);
    for &alpha in &ALPHA_GRID {
        let mut acc_sum = 0.0;
        for fold in 0..folds {
            let train: Vec<usize> = (0..n).filter(|i| i % folds != fold).collect();
            let test: Vec<usize> = (0..n).filter(|i| i % folds == fold).collect();
            let mut sub = Array2::zeros((train.len(), train.len()));
            for (a, &i) in train.iter().enumerate() {
                for (b, &j) in train.iter().enumerate() {
                    sub[[a, b]] = kernel[[i, j]];
                }
            }
            let sub_labels: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
            let solution = smo_solve(&sub, &sub_labels, alpha)?;
            let mut correct = 0;
            for &t in &test {
                let decision: f64 = train
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| solution.lambdas[a] * sub_labels[a] * kernel[[i, t]])
                    .sum::<f64>()
                    + solution.bias;
                if (decision > 0.0) == (labels[t] > 0.0) {
                    correct += 1;
                }
            }
            acc_sum += correct as f64 / test.len() as f64;
        }
        let mean = acc_sum / folds as f64;
        cv_accuracy.push(mean);
        // Strict improvement keeps the earlier — smaller — α on ties.
        if mean > best_acc {
            best_acc = mean;
            best_alpha = alpha;
        }
    }

    let solution = smo_solve(&kernel, labels, best_alpha)?;
    let threshold = SvmModel::support_threshold(best_alpha);
    let coeffs: Vec<f64> = solution
        .lambdas
        .iter()
        .zip(labels)
        .map(|(l, y)| l * y)
        .collect();
    let support_indices: Vec<usize> = solution
        .lambdas
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(SvmModel {
        alpha: best_alpha,
        coeffs,
        bias: solution.bias,
        support_indices,
        train_indices: (0..n).collect(),
        cv_accuracy,
        eigen_clipped,
    })
}

const MAGIC: &[u8; 4] = b"IQSV";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

/// Checkpoint container, magic `IQSV`, little-endian.
///
/// ```text
/// offset  size  field
/// 0       4     magic "IQSV"
/// 4       1     version (1)
/// 5       1     flags (bit 0 = eigen-clipped)
/// 6       2     reserved (0)
/// 8       4     n_train (u32)
/// 12      4     reserved (0)
/// 16      ...   payload: f64 alpha, f64 bias, n_train × f64 coeffs,
///               9 × f64 CV accuracies, n_train × u32 gram row indices
/// ```
pub fn save_svm(model: &SvmModel, path: &Path) -> Result<()> {
    let n = model.coeffs.len();
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * (n + 11) + 4 * n);
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.push(u8::from(model.eigen_clipped));
    bytes.extend_from_slice(&0u16.to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    for v in [model.alpha, model.bias]
        .iter()
        .chain(&model.coeffs)
        .chain(&model.cv_accuracy)
    {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for &i in &model.train_indices {
        bytes.extend_from_slice(&(i as u32).to_le_bytes());
    }
    write_bytes_atomic(path, &bytes)
}

pub fn load_svm(path: &Path) -> Result<SvmModel> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: e,
    })?;
    let fail = |offset: usize, detail: String| Error::Format {
        path: display.clone(),
        offset: offset as u64,
        detail,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fail(bytes.len(), "file shorter than the 16-byte header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"IQSV\"", &bytes[0..4])));
    }
    if bytes[4] != VERSION {
        return Err(fail(4, format!("unsupported version {}", bytes[4])));
    }
    if bytes[5] > 1 {
        return Err(fail(5, format!("unknown flag bits {:#x}", bytes[5])));
    }
    let eigen_clipped = bytes[5] == 1;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;

    let expected = HEADER_LEN + 8 * (n + 2 + ALPHA_GRID.len()) + 4 * n;
    if bytes.len() < expected {
        return Err(fail(
            bytes.len(),
            format!("truncated: {} bytes, header promises {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(fail(
            expected,
            format!("{} trailing bytes after the last index", bytes.len() - expected),
        ));
    }

    let mut offset = HEADER_LEN;
    let mut next = |ctx: &str| -> Result<f64> {
        let v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(fail(offset, format!("non-finite {ctx} value {v}")));
        }
        offset += 8;
        Ok(v)
    };
    let alpha = next("alpha")?;
    let bias = next("bias")?;
    let coeffs: Vec<f64> = (0..n).map(|_| next("coefficient")).collect::<Result<_>>()?;
    let cv_accuracy: Vec<f64> = (0..ALPHA_GRID.len())
        .map(|_| next("cv accuracy"))
        .collect::<Result<_>>()?;
    let mut train_indices = Vec::with_capacity(n);
    for _ in 0..n {
        train_indices.push(u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()) as usize);
        offset += 4;
    }
    let threshold = SvmModel::support_threshold(alpha);
    let support_indices = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c.abs() > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(SvmModel {
        alpha,
        coeffs,
        bias,
        support_indices,
        train_indices,
        cv_accuracy,
        eigen_clipped,
    })
}
