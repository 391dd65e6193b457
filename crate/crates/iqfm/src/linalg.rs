//! Dense symmetric/Hermitian eigensolver: Householder tridiagonalization
//! followed by implicit-shift QL.
//!
//! The spin-chain Hamiltonians used here contain only I/X/Z Pauli letters, so
//! their matrices are real symmetric; that is the fast path. A complex
//! Hermitian `H = R + iS` is handled by embedding it as the real symmetric
//! `[[R, -S], [S, R]]` (each eigenvalue doubles; complex eigenvectors are
//! recovered as `x + iy` from embedded vectors `(x; y)`).
//!
//! Everything is deterministic: no randomized pivoting, ties broken by index,
//! so repeated calls yield bitwise-identical output — which the dataset
//! builders rely on for reproducible ground states.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_QL_ITERS: usize = 60;

/// Full eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Symmetry is the caller's contract; only the lower
/// triangle is read.
pub fn eigh_symmetric(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = check_square(a)?;
    let mut q = to_flat(a);
    let (mut d, mut e) = tridiagonalize(&mut q, n);
    ql_implicit(&mut d, &mut e, n, Some(&mut q))?;
    let order = sort_order(&d);
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vectors = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, new_col]] = q[r * n + old_col];
        }
    }
    Ok((values, vectors))
}

/// Lowest eigenpair of a real symmetric matrix.
///
/// Cheaper than [`eigh_symmetric`] for one pair: the QL sweep runs without
/// eigenvector accumulation and the ground vector comes from inverse
/// iteration on the tridiagonal form. Falls back to the full solve in the
/// (never observed) event inverse iteration stalls.
pub fn lowest_eigenpair_symmetric(a: &Array2<f64>) -> Result<(f64, Array1<f64>)> {
    let n = check_square(a)?;
    if n == 1 {
        return Ok((a[[0, 0]], Array1::from_elem(1, 1.0)));
    }
    let mut q = to_flat(a);
    let (d, e) = tridiagonalize(&mut q, n);
    let (mut dv, mut ev) = (d.clone(), e.clone());
    ql_implicit(&mut dv, &mut ev, n, None)?;
    let lambda = dv.iter().cloned().fold(f64::INFINITY, f64::min);
    if let Some(t_vec) = inverse_iteration(&d, &e, n, lambda) {
        // back-transform: v = Q * t_vec
        let mut v = Array1::zeros(n);
        for r in 0..n {
            let row = &q[r * n..(r + 1) * n];
            v[r] = row.iter().zip(&t_vec).map(|(qq, t)| qq * t).sum::<f64>();
        }
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v.mapv_inplace(|x| x / norm);
            // sanity: residual against the original matrix
            let resid = residual_norm(a, lambda, &v);
            let scale = frobenius(a).max(1.0);
            if resid <= 1e-9 * scale {
                return Ok((lambda, v));
            }
        }
    }
    let (values, vectors) = eigh_symmetric(a)?;
    Ok((values[0], vectors.column(0).to_owned()))
}

/// Full eigendecomposition of a complex Hermitian matrix via the real
/// symmetric embedding. Intended for moderate dimensions (oracles, Gram
/// matrices); the experiment pipelines stay on the real path.
pub fn eigh_hermitian(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            context: "hermitian eigensolver input",
            expected: n,
            actual: a.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::Dimension {
            context: "hermitian eigensolver input",
            expected: 1,
            actual: 0,
        });
    }
    let mut m = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let v = a[[i, j]];
            m[[i, j]] = v.re;
            m[[i + n, j + n]] = v.re;
            m[[i, j + n]] = -v.im;
            m[[i + n, j]] = v.im;
        }
    }
    let (values2, vectors2) = eigh_symmetric(&m)?;
    // Each eigenvalue of `a` appears twice; peel off one complex eigenvector
    // per pair, orthogonalizing inside degenerate clusters.
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut vectors: Vec<Array1<Complex64>> = Vec::with_capacity(n);
    for k in 0..2 * n {
        if vectors.len() == n {
            break;
        }
        let lam = values2[k];
        let mut v: Array1<Complex64> = Array1::from_iter(
            (0..n).map(|r| Complex64::new(vectors2[[r, k]], vectors2[[r + n, k]])),
        );
        // remove components along already-accepted vectors of (numerically)
        // the same eigenvalue
        for (prev_lam, prev_v) in values.iter().zip(&vectors) {
            if (lam - prev_lam).abs() <= 1e-8 * (1.0 + lam.abs()) {
                let overlap: Complex64 =
                    prev_v.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in v.iter_mut().zip(prev_v) {
                    *x -= overlap * p;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.mapv_inplace(|x| x / norm);
            values.push(lam);
            vectors.push(v);
        }
    }
    if vectors.len() != n {
        return Err(Error::Numeric(
            "hermitian embedding produced a deficient eigenbasis".into(),
        ));
    }
    let mut out = Array2::zeros((n, n));
    for (c, v) in vectors.iter().enumerate() {
        for r in 0..n {
            out[[r, c]] = v[r];
        }
    }
    Ok((Array1::from_vec(values), out))
}

/// ‖A v − λ v‖₂.
pub fn residual_norm(a: &Array2<f64>, lambda: f64, v: &Array1<f64>) -> f64 {
    let av = a.dot(v);
    (&av - &(v * lambda)).mapv(|x| x * x).sum().sqrt()
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_square(a: &Array2<f64>) -> Result<usize> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension {
            context: "symmetric eigensolver input",
            expected: n.max(1),
            actual: a.ncols(),
        });
    }
    Ok(n)
}

fn to_flat(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a[[i, j]];
        }
    }
    out
}

fn sort_order(d: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    order
}

/// Householder reduction of a symmetric matrix (flat row-major `a`, reading
/// the lower triangle) to tridiagonal form. On return `a` holds the
/// accumulated orthogonal `Q` with `Qᵀ A Q = T`; returns `(diagonal,
/// subdiagonal)` where `subdiag[i]` couples rows `i` and `i+1`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    // accumulate the product of Householder reflectors into `a`
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
    // shift subdiagonal down so e[i] couples (i, i+1)
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    e.truncate(n.saturating_sub(1));
    (d, e)
}

fn pythag(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Implicit-shift QL on a tridiagonal `(d, e)`; eigenvalues land in `d`.
/// When `z` is given (flat n×n), it is updated with the rotations so its
/// columns become eigenvectors of the original matrix.
fn ql_implicit(d: &mut [f64], e: &mut [f64], n: usize, mut z: Option<&mut [f64]>) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    let mut e = {
        let mut ext = e.to_vec();
        ext.push(0.0);
        ext
    };
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(Error::EigenNoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[k * n + i + 1];
                        zm[k * n + i + 1] = s * zm[k * n + i] + c * f;
                        zm[k * n + i] = c * zm[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Inverse iteration on the tridiagonal `(d, e)` near eigenvalue `lambda`.
/// Deterministic start vector; returns a unit vector or `None` on breakdown.
fn inverse_iteration(d: &[f64], e: &[f64], n: usize, lambda: f64) -> Option<Vec<f64>> {
    // fixed quasi-random start so degenerate ground spaces resolve identically
    // on every call
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.754_877_666_246_692_9;
            (t - t.floor()) - 0.5 + 1e-3
        })
        .collect();
    normalize(&mut x)?;
    let scale: f64 = d
        .iter()
        .map(|v| v.abs())
        .chain(e.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(1.0);
    for _ in 0..4 {
        x = solve_shifted_tridiagonal(d, e, n, lambda, &x, scale)?;
        normalize(&mut x)?;
    }
    // residual on the tridiagonal form
    let mut resid = 0.0f64;
    for i in 0..n {
        let mut t = (d[i] - lambda) * x[i];
        if i > 0 {
            t += e[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            t += e[i] * x[i + 1];
        }
        resid += t * t;
    }
    if resid.sqrt() <= 1e-9 * scale {
        Some(x)
    } else {
        None
    }
}

fn normalize(x: &mut [f64]) -> Option<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    for v in x.iter_mut() {
        *v /= norm;
    }
    Some(())
}

/// Solve `(T - λI) y = b` for tridiagonal `T` with partial pivoting
/// (two-band elimination). Near-singular pivots are nudged, which is exactly
/// what inverse iteration wants.
fn solve_shifted_tridiagonal(
    d: &[f64],
    e: &[f64],
    n: usize,
    lambda: f64,
    b: &[f64],
    scale: f64,
) -> Option<Vec<f64>> {
    let tiny = f64::EPSILON * scale;
    let mut diag: Vec<f64> = d.iter().map(|&v| v - lambda).collect();
    let mut upper = vec![0.0; n]; // first superdiagonal after elimination
    let mut upper2 = vec![0.0; n]; // second superdiagonal (from row swaps)
    for i in 0..n.saturating_sub(1) {
        upper[i] = e[i];
    }
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        let sub = e[i];
        if diag[i].abs() >= sub.abs() {
            let pivot = if diag[i].abs() < tiny {
                tiny.copysign(if diag[i] == 0.0 { 1.0 } else { diag[i] })
            } else {
                diag[i]
            };
            let m = sub / pivot;
            diag[i] = pivot;
            diag[i + 1] -= m * upper[i];
            if i + 2 < n {
                // upper2[i] is zero here, nothing else to update
            }
            rhs[i + 1] -= m * rhs[i];
        } else {
            // swap rows i and i+1
            let m = diag[i] / sub;
            diag[i] = sub;
            let old_upper = upper[i];
            upper[i] = diag[i + 1];
            diag[i + 1] = old_upper - m * upper[i];
            if i + 2 < n {
                upper2[i] = upper[i + 1];
                upper[i + 1] = -m * upper2[i];
            }
            rhs.swap(i, i + 1);
            rhs[i + 1] -= m * rhs[i];
        }
    }
    if diag[n - 1].abs() < tiny {
        diag[n - 1] = tiny.copysign(if diag[n - 1] == 0.0 { 1.0 } else { diag[n - 1] });
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut t = rhs[i];
        if i + 1 < n {
            t -= upper[i] * y[i + 1];
        }
        if i + 2 < n {
            t -= upper2[i] * y[i + 2];
        }
        y[i] = t / diag[i];
        if !y[i].is_finite() {
            return None;
        }
    }
    Some(y)
}
