//! Small dense linear-algebra kernels: Hermitian eigenvalues, conjugate
//! transpose helpers, and a matrix exponential for cross-checks.
//!
//! Eigenvalues are computed without external BLAS/LAPACK: the complex
//! Hermitian matrix `H = A + iB` is embedded in the real symmetric matrix
//! `[[A, -B], [B, A]]` (whose spectrum is that of `H`, doubled), reduced to
//! tridiagonal form by Householder reflections, and solved by implicit-shift
//! QL. Only eigenvalues are needed anywhere in the crate, which keeps this
//! self-contained and bitwise deterministic.

use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn conj_transpose(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Largest absolute deviation from Hermiticity, `max |M - M^dag|`.
pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M^dag) / 2`.
pub fn hermitian_part(m: &Array2<C64>) -> Array2<C64> {
    let mt = conj_transpose(m);
    (m + &mt).mapv(|z| 0.5 * z)
}

pub fn frobenius_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &Array2<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigenvalues: matrix not square");
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("hermitian_eigenvalues: non-finite entry".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // real symmetric embedding of the Hermitian part
    let nn = 2 * n;
    let mut a = vec![0.0f64; nn * nn];
    for i in 0..n {
        for j in 0..n {
            let h = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            a[i * nn + j] = h.re;
            a[(i + n) * nn + j + n] = h.re;
            a[i * nn + j + n] = -h.im;
            a[(i + n) * nn + j] = h.im;
        }
    }
    let mut d = vec![0.0f64; nn];
    let mut e = vec![0.0f64; nn];
    tridiagonalize(&mut a, nn, &mut d, &mut e);
    tql_eigenvalues(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("hermitian_eigenvalues: NaN eigenvalue"));
    // spectrum is doubled by the embedding; take one of each pair
    Ok(d.iter().step_by(2).copied().collect())
}

/// Householder reduction of a real symmetric matrix (row-major in `a`) to
/// tridiagonal form; diagonal in `d`, off-diagonal in `e[1..]`.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
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
                let mut fsum = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    fsum += e[j] * a[i * n + j];
                }
                let hh = fsum / (h + h);
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
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

/// Implicit-shift QL eigenvalues of a symmetric tridiagonal matrix
/// (diagonal `d`, off-diagonal `e[1..]`); overwrites `d` with eigenvalues.
fn tql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // absolute convergence floor: off-diagonals this small relative to the
    // matrix scale are negligible even when neighboring diagonals vanish
    // (common for low-rank inputs)
    let scale = d
        .iter()
        .chain(e.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = f64::EPSILON * scale;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd + floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Numerical("tql_eigenvalues: too many QL iterations".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut broke = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    broke = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if broke {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Matrix exponential by scaling-and-squaring with a Taylor series evaluated
/// to machine tolerance. Intended for well-conditioned generators (unitary
/// group elements, small test matrices), not for stiff defective matrices.
pub fn matrix_exponential(m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exponential: matrix not square");
    // crude norm for scaling
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m.mapv(|z| z / (2f64.powi(s as i32)));
    let mut term = Array2::<C64>::eye(n);
    let mut sum = Array2::<C64>::eye(n);
    for k in 1..60 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum = &sum + &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-17 {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}
