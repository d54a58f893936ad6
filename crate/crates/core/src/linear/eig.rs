//! Dense complex eigensolver for small non-Hermitian matrices.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift QR
//! iteration with Wilkinson shifts and Givens rotations. Eigenvectors come
//! from back substitution on the Schur form.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("QR iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Eigenvalues and unit eigenvectors (as columns), ordered by imaginary part
/// and then by real part, both ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

/// Schur decomposition `A = Z T Z^dag` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: DMatrix<C64>,
    pub z: DMatrix<C64>,
}

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, C64::default());
    }
    if na == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn rotate_rows(m: &mut DMatrix<C64>, i: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let (x, y) = (m[(i, j)], m[(i + 1, j)]);
        m[(i, j)] = x * c + s * y;
        m[(i + 1, j)] = -s.conj() * x + y * c;
    }
}

// Right-multiplies columns i, i+1 by G^dag.
fn rotate_cols(m: &mut DMatrix<C64>, i: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for r in rows {
        let (x, y) = (m[(r, i)], m[(r, i + 1)]);
        m[(r, i)] = x * c + y * s.conj();
        m[(r, i + 1)] = -s * x + y * c;
    }
}

fn hessenberg(a: &mut DMatrix<C64>, z: &mut DMatrix<C64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x;
        v[0] += phase * norm;
        let vnorm = v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|e| *e /= vnorm);

        // A <- P A P with P = I - 2 v v^dag acting on indices k+1..n
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * a[(k + 1 + t, j)]).sum();
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= *vt * dot * 2.0;
            }
        }
        for mat in [&mut *a, &mut *z] {
            for i in 0..n {
                let dot: C64 = v.iter().enumerate().map(|(t, vt)| mat[(i, k + 1 + t)] * vt).sum();
                for (t, vt) in v.iter().enumerate() {
                    mat[(i, k + 1 + t)] -= dot * vt.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = C64::default();
        }
    }
}

fn wilkinson_shift(h: &DMatrix<C64>, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

pub fn schur(a: &DMatrix<C64>) -> Result<Schur, EigError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(EigError::NotSquare(a.nrows(), a.ncols()));
    }
    let mut h = a.clone();
    let mut z = DMatrix::<C64>::identity(n, n);
    if n == 0 {
        return Ok(Schur { t: h, z });
    }
    hessenberg(&mut h, &mut z);

    let eps = f64::EPSILON;
    let scale = h.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0;
    let max_iter = MAX_SWEEPS_PER_EIGENVALUE * n;
    while hi > 0 {
        // deflate negligible subdiagonals
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= eps * diag.max(eps * scale) {
                h[(lo, lo - 1)] = C64::default();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(EigError::NoConvergence(max_iter));
        }
        let mu = if iter % 11 == 0 {
            // exceptional shift
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(&h, hi)
        };
        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
            rotate_rows(&mut h, i, c, s, i..n);
            h[(i + 1, i)] = C64::default();
            rots.push((i, c, s));
        }
        for &(i, c, s) in &rots {
            rotate_cols(&mut h, i, c, s, 0..(i + 2).min(hi + 1));
            rotate_cols(&mut z, i, c, s, 0..n);
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::default();
        }
    }
    Ok(Schur { t: h, z })
}

/// Full eigendecomposition of a square complex matrix.
pub fn eigen(a: &DMatrix<C64>) -> Result<Eigen, EigError> {
    let Schur { t, z } = schur(a)?;
    let n = t.nrows();
    let tnorm = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;

    let mut pairs: Vec<(C64, Vec<C64>)> = (0..n)
        .map(|k| {
            let lam = t[(k, k)];
            let mut y = vec![C64::default(); n];
            y[k] = C64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let rhs: C64 = (j + 1..=k).map(|l| t[(j, l)] * y[l]).sum();
                let mut denom = t[(j, j)] - lam;
                if denom.norm() < small {
                    denom = C64::new(small, 0.0);
                }
                y[j] = -rhs / denom;
            }
            let mut v: Vec<C64> = (0..n).map(|i| (0..=k).map(|l| z[(i, l)] * y[l]).sum()).collect();
            let norm = v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|e| *e /= norm);
            (lam, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.im.total_cmp(&b.0.im).then(a.0.re.total_cmp(&b.0.re)));

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(Eigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn schur_reconstructs() {
        for n in 1..9 {
            let a = random_matrix(n, n as u64);
            let s = schur(&a).unwrap();
            let back = &s.z * &s.t * s.z.adjoint();
            assert!((back - &a).norm() < 1e-12 * a.norm().max(1.0));
            assert!((s.z.adjoint() * &s.z - DMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        for seed in 0..20 {
            let a = random_matrix(6, 100 + seed);
            let e = eigen(&a).unwrap();
            for (k, lam) in e.values.iter().enumerate() {
                let v = e.vectors.column(k).into_owned();
                let r = &a * &v - v * *lam;
                assert!(r.norm() < 1e-11, "seed {seed}: residual {}", r.norm());
            }
        }
    }

    #[test]
    fn matches_nalgebra_schur() {
        let a = random_matrix(5, 42);
        let ours = eigen(&a).unwrap().values;
        let mut theirs: Vec<C64> = nalgebra::Schur::new(a).eigenvalues().unwrap().iter().copied().collect();
        theirs.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_and_triangular_inputs() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, -1.0),
            C64::new(2.0, 0.0),
            C64::new(1.0, -1.0),
        ]));
        let e = eigen(&d).unwrap();
        assert_eq!(e.values[0], C64::new(1.0, -1.0));
        assert_eq!(e.values[2], C64::new(2.0, 0.0));
        // Jordan-like block still yields finite vectors
        let mut j = DMatrix::<C64>::identity(3, 3);
        j[(0, 1)] = C64::new(1.0, 0.0);
        let e = eigen(&j).unwrap();
        assert!(e.vectors.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            eigen(&DMatrix::<C64>::zeros(2, 3)),
            Err(EigError::NotSquare(2, 3))
        ));
    }
}
