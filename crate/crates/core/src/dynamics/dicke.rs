//! Twisted collective spin of the two ensembles and the resonant
//! Tavis-Cummings reduction of the triple-cavity array.
//!
//! With `S^+- = J_L^+- - J_R^+-` and `S^z = J_L^z + J_R^z` the states
//! `|s, -s>` cannot emit into the antisymmetric end-cavity mode
//! `a_- = (a_L - a_R) / sqrt(2)` and are the weak-coupling limit of the
//! trapped states. The atomic space is the product of two spin-`M/2`
//! ladders; index `n_L (M + 1) + n_R` holds `n_L` and `n_R` excitations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::DynamicsError;
use crate::bic::StateVector;
use crate::model::{enumerate_sector, BasisState, ModelParams};
use crate::operators::{build_atomic_lowering, build_end_annihilation, Side};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    pub s: usize,
    pub m_s: i32,
    /// Real amplitudes over the `(M + 1)^2` atomic product basis.
    pub vector: Vec<f64>,
}

fn atomic_index(m: usize, n_left: usize, n_right: usize) -> usize {
    n_left * (m + 1) + n_right
}

/// Twisted `S^-` on the atomic product space.
pub fn twisted_lowering(m: usize) -> DMatrix<f64> {
    let d = (m + 1) * (m + 1);
    let mut s = DMatrix::zeros(d, d);
    let amp = |n: usize| ((n * (m - n + 1)) as f64).sqrt();
    for nl in 0..=m {
        for nr in 0..=m {
            let src = atomic_index(m, nl, nr);
            if nl > 0 {
                s[(atomic_index(m, nl - 1, nr), src)] += amp(nl);
            }
            if nr > 0 {
                s[(atomic_index(m, nl, nr - 1), src)] -= amp(nr);
            }
        }
    }
    s
}

/// `S^z` on the atomic product space.
pub fn twisted_z(m: usize) -> DMatrix<f64> {
    let d = (m + 1) * (m + 1);
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            (i / (m + 1) + i % (m + 1)) as f64 - m as f64
        } else {
            0.0
        }
    })
}

/// `S^2 = S^+ S^- + S^z (S^z - 1)`.
pub fn twisted_casimir(m: usize) -> DMatrix<f64> {
    let lower = twisted_lowering(m);
    let z = twisted_z(m);
    lower.transpose() * &lower + &z * &z - &z
}

const PHASE_TOL: f64 = 1e-9;

/// Common eigenbasis of `S^2` and `S^z`, sorted by `s` then `m_s`.
///
/// `S^2` is diagonalized first; `S^z` is then diagonalized inside each
/// `S^2` eigenspace. Each vector's sign makes its first largest-modulus
/// amplitude positive.
pub fn dicke_basis(p: &ModelParams) -> Vec<DickeState> {
    let m = p.m_atoms;
    let casimir = twisted_casimir(m).symmetric_eigen();
    let z = twisted_z(m);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for (i, &e) in casimir.eigenvalues.iter().enumerate() {
        let s = ((-1.0 + (1.0 + 4.0 * e.max(0.0)).sqrt()) / 2.0).round() as usize;
        groups[s.min(m)].push(i);
    }
    let mut out = Vec::with_capacity((m + 1) * (m + 1));
    for (s, cols) in groups.iter().enumerate() {
        let v = DMatrix::from_fn(z.nrows(), cols.len(), |r, c| casimir.eigenvectors[(r, cols[c])]);
        let inner = (v.transpose() * &z * &v).symmetric_eigen();
        for (j, &mz) in inner.eigenvalues.iter().enumerate() {
            let m_s = mz.round() as i32;
            let mut vec: Vec<f64> = (&v * inner.eigenvectors.column(j)).iter().copied().collect();
            // S^z is diagonal: amplitudes off the m_s level are roundoff
            for (i, x) in vec.iter_mut().enumerate() {
                if z[(i, i)].round() as i32 != m_s {
                    *x = 0.0;
                }
            }
            let biggest = vec.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let lead = vec
                .iter()
                .copied()
                .find(|x| x.abs() >= biggest - PHASE_TOL)
                .unwrap_or(1.0);
            if lead < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            out.push(DickeState { s, m_s, vector: vec });
        }
    }
    out.sort_by_key(|d| (d.s, d.m_s));
    out
}

/// `p_s = sum_{m_s} |<s, m_s|psi>|^2` for `s = 0..=M`.
pub fn steady_state_prediction(p: &ModelParams, psi_atomic: &[C64]) -> Result<Vec<(usize, f64)>, DynamicsError> {
    let dim = (p.m_atoms + 1) * (p.m_atoms + 1);
    if psi_atomic.len() != dim {
        return Err(DynamicsError::DimensionMismatch {
            expected: dim,
            got: psi_atomic.len(),
        });
    }
    let mut weights = vec![0.0; p.m_atoms + 1];
    for d in dicke_basis(p) {
        let overlap: C64 = d.vector.iter().zip(psi_atomic).map(|(a, b)| b * *a).sum();
        weights[d.s] += overlap.norm_sqr();
    }
    Ok(weights.into_iter().enumerate().collect())
}

/// Atomic product vector with `n_left` and `n_right` excitations.
pub fn atomic_basis_vector(p: &ModelParams, n_left: usize, n_right: usize) -> Vec<C64> {
    let m = p.m_atoms;
    let mut v = vec![C64::default(); (m + 1) * (m + 1)];
    v[atomic_index(m, n_left, n_right)] = C64::new(1.0, 0.0);
    v
}

/// `|n_left, n_right>` with every cavity empty, as a state of sector
/// `n_left + n_right`.
pub fn atomic_product_state(p: &ModelParams, n_left: usize, n_right: usize) -> Result<StateVector, DynamicsError> {
    let k = n_left + n_right;
    p.validate()?;
    p.require_cutoff(k)?;
    let sector = Arc::new(enumerate_sector(p, k));
    let mut s = BasisState::vacuum(p.n_chain);
    s.excited_left = n_left;
    s.excited_right = n_right;
    let idx = sector.index_of(&s).ok_or(DynamicsError::DimensionMismatch {
        expected: p.m_atoms,
        got: n_left.max(n_right),
    })?;
    let mut amps = vec![C64::default(); sector.len()];
    amps[idx] = C64::new(1.0, 0.0);
    Ok(StateVector::new(sector, amps))
}

/// Splits an atomic vector (cavities empty) into its unnormalized
/// components in sectors `0..=2M`.
pub fn embed_atomic_state(p: &ModelParams, psi_atomic: &[C64]) -> Result<Vec<StateVector>, DynamicsError> {
    let m = p.m_atoms;
    if psi_atomic.len() != (m + 1) * (m + 1) {
        return Err(DynamicsError::DimensionMismatch {
            expected: (m + 1) * (m + 1),
            got: psi_atomic.len(),
        });
    }
    let mut parts: Vec<Option<StateVector>> = vec![None; 2 * m + 1];
    for nl in 0..=m {
        for nr in 0..=m {
            let amp = psi_atomic[atomic_index(m, nl, nr)];
            if amp == C64::default() {
                continue;
            }
            let basis = atomic_product_state(p, nl, nr)?;
            let k = nl + nr;
            let idx = basis.amplitudes.iter().position(|a| a.re == 1.0).expect("basis vector");
            let part = parts[k].get_or_insert_with(|| {
                let len = basis.sector.len();
                StateVector::new(basis.sector.clone(), vec![C64::default(); len])
            });
            part.amplitudes[idx] += amp;
        }
    }
    Ok(parts.into_iter().flatten().collect())
}

/// `H_1' = omega_a S^z + omega_c a_-^dag a_- + (g / sqrt 2)(S^- a_-^dag + h.c.)`
/// on a sector of the triple-cavity array, in the local cavity basis.
pub fn effective_tc_hamiltonian(
    p: &ModelParams,
    sector: &crate::model::SectorBasis,
) -> Result<SparseOperator, DynamicsError> {
    if p.n_chain != 2 {
        return Err(DynamicsError::UnsupportedChain(p.n_chain));
    }
    let m = p.m_atoms as f64;
    let diag = SparseOperator::from_triplets(
        sector.len(),
        sector.len(),
        sector.states().iter().enumerate().map(|(i, s)| {
            let sz = (s.excited_left + s.excited_right) as f64 - m;
            (i, i, C64::new(p.omega_a * sz, 0.0))
        }),
    );
    if sector.k() == 0 {
        return Ok(diag);
    }
    let lower = enumerate_sector(p, sector.k() - 1);
    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let a_minus = build_end_annihilation(p, sector, &lower, Side::Left)?
        .sub(&build_end_annihilation(p, sector, &lower, Side::Right)?)
        .scale(half);
    let s_minus = build_atomic_lowering(p, sector, &lower, Side::Left)?.sub(&build_atomic_lowering(
        p,
        sector,
        &lower,
        Side::Right,
    )?);
    let photons = a_minus.adjoint().matmul(&a_minus).scale(C64::new(p.omega_c, 0.0));
    let emit = a_minus.adjoint().matmul(&s_minus).scale(C64::new(p.g, 0.0) * half);
    Ok(diag.add(&photons).add(&emit).add(&emit.adjoint()))
}

/// Dense `S^2` lifted to a sector (identity on the photons).
pub fn sector_casimir(p: &ModelParams, sector: &crate::model::SectorBasis) -> DMatrix<C64> {
    let m = p.m_atoms;
    let casimir = twisted_casimir(m);
    let n = sector.len();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (sector.state(i), sector.state(j));
        let same_photons =
            a.photons_left == b.photons_left && a.photons_right == b.photons_right && a.photons_mid == b.photons_mid;
        if !same_photons {
            return C64::default();
        }
        let r = atomic_index(m, a.excited_left, a.excited_right);
        let c = atomic_index(m, b.excited_left, b.excited_right);
        C64::new(casimir[(r, c)], 0.0)
    })
}

/// Expresses a Dicke state as an atomic vector.
pub fn dicke_vector(d: &DickeState) -> Vec<C64> {
    d.vector.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// `|<a|b>|` for real atomic vectors.
pub fn atomic_overlap(a: &[f64], b: &[f64]) -> f64 {
    DVector::from_column_slice(a).dot(&DVector::from_column_slice(b)).abs()
}
