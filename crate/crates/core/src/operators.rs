//! Sparse matrix representations of the model's operators on sector bases.
//!
//! Operators that conserve the excitation number act within one sector;
//! lowering operators map sector `K` to sector `K - 1`. Raising operators are
//! obtained as adjoints of the lowering ones.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{BasisState, ModelParams, SectorBasis};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("normal mode index {k} out of range 1..={max}")]
    ModeOutOfRange { k: usize, max: usize },
    #[error("middle cavity index {n} out of range 1..={max}")]
    CavityOutOfRange { n: usize, max: usize },
    #[error("sector mismatch: expected K = {expected}, got K = {got}")]
    SectorMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];
}

/// A single-mode lowering operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lowering {
    /// `a_L` or `a_R`.
    EndPhoton(Side),
    /// `b_n` for `n` in `1..=N-1`.
    Middle(usize),
    /// Collective `J_L^-` or `J_R^-`.
    Atoms(Side),
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `sin(k n pi / N)` with exact zeros where `k n` is a multiple of `N`.
fn chain_sine(k: usize, n: usize, n_chain: usize) -> f64 {
    let j = (k * n) % (2 * n_chain);
    if j.is_multiple_of(n_chain) {
        0.0
    } else {
        (j as f64 * PI / n_chain as f64).sin()
    }
}

/// Coefficient of `b_n` in the normal mode `B_k`: `sqrt(2/N) sin(k n pi / N)`.
pub fn normal_mode_coefficient(n_chain: usize, k: usize, n: usize) -> f64 {
    (2.0 / n_chain as f64).sqrt() * chain_sine(k, n, n_chain)
}

fn check_mode(p: &ModelParams, k: usize) -> Result<(), OperatorError> {
    if k < 1 || k >= p.n_chain {
        return Err(OperatorError::ModeOutOfRange { k, max: p.n_chain - 1 });
    }
    Ok(())
}

/// End-cavity coupling to normal mode `k`: `lambda_k^L = lambda sqrt(2/N)
/// sin(k pi / N)` and `lambda_k^R = (-1)^(k+1) lambda_k^L`.
pub fn coupling_lambda(p: &ModelParams, k: usize, side: Side) -> Result<f64, OperatorError> {
    check_mode(p, k)?;
    let left = p.lambda * normal_mode_coefficient(p.n_chain, k, 1);
    Ok(match side {
        Side::Left => left,
        Side::Right if k % 2 == 1 => left,
        Side::Right => -left,
    })
}

/// `Omega_k = omega_c + 2 lambda cos(k pi / N)`.
pub fn normal_mode_frequency(p: &ModelParams, k: usize) -> Result<f64, OperatorError> {
    check_mode(p, k)?;
    Ok(p.mode_frequency(k))
}

/// Matrix of a linear map defined by its action on basis states. Targets that
/// fall outside `dst` (over a cutoff) are dropped.
pub fn from_action<F>(src: &SectorBasis, dst: &SectorBasis, action: F) -> SparseOperator
where
    F: Fn(&BasisState) -> Vec<(C64, BasisState)>,
{
    let mut triplets = Vec::new();
    for (col, state) in src.states().iter().enumerate() {
        for (amp, target) in action(state) {
            if let Some(row) = dst.index_of(&target) {
                triplets.push((row, col, amp));
            }
        }
    }
    SparseOperator::from_triplets(dst.len(), src.len(), triplets)
}

/// Applies a single lowering operator to a basis state.
pub fn lower_state(m_atoms: usize, op: Lowering, s: &BasisState) -> Option<(f64, BasisState)> {
    let mut t = s.clone();
    let amp = match op {
        Lowering::EndPhoton(Side::Left) => {
            let n = s.photons_left;
            if n == 0 {
                return None;
            }
            t.photons_left -= 1;
            (n as f64).sqrt()
        }
        Lowering::EndPhoton(Side::Right) => {
            let n = s.photons_right;
            if n == 0 {
                return None;
            }
            t.photons_right -= 1;
            (n as f64).sqrt()
        }
        Lowering::Middle(idx) => {
            let n = s.photons_mid[idx - 1];
            if n == 0 {
                return None;
            }
            t.photons_mid[idx - 1] -= 1;
            (n as f64).sqrt()
        }
        Lowering::Atoms(side) => {
            let e = match side {
                Side::Left => &mut t.excited_left,
                Side::Right => &mut t.excited_right,
            };
            if *e == 0 {
                return None;
            }
            let n = *e;
            *e -= 1;
            // J^- |n> = sqrt(n (M - n + 1)) |n - 1>
            ((n * (m_atoms + 1 - n)) as f64).sqrt()
        }
    };
    Some((amp, t))
}

fn check_pair(sector_k: &SectorBasis, sector_km1: &SectorBasis) -> Result<(), OperatorError> {
    if sector_k.k() != sector_km1.k() + 1 {
        return Err(OperatorError::SectorMismatch {
            expected: sector_k.k().saturating_sub(1),
            got: sector_km1.k(),
        });
    }
    Ok(())
}

/// Matrix of a single-mode lowering operator from sector `K` to `K - 1`.
pub fn build_lowering(
    p: &ModelParams,
    sector_k: &SectorBasis,
    sector_km1: &SectorBasis,
    op: Lowering,
) -> Result<SparseOperator, OperatorError> {
    check_pair(sector_k, sector_km1)?;
    if let Lowering::Middle(n) = op {
        if n < 1 || n >= p.n_chain {
            return Err(OperatorError::CavityOutOfRange { n, max: p.n_chain - 1 });
        }
    }
    let m = p.m_atoms;
    Ok(from_action(sector_k, sector_km1, |s| {
        lower_state(m, op, s)
            .map(|(a, t)| vec![(real(a), t)])
            .unwrap_or_default()
    }))
}

/// `a_L` or `a_R` from sector `K` to `K - 1`.
pub fn build_end_annihilation(
    p: &ModelParams,
    sector_k: &SectorBasis,
    sector_km1: &SectorBasis,
    side: Side,
) -> Result<SparseOperator, OperatorError> {
    build_lowering(p, sector_k, sector_km1, Lowering::EndPhoton(side))
}

/// Collective `J^-` of one ensemble from sector `K` to `K - 1`.
pub fn build_atomic_lowering(
    p: &ModelParams,
    sector_k: &SectorBasis,
    sector_km1: &SectorBasis,
    side: Side,
) -> Result<SparseOperator, OperatorError> {
    build_lowering(p, sector_k, sector_km1, Lowering::Atoms(side))
}

/// Chain normal mode `B_k = sqrt(2/N) sum_n b_n sin(k n pi / N)` from sector
/// `K` to `K - 1`.
pub fn build_normal_mode(
    p: &ModelParams,
    sector_k: &SectorBasis,
    sector_km1: &SectorBasis,
    k_index: usize,
) -> Result<SparseOperator, OperatorError> {
    check_mode(p, k_index)?;
    check_pair(sector_k, sector_km1)?;
    let coeffs: Vec<f64> = (1..p.n_chain)
        .map(|n| normal_mode_coefficient(p.n_chain, k_index, n))
        .collect();
    let m = p.m_atoms;
    Ok(from_action(sector_k, sector_km1, |s| {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .filter_map(|(i, &c)| lower_state(m, Lowering::Middle(i + 1), s).map(|(a, t)| (real(c * a), t)))
            .collect()
    }))
}

/// Diagonal excitation-number operator on a sector.
pub fn build_number_op(_p: &ModelParams, sector: &SectorBasis) -> SparseOperator {
    SparseOperator::from_triplets(
        sector.len(),
        sector.len(),
        sector
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (i, i, real(s.excitation_number() as f64))),
    )
}

/// `H_1` on a sector, in the local cavity basis.
pub fn build_h1(p: &ModelParams, sector: &SectorBasis) -> SparseOperator {
    build_h1_shifted(p, sector, 0.0)
}

/// `H_1 - omega_ref * N`. With `omega_ref = omega_c` this is the Hamiltonian
/// in the frame rotating at the cavity frequency.
pub fn build_h1_shifted(p: &ModelParams, sector: &SectorBasis, omega_ref: f64) -> SparseOperator {
    let m = p.m_atoms as f64;
    let diag = sector.states().iter().enumerate().map(|(i, s)| {
        let excited = (s.excited_left + s.excited_right) as f64;
        let e =
            p.omega_c * s.photon_number() as f64 + p.omega_a * (excited - m) - omega_ref * s.excitation_number() as f64;
        (i, i, real(e))
    });
    let diag = SparseOperator::from_triplets(sector.len(), sector.len(), diag);

    // Strictly excitation-moving half: a^dag J^-, a^dag b, b_n^dag b_{n+1}.
    // H = D + T + T^dag is then Hermitian bit for bit.
    let n_mid = p.n_chain - 1;
    let (g, lam) = (p.g, p.lambda);
    let m_atoms = p.m_atoms;
    let transfer = from_action(sector, sector, |s| {
        let mut out = Vec::new();
        for side in Side::BOTH {
            if let Some((amp, mut t)) = lower_state(m_atoms, Lowering::Atoms(side), s) {
                let n = raise_end(&mut t, side);
                out.push((real(g * amp * (n as f64).sqrt()), t));
            }
        }
        let ends = [(Side::Left, 1), (Side::Right, n_mid)];
        for (side, cavity) in ends {
            if let Some((amp, mut t)) = lower_state(m_atoms, Lowering::Middle(cavity), s) {
                let n = raise_end(&mut t, side);
                out.push((real(lam * amp * (n as f64).sqrt()), t));
            }
        }
        for n in 1..n_mid {
            if let Some((amp, mut t)) = lower_state(m_atoms, Lowering::Middle(n + 1), s) {
                t.photons_mid[n - 1] += 1;
                let occ = t.photons_mid[n - 1];
                out.push((real(lam * amp * (occ as f64).sqrt()), t));
            }
        }
        out
    });
    diag.add(&transfer).add(&transfer.adjoint())
}

fn raise_end(t: &mut BasisState, side: Side) -> usize {
    let n = match side {
        Side::Left => &mut t.photons_left,
        Side::Right => &mut t.photons_right,
    };
    *n += 1;
    *n
}

/// Collective `J^z` of one ensemble, diagonal on a sector.
pub fn build_atomic_z(p: &ModelParams, sector: &SectorBasis, side: Side) -> SparseOperator {
    let half_m = p.m_atoms as f64 / 2.0;
    SparseOperator::from_triplets(
        sector.len(),
        sector.len(),
        sector.states().iter().enumerate().map(|(i, s)| {
            let e = match side {
                Side::Left => s.excited_left,
                Side::Right => s.excited_right,
            };
            (i, i, real(e as f64 - half_m))
        }),
    )
}

/// `H_1` assembled from chain normal modes instead of local hopping:
///
/// `omega_c (a_L^dag a_L + a_R^dag a_R) + omega_a (J_L^z + J_R^z)
///  + sum_k Omega_k B_k^dag B_k + [a_mu^dag (g J_mu^- + sum_k lambda_k^mu B_k) + h.c.]`.
///
/// Needs the neighbouring sector `K - 1` for the intermediate products. Used
/// to cross-check [`build_h1`].
pub fn build_h1_normal_modes(
    p: &ModelParams,
    sector_k: &SectorBasis,
    sector_km1: &SectorBasis,
) -> Result<SparseOperator, OperatorError> {
    let dim = sector_k.len();
    let mut h = build_atomic_z(p, sector_k, Side::Left)
        .add(&build_atomic_z(p, sector_k, Side::Right))
        .scale(real(p.omega_a));
    if sector_k.k() == 0 {
        return Ok(h);
    }
    for side in Side::BOTH {
        let a = build_end_annihilation(p, sector_k, sector_km1, side)?;
        let ad = a.adjoint();
        h = h.add(&ad.matmul(&a).scale(real(p.omega_c)));
        let mut coupling = build_atomic_lowering(p, sector_k, sector_km1, side)?.scale(real(p.g));
        for k in 1..p.n_chain {
            let b = build_normal_mode(p, sector_k, sector_km1, k)?;
            coupling = coupling.add(&b.scale(real(coupling_lambda(p, k, side)?)));
        }
        let term = ad.matmul(&coupling);
        h = h.add(&term).add(&term.adjoint());
    }
    for k in 1..p.n_chain {
        let b = build_normal_mode(p, sector_k, sector_km1, k)?;
        h = h.add(&b.adjoint().matmul(&b).scale(real(p.mode_frequency(k))));
    }
    debug_assert_eq!(h.rows(), dim);
    Ok(h)
}
