//! Numerical routes to the trapped state that do not use the analytic
//! amplitudes: a null-space solve of the trapping conditions and exact
//! diagonalization of `H_1`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{BicError, StateVector};
use crate::model::{enumerate_sector, ModelParams};
use crate::operators::{build_atomic_lowering, build_h1, build_normal_mode, coupling_lambda, Side};

/// Result of the null-space solve.
#[derive(Debug, Clone)]
pub struct NullSpaceSolution {
    /// Unit vector spanning the (smallest-singular-value) null direction,
    /// embedded in the full sector basis.
    pub state: StateVector,
    /// Number of singular values below the relative threshold.
    pub nullity: usize,
    /// Singular values in ascending order.
    pub singular_values: Vec<f64>,
}

const NULL_THRESHOLD: f64 = 1e-10;

/// Solves the trapping conditions on the zero-end-photon part of sector `K`.
///
/// Rows stack `g J_L^- + lambda_q^L B_q` and `g J_R^- + lambda_q^R B_q`; for
/// chains with more than one normal mode they also stack `B_k` for every
/// `k != q`, which removes the trivially dark photons in off-resonant modes.
pub fn null_space_bic(p: &ModelParams, k: usize) -> Result<NullSpaceSolution, BicError> {
    p.validate()?;
    p.require_cutoff(k)?;
    let sector = Arc::new(enumerate_sector(p, k));
    let allowed: Vec<usize> = sector
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.photons_left == 0 && s.photons_right == 0)
        .map(|(i, _)| i)
        .collect();
    let cols = allowed.len();

    if k == 0 {
        let mut amps = vec![C64::default(); sector.len()];
        amps[allowed[0]] = C64::new(1.0, 0.0);
        return Ok(NullSpaceSolution {
            state: StateVector::new(sector, amps),
            nullity: 1,
            singular_values: vec![0.0],
        });
    }

    let lower = enumerate_sector(p, k - 1);
    let bq = build_normal_mode(p, &sector, &lower, p.q)?;
    let mut blocks = Vec::new();
    for side in Side::BOTH {
        let op = build_atomic_lowering(p, &sector, &lower, side)?
            .scale(C64::new(p.g, 0.0))
            .add(&bq.scale(C64::new(coupling_lambda(p, p.q, side)?, 0.0)));
        blocks.push(op);
    }
    for mode in (1..p.n_chain).filter(|&m| m != p.q) {
        blocks.push(build_normal_mode(p, &sector, &lower, mode)?);
    }

    let block_rows = lower.len();
    let rows = (blocks.len() * block_rows).max(cols);
    let mut a = DMatrix::<C64>::zeros(rows, cols);
    for (b, op) in blocks.iter().enumerate() {
        let dense = op.to_dense();
        for (j, &col) in allowed.iter().enumerate() {
            for r in 0..block_rows {
                a[(b * block_rows + r, j)] = dense[(r, col)];
            }
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let scale = singular_values.last().copied().unwrap_or(1.0).max(1.0);
    let nullity = singular_values.iter().filter(|&&s| s < NULL_THRESHOLD * scale).count();

    let best = order[0];
    let mut amps = vec![C64::default(); sector.len()];
    for (j, &col) in allowed.iter().enumerate() {
        amps[col] = v_t[(best, j)].conj();
    }
    Ok(NullSpaceSolution {
        state: StateVector::new(sector, amps).normalized(),
        nullity,
        singular_values,
    })
}

/// How well a state lies inside the `H_1` eigenspace at the trapped energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalizationCheck {
    /// Dimension of the eigenspace within `tol` of `(K - M) omega_a`.
    pub eigenspace_dim: usize,
    /// Norm of the projection of the state onto that eigenspace.
    pub projection: f64,
    /// Largest overlap modulus with a single eigenvector of that eigenspace.
    pub best_overlap: f64,
}

/// Exact diagonalization of `H_1` on the state's sector.
pub fn diagonalization_check(p: &ModelParams, psi: &StateVector, tol: f64) -> DiagonalizationCheck {
    let k = psi.k();
    let h = build_h1(p, &psi.sector).to_dense();
    let eig = h.symmetric_eigen();
    let e_b = (k as f64 - p.m_atoms as f64) * p.omega_a;
    let mut dim = 0;
    let mut proj_sqr = 0.0;
    let mut best: f64 = 0.0;
    for (i, e) in eig.eigenvalues.iter().enumerate() {
        if (e - e_b).abs() > tol {
            continue;
        }
        dim += 1;
        let overlap: C64 = eig
            .eigenvectors
            .column(i)
            .iter()
            .zip(&psi.amplitudes)
            .map(|(v, a)| v.conj() * a)
            .sum();
        proj_sqr += overlap.norm_sqr();
        best = best.max(overlap.norm());
    }
    DiagonalizationCheck {
        eigenspace_dim: dim,
        projection: proj_sqr.sqrt(),
        best_overlap: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bic::assemble_bic_state;

    fn params(n: usize, m: usize, g: f64) -> ModelParams {
        ModelParams {
            n_chain: n,
            m_atoms: m,
            omega_c: 0.3,
            omega_a: 0.3,
            g,
            lambda: 1.0,
            gamma_c: 0.0,
            gamma_a: 0.0,
            q: n / 2,
            fock_cutoff: m,
        }
    }

    #[test]
    fn null_space_is_one_dimensional_and_matches() {
        for n in [2, 4] {
            for m in 1..=4 {
                for k in 0..=m {
                    for g in [0.1, -1.7] {
                        let p = params(n, m, g);
                        let sol = null_space_bic(&p, k).unwrap();
                        assert_eq!(sol.nullity, 1, "N={n} M={m} K={k} g={g}");
                        let bic = assemble_bic_state(&p, k).unwrap();
                        let overlap = sol.state.inner(&bic).norm();
                        assert!((overlap - 1.0).abs() < 1e-10, "N={n} M={m} K={k}: {overlap}");
                    }
                }
            }
        }
    }

    #[test]
    fn single_photon_two_atom_ray() {
        // M = K = 1, N = 2: (c00, c01, c10) ~ (1, 1, -g/lambda) for q = 1
        let p = params(2, 1, 0.4);
        let sol = null_space_bic(&p, 1).unwrap();
        let v = &sol.state;
        let find = |b: usize, el: usize, er: usize| {
            let s = crate::model::BasisState {
                photons_left: 0,
                photons_mid: vec![b],
                photons_right: 0,
                excited_left: el,
                excited_right: er,
            };
            v.amplitudes[v.sector.index_of(&s).unwrap()]
        };
        let c01 = find(0, 1, 0);
        let c00 = find(0, 0, 1);
        let c10 = find(1, 0, 0);
        assert!(((c01 / c00) - 1.0).norm() < 1e-12);
        assert!(((c10 / c00) + 0.4).norm() < 1e-12);
    }

    #[test]
    fn full_diagonalization_contains_bic() {
        for n in [2, 4] {
            for m in 1..=3 {
                for k in 0..=m {
                    let p = params(n, m, 0.7);
                    let bic = assemble_bic_state(&p, k).unwrap();
                    let check = diagonalization_check(&p, &bic, 1e-9);
                    assert!(check.eigenspace_dim >= 1);
                    assert!((check.projection - 1.0).abs() < 1e-8, "N={n} M={m} K={k}: {check:?}");
                }
            }
        }
    }
}
