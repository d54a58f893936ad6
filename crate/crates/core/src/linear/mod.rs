//! Linearized analysis of the triple-cavity array in the quantum-cavity
//! regime.
//!
//! For weakly excited ensembles each collective spin is replaced by a boson,
//! `J^- ~ sqrt(M) d`, and the mean amplitudes obey `i d<v>/dt = A <v>` with
//! `v = (a_L, a_R, b_1, d_L, d_R)`. Collective atomic decay enters as the
//! complex frequency `omega_a - i M gamma_a / 2`. The eigenvalue of `A`
//! closest to the real axis belongs to the trapped polariton; its imaginary
//! part sets the storage time.

pub mod eig;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::ModelParams;
use eig::{eigen, EigError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("linear analysis is only defined for N = 2 (got N = {0})")]
    UnsupportedChain(usize),
    #[error("trapped mode does not decay: quality factor is unbounded")]
    UnboundedQuality,
    #[error(transparent)]
    Eigen(#[from] EigError),
}

/// Index of each amplitude in [`LinearSystem::matrix`].
pub mod var {
    pub const A_L: usize = 0;
    pub const A_R: usize = 1;
    pub const B_1: usize = 2;
    pub const D_L: usize = 3;
    pub const D_R: usize = 4;
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<C64>,
    pub eigenvalues: Vec<C64>,
    /// Unit eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<C64>,
}

fn require_triple(p: &ModelParams) -> Result<(), LinearError> {
    if p.n_chain != 2 {
        return Err(LinearError::UnsupportedChain(p.n_chain));
    }
    Ok(())
}

/// Coefficient matrix without diagonalization.
pub fn dynamical_matrix(p: &ModelParams) -> Result<DMatrix<C64>, LinearError> {
    use var::*;
    require_triple(p)?;
    let m = p.m_atoms as f64;
    let mut a = DMatrix::<C64>::zeros(5, 5);
    let cavity = C64::new(p.omega_c, -p.gamma_c / 2.0);
    let atoms = C64::new(p.omega_c - p.delta(), -m * p.gamma_a / 2.0);
    a[(A_L, A_L)] = cavity;
    a[(A_R, A_R)] = cavity;
    a[(B_1, B_1)] = C64::new(p.omega_c, 0.0);
    a[(D_L, D_L)] = atoms;
    a[(D_R, D_R)] = atoms;
    let hop = C64::new(p.lambda, 0.0);
    let coupling = C64::new(p.g * m.sqrt(), 0.0);
    for (i, j, v) in [
        (A_L, B_1, hop),
        (A_R, B_1, hop),
        (A_L, D_L, coupling),
        (A_R, D_R, coupling),
    ] {
        a[(i, j)] = v;
        a[(j, i)] = v;
    }
    Ok(a)
}

pub fn linear_matrix(p: &ModelParams) -> Result<LinearSystem, LinearError> {
    let matrix = dynamical_matrix(p)?;
    let e = eigen(&matrix)?;
    Ok(LinearSystem {
        matrix,
        eigenvalues: e.values,
        eigenvectors: e.vectors,
    })
}

/// The least-damped eigenmode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappedMode {
    /// Amplitude decay rate `|Im(eigenvalue)|`.
    pub decay: f64,
    pub eigenvalue: C64,
    /// Another eigenvalue has (numerically) the same damping.
    pub degenerate: bool,
}

const DEGENERACY_TOL: f64 = 1e-9;

pub fn trapped_mode_decay(p: &ModelParams) -> Result<TrappedMode, LinearError> {
    let sys = linear_matrix(p)?;
    let mut by_damping: Vec<C64> = sys.eigenvalues.clone();
    by_damping.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
    let best = by_damping[0];
    let decay = best.im.abs();
    let next = by_damping[1].im.abs();
    let scale = sys.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let degenerate = (next - decay).abs() <= DEGENERACY_TOL * decay.max(f64::EPSILON * scale);
    Ok(TrappedMode {
        decay,
        eigenvalue: best,
        degenerate,
    })
}

/// Strong-coupling approximation of the trapped-mode decay rate,
/// `(M^2 gamma_a g^2 + delta^2 gamma_c) / (M^2 g^4 + delta^2 gamma_c^2 / 4) lambda^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaApprox {
    pub value: f64,
    /// `g >= 5 max(gamma_a, gamma_c, lambda)`; the formula is unreliable
    /// otherwise.
    pub regime_ok: bool,
}

pub const REGIME_FACTOR: f64 = 5.0;

pub fn gamma_approx(p: &ModelParams) -> GammaApprox {
    let m2 = (p.m_atoms * p.m_atoms) as f64;
    let g2 = p.g * p.g;
    let d2 = p.delta() * p.delta();
    let value = (m2 * p.gamma_a * g2 + d2 * p.gamma_c) / (m2 * g2 * g2 + d2 * p.gamma_c * p.gamma_c / 4.0)
        * p.lambda
        * p.lambda;
    let regime_ok = p.g.abs() >= REGIME_FACTOR * p.gamma_a.max(p.gamma_c).max(p.lambda);
    GammaApprox { value, regime_ok }
}

const UNBOUNDED_TOL: f64 = 1e-13;

/// Scaled quality factor `gamma_c / Gamma`.
pub fn q_factor(p: &ModelParams) -> Result<f64, LinearError> {
    let mode = trapped_mode_decay(p)?;
    let scale = p.lambda.max(p.g.abs()).max(p.gamma_c).max(p.omega_c.abs());
    if mode.decay <= UNBOUNDED_TOL * scale {
        return Err(LinearError::UnboundedQuality);
    }
    Ok(p.gamma_c / mode.decay)
}

/// `gamma_c / gamma_approx`.
pub fn q_factor_approx(p: &ModelParams) -> f64 {
    p.gamma_c / gamma_approx(p).value
}

/// Polariton modes over `(d_L, d_R, b_1)` and their couplings to the end
/// cavities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polaritons {
    pub f_plus: [f64; 3],
    pub f_minus: [f64; 3],
    pub f_zero: [f64; 3],
    pub xi_plus: f64,
    pub xi_minus: f64,
}

impl Polaritons {
    /// Rows of the unitary taking `(a_L, a_R, b_1, d_L, d_R)` to
    /// `(a_L, a_R, F_+, F_-, F_0)`.
    pub fn frame(&self) -> DMatrix<C64> {
        use var::*;
        let mut u = DMatrix::<C64>::zeros(5, 5);
        u[(0, A_L)] = C64::new(1.0, 0.0);
        u[(1, A_R)] = C64::new(1.0, 0.0);
        for (row, f) in [(2, self.f_plus), (3, self.f_minus), (4, self.f_zero)] {
            u[(row, D_L)] = C64::new(f[0], 0.0);
            u[(row, D_R)] = C64::new(f[1], 0.0);
            u[(row, B_1)] = C64::new(f[2], 0.0);
        }
        u
    }
}

pub fn polariton_transform(p: &ModelParams) -> Result<Polaritons, LinearError> {
    require_triple(p)?;
    let gm = p.g * (p.m_atoms as f64).sqrt();
    let lam = p.lambda;
    let r = (gm * gm + 2.0 * lam * lam).sqrt();
    let s2 = std::f64::consts::SQRT_2;
    Ok(Polaritons {
        f_plus: [gm / (s2 * r), gm / (s2 * r), 2.0 * lam / (s2 * r)],
        f_minus: [1.0 / s2, -1.0 / s2, 0.0],
        f_zero: [-lam / r, -lam / r, gm / r],
        xi_plus: r / s2,
        xi_minus: gm.abs() / s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strong_coupling(gamma_a: f64, delta: f64) -> ModelParams {
        ModelParams {
            n_chain: 2,
            m_atoms: 2,
            omega_c: 0.0,
            omega_a: -delta,
            g: 10.0,
            lambda: 1.0,
            gamma_c: 1.0,
            gamma_a,
            q: 1,
            fock_cutoff: 1,
        }
    }

    fn lossless(g: f64, delta: f64) -> ModelParams {
        ModelParams {
            gamma_c: 0.0,
            gamma_a: 0.0,
            g,
            omega_c: 3.0,
            omega_a: 3.0 - delta,
            ..strong_coupling(0.0, 0.0)
        }
    }

    #[test]
    fn decoupled_spectrum() {
        let p = lossless(0.0, 0.4);
        let sys = linear_matrix(&p).unwrap();
        let mut re: Vec<f64> = sys.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let s2 = std::f64::consts::SQRT_2;
        let mut expected = vec![3.0 - s2, 3.0, 3.0 + s2, 2.6, 2.6];
        expected.sort_by(f64::total_cmp);
        for (x, y) in re.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(sys.eigenvalues.iter().all(|z| z.im.abs() < 1e-10));
    }

    #[test]
    fn lossless_matrix_is_hermitian_and_symmetric_spectrum() {
        let p = lossless(2.5, 0.0);
        let sys = linear_matrix(&p).unwrap();
        assert_eq!(sys.matrix, sys.matrix.adjoint());
        let mut shifted: Vec<f64> = sys.eigenvalues.iter().map(|z| z.re - 3.0).collect();
        shifted.sort_by(f64::total_cmp);
        for i in 0..5 {
            assert!((shifted[i] + shifted[4 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn passivity() {
        for &g in &[0.1, 1.0, 10.0] {
            for &delta in &[-2.0, 0.0, 1.5] {
                for &ga in &[0.0, 0.01, 0.5] {
                    let p = ModelParams {
                        g,
                        ..strong_coupling(ga, delta)
                    };
                    let sys = linear_matrix(&p).unwrap();
                    assert!(sys.eigenvalues.iter().all(|z| z.im <= 1e-10));
                }
            }
        }
    }

    #[test]
    fn decoupled_chain_has_undamped_modes() {
        let p = ModelParams {
            g: 0.0,
            lambda: 1e-300,
            ..strong_coupling(0.0, 0.0)
        };
        let mode = trapped_mode_decay(&p).unwrap();
        assert_eq!(mode.decay, 0.0);
        assert!(mode.degenerate);
    }

    #[test]
    fn dark_mode_without_atomic_loss() {
        let mode = trapped_mode_decay(&strong_coupling(0.0, 0.0)).unwrap();
        assert!(mode.decay < 1e-12);
        assert_eq!(q_factor(&strong_coupling(0.0, 0.0)), Err(LinearError::UnboundedQuality));
    }

    #[test]
    fn resonant_decay_and_quality() {
        let p = strong_coupling(1e-2, 0.0);
        let exact = trapped_mode_decay(&p).unwrap().decay;
        let approx = gamma_approx(&p);
        assert!(approx.regime_ok);
        assert!((approx.value - 1e-4).abs() < 1e-18);
        assert!((exact - 1e-4).abs() / 1e-4 < 0.05);
        let q = q_factor(&p).unwrap();
        assert!((q - 1e4).abs() / 1e4 < 0.05);
    }

    #[test]
    fn approximation_limits() {
        let p = strong_coupling(0.0, 1.0);
        let expected = 1.0 / (4.0 * 1e4 + 0.25);
        assert!((gamma_approx(&p).value - expected).abs() < 1e-18);
        let p = strong_coupling(1e-2, 1.0);
        let exact = trapped_mode_decay(&p).unwrap().decay;
        assert!((exact - gamma_approx(&p).value).abs() / exact < 0.05);
        assert!(!gamma_approx(&ModelParams { g: 1.0, ..p }).regime_ok);
    }

    #[test]
    fn quality_is_even_in_detuning() {
        for d in [0.3, 1.0, 2.7] {
            let a = q_factor(&strong_coupling(1e-2, d)).unwrap();
            let b = q_factor(&strong_coupling(1e-2, -d)).unwrap();
            assert!((a - b).abs() / a < 1e-8);
        }
    }

    #[test]
    fn polaritons_are_orthonormal_and_f0_is_dark() {
        let p = strong_coupling(0.0, 0.0);
        let pol = polariton_transform(&p).unwrap();
        let rows = [pol.f_plus, pol.f_minus, pol.f_zero];
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|t| rows[i][t] * rows[j][t]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
        let u = pol.frame();
        let transformed = &u * dynamical_matrix(&p).unwrap() * u.adjoint();
        for end in [0, 1] {
            assert!(transformed[(end, 4)].norm() < 1e-12);
            assert!(transformed[(4, end)].norm() < 1e-12);
            assert!((transformed[(end, 2)].re - pol.xi_plus).abs() < 1e-12);
        }
        assert!((transformed[(0, 3)].re - pol.xi_minus).abs() < 1e-12);
        assert!((transformed[(1, 3)].re + pol.xi_minus).abs() < 1e-12);
    }

    #[test]
    fn f0_is_photonic_at_large_chi() {
        let p = ModelParams {
            g: 20.0,
            ..strong_coupling(0.0, 0.0)
        };
        let pol = polariton_transform(&p).unwrap();
        assert!(pol.f_zero[2].powi(2) > 0.99);
    }

    #[test]
    fn rejects_longer_chains() {
        let p = ModelParams {
            n_chain: 4,
            q: 2,
            ..strong_coupling(0.0, 0.0)
        };
        assert_eq!(linear_matrix(&p).unwrap_err(), LinearError::UnsupportedChain(4));
    }
}
