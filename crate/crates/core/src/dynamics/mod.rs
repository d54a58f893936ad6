//! Open-system dynamics under the Markovian master equation
//!
//! `d rho/dt = -i[H_1, rho] + sum_mu (gamma_c / 2) D[a_mu] rho`,
//! `D[X] rho = 2 X rho X^dag - X^dag X rho - rho X^dag X`,
//!
//! with optional collective atomic damping `(gamma_a / 2) D[J_mu^-]`.
//!
//! `H_1` conserves the excitation number and every jump operator lowers it
//! by one, so the generator never couples populations to inter-sector
//! coherences. The density matrix is stored as one dense block per sector;
//! states with inter-sector coherences are represented by their
//! block-diagonal part, which carries all sector-resolved observables.

pub mod dicke;
pub mod fit;
pub mod integrate;
pub mod scenario;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::bic::{BicError, StateVector};
use crate::model::{enumerate_sector, ModelParams, ParamError, SectorBasis};
use crate::operators::{build_h1_shifted, build_lowering, Lowering, OperatorError, Side};
use crate::sparse::SparseOperator;

pub use dicke::{
    atomic_basis_vector, atomic_product_state, dicke_basis, effective_tc_hamiltonian, embed_atomic_state,
    steady_state_prediction, DickeState,
};
pub use fit::{fit_decay_rate, DecayFit, FitError};
pub use integrate::{evolve, EvolveOptions, Snapshot, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Bic(#[from] BicError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sector K = {k} is outside 0..={k_max}")]
    SectorOutOfRange { k: usize, k_max: usize },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("positivity violated at t = {t}: minimum eigenvalue {min_eig:e}")]
    Positivity { t: f64, min_eig: f64 },
    #[error("non-finite density matrix at t = {t}")]
    NonFinite { t: f64 },
    #[error("only N = 2 is supported (got N = {0})")]
    UnsupportedChain(usize),
}

/// Block-diagonal density matrix over sectors `0..=k_max`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    sectors: Vec<Arc<SectorBasis>>,
    blocks: Vec<DMatrix<C64>>,
}

/// Sector bases `0..=k_max` for `p`.
pub fn sector_space(p: &ModelParams, k_max: usize) -> Result<Vec<Arc<SectorBasis>>, DynamicsError> {
    p.validate()?;
    p.require_cutoff(k_max)?;
    Ok((0..=k_max).map(|k| Arc::new(enumerate_sector(p, k))).collect())
}

impl DensityMatrix {
    pub fn zeros(sectors: Vec<Arc<SectorBasis>>) -> Self {
        let blocks = sectors.iter().map(|s| DMatrix::zeros(s.len(), s.len())).collect();
        DensityMatrix { sectors, blocks }
    }

    /// `|psi><psi|` for a state inside one sector.
    pub fn from_pure(sectors: Vec<Arc<SectorBasis>>, psi: &StateVector) -> Result<Self, DynamicsError> {
        let mut rho = Self::zeros(sectors);
        let k = psi.k();
        rho.check_sector(k)?;
        let dim = rho.sectors[k].len();
        if psi.amplitudes.len() != dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: dim,
                got: psi.amplitudes.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(&psi.amplitudes);
        rho.blocks[k] = &v * v.adjoint();
        Ok(rho)
    }

    /// Weighted sum of pure states; cross-sector coherences are dropped.
    pub fn from_mixture(sectors: Vec<Arc<SectorBasis>>, states: &[(f64, StateVector)]) -> Result<Self, DynamicsError> {
        let mut rho = Self::zeros(sectors.clone());
        for (w, psi) in states {
            let term = Self::from_pure(sectors.clone(), psi)?;
            rho.axpy(*w, &term);
        }
        Ok(rho)
    }

    fn check_sector(&self, k: usize) -> Result<(), DynamicsError> {
        if k >= self.sectors.len() {
            return Err(DynamicsError::SectorOutOfRange { k, k_max: self.k_max() });
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sectors(&self) -> &[Arc<SectorBasis>] {
        &self.sectors
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &DMatrix<C64> {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut DMatrix<C64> {
        &mut self.blocks[k]
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Population of sector `k`.
    pub fn sector_population(&self, k: usize) -> f64 {
        self.blocks.get(k).map_or(0.0, |b| b.trace().re)
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| b.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Largest entry modulus of `rho - rho^dag`.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Replaces each block by `(B + B^dag) / 2`.
    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let n = b.nrows();
            for i in 0..n {
                b[(i, i)].im = 0.0;
                for j in i + 1..n {
                    let avg = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
                    b[(i, j)] = avg;
                    b[(j, i)] = avg.conj();
                }
            }
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64, DynamicsError> {
        let k = psi.k();
        self.check_sector(k)?;
        let b = &self.blocks[k];
        if psi.amplitudes.len() != b.nrows() {
            return Err(DynamicsError::DimensionMismatch {
                expected: b.nrows(),
                got: psi.amplitudes.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(&psi.amplitudes);
        Ok((v.adjoint() * b * &v)[(0, 0)].re)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &DensityMatrix) {
        for (x, y) in self.blocks.iter_mut().zip(&other.blocks) {
            *x += y * C64::new(a, 0.0);
        }
    }

    pub(crate) fn with_blocks(&self, blocks: Vec<DMatrix<C64>>) -> Self {
        DensityMatrix {
            sectors: self.sectors.clone(),
            blocks,
        }
    }
}

/// `P_i = <beta_i|rho|beta_i>` for each provided state.
pub fn trapped_probabilities(rho: &DensityMatrix, states: &[StateVector]) -> Result<Vec<f64>, DynamicsError> {
    states.iter().map(|s| rho.expectation(s)).collect()
}

#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    /// `L` from sector `k` to `k - 1`, indexed by `k` (entry 0 unused).
    lower: Vec<SparseOperator>,
    lower_adj: Vec<SparseOperator>,
}

/// The master-equation generator on sectors `0..=k_max`, in the frame
/// rotating at `omega_c`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    sectors: Vec<Arc<SectorBasis>>,
    hamiltonian: Vec<SparseOperator>,
    /// `-i H - (1/2) sum_j rate_j L_j^dag L_j` per sector.
    effective: Vec<SparseOperator>,
    jumps: Vec<Jump>,
    lambda: f64,
}

/// Builds the generator. Collective atomic damping is included when
/// `p.gamma_a > 0`.
pub fn lindblad_generator(p: &ModelParams, k_max: usize) -> Result<Liouvillian, DynamicsError> {
    let sectors = sector_space(p, k_max)?;
    let hamiltonian: Vec<SparseOperator> = sectors.iter().map(|s| build_h1_shifted(p, s, p.omega_c)).collect();

    let mut channels = Vec::new();
    for side in Side::BOTH {
        if p.gamma_c > 0.0 {
            channels.push((p.gamma_c, Lowering::EndPhoton(side)));
        }
        if p.gamma_a > 0.0 {
            channels.push((p.gamma_a, Lowering::Atoms(side)));
        }
    }
    let mut effective: Vec<SparseOperator> = hamiltonian.iter().map(|h| h.scale(C64::new(0.0, -1.0))).collect();
    let mut jumps = Vec::new();
    for (rate, op) in channels {
        let mut lower = vec![SparseOperator::zeros(0, sectors[0].len())];
        for k in 1..=k_max {
            lower.push(build_lowering(p, &sectors[k], &sectors[k - 1], op)?);
        }
        let lower_adj: Vec<SparseOperator> = lower.iter().map(|l| l.adjoint()).collect();
        for k in 1..=k_max {
            let number = lower_adj[k].matmul(&lower[k]);
            effective[k] = effective[k].sub(&number.scale(C64::new(0.5 * rate, 0.0)));
        }
        jumps.push(Jump { rate, lower, lower_adj });
    }
    Ok(Liouvillian {
        sectors,
        hamiltonian,
        effective,
        jumps,
        lambda: p.lambda,
    })
}

impl Liouvillian {
    pub fn sectors(&self) -> &[Arc<SectorBasis>] {
        &self.sectors
    }

    pub fn k_max(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Rotating-frame Hamiltonian of sector `k`.
    pub fn hamiltonian(&self, k: usize) -> &SparseOperator {
        &self.hamiltonian[k]
    }

    /// Dense non-Hermitian `H_1 - (i/2) sum_j rate_j L_j^dag L_j` on sector
    /// `k`.
    pub fn effective_hamiltonian(&self, k: usize) -> DMatrix<C64> {
        self.effective[k].scale(C64::new(0.0, 1.0)).to_dense()
    }

    /// Empty density matrix on this generator's sectors.
    pub fn zero_state(&self) -> DensityMatrix {
        DensityMatrix::zeros(self.sectors.clone())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let mut out = Vec::with_capacity(self.sectors.len());
        self.apply_into(rho.blocks(), &mut out);
        rho.with_blocks(out)
    }

    /// Output is Hermitian by construction: `X + X^dag` with `X = E rho`.
    pub(crate) fn apply_into(&self, rho: &[DMatrix<C64>], out: &mut Vec<DMatrix<C64>>) {
        out.clear();
        let k_max = self.k_max();
        for k in 0..=k_max {
            let x = self.effective[k].mul_dense(&rho[k]);
            let mut d = &x + x.adjoint();
            if k < k_max {
                let above = &rho[k + 1];
                for j in &self.jumps {
                    let y = j.lower[k + 1].mul_dense(above);
                    d += j.lower_adj[k + 1].dense_mul(&y) * C64::new(j.rate, 0.0);
                }
            }
            out.push(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bic::assemble_bic_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn relaxation_params() -> ModelParams {
        ModelParams {
            gamma_c: 1.0,
            fock_cutoff: 2,
            ..ModelParams::triple_cavity(2, 0.1)
        }
    }

    fn random_rho(sectors: Vec<Arc<SectorBasis>>, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = DensityMatrix::zeros(sectors);
        for k in 0..rho.sectors.len() {
            let n = rho.sectors[k].len();
            let a = DMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            rho.blocks[k] = &a * a.adjoint();
        }
        let tr = rho.trace().re;
        for b in &mut rho.blocks {
            *b /= C64::new(tr, 0.0);
        }
        rho
    }

    #[test]
    fn ground_state_is_stationary() {
        let l = lindblad_generator(&relaxation_params(), 2).unwrap();
        let mut rho = l.zero_state();
        rho.blocks[0][(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(l.apply(&rho).max_abs(), 0.0);
    }

    #[test]
    fn bic_is_stationary() {
        for m in 1..=3 {
            for k in 0..=m {
                let p = ModelParams {
                    fock_cutoff: m,
                    ..ModelParams {
                        m_atoms: m,
                        ..relaxation_params()
                    }
                };
                let l = lindblad_generator(&p, m).unwrap();
                let beta = assemble_bic_state(&p, k).unwrap();
                let rho = DensityMatrix::from_pure(l.sectors.clone(), &beta).unwrap();
                assert!(l.apply(&rho).max_abs() < 1e-10, "M={m} K={k}");
            }
        }
    }

    #[test]
    fn trace_preserving_and_hermitian() {
        for gamma_a in [0.0, 0.3] {
            let p = ModelParams {
                gamma_a,
                omega_a: -0.4,
                ..relaxation_params()
            };
            let l = lindblad_generator(&p, 2).unwrap();
            for seed in 0..5 {
                let rho = random_rho(l.sectors.clone(), seed);
                let d = l.apply(&rho);
                assert!(d.trace().norm() < 1e-12);
                assert!(d.hermiticity_error() < 1e-12);
            }
        }
    }

    #[test]
    fn trapped_probabilities_of_simple_states() {
        let p = relaxation_params();
        let sectors = sector_space(&p, 2).unwrap();
        let betas: Vec<_> = (0..=2).map(|k| assemble_bic_state(&p, k).unwrap()).collect();
        let rho = DensityMatrix::from_pure(sectors.clone(), &betas[1]).unwrap();
        let probs = trapped_probabilities(&rho, &betas).unwrap();
        assert!((probs[1] - 1.0).abs() < 1e-12 && probs[0] == 0.0 && probs[2] == 0.0);

        let mut mixed = DensityMatrix::zeros(sectors.clone());
        let n = sectors[2].len();
        mixed.blocks[2] = DMatrix::identity(n, n) / C64::new(n as f64, 0.0);
        let probs = trapped_probabilities(&mixed, &betas).unwrap();
        assert!((probs[2] - 1.0 / n as f64).abs() < 1e-12);

        let short = DensityMatrix::zeros(sector_space(&p, 1).unwrap());
        assert!(matches!(
            trapped_probabilities(&short, &betas),
            Err(DynamicsError::SectorOutOfRange { k: 2, k_max: 1 })
        ));
    }

    #[test]
    fn symmetrize_and_min_eigenvalue() {
        let sectors = sector_space(&relaxation_params(), 2).unwrap();
        let mut rho = random_rho(sectors, 7);
        assert!(rho.min_eigenvalue() > -1e-14);
        rho.blocks[2][(0, 1)] += C64::new(1e-3, 0.0);
        assert!(rho.hermiticity_error() > 0.0);
        rho.symmetrize();
        assert_eq!(rho.hermiticity_error(), 0.0);
    }
}
