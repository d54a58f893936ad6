//! Composite master-equation experiments: relaxation into subradiant
//! trapped states, detuning-induced loss of a trapped state, and decay of a
//! single photon seeded in the middle cavity.

use num_complex::Complex64 as C64;

use super::{
    atomic_basis_vector, embed_atomic_state, evolve, fit_decay_rate, lindblad_generator, steady_state_prediction,
    trapped_probabilities, DecayFit, DensityMatrix, DynamicsError, EvolveOptions, FitError, Trajectory,
};
use crate::bic::{assemble_bic_state, StateVector};
use crate::model::{BasisState, ModelParams};

#[derive(Debug, Clone)]
pub struct SubradianceRun {
    pub trajectory: Trajectory,
    /// Trapped states `beta_0 ..= beta_M`.
    pub trapped: Vec<StateVector>,
    /// `P_i(t)` per snapshot, `i = 0..=M`.
    pub probabilities: Vec<Vec<f64>>,
    /// `p_s` for `s = 0..=M` from the collective-spin decomposition.
    pub prediction: Vec<f64>,
}

impl SubradianceRun {
    /// Predicted steady `P_i = p_{M - i}`.
    pub fn predicted_probabilities(&self) -> Vec<f64> {
        self.prediction.iter().rev().copied().collect()
    }

    pub fn final_probabilities(&self) -> &[f64] {
        self.probabilities.last().expect("initial snapshot")
    }

    /// Largest `|P_i(t) - P_i(0)|` over the run.
    pub fn drift(&self, i: usize) -> f64 {
        let p0 = self.probabilities[0][i];
        self.probabilities.iter().map(|p| (p[i] - p0).abs()).fold(0.0, f64::max)
    }
}

/// Starts from `n_left` and `n_right` atomic excitations with empty cavities
/// and integrates to steady state or `t_end`.
pub fn subradiance_run(
    p: &ModelParams,
    n_left: usize,
    n_right: usize,
    t_end: f64,
    options: &EvolveOptions,
) -> Result<SubradianceRun, DynamicsError> {
    p.validate()?;
    if n_left > p.m_atoms || n_right > p.m_atoms {
        return Err(DynamicsError::DimensionMismatch {
            expected: p.m_atoms,
            got: n_left.max(n_right),
        });
    }
    subradiance_run_from(p, &atomic_basis_vector(p, n_left, n_right), t_end, options)
}

/// Starts from an atomic state over the `(M + 1)^2` product basis with
/// empty cavities. Coherences between excitation sectors are dropped.
pub fn subradiance_run_from(
    p: &ModelParams,
    psi_atomic: &[C64],
    t_end: f64,
    options: &EvolveOptions,
) -> Result<SubradianceRun, DynamicsError> {
    p.validate()?;
    let norm: f64 = psi_atomic.iter().map(|a| a.norm_sqr()).sum();
    let parts = embed_atomic_state(p, psi_atomic)?;
    let k_top = parts.iter().map(|s| s.k()).max().unwrap_or(0);
    let k_max = k_top.max(p.m_atoms);
    let l = lindblad_generator(p, k_max)?;
    let weighted: Vec<(f64, StateVector)> = parts.into_iter().map(|s| (1.0 / norm, s)).collect();
    let rho0 = DensityMatrix::from_mixture(l.sectors().to_vec(), &weighted)?;
    let trapped = (0..=p.m_atoms)
        .map(|kk| assemble_bic_state(p, kk))
        .collect::<Result<Vec<_>, _>>()?;
    let trajectory = evolve(&l, &rho0, t_end, options)?;
    let probabilities = trajectory
        .snapshots
        .iter()
        .map(|s| trapped_probabilities(&s.rho, &trapped))
        .collect::<Result<Vec<_>, _>>()?;
    let prediction = steady_state_prediction(p, psi_atomic)?
        .into_iter()
        .map(|(_, w)| w / norm)
        .collect();
    Ok(SubradianceRun {
        trajectory,
        trapped,
        probabilities,
        prediction,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl From<crate::bic::BicError> for ScenarioError {
    fn from(e: crate::bic::BicError) -> Self {
        ScenarioError::Dynamics(e.into())
    }
}

/// Loss rate of `P_K` for a system prepared in the resonant trapped state
/// `beta_K` and evolved with the (possibly detuned) parameters `p`.
///
/// The fit window is `[t_end / 4, t_end]`.
pub fn detuned_loss_rate(p: &ModelParams, k: usize, t_end: f64) -> Result<(DecayFit, Trajectory), ScenarioError> {
    let resonant = ModelParams {
        omega_a: p.mode_frequency(p.q),
        ..p.clone()
    };
    let beta = assemble_bic_state(&resonant, k)?;
    let l = lindblad_generator(p, k)?;
    let rho0 = DensityMatrix::from_pure(l.sectors().to_vec(), &beta)?;
    let options = EvolveOptions {
        snapshot_interval: t_end / 400.0,
        stop_at_steady: false,
        ..EvolveOptions::default()
    };
    let traj = evolve(&l, &rho0, t_end, &options)?;
    let series = traj
        .snapshots
        .iter()
        .map(|s| Ok((s.t, s.rho.expectation(&beta)?)))
        .collect::<Result<Vec<_>, DynamicsError>>()?;
    Ok((fit_decay_rate(&series, (t_end / 4.0, t_end))?, traj))
}

/// Population decay rate of the one-excitation sector after a photon is
/// placed in the first middle cavity, fitted over `window`.
pub fn seeded_photon_decay(
    p: &ModelParams,
    t_end: f64,
    window: (f64, f64),
) -> Result<(DecayFit, Trajectory), ScenarioError> {
    let l = lindblad_generator(p, 1)?;
    let mut seed = BasisState::vacuum(p.n_chain);
    seed.photons_mid[0] = 1;
    let sector = l.sectors()[1].clone();
    let idx = sector.index_of(&seed).expect("one photon fits any cutoff");
    let mut amps = vec![crate::C64::default(); sector.len()];
    amps[idx] = crate::C64::new(1.0, 0.0);
    let rho0 = DensityMatrix::from_pure(l.sectors().to_vec(), &StateVector::new(sector, amps))?;
    let options = EvolveOptions {
        snapshot_interval: (window.1 - window.0) / 200.0,
        stop_at_steady: false,
        ..EvolveOptions::default()
    };
    let traj = evolve(&l, &rho0, t_end, &options)?;
    let fit = fit_decay_rate(&traj.series(|r| r.sector_population(1)), window)?;
    Ok((fit, traj))
}
