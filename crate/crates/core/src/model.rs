//! Physical parameters of the array and the fixed-excitation-number basis.
//!
//! The array has `n_chain + 1` cavities: two end cavities `a_L`, `a_R`, each
//! holding an ensemble of `m_atoms` two-level atoms, and `n_chain - 1` middle
//! cavities `b_1 … b_{N-1}`. Each ensemble is represented by its symmetric
//! (spin-M/2) subspace, so an ensemble state is just the number of excited
//! atoms in `0..=M`.

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("n_chain must be at least 2 (got {0})")]
    ChainTooShort(usize),
    #[error("m_atoms must be at least 1")]
    NoAtoms,
    #[error("lambda must be positive (got {0})")]
    NonPositiveLambda(f64),
    #[error("q out of range: {q} is not in 1..={max}")]
    ModeOutOfRange { q: usize, max: usize },
    #[error("{name} must be nonnegative (got {value})")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("fock_cutoff must be at least 1")]
    ZeroCutoff,
    #[error("no resonant chain mode within tol (closest mode {closest} is off by {offset:e})")]
    NoResonantMode { closest: usize, offset: f64 },
    #[error("fock_cutoff {cutoff} is below the excitation number {k}")]
    CutoffBelowExcitation { cutoff: usize, k: usize },
}

/// All physical constants of the model. Frequencies and rates are in units of
/// the caller's choosing; the drivers use units of `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `N`; the chain has `N - 1` middle cavities.
    pub n_chain: usize,
    /// Atoms per end cavity.
    pub m_atoms: usize,
    pub omega_c: f64,
    pub omega_a: f64,
    pub g: f64,
    pub lambda: f64,
    /// End-cavity leakage rate.
    pub gamma_c: f64,
    /// Single-atom spontaneous decay rate.
    pub gamma_a: f64,
    /// Index of the chain normal mode resonant with the atoms.
    pub q: usize,
    /// Per-mode photon truncation.
    pub fock_cutoff: usize,
}

impl ModelParams {
    /// Triple-cavity array (`N = 2`) at exact resonance with `omega_c =
    /// omega_a = 0`, no dissipation, and `lambda = 1`.
    pub fn triple_cavity(m_atoms: usize, g: f64) -> Self {
        ModelParams {
            n_chain: 2,
            m_atoms,
            omega_c: 0.0,
            omega_a: 0.0,
            g,
            lambda: 1.0,
            gamma_c: 0.0,
            gamma_a: 0.0,
            q: 1,
            fock_cutoff: m_atoms.max(1),
        }
    }

    /// `delta = omega_c - omega_a`.
    pub fn delta(&self) -> f64 {
        self.omega_c - self.omega_a
    }

    /// Number of middle cavities, `N - 1`.
    pub fn n_middle(&self) -> usize {
        self.n_chain - 1
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_chain < 2 {
            return Err(ParamError::ChainTooShort(self.n_chain));
        }
        if self.m_atoms < 1 {
            return Err(ParamError::NoAtoms);
        }
        for (name, value) in [
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("g", self.g),
            ("lambda", self.lambda),
            ("gamma_c", self.gamma_c),
            ("gamma_a", self.gamma_a),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NotFinite(name));
            }
        }
        if self.lambda <= 0.0 {
            return Err(ParamError::NonPositiveLambda(self.lambda));
        }
        if self.q < 1 || self.q > self.n_chain - 1 {
            return Err(ParamError::ModeOutOfRange {
                q: self.q,
                max: self.n_chain - 1,
            });
        }
        if self.gamma_c < 0.0 {
            return Err(ParamError::NegativeRate {
                name: "gamma_c",
                value: self.gamma_c,
            });
        }
        if self.gamma_a < 0.0 {
            return Err(ParamError::NegativeRate {
                name: "gamma_a",
                value: self.gamma_a,
            });
        }
        if self.fock_cutoff < 1 {
            return Err(ParamError::ZeroCutoff);
        }
        Ok(())
    }

    /// Errors unless every photon mode can hold `k` photons.
    pub fn require_cutoff(&self, k: usize) -> Result<(), ParamError> {
        if self.fock_cutoff < k {
            return Err(ParamError::CutoffBelowExcitation {
                cutoff: self.fock_cutoff,
                k,
            });
        }
        Ok(())
    }

    /// Frequency of chain normal mode `k`: `omega_c + 2 lambda cos(k pi / N)`.
    pub fn mode_frequency(&self, k: usize) -> f64 {
        self.omega_c + 2.0 * self.lambda * (k as f64 * PI / self.n_chain as f64).cos()
    }
}

/// Returns `raw` unchanged if every invariant holds, else the first violation.
pub fn validate_params(raw: ModelParams) -> Result<ModelParams, ParamError> {
    raw.validate()?;
    Ok(raw)
}

/// Index of the chain normal mode closest to the atomic frequency.
///
/// Ties (which cannot occur for distinct cosines) resolve to the lower index.
pub fn nearest_mode_index(p: &ModelParams) -> usize {
    (1..p.n_chain)
        .min_by(|&a, &b| {
            let da = (p.mode_frequency(a) - p.omega_a).abs();
            let db = (p.mode_frequency(b) - p.omega_a).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(1)
}

/// The `k` minimizing `|Omega_k - omega_a|`, or an error if that mode is more
/// than `tol` away from resonance.
pub fn resonant_mode_index(p: &ModelParams, tol: f64) -> Result<usize, ParamError> {
    let k = nearest_mode_index(p);
    let offset = (p.mode_frequency(k) - p.omega_a).abs();
    if offset > tol {
        return Err(ParamError::NoResonantMode { closest: k, offset });
    }
    Ok(k)
}

/// One occupation-number configuration of the photon modes and ensembles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub photons_left: usize,
    /// Occupations of `b_1 … b_{N-1}`.
    pub photons_mid: Vec<usize>,
    pub photons_right: usize,
    pub excited_left: usize,
    pub excited_right: usize,
}

impl BasisState {
    pub fn vacuum(n_chain: usize) -> Self {
        BasisState {
            photons_left: 0,
            photons_mid: vec![0; n_chain - 1],
            photons_right: 0,
            excited_left: 0,
            excited_right: 0,
        }
    }

    pub fn excitation_number(&self) -> usize {
        self.photon_number() + self.excited_left + self.excited_right
    }

    pub fn photon_number(&self) -> usize {
        self.photons_left + self.photons_right + self.photons_mid.iter().sum::<usize>()
    }

    /// Flattened slot layout `[a_L, b_1 … b_{N-1}, a_R, e_L, e_R]`, which is
    /// also the lexicographic ordering key of the basis.
    #[cfg(test)]
    fn slots(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.photons_mid.len() + 4);
        out.push(self.photons_left);
        out.extend_from_slice(&self.photons_mid);
        out.push(self.photons_right);
        out.push(self.excited_left);
        out.push(self.excited_right);
        out
    }

    fn from_slots(slots: &[usize]) -> Self {
        let n = slots.len();
        BasisState {
            photons_left: slots[0],
            photons_mid: slots[1..n - 3].to_vec(),
            photons_right: slots[n - 3],
            excited_left: slots[n - 2],
            excited_right: slots[n - 1],
        }
    }
}

/// Ordered basis of one excitation-number sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    k_excitations: usize,
    n_chain: usize,
    states: Vec<BasisState>,
    index_of: HashMap<BasisState, usize>,
}

impl SectorBasis {
    pub fn k(&self) -> usize {
        self.k_excitations
    }

    pub fn n_chain(&self) -> usize {
        self.n_chain
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index_of.get(state).copied()
    }
}

/// All basis states with exactly `k` excitations, photon occupations capped
/// at `fock_cutoff` and ensemble excitations capped at `m_atoms`, in
/// lexicographic order of `[a_L, b_1 … b_{N-1}, a_R, e_L, e_R]`.
pub fn enumerate_sector(p: &ModelParams, k: usize) -> SectorBasis {
    let n_photon_modes = p.n_chain + 1;
    let mut caps = vec![p.fock_cutoff; n_photon_modes];
    caps.push(p.m_atoms);
    caps.push(p.m_atoms);

    let mut states = Vec::new();
    let mut slots = vec![0; caps.len()];
    fill_slots(&caps, 0, k, &mut slots, &mut states);

    let index_of = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    SectorBasis {
        k_excitations: k,
        n_chain: p.n_chain,
        states,
        index_of,
    }
}

// Depth-first fill with ascending values per slot yields lexicographic order.
fn fill_slots(caps: &[usize], pos: usize, remaining: usize, slots: &mut Vec<usize>, out: &mut Vec<BasisState>) {
    if pos == caps.len() - 1 {
        if remaining <= caps[pos] {
            slots[pos] = remaining;
            out.push(BasisState::from_slots(slots));
        }
        return;
    }
    let tail_capacity: usize = caps[pos + 1..].iter().sum();
    let lo = remaining.saturating_sub(tail_capacity);
    let hi = remaining.min(caps[pos]);
    for v in lo..=hi {
        slots[pos] = v;
        fill_slots(caps, pos + 1, remaining - v, slots, out);
    }
}
