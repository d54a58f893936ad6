//! Analytic trapped states.
//!
//! A trapped state with `K` excitations has no photons in the end cavities and
//! is a superposition of `|m, n, r>`: `m` photons in the resonant chain mode
//! `B_q`, `n` excited atoms on the left and `r = K - m - n` on the right.
//! It is an eigenstate of `H_1` with energy `(K - M) omega_a` as long as
//!
//! ```text
//! (g J_L^- + lambda_q^L B_q) |beta_K> = 0
//! (g J_R^- + lambda_q^R B_q) |beta_K> = 0
//! ```
//!
//! so that emission by the atoms and tunneling out of `B_q` interfere
//! destructively in both end cavities. Solutions exist for `K <= M`.

pub mod oracle;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

use crate::model::{enumerate_sector, BasisState, ModelParams, ParamError, SectorBasis};
use crate::operators::{
    build_atomic_lowering, build_h1, build_normal_mode, coupling_lambda, normal_mode_coefficient, OperatorError, Side,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BicError {
    #[error("no trapped state with K > M (K = {k}, M = {m})")]
    KExceedsM { k: usize, m: usize },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("state lives in sector K = {got}, expected K = {expected}")]
    WrongSector { expected: usize, got: usize },
}

/// Normalized amplitudes `c_{m,n}` of a trapped state.
#[derive(Debug, Clone, PartialEq)]
pub struct BicCoefficients {
    pub k_excitations: usize,
    pub m_atoms: usize,
    /// `|g| / |lambda_q^L|`.
    pub chi: f64,
    /// `lambda_q^R / lambda_q^L = (-1)^(q+1)`.
    pub sign_ratio: f64,
    /// Sign of `(-1)^q g / lambda_q^L`; the photon amplitudes carry
    /// `(photon_sign * chi)^m`.
    pub photon_sign: f64,
    /// `table[m][n]` for `0 <= m <= K`, `0 <= n <= K - m`.
    pub table: Vec<Vec<C64>>,
}

impl BicCoefficients {
    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.table[m][n]
    }

    /// Iterates `(m, n, c_{m,n})`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.table
            .iter()
            .enumerate()
            .flat_map(|(m, row)| row.iter().enumerate().map(move |(n, &c)| (m, n, c)))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter().map(|(_, _, c)| c.norm_sqr()).sum()
    }

    fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        for row in &mut self.table {
            for c in row {
                *c /= norm;
            }
        }
    }

    /// Mean photon number in `B_q`.
    pub fn mean_photons(&self) -> f64 {
        self.iter().map(|(m, _, c)| m as f64 * c.norm_sqr()).sum()
    }

    /// Mean number of excited atoms over both ensembles.
    pub fn mean_excited(&self) -> f64 {
        let k = self.k_excitations;
        self.iter().map(|(m, _, c)| (k - m) as f64 * c.norm_sqr()).sum()
    }
}

/// A state vector on one sector basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub sector: Arc<SectorBasis>,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(sector: Arc<SectorBasis>, amplitudes: Vec<C64>) -> Self {
        assert_eq!(sector.len(), amplitudes.len());
        StateVector { sector, amplitudes }
    }

    pub fn k(&self) -> usize {
        self.sector.k()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for z in &mut self.amplitudes {
            *z /= n;
        }
        self
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.amplitudes.len(), other.amplitudes.len());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// `|g| / |lambda_q^L|`.
pub fn chi(p: &ModelParams) -> Result<f64, BicError> {
    Ok(p.g.abs() / coupling_lambda(p, p.q, Side::Left)?.abs())
}

fn check_k(p: &ModelParams, k: usize) -> Result<(), BicError> {
    p.validate()?;
    if k > p.m_atoms {
        return Err(BicError::KExceedsM { k, m: p.m_atoms });
    }
    Ok(())
}

fn sign_ratio(q: usize) -> f64 {
    if q % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

fn photon_sign(p: &ModelParams) -> f64 {
    // (-1)^q g / lambda_q^L with lambda_q^L > 0
    let s = if p.q.is_multiple_of(2) { p.g } else { -p.g };
    if s < 0.0 {
        -1.0
    } else {
        1.0
    }
}

const EXACT_FACTORIAL_MAX: usize = 20;

fn factorial_exact(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `sqrt(prod num! / prod den!)`, exact factorials for small arguments and
/// log-gamma above.
fn sqrt_factorial_ratio(num: &[usize], den: &[usize]) -> f64 {
    let largest = num.iter().chain(den).copied().max().unwrap_or(0);
    if largest <= EXACT_FACTORIAL_MAX {
        let n: f64 = num.iter().map(|&x| factorial_exact(x)).product();
        let d: f64 = den.iter().map(|&x| factorial_exact(x)).product();
        (n / d).sqrt()
    } else {
        let ln: f64 = num.iter().map(|&x| ln_factorial(x as u64)).sum::<f64>()
            - den.iter().map(|&x| ln_factorial(x as u64)).sum::<f64>();
        (0.5 * ln).exp()
    }
}

/// Closed-form amplitudes
///
/// ```text
/// c_{m,n} = chi^m s^n sqrt((M-K+n+m)! / ((K-n-m)! m!)) sqrt((M-n)! / M!)
///           sqrt(K! / ((M-K)! n!)) c_{0,0}
/// ```
///
/// with `s = lambda_q^R / lambda_q^L`, normalized with `c_{0,0} > 0`. The
/// sign of `(-1)^q g` is absorbed into `chi^m`.
pub fn closed_form_coefficients(p: &ModelParams, k: usize) -> Result<BicCoefficients, BicError> {
    check_k(p, k)?;
    let m_atoms = p.m_atoms;
    let chi = chi(p)?;
    let signed_chi = photon_sign(p) * chi;
    let ratio = sign_ratio(p.q);

    let table = (0..=k)
        .map(|m| {
            (0..=k - m)
                .map(|n| {
                    let mag = sqrt_factorial_ratio(
                        &[m_atoms - k + n + m, m_atoms - n, k],
                        &[k - n - m, m, m_atoms, m_atoms - k, n],
                    );
                    C64::new(signed_chi.powi(m as i32) * ratio.powi(n as i32) * mag, 0.0)
                })
                .collect()
        })
        .collect();
    let mut coeffs = BicCoefficients {
        k_excitations: k,
        m_atoms,
        chi,
        sign_ratio: ratio,
        photon_sign: photon_sign(p),
        table,
    };
    coeffs.normalize();
    Ok(coeffs)
}

/// Amplitudes obtained by forward recursion.
///
/// The zero-photon seeds follow from requiring both recursions to produce the
/// same `c_{1,n}`:
/// `c_{0,n+1} = (lambda^L / lambda^R) sqrt((K-n)(M-K+n+1) / ((n+1)(M-n))) c_{0,n}`.
/// Each photon row then follows from the right-side recursion
/// `c_{m+1,n} = -(g / lambda^R) sqrt((K-m-n)(M-K+m+n+1)) / sqrt(m+1) c_{m,n}`.
pub fn recursive_coefficients(p: &ModelParams, k: usize) -> Result<BicCoefficients, BicError> {
    check_k(p, k)?;
    let mf = p.m_atoms as f64;
    let kf = k as f64;
    let lam_l = coupling_lambda(p, p.q, Side::Left)?;
    let lam_r = coupling_lambda(p, p.q, Side::Right)?;

    let mut table: Vec<Vec<C64>> = (0..=k).map(|m| vec![C64::default(); k - m + 1]).collect();
    table[0][0] = C64::new(1.0, 0.0);
    for n in 0..k {
        let nf = n as f64;
        let step = (lam_l / lam_r) * ((kf - nf) * (mf - kf + nf + 1.0) / ((nf + 1.0) * (mf - nf))).sqrt();
        table[0][n + 1] = table[0][n] * step;
    }
    for m in 0..k {
        for n in 0..k - m {
            let r = (k - m - n) as f64;
            let step = -(p.g / lam_r) * (r * (mf - r + 1.0)).sqrt() / ((m + 1) as f64).sqrt();
            table[m + 1][n] = table[m][n] * step;
        }
    }
    let mut coeffs = BicCoefficients {
        k_excitations: k,
        m_atoms: p.m_atoms,
        chi: chi(p)?,
        sign_ratio: sign_ratio(p.q),
        photon_sign: photon_sign(p),
        table,
    };
    coeffs.normalize();
    Ok(coeffs)
}

/// Chain occupations of `(B_q^dag)^m / sqrt(m!) |0>`, built by repeated
/// application of `B_q^dag`.
pub fn normal_mode_fock_state(n_chain: usize, q: usize, m: usize) -> BTreeMap<Vec<usize>, f64> {
    let coeffs: Vec<f64> = (1..n_chain).map(|n| normal_mode_coefficient(n_chain, q, n)).collect();
    let mut state = BTreeMap::new();
    state.insert(vec![0; n_chain - 1], 1.0);
    for step in 1..=m {
        let mut next: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (occ, amp) in &state {
            for (i, &u) in coeffs.iter().enumerate() {
                if u == 0.0 {
                    continue;
                }
                let mut raised = occ.clone();
                raised[i] += 1;
                *next.entry(raised).or_default() += amp * u * (occ[i] as f64 + 1.0).sqrt();
            }
        }
        let norm = (step as f64).sqrt();
        state = next.into_iter().map(|(o, a)| (o, a / norm)).collect();
    }
    state
}

/// Embeds a coefficient table into the full sector-`K` basis.
pub fn embed_coefficients(
    p: &ModelParams,
    coeffs: &BicCoefficients,
    sector: Arc<SectorBasis>,
) -> Result<StateVector, BicError> {
    let k = coeffs.k_excitations;
    if sector.k() != k {
        return Err(BicError::WrongSector {
            expected: k,
            got: sector.k(),
        });
    }
    p.require_cutoff(k)?;
    let mut amps = vec![C64::default(); sector.len()];
    for m in 0..=k {
        let chain = normal_mode_fock_state(p.n_chain, p.q, m);
        for n in 0..=k - m {
            let c = coeffs.get(m, n);
            if c == C64::default() {
                continue;
            }
            for (occ, &a) in &chain {
                let state = BasisState {
                    photons_left: 0,
                    photons_mid: occ.clone(),
                    photons_right: 0,
                    excited_left: n,
                    excited_right: k - m - n,
                };
                let idx = sector
                    .index_of(&state)
                    .expect("cutoff >= K keeps every embedded state in the sector");
                amps[idx] += c * a;
            }
        }
    }
    Ok(StateVector::new(sector, amps))
}

/// The trapped state `|beta_K>` on the sector-`K` basis.
pub fn assemble_bic_state(p: &ModelParams, k: usize) -> Result<StateVector, BicError> {
    let coeffs = closed_form_coefficients(p, k)?;
    p.require_cutoff(k)?;
    embed_coefficients(p, &coeffs, Arc::new(enumerate_sector(p, k)))
}

/// Residual norms of the eigenvalue equation and both trapping conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingResiduals {
    /// `||(H_1 - (K - M) omega_a) psi||`
    pub energy: f64,
    /// `||(g J_L^- + lambda_q^L B_q) psi||`
    pub left: f64,
    /// `||(g J_R^- + lambda_q^R B_q) psi||`
    pub right: f64,
}

impl TrappingResiduals {
    pub fn max(&self) -> f64 {
        self.energy.max(self.left).max(self.right)
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn verify_trapping(p: &ModelParams, psi: &StateVector, k: usize) -> Result<TrappingResiduals, BicError> {
    if psi.k() != k {
        return Err(BicError::WrongSector {
            expected: k,
            got: psi.k(),
        });
    }
    let sector = &psi.sector;
    let e_b = (k as f64 - p.m_atoms as f64) * p.omega_a;
    let h_psi = build_h1(p, sector).apply(&psi.amplitudes);
    let shifted: Vec<C64> = h_psi.iter().zip(&psi.amplitudes).map(|(h, a)| h - a * e_b).collect();
    let energy = vec_norm(&shifted);
    if k == 0 {
        return Ok(TrappingResiduals {
            energy,
            left: 0.0,
            right: 0.0,
        });
    }
    let lower = enumerate_sector(p, k - 1);
    let bq = build_normal_mode(p, sector, &lower, p.q)?;
    let mut cond = [0.0; 2];
    for (slot, side) in cond.iter_mut().zip(Side::BOTH) {
        let op = build_atomic_lowering(p, sector, &lower, side)?
            .scale(C64::new(p.g, 0.0))
            .add(&bq.scale(C64::new(coupling_lambda(p, p.q, side)?, 0.0)));
        *slot = vec_norm(&op.apply(&psi.amplitudes));
    }
    Ok(TrappingResiduals {
        energy,
        left: cond[0],
        right: cond[1],
    })
}

/// Expectation values of `B_q^dag B_q` and of the excited-atom number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeObservables {
    pub k_excitations: usize,
    pub mean_photons: f64,
    pub mean_excited: f64,
}

impl RegimeObservables {
    pub fn photon_fraction(&self) -> f64 {
        if self.k_excitations == 0 {
            0.0
        } else {
            self.mean_photons / self.k_excitations as f64
        }
    }

    pub fn atom_fraction(&self) -> f64 {
        if self.k_excitations == 0 {
            0.0
        } else {
            self.mean_excited / self.k_excitations as f64
        }
    }
}

pub fn regime_observables(p: &ModelParams, k: usize) -> Result<RegimeObservables, BicError> {
    let c = closed_form_coefficients(p, k)?;
    Ok(RegimeObservables {
        k_excitations: k,
        mean_photons: c.mean_photons(),
        mean_excited: c.mean_excited(),
    })
}

/// Zero-photon truncation of the trapped state, renormalized.
pub fn subradiant_approx(p: &ModelParams, k: usize) -> Result<StateVector, BicError> {
    let mut c = closed_form_coefficients(p, k)?;
    for row in c.table.iter_mut().skip(1) {
        row.iter_mut().for_each(|z| *z = C64::default());
    }
    c.normalize();
    p.require_cutoff(k)?;
    embed_coefficients(p, &c, Arc::new(enumerate_sector(p, k)))
}

/// All `K` excitations as photons in `B_q`.
pub fn fock_approx(p: &ModelParams, k: usize) -> Result<StateVector, BicError> {
    let mut c = closed_form_coefficients(p, k)?;
    for row in c.table.iter_mut() {
        row.iter_mut().for_each(|z| *z = C64::default());
    }
    c.table[k][0] = C64::new(1.0, 0.0);
    p.require_cutoff(k)?;
    embed_coefficients(p, &c, Arc::new(enumerate_sector(p, k)))
}
