//! The four experiments. Each returns the full output text (header, CSV
//! rows, trailing `#` result lines) and the list of failed checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cavity_bic::bic::oracle::null_space_bic;
use cavity_bic::bic::{
    chi, closed_form_coefficients, embed_coefficients, regime_observables, verify_trapping, BicError,
};
use cavity_bic::dynamics::scenario::{subradiance_run, subradiance_run_from, SubradianceRun};
use cavity_bic::dynamics::DynamicsError;
use cavity_bic::linear::{gamma_approx, trapped_mode_decay, LinearError};
use cavity_bic::model::{enumerate_sector, ModelParams};
use cavity_bic::operators::{coupling_lambda, Side};
use cavity_bic::C64;

use crate::config::{RunConfig, Settings};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    /// Human-readable descriptions of checks that missed their tolerance.
    pub violations: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn bic_error(e: BicError) -> CliError {
    match e {
        BicError::KExceedsM { k, m } => CliError::Validation(format!("no trapped state: K = {k} exceeds M = {m}")),
        other => CliError::Validation(other.to_string()),
    }
}

fn linear_error(e: LinearError) -> CliError {
    match e {
        LinearError::UnsupportedChain(_) => CliError::Validation(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

fn dynamics_error(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::StepUnderflow { .. } | DynamicsError::Positivity { .. } | DynamicsError::NonFinite { .. } => {
            CliError::Numerical(e.to_string())
        }
        other => CliError::Validation(other.to_string()),
    }
}

struct Csv {
    inner: csv::Writer<Vec<u8>>,
}

impl Csv {
    fn new(columns: &[&str]) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(Vec::new());
        inner.write_record(columns).map_err(csv_error)?;
        Ok(Csv { inner })
    }

    fn row(&mut self, values: &[String]) -> Result<(), CliError> {
        self.inner.write_record(values).map_err(csv_error)
    }

    fn finish(self) -> Result<String, CliError> {
        let bytes = self.inner.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of ascii fields"))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let (body, violations) = match &config.settings {
        Settings::Bic { k, tol } => run_bic(&config.params, *k, *tol)?,
        Settings::SweepChi { k, chi } => (run_sweep_chi(&config.params, *k, chi)?, Vec::new()),
        Settings::Evolve {
            n_left,
            n_right,
            t_end,
            options,
            tol,
        } => {
            let run = match config.seed {
                Some(seed) => {
                    let psi = random_atomic_state(config.params.m_atoms, seed);
                    subradiance_run_from(&config.params, &psi, *t_end, options)
                }
                None => subradiance_run(&config.params, *n_left, *n_right, *t_end, options),
            }
            .map_err(dynamics_error)?;
            evolve_report(&run, *tol)?
        }
        Settings::Qfactor { delta_over_gc, tol } => run_qfactor(&config.params, delta_over_gc, *tol)?,
    };
    Ok(Report {
        text: format!("{}{}", config.header(), body),
        violations,
    })
}

/// Coefficient table, trapping residuals, null-space overlap and regime
/// observables of `beta_K`.
fn run_bic(p: &ModelParams, k: usize, tol: f64) -> Result<(String, Vec<String>), CliError> {
    let coeffs = closed_form_coefficients(p, k).map_err(bic_error)?;
    p.require_cutoff(k).map_err(|e| CliError::Validation(e.to_string()))?;
    let sector = std::sync::Arc::new(enumerate_sector(p, k));
    let psi = embed_coefficients(p, &coeffs, sector).map_err(bic_error)?;
    let res = verify_trapping(p, &psi, k).map_err(bic_error)?;
    let oracle = null_space_bic(p, k).map_err(bic_error)?;
    let overlap = psi.inner(&oracle.state).norm();
    let obs = regime_observables(p, k).map_err(bic_error)?;
    let chi = chi(p).map_err(bic_error)?;

    let mut csv = Csv::new(&["m", "n", "r", "re", "im"])?;
    for (m, n, c) in coeffs.iter() {
        let r = k - m - n;
        csv.row(&[m.to_string(), n.to_string(), r.to_string(), num(c.re), num(c.im)])?;
    }
    let mut text = csv.finish()?;
    let energy = (k as f64 - p.m_atoms as f64) * p.omega_a;
    for (name, value) in [
        ("chi", chi),
        ("energy", energy),
        ("residual_energy", res.energy),
        ("residual_left", res.left),
        ("residual_right", res.right),
        ("null_space_overlap", overlap),
        ("mean_photons", obs.mean_photons),
        ("mean_excited", obs.mean_excited),
        ("photon_fraction", obs.photon_fraction()),
        ("atom_fraction", obs.atom_fraction()),
    ] {
        text.push_str(&format!("# result {name} = {}\n", num(value)));
    }
    text.push_str(&format!("# result null_space_dimension = {}\n", oracle.nullity));

    let mut violations = Vec::new();
    if res.max() >= tol {
        violations.push(format!("trapping residual {:e} >= tol {tol:e}", res.max()));
    }
    if (1.0 - overlap).abs() >= tol {
        violations.push(format!("null-space overlap {overlap} differs from 1 by >= {tol:e}"));
    }
    Ok((text, violations))
}

fn run_sweep_chi(p: &ModelParams, k: usize, grid: &[f64]) -> Result<String, CliError> {
    let lambda_q = coupling_lambda(p, p.q, Side::Left)
        .map_err(|e| CliError::Validation(e.to_string()))?
        .abs();
    let rows = grid
        .par_iter()
        .map(|&x| {
            let q = ModelParams {
                g: x * lambda_q,
                ..p.clone()
            };
            regime_observables(&q, k).map(|o| (x, o))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(bic_error)?;
    let mut csv = Csv::new(&[
        "chi",
        "mean_photons",
        "mean_excited",
        "photon_fraction",
        "atom_fraction",
    ])?;
    for (x, o) in rows {
        csv.row(&[
            num(x),
            num(o.mean_photons),
            num(o.mean_excited),
            num(o.photon_fraction()),
            num(o.atom_fraction()),
        ])?;
    }
    csv.finish()
}

/// Normalized atomic state with independent uniform real and imaginary parts.
pub fn random_atomic_state(m_atoms: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = (m_atoms + 1) * (m_atoms + 1);
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn evolve_report(run: &SubradianceRun, tol: f64) -> Result<(String, Vec<String>), CliError> {
    let m = run.trapped.len() - 1;
    let mut columns = vec!["lambda_t".to_string()];
    columns.extend((0..=m).map(|i| format!("P{i}")));
    columns.extend(["trace".to_string(), "min_eig".to_string()]);
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&cols)?;
    let traj = &run.trajectory;
    for (snap, probs) in traj.snapshots.iter().zip(&run.probabilities) {
        let mut row = vec![num(snap.t)];
        row.extend(probs.iter().map(|&x| num(x)));
        row.push(num(snap.rho.trace().re));
        row.push(num(snap.min_eig));
        csv.row(&row)?;
    }
    let mut text = csv.finish()?;
    let steady = traj.steady_at.map_or("none".to_string(), num);
    text.push_str(&format!("# result steady_at = {steady}\n"));
    for (i, p) in run.predicted_probabilities().iter().enumerate() {
        text.push_str(&format!("# result predicted_P{i} = {}\n", num(*p)));
    }
    let drift = traj.trace_drift();
    let min_eig = traj.min_eigenvalue();
    text.push_str(&format!("# result trace_drift = {}\n", num(drift)));
    text.push_str(&format!("# result min_eigenvalue = {}\n", num(min_eig)));

    let mut violations = Vec::new();
    if drift >= tol {
        violations.push(format!("trace drift {drift:e} >= tol {tol:e}"));
    }
    if min_eig < -tol {
        violations.push(format!("minimum eigenvalue {min_eig:e} < -{tol:e}"));
    }
    Ok((text, violations))
}

fn run_qfactor(p: &ModelParams, grid: &[f64], tol: f64) -> Result<(String, Vec<String>), CliError> {
    let rows = grid
        .par_iter()
        .map(|&d| {
            let q = ModelParams {
                omega_a: p.omega_c - d * p.gamma_c,
                ..p.clone()
            };
            let exact = trapped_mode_decay(&q)?.decay;
            let approx = gamma_approx(&q).value;
            Ok((d, exact, approx))
        })
        .collect::<Result<Vec<_>, LinearError>>()
        .map_err(linear_error)?;
    let mut csv = Csv::new(&["delta_over_gc", "q_exact", "q_approx", "rel_err"])?;
    let mut worst: f64 = 0.0;
    for &(d, exact, approx) in &rows {
        if exact.is_nan() || exact <= 0.0 {
            return Err(CliError::Numerical(format!(
                "trapped mode is undamped at delta/gamma_c = {d}"
            )));
        }
        let rel = (exact - approx).abs() / exact;
        worst = worst.max(rel);
        csv.row(&[num(d), num(p.gamma_c / exact), num(p.gamma_c / approx), num(rel)])?;
    }
    let mut text = csv.finish()?;
    text.push_str(&format!("# result max_rel_err = {}\n", num(worst)));
    let violations = if worst >= tol {
        vec![format!("max relative error {worst:e} >= tol {tol:e}")]
    } else {
        Vec::new()
    };
    Ok((text, violations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_state_is_normalized_and_reproducible() {
        let a = random_atomic_state(2, 11);
        let b = random_atomic_state(2, 11);
        assert_eq!(a, b);
        assert_ne!(a, random_atomic_state(2, 12));
        assert!((a.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn number_format_has_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
