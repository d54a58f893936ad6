//! Master-equation runs checked against the linear model and the
//! collective-spin picture.

use cavity_bic::dynamics::scenario::{seeded_photon_decay, subradiance_run};
use cavity_bic::dynamics::EvolveOptions;
use cavity_bic::linear::trapped_mode_decay;
use cavity_bic::model::ModelParams;

fn relaxation_params(gamma_c: f64) -> ModelParams {
    ModelParams {
        gamma_c,
        fock_cutoff: 2,
        ..ModelParams::triple_cavity(2, 0.1)
    }
}

#[test]
fn seeded_photon_decays_at_twice_the_linear_rate() {
    let p = ModelParams {
        n_chain: 2,
        m_atoms: 2,
        omega_c: 0.0,
        omega_a: -1.0,
        g: 10.0,
        lambda: 1.0,
        gamma_c: 1.0,
        gamma_a: 1e-2,
        q: 1,
        fock_cutoff: 1,
    };
    let gamma = trapped_mode_decay(&p).unwrap().decay;
    let (fit, _) = seeded_photon_decay(&p, 2000.0, (200.0, 2000.0)).unwrap();
    assert!(!fit.noisy, "{fit:?}");
    let ratio = fit.rate / (2.0 * gamma);
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn relaxation_is_monotone_and_ends_in_a_mixture_of_trapped_states() {
    let options = EvolveOptions {
        snapshot_interval: 5.0,
        ..EvolveOptions::default()
    };
    let run = subradiance_run(&relaxation_params(1.0), 2, 0, 1e5, &options).unwrap();
    assert!(run.trajectory.steady_at.is_some());
    assert!(run.drift(2) < 1e-8);
    for w in run.probabilities.windows(2) {
        assert!(w[1][0] >= w[0][0] - 1e-9);
        assert!(w[1][1] >= w[0][1] - 1e-9);
    }
    let last = run.final_probabilities();
    let total: f64 = last.iter().sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    let purity = run.trajectory.last().rho.purity();
    let mixed: f64 = last.iter().map(|x| x * x).sum();
    assert!((purity - mixed).abs() / mixed < 0.02, "{purity} vs {mixed}");
    let predicted: f64 = run.prediction.iter().map(|x| x * x).sum();
    assert!((purity - predicted).abs() / predicted < 0.02, "{purity} vs {predicted}");
}

#[test]
fn without_leakage_nothing_relaxes() {
    let options = EvolveOptions {
        snapshot_interval: 10.0,
        ..EvolveOptions::default()
    };
    let run = subradiance_run(&relaxation_params(0.0), 2, 0, 200.0, &options).unwrap();
    assert_eq!(run.trajectory.steady_at, None);
    assert!((run.trajectory.last().rho.purity() - 1.0).abs() < 1e-8);
    assert!(run.trajectory.trace_drift() < 1e-10);
}
