//! Dormand-Prince 5(4) integration of the master equation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{DensityMatrix, DynamicsError, Liouvillian};

type Blocks = Vec<DMatrix<C64>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated from the generator when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Spacing of recorded snapshots.
    pub snapshot_interval: f64,
    /// Stop once two consecutive snapshots have
    /// `max |d rho/dt| < steady_tol * lambda`.
    pub stop_at_steady: bool,
    pub steady_tol: f64,
    /// Abort when the smallest eigenvalue at a snapshot drops below
    /// `-positivity_tol`.
    pub positivity_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rtol: 1e-8,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            snapshot_interval: 1.0,
            stop_at_steady: true,
            steady_tol: 1e-9,
            positivity_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub rho: DensityMatrix,
    /// `max |d rho/dt|` at `t`.
    pub derivative_max: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// Time at which the steady-state criterion was met.
    pub steady_at: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial snapshot")
    }

    /// `(t, f(rho(t)))` for every snapshot.
    pub fn series<F: Fn(&DensityMatrix) -> f64>(&self, f: F) -> Vec<(f64, f64)> {
        self.snapshots.iter().map(|s| (s.t, f(&s.rho))).collect()
    }

    /// Largest `|Tr rho(t) - Tr rho(0)|` over the snapshots.
    pub fn trace_drift(&self) -> f64 {
        let t0 = self.snapshots[0].rho.trace();
        self.snapshots
            .iter()
            .map(|s| (s.rho.trace() - t0).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over the snapshots.
    pub fn min_eigenvalue(&self) -> f64 {
        self.snapshots.iter().map(|s| s.min_eig).fold(f64::INFINITY, f64::min)
    }
}

const A: [&[f64]; 7] = [
    &[],
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine(y: &Blocks, h: f64, coeffs: &[f64], k: &[Blocks]) -> Blocks {
    let mut out = y.clone();
    for (c, kb) in coeffs.iter().zip(k) {
        if *c == 0.0 {
            continue;
        }
        let w = C64::new(h * c, 0.0);
        for (o, x) in out.iter_mut().zip(kb) {
            *o += x * w;
        }
    }
    out
}

fn derivative(l: &Liouvillian, y: &Blocks) -> Blocks {
    let mut out = Vec::with_capacity(y.len());
    l.apply_into(y, &mut out);
    out
}

fn max_abs(b: &Blocks) -> f64 {
    b.iter().flat_map(|m| m.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

fn error_norm(y: &Blocks, y_new: &Blocks, h: f64, k: &[Blocks], o: &EvolveOptions) -> f64 {
    let mut worst: f64 = 0.0;
    for (bi, (yb, nb)) in y.iter().zip(y_new).enumerate() {
        for idx in 0..yb.len() {
            let err: C64 = E.iter().zip(k).map(|(e, kb)| kb[bi][idx] * (*e * h)).sum();
            let scale = o.atol + o.rtol * yb[idx].norm().max(nb[idx].norm());
            worst = worst.max(err.norm() / scale);
        }
    }
    worst
}

fn snapshot(l: &Liouvillian, t: f64, rho: &DensityMatrix, o: &EvolveOptions) -> Result<Snapshot, DynamicsError> {
    if !rho.is_finite() {
        return Err(DynamicsError::NonFinite { t });
    }
    let min_eig = rho.min_eigenvalue();
    if min_eig < -o.positivity_tol {
        return Err(DynamicsError::Positivity { t, min_eig });
    }
    Ok(Snapshot {
        t,
        rho: rho.clone(),
        derivative_max: l.apply(rho).max_abs(),
        min_eig,
    })
}

/// Integrates `rho0` from `t = 0` to `t_end`, recording a snapshot every
/// `snapshot_interval` (and at `t_end`).
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_end: f64,
    o: &EvolveOptions,
) -> Result<Trajectory, DynamicsError> {
    if rho0.k_max() != l.k_max() {
        return Err(DynamicsError::DimensionMismatch {
            expected: l.k_max() + 1,
            got: rho0.k_max() + 1,
        });
    }
    for (s, b) in l.sectors().iter().zip(rho0.blocks()) {
        if b.nrows() != s.len() {
            return Err(DynamicsError::DimensionMismatch {
                expected: s.len(),
                got: b.nrows(),
            });
        }
    }
    let mut rho = rho0.clone();
    rho.symmetrize();
    let mut t = 0.0;
    let mut snaps = vec![snapshot(l, t, &rho, o)?];
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        steady_at: None,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let steady_threshold = o.steady_tol * l.lambda();
    let mut quiet = usize::from(snaps[0].derivative_max < steady_threshold);

    let mut y: Blocks = rho.blocks().to_vec();
    let mut f0 = derivative(l, &y);
    let mut h = o.h_init.unwrap_or_else(|| {
        let rate = max_abs(&f0) / max_abs(&y).max(f64::MIN_POSITIVE);
        if rate > 0.0 {
            (0.01 / rate).min(o.snapshot_interval)
        } else {
            o.snapshot_interval
        }
    });
    h = h.min(o.h_max);
    let mut next_snap = o.snapshot_interval.min(t_end);

    while t < t_end {
        let target = next_snap;
        let h_try = h.min(target - t);
        let last_in_interval = h_try >= target - t;

        let mut k: Vec<Blocks> = Vec::with_capacity(7);
        k.push(f0.clone());
        for stage in 1..7 {
            let ys = combine(&y, h_try, A[stage], &k);
            k.push(derivative(l, &ys));
        }
        let y_new = combine(&y, h_try, A[6], &k);
        let err = error_norm(&y, &y_new, h_try, &k, o);

        if err <= 1.0 {
            traj.accepted_steps += 1;
            t = if last_in_interval { target } else { t + h_try };
            let mut r = rho.with_blocks(y_new);
            r.symmetrize();
            y = r.blocks().to_vec();
            f0 = k.pop().expect("seven stages");
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a step shortened to land on a snapshot does not shrink h
            h = if h_try < h {
                h.max(h_try * factor)
            } else {
                h_try * factor
            }
            .min(o.h_max);
            if last_in_interval {
                let s = snapshot(l, t, &r, o)?;
                quiet = if s.derivative_max < steady_threshold {
                    quiet + 1
                } else {
                    0
                };
                snaps.push(s);
                if o.stop_at_steady && quiet >= 2 {
                    traj.steady_at = Some(t);
                    break;
                }
                next_snap = (target + o.snapshot_interval).min(t_end);
            }
            rho = r;
        } else {
            traj.rejected_steps += 1;
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = h_try * factor;
            if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(DynamicsError::StepUnderflow { t, h });
            }
        }
    }
    traj.snapshots = snaps;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lindblad_generator, sector_space, DensityMatrix};
    use crate::model::{BasisState, ModelParams};

    fn basis_rho(p: &ModelParams, k_max: usize, state: &BasisState) -> DensityMatrix {
        let sectors = sector_space(p, k_max).unwrap();
        let k = state.excitation_number();
        let idx = sectors[k].index_of(state).unwrap();
        let mut rho = DensityMatrix::zeros(sectors);
        rho.block_mut(k)[(idx, idx)] = C64::new(1.0, 0.0);
        rho
    }

    #[test]
    fn frozen_without_coupling_or_loss() {
        let p = ModelParams {
            fock_cutoff: 2,
            ..ModelParams::triple_cavity(2, 0.0)
        };
        let l = lindblad_generator(&p, 2).unwrap();
        let mut s = BasisState::vacuum(2);
        s.excited_left = 2;
        let rho0 = basis_rho(&p, 2, &s);
        let o = EvolveOptions {
            stop_at_steady: false,
            ..Default::default()
        };
        let traj = evolve(&l, &rho0, 5.0, &o).unwrap();
        assert_eq!(traj.snapshots.len(), 6);
        for snap in &traj.snapshots {
            for (a, b) in snap.rho.blocks().iter().zip(rho0.blocks()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn end_photon_decays_exponentially() {
        let p = ModelParams {
            gamma_c: 0.7,
            lambda: 1e-300,
            ..ModelParams::triple_cavity(1, 0.0)
        };
        let l = lindblad_generator(&p, 1).unwrap();
        let mut s = BasisState::vacuum(2);
        s.photons_left = 1;
        let rho0 = basis_rho(&p, 1, &s);
        let o = EvolveOptions {
            stop_at_steady: false,
            snapshot_interval: 0.5,
            ..Default::default()
        };
        let traj = evolve(&l, &rho0, 6.0, &o).unwrap();
        for snap in &traj.snapshots {
            let expected = (-0.7 * snap.t).exp();
            assert!((snap.rho.sector_population(1) - expected).abs() < 1e-8, "t={}", snap.t);
        }
        assert!(traj.trace_drift() < 1e-12);
    }

    #[test]
    fn steady_state_detection_and_end_time() {
        let p = ModelParams {
            gamma_c: 1.0,
            ..ModelParams::triple_cavity(1, 0.5)
        };
        let l = lindblad_generator(&p, 1).unwrap();
        let mut s = BasisState::vacuum(2);
        s.photons_right = 1;
        let rho0 = basis_rho(&p, 1, &s);
        let traj = evolve(&l, &rho0, 1e4, &EvolveOptions::default()).unwrap();
        let stop = traj.steady_at.expect("lossy run settles");
        assert!(stop < 1e4);
        assert!(traj.last().derivative_max < 1e-9);

        let lossless = lindblad_generator(&ModelParams { gamma_c: 0.0, ..p }, 1).unwrap();
        let traj = evolve(&lossless, &rho0, 20.0, &EvolveOptions::default()).unwrap();
        assert!(traj.steady_at.is_none());
        assert_eq!(traj.last().t, 20.0);
    }

    #[test]
    fn rejects_mismatched_state() {
        let p = ModelParams::triple_cavity(1, 0.5);
        let l = lindblad_generator(&p, 1).unwrap();
        let rho = DensityMatrix::zeros(sector_space(&p, 0).unwrap());
        assert!(matches!(
            evolve(&l, &rho, 1.0, &EvolveOptions::default()),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
    }
}
