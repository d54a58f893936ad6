//! Flat `key = value` configuration with per-experiment defaults.
//!
//! Resolution order: experiment defaults, then the config file, then `--set`
//! overrides. Unknown keys are rejected. Frequencies, rates and times are in
//! units of `lambda`, which is fixed to 1.

use std::collections::BTreeMap;
use std::fmt;

use cavity_bic::dynamics::EvolveOptions;
use cavity_bic::model::{nearest_mode_index, ModelParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Bic,
    SweepChi,
    Evolve,
    Qfactor,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Bic => "bic",
            Experiment::SweepChi => "sweep-chi",
            Experiment::Evolve => "evolve",
            Experiment::Qfactor => "qfactor",
        }
    }

    /// Every accepted key with its default.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Bic => &[
                ("n_chain", "2"),
                ("m_atoms", "2"),
                ("k", "auto"),
                ("omega_c", "0"),
                ("delta", "0"),
                ("g", "0.1"),
                ("q", "auto"),
                ("fock_cutoff", "auto"),
                ("tol", "1e-10"),
            ],
            Experiment::SweepChi => &[
                ("n_chain", "2"),
                ("m_atoms", "2"),
                ("k", "auto"),
                ("omega_c", "0"),
                ("q", "auto"),
                ("chi_min", "0.1"),
                ("chi_max", "10"),
                ("chi_points", "41"),
                ("chi_spacing", "log"),
            ],
            Experiment::Evolve => &[
                ("n_chain", "2"),
                ("m_atoms", "2"),
                ("omega_c", "0"),
                ("delta", "0"),
                ("g", "0.1"),
                ("gamma_c", "1"),
                ("gamma_a", "0"),
                ("q", "auto"),
                ("fock_cutoff", "auto"),
                ("n_left", "auto"),
                ("n_right", "0"),
                ("t_end", "1e5"),
                ("snapshot", "1"),
                ("rtol", "1e-8"),
                ("atol", "1e-12"),
                ("steady_tol", "1e-9"),
                ("positivity_tol", "1e-6"),
                ("tol", "1e-8"),
            ],
            Experiment::Qfactor => &[
                ("m_atoms", "2"),
                ("omega_c", "0"),
                ("g", "10"),
                ("gamma_c", "1"),
                ("gamma_a", "0.01"),
                ("delta_min", "-3"),
                ("delta_max", "3"),
                ("delta_points", "61"),
                ("tol", "0.05"),
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Settings {
    Bic {
        k: usize,
        tol: f64,
    },
    SweepChi {
        k: usize,
        chi: Vec<f64>,
    },
    Evolve {
        n_left: usize,
        n_right: usize,
        t_end: f64,
        options: EvolveOptions,
        tol: f64,
    },
    Qfactor {
        /// `delta / gamma_c` grid.
        delta_over_gc: Vec<f64>,
        tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    pub settings: Settings,
    /// Random initial atomic state (evolve only).
    pub seed: Option<u64>,
    /// Raw resolved entries, echoed in output headers.
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// `#`-prefixed header lines echoing the resolved configuration.
    pub fn header(&self) -> String {
        let mut out = format!("# cavity-bic {}\n# units: lambda = 1\n", self.experiment);
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        out.push_str(&format!("# seed = {seed}\n"));
        let p = &self.params;
        let mut resolved = format!(
            "# resolved: n_chain = {}, m_atoms = {}, q = {}",
            p.n_chain, p.m_atoms, p.q
        );
        match self.experiment {
            Experiment::Bic | Experiment::Evolve => {
                resolved.push_str(&format!(", fock_cutoff = {}, omega_a = {}", p.fock_cutoff, p.omega_a))
            }
            Experiment::SweepChi => resolved.push_str(&format!(", fock_cutoff = {}", p.fock_cutoff)),
            Experiment::Qfactor => {}
        }
        out.push_str(&resolved);
        out.push('\n');
        out
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a key may appear once.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = split_pair(line).map_err(|e| CliError::Validation(format!("config line {}: {e}", i + 1)))?;
        if out.insert(k.clone(), v).is_some() {
            return Err(CliError::Validation(format!(
                "config line {}: duplicate key `{k}`",
                i + 1
            )));
        }
    }
    Ok(out)
}

fn split_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected key=value, got `{s}`"));
    }
    Ok((k.to_string(), v.to_string()))
}

struct Entries<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Entries<'_> {
    fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).expect("every key has a default")
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key);
        let x: f64 = v
            .parse()
            .map_err(|_| CliError::Validation(format!("`{key}` must be a number (got `{v}`)")))?;
        if !x.is_finite() {
            return Err(CliError::Validation(format!("`{key}` must be finite (got `{v}`)")));
        }
        Ok(x)
    }

    fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x = self.f64(key)?;
        if x <= 0.0 {
            return Err(CliError::Validation(format!("`{key}` must be positive (got {x})")));
        }
        Ok(x)
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| CliError::Validation(format!("`{key}` must be a nonnegative integer (got `{v}`)")))
    }

    fn usize_or(&self, key: &str, auto: usize) -> Result<usize, CliError> {
        if self.raw(key) == "auto" {
            Ok(auto)
        } else {
            self.usize(key)
        }
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }
}

/// Merges defaults, file entries and `--set` overrides, then builds the typed
/// configuration.
pub fn resolve(
    experiment: Experiment,
    file: Option<&str>,
    sets: &[String],
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    let defaults = experiment.defaults();
    let mut entries: BTreeMap<String, String> = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut overrides = match file {
        Some(text) => parse_config_text(text)?,
        None => BTreeMap::new(),
    };
    for s in sets {
        let (k, v) = split_pair(s).map_err(|e| CliError::Validation(format!("--set: {e}")))?;
        overrides.insert(k, v);
    }
    for (k, v) in overrides {
        if !entries.contains_key(&k) {
            let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            return Err(CliError::Validation(format!(
                "unknown key `{k}` for {experiment}; accepted: {}",
                known.join(", ")
            )));
        }
        entries.insert(k, v);
    }
    if seed.is_some() && experiment != Experiment::Evolve {
        return Err(CliError::Validation(format!(
            "--seed selects a random initial state and only applies to evolve, not {experiment}"
        )));
    }
    let e = Entries { map: &entries };
    let (params, settings) = build(experiment, &e, seed)?;
    params.validate().map_err(|err| CliError::Validation(err.to_string()))?;
    Ok(RunConfig {
        experiment,
        params,
        settings,
        seed,
        entries,
    })
}

fn base_params(e: &Entries<'_>, g: f64) -> Result<ModelParams, CliError> {
    let n_chain = if e.has("n_chain") { e.usize("n_chain")? } else { 2 };
    let omega_c = e.f64("omega_c")?;
    let delta = if e.has("delta") { e.f64("delta")? } else { 0.0 };
    let m_atoms = e.usize("m_atoms")?;
    let mut p = ModelParams {
        n_chain,
        m_atoms,
        omega_c,
        omega_a: omega_c - delta,
        g,
        lambda: 1.0,
        gamma_c: if e.has("gamma_c") { e.f64("gamma_c")? } else { 0.0 },
        gamma_a: if e.has("gamma_a") { e.f64("gamma_a")? } else { 0.0 },
        q: 1,
        fock_cutoff: 1,
    };
    if n_chain < 2 {
        return Err(CliError::Validation(format!(
            "n_chain must be at least 2 (got {n_chain})"
        )));
    }
    let auto_q = nearest_mode_index(&p);
    p.q = if e.has("q") { e.usize_or("q", auto_q)? } else { auto_q };
    Ok(p)
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing, name: &str) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::Validation(format!("empty {name} grid")));
    }
    if hi < lo {
        return Err(CliError::Validation(format!("{name}_max < {name}_min")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    Ok(match spacing {
        Spacing::Linear => (0..n).map(|i| lo + (hi - lo) * step(i)).collect(),
        Spacing::Log => {
            if lo <= 0.0 {
                return Err(CliError::Validation(format!(
                    "log-spaced {name} grid needs {name}_min > 0"
                )));
            }
            (0..n)
                .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * step(i)).exp())
                .collect()
        }
    })
}

fn build(experiment: Experiment, e: &Entries<'_>, seed: Option<u64>) -> Result<(ModelParams, Settings), CliError> {
    match experiment {
        Experiment::Bic => {
            let mut p = base_params(e, e.f64("g")?)?;
            let k = e.usize_or("k", p.m_atoms)?;
            p.fock_cutoff = e.usize_or("fock_cutoff", k.max(1))?;
            Ok((
                p,
                Settings::Bic {
                    k,
                    tol: e.positive("tol")?,
                },
            ))
        }
        Experiment::SweepChi => {
            let mut p = base_params(e, 1.0)?;
            let k = e.usize_or("k", p.m_atoms)?;
            p.fock_cutoff = k.max(1);
            let spacing = match e.raw("chi_spacing") {
                "log" => Spacing::Log,
                "linear" => Spacing::Linear,
                other => {
                    return Err(CliError::Validation(format!(
                        "`chi_spacing` must be `log` or `linear` (got `{other}`)"
                    )))
                }
            };
            let chi = grid(
                e.f64("chi_min")?,
                e.f64("chi_max")?,
                e.usize("chi_points")?,
                spacing,
                "chi",
            )?;
            if chi[0] < 0.0 {
                return Err(CliError::Validation("chi must be nonnegative".into()));
            }
            Ok((p, Settings::SweepChi { k, chi }))
        }
        Experiment::Evolve => {
            let mut p = base_params(e, e.f64("g")?)?;
            let m = p.m_atoms;
            let n_left = e.usize_or("n_left", m)?;
            let n_right = e.usize("n_right")?;
            if n_left > m || n_right > m {
                return Err(CliError::Validation(format!(
                    "n_left and n_right must not exceed m_atoms = {m}"
                )));
            }
            let top = if seed.is_some() {
                2 * m
            } else {
                (n_left + n_right).max(m)
            };
            p.fock_cutoff = e.usize_or("fock_cutoff", top)?;
            let options = EvolveOptions {
                rtol: e.positive("rtol")?,
                atol: e.positive("atol")?,
                snapshot_interval: e.positive("snapshot")?,
                steady_tol: e.positive("steady_tol")?,
                positivity_tol: e.positive("positivity_tol")?,
                ..EvolveOptions::default()
            };
            Ok((
                p,
                Settings::Evolve {
                    n_left,
                    n_right,
                    t_end: e.positive("t_end")?,
                    options,
                    tol: e.positive("tol")?,
                },
            ))
        }
        Experiment::Qfactor => {
            let p = base_params(e, e.f64("g")?)?;
            if p.gamma_c <= 0.0 || p.gamma_a <= 0.0 {
                return Err(CliError::Validation(
                    "qfactor needs gamma_c > 0 and gamma_a > 0 (the trapped mode is otherwise lossless)".into(),
                ));
            }
            let delta_over_gc = grid(
                e.f64("delta_min")?,
                e.f64("delta_max")?,
                e.usize("delta_points")?,
                Spacing::Linear,
                "delta",
            )?;
            Ok((
                p,
                Settings::Qfactor {
                    delta_over_gc,
                    tol: e.positive("tol")?,
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let m = parse_config_text("# c\n\n g = 0.5 \nm_atoms=3\n").unwrap();
        assert_eq!(m["g"], "0.5");
        assert_eq!(m["m_atoms"], "3");
        assert!(parse_config_text("g 0.5").is_err());
        assert!(parse_config_text("g=1\ng=2").is_err());
        assert!(parse_config_text("=2").is_err());
    }

    #[test]
    fn overrides_and_defaults() {
        let c = resolve(Experiment::Bic, Some("g = 0.5\nm_atoms = 3"), &["g=0.25".into()], None).unwrap();
        assert_eq!(c.params.g, 0.25);
        assert_eq!(c.params.m_atoms, 3);
        assert_eq!(c.settings, Settings::Bic { k: 3, tol: 1e-10 });
        assert_eq!(c.params.fock_cutoff, 3);
        assert!(c.header().contains("# g = 0.25\n"));
    }

    #[test]
    fn delta_sets_atomic_frequency() {
        let c = resolve(
            Experiment::Evolve,
            None,
            &["omega_c=1.5".into(), "delta=0.25".into()],
            None,
        )
        .unwrap();
        assert_eq!(c.params.omega_a, 1.25);
        assert_eq!(c.params.delta(), 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |e: Experiment, s: &str| resolve(e, None, &[s.to_string()], None).is_err();
        assert!(bad(Experiment::Bic, "gamma_c=1"));
        assert!(bad(Experiment::Bic, "g=abc"));
        assert!(bad(Experiment::Bic, "g=inf"));
        assert!(bad(Experiment::SweepChi, "chi_points=0"));
        assert!(bad(Experiment::SweepChi, "chi_min=0"));
        assert!(bad(Experiment::Qfactor, "gamma_a=0"));
        assert!(bad(Experiment::Evolve, "n_left=3"));
        assert!(bad(Experiment::Bic, "n_chain=1"));
        assert!(resolve(Experiment::Bic, None, &[], Some(1)).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid(0.5, 0.5, 1, Spacing::Log, "chi").unwrap(), vec![0.5]);
        let g = grid(0.1, 10.0, 3, Spacing::Log, "chi").unwrap();
        assert!((g[1] - 1.0).abs() < 1e-12 && (g[2] - 10.0).abs() < 1e-12);
        let l = grid(-3.0, 3.0, 61, Spacing::Linear, "delta").unwrap();
        assert!((l[30]).abs() < 1e-15 && l[60] == 3.0);
    }

    #[test]
    fn evolve_random_state_widens_cutoff() {
        let c = resolve(Experiment::Evolve, None, &[], Some(7)).unwrap();
        assert_eq!(c.params.fock_cutoff, 4);
        assert!(c.header().contains("# seed = 7\n"));
    }
}
