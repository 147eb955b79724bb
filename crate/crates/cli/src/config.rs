//! Flat TOML experiment configs and their fully resolved form.

use std::path::Path;

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use supwave_core::randomization::{DistributionKind, EnsembleConfig, EnsembleSpec};
use supwave_core::statistics::{validate_exponents, ExponentBundle, SetKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EnergyCheck,
    Growth,
    Tails,
    Converge,
    Gronwall,
    Interp,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::EnergyCheck => "energy-check",
            Experiment::Growth => "growth",
            Experiment::Tails => "tails",
            Experiment::Converge => "converge",
            Experiment::Gronwall => "gronwall",
            Experiment::Interp => "interp",
        }
    }
}

/// Config file contents; every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub s: Option<f64>,
    pub d: Option<usize>,
    pub eta: Option<f64>,
    #[serde(rename = "L")]
    pub cutoff: Option<usize>,
    pub dist: Option<DistributionKind>,
    pub seed: Option<u64>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
    pub samples: Option<usize>,
    pub oversample: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilon0: Option<f64>,
    pub delta: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub delta_check: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    #[serde(rename = "M_list")]
    pub m_list: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub sets: Option<Vec<String>>,
    pub t_max: Option<f64>,
    pub dt_quad: Option<f64>,
    pub draws: Option<u64>,
    pub seeds: Option<u64>,
    pub sample_index: Option<u64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub theta: Option<f64>,
    pub residual_time: Option<f64>,
    pub drift_tol: Option<f64>,
    pub snapshot: Option<bool>,
    pub out: Option<String>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Every parameter a run depends on, after defaults are applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub experiment: Experiment,
    pub s: f64,
    pub d: usize,
    pub eta: f64,
    #[serde(rename = "L")]
    pub cutoff: usize,
    pub dist: DistributionKind,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    /// Solver steps between recorded samples.
    pub stride: usize,
    pub oversample: usize,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub delta: f64,
    pub delta_tilde: f64,
    pub delta_check: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "M_list")]
    pub m_list: Vec<f64>,
    pub n_samples: usize,
    pub sets: Vec<String>,
    pub t_max: f64,
    pub dt_quad: f64,
    pub draws: u64,
    pub seeds: u64,
    pub sample_index: u64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub theta: f64,
    pub residual_time: f64,
    pub drift_tol: f64,
    pub snapshot: bool,
}

struct Defaults {
    n: f64,
    dt: f64,
    t_end: f64,
    /// Either a fixed stride or a sample count.
    stride: Option<usize>,
    samples: usize,
}

fn defaults(exp: Experiment) -> Defaults {
    let (n, dt, t_end, stride, samples) = match exp {
        Experiment::EnergyCheck => (16.0, 1e-3, 50.0, Some(1000), 0),
        Experiment::Growth => (8.0, 1e-2, 100.0, None, 101),
        Experiment::Tails => (16.0, 1e-3, 1.0, None, 2),
        Experiment::Converge => (16.0, 2.5e-3, 5.0, None, 26),
        Experiment::Gronwall => (16.0, 1e-2, 10.0, Some(50), 0),
        Experiment::Interp => (8.0, 1e-2, 2.0, Some(10), 0),
    };
    Defaults { n, dt, t_end, stride, samples }
}

fn stride_for_samples(steps: usize, samples: usize) -> anyhow::Result<usize> {
    if samples < 2 || steps % (samples - 1) != 0 {
        bail!("samples = {samples} does not divide the {steps} solver steps into equal strides");
    }
    Ok(steps / (samples - 1))
}

impl Config {
    /// Applies defaults and validates every constraint a run relies on.
    pub fn resolve(raw: RawConfig, experiment: Experiment, seed: Option<u64>) -> anyhow::Result<Self> {
        if let Some(e) = raw.experiment {
            if e != experiment {
                bail!("config names experiment {} but {} was requested", e.name(), experiment.name());
            }
        }
        let def = defaults(experiment);
        let ens = EnsembleConfig::default();
        let n = raw.n.unwrap_or(def.n);
        let n_list = raw.n_list.unwrap_or_else(|| vec![8.0, 16.0, 32.0]);
        let dt = raw.dt.unwrap_or(def.dt);
        let t_end = raw.t_end.unwrap_or(def.t_end);
        if !(dt > 0.0 && t_end > 0.0) {
            bail!("dt = {dt} and t_end = {t_end} must be positive");
        }
        let steps = (t_end / dt).round() as usize;
        if ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end {
            bail!("t_end = {t_end} is not a multiple of dt = {dt}");
        }
        let stride = match (raw.stride, raw.samples, def.stride) {
            (Some(k), _, _) => k,
            (None, Some(c), _) => stride_for_samples(steps, c)?,
            (None, None, Some(k)) => k,
            (None, None, None) => stride_for_samples(steps, def.samples)?,
        };
        if stride == 0 || steps % stride != 0 {
            bail!("stride = {stride} must divide the {steps} solver steps");
        }
        let n_max = if experiment == Experiment::Converge {
            n_list.iter().copied().fold(0.0, f64::max)
        } else {
            n
        };
        let m_default = if experiment == Experiment::Gronwall { vec![4.0, 8.0] } else { vec![2.0, 4.0, 8.0, 16.0] };
        let s = raw.s.unwrap_or(ens.s);
        let epsilon = raw.epsilon.unwrap_or(0.1);
        let bundle = validate_exponents(s, epsilon)?;
        let bundle = bundle.with_overrides(raw.delta, raw.delta_tilde, raw.delta_check)?;
        let bundle = bundle.with_epsilon0(raw.epsilon0.unwrap_or(epsilon))?;
        let cfg = Config {
            experiment,
            s,
            d: raw.d.unwrap_or(ens.d),
            eta: raw.eta.unwrap_or(ens.eta),
            cutoff: raw.cutoff.unwrap_or(n_max.ceil() as usize),
            dist: raw.dist.unwrap_or(ens.dist),
            seed: seed.or(raw.seed).unwrap_or(ens.seed),
            n,
            n_list,
            dt,
            t_end,
            stride,
            oversample: raw.oversample.unwrap_or(2),
            epsilon,
            epsilon0: bundle.epsilon0,
            delta: bundle.delta,
            delta_tilde: bundle.delta_tilde,
            delta_check: bundle.delta_check,
            m: raw.m.unwrap_or(0.0),
            m_list: raw.m_list.unwrap_or(m_default),
            n_samples: raw.n_samples.unwrap_or(10_000),
            sets: raw.sets.unwrap_or_else(|| vec!["F".into(), "G".into()]),
            t_max: raw.t_max.unwrap_or(200.0),
            dt_quad: raw.dt_quad.unwrap_or(0.05),
            draws: raw.draws.unwrap_or(100),
            seeds: raw.seeds.unwrap_or(10),
            sample_index: raw.sample_index.unwrap_or(0),
            sigma1: raw.sigma1.unwrap_or(1.0),
            sigma2: raw.sigma2.unwrap_or(0.0),
            theta: raw.theta.unwrap_or(0.95),
            residual_time: raw.residual_time.unwrap_or(1.0),
            drift_tol: raw.drift_tol.unwrap_or(1e-6),
            snapshot: raw.snapshot.unwrap_or(false),
        };
        cfg.set_kinds()?;
        cfg.ensemble()?;
        Ok(cfg)
    }

    pub fn bundle(&self) -> anyhow::Result<ExponentBundle> {
        Ok(validate_exponents(self.s, self.epsilon)?
            .with_overrides(Some(self.delta), Some(self.delta_tilde), Some(self.delta_check))?
            .with_epsilon0(self.epsilon0)?)
    }

    pub fn ensemble(&self) -> anyhow::Result<EnsembleSpec> {
        Ok(self.ensemble_config().build()?)
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            s: self.s,
            d: self.d,
            eta: self.eta,
            cutoff: self.cutoff,
            dist: self.dist,
            seed: self.seed,
        }
    }

    pub fn set_kinds(&self) -> anyhow::Result<Vec<SetKind>> {
        self.sets
            .iter()
            .map(|name| {
                SetKind::ALL
                    .into_iter()
                    .find(|k| k.name().eq_ignore_ascii_case(name))
                    .with_context(|| format!("unknown set {name:?} (expected one of F, G, H, K, R)"))
            })
            .collect()
    }

    /// Single-line JSON form used in artifact headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn defaults_per_experiment() {
        let c = Config::resolve(RawConfig::default(), Experiment::EnergyCheck, None).unwrap();
        assert_eq!((c.n, c.dt, c.t_end, c.stride, c.cutoff), (16.0, 1e-3, 50.0, 1000, 16));
        let c = Config::resolve(RawConfig::default(), Experiment::Converge, None).unwrap();
        assert_eq!((c.cutoff, c.stride), (32, 80));
        let c = Config::resolve(RawConfig::default(), Experiment::Gronwall, None).unwrap();
        assert_eq!(c.m_list, vec![4.0, 8.0]);
    }

    #[test]
    fn samples_become_stride() {
        let c = Config::resolve(raw("t_end = 1.0\ndt = 0.01\nsamples = 11"), Experiment::Growth, None).unwrap();
        assert_eq!(c.stride, 10);
        assert!(Config::resolve(raw("t_end = 1.0\ndt = 0.01\nsamples = 8"), Experiment::Growth, None).is_err());
    }

    #[test]
    fn seed_override_wins() {
        let c = Config::resolve(raw("seed = 3"), Experiment::Tails, Some(9)).unwrap();
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = Config::resolve(raw("s = 0.5\nepsilon = 0.25"), Experiment::Tails, None).unwrap_err();
        assert!(err.to_string().contains("epsilon < s/2"));
        assert!(toml::from_str::<RawConfig>("bogus = 1").is_err());
        assert!(Config::resolve(raw("sets = [\"Q\"]"), Experiment::Tails, None).is_err());
        assert!(Config::resolve(raw("experiment = \"growth\""), Experiment::Tails, None).is_err());
        assert!(Config::resolve(raw("d = 2"), Experiment::Tails, None).is_err());
    }

    #[test]
    fn json_line_is_single_line() {
        let c = Config::resolve(RawConfig::default(), Experiment::Interp, None).unwrap();
        let line = c.to_json_line();
        assert!(!line.contains('\n'));
        assert!(line.contains("\"experiment\":\"interp\""));
    }
}
