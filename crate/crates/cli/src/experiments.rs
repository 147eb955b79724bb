//! The six experiment drivers. Each returns its CSV artifacts and checks;
//! writing them out is left to the caller.

use serde::Serialize;
use supwave_core::galerkin::{evolve, nonlinear_states, residual_untruncated, SolverConfig, TrajectoryRecord};
use supwave_core::spectral::snapshot::write_state;
use supwave_core::spectral::FilterSpec;
use supwave_core::statistics::{
    convergence_study, growth_fit, gronwall_check, holder_interp_check, nonincreasing_within_ci, tail_curve,
    ConvergenceConfig, SetNormConfig, TailEvent,
};

use crate::config::{Config, Experiment};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// `bound - value`; nonnegative exactly when the check passes.
    pub margin: f64,
}

impl Check {
    fn margin(name: impl Into<String>, margin: f64) -> Self {
        Check { name: name.into(), pass: margin >= 0.0, margin }
    }

    fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass, margin: if pass { 0.0 } else { -1.0 } }
    }
}

pub enum Artifact {
    Csv { name: String, body: String },
    Binary { name: String, bytes: Vec<u8> },
}

#[derive(Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn csv(&mut self, name: impl Into<String>, body: String) {
        self.artifacts.push(Artifact::Csv { name: name.into(), body });
    }
}

pub fn run(cfg: &Config) -> anyhow::Result<Outcome> {
    match cfg.experiment {
        Experiment::EnergyCheck => energy_check(cfg),
        Experiment::Growth => growth(cfg),
        Experiment::Tails => tails(cfg),
        Experiment::Converge => converge(cfg),
        Experiment::Gronwall => gronwall(cfg),
        Experiment::Interp => interp(cfg),
    }
}

fn solver(cfg: &Config) -> anyhow::Result<SolverConfig> {
    let mut s = SolverConfig::new(FilterSpec::new(cfg.n)?, cfg.dt, cfg.t_end).with_stride(cfg.stride);
    s.oversample = cfg.oversample;
    Ok(s)
}

fn snapshot(out: &mut Outcome, cfg: &Config, rec: &TrajectoryRecord) -> anyhow::Result<()> {
    if cfg.snapshot {
        if let Some(last) = rec.states.as_ref().and_then(|s| s.last()) {
            let mut bytes = Vec::new();
            write_state(&mut bytes, last)?;
            out.artifacts.push(Artifact::Binary { name: format!("{}_final.spwv", cfg.experiment.name()), bytes });
        }
    }
    Ok(())
}

fn energy_check(cfg: &Config) -> anyhow::Result<Outcome> {
    let init = cfg.ensemble()?.sample(cfg.sample_index);
    let mut s = solver(cfg)?.decompose(0.0, cfg.epsilon);
    if cfg.snapshot {
        s = s.full();
    }
    let rec = evolve(&init, &s)?;
    let e0 = rec.energies[0];
    let drift = rec.energies.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.csv("energy-check", rec.to_csv(None));
    out.checks.push(Check::margin("relative_energy_drift", cfg.drift_tol - drift));
    snapshot(&mut out, cfg, &rec)?;
    Ok(out)
}

fn growth(cfg: &Config) -> anyhow::Result<Outcome> {
    let spec = cfg.ensemble()?;
    let bundle = cfg.bundle()?;
    let s = solver(cfg)?.decompose(0.0, cfg.epsilon);
    let records = (0..cfg.seeds)
        .map(|k| evolve(&spec.sample(cfg.sample_index + k), &s))
        .collect::<supwave_core::Result<Vec<_>>>()?;
    let report = growth_fit(&records, &bundle, 0.0)?;
    let mut body = String::from("sample,h1_slope,h1_intercept,l4_slope,l4_intercept,points\n");
    for (i, (h, l)) in report.h1_fits.iter().zip(&report.l4_fits).enumerate() {
        body.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{}\n",
            cfg.sample_index + i as u64,
            h.slope,
            h.intercept,
            l.slope,
            l.intercept,
            h.points
        ));
    }
    let mut out = Outcome::default();
    out.csv("growth_fits", body);
    out.csv("growth_trajectory", records[0].to_csv(None));
    out.checks.push(Check::margin("h1_growth_slope", report.h1_margin()));
    out.checks.push(Check::margin("l4_growth_slope", report.l4_margin()));
    Ok(out)
}

fn tails(cfg: &Config) -> anyhow::Result<Outcome> {
    let spec = cfg.ensemble()?;
    let bundle = cfg.bundle()?;
    let sets = cfg.set_kinds()?;
    let norms = SetNormConfig { t_max: cfg.t_max, dt_quad: cfg.dt_quad };
    let curve = tail_curve(&spec, &bundle, &cfg.m_list, cfg.n_samples, &sets, &norms)?;
    let mut out = Outcome::default();
    for (event, points) in &curve.curves {
        let name = match event {
            TailEvent::Set(k) => format!("{}^c", k.name()),
            other => format!("{}^c", other.name()),
        };
        out.checks.push(Check::flag(format!("{name} nonincreasing"), nonincreasing_within_ci(points)));
        let last = points.last().map_or(0, |p| p.failures);
        out.checks.push(Check::margin(format!("{name} failures at largest M"), -(last as f64)));
    }
    out.csv("tails", curve.to_csv());
    Ok(out)
}

fn converge(cfg: &Config) -> anyhow::Result<Outcome> {
    let spec = cfg.ensemble()?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let study = ConvergenceConfig {
        n_list: cfg.n_list.clone(),
        dt: cfg.dt,
        t_end: cfg.t_end,
        samples: steps / cfg.stride + 1,
        epsilon: cfg.epsilon,
        oversample: cfg.oversample,
        residual_time: cfg.residual_time,
        sample_index: cfg.sample_index,
    };
    let table = convergence_study(&spec, &study)?;
    let mut res = String::from("N,residual,filter_comp_identity_range,filter_comp_full_range\n");
    for ((n, r), (_, ok, full)) in table.residuals.iter().zip(&table.filter_composition) {
        res.push_str(&format!("{n:e},{r:e},{ok:e},{full:e}\n"));
    }
    let mut out = Outcome::default();
    out.csv("converge", table.to_csv());
    out.csv("converge_residuals", res);
    out.checks.push(Check::flag("w_diff decreasing", table.w_decreasing()));
    out.checks.push(Check::flag("wt_diff decreasing", table.wt_decreasing()));
    out.checks.push(Check::flag("l3_diff decreasing", table.l3_decreasing()));
    out.checks.push(Check::flag("residual decreasing", table.residual_decreasing()));
    out.checks.push(Check::margin("filtered agreement", 1e-10 - table.filtered_agreement));
    Ok(out)
}

fn gronwall(cfg: &Config) -> anyhow::Result<Outcome> {
    let spec = cfg.ensemble()?;
    let s = solver(cfg)?.with_stencil();
    let mut summary = String::from("sample,M,min_margin_i,min_margin_ii,min_margin_iii,derivative_consistency\n");
    let mut out = Outcome::default();
    let (mut mi, mut mii, mut miii) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for k in 0..cfg.draws {
        let index = cfg.sample_index + k;
        let init = spec.sample(index);
        let rec = evolve(&init, &s)?;
        for &m in &cfg.m_list {
            let rep = gronwall_check(&rec, &init, m)?;
            mi = mi.min(rep.min_margin_i());
            mii = mii.min(rep.min_margin_ii());
            miii = miii.min(rep.min_margin_iii());
            summary.push_str(&format!(
                "{index},{m:e},{:e},{:e},{:e},{:e}\n",
                rep.min_margin_i(),
                rep.min_margin_ii(),
                rep.min_margin_iii(),
                rep.derivative_consistency()
            ));
            if k == 0 {
                out.csv(format!("gronwall_M{m}"), rep.to_csv());
            }
        }
    }
    out.csv("gronwall_summary", summary);
    out.checks.push(Check::margin("check_i", mi));
    out.checks.push(Check::margin("check_ii", mii));
    out.checks.push(Check::margin("check_iii", miii));
    Ok(out)
}

fn interp(cfg: &Config) -> anyhow::Result<Outcome> {
    let init = cfg.ensemble()?.sample(cfg.sample_index);
    let rec = evolve(&init, &solver(cfg)?.full())?;
    let ws = nonlinear_states(&rec, &init, cfg.m)?;
    let rep = holder_interp_check(&rec.times, &ws, cfg.sigma1, cfg.sigma2, cfg.theta, 1e-12)?;
    let residual = residual_untruncated(&rec, supwave_core::galerkin::default_tau(cfg.d))?;
    let mut out = Outcome::default();
    out.csv(
        "interp",
        format!(
            "pairs,interpolation_violations,max_interpolation_ratio,chain_min_margin,chain_violations,holder_quotient\n{},{},{:e},{:e},{},{:e}\n",
            rep.pairs,
            rep.interpolation_violations,
            rep.max_interpolation_ratio,
            rep.chain_min_margin,
            rep.chain_violations,
            rep.holder_quotient
        ),
    );
    out.csv("interp_trajectory", rec.to_csv(Some(&residual)));
    out.checks.push(Check::margin("interpolation", 1.0 + 1e-12 - rep.max_interpolation_ratio));
    out.checks.push(Check::margin("holder_chain", rep.chain_min_margin));
    snapshot(&mut out, cfg, &rec)?;
    Ok(out)
}
