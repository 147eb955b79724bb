//! Cauchy-in-N diagnostics for the truncated flows started from one sample.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::galerkin::{evolve, nonlinear_states, untruncated_defect, default_tau, SolverConfig, TrajectoryRecord};
use crate::propagator::free_evolve;
use crate::randomization::EnsembleSpec;
use crate::spectral::{lp_norm, smooth_filter, sobolev_norm, FilterSpec, PhaseState};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceConfig {
    /// Each entry equal to or twice the previous one.
    pub n_list: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub epsilon: f64,
    pub oversample: usize,
    /// Time at which the untruncated residual is evaluated (a sample time).
    pub residual_time: f64,
    pub sample_index: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n_coarse: f64,
    pub n_fine: f64,
    /// `max_t ||w_N - w_2N||_{H^{1-eps}}`.
    pub w_diff: f64,
    /// `max_t ||w_N,t - w_2N,t||_{H^{-eps}}`.
    pub wt_diff: f64,
    /// `||S_N u_N - S_2N u_2N||_{L^3((0,T) x T^d)}`, trapezoid in time.
    pub l3_diff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// `(N, ||S_N((S_N u)^3) - u^3||_{H^{-tau}})` at the residual time.
    pub residuals: Vec<(f64, f64)>,
    /// Largest coefficient deviation of `S_K u_N = S_K(S(t) Pi^0 (u0, u1) + w_N)`
    /// over `K <= N - 2` and all sample times.
    pub filtered_agreement: f64,
    /// `(N, max deviation of S_K S_N u_N from S_K u_N over K <= N/sqrt 2,
    /// same over K <= N - 2)`.
    pub filter_composition: Vec<(f64, f64, f64)>,
}

impl ConvergenceTable {
    fn strictly_decreasing(v: impl Iterator<Item = f64>) -> bool {
        let v: Vec<f64> = v.collect();
        v.windows(2).all(|w| w[1] < w[0])
    }

    pub fn w_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.rows.iter().map(|r| r.w_diff))
    }

    pub fn wt_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.rows.iter().map(|r| r.wt_diff))
    }

    pub fn l3_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.rows.iter().map(|r| r.l3_diff))
    }

    pub fn residual_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.residuals.iter().map(|r| r.1))
    }

    /// CSV with columns `N,N2,w_diff,wt_diff,l3_diff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,N2,w_diff,wt_diff,l3_diff\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                r.n_coarse, r.n_fine, r.w_diff, r.wt_diff, r.l3_diff
            ));
        }
        out
    }
}

fn check_dyadic(n_list: &[f64]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty cutoff list".into()));
    }
    for w in n_list.windows(2) {
        let r = w[1] / w[0];
        if r != 1.0 && r != 2.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoff list is not dyadic: {} follows {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

struct Run {
    n: f64,
    filter: FilterSpec,
    traj: TrajectoryRecord,
    ws: Vec<PhaseState>,
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Integrates sample `cfg.sample_index` for every `N` (each on its own exact
/// dealiasing grid) and compares consecutive cutoffs.
pub fn convergence_study(spec: &EnsembleSpec, cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    check_dyadic(&cfg.n_list)?;
    let init = spec.sample(cfg.sample_index);
    let runs: Vec<Run> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let filter = FilterSpec::new(n)?;
            let mut solver = SolverConfig::new(filter, cfg.dt, cfg.t_end).with_samples(cfg.samples).full();
            solver.oversample = cfg.oversample;
            if !solver.sample_times.iter().any(|&t| (t - cfg.residual_time).abs() < 1e-9) {
                let k = (cfg.residual_time / cfg.dt).round();
                solver.sample_times.push(k * cfg.dt);
                solver.sample_times.sort_by(f64::total_cmp);
                solver.sample_times.dedup();
            }
            let traj = evolve(&init, &solver)?;
            let ws = nonlinear_states(&traj, &init, 0.0)?;
            Ok(Run { n, filter, traj, ws })
        })
        .collect::<Result<_>>()?;

    let times = runs[0].traj.times.clone();
    let mut rows = Vec::new();
    for pair in runs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (sa, sb) = (a.traj.states()?, b.traj.states()?);
        let mut w_diff = 0.0f64;
        let mut wt_diff = 0.0f64;
        let mut l3 = Vec::with_capacity(times.len());
        for i in 0..times.len() {
            let d = a.ws[i].sub(&b.ws[i])?;
            w_diff = w_diff.max(sobolev_norm(&d.u, 1.0 - cfg.epsilon));
            wt_diff = wt_diff.max(sobolev_norm(&d.ut, -cfg.epsilon));
            let f = smooth_filter(&sa[i].u, &a.filter).sub(&smooth_filter(&sb[i].u, &b.filter))?;
            l3.push(lp_norm(&f, 3.0, 2)?.powi(3));
        }
        rows.push(ConvergenceRow {
            n_coarse: a.n,
            n_fine: b.n,
            w_diff,
            wt_diff,
            l3_diff: trapezoid(&times, &l3).cbrt(),
        });
    }

    let tau = default_tau(init.dim());
    let mut residuals = Vec::with_capacity(runs.len());
    let mut filtered_agreement = 0.0f64;
    let mut filter_composition = Vec::with_capacity(runs.len());
    let low_free = init.project_high(0.0);
    for run in &runs {
        let states = run.traj.states()?;
        let idx = times
            .iter()
            .position(|&t| (t - cfg.residual_time).abs() < 1e-9)
            .ok_or(Error::MissingData("state at the residual time"))?;
        residuals.push((run.n, untruncated_defect(&states[idx], &run.filter, cfg.oversample, tau)?));
        let k_max = (run.n - 2.0).floor().max(0.0) as usize;
        let k_identity = (run.n / std::f64::consts::SQRT_2).floor() as usize;
        let (mut ok_range, mut full_range) = (0.0f64, 0.0f64);
        for (i, st) in states.iter().enumerate() {
            let rebuilt = free_evolve(&low_free, times[i]).add(&run.ws[i])?;
            let filtered = smooth_filter(&st.u, &run.filter);
            for k in 1..=k_max {
                let sk = FilterSpec::new(k as f64)?;
                let lhs = smooth_filter(&st.u, &sk);
                filtered_agreement =
                    filtered_agreement.max(lhs.max_coeff_diff(&smooth_filter(&rebuilt.u, &sk))?);
                let dev = smooth_filter(&filtered, &sk).max_coeff_diff(&lhs)?;
                full_range = full_range.max(dev);
                if k <= k_identity {
                    ok_range = ok_range.max(dev);
                }
            }
        }
        filter_composition.push((run.n, ok_range, full_range));
    }
    Ok(ConvergenceTable { rows, residuals, filtered_agreement, filter_composition })
}
