//! Quantitative checks: exponent constraints, large-deviation set quantities
//! and their Monte Carlo tails, the Gronwall chain, growth fits,
//! interpolation inequalities and the convergence-in-N study.

use rayon::prelude::*;
use statrs::function::beta::inv_beta_reg;

use crate::error::{Error, Result};
use crate::propagator::{weighted_mixed_norm, MixedNormSpec, DEFAULT_DT_QUAD, DEFAULT_T_MAX};
use crate::randomization::EnsembleSpec;
use crate::spectral::{lp_norm, project_low, PhaseState};

mod convergence;
mod growth;
mod gronwall;
mod holder;

pub use convergence::{convergence_study, ConvergenceConfig, ConvergenceRow, ConvergenceTable};
pub use gronwall::{gronwall_check, GronwallReport, GronwallRow};
pub use growth::{fit_tail_slope, growth_fit, GrowthReport, PowerFit};
pub use holder::{holder_interp_check, interpolation_sides, HolderReport};

/// Exponents governing the sets and the growth bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentBundle {
    pub s: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub delta: f64,
    pub delta_tilde: f64,
    pub delta_check: f64,
    /// Probe exponent for plotting `log p` against `M^{2 epsilon0}`.
    pub epsilon0: f64,
}

fn constraint<T>(msg: String) -> Result<T> {
    Err(Error::Constraint(msg))
}

/// Validates `0 < epsilon < s/2` and fills in the minimal `epsilon1`, the
/// midpoint `delta` of `(1/2, s/(2(s - 2 epsilon)))`, `delta_tilde = 1/2`
/// and `delta_check = 0.1`.
pub fn validate_exponents(s: f64, epsilon: f64) -> Result<ExponentBundle> {
    if !(s > 0.0 && s < 1.0) {
        return constraint(format!("regularity s = {s} must lie in (0, 1)"));
    }
    if !(epsilon > 0.0) {
        return constraint(format!("epsilon = {epsilon} must be positive"));
    }
    if epsilon >= s / 2.0 {
        return constraint(format!(
            "epsilon = {epsilon} violates epsilon < s/2 = {} (needed for s - 2 epsilon > 0)",
            s / 2.0
        ));
    }
    let denom = s - 2.0 * epsilon;
    let bundle = ExponentBundle {
        s,
        epsilon,
        epsilon1: (1.0 - s + epsilon) / denom - (1.0 - s) / s,
        delta: 0.5 * (0.5 + s / (2.0 * denom)),
        delta_tilde: 0.5,
        delta_check: 0.1,
        epsilon0: epsilon,
    };
    bundle.check()?;
    Ok(bundle)
}

impl ExponentBundle {
    /// Open interval allowed for `delta`.
    pub fn delta_range(&self) -> (f64, f64) {
        (0.5, self.s / (2.0 * (self.s - 2.0 * self.epsilon)))
    }

    /// The growth exponent `(1 - s)/s + epsilon1`.
    pub fn growth_exponent(&self) -> f64 {
        (1.0 - self.s) / self.s + self.epsilon1
    }

    /// Replaces any of the weight exponents, then rechecks every constraint.
    pub fn with_overrides(
        mut self,
        delta: Option<f64>,
        delta_tilde: Option<f64>,
        delta_check: Option<f64>,
    ) -> Result<Self> {
        self.delta = delta.unwrap_or(self.delta);
        self.delta_tilde = delta_tilde.unwrap_or(self.delta_tilde);
        self.delta_check = delta_check.unwrap_or(self.delta_check);
        self.check()?;
        Ok(self)
    }

    pub fn with_epsilon0(mut self, epsilon0: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && epsilon0.is_finite()) {
            return constraint(format!("epsilon0 = {epsilon0} must be positive"));
        }
        self.epsilon0 = epsilon0;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let (s, e) = (self.s, self.epsilon);
        let denom = s - 2.0 * e;
        if (1.0 - s + e) / denom > (1.0 - s) / s + self.epsilon1 * (1.0 + 1e-12) + 1e-15 {
            return constraint(format!(
                "epsilon1 = {} violates (1 - s + epsilon)/(s - 2 epsilon) <= (1 - s)/s + epsilon1",
                self.epsilon1
            ));
        }
        let (lo, hi) = self.delta_range();
        if !(self.delta > lo && self.delta < hi) {
            return constraint(format!(
                "delta = {} violates 1/2 < delta < s/(2(s - 2 epsilon)) = {hi}",
                self.delta
            ));
        }
        if !(self.delta_tilde > 1.0 / 3.0 && self.delta_tilde < 1.0) {
            return constraint(format!("delta_tilde = {} violates 1/3 < delta_tilde < 1", self.delta_tilde));
        }
        if !(self.delta_check > 0.0) {
            return constraint(format!("delta_check = {} violates delta_check > 0", self.delta_check));
        }
        if -s + e + self.delta_tilde * denom > 0.0 {
            return constraint("violated -s + epsilon + delta_tilde (s - 2 epsilon) <= 0".into());
        }
        if -s + e + (self.delta + 0.5) * denom > 0.0 {
            return constraint("violated -s + epsilon + (delta + 1/2)(s - 2 epsilon) <= 0".into());
        }
        Ok(())
    }
}

/// The five large-deviation sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetKind {
    F,
    G,
    H,
    K,
    R,
}

impl SetKind {
    pub const ALL: [SetKind; 5] = [SetKind::F, SetKind::G, SetKind::H, SetKind::K, SetKind::R];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["F", "G", "H", "K", "R"][self.index()]
    }
}

/// Time horizon and step of the weighted space-time norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetNormConfig {
    pub t_max: f64,
    pub dt_quad: f64,
}

impl Default for SetNormConfig {
    fn default() -> Self {
        SetNormConfig { t_max: DEFAULT_T_MAX, dt_quad: DEFAULT_DT_QUAD }
    }
}

/// One defining norm with its truncation tail and threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetQuantity {
    pub value: f64,
    pub tail: f64,
    pub threshold: f64,
}

impl SetQuantity {
    /// Conservative membership: `value + tail <= threshold`.
    pub fn holds(&self) -> bool {
        self.value + self.tail <= self.threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetMembershipRecord {
    pub m: f64,
    pub quantities: [Option<SetQuantity>; 5],
}

impl SetMembershipRecord {
    pub fn get(&self, kind: SetKind) -> Option<&SetQuantity> {
        self.quantities[kind.index()].as_ref()
    }

    pub fn in_set(&self, kind: SetKind) -> Option<bool> {
        self.get(kind).map(SetQuantity::holds)
    }

    /// Membership in `E_M`; `None` unless all five quantities were computed.
    pub fn in_e_m(&self) -> Option<bool> {
        let mut all = true;
        for q in &self.quantities {
            all &= q.as_ref()?.holds();
        }
        Some(all)
    }
}

fn mixed_spec(delta: f64, q: f64, p: f64, cfg: &SetNormConfig) -> Result<MixedNormSpec> {
    MixedNormSpec::new(delta, q, p)?.with_horizon(cfg.t_max, cfg.dt_quad)
}

/// The defining quantities of the selected sets at level `M`.
pub fn set_quantities_for(
    sample: &PhaseState,
    m: f64,
    bundle: &ExponentBundle,
    cfg: &SetNormConfig,
    sets: &[SetKind],
) -> Result<SetMembershipRecord> {
    let (s, e) = (bundle.s, bundle.epsilon);
    let mut quantities = [None; 5];
    for &kind in sets {
        let q = match kind {
            SetKind::F => SetQuantity {
                value: sample.project_low(m).norm(1.0),
                tail: 0.0,
                threshold: m.powf(1.0 - s + e),
            },
            SetKind::G => SetQuantity {
                value: lp_norm(&project_low(&sample.u, m), 4.0, 2)?,
                tail: 0.0,
                threshold: m.powf(e),
            },
            SetKind::H | SetKind::K | SetKind::R => {
                let spec = match kind {
                    SetKind::H => mixed_spec(bundle.delta, 2.0, f64::INFINITY, cfg)?,
                    SetKind::K => mixed_spec(bundle.delta_tilde, 3.0, 6.0, cfg)?,
                    _ => mixed_spec(bundle.delta_check, f64::INFINITY, 4.0, cfg)?,
                };
                let (value, tail) = weighted_mixed_norm(sample, m, &spec)?;
                SetQuantity { value, tail, threshold: m.powf(e - s) }
            }
        };
        quantities[kind.index()] = Some(q);
    }
    Ok(SetMembershipRecord { m, quantities })
}

/// All five quantities.
pub fn set_quantities(
    sample: &PhaseState,
    m: f64,
    bundle: &ExponentBundle,
    cfg: &SetNormConfig,
) -> Result<SetMembershipRecord> {
    set_quantities_for(sample, m, bundle, cfg, &SetKind::ALL)
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let alpha = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        inv_beta_reg(kf, nf - kf + 1.0, alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        inv_beta_reg(kf + 1.0, nf - kf, 1.0 - alpha / 2.0)
    };
    (lo.min(kf / nf), hi.max(kf / nf))
}

/// Events whose complement probabilities are estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailEvent {
    Set(SetKind),
    /// `E_M`.
    Intersection,
    /// `E^M`: intersection of `E_K` over dyadic `K >= M` in the level list.
    DyadicIntersection,
}

impl TailEvent {
    pub fn name(&self) -> &'static str {
        match self {
            TailEvent::Set(k) => k.name(),
            TailEvent::Intersection => "E_M",
            TailEvent::DyadicIntersection => "E^M",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailPoint {
    pub m: f64,
    pub failures: usize,
    pub samples: usize,
    pub p_hat: f64,
    pub ci: (f64, f64),
    /// `M^{2 epsilon0}`.
    pub probe: f64,
}

impl TailPoint {
    fn new(m: f64, failures: usize, samples: usize, epsilon0: f64) -> Self {
        TailPoint {
            m,
            failures,
            samples,
            p_hat: failures as f64 / samples as f64,
            ci: clopper_pearson(failures, samples, 0.95),
            probe: m.powf(2.0 * epsilon0),
        }
    }

    pub fn log_p(&self) -> f64 {
        self.p_hat.ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailCurve {
    pub samples: usize,
    pub m_values: Vec<f64>,
    pub curves: Vec<(TailEvent, Vec<TailPoint>)>,
}

impl TailCurve {
    pub fn curve(&self, event: TailEvent) -> Option<&[TailPoint]> {
        self.curves.iter().find(|(e, _)| *e == event).map(|(_, c)| c.as_slice())
    }

    /// CSV with columns `event,M,failures,samples,p_hat,ci_lo,ci_hi,log_p,M_pow_2eps0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("event,M,failures,samples,p_hat,ci_lo,ci_hi,log_p,M_pow_2eps0\n");
        for (event, points) in &self.curves {
            for p in points {
                out.push_str(&format!(
                    "{},{:e},{},{},{:e},{:e},{:e},{:e},{:e}\n",
                    event.name(),
                    p.m,
                    p.failures,
                    p.samples,
                    p.p_hat,
                    p.ci.0,
                    p.ci.1,
                    p.log_p(),
                    p.probe
                ));
            }
        }
        out
    }
}

/// Consecutive estimates never increase except within overlapping intervals.
pub fn nonincreasing_within_ci(points: &[TailPoint]) -> bool {
    points
        .windows(2)
        .all(|w| w[1].p_hat <= w[0].p_hat || w[1].ci.0 <= w[0].ci.1)
}

fn is_dyadic(m: f64) -> bool {
    m >= 1.0 && m.log2().fract() == 0.0
}

/// Monte Carlo complement probabilities of the selected sets over levels
/// `m_list`, samples `0..n_samples` of the ensemble. `E_M` and `E^M` are
/// included when all five sets are selected.
pub fn tail_curve(
    spec: &EnsembleSpec,
    bundle: &ExponentBundle,
    m_list: &[f64],
    n_samples: usize,
    sets: &[SetKind],
    cfg: &SetNormConfig,
) -> Result<TailCurve> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 samples, got {n_samples}")));
    }
    if m_list.is_empty() || m_list.iter().any(|&m| !(m >= 1.0)) {
        return Err(Error::InvalidParameter("levels M must be at least 1".into()));
    }
    let mut sets = sets.to_vec();
    sets.sort();
    sets.dedup();
    let membership: Vec<Vec<SetMembershipRecord>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let sample = spec.sample(k);
            m_list
                .iter()
                .map(|&m| set_quantities_for(&sample, m, bundle, cfg, &sets))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let count = |pred: &dyn Fn(&[SetMembershipRecord], usize) -> bool| -> Vec<usize> {
        (0..m_list.len())
            .map(|i| membership.iter().filter(|recs| !pred(recs, i)).count())
            .collect()
    };
    let mut curves = Vec::new();
    let mut push = |event: TailEvent, fails: Vec<usize>, ms: &[f64]| {
        let points = fails
            .into_iter()
            .zip(ms)
            .map(|(f, &m)| TailPoint::new(m, f, n_samples, bundle.epsilon0))
            .collect();
        curves.push((event, points));
    };
    for &kind in &sets {
        push(TailEvent::Set(kind), count(&|r, i| r[i].in_set(kind).unwrap()), m_list);
    }
    if sets.len() == SetKind::ALL.len() {
        push(TailEvent::Intersection, count(&|r, i| r[i].in_e_m().unwrap()), m_list);
        let upper: Vec<usize> = (0..m_list.len())
            .filter(|&i| (0..m_list.len()).any(|j| is_dyadic(m_list[j]) && m_list[j] >= m_list[i]))
            .collect();
        let ms: Vec<f64> = upper.iter().map(|&i| m_list[i]).collect();
        let fails = upper
            .iter()
            .map(|&i| {
                membership
                    .iter()
                    .filter(|recs| {
                        !(0..m_list.len())
                            .filter(|&j| is_dyadic(m_list[j]) && m_list[j] >= m_list[i])
                            .all(|j| recs[j].in_e_m().unwrap())
                    })
                    .count()
            })
            .collect();
        push(TailEvent::DyadicIntersection, fails, &ms);
    }
    Ok(TailCurve { samples: n_samples, m_values: m_list.to_vec(), curves })
}

#[cfg(test)]
mod tests;
