//! Sobolev interpolation and the time-Holder estimate for stored trajectories.

use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, FourierField, PhaseState};

/// `(||f||_{H^{theta s1 + (1 - theta) s2}}, ||f||^theta_{H^{s1}} ||f||^{1-theta}_{H^{s2}})`.
pub fn interpolation_sides(f: &FourierField, sigma1: f64, sigma2: f64, theta: f64) -> (f64, f64) {
    let mid = theta * sigma1 + (1.0 - theta) * sigma2;
    let lhs = sobolev_norm(f, mid);
    let rhs = sobolev_norm(f, sigma1).powf(theta) * sobolev_norm(f, sigma2).powf(1.0 - theta);
    (lhs, rhs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    pub pairs: usize,
    /// Pairs whose difference violates interpolation beyond the relative slack.
    pub interpolation_violations: usize,
    /// Largest `lhs / rhs` of the interpolation inequality.
    pub max_interpolation_ratio: f64,
    /// Smallest `rhs - lhs` of the time-Holder chain with constant 2.
    pub chain_min_margin: f64,
    pub chain_violations: usize,
    /// `sup ||u(t1) - u(t2)||_{H^sigma} / |t1 - t2|^{1 - theta}` with
    /// `sigma = theta sigma1 + (1 - theta) sigma2`.
    pub holder_quotient: f64,
}

impl HolderReport {
    pub fn pass(&self) -> bool {
        self.interpolation_violations == 0 && self.chain_violations == 0
    }
}

/// Checks, over all pairs of sampled times, the interpolation inequality for
/// `u(t1) - u(t2)` and the chain
/// `||u(t1) - u(t2)||_{H^sigma} <= 2 |t1 - t2|^{1-theta} A^theta B^{1-theta}`
/// with `A = sup ||u||_{H^{sigma1}}` and `B = sup max(||u||, ||u_t||)_{H^{sigma2}}`
/// taken over the samples.
pub fn holder_interp_check(
    times: &[f64],
    states: &[PhaseState],
    sigma1: f64,
    sigma2: f64,
    theta: f64,
    rel_slack: f64,
) -> Result<HolderReport> {
    if times.len() != states.len() {
        return Err(Error::MissingData("one state with time derivative per sample time"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {theta}")));
    }
    let a = states.iter().map(|s| sobolev_norm(&s.u, sigma1)).fold(0.0, f64::max);
    let b = states
        .iter()
        .map(|s| sobolev_norm(&s.u, sigma2).max(sobolev_norm(&s.ut, sigma2)))
        .fold(0.0, f64::max);
    let scale = a.powf(theta) * b.powf(1.0 - theta);
    let mut report = HolderReport {
        pairs: 0,
        interpolation_violations: 0,
        max_interpolation_ratio: 0.0,
        chain_min_margin: f64::INFINITY,
        chain_violations: 0,
        holder_quotient: 0.0,
    };
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let diff = states[i].u.sub(&states[j].u)?;
            let (lhs, rhs) = interpolation_sides(&diff, sigma1, sigma2, theta);
            report.pairs += 1;
            if lhs > rhs * (1.0 + rel_slack) {
                report.interpolation_violations += 1;
            }
            if rhs > 0.0 {
                report.max_interpolation_ratio = report.max_interpolation_ratio.max(lhs / rhs);
            }
            let gap = (times[i] - times[j]).abs().powf(1.0 - theta);
            let margin = 2.0 * gap * scale - lhs;
            report.chain_min_margin = report.chain_min_margin.min(margin);
            if margin < 0.0 {
                report.chain_violations += 1;
            }
            if gap > 0.0 {
                report.holder_quotient = report.holder_quotient.max(lhs / gap);
            }
        }
    }
    Ok(report)
}
