//! Power-law fits of long-horizon norm records.

use crate::error::{Error, Result};
use crate::galerkin::TrajectoryRecord;

use super::ExponentBundle;

/// Least-squares line `log y = slope log(offset + t) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits the running maximum `sup_{tau <= t} y(tau)` against `offset + t` over
/// the second half (in time order) of the samples with `offset + t > 0`.
pub fn fit_tail_slope(times: &[f64], values: &[f64], offset: f64) -> Result<PowerFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter("times and values differ in length".into()));
    }
    if times.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "growth fit needs at least 10 sample times, got {}",
            times.len()
        )));
    }
    let mut running = 0.0f64;
    let mut pts = Vec::with_capacity(times.len());
    for (&t, &v) in times.iter().zip(values) {
        running = running.max(v);
        let x = offset + t;
        if x > 0.0 && running > 0.0 {
            pts.push((x.ln(), running.ln()));
        }
    }
    let tail = &pts[pts.len() / 2..];
    if tail.len() < 2 {
        return Err(Error::InvalidParameter("not enough positive samples to fit".into()));
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate time range for the fit".into()));
    }
    let slope = sxy / sxx;
    Ok(PowerFit { slope, intercept: my - slope * mx, points: tail.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    /// Per record: slope of the `||(w, w_t)||_{H^1 x L^2}` record.
    pub h1_fits: Vec<PowerFit>,
    /// `(1 - s)/s + epsilon1`.
    pub h1_bound: f64,
    /// Per record: slope of `||S_N u(t)||_{L^4}`.
    pub l4_fits: Vec<PowerFit>,
    /// `(1 - s)/(2s) + epsilon`.
    pub l4_bound: f64,
}

impl GrowthReport {
    fn max_slope(fits: &[PowerFit]) -> f64 {
        fits.iter().map(|f| f.slope).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn h1_margin(&self) -> f64 {
        self.h1_bound - Self::max_slope(&self.h1_fits)
    }

    pub fn l4_margin(&self) -> f64 {
        self.l4_bound - Self::max_slope(&self.l4_fits)
    }

    pub fn pass(&self) -> bool {
        self.h1_margin() >= 0.0
    }
}

/// Fits every record against `log(M^s + t)`; the records must carry a
/// decomposition (usually at level `M = 0`).
pub fn growth_fit(records: &[TrajectoryRecord], bundle: &ExponentBundle, m: f64) -> Result<GrowthReport> {
    if records.is_empty() {
        return Err(Error::MissingData("trajectory records"));
    }
    let offset = m.powf(bundle.s);
    let mut h1_fits = Vec::with_capacity(records.len());
    let mut l4_fits = Vec::with_capacity(records.len());
    for rec in records {
        if rec.h1_norms.len() != rec.times.len() {
            return Err(Error::MissingData("h1 norms of w (run with a decomposition)"));
        }
        h1_fits.push(fit_tail_slope(&rec.times, &rec.h1_norms, offset)?);
        l4_fits.push(fit_tail_slope(&rec.times, &rec.l4_norms, offset)?);
    }
    Ok(GrowthReport {
        h1_fits,
        h1_bound: bundle.growth_exponent(),
        l4_fits,
        l4_bound: (1.0 - bundle.s) / (2.0 * bundle.s) + bundle.epsilon,
    })
}
