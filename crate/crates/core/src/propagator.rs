//! The free wave group `S(t) = cos(t|D|) + sin(t|D|)/|D|` on phase space and
//! time-weighted space-time norms of free solutions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{
    check_exponent, grid_size, quadrature_lp, FourierField, GridEvaluator, Lattice, PhaseState,
    SUP_OVERSAMPLE,
};

/// Per-mode rotation tables of `S(t)` for one lattice and one `t`.
#[derive(Clone, Debug)]
pub struct FreeRotation {
    t: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    omega: Vec<f64>,
}

impl FreeRotation {
    pub fn new(lattice: &Lattice, t: f64) -> Self {
        let len = lattice.len();
        let mut cos = Vec::with_capacity(len);
        let mut sin = Vec::with_capacity(len);
        let mut omega = Vec::with_capacity(len);
        for &n2 in lattice.norms2() {
            let w = (n2 as f64).sqrt();
            let (s, c) = (w * t).sin_cos();
            cos.push(c);
            sin.push(s);
            omega.push(w);
        }
        FreeRotation { t, cos, sin, omega }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Applies `S(t)` in place to `(u, ut)` given as `(mean, cos, sin)` arrays.
    pub fn apply(
        &self,
        u_mean: &mut f64,
        u_cos: &mut [f64],
        u_sin: &mut [f64],
        ut_mean: f64,
        ut_cos: &mut [f64],
        ut_sin: &mut [f64],
    ) {
        *u_mean += self.t * ut_mean;
        for p in 0..self.omega.len() {
            let (c, s, w) = (self.cos[p], self.sin[p], self.omega[p]);
            let (a, b) = (u_cos[p], ut_cos[p]);
            u_cos[p] = c * a + s / w * b;
            ut_cos[p] = -w * s * a + c * b;
            let (a, b) = (u_sin[p], ut_sin[p]);
            u_sin[p] = c * a + s / w * b;
            ut_sin[p] = -w * s * a + c * b;
        }
    }

    /// Position component only: coefficients of `S(t)(u, ut)` first slot.
    pub(crate) fn position_into(&self, state: &PhaseState, out: &mut FourierField) {
        out.set_mean(state.u.mean() + self.t * state.ut.mean());
        let (oc, os) = out.coeffs_mut();
        let (uc, us) = (state.u.cos_coeffs(), state.u.sin_coeffs());
        let (vc, vs) = (state.ut.cos_coeffs(), state.ut.sin_coeffs());
        for p in 0..self.omega.len() {
            let (c, k) = (self.cos[p], self.sin[p] / self.omega[p]);
            oc[p] = c * uc[p] + k * vc[p];
            os[p] = c * us[p] + k * vs[p];
        }
    }

    pub fn apply_state(&self, state: &PhaseState) -> PhaseState {
        let mut out = state.clone();
        let ut_mean = out.ut.mean();
        let mut u_mean = out.u.mean();
        let (uc, us) = out.u.coeffs_mut();
        let (vc, vs) = out.ut.coeffs_mut();
        self.apply(&mut u_mean, uc, us, ut_mean, vc, vs);
        out.u.set_mean(u_mean);
        out
    }
}

/// `S(t)(u, ut)`.
pub fn free_evolve(state: &PhaseState, t: f64) -> PhaseState {
    FreeRotation::new(state.u.lattice(), t).apply_state(state)
}

/// Norm `||<t>^{-delta} S(t) Pi^M (u0, u1)||_{L^q_t L^p_x}` over `|t| <= t_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedNormSpec {
    pub weight_exponent: f64,
    pub time_norm: f64,
    pub space_norm: f64,
    pub t_max: f64,
    pub dt_quad: f64,
    /// Grid oversampling for the spatial norm.
    pub oversample: usize,
}

pub const DEFAULT_T_MAX: f64 = 200.0;
pub const DEFAULT_DT_QUAD: f64 = 0.05;

/// Oversampling that makes the spatial quadrature exact for even `p` and a
/// close lower bound for `p = inf`.
pub fn default_oversample(p: f64) -> usize {
    if p.is_infinite() {
        SUP_OVERSAMPLE
    } else {
        (p / 2.0).ceil().max(1.0) as usize
    }
}

impl MixedNormSpec {
    pub fn new(weight_exponent: f64, time_norm: f64, space_norm: f64) -> Result<Self> {
        let spec = MixedNormSpec {
            weight_exponent,
            time_norm,
            space_norm,
            t_max: DEFAULT_T_MAX,
            dt_quad: DEFAULT_DT_QUAD,
            oversample: default_oversample(space_norm),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_horizon(mut self, t_max: f64, dt_quad: f64) -> Result<Self> {
        self.t_max = t_max;
        self.dt_quad = dt_quad;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.space_norm)?;
        let q = self.time_norm;
        let min = if q == 2.0 {
            0.5
        } else if q == 3.0 {
            1.0 / 3.0
        } else if q.is_infinite() {
            0.0
        } else {
            return Err(Error::InvalidParameter(format!("time norm q must be 2, 3 or inf, got {q}")));
        };
        if !(self.weight_exponent > min) {
            return Err(Error::InvalidParameter(format!(
                "weight exponent {} must exceed {min} for q = {q}",
                self.weight_exponent
            )));
        }
        if !(self.t_max > 0.0 && self.dt_quad > 0.0 && self.dt_quad <= self.t_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt_quad <= t_max, got dt_quad = {}, t_max = {}",
                self.dt_quad, self.t_max
            )));
        }
        if self.oversample == 0 {
            return Err(Error::InvalidParameter("oversample must be at least 1".into()));
        }
        Ok(())
    }

    /// `<t>^{-delta}`.
    pub fn weight(&self, t: f64) -> f64 {
        (1.0 + t * t).powf(-0.5 * self.weight_exponent)
    }

    /// Upper bound for `(int_{|t| > t_max} <t>^{-q delta} dt)^{1/q}`, using
    /// `<t> >= |t|`; for `q = inf` the weight at `t_max`.
    pub fn tail_factor(&self) -> f64 {
        let q = self.time_norm;
        if q.is_infinite() {
            return self.weight(self.t_max);
        }
        let a = q * self.weight_exponent;
        (2.0 * self.t_max.powf(1.0 - a) / (a - 1.0)).powf(1.0 / q)
    }

    /// Quadrature nodes `j dt` for `|j| <= round(t_max / dt)`.
    pub fn nodes(&self) -> Vec<f64> {
        let j = (self.t_max / self.dt_quad).round() as i64;
        (-j..=j).map(|k| k as f64 * self.dt_quad).collect()
    }
}

/// Space norm `||S(t) f||_{L^p}` at each time, `f` already projected.
fn space_norms(state: &PhaseState, times: &[f64], p: f64, oversample: usize) -> Result<Vec<f64>> {
    let band = state.u.bandwidth().max(state.ut.bandwidth());
    let g = grid_size(band, oversample);
    let lattice = state.u.lattice().clone();
    GridEvaluator::new(&lattice, band, g)?;
    let chunk = times.len().div_ceil(4 * rayon::current_num_threads()).max(1);
    let parts: Vec<Result<Vec<f64>>> = times
        .par_chunks(chunk)
        .map(|ts| {
            let mut ev = GridEvaluator::new(&lattice, band, g)?;
            let cell = ev.cell();
            let mut f = FourierField::zeros(lattice.dim(), lattice.cutoff());
            ts.iter()
                .map(|&t| {
                    FreeRotation::new(&lattice, t).position_into(state, &mut f);
                    quadrature_lp(ev.eval_field(&f), cell, p)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Returns `(value, tail_bound)`: the truncated weighted norm of the free
/// evolution of `Pi^M state` by composite trapezoid in time (grid maximum for
/// `q = inf`), and the bound `sup_t ||S(t) f||_{L^p} * tail_factor` for the
/// contribution of `|t| > t_max`. The supremum is taken over the nodes.
pub fn weighted_mixed_norm(state: &PhaseState, m: f64, spec: &MixedNormSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let high = state.project_high(m);
    if high.u.is_zero() && high.ut.is_zero() {
        return Ok((0.0, 0.0));
    }
    let nodes = spec.nodes();
    let norms = space_norms(&high, &nodes, spec.space_norm, spec.oversample)?;
    let sup = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let q = spec.time_norm;
    let value = if q.is_infinite() {
        nodes
            .iter()
            .zip(&norms)
            .map(|(&t, &v)| spec.weight(t) * v)
            .fold(0.0f64, f64::max)
    } else {
        let last = nodes.len() - 1;
        let sum: f64 = nodes
            .iter()
            .zip(&norms)
            .enumerate()
            .map(|(j, (&t, &v))| {
                let w = if j == 0 || j == last { 0.5 } else { 1.0 };
                w * (spec.weight(t) * v).powf(q)
            })
            .sum();
        (spec.dt_quad * sum).powf(1.0 / q)
    };
    Ok((value, sup * spec.tail_factor()))
}
