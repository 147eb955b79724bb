//! Galerkin integration of `u_tt - Lap u + S_N((S_N u)^3) = 0` on the box
//! `|n|_inf <= L`.
//!
//! Strang splitting: half a linear rotation, a kick `ut -= dt S_N((S_N u)^3)`,
//! another half rotation. Only modes with `chi > 0` (and the mean) are coupled;
//! every other mode is exactly free and is reconstructed from the initial data.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::propagator::free_evolve;
use crate::spectral::{
    grid_size, sobolev_norm, CubicEngine, FilterSpec, FourierField, GridEvaluator, PhaseState,
    DEALIAS_OVERSAMPLE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageMode {
    /// Norms only.
    Lean,
    /// Norms and full states at every sample time.
    Full,
}

/// Splitting `u = S(t) Pi^M (u0, u1) + w` tracked during integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub level: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub filter: FilterSpec,
    pub dt: f64,
    pub t_end: f64,
    /// Multiples of `dt` in `[0, t_end]`, strictly increasing.
    pub sample_times: Vec<f64>,
    pub oversample: usize,
    pub storage: StorageMode,
    /// Also store the discrete states at `t - dt` and `t + dt` (full mode).
    pub stencil: bool,
    pub decomposition: Option<Decomposition>,
}

/// `1e-3` up to `N = 16`, then proportional to `1/N`.
pub fn default_dt(cutoff: f64) -> f64 {
    1e-3 * (16.0 / cutoff).min(1.0)
}

impl SolverConfig {
    /// Lean configuration sampling only `t = 0` and `t = t_end`.
    pub fn new(filter: FilterSpec, dt: f64, t_end: f64) -> Self {
        SolverConfig {
            filter,
            dt,
            t_end,
            sample_times: vec![0.0, t_end],
            oversample: DEALIAS_OVERSAMPLE,
            storage: StorageMode::Lean,
            stencil: false,
            decomposition: None,
        }
    }

    /// Samples every `stride` steps, always including `0` and `t_end`.
    pub fn with_stride(mut self, stride: usize) -> Self {
        let steps = (self.t_end / self.dt).round() as usize;
        let stride = stride.max(1);
        let mut ks: Vec<usize> = (0..=steps).step_by(stride).collect();
        if *ks.last().unwrap() != steps {
            ks.push(steps);
        }
        self.sample_times = ks.into_iter().map(|k| k as f64 * self.dt).collect();
        self
    }

    /// `count` evenly spaced samples over `[0, t_end]` (rounded to step multiples).
    pub fn with_samples(mut self, count: usize) -> Self {
        let steps = (self.t_end / self.dt).round() as usize;
        let count = count.max(2);
        let mut ks: Vec<usize> = (0..count).map(|i| (i * steps + (count - 1) / 2) / (count - 1)).collect();
        ks.dedup();
        self.sample_times = ks.into_iter().map(|k| k as f64 * self.dt).collect();
        self
    }

    pub fn full(mut self) -> Self {
        self.storage = StorageMode::Full;
        self
    }

    pub fn with_stencil(mut self) -> Self {
        self.storage = StorageMode::Full;
        self.stencil = true;
        self
    }

    pub fn decompose(mut self, level: f64, epsilon: f64) -> Self {
        self.decomposition = Some(Decomposition { level, epsilon });
        self
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Step index of every sample time.
    fn sample_steps(&self) -> Result<Vec<usize>> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        let tol = 1e-9 * self.dt;
        let total = self.steps();
        if ((total as f64) * self.dt - self.t_end).abs() > tol * (1.0 + total as f64) {
            return Err(Error::InvalidParameter(format!(
                "t_end {} is not a multiple of dt {}",
                self.t_end, self.dt
            )));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter("no sample times".into()));
        }
        let mut out = Vec::with_capacity(self.sample_times.len());
        for &t in &self.sample_times {
            let k = (t / self.dt).round();
            if !(t >= 0.0 && t <= self.t_end + tol) || (k * self.dt - t).abs() > tol * (1.0 + k) {
                return Err(Error::InvalidParameter(format!(
                    "sample time {t} is not a step multiple inside [0, {}]",
                    self.t_end
                )));
            }
            let k = k as usize;
            if out.last().is_some_and(|&last| k <= last) {
                return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
            }
            out.push(k);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub initial: PhaseState,
    pub filter: FilterSpec,
    pub dt: f64,
    pub oversample: usize,
    /// Full mode only.
    pub states: Option<Vec<PhaseState>>,
    /// Discrete states at `t - dt` and `t + dt` per sample (stencil mode only).
    pub stencil: Option<Vec<[PhaseState; 2]>>,
    pub energies: Vec<f64>,
    /// `||S_N u(t)||_{L^4}`.
    pub l4_norms: Vec<f64>,
    /// `||S_N u||_{L^4((0,t) x T^d)}`, midpoint rule over steps.
    pub l4_spacetime: Vec<f64>,
    pub decomposition: Option<Decomposition>,
    /// `||(w, w_t)||_{H^1 x L^2}` (empty without a decomposition).
    pub h1_norms: Vec<f64>,
    /// `||w||_{H^{1-eps}}` (empty without a decomposition).
    pub h_1m_eps_norms: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn states(&self) -> Result<&[PhaseState]> {
        self.states.as_deref().ok_or(Error::MissingData("states (run in full mode)"))
    }

    /// CSV with columns `t,energy,h1_w,h_1m_eps_w,l4_SNu,l4_st_SNu[,residual]`;
    /// absent quantities are left empty.
    pub fn to_csv(&self, residual: Option<&[f64]>) -> String {
        let mut out = String::from("t,energy,h1_w,h_1m_eps_w,l4_SNu,l4_st_SNu");
        if residual.is_some() {
            out.push_str(",residual");
        }
        out.push('\n');
        let opt = |v: &[f64], i: usize| v.get(i).map(|x| format!("{x:e}")).unwrap_or_default();
        for i in 0..self.len() {
            let _ = write!(
                out,
                "{:e},{:e},{},{},{:e},{:e}",
                self.times[i],
                self.energies[i],
                opt(&self.h1_norms, i),
                opt(&self.h_1m_eps_norms, i),
                self.l4_norms[i],
                self.l4_spacetime[i]
            );
            if let Some(r) = residual {
                let _ = write!(out, ",{}", opt(r, i));
            }
            out.push('\n');
        }
        out
    }
}

/// Rotation tables restricted to the coupled positions.
struct Rotation {
    t: f64,
    cos: Vec<f64>,
    sin_over_w: Vec<f64>,
    w_sin: Vec<f64>,
}

impl Rotation {
    fn new(norms2: &[u32], active: &[usize], t: f64) -> Self {
        let mut r = Rotation { t, cos: vec![], sin_over_w: vec![], w_sin: vec![] };
        for &p in active {
            let w = (norms2[p] as f64).sqrt();
            let (s, c) = (w * t).sin_cos();
            r.cos.push(c);
            r.sin_over_w.push(s / w);
            r.w_sin.push(w * s);
        }
        r
    }
}

#[derive(Clone)]
struct Work {
    um: f64,
    vm: f64,
    uc: Vec<f64>,
    us: Vec<f64>,
    vc: Vec<f64>,
    vs: Vec<f64>,
}

impl Work {
    fn from_state(st: &PhaseState) -> Self {
        Work {
            um: st.u.mean(),
            vm: st.ut.mean(),
            uc: st.u.cos_coeffs().to_vec(),
            us: st.u.sin_coeffs().to_vec(),
            vc: st.ut.cos_coeffs().to_vec(),
            vs: st.ut.sin_coeffs().to_vec(),
        }
    }
}

struct Stepper {
    engine: CubicEngine,
    active: Vec<usize>,
    forward: Rotation,
    backward: Rotation,
    dt: f64,
    fc: Vec<f64>,
    fs: Vec<f64>,
}

impl Stepper {
    fn new(init: &PhaseState, filter: &FilterSpec, oversample: usize, dt: f64) -> Result<Self> {
        let lattice = init.u.lattice().clone();
        let engine = CubicEngine::new(lattice.clone(), filter, oversample)?;
        let active: Vec<usize> = engine.active_positions().iter().map(|&p| p as usize).collect();
        let norms2 = lattice.norms2();
        Ok(Stepper {
            forward: Rotation::new(norms2, &active, 0.5 * dt),
            backward: Rotation::new(norms2, &active, -0.5 * dt),
            active,
            engine,
            dt,
            fc: vec![0.0; lattice.len()],
            fs: vec![0.0; lattice.len()],
        })
    }

    fn rotate(active: &[usize], r: &Rotation, w: &mut Work) {
        w.um += r.t * w.vm;
        for (i, &p) in active.iter().enumerate() {
            let (c, k, ws) = (r.cos[i], r.sin_over_w[i], r.w_sin[i]);
            let (a, b) = (w.uc[p], w.vc[p]);
            w.uc[p] = c * a + k * b;
            w.vc[p] = -ws * a + c * b;
            let (a, b) = (w.us[p], w.vs[p]);
            w.us[p] = c * a + k * b;
            w.vs[p] = -ws * a + c * b;
        }
    }

    /// One Strang step of size `+dt` or `-dt`; returns `int (S_N u)^4` at the kick.
    fn step(&mut self, w: &mut Work, forward: bool) -> f64 {
        let (r, h) = if forward { (&self.forward, self.dt) } else { (&self.backward, -self.dt) };
        Self::rotate(&self.active, r, w);
        let mut fm = 0.0;
        let q = self.engine.apply(w.um, &w.uc, &w.us, &mut fm, &mut self.fc, &mut self.fs);
        w.vm -= h * fm;
        for &p in &self.active {
            w.vc[p] -= h * self.fc[p];
            w.vs[p] -= h * self.fs[p];
        }
        Self::rotate(&self.active, r, w);
        q
    }

    /// Coupled modes from `w`, all others from the exact free flow of `init`.
    fn assemble(&self, init: &PhaseState, w: &Work, t: f64) -> PhaseState {
        let mut st = free_evolve(init, t);
        st.u.set_mean(w.um);
        st.ut.set_mean(w.vm);
        let (uc, us) = st.u.coeffs_mut();
        let (vc, vs) = st.ut.coeffs_mut();
        for &p in &self.active {
            uc[p] = w.uc[p];
            us[p] = w.us[p];
            vc[p] = w.vc[p];
            vs[p] = w.vs[p];
        }
        st
    }
}

fn check_box(init: &PhaseState, filter: &FilterSpec) -> Result<()> {
    if init.cutoff() < filter.bandwidth() {
        return Err(Error::InvalidParameter(format!(
            "state cutoff {} is smaller than the filter bandwidth {}; embed the data with with_cutoff",
            init.cutoff(),
            filter.bandwidth()
        )));
    }
    Ok(())
}

pub(crate) fn energy_with(engine: &mut CubicEngine, st: &PhaseState) -> (f64, f64) {
    let q = engine.quartic(st.u.mean(), st.u.cos_coeffs(), st.u.sin_coeffs());
    (0.5 * (st.ut.l2_sq() + st.u.gradient_l2_sq()) + 0.25 * q, q)
}

/// `u - S(t) Pi^M (u0, u1)`.
pub fn nonlinear_part(state: &PhaseState, base: &PhaseState, level: f64, t: f64) -> Result<PhaseState> {
    state.sub(&free_evolve(&base.project_high(level), t))
}

fn decomposition_norms(w: &PhaseState, eps: f64) -> (f64, f64) {
    (w.norm(1.0), sobolev_norm(&w.u, 1.0 - eps))
}

/// Integrates from `init`, sampling at `cfg.sample_times`.
pub fn evolve(init: &PhaseState, cfg: &SolverConfig) -> Result<TrajectoryRecord> {
    let samples = cfg.sample_steps()?;
    check_box(init, &cfg.filter)?;
    let mut stepper = Stepper::new(init, &cfg.filter, cfg.oversample, cfg.dt)?;
    let high_base = cfg.decomposition.map(|d| init.project_high(d.level));
    let full = cfg.storage == StorageMode::Full;
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(samples.len()),
        initial: init.clone(),
        filter: cfg.filter,
        dt: cfg.dt,
        oversample: cfg.oversample,
        states: full.then(Vec::new),
        stencil: (full && cfg.stencil).then(Vec::new),
        energies: Vec::new(),
        l4_norms: Vec::new(),
        l4_spacetime: Vec::new(),
        decomposition: cfg.decomposition,
        h1_norms: Vec::new(),
        h_1m_eps_norms: Vec::new(),
    };
    let mut work = Work::from_state(init);
    let mut acc = 0.0;
    let mut k = 0usize;
    for &target in &samples {
        while k < target {
            acc += cfg.dt * stepper.step(&mut work, true);
            k += 1;
        }
        let t = k as f64 * cfg.dt;
        let st = stepper.assemble(init, &work, t);
        let (e, q) = energy_with(&mut stepper.engine, &st);
        rec.times.push(t);
        rec.energies.push(e);
        rec.l4_norms.push(q.max(0.0).powf(0.25));
        rec.l4_spacetime.push(acc.powf(0.25));
        if let (Some(d), Some(hb)) = (cfg.decomposition, &high_base) {
            let w = st.sub(&free_evolve(hb, t))?;
            let (h1, hs) = decomposition_norms(&w, d.epsilon);
            rec.h1_norms.push(h1);
            rec.h_1m_eps_norms.push(hs);
        }
        if let Some(stencil) = rec.stencil.as_mut() {
            let mut back = work.clone();
            stepper.step(&mut back, false);
            let mut fwd = work.clone();
            stepper.step(&mut fwd, true);
            stencil.push([
                stepper.assemble(init, &back, t - cfg.dt),
                stepper.assemble(init, &fwd, t + cfg.dt),
            ]);
        }
        if let Some(states) = rec.states.as_mut() {
            states.push(st);
        }
    }
    Ok(rec)
}

/// `E_N = (||ut||^2 + ||grad u||^2)/2 + int (S_N u)^4 / 4`, quartic term exact.
pub fn energy(state: &PhaseState, filter: &FilterSpec, oversample: usize) -> Result<f64> {
    let mut engine = CubicEngine::new(state.u.lattice().clone(), filter, oversample)?;
    Ok(energy_with(&mut engine, state).0)
}

/// Recomputes the decomposition `u = S(t) Pi^M (u0, u1) + w` from stored states.
pub fn nonlinear_component(
    traj: &TrajectoryRecord,
    base: &PhaseState,
    level: f64,
    epsilon: f64,
) -> Result<TrajectoryRecord> {
    let ws = nonlinear_states(traj, base, level)?;
    let mut out = traj.clone();
    out.decomposition = Some(Decomposition { level, epsilon });
    out.h1_norms.clear();
    out.h_1m_eps_norms.clear();
    for w in &ws {
        let (h1, hs) = decomposition_norms(w, epsilon);
        out.h1_norms.push(h1);
        out.h_1m_eps_norms.push(hs);
    }
    Ok(out)
}

/// `w(t)` at every sample time.
pub fn nonlinear_states(traj: &TrajectoryRecord, base: &PhaseState, level: f64) -> Result<Vec<PhaseState>> {
    if traj.initial != *base {
        return Err(Error::BaseMismatch);
    }
    let states = traj.states()?;
    states
        .iter()
        .zip(&traj.times)
        .map(|(st, &t)| nonlinear_part(st, base, level, t))
        .collect()
}

/// `max(d/4, 1)`.
pub fn default_tau(dim: usize) -> f64 {
    (dim as f64 / 4.0).max(1.0)
}

/// `||S_N((S_N u)^3) - u^3||_{H^{-tau}}`, with `u^3` resolved on the box
/// `|n|_inf <= 3L` (exact, grid `G >= 6L + 1`).
pub fn untruncated_defect(
    state: &PhaseState,
    filter: &FilterSpec,
    oversample: usize,
    tau: f64,
) -> Result<f64> {
    let u = &state.u;
    let l = u.cutoff();
    let g = grid_size(l, 3);
    let mut ev = GridEvaluator::new(u.lattice(), l, g)?;
    let mut values: Vec<f64> = ev.eval_field(u).iter().map(|v| v * v * v).collect();
    let mut cube = FourierField::zeros(u.dim(), 3 * l);
    GridEvaluator::new(cube.lattice(), 3 * l, g)?.analyze(&mut values, &mut cube);
    let truncated = CubicEngine::new(u.lattice().clone(), filter, oversample)?
        .apply_field(u)?
        .with_cutoff(3 * l);
    Ok(sobolev_norm(&truncated.sub(&cube)?, -tau))
}

/// The defect of the truncated equation against the cubic wave equation at
/// every stored state.
pub fn residual_untruncated(traj: &TrajectoryRecord, tau: f64) -> Result<Vec<f64>> {
    traj.states()?
        .iter()
        .map(|st| untruncated_defect(st, &traj.filter, traj.oversample, tau))
        .collect()
}

#[cfg(test)]
mod tests;
