//! Physical grids and pruned real FFTs between half-spectra and grid values.
//!
//! Spectra live in a buffer of shape `[G; d-1] x [G/2 + 1]` (row-major, last
//! axis contiguous). Only frequencies with `|k_i| <= K` are ever populated, so
//! the complex passes skip every line that is known to be zero.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::FourierField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Smallest `m >= n` of the form `2^a 3^b 5^c`.
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid size for the field bandwidth `k` at the given oversampling factor.
pub fn grid_size(k: usize, oversample: usize) -> usize {
    fast_size(oversample.max(1) * (2 * k + 1))
}

/// Values on the nodes `x_k = 2 pi k / G`, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalGrid {
    dim: usize,
    points: usize,
    values: Vec<f64>,
}

impl PhysicalGrid {
    pub fn new(dim: usize, points: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != points.pow(dim as u32) {
            return Err(Error::InvalidParameter(format!(
                "grid of {points}^{dim} nodes needs {} values, got {}",
                points.pow(dim as u32),
                values.len()
            )));
        }
        Ok(PhysicalGrid {
            dim,
            points,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Coordinates of node `k` (row-major linear index).
    pub fn node(&self, mut k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = 2.0 * PI * (k % self.points) as f64 / self.points as f64;
            k /= self.points;
        }
        x
    }

    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI / self.points as f64).powi(self.dim as i32)
    }

    /// Trapezoidal quadrature `(2pi/G)^d sum values`.
    pub fn integral(&self) -> f64 {
        self.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        quadrature_lp(&self.values, self.cell_volume(), p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p == 2.0 || p == 3.0 || p == 4.0 || p == 6.0 || p == f64::INFINITY {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent(p))
    }
}

/// Discrete `L^p` norm of grid values with the given cell volume; `p = inf`
/// returns the grid maximum.
pub(crate) fn quadrature_lp(values: &[f64], cell: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        let ip = p as i32;
        let s: f64 = values.iter().map(|v| v.abs().powi(ip)).sum();
        (cell * s).powf(1.0 / p)
    })
}

struct Plan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

static PLANS: Lazy<Mutex<HashMap<usize, Arc<Plan>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(g: usize) -> Arc<Plan> {
    let mut cache = PLANS.lock().expect("fft plan cache poisoned");
    cache
        .entry(g)
        .or_insert_with(|| {
            let mut cp = FftPlanner::new();
            let mut rp = RealFftPlanner::new();
            Arc::new(Plan {
                fwd: cp.plan_fft_forward(g),
                inv: cp.plan_fft_inverse(g),
                r2c: rp.plan_fft_forward(g),
                c2r: rp.plan_fft_inverse(g),
            })
        })
        .clone()
}

const BATCH: usize = 16;

/// Scratch space reused across transforms of one shape.
pub(crate) struct Scratch {
    lines: Vec<Complex64>,
    fft: Vec<Complex64>,
}

/// Transform between a half-spectrum with `|k_i| <= band` and a `G^d` grid.
pub(crate) struct PrunedTransform {
    dim: usize,
    g: usize,
    h: usize,
    band: usize,
    strides: Vec<usize>,
    lines: Vec<Vec<usize>>,
    plan: Arc<Plan>,
}

static TRANSFORMS: Lazy<Mutex<HashMap<(usize, usize, usize), Arc<PrunedTransform>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl PrunedTransform {
    pub(crate) fn shared(dim: usize, g: usize, band: usize) -> Result<Arc<Self>> {
        if 2 * band + 1 > g {
            return Err(Error::GridTooSmall {
                points: g,
                bandwidth: band,
                required: 2 * band + 1,
            });
        }
        let mut cache = TRANSFORMS.lock().expect("transform cache poisoned");
        Ok(cache
            .entry((dim, g, band))
            .or_insert_with(|| Arc::new(Self::build(dim, g, band)))
            .clone())
    }

    fn build(dim: usize, g: usize, band: usize) -> Self {
        let h = g / 2 + 1;
        let mut strides = vec![1usize; dim];
        if dim >= 2 {
            strides[dim - 2] = h;
            for i in (0..dim - 2).rev() {
                strides[i] = strides[i + 1] * g;
            }
        }
        let banded: Vec<usize> = (0..=band).chain(g - band..g).filter(|&v| v < g).collect();
        let mut banded_set = banded.clone();
        banded_set.sort_unstable();
        banded_set.dedup();
        let full: Vec<usize> = (0..g).collect();
        let half: Vec<usize> = (0..=band).collect();
        let mut lines = Vec::new();
        for j in 0..dim.saturating_sub(1) {
            let sets: Vec<&[usize]> = (0..dim)
                .map(|i| {
                    if i == j {
                        &[0usize][..]
                    } else if i == dim - 1 {
                        &half[..]
                    } else if i < j {
                        &full[..]
                    } else {
                        &banded_set[..]
                    }
                })
                .collect();
            let mut offsets = Vec::new();
            cartesian_offsets(&sets, &strides, 0, 0, &mut offsets);
            lines.push(offsets);
        }
        PrunedTransform {
            dim,
            g,
            h,
            band,
            strides,
            lines,
            plan: plan(g),
        }
    }

    pub(crate) fn points(&self) -> usize {
        self.g
    }

    pub(crate) fn band(&self) -> usize {
        self.band
    }

    pub(crate) fn spectrum_len(&self) -> usize {
        self.g.pow(self.dim as u32 - 1) * self.h
    }

    pub(crate) fn grid_len(&self) -> usize {
        self.g.pow(self.dim as u32)
    }

    pub(crate) fn scratch(&self) -> Scratch {
        let len = [
            self.plan.fwd.get_inplace_scratch_len(),
            self.plan.inv.get_inplace_scratch_len(),
            self.plan.r2c.get_scratch_len(),
            self.plan.c2r.get_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Scratch {
            lines: vec![Complex64::default(); BATCH * self.g],
            fft: vec![Complex64::default(); len],
        }
    }

    /// Buffer offset of frequency `k` with `k_{d-1} >= 0`.
    pub(crate) fn offset(&self, k: &[i64]) -> usize {
        let g = self.g as i64;
        let last = self.dim - 1;
        let mut off = k[last] as usize;
        for i in 0..last {
            off += (k[i].rem_euclid(g)) as usize * self.strides[i];
        }
        off
    }

    fn complex_pass(
        &self,
        axis: usize,
        spec: &mut [Complex64],
        fft: &Arc<dyn Fft<f64>>,
        scratch: &mut Scratch,
    ) {
        let g = self.g;
        let stride = self.strides[axis];
        for chunk in self.lines[axis].chunks(BATCH) {
            let buf = &mut scratch.lines[..chunk.len() * g];
            for (b, &off) in chunk.iter().enumerate() {
                for q in 0..g {
                    buf[b * g + q] = spec[off + q * stride];
                }
            }
            fft.process_with_scratch(buf, &mut scratch.fft);
            for (b, &off) in chunk.iter().enumerate() {
                for q in 0..g {
                    spec[off + q * stride] = buf[b * g + q];
                }
            }
        }
    }

    /// Grid values `sum_k c_k e^{i k.x}` from the half-spectrum (destroys `spec`).
    pub(crate) fn inverse(&self, spec: &mut [Complex64], out: &mut [f64], scratch: &mut Scratch) {
        debug_assert_eq!(spec.len(), self.spectrum_len());
        debug_assert_eq!(out.len(), self.grid_len());
        let inv = self.plan.inv.clone();
        for axis in 0..self.dim - 1 {
            self.complex_pass(axis, spec, &inv, scratch);
        }
        let (g, h) = (self.g, self.h);
        for (line, real) in spec.chunks_exact_mut(h).zip(out.chunks_exact_mut(g)) {
            line[0].im = 0.0;
            if g % 2 == 0 {
                line[h - 1].im = 0.0;
            }
            self.plan
                .c2r
                .process_with_scratch(line, real, &mut scratch.fft)
                .expect("c2r length mismatch");
        }
    }

    /// Unnormalized forward transform `sum_x f(x) e^{-i k.x}` (destroys `input`).
    /// Only entries with `|k_i| <= band` are meaningful afterwards.
    pub(crate) fn forward(&self, input: &mut [f64], spec: &mut [Complex64], scratch: &mut Scratch) {
        debug_assert_eq!(spec.len(), self.spectrum_len());
        debug_assert_eq!(input.len(), self.grid_len());
        let (g, h) = (self.g, self.h);
        for (real, line) in input.chunks_exact_mut(g).zip(spec.chunks_exact_mut(h)) {
            self.plan
                .r2c
                .process_with_scratch(real, line, &mut scratch.fft)
                .expect("r2c length mismatch");
        }
        let fwd = self.plan.fwd.clone();
        for axis in (0..self.dim - 1).rev() {
            self.complex_pass(axis, spec, &fwd, scratch);
        }
    }
}

fn cartesian_offsets(
    sets: &[&[usize]],
    strides: &[usize],
    axis: usize,
    base: usize,
    out: &mut Vec<usize>,
) {
    if axis == sets.len() {
        out.push(base);
        return;
    }
    for &v in sets[axis] {
        cartesian_offsets(sets, strides, axis + 1, base + v * strides[axis], out);
    }
}

#[derive(Clone, Copy)]
struct Entry {
    pos: u32,
    off: u32,
    conj: bool,
}

/// Placement of canonical coefficients of one lattice inside a transform buffer.
pub(crate) struct FieldMap {
    positions: Vec<u32>,
    scatter: Vec<Entry>,
    gather: Vec<Entry>,
}

impl FieldMap {
    /// Maps every canonical index of `lattice` with `|n|_inf <= tr.band()`.
    pub(crate) fn new(lattice: &Lattice, tr: &PrunedTransform) -> Self {
        Self::filtered(lattice, tr, |_| true)
    }

    /// Like [`FieldMap::new`], restricted to positions accepted by `keep`.
    pub(crate) fn filtered(lattice: &Lattice, tr: &PrunedTransform, keep: impl Fn(usize) -> bool) -> Self {
        let d = lattice.dim();
        let mut n = vec![0i64; d];
        let mut neg = vec![0i64; d];
        let mut positions = Vec::new();
        let mut scatter = Vec::new();
        let mut gather = Vec::new();
        for p in 0..lattice.len() {
            if lattice.sup_norm(p) > tr.band() || !keep(p) {
                continue;
            }
            lattice.components_into(p, &mut n);
            for (a, b) in neg.iter_mut().zip(&n) {
                *a = -b;
            }
            let pos = p as u32;
            positions.push(pos);
            let last = n[d - 1];
            if last > 0 {
                let e = Entry { pos, off: tr.offset(&n) as u32, conj: false };
                scatter.push(e);
                gather.push(e);
            } else if last < 0 {
                let e = Entry { pos, off: tr.offset(&neg) as u32, conj: true };
                scatter.push(e);
                gather.push(e);
            } else {
                let e = Entry { pos, off: tr.offset(&n) as u32, conj: false };
                scatter.push(e);
                gather.push(e);
                scatter.push(Entry { pos, off: tr.offset(&neg) as u32, conj: true });
            }
        }
        FieldMap { positions, scatter, gather }
    }

    /// Mapped lattice positions, ascending.
    pub(crate) fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// Zeroes `spec` and writes `mult * (b - i c) / 2` (and conjugates).
    /// `mult` is indexed by lattice position; the mean is scaled by `mean_mult`.
    pub(crate) fn scatter(
        &self,
        mean: f64,
        cos: &[f64],
        sin: &[f64],
        mult: Option<&[f64]>,
        mean_mult: f64,
        spec: &mut [Complex64],
    ) {
        spec.iter_mut().for_each(|c| *c = Complex64::default());
        spec[0] = Complex64::new(mean * mean_mult, 0.0);
        for e in &self.scatter {
            let p = e.pos as usize;
            let m = mult.map_or(1.0, |m| m[p]);
            let im = if e.conj { 0.5 } else { -0.5 };
            spec[e.off as usize] = Complex64::new(0.5 * m * cos[p], im * m * sin[p]);
        }
    }

    /// Reads `scale * c_k` back into `(mean, cos, sin)` for mapped positions.
    pub(crate) fn gather(
        &self,
        spec: &[Complex64],
        scale: f64,
        mean: &mut f64,
        cos: &mut [f64],
        sin: &mut [f64],
    ) {
        *mean = scale * spec[0].re;
        for e in &self.gather {
            let p = e.pos as usize;
            let v = spec[e.off as usize];
            let im = if e.conj { -v.im } else { v.im };
            cos[p] = 2.0 * scale * v.re;
            sin[p] = -2.0 * scale * im;
        }
    }
}

/// Samples `f` on the `G^d` grid.
pub fn to_physical(f: &FourierField, points: usize) -> Result<PhysicalGrid> {
    let band = f.bandwidth();
    let tr = PrunedTransform::shared(f.dim(), points, band)?;
    let map = FieldMap::new(f.lattice(), &tr);
    let mut spec = vec![Complex64::default(); tr.spectrum_len()];
    let mut values = vec![0.0; tr.grid_len()];
    let mut scratch = tr.scratch();
    map.scatter(f.mean(), f.cos_coeffs(), f.sin_coeffs(), None, 1.0, &mut spec);
    tr.inverse(&mut spec, &mut values, &mut scratch);
    PhysicalGrid::new(f.dim(), points, values)
}

/// Trigonometric interpolant of the grid, truncated to the box `|n|_inf <= cutoff`.
pub fn from_physical(grid: &PhysicalGrid, cutoff: usize) -> Result<FourierField> {
    let tr = PrunedTransform::shared(grid.dim(), grid.points_per_dim(), cutoff)?;
    let mut out = FourierField::zeros(grid.dim(), cutoff);
    let map = FieldMap::new(out.lattice(), &tr);
    let mut spec = vec![Complex64::default(); tr.spectrum_len()];
    let mut input = grid.values().to_vec();
    let mut scratch = tr.scratch();
    tr.forward(&mut input, &mut spec, &mut scratch);
    let scale = 1.0 / tr.grid_len() as f64;
    let mut mean = 0.0;
    let mut cos = vec![0.0; out.lattice().len()];
    let mut sin = vec![0.0; out.lattice().len()];
    map.gather(&spec, scale, &mut mean, &mut cos, &mut sin);
    out.set_mean(mean);
    out.cos_coeffs_mut().copy_from_slice(&cos);
    out.sin_coeffs_mut().copy_from_slice(&sin);
    Ok(out)
}

/// Quadrature `L^p` norm on a grid with `G >= oversample * (2B + 1)` points,
/// `B` the bandwidth of `f`. Exact up to rounding for `p = 2` (any
/// `oversample >= 1`) and `p = 4` (`oversample >= 2`); `p = inf` is the grid
/// maximum and therefore a lower bound for the true supremum.
pub fn lp_norm(f: &FourierField, p: f64, oversample: usize) -> Result<f64> {
    check_exponent(p)?;
    if oversample == 0 {
        return Err(Error::InvalidParameter("oversample must be at least 1".into()));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let grid = to_physical(f, grid_size(f.bandwidth(), oversample))?;
    grid.lp_norm(p)
}

/// Repeated synthesis of fields on one lattice onto a fixed grid.
pub(crate) struct GridEvaluator {
    dim: usize,
    tr: Arc<PrunedTransform>,
    map: FieldMap,
    spec: Vec<Complex64>,
    grid: Vec<f64>,
    scratch: Scratch,
}

impl GridEvaluator {
    /// Maps the modes of `lattice` with `|n|_inf <= band` onto a `G^d` grid.
    pub(crate) fn new(lattice: &Lattice, band: usize, points: usize) -> Result<Self> {
        let tr = PrunedTransform::shared(lattice.dim(), points, band)?;
        let map = FieldMap::new(lattice, &tr);
        Ok(GridEvaluator {
            dim: lattice.dim(),
            spec: vec![Complex64::default(); tr.spectrum_len()],
            grid: vec![0.0; tr.grid_len()],
            scratch: tr.scratch(),
            tr,
            map,
        })
    }

    pub(crate) fn cell(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.tr.points() as f64).powi(self.dim as i32)
    }

    /// Grid values of the field, optionally multiplied mode-wise by `mult`.
    pub(crate) fn eval(&mut self, mean: f64, cos: &[f64], sin: &[f64], mult: Option<&[f64]>) -> &[f64] {
        self.map.scatter(mean, cos, sin, mult, 1.0, &mut self.spec);
        self.tr.inverse(&mut self.spec, &mut self.grid, &mut self.scratch);
        &self.grid
    }

    pub(crate) fn eval_field(&mut self, f: &FourierField) -> &[f64] {
        self.eval(f.mean(), f.cos_coeffs(), f.sin_coeffs(), None)
    }

    /// Coefficients of grid data (truncated to the mapped modes) into `out`.
    pub(crate) fn analyze(&mut self, values: &mut [f64], out: &mut FourierField) {
        self.tr.forward(values, &mut self.spec, &mut self.scratch);
        let scale = 1.0 / self.tr.grid_len() as f64;
        let mut mean = 0.0;
        let (cos, sin) = out.coeffs_mut();
        cos.iter_mut().for_each(|v| *v = 0.0);
        sin.iter_mut().for_each(|v| *v = 0.0);
        self.map.gather(&self.spec, scale, &mut mean, cos, sin);
        out.set_mean(mean);
    }
}
