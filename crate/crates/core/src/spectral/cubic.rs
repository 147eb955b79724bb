//! Exactly dealiased evaluation of `S_N((S_N f)^3)`.
//!
//! With the filtered field supported in `|n|_inf <= K`, the cube has
//! bandwidth `3K`; a grid of `G >= 4K + 1` points per axis leaves every
//! retained mode (and the quartic integral) free of aliasing.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::field::FourierField;
use super::filter::FilterSpec;
use super::grid::{grid_size, FieldMap, PrunedTransform, Scratch};
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Minimum oversampling factor (in units of `2K + 1`) for exact dealiasing.
pub const DEALIAS_OVERSAMPLE: usize = 2;

pub(crate) fn dealias_grid(band: usize, oversample: usize) -> Result<usize> {
    let g = grid_size(band, oversample);
    let required = 4 * band + 1;
    if g < required {
        return Err(Error::GridTooSmall {
            points: g,
            bandwidth: band,
            required,
        });
    }
    Ok(g)
}

/// Preplanned workspace for repeated cubic-term evaluations on one lattice.
pub struct CubicEngine {
    lattice: Arc<Lattice>,
    tr: Arc<PrunedTransform>,
    map: FieldMap,
    chi: Vec<f64>,
    spec: Vec<Complex64>,
    grid: Vec<f64>,
    scratch: Scratch,
}

impl CubicEngine {
    pub fn new(lattice: Arc<Lattice>, filter: &FilterSpec, oversample: usize) -> Result<Self> {
        let band = filter.bandwidth().min(lattice.cutoff());
        let g = dealias_grid(band, oversample)?;
        let tr = PrunedTransform::shared(lattice.dim(), g, band)?;
        let map = FieldMap::filtered(&lattice, &tr, |p| filter.passes(lattice.norm2(p)));
        let chi = lattice.norms2().iter().map(|&n2| filter.multiplier(n2)).collect();
        Ok(CubicEngine {
            spec: vec![Complex64::default(); tr.spectrum_len()],
            grid: vec![0.0; tr.grid_len()],
            scratch: tr.scratch(),
            lattice,
            tr,
            map,
            chi,
        })
    }

    pub fn points(&self) -> usize {
        self.tr.points()
    }

    /// Filter multipliers by lattice position.
    pub fn multipliers(&self) -> &[f64] {
        &self.chi
    }

    /// Lattice positions touched by the nonlinearity (`chi > 0`).
    pub fn active_positions(&self) -> &[u32] {
        self.map.positions()
    }

    fn cell(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.tr.points() as f64).powi(self.lattice.dim() as i32)
    }

    fn load(&mut self, mean: f64, cos: &[f64], sin: &[f64]) {
        self.map
            .scatter(mean, cos, sin, Some(&self.chi), 1.0, &mut self.spec);
        self.tr.inverse(&mut self.spec, &mut self.grid, &mut self.scratch);
    }

    /// Grid values of `S_N f` (valid until the next call).
    pub fn filtered_values(&mut self, mean: f64, cos: &[f64], sin: &[f64]) -> &[f64] {
        self.load(mean, cos, sin);
        &self.grid
    }

    /// `int (S_N f)^4`, exact on the dealiasing grid.
    pub fn quartic(&mut self, mean: f64, cos: &[f64], sin: &[f64]) -> f64 {
        self.load(mean, cos, sin);
        self.cell() * self.grid.iter().map(|v| (v * v) * (v * v)).sum::<f64>()
    }

    /// Writes the coefficients of `S_N((S_N f)^3)` into the output arrays
    /// (positions outside the filter support are zeroed) and returns
    /// `int (S_N f)^4` as a by-product.
    pub fn apply(
        &mut self,
        mean: f64,
        cos: &[f64],
        sin: &[f64],
        out_mean: &mut f64,
        out_cos: &mut [f64],
        out_sin: &mut [f64],
    ) -> f64 {
        self.load(mean, cos, sin);
        let mut quartic = 0.0;
        for v in self.grid.iter_mut() {
            let sq = *v * *v;
            quartic += sq * sq;
            *v *= sq;
        }
        self.tr.forward(&mut self.grid, &mut self.spec, &mut self.scratch);
        out_cos.iter_mut().for_each(|v| *v = 0.0);
        out_sin.iter_mut().for_each(|v| *v = 0.0);
        let scale = 1.0 / self.tr.grid_len() as f64;
        self.map.gather(&self.spec, scale, out_mean, out_cos, out_sin);
        for &p in self.map.positions() {
            let p = p as usize;
            out_cos[p] *= self.chi[p];
            out_sin[p] *= self.chi[p];
        }
        self.cell() * quartic
    }

    pub fn apply_field(&mut self, f: &FourierField) -> Result<FourierField> {
        if !Arc::ptr_eq(f.lattice(), &self.lattice) {
            return Err(Error::CutoffMismatch(f.cutoff(), self.lattice.cutoff()));
        }
        let mut out = FourierField::zeros(f.dim(), f.cutoff());
        let mut mean = 0.0;
        let len = self.lattice.len();
        let (mut c, mut s) = (vec![0.0; len], vec![0.0; len]);
        self.apply(f.mean(), f.cos_coeffs(), f.sin_coeffs(), &mut mean, &mut c, &mut s);
        out.set_mean(mean);
        out.cos_coeffs_mut().copy_from_slice(&c);
        out.sin_coeffs_mut().copy_from_slice(&s);
        Ok(out)
    }
}

/// `S_N((S_N f)^3)` on the lattice of `f`. Requires `oversample >= 2`.
pub fn cubic_term(f: &FourierField, spec: &FilterSpec, oversample: usize) -> Result<FourierField> {
    CubicEngine::new(f.lattice().clone(), spec, oversample)?.apply_field(f)
}

/// `int (S_N f)^4` with exact quadrature.
pub fn filtered_quartic(f: &FourierField, spec: &FilterSpec, oversample: usize) -> Result<f64> {
    let mut engine = CubicEngine::new(f.lattice().clone(), spec, oversample)?;
    Ok(engine.quartic(f.mean(), f.cos_coeffs(), f.sin_coeffs()))
}
