//! Real trigonometric series and phase-space pairs.
//!
//! Norms use the physical Lebesgue measure on `(R/2piZ)^d`, so that
//! `||cos(n.x)||_{L^2}^2 = (2pi)^d / 2` and `||1||_{L^2}^2 = (2pi)^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::lattice::{canonical_index, Lattice, LatticeIndex};
use crate::error::{Error, Result};

/// Torus volume `(2pi)^d`.
pub fn torus_volume(dim: usize) -> f64 {
    (2.0 * PI).powi(dim as i32)
}

/// `u(x) = a + sum_n (b_n cos(n.x) + c_n sin(n.x))` over canonical `n` in the
/// storage box.
#[derive(Clone, Debug)]
pub struct FourierField {
    lattice: Arc<Lattice>,
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierField {
    pub fn zeros(dim: usize, cutoff: usize) -> Self {
        let lattice = Lattice::shared(dim, cutoff);
        let len = lattice.len();
        FourierField {
            lattice,
            mean: 0.0,
            cos: vec![0.0; len],
            sin: vec![0.0; len],
        }
    }

    pub fn constant(dim: usize, cutoff: usize, value: f64) -> Self {
        let mut f = Self::zeros(dim, cutoff);
        f.mean = value;
        f
    }

    /// Builds a field from raw coefficient arrays in lexicographic canonical order.
    pub fn from_parts(
        dim: usize,
        cutoff: usize,
        mean: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    ) -> Result<Self> {
        let lattice = Lattice::shared(dim, cutoff);
        if cos.len() != lattice.len() || sin.len() != lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients per family, got {} and {}",
                lattice.len(),
                cos.len(),
                sin.len()
            )));
        }
        Ok(FourierField {
            lattice,
            mean,
            cos,
            sin,
        })
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.lattice.cutoff()
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn set_mean(&mut self, a: f64) {
        self.mean = a;
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos_coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.cos
    }

    /// Both coefficient arrays at once.
    pub fn coeffs_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.cos, &mut self.sin)
    }

    pub fn sin_coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.sin
    }

    /// Coefficients `(b, c)` of `cos(n.x)` and `sin(n.x)` for any nonzero `n`,
    /// using the orientation of `n` as given.
    pub fn coeff(&self, n: &[i64]) -> Result<(f64, f64)> {
        self.check_dim(n.len())?;
        let (idx, sign) = canonical_index(n)?;
        Ok(match self.lattice.position(idx.components()) {
            Some(p) => (self.cos[p], sign as f64 * self.sin[p]),
            None => (0.0, 0.0),
        })
    }

    /// Sets the coefficients attached to `cos(n.x)` and `sin(n.x)`; a
    /// non-canonical `n` is folded onto its canonical partner.
    pub fn set_coeff(&mut self, n: &[i64], b: f64, c: f64) -> Result<()> {
        self.check_dim(n.len())?;
        let (idx, sign) = canonical_index(n)?;
        let p = self
            .lattice
            .position(idx.components())
            .ok_or_else(|| Error::OutsideBox {
                index: n.to_vec(),
                cutoff: self.cutoff(),
            })?;
        self.cos[p] = b;
        self.sin[p] = sign as f64 * c;
        Ok(())
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch(d, self.dim()));
        }
        Ok(())
    }

    /// Iterates `(index, b, c)` over stored canonical modes.
    pub fn modes(&self) -> impl Iterator<Item = (LatticeIndex, f64, f64)> + '_ {
        (0..self.lattice.len()).map(move |p| (self.lattice.index(p), self.cos[p], self.sin[p]))
    }

    pub fn is_zero(&self) -> bool {
        self.mean == 0.0
            && self.cos.iter().all(|&v| v == 0.0)
            && self.sin.iter().all(|&v| v == 0.0)
    }

    /// Largest `|n|_inf` carrying a nonzero coefficient (0 for constants).
    pub fn bandwidth(&self) -> usize {
        (0..self.lattice.len())
            .filter(|&p| self.cos[p] != 0.0 || self.sin[p] != 0.0)
            .map(|p| self.lattice.sup_norm(p))
            .max()
            .unwrap_or(0)
    }

    /// Re-stores the field in a different box, dropping modes outside it.
    pub fn with_cutoff(&self, cutoff: usize) -> FourierField {
        if cutoff == self.cutoff() {
            return self.clone();
        }
        let mut out = FourierField::zeros(self.dim(), cutoff);
        out.mean = self.mean;
        let mut n = vec![0i64; self.dim()];
        for p in 0..self.lattice.len() {
            if self.lattice.sup_norm(p) > cutoff {
                continue;
            }
            self.lattice.components_into(p, &mut n);
            let q = out.lattice.position(&n).expect("index inside target box");
            out.cos[q] = self.cos[p];
            out.sin[q] = self.sin[p];
        }
        out
    }

    /// Applies a real multiplier depending on `|n|^2` to every nonzero mode;
    /// the mean is scaled by `mult(0)`.
    pub fn map_modes(&self, mult: impl Fn(u32) -> f64) -> FourierField {
        let mut out = self.clone();
        out.mean *= mult(0);
        for (p, &n2) in self.lattice.norms2().iter().enumerate() {
            let m = mult(n2);
            out.cos[p] *= m;
            out.sin[p] *= m;
        }
        out
    }

    pub fn scaled(&self, lambda: f64) -> FourierField {
        let mut out = self.clone();
        out.mean *= lambda;
        out.cos.iter_mut().for_each(|v| *v *= lambda);
        out.sin.iter_mut().for_each(|v| *v *= lambda);
        out
    }

    /// `self + lambda * other`, stored at the larger of the two cutoffs.
    pub fn axpy(&self, lambda: f64, other: &FourierField) -> Result<FourierField> {
        self.check_dim(other.dim())?;
        let cutoff = self.cutoff().max(other.cutoff());
        let mut out = self.with_cutoff(cutoff);
        let rhs = other.with_cutoff(cutoff);
        out.mean += lambda * rhs.mean;
        for (a, b) in out.cos.iter_mut().zip(&rhs.cos) {
            *a += lambda * b;
        }
        for (a, b) in out.sin.iter_mut().zip(&rhs.sin) {
            *a += lambda * b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(-1.0, other)
    }

    /// Largest coefficient difference after embedding both fields in a common box.
    pub fn max_coeff_diff(&self, other: &FourierField) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.cos
            .iter()
            .chain(&d.sin)
            .fold(d.mean.abs(), |m, v| m.max(v.abs())))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(self.mean.abs(), |m, v| m.max(v.abs()))
    }

    /// Pointwise evaluation by direct summation.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        let mut n = vec![0i64; self.dim()];
        let mut acc = self.mean;
        for p in 0..self.lattice.len() {
            if self.cos[p] == 0.0 && self.sin[p] == 0.0 {
                continue;
            }
            self.lattice.components_into(p, &mut n);
            let phase: f64 = n.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
            acc += self.cos[p] * phase.cos() + self.sin[p] * phase.sin();
        }
        acc
    }

    /// `sum_n w(|n|^2) (b_n^2 + c_n^2)` over nonzero modes.
    pub(crate) fn weighted_power(&self, weight: impl Fn(u32) -> f64) -> f64 {
        self.lattice
            .norms2()
            .iter()
            .zip(self.cos.iter().zip(&self.sin))
            .map(|(&n2, (b, c))| weight(n2) * (b * b + c * c))
            .sum()
    }

    /// `||grad u||_{L^2}^2`.
    pub fn gradient_l2_sq(&self) -> f64 {
        0.5 * torus_volume(self.dim()) * self.weighted_power(|n2| n2 as f64)
    }

    /// `||u||_{L^2}^2`.
    pub fn l2_sq(&self) -> f64 {
        sobolev_norm_sq(self, 0.0)
    }
}

impl PartialEq for FourierField {
    fn eq(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let cutoff = self.cutoff().max(other.cutoff());
        let a = self.with_cutoff(cutoff);
        let b = other.with_cutoff(cutoff);
        a.mean == b.mean && a.cos == b.cos && a.sin == b.sin
    }
}

/// `||f||_{H^sigma}^2 = (2pi)^d a^2 + ((2pi)^d / 2) sum <n>^{2 sigma} (b^2 + c^2)`.
pub fn sobolev_norm_sq(f: &FourierField, sigma: f64) -> f64 {
    let vol = torus_volume(f.dim());
    let tail = if sigma == 0.0 {
        f.weighted_power(|_| 1.0)
    } else {
        f.weighted_power(|n2| (1.0 + n2 as f64).powf(sigma))
    };
    vol * f.mean * f.mean + 0.5 * vol * tail
}

pub fn sobolev_norm(f: &FourierField, sigma: f64) -> f64 {
    sobolev_norm_sq(f, sigma).sqrt()
}

/// Sharp projector `Pi_M`: mean plus modes with Euclidean `|n| <= M`.
pub fn project_low(f: &FourierField, m: f64) -> FourierField {
    let m2 = m * m;
    f.map_modes(|n2| if n2 == 0 || n2 as f64 <= m2 { 1.0 } else { 0.0 })
}

/// Complementary projector `Pi^M = 1 - Pi_M` (removes the mean).
pub fn project_high(f: &FourierField, m: f64) -> FourierField {
    let m2 = m * m;
    f.map_modes(|n2| if n2 == 0 || n2 as f64 <= m2 { 0.0 } else { 1.0 })
}

/// A phase-space point `(u, d_t u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub u: FourierField,
    pub ut: FourierField,
}

impl PhaseState {
    pub fn new(u: FourierField, ut: FourierField) -> Result<Self> {
        if u.dim() != ut.dim() {
            return Err(Error::DimensionMismatch(u.dim(), ut.dim()));
        }
        if u.cutoff() != ut.cutoff() {
            return Err(Error::CutoffMismatch(u.cutoff(), ut.cutoff()));
        }
        Ok(PhaseState { u, ut })
    }

    pub fn zeros(dim: usize, cutoff: usize) -> Self {
        PhaseState {
            u: FourierField::zeros(dim, cutoff),
            ut: FourierField::zeros(dim, cutoff),
        }
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.u.cutoff()
    }

    pub fn with_cutoff(&self, cutoff: usize) -> PhaseState {
        PhaseState {
            u: self.u.with_cutoff(cutoff),
            ut: self.ut.with_cutoff(cutoff),
        }
    }

    pub fn scaled(&self, lambda: f64) -> PhaseState {
        PhaseState {
            u: self.u.scaled(lambda),
            ut: self.ut.scaled(lambda),
        }
    }

    pub fn add(&self, other: &PhaseState) -> Result<PhaseState> {
        Ok(PhaseState {
            u: self.u.add(&other.u)?,
            ut: self.ut.add(&other.ut)?,
        })
    }

    pub fn sub(&self, other: &PhaseState) -> Result<PhaseState> {
        Ok(PhaseState {
            u: self.u.sub(&other.u)?,
            ut: self.ut.sub(&other.ut)?,
        })
    }

    pub fn project_low(&self, m: f64) -> PhaseState {
        PhaseState {
            u: project_low(&self.u, m),
            ut: project_low(&self.ut, m),
        }
    }

    pub fn project_high(&self, m: f64) -> PhaseState {
        PhaseState {
            u: project_high(&self.u, m),
            ut: project_high(&self.ut, m),
        }
    }

    /// `||(u, ut)||_{H^sigma x H^(sigma-1)}`.
    pub fn norm(&self, sigma: f64) -> f64 {
        (sobolev_norm_sq(&self.u, sigma) + sobolev_norm_sq(&self.ut, sigma - 1.0)).sqrt()
    }

    /// Linear energy `||grad u||^2 + ||ut||^2`.
    pub fn linear_energy(&self) -> f64 {
        self.u.gradient_l2_sq() + self.ut.l2_sq()
    }

    pub fn max_coeff_diff(&self, other: &PhaseState) -> Result<f64> {
        Ok(self
            .u
            .max_coeff_diff(&other.u)?
            .max(self.ut.max_coeff_diff(&other.ut)?))
    }
}
