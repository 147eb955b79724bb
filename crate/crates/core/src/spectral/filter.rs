//! Smooth spectral cutoff `S_N = chi(-N^{-2} Laplacian)`.

use super::field::FourierField;
use crate::error::{Error, Result};

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 for `t <= 0`, 0 for `t >= 1`, `h(1-t) / (h(t) + h(1-t))` between.
pub fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - t);
        a / (h(t) + a)
    }
}

/// Bump profile: 1 on `|r| <= 1/2`, 0 on `|r| >= 1`, monotone in between.
pub fn chi(r: f64) -> f64 {
    psi(2.0 * r.abs() - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    cutoff: f64,
}

impl FilterSpec {
    pub fn new(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "filter cutoff N must be positive, got {cutoff}"
            )));
        }
        Ok(FilterSpec { cutoff })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `chi(|n|^2 / N^2)`.
    pub fn multiplier(&self, norm2: u32) -> f64 {
        chi(norm2 as f64 / (self.cutoff * self.cutoff))
    }

    /// Whether the multiplier is nonzero, i.e. `|n| < N`.
    pub fn passes(&self, norm2: u32) -> bool {
        (norm2 as f64) < self.cutoff * self.cutoff
    }

    /// Largest `|n|_inf` with a nonzero multiplier.
    pub fn bandwidth(&self) -> usize {
        (self.cutoff.ceil() as usize).saturating_sub(1)
    }

    /// Radius below which the multiplier is exactly 1.
    pub fn identity_radius(&self) -> f64 {
        self.cutoff / std::f64::consts::SQRT_2
    }
}

pub fn smooth_filter(f: &FourierField, spec: &FilterSpec) -> FourierField {
    f.map_modes(|n2| spec.multiplier(n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_regions() {
        for r in [0.0, 0.1, 0.49, 0.5, -0.5] {
            assert_eq!(chi(r), 1.0);
        }
        for r in [1.0, 1.2, -1.0, 7.0] {
            assert_eq!(chi(r), 0.0);
        }
        // psi(1/2) = 1/2 by symmetry of h(t) and h(1-t).
        assert!((chi(0.75) - 0.5).abs() < 1e-15);
        let mut last = 1.0;
        for k in 0..=1000 {
            let v = chi(0.5 + 0.5 * k as f64 / 1000.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn multiplier_examples_at_n_10() {
        let spec = FilterSpec::new(10.0).unwrap();
        assert_eq!(spec.multiplier(1), 1.0);
        assert_eq!(spec.multiplier(100), 0.0);
        let m = spec.multiplier(75);
        assert!(m > 0.0 && m < 1.0);
        // chi(0.75) = psi(0.5) = h(0.5) / (2 h(0.5))
        let expected = (-2f64).exp() / (2.0 * (-2f64).exp());
        assert!((m - expected).abs() < 1e-15);
        assert_eq!(spec.bandwidth(), 9);
        assert!(FilterSpec::new(0.0).is_err());
    }

    #[test]
    fn bandwidth_for_fractional_cutoff() {
        assert_eq!(FilterSpec::new(10.5).unwrap().bandwidth(), 10);
        assert_eq!(FilterSpec::new(1.0).unwrap().bandwidth(), 0);
    }
}
