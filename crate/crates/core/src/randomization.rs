//! Randomized initial data: a deterministic base pair in `H^s x H^{s-1}`
//! whose Fourier coefficients are multiplied by independent mean-zero,
//! unit-variance sub-Gaussian draws.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FourierField, PhaseState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    /// Standard normal.
    Gaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Uniform on `(-sqrt 3, sqrt 3)`.
    Uniform,
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(DistributionKind::Gaussian),
            "rademacher" => Ok(DistributionKind::Rademacher),
            "uniform" => Ok(DistributionKind::Uniform),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution {other:?} (expected gaussian, rademacher or uniform)"
            ))),
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::Rademacher => "rademacher",
            DistributionKind::Uniform => "uniform",
        })
    }
}

const UNIFORM_HALF_WIDTH: f64 = 1.732_050_807_568_877_2;

/// Coefficient law together with the constant `c` of its moment bound
/// `E exp(gamma X) <= exp(c gamma^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistributionKind,
    pub subgaussian_c: f64,
}

impl DistributionSpec {
    pub fn gaussian() -> Self {
        DistributionSpec { kind: DistributionKind::Gaussian, subgaussian_c: 0.5 }
    }

    pub fn rademacher() -> Self {
        DistributionSpec { kind: DistributionKind::Rademacher, subgaussian_c: 0.5 }
    }

    /// Bounded-support bound `exp(a^2 gamma^2 / 2)` with `a = sqrt 3`.
    pub fn uniform() -> Self {
        DistributionSpec { kind: DistributionKind::Uniform, subgaussian_c: 1.5 }
    }

    pub fn of_kind(kind: DistributionKind) -> Self {
        match kind {
            DistributionKind::Gaussian => Self::gaussian(),
            DistributionKind::Rademacher => Self::rademacher(),
            DistributionKind::Uniform => Self::uniform(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistributionKind::Gaussian => rng.sample(StandardNormal),
            DistributionKind::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionKind::Uniform => rng.gen_range(-UNIFORM_HALF_WIDTH..UNIFORM_HALF_WIDTH),
        }
    }

    /// Closed-form `log E exp(gamma X)`.
    pub fn log_mgf(&self, gamma: f64) -> f64 {
        let g = gamma.abs();
        match self.kind {
            DistributionKind::Gaussian => 0.5 * gamma * gamma,
            DistributionKind::Rademacher => g + (-2.0 * g).exp().ln_1p() - std::f64::consts::LN_2,
            DistributionKind::Uniform => log_sinhc(UNIFORM_HALF_WIDTH * g),
        }
    }
}

/// `log(sinh(x) / x)` for `x >= 0`.
fn log_sinhc(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0
    } else if x < 20.0 {
        (x.sinh() / x).ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2 - x.ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgaussianRow {
    pub gamma: f64,
    pub log_mgf: f64,
    pub log_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubgaussianReport {
    pub dist: DistributionKind,
    pub c: f64,
    pub rows: Vec<SubgaussianRow>,
}

impl SubgaussianReport {
    /// Smallest `c gamma^2 - log mgf` over the grid.
    pub fn min_log_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.log_bound - r.log_mgf)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks `log E exp(gamma X) <= c gamma^2` on every grid point.
pub fn subgaussian_check(dist: &DistributionSpec, gamma_grid: &[f64]) -> Result<SubgaussianReport> {
    let mut rows = Vec::with_capacity(gamma_grid.len());
    for &gamma in gamma_grid {
        let log_mgf = dist.log_mgf(gamma);
        let log_bound = dist.subgaussian_c * gamma * gamma;
        if log_mgf > log_bound * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::SubgaussianViolation { gamma, log_mgf, bound: log_bound });
        }
        rows.push(SubgaussianRow { gamma, log_mgf, log_bound });
    }
    Ok(SubgaussianReport { dist: dist.kind, c: dist.subgaussian_c, rows })
}

/// Base pair with power-law coefficients:
/// `u0 = 1 + sum <n>^{-(s + d/2 + eta)} cos(n.x)` and
/// `u1 = 1 + sum <n>^{-(s - 1 + d/2 + eta)} cos(n.x)` over `|n|_inf <= cutoff`.
/// Without the cutoff the pair lies in `H^sigma x H^{sigma-1}` exactly for
/// `sigma < s + eta`.
pub fn make_base_pair(s: f64, d: usize, eta: f64, cutoff: usize) -> Result<PhaseState> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("regularity s must lie in (0,1), got {s}")));
    }
    if d < 3 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 3, got {d}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("decay margin eta must be positive, got {eta}")));
    }
    let half_d = d as f64 / 2.0;
    let e0 = s + half_d + eta;
    let e1 = s - 1.0 + half_d + eta;
    let profile = |exponent: f64| {
        FourierField::constant(d, cutoff, 1.0)
            .map_modes(|_| 1.0)
            .with_cos(|n2| (1.0 + n2 as f64).powf(-exponent / 2.0))
    };
    PhaseState::new(profile(e0), profile(e1))
}

impl FourierField {
    fn with_cos(mut self, coeff: impl Fn(u32) -> f64) -> FourierField {
        let lat = self.lattice().clone();
        for (v, &n2) in self.cos_coeffs_mut().iter_mut().zip(lat.norms2()) {
            *v = coeff(n2);
        }
        self
    }
}

/// A member of the randomized-data measure class: base pair, coefficient
/// law and master seed.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub base: PhaseState,
    pub dist: DistributionSpec,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(base: PhaseState, dist: DistributionSpec, master_seed: u64) -> Self {
        EnsembleSpec { base, dist, master_seed }
    }

    pub fn sample(&self, k: u64) -> PhaseState {
        sample_pair(self, k)
    }
}

/// Per-sample generator: ChaCha keyed by the master seed, one stream per
/// sample index. Coefficient draws are consumed in a fixed order (mean, then
/// cosine and sine coefficients in lexicographic canonical order; `u0` before
/// `u1`), so sample `k` depends on `(master_seed, k)` only.
fn sample_rng(master_seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(k);
    rng
}

fn randomize(field: &FourierField, dist: &DistributionSpec, rng: &mut ChaCha8Rng) -> FourierField {
    let mut out = field.clone();
    out.set_mean(field.mean() * dist.draw(rng));
    for v in out.cos_coeffs_mut() {
        *v *= dist.draw(rng);
    }
    for v in out.sin_coeffs_mut() {
        *v *= dist.draw(rng);
    }
    out
}

/// Sample `k` of the ensemble: every coefficient of the base pair times an
/// independent draw.
pub fn sample_pair(spec: &EnsembleSpec, k: u64) -> PhaseState {
    let mut rng = sample_rng(spec.master_seed, k);
    let u = randomize(&spec.base.u, &spec.dist, &mut rng);
    let ut = randomize(&spec.base.ut, &spec.dist, &mut rng);
    PhaseState { u, ut }
}

/// Config-file form of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub s: f64,
    pub d: usize,
    pub eta: f64,
    #[serde(rename = "L")]
    pub cutoff: usize,
    pub dist: DistributionKind,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            s: 0.5,
            d: 3,
            eta: 0.01,
            cutoff: 16,
            dist: DistributionKind::Gaussian,
            seed: 42,
        }
    }
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<EnsembleSpec> {
        let base = make_base_pair(self.s, self.d, self.eta, self.cutoff)?;
        Ok(EnsembleSpec::new(base, DistributionSpec::of_kind(self.dist), self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{project_high, sobolev_norm};

    #[test]
    fn base_pair_coefficients() {
        let st = make_base_pair(0.5, 3, 0.01, 4).unwrap();
        assert_eq!(st.u.mean(), 1.0);
        assert_eq!(st.ut.mean(), 1.0);
        let (b1, c1) = st.ut.coeff(&[1, 0, 0]).unwrap();
        assert!((b1 - 2f64.powf(-0.505)).abs() < 1e-15);
        assert_eq!(c1, 0.0);
        let (b0, _) = st.u.coeff(&[0, 1, 0]).unwrap();
        assert!((b0 - 2f64.powf(-(0.5 + 1.5 + 0.01) / 2.0)).abs() < 1e-15);
        assert!(make_base_pair(1.0, 3, 0.01, 4).is_err());
        assert!(make_base_pair(0.5, 2, 0.01, 4).is_err());
        assert!(make_base_pair(0.5, 3, 0.0, 4).is_err());
    }

    #[test]
    fn tail_norm_strictly_decreasing() {
        let st = make_base_pair(0.5, 3, 0.01, 8).unwrap();
        let mut last = f64::INFINITY;
        for m in 0..12 {
            let v = sobolev_norm(&project_high(&st.u, m as f64), 0.5);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn norm_above_regularity_grows_with_cutoff() {
        // Partial sums of sum <n>^{2(s+2eta)} <n>^{-2(s+d/2+eta)} diverge like log L.
        let (s, eta) = (0.5, 0.01);
        let norms: Vec<f64> = [8usize, 16, 32, 64]
            .iter()
            .map(|&l| {
                let st = make_base_pair(s, 3, eta, l).unwrap();
                sobolev_norm(&st.u, s + 2.0 * eta)
            })
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] > w[0] * 1.02, "{norms:?}");
        }
        // Increments stay bounded below (no convergence): compare with H^{s - eta}.
        let conv: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&l| sobolev_norm(&make_base_pair(s, 3, eta, l).unwrap().u, s - 2.0 * eta))
            .collect();
        assert!(norms[3] - norms[2] > conv[1] - conv[0]);
    }

    #[test]
    fn zero_base_gives_zero_sample() {
        let spec = EnsembleSpec::new(PhaseState::zeros(3, 2), DistributionSpec::gaussian(), 7);
        let s = spec.sample(3);
        assert!(s.u.is_zero() && s.ut.is_zero());
    }

    #[test]
    fn rademacher_preserves_every_sobolev_norm() {
        let base = make_base_pair(0.5, 3, 0.01, 3).unwrap();
        let spec = EnsembleSpec::new(base.clone(), DistributionSpec::rademacher(), 11);
        for k in 0..20 {
            let s = spec.sample(k);
            for sigma in [-1.0, 0.0, 0.5, 1.0, 2.0] {
                assert_eq!(sobolev_norm(&s.u, sigma), sobolev_norm(&base.u, sigma));
                assert_eq!(sobolev_norm(&s.ut, sigma), sobolev_norm(&base.ut, sigma));
            }
        }
    }

    #[test]
    fn samples_are_pure_functions_of_seed_and_index() {
        let base = make_base_pair(0.5, 3, 0.01, 3).unwrap();
        let spec = EnsembleSpec::new(base, DistributionSpec::gaussian(), 99);
        let a = spec.sample(5);
        let _ = spec.sample(4);
        let b = spec.sample(5);
        assert_eq!(a, b);
        assert_ne!(a, spec.sample(6));
        let other = EnsembleSpec { master_seed: 100, ..spec.clone() };
        assert_ne!(a, other.sample(5));
    }

    #[test]
    fn draws_have_unit_variance_and_no_correlation() {
        for dist in [DistributionSpec::gaussian(), DistributionSpec::rademacher(), DistributionSpec::uniform()] {
            let n = 20_000;
            let mut rng = sample_rng(1, 2);
            let xs: Vec<(f64, f64)> = (0..n).map(|_| (dist.draw(&mut rng), dist.draw(&mut rng))).collect();
            let mean = xs.iter().map(|p| p.0).sum::<f64>() / n as f64;
            let var = xs.iter().map(|p| p.0 * p.0).sum::<f64>() / n as f64;
            let corr = xs.iter().map(|p| p.0 * p.1).sum::<f64>() / n as f64;
            let tol = 4.0 / (n as f64).sqrt();
            assert!(mean.abs() < tol, "{dist:?} mean {mean}");
            assert!((var - 1.0).abs() < 4.0 * tol, "{dist:?} var {var}");
            assert!(corr.abs() < tol, "{dist:?} corr {corr}");
        }
    }

    #[test]
    fn subgaussian_examples() {
        let grid: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.25).collect();
        for dist in [DistributionSpec::gaussian(), DistributionSpec::rademacher(), DistributionSpec::uniform()] {
            let report = subgaussian_check(&dist, &grid).unwrap();
            assert!(report.min_log_margin() >= -1e-12);
        }
        let g = DistributionSpec::gaussian();
        assert_eq!(g.log_mgf(1.7), 0.5 * 1.7 * 1.7);
        let r = DistributionSpec::rademacher();
        assert!((r.log_mgf(1.0).exp() - 1f64.cosh()).abs() < 1e-14);
        assert!((1f64.cosh() - 1.5431).abs() < 1e-4 && (0.5f64.exp() - 1.6487).abs() < 1e-4);
        for dist in [g, r, DistributionSpec::uniform()] {
            let row = &subgaussian_check(&dist, &[0.0]).unwrap().rows[0];
            assert_eq!((row.log_mgf, row.log_bound), (0.0, 0.0));
        }
        let u = DistributionSpec::uniform();
        let x = 0.3 * UNIFORM_HALF_WIDTH;
        assert!((u.log_mgf(0.3).exp() - x.sinh() / x).abs() < 1e-14);
    }

    #[test]
    fn subgaussian_violation_names_gamma() {
        let bad = DistributionSpec { kind: DistributionKind::Gaussian, subgaussian_c: 0.4 };
        match subgaussian_check(&bad, &[0.0, 0.5, 1.0]) {
            Err(Error::SubgaussianViolation { gamma, .. }) => assert_eq!(gamma, 0.5),
            other => panic!("expected violation, got {other:?}"),
        }
    }
}
