use super::*;
use crate::galerkin::{evolve, SolverConfig};
use crate::randomization::{make_base_pair, DistributionSpec};
use crate::spectral::{FilterSpec, FourierField};
use proptest::prelude::*;

fn ensemble(dist: DistributionSpec, cutoff: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec::new(make_base_pair(0.5, 3, 0.01, cutoff).unwrap(), dist, seed)
}

#[test]
fn exponent_examples() {
    let b = validate_exponents(0.5, 0.1).unwrap();
    assert!((b.epsilon1 - 1.0).abs() < 1e-12);
    assert!((b.delta_range().1 - 5.0 / 6.0).abs() < 1e-12);
    assert!((b.delta - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!((b.delta_tilde, b.delta_check), (0.5, 0.1));
    let b = validate_exponents(0.9, 0.1).unwrap();
    assert!((b.epsilon1 - (0.2 / 0.7 - 1.0 / 9.0)).abs() < 1e-12);
    assert!((b.epsilon1 - 0.174603).abs() < 1e-6);
    assert!((b.delta_range().1 - 0.642857).abs() < 1e-6);
    match validate_exponents(0.5, 0.25) {
        Err(Error::Constraint(msg)) => assert!(msg.contains("epsilon < s/2"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(validate_exponents(0.5, 0.3).is_err());
    assert!(validate_exponents(1.0, 0.1).is_err());
    assert!(validate_exponents(0.5, 0.0).is_err());
}

#[test]
fn overrides_are_rechecked() {
    let b = validate_exponents(0.5, 0.1).unwrap();
    assert!(b.with_overrides(Some(0.7), Some(0.6), Some(0.2)).is_ok());
    assert!(b.with_overrides(Some(0.9), None, None).is_err());
    assert!(b.with_overrides(Some(0.5), None, None).is_err());
    assert!(b.with_overrides(None, Some(0.3), None).is_err());
    assert!(b.with_overrides(None, Some(1.0), None).is_err());
    assert!(b.with_overrides(None, None, Some(0.0)).is_err());
    assert!(b.with_epsilon0(0.0).is_err());
    assert_eq!(b.with_epsilon0(0.05).unwrap().epsilon0, 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn admissible_pairs_validate(s in 0.01f64..0.99, frac in 0.001f64..0.999) {
        let eps = frac * s / 2.0;
        let b = validate_exponents(s, eps).unwrap();
        let (lo, hi) = b.delta_range();
        prop_assert!(b.delta > lo && b.delta < hi);
        prop_assert!(b.epsilon1 > 0.0);
    }
}

fn short_norms() -> SetNormConfig {
    SetNormConfig { t_max: 4.0, dt_quad: 0.1 }
}

#[test]
fn set_quantities_trivial_cases() {
    let b = validate_exponents(0.5, 0.1).unwrap();
    let rec = set_quantities(&PhaseState::zeros(3, 2), 2.0, &b, &short_norms()).unwrap();
    for kind in SetKind::ALL {
        assert_eq!(rec.get(kind).unwrap().value, 0.0);
    }
    assert_eq!(rec.in_e_m(), Some(true));
    let st = ensemble(DistributionSpec::gaussian(), 2, 1).sample(0);
    let rec = set_quantities(&st, 4.0, &b, &short_norms()).unwrap();
    for kind in [SetKind::H, SetKind::K, SetKind::R] {
        let q = rec.get(kind).unwrap();
        assert_eq!((q.value, q.tail), (0.0, 0.0));
    }
    let partial = set_quantities_for(&st, 4.0, &b, &short_norms(), &[SetKind::F]).unwrap();
    assert_eq!(partial.in_e_m(), None);
    assert_eq!(partial.in_set(SetKind::G), None);
}

#[test]
fn single_mode_matches_propagator() {
    let b = validate_exponents(0.5, 0.1).unwrap().with_overrides(Some(0.6), None, None).unwrap();
    let mut u = FourierField::zeros(3, 2);
    u.set_coeff(&[2, 0, 0], 1.0, 0.0).unwrap();
    let st = PhaseState::new(u, FourierField::zeros(3, 2)).unwrap();
    let cfg = short_norms();
    let rec = set_quantities(&st, 1.0, &b, &cfg).unwrap();
    assert_eq!(rec.get(SetKind::F).unwrap().value, 0.0);
    assert_eq!(rec.get(SetKind::G).unwrap().value, 0.0);
    let spec = MixedNormSpec::new(0.6, 2.0, f64::INFINITY).unwrap().with_horizon(4.0, 0.1).unwrap();
    let (v, tail) = weighted_mixed_norm(&st, 1.0, &spec).unwrap();
    let h = rec.get(SetKind::H).unwrap();
    assert_eq!((h.value, h.tail), (v, tail));
    assert_eq!(h.threshold, 1.0);
}

#[test]
fn clopper_pearson_reference_values() {
    let (lo, hi) = clopper_pearson(0, 10, 0.95);
    assert_eq!(lo, 0.0);
    assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-12);
    let (lo, hi) = clopper_pearson(10, 10, 0.95);
    assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-12);
    assert_eq!(hi, 1.0);
    let (lo, hi) = clopper_pearson(5, 10, 0.95);
    assert!((lo - 0.187086).abs() < 1e-6 && (hi - 0.812914).abs() < 1e-6);
    let (lo, hi) = clopper_pearson(3, 10_000, 0.95);
    assert!((lo - 6.187e-5).abs() < 1e-8 && (hi - 8.765e-4).abs() < 1e-7);
}

#[test]
fn tail_curve_properties() {
    let spec = ensemble(DistributionSpec::rademacher(), 4, 3);
    let b = validate_exponents(0.5, 0.1).unwrap();
    let ms = [1.0, 2.0, 4.0];
    assert!(tail_curve(&spec, &b, &ms, 99, &[SetKind::F], &short_norms()).is_err());
    let curve = tail_curve(&spec, &b, &ms, 100, &[SetKind::F, SetKind::G], &short_norms()).unwrap();
    assert!(curve.curve(TailEvent::Intersection).is_none());
    for p in curve.curve(TailEvent::Set(SetKind::F)).unwrap() {
        assert!(p.p_hat == 0.0 || p.p_hat == 1.0);
    }
    for (_, points) in &curve.curves {
        for p in points {
            assert!((0.0..=1.0).contains(&p.p_hat));
            assert!(p.ci.0 <= p.p_hat && p.p_hat <= p.ci.1);
        }
    }
    // Looser thresholds never raise a complement probability.
    let loose = validate_exponents(0.5, 0.2).unwrap();
    let gauss = ensemble(DistributionSpec::gaussian(), 4, 3);
    let tight = tail_curve(&gauss, &b, &ms, 100, &[SetKind::F, SetKind::G], &short_norms()).unwrap();
    let wide = tail_curve(&gauss, &loose, &ms, 100, &[SetKind::F, SetKind::G], &short_norms()).unwrap();
    for kind in [SetKind::F, SetKind::G] {
        let (a, c) = (tight.curve(TailEvent::Set(kind)).unwrap(), wide.curve(TailEvent::Set(kind)).unwrap());
        for (p, q) in a.iter().zip(c) {
            assert!(q.failures <= p.failures);
        }
    }
    let csv = tight.to_csv();
    assert_eq!(csv.lines().count(), 1 + 2 * ms.len());
}

#[test]
fn tail_curve_intersections() {
    let spec = ensemble(DistributionSpec::gaussian(), 2, 5).clone();
    let b = validate_exponents(0.5, 0.1).unwrap();
    let cfg = SetNormConfig { t_max: 2.0, dt_quad: 0.25 };
    let ms = [1.0, 2.0, 3.0, 4.0];
    let curve = tail_curve(&spec, &b, &ms, 100, &SetKind::ALL, &cfg).unwrap();
    let e = curve.curve(TailEvent::Intersection).unwrap();
    for kind in SetKind::ALL {
        for (p, q) in curve.curve(TailEvent::Set(kind)).unwrap().iter().zip(e) {
            assert!(p.failures <= q.failures);
        }
    }
    let upper = curve.curve(TailEvent::DyadicIntersection).unwrap();
    assert_eq!(upper.len(), 4);
    // E^3 = E_4, E^4 = E_4, E^1 has the most failures.
    assert_eq!(upper[2].failures, e[3].failures);
    assert_eq!(upper[3].failures, e[3].failures);
    assert!(upper.windows(2).all(|w| w[1].failures <= w[0].failures));
}

#[test]
fn nonincreasing_helper() {
    let pts = |fs: &[usize]| -> Vec<TailPoint> {
        fs.iter().enumerate().map(|(i, &f)| TailPoint::new(i as f64 + 1.0, f, 100, 0.1)).collect()
    };
    assert!(nonincreasing_within_ci(&pts(&[50, 40, 41, 0])));
    assert!(!nonincreasing_within_ci(&pts(&[0, 60])));
}

fn run_with_stencil(amp: f64, seed: u64, t_end: f64) -> (PhaseState, crate::galerkin::TrajectoryRecord) {
    let base = ensemble(DistributionSpec::gaussian(), 4, seed).sample(0).scaled(amp);
    let cfg = SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, t_end).with_stride(10).with_stencil();
    let rec = evolve(&base, &cfg).unwrap();
    (base, rec)
}

#[test]
fn gronwall_zero_and_generic() {
    let cfg = SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, 0.5).with_stride(10).with_stencil();
    let zero = PhaseState::zeros(3, 4);
    let rep = gronwall_check(&evolve(&zero, &cfg).unwrap(), &zero, 1.0).unwrap();
    assert!(rep.pass());
    assert_eq!((rep.min_margin_i(), rep.min_margin_ii(), rep.min_margin_iii()), (0.0, 0.0, 0.0));
    for level in [1.0, 2.0, 3.0] {
        let (base, rec) = run_with_stencil(1.0, 2, 2.0);
        let rep = gronwall_check(&rec, &base, level).unwrap();
        assert!(rep.pass(), "level {level}: {:?}", (rep.min_margin_i(), rep.min_margin_ii(), rep.min_margin_iii()));
        assert!(rep.derivative_consistency() < 1e-2, "{}", rep.derivative_consistency());
        for r in &rep.rows {
            assert!(r.derivative_exact.abs() <= r.cauchy_schwarz * (1.0 + 1e-12));
        }
        assert_eq!(rep.to_csv().lines().count(), rep.rows.len() + 1);
    }
    let (base, rec) = run_with_stencil(1.0, 2, 0.2);
    let mut lean = rec.clone();
    lean.stencil = None;
    assert!(matches!(gronwall_check(&lean, &base, 1.0), Err(Error::MissingData(_))));
}

#[test]
fn growth_fit_synthetic() {
    let times: Vec<f64> = (0..40).map(|k| k as f64 * 2.5).collect();
    let alpha = 0.37;
    let vals: Vec<f64> = times.iter().map(|t: &f64| t.powf(alpha)).collect();
    let fit = fit_tail_slope(&times, &vals, 0.0).unwrap();
    assert!((fit.slope - alpha).abs() < 1e-6);
    let fit = fit_tail_slope(&times, &vec![3.0; 40], 0.0).unwrap();
    assert!(fit.slope.abs() < 1e-12);
    assert!(fit_tail_slope(&times[..9], &vals[..9], 0.0).is_err());
    // Running maximum: a decaying record has slope zero.
    let decay: Vec<f64> = times.iter().map(|t| 1.0 / (1.0 + t)).collect();
    assert!(fit_tail_slope(&times, &decay, 1.0).unwrap().slope.abs() < 1e-12);
}

#[test]
fn growth_fit_on_records() {
    let base = ensemble(DistributionSpec::gaussian(), 4, 1).sample(0);
    let cfg = SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, 2.0).with_samples(20).decompose(0.0, 0.1);
    let rec = evolve(&base, &cfg).unwrap();
    let b = validate_exponents(0.5, 0.1).unwrap();
    let rep = growth_fit(&[rec.clone()], &b, 0.0).unwrap();
    assert_eq!(rep.h1_bound, 2.0);
    assert!(rep.h1_margin().is_finite());
    let plain = evolve(&base, &SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, 2.0).with_samples(20)).unwrap();
    assert!(growth_fit(&[plain], &b, 0.0).is_err());
}

#[test]
fn interpolation_examples() {
    let mut f = FourierField::zeros(3, 3);
    f.set_coeff(&[1, 2, 0], 0.7, -0.2).unwrap();
    let (lhs, rhs) = interpolation_sides(&f, 1.0, 0.0, 0.3);
    assert!((lhs - rhs).abs() < 1e-12 * rhs);
    f.set_coeff(&[0, 0, 3], 0.4, 0.0).unwrap();
    let (lhs, rhs) = interpolation_sides(&f, 1.0, 0.0, 0.5);
    assert!(lhs < rhs * (1.0 - 1e-6));
    let st = PhaseState::new(f.clone(), f.scaled(2.0)).unwrap();
    let rep = holder_interp_check(&[1.0, 1.0], &[st.clone(), st], 1.0, 0.0, 0.5, 1e-12).unwrap();
    assert_eq!(rep.chain_min_margin, 0.0);
    assert_eq!(rep.holder_quotient, 0.0);
}

#[test]
fn holder_chain_on_trajectory() {
    let base = ensemble(DistributionSpec::gaussian(), 4, 7).sample(0);
    let cfg = SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, 1.0).with_stride(5).full();
    let rec = evolve(&base, &cfg).unwrap();
    let ws = crate::galerkin::nonlinear_states(&rec, &base, 0.0).unwrap();
    let eps = 0.2;
    let rep = holder_interp_check(&rec.times, &ws, 1.0, 0.0, 1.0 - eps / 2.0, 1e-12).unwrap();
    assert!(rep.pass(), "{rep:?}");
    assert_eq!(rep.pairs, 21 * 20 / 2);
    assert!(rep.holder_quotient > 0.0);
}

fn conv_cfg(n_list: Vec<f64>) -> ConvergenceConfig {
    ConvergenceConfig {
        n_list,
        dt: 0.01,
        t_end: 1.0,
        samples: 11,
        epsilon: 0.1,
        oversample: 2,
        residual_time: 1.0,
        sample_index: 0,
    }
}

#[test]
fn convergence_trivial_cases() {
    let spec = ensemble(DistributionSpec::gaussian(), 4, 42);
    assert!(convergence_study(&spec, &conv_cfg(vec![2.0, 3.0])).is_err());
    assert!(convergence_study(&spec, &conv_cfg(vec![])).is_err());
    let same = convergence_study(&spec, &conv_cfg(vec![4.0, 4.0])).unwrap();
    let r = &same.rows[0];
    assert_eq!((r.w_diff, r.wt_diff, r.l3_diff), (0.0, 0.0, 0.0));
    assert!(same.filtered_agreement < 1e-10);
    // Below N / sqrt 2 the filters compose exactly.
    assert!(same.filter_composition[0].1 < 1e-15);
    let tiny = EnsembleSpec { base: spec.base.scaled(1e-6), ..spec.clone() };
    let lin = convergence_study(&tiny, &conv_cfg(vec![2.0, 4.0])).unwrap();
    let r = &lin.rows[0];
    assert!(r.w_diff < 1e-12 && r.wt_diff < 1e-12, "{r:?}");
    assert_eq!(lin.to_csv().lines().count(), 2);
}
