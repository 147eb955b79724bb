use super::*;
use crate::randomization::{make_base_pair, DistributionSpec, EnsembleSpec};
use std::f64::consts::PI;

fn random_state(cutoff: usize, amp: f64, seed: u64) -> PhaseState {
    let base = make_base_pair(0.5, 3, 0.01, cutoff).unwrap();
    let st = EnsembleSpec::new(base, DistributionSpec::gaussian(), seed).sample(0);
    st.scaled(amp)
}

/// Adaptive Dormand-Prince 5(4) for `a'' = -a^3`.
fn dopri_cubic(a0: f64, v0: f64, t_end: f64, tol: f64) -> (f64, f64) {
    let f = |y: [f64; 2]| [y[1], -y[0] * y[0] * y[0]];
    let a: [&[f64]; 7] = [
        &[],
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    let b5 = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    let b4 = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let (mut t, mut y, mut h) = (0.0f64, [a0, v0], 1e-3f64);
    while t < t_end {
        h = h.min(t_end - t);
        let mut k = [[0.0; 2]; 7];
        for i in 0..7 {
            let mut yi = y;
            for (j, &aij) in a[i].iter().enumerate() {
                yi[0] += h * aij * k[j][0];
                yi[1] += h * aij * k[j][1];
            }
            k[i] = f(yi);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for comp in 0..2 {
            let mut e = 0.0;
            for i in 0..7 {
                y5[comp] += h * b5[i] * k[i][comp];
                e += h * (b5[i] - b4[i]) * k[i][comp];
            }
            err = err.max(e.abs());
        }
        if err <= tol {
            t += h;
            y = y5;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 5.0);
    }
    (y[0], y[1])
}

#[test]
fn oracle_period() {
    // Half period of a'' = -a^3 from (1, 0): a reaches -1 at T/2.
    let (a, v) = dopri_cubic(1.0, 0.0, 7.4163 / 2.0, 1e-14);
    assert!((a + 1.0).abs() < 1e-7 && v.abs() < 1e-3, "{a} {v}");
    let (a, _) = dopri_cubic(1.0, 0.0, 7.4163, 1e-14);
    assert!((a - 1.0).abs() < 1e-7);
    // Scaling: period 7.4163 / a0.
    let (a, _) = dopri_cubic(2.0, 0.0, 7.4163 / 2.0, 1e-14);
    assert!((a - 2.0).abs() < 1e-6);
}

fn constant_state(a: f64, cutoff: usize) -> PhaseState {
    PhaseState::new(FourierField::constant(3, cutoff, a), FourierField::zeros(3, cutoff)).unwrap()
}

#[test]
fn zero_data_stays_zero() {
    let cfg = SolverConfig::new(FilterSpec::new(4.0).unwrap(), 0.01, 1.0).with_stride(10).full();
    let rec = evolve(&PhaseState::zeros(3, 4), &cfg).unwrap();
    assert_eq!(rec.len(), 11);
    for st in rec.states().unwrap() {
        assert!(st.u.is_zero() && st.ut.is_zero());
    }
    assert!(rec.energies.iter().all(|&e| e == 0.0));
}

#[test]
fn constant_data_matches_ode_oracle() {
    let (reference, _) = dopri_cubic(1.0, 0.0, 1.0, 1e-15);
    let cfg = SolverConfig::new(FilterSpec::new(2.0).unwrap(), 1e-4, 1.0).full();
    let rec = evolve(&constant_state(1.0, 1), &cfg).unwrap();
    let a = rec.states().unwrap()[1].u.mean();
    assert!((a - reference).abs() < 1e-8, "{a} vs {reference}");
    // Over one period the solution returns to its start.
    let cfg = SolverConfig::new(FilterSpec::new(2.0).unwrap(), 7.4163 / 4000.0, 7.4163).full();
    let rec = evolve(&constant_state(1.0, 1), &cfg).unwrap();
    assert!((rec.states().unwrap()[1].u.mean() - 1.0).abs() < 1e-4);
}

#[test]
fn second_order_in_dt() {
    let init = constant_state(1.0, 1);
    let at = |dt: f64| {
        let cfg = SolverConfig::new(FilterSpec::new(2.0).unwrap(), dt, 1.0).full();
        evolve(&init, &cfg).unwrap().states().unwrap()[1].clone()
    };
    let reference = at(1e-3 / 16.0);
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| at(dt).max_coeff_diff(&reference).unwrap())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 4.0 / 1.5 && ratio < 4.0 * 1.5, "{errs:?}");
    }
}

#[test]
fn second_order_in_dt_for_field_data() {
    let init = random_state(4, 0.5, 1);
    let filter = FilterSpec::new(4.0).unwrap();
    let at = |dt: f64| {
        let cfg = SolverConfig::new(filter, dt, 0.5).full();
        evolve(&init, &cfg).unwrap().states().unwrap()[1].clone()
    };
    let reference = at(0.02 / 16.0);
    let errs: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| at(dt).max_coeff_diff(&reference).unwrap())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 4.0 / 1.5 && ratio < 4.0 * 1.5, "{errs:?}");
    }
}

#[test]
fn unfiltered_modes_evolve_freely() {
    // Data in |n| >= N only: S_N u = 0, so the flow is the free flow.
    let filter = FilterSpec::new(3.0).unwrap();
    let mut init = random_state(4, 1.0, 9);
    for f in [&mut init.u, &mut init.ut] {
        f.set_mean(0.0);
        let lat = f.lattice().clone();
        let (c, s) = f.coeffs_mut();
        for p in 0..lat.len() {
            if lat.norm2(p) < 9 {
                c[p] = 0.0;
                s[p] = 0.0;
            }
        }
    }
    let cfg = SolverConfig::new(filter, 0.01, 2.0).with_samples(20).full();
    let rec = evolve(&init, &cfg).unwrap();
    assert_eq!(rec.len(), 20);
    for (st, &t) in rec.states().unwrap().iter().zip(&rec.times) {
        assert!(st.max_coeff_diff(&free_evolve(&init, t)).unwrap() < 1e-12);
    }
}

#[test]
fn high_modes_of_coupled_run_are_free() {
    let filter = FilterSpec::new(3.0).unwrap();
    let init = random_state(4, 1.0, 10);
    let cfg = SolverConfig::new(filter, 0.01, 1.0).with_samples(20).full();
    let rec = evolve(&init, &cfg).unwrap();
    for (st, &t) in rec.states().unwrap().iter().zip(&rec.times) {
        let free = free_evolve(&init, t);
        let diff = st.project_high(3.0).max_coeff_diff(&free.project_high(3.0)).unwrap();
        assert!(diff < 1e-12);
    }
}

#[test]
fn velocity_flip_returns_initial_data() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = random_state(4, 1.0, 3);
    let cfg = SolverConfig::new(filter, 0.01, 1.0).full();
    let rec = evolve(&init, &cfg).unwrap();
    let end = &rec.states().unwrap()[1];
    let flipped = PhaseState::new(end.u.clone(), end.ut.scaled(-1.0)).unwrap();
    let back = evolve(&flipped, &cfg).unwrap();
    let out = &back.states().unwrap()[1];
    let restored = PhaseState::new(out.u.clone(), out.ut.scaled(-1.0)).unwrap();
    assert!(restored.max_coeff_diff(&init).unwrap() < 1e-8);
}

#[test]
fn energy_examples() {
    let mut u = FourierField::zeros(3, 8);
    u.set_coeff(&[1, 0, 0], 1.0, 0.0).unwrap();
    let st = PhaseState::new(u, FourierField::zeros(3, 8)).unwrap();
    let e = energy(&st, &FilterSpec::new(8.0).unwrap(), 2).unwrap();
    let expected = 0.5 * (2.0 * PI).powi(3) / 2.0 + 0.25 * 3.0 * PI.powi(3);
    assert!((e - expected).abs() < 1e-10 * expected);
    assert!((expected - 85.2676).abs() < 1e-3);
    let e = energy(&constant_state(1.3, 2), &FilterSpec::new(1.0).unwrap(), 2).unwrap();
    assert!((e - 0.25 * 1.3f64.powi(4) * (2.0 * PI).powi(3)).abs() < 1e-10);
    assert_eq!(energy(&PhaseState::zeros(3, 2), &FilterSpec::new(3.0).unwrap(), 2).unwrap(), 0.0);
    assert!(energy(&st, &FilterSpec::new(8.0).unwrap(), 1).is_err());
}

#[test]
fn energy_conserved_on_short_run() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = random_state(4, 1.0, 4);
    let cfg = SolverConfig::new(filter, 0.005, 5.0).with_stride(50);
    let rec = evolve(&init, &cfg).unwrap();
    let e0 = rec.energies[0];
    assert!((e0 - energy(&init, &filter, 2).unwrap()).abs() < 1e-12 * e0);
    for e in &rec.energies {
        assert!(((e - e0) / e0).abs() < 1e-4, "{e} vs {e0}");
    }
}

#[test]
fn config_validation() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = PhaseState::zeros(3, 4);
    assert!(evolve(&init, &SolverConfig::new(filter, 0.0, 1.0)).is_err());
    assert!(evolve(&init, &SolverConfig::new(filter, 0.3, 1.0)).is_err());
    let mut cfg = SolverConfig::new(filter, 0.1, 1.0);
    cfg.sample_times = vec![0.0, 0.55];
    assert!(evolve(&init, &cfg).is_err());
    cfg.sample_times = vec![0.5, 0.2];
    assert!(evolve(&init, &cfg).is_err());
    cfg.sample_times = vec![0.0, 1.1];
    assert!(evolve(&init, &cfg).is_err());
    assert!(evolve(&PhaseState::zeros(3, 2), &SolverConfig::new(filter, 0.1, 1.0)).is_err());
}

#[test]
fn decomposition_identities() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = random_state(4, 1.0, 5);
    let cfg = SolverConfig::new(filter, 0.01, 0.5).with_stride(10).full().decompose(2.0, 0.1);
    let rec = evolve(&init, &cfg).unwrap();
    let ws = nonlinear_states(&rec, &init, 2.0).unwrap();
    assert_eq!(ws[0], init.project_low(2.0));
    let again = nonlinear_component(&rec, &init, 2.0, 0.1).unwrap();
    assert_eq!(again.h1_norms, rec.h1_norms);
    assert_eq!(again.h_1m_eps_norms, rec.h_1m_eps_norms);
    // Level above the box: Pi^M base = 0 and w = u.
    let ws = nonlinear_states(&rec, &init, 10.0).unwrap();
    for (w, st) in ws.iter().zip(rec.states().unwrap()) {
        assert_eq!(w, st);
    }
    let other = random_state(4, 1.0, 6);
    assert!(matches!(nonlinear_states(&rec, &other, 2.0), Err(Error::BaseMismatch)));
    let lean = evolve(&init, &SolverConfig::new(filter, 0.01, 0.5)).unwrap();
    assert!(matches!(nonlinear_states(&lean, &init, 2.0), Err(Error::MissingData(_))));
}

#[test]
fn stencil_neighbours_match_trajectory() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = random_state(4, 1.0, 7);
    let cfg = SolverConfig::new(filter, 0.01, 0.1).with_stride(1).with_stencil();
    let rec = evolve(&init, &cfg).unwrap();
    let states = rec.states().unwrap();
    let stencil = rec.stencil.as_ref().unwrap();
    for k in 1..states.len() - 1 {
        assert!(stencil[k][0].max_coeff_diff(&states[k - 1]).unwrap() < 1e-13);
        assert!(stencil[k][1].max_coeff_diff(&states[k + 1]).unwrap() < 1e-13);
    }
}

#[test]
fn spacetime_l4_of_constant_solution() {
    // Constant a(t): int_0^t int a^4 = (2pi)^3 int_0^t a^4.
    let cfg = SolverConfig::new(FilterSpec::new(2.0).unwrap(), 1e-3, 1.0).with_stride(100).full();
    let rec = evolve(&constant_state(1.0, 1), &cfg).unwrap();
    let vol = (2.0 * PI).powi(3);
    let states = rec.states().unwrap();
    for (i, st) in states.iter().enumerate() {
        assert!((rec.l4_norms[i] - vol.powf(0.25) * st.u.mean().abs()).abs() < 1e-12);
    }
    let mut integral = 0.0;
    let n = 10_000;
    for k in 0..n {
        let t = (k as f64 + 0.5) / n as f64;
        integral += dopri_cubic(1.0, 0.0, t, 1e-12).0.powi(4) / n as f64;
    }
    let expected = (vol * integral).powf(0.25);
    assert!((rec.l4_spacetime.last().unwrap() - expected).abs() < 1e-6);
}

#[test]
fn defect_vanishes_inside_identity_ball() {
    let mut u = FourierField::zeros(3, 4);
    u.set_coeff(&[1, 0, 0], 1.0, 0.0).unwrap();
    u.set_coeff(&[0, 0, 1], 0.0, 0.3).unwrap();
    let st = PhaseState::new(u, FourierField::zeros(3, 4)).unwrap();
    let r = untruncated_defect(&st, &FilterSpec::new(5.0).unwrap(), 2, 1.0).unwrap();
    assert!(r < 1e-12, "{r}");
    assert_eq!(untruncated_defect(&PhaseState::zeros(3, 4), &FilterSpec::new(5.0).unwrap(), 2, 1.0).unwrap(), 0.0);
    // Single mode cos(x1) with N = 2: S_N u = chi(1/4) cos(x1) = cos, S_N(cos^3)
    // keeps the frequency-1 part 3/4 cos only; the defect is cos(3 x1)/4.
    let mut u = FourierField::zeros(3, 1);
    u.set_coeff(&[1, 0, 0], 1.0, 0.0).unwrap();
    let st = PhaseState::new(u, FourierField::zeros(3, 1)).unwrap();
    let r = untruncated_defect(&st, &FilterSpec::new(2.0).unwrap(), 2, 1.0).unwrap();
    let expected = ((2.0 * PI).powi(3) / 2.0 * 10f64.powi(-1) * 0.0625).sqrt();
    assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    assert_eq!(default_tau(3), 1.0);
    assert_eq!(default_tau(8), 2.0);
}

#[test]
fn csv_layout() {
    let filter = FilterSpec::new(4.0).unwrap();
    let init = random_state(4, 1.0, 8);
    let cfg = SolverConfig::new(filter, 0.01, 0.1).with_stride(5).full().decompose(0.0, 0.1);
    let rec = evolve(&init, &cfg).unwrap();
    let res = residual_untruncated(&rec, 1.0).unwrap();
    let csv = rec.to_csv(Some(&res));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,energy,h1_w,h_1m_eps_w,l4_SNu,l4_st_SNu,residual");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7 && !l.contains(",,")));
    let lean = evolve(&init, &SolverConfig::new(filter, 0.01, 0.1)).unwrap();
    assert!(lean.to_csv(None).lines().nth(1).unwrap().contains(",,,"));
}
