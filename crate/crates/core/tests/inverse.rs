use std::f64::consts::PI;
use std::sync::Arc;

use carleman_core::coefficients::{CoefficientFields, Field};
use carleman_core::inverse::{
    add_noise, certify_general, certify_separable, generate_admissible, observation_vector, observe, reconstruct_source,
    recover_coefficient, stability_quotient, ReconstructionOptions, SourceMap, SourceMode,
};
use carleman_core::solver::{sample_primal, solve_forward, solve_z_system, FieldForcing, Scheme, SeparableForcing, TimeGrid, Trajectory, ZeroForcing};
use carleman_core::synthetic::{random_coefficients, run_rng, SineModes};
use carleman_core::weights::{Psi, SubBox, Weight, WeightParams};
use carleman_core::{Error, GridSpec, MeshFunction};

fn weight(dim: usize, tau: f64, delta: f64) -> Weight {
    let psi = Psi::new(&vec![0.5; dim], 2.0).unwrap();
    Weight::new(WeightParams::for_psi(&psi, tau, delta, 1.0), psi).unwrap()
}

fn omega(dim: usize, half: f64) -> SubBox {
    SubBox::cube(dim, 0.5, half).unwrap()
}

fn bump_source(grid: &GridSpec, seed: u64) -> SeparableForcing {
    let mut rng = run_rng(seed, 0);
    let f = SineModes::random(&mut rng, grid.dim(), 3).sample(grid);
    SeparableForcing::new(f, Arc::new(|t| 1.0 + 0.5 * (2.0 * PI * t).sin()), Arc::new(|t| PI * (2.0 * PI * t).cos()))
}

fn run(coeffs: &CoefficientFields, g: &SeparableForcing, steps: usize) -> (Trajectory, Trajectory) {
    let grid = *coeffs.grid();
    let tg = TimeGrid::new(1.0, steps).unwrap();
    let y0 = MeshFunction::zeros(grid, grid.primal()).unwrap();
    let y = solve_forward(&y0, g, coeffs, &tg, Scheme::Trapezoidal).unwrap();
    let z = solve_z_system(&y, coeffs, g).unwrap().trajectory;
    (y, z)
}

#[test]
fn zero_run_observes_nothing() {
    let g = GridSpec::new(1, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let zero = SeparableForcing::new(vec![0.0; 15], Arc::new(|_| 1.0), Arc::new(|_| 0.0));
    let (y, z) = run(&c, &zero, 16);
    let obs = observe(&y, &z, &weight(1, 2.0, 0.4), &omega(1, 0.2)).unwrap();
    assert_eq!(obs.snapshot_h2, 0.0);
    assert!(obs.weighted_y.is_zero() && obs.weighted_dt.is_zero());
    let rep = stability_quotient(&zero, &y, &z, &weight(1, 2.0, 0.4), &omega(1, 0.2)).unwrap();
    assert_eq!(rep.lhs, 0.0);
    assert_eq!(rep.quotient, 0.0);
}

#[test]
fn weighted_norms_match_direct_summation() {
    let n = 15;
    let g = GridSpec::new(1, n).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let src = bump_source(&g, 3);
    let steps = 32;
    let (y, z) = run(&c, &src, steps);
    let w = weight(1, 2.0, 0.4);
    let obs = observe(&y, &z, &w, &omega(1, 0.2)).unwrap();
    let h = g.h();
    let phi = |x: f64| (2.0 * (2.0 - (x - 0.5) * (x - 0.5))).exp() - (2.0 * 2.2f64).exp();
    let (mut sy, mut sz) = (0.0, 0.0);
    for m in 0..=steps {
        let t = m as f64 / steps as f64;
        let s = 2.0 / ((t + 0.4) * (1.4 - t));
        let wt = if m == 0 || m == steps { 0.5 } else { 1.0 } / steps as f64 * h;
        for k in 1..=n {
            let x = k as f64 * h;
            if (x - 0.5).abs() <= 0.2 {
                let e = (2.0 * s * phi(x)).exp();
                sy += wt * e * y.frame_values(m)[k - 1].powi(2);
                sz += wt * e * z.frame_values(m)[k - 1].powi(2);
            }
        }
    }
    assert!((obs.weighted_y.value() - sy.sqrt()).abs() <= 1e-10 * sy.sqrt());
    assert!((obs.weighted_dt.value() - sz.sqrt()).abs() <= 1e-10 * sz.sqrt());
    assert_eq!(obs.frame, steps / 2);
    assert!(obs.in_proof_regime);
}

#[test]
fn observation_time_must_be_a_frame() {
    let g = GridSpec::new(1, 7).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let (y, z) = run(&c, &bump_source(&g, 1), 16);
    let psi = Psi::new(&[0.5], 2.0).unwrap();
    let mut p = WeightParams::for_psi(&psi, 2.0, 0.4, 1.0);
    p.vartheta = 0.51;
    let w = Weight::new(p, psi).unwrap();
    assert!(matches!(observe(&y, &z, &w, &omega(1, 0.2)), Err(Error::NotOnTimeGrid(_))));
    p.vartheta = 0.25;
    let obs = observe(&y, &z, &Weight::new(p, psi).unwrap(), &omega(1, 0.2)).unwrap();
    assert!(!obs.in_proof_regime);
}

#[test]
fn larger_region_gives_larger_local_norms_and_smaller_quotient() {
    let g = GridSpec::new(2, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let src = bump_source(&g, 5);
    let (y, z) = run(&c, &src, 16);
    let w = weight(2, 2.0, 0.4);
    let mut last: Option<(f64, f64, f64)> = None;
    for half in [0.1, 0.2, 0.3, 0.45] {
        let o = omega(2, half);
        let obs = observe(&y, &z, &w, &o).unwrap();
        let q = stability_quotient(&src, &y, &z, &w, &o).unwrap().quotient;
        if let Some((ly, lz, lq)) = last {
            assert!(obs.weighted_y.value() >= ly && obs.weighted_dt.value() >= lz);
            assert!(q <= lq);
        }
        last = Some((obs.weighted_y.value(), obs.weighted_dt.value(), q));
    }
}

#[test]
fn quotient_is_scale_invariant() {
    let g = GridSpec::new(1, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let src = bump_source(&g, 7);
    let (y, z) = run(&c, &src, 32);
    let w = weight(1, 2.0, 0.4);
    let base = stability_quotient(&src, &y, &z, &w, &omega(1, 0.2)).unwrap();
    for k in [1e-3, 7.5, 1e4] {
        let scaled = src.with_profile(src.profile().iter().map(|v| k * v).collect());
        let (ys, zs) = run(&c, &scaled, 32);
        let r = stability_quotient(&scaled, &ys, &zs, &w, &omega(1, 0.2)).unwrap();
        assert!((r.quotient - base.quotient).abs() <= 1e-9 * base.quotient);
    }
}

#[test]
fn error_term_vanishes_for_resting_start() {
    let g = GridSpec::new(1, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let src = bump_source(&g, 2);
    let resting = SeparableForcing::new(src.profile().to_vec(), Arc::new(|t| (PI * t).sin()), Arc::new(|t| PI * (PI * t).cos()));
    let (y, z) = run(&c, &resting, 32);
    let w = weight(1, 2.0, 0.4);
    let r = stability_quotient(&resting, &y, &z, &w, &omega(1, 0.2)).unwrap();
    assert!(r.rhs_error_term.is_zero());
    assert!(r.quotient.is_finite() && r.quotient > 0.0);
    let (y, z) = run(&c, &src, 32);
    let r = stability_quotient(&src, &y, &z, &w, &omega(1, 0.2)).unwrap();
    assert!(!r.rhs_error_term.is_zero());
    assert!(r.rhs_error_term.value() < 1e-3 * r.rhs_observed);
}

#[test]
fn inadmissible_weight_is_rejected() {
    let g = GridSpec::new(1, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let src = bump_source(&g, 2);
    let (y, z) = run(&c, &src, 16);
    let w = weight(1, 20.0, 0.1);
    assert!(matches!(stability_quotient(&src, &y, &z, &w, &omega(1, 0.2)), Err(Error::Inadmissible(_))));
}

#[test]
fn separable_certificates() {
    let g = GridSpec::new(1, 15).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let mut rng = run_rng(11, 0);
    let flat = generate_admissible(&mut rng, &g, &tg, 0.5, SourceMode::Stationary { modes: 3 }).unwrap();
    assert_eq!(flat.c_g, 0.0);
    assert_eq!(flat.alpha, Some(1.0));
    let sep = generate_admissible(&mut rng, &g, &tg, 0.5, SourceMode::Separable { modes: 3 }).unwrap();
    let mut oracle: f64 = 0.0;
    for k in 0..=100_000 {
        let t = k as f64 / 100_000.0;
        oracle = oracle.max((PI * (2.0 * PI * t).cos()).abs());
    }
    oracle /= 1.0 + 0.5 * PI.sin();
    assert!((sep.c_g - oracle).abs() <= 1e-9 * oracle);
    assert!((sep.alpha.unwrap() - 0.5).abs() < 1e-6);
    let crossing = SeparableForcing::new(vec![1.0; 15], Arc::new(|t| t - 0.3), Arc::new(|_| 1.0));
    match certify_separable(crossing, &tg, 0.5) {
        Err(Error::Certification { t, .. }) => assert!(t > 0.25 && t < 0.35),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn general_certificates() {
    let g = GridSpec::new(1, 15).unwrap();
    let tg = TimeGrid::new(1.0, 32).unwrap();
    let ok = Field::evolving(|t, x| (PI * x[0]).sin() * (2.0 + t), |_, x| (PI * x[0]).sin());
    let cert = certify_general(Arc::new(FieldForcing::new(ok)), &g, &tg, 0.5).unwrap();
    assert!((cert.c_g - 1.0 / 2.5).abs() < 1e-12);
    let bad = Field::evolving(|t, x| (x[0] - 0.5) + (t - 0.5), |_, _| 1.0);
    match certify_general(Arc::new(FieldForcing::new(bad)), &g, &tg, 0.5) {
        Err(Error::Certification { location, .. }) => assert!(location.contains("0.5")),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn observation_map_is_linear_and_matches_forward_solves() {
    let g = GridSpec::new(2, 7).unwrap();
    let mut rng = run_rng(4, 0);
    let c = random_coefficients(&mut rng, g, 1.0, true, false).unwrap();
    let tg = TimeGrid::new(1.0, 32).unwrap();
    let s1 = bump_source(&g, 8);
    let s2 = bump_source(&g, 9);
    let map = SourceMap::new(&c, &tg, Scheme::Trapezoidal, &s1, 0.5, &omega(2, 0.2)).unwrap();
    let y0 = MeshFunction::zeros(g, g.primal()).unwrap();
    let obs = |s: &SeparableForcing| observation_vector(&solve_forward(&y0, s, &c, &tg, Scheme::Trapezoidal).unwrap(), 16, map.indices());
    let (o1, o2) = (obs(&s1), obs(&s2));
    let sum: Vec<f64> = s1.profile().iter().zip(s2.profile()).map(|(a, b)| a + b).collect();
    let o12 = obs(&s1.with_profile(sum.clone()));
    let scale = o12.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..o12.len() {
        assert!((o12[k] - o1[k] - o2[k]).abs() <= 1e-10 * scale);
    }
    let direct = map.apply(&sum).unwrap();
    for k in 0..o12.len() {
        assert!((direct[k] - o12[k]).abs() <= 1e-10 * scale);
    }
    let w: Vec<f64> = (0..map.observation_len()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0).collect();
    let ftw = map.apply_transpose(&w).unwrap();
    let lhs: f64 = direct.iter().zip(&w).map(|(a, b)| a * b).sum();
    let rhs: f64 = sum.iter().zip(&ftw).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()));
}

#[test]
fn noiseless_source_reconstruction() {
    let g = GridSpec::new(1, 15).unwrap();
    let mut rng = run_rng(21, 0);
    let c = random_coefficients(&mut rng, g, 1.0, true, true).unwrap();
    let tg = TimeGrid::new(1.0, 64).unwrap();
    let src = bump_source(&g, 22);
    let y0 = MeshFunction::zeros(g, g.primal()).unwrap();
    let map = SourceMap::new(&c, &tg, Scheme::Trapezoidal, &src, 0.5, &omega(1, 0.2)).unwrap();
    let traj = solve_forward(&y0, &src, &c, &tg, Scheme::Trapezoidal).unwrap();
    let data = observation_vector(&traj, map.frame(), map.indices());
    let rec = reconstruct_source(&map, &data, None, Some(src.profile()), ReconstructionOptions::default()).unwrap();
    assert!(rec.relative_error.unwrap() <= 5e-3, "error {:?}", rec.relative_error);
    assert!(rec.residual_history.windows(2).count() > 0);

    let zero = reconstruct_source(&map, &vec![0.0; data.len()], None, None, ReconstructionOptions::default()).unwrap();
    assert!(zero.estimate.iter().all(|v| *v == 0.0));

    let mut noisy = data.clone();
    add_noise(&mut noisy, 0.01, &mut run_rng(21, 1));
    let opts = ReconstructionOptions { beta: 1e-4, ..Default::default() };
    let rec = reconstruct_source(&map, &noisy, None, Some(src.profile()), opts).unwrap();
    assert!(rec.relative_error.unwrap() < 1.0);
}

#[test]
fn stagnation_is_reported() {
    let g = GridSpec::new(1, 15).unwrap();
    let c = CoefficientFields::laplacian(g, 1.0).unwrap();
    let tg = TimeGrid::new(1.0, 16).unwrap();
    let src = bump_source(&g, 22);
    let map = SourceMap::new(&c, &tg, Scheme::Trapezoidal, &src, 0.5, &omega(1, 0.2)).unwrap();
    let data: Vec<f64> = (0..map.observation_len()).map(|k| (k as f64).sin()).collect();
    let opts = ReconstructionOptions { tol: 0.0, stagnation_window: 3, stagnation_decrease: 0.99, ..Default::default() };
    assert!(matches!(reconstruct_source(&map, &data, None, None, opts), Err(Error::Stagnation { .. })));
}

fn potential_run(p: Field, n: usize) -> (Trajectory, CoefficientFields) {
    let g = GridSpec::new(1, n).unwrap();
    let base = CoefficientFields::laplacian(g, 1.0).unwrap();
    let coeffs = base.with_potential(p).unwrap();
    let tg = TimeGrid::new(1.0, 1024).unwrap();
    let y0 = MeshFunction::from_fn(g, g.primal(), |x| (PI * x[0]).sin()).unwrap();
    (solve_forward(&y0, &ZeroForcing, &coeffs, &tg, Scheme::Trapezoidal).unwrap(), base)
}

#[test]
fn coefficient_recovery() {
    let (traj, base) = potential_run(Field::stationary(|x| 1.0 + x[0]), 31);
    let g = *traj.grid();
    let truth = sample_primal(&g, |x| 1.0 + x[0]);
    let peak = traj.frame_values(512).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let est = recover_coefficient(&traj, &base, &ZeroForcing, 0.5, 0.1 * peak, Some(&truth)).unwrap();
    assert!(est.relative_error.unwrap() <= 1e-2, "error {:?}", est.relative_error);
    assert!(est.mask.iter().filter(|m| **m).count() > 20);

    let (traj, base) = potential_run(Field::zero(), 31);
    let est = recover_coefficient(&traj, &base, &ZeroForcing, 0.5, 0.1 * peak, None).unwrap();
    assert!(est.estimate.iter().all(|v| v.abs() < 1e-9));
    assert!(matches!(recover_coefficient(&traj, &base, &ZeroForcing, 0.5, 10.0, None), Err(Error::EmptyMask(_))));
}

#[test]
fn corpus_quotient_is_stable_under_refinement() {
    let mut maxima = Vec::new();
    for n in [15usize, 31] {
        let g = GridSpec::new(1, n).unwrap();
        let w = weight(1, 2.0, 0.4);
        let mut worst: f64 = 0.0;
        for id in 0..10u64 {
            let mut rng = run_rng(99, id);
            let c = random_coefficients(&mut rng, g, 1.0, true, false).unwrap();
            let tg = TimeGrid::new(1.0, 64).unwrap();
            let src = generate_admissible(&mut rng, &g, &tg, 0.5, SourceMode::Separable { modes: 3 }).unwrap();
            let y0 = MeshFunction::zeros(g, g.primal()).unwrap();
            let y = solve_forward(&y0, &src, &c, &tg, Scheme::Trapezoidal).unwrap();
            let z = solve_z_system(&y, &c, &src).unwrap().trajectory;
            let r = stability_quotient(&src, &y, &z, &w, &omega(1, 0.2)).unwrap();
            assert!(r.reduced_quotient.is_finite());
            worst = worst.max(r.quotient);
        }
        maxima.push(worst);
    }
    let spread = maxima[0].max(maxima[1]) / maxima[0].min(maxima[1]);
    assert!(spread <= 2.0, "maxima {maxima:?}");
}
