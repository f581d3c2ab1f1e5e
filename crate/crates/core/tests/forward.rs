use std::f64::consts::PI;
use std::sync::Arc;

use carleman_core::coefficients::{CoefficientFields, Field, ScalarField};
use carleman_core::solver::{primal_l2, solve_forward, Scheme, TimeGrid};
use carleman_core::synthetic::{manufactured_frame, ContinuousManufactured, DiscreteManufactured};
use carleman_core::{GridSpec, MeshFunction};

fn coeffs(grid: GridSpec, drift: bool) -> (CoefficientFields, Vec<ScalarField>) {
    let d = grid.dim();
    let gamma = (0..d).map(|i| Field::stationary(move |x: &[f64]| 1.0 + 0.25 * x[i])).collect();
    let grad: Vec<ScalarField> = (0..d).map(|_| Arc::new(|_: f64, _: &[f64]| 0.25) as ScalarField).collect();
    let b = (0..d).map(|_| if drift { Field::stationary(|x: &[f64]| 0.5 * x[0]) } else { Field::zero() }).collect();
    let c = Field::stationary(|x: &[f64]| 0.3 * (PI * x[0]).cos());
    (CoefficientFields::new(grid, 1.0, gamma, b, c).unwrap(), grad)
}

fn final_error(grid: GridSpec, steps: usize, drift: bool, discrete: bool, scheme: Scheme) -> f64 {
    let (c, grad) = coeffs(grid, drift);
    let tg = TimeGrid::new(1.0, steps).unwrap();
    let y0 = MeshFunction::new(grid, grid.primal(), manufactured_frame(&grid, 0.0)).unwrap();
    let tr = if discrete {
        solve_forward(&y0, &DiscreteManufactured::new(c.clone()), &c, &tg, scheme).unwrap()
    } else {
        solve_forward(&y0, &ContinuousManufactured::new(c.clone(), grad), &c, &tg, scheme).unwrap()
    };
    let mut worst: f64 = 0.0;
    for m in 0..=steps {
        let exact = manufactured_frame(&grid, tg.time(m));
        let diff: Vec<f64> = tr.frame_values(m).iter().zip(&exact).map(|(a, b)| a - b).collect();
        worst = worst.max(primal_l2(&grid, &diff) / primal_l2(&grid, &exact));
    }
    worst
}

fn order(e: &[f64]) -> f64 {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

#[test]
fn discrete_manufactured_solution_is_reproduced() {
    for (d, n) in [(1, 15), (2, 7)] {
        let g = GridSpec::new(d, n).unwrap();
        for drift in [false, true] {
            let e = final_error(g, 4096, drift, true, Scheme::Trapezoidal);
            assert!(e <= 1e-9, "d={d} drift={drift} err={e:e}");
        }
    }
}

#[test]
fn spatial_order_is_two() {
    let errs: Vec<f64> = [7, 15, 31]
        .iter()
        .map(|&n| final_error(GridSpec::new(1, n).unwrap(), 512, true, false, Scheme::Trapezoidal))
        .collect();
    assert!(order(&errs) >= 1.9, "{errs:?}");
}

#[test]
fn trapezoidal_temporal_order_is_two() {
    let g = GridSpec::new(1, 15).unwrap();
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&m| final_error(g, m, true, true, Scheme::Trapezoidal)).collect();
    assert!(order(&errs) >= 1.9, "{errs:?}");
}

#[test]
fn backward_euler_temporal_order_is_one() {
    let g = GridSpec::new(1, 15).unwrap();
    let errs: Vec<f64> = [32, 64, 128].iter().map(|&m| final_error(g, m, false, true, Scheme::BackwardEuler)).collect();
    let p = order(&errs);
    assert!((0.9..1.2).contains(&p), "{errs:?}");
}

#[test]
fn backward_euler_keeps_nonnegative_data_nonnegative() {
    use carleman_core::solver::FieldForcing;
    let g = GridSpec::new(2, 9).unwrap();
    let gamma = (0..2).map(|i| Field::stationary(move |x: &[f64]| 1.0 + 0.5 * x[i] * x[i])).collect();
    let c = CoefficientFields::new(g, 1.0, gamma, vec![Field::zero(), Field::zero()], Field::stationary(|x| x[0])).unwrap();
    let y0 = MeshFunction::from_fn(g, g.primal(), |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
    let src = FieldForcing::new(Field::stationary(|x: &[f64]| (x[0] - 0.7).max(0.0)));
    let tr = solve_forward(&y0, &src, &c, &TimeGrid::new(1.0, 40).unwrap(), Scheme::BackwardEuler).unwrap();
    let min = tr.frames().iter().flatten().fold(f64::INFINITY, |m, v| m.min(*v));
    assert!(min >= -1e-10, "min {min}");
}
