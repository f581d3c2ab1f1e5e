//! Manufactured-solution studies: exact reproduction of the discrete
//! solution, spatial order and temporal orders of both schemes.

use std::f64::consts::PI;
use std::sync::Arc;

use carleman_core::coefficients::{CoefficientFields, Field, ScalarField};
use carleman_core::solver::{primal_l2, solve_forward, Scheme, TimeGrid};
use carleman_core::synthetic::{manufactured_frame, ContinuousManufactured, DiscreteManufactured};
use carleman_core::{GridSpec, MeshFunction};

use super::SuiteOutput;
use crate::config::Config;
use crate::report::{flag, num, Assertion, Table};
use crate::LabError;

fn coefficients(grid: GridSpec, t_final: f64, drift: bool) -> Result<(CoefficientFields, Vec<ScalarField>), LabError> {
    let d = grid.dim();
    let gamma = (0..d).map(|i| Field::stationary(move |x: &[f64]| 1.0 + 0.25 * x[i])).collect();
    let grad = (0..d).map(|_| Arc::new(|_: f64, _: &[f64]| 0.25) as ScalarField).collect();
    let b = (0..d).map(|_| if drift { Field::stationary(|x: &[f64]| 0.5 * x[0]) } else { Field::zero() }).collect();
    let c = Field::stationary(|x: &[f64]| 0.3 * (PI * x[0]).cos());
    Ok((CoefficientFields::new(grid, t_final, gamma, b, c)?, grad))
}

/// Largest relative `L²_h` error over all frames.
fn error(grid: GridSpec, t_final: f64, steps: usize, drift: bool, discrete: bool, scheme: Scheme) -> Result<f64, LabError> {
    let (c, grad) = coefficients(grid, t_final, drift)?;
    let tg = TimeGrid::new(t_final, steps)?;
    let y0 = MeshFunction::new(grid, grid.primal(), manufactured_frame(&grid, 0.0))?;
    let tr = if discrete {
        solve_forward(&y0, &DiscreteManufactured::new(c.clone()), &c, &tg, scheme)?
    } else {
        solve_forward(&y0, &ContinuousManufactured::new(c.clone(), grad), &c, &tg, scheme)?
    };
    let mut worst: f64 = 0.0;
    for m in 0..=steps {
        let exact = manufactured_frame(&grid, tg.time(m));
        let diff: Vec<f64> = tr.frame_values(m).iter().zip(&exact).map(|(a, b)| a - b).collect();
        worst = worst.max(primal_l2(&grid, &diff) / primal_l2(&grid, &exact));
    }
    Ok(worst)
}

/// Smallest observed order over successive halvings.
fn observed_order(errors: &[f64], ratios: &[f64]) -> f64 {
    errors.windows(2).zip(ratios).map(|(e, r)| (e[0] / e[1]).ln() / r.ln()).fold(f64::INFINITY, f64::min)
}

pub fn run(cfg: &Config) -> Result<SuiteOutput, LabError> {
    let cc = &cfg.converge;
    let tf = cfg.time.t_final;
    let mut table = Table::new("convergence", &["study", "d", "N", "M", "scheme", "drift", "error"]);
    let mut assertions = Vec::new();
    let mut row = |study: &str, g: GridSpec, m: usize, s: Scheme, drift: bool, e: f64| {
        table.push(vec![study.into(), g.dim().to_string(), g.n().to_string(), m.to_string(), s.label().into(), flag(drift), num(e)]);
    };

    let mut exact_worst: f64 = 0.0;
    for (d, n) in [(1, 15), (2, 7)] {
        let g = GridSpec::new(d, n)?;
        for drift in [false, true] {
            let e = error(g, tf, cc.discrete_steps, drift, true, Scheme::Trapezoidal)?;
            row("discrete", g, cc.discrete_steps, Scheme::Trapezoidal, drift, e);
            exact_worst = exact_worst.max(e);
        }
    }
    assertions.push(Assertion::at_most("discrete_solution_relative_error", exact_worst, cc.discrete_tol));

    let mut errs = Vec::new();
    let mut ratios = Vec::new();
    for (k, &n) in cc.spatial_grids.iter().enumerate() {
        let g = GridSpec::new(1, n)?;
        let e = error(g, tf, cc.spatial_steps, true, false, Scheme::Trapezoidal)?;
        row("spatial", g, cc.spatial_steps, Scheme::Trapezoidal, true, e);
        errs.push(e);
        if k > 0 {
            ratios.push((cc.spatial_grids[k] + 1) as f64 / (cc.spatial_grids[k - 1] + 1) as f64);
        }
    }
    assertions.push(Assertion::at_least("spatial_order", observed_order(&errs, &ratios), cc.min_order));

    let ratios: Vec<f64> = cc.temporal_steps.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let g = GridSpec::new(1, cc.temporal_n)?;
    let mut errs = Vec::new();
    for &m in &cc.temporal_steps {
        let e = error(g, tf, m, true, true, Scheme::Trapezoidal)?;
        row("temporal", g, m, Scheme::Trapezoidal, true, e);
        errs.push(e);
    }
    assertions.push(Assertion::at_least("trapezoidal_temporal_order", observed_order(&errs, &ratios), cc.min_order));

    let be_steps: Vec<usize> = cc.temporal_steps.iter().map(|m| 2 * m).collect();
    let mut errs = Vec::new();
    for &m in &be_steps {
        let e = error(g, tf, m, false, true, Scheme::BackwardEuler)?;
        row("temporal", g, m, Scheme::BackwardEuler, false, e);
        errs.push(e);
    }
    assertions.push(Assertion::at_least("backward_euler_temporal_order", observed_order(&errs, &ratios), 0.9));
    Ok(SuiteOutput { tables: vec![table], assertions, trajectories: Vec::new() })
}
