//! Carleman inequality corpus across two grids, the pointwise-in-time
//! bound and the feasibility map over `(τ, δ)`.

use carleman_core::carleman::{feasibility_map, pointwise_constant, pointwise_time_bound, verify_inequality, FeasibilityRun};
use carleman_core::coefficients::CoefficientFields;
use carleman_core::solver::{solve_forward, FieldForcing, TimeGrid, Trajectory};
use carleman_core::synthetic::{random_coefficients, random_source, run_rng, SineModes};
use carleman_core::math::fit_slope;
use carleman_core::weights::{gauss_time_integral, Weight};
use carleman_core::{GridSpec, MeshFunction};

use super::{par_runs, spread, Suite, SuiteOutput};
use crate::config::Config;
use crate::report::{flag, log_num, num, opt_num, Assertion, Table};
use crate::{stream, LabError};

pub(crate) struct Run {
    pub traj: Trajectory,
    pub coeffs: CoefficientFields,
    pub forcing: FieldForcing,
}

/// Random coefficients, source and initial datum of run `id`; the draws do
/// not depend on the grid, so one run id names one continuous problem.
pub(crate) fn random_run(cfg: &Config, suite: Suite, id: u64, grid: GridSpec) -> Result<Run, LabError> {
    let mut rng = run_rng(cfg.seed, stream(suite, id));
    let d = grid.dim();
    let tf = cfg.time.t_final;
    let coeffs = random_coefficients(&mut rng, grid, tf, cfg.coefficients.drift, cfg.coefficients.evolving)?;
    let forcing = FieldForcing::new(random_source(&mut rng, d, cfg.coefficients.modes));
    let init = SineModes::random(&mut rng, d, cfg.coefficients.modes);
    let y0 = MeshFunction::new(grid, grid.primal(), init.sample(&grid))?;
    let traj = solve_forward(&y0, &forcing, &coeffs, &TimeGrid::new(tf, cfg.time.steps)?, cfg.scheme())?;
    Ok(Run { traj, coeffs, forcing })
}

/// `θ` at the ends and the centre against the closed forms, uniform
/// convexity `θ'' ≥ 2/T²` on a dense sample, and the slope in `τ` of the
/// time integral `∫ (τθ)^p e^{2τ(θ - θ(T/2))φ} dt`, expected `p - 1/2`.
fn weight_checks(cfg: &Config, weight: &Weight, grid: &GridSpec) -> Result<(Table, Vec<Assertion>), LabError> {
    let cc = &cfg.carleman;
    let tf = cfg.time.t_final;
    let mut table = Table::new("weights", &["check", "delta", "p", "value", "expected"]);
    let (mut worst_exact, mut worst_convex, mut worst_slope) = (0.0f64, f64::INFINITY, 0.0f64);
    for &delta in &cc.deltas {
        let w = weight.with_tau_delta(weight.params().tau, delta)?;
        let end = 1.0 / (tf * tf * delta * (1.0 + delta));
        let mid = 4.0 / (tf * tf * (1.0 + 2.0 * delta) * (1.0 + 2.0 * delta));
        for (name, v, e) in [("theta_0", w.theta(0.0)?, end), ("theta_T", w.theta(tf)?, end), ("theta_mid", w.theta(0.5 * tf)?, mid)] {
            worst_exact = worst_exact.max((v - e).abs() / e);
            table.push(vec![name.into(), num(delta), String::new(), num(v), num(e)]);
        }
        let mut margin = f64::INFINITY;
        for k in 0..=cc.samples {
            let t = tf * k as f64 / cc.samples as f64;
            margin = margin.min(w.theta_second(t)? * tf * tf / 2.0 - 1.0);
        }
        worst_convex = worst_convex.min(margin);
        table.push(vec!["convexity_margin".into(), num(delta), String::new(), num(margin), "0".into()]);
    }
    let phi = weight.phi(&vec![0.2; grid.dim()]);
    for p in [0.0, 1.0] {
        let pts: Vec<(f64, f64)> = cc
            .gauss_taus
            .iter()
            .map(|&tau| {
                let r = gauss_time_integral(&weight.with_tau_delta(tau, weight.params().delta)?, p, phi)?;
                Ok((tau.ln(), r.scaled_integral.ln()))
            })
            .collect::<Result<_, LabError>>()?;
        let slope = fit_slope(&pts);
        worst_slope = worst_slope.max((slope - (p - 0.5)).abs());
        table.push(vec!["time_integral_slope".into(), num(weight.params().delta), num(p), num(slope), num(p - 0.5)]);
    }
    let assertions = vec![
        Assertion::at_most("theta_closed_form_relative_error", worst_exact, 1e-14),
        Assertion::at_least("theta_convexity_margin", worst_convex, -1e-12),
        Assertion::at_most("time_integral_slope_deviation", worst_slope, cc.slope_tol),
    ];
    Ok((table, assertions))
}

const COLUMNS: [&str; 12] = ["h", "tau", "delta", "lambda", "p", "I_p", "J_p", "rhs_source", "rhs_local", "rhs_endpoint", "ratio", "admissible"];

pub fn run(cfg: &Config) -> Result<SuiteOutput, LabError> {
    let cc = &cfg.carleman;
    let d = cfg.domain.dim;
    let omega = cfg.omega(d)?;
    let mut corpus = Table::new("carleman", &["run_id", "N", "d", "h", "tau", "delta", "lambda", "p", "I_p", "J_p", "rhs_source", "rhs_local", "rhs_endpoint", "ratio", "admissible", "pointwise_holds"]);
    let mut feasibility = Table::new("feasibility", &COLUMNS);
    let first = GridSpec::new(d, cc.grids[0])?;
    let (weights_table, mut assertions) = weight_checks(cfg, &cfg.weight(&first)?, &first)?;
    let mut maxima: Vec<Vec<f64>> = vec![Vec::new(); cc.powers.len()];
    let mut pointwise_failures = 0usize;
    let mut missing = 0usize;
    for &n in &cc.grids {
        let grid = GridSpec::new(d, n)?;
        let weight = cfg.weight(&grid)?;
        let rows = par_runs(cc.runs, |id| {
            let r = random_run(cfg, Suite::Carleman, id, grid)?;
            let mut out = Vec::new();
            for &p in &cc.powers {
                let rep = verify_inequality(&r.traj, &r.coeffs, &r.forcing, &weight, p, &omega)?;
                let pb = pointwise_time_bound(&r.traj, &weight, p, cfg.vartheta(), &rep.lhs, pointwise_constant(&weight, &grid, p))?;
                out.push((id, p, rep, pb.holds));
            }
            Ok(out)
        })?;
        for (k, &p) in cc.powers.iter().enumerate() {
            let mut worst = f64::NEG_INFINITY;
            for (id, rp, rep, holds) in rows.iter().flatten().filter(|r| r.1 == p) {
                let prm = rep.params;
                corpus.push(vec![
                    id.to_string(),
                    n.to_string(),
                    d.to_string(),
                    num(grid.h()),
                    num(prm.tau),
                    num(prm.delta),
                    num(prm.lambda),
                    rp.to_string(),
                    log_num(rep.lhs.i_p()),
                    log_num(rep.lhs.j_p()),
                    log_num(rep.rhs.source),
                    log_num(rep.rhs.local),
                    log_num(rep.rhs.endpoint),
                    opt_num(rep.ratio),
                    flag(rep.admissible()),
                    flag(*holds),
                ]);
                match rep.ratio {
                    Some(r) if r.is_finite() => worst = worst.max(r),
                    _ => missing += 1,
                }
                if !holds {
                    pointwise_failures += 1;
                }
            }
            maxima[k].push(worst);
        }

        let runs: Vec<Run> = par_runs(cc.feasibility_runs, |id| random_run(cfg, Suite::Carleman, id, grid))?;
        let views: Vec<FeasibilityRun<'_>> =
            runs.iter().map(|r| FeasibilityRun { trajectory: &r.traj, coeffs: &r.coeffs, forcing: &r.forcing, omega }).collect();
        for &p in &cc.powers {
            for row in feasibility_map(&views, &weight, &cc.taus, &cc.deltas, p)? {
                feasibility.push(vec![
                    num(row.h),
                    num(row.tau),
                    num(row.delta),
                    num(row.lambda),
                    row.p.to_string(),
                    log_num(row.lhs.i_p()),
                    log_num(row.lhs.j_p()),
                    log_num(row.rhs.source),
                    log_num(row.rhs.local),
                    log_num(row.rhs.endpoint),
                    opt_num(row.ratio),
                    flag(row.admissible),
                ]);
            }
        }
    }
    assertions.push(Assertion::at_most("inadmissible_or_infinite_ratios", missing as f64, 0.0));
    for (k, p) in cc.powers.iter().enumerate() {
        for (g, m) in cc.grids.iter().zip(&maxima[k]) {
            assertions.push(Assertion::finite(&format!("max_ratio_p{p}_n{g}"), *m));
        }
        assertions.push(Assertion::at_most(&format!("max_ratio_spread_p{p}"), spread(&maxima[k]), cc.max_spread));
    }
    assertions.push(Assertion::at_most("pointwise_bound_violations", pointwise_failures as f64, 0.0));
    Ok(SuiteOutput { tables: vec![weights_table, corpus, feasibility], assertions, trajectories: Vec::new() })
}
