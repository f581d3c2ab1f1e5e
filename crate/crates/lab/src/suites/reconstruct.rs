//! Twin experiments: separable source from `Λ_ϑ` data (noiseless, then a
//! noisy sweep over β) and a zero-order coefficient from one snapshot.

use carleman_core::coefficients::{CoefficientFields, Field};
use carleman_core::inverse::{
    add_noise, generate_admissible, observation_vector, reconstruct_source, recover_coefficient, ReconstructionOptions, SourceMap, SourceMode,
};
use carleman_core::solver::{primal_l2, sample_primal, solve_forward, TimeGrid, ZeroForcing};
use carleman_core::synthetic::{random_coefficients, run_rng};
use carleman_core::grid::MeshLayout;
use carleman_core::{GridSpec, MeshFunction};

use super::{Suite, SuiteOutput};
use crate::config::Config;
use crate::report::{flag, num, Assertion, Table};
use crate::{stream, LabError};

pub fn run(cfg: &Config) -> Result<SuiteOutput, LabError> {
    let rc = &cfg.reconstruct;
    let tf = cfg.time.t_final;
    let grid = GridSpec::new(1, rc.n)?;
    let mut rng = run_rng(cfg.seed, stream(Suite::Reconstruct, 0));
    let coeffs = random_coefficients(&mut rng, grid, tf, cfg.coefficients.drift, cfg.coefficients.evolving)?;
    let time = TimeGrid::new(tf, cfg.time.steps)?;
    let src = generate_admissible(&mut rng, &grid, &time, cfg.vartheta(), SourceMode::Separable { modes: cfg.coefficients.modes })?;
    let sep = src.separable().expect("separable source");
    let truth = sep.profile().to_vec();
    let map = SourceMap::new(&coeffs, &time, cfg.scheme(), sep, cfg.vartheta(), &cfg.omega(1)?)?;
    let y0 = MeshFunction::zeros(grid, grid.primal())?;
    let traj = solve_forward(&y0, &src, &coeffs, &time, cfg.scheme())?;
    let data = observation_vector(&traj, map.frame(), map.indices());

    let mut assertions = Vec::new();
    let opts = ReconstructionOptions { beta: rc.beta, ..ReconstructionOptions::default() };
    let clean = reconstruct_source(&map, &data, None, Some(&truth), opts)?;
    assertions.push(Assertion::at_most("source_relative_error", clean.relative_error.unwrap_or(f64::INFINITY), rc.source_tol));

    let mut history = Table::new("source_residuals", &["iteration", "relative_residual"]);
    for (k, r) in clean.residual_history.iter().enumerate() {
        history.push(vec![k.to_string(), num(*r)]);
    }

    let mut noisy = data.clone();
    add_noise(&mut noisy, rc.noise, &mut run_rng(cfg.seed, stream(Suite::Reconstruct, 1)));
    let mut lcurve = Table::new("lcurve", &["beta", "noise", "residual_norm", "solution_norm", "relative_error", "iterations"]);
    for &beta in &rc.betas {
        let r = reconstruct_source(&map, &noisy, None, Some(&truth), ReconstructionOptions { beta, ..opts })?;
        let fit = map.apply(&r.estimate)?;
        let res: f64 = fit.iter().zip(&noisy).zip(map.weights()).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>().sqrt();
        lcurve.push(vec![
            num(beta),
            num(rc.noise),
            num(res),
            num(primal_l2(&grid, &r.estimate)),
            num(r.relative_error.unwrap_or(f64::NAN)),
            r.iterations.to_string(),
        ]);
    }

    let cgrid = GridSpec::new(1, rc.coefficient_n)?;
    let base = CoefficientFields::laplacian(cgrid, tf)?;
    let p = Field::stationary(|x| 1.0 + x[0]);
    let with_p = base.with_potential(p)?;
    let ctime = TimeGrid::new(tf, rc.coefficient_steps)?;
    let start = MeshFunction::from_fn(cgrid, cgrid.primal(), |x| (std::f64::consts::PI * x[0]).sin())?;
    let ctraj = solve_forward(&start, &ZeroForcing, &with_p, &ctime, cfg.scheme())?;
    let snap = ctraj.frame_values(ctime.index_of(cfg.vartheta())?);
    let peak = snap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ptruth = sample_primal(&cgrid, |x| 1.0 + x[0]);
    let est = recover_coefficient(&ctraj, &base, &ZeroForcing, cfg.vartheta(), rc.mask_fraction * peak, Some(&ptruth))?;
    assertions.push(Assertion::at_most("coefficient_relative_error_on_mask", est.relative_error.unwrap_or(f64::INFINITY), rc.coefficient_tol));
    let layout = MeshLayout::new(&cgrid, &cgrid.primal())?;
    let mut coef = Table::new("coefficient", &["x", "mask", "truth", "estimate"]);
    for (q, pt) in layout.points().enumerate() {
        coef.push(vec![num(pt.position(&cgrid)[0]), flag(est.mask[q]), num(ptruth[q]), num(est.estimate[q])]);
    }
    let mut profile = Table::new("source_profile", &["x", "truth", "estimate"]);
    let slayout = MeshLayout::new(&grid, &grid.primal())?;
    for (q, pt) in slayout.points().enumerate() {
        profile.push(vec![num(pt.position(&grid)[0]), num(truth[q]), num(clean.estimate[q])]);
    }
    Ok(SuiteOutput {
        tables: vec![profile, history, lcurve, coef],
        assertions,
        trajectories: vec![("source_twin.traj".into(), traj)],
    })
}
