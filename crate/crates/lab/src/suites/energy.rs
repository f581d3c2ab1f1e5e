//! Energy inequality `‖y(t)‖² ≤ e^{C̃(t-T0)} (‖y(T0)‖² + ∫‖g‖²)` on random runs.

use carleman_core::solver::{energy_check, solve_forward, FieldForcing, Scheme, TimeGrid};
use carleman_core::synthetic::{random_coefficients, random_source, run_rng, SineModes};
use carleman_core::{GridSpec, MeshFunction};
use rand::Rng;

use super::{par_runs, Suite, SuiteOutput};
use crate::config::Config;
use crate::report::{flag, num, Assertion, Table};
use crate::{stream, LabError};

pub fn run(cfg: &Config) -> Result<SuiteOutput, LabError> {
    let ec = &cfg.energy;
    let tf = cfg.time.t_final;
    let rows = par_runs(ec.runs, |id| {
        let mut rng = run_rng(cfg.seed, stream(Suite::Energy, id));
        let dim = ec.dims[id as usize % ec.dims.len()];
        let n = ec.grids[rng.gen_range(0..ec.grids.len())];
        let grid = GridSpec::new(dim, n)?;
        let drift = cfg.coefficients.drift && id % 3 != 0;
        let evolving = cfg.coefficients.evolving && id % 2 == 1;
        let coeffs = random_coefficients(&mut rng, grid, tf, drift, evolving)?;
        let forcing = FieldForcing::new(random_source(&mut rng, dim, cfg.coefficients.modes));
        let init = SineModes::random(&mut rng, dim, cfg.coefficients.modes);
        let y0 = MeshFunction::from_fn(grid, grid.primal(), |x| init.eval(x))?;
        let scheme = if id % 5 == 0 { Scheme::BackwardEuler } else { cfg.scheme() };
        let time = TimeGrid::new(tf, cfg.time.steps)?;
        let traj = solve_forward(&y0, &forcing, &coeffs, &time, scheme)?;
        let mut out = Vec::new();
        for &frac in &ec.starts {
            let m0 = (frac * cfg.time.steps as f64).round() as usize;
            let e = energy_check(&traj, &coeffs, &forcing, time.time(m0), tf)?;
            out.push(vec![
                id.to_string(),
                dim.to_string(),
                n.to_string(),
                scheme.label().into(),
                num(time.time(m0)),
                num(tf),
                num(e.lhs),
                num(e.rhs),
                num(e.c_tilde),
                flag(e.holds),
            ]);
        }
        Ok(out)
    })?;
    let mut table = Table::new("energy", &["run_id", "d", "N", "scheme", "t0", "t", "lhs", "rhs", "c_tilde", "holds"]);
    let mut violations = 0usize;
    for r in rows.into_iter().flatten() {
        if r[9] != "true" {
            violations += 1;
        }
        table.push(r);
    }
    let assertions = vec![Assertion::at_most("violations", violations as f64, 0.0)];
    Ok(SuiteOutput { tables: vec![table], assertions, trajectories: Vec::new() })
}
