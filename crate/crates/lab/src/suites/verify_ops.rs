//! Randomized check of the product rules, their square cases, summation by
//! parts and the symmetry of mixed second differences.

use carleman_core::calculus::{ibp_avg_residual, ibp_diff_residual, leibniz_residuals, second_diff, square_rules};
use carleman_core::synthetic::{random_values, run_rng};
use carleman_core::{GridSpec, MeshFunction, MeshId};
use rand::Rng;

use super::{par_runs, Suite, SuiteOutput};
use crate::config::Config;
use crate::report::{num, Assertion, Table};
use crate::{stream, LabError};

const IDENTITIES: [&str; 8] = ["leibniz_diff", "leibniz_avg", "avg_square", "diff_square", "avg_square_gap", "ibp_diff", "ibp_avg", "mixed_symmetry"];

struct Row {
    case: u64,
    dim: usize,
    n: usize,
    axis: usize,
    identity: usize,
    residual: f64,
    scale: f64,
}

fn rel(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

fn case(cfg: &Config, id: u64) -> Result<Vec<Row>, LabError> {
    let vc = &cfg.verify_ops;
    let mut rng = run_rng(cfg.seed, stream(Suite::VerifyOps, id));
    let dim = vc.dims[rng.gen_range(0..vc.dims.len())];
    let n = rng.gen_range(vc.n_min..=vc.n_max);
    let k = 10f64.powf(rng.gen_range(-3.0..=3.0));
    let grid = GridSpec::new(dim, n)?;
    let mut rows = Vec::new();
    let mut push = |axis, identity, residual: f64, scale| rows.push(Row { case: id, dim, n, axis, identity, residual: residual.abs(), scale });
    let scaled = |f: MeshFunction| f.map(|v| k * v);
    for axis in 0..dim {
        for mesh in [MeshId::closure(dim, axis)?, MeshId::dual_star(dim, axis)?] {
            let u = scaled(random_values(&mut rng, grid, mesh)?);
            let v = random_values(&mut rng, grid, mesh)?;
            let l = leibniz_residuals(&u, &v, axis)?;
            push(axis, 0, l.diff_rule, l.scale);
            push(axis, 1, l.avg_rule, l.scale);
            let s = square_rules(&u, axis)?;
            push(axis, 2, s.avg_square, s.scale);
            push(axis, 3, s.diff_square, s.scale);
            push(axis, 4, (-s.min_avg_gap).max(0.0), s.scale);
        }
        let u = scaled(random_values(&mut rng, grid, MeshId::closure(dim, axis)?)?);
        let v = random_values(&mut rng, grid, MeshId::dual_star(dim, axis)?)?;
        let r = ibp_diff_residual(&u, &v, axis)?;
        push(axis, 5, r.residual, r.scale);
        let r = ibp_avg_residual(&u, &v, axis)?;
        push(axis, 6, r.residual, r.scale);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let y = scaled(random_values(&mut rng, grid, grid.primal())?);
            let (a, b) = (second_diff(&y, i, j)?, second_diff(&y, j, i)?);
            let worst = a.values().iter().zip(b.values()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            push(i, 7, worst, a.max_abs());
        }
    }
    Ok(rows)
}

pub fn run(cfg: &Config) -> Result<SuiteOutput, LabError> {
    let cases = par_runs(cfg.verify_ops.cases, |id| case(cfg, id))?;
    let mut table = Table::new("identities", &["case", "d", "N", "axis", "identity", "residual", "scale", "relative"]);
    let mut worst = [0.0f64; IDENTITIES.len()];
    for r in cases.iter().flatten() {
        let rl = rel(r.residual, r.scale);
        worst[r.identity] = worst[r.identity].max(rl);
        table.push(vec![
            r.case.to_string(),
            r.dim.to_string(),
            r.n.to_string(),
            r.axis.to_string(),
            IDENTITIES[r.identity].into(),
            num(r.residual),
            num(r.scale),
            num(rl),
        ]);
    }
    let assertions = IDENTITIES.iter().zip(worst).map(|(name, w)| Assertion::at_most(&format!("{name}_max_relative"), w, cfg.verify_ops.tol)).collect();
    Ok(SuiteOutput { tables: vec![table], assertions, trajectories: Vec::new() })
}
