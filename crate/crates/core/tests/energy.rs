use carleman_core::solver::{energy_check, solve_forward, FieldForcing, Scheme, TimeGrid};
use carleman_core::synthetic::{random_coefficients, random_source, run_rng, SineModes};
use carleman_core::{GridSpec, MeshFunction};
use rand::Rng;

#[test]
fn energy_estimate_holds_on_random_runs() {
    let mut violations = Vec::new();
    for id in 0..100u64 {
        let mut rng = run_rng(2024, id);
        let dim = 1 + (id % 2) as usize;
        let n = [7, 11, 15][rng.gen_range(0..3)];
        let grid = GridSpec::new(dim, n).unwrap();
        let coeffs = random_coefficients(&mut rng, grid, 1.0, id % 3 != 0, id % 4 == 1).unwrap();
        let forcing = FieldForcing::new(random_source(&mut rng, dim, 3));
        let init = SineModes::random(&mut rng, dim, 3);
        let y0 = MeshFunction::from_fn(grid, grid.primal(), |x| init.eval(x)).unwrap();
        let scheme = if id % 5 == 0 { Scheme::BackwardEuler } else { Scheme::Trapezoidal };
        let traj = solve_forward(&y0, &forcing, &coeffs, &TimeGrid::new(1.0, 32).unwrap(), scheme).unwrap();
        for t0 in [0.0, 0.25, 0.5] {
            let e = energy_check(&traj, &coeffs, &forcing, t0, 1.0).unwrap();
            if !e.holds {
                violations.push((id, t0, e));
            }
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}
