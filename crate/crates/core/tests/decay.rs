use carleman_core::inverse::{generate_admissible, stability_quotient, SourceMode};
use carleman_core::math::{fit_slope, LogReal};
use carleman_core::solver::{solve_forward, solve_z_system, Scheme, TimeGrid};
use carleman_core::synthetic::{random_coefficients, run_rng, SineModes};
use carleman_core::weights::{coupled_delta, Psi, SubBox, Weight, WeightParams};
use carleman_core::{GridSpec, MeshFunction};

fn slopes(rows: &[(f64, LogReal)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = rows.iter().map(|(h, v)| (1.0 / h, v.ln())).collect();
    (fit_slope(&pts[..2]), fit_slope(&pts[1..]))
}

#[test]
fn endpoint_and_error_terms_decay_with_coupled_delta() {
    let (tau, eps0, t_final) = (2.0, 0.5, 1.0);
    let mut endpoint = Vec::new();
    let mut error = Vec::new();
    for n in [15usize, 31, 63] {
        let grid = GridSpec::new(1, n).unwrap();
        let h = grid.h();
        let delta = coupled_delta(tau, eps0, h, t_final).unwrap();
        let psi = Psi::new(&[0.5], 2.0).unwrap();
        let w = Weight::new(WeightParams::for_psi(&psi, tau, delta, t_final), psi).unwrap();
        assert!(w.admissibility(h).admissible());
        let mut rng = run_rng(7, 0);
        let coeffs = random_coefficients(&mut rng, grid, t_final, true, false).unwrap();
        let tg = TimeGrid::new(t_final, 64).unwrap();
        let src = generate_admissible(&mut rng, &grid, &tg, 0.5, SourceMode::Separable { modes: 3 }).unwrap();
        let init = SineModes::random(&mut rng, 1, 3);
        let y0 = MeshFunction::from_fn(grid, grid.primal(), |x| init.eval(x)).unwrap();
        let y = solve_forward(&y0, &src, &coeffs, &tg, Scheme::Trapezoidal).unwrap();
        let z = solve_z_system(&y, &coeffs, &src).unwrap().trajectory;
        let r = stability_quotient(&src, &y, &z, &w, &SubBox::cube(1, 0.5, 0.2).unwrap()).unwrap();
        endpoint.push((h, r.endpoint_term));
        error.push((h, r.rhs_error_term));
    }
    for rows in [&endpoint, &error] {
        assert!(rows.windows(2).all(|p| p[1].1.ln() < p[0].1.ln()), "{rows:?}");
        let (a, b) = slopes(rows);
        assert!(a < 0.0 && b < 0.0);
        assert!((a - b).abs() <= 0.2 * a.abs().max(b.abs()), "slopes {a} {b}");
    }
}
