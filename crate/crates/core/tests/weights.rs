use carleman_core::math::fit_slope;
use carleman_core::weights::{gauss_time_integral, Psi, Weight, WeightParams};

fn weight(t_final: f64, delta: f64, tau: f64) -> Weight {
    let psi = Psi::new(&[0.5, 0.5], 2.0).unwrap();
    Weight::new(WeightParams::for_psi(&psi, tau, delta, t_final), psi).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b.abs()
}

#[test]
fn theta_endpoint_and_midpoint_values() {
    for t_final in [0.25, 0.5, 1.0] {
        for delta in [0.05, 0.2, 0.5] {
            let w = weight(t_final, delta, 5.0);
            let end = 1.0 / (t_final * t_final * delta * (1.0 + delta));
            let mid = 4.0 / (t_final * t_final * (1.0 + 2.0 * delta) * (1.0 + 2.0 * delta));
            assert!(close(w.theta(0.0).unwrap(), end));
            assert!(close(w.theta(t_final).unwrap(), end));
            assert!(close(w.theta(0.5 * t_final).unwrap(), mid));
            assert!(close(w.theta_max(), end) && close(w.theta_min(), mid));
        }
    }
}

#[test]
fn theta_is_uniformly_convex() {
    for t_final in [0.25, 0.5, 1.0] {
        for delta in [0.05, 0.2, 0.5] {
            let w = weight(t_final, delta, 5.0);
            for k in 0..=1000 {
                let t = t_final * k as f64 / 1000.0;
                assert!(w.theta_second(t).unwrap() >= 2.0 / (t_final * t_final) * (1.0 - 1e-12));
            }
        }
    }
}

#[test]
fn time_integral_scales_like_tau_to_p_minus_half() {
    let base = weight(1.0, 0.25, 50.0);
    for x in [[0.5, 0.5], [0.2, 0.7], [0.05, 0.05]] {
        let phi = base.phi(&x);
        for p in [0.0, 1.0] {
            let pts: Vec<(f64, f64)> = [50.0, 100.0, 200.0, 400.0, 800.0]
                .iter()
                .map(|&tau| {
                    let r = gauss_time_integral(&base.with_tau_delta(tau, 0.25).unwrap(), p, phi).unwrap();
                    assert!(r.ln_lhs <= r.ln_rhs);
                    (tau.ln(), r.scaled_integral.ln())
                })
                .collect();
            let slope = fit_slope(&pts);
            assert!((slope - (p - 0.5)).abs() <= 0.15, "x={x:?} p={p} slope={slope}");
        }
    }
}
