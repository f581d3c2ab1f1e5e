//! Seeded random data and manufactured solutions.
//!
//! Every random object is drawn from [`run_rng`]: a ChaCha8 generator keyed
//! by the global seed, with the run index selecting the stream. Two runs
//! with the same `(seed, run_id)` see the same numbers regardless of the
//! order in which runs are scheduled.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::{CoefficientFields, Field, ScalarField};
use crate::grid::{GridSpec, MeshFunction, MeshId, MAX_DIM};
use crate::math::{cos, exp, sin};
use crate::solver::{assemble_ah, assemble_bh, sample_primal, Forcing};
use crate::Result;

use core::f64::consts::PI;

pub fn run_rng(seed: u64, run_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_id);
    rng
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Independent uniform values in `[-1, 1]` on any mesh.
pub fn random_values(rng: &mut impl Rng, grid: GridSpec, mesh: MeshId) -> Result<MeshFunction> {
    MeshFunction::from_points(grid, mesh, |_| rng.gen_range(-1.0..=1.0))
}

/// `Σ_k a_k / |k|² Π_i sin(k_i π x_i)` over `k ∈ {1..modes}^d`; vanishes on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SineModes {
    dim: usize,
    modes: usize,
    amps: Vec<f64>,
}

impl SineModes {
    pub fn random(rng: &mut impl Rng, dim: usize, modes: usize) -> Self {
        let count = modes.pow(dim as u32);
        let amps = (0..count).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self { dim, modes, amps }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            let mut rem = idx;
            let mut prod = *a;
            let mut k2 = 0.0;
            for xa in x.iter().take(self.dim) {
                let k = (rem % self.modes + 1) as f64;
                rem /= self.modes;
                prod *= sin(k * PI * xa);
                k2 += k * k;
            }
            total += prod / k2;
        }
        total
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        sample_primal(grid, |x| self.eval(x))
    }
}

/// `amp sin(a t + k·x + p)` with its time derivative.
fn wave(rng: &mut impl Rng, dim: usize, amp: f64, evolving: bool) -> (ScalarField, Option<ScalarField>) {
    let mut k = [0.0; MAX_DIM];
    for ka in k.iter_mut().take(dim) {
        *ka = rng.gen_range(-3.0..=3.0);
    }
    let a = if evolving { rng.gen_range(-2.0..=2.0) } else { 0.0 };
    let p = rng.gen_range(0.0..=2.0 * PI);
    let phase = move |t: f64, x: &[f64]| a * t + (0..dim).map(|i| k[i] * x[i]).sum::<f64>() + p;
    let f: ScalarField = Arc::new(move |t, x| amp * sin(phase(t, x)));
    let df: Option<ScalarField> = if evolving { Some(Arc::new(move |t, x| amp * a * cos(phase(t, x)))) } else { None };
    (f, df)
}

fn field_from(offset: f64, (f, df): (ScalarField, Option<ScalarField>)) -> Field {
    match df {
        Some(df) => Field::evolving(move |t, x| offset + f(t, x), move |t, x| df(t, x)),
        None => Field::stationary(move |x| offset + f(0.0, x)),
    }
}

/// Smooth coefficients with `γ_i ∈ [0.75, 1.75]`, `|b_i| ≤ 1`, `|c| ≤ 1`.
pub fn random_coefficients(rng: &mut impl Rng, grid: GridSpec, t_final: f64, drift: bool, evolving: bool) -> Result<CoefficientFields> {
    let d = grid.dim();
    let gamma = (0..d).map(|_| field_from(1.25, wave(rng, d, 0.5, evolving))).collect();
    let b = (0..d)
        .map(|_| {
            if drift {
                let amp = rng.gen_range(-1.0..=1.0);
                field_from(0.0, wave(rng, d, amp, evolving))
            } else {
                Field::zero()
            }
        })
        .collect();
    let amp = rng.gen_range(-1.0..=1.0);
    let c = field_from(0.0, wave(rng, d, amp, evolving));
    CoefficientFields::new(grid, t_final, gamma, b, c)
}

/// A random smooth source `g(t, x) = S(x) (1 + a sin(ω t))`, `|a| ≤ 1/2`.
pub fn random_source(rng: &mut impl Rng, dim: usize, modes: usize) -> Field {
    let s = SineModes::random(rng, dim, modes);
    let a = rng.gen_range(-0.5..=0.5);
    let w = rng.gen_range(0.5..=2.0 * PI);
    let s2 = s.clone();
    Field::evolving(move |t, x| s.eval(x) * (1.0 + a * sin(w * t)), move |t, x| s2.eval(x) * a * w * cos(w * t))
}

/// `y*(t, x) = e^{-t} Π_i sin(π x_i)`.
pub fn manufactured(t: f64, x: &[f64]) -> f64 {
    exp(-t) * x.iter().map(|&xi| sin(PI * xi)).product::<f64>()
}

pub fn manufactured_frame(grid: &GridSpec, t: f64) -> Vec<f64> {
    sample_primal(grid, |x| manufactured(t, x))
}

/// `g = ∂_t y* - 𝒜_h(t) y*` built from the assembled operator, so that
/// `y*` solves the semi-discrete system with no spatial error.
pub struct DiscreteManufactured {
    coeffs: CoefficientFields,
}

impl DiscreteManufactured {
    pub fn new(coeffs: CoefficientFields) -> Self {
        Self { coeffs }
    }
}

impl Forcing for DiscreteManufactured {
    fn fill(&self, grid: &GridSpec, t: f64, out: &mut [f64]) {
        let y = manufactured_frame(grid, t);
        let ay = assemble_ah(&self.coeffs, t).expect("validated coefficients").apply(&y);
        for ((o, yv), a) in out.iter_mut().zip(&y).zip(&ay) {
            *o = -yv - a;
        }
    }

    fn fill_time_derivative(&self, grid: &GridSpec, t: f64, out: &mut [f64]) -> bool {
        let Ok(b) = assemble_bh(&self.coeffs, t) else {
            return false;
        };
        let y = manufactured_frame(grid, t);
        let ay = assemble_ah(&self.coeffs, t).expect("validated coefficients").apply(&y);
        let by = b.apply(&y);
        for q in 0..out.len() {
            out[q] = y[q] + ay[q] - by[q];
        }
        true
    }

    fn describe(&self) -> alloc::string::String {
        "discrete-manufactured".into()
    }
}

/// `g = ∂_t y* - 𝒜 y*` with the continuous operator, for stationary
/// coefficients whose diffusion gradients `∂_i γ_i` are supplied.
pub struct ContinuousManufactured {
    coeffs: CoefficientFields,
    gamma_grad: Vec<ScalarField>,
}

impl ContinuousManufactured {
    pub fn new(coeffs: CoefficientFields, gamma_grad: Vec<ScalarField>) -> Self {
        Self { coeffs, gamma_grad }
    }
}

impl Forcing for ContinuousManufactured {
    fn fill(&self, grid: &GridSpec, t: f64, out: &mut [f64]) {
        let d = grid.dim();
        let v = sample_primal(grid, |x| {
            let y = manufactured(t, x);
            let mut g = -y + self.coeffs.potential().eval(t, x) * y;
            for i in 0..d {
                let mut dy = exp(-t) * PI * cos(PI * x[i]);
                for (j, xj) in x.iter().enumerate() {
                    if j != i {
                        dy *= sin(PI * xj);
                    }
                }
                let gi = self.coeffs.gamma(i).eval(t, x);
                let gdi = (self.gamma_grad[i])(t, x);
                g -= gdi * dy - gi * PI * PI * y;
                g += self.coeffs.drift(i).eval(t, x) * dy;
            }
            g
        });
        out.copy_from_slice(&v);
    }

    fn describe(&self) -> alloc::string::String {
        "continuous-manufactured".into()
    }
}
