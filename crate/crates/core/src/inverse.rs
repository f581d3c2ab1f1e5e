//! Observation operator `Λ_ϑ(g) = (y(ϑ), y|_{(0,T)×ω})`, stability quotients,
//! admissible sources and twin reconstructions.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::calculus::h2_norm;
use crate::carleman::region_indices;
use crate::coefficients::CoefficientFields;
use crate::grid::{describe_position, GridSpec, MeshFunction, MeshLayout};
use crate::math::{cos, ln, powi, sin, sqrt, trapezoid_weight, CompensatedSum, LogAccumulator, LogReal};
use crate::solver::{assemble_ah, primal_l2, Forcing, Scheme, SeparableForcing, TimeGrid, TimeProfile, Trajectory};
use crate::sparse::{solve, Csr, KrylovOptions};
use crate::synthetic::{gaussian, SineModes};
use crate::weights::{SubBox, Weight};
use crate::{Error, Result};

use core::f64::consts::PI;

fn half(l: LogReal) -> LogReal {
    if l.is_zero() {
        l
    } else {
        LogReal::from_ln(0.5 * l.ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub vartheta: f64,
    pub frame: usize,
    /// `ϑ = T/2`, the only observation time the stability argument covers.
    pub in_proof_regime: bool,
    pub snapshot: MeshFunction,
    pub snapshot_h2: f64,
    pub omega: SubBox,
    /// Primal indices of the points of `ω`.
    pub indices: Vec<usize>,
    /// `y(t_m)` on `ω` for every frame.
    pub local_y: Vec<Vec<f64>>,
    /// `∂_t y(t_m)` on `ω` for every frame.
    pub local_dt: Vec<Vec<f64>>,
    /// `‖e^{sφ} y‖_{L²_h(Q_ω)}`
    pub weighted_y: LogReal,
    /// `‖e^{sφ} ∂_t y‖_{L²_h(Q_ω)}`
    pub weighted_dt: LogReal,
}

/// Measures `y(ϑ)` on the whole mesh and `y`, `∂_t y = z` on `(0, T) × ω`.
pub fn observe(y: &Trajectory, z: &Trajectory, weight: &Weight, omega: &SubBox) -> Result<Observation> {
    let grid = *y.grid();
    if z.grid() != &grid || z.time_grid() != y.time_grid() {
        return Err(Error::TrajectoryMismatch(f64::INFINITY));
    }
    let time = y.time_grid();
    let vartheta = weight.params().vartheta;
    let frame = time.index_of(vartheta)?;
    let indices = region_indices(&grid, omega)?;
    let d = grid.dim();
    let layout = MeshLayout::new(&grid, &grid.primal())?;
    let phi: Vec<f64> = indices.iter().map(|&q| weight.phi(&layout.point(q).position(&grid)[..d])).collect();
    let ln_hd = ln(powi(grid.h(), d as i32));
    let mut acc_y = LogAccumulator::new();
    let mut acc_dt = LogAccumulator::new();
    let mut local_y = Vec::with_capacity(time.steps() + 1);
    let mut local_dt = Vec::with_capacity(time.steps() + 1);
    for m in 0..=time.steps() {
        let t = time.time(m);
        let s = weight.params().tau * weight.theta(t)?;
        let base = ln(trapezoid_weight(m, time.steps(), time.dt())) + ln_hd;
        let (yf, zf) = (y.frame_values(m), z.frame_values(m));
        let ly: Vec<f64> = indices.iter().map(|&q| yf[q]).collect();
        let lz: Vec<f64> = indices.iter().map(|&q| zf[q]).collect();
        for (k, ph) in phi.iter().enumerate() {
            acc_y.add(base + 2.0 * s * ph, ly[k] * ly[k]);
            acc_dt.add(base + 2.0 * s * ph, lz[k] * lz[k]);
        }
        local_y.push(ly);
        local_dt.push(lz);
    }
    let snapshot = y.frame(frame);
    let snapshot_h2 = h2_norm(&snapshot)?;
    Ok(Observation {
        vartheta,
        frame,
        in_proof_regime: (vartheta - 0.5 * time.t_final()).abs() <= 1e-12 * time.t_final(),
        snapshot,
        snapshot_h2,
        omega: *omega,
        indices,
        local_y,
        local_dt,
        weighted_y: half(acc_y.total()),
        weighted_dt: half(acc_dt.total()),
    })
}

/// `C''` of the error term `e^{-C''/h}` at norm level: `(2/3) μ₀ ε₀` with
/// `ε₀ = τ h / (δ T²)`, from `e^{2τθ(0)φ} ≤ e^{-(4/3) μ₀ τ / (δ T²)}`.
pub fn error_constant(weight: &Weight, grid: &GridSpec) -> f64 {
    let (mu0, _) = weight.phi_bounds(grid);
    let eps0 = weight.admissibility(grid.h()).mesh_ratio;
    0.5 * Weight::endpoint_decay_constant(mu0) * eps0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `‖g(ϑ)‖_{L²_h}`
    pub lhs: f64,
    /// `‖y(ϑ)‖_{H²_h} + ‖e^{sφ}∂_t y‖_{Q_ω} + ‖e^{sφ}y‖_{Q_ω}`
    pub rhs_observed: f64,
    /// `e^{-C''/h} (‖y(0)‖ + ‖∂_t y(0)‖)`
    pub rhs_error_term: LogReal,
    pub quotient: f64,
    /// `‖y(ϑ)‖_{H²_h} + ‖e^{sφ}∂_t y‖_{Q_ω} + e^{-C''/h} ‖∂_t y(0)‖`,
    /// enough when the coefficients do not depend on time.
    pub reduced_rhs: f64,
    pub reduced_quotient: f64,
    pub c_double_prime: f64,
    /// `h^{-2} ∫ (|y(0)|² + |y(T)|²) e^{2τθ(0)φ}`, the endpoint term the
    /// error term comes from.
    pub endpoint_term: LogReal,
}

pub fn stability_quotient(
    forcing: &dyn Forcing,
    y: &Trajectory,
    z: &Trajectory,
    weight: &Weight,
    omega: &SubBox,
) -> Result<StabilityReport> {
    let grid = *y.grid();
    let adm = weight.admissibility(grid.h());
    if !adm.admissible() {
        return Err(Error::Inadmissible(format!("tau ok: {}, tau h/(delta T^2) = {}", adm.tau_ok, adm.mesh_ratio)));
    }
    let obs = observe(y, z, weight, omega)?;
    let mut g = vec![0.0; grid.primal_len()];
    forcing.fill(&grid, obs.vartheta, &mut g);
    let lhs = primal_l2(&grid, &g);
    let rhs_observed = obs.snapshot_h2 + obs.weighted_dt.value() + obs.weighted_y.value();
    let c2 = error_constant(weight, &grid);
    let decay = LogReal::from_ln(-c2 / grid.h());
    let y0 = primal_l2(&grid, y.frame_values(0));
    let z0 = primal_l2(&grid, z.frame_values(0));
    let rhs_error_term = decay.scale(y0 + z0);
    let reduced_rhs = obs.snapshot_h2 + obs.weighted_dt.value() + decay.scale(z0).value();
    let quot = |den: f64| if lhs == 0.0 { 0.0 } else { lhs / den };

    let d = grid.dim();
    let layout = MeshLayout::new(&grid, &grid.primal())?;
    let s0 = weight.params().tau * weight.theta(0.0)?;
    let (ya, yb) = (y.frame_values(0), y.frame_values(y.time_grid().steps()));
    let mut endpoint = LogAccumulator::new();
    let pre = ln(powi(grid.h(), d as i32 - 2));
    for (q, p) in layout.points().enumerate() {
        endpoint.add(pre + 2.0 * s0 * weight.phi(&p.position(&grid)[..d]), ya[q] * ya[q] + yb[q] * yb[q]);
    }
    Ok(StabilityReport {
        lhs,
        rhs_observed,
        rhs_error_term,
        quotient: quot(rhs_observed + rhs_error_term.value()),
        reduced_rhs,
        reduced_quotient: quot(reduced_rhs),
        c_double_prime: c2,
        endpoint_term: endpoint.total(),
    })
}

/// Source with a certified constant `C_g` in `|∂_t g(t,x)| ≤ C_g |g(ϑ,x)|`.
#[derive(Clone)]
pub struct AdmissibleSource {
    forcing: Arc<dyn Forcing>,
    separable: Option<SeparableForcing>,
    pub c_g: f64,
    /// `min |R|` for separable sources.
    pub alpha: Option<f64>,
    pub vartheta: f64,
}

impl core::fmt::Debug for AdmissibleSource {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("AdmissibleSource").field("c_g", &self.c_g).field("alpha", &self.alpha).field("vartheta", &self.vartheta).finish()
    }
}

impl AdmissibleSource {
    pub fn separable(&self) -> Option<&SeparableForcing> {
        self.separable.as_ref()
    }

    pub fn forcing(&self) -> &dyn Forcing {
        self.forcing.as_ref()
    }
}

impl Forcing for AdmissibleSource {
    fn fill(&self, grid: &GridSpec, t: f64, out: &mut [f64]) {
        self.forcing.fill(grid, t, out)
    }

    fn fill_time_derivative(&self, grid: &GridSpec, t: f64, out: &mut [f64]) -> bool {
        self.forcing.fill_time_derivative(grid, t, out)
    }

    fn describe(&self) -> alloc::string::String {
        self.forcing.describe()
    }
}

/// Time samples per step of the time grid used by the certificates.
const CERT_OVERSAMPLE: usize = 16;
/// `|R|` below this is treated as a sign change.
const ALPHA_FLOOR: f64 = 1e-8;

pub enum SourceMode {
    /// Random smooth `f` times `R(t) = 1 + ½ sin(2πt/T)`.
    Separable { modes: usize },
    /// Random smooth `f`, `R ≡ 1`.
    Stationary { modes: usize },
    /// Supplied source to certify as is.
    General(Arc<dyn Forcing>),
}

/// Certifies `f(x) R(t)` by dense sampling of `R` and `R'`.
pub fn certify_separable(forcing: SeparableForcing, time: &TimeGrid, vartheta: f64) -> Result<AdmissibleSource> {
    let samples = time.steps() * CERT_OVERSAMPLE;
    let r_mid = forcing.r(vartheta);
    let mut alpha = f64::INFINITY;
    let mut max_dr: f64 = 0.0;
    let mut sign = 0.0;
    for k in 0..=samples {
        let t = time.t_final() * k as f64 / samples as f64;
        let r = forcing.r(t);
        if sign == 0.0 {
            sign = r.signum();
        }
        if r.abs() < ALPHA_FLOOR || r.signum() != sign {
            return Err(Error::Certification { t, location: "all x".into(), reason: format!("R = {r} is not bounded away from zero") });
        }
        alpha = alpha.min(r.abs());
        max_dr = max_dr.max(forcing.r_dt(t).abs());
    }
    let c_g = max_dr / r_mid.abs();
    Ok(AdmissibleSource { forcing: Arc::new(forcing.clone()), separable: Some(forcing), c_g, alpha: Some(alpha), vartheta })
}

/// Certifies an arbitrary source on the space-time grid (frames and
/// `CERT_OVERSAMPLE` sub-samples per step).
pub fn certify_general(forcing: Arc<dyn Forcing>, grid: &GridSpec, time: &TimeGrid, vartheta: f64) -> Result<AdmissibleSource> {
    let n = grid.primal_len();
    let mut g_mid = vec![0.0; n];
    forcing.fill(grid, vartheta, &mut g_mid);
    let mut dg = vec![0.0; n];
    if !forcing.fill_time_derivative(grid, 0.0, &mut dg) {
        return Err(Error::MissingSourceDerivative);
    }
    let layout = MeshLayout::new(grid, &grid.primal())?;
    let samples = time.steps() * CERT_OVERSAMPLE;
    let mut c_g: f64 = 0.0;
    for k in 0..=samples {
        let t = time.t_final() * k as f64 / samples as f64;
        forcing.fill_time_derivative(grid, t, &mut dg);
        for q in 0..n {
            let num = dg[q].abs();
            if num == 0.0 {
                continue;
            }
            if g_mid[q] == 0.0 {
                let x = layout.point(q).position(grid);
                return Err(Error::Certification {
                    t,
                    location: describe_position(&x[..grid.dim()]),
                    reason: "time derivative is nonzero where g(ϑ) vanishes".into(),
                });
            }
            c_g = c_g.max(num / g_mid[q].abs());
        }
    }
    Ok(AdmissibleSource { forcing, separable: None, c_g, alpha: None, vartheta })
}

/// `R(t) = 1 + ½ sin(2πt/T)` and its derivative.
pub fn default_profile(t_final: f64) -> (TimeProfile, TimeProfile) {
    let w = 2.0 * PI / t_final;
    (Arc::new(move |t| 1.0 + 0.5 * sin(w * t)), Arc::new(move |t| 0.5 * w * cos(w * t)))
}

pub fn generate_admissible(rng: &mut impl Rng, grid: &GridSpec, time: &TimeGrid, vartheta: f64, mode: SourceMode) -> Result<AdmissibleSource> {
    match mode {
        SourceMode::Separable { modes } => {
            let f = SineModes::random(rng, grid.dim(), modes).sample(grid);
            let (r, dr) = default_profile(time.t_final());
            certify_separable(SeparableForcing::new(f, r, dr), time, vartheta)
        }
        SourceMode::Stationary { modes } => {
            let f = SineModes::random(rng, grid.dim(), modes).sample(grid);
            certify_separable(SeparableForcing::new(f, Arc::new(|_| 1.0), Arc::new(|_| 0.0)), time, vartheta)
        }
        SourceMode::General(forcing) => certify_general(forcing, grid, time, vartheta),
    }
}

/// `v ↦ v (1 + level ξ)` with independent standard normal `ξ`.
pub fn add_noise(values: &mut [f64], level: f64, rng: &mut impl Rng) {
    for v in values {
        *v *= 1.0 + level * gaussian(rng);
    }
}

/// `(y(ϑ) on W, y(t_0) on ω, …, y(t_M) on ω)` flattened.
pub fn observation_vector(y: &Trajectory, frame: usize, indices: &[usize]) -> Vec<f64> {
    let mut out = y.frame_values(frame).to_vec();
    for f in y.frames() {
        out.extend(indices.iter().map(|&q| f[q]));
    }
    out
}

/// Linear map `f ↦ Λ_ϑ(y[f R])` with zero initial data, and its transpose.
pub struct SourceMap {
    grid: GridSpec,
    time: TimeGrid,
    zeta: f64,
    symmetric: bool,
    /// `I - Δt ζ 𝒜_h(t_{m+1})`, `m = 0..M`, a single entry when stationary.
    implicit: Vec<Csr>,
    implicit_t: Vec<Csr>,
    /// `𝒜_h(t_m)`.
    operator: Vec<Csr>,
    operator_t: Vec<Csr>,
    /// `Δt (ζ R(t_{m+1}) + (1 - ζ) R(t_m))`.
    load: Vec<f64>,
    frame: usize,
    indices: Vec<usize>,
    /// Quadrature weights of the observation entries.
    weights: Vec<f64>,
}

impl SourceMap {
    pub fn new(
        coeffs: &CoefficientFields,
        time: &TimeGrid,
        scheme: Scheme,
        profile: &SeparableForcing,
        vartheta: f64,
        omega: &SubBox,
    ) -> Result<Self> {
        let grid = *coeffs.grid();
        let frame = time.index_of(vartheta)?;
        let indices = region_indices(&grid, omega)?;
        let zeta = scheme.zeta();
        let dt = time.dt();
        let count = if coeffs.time_independent() { 1 } else { time.steps() + 1 };
        let operator: Vec<Csr> = (0..count).map(|m| assemble_ah(coeffs, time.time(m))).collect::<Result<_>>()?;
        let implicit: Vec<Csr> = operator.iter().map(|a| a.shifted(1.0, -dt * zeta)).collect();
        let symmetric = coeffs.is_symmetric();
        let transpose = |v: &Vec<Csr>| if symmetric { v.clone() } else { v.iter().map(Csr::transpose).collect() };
        let (implicit_t, operator_t) = (transpose(&implicit), transpose(&operator));
        let load = (0..time.steps()).map(|m| dt * (zeta * profile.r(time.time(m + 1)) + (1.0 - zeta) * profile.r(time.time(m)))).collect();
        let hd = powi(grid.h(), grid.dim() as i32);
        let mut weights = vec![hd; grid.primal_len()];
        for m in 0..=time.steps() {
            let w = hd * trapezoid_weight(m, time.steps(), dt);
            weights.extend(core::iter::repeat_n(w, indices.len()));
        }
        Ok(Self { grid, time: *time, zeta, symmetric, implicit, implicit_t, operator, operator_t, load, frame, indices, weights })
    }

    fn at(v: &[Csr], m: usize) -> &Csr {
        if v.len() == 1 {
            &v[0]
        } else {
            &v[m]
        }
    }

    pub fn observation_len(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.primal_len();
        let dt = self.time.dt();
        let mut out = vec![0.0; self.observation_len()];
        let local = |out: &mut [f64], m: usize, y: &[f64]| {
            let base = n + m * self.indices.len();
            for (k, &q) in self.indices.iter().enumerate() {
                out[base + k] = y[q];
            }
        };
        let mut y = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for m in 0..self.time.steps() {
            let ay = Self::at(&self.operator, m).apply(&y);
            for q in 0..n {
                rhs[q] = y[q] + dt * (1.0 - self.zeta) * ay[q] + self.load[m] * f[q];
            }
            solve(Self::at(&self.implicit, m + 1), &rhs, &mut y, self.symmetric, KrylovOptions::default())?;
            local(&mut out, m + 1, &y);
            if m + 1 == self.frame {
                out[..n].copy_from_slice(&y);
            }
        }
        Ok(out)
    }

    /// Transpose of [`SourceMap::apply`] (Euclidean on both sides).
    pub fn apply_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.primal_len();
        let dt = self.time.dt();
        let steps = self.time.steps();
        let source = |k: usize| {
            let mut e = vec![0.0; n];
            let base = n + k * self.indices.len();
            for (j, &q) in self.indices.iter().enumerate() {
                e[q] += w[base + j];
            }
            if k == self.frame {
                for q in 0..n {
                    e[q] += w[q];
                }
            }
            e
        };
        let mut result = vec![0.0; n];
        let mut mu = source(steps);
        let mut nu = vec![0.0; n];
        for k in (1..=steps).rev() {
            solve(Self::at(&self.implicit_t, k), &mu, &mut nu, self.symmetric, KrylovOptions::default())?;
            for q in 0..n {
                result[q] += self.load[k - 1] * nu[q];
            }
            if k > 1 {
                let pn = Self::at(&self.operator_t, k - 1).apply(&nu);
                mu = source(k - 1);
                for q in 0..n {
                    mu[q] += nu[q] + dt * (1.0 - self.zeta) * pn[q];
                }
            }
        }
        Ok(result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Window and minimum relative decrease of the stagnation test.
    pub stagnation_window: usize,
    pub stagnation_decrease: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self { beta: 1e-12, tol: 1e-10, max_iter: 500, stagnation_window: 20, stagnation_decrease: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub estimate: Vec<f64>,
    pub residual_history: Vec<f64>,
    pub relative_error: Option<f64>,
    pub iterations: usize,
}

/// Tikhonov least squares for the spatial profile: conjugate gradients on
/// `(Fᵀ W F + β h^d I) f = Fᵀ W d` with `d` the observation minus the
/// response to the initial datum.
pub fn reconstruct_source(
    map: &SourceMap,
    data: &[f64],
    baseline: Option<&[f64]>,
    truth: Option<&[f64]>,
    opts: ReconstructionOptions,
) -> Result<Reconstruction> {
    if data.len() != map.observation_len() {
        return Err(Error::LengthMismatch { expected: map.observation_len(), found: data.len() });
    }
    let n = map.grid.primal_len();
    let hd = powi(map.grid.h(), map.grid.dim() as i32);
    let mut d: Vec<f64> = data.to_vec();
    if let Some(b) = baseline {
        d.iter_mut().zip(b).for_each(|(v, b)| *v -= b);
    }
    let wd: Vec<f64> = d.iter().zip(map.weights()).map(|(v, w)| v * w).collect();
    let rhs = map.apply_transpose(&wd)?;
    let normal = |f: &[f64]| -> Result<Vec<f64>> {
        let ff = map.apply(f)?;
        let wf: Vec<f64> = ff.iter().zip(map.weights()).map(|(v, w)| v * w).collect();
        let mut out = map.apply_transpose(&wf)?;
        out.iter_mut().zip(f).for_each(|(o, v)| *o += opts.beta * hd * v);
        Ok(out)
    };
    let dot = |a: &[f64], b: &[f64]| {
        let mut s = CompensatedSum::new();
        a.iter().zip(b).for_each(|(x, y)| s.add(x * y));
        s.value()
    };
    let rn = sqrt(dot(&rhs, &rhs));
    let mut x = vec![0.0; n];
    let mut history = Vec::new();
    if rn == 0.0 {
        return Ok(Reconstruction { relative_error: truth.map(|t| rel_error(&map.grid, &x, t)), estimate: x, residual_history: history, iterations: 0 });
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    history.push(1.0);
    while iterations < opts.max_iter {
        let rel = sqrt(rr) / rn;
        if rel <= opts.tol {
            break;
        }
        let w = opts.stagnation_window;
        if history.len() > w && history[history.len() - 1] > (1.0 - opts.stagnation_decrease) * history[history.len() - 1 - w] {
            return Err(Error::Stagnation { iterations, residual: rel });
        }
        let ap = normal(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for q in 0..n {
            x[q] += alpha * p[q];
            r[q] -= alpha * ap[q];
        }
        let rr_new = dot(&r, &r);
        for q in 0..n {
            p[q] = r[q] + (rr_new / rr) * p[q];
        }
        rr = rr_new;
        iterations += 1;
        history.push(sqrt(rr) / rn);
    }
    Ok(Reconstruction { relative_error: truth.map(|t| rel_error(&map.grid, &x, t)), estimate: x, residual_history: history, iterations })
}

fn rel_error(grid: &GridSpec, est: &[f64], truth: &[f64]) -> f64 {
    let diff: Vec<f64> = est.iter().zip(truth).map(|(a, b)| a - b).collect();
    let t = primal_l2(grid, truth);
    let e = primal_l2(grid, &diff);
    if t == 0.0 {
        e
    } else {
        e / t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    /// `p` on the mask, zero elsewhere.
    pub estimate: Vec<f64>,
    pub mask: Vec<bool>,
    pub relative_error: Option<f64>,
}

/// `p(x) = (∂_t y(ϑ) - 𝒜_h y(ϑ) - g(ϑ)) / y(ϑ)` on points with `|y(ϑ)| ≥ alpha`;
/// `coeffs` is the operator without the unknown potential. Every term is
/// read off the time scheme's own step relation: the backward difference for
/// backward Euler, and for the trapezoidal rule the mean of the two steps
/// around `ϑ`, where the right-hand side is weighted `(1, 2, 1)/4`.
pub fn recover_coefficient(
    y: &Trajectory,
    coeffs: &CoefficientFields,
    known_source: &dyn Forcing,
    vartheta: f64,
    alpha: f64,
    truth: Option<&[f64]>,
) -> Result<CoefficientEstimate> {
    let grid = *y.grid();
    let time = y.time_grid();
    let m = time.index_of(vartheta)?;
    if m == 0 || (y.scheme() == Scheme::Trapezoidal && m == time.steps()) {
        return Err(Error::TimeOutOfRange(vartheta));
    }
    let n = grid.primal_len();
    let snap = y.frame_values(m);
    let stencil: Vec<(usize, f64)> = match y.scheme() {
        Scheme::BackwardEuler => vec![(m, 1.0)],
        Scheme::Trapezoidal => vec![(m - 1, 0.25), (m, 0.5), (m + 1, 0.25)],
    };
    let (mut rhs, mut mean) = (vec![0.0; n], vec![0.0; n]);
    let mut g = vec![0.0; n];
    for &(k, w) in &stencil {
        let t = time.time(k);
        let yk = y.frame_values(k);
        let ay = assemble_ah(coeffs, t)?.apply(yk);
        known_source.fill(&grid, t, &mut g);
        for q in 0..n {
            rhs[q] += w * (ay[q] + g[q]);
            mean[q] += w * yk[q];
        }
    }
    let dt: Vec<f64> = match y.scheme() {
        Scheme::BackwardEuler => (0..n).map(|q| (snap[q] - y.frame_values(m - 1)[q]) / time.dt()).collect(),
        Scheme::Trapezoidal => (0..n).map(|q| (y.frame_values(m + 1)[q] - y.frame_values(m - 1)[q]) / (2.0 * time.dt())).collect(),
    };
    let mask: Vec<bool> = snap.iter().zip(&mean).map(|(v, a)| v.abs() >= alpha && *a != 0.0).collect();
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask(alpha));
    }
    let estimate: Vec<f64> = (0..n).map(|q| if mask[q] { (dt[q] - rhs[q]) / mean[q] } else { 0.0 }).collect();
    let relative_error = truth.map(|t| {
        let (mut num, mut den) = (CompensatedSum::new(), CompensatedSum::new());
        for q in 0..snap.len() {
            if mask[q] {
                num.add((estimate[q] - t[q]) * (estimate[q] - t[q]));
                den.add(t[q] * t[q]);
            }
        }
        if den.value() == 0.0 {
            sqrt(num.value())
        } else {
            sqrt(num.value() / den.value())
        }
    });
    Ok(CoefficientEstimate { estimate, mask, relative_error })
}

