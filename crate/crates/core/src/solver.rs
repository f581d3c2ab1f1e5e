//! Assembly of `𝒜_h y = Σ D_i(γ_i D_i y) - Σ b_i D_i A_i y - c y` and implicit
//! time stepping of the state and of its time derivative.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{avg, diff, product};
use crate::coefficients::{CoefficientFields, Field};
use crate::grid::{GridSpec, MeshFunction, MeshLayout};
use crate::math::{exp, powi, sqrt, trapezoid_weight, CompensatedSum};
use crate::sparse::{solve, Csr, CsrBuilder, KrylovOptions, SolveStats};
use crate::{Error, Result};

/// Uniform grid `t_m = m T / M`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter { name: "t_final", reason: "must be positive".into() });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter { name: "steps", reason: "need at least one step".into() });
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.t_final
        } else {
            self.t_final * m as f64 / self.steps as f64
        }
    }

    /// Frame index of `t`, which must coincide with a grid time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let m = libm::round(x);
        if m < 0.0 || m > self.steps as f64 || (x - m).abs() > 1e-9 {
            return Err(Error::NotOnTimeGrid(t));
        }
        Ok(m as usize)
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { t_final: self.t_final, steps: self.steps * factor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    BackwardEuler,
    Trapezoidal,
}

impl Scheme {
    /// Implicit fraction `ζ`.
    pub fn zeta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::Trapezoidal => 0.5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "backward-euler",
            Scheme::Trapezoidal => "trapezoidal",
        }
    }
}

/// A source term sampled on the primal mesh.
pub trait Forcing: Send + Sync {
    fn fill(&self, grid: &GridSpec, t: f64, out: &mut [f64]);

    /// Fills `∂_t g`; returns `false` when it is not available.
    fn fill_time_derivative(&self, _grid: &GridSpec, _t: f64, _out: &mut [f64]) -> bool {
        false
    }

    fn describe(&self) -> String {
        String::from("source")
    }
}

pub struct ZeroForcing;

impl Forcing for ZeroForcing {
    fn fill(&self, _: &GridSpec, _: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn fill_time_derivative(&self, _: &GridSpec, _: f64, out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|v| *v = 0.0);
        true
    }

    fn describe(&self) -> String {
        String::from("zero")
    }
}

/// `g(t, x)` given pointwise.
pub struct FieldForcing {
    field: Field,
}

impl FieldForcing {
    pub fn new(field: Field) -> Self {
        Self { field }
    }
}

impl Forcing for FieldForcing {
    fn fill(&self, grid: &GridSpec, t: f64, out: &mut [f64]) {
        for_primal(grid, out, |x| self.field.eval(t, x));
    }

    fn fill_time_derivative(&self, grid: &GridSpec, t: f64, out: &mut [f64]) -> bool {
        if !self.field.has_time_derivative() {
            return false;
        }
        for_primal(grid, out, |x| self.field.eval_dt(t, x).unwrap_or(0.0));
        true
    }

    fn describe(&self) -> String {
        String::from("field")
    }
}

pub type TimeProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `g(t, x) = f(x) R(t)` with `f` given on the primal mesh.
#[derive(Clone)]
pub struct SeparableForcing {
    profile: Vec<f64>,
    r: TimeProfile,
    r_dt: TimeProfile,
}

impl SeparableForcing {
    pub fn new(profile: Vec<f64>, r: TimeProfile, r_dt: TimeProfile) -> Self {
        Self { profile, r, r_dt }
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn r(&self, t: f64) -> f64 {
        (self.r)(t)
    }

    pub fn r_dt(&self, t: f64) -> f64 {
        (self.r_dt)(t)
    }

    pub fn with_profile(&self, profile: Vec<f64>) -> Self {
        Self { profile, r: self.r.clone(), r_dt: self.r_dt.clone() }
    }
}

impl Forcing for SeparableForcing {
    fn fill(&self, _: &GridSpec, t: f64, out: &mut [f64]) {
        let r = (self.r)(t);
        for (o, f) in out.iter_mut().zip(&self.profile) {
            *o = f * r;
        }
    }

    fn fill_time_derivative(&self, _: &GridSpec, t: f64, out: &mut [f64]) -> bool {
        let r = (self.r_dt)(t);
        for (o, f) in out.iter_mut().zip(&self.profile) {
            *o = f * r;
        }
        true
    }

    fn describe(&self) -> String {
        String::from("separable")
    }
}

pub(crate) fn for_primal(grid: &GridSpec, out: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) {
    let d = grid.dim();
    let layout = MeshLayout::new(grid, &grid.primal()).expect("primal layout");
    for (o, p) in out.iter_mut().zip(layout.points()) {
        *o = f(&p.position(grid)[..d]);
    }
}

/// Values of `f` at the primal points, in enumeration order.
pub fn sample_primal(grid: &GridSpec, f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.primal_len()];
    for_primal(grid, &mut out, f);
    out
}

fn assemble(grid: &GridSpec, gamma: &[Field], b: &[Field], c: &Field, t: f64, check: bool) -> Result<Csr> {
    let d = grid.dim();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let layout = MeshLayout::new(grid, &grid.primal())?;
    let mut builder = CsrBuilder::new(layout.len());
    for p in layout.points() {
        let x = p.position(grid);
        let mut diag = -c.eval(t, &x[..d]);
        for i in 0..d {
            let mut xd = x;
            let mut face = [0.0; 2];
            for (s, half) in [(0, -0.5), (1, 0.5)] {
                xd[i] = x[i] + half * h;
                let g = gamma[i].eval(t, &xd[..d]);
                if check && !(g > 0.0) {
                    return Err(Error::NonPositiveDiffusion { t, location: crate::grid::describe_position(&xd[..d]), value: g });
                }
                face[s] = g * inv_h2;
            }
            diag -= face[0] + face[1];
            let bi = if b[i].is_zero() { 0.0 } else { b[i].eval(t, &x[..d]) };
            let adv = bi / (2.0 * h);
            if let Some(lo) = layout.index_of(&p.shifted(i, -2)) {
                builder.add(lo, face[0] + adv);
            }
            if let Some(hi) = layout.index_of(&p.shifted(i, 2)) {
                builder.add(hi, face[1] - adv);
            }
        }
        builder.add(layout.index_of(&p).expect("primal point"), diag);
        builder.finish_row();
    }
    Ok(builder.build())
}

/// `𝒜_h(t)` as a sparse matrix on the primal unknowns.
pub fn assemble_ah(coeffs: &CoefficientFields, t: f64) -> Result<Csr> {
    let d = coeffs.grid().dim();
    let gamma: Vec<Field> = (0..d).map(|i| coeffs.gamma(i).clone()).collect();
    let b: Vec<Field> = (0..d).map(|i| coeffs.drift(i).clone()).collect();
    assemble(coeffs.grid(), &gamma, &b, coeffs.potential(), t, true)
}

/// `ℬ_h(t) y = Σ D_i(∂_t γ_i D_i y) - Σ ∂_t b_i D_i A_i y - ∂_t c y`.
pub fn assemble_bh(coeffs: &CoefficientFields, t: f64) -> Result<Csr> {
    let dc = coeffs.time_derivative()?;
    assemble(coeffs.grid(), &dc.gamma, &dc.b, &dc.c, t, false)
}

/// `𝒜_h(t) y` by composition of the difference and average operators.
pub fn apply_ah(coeffs: &CoefficientFields, y: &MeshFunction, t: f64) -> Result<MeshFunction> {
    let grid = *coeffs.grid();
    let d = grid.dim();
    y.expect_mesh(&grid.primal())?;
    let mut out = y.zip_with(&MeshFunction::from_fn(grid, grid.primal(), |x| coeffs.potential().eval(t, x))?, |v, c| -c * v)?;
    for i in 0..d {
        let closed = y.close(i)?;
        let dy = diff(&closed, i)?;
        let gamma = MeshFunction::from_fn(grid, *dy.mesh(), |x| coeffs.gamma(i).eval(t, x))?;
        let flux = diff(&product(&gamma, &dy)?, i)?;
        let adv = diff(&avg(&closed, i)?, i)?;
        let bi = MeshFunction::from_fn(grid, grid.primal(), |x| coeffs.drift(i).eval(t, x))?;
        let term = flux.zip_with(&product(&bi, &adv)?, |f, a| f - a)?;
        out = out.zip_with(&term, |o, v| o + v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    /// The state `y`.
    State,
    /// `z ≈ ∂_t y`.
    Derivative,
}

impl System {
    pub fn label(self) -> &'static str {
        match self {
            System::State => "y",
            System::Derivative => "z",
        }
    }
}

/// Frames `y(t_m)` on the primal mesh, `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: GridSpec,
    time: TimeGrid,
    scheme: Scheme,
    system: System,
    source: String,
    frames: Vec<Vec<f64>>,
    stats: Vec<SolveStats>,
}

impl Trajectory {
    pub fn from_frames(
        grid: GridSpec,
        time: TimeGrid,
        scheme: Scheme,
        system: System,
        source: String,
        frames: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if frames.len() != time.steps() + 1 {
            return Err(Error::LengthMismatch { expected: time.steps() + 1, found: frames.len() });
        }
        let n = grid.primal_len();
        if let Some(f) = frames.iter().find(|f| f.len() != n) {
            return Err(Error::LengthMismatch { expected: n, found: f.len() });
        }
        Ok(Self { grid, time, scheme, system, source, frames, stats: Vec::new() })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame_values(&self, m: usize) -> &[f64] {
        &self.frames[m]
    }

    pub fn frame(&self, m: usize) -> MeshFunction {
        MeshFunction::new(self.grid, self.grid.primal(), self.frames[m].clone()).expect("frame length")
    }

    /// Frame at time `t`, which must be a grid time.
    pub fn at(&self, t: f64) -> Result<MeshFunction> {
        Ok(self.frame(self.time.index_of(t)?))
    }

    pub fn solver_stats(&self) -> &[SolveStats] {
        &self.stats
    }

    /// Second-order difference quotient of the frames at `t_m` (one-sided
    /// at the ends, forward Euler quotient when `M = 1`).
    pub fn time_derivative(&self, m: usize) -> Vec<f64> {
        let dt = self.time.dt();
        let steps = self.time.steps();
        let f = &self.frames;
        if steps == 1 {
            return f[1].iter().zip(&f[0]).map(|(b, a)| (b - a) / dt).collect();
        }
        let s = 0.5 / dt;
        if m == 0 {
            (0..f[0].len()).map(|q| s * (4.0 * (f[1][q] - f[0][q]) - (f[2][q] - f[0][q]))).collect()
        } else if m == steps {
            (0..f[0].len()).map(|q| s * (4.0 * (f[m][q] - f[m - 1][q]) - (f[m][q] - f[m - 2][q]))).collect()
        } else {
            f[m + 1].iter().zip(&f[m - 1]).map(|(b, a)| s * (b - a)).collect()
        }
    }

    /// Same frames multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.frames.iter_mut().for_each(|f| f.iter_mut().for_each(|v| *v *= k));
        out
    }
}

fn l2_h(grid: &GridSpec, v: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for x in v {
        s.add(x * x);
    }
    sqrt(powi(grid.h(), grid.dim() as i32) * s.value())
}

/// Operator at a given time; reassembled lazily when it depends on time.
struct OperatorCache<'a> {
    coeffs: &'a CoefficientFields,
    stationary: Option<Csr>,
}

impl<'a> OperatorCache<'a> {
    fn new(coeffs: &'a CoefficientFields) -> Result<Self> {
        let stationary = if coeffs.time_independent() { Some(assemble_ah(coeffs, 0.0)?) } else { None };
        Ok(Self { coeffs, stationary })
    }

    fn at(&self, t: f64) -> Result<Csr> {
        match &self.stationary {
            Some(a) => Ok(a.clone()),
            None => assemble_ah(self.coeffs, t),
        }
    }
}

/// Runs the `ζ`-scheme from frame `start` to the last frame, with the
/// source values provided per frame index.
fn march(
    coeffs: &CoefficientFields,
    time: &TimeGrid,
    scheme: Scheme,
    start: usize,
    y0: Vec<f64>,
    mut source: impl FnMut(usize, &mut [f64]) -> Result<()>,
) -> Result<(Vec<Vec<f64>>, Vec<SolveStats>)> {
    let n = y0.len();
    let dt = time.dt();
    let zeta = scheme.zeta();
    let cache = OperatorCache::new(coeffs)?;
    let symmetric = coeffs.is_symmetric();
    let mut frames = Vec::with_capacity(time.steps() + 1 - start);
    let mut stats = Vec::with_capacity(time.steps() - start);
    let mut a_now = cache.at(time.time(start))?;
    let mut g_now = vec![0.0; n];
    source(start, &mut g_now)?;
    let mut g_next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut ay = vec![0.0; n];
    frames.push(y0);
    let mut lhs_cached: Option<Csr> = None;
    for m in start..time.steps() {
        let y = frames.last().expect("frame");
        let a_next = cache.at(time.time(m + 1))?;
        source(m + 1, &mut g_next)?;
        a_now.matvec(y, &mut ay);
        for q in 0..n {
            rhs[q] = y[q] + dt * ((1.0 - zeta) * (ay[q] + g_now[q]) + zeta * g_next[q]);
        }
        let lhs = match (&cache.stationary, &lhs_cached) {
            (Some(_), Some(l)) => l.clone(),
            _ => {
                let l = a_next.shifted(1.0, -dt * zeta);
                if cache.stationary.is_some() {
                    lhs_cached = Some(l.clone());
                }
                l
            }
        };
        let mut next = y.clone();
        let st = solve(&lhs, &rhs, &mut next, symmetric, KrylovOptions::default())?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: m + 1 });
        }
        stats.push(st);
        frames.push(next);
        a_now = a_next;
        core::mem::swap(&mut g_now, &mut g_next);
    }
    Ok((frames, stats))
}

/// Solves `∂_t y = 𝒜_h y + g`, `y(0) = y_ini` on the time grid.
pub fn solve_forward(
    y_ini: &MeshFunction,
    forcing: &dyn Forcing,
    coeffs: &CoefficientFields,
    time: &TimeGrid,
    scheme: Scheme,
) -> Result<Trajectory> {
    let grid = *coeffs.grid();
    y_ini.expect_mesh(&grid.primal())?;
    let (frames, stats) = march(coeffs, time, scheme, 0, y_ini.values().to_vec(), |m, out| {
        forcing.fill(&grid, time.time(m), out);
        Ok(())
    })?;
    Ok(Trajectory { grid, time: *time, scheme, system: System::State, source: forcing.describe(), frames, stats })
}

/// Largest relative defect of the scheme equation over all steps.
pub fn scheme_residual(traj: &Trajectory, coeffs: &CoefficientFields, forcing: &dyn Forcing) -> Result<f64> {
    let grid = *traj.grid();
    if coeffs.grid() != &grid {
        return Err(Error::TrajectoryMismatch(f64::INFINITY));
    }
    let time = traj.time_grid();
    let dt = time.dt();
    let zeta = traj.scheme().zeta();
    let n = grid.primal_len();
    let cache = OperatorCache::new(coeffs)?;
    let mut g0 = vec![0.0; n];
    let mut g1 = vec![0.0; n];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut a0 = cache.at(0.0)?;
    forcing.fill(&grid, 0.0, &mut g0);
    for m in 0..time.steps() {
        let a1 = cache.at(time.time(m + 1))?;
        forcing.fill(&grid, time.time(m + 1), &mut g1);
        let (y0, y1) = (traj.frame_values(m), traj.frame_values(m + 1));
        let (ay0, ay1) = (a0.apply(y0), a1.apply(y1));
        let mut res = vec![0.0; n];
        let mut mag = vec![0.0; n];
        for q in 0..n {
            let incr = dt * (zeta * (ay1[q] + g1[q]) + (1.0 - zeta) * (ay0[q] + g0[q]));
            res[q] = y1[q] - y0[q] - incr;
            mag[q] = y1[q].abs() + dt * (ay1[q].abs() + ay0[q].abs() + g1[q].abs() + g0[q].abs());
        }
        worst = worst.max(l2_h(&grid, &res));
        scale = scale.max(l2_h(&grid, &mag));
        a0 = a1;
        core::mem::swap(&mut g0, &mut g1);
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

pub struct ZSolution {
    pub trajectory: Trajectory,
    /// `‖z(t_m) - δ_t y(t_m)‖ / ‖δ_t y(t_m)‖` with `δ_t` the frame difference quotient.
    pub gap: Vec<f64>,
    /// Frame index of `T/2`.
    pub pivot: usize,
}

impl ZSolution {
    pub fn max_gap(&self) -> f64 {
        self.gap.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// `z = ∂_t y`: `∂_t z = 𝒜_h z + ℬ_h y + ∂_t g` on `(T/2, T]` from
/// `z(T/2) = 𝒜_h(T/2) y(T/2) + g(T/2)`, and `z = 𝒜_h y + g` on `[0, T/2)`.
pub fn solve_z_system(y: &Trajectory, coeffs: &CoefficientFields, forcing: &dyn Forcing) -> Result<ZSolution> {
    let grid = *y.grid();
    let time = *y.time_grid();
    if !time.steps().is_multiple_of(2) {
        return Err(Error::NotOnTimeGrid(0.5 * time.t_final()));
    }
    let pivot = time.steps() / 2;
    let n = grid.primal_len();
    let stationary = coeffs.time_independent();
    if !coeffs.has_time_derivatives() {
        return Err(Error::MissingTimeDerivatives);
    }
    let mut probe = vec![0.0; n];
    if !forcing.fill_time_derivative(&grid, 0.0, &mut probe) {
        return Err(Error::MissingSourceDerivative);
    }
    let cache = OperatorCache::new(coeffs)?;
    let identity = |m: usize| -> Result<Vec<f64>> {
        let t = time.time(m);
        let mut z = cache.at(t)?.apply(y.frame_values(m));
        let mut g = vec![0.0; n];
        forcing.fill(&grid, t, &mut g);
        z.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        Ok(z)
    };
    let mut frames: Vec<Vec<f64>> = (0..pivot).map(identity).collect::<Result<_>>()?;
    let (tail, mut stats) = march(coeffs, &time, y.scheme(), pivot, identity(pivot)?, |m, out| {
        let t = time.time(m);
        forcing.fill_time_derivative(&grid, t, out);
        if !stationary {
            let by = assemble_bh(coeffs, t)?.apply(y.frame_values(m));
            out.iter_mut().zip(&by).for_each(|(a, b)| *a += b);
        }
        Ok(())
    })?;
    frames.extend(tail);
    let gap = (0..=time.steps())
        .map(|m| {
            let dy = y.time_derivative(m);
            let diffv: Vec<f64> = frames[m].iter().zip(&dy).map(|(a, b)| a - b).collect();
            let den = l2_h(&grid, &dy);
            let num = l2_h(&grid, &diffv);
            if den > 0.0 {
                num / den
            } else {
                num
            }
        })
        .collect();
    let mut all_stats = Vec::with_capacity(time.steps());
    all_stats.resize(pivot, SolveStats { iterations: 0, residual: 0.0 });
    all_stats.append(&mut stats);
    let trajectory = Trajectory {
        grid,
        time,
        scheme: y.scheme(),
        system: System::Derivative,
        source: format!("d/dt {}", y.source()),
        frames,
        stats: all_stats,
    };
    Ok(ZSolution { trajectory, gap, pivot })
}

/// `C̃ = (d/2) reg(Γ) B² + ‖c‖∞ + 1/2` with `B = max_i sup |b_i|`.
pub fn energy_constant(coeffs: &CoefficientFields) -> f64 {
    let d = coeffs.grid().dim() as f64;
    let b = coeffs.drift_sup();
    let drift = if b == 0.0 { 0.0 } else { 0.5 * d * coeffs.reg() * b * b };
    drift + coeffs.potential_sup() + 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c_tilde: f64,
    pub holds: bool,
}

/// `∫|y(t)|² ≤ e^{C̃(t - T₀)} (∫|y(T₀)|² + ∫_{T₀}^t ∫|g|²)`, with the time
/// integral by the trapezoid rule on the trajectory's grid.
pub fn energy_check(traj: &Trajectory, coeffs: &CoefficientFields, forcing: &dyn Forcing, t0: f64, t: f64) -> Result<EnergyCheck> {
    if !(t0 >= 0.0 && t0 < t && t <= traj.time_grid().t_final()) {
        return Err(Error::InvalidParameter { name: "interval", reason: format!("need 0 <= T0 < t <= T, got [{t0}, {t}]") });
    }
    let time = traj.time_grid();
    let (m0, m1) = (time.index_of(t0)?, time.index_of(t)?);
    let grid = *traj.grid();
    let sq = |v: &[f64]| {
        let n = l2_h(&grid, v);
        n * n
    };
    let mut g = vec![0.0; grid.primal_len()];
    let mut source = CompensatedSum::new();
    for m in m0..=m1 {
        forcing.fill(&grid, time.time(m), &mut g);
        source.add(trapezoid_weight(m - m0, m1 - m0, time.dt()) * sq(&g));
    }
    let c_tilde = energy_constant(coeffs);
    let lhs = sq(traj.frame_values(m1));
    let rhs = exp(c_tilde * (t - t0)) * (sq(traj.frame_values(m0)) + source.value());
    Ok(EnergyCheck { lhs, rhs, c_tilde, holds: lhs <= rhs * (1.0 + 1e-8) })
}

/// `‖y‖_{L²_h}` for plain value slices on the primal mesh.
pub fn primal_l2(grid: &GridSpec, v: &[f64]) -> f64 {
    l2_h(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sin;
    use core::f64::consts::PI;

    fn varied(grid: GridSpec, drift: bool) -> CoefficientFields {
        let d = grid.dim();
        let gamma = (0..d).map(|i| Field::stationary(move |x: &[f64]| 1.0 + 0.3 * x[i] + 0.1 * x[0] * x[0])).collect();
        let b = (0..d)
            .map(|i| if drift { Field::stationary(move |x: &[f64]| 0.5 - x[(i + 1) % d]) } else { Field::zero() })
            .collect();
        CoefficientFields::new(grid, 1.0, gamma, b, Field::stationary(|x| 0.2 * x[0])).unwrap()
    }

    #[test]
    fn classical_stencil() {
        let g = GridSpec::new(1, 4).unwrap();
        let a = assemble_ah(&CoefficientFields::laplacian(g, 1.0).unwrap(), 0.0).unwrap();
        let close = |u: f64, v: f64| (u - v).abs() < 1e-12;
        assert!(close(a.get(1, 0), 25.0));
        assert!(close(a.get(1, 1), -50.0));
        assert!(close(a.get(1, 2), 25.0));
        assert!(close(a.get(0, 0), -50.0));
        assert_eq!(a.nnz(), 10);
    }

    #[test]
    fn assembly_matches_operator_composition() {
        for &(d, n) in &[(1, 9), (2, 5), (3, 3)] {
            let g = GridSpec::new(d, n).unwrap();
            let c = varied(g, true);
            let a = assemble_ah(&c, 0.3).unwrap();
            let y = MeshFunction::from_fn(g, g.primal(), |x| sin(3.0 * x[0]) + x.iter().sum::<f64>()).unwrap();
            let direct = apply_ah(&c, &y, 0.3).unwrap();
            let scale = a.max_abs() * y.max_abs();
            for (u, v) in a.apply(y.values()).iter().zip(direct.values()) {
                assert!((u - v).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn symmetric_without_drift() {
        let g = GridSpec::new(2, 6).unwrap();
        let a = assemble_ah(&varied(g, false), 0.0).unwrap();
        assert!(a.asymmetry() <= 1e-12 * a.max_abs());
        let a = assemble_ah(&varied(g, true), 0.0).unwrap();
        assert!(a.asymmetry() > 1e-3);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = GridSpec::new(2, 5).unwrap();
        let c = varied(g, true);
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let y0 = MeshFunction::zeros(g, g.primal()).unwrap();
        let tr = solve_forward(&y0, &ZeroForcing, &c, &tg, Scheme::Trapezoidal).unwrap();
        assert_eq!(tr.frames().len(), 11);
        assert!(tr.frames().iter().all(|f| f.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn heat_mode_decays_at_discrete_rate() {
        let n = 15;
        let g = GridSpec::new(1, n).unwrap();
        let c = CoefficientFields::laplacian(g, 1.0).unwrap();
        let h = g.h();
        let lam = 4.0 / (h * h) * sin(PI * h / 2.0) * sin(PI * h / 2.0);
        let tg = TimeGrid::new(0.1, 400).unwrap();
        let y0 = MeshFunction::from_fn(g, g.primal(), |x| sin(PI * x[0])).unwrap();
        let tr = solve_forward(&y0, &ZeroForcing, &c, &tg, Scheme::Trapezoidal).unwrap();
        let dt = tg.dt();
        let amp = libm::pow((1.0 - 0.5 * dt * lam) / (1.0 + 0.5 * dt * lam), 400.0);
        for (u, v) in tr.frame_values(400).iter().zip(y0.values()) {
            assert!((u - amp * v).abs() < 1e-11);
        }
        assert!(scheme_residual(&tr, &c, &ZeroForcing).unwrap() < 1e-10);
    }

    #[test]
    fn time_grid_lookup() {
        let tg = TimeGrid::new(1.0, 8).unwrap();
        assert_eq!(tg.index_of(0.5).unwrap(), 4);
        assert!(tg.index_of(0.3).is_err());
        assert_eq!(tg.time(8), 1.0);
    }

    #[test]
    fn energy_reduces_without_drift() {
        let g = GridSpec::new(1, 7).unwrap();
        let c = CoefficientFields::new(g, 1.0, vec![Field::constant(1.0)], vec![Field::zero()], Field::constant(-0.4)).unwrap();
        assert_eq!(energy_constant(&c), 0.9);
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let y0 = MeshFunction::zeros(g, g.primal()).unwrap();
        let tr = solve_forward(&y0, &ZeroForcing, &c, &tg, Scheme::Trapezoidal).unwrap();
        let e = energy_check(&tr, &c, &ZeroForcing, 0.25, 1.0).unwrap();
        assert_eq!((e.lhs, e.rhs), (0.0, 0.0));
        assert!(e.holds);
        assert!(energy_check(&tr, &c, &ZeroForcing, 0.5, 0.5).is_err());
    }

    #[test]
    fn z_matches_difference_quotient() {
        let g = GridSpec::new(1, 15).unwrap();
        let gamma = Field::evolving(|t, x| 1.0 + 0.2 * t * x[0], |_, x| 0.2 * x[0]);
        let c = CoefficientFields::new(g, 1.0, vec![gamma], vec![Field::constant(0.3)], Field::zero()).unwrap();
        let src = Field::evolving(|t, x| sin(PI * x[0]) * (1.0 + t), |_, x| sin(PI * x[0]));
        let forcing = FieldForcing::new(src);
        let tg = TimeGrid::new(1.0, 2048).unwrap();
        let y0 = MeshFunction::from_fn(g, g.primal(), |x| x[0] * (1.0 - x[0])).unwrap();
        let y = solve_forward(&y0, &forcing, &c, &tg, Scheme::Trapezoidal).unwrap();
        let z = solve_z_system(&y, &c, &forcing).unwrap();
        assert_eq!(z.pivot, 1024);
        let late = z.gap[z.pivot..].iter().fold(0.0f64, |m, v| m.max(*v));
        assert!(late <= 1e-3, "gap {late}");
    }
}
