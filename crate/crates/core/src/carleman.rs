//! Every term of the weighted estimates, evaluated on computed trajectories.
//!
//! Space integrals are `h^d Σ` over the mesh named by each term, time
//! integrals are composite trapezoid on the trajectory's own grid, and all
//! exponential weights are accumulated in log space.

use alloc::vec::Vec;

use crate::calculus::{avg_diff, diff, second_diff};
use crate::coefficients::CoefficientFields;
use crate::grid::{GridSpec, MeshId, MeshLayout};
use crate::math::{ln, powi, trapezoid_weight, LogAccumulator, LogReal};
use crate::solver::{scheme_residual, Forcing, Trajectory};
use crate::weights::{Admissibility, SubBox, Weight, WeightParams};
use crate::{Error, Result};

/// Relative defect above which a trajectory is not accepted as a solution.
pub const TRAJECTORY_TOLERANCE: f64 = 1e-6;

/// `φ` at every point of a mesh, in enumeration order.
fn phi_on(weight: &Weight, grid: &GridSpec, mesh: &MeshId) -> Result<Vec<f64>> {
    let d = grid.dim();
    let layout = MeshLayout::new(grid, mesh)?;
    Ok(layout.points().map(|p| weight.phi(&p.position(grid)[..d])).collect())
}

fn positions(grid: &GridSpec, mesh: &MeshId) -> Result<Vec<[f64; crate::grid::MAX_DIM]>> {
    let layout = MeshLayout::new(grid, mesh)?;
    Ok(layout.points().map(|p| p.position(grid)).collect())
}

fn check_p(p: u32) -> Result<()> {
    if p > 1 {
        return Err(Error::InvalidParameter { name: "p", reason: "only p = 0 and p = 1 are supported".into() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsTerms {
    /// `∫_Q (τθ)^{p-1} |∂_t y|² e^{2τθφ}`
    pub i_time: LogReal,
    /// `Σ_ij ∫_{Q*_ij} (τθ)^{p-1} γ_i γ_j e^{2τθφ} |D_ij y|²`
    pub i_second: LogReal,
    /// `τ^{p+1} Σ_i ‖θ^{(1+p)/2} e^{τθφ} D_i y‖²` on `Q*_i`
    pub j_gradient: LogReal,
    /// `τ^{p+1} Σ_i ‖θ^{(1+p)/2} e^{τθφ} A_i D_i y‖²` on `Q`
    pub j_avg: LogReal,
    /// `τ^{p+3} ‖θ^{(3+p)/2} e^{τθφ} y‖²` on `Q`
    pub j_zeroth: LogReal,
    /// Bound on the mass dropped by the log-space accumulation.
    pub dropped: LogReal,
}

impl LhsTerms {
    pub fn i_p(&self) -> LogReal {
        self.i_time.add(self.i_second)
    }

    pub fn j_p(&self) -> LogReal {
        self.j_gradient.add(self.j_avg).add(self.j_zeroth)
    }

    pub fn total(&self) -> LogReal {
        self.i_p().add(self.j_p())
    }
}

/// `I_p(y)` and the three parts of `J_p(y)`; `∂_t y` is the second-order
/// difference quotient of the frames.
pub fn compute_lhs(traj: &Trajectory, coeffs: &CoefficientFields, weight: &Weight, p: u32) -> Result<LhsTerms> {
    check_p(p)?;
    let grid = *traj.grid();
    let d = grid.dim();
    let time = traj.time_grid();
    if time.steps() < 2 {
        return Err(Error::InvalidParameter { name: "steps", reason: "need at least two time steps".into() });
    }
    let tau = weight.params().tau;
    let pf = p as f64;
    let ln_hd = ln(powi(grid.h(), d as i32));
    let primal = grid.primal();
    let phi_w = phi_on(weight, &grid, &primal)?;
    let mut phi_star = Vec::with_capacity(d);
    for i in 0..d {
        phi_star.push(phi_on(weight, &grid, &MeshId::dual_star(d, i)?)?);
    }
    let mut second_meshes = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let mesh = if i == j { primal } else { MeshId::double_dual(d, i, j)? };
            second_meshes.push((i, j, phi_on(weight, &grid, &mesh)?, positions(&grid, &mesh)?));
        }
    }

    let mut acc = [LogAccumulator::new(); 5];
    for m in 0..=time.steps() {
        let t = time.time(m);
        let s = tau * weight.theta(t)?;
        let ln_s = ln(s);
        let base = ln(trapezoid_weight(m, time.steps(), time.dt())) + ln_hd;
        let y = traj.frame(m);
        let dty = traj.time_derivative(m);
        for q in 0..phi_w.len() {
            let e = 2.0 * s * phi_w[q];
            acc[0].add(base + (pf - 1.0) * ln_s + e, dty[q] * dty[q]);
            acc[4].add(base + (pf + 3.0) * ln_s + e, y.values()[q] * y.values()[q]);
        }
        for (i, j, phi, pos) in &second_meshes {
            let dij = second_diff(&y, *i, *j)?;
            for (q, v) in dij.values().iter().enumerate() {
                let x = &pos[q][..d];
                let gg = coeffs.gamma(*i).eval(t, x) * coeffs.gamma(*j).eval(t, x);
                acc[1].add(base + (pf - 1.0) * ln_s + 2.0 * s * phi[q], gg * v * v);
            }
        }
        for i in 0..d {
            let di = diff(&y.close(i)?, i)?;
            for (q, v) in di.values().iter().enumerate() {
                acc[2].add(base + (pf + 1.0) * ln_s + 2.0 * s * phi_star[i][q], v * v);
            }
            let ad = avg_diff(&y, i)?;
            for (q, v) in ad.values().iter().enumerate() {
                acc[3].add(base + (pf + 1.0) * ln_s + 2.0 * s * phi_w[q], v * v);
            }
        }
    }
    let dropped = acc.iter().map(LogAccumulator::dropped_bound).sum();
    Ok(LhsTerms {
        i_time: acc[0].total(),
        i_second: acc[1].total(),
        j_gradient: acc[2].total(),
        j_avg: acc[3].total(),
        j_zeroth: acc[4].total(),
        dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsTerms {
    /// `∫_Q e^{2τθφ} (τθ)^p |g|²`
    pub source: LogReal,
    /// `∫_{(0,T)×ω} (τθ)^{p+3} e^{2τθφ} |y|²`
    pub local: LogReal,
    /// `h^{-2} ∫_W (τθ(0))^p (|y(0)|² + |y(T)|²) e^{2τθ(0)φ}`
    pub endpoint: LogReal,
}

impl RhsTerms {
    pub fn total(&self) -> LogReal {
        self.source.add(self.local).add(self.endpoint)
    }
}

/// Primal indices inside `omega`; errors when there are none.
pub fn region_indices(grid: &GridSpec, omega: &SubBox) -> Result<Vec<usize>> {
    if omega.dim() != grid.dim() {
        return Err(Error::InvalidParameter { name: "omega", reason: "dimension differs from the grid".into() });
    }
    let idx = omega.primal_indices(grid);
    if idx.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(idx)
}

pub fn compute_rhs(traj: &Trajectory, forcing: &dyn Forcing, weight: &Weight, p: u32, omega: &SubBox) -> Result<RhsTerms> {
    check_p(p)?;
    let grid = *traj.grid();
    let d = grid.dim();
    let local_idx = region_indices(&grid, omega)?;
    let time = traj.time_grid();
    let tau = weight.params().tau;
    let pf = p as f64;
    let ln_hd = ln(powi(grid.h(), d as i32));
    let phi = phi_on(weight, &grid, &grid.primal())?;
    let mut g = alloc::vec![0.0; phi.len()];
    let mut source = LogAccumulator::new();
    let mut local = LogAccumulator::new();
    for m in 0..=time.steps() {
        let t = time.time(m);
        let s = tau * weight.theta(t)?;
        let base = ln(trapezoid_weight(m, time.steps(), time.dt())) + ln_hd;
        forcing.fill(&grid, t, &mut g);
        for q in 0..phi.len() {
            source.add(base + pf * ln(s) + 2.0 * s * phi[q], g[q] * g[q]);
        }
        let y = traj.frame_values(m);
        for &q in &local_idx {
            local.add(base + (pf + 3.0) * ln(s) + 2.0 * s * phi[q], y[q] * y[q]);
        }
    }
    let s0 = tau * weight.theta(0.0)?;
    let (y0, yt) = (traj.frame_values(0), traj.frame_values(time.steps()));
    let mut endpoint = LogAccumulator::new();
    let ln_pre = ln_hd - 2.0 * ln(grid.h()) + pf * ln(s0);
    for q in 0..phi.len() {
        endpoint.add(ln_pre + 2.0 * s0 * phi[q], y0[q] * y0[q] + yt[q] * yt[q]);
    }
    Ok(RhsTerms { source: source.total(), local: local.total(), endpoint: endpoint.total() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanReport {
    pub p: u32,
    pub params: WeightParams,
    pub grid: GridSpec,
    pub lhs: LhsTerms,
    pub rhs: RhsTerms,
    pub admissibility: Admissibility,
    /// `(I_p + J_p) / RHS`, recorded only for admissible parameters.
    pub ratio: Option<f64>,
    pub trajectory_residual: f64,
}

impl CarlemanReport {
    pub fn admissible(&self) -> bool {
        self.admissibility.admissible()
    }
}

fn report(traj: &Trajectory, coeffs: &CoefficientFields, forcing: &dyn Forcing, weight: &Weight, p: u32, omega: &SubBox, residual: f64) -> Result<CarlemanReport> {
    let grid = *traj.grid();
    let lhs = compute_lhs(traj, coeffs, weight, p)?;
    let rhs = compute_rhs(traj, forcing, weight, p, omega)?;
    let admissibility = weight.admissibility(grid.h());
    let ratio = if admissibility.admissible() { lhs.total().ratio(rhs.total()) } else { None };
    Ok(CarlemanReport { p, params: *weight.params(), grid, lhs, rhs, admissibility, ratio, trajectory_residual: residual })
}

/// Evaluates both sides after checking that `traj` solves the scheme with
/// source `forcing` and coefficients `coeffs`.
pub fn verify_inequality(
    traj: &Trajectory,
    coeffs: &CoefficientFields,
    forcing: &dyn Forcing,
    weight: &Weight,
    p: u32,
    omega: &SubBox,
) -> Result<CarlemanReport> {
    let residual = scheme_residual(traj, coeffs, forcing)?;
    if !(residual <= TRAJECTORY_TOLERANCE) {
        return Err(Error::TrajectoryMismatch(residual));
    }
    report(traj, coeffs, forcing, weight, p, omega, residual)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseBound {
    /// `∫_W (τθ(t))^{p+1} |y(t)|² e^{2τθ(t)φ}`
    pub lhs_t: LogReal,
    /// Same quantity at `t = 0`.
    pub initial: LogReal,
    pub constant: f64,
    /// `C (I_p + J_p) + initial`
    pub bound: LogReal,
    pub holds: bool,
}

/// Constant of the pointwise-in-time bound obtained by integrating
/// `d/dt ∫ s^{p+1} |y|² e^{2sφ}` and using `|θ'| ≤ T θ²`:
/// `1 + 2 T μ₁ + (p + 1) T / (τ θ(T/2))`.
pub fn pointwise_constant(weight: &Weight, grid: &GridSpec, p: u32) -> f64 {
    let (_, mu1) = weight.phi_bounds(grid);
    let tf = weight.params().t_final;
    1.0 + 2.0 * tf * mu1 + (p as f64 + 1.0) * tf / (weight.params().tau * weight.theta_min())
}

/// `∫_W (τθ(t))^{p+1} |y(t)|² e^{2τθ(t)φ}` at a frame time.
pub fn weighted_snapshot(traj: &Trajectory, weight: &Weight, p: u32, t: f64) -> Result<LogReal> {
    let grid = *traj.grid();
    let m = traj.time_grid().index_of(t)?;
    let s = weight.params().tau * weight.theta(t)?;
    let phi = phi_on(weight, &grid, &grid.primal())?;
    let base = ln(powi(grid.h(), grid.dim() as i32)) + (p as f64 + 1.0) * ln(s);
    let mut acc = LogAccumulator::new();
    for (q, y) in traj.frame_values(m).iter().enumerate() {
        acc.add(base + 2.0 * s * phi[q], y * y);
    }
    Ok(acc.total())
}

pub fn pointwise_time_bound(traj: &Trajectory, weight: &Weight, p: u32, t: f64, lhs: &LhsTerms, constant: f64) -> Result<PointwiseBound> {
    check_p(p)?;
    if !(t > 0.0 && t <= traj.time_grid().t_final()) {
        return Err(Error::TimeOutOfRange(t));
    }
    let lhs_t = weighted_snapshot(traj, weight, p, t)?;
    let initial = weighted_snapshot(traj, weight, p, 0.0)?;
    let bound = lhs.total().scale(constant).add(initial);
    let holds = lhs_t.is_zero() || lhs_t.ln() <= bound.ln() + 1e-12;
    Ok(PointwiseBound { lhs_t, initial, constant, bound, holds })
}

/// One solved run for the feasibility sweep.
pub struct FeasibilityRun<'a> {
    pub trajectory: &'a Trajectory,
    pub coeffs: &'a CoefficientFields,
    pub forcing: &'a dyn Forcing,
    pub omega: SubBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRow {
    pub h: f64,
    pub tau: f64,
    pub delta: f64,
    pub lambda: f64,
    pub p: u32,
    pub lhs: LhsTerms,
    pub rhs: RhsTerms,
    pub ratio: Option<f64>,
    pub admissible: bool,
}

/// Terms and ratio on every `(run, τ, δ)` cell; inadmissible cells keep
/// their terms but carry no ratio.
pub fn feasibility_map(runs: &[FeasibilityRun<'_>], base: &Weight, taus: &[f64], deltas: &[f64], p: u32) -> Result<Vec<FeasibilityRow>> {
    if taus.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidParameter { name: "ranges", reason: "tau and delta ranges must be nonempty".into() });
    }
    let mut rows = Vec::new();
    for run in runs {
        let residual = scheme_residual(run.trajectory, run.coeffs, run.forcing)?;
        if !(residual <= TRAJECTORY_TOLERANCE) {
            return Err(Error::TrajectoryMismatch(residual));
        }
        for &tau in taus {
            for &delta in deltas {
                let w = base.with_tau_delta(tau, delta)?;
                let r = report(run.trajectory, run.coeffs, run.forcing, &w, p, &run.omega, residual)?;
                rows.push(FeasibilityRow {
                    h: r.grid.h(),
                    tau,
                    delta,
                    lambda: w.params().lambda,
                    p,
                    lhs: r.lhs,
                    rhs: r.rhs,
                    ratio: r.ratio,
                    admissible: r.admissible(),
                });
            }
        }
    }
    Ok(rows)
}
