//! The Carleman weight family.
//!
//! `psi(x) = c0 - |x - x0|²` is the spatial profile, `phi = e^{λ psi} - e^{λ K}`
//! is strictly negative on the closed box, `theta(t) = 1 / ((t + δT)(T + δT - t))`
//! is the mollified time blow-up and `s = τ θ`. All exponential weights
//! used elsewhere are `e^{2 s φ}`, handled as logarithms.

use alloc::format;
use alloc::string::ToString;

use crate::grid::{GridSpec, MeshId, MeshLayout, MAX_DIM};
use crate::math::{exp, ln, powf, sqrt};
use crate::{Error, Result};

/// Axis-aligned open box `(lo, hi)` inside the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubBox {
    dim: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

impl SubBox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > MAX_DIM {
            return Err(Error::InvalidParameter { name: "box", reason: "corner dimensions differ or are unsupported".into() });
        }
        let mut b = Self { dim: lo.len(), lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM] };
        for a in 0..lo.len() {
            if !(lo[a] < hi[a]) {
                return Err(Error::InvalidParameter { name: "box", reason: format!("lo[{a}] >= hi[{a}]") });
            }
            b.lo[a] = lo[a];
            b.hi[a] = hi[a];
        }
        Ok(b)
    }

    /// The cube `(c - r, c + r)^d`.
    pub fn cube(dim: usize, center: f64, half_width: f64) -> Result<Self> {
        let lo = [center - half_width; MAX_DIM];
        let hi = [center + half_width; MAX_DIM];
        Self::new(&lo[..dim], &hi[..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for (a, ca) in c.iter_mut().enumerate().take(self.dim) {
            *ca = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }

    /// `other` is compactly contained in `self`.
    pub fn compactly_contains(&self, other: &SubBox) -> bool {
        self.dim == other.dim && (0..self.dim).all(|a| self.lo[a] < other.lo[a] && other.hi[a] < self.hi[a])
    }

    /// Compactly contained in the unit box.
    pub fn inside_unit_box(&self) -> bool {
        (0..self.dim).all(|a| self.lo[a] > 0.0 && self.hi[a] < 1.0)
    }

    /// Indices (enumeration order) of primal points inside the box.
    pub fn primal_indices(&self, grid: &GridSpec) -> alloc::vec::Vec<usize> {
        let layout = MeshLayout::new(grid, &grid.primal()).expect("primal layout");
        layout
            .points()
            .enumerate()
            .filter(|(_, p)| self.contains(&p.position(grid)[..grid.dim()]))
            .map(|(i, _)| i)
            .collect()
    }
}

/// `psi(x) = c0 - |x - x0|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi {
    dim: usize,
    center: [f64; MAX_DIM],
    offset: f64,
}

impl Psi {
    pub fn new(center: &[f64], offset: f64) -> Result<Self> {
        if center.is_empty() || center.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(center.len()));
        }
        let mut c = [0.0; MAX_DIM];
        c[..center.len()].copy_from_slice(center);
        Ok(Self { dim: center.len(), center: c, offset })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for a in 0..self.dim {
            let d = x[a] - self.center[a];
            r2 += d * d;
        }
        self.offset - r2
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut g = [0.0; MAX_DIM];
        for (a, ga) in g.iter_mut().enumerate().take(self.dim) {
            *ga = -2.0 * (x[a] - self.center[a]);
        }
        g
    }

    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        sqrt(self.gradient(x).iter().map(|v| v * v).sum())
    }

    /// Supremum over any box containing the center.
    pub fn sup(&self) -> f64 {
        self.offset
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PsiOptions {
    pub offset: f64,
    /// Width of the inflation `Ω̂ = (-margin, 1 + margin)^d`.
    pub margin: f64,
    /// Width of the neighbourhood of each face where `∂_n psi` is checked.
    pub layer: f64,
    /// Scan resolution per axis of `Ω̂`.
    pub samples: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        Self { offset: 2.0, margin: 0.1, layer: 0.1, samples: 41 }
    }
}

/// Measured constants of the geometric assumption on `psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiReport {
    pub min_psi: f64,
    pub max_psi: f64,
    /// `min |∇psi|` over grid points of the closed box outside `ω₀`.
    pub min_grad_outside: f64,
    /// `max ∂_n psi` over the face layers, must be negative.
    pub max_normal_derivative: f64,
}

/// Build `psi` centred in `ω₀` and check positivity, the gradient bound
/// outside `ω₀` and the sign of the outward normal derivative.
pub fn build_psi(grid: &GridSpec, omega0: &SubBox, omega: &SubBox, opts: PsiOptions) -> Result<(Psi, PsiReport)> {
    let d = grid.dim();
    if omega0.dim() != d || omega.dim() != d {
        return Err(Error::WeightAssumption("region dimensions differ from the grid".into()));
    }
    if !omega.compactly_contains(omega0) {
        return Err(Error::WeightAssumption("ω₀ is not compactly contained in ω".into()));
    }
    if !omega.inside_unit_box() {
        return Err(Error::WeightAssumption("ω is not compactly contained in the unit box".into()));
    }
    let x0 = omega0.center();
    for &c in &x0[..d] {
        if c <= opts.layer || c >= 1.0 - opts.layer {
            return Err(Error::WeightAssumption(format!(
                "center {c} is within the face layer {}; the normal derivative sign would fail",
                opts.layer
            )));
        }
    }
    let psi = Psi::new(&x0[..d], opts.offset)?;

    let n = opts.samples.max(2);
    let total = n.pow(d as u32);
    let lo = -opts.margin;
    let width = 1.0 + 2.0 * opts.margin;
    let mut min_psi = f64::INFINITY;
    let mut max_psi = f64::NEG_INFINITY;
    let mut max_dn = f64::NEG_INFINITY;
    let mut x = [0.0; MAX_DIM];
    for idx in 0..total {
        let mut rem = idx;
        for xa in x.iter_mut().take(d) {
            *xa = lo + width * (rem % n) as f64 / (n - 1) as f64;
            rem /= n;
        }
        let v = psi.value(&x[..d]);
        min_psi = min_psi.min(v);
        max_psi = max_psi.max(v);
        let g = psi.gradient(&x[..d]);
        for a in 0..d {
            if x[a] >= 1.0 - opts.layer {
                max_dn = max_dn.max(g[a]);
            }
            if x[a] <= opts.layer {
                max_dn = max_dn.max(-g[a]);
            }
        }
    }
    let closed = MeshLayout::new(grid, &MeshId::closed(d))?;
    let mut min_grad = f64::INFINITY;
    for p in closed.points() {
        let pos = p.position(grid);
        if !omega0.contains(&pos[..d]) {
            min_grad = min_grad.min(psi.gradient_norm(&pos[..d]));
        }
    }
    let report = PsiReport { min_psi, max_psi, min_grad_outside: min_grad, max_normal_derivative: max_dn };
    if min_psi <= 0.0 {
        return Err(Error::WeightAssumption(format!("psi is not positive on the inflated box (min {min_psi})")));
    }
    if !(max_dn < 0.0) {
        return Err(Error::WeightAssumption(format!("normal derivative {max_dn} is not negative near the boundary")));
    }
    if !(min_grad > 0.0) {
        return Err(Error::WeightAssumption("gradient vanishes outside ω₀".into()));
    }
    Ok((psi, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub lambda: f64,
    /// Level `K > sup psi`.
    pub k_level: f64,
    pub tau: f64,
    pub delta: f64,
    pub t_final: f64,
    /// Admissibility bound on `τ h / (δ T²)`.
    pub epsilon: f64,
    pub tau0: f64,
    /// Observation time (`T/2` by default).
    pub vartheta: f64,
}

impl WeightParams {
    /// Defaults with `K = 1.1 sup psi`, `λ = 2`, `τ₀ = 1`, `ε = 0.5`.
    pub fn for_psi(psi: &Psi, tau: f64, delta: f64, t_final: f64) -> Self {
        Self {
            lambda: 2.0,
            k_level: 1.1 * psi.sup(),
            tau,
            delta,
            t_final,
            epsilon: 0.5,
            tau0: 1.0,
            vartheta: 0.5 * t_final,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| Err(Error::InvalidParameter { name, reason: reason.to_string() });
        if !(self.lambda >= 1.0) {
            return bad("lambda", "must be >= 1");
        }
        if !(self.tau >= 1.0) {
            return bad("tau", "must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad("delta", "must lie in (0, 1/2]");
        }
        if !(self.t_final > 0.0) {
            return bad("t_final", "must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        if !(self.tau0 >= 1.0) {
            return bad("tau0", "must be >= 1");
        }
        if !(self.vartheta > 0.0 && self.vartheta < self.t_final) {
            return bad("vartheta", "must lie in (0, T)");
        }
        Ok(())
    }
}

/// Where a parameter set sits relative to the admissible region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `τ ≥ τ₀ (T + T²)`
    pub tau_ok: bool,
    /// `τ h / (δ T²)`
    pub mesh_ratio: f64,
    /// `mesh_ratio ≤ ε`
    pub mesh_ok: bool,
}

impl Admissibility {
    pub fn admissible(&self) -> bool {
        self.tau_ok && self.mesh_ok
    }
}

/// `δ` from the coupling `τ₁ / (T² δ) = ε₀ / h`.
pub fn coupled_delta(tau1: f64, eps0: f64, h: f64, t_final: f64) -> Result<f64> {
    let delta = tau1 * h / (t_final * t_final * eps0);
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter { name: "delta", reason: format!("coupled value {delta} is outside (0, 1/2]") });
    }
    Ok(delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    params: WeightParams,
    psi: Psi,
}

impl Weight {
    pub fn new(params: WeightParams, psi: Psi) -> Result<Self> {
        params.validate()?;
        if !(params.k_level > psi.sup()) {
            return Err(Error::InvalidParameter { name: "k_level", reason: format!("must exceed sup psi = {}", psi.sup()) });
        }
        Ok(Self { params, psi })
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    pub fn with_tau_delta(&self, tau: f64, delta: f64) -> Result<Self> {
        Self::new(WeightParams { tau, delta, ..self.params }, self.psi)
    }

    #[inline]
    pub fn phi(&self, x: &[f64]) -> f64 {
        let l = self.params.lambda;
        exp(l * self.psi.value(x)) - exp(l * self.params.k_level)
    }

    #[inline]
    pub(crate) fn theta_at(&self, t: f64) -> f64 {
        let (tf, dl) = (self.params.t_final, self.params.delta);
        // symmetric in t <-> T - t, so both ends round identically
        let u = if t <= 0.5 * tf { t } else { tf - t };
        1.0 / ((u + dl * tf) * (tf + dl * tf - u))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.params.t_final {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange(t))
        }
    }

    pub fn theta(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.theta_at(t))
    }

    /// `θ' = 2 (t - T/2) θ²`.
    pub fn theta_prime(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let th = self.theta_at(t);
        Ok(2.0 * (t - 0.5 * self.params.t_final) * th * th)
    }

    /// `θ'' = 2 θ² + 8 (t - T/2)² θ³`.
    pub fn theta_second(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let th = self.theta_at(t);
        let c = t - 0.5 * self.params.t_final;
        Ok(2.0 * th * th + 8.0 * c * c * th * th * th)
    }

    pub fn s(&self, t: f64) -> Result<f64> {
        Ok(self.params.tau * self.theta(t)?)
    }

    /// `max θ = θ(0) = θ(T) = 1 / (T² δ (1 + δ))`.
    pub fn theta_max(&self) -> f64 {
        let (tf, dl) = (self.params.t_final, self.params.delta);
        1.0 / (tf * tf * dl * (1.0 + dl))
    }

    /// `min θ = θ(T/2) = 4 / (T² (1 + 2δ)²)`.
    pub fn theta_min(&self) -> f64 {
        let (tf, dl) = (self.params.t_final, self.params.delta);
        4.0 / (tf * tf * (1.0 + 2.0 * dl) * (1.0 + 2.0 * dl))
    }

    /// `ln e^{2 s(t) φ(x)}`.
    #[inline]
    pub fn ln_weight(&self, t: f64, phi: f64) -> f64 {
        2.0 * self.params.tau * self.theta_at(t) * phi
    }

    pub fn admissibility(&self, h: f64) -> Admissibility {
        let p = &self.params;
        let mesh_ratio = p.tau * h / (p.delta * p.t_final * p.t_final);
        Admissibility {
            tau_ok: p.tau >= p.tau0 * (p.t_final + p.t_final * p.t_final),
            mesh_ratio,
            mesh_ok: mesh_ratio <= p.epsilon,
        }
    }

    /// `(μ₀, μ₁) = (inf |φ|, sup |φ|)` over the closed grid.
    pub fn phi_bounds(&self, grid: &GridSpec) -> (f64, f64) {
        let d = grid.dim();
        let layout = MeshLayout::new(grid, &MeshId::closed(d)).expect("closed layout");
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for p in layout.points() {
            let v = self.phi(&p.position(grid)[..d]).abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Constant `C` in `e^{2τθ(0)φ} ≤ e^{-C τ / (δ T²)}`, uniform in
    /// `δ ∈ (0, 1/2]`: `C = 4 μ₀ / 3`.
    pub fn endpoint_decay_constant(mu0: f64) -> f64 {
        4.0 * mu0 / 3.0
    }

    pub fn sampled_checks(&self, grid: &GridSpec, samples: usize) -> WeightChecks {
        let tf = self.params.t_final;
        let tau = self.params.tau;
        let th_half = self.theta_min();
        let mut convexity = f64::INFINITY;
        let mut quadratic = f64::INFINITY;
        let mut sqrt_rate = f64::INFINITY;
        let samples = samples.max(2);
        for k in 0..=samples {
            let t = tf * k as f64 / samples as f64;
            let th = self.theta_at(t);
            let c = t - 0.5 * tf;
            let th2 = 2.0 * th * th + 8.0 * c * c * th * th * th;
            convexity = convexity.min(th2 - 2.0 / (tf * tf));
            quadratic = quadratic.min(th - (c * c / (tf * tf) + th_half));
            // θ^{-1/2} d(√θ)/dt = θ' / (2θ) = (t - T/2) θ
            sqrt_rate = sqrt_rate.min(0.5 * tf * th - (c * th).abs());
        }
        let (mu0, _) = self.phi_bounds(grid);
        let c = Self::endpoint_decay_constant(mu0);
        let d = grid.dim();
        let layout = MeshLayout::new(grid, &MeshId::closed(d)).expect("closed layout");
        let bound = -c * tau / (self.params.delta * tf * tf);
        let endpoint = layout
            .points()
            .map(|p| (bound - self.ln_weight(0.0, self.phi(&p.position(grid)[..d]))) / bound.abs())
            .fold(f64::INFINITY, f64::min);
        WeightChecks { convexity_margin: convexity, quadratic_margin: quadratic, sqrt_rate_margin: sqrt_rate, endpoint_margin: endpoint }
    }
}

/// Minimum slack of sampled weight inequalities; each holds iff its
/// margin is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightChecks {
    /// `θ'' - 2/T²`
    pub convexity_margin: f64,
    /// `θ(t) - ((t - T/2)²/T² + θ(T/2))`
    pub quadratic_margin: f64,
    /// `(T/2) θ - |θ^{-1/2} d(√θ)/dt|`
    pub sqrt_rate_margin: f64,
    /// `(-Cτ/(δT²) - 2τθ(0)φ(x)) / |Cτ/(δT²)|`, in log space
    pub endpoint_margin: f64,
}

/// Result of comparing `∫₀ᵀ (τθ)^p e^{2τθφ} dt` with `τ^{p-1/2} e^{2τθ(T/2)φ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussTimeBound {
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    /// `∫ (τθ)^p e^{2τ(θ - θ(T/2))φ} dt`, the integral with the peak factor removed.
    pub scaled_integral: f64,
    pub ratio: f64,
}

/// Time integral of the weight at a fixed `φ < 0`, by step-halving
/// composite Simpson until the relative change is below `1e-8`.
pub fn gauss_time_integral(weight: &Weight, p: f64, phi: f64) -> Result<GaussTimeBound> {
    if !(phi < 0.0) {
        return Err(Error::InvalidParameter { name: "phi", reason: format!("{phi} is not negative") });
    }
    let tau = weight.params.tau;
    let tf = weight.params.t_final;
    let th_half = weight.theta_min();
    let f = |t: f64| {
        let th = weight.theta_at(t);
        powf(tau * th, p) * exp(2.0 * tau * (th - th_half) * phi)
    };
    let simpson = |n: usize| {
        let hstep = tf / n as f64;
        let mut acc = crate::math::CompensatedSum::new();
        acc.add(f(0.0));
        acc.add(f(tf));
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc.add(w * f(k as f64 * hstep));
        }
        acc.value() * hstep / 3.0
    };
    let mut n = 64;
    let mut prev = simpson(n);
    let mut change = f64::INFINITY;
    while n < (1 << 22) {
        n *= 2;
        let next = simpson(n);
        change = ((next - prev) / next).abs();
        prev = next;
        if change <= 1e-8 {
            let ln_lhs = ln(next) + 2.0 * tau * th_half * phi;
            let ln_rhs = (p - 0.5) * ln(tau) + 2.0 * tau * th_half * phi;
            return Ok(GaussTimeBound { ln_lhs, ln_rhs, scaled_integral: next, ratio: exp(ln_lhs - ln_rhs) });
        }
    }
    Err(Error::QuadratureNonConvergence(change))
}

/// [`gauss_time_integral`] at the point `x`.
pub fn gauss_time_bound_check(weight: &Weight, p: f64, x: &[f64]) -> Result<GaussTimeBound> {
    gauss_time_integral(weight, p, weight.phi(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weight(tf: f64, delta: f64, tau: f64) -> Weight {
        let psi = Psi::new(&[0.5], 2.0).unwrap();
        Weight::new(WeightParams::for_psi(&psi, tau, delta, tf), psi).unwrap()
    }

    #[test]
    fn theta_values() {
        let w = weight(1.0, 0.5, 1.0);
        assert!((w.theta(0.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((w.theta(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((w.theta_min() - 1.0).abs() < 1e-15);
        assert_eq!(w.theta_prime(0.5).unwrap(), 0.0);
        assert!(w.theta(1.5).is_err());
        assert!(w.theta(-0.1).is_err());
    }

    #[test]
    fn theta_extremes_match_closed_forms() {
        for &(tf, dl) in &[(1.0, 0.5), (1.0, 0.1), (2.0, 0.25), (0.5, 0.05)] {
            let w = weight(tf, dl, 1.0);
            let t0 = w.theta(0.0).unwrap();
            assert!((t0 - w.theta_max()).abs() <= 1e-14 * t0);
            assert!((w.theta(0.0).unwrap() - w.theta(tf).unwrap()).abs() <= 1e-14 * t0);
            assert!((w.theta(0.5 * tf).unwrap() - w.theta_min()).abs() <= 1e-14 * t0);
        }
    }

    #[test]
    fn theta_derivatives_against_differences() {
        let w = weight(1.0, 0.2, 1.0);
        let e = 1e-5;
        for &t in &[0.1, 0.3, 0.77] {
            let fd = (w.theta(t + e).unwrap() - w.theta(t - e).unwrap()) / (2.0 * e);
            assert!((fd - w.theta_prime(t).unwrap()).abs() < 1e-6 * fd.abs().max(1.0));
            let fd2 = (w.theta_prime(t + e).unwrap() - w.theta_prime(t - e).unwrap()) / (2.0 * e);
            assert!((fd2 - w.theta_second(t).unwrap()).abs() < 1e-5 * fd2.abs());
        }
    }

    #[test]
    fn psi_construction() {
        let g = GridSpec::new(1, 15).unwrap();
        let omega0 = SubBox::cube(1, 0.5, 0.1).unwrap();
        let omega = SubBox::cube(1, 0.5, 0.2).unwrap();
        let (psi, rep) = build_psi(&g, &omega0, &omega, PsiOptions::default()).unwrap();
        let g1 = psi.gradient(&[1.0])[0];
        let g0 = -psi.gradient(&[0.0])[0];
        assert_eq!(g1, -1.0);
        assert_eq!(g0, -1.0);
        assert!(rep.min_psi > 0.0 && rep.max_normal_derivative < 0.0);
        assert!(rep.min_grad_outside >= 2.0 * 0.1 - 1e-12);
    }

    #[test]
    fn psi_positive_in_three_dimensions() {
        for d in 1..=3 {
            let g = GridSpec::new(d, 7).unwrap();
            let omega0 = SubBox::cube(d, 0.5, 0.1).unwrap();
            let omega = SubBox::cube(d, 0.5, 0.25).unwrap();
            let (_, rep) = build_psi(&g, &omega0, &omega, PsiOptions::default()).unwrap();
            assert!(rep.min_psi > 0.0);
        }
    }

    #[test]
    fn psi_rejections() {
        let g = GridSpec::new(1, 15).unwrap();
        let omega = SubBox::cube(1, 0.5, 0.2).unwrap();
        let big = SubBox::cube(1, 0.5, 0.3).unwrap();
        assert!(build_psi(&g, &big, &omega, PsiOptions::default()).is_err());
        let edge0 = SubBox::new(&[0.02], &[0.08]).unwrap();
        let edge = SubBox::new(&[0.01], &[0.3]).unwrap();
        assert!(matches!(build_psi(&g, &edge0, &edge, PsiOptions::default()), Err(Error::WeightAssumption(_))));
    }

    #[test]
    fn phi_is_negative() {
        let w = weight(1.0, 0.25, 3.0);
        let g = GridSpec::new(2, 9).unwrap();
        let psi = Psi::new(&[0.5, 0.5], 2.0).unwrap();
        let w2 = Weight::new(WeightParams::for_psi(&psi, 3.0, 0.25, 1.0), psi).unwrap();
        let (mu0, mu1) = w2.phi_bounds(&g);
        assert!(mu0 > 0.0 && mu1 >= mu0);
        assert!(w.phi(&[0.5]) < 0.0);
    }

    #[test]
    fn sampled_inequalities_hold_for_unit_horizon() {
        let g = GridSpec::new(1, 15).unwrap();
        for &dl in &[0.5, 0.25, 0.05] {
            for &tf in &[0.5, 1.0] {
                let c = weight(tf, dl, 5.0).sampled_checks(&g, 2000);
                assert!(c.convexity_margin >= -1e-9, "{c:?}");
                assert!(c.quadratic_margin >= -1e-12, "{c:?}");
                assert!(c.sqrt_rate_margin >= 0.0, "{c:?}");
                assert!(c.endpoint_margin >= -1e-12, "{c:?}");
            }
        }
    }

    #[test]
    fn zero_phi_rejected() {
        let w = weight(1.0, 0.25, 50.0);
        assert!(gauss_time_integral(&w, 1.0, 0.0).is_err());
    }

    #[test]
    fn admissibility_gate() {
        let w = weight(1.0, 0.25, 3.0);
        let a = w.admissibility(1.0 / 16.0);
        assert!(a.tau_ok);
        assert!((a.mesh_ratio - 0.75).abs() < 1e-15);
        assert!(!a.admissible());
        assert!(w.admissibility(1.0 / 32.0).admissible());
        assert!((coupled_delta(2.0, 0.5, 1.0 / 16.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(coupled_delta(20.0, 0.5, 1.0 / 16.0, 1.0).is_err());
    }

    #[test]
    fn gauss_time_slope() {
        let w = weight(1.0, 0.25, 50.0);
        let phi = w.phi(&[0.2]);
        for &p in &[0.0, 1.0, 3.0] {
            let taus = [50.0, 100.0, 200.0, 400.0, 800.0];
            let pts: alloc::vec::Vec<(f64, f64)> = taus
                .iter()
                .map(|&t| {
                    let r = gauss_time_integral(&w.with_tau_delta(t, 0.25).unwrap(), p, phi).unwrap();
                    (ln(t), ln(r.scaled_integral))
                })
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
            let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|q| (q.0 - mx) * (q.0 - mx)).sum();
            let slope = sxy / sxx;
            assert!((slope - (p - 0.5)).abs() < 0.1, "p={p} slope={slope}");
        }
    }
}
