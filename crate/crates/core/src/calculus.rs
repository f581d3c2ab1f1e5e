//! Difference and average operators, discrete integrals and norms, and
//! the product / summation-by-parts identities exposed as residuals.
//!
//! `D_i u(x) = (u(x + h/2 e_i) - u(x - h/2 e_i)) / h` and
//! `A_i u(x) = (u(x + h/2 e_i) + u(x - h/2 e_i)) / 2`. Both move one level
//! along axis `i` (closed -> dual -> interior -> dual'). Primal functions
//! must be closed explicitly with [`MeshFunction::close`] before they are
//! differenced; [`second_diff`] and [`avg_diff`] are the only operators
//! that apply the Dirichlet closure themselves.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::{shift_stencil, trace, MeshFunction, MeshId};
use crate::math::{sqrt, CompensatedSum};
use crate::{Error, Result};

fn shift_apply(u: &MeshFunction, axis: usize, op: impl Fn(f64, f64) -> f64) -> Result<MeshFunction> {
    let grid = *u.grid();
    let (target, stencil) = shift_stencil(&grid, u.mesh(), axis)?;
    let vals = u.values();
    let out: Vec<f64> = stencil.iter().map(|&[lo, hi]| op(vals[lo], vals[hi])).collect();
    MeshFunction::new(grid, target, out)
}

/// `D_i u`.
pub fn diff(u: &MeshFunction, axis: usize) -> Result<MeshFunction> {
    let inv_h = 1.0 / u.grid().h();
    shift_apply(u, axis, |lo, hi| (hi - lo) * inv_h)
}

/// `A_i u`.
pub fn avg(u: &MeshFunction, axis: usize) -> Result<MeshFunction> {
    shift_apply(u, axis, |lo, hi| 0.5 * (hi + lo))
}

fn require_primal(u: &MeshFunction) -> Result<()> {
    u.expect_mesh(&u.grid().primal())
}

/// `D²_ij u = D_i D_j u` for a primal `u` under the Dirichlet closure.
///
/// For `i != j` the result lives on `(W*_j)*_i`; for `i == j` it lives on
/// the primal mesh and equals `(u(x+h e_i) - 2u(x) + u(x-h e_i)) / h²`.
pub fn second_diff(u: &MeshFunction, i: usize, j: usize) -> Result<MeshFunction> {
    require_primal(u)?;
    u.grid().check_axis(i)?;
    u.grid().check_axis(j)?;
    let dj = diff(&u.close(j)?, j)?;
    if i == j {
        diff(&dj, i)
    } else {
        diff(&dj.close(i)?, i)
    }
}

/// `A_i D_i u` for a primal `u` under the Dirichlet closure (primal result).
pub fn avg_diff(u: &MeshFunction, axis: usize) -> Result<MeshFunction> {
    require_primal(u)?;
    avg(&diff(&u.close(axis)?, axis)?, axis)
}

/// `∫ u = h^d Σ u(x)`, compensated, in enumeration order.
pub fn integral(u: &MeshFunction) -> f64 {
    let g = u.grid();
    crate::math::powi(g.h(), g.dim() as i32) * crate::math::sum(u.values().iter().copied())
}

/// `∫_{∂_i W} u = h^(d-1) Σ u(x)`.
pub fn boundary_integral(u: &MeshFunction) -> Result<f64> {
    let g = u.grid();
    if u.mesh().boundary_axis().is_none() {
        return Err(Error::MeshMismatch { expected: "a boundary face".into(), found: format!("{}", u.mesh()) });
    }
    Ok(crate::math::powi(g.h(), g.dim() as i32 - 1) * crate::math::sum(u.values().iter().copied()))
}

pub fn product(u: &MeshFunction, v: &MeshFunction) -> Result<MeshFunction> {
    u.zip_with(v, |a, b| a * b)
}

/// `<u, v> = ∫ u v` over the common mesh.
pub fn inner(u: &MeshFunction, v: &MeshFunction) -> Result<f64> {
    u.same_mesh(v)?;
    let g = u.grid();
    let mut acc = CompensatedSum::new();
    for (a, b) in u.values().iter().zip(v.values()) {
        acc.add(a * b);
    }
    Ok(crate::math::powi(g.h(), g.dim() as i32) * acc.value())
}

pub fn l2_norm(u: &MeshFunction) -> f64 {
    let g = u.grid();
    let mut acc = CompensatedSum::new();
    for a in u.values() {
        acc.add(a * a);
    }
    sqrt(crate::math::powi(g.h(), g.dim() as i32) * acc.value())
}

pub fn linf_norm(u: &MeshFunction) -> f64 {
    u.max_abs()
}

/// `‖u‖²_{H²_h} = ‖u‖² + Σ_i ∫ |D²_i u|² + |A_i D_i u|²` (primal `u`).
pub fn h2_norm(u: &MeshFunction) -> Result<f64> {
    require_primal(u)?;
    let sq = |v: f64| v * v;
    let mut total = sq(l2_norm(u));
    for i in 0..u.grid().dim() {
        total += sq(l2_norm(&second_diff(u, i, i)?));
        total += sq(l2_norm(&avg_diff(u, i)?));
    }
    Ok(sqrt(total))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    /// Present only for primal functions.
    pub h2: Option<f64>,
}

pub fn norms(u: &MeshFunction) -> Norms {
    Norms {
        l2: l2_norm(u),
        linf: linf_norm(u),
        h2: if u.mesh().is_primal() { h2_norm(u).ok() } else { None },
    }
}

/// Residual of an identity together with the magnitude of its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub residual: f64,
    pub scale: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.residual.abs() <= rel_tol * self.scale.max(f64::MIN_POSITIVE)
    }
}

struct IbpTerms {
    interior: MeshFunction,
    face: MeshFunction,
    trace_v: MeshFunction,
    nu: Vec<f64>,
}

fn ibp_setup(u: &MeshFunction, v: &MeshFunction, axis: usize) -> Result<IbpTerms> {
    let grid = *u.grid();
    let d = grid.dim();
    grid.check_axis(axis)?;
    u.expect_mesh(&MeshId::closure(d, axis)?)?;
    v.expect_mesh(&MeshId::dual_star(d, axis)?)?;
    let face_mesh = MeshId::boundary_face(d, axis)?;
    let face = u.restrict(face_mesh)?;
    let nu = face
        .points()
        .iter()
        .map(|p| crate::grid::normal(&grid, axis, p).map(f64::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(IbpTerms { interior: u.restrict(grid.primal())?, face, trace_v: trace(v, axis)?, nu })
}

/// `∫_W u D_i v + ∫_{W*_i} v D_i u - ∫_{∂_i W} u t_r(v) ν_i`, zero by
/// summation by parts. `u` lives on the closure along `axis`, `v` on
/// `W*_axis`.
pub fn ibp_diff_residual(u: &MeshFunction, v: &MeshFunction, axis: usize) -> Result<IdentityResidual> {
    let t = ibp_setup(u, v, axis)?;
    let a = inner(&t.interior, &diff(v, axis)?)?;
    let b = inner(v, &diff(u, axis)?)?;
    let mut boundary = t.face.zip_with(&t.trace_v, |x, y| x * y)?;
    boundary.values_mut().iter_mut().zip(&t.nu).for_each(|(x, n)| *x *= n);
    let c = boundary_integral(&boundary)?;
    Ok(IdentityResidual { residual: a + b - c, scale: a.abs() + b.abs() + c.abs() })
}

/// `∫_W u A_i v - ∫_{W*_i} v A_i u + (h/2) ∫_{∂_i W} u t_r(v)`.
pub fn ibp_avg_residual(u: &MeshFunction, v: &MeshFunction, axis: usize) -> Result<IdentityResidual> {
    let t = ibp_setup(u, v, axis)?;
    let h = u.grid().h();
    let a = inner(&t.interior, &avg(v, axis)?)?;
    let b = inner(v, &avg(u, axis)?)?;
    let c = 0.5 * h * boundary_integral(&t.face.zip_with(&t.trace_v, |x, y| x * y)?)?;
    Ok(IdentityResidual { residual: a - b + c, scale: a.abs() + b.abs() + c.abs() })
}

/// Max-norm residuals of the product rules on the shifted mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizResiduals {
    /// `D_i(uv) - (D_i u A_i v + A_i u D_i v)`
    pub diff_rule: f64,
    /// `A_i(uv) - (A_i u A_i v + h²/4 D_i u D_i v)`
    pub avg_rule: f64,
    /// Largest magnitude among the terms involved.
    pub scale: f64,
}

fn max_abs_diff(a: &MeshFunction, b: &MeshFunction) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn leibniz_residuals(u: &MeshFunction, v: &MeshFunction, axis: usize) -> Result<LeibnizResiduals> {
    u.same_mesh(v)?;
    let h = u.grid().h();
    let uv = product(u, v)?;
    let (du, dv, au, av) = (diff(u, axis)?, diff(v, axis)?, avg(u, axis)?, avg(v, axis)?);
    let duv = diff(&uv, axis)?;
    let auv = avg(&uv, axis)?;
    let rhs_d = du.zip_with(&av, |a, b| a * b)?.zip_with(&au.zip_with(&dv, |a, b| a * b)?, |a, b| a + b)?;
    let rhs_a = au
        .zip_with(&av, |a, b| a * b)?
        .zip_with(&du.zip_with(&dv, |a, b| 0.25 * h * h * a * b)?, |a, b| a + b)?;
    let scale = [&duv, &auv, &du, &dv, &au, &av]
        .iter()
        .map(|f| f.max_abs())
        .fold(0.0, f64::max)
        .max(du.max_abs() * av.max_abs())
        .max(au.max_abs() * dv.max_abs());
    Ok(LeibnizResiduals { diff_rule: max_abs_diff(&duv, &rhs_d), avg_rule: max_abs_diff(&auv, &rhs_a), scale })
}

/// The square special cases of the product rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareRules {
    /// `max |A_i(u²) - (A_i u)² - h²/4 (D_i u)²|`
    pub avg_square: f64,
    /// `max |D_i(u²) - 2 D_i u A_i u|`
    pub diff_square: f64,
    /// `min (A_i(u²) - (A_i u)²)`, nonnegative up to rounding.
    pub min_avg_gap: f64,
    pub scale: f64,
}

pub fn square_rules(u: &MeshFunction, axis: usize) -> Result<SquareRules> {
    let h = u.grid().h();
    let u2 = u.map(|x| x * x);
    let (du, au, au2, du2) = (diff(u, axis)?, avg(u, axis)?, avg(&u2, axis)?, diff(&u2, axis)?);
    let mut avg_square: f64 = 0.0;
    let mut diff_square: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut scale: f64 = 0.0;
    for k in 0..du.len() {
        let (d, a, a2, d2) = (du.values()[k], au.values()[k], au2.values()[k], du2.values()[k]);
        avg_square = avg_square.max((a2 - a * a - 0.25 * h * h * d * d).abs());
        diff_square = diff_square.max((d2 - 2.0 * d * a).abs());
        min_gap = min_gap.min(a2 - a * a);
        scale = scale.max(a2.abs()).max(d2.abs()).max((d * a).abs());
    }
    Ok(SquareRules { avg_square, diff_square, min_avg_gap: min_gap, scale })
}
