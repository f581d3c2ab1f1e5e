//! Coefficients `γ_i`, `b_i`, `c` of the semi-discrete operator.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{avg, diff};
use crate::grid::{describe_position, GridSpec, MeshFunction, MeshId, MeshLayout, MAX_DIM};
use crate::math::sqrt;
use crate::{Error, Result};

pub type ScalarField = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum TimeDerivative {
    /// The field does not depend on time.
    Stationary,
    Analytic(ScalarField),
    Missing,
}

/// A space-time field with an optional analytic time derivative.
#[derive(Clone)]
pub struct Field {
    value: ScalarField,
    dt: TimeDerivative,
    zero: bool,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match (&self.dt, self.zero) {
            (_, true) => "zero",
            (TimeDerivative::Stationary, _) => "stationary",
            (TimeDerivative::Analytic(_), _) => "evolving",
            (TimeDerivative::Missing, _) => "evolving (no derivative)",
        };
        write!(f, "Field({kind})")
    }
}

impl Field {
    pub fn zero() -> Self {
        Self { value: Arc::new(|_, _| 0.0), dt: TimeDerivative::Stationary, zero: true }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        Self { value: Arc::new(move |_, _| c), dt: TimeDerivative::Stationary, zero: false }
    }

    pub fn stationary(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(move |_, x| f(x)), dt: TimeDerivative::Stationary, zero: false }
    }

    pub fn evolving(
        f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        dt: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(f), dt: TimeDerivative::Analytic(Arc::new(dt)), zero: false }
    }

    pub fn evolving_without_derivative(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(f), dt: TimeDerivative::Missing, zero: false }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    /// `∂_t` of the field, `None` when it is unknown.
    pub fn eval_dt(&self, t: f64, x: &[f64]) -> Option<f64> {
        match &self.dt {
            TimeDerivative::Stationary => Some(0.0),
            TimeDerivative::Analytic(d) => Some(d(t, x)),
            TimeDerivative::Missing => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.dt, TimeDerivative::Stationary)
    }

    pub fn has_time_derivative(&self) -> bool {
        !matches!(self.dt, TimeDerivative::Missing)
    }

    /// The time-derivative field itself (zero for stationary fields).
    pub fn derivative(&self) -> Option<Field> {
        match &self.dt {
            TimeDerivative::Stationary => Some(Field::zero()),
            TimeDerivative::Analytic(d) => Some(Field { value: d.clone(), dt: TimeDerivative::Missing, zero: false }),
            TimeDerivative::Missing => None,
        }
    }

    /// `self - other`.
    pub fn minus(&self, other: &Field) -> Field {
        if other.zero {
            return self.clone();
        }
        let (a, b) = (self.value.clone(), other.value.clone());
        let value: ScalarField = Arc::new(move |t, x| a(t, x) - b(t, x));
        let dt = match (&self.dt, &other.dt) {
            (TimeDerivative::Stationary, TimeDerivative::Stationary) => TimeDerivative::Stationary,
            (TimeDerivative::Missing, _) | (_, TimeDerivative::Missing) => TimeDerivative::Missing,
            _ => {
                let (da, db) = (self.derivative().expect("known"), other.derivative().expect("known"));
                TimeDerivative::Analytic(Arc::new(move |t, x| da.eval(t, x) - db.eval(t, x)))
            }
        };
        Field { value, dt, zero: false }
    }
}

/// Time levels at which `reg(Γ)` and the sup norms are sampled.
const TIME_SAMPLES: usize = 32;

#[derive(Clone, Debug)]
pub struct CoefficientFields {
    grid: GridSpec,
    t_final: f64,
    gamma: Vec<Field>,
    b: Vec<Field>,
    c: Field,
    reg: f64,
    b_sup: f64,
    c_sup: f64,
}

impl CoefficientFields {
    pub fn new(grid: GridSpec, t_final: f64, gamma: Vec<Field>, b: Vec<Field>, c: Field) -> Result<Self> {
        let d = grid.dim();
        if gamma.len() != d || b.len() != d {
            return Err(Error::InvalidParameter { name: "coefficients", reason: format!("need {d} diffusion and {d} drift fields") });
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidParameter { name: "t_final", reason: "must be positive".into() });
        }
        let mut out = Self { grid, t_final, gamma, b, c, reg: 0.0, b_sup: 0.0, c_sup: 0.0 };
        out.measure()?;
        Ok(out)
    }

    /// `γ_i ≡ 1`, `b ≡ 0`, `c ≡ 0`.
    pub fn laplacian(grid: GridSpec, t_final: f64) -> Result<Self> {
        let d = grid.dim();
        Self::new(grid, t_final, (0..d).map(|_| Field::constant(1.0)).collect(), (0..d).map(|_| Field::zero()).collect(), Field::zero())
    }

    fn measure(&mut self) -> Result<()> {
        let grid = self.grid;
        let d = grid.dim();
        let closed = MeshId::closed(d);
        let layout = MeshLayout::new(&grid, &closed)?;
        let pos: Vec<[f64; MAX_DIM]> = layout.points().map(|p| p.position(&grid)).collect();
        let primal = grid.primal();
        let layout_p = MeshLayout::new(&grid, &primal)?;
        let mut reg: f64 = 0.0;
        let mut b_sup: f64 = 0.0;
        let mut c_sup: f64 = 0.0;
        for k in 0..=TIME_SAMPLES {
            let t = self.t_final * k as f64 / TIME_SAMPLES as f64;
            for g in &self.gamma {
                let vals: Vec<f64> = pos.iter().map(|x| g.eval(t, &x[..d])).collect();
                for (x, &v) in pos.iter().zip(&vals) {
                    if !(v > 0.0) {
                        return Err(Error::NonPositiveDiffusion { t, location: describe_position(&x[..d]), value: v });
                    }
                }
                let gfun = MeshFunction::new(grid, closed, vals)?;
                // centred gradient A_j D_j γ_i, taken back to the primal mesh
                let mut grad2 = alloc::vec![0.0; grid.primal_len()];
                for j in 0..d {
                    let gj = avg(&diff(&gfun, j)?, j)?.restrict(primal)?;
                    for (acc, v) in grad2.iter_mut().zip(gj.values()) {
                        *acc += v * v;
                    }
                }
                for (q, p) in layout_p.points().enumerate() {
                    let x = p.position(&grid);
                    let v = g.eval(t, &x[..d]);
                    let dtv = g.eval_dt(t, &x[..d]).unwrap_or(0.0).abs();
                    reg = reg.max(v + 1.0 / v + sqrt(grad2[q]) + dtv);
                }
            }
            for x in &pos {
                for bi in &self.b {
                    b_sup = b_sup.max(bi.eval(t, &x[..d]).abs());
                }
                c_sup = c_sup.max(self.c.eval(t, &x[..d]).abs());
            }
        }
        self.reg = reg;
        self.b_sup = b_sup;
        self.c_sup = c_sup;
        Ok(())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn gamma(&self, i: usize) -> &Field {
        &self.gamma[i]
    }

    pub fn drift(&self, i: usize) -> &Field {
        &self.b[i]
    }

    pub fn potential(&self) -> &Field {
        &self.c
    }

    /// `sup (γ_i + 1/γ_i + |∇γ_i| + |∂_t γ_i|)` over grid points and sampled times.
    pub fn reg(&self) -> f64 {
        self.reg
    }

    /// `max_i sup |b_i|`.
    pub fn drift_sup(&self) -> f64 {
        self.b_sup
    }

    pub fn potential_sup(&self) -> f64 {
        self.c_sup
    }

    /// No drift, so the assembled operator is symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.b.iter().all(Field::is_zero)
    }

    pub fn time_independent(&self) -> bool {
        self.gamma.iter().chain(&self.b).chain(core::iter::once(&self.c)).all(Field::is_stationary)
    }

    pub fn has_time_derivatives(&self) -> bool {
        self.gamma.iter().chain(&self.b).chain(core::iter::once(&self.c)).all(Field::has_time_derivative)
    }

    /// Coefficients of `∂_t` of the operator (`∂_t γ_i`, `∂_t b_i`, `∂_t c`);
    /// the diffusion part is not required to be positive.
    pub fn time_derivative(&self) -> Result<DerivativeCoefficients> {
        let take = |f: &Field| f.derivative().ok_or(Error::MissingTimeDerivatives);
        Ok(DerivativeCoefficients {
            gamma: self.gamma.iter().map(take).collect::<Result<_>>()?,
            b: self.b.iter().map(take).collect::<Result<_>>()?,
            c: take(&self.c)?,
        })
    }

    /// Same operator with `c` replaced by `c - p`, i.e. `𝒜_h y + p y`.
    pub fn with_potential(&self, p: Field) -> Result<Self> {
        Self::new(self.grid, self.t_final, self.gamma.clone(), self.b.clone(), self.c.minus(&p))
    }

    pub fn on_grid(&self, grid: GridSpec) -> Result<Self> {
        Self::new(grid, self.t_final, self.gamma.clone(), self.b.clone(), self.c.clone())
    }
}

#[derive(Clone, Debug)]
pub struct DerivativeCoefficients {
    pub gamma: Vec<Field>,
    pub b: Vec<Field>,
    pub c: Field,
}

impl DerivativeCoefficients {
    pub fn is_zero(&self) -> bool {
        self.gamma.iter().chain(&self.b).chain(core::iter::once(&self.c)).all(Field::is_zero)
    }
}
