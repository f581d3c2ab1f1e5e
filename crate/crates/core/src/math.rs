//! Float helpers for a `no_std` build: `libm` wrappers, compensated
//! summation and log-space accumulation of weighted squares.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, carry: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// A nonnegative real stored by its natural logarithm (`-inf` is zero).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogReal(f64);

impl LogReal {
    pub const ZERO: LogReal = LogReal(f64::NEG_INFINITY);

    pub fn from_ln(ln: f64) -> Self {
        LogReal(ln)
    }

    pub fn from_value(v: f64) -> Self {
        debug_assert!(v >= 0.0);
        if v > 0.0 {
            LogReal(ln(v))
        } else {
            Self::ZERO
        }
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Plain value; underflows to 0 for very small logarithms.
    pub fn value(self) -> f64 {
        exp(self.0)
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn add(self, other: LogReal) -> LogReal {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if hi == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogReal(hi + libm::log1p(exp(lo - hi)))
    }

    pub fn scale(self, factor: f64) -> LogReal {
        if factor == 0.0 {
            Self::ZERO
        } else {
            LogReal(self.0 + ln(factor))
        }
    }

    pub fn mul(self, other: LogReal) -> LogReal {
        if self.is_zero() || other.is_zero() {
            Self::ZERO
        } else {
            LogReal(self.0 + other.0)
        }
    }

    /// Decimal scientific notation that keeps exponents outside the `f64`
    /// range, e.g. `2.718281828459045e-1200`.
    pub fn to_sci_string(self) -> alloc::string::String {
        if self.is_zero() {
            return "0".into();
        }
        let v = self.value();
        if v.is_normal() {
            return alloc::format!("{v:.15e}");
        }
        let l10 = self.0 / core::f64::consts::LN_10;
        let mut e = libm::floor(l10);
        let mut mant = libm::pow(10.0, l10 - e);
        if mant >= 9.999_999_999_999_999 {
            mant /= 10.0;
            e += 1.0;
        }
        alloc::format!("{mant:.15}e{}", e as i64)
    }

    /// `self / other` as a plain number; `None` when `other` is zero.
    pub fn ratio(self, other: LogReal) -> Option<f64> {
        if other.is_zero() {
            None
        } else if self.is_zero() {
            Some(0.0)
        } else {
            Some(exp(self.0 - other.0))
        }
    }
}

impl core::iter::Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> Self {
        iter.fold(LogReal::ZERO, LogReal::add)
    }
}

/// Streaming sum of `exp(ln_weight) * value` with `value >= 0`, kept
/// relative to the running maximum log-weight so that weights far below
/// the normal range never underflow before they are compared.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    pivot: f64,
    acc: CompensatedSum,
    dropped: usize,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Relative contributions below this are dropped (counted in `dropped`).
const DROP_LN: f64 = -700.0;

impl LogAccumulator {
    pub const fn new() -> Self {
        Self { pivot: f64::NEG_INFINITY, acc: CompensatedSum::new(), dropped: 0 }
    }

    #[inline]
    pub fn add(&mut self, ln_weight: f64, value: f64) {
        debug_assert!(value >= 0.0 || value.is_nan());
        if value == 0.0 || ln_weight == f64::NEG_INFINITY {
            return;
        }
        let l = ln_weight + ln(value);
        if l > self.pivot {
            if self.pivot != f64::NEG_INFINITY {
                let rescale = exp(self.pivot - l);
                let old = self.acc.value() * rescale;
                self.acc = CompensatedSum::new();
                self.acc.add(old);
            }
            self.pivot = l;
        }
        let rel = l - self.pivot;
        if rel < DROP_LN {
            self.dropped += 1;
        } else {
            self.acc.add(exp(rel));
        }
    }

    pub fn merge(&mut self, other: &LogAccumulator) {
        let total = self.total().add(other.total());
        self.dropped += other.dropped;
        self.pivot = total.ln();
        self.acc = CompensatedSum::new();
        if !total.is_zero() {
            self.acc.add(1.0);
        }
    }

    pub fn total(&self) -> LogReal {
        let v = self.acc.value();
        if v <= 0.0 || self.pivot == f64::NEG_INFINITY {
            LogReal::ZERO
        } else {
            LogReal(self.pivot + ln(v))
        }
    }

    /// Upper bound on the mass discarded because it was negligible
    /// relative to the running maximum.
    pub fn dropped_bound(&self) -> LogReal {
        if self.dropped == 0 || self.pivot == f64::NEG_INFINITY {
            LogReal::ZERO
        } else {
            LogReal(self.pivot + DROP_LN + ln(self.dropped as f64))
        }
    }
}

/// Composite trapezoid weights on `steps` uniform intervals of width `dt`.
pub fn trapezoid_weight(m: usize, steps: usize, dt: f64) -> f64 {
    if m == 0 || m == steps {
        0.5 * dt
    } else {
        dt
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = sum(points.iter().map(|p| p.0)) / n;
    let my = sum(points.iter().map(|p| p.1)) / n;
    let sxy = sum(points.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let sxx = sum(points.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_strings() {
        assert_eq!(LogReal::ZERO.to_sci_string(), "0");
        assert_eq!(LogReal::from_value(2500.0).to_sci_string(), "2.500000000000000e3");
        let tiny = LogReal::from_ln(-2000.0 * core::f64::consts::LN_10);
        assert!(tiny.to_sci_string().ends_with("e-2000"));
        assert_eq!(LogReal::from_value(2.0).mul(LogReal::from_value(3.0)).to_sci_string(), "6.000000000000000e0");
    }

    #[test]
    fn slope_of_a_line() {
        let pts = [(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)];
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn log_accumulator_matches_plain_sum() {
        let mut acc = LogAccumulator::new();
        let mut plain = 0.0;
        for k in 0..50 {
            let w = -(k as f64) * 0.3;
            let v = 1.0 + k as f64;
            acc.add(w, v);
            plain += exp(w) * v;
        }
        assert!((acc.total().value() - plain).abs() < 1e-13 * plain);
    }

    #[test]
    fn log_accumulator_survives_underflow() {
        let mut acc = LogAccumulator::new();
        acc.add(-2000.0, 2.0);
        acc.add(-2000.0, 3.0);
        assert!((acc.total().ln() - (-2000.0 + ln(5.0))).abs() < 1e-12);
        assert_eq!(acc.total().value(), 0.0);
    }

    #[test]
    fn log_real_ratio() {
        let a = LogReal::from_ln(-1000.0);
        let b = LogReal::from_ln(-1001.0);
        assert!((a.ratio(b).unwrap() - core::f64::consts::E).abs() < 1e-12);
        assert_eq!(LogReal::ZERO.ratio(b), Some(0.0));
        assert_eq!(a.ratio(LogReal::ZERO), None);
    }
}
