//! Compressed sparse rows and the two Krylov solvers used by the time stepper.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{sqrt, CompensatedSum};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row builder; entries of a row must be pushed before the next row starts.
#[derive(Debug, Default)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self { n, row_ptr, cols: Vec::new(), vals: Vec::new(), row: Vec::new() }
    }

    /// Add `v` at column `col` of the current row (duplicates are summed).
    pub fn add(&mut self, col: usize, v: f64) {
        debug_assert!(col < self.n);
        self.row.push((col, v));
    }

    pub fn finish_row(&mut self) {
        self.row.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.row {
            if last == Some(c) {
                *self.vals.last_mut().expect("entry") += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.row.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> Csr {
        assert_eq!(self.row_ptr.len(), self.n + 1, "every row must be finished");
        Csr { n: self.n, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals }
    }
}

impl Csr {
    pub fn identity(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), cols: (0..n).collect(), vals: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map(|e| e.1).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.cols {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let k = next[c];
                cols[k] = r;
                vals[k] = v;
                next[c] += 1;
            }
        }
        Csr { n: self.n, row_ptr: counts, cols, vals }
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Csr {
        let mut b = CsrBuilder::new(self.n);
        for r in 0..self.n {
            b.add(r, alpha);
            for (c, v) in self.row(r) {
                b.add(c, beta * v);
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_rc - a_cr|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Relative residual target `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 5000 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

fn residual(a: &Csr, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.matvec(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

fn jacobi(a: &Csr) -> Vec<f64> {
    a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect()
}

/// Jacobi-preconditioned conjugate gradients; `x` holds the initial guess.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], opts: KrylovOptions) -> Result<SolveStats> {
    let n = a.dim();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let minv = jacobi(a);
    let mut r = vec![0.0; n];
    residual(a, x, b, &mut r);
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bn;
    for it in 0..opts.max_iter {
        if rel <= opts.tol {
            return Ok(SolveStats { iterations: it, residual: rel });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm(&r) / bn;
    }
    // recheck with the true residual before giving up
    residual(a, x, b, &mut r);
    rel = norm(&r) / bn;
    if rel <= opts.tol {
        return Ok(SolveStats { iterations: opts.max_iter, residual: rel });
    }
    Err(Error::LinearSolverNonConvergence { iterations: opts.max_iter, residual: rel })
}

/// Jacobi-preconditioned BiCGSTAB for nonsymmetric systems.
pub fn bicgstab(a: &Csr, b: &[f64], x: &mut [f64], opts: KrylovOptions) -> Result<SolveStats> {
    let n = a.dim();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let minv = jacobi(a);
    let mut r = vec![0.0; n];
    let mut restarts = 0;
    let mut total = 0;
    'restart: loop {
        residual(a, x, b, &mut r);
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut ph = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut sh = vec![0.0; n];
        let mut t = vec![0.0; n];
        let mut rel = norm(&r) / bn;
        while total < opts.max_iter {
            if rel <= opts.tol {
                residual(a, x, b, &mut r);
                let true_rel = norm(&r) / bn;
                if true_rel <= opts.tol {
                    return Ok(SolveStats { iterations: total, residual: true_rel });
                }
                restarts += 1;
                if restarts > 5 {
                    return Err(Error::LinearSolverNonConvergence { iterations: total, residual: true_rel });
                }
                continue 'restart;
            }
            total += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                restarts += 1;
                if restarts > 5 {
                    break 'restart;
                }
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                ph[i] = p[i] * minv[i];
            }
            a.matvec(&ph, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 {
                restarts += 1;
                if restarts > 5 {
                    break 'restart;
                }
                continue 'restart;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / bn <= opts.tol {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                rel = 0.0;
                continue;
            }
            for i in 0..n {
                sh[i] = s[i] * minv[i];
            }
            a.matvec(&sh, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm(&r) / bn;
        }
        break;
    }
    residual(a, x, b, &mut r);
    let rel = norm(&r) / bn;
    if rel <= opts.tol {
        return Ok(SolveStats { iterations: total, residual: rel });
    }
    Err(Error::LinearSolverNonConvergence { iterations: total, residual: rel })
}

/// CG when `symmetric`, BiCGSTAB otherwise.
pub fn solve(a: &Csr, b: &[f64], x: &mut [f64], symmetric: bool, opts: KrylovOptions) -> Result<SolveStats> {
    if symmetric {
        pcg(a, b, x, opts)
    } else {
        bicgstab(a, b, x, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize, skew: f64) -> Csr {
        let mut b = CsrBuilder::new(n);
        for r in 0..n {
            b.add(r, 3.0);
            if r > 0 {
                b.add(r - 1, -1.0 - skew);
            }
            if r + 1 < n {
                b.add(r + 1, -1.0 + skew);
            }
            b.finish_row();
        }
        b.build()
    }

    #[test]
    fn builder_sums_duplicates() {
        let mut b = CsrBuilder::new(2);
        b.add(1, 1.0);
        b.add(0, 2.0);
        b.add(1, 0.5);
        b.finish_row();
        b.finish_row();
        let a = b.build();
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn transpose_roundtrip() {
        let a = laplacian(7, 0.3);
        let t = a.transpose();
        assert_eq!(t.get(0, 1), a.get(1, 0));
        assert_eq!(t.transpose(), a);
        assert!(a.asymmetry() > 0.5);
        assert_eq!(laplacian(5, 0.0).asymmetry(), 0.0);
    }

    #[test]
    fn krylov_solves() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        for &(skew, sym) in &[(0.0, true), (0.4, false), (0.0, false)] {
            let a = laplacian(40, skew);
            let b = a.apply(&xs);
            let mut x = vec![0.0; 40];
            let st = solve(&a, &b, &mut x, sym, KrylovOptions::default()).unwrap();
            assert!(st.residual <= 1e-12);
            for (u, v) in x.iter().zip(&xs) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian(5, 0.0);
        let mut x = vec![1.0; 5];
        pcg(&a, &[0.0; 5], &mut x, KrylovOptions::default()).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nonconvergence_is_reported() {
        let a = laplacian(30, 0.2);
        let b = vec![1.0; 30];
        let mut x = vec![0.0; 30];
        let r = bicgstab(&a, &b, &mut x, KrylovOptions { tol: 1e-14, max_iter: 1 });
        assert!(matches!(r, Err(Error::LinearSolverNonConvergence { .. })));
    }
}
