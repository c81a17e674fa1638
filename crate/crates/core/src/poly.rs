//! Univariate real polynomials: arithmetic, interpolation and root finding.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real polynomial with coefficients in ascending degree. The zero polynomial
/// has no coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

/// A real root and the number of coalesced eigenvalues behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: usize,
}

impl UniPoly {
    /// Drops trailing exact zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(1.0), |acc, r| &acc * &Self::new(vec![-r, 1.0]))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `sum |c_i| |x|^i`, the natural scale for judging `|p(x)|`.
    pub fn abs_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Coefficients in descending order, i.e. `x^n p(1/x)` for `n = deg p`.
    pub fn reversed(&self) -> Self {
        let mut c = self.coeffs.clone();
        c.reverse();
        Self::new(c)
    }

    /// Drops leading coefficients below `rel * max|c|`.
    pub fn trim_relative(&self, rel: f64) -> Self {
        let cut = rel * self.max_abs_coeff();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.abs() <= cut) {
            c.pop();
        }
        Self { coeffs: c }
    }

    /// Complex roots as eigenvalues of the balanced companion matrix.
    pub fn complex_roots(&self) -> Result<Vec<Complex64>> {
        let deg = self.degree().ok_or(Error::ZeroPolynomial)?;
        // exact zero roots are split off so the companion matrix stays nonsingular
        let zeros = self.coeffs.iter().take_while(|c| **c == 0.0).count();
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let n = deg - zeros;
        if n == 0 {
            return Ok(roots);
        }
        let c = &self.coeffs[zeros..];
        let lead = c[n];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i] / lead;
        }
        balance(&mut m);
        roots.extend(m.complex_eigenvalues().iter().copied());
        Ok(roots)
    }

    /// Real roots with multiplicities. Eigenvalues within a small relative
    /// radius are clustered; a cluster whose centroid has imaginary part
    /// below `1e-8 (1 + |re|)` is reported as one real root, polished by
    /// multiplicity-aware Newton iteration.
    pub fn real_roots(&self) -> Result<Vec<RealRoot>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let eig = self.complex_roots()?;
        let mut out = Vec::new();
        for cluster in cluster_roots(&eig, 1e-4) {
            let m = cluster.len();
            let centroid = cluster.iter().sum::<Complex64>() / m as f64;
            if centroid.im.abs() >= 1e-8 * (1.0 + centroid.re.abs()) {
                continue;
            }
            out.push(RealRoot { value: self.polish_root(centroid.re, m), multiplicity: m });
        }
        out.sort_by(|a, b| a.value.total_cmp(&b.value));
        Ok(out)
    }

    /// Real parts of eigenvalues whose imaginary part is below
    /// `imag_rel (1 + |re|)`, each Newton-polished; no clustering.
    pub fn near_real_roots(&self, imag_rel: f64) -> Result<Vec<f64>> {
        let eig = self.complex_roots()?;
        let mut out: Vec<f64> = eig
            .iter()
            .filter(|z| z.im.abs() < imag_rel * (1.0 + z.re.abs()))
            .map(|z| self.polish_root(z.re, 1))
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        Ok(out)
    }

    fn polish_root(&self, mut x: f64, multiplicity: usize) -> f64 {
        let dp = self.derivative();
        let mut best = self.eval(x).abs();
        for _ in 0..20 {
            if best == 0.0 {
                break;
            }
            let d = dp.eval(x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let next = x - multiplicity as f64 * self.eval(x) / d;
            let val = self.eval(next).abs();
            if !(val < best) {
                break;
            }
            x = next;
            best = val;
        }
        x
    }
}

fn cluster_roots(eig: &[Complex64], rel: f64) -> Vec<Vec<Complex64>> {
    let n = eig.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0 + eig[i].norm().max(eig[j].norm());
            if (eig[i] - eig[j]).norm() < rel * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if index[root] == usize::MAX {
            index[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[root]].push(eig[i]);
    }
    groups
}

/// Parlett-Reinsch balancing with power-of-two scaling.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let sq = radix * radix;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sq;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sq;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Polynomial of degree `< samples.len()` through the given points
/// (Bjorck-Pereyra: Newton divided differences, then conversion to the
/// monomial basis).
pub fn interpolate(samples: &[(f64, f64)]) -> Result<UniPoly> {
    let n = samples.len();
    if n == 0 {
        return Ok(UniPoly::zero());
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut c: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if xs.iter().chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("interpolation samples"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if xs[i] == xs[j] {
                return Err(Error::DuplicateNodes);
            }
        }
    }
    for k in 0..n - 1 {
        for i in ((k + 1)..n).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - k - 1]);
        }
    }
    for k in (0..n - 1).rev() {
        for i in k..n - 1 {
            c[i] -= xs[k] * c[i + 1];
        }
    }
    Ok(UniPoly::new(c))
}

/// Recovers a real polynomial of degree `< values.len()` from its values at
/// the roots of unity `exp(2 pi i k / N)`. Also returns the largest imaginary
/// part discarded from the coefficients.
pub fn interpolate_roots_of_unity(values: &[Complex64]) -> (UniPoly, f64) {
    let n = values.len();
    let mut coeffs = Vec::with_capacity(n);
    let mut max_imag: f64 = 0.0;
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in values.iter().enumerate() {
            let angle = -TAU * ((j * k) % n) as f64 / n as f64;
            acc += v * Complex64::from_polar(1.0, angle);
        }
        acc /= n as f64;
        max_imag = max_imag.max(acc.im.abs());
        coeffs.push(acc.re);
    }
    (UniPoly::new(coeffs), max_imag)
}

/// The `n` roots of unity used by [`interpolate_roots_of_unity`].
pub fn unit_circle_nodes(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64))
        .collect()
}

impl Add for &UniPoly {
    type Output = UniPoly;
    fn add(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &UniPoly {
    type Output = UniPoly;
    fn sub(self, rhs: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        UniPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        UniPoly::new(c)
    }
}
