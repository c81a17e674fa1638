//! Sparse polynomials in the sines, cosines and prismatic extension of the
//! arm joints, with numeric coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub const NVARS: usize = 9;

/// Variable indices. Sine/cosine pairs are adjacent.
pub const S1: usize = 0;
pub const C1: usize = 1;
pub const S2: usize = 2;
pub const C2: usize = 3;
pub const S4: usize = 4;
pub const C4: usize = 5;
pub const S5: usize = 6;
pub const C5: usize = 7;
pub const D3: usize = 8;

const NAMES: [&str; NVARS] = ["s1", "c1", "s2", "c2", "s4", "c4", "s5", "c5", "d3"];

pub type Monomial = [u8; NVARS];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, f64>,
}

pub fn monomial(vars: &[usize]) -> Monomial {
    let mut m = [0u8; NVARS];
    for &v in vars {
        m[v] += 1;
    }
    m
}

pub fn monomial_name(m: &Monomial) -> String {
    let parts: Vec<String> = m
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0)
        .map(|(i, e)| if *e == 1 { NAMES[i].to_string() } else { format!("{}^{e}", NAMES[i]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::term(c, [0; NVARS])
    }

    pub fn var(v: usize) -> Self {
        Self::term(1.0, monomial(&[v]))
    }

    pub fn term(c: f64, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(*m, c * s);
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(m).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&m);
        }
    }

    pub fn eval(&self, x: &[f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter()
                    .zip(x.iter())
                    .fold(*c, |acc, (e, xv)| acc * xv.powi(*e as i32))
            })
            .sum()
    }

    /// Rewrites every `s^2` as `1 - c^2` for each sine/cosine pair until all
    /// sine exponents are at most one.
    pub fn reduce_trig(&self) -> Self {
        let mut cur = self.clone();
        loop {
            let mut out = Self::zero();
            let mut changed = false;
            for (m, c) in &cur.terms {
                match (0..4).map(|k| 2 * k).find(|&s| m[s] >= 2) {
                    Some(s) => {
                        changed = true;
                        let mut a = *m;
                        a[s] -= 2;
                        out.add_term(a, *c);
                        a[s + 1] += 2;
                        out.add_term(a, -*c);
                    }
                    None => out.add_term(*m, *c),
                }
            }
            cur = out;
            if !changed {
                return cur;
            }
        }
    }

    /// Drops terms with `|c| <= rel * max|c|`.
    pub fn drop_small(&self, rel: f64) -> Self {
        let cut = rel * self.max_abs_coeff();
        Self {
            terms: self.terms.iter().filter(|(_, c)| c.abs() > cut).map(|(m, c)| (*m, *c)).collect(),
        }
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, c)| format!("{c}*{}", monomial_name(m))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, *c);
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -*c);
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(-1.0)
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let mut m = *ma;
                for i in 0..NVARS {
                    m[i] += mb[i];
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl Mul<f64> for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: f64) -> MPoly {
        self.scale(rhs)
    }
}

pub fn dot(a: &[MPoly; 3], b: &[MPoly; 3]) -> MPoly {
    &(&(&a[0] * &b[0]) + &(&a[1] * &b[1])) + &(&a[2] * &b[2])
}

pub fn cross(a: &[MPoly; 3], b: &[MPoly; 3]) -> [MPoly; 3] {
    [
        &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
        &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
        &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagorean_identity_reduces_to_one() {
        let s = MPoly::var(S4);
        let c = MPoly::var(C4);
        let p = &(&s * &s) + &(&c * &c);
        assert_eq!(p.reduce_trig(), MPoly::constant(1.0));
    }

    #[test]
    fn cube_of_sine() {
        let s = MPoly::var(S5);
        let p = (&(&s * &s) * &s).reduce_trig();
        // s^3 = s - s c^2
        assert_eq!(p.coeff(&monomial(&[S5])), 1.0);
        assert_eq!(p.coeff(&monomial(&[S5, C5, C5])), -1.0);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn eval_and_cross() {
        let a = [MPoly::var(S1), MPoly::var(C1), MPoly::constant(0.0)];
        let b = [MPoly::constant(0.0), MPoly::constant(0.0), MPoly::constant(1.0)];
        let c = cross(&a, &b);
        let mut x = [0.0; NVARS];
        x[S1] = 0.6;
        x[C1] = 0.8;
        assert_eq!(c[0].eval(&x), 0.8);
        assert_eq!(c[1].eval(&x), -0.6);
        assert!(c[2].is_empty());
        assert_eq!(dot(&a, &a).eval(&x), 1.0);
    }

    #[test]
    fn drop_small_terms() {
        let p = &MPoly::constant(1.0) + &MPoly::term(1e-18, monomial(&[C2]));
        assert_eq!(p.drop_small(1e-14), MPoly::constant(1.0));
    }
}
