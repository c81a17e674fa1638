//! Per-goal elimination: builds the fourteen scalar equations relating the
//! distal joints (theta4, theta5, d3) to the proximal ones (theta1, theta2),
//! eliminates the proximal terms linearly, and reduces what remains to a
//! univariate polynomial in `x4 = tan(theta4 / 2)`.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mpoly::{self, MPoly, C1, C2, C4, C5, D3, S1, S2, S4, S5};
use crate::poly::{interpolate_roots_of_unity, unit_circle_nodes, UniPoly};
use crate::types::GoalPose;

pub const NEQ: usize = 14;
pub const NLHS: usize = 9;
pub const NRHS: usize = 8;

pub const LHS_BASIS: [&str; NLHS] = ["d3^2*s5", "d3^2*c5", "d3^2", "d3*s5", "d3*c5", "d3", "s5", "c5", "1"];
pub const RHS_BASIS: [&str; NRHS] = ["s1*s2", "s1*c2", "c1*s2", "c1*c2", "s1", "c1", "s2", "c2"];
pub const EXT_BASIS: [&str; 12] = [
    "d3^3*s5", "d3^3*c5", "d3^3", "d3^2*s5", "d3^2*c5", "d3^2", "d3*s5", "d3*c5", "d3", "s5", "c5", "1",
];

/// Largest accepted entry degree of the reduced system in `x4`.
pub const MAX_ENTRY_DEGREE: usize = 4;
/// Largest accepted condition number of the selected goal rows.
pub const MAX_Q_CONDITION: f64 = 1e10;
/// Relative threshold for trimming leading characteristic coefficients.
pub const TRIM_REL: f64 = 1e-10;
/// Relative imaginary part below which a root counts as real.
pub const REAL_ROOT_REL: f64 = 1e-8;
/// Looser bound for roots that are only tried after refinement on the real
/// determinant.
pub const BORDERLINE_ROOT_REL: f64 = 1e-3;

/// `constant + sin * sin(theta4) + cos * cos(theta4)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrigPoly {
    pub constant: f64,
    pub sin: f64,
    pub cos: f64,
}

impl TrigPoly {
    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.constant + self.sin * s + self.cos * c
    }

    /// `(1 + x^2)` times the entry after `s = 2x/(1+x^2)`, `c = (1-x^2)/(1+x^2)`.
    pub fn half_angle(&self) -> UniPoly {
        UniPoly::new(vec![self.constant + self.cos, 2.0 * self.sin, self.constant - self.cos])
    }

    fn eval_half_angle(&self, z: Complex64) -> Complex64 {
        (z * (self.constant - self.cos) + 2.0 * self.sin) * z + (self.constant + self.cos)
    }

    fn max_abs(&self) -> f64 {
        self.constant.abs().max(self.sin.abs()).max(self.cos.abs())
    }

    fn axpy(&mut self, a: f64, x: &TrigPoly) {
        self.constant += a * x.constant;
        self.sin += a * x.sin;
        self.cos += a * x.cos;
    }
}

/// Both sides of the orientation and position equations.
#[derive(Debug, Clone)]
pub struct TildeSystem {
    pub i_lhs: [MPoly; 3],
    pub p_lhs: [MPoly; 3],
    pub i_rhs: [MPoly; 3],
    pub p_rhs: [MPoly; 3],
}

pub fn build_tilde(goal: &GoalPose) -> TildeSystem {
    let v = |i: usize| MPoly::var(i);
    let k = MPoly::constant;
    let (s4, c4, s5, c5, d3) = (v(S4), v(C4), v(S5), v(C5), v(D3));
    let one_c5 = &k(1.0) + &c5;
    let i_lhs = [&c4 * &s5, c5.clone(), &s4 * &s5];
    let p_lhs = [&(&c4 * &one_c5) + &k(1.0), &(-&d3) - &s5, &s4 * &one_c5];

    let (s1, c1, s2, c2) = (v(S1), v(C1), v(S2), v(C2));
    let [x, y, z] = goal.x;
    let [vx, vy, vz] = goal.v;
    let rotate = |a: [MPoly; 3]| {
        [&(&c2 * &a[0]) + &(&s2 * &a[1]), &(&c2 * &a[1]) - &(&s2 * &a[0]), a[2].clone()]
    };
    let a = [&(&c1 * vx) + &(&s1 * vy), k(vz), &(&s1 * vx) - &(&c1 * vy)];
    let b = [&(&(&c1 * x) + &(&s1 * y)) - &k(1.0), k(z), &(&s1 * x) - &(&c1 * y)];
    TildeSystem { i_lhs, p_lhs, i_rhs: rotate(a), p_rhs: rotate(b) }
}

/// The fourteen equation sides in fixed order: the three orientation rows,
/// the three position rows, `p.p`, `p.I`, `p x I` and `(p.p) I - 2 (p.I) p`.
pub fn equations(i: &[MPoly; 3], p: &[MPoly; 3]) -> Vec<MPoly> {
    let pp = mpoly::dot(p, p);
    let pi = mpoly::dot(p, i);
    let cr = mpoly::cross(p, i);
    let mut out = Vec::with_capacity(NEQ);
    out.extend(i.iter().cloned());
    out.extend(p.iter().cloned());
    out.push(pp.clone());
    out.push(pi.clone());
    out.extend(cr);
    for k in 0..3 {
        out.push(&(&pp * &i[k]) - &(&(&pi * &p[k]) * 2.0));
    }
    out.into_iter().map(|e| e.reduce_trig()).collect()
}

/// `Q * rhs_basis(theta1, theta2) = P(theta4) * lhs_basis(d3, theta5)`.
#[derive(Debug, Clone)]
pub struct PQSystem {
    pub p: [[TrigPoly; NLHS]; NEQ],
    pub q: SMatrix<f64, NEQ, NRHS>,
}

fn lhs_slot(m: &mpoly::Monomial) -> Option<(usize, u8)> {
    if m[S1] + m[C1] + m[S2] + m[C2] > 0 || m[D3] > 2 || m[S5] + m[C5] > 1 || m[S4] + m[C4] > 1 {
        return None;
    }
    let trig = if m[S5] == 1 { 0 } else if m[C5] == 1 { 1 } else { 2 };
    let col = (2 - m[D3] as usize) * 3 + trig;
    let part = if m[S4] == 1 { 1 } else if m[C4] == 1 { 2 } else { 0 };
    Some((col, part))
}

fn rhs_slot(m: &mpoly::Monomial) -> Option<Option<usize>> {
    if m[S4] + m[C4] + m[S5] + m[C5] + m[D3] > 0 || m[S1] + m[C1] > 1 || m[S2] + m[C2] > 1 {
        return None;
    }
    let first = if m[S1] == 1 { Some(0) } else if m[C1] == 1 { Some(1) } else { None };
    let second = if m[S2] == 1 { Some(0) } else if m[C2] == 1 { Some(1) } else { None };
    Some(match (first, second) {
        (Some(a), Some(b)) => Some(2 * a + b),
        (Some(a), None) => Some(4 + a),
        (None, Some(b)) => Some(6 + b),
        (None, None) => None,
    })
}

pub fn build_pq(goal: &GoalPose) -> Result<PQSystem> {
    let t = build_tilde(goal);
    let lhs = equations(&t.i_lhs, &t.p_lhs);
    let rhs = equations(&t.i_rhs, &t.p_rhs);
    let mut p = [[TrigPoly::default(); NLHS]; NEQ];
    let mut q = SMatrix::<f64, NEQ, NRHS>::zeros();
    for (row, (l, r)) in lhs.iter().zip(rhs.iter()).enumerate() {
        for (m, c) in l.terms() {
            let (col, part) = lhs_slot(m)
                .ok_or_else(|| Error::StructureMismatch(format!("row {row}: {}", mpoly::monomial_name(m))))?;
            let e = &mut p[row][col];
            match part {
                0 => e.constant += c,
                1 => e.sin += c,
                _ => e.cos += c,
            }
        }
        for (m, c) in r.drop_small(1e-13).terms() {
            match rhs_slot(m) {
                Some(Some(col)) => q[(row, col)] += c,
                Some(None) => p[row][NLHS - 1].constant -= c,
                None => {
                    return Err(Error::StructureMismatch(format!(
                        "row {row}: {}",
                        mpoly::monomial_name(m)
                    )))
                }
            }
        }
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("goal coefficient matrix"));
    }
    Ok(PQSystem { p, q })
}

impl PQSystem {
    pub fn p_at(&self, theta4: f64) -> SMatrix<f64, NEQ, NLHS> {
        let (s, c) = theta4.sin_cos();
        SMatrix::from_fn(|i, j| {
            let e = &self.p[i][j];
            e.constant + e.sin * s + e.cos * c
        })
    }

    /// Per-row scale factors bringing each equation to unit magnitude.
    pub fn row_scales(&self) -> [f64; NEQ] {
        let mut s = [1.0; NEQ];
        for (i, si) in s.iter_mut().enumerate() {
            let m = self.p[i]
                .iter()
                .map(TrigPoly::max_abs)
                .chain(self.q.row(i).iter().map(|v| v.abs()))
                .fold(0.0, f64::max);
            if m > 0.0 {
                *si = 1.0 / m;
            }
        }
        s
    }

    /// Largest violation of the fourteen equations at the given joints.
    pub fn residual(&self, theta1: f64, theta2: f64, d3: f64, theta4: f64, theta5: f64) -> f64 {
        let l = self.p_at(theta4) * lhs_vector(d3, theta5);
        let r = self.q * rhs_vector(theta1, theta2);
        (l - r).amax()
    }
}

pub fn lhs_vector(d3: f64, theta5: f64) -> SVector<f64, NLHS> {
    let (s, c) = theta5.sin_cos();
    let d2 = d3 * d3;
    SVector::from([d2 * s, d2 * c, d2, d3 * s, d3 * c, d3, s, c, 1.0])
}

pub fn rhs_vector(theta1: f64, theta2: f64) -> SVector<f64, NRHS> {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    SVector::from([s1 * s2, s1 * c2, c1 * s2, c1 * c2, s1, c1, s2, c2])
}

pub fn extended_vector(d3: f64, theta5: f64) -> SVector<f64, 12> {
    let l = lhs_vector(d3, theta5);
    let mut e = SVector::<f64, 12>::zeros();
    for k in 0..3 {
        e[k] = l[k] * d3;
    }
    e.fixed_rows_mut::<9>(3).copy_from(&l);
    e
}

/// The six equations left after eliminating the proximal terms.
#[derive(Debug, Clone)]
pub struct SigmaMatrix {
    pub entries: [[TrigPoly; NLHS]; 6],
    /// Rows used to solve for the proximal terms.
    pub selected: [usize; 8],
    /// Rows forming the reduced system.
    pub remaining: [usize; 6],
    /// Condition number of the selected (row-scaled) goal block.
    pub q_condition: f64,
    /// Maximum entry degree in `x4`.
    pub entry_degree: usize,
}

impl SigmaMatrix {
    /// Wraps raw entries; row bookkeeping is left empty.
    pub fn from_entries(entries: [[TrigPoly; NLHS]; 6]) -> Result<Self> {
        let entry_degree = entries
            .iter()
            .flatten()
            .filter_map(|e| e.half_angle().degree())
            .max()
            .unwrap_or(0);
        if entry_degree > MAX_ENTRY_DEGREE {
            return Err(Error::DegreeBound(entry_degree));
        }
        Ok(Self { entries, selected: [0; 8], remaining: [0; 6], q_condition: 1.0, entry_degree })
    }

    pub fn entry_poly(&self, i: usize, j: usize) -> UniPoly {
        self.entries[i][j].half_angle()
    }

    pub fn eval(&self, theta4: f64) -> SMatrix<f64, 6, NLHS> {
        SMatrix::from_fn(|i, j| self.entries[i][j].eval(theta4))
    }
}

/// Picks eight well-conditioned rows of `Q` by pivoted Gram-Schmidt.
fn select_rows(q: &SMatrix<f64, NEQ, NRHS>) -> [usize; 8] {
    let mut rows: Vec<SVector<f64, NRHS>> = (0..NEQ).map(|i| q.row(i).transpose()).collect();
    let mut used = [false; NEQ];
    let mut chosen = [0usize; 8];
    for slot in chosen.iter_mut() {
        let (best, _) = (0..NEQ)
            .filter(|i| !used[*i])
            .map(|i| (i, rows[i].norm()))
            .fold((usize::MAX, -1.0), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
        used[best] = true;
        *slot = best;
        let n = rows[best].norm();
        if n == 0.0 {
            continue;
        }
        let u = rows[best] / n;
        for i in 0..NEQ {
            if !used[i] {
                let proj = rows[i].dot(&u);
                rows[i] -= u * proj;
            }
        }
    }
    chosen
}

pub fn reduce_to_sigma(sys: &PQSystem) -> Result<SigmaMatrix> {
    let scales = sys.row_scales();
    let q = SMatrix::<f64, NEQ, NRHS>::from_fn(|i, j| sys.q[(i, j)] * scales[i]);
    let selected = select_rows(&q);
    let mut remaining = [0usize; 6];
    let mut k = 0;
    for i in 0..NEQ {
        if !selected.contains(&i) {
            remaining[k] = i;
            k += 1;
        }
    }
    let qa = SMatrix::<f64, 8, 8>::from_fn(|i, j| q[(selected[i], j)]);
    let qb = SMatrix::<f64, 6, 8>::from_fn(|i, j| q[(remaining[i], j)]);
    let sv = qa.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < MAX_Q_CONDITION) {
        return Err(Error::SingularQ { cond });
    }
    // M = Q_B Q_A^{-1}, from Q_A^T M^T = Q_B^T
    let mt = qa
        .transpose()
        .lu()
        .solve(&qb.transpose())
        .ok_or(Error::SingularQ { cond: f64::INFINITY })?;
    let mut entries = [[TrigPoly::default(); NLHS]; 6];
    for i in 0..6 {
        let bi = remaining[i];
        for j in 0..NLHS {
            let mut e = sys.p[bi][j];
            e.constant *= scales[bi];
            e.sin *= scales[bi];
            e.cos *= scales[bi];
            for k in 0..8 {
                let ak = selected[k];
                e.axpy(-mt[(k, i)] * scales[ak], &sys.p[ak][j]);
            }
            entries[i][j] = e;
        }
    }
    let mut sigma = SigmaMatrix::from_entries(entries)?;
    sigma.selected = selected;
    sigma.remaining = remaining;
    sigma.q_condition = cond;
    Ok(sigma)
}

/// The reduced system and its copy multiplied by `d3`, over the twelve-term
/// extended basis.
#[derive(Debug, Clone)]
pub struct Sigma12 {
    pub sigma: SigmaMatrix,
}

pub fn half_angle_and_expand(sigma: &SigmaMatrix) -> Sigma12 {
    Sigma12 { sigma: sigma.clone() }
}

impl Sigma12 {
    fn place<T: Copy>(i: usize, j: usize, f: impl Fn(usize, usize) -> T, zero: T) -> T {
        if i < 6 {
            if j < NLHS {
                f(i, j)
            } else {
                zero
            }
        } else if j >= 3 {
            f(i - 6, j - 3)
        } else {
            zero
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> UniPoly {
        if (i < 6 && j < NLHS) || (i >= 6 && j >= 3) {
            let (r, c) = if i < 6 { (i, j) } else { (i - 6, j - 3) };
            self.sigma.entry_poly(r, c)
        } else {
            UniPoly::zero()
        }
    }

    pub fn entry_degree(&self) -> usize {
        self.sigma.entry_degree
    }

    /// Numeric matrix at joint angle `theta4`, without the half-angle factor.
    pub fn eval_angle(&self, theta4: f64) -> SMatrix<f64, 12, 12> {
        let s = self.sigma.eval(theta4);
        SMatrix::from_fn(|i, j| Self::place(i, j, |r, c| s[(r, c)], 0.0))
    }

    /// Polynomial matrix evaluated at complex `x4`.
    pub fn eval_complex(&self, z: Complex64) -> SMatrix<Complex64, 12, 12> {
        let e = &self.sigma.entries;
        SMatrix::from_fn(|i, j| {
            Self::place(i, j, |r, c| e[r][c].eval_half_angle(z), Complex64::new(0.0, 0.0))
        })
    }

    pub fn eval_x4(&self, x4: f64) -> SMatrix<f64, 12, 12> {
        self.eval_complex(Complex64::new(x4, 0.0)).map(|z| z.re)
    }
}

/// Determinant of the expanded system as a polynomial in `x4`.
#[derive(Debug, Clone)]
pub struct CharPoly {
    /// All interpolated coefficients up to the nominal degree bound.
    pub raw: UniPoly,
    /// Leading coefficients below the relative threshold removed.
    pub trimmed: UniPoly,
    pub nominal_degree: usize,
}

pub fn characteristic_polynomial(s12: &Sigma12) -> Result<CharPoly> {
    let nominal = 12 * s12.entry_degree().max(1);
    let nodes = unit_circle_nodes(nominal + 1);
    let mut hadamard: f64 = 0.0;
    let values: Vec<Complex64> = nodes
        .iter()
        .map(|z| {
            let m = s12.eval_complex(*z);
            let bound: f64 = (0..12).map(|i| m.row(i).norm()).product();
            hadamard = hadamard.max(bound);
            m.determinant()
        })
        .collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("characteristic determinant"));
    }
    let (raw, _) = interpolate_roots_of_unity(&values);
    if raw.max_abs_coeff() <= 1e-13 * hadamard {
        return Err(Error::IdenticallyZeroDeterminant);
    }
    let trimmed = raw.trim_relative(TRIM_REL);
    Ok(CharPoly { raw, trimmed, nominal_degree: nominal })
}

impl CharPoly {
    /// `x^n p(1/x)` for the nominal degree `n`, trimmed like `trimmed`.
    pub fn reversed(&self) -> UniPoly {
        let mut c = self.raw.coeffs().to_vec();
        c.resize(self.nominal_degree + 1, 0.0);
        c.reverse();
        UniPoly::new(c).trim_relative(TRIM_REL)
    }

    /// Root residual `|p(x)| / |c|` for `|x| <= 1`, and the same ratio for the
    /// reversed polynomial at `1/x` otherwise.
    pub fn root_residual(&self, x4: f64) -> f64 {
        let norm = self.raw.norm();
        if norm == 0.0 {
            return 0.0;
        }
        if x4.abs() <= 1.0 {
            self.raw.eval(x4).abs() / norm
        } else {
            let mut c = self.raw.coeffs().to_vec();
            c.resize(self.nominal_degree + 1, 0.0);
            c.reverse();
            UniPoly::new(c).eval(1.0 / x4).abs() / norm
        }
    }

    /// Candidate `theta4` values: real roots with `|x4| <= 1` from the
    /// polynomial itself and the remaining ones from its reversal in `1/x4`,
    /// so that roots near `theta4 = pi` survive trimming. Roots whose
    /// imaginary part is below `imag_rel (1 + |re|)` count as real.
    pub fn candidate_angles(&self, imag_rel: f64) -> Vec<f64> {
        let near_real = |z: &Complex64| z.im.abs() < imag_rel * (1.0 + z.re.abs());
        let mut out = Vec::new();
        if let Ok(roots) = self.trimmed.complex_roots() {
            out.extend(roots.iter().filter(|z| z.norm() <= 1.0 && near_real(z)).map(|z| 2.0 * z.re.atan()));
        }
        if let Ok(roots) = self.reversed().complex_roots() {
            for w in roots.iter().filter(|w| w.norm() < 1.0 && near_real(w)) {
                let w = w.re;
                let theta = if w == 0.0 {
                    std::f64::consts::PI
                } else {
                    2.0 * (1.0 / w).atan()
                };
                out.push(theta);
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }
}
