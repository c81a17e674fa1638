//! Recovery of full joint solutions from the roots of the characteristic
//! polynomial.

use std::f64::consts::TAU;

use nalgebra::{SMatrix, SVector};

use crate::elimination::{lhs_vector, PQSystem, Sigma12, NEQ, NRHS};
use crate::error::{Error, Result};
use crate::kinematics::{dh_to_dubins, fk_residual, refine_path};
use crate::types::{
    dedup_and_sort, CandidateRecord, CaseTag, CscPath, Diagnostics, GoalPose, JointValues,
    SolutionKind, SolutionSet, Tolerances,
};

/// Singular values below this fraction of the largest span the null space.
pub const NULL_REL: f64 = 1e-8;
/// Negative straight lengths down to this value are clamped to zero.
pub const D_CLAMP: f64 = 1e-9;

pub fn theta4_from_root(x4: f64) -> f64 {
    2.0 * x4.atan()
}

/// Distal joint values read from a null vector of the expanded system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistalJoints {
    pub d3: f64,
    pub theta5: f64,
}

/// Newton refinement of `theta4` on the determinant of the expanded system.
pub fn polish_theta4(s12: &Sigma12, theta4: f64) -> f64 {
    let f = |t: f64| s12.eval_angle(t).determinant();
    let mut t = theta4;
    let mut ft = f(t);
    for _ in 0..8 {
        if ft == 0.0 {
            break;
        }
        let h = 1e-6;
        let df = (f(t + h) - f(t - h)) / (2.0 * h);
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let step = ft / df;
        if step.abs() > 1e-3 {
            break;
        }
        let next = t - step;
        let fn_ = f(next);
        if !(fn_.abs() < ft.abs()) {
            break;
        }
        t = next;
        ft = fn_;
    }
    t
}

/// Candidate angles closer than this are treated as one cluster, and
/// isolated candidates whose null vector cannot be read are searched within
/// this distance.
pub const RANK_WINDOW: f64 = 2e-3;
/// Grid spacing of the cluster search.
const RANK_STEP: f64 = 2e-5;

fn smallest_singular_value(s12: &Sigma12, theta4: f64) -> f64 {
    s12.eval_angle(theta4).singular_values().min()
}

/// Local minimizers of the smallest singular value of the expanded system
/// on `[lo, hi]`. Used where roots of the characteristic polynomial cluster
/// and their computed values are too coarse for null-vector extraction.
pub fn rank_minima(s12: &Sigma12, lo: f64, hi: f64) -> Vec<f64> {
    let steps = (((hi - lo) / RANK_STEP).ceil() as usize).clamp(24, 1000);
    let h = (hi - lo) / steps as f64;
    let ts: Vec<f64> = (0..=steps).map(|k| lo + h * k as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| smallest_singular_value(s12, t)).collect();
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut out = Vec::new();
    for k in 1..steps {
        if vals[k] > vals[k - 1] || vals[k] > vals[k + 1] {
            continue;
        }
        let (mut a, mut b) = (ts[k - 1], ts[k + 1]);
        let mut c = b - golden * (b - a);
        let mut d = a + golden * (b - a);
        let (mut fc, mut fd) = (smallest_singular_value(s12, c), smallest_singular_value(s12, d));
        while b - a > 1e-14 * (1.0 + lo.abs()) {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - golden * (b - a);
                fc = smallest_singular_value(s12, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + golden * (b - a);
                fd = smallest_singular_value(s12, d);
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Groups angles on the circle so that neighbours closer than `gap` share a
/// group. Members of a group straddling `pi` are unwrapped to be contiguous.
fn cluster_angles(mut angles: Vec<f64>, gap: f64) -> Vec<Vec<f64>> {
    if angles.is_empty() {
        return Vec::new();
    }
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    // start after the widest gap so no group is split by the wrap
    let wrap_gap = angles[0] + TAU - angles[n - 1];
    let mut start = 0;
    let mut widest = wrap_gap;
    for i in 1..n {
        if angles[i] - angles[i - 1] > widest {
            widest = angles[i] - angles[i - 1];
            start = i;
        }
    }
    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for k in 0..n {
        let i = (start + k) % n;
        let t = if i < start { angles[i] + TAU } else { angles[i] };
        match groups.last_mut() {
            Some(g) if t - prev < gap => g.push(t),
            _ => groups.push(vec![t]),
        }
        prev = t;
    }
    groups
}

fn check_null_vector(n: &SVector<f64, 12>, tol: &Tolerances) -> Result<DistalJoints> {
    let (d, s, c) = (n[8], n[9], n[10]);
    let unit = s * s + c * c - 1.0;
    if unit.abs() >= tol.unit_circle {
        return Err(Error::InconsistentNullVector(format!("s5^2 + c5^2 - 1 = {unit:e}")));
    }
    // slot index, power of d3, trig factor
    let expected = [
        (0, 3, s),
        (1, 3, c),
        (2, 3, 1.0),
        (3, 2, s),
        (4, 2, c),
        (5, 2, 1.0),
        (6, 1, s),
        (7, 1, c),
    ];
    for (slot, pow, f) in expected {
        let want = d.powi(pow) * f;
        let err = (n[slot] - want).abs();
        if err >= 1e-6 * (1.0 + d.abs()).powi(pow) {
            return Err(Error::InconsistentNullVector(format!("slot {slot} off by {err:e}")));
        }
    }
    Ok(DistalJoints { d3: d, theta5: s.atan2(c) })
}

fn normalized(n: &SVector<f64, 12>) -> Result<SVector<f64, 12>> {
    if n[11].abs() < 1e-12 * n.amax() {
        return Err(Error::InconsistentNullVector("constant slot vanishes".into()));
    }
    Ok(n / n[11])
}

/// Candidates from a two-dimensional null space: the combinations with unit
/// constant slot that put `(s5, c5)` on the unit circle.
fn combine_pair(a: &SVector<f64, 12>, b: &SVector<f64, 12>) -> Vec<SVector<f64, 12>> {
    let (a, b) = if a[11].abs() >= b[11].abs() { (a, b) } else { (b, a) };
    if a[11] == 0.0 {
        return Vec::new();
    }
    let u = a / a[11];
    let w = b - a * (b[11] / a[11]);
    // |(u9 + t w9, u10 + t w10)|^2 = 1
    let qa = w[9] * w[9] + w[10] * w[10];
    let qb = 2.0 * (u[9] * w[9] + u[10] * w[10]);
    let qc = u[9] * u[9] + u[10] * u[10] - 1.0;
    if qa < 1e-300 {
        return vec![u];
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut ts = vec![(-qb + sq) / (2.0 * qa)];
    if sq > 0.0 {
        ts.push((-qb - sq) / (2.0 * qa));
    }
    ts.into_iter().map(|t| u + w * t).collect()
}

/// `(d3, theta5)` candidates at a root `x4` of the characteristic polynomial.
pub fn solve_d3_theta5(s12: &Sigma12, x4: f64, tol: &Tolerances) -> Result<Vec<DistalJoints>> {
    solve_d3_theta5_at(s12, theta4_from_root(x4), tol)
}

/// As [`solve_d3_theta5`], addressed by the joint angle so that roots at
/// `x4 = infinity` are reachable.
pub fn solve_d3_theta5_at(s12: &Sigma12, theta4: f64, tol: &Tolerances) -> Result<Vec<DistalJoints>> {
    let m = s12.eval_angle(theta4);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("expanded system"));
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let sv = svd.singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return Err(Error::EmptyNullSpace);
    }
    let null: Vec<SVector<f64, 12>> = (0..12)
        .filter(|&i| sv[i] < NULL_REL * smax)
        .map(|i| vt.row(i).transpose())
        .collect();
    if null.is_empty() {
        return Err(Error::EmptyNullSpace);
    }
    let mut vectors = Vec::new();
    for n in &null {
        if let Ok(v) = normalized(n) {
            vectors.push(v);
        }
    }
    if null.len() == 2 {
        vectors.extend(combine_pair(&null[0], &null[1]));
    }
    let mut out: Vec<DistalJoints> = Vec::new();
    let mut last_err = Error::InconsistentNullVector("no usable null vector".into());
    for v in &vectors {
        match check_null_vector(v, tol) {
            Ok(dj) => {
                if !out.iter().any(|o| (o.d3 - dj.d3).abs() < 1e-9 && (o.theta5 - dj.theta5).abs() < 1e-9) {
                    out.push(dj);
                }
            }
            Err(e) => last_err = e,
        }
    }
    if out.is_empty() {
        Err(last_err)
    } else {
        Ok(out)
    }
}

/// `(theta1, theta2)` by least squares over all fourteen equations.
pub fn solve_theta12(
    sys: &PQSystem,
    d3: f64,
    theta4: f64,
    theta5: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let scales = sys.row_scales();
    let lhs = sys.p_at(theta4) * lhs_vector(d3, theta5);
    let b = SVector::<f64, NEQ>::from_fn(|i, _| lhs[i] * scales[i]);
    let q = SMatrix::<f64, NEQ, NRHS>::from_fn(|i, j| sys.q[(i, j)] * scales[i]);
    let svd = q.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InconsistentSolution(e.to_string()))?;
    let res = (q * x - b).norm();
    if res >= 1e-6 * (1.0 + b.norm()) {
        return Err(Error::InconsistentSolution(format!("least-squares residual {res:e}")));
    }
    let (s1, c1, s2, c2) = (x[4], x[5], x[6], x[7]);
    for (name, s, c) in [("theta1", s1, c1), ("theta2", s2, c2)] {
        let u = s * s + c * c - 1.0;
        if u.abs() >= tol.unit_circle {
            return Err(Error::InconsistentSolution(format!("{name} off unit circle by {u:e}")));
        }
    }
    for (slot, want) in [(0, s1 * s2), (1, s1 * c2), (2, c1 * s2), (3, c1 * c2)] {
        if (x[slot] - want).abs() >= 1e-6 {
            return Err(Error::InconsistentSolution(format!("product slot {slot} inconsistent")));
        }
    }
    Ok((s1.atan2(c1), s2.atan2(c2)))
}

/// Validates one joint candidate against a unit-radius goal: refines it on
/// the forward kinematics, canonicalizes, clamps tiny negative lengths, and
/// checks the residual.
pub fn validate_candidate(
    goal: &GoalPose,
    j: &JointValues,
    tol: &Tolerances,
    refine_iters: usize,
) -> Result<CscPath, String> {
    if j.d3 < -1e-6 {
        return Err(format!("negative straight length {:e}", j.d3));
    }
    let raw = dh_to_dubins(j).map_err(|e| e.to_string())?;
    let refined = refine_path(&raw, goal, refine_iters);
    let mut p = refined.canonicalize_with(tol.psi_eps).map_err(|e| e.to_string())?;
    if p.d < -D_CLAMP {
        return Err(format!("negative straight length {:e}", p.d));
    }
    if p.d <= D_CLAMP {
        p.d = 0.0;
    }
    let res = fk_residual(&p, goal);
    if res >= tol.fk_residual {
        return Err(format!("forward-kinematics residual {res:e}"));
    }
    Ok(p)
}

/// Turns validated candidates into a discrete solution set on the unit-radius
/// goal.
pub fn assemble(goal: &GoalPose, candidates: &[JointValues], tol: &Tolerances, mut diag: Diagnostics) -> SolutionSet {
    let mut paths = Vec::new();
    for j in candidates {
        match validate_candidate(goal, j, tol, 8) {
            Ok(p) => {
                diag.candidates.push(CandidateRecord::accepted(j.theta4, fk_residual(&p, goal)));
                paths.push(p);
            }
            Err(reason) => diag.candidates.push(CandidateRecord::rejected(j.theta4, reason)),
        }
    }
    let mut set = SolutionSet::new(SolutionKind::Discrete, *goal, diag);
    set.paths = dedup_and_sort(paths, goal.r, tol);
    set
}

/// Smallest right singular vector read without consistency checks; `(s5,
/// c5)` is projected onto the unit circle.
fn loose_d3_theta5(s12: &Sigma12, theta4: f64) -> Option<DistalJoints> {
    let svd = s12.eval_angle(theta4).svd(false, true);
    let vt = svd.v_t?;
    let k = svd.singular_values.imin();
    let n = vt.row(k).transpose();
    if n[11] == 0.0 {
        return None;
    }
    let n = n / n[11];
    Some(DistalJoints { d3: n[8], theta5: n[9].atan2(n[10]) })
}

/// `(theta1, theta2)` from the least-squares solution without consistency
/// checks.
fn loose_theta12(sys: &PQSystem, d3: f64, theta4: f64, theta5: f64) -> Option<(f64, f64)> {
    let scales = sys.row_scales();
    let lhs = sys.p_at(theta4) * lhs_vector(d3, theta5);
    let b = SVector::<f64, NEQ>::from_fn(|i, _| lhs[i] * scales[i]);
    let q = SMatrix::<f64, NEQ, NRHS>::from_fn(|i, j| sys.q[(i, j)] * scales[i]);
    let svd = q.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let x = svd.solve(&b, eps).ok()?;
    Some((x[4].atan2(x[5]), x[6].atan2(x[7])))
}

/// Joint candidates from every real root of the characteristic polynomial.
/// In loose mode each root yields one unchecked candidate, leaving the
/// decision to forward-kinematics validation.
pub fn general_candidates(goal: &GoalPose, tol: &Tolerances, loose: bool) -> Result<(Vec<JointValues>, Diagnostics)> {
    use crate::elimination::{
        build_pq, characteristic_polynomial, half_angle_and_expand, reduce_to_sigma, BORDERLINE_ROOT_REL,
    };
    let sys = build_pq(goal)?;
    let sigma = reduce_to_sigma(&sys)?;
    let s12 = half_angle_and_expand(&sigma);
    let cp = characteristic_polynomial(&s12)?;
    let mut diag = Diagnostics::new(CaseTag::General);
    diag.char_poly_degree = cp.trimmed.degree();
    let angles = cp.candidate_angles(BORDERLINE_ROOT_REL);
    diag.root_count = angles.len();
    let mut candidates = Vec::new();
    let polished: Vec<f64> = angles.iter().map(|&t| polish_theta4(&s12, t)).collect();
    if loose {
        for theta4 in polished {
            let joints = loose_d3_theta5(&s12, theta4).and_then(|dj| {
                loose_theta12(&sys, dj.d3, theta4, dj.theta5)
                    .map(|(theta1, theta2)| JointValues { theta1, theta2, d3: dj.d3, theta4, theta5: dj.theta5 })
            });
            match joints {
                Some(j) => candidates.push(j),
                None => diag.candidates.push(CandidateRecord::rejected(theta4, "degenerate null vector")),
            }
        }
        return Ok((candidates, diag));
    }
    for group in cluster_angles(polished, RANK_WINDOW) {
        let mut distal = Vec::new();
        let mut last_err = None;
        for &theta4 in &group {
            match solve_d3_theta5_at(&s12, theta4, tol) {
                Ok(d) => distal.extend(d.into_iter().map(|dj| (theta4, dj))),
                Err(e) => last_err = Some(e),
            }
        }
        if group.len() > 1 || distal.is_empty() {
            let (lo, hi) = (group[0] - RANK_WINDOW, group[group.len() - 1] + RANK_WINDOW);
            for t in rank_minima(&s12, lo, hi) {
                if let Ok(d) = solve_d3_theta5_at(&s12, t, tol) {
                    distal.extend(d.into_iter().map(|dj| (t, dj)));
                }
            }
        }
        if distal.is_empty() {
            let reason = last_err.map_or_else(|| "no null vector near cluster".to_string(), |e| e.to_string());
            diag.candidates.push(CandidateRecord::rejected(group[0], reason));
            continue;
        }
        for (theta4, dj) in distal {
            match solve_theta12(&sys, dj.d3, theta4, dj.theta5, tol) {
                Ok((theta1, theta2)) => candidates.push(JointValues {
                    theta1,
                    theta2,
                    d3: dj.d3,
                    theta4,
                    theta5: dj.theta5,
                }),
                Err(e) => diag.candidates.push(CandidateRecord::rejected(theta4, e.to_string())),
            }
        }
    }
    Ok((candidates, diag))
}

/// The full general-position pipeline on a unit-radius goal.
pub fn solve_general(goal: &GoalPose, tol: &Tolerances) -> Result<SolutionSet> {
    let (candidates, diag) = general_candidates(goal, tol, false)?;
    Ok(assemble(goal, &candidates, tol, diag))
}
