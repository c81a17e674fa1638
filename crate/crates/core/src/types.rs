//! Shared domain types: goal poses, CSC paths, joint values, tolerances and
//! the solution container returned by the solver.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::FamilyDescriptor;

/// Start heading of every path.
pub const START_HEADING: [f64; 3] = [0.0, 0.0, 1.0];

/// Goal position and heading reached at the end of a path, together with the
/// minimum turning radius the path must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalPose {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub r: f64,
}

impl GoalPose {
    /// Builds a goal, normalizing `v`.
    pub fn new(x: [f64; 3], v: [f64; 3], r: f64) -> Result<Self> {
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) || !r.is_finite() {
            return Err(Error::NonFinite("goal pose"));
        }
        if r <= 0.0 {
            return Err(Error::InvalidGoal(format!("turning radius must be positive, got {r}")));
        }
        let n = Vector3::from(v).norm();
        if n == 0.0 {
            return Err(Error::InvalidGoal("goal direction is the zero vector".into()));
        }
        Ok(Self { x, v: [v[0] / n, v[1] / n, v[2] / n], r })
    }

    /// Unit-radius goal without renormalizing `v`.
    pub(crate) fn unit(x: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self { x: x.into(), v: v.into(), r: 1.0 }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.x)
    }

    pub fn direction(&self) -> Vector3<f64> {
        Vector3::from(self.v)
    }
}

/// The five Dubins parameters of a CSC path: plane angle and bend angle of the
/// first arc, straight length, plane angle and bend angle of the second arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CscPath {
    pub phi1: f64,
    pub psi1: f64,
    pub d: f64,
    pub phi2: f64,
    pub psi2: f64,
}

/// Joint values of the equivalent RRPRR arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointValues {
    pub theta1: f64,
    pub theta2: f64,
    pub d3: f64,
    pub theta4: f64,
    pub theta5: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum accepted forward-kinematics residual.
    pub fk_residual: f64,
    /// Relative threshold for singular-configuration detection.
    pub singular_det: f64,
    /// Allowed deviation of `s^2 + c^2` from one.
    pub unit_circle: f64,
    pub dedup_angle: f64,
    pub dedup_length: f64,
    /// Bend angles below this are treated as absent arcs.
    pub psi_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fk_residual: 1e-6,
            singular_det: 1e-9,
            unit_circle: 1e-6,
            dedup_angle: 1e-6,
            dedup_length: 1e-6,
            psi_eps: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.fk_residual,
            self.singular_det,
            self.unit_circle,
            self.dedup_angle,
            self.dedup_length,
            self.psi_eps,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidGoal("tolerances must be positive and finite".into()))
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_pi(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = PI - (PI - a).rem_euclid(TAU);
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_tau(a: f64) -> f64 {
    if (0.0..TAU).contains(&a) {
        return a;
    }
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl CscPath {
    pub const fn new(phi1: f64, psi1: f64, d: f64, phi2: f64, psi2: f64) -> Self {
        Self { phi1, psi1, d, phi2, psi2 }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.phi1, self.psi1, self.d, self.phi2, self.psi2]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Canonical form with the default bend-angle threshold.
    pub fn canonicalize(&self) -> Result<Self> {
        self.canonicalize_with(Tolerances::default().psi_eps)
    }

    /// Wraps bend angles into `[0, 2pi)` and plane angles into `(-pi, pi]`;
    /// a plane angle whose arc is shorter than `psi_eps` is set to zero.
    pub fn canonicalize_with(&self, psi_eps: f64) -> Result<Self> {
        if !self.is_finite() {
            return Err(Error::NonFinite("path"));
        }
        let psi1 = wrap_tau(self.psi1);
        let psi2 = wrap_tau(self.psi2);
        let phi1 = if psi1 < psi_eps { 0.0 } else { wrap_pi(self.phi1) };
        let phi2 = if psi2 < psi_eps { 0.0 } else { wrap_pi(self.phi2) };
        Ok(Self { phi1, psi1, d: self.d, phi2, psi2 })
    }

    /// Total length `r (psi1 + psi2) + d`.
    pub fn length(&self, r: f64) -> f64 {
        r * (self.psi1 + self.psi2) + self.d
    }

    /// Duplicate test: wrapped angle differences below `angle_tol` and
    /// straight-length difference below `length_tol`.
    pub fn approx_eq(&self, other: &Self, angle_tol: f64, length_tol: f64) -> bool {
        let a = [self.phi1, self.psi1, self.phi2, self.psi2];
        let b = [other.phi1, other.psi1, other.phi2, other.psi2];
        a.iter().zip(b.iter()).all(|(x, y)| wrap_pi(x - y).abs() < angle_tol)
            && (self.d - other.d).abs() < length_tol
    }

    /// Largest parameter difference, angles wrapped.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        (0..5)
            .map(|i| if i == 2 { (a[i] - b[i]).abs() } else { wrap_pi(a[i] - b[i]).abs() })
            .fold(0.0, f64::max)
    }
}

/// Ascending by length, ties broken by the parameter tuple.
pub fn compare_paths(a: &CscPath, b: &CscPath, r: f64) -> Ordering {
    a.length(r).total_cmp(&b.length(r)).then_with(|| {
        a.to_array()
            .iter()
            .zip(b.to_array().iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Removes duplicates (keeping the first occurrence) and sorts by length.
pub fn dedup_and_sort(paths: Vec<CscPath>, r: f64, tol: &Tolerances) -> Vec<CscPath> {
    let mut out: Vec<CscPath> = Vec::with_capacity(paths.len());
    for p in paths {
        if !out.iter().any(|q| q.approx_eq(&p, tol.dedup_angle, tol.dedup_length)) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| compare_paths(a, b, r));
    out
}

/// Which configuration family a goal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    General,
    StraightLine,
    InfiniteFamily,
    Planar,
    UnknownSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Discrete,
    StraightLine,
    InfiniteFamily,
    SingularUnhandled,
}

/// What happened to one candidate root or branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub theta4: f64,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fk_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CandidateRecord {
    pub fn accepted(theta4: f64, residual: f64) -> Self {
        Self { theta4, accepted: true, fk_residual: Some(residual), reason: None }
    }

    pub fn rejected(theta4: f64, reason: impl Into<String>) -> Self {
        Self { theta4, accepted: false, fk_residual: None, reason: Some(reason.into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub case: CaseTag,
    /// Degree of the characteristic polynomial after trimming (general case).
    pub char_poly_degree: Option<usize>,
    /// Real root candidates examined.
    pub root_count: usize,
    pub candidates: Vec<CandidateRecord>,
    /// Set when the result came from the perturbation fallback.
    pub perturbed: bool,
    pub notes: Vec<String>,
    pub wall_ms: f64,
}

impl Diagnostics {
    pub fn new(case: CaseTag) -> Self {
        Self {
            case,
            char_poly_degree: None,
            root_count: 0,
            candidates: Vec::new(),
            perturbed: false,
            notes: Vec::new(),
            wall_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub kind: SolutionKind,
    /// Goal as posed by the caller.
    pub goal: GoalPose,
    /// Validated paths, shortest first.
    pub paths: Vec<CscPath>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDescriptor>,
    pub diagnostics: Diagnostics,
}

impl SolutionSet {
    pub fn new(kind: SolutionKind, goal: GoalPose, diagnostics: Diagnostics) -> Self {
        Self { kind, goal, paths: Vec::new(), family: None, diagnostics }
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty() && self.family.is_none()
    }

    pub fn shortest(&self) -> Option<&CscPath> {
        self.paths.first()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_path(p: CscPath, expected: [f64; 5]) {
        for (a, b) in p.to_array().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{p:?} vs {expected:?}");
        }
    }

    #[test]
    fn canonicalize_wraps_angles() {
        let p = CscPath::new(TAU + 0.1, PI, 1.0, -3.0 * PI, PI / 2.0).canonicalize().unwrap();
        assert_path(p, [0.1, PI, 1.0, PI, PI / 2.0]);
    }

    #[test]
    fn canonicalize_zeroes_plane_of_absent_arc() {
        let p = CscPath::new(1.3, 0.0, 2.0, 0.7, 0.0).canonicalize().unwrap();
        assert_path(p, [0.0, 0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn canonicalize_keeps_canonical_input() {
        let q = CscPath::new(-0.2, 0.5, 0.0, 0.3, 0.4);
        assert_eq!(q.canonicalize().unwrap(), q);
    }

    #[test]
    fn canonicalize_rejects_nan() {
        let p = CscPath::new(f64::NAN, 0.0, 1.0, 0.0, 0.0);
        assert_eq!(p.canonicalize(), Err(Error::NonFinite("path")));
    }

    #[test]
    fn wrap_edges() {
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
        assert_eq!(wrap_tau(-1e-300), 0.0);
        assert!(wrap_tau(-1e-17) < TAU);
    }

    #[test]
    fn goal_normalizes_direction() {
        let g = GoalPose::new([1.0, 2.0, 3.0], [0.0, 3.0, 4.0], 2.0).unwrap();
        assert!((g.direction().norm() - 1.0).abs() < 1e-12);
        assert!(GoalPose::new([0.0; 3], [0.0; 3], 1.0).is_err());
        assert!(GoalPose::new([0.0; 3], [0.0, 0.0, 1.0], 0.0).is_err());
        assert!(GoalPose::new([f64::INFINITY, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn dedup_uses_wrapped_angles() {
        let tol = Tolerances::default();
        let a = CscPath::new(PI - 1e-9, 1.0, 2.0, 0.0, 1.0);
        let b = CscPath::new(-PI + 1e-9, 1.0, 2.0, 0.0, 1.0);
        let c = CscPath::new(0.0, 0.5, 1.0, 0.0, 0.5);
        let out = dedup_and_sort(vec![a, b, c], 1.0, &tol);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], c);
    }
}
