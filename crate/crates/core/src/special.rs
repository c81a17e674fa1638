//! Goals on which the determinant pipeline degenerates: goals collinear with
//! the start axis, goals whose paths are confined to a plane, and a
//! perturbation fallback for anything else.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::backsub::{general_candidates, validate_candidate, D_CLAMP};
use crate::kinematics::{dh_to_dubins, fk_residual};
use crate::poly::UniPoly;
use crate::types::{
    dedup_and_sort, CandidateRecord, CaseTag, CscPath, Diagnostics, GoalPose, JointValues,
    SolutionKind, SolutionSet, Tolerances,
};

/// Size of the goal perturbation used by the fallback solver.
pub const PERTURBATION: f64 = 1e-7;
/// Perturbation sizes tried in turn when the smallest one yields nothing.
pub const PERTURBATION_LADDER: [f64; 6] = [PERTURBATION, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
/// Relative distance from the planar manifold below which planar solutions
/// are continued onto the goal.
pub const NEAR_PLANAR: f64 = 1e-2;

/// Number of first-arc directions sampled for family representatives.
pub const DEFAULT_FAMILY_SAMPLES: usize = 8;

pub fn detect(goal: &GoalPose, tol: &Tolerances) -> CaseTag {
    let [x, y, z] = goal.x;
    let [vx, vy, _] = goal.v;
    let scale = 1.0 + (x * x + y * y + z * z).sqrt();
    let x_off_axis = x.hypot(y);
    let v_off_axis = vx.hypot(vy);
    if x_off_axis < tol.singular_det * scale && v_off_axis < tol.singular_det {
        // the straight path, when it exists, is reported as a family member
        CaseTag::InfiniteFamily
    } else if (x * vy - y * vx).abs() < tol.singular_det * scale {
        CaseTag::Planar
    } else {
        CaseTag::General
    }
}

pub fn solve_straight(goal: &GoalPose) -> SolutionSet {
    let mut set = SolutionSet::new(SolutionKind::StraightLine, *goal, Diagnostics::new(CaseTag::StraightLine));
    set.paths.push(CscPath::new(0.0, 0.0, goal.position().norm(), 0.0, 0.0));
    set
}

/// The two `d3` polynomials of the in-plane problem for fixed `theta1` and
/// `theta4` in `{0, pi}`: first the squared norm of the position equation
/// with `theta5` eliminated, then the unit-circle condition on `(s5, c5)`.
pub fn in_plane_d3_polynomials(goal: &GoalPose, theta1: f64, theta4: f64) -> [UniPoly; 2] {
    let plane = InPlane::new(goal, theta1, theta4);
    [plane.norm_poly(), plane.unit_poly()]
}

struct InPlane {
    sigma: f64,
    a: [f64; 3],
    b: [f64; 3],
    dot: f64,
    cross: f64,
}

impl InPlane {
    fn new(goal: &GoalPose, theta1: f64, theta4: f64) -> Self {
        let (s1, c1) = theta1.sin_cos();
        let [x, y, z] = goal.x;
        let [vx, vy, vz] = goal.v;
        let a = [vx * c1 + vy * s1, vz, vx * s1 - vy * c1];
        let b = [x * c1 + y * s1 - 1.0, z, x * s1 - y * c1];
        let sigma = if theta4.cos() >= 0.0 { 1.0 } else { -1.0 };
        Self { sigma, a, b, dot: a[0] * b[0] + a[1] * b[1], cross: a[0] * b[1] - a[1] * b[0] }
    }

    fn det(&self) -> UniPoly {
        let k = 1.0 + self.sigma;
        UniPoly::new(vec![-k * k, 0.0, -self.sigma])
    }

    fn sin_num(&self) -> UniPoly {
        UniPoly::new(vec![-(1.0 + self.sigma) * self.dot, self.cross + self.sigma])
    }

    fn cos_num(&self) -> UniPoly {
        UniPoly::new(vec![(1.0 + self.sigma) * (self.cross + self.sigma), self.sigma * self.dot])
    }

    fn norm_poly(&self) -> UniPoly {
        let b2 = self.b[0] * self.b[0] + self.b[1] * self.b[1];
        let k = 1.0 + self.sigma;
        let d = UniPoly::new(vec![0.0, 1.0]);
        let base = UniPoly::new(vec![3.0 + 2.0 * self.sigma - b2, 0.0, 1.0]);
        &(&(&self.det() * &base) + &self.cos_num().scale(2.0 * k)) + &(&d * &self.sin_num()).scale(2.0)
    }

    fn unit_poly(&self) -> UniPoly {
        let k = 1.0 + self.sigma;
        let bs = self.cross + self.sigma;
        UniPoly::new(vec![k * k - self.dot * self.dot - bs * bs, 0.0, 1.0])
    }

    /// Joint solutions with `d3 >= 0` for this plane and second-arc sense.
    fn solve(&self, theta1: f64, tol: &Tolerances) -> Vec<JointValues> {
        let scale = 1.0 + self.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if self.a[2].abs() > 1e-6 || self.b[2].abs() > 1e-6 * scale {
            return Vec::new();
        }
        let poly = self.norm_poly().trim_relative(1e-12);
        let Ok(roots) = poly.real_roots() else {
            return Vec::new();
        };
        let (det, sn, cn, unit) = (self.det(), self.sin_num(), self.cos_num(), self.unit_poly());
        let mut out = Vec::new();
        for root in roots {
            let mut d = root.value;
            if d < -D_CLAMP {
                continue;
            }
            d = d.max(0.0);
            let dv = det.eval(d);
            if dv.abs() < 1e-12 {
                continue;
            }
            if unit.eval(d).abs() > 1e-6 * unit.abs_eval(d).max(1.0) {
                continue;
            }
            let (s5, c5) = (sn.eval(d) / dv, cn.eval(d) / dv);
            if (s5 * s5 + c5 * c5 - 1.0).abs() >= tol.unit_circle {
                continue;
            }
            let i = [self.sigma * s5, c5];
            let p = [self.sigma * (1.0 + c5) + 1.0, -d - s5];
            let (a, b) = (&self.a, &self.b);
            let norm = a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1];
            let c2 = (a[0] * i[0] + a[1] * i[1] + b[0] * p[0] + b[1] * p[1]) / norm;
            let s2 = -(a[0] * i[1] - a[1] * i[0] + b[0] * p[1] - b[1] * p[0]) / norm;
            out.push(JointValues {
                theta1,
                theta2: s2.atan2(c2),
                d3: d,
                theta4: if self.sigma > 0.0 { 0.0 } else { PI },
                theta5: s5.atan2(c5),
            });
        }
        out
    }
}

/// Canonicalizes, clamps a vanishing straight length to zero, and checks the
/// residual. No local refinement, so planar solutions stay exactly planar.
fn finalize(goal: &GoalPose, j: &JointValues, tol: &Tolerances) -> Result<CscPath, String> {
    let mut p = dh_to_dubins(j).map_err(|e| e.to_string())?.canonicalize_with(tol.psi_eps).map_err(|e| e.to_string())?;
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

fn in_plane_paths(goal: &GoalPose, theta1: f64, theta4: f64, tol: &Tolerances, diag: &mut Diagnostics) -> Vec<CscPath> {
    let mut out = Vec::new();
    for j in InPlane::new(goal, theta1, theta4).solve(theta1, tol) {
        match finalize(goal, &j, tol) {
            Ok(p) => {
                diag.candidates.push(CandidateRecord::accepted(theta4, fk_residual(&p, goal)));
                out.push(p);
            }
            Err(reason) => diag.candidates.push(CandidateRecord::rejected(theta4, reason)),
        }
    }
    out
}

/// Heading of the plane containing the start axis and the goal.
fn plane_heading(goal: &GoalPose) -> f64 {
    let [x, y, _] = goal.x;
    let [vx, vy, _] = goal.v;
    if x.hypot(y) >= vx.hypot(vy) {
        y.atan2(x)
    } else {
        vy.atan2(vx)
    }
}

pub fn solve_planar(goal: &GoalPose, tol: &Tolerances) -> SolutionSet {
    let mut diag = Diagnostics::new(CaseTag::Planar);
    let a = plane_heading(goal);
    let mut paths = Vec::new();
    for theta1 in [a, a + PI] {
        for theta4 in [0.0, PI] {
            paths.extend(in_plane_paths(goal, theta1, theta4, tol, &mut diag));
        }
    }
    let mut set = SolutionSet::new(SolutionKind::Discrete, *goal, diag);
    set.paths = dedup_and_sort(paths, goal.r, tol);
    set
}

/// One-parameter family of paths for goals on the start axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    /// Second-arc plane offsets that produce valid paths.
    pub theta4_choices: Vec<f64>,
    pub theta1_samples: Vec<f64>,
    /// Distinct paths generated at the samples, straight path first when
    /// it belongs to the family.
    pub representatives: Vec<CscPath>,
    /// Goal at unit turning radius.
    pub unit_goal: GoalPose,
    pub r: f64,
}

impl FamilyDescriptor {
    /// Family members leaving the start in direction `theta1`, at the
    /// descriptor's turning radius.
    pub fn generate(&self, theta1: f64) -> Vec<CscPath> {
        let tol = Tolerances::default();
        let mut diag = Diagnostics::new(CaseTag::InfiniteFamily);
        self.theta4_choices
            .iter()
            .flat_map(|&t4| in_plane_paths(&self.unit_goal, theta1, t4, &tol, &mut diag))
            .map(|p| CscPath { d: p.d * self.r, ..p })
            .collect()
    }

    /// The same family at turning radius `r`.
    pub fn rescaled(&self, r: f64) -> Self {
        let k = r / self.r;
        Self {
            representatives: self.representatives.iter().map(|p| CscPath { d: p.d * k, ..*p }).collect(),
            r,
            ..self.clone()
        }
    }
}

pub fn default_family_samples(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Branches prescribed for collinear goals: two for a goal ahead of a
/// same-direction start beyond two radii, only `theta4 = 0` for an
/// opposite-direction goal within two radii, none otherwise.
fn prescribed_branches(goal: &GoalPose) -> Option<Vec<f64>> {
    let dist = goal.position().norm();
    let aligned = goal.v[2] > 0.0;
    if aligned && dist > 2.0 {
        Some(vec![0.0, PI])
    } else if !aligned && dist <= 2.0 {
        Some(vec![0.0])
    } else {
        None
    }
}

pub fn solve_family(goal: &GoalPose, theta1_samples: &[f64], tol: &Tolerances) -> crate::Result<SolutionSet> {
    let mut diag = Diagnostics::new(CaseTag::InfiniteFamily);
    let probe = theta1_samples.first().copied().unwrap_or(0.0);
    let mut scratch = Diagnostics::new(CaseTag::InfiniteFamily);
    let valid = |t4: f64, d: &mut Diagnostics| !in_plane_paths(goal, probe, t4, tol, d).is_empty();
    let choices = match prescribed_branches(goal) {
        Some(rule) if rule.iter().all(|&t4| valid(t4, &mut scratch)) => rule,
        rule => {
            if rule.is_some() {
                diag.notes.push("prescribed branch invalid; both branches tried".into());
            }
            [0.0, PI].into_iter().filter(|&t4| valid(t4, &mut scratch)).collect()
        }
    };
    if choices.is_empty() {
        return Err(crate::Error::NoValidBranch);
    }
    let mut reps: Vec<CscPath> = Vec::new();
    let z = goal.x[2];
    if goal.v[2] > 0.0 && z > 0.0 {
        reps.push(CscPath::new(0.0, 0.0, z, 0.0, 0.0));
    }
    for &t1 in theta1_samples {
        for &t4 in &choices {
            for p in in_plane_paths(goal, t1, t4, tol, &mut diag) {
                if !reps.iter().any(|q| q.approx_eq(&p, tol.dedup_angle, tol.dedup_length)) {
                    reps.push(p);
                }
            }
        }
    }
    let mut set = SolutionSet::new(SolutionKind::InfiniteFamily, *goal, diag);
    set.paths = dedup_and_sort(reps.clone(), goal.r, tol);
    set.family = Some(FamilyDescriptor {
        theta4_choices: choices,
        theta1_samples: theta1_samples.to_vec(),
        representatives: reps,
        unit_goal: *goal,
        r: 1.0,
    });
    Ok(set)
}

/// Goal moved by `delta` off whichever singular manifold it is near.
pub fn perturb_goal(goal: &GoalPose, delta: f64) -> GoalPose {
    let x = goal.position();
    let v = goal.direction();
    let dir_x = Vector3::new(v[1], -v[0], 0.0);
    if dir_x.norm() > 1e-6 {
        return GoalPose::unit(x + dir_x.normalize() * delta, v);
    }
    let dir_v = Vector3::new(-x[1], x[0], 0.0);
    if dir_v.norm() > 1e-6 {
        return GoalPose::unit(x, (v + dir_v.normalize() * delta).normalize());
    }
    GoalPose::unit(x + Vector3::new(delta, 0.0, 0.0), (v + Vector3::new(0.0, delta, 0.0)).normalize())
}

/// Solves a slightly perturbed goal and refines every candidate back onto
/// the original goal.
/// Relative distance of a goal from the planar manifold.
pub fn planar_distance(goal: &GoalPose) -> f64 {
    let [x, y, z] = goal.x;
    let [vx, vy, _] = goal.v;
    (x * vy - y * vx).abs() / (1.0 + (x * x + y * y + z * z).sqrt())
}

/// Nearest goal whose position and heading lie in one vertical plane, or
/// `None` when the goal is on the start axis.
pub fn planar_projection(goal: &GoalPose) -> Option<GoalPose> {
    let x = goal.position();
    let v = goal.direction();
    let (a, b, c) = (x[0] * x[0] + v[0] * v[0], x[0] * x[1] + v[0] * v[1], x[1] * x[1] + v[1] * v[1]);
    if a + c < 1e-12 {
        return None;
    }
    // normal of the plane: eigenvector of the smaller eigenvalue
    let angle = 0.5 * (2.0 * b).atan2(a - c) + std::f64::consts::FRAC_PI_2;
    let n = Vector3::new(angle.cos(), angle.sin(), 0.0);
    let xp = x - n * n.dot(&x);
    let vp = v - n * n.dot(&v);
    if vp.norm() < 1e-6 {
        return None;
    }
    Some(GoalPose::unit(xp, vp.normalize()))
}

/// Planar solutions of the projected goal refined onto the goal itself.
/// Empty unless the goal is within [`NEAR_PLANAR`] of the planar manifold.
pub fn near_planar_paths(goal: &GoalPose, tol: &Tolerances, diag: &mut Diagnostics) -> Vec<CscPath> {
    if planar_distance(goal) >= NEAR_PLANAR {
        return Vec::new();
    }
    let Some(proj) = planar_projection(goal) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for seed in solve_planar(&proj, tol).paths {
        let j = crate::kinematics::dubins_to_dh(&seed);
        match validate_candidate(goal, &j, tol, 30) {
            Ok(p) => {
                diag.candidates.push(CandidateRecord::accepted(j.theta4, fk_residual(&p, goal)));
                out.push(p);
            }
            Err(reason) => diag.candidates.push(CandidateRecord::rejected(j.theta4, reason)),
        }
    }
    out
}

/// Candidates from the general pipeline on a perturbed copy of the goal,
/// validated on the goal itself. The perturbation grows until some
/// candidate validates. Planar continuation is added near the planar
/// manifold.
pub fn solve_unknown_singular(goal: &GoalPose, tol: &Tolerances) -> SolutionSet {
    let mut diag = Diagnostics::new(CaseTag::UnknownSingular);
    diag.perturbed = true;
    let mut paths = near_planar_paths(goal, tol, &mut diag);
    for delta in PERTURBATION_LADDER {
        let moved = perturb_goal(goal, delta);
        let mut found = Vec::new();
        for loose in [false, true] {
            match general_candidates(&moved, tol, loose) {
                Ok((candidates, near)) => {
                    diag.char_poly_degree = near.char_poly_degree;
                    diag.root_count = near.root_count;
                    diag.candidates.extend(near.candidates);
                    for j in candidates {
                        match validate_candidate(goal, &j, tol, 30) {
                            Ok(p) => {
                                diag.candidates.push(CandidateRecord::accepted(j.theta4, fk_residual(&p, goal)));
                                found.push(p);
                            }
                            Err(reason) => diag.candidates.push(CandidateRecord::rejected(j.theta4, reason)),
                        }
                    }
                }
                Err(e) => diag.notes.push(format!("perturbed solve at {delta:e} failed: {e}")),
            }
        }
        if !found.is_empty() {
            diag.notes.push(format!("perturbation {delta:e}"));
            paths.extend(found);
            break;
        }
    }
    let mut set = SolutionSet::new(SolutionKind::SingularUnhandled, *goal, diag);
    set.paths = dedup_and_sort(paths, goal.r, tol);
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backsub::solve_general;
    use crate::kinematics::fk_dubins;

    fn unit(x: [f64; 3], v: [f64; 3]) -> GoalPose {
        GoalPose::new(x, v, 1.0).unwrap()
    }

    #[test]
    fn detection_examples() {
        let tol = Tolerances::default();
        assert_eq!(detect(&unit([0.0, 0.0, 5.0], [0.0, 0.0, 1.0]), &tol), CaseTag::InfiniteFamily);
        assert_eq!(detect(&unit([0.0, 0.0, 2.0], [0.0, 0.0, -1.0]), &tol), CaseTag::InfiniteFamily);
        assert_eq!(detect(&unit([3.0, 0.0, 1.0], [0.0, 0.0, 1.0]), &tol), CaseTag::Planar);
        assert_eq!(detect(&unit([1.0, 2.0, 0.5], [0.3, -0.2, 0.9]), &tol), CaseTag::General);
    }

    #[test]
    fn straight_examples() {
        for z in [5.0, 0.1] {
            let g = unit([0.0, 0.0, z], [0.0, 0.0, 1.0]);
            let set = solve_straight(&g);
            assert_eq!(set.paths, vec![CscPath::new(0.0, 0.0, z, 0.0, 0.0)]);
            assert_eq!(fk_residual(&set.paths[0], &g), 0.0);
        }
    }

    #[test]
    fn planar_generator_recovered() {
        let path = CscPath::new(0.7, 1.2, 3.0, PI, 0.9);
        let g = fk_dubins(&path, 1.0).unwrap();
        assert_eq!(detect(&g, &Tolerances::default()), CaseTag::Planar);
        let set = solve_planar(&g, &Tolerances::default());
        assert!(set.paths.iter().any(|p| p.approx_eq(&path, 1e-6, 1e-6)), "{:?}", set.paths);
    }

    #[test]
    fn d3_polynomials_share_the_valid_root() {
        let path = CscPath::new(-0.4, 2.0, 1.5, 0.0, 2.5);
        let g = fk_dubins(&path, 1.0).unwrap();
        let [norm, unit_poly] = in_plane_d3_polynomials(&g, path.phi1, path.phi2 + PI);
        assert!(norm.eval(path.d).abs() < 1e-9 * norm.abs_eval(path.d));
        assert!(unit_poly.eval(path.d).abs() < 1e-9 * unit_poly.abs_eval(path.d));
    }

    #[test]
    fn anti_aligned_family_at_two_radii() {
        let g = unit([0.0, 0.0, 2.0], [0.0, 0.0, -1.0]);
        let set = solve_family(&g, &default_family_samples(8), &Tolerances::default()).unwrap();
        assert_eq!(set.family.as_ref().unwrap().theta4_choices, vec![0.0]);
        assert_eq!(set.paths.len(), 8);
        assert!(set.paths.iter().all(|p| fk_residual(p, &g) < 1e-6));
    }

    #[test]
    fn family_behind_start_has_two_branches() {
        let g = unit([0.0, 0.0, -2.0], [0.0, 0.0, 1.0]);
        let set = solve_family(&g, &default_family_samples(8), &Tolerances::default()).unwrap();
        assert_eq!(set.paths.len(), 16);
        let fam = set.family.unwrap();
        for t1 in [0.3, 2.0] {
            let gen = fam.generate(t1);
            assert_eq!(gen.len(), 2);
            assert!(gen.iter().all(|p| fk_residual(p, &g) < 1e-9));
        }
    }

    #[test]
    fn fallback_on_general_goal_matches_general_solver() {
        let g = unit([1.3, -2.2, 0.4], [0.2, 0.5, -0.8]);
        let tol = Tolerances::default();
        let direct = solve_general(&g, &tol).unwrap();
        let fallback = solve_unknown_singular(&g, &tol);
        assert!(fallback.diagnostics.perturbed);
        assert_eq!(direct.paths.len(), fallback.paths.len());
        for (a, b) in direct.paths.iter().zip(fallback.paths.iter()) {
            assert!(a.approx_eq(b, 1e-6, 1e-6));
        }
    }

    #[test]
    fn fallback_on_planar_goal_finds_paths() {
        let g = fk_dubins(&CscPath::new(2.0, 0.8, 2.5, 0.0, 1.9), 1.0).unwrap();
        let set = solve_unknown_singular(&g, &Tolerances::default());
        assert!(!set.paths.is_empty());
        assert!(set.paths.iter().all(|p| fk_residual(p, &g) < 1e-6));
    }
}
