//! Forward kinematics of a CSC path, both as closed-form Dubins expressions
//! and as the product of Denavit-Hartenberg transforms of the equivalent
//! RRPRR arm.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix4, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::types::{CscPath, GoalPose, JointValues};

/// Rigid transform between consecutive arm frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomTransform(pub Matrix4<f64>);

impl HomTransform {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Third column of the rotation block.
    pub fn z_axis(&self) -> Vector3<f64> {
        Vector3::new(self.0[(0, 2)], self.0[(1, 2)], self.0[(2, 2)])
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.0[(0, 3)], self.0[(1, 3)], self.0[(2, 3)])
    }

    /// Largest entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.0.fixed_view::<3, 3>(0, 0);
        (r.transpose() * r - nalgebra::Matrix3::identity()).amax()
    }
}

impl std::ops::Mul for HomTransform {
    type Output = HomTransform;
    fn mul(self, rhs: HomTransform) -> HomTransform {
        HomTransform(self.0 * rhs.0)
    }
}

/// One DH row: link length, twist, offset, joint angle.
#[derive(Debug, Clone, Copy)]
struct DhRow {
    r: f64,
    alpha: f64,
    d: f64,
    theta: f64,
}

fn dh_matrix(row: DhRow) -> HomTransform {
    let (st, ct) = row.theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    // sin(pi/2) and cos(pi/2) are not exact in floating point
    let (sa, ca) = if row.alpha == FRAC_PI_2 { (1.0, 0.0) } else { (sa, ca) };
    HomTransform(Matrix4::new(
        ct, -st * ca, st * sa, row.r * ct,
        st, ct * ca, -ct * sa, row.r * st,
        0.0, sa, ca, row.d,
        0.0, 0.0, 0.0, 1.0,
    ))
}

/// Transform of joint `joint_index` (1..=5) at the given joint value: an
/// angle for the revolute joints, a length for joint 3.
pub fn dh_transform(joint_index: usize, value: f64) -> Result<HomTransform> {
    if !value.is_finite() {
        return Err(Error::NonFinite("joint value"));
    }
    let row = match joint_index {
        1 | 2 | 4 | 5 => DhRow { r: 1.0, alpha: FRAC_PI_2, d: 0.0, theta: value },
        3 => DhRow { r: 0.0, alpha: 0.0, d: value, theta: 0.0 },
        _ => return Err(Error::InvalidGoal(format!("joint index {joint_index} outside 1..=5"))),
    };
    Ok(dh_matrix(row))
}

/// Full arm transform `A1 A2 A3 A4 A5`.
pub fn chain_transform(j: &JointValues) -> Result<HomTransform> {
    let values = [j.theta1, j.theta2, j.d3, j.theta4, j.theta5];
    let mut acc = HomTransform::identity();
    for (i, v) in values.iter().enumerate() {
        acc = acc * dh_transform(i + 1, *v)?;
    }
    Ok(acc)
}

/// Goal reached by the arm: approach axis and position of the hand frame.
/// The returned goal has unit radius, matching the arm's link lengths.
pub fn fk_chain(j: &JointValues) -> Result<GoalPose> {
    let t = chain_transform(j)?;
    Ok(GoalPose::unit(t.translation(), t.z_axis()))
}

/// Closed-form end pose of a CSC path with turning radius `r`.
pub fn fk_dubins(path: &CscPath, r: f64) -> Result<GoalPose> {
    if !path.is_finite() || !r.is_finite() {
        return Err(Error::NonFinite("path"));
    }
    let (x, v) = fk_dubins_raw(path, r);
    Ok(GoalPose { x: x.into(), v: v.into(), r })
}

pub(crate) fn fk_dubins_raw(path: &CscPath, r: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (sf1, cf1) = path.phi1.sin_cos();
    let (sp1, cp1) = path.psi1.sin_cos();
    let (sf2, cf2) = path.phi2.sin_cos();
    let (sp2, cp2) = path.psi2.sin_cos();
    let d = path.d;

    let v = Vector3::new(
        sp2 * (cp1 * cf1 * cf2 - sf1 * sf2) + sp1 * cp2 * cf1,
        sp2 * (cp1 * sf1 * cf2 + cf1 * sf2) + sp1 * cp2 * sf1,
        cp1 * cp2 - sp1 * sp2 * cf2,
    );
    let common = sp1 * (d + r * sp2) + r * cp1 * (cf2 * (1.0 - cp2) - 1.0) + r;
    let x = Vector3::new(
        cf1 * common + r * (cp2 - 1.0) * sf1 * sf2,
        sf1 * common - r * (cp2 - 1.0) * cf1 * sf2,
        cp1 * (d + r * sp2) + r * sp1 * (cf2 * (cp2 - 1.0) + 1.0),
    );
    (x, v)
}

/// Dubins parameters to arm joints.
pub fn dubins_to_dh(path: &CscPath) -> JointValues {
    JointValues {
        theta1: path.phi1,
        theta2: PI - path.psi1,
        d3: path.d,
        theta4: path.phi2 + PI,
        theta5: PI - path.psi2,
    }
}

/// Arm joints to canonical Dubins parameters.
pub fn dh_to_dubins(j: &JointValues) -> Result<CscPath> {
    CscPath::new(j.theta1, PI - j.theta2, j.d3, j.theta4 - PI, PI - j.theta5).canonicalize()
}

/// `max(|x_fk - x_g| / max(1, |x_g|), |v_fk - v_g|)`, evaluated at the goal's
/// turning radius.
pub fn fk_residual(path: &CscPath, goal: &GoalPose) -> f64 {
    let (x, v) = fk_dubins_raw(path, goal.r);
    let xg = goal.position();
    let pos = (x - xg).norm() / xg.norm().max(1.0);
    let dir = (v - goal.direction()).norm();
    let res = pos.max(dir);
    if res.is_nan() {
        f64::INFINITY
    } else {
        res
    }
}

pub fn path_length(path: &CscPath, r: f64) -> f64 {
    path.length(r)
}

/// Equivalent unit-radius goal.
pub fn scale_goal(goal: &GoalPose) -> GoalPose {
    let s = 1.0 / goal.r;
    GoalPose { x: [goal.x[0] * s, goal.x[1] * s, goal.x[2] * s], v: goal.v, r: 1.0 }
}

/// Maps a unit-radius path to radius `r`.
pub fn unscale_path(path: &CscPath, r: f64) -> CscPath {
    CscPath { d: path.d * r, ..*path }
}

fn residual_vector(q: &SVector<f64, 5>, goal: &GoalPose) -> SVector<f64, 6> {
    let p = CscPath::new(q[0], q[1], q[2], q[3], q[4]);
    let (x, v) = fk_dubins_raw(&p, goal.r);
    let dx = x - goal.position();
    let dv = v - goal.direction();
    SVector::<f64, 6>::new(dx[0], dx[1], dx[2], dv[0], dv[1], dv[2])
}

/// Gauss-Newton refinement of a near-solution against the closed-form
/// forward kinematics. Returns the input unchanged if no step improves it.
pub fn refine_path(path: &CscPath, goal: &GoalPose, max_iter: usize) -> CscPath {
    let mut q = SVector::<f64, 5>::from(path.to_array());
    let mut f = residual_vector(&q, goal);
    let mut best = f.norm();
    if !best.is_finite() {
        return *path;
    }
    for _ in 0..max_iter {
        if best < 1e-15 {
            break;
        }
        let mut jac = SMatrix::<f64, 6, 5>::zeros();
        for k in 0..5 {
            let h = 1e-7 * (1.0 + q[k].abs());
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let col = (residual_vector(&qp, goal) - residual_vector(&qm, goal)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&(-f), 1e-10 * svd.singular_values[0].max(1e-300)) else {
            break;
        };
        let q_new = q + step;
        let f_new = residual_vector(&q_new, goal);
        let n_new = f_new.norm();
        if !(n_new < best) {
            break;
        }
        q = q_new;
        f = f_new;
        best = n_new;
        if step.amax() < 1e-15 {
            break;
        }
    }
    CscPath::new(q[0], q[1], q[2], q[3], q[4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn close(a: Vector3<f64>, b: [f64; 3], tol: f64) -> bool {
        (a - Vector3::from(b)).amax() < tol
    }

    #[test]
    fn straight_path() {
        let g = fk_dubins(&CscPath::new(0.0, 0.0, 5.0, 0.0, 0.0), 1.0).unwrap();
        assert!(close(g.position(), [0.0, 0.0, 5.0], 1e-15));
        assert!(close(g.direction(), [0.0, 0.0, 1.0], 1e-15));
    }

    #[test]
    fn quarter_arc() {
        let g = fk_dubins(&CscPath::new(0.0, FRAC_PI_2, 0.0, 0.0, 0.0), 1.0).unwrap();
        assert!(close(g.position(), [1.0, 0.0, 1.0], 1e-15));
        assert!(close(g.direction(), [1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn prismatic_joint_at_zero_is_identity() {
        assert_eq!(dh_transform(3, 0.0).unwrap(), HomTransform::identity());
    }

    #[test]
    fn first_joint_at_zero() {
        let a = dh_transform(1, 0.0).unwrap().0;
        assert_eq!([a[(0, 0)], a[(0, 1)], a[(0, 2)], a[(0, 3)]], [1.0, 0.0, 0.0, 1.0]);
        assert!(dh_transform(6, 0.0).is_err());
        assert!(dh_transform(2, f64::NAN).is_err());
    }

    #[test]
    fn dh_mapping() {
        let j = dubins_to_dh(&CscPath::new(0.0, 0.0, 5.0, 0.0, 0.0));
        assert_eq!(
            [j.theta1, j.theta2, j.d3, j.theta4, j.theta5],
            [0.0, PI, 5.0, PI, PI]
        );
        let j = dubins_to_dh(&CscPath::new(0.1, 1.0, 2.0, -0.5, 0.3));
        assert_eq!(j.theta2, PI - 1.0);
        assert_eq!(j.theta4, -0.5 + PI);
        assert_eq!(j.theta5, PI - 0.3);
    }

    #[test]
    fn chain_matches_closed_form_examples() {
        for (p, x, v) in [
            (CscPath::new(0.0, 0.0, 5.0, 0.0, 0.0), [0.0, 0.0, 5.0], [0.0, 0.0, 1.0]),
            (CscPath::new(0.0, FRAC_PI_2, 0.0, 0.0, 0.0), [1.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
        ] {
            let g = fk_chain(&dubins_to_dh(&p)).unwrap();
            assert!(close(g.position(), x, 1e-14), "{g:?}");
            assert!(close(g.direction(), v, 1e-14));
        }
    }

    #[test]
    fn fifth_joint_at_pi_consistent_with_chain() {
        // theta5 = pi is a path without a second arc
        let j = JointValues { theta1: 0.4, theta2: 2.0, d3: 1.5, theta4: 0.3, theta5: PI };
        let via_chain = fk_chain(&j).unwrap();
        let via_dubins = fk_dubins(&dh_to_dubins(&j).unwrap(), 1.0).unwrap();
        assert!((via_chain.position() - via_dubins.position()).amax() < 1e-12);
        assert!((via_chain.direction() - via_dubins.direction()).amax() < 1e-12);
        let a5 = dh_transform(5, PI).unwrap();
        assert!(a5.orthonormality_error() < 1e-15);
        assert!(close(a5.translation(), [-1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn path_lengths() {
        assert_eq!(path_length(&CscPath::new(0.0, 0.0, 5.0, 0.0, 0.0), 1.0), 5.0);
        let l = path_length(&CscPath::new(0.0, FRAC_PI_2, 0.0, 0.0, FRAC_PI_2), 2.0);
        assert!((l - TAU).abs() < 1e-15);
        let l = path_length(&CscPath::new(0.0, PI, 1.0, 0.0, PI), 1.0);
        assert!((l - (TAU + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn residual_zero_on_exact_pair_and_sensitive_to_psi() {
        let p = CscPath::new(0.3, 1.2, 0.7, -2.0, 2.5);
        let g = fk_dubins(&p, 1.0).unwrap();
        assert!(fk_residual(&p, &g) < 1e-12);
        let bumped = CscPath { psi1: p.psi1 + 1e-3, ..p };
        assert!(fk_residual(&bumped, &g) > 1e-5);
    }

    #[test]
    fn scaling() {
        let g = GoalPose::new([0.0, 0.0, 10.0], [0.0, 0.0, 1.0], 2.0).unwrap();
        let s = scale_goal(&g);
        assert_eq!(s.x, [0.0, 0.0, 5.0]);
        assert_eq!(s.r, 1.0);
        let u = GoalPose::new([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(scale_goal(&u), u);
        let p = CscPath::new(0.1, 0.2, 3.0, 0.4, 0.5);
        assert_eq!(unscale_path(&p, 2.0).d, 6.0);
    }

    #[test]
    fn refine_recovers_perturbed_path() {
        let p = CscPath::new(0.3, 1.2, 0.7, -2.0, 2.5);
        let g = fk_dubins(&p, 1.0).unwrap();
        let start = CscPath::new(0.3 + 1e-4, 1.2 - 2e-4, 0.7 + 1e-4, -2.0, 2.5 + 1e-4);
        let q = refine_path(&start, &g, 10);
        assert!(q.distance(&p) < 1e-10, "{q:?}");
    }
}
