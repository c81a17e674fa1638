//! Independent numeric solver and geometric forward kinematics, used to
//! cross-check the analytic pipeline and to sample paths for export.

use std::f64::consts::{PI, TAU};

use nalgebra::{SMatrix, SVector, Vector3};

use crate::kinematics::fk_residual;
use crate::types::{CscPath, GoalPose};

#[derive(Debug, Clone, Copy)]
struct Frame {
    p: Vector3<f64>,
    /// Heading.
    t: Vector3<f64>,
    /// Unit vector from the position toward the current turning center.
    n: Vector3<f64>,
}

impl Frame {
    fn start(phi1: f64) -> Self {
        let (s, c) = phi1.sin_cos();
        Self { p: Vector3::zeros(), t: Vector3::z(), n: Vector3::new(c, s, 0.0) }
    }

    fn arc(&self, psi: f64, r: f64) -> Self {
        let (s, c) = psi.sin_cos();
        Self {
            p: self.p + self.n * (r * (1.0 - c)) + self.t * (r * s),
            t: self.t * c + self.n * s,
            n: self.n * c - self.t * s,
        }
    }

    fn straight(&self, d: f64) -> Self {
        Self { p: self.p + self.t * d, ..*self }
    }

    /// Rotates the turning direction about the heading.
    fn twist(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self { n: self.n * c + self.t.cross(&self.n) * s, ..*self }
    }
}

/// End of the first arc, and the frame at the start of the second arc.
fn frames(path: &CscPath, r: f64) -> (Frame, Frame) {
    let f1 = Frame::start(path.phi1).arc(path.psi1, r);
    let f2 = f1.straight(path.d).twist(path.phi2);
    (f1, f2)
}

/// End position and heading by composing the three segments.
pub fn end_pose_geometric(path: &CscPath, r: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (_, f2) = frames(path, r);
    let end = f2.arc(path.psi2, r);
    (end.p, end.t)
}

/// `samples` points evenly spaced in arc length along the path, endpoints
/// included.
pub fn fk_geometric(path: &CscPath, r: f64, samples: usize) -> Vec<Vector3<f64>> {
    let n = samples.max(2);
    let (f1, f2) = frames(path, r);
    let (l1, l2) = (r * path.psi1, r * path.psi1 + path.d);
    let total = path.length(r);
    let start = Frame::start(path.phi1);
    (0..n)
        .map(|k| {
            if k == n - 1 {
                return f2.arc(path.psi2, r).p;
            }
            let s = total * k as f64 / (n - 1) as f64;
            if s <= l1 {
                start.arc(s / r, r).p
            } else if s <= l2 {
                f1.straight(s - l1).p
            } else {
                f2.arc((s - l2) / r, r).p
            }
        })
        .collect()
}

/// Residual over the four angles with the straight length set to its
/// least-squares optimum. Returns the residual and that length.
fn reduced_residual(q: &SVector<f64, 4>, goal: &GoalPose) -> (SVector<f64, 6>, f64) {
    let r = goal.r;
    let f1 = Frame::start(q[0]).arc(q[1], r);
    let f2 = f1.twist(q[2]);
    let end = f2.arc(q[3], r);
    // end position is affine in d along the straight heading
    let offset = end.p - f1.p;
    let d = f1.t.dot(&(goal.position() - f1.p - offset));
    let pos = f1.p + f1.t * d + offset - goal.position();
    let dir = end.t - goal.direction();
    (SVector::<f64, 6>::new(pos[0], pos[1], pos[2], dir[0], dir[1], dir[2]), d)
}

fn levenberg_marquardt(mut q: SVector<f64, 4>, goal: &GoalPose) -> (SVector<f64, 4>, f64, f64) {
    let (mut f, mut d) = reduced_residual(&q, goal);
    let mut cost = f.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..100 {
        if cost < 1e-28 {
            break;
        }
        let mut jac = SMatrix::<f64, 6, 4>::zeros();
        for k in 0..4 {
            let h = 1e-7;
            let mut qp = q;
            qp[k] += h;
            jac.set_column(k, &((reduced_residual(&qp, goal).0 - f) / h));
        }
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * f;
        let mut improved = false;
        for _ in 0..10 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = a.lu().solve(&(-g)) else {
                lambda *= 10.0;
                continue;
            };
            let qn = q + step;
            let (fnew, dn) = reduced_residual(&qn, goal);
            let cn = fnew.norm_squared();
            if cn < cost {
                q = qn;
                f = fnew;
                d = dn;
                let rel = (cost - cn) / cost;
                cost = cn;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-12 || step.amax() > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (q, d, cost.sqrt())
}

/// Multi-start local minimization of the forward-kinematics residual from a
/// `grid_density^4` grid over the four angles. Converged minima with
/// residual below `1e-8` and nonnegative straight length are returned
/// canonicalized and deduplicated. Not guaranteed to be complete.
pub fn numeric_solve(goal: &GoalPose, grid_density: usize) -> Vec<CscPath> {
    let n = grid_density.max(1);
    let phis: Vec<f64> = (0..n).map(|k| -PI + TAU * (k as f64 + 0.5) / n as f64).collect();
    let psis: Vec<f64> = (0..n).map(|k| TAU * (k as f64 + 0.5) / n as f64).collect();
    let mut out: Vec<CscPath> = Vec::new();
    for &a in &phis {
        for &b in &psis {
            for &c in &phis {
                for &e in &psis {
                    let (q, d, res) = levenberg_marquardt(SVector::<f64, 4>::new(a, b, c, e), goal);
                    if res > 1e-9 || d < -1e-9 {
                        continue;
                    }
                    let Ok(p) = CscPath::new(q[0], q[1], d.max(0.0), q[2], q[3]).canonicalize() else {
                        continue;
                    };
                    if fk_residual(&p, goal) >= 1e-8 {
                        continue;
                    }
                    if !out.iter().any(|o| o.approx_eq(&p, 1e-5, 1e-5)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| crate::types::compare_paths(a, b, goal.r));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::fk_dubins;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn straight_samples() {
        let pts = fk_geometric(&CscPath::new(0.0, 0.0, 5.0, 0.0, 0.0), 1.0, 2);
        assert_eq!(pts, vec![Vector3::zeros(), Vector3::new(0.0, 0.0, 5.0)]);
    }

    #[test]
    fn quarter_arc_endpoint() {
        let pts = fk_geometric(&CscPath::new(0.0, FRAC_PI_2, 0.0, 0.0, 0.0), 1.0, 5);
        assert!((pts[4] - Vector3::new(1.0, 0.0, 1.0)).amax() < 1e-15);
    }

    #[test]
    fn endpoint_matches_closed_form() {
        let path = CscPath::new(-2.1, 4.0, 1.3, 0.8, 2.2);
        for r in [1.0, 2.5] {
            let g = fk_dubins(&path, r).unwrap();
            let (x, v) = end_pose_geometric(&path, r);
            assert!((x - g.position()).amax() < 1e-10);
            assert!((v - g.direction()).amax() < 1e-10);
            assert!((fk_geometric(&path, r, 7)[6] - g.position()).amax() < 1e-10);
        }
    }

    #[test]
    fn straight_goal_found() {
        let g = GoalPose::new([0.0, 0.0, 5.0], [0.0, 0.0, 1.0], 1.0).unwrap();
        let sols = numeric_solve(&g, 4);
        assert!(sols.iter().any(|p| p.psi1 < 1e-6 && p.psi2 < 1e-6 && (p.d - 5.0).abs() < 1e-6));
    }

    #[test]
    fn generator_found() {
        let path = CscPath::new(0.9, 2.2, 1.1, -1.4, 1.0);
        let g = fk_dubins(&path, 1.0).unwrap();
        let sols = numeric_solve(&g, 6);
        assert!(sols.iter().all(|p| fk_residual(p, &g) < 1e-8));
        assert!(sols.iter().any(|p| p.distance(&path) < 1e-6), "{sols:?}");
    }
}
