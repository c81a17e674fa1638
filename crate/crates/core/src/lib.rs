//! All CSC (arc, straight, arc) paths with bounded curvature between the
//! canonical start pose and a goal position and heading in 3D.
//!
//! A CSC path is treated as the joint space of an RRPRR arm whose end
//! effector must reach the goal. Inverse kinematics by elimination yields a
//! univariate polynomial in the half-angle of the fourth joint; every root is
//! back-substituted into the remaining joints and validated against forward
//! kinematics. Goals on which the elimination degenerates are handled
//! separately.
//!
//! ```
//! use dubins3d::{solve, GoalPose, Tolerances};
//!
//! let goal = GoalPose::new([2.64101, -1.78042, -0.371051], [-0.323321, 0.729589, 0.602631], 1.0)?;
//! let set = solve(&goal, &Tolerances::default())?;
//! assert_eq!(set.paths.len(), 7);
//! # Ok::<(), dubins3d::Error>(())
//! ```

pub mod backsub;
pub mod elimination;
pub mod error;
pub mod kinematics;
pub mod mpoly;
pub mod oracle;
pub mod poly;
pub mod solver;
pub mod special;
pub mod types;

pub use error::{Error, Result};
pub use kinematics::{fk_dubins, fk_residual, path_length};
pub use solver::{shortest, solve, Shortest};
pub use special::FamilyDescriptor;
pub use types::{
    CaseTag, CscPath, Diagnostics, GoalPose, JointValues, SolutionKind, SolutionSet, Tolerances,
};
