//! Entry points: scale, classify, dispatch, fall back, unscale.

use std::time::Instant;

use crate::backsub::solve_general;
use crate::error::{Error, Result};
use crate::kinematics::{scale_goal, unscale_path};
use crate::special::{
    default_family_samples, detect, near_planar_paths, solve_family, solve_planar, solve_straight, solve_unknown_singular,
    DEFAULT_FAMILY_SAMPLES,
};
use crate::types::{dedup_and_sort, CaseTag, CscPath, GoalPose, SolutionKind, SolutionSet, Tolerances};

fn checked_goal(goal: &GoalPose) -> Result<GoalPose> {
    let g = GoalPose::new(goal.x, goal.v, goal.r)?;
    if g.x == [0.0; 3] && g.v[2] > 0.0 && g.v[0] == 0.0 && g.v[1] == 0.0 {
        return Err(Error::InvalidGoal("goal coincides with the start pose".into()));
    }
    Ok(g)
}

fn fallback(goal: &GoalPose, tol: &Tolerances, case: CaseTag, why: String) -> SolutionSet {
    let mut set = solve_unknown_singular(goal, tol);
    set.diagnostics.case = case;
    set.diagnostics.notes.insert(0, why);
    set
}

fn dispatch(unit: &GoalPose, tol: &Tolerances) -> SolutionSet {
    let case = detect(unit, tol);
    match case {
        CaseTag::General => match solve_general(unit, tol) {
            Ok(mut set) => {
                let extra = near_planar_paths(unit, tol, &mut set.diagnostics);
                if !extra.is_empty() {
                    set.diagnostics.notes.push("continued planar solutions".into());
                    let mut paths = std::mem::take(&mut set.paths);
                    paths.extend(extra);
                    set.paths = dedup_and_sort(paths, unit.r, tol);
                }
                if set.paths.is_empty() {
                    fallback(unit, tol, case, "general pipeline returned no path".into())
                } else {
                    set
                }
            }
            Err(e) => fallback(unit, tol, case, format!("general pipeline failed: {e}")),
        },
        CaseTag::InfiniteFamily => {
            match solve_family(unit, &default_family_samples(DEFAULT_FAMILY_SAMPLES), tol) {
                Ok(set) => set,
                Err(e) => fallback(unit, tol, case, format!("family solver failed: {e}")),
            }
        }
        CaseTag::Planar => {
            let set = solve_planar(unit, tol);
            if set.paths.is_empty() {
                fallback(unit, tol, case, "planar solver returned no path".into())
            } else {
                set
            }
        }
        CaseTag::StraightLine => solve_straight(unit),
        CaseTag::UnknownSingular => fallback(unit, tol, case, "unclassified singular goal".into()),
    }
}

/// All valid CSC paths to `goal`, shortest first.
pub fn solve(goal: &GoalPose, tol: &Tolerances) -> Result<SolutionSet> {
    tol.validate()?;
    let goal = checked_goal(goal)?;
    let start = Instant::now();
    let unit = scale_goal(&goal);
    let mut set = dispatch(&unit, tol);
    set.goal = goal;
    for p in &mut set.paths {
        *p = unscale_path(p, goal.r);
    }
    if let Some(f) = set.family.take() {
        set.family = Some(f.rescaled(goal.r));
    }
    set.diagnostics.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(set)
}

/// The shortest path and the kind of set it was taken from. For a family the
/// straight member is returned when it exists; otherwise the shortest of the
/// representatives sampled at evenly spaced first-arc directions, which need
/// not be the shortest member of the whole family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shortest {
    pub path: CscPath,
    pub kind: SolutionKind,
}

pub fn shortest(goal: &GoalPose, tol: &Tolerances) -> Result<Shortest> {
    let set = solve(goal, tol)?;
    let path = if set.kind == SolutionKind::InfiniteFamily {
        set.paths
            .iter()
            .find(|p| p.psi1 == 0.0 && p.psi2 == 0.0)
            .or_else(|| set.paths.first())
    } else {
        set.paths.first()
    };
    path.map(|p| Shortest { path: *p, kind: set.kind }).ok_or(Error::NoSolution)
}
