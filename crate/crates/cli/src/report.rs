use dubins3d::{fk_residual, Diagnostics, FamilyDescriptor, GoalPose, SolutionKind, SolutionSet};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct SolutionRow {
    pub phi1: f64,
    pub psi1: f64,
    pub d: f64,
    pub phi2: f64,
    pub psi2: f64,
    pub length: f64,
    pub fk_residual: f64,
}

/// Output of `solve`.
#[derive(Debug, Serialize)]
pub struct SolveReport<'a> {
    pub goal: &'a GoalPose,
    pub kind: SolutionKind,
    pub solutions: Vec<SolutionRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<&'a FamilyDescriptor>,
    pub diagnostics: &'a Diagnostics,
    pub wall_ms: f64,
}

impl<'a> SolveReport<'a> {
    pub fn new(set: &'a SolutionSet) -> Self {
        let solutions = set
            .paths
            .iter()
            .map(|p| SolutionRow {
                phi1: p.phi1,
                psi1: p.psi1,
                d: p.d,
                phi2: p.phi2,
                psi2: p.psi2,
                length: p.length(set.goal.r),
                fk_residual: fk_residual(p, &set.goal),
            })
            .collect();
        Self {
            goal: &set.goal,
            kind: set.kind,
            solutions,
            family: set.family.as_ref(),
            diagnostics: &set.diagnostics,
            wall_ms: set.diagnostics.wall_ms,
        }
    }
}

/// Summary printed by `sample`.
#[derive(Debug, Serialize)]
pub struct SampleSummary {
    pub n: u64,
    pub seed: u64,
    pub cube: f64,
    pub r: f64,
    pub min_count: usize,
    pub max_count: usize,
    pub families: u64,
    pub errors: u64,
    pub mean_wall_ms: f64,
}

/// Output of `bench`.
#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub n: u64,
    pub seed: u64,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl BenchReport {
    pub fn from_times(n: u64, seed: u64, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        let pick = |q: f64| {
            if times.is_empty() {
                0.0
            } else {
                times[((times.len() - 1) as f64 * q).round() as usize]
            }
        };
        let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
        Self {
            n,
            seed,
            median_ms: pick(0.5),
            mean_ms: mean,
            p95_ms: pick(0.95),
            min_ms: times.first().copied().unwrap_or(0.0),
            max_ms: times.last().copied().unwrap_or(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_statistics() {
        let r = BenchReport::from_times(5, 1, vec![5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!((r.median_ms, r.mean_ms, r.min_ms, r.max_ms), (3.0, 3.0, 1.0, 5.0));
        assert_eq!(r.p95_ms, 5.0);
    }

    #[test]
    fn single_timing() {
        let r = BenchReport::from_times(1, 1, vec![2.5]);
        assert_eq!((r.median_ms, r.p95_ms, r.mean_ms), (2.5, 2.5, 2.5));
    }
}
