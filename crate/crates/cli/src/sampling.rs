use dubins3d::GoalPose;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator for sample `index`: the run seed selects the key and the index
/// selects the stream, so samples do not depend on how work is partitioned.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform direction from a normalized Gaussian vector.
pub fn unit_vector<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Goal `index` of a run: position uniform in `[-half, half]^3`, direction
/// uniform on the sphere.
pub fn cube_goal(seed: u64, index: u64, half: f64, r: f64) -> GoalPose {
    let mut rng = sample_rng(seed, index);
    let x = [
        rng.random_range(-half..=half),
        rng.random_range(-half..=half),
        rng.random_range(-half..=half),
    ];
    let v = unit_vector(&mut rng);
    GoalPose::new(x, v, r).expect("sampled goal is finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = cube_goal(42, 7, 4.0, 1.0);
        assert_eq!(a, cube_goal(42, 7, 4.0, 1.0));
        assert_ne!(a, cube_goal(42, 8, 4.0, 1.0));
        assert_ne!(a, cube_goal(43, 7, 4.0, 1.0));
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = sample_rng(1, 0);
        for _ in 0..100 {
            let v = unit_vector(&mut rng);
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn positions_stay_in_the_cube() {
        for i in 0..200 {
            let g = cube_goal(3, i, 2.5, 1.0);
            assert!(g.x.iter().all(|c| c.abs() <= 2.5));
        }
    }
}
