use std::f64::consts::PI;

use dubins3d::poly::{interpolate, UniPoly};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

/// Horner evaluation with error-free transformations, so that the samples
/// carry only their final rounding.
fn accurate_eval(c: &[f64], x: f64) -> f64 {
    let (mut s, mut err) = (0.0f64, 0.0f64);
    for &a in c.iter().rev() {
        let p = s * x;
        let p_err = s.mul_add(x, -p);
        let t = p + a;
        let z = t - p;
        let t_err = (p - (t - z)) + (a - z);
        s = t;
        err = err.mul_add(x, p_err + t_err);
    }
    s + err
}

#[test]
fn degree_twenty_recovered_from_chebyshev_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let nodes = chebyshev_nodes(25);
    for _ in 0..2000 {
        let c: Vec<f64> = (0..21).map(|_| rng.random_range(-1.0..1.0)).collect();
        let samples: Vec<(f64, f64)> = nodes.iter().map(|&x| (x, accurate_eval(&c, x))).collect();
        let q = interpolate(&samples).unwrap();
        let err: f64 = (0..25).map(|i| (q.coeff(i) - c.get(i).copied().unwrap_or(0.0)).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-8 * norm, "relative error {:e}", err / norm);
    }
}

#[test]
fn interpolant_reproduces_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let xs: Vec<f64> = (0..13).map(|k| -3.0 + 0.5 * k as f64).collect();
    let samples: Vec<(f64, f64)> = xs.iter().map(|&x| (x, rng.random_range(-10.0..10.0))).collect();
    let q = interpolate(&samples).unwrap();
    let ymax = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    for (x, y) in samples {
        assert!((q.eval(x) - y).abs() < 1e-9 * ymax);
    }
}

#[test]
fn repeated_nodes_rejected() {
    assert!(interpolate(&[(0.0, 1.0), (1.0, 2.0), (0.0, 3.0)]).is_err());
}

proptest! {
    #[test]
    fn known_roots_recovered(mut roots in prop::collection::vec(-5.0f64..5.0, 1..9)) {
        roots.sort_by(f64::total_cmp);
        prop_assume!(roots.windows(2).all(|w| w[1] - w[0] > 0.05));
        let p = UniPoly::from_roots(&roots);
        let found = p.real_roots().unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for (f, r) in found.iter().zip(roots.iter()) {
            prop_assert!((f.value - r).abs() < 1e-8 * (1.0 + r.abs()), "{} vs {}", f.value, r);
        }
    }

    #[test]
    fn root_count_bounded_by_degree(coeffs in prop::collection::vec(-3.0f64..3.0, 2..14)) {
        let p = UniPoly::new(coeffs);
        prop_assume!(p.degree().unwrap_or(0) >= 1);
        let roots = p.real_roots().unwrap();
        let total: usize = roots.iter().map(|r| r.multiplicity).sum();
        prop_assert!(total <= p.degree().unwrap());
    }
}

#[test]
fn complex_roots_are_not_reported() {
    // (x^2 + 1)(x^2 + 4)(x - 0.5)
    let p = &(&UniPoly::new(vec![1.0, 0.0, 1.0]) * &UniPoly::new(vec![4.0, 0.0, 1.0])) * &UniPoly::from_roots(&[0.5]);
    let roots = p.real_roots().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0].value - 0.5).abs() < 1e-12);
}

#[test]
fn double_root_reported_once() {
    let p = UniPoly::from_roots(&[1.5, 1.5, -2.0]);
    let roots = p.real_roots().unwrap();
    assert_eq!(roots.len(), 2);
    assert_eq!(roots.iter().find(|r| (r.value - 1.5).abs() < 1e-6).unwrap().multiplicity, 2);
}
