//! Independent oracles for the spectral and equilibrium solvers.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streamnet::dynamics::{positive_equilibrium, LogisticParams};
use streamnet::network::{build_connection_matrix, canonical_three_node, straight_chain};
use streamnet::spectral::{growth_rate, growth_rate_bounds, null_vector};
use streamnet::{Allocation, ThreeNodeKind};

/// Characteristic polynomial coefficients by Faddeev–LeVerrier, highest
/// degree first (monic).
fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Largest real root: last sign change on a fine scan of the Gershgorin
/// interval, refined by bisection.
fn largest_real_root(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let radius = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let c = char_poly(a);
    let (lo, hi) = (-radius - 1.0, radius + 1.0);
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let mut x = hi;
    let sign_hi = horner(&c, hi).signum();
    while x > lo {
        let y = x - h;
        if horner(&c, y).signum() != sign_hi {
            let (mut a0, mut b0) = (y, x);
            for _ in 0..200 {
                let mid = 0.5 * (a0 + b0);
                if horner(&c, mid).signum() == sign_hi {
                    b0 = mid;
                } else {
                    a0 = mid;
                }
            }
            return 0.5 * (a0 + b0);
        }
        x = y;
    }
    panic!("no real root found");
}

#[test]
fn growth_rate_matches_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let n = rng.random_range(2..=4);
        let d = rng.random_range(0.1..2.0);
        let q = rng.random_range(0.0..2.0);
        let net = common::random_network(&mut rng, n, d, q);
        let total = rng.random_range(0.5..4.0);
        let r = common::random_allocation(&mut rng, n, total, 0.2);
        let l = build_connection_matrix(&net).unwrap();
        let rho = growth_rate(&l, &r).unwrap().rho;
        let oracle = largest_real_root(&l.jacobian(&r));
        assert!(
            (rho - oracle).abs() <= 1e-7 * oracle.abs().max(1.0),
            "rho {rho} vs oracle {oracle}"
        );
    }
}

#[test]
fn two_node_growth_rate_closed_form() {
    // J = [[r1 - d - q, d], [d + q, r2 - d]]
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let d: f64 = rng.random_range(0.01..3.0);
        let q: f64 = rng.random_range(0.0..3.0);
        let r1: f64 = rng.random_range(0.0..5.0);
        let r2: f64 = rng.random_range(0.0..5.0) + 1e-3;
        let (a, b) = (r1 - d - q, r2 - d);
        let oracle = 0.5 * (a + b) + (0.25 * (a - b).powi(2) + d * (d + q)).sqrt();
        let net = straight_chain(2, d, q).unwrap();
        let l = build_connection_matrix(&net).unwrap();
        let rho = growth_rate(&l, &[r1, r2]).unwrap().rho;
        assert!((rho - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
    }
}

#[test]
fn null_vector_matches_level_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let n = rng.random_range(1..=9);
        let d = rng.random_range(0.05..3.0);
        let q = rng.random_range(0.0..3.0);
        let net = common::random_network(&mut rng, n, d, q);
        let l = build_connection_matrix(&net).unwrap();
        let theta = null_vector(&l).unwrap();
        let x = (d + q) / d;
        let raw: Vec<f64> = net.levels().iter().map(|&f| x.powi(f as i32)).collect();
        let s: f64 = raw.iter().sum();
        for (t, v) in theta.iter().zip(&raw) {
            assert!((t - v / s).abs() <= 1e-10 * (v / s), "{t} vs {}", v / s);
        }
    }
}

#[test]
fn lower_bound_for_tributary_by_hand() {
    // theta = (d, d, d + q) / (3d + q) for the tributary.
    let (d, q) = (0.4, 1.1);
    let net = canonical_three_node(ThreeNodeKind::Tributary, d, q).unwrap();
    let l = build_connection_matrix(&net).unwrap();
    let r = [1.0, 2.0, 0.5];
    let s = 3.0 * d + q;
    let expected = (d * 1.0 + d * 2.0 + (d + q) * 0.5) / s;
    let (lo, hi) = growth_rate_bounds(&l, &r).unwrap();
    assert!((lo - expected).abs() < 1e-12);
    assert_eq!(hi, 2.0);
}

/// Equilibrium of the 2-node chain with all resources upstream.
#[test]
fn two_node_equilibria_by_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..30 {
        let d = rng.random_range(0.05..2.0);
        let q = rng.random_range(0.0..2.0);
        let k = rng.random_range(0.5..4.0);
        let r = rng.random_range(0.5..5.0);
        let net = straight_chain(2, d, q).unwrap();
        let p = LogisticParams::new(Allocation::new(vec![r, 0.0]).unwrap(), k).unwrap();
        let eq = positive_equilibrium(&net, &p).unwrap();
        // Node 2 has no growth, so at rest (d + q) u1 = d u2 and node 1 sits at K.
        assert!((eq.u_star[0] - k).abs() <= 1e-10 * k);
        assert!((eq.u_star[1] - (d + q) * k / d).abs() <= 1e-10 * k * (d + q) / d);
    }
}

/// Equilibrium of the 2-node chain with resources on both nodes, checked
/// against a direct bracketed solve of the scalar equation in `u1`.
#[test]
fn two_node_equilibria_by_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..30 {
        let d = rng.random_range(0.05..2.0);
        let q = rng.random_range(0.0..2.0);
        let k = rng.random_range(0.5..4.0);
        let r1 = rng.random_range(0.1..5.0);
        let r2 = rng.random_range(0.1..5.0);
        // Node 2: r2 u2 (1 - u2/K) + (d+q) u1 - d u2 = 0  =>  u2(u1) > 0.
        let u2_of = |u1: f64| {
            let (a, b, c) = (r2 / k, d - r2, -(d + q) * u1);
            (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
        };
        let g = |u1: f64| r1 * u1 * (1.0 - u1 / k) - (d + q) * u1 + d * u2_of(u1);
        let (mut lo, mut hi) = (1e-12, 100.0 * k * (1.0 + q / d));
        assert!(g(lo) > 0.0 && g(hi) < 0.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u1 = 0.5 * (lo + hi);
        let oracle = DVector::from_vec(vec![u1, u2_of(u1)]);
        let net = straight_chain(2, d, q).unwrap();
        let p = LogisticParams::new(Allocation::new(vec![r1, r2]).unwrap(), k).unwrap();
        let eq = positive_equilibrium(&net, &p).unwrap();
        assert!((&eq.u_star - &oracle).amax() <= 1e-9 * oracle.amax());
    }
}
