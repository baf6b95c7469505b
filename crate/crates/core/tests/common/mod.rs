#![allow(dead_code)]

use rand::Rng;
use streamnet::network::{validate, StreamNetwork};

/// Random valid leveled network on `n` nodes, numbered by level.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, d: f64, q: f64) -> StreamNetwork {
    loop {
        let mut levels = vec![0usize];
        for _ in 1..n {
            let last = *levels.last().unwrap();
            levels.push(if rng.random_bool(0.5) { last + 1 } else { last });
        }
        let max = *levels.last().unwrap();
        let at = |l: usize| -> Vec<usize> { (0..n).filter(|&i| levels[i] == l).collect() };
        let mut edges = Vec::new();
        for l in 0..max {
            let (ups, downs) = (at(l), at(l + 1));
            for &j in &downs {
                edges.push((ups[rng.random_range(0..ups.len())], j));
            }
            for &i in &ups {
                if !edges.iter().any(|&(a, _)| a == i) {
                    edges.push((i, downs[rng.random_range(0..downs.len())]));
                }
            }
            for &i in &ups {
                for &j in &downs {
                    if !edges.contains(&(i, j)) && rng.random_bool(0.25) {
                        edges.push((i, j));
                    }
                }
            }
        }
        let net = StreamNetwork::new(levels.clone(), &edges, d, q).unwrap();
        if validate(&net).is_valid() {
            return net;
        }
    }
}

/// Random allocation with total `total`; entries are zero with probability `p_zero`.
pub fn random_allocation<R: Rng>(rng: &mut R, n: usize, total: f64, p_zero: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(p_zero) { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s * total).collect()
}

/// `exp` of a uniform draw in `[ln lo, ln hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}
