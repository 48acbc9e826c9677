//! Sampling on and projecting onto the probability simplex.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Draws a point uniformly from the simplex (Dirichlet with all ones).
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// A uniformly chosen vertex of the simplex.
pub fn sample_vertex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[rng.random_range(0..n)] = 1.0;
    v
}

/// Euclidean projection onto the probability simplex.
pub fn project(v: &mut [f64]) {
    let n = v.len();
    if n == 0 {
        return;
    }
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Guard against drift so rows stay normalized to machine precision.
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / n as f64);
    }
}

/// Adds isotropic Gaussian noise of scale `sigma` and projects back.
pub fn perturb<R: Rng + ?Sized>(v: &mut [f64], sigma: f64, rng: &mut R) {
    for x in v.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x += sigma * z;
    }
    project(v);
}
