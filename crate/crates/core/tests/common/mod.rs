//! Independent oracles and fixtures shared by the integration tests.
//!
//! Entropies here are computed from raw row-major tables by explicit index
//! decoding, without going through the library's information measures.

#![allow(dead_code)]

use bcrk::channel_class::{ChannelSpec, Matrix};
use bcrk::common_part::SourceSpec;
use bcrk::search::restart_rng;
use bcrk::simplex::sample_uniform;
use rand::Rng;

pub fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

pub fn hb(p: f64) -> f64 {
    h(&[p, 1.0 - p])
}

/// Marginal of a row-major table onto the axes in `keep` (in that order).
pub fn marginal(table: &[f64], sizes: &[usize], keep: &[usize]) -> Vec<f64> {
    let out_len: usize = keep.iter().map(|&k| sizes[k]).product();
    let mut out = vec![0.0; out_len];
    let mut idx = vec![0usize; sizes.len()];
    for &p in table {
        let mut o = 0;
        for &k in keep {
            o = o * sizes[k] + idx[k];
        }
        out[o] += p;
        for a in (0..sizes.len()).rev() {
            idx[a] += 1;
            if idx[a] < sizes[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

pub fn h_of(table: &[f64], sizes: &[usize], axes: &[usize]) -> f64 {
    h(&marginal(table, sizes, axes))
}

/// `I(A;B|C)` from entropies of marginals.
pub fn mi(table: &[f64], sizes: &[usize], a: &[usize], b: &[usize], c: &[usize]) -> f64 {
    let cat = |x: &[&[usize]]| x.concat();
    h_of(table, sizes, &cat(&[a, c])) + h_of(table, sizes, &cat(&[b, c]))
        - h_of(table, sizes, &cat(&[a, b, c]))
        - h_of(table, sizes, c)
}

pub fn io_mi(px: &[f64], w: &Matrix) -> f64 {
    let ny = w[0].len();
    let mut joint = Vec::with_capacity(px.len() * ny);
    for (x, row) in w.iter().enumerate() {
        joint.extend(row.iter().map(|&p| px[x] * p));
    }
    mi(&joint, &[px.len(), ny], &[0], &[1], &[])
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    (0..rows).map(|_| sample_uniform(cols, rng)).collect()
}

pub fn cascade(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|z| row.iter().zip(b).map(|(p, brow)| p * brow[z]).sum())
                .collect()
        })
        .collect()
}

pub fn bsc(p: f64) -> Matrix {
    vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
}

/// Erasure output last.
pub fn bec(e: f64) -> Matrix {
    vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]]
}

pub fn channel(py: &Matrix, pz: &Matrix) -> ChannelSpec {
    ChannelSpec::from_marginals(py, pz).expect("valid marginals")
}

/// Random source with a sparse support, so common parts are nontrivial.
pub fn random_source(seed: u64, max_size: usize) -> SourceSpec {
    let mut rng = restart_rng(seed, 17);
    let s = rng.random_range(1..=max_size);
    let t = rng.random_range(1..=max_size);
    let mut p = sample_uniform(s * t, &mut rng);
    let keep = rng.random_range(0..s * t);
    for (i, v) in p.iter_mut().enumerate() {
        if i != keep && rng.random_bool(0.4) {
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    SourceSpec::from_table(s, t, p).expect("normalized")
}

/// Random channel with `|X|, |Y|, |Z|` in `2..=max_size`.
pub fn random_channel(seed: u64, max_size: usize) -> ChannelSpec {
    let mut rng = restart_rng(seed, 23);
    let x = rng.random_range(2..=max_size);
    let y = rng.random_range(2..=max_size);
    let z = rng.random_range(2..=max_size);
    let table: Vec<f64> = (0..x).flat_map(|_| sample_uniform(y * z, &mut rng)).collect();
    ChannelSpec::from_table(x, y, z, table).expect("valid table")
}

/// Brute-force common part: the finest partition of `S` whose blocks
/// coincide with a partition of `T` on the support. Returns `H(K)`.
pub fn brute_force_common_entropy(pst: &[f64], s: usize, t: usize) -> f64 {
    let mut best: Option<(usize, Vec<usize>)> = None;
    for part in set_partitions(s) {
        let blocks = part.iter().max().map_or(0, |m| m + 1);
        // label of t must equal the block of every s it co-occurs with
        let mut label = vec![None; t];
        let mut ok = true;
        for si in 0..s {
            for ti in 0..t {
                if pst[si * t + ti] > 0.0 {
                    match label[ti] {
                        None => label[ti] = Some(part[si]),
                        Some(b) if b != part[si] => ok = false,
                        _ => {}
                    }
                }
            }
        }
        // blocks that carry no mass would inflate the count
        let used = (0..blocks).all(|b| {
            (0..s).any(|si| part[si] == b && (0..t).any(|ti| pst[si * t + ti] > 0.0))
        });
        if ok && used && best.as_ref().is_none_or(|(n, _)| blocks > *n) {
            best = Some((blocks, part));
        }
    }
    let (blocks, part) = best.expect("the one-block partition is always common");
    let mut pk = vec![0.0; blocks];
    for si in 0..s {
        pk[part[si]] += (0..t).map(|ti| pst[si * t + ti]).sum::<f64>();
    }
    h(&pk)
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            prefix.push(b);
            go(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

/// Smallest `I(X;Y) - I(X;Z)` over a grid of binary input laws.
pub fn binary_capability_gap(py: &Matrix, pz: &Matrix, points: usize) -> f64 {
    (0..=points)
        .map(|i| {
            let a = i as f64 / points as f64;
            let px = [a, 1.0 - a];
            io_mi(&px, py) - io_mi(&px, pz)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random Markov source: `S` and `T` independent given a common part with
/// `blocks` values; block `b` owns its own `S` and `T` symbols.
pub fn random_markov_source(seed: u64, blocks: usize, per_block: usize) -> SourceSpec {
    let mut rng = restart_rng(seed, 29);
    let pk = sample_uniform(blocks, &mut rng);
    let n = blocks * per_block;
    let mut p = vec![0.0; n * n];
    for (b, &mass) in pk.iter().enumerate() {
        let ps = sample_uniform(per_block, &mut rng);
        let pt = sample_uniform(per_block, &mut rng);
        for (i, a) in ps.iter().enumerate() {
            for (j, c) in pt.iter().enumerate() {
                p[(b * per_block + i) * n + b * per_block + j] = mass * a * c;
            }
        }
    }
    SourceSpec::from_table(n, n, p).expect("normalized")
}

/// Channel with `Y = phi(X)` for a random onto map and a random `Z`.
pub fn random_semi_deterministic(seed: u64, x: usize, y: usize, z: usize) -> ChannelSpec {
    let mut rng = restart_rng(seed, 31);
    let phi: Vec<usize> = (0..x).map(|i| if i < y { i } else { rng.random_range(0..y) }).collect();
    let py: Matrix = phi
        .iter()
        .map(|&u| (0..y).map(|k| if k == u { 1.0 } else { 0.0 }).collect())
        .collect();
    channel(&py, &random_matrix(x, z, &mut rng))
}
