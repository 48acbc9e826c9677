//! Gács–Körner common part of a two-component source.
//!
//! `K` is the index of the connected component of the bipartite support graph
//! of `P(s,t)`, so it is simultaneously a function of `S` and of `T`, and no
//! finer common function exists.

use serde::Serialize;

use crate::prob_core::{Alphabet, ConditionalPmf, JointPmf, ProbError, Result, TOL_ZERO};

/// Tolerance for declaring `I(S;T|K) = 0`.
pub const TOL_MARKOV: f64 = 1e-9;

/// A joint source `P(s,t)` with its common part `K = f(S) = g(T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    s_alpha: Alphabet,
    t_alpha: Alphabet,
    k_alpha: Alphabet,
    pst: JointPmf,
    f: Vec<usize>,
    g: Vec<usize>,
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so roots are stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Computes the common part of a two-axis PMF. The first axis is taken as
/// `S`, the second as `T`; they are renamed to `"S"` and `"T"`.
///
/// Components are labelled in order of their smallest `S` symbol. Symbols with
/// zero marginal mass all go to one extra sink label placed last.
pub fn gacs_korner(pst: &JointPmf) -> Result<SourceSpec> {
    if pst.axes().len() != 2 {
        return Err(ProbError::InvalidArgument(
            "source PMF must have exactly two axes".into(),
        ));
    }
    let ns = pst.axes()[0].size();
    let nt = pst.axes()[1].size();
    let s_alpha = Alphabet::new("S", ns)?;
    let t_alpha = Alphabet::new("T", nt)?;
    let pst = JointPmf::new(vec![s_alpha.clone(), t_alpha.clone()], pst.table().to_vec())?;
    let table = pst.table();

    let mut dsu = Dsu::new(ns + nt);
    let mut s_mass = vec![0.0; ns];
    let mut t_mass = vec![0.0; nt];
    for s in 0..ns {
        for t in 0..nt {
            let p = table[s * nt + t];
            s_mass[s] += p;
            t_mass[t] += p;
            if p > TOL_ZERO {
                dsu.union(s, ns + t);
            }
        }
    }

    let mut label_of_root = vec![usize::MAX; ns + nt];
    let mut next = 0;
    let mut f = vec![usize::MAX; ns];
    for s in 0..ns {
        if s_mass[s] <= TOL_ZERO {
            continue;
        }
        let r = dsu.find(s);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = next;
            next += 1;
        }
        f[s] = label_of_root[r];
    }
    let mut g = vec![usize::MAX; nt];
    for t in 0..nt {
        if t_mass[t] <= TOL_ZERO {
            continue;
        }
        // a positive-mass T symbol always shares an edge with some S symbol
        g[t] = label_of_root[dsu.find(ns + t)];
    }
    let needs_sink = f.iter().chain(&g).any(|&l| l == usize::MAX);
    let k_size = if needs_sink { next + 1 } else { next.max(1) };
    for l in f.iter_mut().chain(g.iter_mut()) {
        if *l == usize::MAX {
            *l = next;
        }
    }
    Ok(SourceSpec {
        k_alpha: Alphabet::new("K", k_size)?,
        s_alpha,
        t_alpha,
        pst,
        f,
        g,
    })
}

impl SourceSpec {
    /// Builds a source from a raw `[s][t]` table.
    pub fn from_table(s_size: usize, t_size: usize, table: Vec<f64>) -> Result<Self> {
        let pst = JointPmf::new(
            vec![Alphabet::new("S", s_size)?, Alphabet::new("T", t_size)?],
            table,
        )?;
        gacs_korner(&pst)
    }

    pub fn pst(&self) -> &JointPmf {
        &self.pst
    }

    pub fn s_alpha(&self) -> &Alphabet {
        &self.s_alpha
    }

    pub fn t_alpha(&self) -> &Alphabet {
        &self.t_alpha
    }

    pub fn k_alpha(&self) -> &Alphabet {
        &self.k_alpha
    }

    /// Component label of each `S` symbol.
    pub fn f(&self) -> &[usize] {
        &self.f
    }

    /// Component label of each `T` symbol.
    pub fn g(&self) -> &[usize] {
        &self.g
    }

    /// Joint over `(K, S, T)` with `K = f(S)` adjoined deterministically.
    pub fn joint_kst(&self) -> JointPmf {
        let nt = self.t_alpha.size();
        let k_given_st = ConditionalPmf::deterministic(
            vec![self.s_alpha.clone(), self.t_alpha.clone()],
            vec![self.k_alpha.clone()],
            |row| self.f[row / nt],
        )
        .expect("labels are in range by construction");
        self.pst
            .chain_compose(&k_given_st)
            .and_then(|j| j.permute(&["K", "S", "T"]))
            .expect("fresh K axis cannot collide")
    }

    pub fn entropies(&self) -> SourceEntropies {
        let j = self.joint_kst();
        let h = |a: &[&str], c: &[&str]| j.entropy(a, c).expect("valid groups");
        let i = |a: &[&str], b: &[&str], c: &[&str]| j.info_measure(a, b, c).expect("valid groups");
        SourceEntropies {
            hk: h(&["K"], &[]),
            hs: h(&["S"], &[]),
            ht: h(&["T"], &[]),
            hst: h(&["S", "T"], &[]),
            i_st: i(&["S"], &["T"], &[]),
            i_st_given_k: i(&["S"], &["T"], &["K"]),
        }
    }

    /// `I(S;T|K)`, the part of the dependence not captured by the common part.
    pub fn rate_loss(&self) -> f64 {
        self.entropies().i_st_given_k
    }

    /// True when `S - K - T` is a Markov chain within [`TOL_MARKOV`].
    pub fn is_markov(&self) -> bool {
        self.rate_loss() <= TOL_MARKOV
    }

    /// True when every support cell satisfies `f(s) = g(t)`.
    pub fn is_consistent(&self) -> bool {
        let nt = self.t_alpha.size();
        self.pst.table().iter().enumerate().all(|(cell, &p)| {
            p <= TOL_ZERO || self.f[cell / nt] == self.g[cell % nt]
        })
    }
}

/// The source-side quantities that appear on the left of every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceEntropies {
    pub hk: f64,
    pub hs: f64,
    pub ht: f64,
    pub hst: f64,
    pub i_st: f64,
    pub i_st_given_k: f64,
}

/// `|I(S;T|K) + H(K) - I(S;T)|`.
pub fn common_identity_residual(spec: &SourceSpec) -> f64 {
    let e = spec.entropies();
    (e.i_st_given_k + e.hk - e.i_st).abs()
}
