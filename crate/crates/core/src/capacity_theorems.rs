//! Exact admissible regions for semi-deterministic channels with Markov
//! sources and for more-capable channels, the inner-bound auxiliaries that
//! achieve them, frontier sweeps, and admissibility decisions.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aux_chain::{
    local_refine, pattern_polish, FactoredMarginal, InnerAuxChain, InnerCaps, RowSampler,
};
use crate::channel_class::{
    io_mutual_information, is_deterministic_output, more_capable_test, ChannelSpec, Matrix, MoreCapableVerdict,
    Receiver, DEFAULT_CLASS_BUDGET, TOL_CLASS,
};
use crate::common_part::{SourceSpec, TOL_MARKOV};
use crate::error::{Error, Result};
use crate::inner_bound::{search_inner, InnerSystem, WitnessVerdict, EXTRAPOLATION_NOTE};
use crate::prob_core::{entropy_of, Alphabet, ConditionalPmf, JointPmf, TOL_ZERO};
use crate::report::{BoundReport, TOL_STRICT};
use crate::search::{best_of, restart_rng, SearchBudget};

/// Slack allowed in the [`EntropyTuple`] consistency checks.
pub const TOL_TUPLE: f64 = 1e-9;
pub const DEFAULT_DECISION_BUDGET: SearchBudget = SearchBudget::new(32, 300);
/// Restarts and steps per weight vector in a frontier sweep.
pub const DEFAULT_FRONTIER_BUDGET: SearchBudget = SearchBudget::new(4, 200);

/// `(H(K), H(S), H(T), H(ST))` of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyTuple {
    pub hk: f64,
    pub hs: f64,
    pub ht: f64,
    pub hst: f64,
}

impl EntropyTuple {
    /// Rejects tuples no source can have: negative entries, `H(ST)` below
    /// `max(H(S), H(T))` or above `H(S) + H(T)`, `H(K)` above `min(H(S), H(T))`.
    pub fn new(hk: f64, hs: f64, ht: f64, hst: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidEntropyTuple(msg));
        if [hk, hs, ht, hst].iter().any(|v| !v.is_finite() || *v < -TOL_TUPLE) {
            return bad(format!("entries must be finite and nonnegative: ({hk}, {hs}, {ht}, {hst})"));
        }
        if hst < hs.max(ht) - TOL_TUPLE {
            return bad(format!("H(ST) = {hst} < max(H(S), H(T)) = {}", hs.max(ht)));
        }
        if hst > hs + ht + TOL_TUPLE {
            return bad(format!("H(ST) = {hst} > H(S) + H(T) = {}", hs + ht));
        }
        if hk > hs.min(ht) + TOL_TUPLE {
            return bad(format!("H(K) = {hk} > min(H(S), H(T)) = {}", hs.min(ht)));
        }
        Ok(Self { hk, hs, ht, hst })
    }

    pub fn of_source(src: &SourceSpec) -> Self {
        let e = src.entropies();
        Self {
            hk: e.hk,
            hs: e.hs,
            ht: e.ht,
            hst: e.hst,
        }
    }

    /// `I(S;T|K) = H(S) + H(T) - H(ST) - H(K)`, valid when `K` is the common
    /// part.
    pub fn rate_loss(&self) -> f64 {
        self.hs + self.ht - self.hst - self.hk
    }

    /// Entropies per channel use at bandwidth expansion `r`.
    pub fn per_channel_use(self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("R must be positive, got {r}")));
        }
        Ok(Self {
            hk: self.hk / r,
            hs: self.hs / r,
            ht: self.ht / r,
            hst: self.hst / r,
        })
    }
}

fn require_axes(j: &JointPmf, names: &[&str]) -> Result<()> {
    if j.axis_names() != names {
        return Err(Error::IncompatibleAlphabets(format!(
            "auxiliary joint must have axes {names:?}, got {:?}",
            j.axis_names()
        )));
    }
    Ok(())
}

fn with_channel(aux: &JointPmf, ch: &ChannelSpec) -> Result<JointPmf> {
    let x = aux.axes().last().expect("checked axes");
    if x.size() != ch.x_alpha().size() {
        return Err(Error::IncompatibleAlphabets(format!(
            "auxiliary X has {} symbols, channel input has {}",
            x.size(),
            ch.x_alpha().size()
        )));
    }
    Ok(aux.chain_compose(ch.pyz_x())?)
}

/// Entries `"25"` to `"29"` for an auxiliary law over `(W, V, X)`.
///
/// The tuple must come from a Markov source; with `K` the common part that
/// means `H(S) + H(T) - H(ST) - H(K) = 0`.
pub fn eval_thm3(et: &EntropyTuple, ch: &ChannelSpec, pwvx: &JointPmf) -> Result<BoundReport> {
    if !is_deterministic_output(ch, Receiver::Y) {
        return Err(Error::NotSemiDeterministic);
    }
    let loss = et.rate_loss();
    if loss > TOL_MARKOV {
        return Err(Error::NotMarkovSource(loss));
    }
    require_axes(pwvx, &["W", "V", "X"])?;
    let j = with_channel(pwvx, ch)?;
    let i = |a: &[&str], b: &[&str], c: &[&str]| j.info_measure(a, b, c).expect("fixed axes");
    let h_y = j.entropy(&["Y"], &[])?;
    let h_y_wv = j.entropy(&["Y"], &["W", "V"])?;
    let mut rep = BoundReport::new("semi-deterministic", 1.0);
    rep.push("25", et.hk, i(&["W"], &["Y"], &[]).min(i(&["W"], &["Z"], &[])));
    rep.push("26", et.hs, h_y);
    rep.push("27", et.ht, i(&["W", "V"], &["Z"], &[]));
    rep.push("28", et.hst, h_y_wv + i(&["V", "W"], &["Z"], &[]));
    rep.push("29", et.hst, i(&["W"], &["Y"], &[]) + h_y_wv + i(&["V"], &["Z"], &["W"]));
    Ok(rep)
}

/// [`eval_thm3`] for a source, checking `I(S;T|K) = 0` directly.
pub fn eval_thm3_for_source(src: &SourceSpec, ch: &ChannelSpec, pwvx: &JointPmf) -> Result<BoundReport> {
    let loss = src.rate_loss();
    if loss > TOL_MARKOV {
        return Err(Error::NotMarkovSource(loss));
    }
    let mut et = EntropyTuple::of_source(src);
    // the identity holds to rounding; pin it so the tuple check agrees
    et.hst = et.hst.max(et.hs + et.ht - et.hk - TOL_MARKOV);
    eval_thm3(&et, ch, pwvx)
}

/// Entries `"33"` to `"35"` for an auxiliary law over `(W, X)`, where `W`
/// stands for the superposition auxiliary.
pub fn eval_thm4(ht: f64, hst: f64, ch: &ChannelSpec, pwx: &JointPmf) -> Result<BoundReport> {
    require_axes(pwx, &["W", "X"])?;
    let j = with_channel(pwx, ch)?;
    let i = |a: &[&str], b: &[&str], c: &[&str]| j.info_measure(a, b, c).expect("fixed axes");
    let w_z = i(&["W"], &["Z"], &[]);
    let mut rep = BoundReport::new("more-capable", 1.0);
    rep.push("33", hst, i(&["X"], &["Y"], &[]));
    rep.push("34", ht, w_z);
    rep.push("35", hst, i(&["X"], &["Y"], &["W"]) + w_z);
    Ok(rep)
}

/// `[I(X;Y), I(W;Z), I(X;Y|W) + I(W;Z)]` straight from the marginal channel
/// matrices. Used in the inner loops of the grid and random searches.
pub fn thm4_rhs(py: &Matrix, pz: &Matrix, pw: &[f64], px_given_w: &[&[f64]]) -> [f64; 3] {
    let nx = py.len();
    let nz = pz[0].len();
    let mut px = vec![0.0; nx];
    let mut pz_out = vec![0.0; nz];
    let mut xy_given_w = 0.0;
    let mut hz_given_w = 0.0;
    let mut pzw = vec![0.0; nz];
    for (&a, row) in pw.iter().zip(px_given_w) {
        if a <= TOL_ZERO {
            continue;
        }
        pzw.iter_mut().for_each(|v| *v = 0.0);
        for (x, &p) in row.iter().enumerate() {
            px[x] += a * p;
            for (acc, &q) in pzw.iter_mut().zip(&pz[x]) {
                *acc += p * q;
            }
        }
        for (o, &v) in pz_out.iter_mut().zip(&pzw) {
            *o += a * v;
        }
        hz_given_w += a * entropy_of(&pzw);
        xy_given_w += a * io_mutual_information(row, py);
    }
    let w_z = (entropy_of(&pz_out) - hz_given_w).max(0.0);
    [io_mutual_information(&px, py), w_z, xy_given_w + w_z]
}

/// Slack vector `[s33, s34, s35]` for fixed `(H(T), H(ST))`.
fn thm4_slacks(rhs: [f64; 3], ht: f64, hst: f64) -> [f64; 3] {
    [rhs[0] - hst, rhs[1] - ht, rhs[2] - hst]
}

fn min3(v: [f64; 3]) -> f64 {
    v[0].min(v[1]).min(v[2])
}

fn thm4_rhs_of(m: &FactoredMarginal, py: &Matrix, pz: &Matrix) -> [f64; 3] {
    let rows: Vec<&[f64]> = (0..m.x_given_head().rows()).map(|r| m.x_given_head().row(r)).collect();
    thm4_rhs(py, pz, m.head(), &rows)
}

fn alpha(name: &str, n: usize) -> Result<Alphabet> {
    Ok(Alphabet::new(name, n)?)
}

/// Inner chain realizing the more-capable region: `W = (T, W~)` indexed
/// `t * |W~| + w~`, `U = X` drawn from `P(x|w~)`, `V` constant, and the
/// channel input equal to `U`. `(S, T)` is independent of `W~`.
pub fn thm4_inner_chain(src: &SourceSpec, pwx: &JointPmf) -> Result<InnerAuxChain> {
    require_axes(pwx, &["W", "X"])?;
    let m = FactoredMarginal::from_joint(pwx)?;
    let nw = m.head().len();
    let nx = pwx.axes()[1].size();
    let (ns, nt) = (src.s_alpha().size(), src.t_alpha().size());
    let caps = InnerCaps { w: nt * nw, u: nx, v: 1 };
    let cols = caps.w * caps.u;
    let mut wuv = vec![0.0; ns * nt * cols];
    for s in 0..ns {
        for t in 0..nt {
            let row = &mut wuv[(s * nt + t) * cols..][..cols];
            for w in 0..nw {
                for x in 0..nx {
                    row[(t * nw + w) * nx + x] = m.head()[w] * m.x_given_head().row(w)[x];
                }
            }
        }
    }
    let aux = vec![alpha("W", caps.w)?, alpha("U", caps.u)?, alpha("V", 1)?];
    InnerAuxChain::new(
        ConditionalPmf::new(vec![src.s_alpha().clone(), src.t_alpha().clone()], aux.clone(), wuv)?,
        ConditionalPmf::deterministic(aux, vec![alpha("X", nx)?], |r| r % nx)?,
    )
}

/// Inner chain realizing the semi-deterministic region by choosing `U = Y`:
/// `P(w,u,v) = sum_x P(w,v,x) 1[phi(x) = u]`, `X` drawn from
/// `P(x|w,v) 1[phi(x) = u] / P(u|w,v)`, auxiliaries independent of `(S, T)`.
pub fn thm3_inner_chain(src: &SourceSpec, ch: &ChannelSpec, pwvx: &JointPmf) -> Result<InnerAuxChain> {
    if !is_deterministic_output(ch, Receiver::Y) {
        return Err(Error::NotSemiDeterministic);
    }
    require_axes(pwvx, &["W", "V", "X"])?;
    let phi: Vec<usize> = ch
        .marginal(Receiver::Y)
        .iter()
        .map(|row| row.iter().position(|&p| p >= 1.0 - TOL_ZERO).expect("deterministic row"))
        .collect();
    let sizes = pwvx.sizes();
    let (nw, nv, nx) = (sizes[0], sizes[1], sizes[2]);
    if nx != phi.len() {
        return Err(Error::IncompatibleAlphabets("auxiliary X does not match the channel".into()));
    }
    let ny = ch.y_alpha().size();
    let mut pwuv = vec![0.0; nw * ny * nv];
    let mut x_table = vec![0.0; nw * ny * nv * nx];
    for w in 0..nw {
        for v in 0..nv {
            for (x, &u) in phi.iter().enumerate() {
                let p = pwvx.get(&[w, v, x]);
                pwuv[(w * ny + u) * nv + v] += p;
                x_table[((w * ny + u) * nv + v) * nx + x] = p;
            }
        }
    }
    for (row, &mass) in x_table.chunks_mut(nx).zip(&pwuv) {
        if mass > TOL_ZERO {
            row.iter_mut().for_each(|p| *p /= mass);
        } else {
            row.iter_mut().for_each(|p| *p = 1.0 / nx as f64);
        }
    }
    let aux = vec![alpha("W", nw)?, alpha("U", ny)?, alpha("V", nv)?];
    InnerAuxChain::new(
        ConditionalPmf::constant_rows(vec![src.s_alpha().clone(), src.t_alpha().clone()], aux.clone(), &pwuv)?,
        ConditionalPmf::new(aux, vec![alpha("X", nx)?], x_table)?,
    )
}

/// Result of the exhaustive binary-input search with a binary auxiliary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOptimum {
    pub value: f64,
    /// `(P(W=0), P(X=0|W=0), P(X=0|W=1))` at the optimum.
    pub argmax: [f64; 3],
    pub rhs: [f64; 3],
    pub evaluations: usize,
}

impl GridOptimum {
    pub fn marginal(&self) -> FactoredMarginal {
        binary_marginal(self.argmax)
    }
}

fn binary_marginal(p: [f64; 3]) -> FactoredMarginal {
    let [a, p0, p1] = p;
    FactoredMarginal::new(
        vec![Alphabet::new("W", 2).expect("size 2")],
        vec![a, 1.0 - a],
        ConditionalPmf::new(
            vec![Alphabet::new("W", 2).expect("size 2")],
            vec![Alphabet::new("X", 2).expect("size 2")],
            vec![p0, 1.0 - p0, p1, 1.0 - p1],
        )
        .expect("grid points are distributions"),
    )
    .expect("grid points are distributions")
}

/// Maximizes `score(rhs)` over all laws on `W x X` with `|W| = |X| = 2`.
///
/// A 0.01 grid over `(P(W=0), P(X=0|W=0), P(X=0|W=1))` is followed by a
/// 0.001 grid in a box of half-width 0.01 around the 32 best coarse points,
/// and a zoom from the 4 best fine points: a 21-point-per-axis grid in a box
/// that halves around the incumbent until its half-width is below 1e-10.
pub fn thm4_binary_grid(ch: &ChannelSpec, score: impl Fn([f64; 3]) -> f64 + Sync) -> Result<GridOptimum> {
    if ch.x_alpha().size() != 2 {
        return Err(Error::InvalidArgument("grid search needs a binary input".into()));
    }
    const COARSE: usize = 100;
    const KEEP: usize = 32;
    const FINE: i64 = 10;
    const ZOOM: i64 = 10;
    const ZOOM_STARTS: usize = 4;
    const ZOOM_MIN: f64 = 1e-10;
    let py = ch.marginal(Receiver::Y);
    let pz = ch.marginal(Receiver::Z);
    let eval = |p: [f64; 3]| {
        let rhs = thm4_rhs(&py, &pz, &[p[0], 1.0 - p[0]], &[&[p[1], 1.0 - p[1]], &[p[2], 1.0 - p[2]]]);
        (score(rhs), rhs)
    };
    let step = 1.0 / COARSE as f64;
    let mut coarse: Vec<(f64, [usize; 3])> = (0..=COARSE)
        .into_par_iter()
        .flat_map_iter(|ia| {
            let eval = &eval;
            (0..=COARSE).flat_map(move |i0| {
                (0..=COARSE).map(move |i1| {
                    let p = [ia as f64 * step, i0 as f64 * step, i1 as f64 * step];
                    (eval(p).0, [ia, i0, i1])
                })
            })
        })
        .collect();
    let mut evaluations = coarse.len();
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    coarse.truncate(KEEP);
    let fine_step = step / FINE as f64;
    let fine: Vec<(f64, [f64; 3])> = coarse
        .par_iter()
        .map(|&(_, idx)| {
            let mut best = (f64::NEG_INFINITY, [0.0; 3]);
            for da in -FINE..=FINE {
                for d0 in -FINE..=FINE {
                    for d1 in -FINE..=FINE {
                        let p = [
                            (idx[0] as f64 * step + da as f64 * fine_step).clamp(0.0, 1.0),
                            (idx[1] as f64 * step + d0 as f64 * fine_step).clamp(0.0, 1.0),
                            (idx[2] as f64 * step + d1 as f64 * fine_step).clamp(0.0, 1.0),
                        ];
                        let v = eval(p).0;
                        if v > best.0 {
                            best = (v, p);
                        }
                    }
                }
            }
            best
        })
        .collect();
    evaluations += fine.len() * (2 * FINE as usize + 1).pow(3);
    let mut fine = fine;
    fine.sort_by(|a, b| b.0.total_cmp(&a.0));
    // zoom: a full grid in a box around the incumbent, halving the box each
    // level; unlike coordinate or random-direction moves this keeps making
    // progress along ridges where two RHS terms tie
    let (value, p, zoom_evals) = fine
        .par_iter()
        .take(ZOOM_STARTS)
        .map(|&(v, p)| {
            let (mut value, mut p, mut evals) = (v, p, 0);
            let mut h = fine_step;
            while h > ZOOM_MIN {
                let center = p;
                let cell = h / ZOOM as f64;
                for da in -ZOOM..=ZOOM {
                    for d0 in -ZOOM..=ZOOM {
                        for d1 in -ZOOM..=ZOOM {
                            let q = [
                                (center[0] + da as f64 * cell).clamp(0.0, 1.0),
                                (center[1] + d0 as f64 * cell).clamp(0.0, 1.0),
                                (center[2] + d1 as f64 * cell).clamp(0.0, 1.0),
                            ];
                            let w = eval(q).0;
                            if w > value {
                                value = w;
                                p = q;
                            }
                        }
                    }
                }
                evals += (2 * ZOOM as usize + 1).pow(3);
                h *= 0.5;
            }
            (value, p, evals)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0.0; 3], 0), |acc, (v, p, e)| {
            if v > acc.0 {
                (v, p, acc.2 + e)
            } else {
                (acc.0, acc.1, acc.2 + e)
            }
        });
    evaluations += zoom_evals;
    Ok(GridOptimum {
        value,
        argmax: p,
        rhs: eval(p).1,
        evaluations,
    })
}

/// Multistart search over laws on `W x X` with `|W| = w_size`, maximizing
/// `score(rhs)`.
pub fn thm4_random_search(
    ch: &ChannelSpec,
    w_size: usize,
    budget: SearchBudget,
    seed: u64,
    score: impl Fn([f64; 3]) -> f64 + Sync,
) -> Result<(FactoredMarginal, f64)> {
    let py = ch.marginal(Receiver::Y);
    let pz = ch.marginal(Receiver::Z);
    let head = vec![alpha("W", w_size)?];
    let nx = ch.x_alpha().size();
    let objective = |m: &FactoredMarginal| score(thm4_rhs_of(m, &py, &pz));
    let (_, m, v) = best_of(budget.restarts.max(1), |k| {
        let mut rng = restart_rng(seed, k);
        let start = FactoredMarginal::sample(head.clone(), nx, RowSampler::for_restart(k), &mut rng)
            .expect("valid sizes");
        let (m, _) = local_refine(objective, start, budget.steps, &mut rng);
        pattern_polish(objective, m, budget.steps, &mut rng)
    })
    .expect("at least one restart");
    Ok((m, v))
}

fn thm3_search<F>(
    ch: &ChannelSpec,
    w_size: usize,
    v_size: usize,
    budget: SearchBudget,
    seed: u64,
    score: F,
) -> Result<(FactoredMarginal, f64)>
where
    F: Fn(&BoundReport) -> f64 + Sync,
{
    // any Markov tuple works for RHS-only objectives
    let et = EntropyTuple::new(0.0, 0.0, 0.0, 0.0)?;
    let head = vec![alpha("W", w_size)?, alpha("V", v_size)?];
    let nx = ch.x_alpha().size();
    let objective = |m: &FactoredMarginal| score(&eval_thm3(&et, ch, &m.joint()).expect("validated"));
    {
        let mut rng = restart_rng(seed, 0);
        eval_thm3(&et, ch, &FactoredMarginal::sample(head.clone(), nx, RowSampler::Dirichlet, &mut rng)?.joint())?;
    }
    let (_, m, v) = best_of(budget.restarts.max(1), |k| {
        let mut rng = restart_rng(seed, k);
        let start = FactoredMarginal::sample(head.clone(), nx, RowSampler::for_restart(k), &mut rng)
            .expect("valid sizes");
        let (m, _) = local_refine(objective, start, budget.steps, &mut rng);
        pattern_polish(objective, m, budget.steps, &mut rng)
    })
    .expect("at least one restart");
    Ok((m, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    #[serde(rename = "3")]
    SemiDeterministic,
    #[serde(rename = "4")]
    MoreCapable,
}

impl Theorem {
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Theorem::SemiDeterministic => &["25", "26", "27", "28", "29"],
            Theorem::MoreCapable => &["33", "34", "35"],
        }
    }
}

/// Auxiliary cardinalities for the exact-region searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionCaps {
    pub w: usize,
    pub v: usize,
}

impl RegionCaps {
    pub fn default_for(x_size: usize) -> Self {
        Self {
            w: x_size + 1,
            v: x_size + 1,
        }
    }
}

/// One Pareto-nondominated RHS vector and the auxiliary law achieving it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierSample {
    pub labels: Vec<String>,
    pub rhs: Vec<f64>,
    /// Scalarization weights that produced this point.
    pub weights: Vec<f64>,
    pub aux: FactoredMarginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub theorem: Theorem,
    pub samples: Vec<FrontierSample>,
    pub budget: SearchBudget,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Weight vectors: for every pair of objectives, 11 evenly spaced convex
/// combinations. Duplicates (the unit vectors) are dropped.
pub fn weight_grid(dims: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..dims {
        for j in i + 1..dims {
            for k in 0..=10 {
                let mut w = vec![0.0; dims];
                w[i] = k as f64 / 10.0;
                w[j] = 1.0 - w[i];
                if !out.contains(&w) {
                    out.push(w);
                }
            }
        }
    }
    if dims == 1 {
        out.push(vec![1.0]);
    }
    out
}

/// `a` dominates `b`: no worse anywhere, better somewhere.
fn dominates(a: &[f64], b: &[f64]) -> bool {
    const EPS: f64 = 1e-12;
    a.iter().zip(b).all(|(x, y)| *x >= *y - EPS) && a.iter().zip(b).any(|(x, y)| *x > *y + EPS)
}

/// Keeps nondominated points, dropping exact duplicates (first kept), in
/// lexicographic order of the RHS vectors.
pub fn pareto_filter(mut samples: Vec<FrontierSample>) -> Vec<FrontierSample> {
    let keep: Vec<bool> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            samples.iter().enumerate().all(|(j, o)| {
                !(dominates(&o.rhs, &s.rhs) || (j < i && o.rhs.iter().zip(&s.rhs).all(|(a, b)| (a - b).abs() <= 1e-12)))
            })
        })
        .collect();
    let mut k = keep.into_iter();
    samples.retain(|_| k.next().expect("same length"));
    samples.sort_by(|a, b| {
        a.rhs
            .iter()
            .zip(&b.rhs)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    samples
}

/// Sweeps the exact region of one theorem by weighted-sum scalarization of
/// its RHS vector and returns the Pareto-nondominated points.
pub fn region_frontier(
    theorem: Theorem,
    ch: &ChannelSpec,
    caps: RegionCaps,
    budget: SearchBudget,
    seed: u64,
) -> Result<Frontier> {
    let labels: Vec<String> = theorem.labels().iter().map(|s| s.to_string()).collect();
    let mut notes = Vec::new();
    let weights = weight_grid(labels.len());
    let mut samples = Vec::with_capacity(weights.len());
    match theorem {
        Theorem::SemiDeterministic => {
            if !is_deterministic_output(ch, Receiver::Y) {
                return Err(Error::NotSemiDeterministic);
            }
            for (k, w) in weights.iter().enumerate() {
                let score = |rep: &BoundReport| rep.entries.iter().zip(w).map(|(e, c)| c * e.rhs).sum::<f64>();
                let (aux, _) = thm3_search(ch, caps.w, caps.v, budget, seed.wrapping_add(k as u64), score)?;
                let et = EntropyTuple::new(0.0, 0.0, 0.0, 0.0)?;
                let rep = eval_thm3(&et, ch, &aux.joint())?;
                samples.push(FrontierSample {
                    labels: labels.clone(),
                    rhs: rep.entries.iter().map(|e| e.rhs).collect(),
                    weights: w.clone(),
                    aux,
                });
            }
        }
        Theorem::MoreCapable => {
            if let Some(note) = more_capable_warning(ch, seed) {
                notes.push(note);
            }
            for (k, w) in weights.iter().enumerate() {
                let score = |r: [f64; 3]| r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                let (aux, _) = thm4_random_search(ch, caps.w, budget, seed.wrapping_add(k as u64), score)?;
                let rep = eval_thm4(0.0, 0.0, ch, &aux.joint())?;
                samples.push(FrontierSample {
                    labels: labels.clone(),
                    rhs: rep.entries.iter().map(|e| e.rhs).collect(),
                    weights: w.clone(),
                    aux,
                });
            }
        }
    }
    notes.push("weighted-sum scalarization only reaches the convex part of the frontier".into());
    Ok(Frontier {
        theorem,
        samples: pareto_filter(samples),
        budget,
        seed,
        notes,
    })
}

fn more_capable_warning(ch: &ChannelSpec, seed: u64) -> Option<String> {
    let mc = more_capable_test(ch, DEFAULT_CLASS_BUDGET, seed, TOL_CLASS);
    (mc.verdict == MoreCapableVerdict::Violated).then(|| {
        format!(
            "warning: channel is not more capable (I(X;Y) - I(X;Z) = {:.6} at some input); the exact region does not apply",
            mc.min_gap
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Separation,
    HanCosta,
    Thm3,
    Thm4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// A witness auxiliary satisfies every condition strictly.
    Admissible,
    /// Every searched auxiliary violates some condition by more than the
    /// tolerance. Heuristic: the search cannot exhaust all auxiliaries.
    NotAdmissible,
    /// The best slack found is within the tolerance of zero.
    Boundary,
    /// Inner-bound search found no witness; says nothing about admissibility.
    NoWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Chain(InnerAuxChain),
    Marginal(FactoredMarginal),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub method: Method,
    pub verdict: Verdict,
    pub min_slack: f64,
    pub report: BoundReport,
    /// Best auxiliary found; a witness when the verdict is admissible.
    pub best: Witness,
    pub budget: SearchBudget,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Search settings shared by [`decide_admissible`] callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOptions {
    pub budget: SearchBudget,
    pub seed: u64,
    pub r: f64,
    pub tol_strict: f64,
    pub inner_caps: Option<InnerCaps>,
    pub region_caps: Option<RegionCaps>,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_DECISION_BUDGET,
            seed: 0,
            r: 1.0,
            tol_strict: TOL_STRICT,
            inner_caps: None,
            region_caps: None,
        }
    }
}

fn exact_verdict(min_slack: f64, tol: f64) -> Verdict {
    if min_slack > tol {
        Verdict::Admissible
    } else if min_slack < -tol {
        Verdict::NotAdmissible
    } else {
        Verdict::Boundary
    }
}

/// Decides admissibility of `src` over `ch` with one method.
pub fn decide_admissible(src: &SourceSpec, ch: &ChannelSpec, method: Method, opts: DecisionOptions) -> Result<Decision> {
    let nx = ch.x_alpha().size();
    let et = EntropyTuple::of_source(src).per_channel_use(opts.r)?;
    let mut notes = Vec::new();
    if opts.r != 1.0 {
        notes.push(EXTRAPOLATION_NOTE.to_string());
    }
    let (verdict, report, best) = match method {
        Method::Separation | Method::HanCosta => {
            let system = if method == Method::HanCosta {
                InnerSystem::HanCosta
            } else {
                InnerSystem::Separation
            };
            let caps = opts.inner_caps.unwrap_or(InnerCaps::default_for(nx));
            let w = search_inner(system, src, ch, caps, opts.budget, opts.seed, opts.r, opts.tol_strict)?;
            let verdict = match w.verdict {
                WitnessVerdict::Admissible => Verdict::Admissible,
                WitnessVerdict::NoWitness => Verdict::NoWitness,
            };
            (verdict, w.report, Witness::Chain(w.chain))
        }
        Method::Thm3 => {
            let loss = src.rate_loss();
            if loss > TOL_MARKOV {
                return Err(Error::NotMarkovSource(loss));
            }
            let caps = opts.region_caps.unwrap_or(RegionCaps::default_for(nx));
            let mut et3 = et;
            et3.hst = et3.hst.max(et3.hs + et3.ht - et3.hk - TOL_MARKOV);
            let (aux, _) = thm3_search(ch, caps.w, caps.v, opts.budget, opts.seed, |rep| {
                rep.entries
                    .iter()
                    .zip([et3.hk, et3.hs, et3.ht, et3.hst, et3.hst])
                    .map(|(e, lhs)| e.rhs - lhs)
                    .fold(f64::INFINITY, f64::min)
            })?;
            let report = eval_thm3(&et3, ch, &aux.joint())?.with_tolerance(opts.tol_strict);
            (exact_verdict(report.min_slack(), opts.tol_strict), report, Witness::Marginal(aux))
        }
        Method::Thm4 => {
            if let Some(note) = more_capable_warning(ch, opts.seed) {
                notes.push(note);
            }
            let (ht, hst) = (et.ht, et.hst);
            let score = |rhs: [f64; 3]| min3(thm4_slacks(rhs, ht, hst));
            let caps = opts.region_caps.unwrap_or(RegionCaps::default_for(nx));
            let (mut aux, mut value) = thm4_random_search(ch, caps.w, opts.budget, opts.seed, score)?;
            if nx == 2 {
                let grid = thm4_binary_grid(ch, score)?;
                notes.push(format!(
                    "binary input: |W| = 2 certified on a hierarchical grid ({} evaluations); |W| = {} searched at random",
                    grid.evaluations, caps.w
                ));
                if grid.value >= value {
                    value = grid.value;
                    aux = grid.marginal();
                }
            }
            let report = eval_thm4(ht, hst, ch, &aux.joint())?.with_tolerance(opts.tol_strict);
            debug_assert!((report.min_slack() - value).abs() < 1e-9);
            notes.push("decision uses only H(T) and H(ST) of the source".into());
            (exact_verdict(report.min_slack(), opts.tol_strict), report, Witness::Marginal(aux))
        }
    };
    let mut verdict = verdict;
    if et.hst <= TOL_ZERO {
        verdict = Verdict::Admissible;
        notes.push("H(ST) = 0: nothing needs to be transmitted".into());
    }
    if verdict == Verdict::NotAdmissible {
        notes.push(format!(
            "heuristic: best slack over {} restarts x {} steps is below -tol",
            opts.budget.restarts, opts.budget.steps
        ));
    }
    Ok(Decision {
        method,
        verdict,
        min_slack: report.min_slack(),
        report,
        best,
        budget: opts.budget,
        seed: opts.seed,
        notes,
    })
}

/// Per-cell check of the more-capable inequality for conditional input
/// laws: returns the smallest `I(X;Y|c) - I(X;Z|c)` over the rows of
/// `px_given_cell`.
pub fn conditional_capability_gap(ch: &ChannelSpec, px_given_cell: &ConditionalPmf) -> f64 {
    let py = ch.marginal(Receiver::Y);
    let pz = ch.marginal(Receiver::Z);
    (0..px_given_cell.rows())
        .map(|r| {
            let row = px_given_cell.row(r);
            io_mutual_information(row, &py) - io_mutual_information(row, &pz)
        })
        .fold(f64::INFINITY, f64::min)
}

/// A random law on `W x X` (test and CLI helper).
pub fn random_pwx<R: Rng + ?Sized>(w_size: usize, x_size: usize, rng: &mut R) -> Result<JointPmf> {
    Ok(FactoredMarginal::sample(vec![alpha("W", w_size)?], x_size, RowSampler::Dirichlet, rng)?.joint())
}

/// A random law on `W x V x X` (test and CLI helper).
pub fn random_pwvx<R: Rng + ?Sized>(w_size: usize, v_size: usize, x_size: usize, rng: &mut R) -> Result<JointPmf> {
    Ok(
        FactoredMarginal::sample(vec![alpha("W", w_size)?, alpha("V", v_size)?], x_size, RowSampler::Dirichlet, rng)?
            .joint(),
    )
}
