//! Auxiliary-variable chains that parameterize the bound systems, their
//! composition into full joints, random sampling, and hill-climbing.
//!
//! Axis names are fixed: the source contributes `K`, `S`, `T`; auxiliaries
//! are `W`, `U`, `V`; the channel input is `X` and the outputs `Y`, `Z`.

use rand::Rng;
use serde::Serialize;

use crate::channel_class::ChannelSpec;
use crate::common_part::SourceSpec;
use crate::error::{Error, Result};
use crate::prob_core::{Alphabet, ConditionalPmf, JointPmf};
use crate::simplex;

/// Noise scale of a refinement move.
pub const REFINE_SIGMA: f64 = 0.05;

fn alpha(name: &str, size: usize) -> Result<Alphabet> {
    Ok(Alphabet::new(name, size)?)
}

fn check_size(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::IncompatibleAlphabets(format!(
            "{what}: expected {expected} symbols, got {got}"
        )));
    }
    Ok(())
}

/// Cardinalities of the inner auxiliaries `(W, U, V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InnerCaps {
    pub w: usize,
    pub u: usize,
    pub v: usize,
}

impl InnerCaps {
    /// `|W| = |X| + 2`, `|U| = |V| = |X| + 1`. A pragmatic default; no
    /// cardinality bound is known for these auxiliaries.
    pub fn default_for(x_size: usize) -> Self {
        Self {
            w: x_size + 2,
            u: x_size + 1,
            v: x_size + 1,
        }
    }
}

/// Cardinalities of the outer auxiliaries `(U, V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OuterCaps {
    pub u: usize,
    pub v: usize,
}

impl OuterCaps {
    pub fn default_for(x_size: usize) -> Self {
        Self {
            u: x_size + 1,
            v: x_size + 1,
        }
    }
}

/// `ST - WUV - X - YZ` given by `P(w,u,v|s,t)` and `P(x|w,u,v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerAuxChain {
    factor_wuv_st: ConditionalPmf,
    factor_x_wuv: ConditionalPmf,
}

impl InnerAuxChain {
    /// Both factors must use the canonical axis names.
    pub fn new(factor_wuv_st: ConditionalPmf, factor_x_wuv: ConditionalPmf) -> Result<Self> {
        let names = |a: &[Alphabet]| a.iter().map(|x| x.name().to_string()).collect::<Vec<_>>();
        if names(factor_wuv_st.given()) != ["S", "T"]
            || names(factor_wuv_st.output()) != ["W", "U", "V"]
            || names(factor_x_wuv.given()) != ["W", "U", "V"]
            || names(factor_x_wuv.output()) != ["X"]
        {
            return Err(Error::IncompatibleAlphabets(
                "inner chain factors must be P(W,U,V|S,T) and P(X|W,U,V)".into(),
            ));
        }
        if factor_wuv_st.output() != factor_x_wuv.given() {
            return Err(Error::IncompatibleAlphabets(
                "auxiliary alphabets differ between the two factors".into(),
            ));
        }
        Ok(Self {
            factor_wuv_st,
            factor_x_wuv,
        })
    }

    /// Builds a chain from raw tables indexed `[s][t][w][u][v]` and
    /// `[w][u][v][x]`.
    pub fn from_tables(
        s: usize,
        t: usize,
        caps: InnerCaps,
        x: usize,
        wuv_st: Vec<f64>,
        x_wuv: Vec<f64>,
    ) -> Result<Self> {
        let aux = vec![alpha("W", caps.w)?, alpha("U", caps.u)?, alpha("V", caps.v)?];
        Self::new(
            ConditionalPmf::new(vec![alpha("S", s)?, alpha("T", t)?], aux.clone(), wuv_st)?,
            ConditionalPmf::new(aux, vec![alpha("X", x)?], x_wuv)?,
        )
    }

    pub fn caps(&self) -> InnerCaps {
        let o = self.factor_wuv_st.output();
        InnerCaps {
            w: o[0].size(),
            u: o[1].size(),
            v: o[2].size(),
        }
    }

    pub fn x_size(&self) -> usize {
        self.factor_x_wuv.output()[0].size()
    }

    pub fn factor_wuv_st(&self) -> &ConditionalPmf {
        &self.factor_wuv_st
    }

    pub fn factor_x_wuv(&self) -> &ConditionalPmf {
        &self.factor_x_wuv
    }

    /// True when every row of `P(w,u,v|s,t)` is the same, i.e. the
    /// auxiliaries are independent of the source by construction.
    pub fn is_structurally_decoupled(&self) -> bool {
        let f = &self.factor_wuv_st;
        let first = f.row(0);
        (1..f.rows()).all(|r| f.row(r).iter().zip(first).all(|(a, b)| (a - b).abs() <= 1e-15))
    }
}

/// How the channel input of an outer chain is produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XRule {
    /// `x = map[s * |T| + t]`.
    Deterministic { x_size: usize, map: Vec<usize> },
    /// `P(x|s,t,u,v)`.
    Stochastic(ConditionalPmf),
}

/// `KSTUV - X - YZ` given by `P(u,v|s,t)` and an input rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterAuxChain {
    factor_uv_st: ConditionalPmf,
    x_rule: XRule,
}

impl OuterAuxChain {
    pub fn new(factor_uv_st: ConditionalPmf, x_rule: XRule) -> Result<Self> {
        let names = |a: &[Alphabet]| a.iter().map(|x| x.name().to_string()).collect::<Vec<_>>();
        if names(factor_uv_st.given()) != ["S", "T"] || names(factor_uv_st.output()) != ["U", "V"] {
            return Err(Error::IncompatibleAlphabets(
                "outer chain factor must be P(U,V|S,T)".into(),
            ));
        }
        let st_rows = factor_uv_st.rows();
        match &x_rule {
            XRule::Deterministic { x_size, map } => {
                check_size("deterministic input map", st_rows, map.len())?;
                if *x_size == 0 || map.iter().any(|&x| x >= *x_size) {
                    return Err(Error::IncompatibleAlphabets("input map out of range".into()));
                }
            }
            XRule::Stochastic(f) => {
                let mut expected: Vec<Alphabet> = factor_uv_st.given().to_vec();
                expected.extend(factor_uv_st.output().iter().cloned());
                if f.given() != expected.as_slice() || names(f.output()) != ["X"] {
                    return Err(Error::IncompatibleAlphabets(
                        "stochastic input rule must be P(X|S,T,U,V)".into(),
                    ));
                }
            }
        }
        Ok(Self { factor_uv_st, x_rule })
    }

    pub fn caps(&self) -> OuterCaps {
        let o = self.factor_uv_st.output();
        OuterCaps {
            u: o[0].size(),
            v: o[1].size(),
        }
    }

    pub fn x_size(&self) -> usize {
        match &self.x_rule {
            XRule::Deterministic { x_size, .. } => *x_size,
            XRule::Stochastic(f) => f.output()[0].size(),
        }
    }

    pub fn factor_uv_st(&self) -> &ConditionalPmf {
        &self.factor_uv_st
    }

    pub fn x_rule(&self) -> &XRule {
        &self.x_rule
    }

    fn x_factor(&self) -> Result<ConditionalPmf> {
        match &self.x_rule {
            XRule::Stochastic(f) => Ok(f.clone()),
            XRule::Deterministic { x_size, map } => {
                let mut given = self.factor_uv_st.given().to_vec();
                given.extend(self.factor_uv_st.output().iter().cloned());
                let uv = self.factor_uv_st.cols();
                Ok(ConditionalPmf::deterministic(
                    given,
                    vec![alpha("X", *x_size)?],
                    |row| map[row / uv],
                )?)
            }
        }
    }
}

/// Either kind of chain.
#[derive(Debug, Clone, PartialEq)]
pub enum AuxChain {
    Inner(InnerAuxChain),
    Outer(OuterAuxChain),
}

fn check_source_channel(src: &SourceSpec, ch: &ChannelSpec, given: &[Alphabet], x: usize) -> Result<()> {
    check_size("source S", given[0].size(), src.s_alpha().size())?;
    check_size("source T", given[1].size(), src.t_alpha().size())?;
    check_size("channel input X", x, ch.x_alpha().size())
}

/// Full joint over `(K, S, T, W, U, V, X, Y, Z)` realizing `ST - WUV - X - YZ`.
pub fn compose_inner(src: &SourceSpec, ch: &ChannelSpec, chain: &InnerAuxChain) -> Result<JointPmf> {
    check_source_channel(src, ch, chain.factor_wuv_st.given(), chain.x_size())?;
    Ok(src
        .joint_kst()
        .chain_compose(&chain.factor_wuv_st)?
        .chain_compose(&chain.factor_x_wuv)?
        .chain_compose(ch.pyz_x())?)
}

/// Full joint over `(K, S, T, U, V, X, Y, Z)` realizing `KSTUV - X - YZ`.
pub fn compose_outer(src: &SourceSpec, ch: &ChannelSpec, chain: &OuterAuxChain) -> Result<JointPmf> {
    check_source_channel(src, ch, chain.factor_uv_st.given(), chain.x_size())?;
    Ok(src
        .joint_kst()
        .chain_compose(&chain.factor_uv_st)?
        .chain_compose(&chain.x_factor()?)?
        .chain_compose(ch.pyz_x())?)
}

/// `(I(ST;X|WUV), I(KSTWUV;YZ|X))` of a composed inner joint.
pub fn inner_markov_residuals(joint: &JointPmf) -> Result<(f64, f64)> {
    Ok((
        joint.info_measure(&["S", "T"], &["X"], &["W", "U", "V"])?,
        joint.info_measure(&["K", "S", "T", "W", "U", "V"], &["Y", "Z"], &["X"])?,
    ))
}

/// `I(KSTUV;YZ|X)` of a composed outer joint.
pub fn outer_markov_residual(joint: &JointPmf) -> Result<f64> {
    Ok(joint.info_measure(&["K", "S", "T", "U", "V"], &["Y", "Z"], &["X"])?)
}

/// How factor rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSampler {
    /// Uniform on the simplex.
    Dirichlet,
    /// A uniformly chosen vertex (deterministic rows).
    Vertex,
    /// One vertex shared by every row of a conditional, so the output is
    /// constant.
    TiedVertex,
}

impl RowSampler {
    fn draw<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            RowSampler::Dirichlet => simplex::sample_uniform(n, rng),
            RowSampler::Vertex | RowSampler::TiedVertex => simplex::sample_vertex(n, rng),
        }
    }

    /// The mix used by the multistart searches: restarts cycle through
    /// Dirichlet, tied vertex, Dirichlet, vertex.
    pub fn for_restart(restart: usize) -> Self {
        match restart % 4 {
            1 => RowSampler::TiedVertex,
            3 => RowSampler::Vertex,
            _ => RowSampler::Dirichlet,
        }
    }
}

fn sample_conditional<R: Rng + ?Sized>(
    given: Vec<Alphabet>,
    output: Vec<Alphabet>,
    sampler: RowSampler,
    rng: &mut R,
) -> Result<ConditionalPmf> {
    let rows: usize = given.iter().map(|a| a.size()).product();
    let cols: usize = output.iter().map(|a| a.size()).product();
    let table: Vec<f64> = match sampler {
        RowSampler::TiedVertex => sampler.draw(cols, rng).repeat(rows),
        _ => (0..rows).flat_map(|_| sampler.draw(cols, rng)).collect(),
    };
    Ok(ConditionalPmf::new(given, output, table)?)
}

fn st_axes(src: &SourceSpec) -> Vec<Alphabet> {
    vec![src.s_alpha().clone(), src.t_alpha().clone()]
}

/// Random inner chain with every slice drawn independently.
pub fn sample_inner<R: Rng + ?Sized>(
    src: &SourceSpec,
    caps: InnerCaps,
    x_size: usize,
    sampler: RowSampler,
    rng: &mut R,
) -> Result<InnerAuxChain> {
    let aux = vec![alpha("W", caps.w)?, alpha("U", caps.u)?, alpha("V", caps.v)?];
    InnerAuxChain::new(
        sample_conditional(st_axes(src), aux.clone(), sampler, rng)?,
        sample_conditional(aux, vec![alpha("X", x_size)?], sampler, rng)?,
    )
}

/// Random inner chain with `WUV` independent of `ST`.
pub fn sample_decoupled<R: Rng + ?Sized>(
    src: &SourceSpec,
    caps: InnerCaps,
    x_size: usize,
    sampler: RowSampler,
    rng: &mut R,
) -> Result<InnerAuxChain> {
    let aux = vec![alpha("W", caps.w)?, alpha("U", caps.u)?, alpha("V", caps.v)?];
    let row = sampler.draw(caps.w * caps.u * caps.v, rng);
    InnerAuxChain::new(
        ConditionalPmf::constant_rows(st_axes(src), aux.clone(), &row)?,
        sample_conditional(aux, vec![alpha("X", x_size)?], sampler, rng)?,
    )
}

/// Random outer chain; `deterministic_x` draws `x = phi(s,t)` uniformly over
/// maps instead of a stochastic `P(x|s,t,u,v)`.
pub fn sample_outer<R: Rng + ?Sized>(
    src: &SourceSpec,
    caps: OuterCaps,
    x_size: usize,
    deterministic_x: bool,
    sampler: RowSampler,
    rng: &mut R,
) -> Result<OuterAuxChain> {
    let uv = vec![alpha("U", caps.u)?, alpha("V", caps.v)?];
    let factor_uv_st = sample_conditional(st_axes(src), uv.clone(), sampler, rng)?;
    let x_rule = if deterministic_x {
        let n = src.s_alpha().size() * src.t_alpha().size();
        XRule::Deterministic {
            x_size,
            map: (0..n).map(|_| rng.random_range(0..x_size)).collect(),
        }
    } else {
        let mut given = st_axes(src);
        given.extend(uv);
        XRule::Stochastic(sample_conditional(given, vec![alpha("X", x_size)?], sampler, rng)?)
    };
    OuterAuxChain::new(factor_uv_st, x_rule)
}

/// Caps for [`sample_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caps {
    Inner(InnerCaps),
    Outer(OuterCaps),
}

/// Draws a chain of the requested kind with Dirichlet(1) slices; outer
/// chains use a deterministic input map when `deterministic_x` is set.
pub fn sample_chain<R: Rng + ?Sized>(
    src: &SourceSpec,
    caps: Caps,
    x_size: usize,
    deterministic_x: bool,
    rng: &mut R,
) -> Result<AuxChain> {
    match caps {
        Caps::Inner(c) => Ok(AuxChain::Inner(sample_inner(src, c, x_size, RowSampler::Dirichlet, rng)?)),
        Caps::Outer(c) => Ok(AuxChain::Outer(sample_outer(
            src,
            c,
            x_size,
            deterministic_x,
            RowSampler::Dirichlet,
            rng,
        )?)),
    }
}

/// A joint over an auxiliary tuple and `X`, stored as `P(head) P(x|head)`.
///
/// Used for the exact-region theorems, where the auxiliary law does not
/// involve the source: `head` is `W` (more-capable case) or `(W, V)`
/// (semi-deterministic case).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactoredMarginal {
    head_axes: Vec<Alphabet>,
    head: Vec<f64>,
    x_given_head: ConditionalPmf,
}

impl FactoredMarginal {
    pub fn new(head_axes: Vec<Alphabet>, head: Vec<f64>, x_given_head: ConditionalPmf) -> Result<Self> {
        // validates the head law
        JointPmf::new(head_axes.clone(), head.clone())?;
        if x_given_head.given() != head_axes.as_slice() {
            return Err(Error::IncompatibleAlphabets(
                "conditional must be given the head axes".into(),
            ));
        }
        Ok(Self {
            head_axes,
            head,
            x_given_head,
        })
    }

    pub fn sample<R: Rng + ?Sized>(
        head_axes: Vec<Alphabet>,
        x_size: usize,
        sampler: RowSampler,
        rng: &mut R,
    ) -> Result<Self> {
        let n: usize = head_axes.iter().map(|a| a.size()).product();
        // a vertex head would collapse the auxiliary to a constant
        let head = simplex::sample_uniform(n, rng);
        let x_given_head = sample_conditional(head_axes.clone(), vec![alpha("X", x_size)?], sampler, rng)?;
        Self::new(head_axes, head, x_given_head)
    }

    /// Splits a joint whose last axis is `X`.
    pub fn from_joint(joint: &JointPmf) -> Result<Self> {
        let names = joint.axis_names();
        let (x, head) = names.split_last().ok_or_else(|| Error::InvalidArgument("empty joint".into()))?;
        if *x != "X" {
            return Err(Error::IncompatibleAlphabets("last axis must be X".into()));
        }
        let head_joint = joint.marginalize(head)?;
        let cond = ConditionalPmf::of_joint(joint, head, &["X"])?;
        Self::new(head_joint.axes().to_vec(), head_joint.table().to_vec(), cond)
    }

    pub fn joint(&self) -> JointPmf {
        JointPmf::new(self.head_axes.clone(), self.head.clone())
            .and_then(|j| j.chain_compose(&self.x_given_head))
            .expect("factors validated at construction")
    }

    pub fn head_axes(&self) -> &[Alphabet] {
        &self.head_axes
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn x_given_head(&self) -> &ConditionalPmf {
        &self.x_given_head
    }
}

/// Something whose free parameters are a list of probability slices (and
/// optionally some discrete choices) that a local search can move.
pub trait Refinable: Clone {
    fn slice_count(&self) -> usize;
    fn slice_mut(&mut self, k: usize) -> &mut [f64];

    fn discrete_count(&self) -> usize {
        0
    }

    fn mutate_discrete<R: Rng + ?Sized>(&mut self, _k: usize, _rng: &mut R) {}
}

impl Refinable for InnerAuxChain {
    fn slice_count(&self) -> usize {
        self.factor_wuv_st.rows() + self.factor_x_wuv.rows()
    }

    fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.factor_wuv_st.rows();
        if k < n {
            self.factor_wuv_st.row_mut(k)
        } else {
            self.factor_x_wuv.row_mut(k - n)
        }
    }
}

/// An inner chain whose source factor rows are tied together, so refinement
/// keeps `WUV` independent of `ST`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoupled(pub InnerAuxChain);

impl Refinable for Decoupled {
    fn slice_count(&self) -> usize {
        1 + self.0.factor_x_wuv.rows()
    }

    fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        if k == 0 {
            self.0.factor_wuv_st.row_mut(0)
        } else {
            self.0.factor_x_wuv.row_mut(k - 1)
        }
    }
}

impl Decoupled {
    /// Copies row 0 of the source factor to every other row.
    fn sync(&mut self) {
        let f = &mut self.0.factor_wuv_st;
        let first = f.row(0).to_vec();
        for r in 1..f.rows() {
            f.row_mut(r).copy_from_slice(&first);
        }
    }
}

impl Refinable for OuterAuxChain {
    fn slice_count(&self) -> usize {
        self.factor_uv_st.rows()
            + match &self.x_rule {
                XRule::Stochastic(f) => f.rows(),
                XRule::Deterministic { .. } => 0,
            }
    }

    fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.factor_uv_st.rows();
        if k < n {
            return self.factor_uv_st.row_mut(k);
        }
        match &mut self.x_rule {
            XRule::Stochastic(f) => f.row_mut(k - n),
            XRule::Deterministic { .. } => unreachable!("no stochastic input slices"),
        }
    }

    fn discrete_count(&self) -> usize {
        match &self.x_rule {
            XRule::Deterministic { map, .. } => map.len(),
            XRule::Stochastic(_) => 0,
        }
    }

    fn mutate_discrete<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) {
        if let XRule::Deterministic { x_size, map } = &mut self.x_rule {
            map[k] = rng.random_range(0..*x_size);
        }
    }
}

impl Refinable for FactoredMarginal {
    fn slice_count(&self) -> usize {
        1 + self.x_given_head.rows()
    }

    fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        if k == 0 {
            &mut self.head
        } else {
            self.x_given_head.row_mut(k - 1)
        }
    }
}

/// Applies one random move to a copy of `chain`.
fn propose<C: Refinable, R: Rng + ?Sized>(chain: &C, rng: &mut R) -> C {
    let mut next = chain.clone();
    let slices = chain.slice_count();
    let total = slices + chain.discrete_count();
    let k = rng.random_range(0..total);
    if k < slices {
        simplex::perturb(next.slice_mut(k), REFINE_SIGMA, rng);
    } else {
        next.mutate_discrete(k - slices, rng);
    }
    next
}

/// Hill-climbing: each step perturbs one slice (Gaussian noise, projected
/// back to the simplex) and keeps the move only if the objective improves.
/// Returns the final chain and its objective value.
pub fn local_refine<C, R, F>(objective: F, chain: C, steps: usize, rng: &mut R) -> (C, f64)
where
    C: Refinable,
    R: Rng + ?Sized,
    F: Fn(&C) -> f64,
{
    let mut best_val = objective(&chain);
    let mut best = chain;
    if best.slice_count() + best.discrete_count() == 0 {
        return (best, best_val);
    }
    for _ in 0..steps {
        let cand = propose(&best, rng);
        let v = objective(&cand);
        if v > best_val {
            best = cand;
            best_val = v;
        }
    }
    (best, best_val)
}

/// Pattern search that moves mass `h` between two entries of one slice and
/// keeps improvements; `h` halves after a run of failed moves. Settles a
/// [`local_refine`] result onto a precise local optimum.
pub fn pattern_polish<C, R, F>(objective: F, chain: C, steps: usize, rng: &mut R) -> (C, f64)
where
    C: Refinable,
    R: Rng + ?Sized,
    F: Fn(&C) -> f64,
{
    const MAX_FAILS: usize = 48;
    let mut best_val = objective(&chain);
    let mut best = chain;
    let slices = best.slice_count();
    let mut h: f64 = 0.02;
    let mut fails = 0;
    for _ in 0..steps {
        if slices == 0 || h < 1e-13 {
            break;
        }
        let k = rng.random_range(0..slices);
        let n = best.slice_mut(k).len();
        if n < 2 {
            fails += 1;
        } else {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut improved = false;
            for (from, to) in [(i, j), (j, i)] {
                let mut cand = best.clone();
                let row = cand.slice_mut(k);
                let d = h.min(row[from]);
                if d <= 0.0 {
                    continue;
                }
                row[from] -= d;
                row[to] += d;
                let v = objective(&cand);
                if v > best_val {
                    best = cand;
                    best_val = v;
                    improved = true;
                    break;
                }
            }
            fails = if improved { 0 } else { fails + 1 };
        }
        if fails >= MAX_FAILS {
            h *= 0.5;
            fails = 0;
        }
    }
    (best, best_val)
}

/// [`local_refine`] for decoupled inner chains.
pub fn local_refine_decoupled<R, F>(objective: F, chain: Decoupled, steps: usize, rng: &mut R) -> (Decoupled, f64)
where
    R: Rng + ?Sized,
    F: Fn(&Decoupled) -> f64,
{
    let synced = |c: &Decoupled| {
        let mut c = c.clone();
        c.sync();
        c
    };
    let (best, v) = local_refine(|c: &Decoupled| objective(&synced(c)), chain, steps, rng);
    (synced(&best), v)
}
