//! File formats, output formatting, and the `bcrk` command line.
//!
//! Every command writes one JSON document to standard output. Exit codes:
//! 0 success, 1 usage error, 2 validation error (with a JSON error object),
//! 3 failed self-test.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::aux_chain::{InnerAuxChain, InnerCaps, OuterAuxChain, OuterCaps, XRule};
use crate::capacity_theorems::{
    decide_admissible, region_frontier, DecisionOptions, FrontierSample, Method, RegionCaps, Theorem,
    DEFAULT_DECISION_BUDGET, DEFAULT_FRONTIER_BUDGET,
};
use crate::channel_class::{classify, ChannelSpec, DEFAULT_CLASS_BUDGET, TOL_CLASS};
use crate::common_part::{common_identity_residual, SourceSpec};
use crate::inner_bound::{eval_han_costa, eval_separation, search_inner, InnerSystem, DEFAULT_INNER_BUDGET};
use crate::outer_bound::{eval_thm1, eval_thm2, outer_superset_scan, OuterSystem, OuterVariant, DEFAULT_OUTER_BUDGET};
use crate::prob_core::{csiszar_identity_residuals, Alphabet, ConditionalPmf, JointPmf};
use crate::report::TOL_STRICT;
use crate::search::{restart_rng, SearchBudget};
use crate::simplex;

/// Significant digits kept in every printed float.
pub const SIG_DIGITS: usize = 12;
/// Residual bound for the self-test identities.
pub const SELFTEST_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON in {path}: {message}")]
    Json { path: String, message: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Format(_) => "format",
            CliError::Model(_) => "validation",
            CliError::Csv(_) => "csv",
        }
    }
}

impl From<crate::prob_core::ProbError> for CliError {
    fn from(e: crate::prob_core::ProbError) -> Self {
        CliError::Model(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rounds to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Applies [`round_sig`] to every float in a JSON value.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn flatten_f64(v: &Value, shape: &[usize], what: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::with_capacity(shape.iter().product());
    flatten_into(v, shape, what, &mut out, &|x| x.as_f64())?;
    Ok(out)
}

fn flatten_usize(v: &Value, shape: &[usize], what: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    flatten_into(v, shape, what, &mut out, &|x| x.as_u64().map(|u| u as usize))?;
    Ok(out)
}

fn flatten_into<T>(
    v: &Value,
    shape: &[usize],
    what: &str,
    out: &mut Vec<T>,
    leaf: &dyn Fn(&Value) -> Option<T>,
) -> CliResult<()> {
    match shape.split_first() {
        None => {
            out.push(leaf(v).ok_or_else(|| CliError::Format(format!("{what}: non-numeric entry {v}")))?);
            Ok(())
        }
        Some((&n, rest)) => {
            let arr = v
                .as_array()
                .ok_or_else(|| CliError::Format(format!("{what}: expected an array")))?;
            if arr.len() != n {
                return Err(CliError::Format(format!(
                    "{what}: expected {n} entries at depth {}, got {}",
                    shape.len(),
                    arr.len()
                )));
            }
            arr.iter().try_for_each(|x| flatten_into(x, rest, what, out, leaf))
        }
    }
}

fn nest<T: Clone + Into<Value>>(data: &[T], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => data[0].clone().into(),
        Some((&n, rest)) => {
            let stride: usize = rest.iter().product();
            Value::Array((0..n).map(|i| nest(&data[i * stride..(i + 1) * stride], rest)).collect())
        }
    }
}

/// `{x_size, y_size, z_size, p_yz_given_x[x][y][z]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub x_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    pub p_yz_given_x: Value,
}

impl ChannelFile {
    pub fn to_spec(&self) -> CliResult<ChannelSpec> {
        let shape = [self.x_size, self.y_size, self.z_size];
        let table = flatten_f64(&self.p_yz_given_x, &shape, "p_yz_given_x")?;
        Ok(ChannelSpec::from_table(self.x_size, self.y_size, self.z_size, table)?)
    }

    pub fn from_spec(ch: &ChannelSpec) -> Self {
        let (x, y, z) = (ch.x_alpha().size(), ch.y_alpha().size(), ch.z_alpha().size());
        Self {
            x_size: x,
            y_size: y,
            z_size: z,
            p_yz_given_x: nest(ch.table(), &[x, y, z]),
        }
    }
}

/// `{s_size, t_size, p_st[s][t]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    pub s_size: usize,
    pub t_size: usize,
    pub p_st: Value,
}

impl SourceFile {
    pub fn to_spec(&self) -> CliResult<SourceSpec> {
        let table = flatten_f64(&self.p_st, &[self.s_size, self.t_size], "p_st")?;
        Ok(SourceSpec::from_table(self.s_size, self.t_size, table)?)
    }

    pub fn from_spec(src: &SourceSpec) -> Self {
        let (s, t) = (src.s_alpha().size(), src.t_alpha().size());
        Self {
            s_size: s,
            t_size: t,
            p_st: nest(src.pst().table(), &[s, t]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XRuleFile {
    /// `x[s][t]`.
    Deterministic(Value),
    /// `p[s][t][u][v][x]`.
    Stochastic(Value),
}

/// Auxiliary chain tables, tagged by `kind`. The source sizes are implied by
/// the leading dimensions of the first table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AuxFile {
    Inner {
        w_size: usize,
        u_size: usize,
        v_size: usize,
        x_size: usize,
        p_wuv_given_st: Value,
        p_x_given_wuv: Value,
    },
    Outer {
        u_size: usize,
        v_size: usize,
        x_size: usize,
        p_uv_given_st: Value,
        x_rule: XRuleFile,
    },
}

fn alpha(name: &str, n: usize) -> CliResult<Alphabet> {
    Ok(Alphabet::new(name, n)?)
}

impl AuxFile {
    pub fn to_inner(&self, src: &SourceSpec) -> CliResult<InnerAuxChain> {
        let AuxFile::Inner {
            w_size,
            u_size,
            v_size,
            x_size,
            p_wuv_given_st,
            p_x_given_wuv,
        } = self
        else {
            return Err(CliError::Format("expected an auxiliary file of kind \"inner\"".into()));
        };
        let (s, t) = (src.s_alpha().size(), src.t_alpha().size());
        let caps = InnerCaps {
            w: *w_size,
            u: *u_size,
            v: *v_size,
        };
        let a = flatten_f64(p_wuv_given_st, &[s, t, caps.w, caps.u, caps.v], "p_wuv_given_st")?;
        let b = flatten_f64(p_x_given_wuv, &[caps.w, caps.u, caps.v, *x_size], "p_x_given_wuv")?;
        Ok(InnerAuxChain::from_tables(s, t, caps, *x_size, a, b)?)
    }

    pub fn to_outer(&self, src: &SourceSpec) -> CliResult<OuterAuxChain> {
        let AuxFile::Outer {
            u_size,
            v_size,
            x_size,
            p_uv_given_st,
            x_rule,
        } = self
        else {
            return Err(CliError::Format("expected an auxiliary file of kind \"outer\"".into()));
        };
        let (s, t) = (src.s_alpha().size(), src.t_alpha().size());
        let st = vec![alpha("S", s)?, alpha("T", t)?];
        let uv = vec![alpha("U", *u_size)?, alpha("V", *v_size)?];
        let factor = ConditionalPmf::new(
            st.clone(),
            uv.clone(),
            flatten_f64(p_uv_given_st, &[s, t, *u_size, *v_size], "p_uv_given_st")?,
        )?;
        let rule = match x_rule {
            XRuleFile::Deterministic(m) => XRule::Deterministic {
                x_size: *x_size,
                map: flatten_usize(m, &[s, t], "x_rule.deterministic")?,
            },
            XRuleFile::Stochastic(p) => {
                let mut given = st;
                given.extend(uv);
                XRule::Stochastic(ConditionalPmf::new(
                    given,
                    vec![alpha("X", *x_size)?],
                    flatten_f64(p, &[s, t, *u_size, *v_size, *x_size], "x_rule.stochastic")?,
                )?)
            }
        };
        Ok(OuterAuxChain::new(factor, rule)?)
    }

    pub fn from_inner(chain: &InnerAuxChain) -> Self {
        let caps = chain.caps();
        let g = chain.factor_wuv_st().given();
        let (s, t) = (g[0].size(), g[1].size());
        let x = chain.x_size();
        AuxFile::Inner {
            w_size: caps.w,
            u_size: caps.u,
            v_size: caps.v,
            x_size: x,
            p_wuv_given_st: nest(chain.factor_wuv_st().table(), &[s, t, caps.w, caps.u, caps.v]),
            p_x_given_wuv: nest(chain.factor_x_wuv().table(), &[caps.w, caps.u, caps.v, x]),
        }
    }

    pub fn from_outer(chain: &OuterAuxChain) -> Self {
        let caps = chain.caps();
        let g = chain.factor_uv_st().given();
        let (s, t) = (g[0].size(), g[1].size());
        let x = chain.x_size();
        AuxFile::Outer {
            u_size: caps.u,
            v_size: caps.v,
            x_size: x,
            p_uv_given_st: nest(chain.factor_uv_st().table(), &[s, t, caps.u, caps.v]),
            x_rule: match chain.x_rule() {
                XRule::Deterministic { map, .. } => XRuleFile::Deterministic(nest(map, &[s, t])),
                XRule::Stochastic(f) => XRuleFile::Stochastic(nest(f.table(), &[s, t, caps.u, caps.v, x])),
            },
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_channel(path: &Path) -> CliResult<ChannelSpec> {
    read_json::<ChannelFile>(path)?.to_spec()
}

pub fn load_source(path: &Path) -> CliResult<SourceSpec> {
    read_json::<SourceFile>(path)?.to_spec()
}

pub fn load_aux(path: &Path) -> CliResult<AuxFile> {
    read_json(path)
}

fn rhs_order(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

/// Frontier as CSV: header `label,rhs_<tag>,...`, one row per sample, rows in
/// lexicographic order of the rounded RHS vectors, labelled `1, 2, ...`.
pub fn emit_frontier_csv(samples: &[FrontierSample]) -> CliResult<String> {
    let first = samples.first().ok_or(CliError::Model(crate::error::Error::EmptyFrontier))?;
    let mut rows: Vec<Vec<f64>> = samples.iter().map(|s| s.rhs.iter().map(|&x| round_sig(x)).collect()).collect();
    rows.sort_by(|a, b| rhs_order(a, b));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label".to_string()];
    header.extend(first.labels.iter().map(|l| format!("rhs_{l}")));
    w.write_record(&header).map_err(|e| CliError::Csv(e.to_string()))?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(|e| CliError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

/// RHS tags and `(row label, values)` rows of a parsed frontier CSV.
pub type FrontierRows = (Vec<String>, Vec<(String, Vec<f64>)>);

/// Parses [`emit_frontier_csv`] output.
pub fn parse_frontier_csv(text: &str) -> CliResult<FrontierRows> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Csv(e.to_string()))?.clone();
    if header.get(0) != Some("label") {
        return Err(CliError::Csv("first column must be \"label\"".into()));
    }
    let tags = header
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("rhs_")
                .map(str::to_string)
                .ok_or_else(|| CliError::Csv(format!("unexpected column {h}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::Csv(e.to_string()))?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|x| x.parse::<f64>().map_err(|e| CliError::Csv(format!("{x}: {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push((rec.get(0).unwrap_or_default().to_string(), vals));
    }
    if rows.is_empty() {
        return Err(CliError::Model(crate::error::Error::EmptyFrontier));
    }
    Ok((tags, rows))
}

#[derive(Debug, Parser)]
#[command(name = "bcrk", version, about = "Admissible-source bounds for two-receiver broadcast channels")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Seed for every randomized search.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of search restarts (command-specific default).
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Refinement steps per restart (command-specific default).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Bandwidth expansion: channel uses per source symbol.
    #[arg(long = "R", global = true, default_value_t = 1.0)]
    pub r: f64,
    /// Slack a strict inequality must exceed.
    #[arg(long, global = true, default_value_t = TOL_STRICT)]
    pub tol_strict: f64,
    /// Gap a more-capable violation must exceed.
    #[arg(long, global = true, default_value_t = TOL_CLASS)]
    pub tol_class: f64,
    /// Form of the private terms in outer entries 10 and 11.
    #[arg(long, global = true, value_enum, default_value_t = VariantArg::AsPrinted)]
    pub variant: VariantArg,
}

impl GlobalOpts {
    fn budget_or(&self, default: SearchBudget) -> SearchBudget {
        SearchBudget::new(
            self.budget.unwrap_or(default.restarts),
            self.steps.unwrap_or(default.steps),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    AsPrinted,
    ProofDerived,
}

impl From<VariantArg> for OuterVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AsPrinted => OuterVariant::AsPrinted,
            VariantArg::ProofDerived => OuterVariant::ProofDerived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnerSystemArg {
    HanCosta,
    Separation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OuterTheoremArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionTheoremArg {
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Separation,
    HanCosta,
    Thm3,
    Thm4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelftestArg {
    Csiszar,
    CommonPart,
    All,
}

#[derive(Debug, Args)]
pub struct InnerCapsArgs {
    #[arg(long = "w")]
    pub w: Option<usize>,
    #[arg(long = "u")]
    pub u: Option<usize>,
    #[arg(long = "v")]
    pub v: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural class of a channel.
    Classify {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Common part and entropies of a source.
    CommonPart {
        #[arg(long)]
        source: PathBuf,
    },
    /// Inner-bound report for an explicit chain.
    InnerEval {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, value_enum, default_value_t = InnerSystemArg::HanCosta)]
        system: InnerSystemArg,
    },
    /// Search for an inner-bound witness.
    InnerSearch {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = InnerSystemArg::HanCosta)]
        system: InnerSystemArg,
        #[command(flatten)]
        caps: InnerCapsArgs,
    },
    /// Outer-bound report for an explicit chain.
    OuterEval {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long, value_enum, default_value_t = OuterTheoremArg::One)]
        theorem: OuterTheoremArg,
    },
    /// One-sided scan for a chain satisfying the outer bound.
    OuterScan {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = OuterTheoremArg::One)]
        theorem: OuterTheoremArg,
        #[arg(long = "u")]
        u: Option<usize>,
        #[arg(long = "v")]
        v: Option<usize>,
    },
    /// Pareto frontier of an exact region.
    Region {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum)]
        theorem: RegionTheoremArg,
        #[arg(long = "w")]
        w: Option<usize>,
        #[arg(long = "v")]
        v: Option<usize>,
        /// Also write the frontier as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Admissibility decision.
    Admissible {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
    },
    /// Numerical identity checks.
    Selftest {
        #[arg(value_enum, default_value_t = SelftestArg::All)]
        which: SelftestArg,
        /// Block length for the telescoping identities.
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Replaces the `chain` field of a serialized search result with the file
/// layout, so it can be fed back to the eval commands.
fn with_chain_file(mut v: Value, file: &AuxFile) -> Value {
    v["chain"] = to_value(file);
    v
}

fn inner_caps(c: &InnerCapsArgs, x: usize) -> InnerCaps {
    let d = InnerCaps::default_for(x);
    InnerCaps {
        w: c.w.unwrap_or(d.w),
        u: c.u.unwrap_or(d.u),
        v: c.v.unwrap_or(d.v),
    }
}

/// Runs one command; returns the JSON document and the exit code.
fn execute(cli: &Cli) -> CliResult<(Value, i32)> {
    let g = &cli.global;
    let out = match &cli.command {
        Command::Classify { channel } => {
            let ch = load_channel(channel)?;
            to_value(&classify(&ch, g.budget_or(DEFAULT_CLASS_BUDGET), g.seed, g.tol_class))
        }
        Command::CommonPart { source } => {
            let src = load_source(source)?;
            json!({
                "k_size": src.k_alpha().size(),
                "f": src.f(),
                "g": src.g(),
                "entropies": to_value(&src.entropies()),
                "markov": src.is_markov(),
                "identity_residual": common_identity_residual(&src),
            })
        }
        Command::InnerEval {
            source,
            channel,
            aux,
            system,
        } => {
            let (src, ch) = (load_source(source)?, load_channel(channel)?);
            let chain = load_aux(aux)?.to_inner(&src)?;
            let rep = match system {
                InnerSystemArg::HanCosta => eval_han_costa(&src, &ch, &chain, g.r)?,
                InnerSystemArg::Separation => eval_separation(&src, &ch, &chain, g.r)?,
            };
            to_value(&rep.with_tolerance(g.tol_strict))
        }
        Command::InnerSearch {
            source,
            channel,
            system,
            caps,
        } => {
            let (src, ch) = (load_source(source)?, load_channel(channel)?);
            let sys = match system {
                InnerSystemArg::HanCosta => InnerSystem::HanCosta,
                InnerSystemArg::Separation => InnerSystem::Separation,
            };
            let caps = inner_caps(caps, ch.x_alpha().size());
            let w = search_inner(sys, &src, &ch, caps, g.budget_or(DEFAULT_INNER_BUDGET), g.seed, g.r, g.tol_strict)?;
            with_chain_file(to_value(&w), &AuxFile::from_inner(&w.chain))
        }
        Command::OuterEval {
            source,
            channel,
            aux,
            theorem,
        } => {
            let (src, ch) = (load_source(source)?, load_channel(channel)?);
            let chain = load_aux(aux)?.to_outer(&src)?;
            let rep = match theorem {
                OuterTheoremArg::One => eval_thm1(&src, &ch, &chain, g.r, g.variant.into())?,
                OuterTheoremArg::Two => eval_thm2(&src, &ch, &chain, g.r)?,
            };
            to_value(&rep.with_tolerance(g.tol_strict))
        }
        Command::OuterScan {
            source,
            channel,
            theorem,
            u,
            v,
        } => {
            let (src, ch) = (load_source(source)?, load_channel(channel)?);
            let d = OuterCaps::default_for(ch.x_alpha().size());
            let caps = OuterCaps {
                u: u.unwrap_or(d.u),
                v: v.unwrap_or(d.v),
            };
            let system = match theorem {
                OuterTheoremArg::One => OuterSystem::Thm1(g.variant.into()),
                OuterTheoremArg::Two => OuterSystem::Thm2,
            };
            let s = outer_superset_scan(
                system,
                &src,
                &ch,
                caps,
                g.budget_or(DEFAULT_OUTER_BUDGET),
                g.r,
                g.seed,
                g.tol_strict,
            )?;
            with_chain_file(to_value(&s), &AuxFile::from_outer(&s.chain))
        }
        Command::Region {
            channel,
            theorem,
            w,
            v,
            csv,
        } => {
            let ch = load_channel(channel)?;
            let d = RegionCaps::default_for(ch.x_alpha().size());
            let caps = RegionCaps {
                w: w.unwrap_or(d.w),
                v: v.unwrap_or(d.v),
            };
            let th = match theorem {
                RegionTheoremArg::Three => Theorem::SemiDeterministic,
                RegionTheoremArg::Four => Theorem::MoreCapable,
            };
            let f = region_frontier(th, &ch, caps, g.budget_or(DEFAULT_FRONTIER_BUDGET), g.seed)?;
            let text = emit_frontier_csv(&f.samples)?;
            if let Some(path) = csv {
                std::fs::write(path, &text).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            }
            let mut v = to_value(&f);
            v["csv"] = Value::String(text);
            v
        }
        Command::Admissible {
            source,
            channel,
            method,
        } => {
            let (src, ch) = (load_source(source)?, load_channel(channel)?);
            let m = match method {
                MethodArg::Separation => Method::Separation,
                MethodArg::HanCosta => Method::HanCosta,
                MethodArg::Thm3 => Method::Thm3,
                MethodArg::Thm4 => Method::Thm4,
            };
            let default = match m {
                Method::Separation | Method::HanCosta => DEFAULT_INNER_BUDGET,
                Method::Thm3 | Method::Thm4 => DEFAULT_DECISION_BUDGET,
            };
            let opts = DecisionOptions {
                budget: g.budget_or(default),
                seed: g.seed,
                r: g.r,
                tol_strict: g.tol_strict,
                ..Default::default()
            };
            let d = decide_admissible(&src, &ch, m, opts)?;
            let mut v = to_value(&d);
            if let crate::capacity_theorems::Witness::Chain(c) = &d.best {
                v["best"] = to_value(&AuxFile::from_inner(c));
            }
            v
        }
        Command::Selftest { which, n } => {
            let (v, pass) = selftest(*which, *n, g.seed)?;
            return Ok((v, if pass { 0 } else { 3 }));
        }
    };
    Ok((out, 0))
}

/// Telescoping identities on a random joint of `W, Y_1..Y_n, Z_1..Z_n` with
/// binary alphabets, and the common-part identity on random sparse sources.
pub fn selftest(which: SelftestArg, n: usize, seed: u64) -> CliResult<(Value, bool)> {
    let mut checks = Vec::new();
    if matches!(which, SelftestArg::Csiszar | SelftestArg::All) {
        if n == 0 || n > 4 {
            return Err(CliError::Format("--n must be between 1 and 4".into()));
        }
        let ys: Vec<String> = (1..=n).map(|i| format!("Y{i}")).collect();
        let zs: Vec<String> = (1..=n).map(|i| format!("Z{i}")).collect();
        let mut axes = vec![alpha("W", 2)?];
        for name in ys.iter().chain(&zs) {
            axes.push(alpha(name, 2)?);
        }
        let cells = 1usize << (2 * n + 1);
        let mut rng = restart_rng(seed, 0);
        let joint = JointPmf::new(axes, simplex::sample_uniform(cells, &mut rng))?;
        let y: Vec<&str> = ys.iter().map(String::as_str).collect();
        let z: Vec<&str> = zs.iter().map(String::as_str).collect();
        let (r1, r2) = csiszar_identity_residuals(&joint, &["W"], &y, &z)?;
        checks.push(json!({
            "name": "csiszar",
            "n": n,
            "residuals": [r1, r2],
            "pass": r1 < SELFTEST_TOL && r2 < SELFTEST_TOL,
        }));
    }
    if matches!(which, SelftestArg::CommonPart | SelftestArg::All) {
        let mut worst: f64 = 0.0;
        for k in 0..10 {
            let mut rng = restart_rng(seed, k + 1);
            let mut p = simplex::sample_uniform(16, &mut rng);
            // zero a few cells so the support graph has several components
            for (i, v) in p.iter_mut().enumerate() {
                if (i * 7 + k) % 3 == 0 {
                    *v = 0.0;
                }
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            worst = worst.max(common_identity_residual(&SourceSpec::from_table(4, 4, p)?));
        }
        checks.push(json!({
            "name": "common-part",
            "residual": worst,
            "pass": worst < SELFTEST_TOL,
        }));
    }
    let pass = checks.iter().all(|c| c["pass"] == Value::Bool(true));
    Ok((json!({ "checks": checks, "pass": pass }), pass))
}

fn configure_threads() {
    if let Some(n) = std::env::var("BCRK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call (e.g. from tests) finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn write_json(out: &mut dyn Write, mut v: Value) {
    round_json(&mut v);
    let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    let _ = writeln!(out, "{text}");
}

/// Parses `args` (including the program name), runs the command, writes
/// JSON to `out` and usage messages to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    configure_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli) {
        Ok((v, code)) => {
            write_json(out, v);
            code
        }
        Err(e) => {
            write_json(out, json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            2
        }
    }
}
