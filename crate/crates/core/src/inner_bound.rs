//! Achievability side: the Han–Costa sufficient conditions, their
//! separation-based specialization, and a multistart witness search.

use serde::Serialize;

use crate::aux_chain::{
    compose_inner, local_refine, local_refine_decoupled, sample_decoupled, sample_inner, Decoupled, InnerAuxChain,
    InnerCaps, RowSampler,
};
use crate::channel_class::ChannelSpec;
use crate::common_part::SourceSpec;
use crate::error::{Error, Result};
use crate::prob_core::JointPmf;
use crate::report::{BoundReport, TOL_STRICT};
use crate::search::{best_of, restart_rng, SearchBudget};

/// Largest `I(ST;WUV)` accepted by [`eval_separation`].
pub const TOL_DECOUPLED: f64 = 1e-9;
pub const DEFAULT_INNER_BUDGET: SearchBudget = SearchBudget::new(64, 200);

pub(crate) const EXTRAPOLATION_NOTE: &str =
    "R != 1: source entropies divided by R; the conditions are stated for R = 1, so this scaling is an extrapolation";

/// Source entropies per channel use.
pub(crate) fn scaled_lhs(src: &SourceSpec, r: f64) -> Result<(f64, f64, f64, f64)> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("R must be positive, got {r}")));
    }
    let e = src.entropies();
    Ok((e.hk / r, e.hs / r, e.ht / r, e.hst / r))
}

/// Composed joint with `X` summed out; no inner term involves it.
fn inner_terms(src: &SourceSpec, ch: &ChannelSpec, chain: &InnerAuxChain) -> Result<JointPmf> {
    Ok(compose_inner(src, ch, chain)?.marginalize(&["K", "S", "T", "W", "U", "V", "Y", "Z"])?)
}

fn measure(j: &JointPmf) -> impl Fn(&[&str], &[&str], &[&str]) -> f64 + '_ {
    move |a, b, c| j.info_measure(a, b, c).expect("axis groups are fixed and valid")
}

/// Evaluates the four Han–Costa conditions (labels `"2"` to `"5"`).
pub fn eval_han_costa(src: &SourceSpec, ch: &ChannelSpec, chain: &InnerAuxChain, r: f64) -> Result<BoundReport> {
    let (_, hs, ht, hst) = scaled_lhs(src, r)?;
    let j = inner_terms(src, ch, chain)?;
    let i = measure(&j);
    let common = i(&["S", "U"], &["T", "V"], &["K", "W"]);
    let mut rep = BoundReport::new("han-costa", r);
    rep.push("2", hs, i(&["S", "W", "U"], &["Y"], &[]) - i(&["T"], &["W", "U"], &["S"]));
    rep.push("3", ht, i(&["T", "W", "V"], &["Z"], &[]) - i(&["S"], &["W", "V"], &["T"]));
    rep.push(
        "4",
        hst,
        i(&["K", "W"], &["Y"], &[]).min(i(&["K", "W"], &["Z"], &[]))
            + i(&["S", "U"], &["Y"], &["K", "W"])
            + i(&["T", "V"], &["Z"], &["K", "W"])
            - common,
    );
    rep.push(
        "5",
        hst,
        i(&["S", "W", "U"], &["Y"], &[]) + i(&["T", "W", "V"], &["Z"], &[])
            - common
            - i(&["S", "T"], &["K", "W"], &[]),
    );
    if r != 1.0 {
        rep.notes.push(EXTRAPOLATION_NOTE.into());
    }
    Ok(rep)
}

/// Evaluates the separation conditions (labels `"21"` to `"24"`) for a chain
/// whose auxiliaries are independent of the source.
pub fn eval_separation(src: &SourceSpec, ch: &ChannelSpec, chain: &InnerAuxChain, r: f64) -> Result<BoundReport> {
    let (_, hs, ht, hst) = scaled_lhs(src, r)?;
    let j = inner_terms(src, ch, chain)?;
    let i = measure(&j);
    let dependence = i(&["S", "T"], &["W", "U", "V"], &[]);
    if dependence >= TOL_DECOUPLED {
        return Err(Error::NotDecoupled(dependence));
    }
    let rate_loss = i(&["S"], &["T"], &["K"]);
    let hk = j.entropy(&["K"], &[])?;
    let uv = i(&["U"], &["V"], &["W"]);
    let mut rep = BoundReport::new("separation", r);
    rep.push("21", hs, i(&["W", "U"], &["Y"], &[]));
    rep.push("22", ht, i(&["W", "V"], &["Z"], &[]));
    rep.push(
        "23",
        hst,
        i(&["W"], &["Y"], &[]).min(i(&["W"], &["Z"], &[])) + i(&["U"], &["Y"], &["W"]) + i(&["V"], &["Z"], &["W"])
            - uv
            - rate_loss,
    );
    rep.push(
        "24",
        hst,
        i(&["W", "U"], &["Y"], &[]) + i(&["W", "V"], &["Z"], &[]) - uv - rate_loss - hk,
    );
    if r != 1.0 {
        rep.notes.push(EXTRAPOLATION_NOTE.into());
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessVerdict {
    /// Every condition holds strictly for the returned chain.
    Admissible,
    /// No chain found; the inner bound is only sufficient, so this says
    /// nothing about admissibility.
    NoWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSearch {
    pub verdict: WitnessVerdict,
    pub min_slack: f64,
    pub chain: InnerAuxChain,
    pub report: BoundReport,
    pub budget: SearchBudget,
    pub seed: u64,
}

/// Which inner system a search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSystem {
    HanCosta,
    Separation,
}

/// Maximizes the smallest Han–Costa slack over sampled and refined chains.
pub fn search_witness(
    src: &SourceSpec,
    ch: &ChannelSpec,
    caps: InnerCaps,
    budget: SearchBudget,
    seed: u64,
) -> Result<WitnessSearch> {
    search_inner(InnerSystem::HanCosta, src, ch, caps, budget, seed, 1.0, TOL_STRICT)
}

/// Witness search over either inner system, at bandwidth expansion `r` and
/// strictness tolerance `tol`.
#[allow(clippy::too_many_arguments)]
pub fn search_inner(
    system: InnerSystem,
    src: &SourceSpec,
    ch: &ChannelSpec,
    caps: InnerCaps,
    budget: SearchBudget,
    seed: u64,
    r: f64,
    tol: f64,
) -> Result<WitnessSearch> {
    let x_size = ch.x_alpha().size();
    let restarts = budget.restarts.max(1);
    // validates alphabets and R once so the objectives below cannot fail
    {
        let mut rng = restart_rng(seed, 0);
        let probe = sample_decoupled(src, caps, x_size, RowSampler::Dirichlet, &mut rng)?;
        eval_separation(src, ch, &probe, r)?;
    }
    let (_, chain, _) = match system {
        InnerSystem::HanCosta => {
            let objective = |c: &InnerAuxChain| {
                eval_han_costa(src, ch, c, r).expect("validated").min_slack()
            };
            best_of(restarts, |k| {
                let mut rng = restart_rng(seed, k);
                let start = sample_inner(src, caps, x_size, RowSampler::for_restart(k), &mut rng)
                    .expect("validated");
                local_refine(objective, start, budget.steps, &mut rng)
            })
        }
        InnerSystem::Separation => {
            let objective = |c: &Decoupled| {
                // tied rows keep the chain decoupled up to rounding
                eval_separation(src, ch, &c.0, r).map(|rep| rep.min_slack()).unwrap_or(f64::NEG_INFINITY)
            };
            best_of(restarts, |k| {
                let mut rng = restart_rng(seed, k);
                let start = Decoupled(
                    sample_decoupled(src, caps, x_size, RowSampler::for_restart(k), &mut rng).expect("validated"),
                );
                let (c, v) = local_refine_decoupled(objective, start, budget.steps, &mut rng);
                (c.0, v)
            })
        }
    }
    .expect("at least one restart");
    let report = match system {
        InnerSystem::HanCosta => eval_han_costa(src, ch, &chain, r)?,
        InnerSystem::Separation => eval_separation(src, ch, &chain, r)?,
    }
    .with_tolerance(tol);
    let min_slack = report.min_slack();
    Ok(WitnessSearch {
        verdict: if report.all_strict() {
            WitnessVerdict::Admissible
        } else {
            WitnessVerdict::NoWitness
        },
        min_slack,
        chain,
        report,
        budget,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_class::channels::{constant, identity};
    use crate::prob_core::{binary_entropy, Alphabet, ConditionalPmf};
    use approx::assert_abs_diff_eq;

    fn doubled(p: f64) -> SourceSpec {
        SourceSpec::from_table(2, 2, vec![1.0 - p, 0.0, 0.0, p]).unwrap()
    }

    fn noiseless() -> ChannelSpec {
        ChannelSpec::from_marginals(&identity(2), &identity(2)).unwrap()
    }

    fn a(name: &str, n: usize) -> Alphabet {
        Alphabet::new(name, n).unwrap()
    }

    /// W = S (= K), U, V constant, X = W.
    fn w_equals_s() -> InnerAuxChain {
        let aux = vec![a("W", 2), a("U", 1), a("V", 1)];
        InnerAuxChain::new(
            ConditionalPmf::deterministic(vec![a("S", 2), a("T", 2)], aux.clone(), |r| r / 2).unwrap(),
            ConditionalPmf::deterministic(aux, vec![a("X", 2)], |w| w).unwrap(),
        )
        .unwrap()
    }

    /// W = (S, N) with N a fair coin, X = S xor N.
    fn w_equals_s_and_coin() -> InnerAuxChain {
        let aux = vec![a("W", 4), a("U", 1), a("V", 1)];
        let mut wuv = vec![0.0; 16];
        for (st, row) in wuv.chunks_mut(4).enumerate() {
            let s = st / 2;
            row[2 * s] = 0.5;
            row[2 * s + 1] = 0.5;
        }
        InnerAuxChain::new(
            ConditionalPmf::new(vec![a("S", 2), a("T", 2)], aux.clone(), wuv).unwrap(),
            ConditionalPmf::deterministic(aux, vec![a("X", 2)], |w| (w / 2) ^ (w % 2)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn w_equals_s_sits_on_the_boundary() {
        let h = binary_entropy(0.2);
        assert_abs_diff_eq!(h, 0.7219, epsilon = 1e-4);
        let rep = eval_han_costa(&doubled(0.2), &noiseless(), &w_equals_s(), 1.0).unwrap();
        for label in ["2", "3", "4", "5"] {
            assert_abs_diff_eq!(rep.rhs(label), h, epsilon = 1e-12);
            assert!(!rep.entry(label).unwrap().strict_ok);
        }
    }

    #[test]
    fn doubled_source_with_uniform_input() {
        let h = binary_entropy(0.2);
        let rep = eval_han_costa(&doubled(0.2), &noiseless(), &w_equals_s_and_coin(), 1.0).unwrap();
        for label in ["2", "3", "4"] {
            assert_abs_diff_eq!(rep.rhs(label), 1.0, epsilon = 1e-12);
        }
        // I(ST;KW) = H(S) is subtracted from the two 1-bit terms
        assert_abs_diff_eq!(rep.rhs("5"), 2.0 - h, epsilon = 1e-12);
        assert!(rep.all_strict());
        let rep = eval_han_costa(&doubled(0.5), &noiseless(), &w_equals_s_and_coin(), 1.0).unwrap();
        assert_abs_diff_eq!(rep.slack("2"), 0.0, epsilon = 1e-12);
        assert!(!rep.entry("2").unwrap().strict_ok);
    }

    #[test]
    fn u_equals_s_reduces_entry_two() {
        let src = SourceSpec::from_table(2, 2, vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        let aux = vec![a("W", 1), a("U", 2), a("V", 1)];
        let chain = InnerAuxChain::new(
            ConditionalPmf::deterministic(vec![a("S", 2), a("T", 2)], aux.clone(), |r| r / 2).unwrap(),
            ConditionalPmf::deterministic(aux, vec![a("X", 2)], |u| u).unwrap(),
        )
        .unwrap();
        let ch = ChannelSpec::from_marginals(&identity(2), &constant(2, 1)).unwrap();
        let rep = eval_han_costa(&src, &ch, &chain, 1.0).unwrap();
        assert_abs_diff_eq!(rep.rhs("2"), binary_entropy(0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.slack("2"), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn separation_requires_decoupling() {
        let r = eval_separation(&doubled(0.2), &noiseless(), &w_equals_s(), 1.0);
        assert!(matches!(r, Err(Error::NotDecoupled(d)) if d > 0.5));
    }

    #[test]
    fn r_scaling_divides_lhs_and_is_noted() {
        let rep = eval_han_costa(&doubled(0.2), &noiseless(), &w_equals_s(), 2.0).unwrap();
        assert_abs_diff_eq!(rep.entry("2").unwrap().lhs, binary_entropy(0.2) / 2.0, epsilon = 1e-12);
        assert_eq!(rep.notes.len(), 1);
        assert!(eval_han_costa(&doubled(0.2), &noiseless(), &w_equals_s(), 0.0).is_err());
    }

    #[test]
    fn search_finds_witness_for_doubled_source() {
        let w = search_witness(&doubled(0.2), &noiseless(), InnerCaps::default_for(2), SearchBudget::new(8, 100), 0)
            .unwrap();
        assert_eq!(w.verdict, WitnessVerdict::Admissible);
        assert!(w.min_slack > 0.0);
        let again = eval_han_costa(&doubled(0.2), &noiseless(), &w.chain, 1.0).unwrap();
        assert_eq!(again.min_slack(), w.min_slack);
    }

    #[test]
    fn constant_channel_has_no_witness() {
        let ch = ChannelSpec::from_marginals(&constant(2, 1), &constant(2, 1)).unwrap();
        let w = search_witness(&doubled(0.3), &ch, InnerCaps::default_for(2), SearchBudget::new(4, 50), 1).unwrap();
        assert_eq!(w.verdict, WitnessVerdict::NoWitness);
        assert!(w.min_slack <= -binary_entropy(0.3) + 1e-9);
    }
}
