//! Converse side: the two necessary-condition systems for a given outer chain,
//! and a one-sided scan over chains.

use serde::{Deserialize, Serialize};

use crate::aux_chain::{compose_outer, local_refine, sample_outer, OuterAuxChain, OuterCaps, RowSampler};
use crate::channel_class::ChannelSpec;
use crate::common_part::SourceSpec;
use crate::error::Result;
use crate::inner_bound::{scaled_lhs, EXTRAPOLATION_NOTE};
use crate::prob_core::JointPmf;
use crate::report::{BoundReport, TOL_STRICT};
use crate::search::{best_of, restart_rng, SearchBudget};

pub const DEFAULT_OUTER_BUDGET: SearchBudget = SearchBudget::new(32, 200);

/// Form of entries `"10"` and `"11"`.
///
/// `AsPrinted` uses `I(T;Z|V)` and `I(S;Y|U)` as the private terms;
/// `ProofDerived` uses the larger `I(TU;Z|V)` and `I(SV;Y|U)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterVariant {
    #[default]
    AsPrinted,
    ProofDerived,
}

fn outer_terms(src: &SourceSpec, ch: &ChannelSpec, chain: &OuterAuxChain) -> Result<JointPmf> {
    Ok(compose_outer(src, ch, chain)?.marginalize(&["K", "S", "T", "U", "V", "Y", "Z"])?)
}

fn measure(j: &JointPmf) -> impl Fn(&[&str], &[&str], &[&str]) -> f64 + '_ {
    move |a, b, c| j.info_measure(a, b, c).expect("axis groups are fixed and valid")
}

/// Entries `"7"` to `"13"`.
pub fn eval_thm1(
    src: &SourceSpec,
    ch: &ChannelSpec,
    chain: &OuterAuxChain,
    r: f64,
    variant: OuterVariant,
) -> Result<BoundReport> {
    let (hk, hs, ht, hst) = scaled_lhs(src, r)?;
    let j = outer_terms(src, ch, chain)?;
    let i = measure(&j);
    let (t_private, s_private) = match variant {
        OuterVariant::AsPrinted => (i(&["T"], &["Z"], &["V"]), i(&["S"], &["Y"], &["U"])),
        OuterVariant::ProofDerived => (i(&["T", "U"], &["Z"], &["V"]), i(&["S", "V"], &["Y"], &["U"])),
    };
    let mut rep = BoundReport::new("outer-1", r);
    rep.push("7", hk, i(&["K"], &["Y"], &["U"]).min(i(&["K"], &["Z"], &["V"])));
    rep.push("8", hs, i(&["S"], &["Y"], &["U"]));
    rep.push("9", ht, i(&["T"], &["Z"], &["V"]));
    rep.push("10", hst, i(&["S"], &["Y"], &["T", "U", "V"]) + t_private);
    rep.push("11", hst, i(&["T"], &["Z"], &["S", "U", "V"]) + s_private);
    rep.push(
        "12",
        hst,
        i(&["K", "U", "V"], &["Y"], &[]) + i(&["S"], &["Y"], &["T", "U", "V"]) + i(&["T"], &["Z"], &["K", "U", "V"]),
    );
    rep.push(
        "13",
        hst,
        i(&["K", "U", "V"], &["Z"], &[]) + i(&["T"], &["Z"], &["S", "U", "V"]) + i(&["S"], &["Y"], &["K", "U", "V"]),
    );
    if variant == OuterVariant::ProofDerived {
        rep.notes.push("entries 10 and 11 use the proof-derived private terms".into());
    }
    if r != 1.0 {
        rep.notes.push("R != 1: source entropies divided by R".into());
    }
    Ok(rep)
}

/// Entries `"14"` to `"20"`, with `Q = (K, U, V)` kept as an axis group.
pub fn eval_thm2(src: &SourceSpec, ch: &ChannelSpec, chain: &OuterAuxChain, r: f64) -> Result<BoundReport> {
    const Q: [&str; 3] = ["K", "U", "V"];
    const QS: [&str; 4] = ["K", "U", "V", "S"];
    const QT: [&str; 4] = ["K", "U", "V", "T"];
    let (hk, hs, ht, hst) = scaled_lhs(src, r)?;
    let j = outer_terms(src, ch, chain)?;
    let i = measure(&j);
    let mut rep = BoundReport::new("outer-2", r);
    rep.push("14", hk, i(&Q, &["Y"], &[]).min(i(&Q, &["Z"], &[])));
    rep.push("15", hs, i(&QS, &["Y"], &[]));
    rep.push("16", ht, i(&QT, &["Z"], &[]));
    rep.push("17", hst, i(&["S"], &["Y"], &QT) + i(&QT, &["Z"], &[]));
    rep.push("18", hst, i(&["T"], &["Z"], &QS) + i(&QS, &["Y"], &[]));
    rep.push("19", hst, i(&Q, &["Y"], &[]) + i(&["S"], &["Y"], &QT) + i(&["T"], &["Z"], &Q));
    rep.push("20", hst, i(&Q, &["Z"], &[]) + i(&["T"], &["Z"], &QS) + i(&["S"], &["Y"], &Q));
    if r != 1.0 {
        rep.notes.push("R != 1: source entropies divided by R".into());
    }
    Ok(rep)
}

/// Which outer system a scan targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterSystem {
    Thm1(OuterVariant),
    Thm2,
}

impl OuterSystem {
    pub fn eval(self, src: &SourceSpec, ch: &ChannelSpec, chain: &OuterAuxChain, r: f64) -> Result<BoundReport> {
        match self {
            OuterSystem::Thm1(v) => eval_thm1(src, ch, chain, r, v),
            OuterSystem::Thm2 => eval_thm2(src, ch, chain, r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterVerdict {
    /// A chain satisfying every necessary condition was found.
    ConsistentWithOuterBound,
    /// No satisfying chain within the budget. Evidence of non-admissibility
    /// only: the conditions quantify over all chains.
    NoSatisfyingChainFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterScan {
    pub system: OuterSystem,
    pub verdict: OuterVerdict,
    pub min_slack: f64,
    pub chain: OuterAuxChain,
    pub report: BoundReport,
    pub budget: SearchBudget,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Maximizes the smallest slack of the chosen system. Odd restarts use a
/// deterministic input map, even restarts a stochastic input rule.
#[allow(clippy::too_many_arguments)]
pub fn outer_superset_scan(
    system: OuterSystem,
    src: &SourceSpec,
    ch: &ChannelSpec,
    caps: OuterCaps,
    budget: SearchBudget,
    r: f64,
    seed: u64,
    tol: f64,
) -> Result<OuterScan> {
    let x_size = ch.x_alpha().size();
    {
        let mut rng = restart_rng(seed, 0);
        let probe = sample_outer(src, caps, x_size, true, RowSampler::Dirichlet, &mut rng)?;
        system.eval(src, ch, &probe, r)?;
    }
    let objective = |c: &OuterAuxChain| system.eval(src, ch, c, r).expect("validated").min_slack();
    let (_, chain, _) = best_of(budget.restarts.max(1), |k| {
        let mut rng = restart_rng(seed, k);
        let start = sample_outer(src, caps, x_size, k % 2 == 1, RowSampler::for_restart(k), &mut rng)
            .expect("validated");
        local_refine(objective, start, budget.steps, &mut rng)
    })
    .expect("at least one restart");
    let report = system.eval(src, ch, &chain, r)?.with_tolerance(tol);
    let found = report.all_weak();
    let mut notes = Vec::new();
    if !found {
        notes.push(format!(
            "heuristic, one-sided: no chain among {} restarts x {} steps satisfies the necessary conditions",
            budget.restarts.max(1),
            budget.steps
        ));
    }
    if r != 1.0 {
        notes.push(EXTRAPOLATION_NOTE.into());
    }
    Ok(OuterScan {
        system,
        verdict: if found {
            OuterVerdict::ConsistentWithOuterBound
        } else {
            OuterVerdict::NoSatisfyingChainFound
        },
        min_slack: report.min_slack(),
        chain,
        report,
        budget,
        seed,
        notes,
    })
}

/// [`outer_superset_scan`] with default tolerance and `R = 1`.
pub fn outer_scan_default(
    system: OuterSystem,
    src: &SourceSpec,
    ch: &ChannelSpec,
    caps: OuterCaps,
    budget: SearchBudget,
    seed: u64,
) -> Result<OuterScan> {
    outer_superset_scan(system, src, ch, caps, budget, 1.0, seed, TOL_STRICT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aux_chain::XRule;
    use crate::channel_class::channels::{constant, identity};
    use crate::prob_core::{binary_entropy, Alphabet, ConditionalPmf};
    use approx::assert_abs_diff_eq;

    fn a(name: &str, n: usize) -> Alphabet {
        Alphabet::new(name, n).unwrap()
    }

    fn doubled(p: f64) -> SourceSpec {
        SourceSpec::from_table(2, 2, vec![1.0 - p, 0.0, 0.0, p]).unwrap()
    }

    fn x_is_s() -> OuterAuxChain {
        OuterAuxChain::new(
            ConditionalPmf::uniform(vec![a("S", 2), a("T", 2)], vec![a("U", 1), a("V", 1)]).unwrap(),
            XRule::Deterministic {
                x_size: 2,
                map: vec![0, 0, 1, 1],
            },
        )
        .unwrap()
    }

    fn noiseless() -> ChannelSpec {
        ChannelSpec::from_marginals(&identity(2), &identity(2)).unwrap()
    }

    #[test]
    fn x_equals_s_on_noiseless_channel() {
        let src = doubled(0.3);
        let rep = eval_thm1(&src, &noiseless(), &x_is_s(), 1.0, OuterVariant::AsPrinted).unwrap();
        assert_abs_diff_eq!(rep.rhs("8"), binary_entropy(0.3), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.slack("8"), 0.0, epsilon = 1e-12);
        let rep2 = eval_thm2(&src, &noiseless(), &x_is_s(), 1.0).unwrap();
        assert_abs_diff_eq!(rep2.rhs("14"), binary_entropy(0.3), epsilon = 1e-12);
        assert_abs_diff_eq!(rep2.slack("14"), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_channel_zeroes_every_rhs() {
        let ch = ChannelSpec::from_marginals(&constant(2, 1), &constant(2, 2)).unwrap();
        let src = SourceSpec::from_table(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for rep in [
            eval_thm1(&src, &ch, &x_is_s(), 1.0, OuterVariant::AsPrinted).unwrap(),
            eval_thm2(&src, &ch, &x_is_s(), 1.0).unwrap(),
        ] {
            assert!(rep.entries.iter().all(|e| e.rhs.abs() < 1e-12));
            assert!(!rep.all_weak());
        }
    }

    #[test]
    fn labels_are_exact() {
        let src = doubled(0.3);
        let r1 = eval_thm1(&src, &noiseless(), &x_is_s(), 1.0, OuterVariant::ProofDerived).unwrap();
        let labels: Vec<_> = r1.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["7", "8", "9", "10", "11", "12", "13"]);
        let r2 = eval_thm2(&src, &noiseless(), &x_is_s(), 1.0).unwrap();
        let labels: Vec<_> = r2.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["14", "15", "16", "17", "18", "19", "20"]);
    }

    #[test]
    fn scan_verdicts() {
        let caps = OuterCaps::default_for(2);
        let budget = SearchBudget::new(4, 60);
        let zero = SourceSpec::from_table(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = outer_scan_default(OuterSystem::Thm2, &zero, &noiseless(), caps, budget, 0).unwrap();
        assert_eq!(s.verdict, OuterVerdict::ConsistentWithOuterBound);

        let s = outer_scan_default(OuterSystem::Thm1(OuterVariant::AsPrinted), &doubled(0.2), &noiseless(), caps, budget, 0)
            .unwrap();
        assert_eq!(s.verdict, OuterVerdict::ConsistentWithOuterBound);

        // H(ST) = 2 bits cannot cross a channel whose joint output carries 1 bit
        let big = SourceSpec::from_table(2, 2, vec![0.25; 4]).unwrap();
        let s = outer_scan_default(OuterSystem::Thm2, &big, &noiseless(), caps, budget, 0).unwrap();
        assert_eq!(s.verdict, OuterVerdict::NoSatisfyingChainFound);
        assert_eq!(s.notes.len(), 1);
    }
}
