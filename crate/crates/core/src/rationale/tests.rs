use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::select::exact_and_greedy;
use super::*;
use crate::balance::{CheckResult, BYPRODUCT_COMPATIBILITY};
use crate::chemist::{general_chemist, ReactionReport};
use crate::debate::DebateSettings;
use crate::knowbase::Facets;
use crate::reaction::Reaction;
use crate::recall::{Candidate, Origin};
use crate::resources::Resources;
use crate::tagger::SalienceWeights;

fn line(id: &str, tau: &str, r: &[&str], p: &[&str], slots: [&str; 5]) -> String {
    serde_json::json!({
        "id": id, "reaction_type": tau, "reactants": r, "products": p,
        "catalyst1": slots[0], "solvent1": slots[1], "solvent2": slots[2],
        "reagent1": slots[3], "reagent2": slots[4],
    })
    .to_string()
}

struct Fixture {
    base: ReactionBase,
    reaction: Reaction,
    report: ReactionReport,
}

impl Fixture {
    fn new(query: &str) -> Self {
        let lines = [
            line("r01", "amide coupling", &["CC(=O)Cl", "CN"], &["CC(=O)NC"], ["", "DCM", "", "TEA", ""]),
            line("r02", "amide coupling", &["CC(=O)Cl", "CCN"], &["CC(=O)NCC"], ["", "DCM", "", "DIPEA", ""]),
            line("r03", "amide coupling", &["c1ccccc1C(=O)Cl", "CN"], &["c1ccccc1C(=O)NC"], ["DMAP", "THF", "", "TEA", ""]),
            line("r04", "esterification", &["CC(=O)O", "CCO"], &["CC(=O)OCC"], ["H2SO4", "toluene", "", "", ""]),
        ];
        let base = ReactionBase::ingest(Cursor::new(lines.join("\n")), Arc::new(Resources::bundled())).unwrap().0;
        let reaction = Reaction::from_reaction_smiles(query).unwrap();
        let report = general_chemist(&reaction, &base, &SalienceWeights::default());
        Fixture { base, reaction, report }
    }

    fn ctx(&self) -> DebateContext<'_> {
        DebateContext::new(&self.base, &self.reaction, &self.report, DebateSettings::default())
    }
}

fn cfg(slots: [&str; 5]) -> ConditionConfig {
    ConditionConfig::from_slots(slots)
}

fn citation(id: &str, type_match: bool, fg: f64, mcs: f64, tan: f64, score: f64) -> Citation {
    Citation { id: id.into(), facets: Facets { type_match, fg_jaccard: fg, mcs, tanimoto: tan }, score }
}

#[test]
fn align_exact_record_is_one() {
    let f = Fixture::new("CC(=O)Cl.CN>>CC(=O)NC");
    assert_eq!(f.report.reaction_type, "amide coupling");
    let i = f.base.index_of("r01").unwrap();
    let e = f.base.evidence_for(&f.ctx().query, &[i], Some(&f.report.reaction_type));
    assert!((align_score(&e, &f.base, &cfg(["", "DCM", "", "TEA", ""])) - 1.0).abs() < 1e-12);
    assert_eq!(align_score(&Evidence::default(), &f.base, &cfg(["", "DCM", "", "TEA", ""])), 0.0);
}

#[test]
fn align_hand_arithmetic() {
    let f = Fixture::new("CC(=O)Cl.CN>>CC(=O)NC");
    let e = f.base.evidence_from(vec![
        citation("r01", true, 0.5, 0.4, 0.3, 0.6),
        citation("r03", false, 1.0, 0.2, 0.1, 0.2),
        citation("r04", true, 0.0, 0.0, 1.0, 0.2),
    ]);
    let c = cfg(["", "DCM", "", "TEA", ""]);
    // r01 agrees on 5/5, r03 on 3/5 (empty solvent2, reagent1, reagent2), r04 on 2/5.
    let a01 = (0.35 + 0.25 * 0.5 + 0.2 * 0.4 + 0.2 * 0.3) * 1.0;
    let a03 = (0.25 * 1.0 + 0.2 * 0.2 + 0.2 * 0.1) * 0.6;
    let a04 = (0.35 + 0.2) * 0.4;
    let expected = (0.6 * a01 + 0.2 * a03 + 0.2 * a04) / 1.0;
    assert!((align_score(&e, &f.base, &c) - expected).abs() < 1e-12);

    let zero = f.base.evidence_from(vec![citation("r01", true, 1.0, 1.0, 1.0, 0.0), citation("r04", false, 0.0, 0.0, 0.0, 0.0)]);
    assert!((align_score(&zero, &f.base, &c) - 0.5).abs() < 1e-12);
}

#[test]
fn utility_examples() {
    assert_eq!(utility(1.0, 1.0, 1.0), 1.0);
    assert_eq!(utility(0.0, 0.0, 0.0), 0.0);
    for d in [0.0, 0.25, 0.5] {
        assert!((utility(0.0, 1.0, d) - (0.3 + 0.2 * d)).abs() < 1e-15);
    }
}

#[test]
fn diversity_basics() {
    let a = cfg(["", "DCM", "", "TEA", ""]);
    let b = cfg(["DMAP", "THF", "", "TEA", ""]);
    assert_eq!(diversity(&[&a]), 0.0);
    assert_eq!(diversity(&[&a, &a, &a]), 0.0);
    assert!((diversity(&[&a, &b]) - 0.4).abs() < 1e-15);
    let c = cfg(["x", "y", "z", "w", "v"]);
    // pairs: a-b 2/5, a-c 5/5, b-c 5/5
    assert!((diversity(&[&a, &b, &c]) - (0.4 + 1.0 + 1.0) / 3.0).abs() < 1e-15);
}

fn report(checks: &[(&str, bool)]) -> ConstraintReport {
    ConstraintReport::from_checks(
        checks.iter().map(|&(n, p)| CheckResult { name: n.into(), passed: p, message: String::new() }).collect(),
    )
}

#[test]
fn coherence_cases() {
    let m = Mechanism {
        reaction: "x".into(),
        main_fgs: vec!["acyl_chloride".into()],
        reaction_type: "amide coupling".into(),
        byproduct: Some("HCl".into()),
        equation: None,
    };
    let e = Evidence { citations: vec![citation("r01", true, 1.0, 1.0, 1.0, 1.0)], ..Default::default() };
    let s = report(&[("mass_balance", true), (BYPRODUCT_COMPATIBILITY, false)]);
    let claim = |support: Vec<Support>| Claim { text: "t".into(), support };
    let ok = vec![
        claim(vec![Support::Mechanism(MechanismField::MainFgs)]),
        claim(vec![Support::Mechanism(MechanismField::ReactionType), Support::Record("r01".into())]),
        claim(vec![Support::Check("mass_balance".into())]),
    ];
    assert!(coherence_check(&ok, &m, &e, &s));
    assert!(coherence_check(&[], &m, &e, &s));
    assert!(!coherence_check(&[claim(vec![Support::Record("r99".into())])], &m, &e, &s));
    assert!(!coherence_check(&[claim(vec![])], &m, &e, &s));
    assert!(!coherence_check(&[claim(vec![Support::Mechanism(MechanismField::Equation)])], &m, &e, &s));
    assert!(!coherence_check(&[claim(vec![Support::Check("no_such_check".into())])], &m, &e, &s));
    assert!(!coherence_check(&[claim(vec![Support::Check(BYPRODUCT_COMPATIBILITY.into())])], &m, &e, &s));
}

#[test]
fn failing_check_from_balance_breaks_coherence() {
    let f = Fixture::new("CC(=O)Cl.CCCN>>CC(=O)NCCC");
    let ctx = f.ctx();
    // No base to take up HCl.
    let bad = cfg(["", "DCM", "", "", ""]);
    let mut r = assemble(&ctx, &bad, &[], &RationaleSettings::default());
    assert!(!r.constraints.get(BYPRODUCT_COMPATIBILITY).unwrap().passed);
    assert!(coherence_check(&r.derivation, &r.mechanism, &r.evidence, &r.constraints));
    r.derivation.push(Claim {
        text: "HCl is scavenged.".into(),
        support: vec![Support::Check(BYPRODUCT_COMPATIBILITY.into())],
    });
    let v = validate(&bad, &r, &f.base, 0.0);
    assert!(!v.coherent_ok && !v.constr_ok && !v.valid);
}

#[test]
fn validity_truth_table() {
    let delta = 0.5;
    for constr in [false, true] {
        for align in [0.2, 0.5, 0.9] {
            for coherent in [false, true] {
                let v = ValidityResult::new(constr, align, delta, coherent);
                assert_eq!(v.valid, constr && coherent && align >= delta, "{constr} {align} {coherent}");
            }
        }
    }
}

#[test]
fn validate_uses_inclusive_threshold() {
    let f = Fixture::new("CC(=O)Cl.CCCN>>CC(=O)NCCC");
    let ctx = f.ctx();
    let c = cfg(["", "DCM", "", "TEA", ""]);
    let r = assemble(&ctx, &c, &["r01".into()], &RationaleSettings::default());
    let align = align_score(&r.evidence, &f.base, &c);
    assert!(align > 0.0);
    assert!(validate(&c, &r, &f.base, align).valid);
    assert!(!validate(&c, &r, &f.base, align + 1e-9).valid);
}

#[test]
fn assembled_rationale_is_referentially_sound() {
    let f = Fixture::new("CC(=O)Cl.CCCN>>CC(=O)NCCC");
    let ctx = f.ctx();
    let c = cfg(["", "DCM", "", "TEA", ""]);
    let r = assemble(&ctx, &c, &["r01".into(), "r02".into()], &RationaleSettings::default());
    assert!(r.constraints.passed);
    assert!(r.derivation.iter().all(|cl| !cl.support.is_empty()));
    assert!(r.evidence.ids().all(|id| f.base.contains(id)));
    assert!(r.evidence.ids().any(|id| id == "r01"));
    assert!(coherence_check(&r.derivation, &r.mechanism, &r.evidence, &r.constraints));
    assert!(r.derivation.iter().any(|cl| cl.text.starts_with("solvent1 DCM")));
    assert!(r.derivation.iter().any(|cl| cl.text.contains("By-product")));
    let s = crate::debate::Survivor {
        index: 0,
        candidate: Candidate {
            config: c.clone(),
            origin: Origin::Matched,
            provenance: vec!["r01".into()],
            channel_hits: 3,
            score: 1.0,
            parent: None,
            replaced: vec![],
        },
        wins: 1,
        depth: 0.5,
    };
    let rec = certify(&ctx, &s, &RationaleSettings::default());
    let expected = utility(rec.validity.align, 1.0, 0.5);
    assert!((rec.utility - expected).abs() < 1e-15);
    assert!(rec.validity.valid, "{:?}", rec.validity);
}

fn rec(slots: [String; 5], u: f64, valid: bool) -> Recommendation {
    let config = ConditionConfig::from_slots(slots.each_ref().map(String::as_str));
    Recommendation {
        config,
        utility: u,
        rationale: Rationale {
            mechanism: Mechanism::default(),
            constraints: report(&[]),
            evidence: Evidence::default(),
            derivation: vec![],
        },
        validity: ValidityResult::new(valid, 1.0, 0.5, true),
    }
}

fn random_recs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Recommendation> {
    let vals = ["", "a", "b", "c"];
    let mut out: Vec<Recommendation> = Vec::new();
    while out.len() < n {
        let slots: [String; 5] = std::array::from_fn(|_| vals[rng.gen_range(0..vals.len())].to_string());
        let r = rec(slots, rng.gen_range(0.0..1.0), true);
        if !out.iter().any(|o| o.config == r.config) {
            out.push(r);
        }
    }
    out
}

fn ids(set: &RecommendationSet) -> Vec<String> {
    let mut v: Vec<String> = set.entries.iter().map(Recommendation::id).collect();
    v.sort();
    v
}

/// All `k`-subsets via bitmasks, scored with the public objective.
fn brute_force(cands: &[Recommendation], k: usize, lambda: f64) -> (f64, Vec<Vec<String>>) {
    let mut best = f64::NEG_INFINITY;
    let mut scored = Vec::new();
    for mask in 0u32..(1 << cands.len()) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let subset: Vec<Recommendation> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i].clone()).collect();
        let v = objective(&subset, lambda);
        best = best.max(v);
        let mut ids: Vec<String> = subset.iter().map(Recommendation::id).collect();
        ids.sort();
        scored.push((v, ids));
    }
    let optimal = scored.into_iter().filter(|(v, _)| *v >= best - 1e-9).map(|x| x.1).collect();
    (best, optimal)
}

#[test]
fn exact_search_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let n = rng.gen_range(2..=12);
        let k = rng.gen_range(1..=n);
        let lambda = if trial == 0 { 0.5 } else { rng.gen_range(0.0..2.0) };
        let cands = random_recs(&mut rng, if trial == 0 { 8 } else { n });
        let k = if trial == 0 { 3 } else { k };
        let set = select_final(&cands, k, lambda, 15).unwrap();
        let (best, optimal) = brute_force(&cands, k, lambda);
        assert!((set.objective - best).abs() < 1e-9, "trial {trial}");
        assert!(optimal.contains(&ids(&set)), "trial {trial}");
        assert!((set.objective - objective(&set.entries, lambda)).abs() < 1e-15);
        assert_eq!(set.entries.len(), k);
    }
}

#[test]
fn k_out_one_and_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cands = random_recs(&mut rng, 6);
    let best = cands.iter().max_by(|a, b| a.utility.total_cmp(&b.utility)).unwrap();
    let set = select_final(&cands, 1, 5.0, 15).unwrap();
    assert_eq!(set.entries[0].config, best.config);
    assert_eq!(set.diversity, 0.0);
    assert_eq!(
        select_final(&cands, 7, 0.3, 15).unwrap_err(),
        RationaleError::NotEnoughValid { valid: 6, k_out: 7 }
    );
}

#[test]
fn invalid_candidates_never_selected() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [10, 30] {
        let mut cands = random_recs(&mut rng, n);
        for (i, c) in cands.iter_mut().enumerate() {
            if i % 3 == 0 {
                c.validity = ValidityResult::new(true, 0.1, 0.5, true);
                c.utility = 10.0;
            }
        }
        let valid = cands.iter().filter(|c| c.validity.valid).count();
        let set = select_final(&cands, valid.min(6), 0.3, 15).unwrap();
        assert!(set.entries.iter().all(|e| e.validity.valid && e.utility < 10.0));
        assert!(matches!(select_final(&cands, valid + 1, 0.3, 15), Err(RationaleError::NotEnoughValid { .. })));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lambda_zero_is_top_u(seed in any::<u64>(), n in 1usize..40, k_frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cands = random_recs(&mut rng, n);
        // Quantized utilities force ties.
        for c in &mut cands {
            c.utility = (c.utility * 4.0).floor() / 4.0;
        }
        let k = ((n as f64 * k_frac) as usize).max(1);
        let set = select_final(&cands, k, 0.0, 15).unwrap();
        let mut sorted = cands.clone();
        sorted.sort_by(|a, b| b.utility.total_cmp(&a.utility).then_with(|| a.id().cmp(&b.id())));
        let want: Vec<String> = sorted[..k].iter().map(Recommendation::id).collect();
        prop_assert_eq!(set.entries.iter().map(Recommendation::id).collect::<Vec<_>>(), want);
    }

    #[test]
    fn exact_dominates_greedy(seed in any::<u64>(), n in 2usize..=10, lambda in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = random_recs(&mut rng, n);
        let k = rng.gen_range(1..=n);
        let configs: Vec<ConditionConfig> = cands.iter().map(|c| c.config.clone()).collect();
        let (exact, greedy) = exact_and_greedy(cands.iter().map(|c| c.utility).collect(), &configs, lambda, k);
        prop_assert!(exact >= greedy - 1e-12);
    }

    #[test]
    fn diversity_in_unit_interval(seed in any::<u64>(), n in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = random_recs(&mut rng, n);
        let configs: Vec<&ConditionConfig> = cands.iter().map(|c| &c.config).collect();
        let d = diversity(&configs);
        prop_assert!((0.0..=1.0).contains(&d));
    }
}
