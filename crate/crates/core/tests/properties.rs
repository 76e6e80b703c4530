use elhlearn::batch::{build_batch, learn_from_batch};
use elhlearn::gen::{concept_pool, corpus, random_abox, random_concept, role_pool, GenConfig, Instance};
use elhlearn::learner::{self, aq};
use elhlearn::pac::{pac_from_exact, random_support, sample_bound, true_error, Distribution};
use elhlearn::reasoner::{
    self, answers, entails_ci, find_separator, inseparable, simulation, FirstChoice, Lang, Model,
};
use elhlearn::syntax::{abox_of_concept, concept_of_tree_abox, parse_tbox, Ci, Concept, ConceptTree, Name, Query, Signature, TBox};
use elhlearn::teacher::{Oracle, Policy, Session};
use elhlearn::updates::generalise;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn concept() -> impl Strategy<Value = Concept> {
    let leaf = prop_oneof![
        Just(Concept::Top),
        prop::sample::select(vec!["A", "B", "C"]).prop_map(Concept::name),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Concept::and),
            (prop::sample::select(vec!["r", "s"]), inner).prop_map(|(r, c)| Concept::exists(r, c)),
        ]
    })
}

fn instance(seed: u64) -> Instance {
    corpus(seed, 1, &GenConfig::default()).remove(0)
}

fn lang() -> impl Strategy<Value = Lang> {
    prop::sample::select(vec![Lang::Aq, Lang::Iq, Lang::Cqr])
}

fn policy() -> impl Strategy<Value = Policy> {
    prop_oneof![Just(Policy::MinimalDeterministic), any::<u64>().prop_map(Policy::SeedRandomized), Just(Policy::AdversarialCq)]
}

fn small_sig() -> (Vec<Name>, Vec<Name>) {
    (concept_pool(4), role_pool(2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tree_round_trip(c in concept()) {
        let tree = ConceptTree::of_concept(&c);
        prop_assert_eq!(tree.concept_at(0), c.normalize());
        prop_assert_eq!(ConceptTree::of_concept(&tree.concept_at(0)), tree);
    }

    #[test]
    fn concept_abox_is_a_tree(c in concept()) {
        let (a, root) = abox_of_concept(&c);
        let roles = a.role_assertions().count();
        prop_assert_eq!(roles + 1, a.ind().len());
        let mut reached = BTreeSet::from([root.clone()]);
        let mut frontier = vec![root.clone()];
        while let Some(x) = frontier.pop() {
            for (_, _, y) in a.role_assertions().filter(|(_, from, _)| **from == x) {
                prop_assert!(reached.insert(y.clone()), "{} reached twice", y);
                frontier.push(y.clone());
            }
        }
        prop_assert_eq!(reached.len(), a.ind().len());
        prop_assert_eq!(concept_of_tree_abox(&a, &root).unwrap(), c.normalize());
    }

    #[test]
    fn tbox_text_round_trip(seed in any::<u64>()) {
        let t = instance(seed).target;
        prop_assert_eq!(parse_tbox(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn iq_answers_are_monotone_in_the_tbox(seed in any::<u64>(), extra in concept()) {
        let inst = instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (names, roles) = small_sig();
        let mut bigger = TBox::from_parts(inst.target.cis().to_vec(), inst.target.ris().to_vec());
        bigger.add_ci(Ci::new(extra, Concept::Name(names[rng.gen_range(0..names.len())].clone())));
        let (small, large) = (Model::build(&inst.target, &inst.abox), Model::build(&bigger, &inst.abox));
        for _ in 0..20 {
            let q = Query::iq(random_concept(&mut rng, &names, &roles, 3), inst.abox.ind().iter().next().unwrap().clone());
            if reasoner::answers_in(&small, &q).unwrap() {
                prop_assert!(reasoner::answers_in(&large, &q).unwrap());
            }
        }
    }

    #[test]
    fn simulation_preserves_concepts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (names, roles) = small_sig();
        let sig = Signature { concepts: names.iter().cloned().collect(), roles: roles.iter().cloned().collect() };
        let cfg = GenConfig::default();
        let (left, right) = (Model::of_abox(&random_abox(&mut rng, &sig, None, &cfg)), Model::of_abox(&random_abox(&mut rng, &sig, None, &cfg)));
        for d in 0..left.len() {
            for e in 0..right.len() {
                if simulation(&left, d, &right, e).is_none() {
                    continue;
                }
                for _ in 0..10 {
                    let c = random_concept(&mut rng, &names, &roles, 3);
                    if left.holds_at(d, &c) {
                        prop_assert!(right.holds_at(e, &c), "{} lost from {} to {}", c.to_ascii(), d, e);
                    }
                }
            }
        }
    }

    #[test]
    fn separators_are_genuine(seed in any::<u64>(), lang in lang()) {
        let inst = instance(seed);
        let other = instance(seed.wrapping_add(1)).target;
        match find_separator(&inst.target, &other, &inst.abox, lang, &mut FirstChoice) {
            Some(sep) => {
                let l = answers(&inst.target, &inst.abox, &sep.query).unwrap();
                let r = answers(&other, &inst.abox, &sep.query).unwrap();
                prop_assert_eq!(l, sep.positive);
                prop_assert_ne!(l, r);
            }
            None => prop_assert!(inseparable(&inst.target, &other, &inst.abox, lang).is_yes()),
        }
    }

    #[test]
    fn entailment_is_reflexive_and_respects_conjunction(c in concept(), d in concept(), seed in any::<u64>()) {
        let t = instance(seed).target;
        prop_assert!(entails_ci(&t, &c, &c));
        prop_assert!(entails_ci(&t, &Concept::and([c.clone(), d.clone()]), &c));
        prop_assert!(entails_ci(&t, &c, &Concept::Top));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn iq_inseparability_means_agreement(seed in any::<u64>()) {
        let inst = instance(seed);
        let mut s = Session::new(inst.target.clone(), inst.abox.clone(), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        let h = learner::learn(&mut s, Lang::Iq).unwrap().hypothesis;
        prop_assert!(inseparable(&inst.target, &h, &inst.abox, Lang::Iq).is_yes());
        let (mt, mh) = (Model::build(&inst.target, &inst.abox), Model::build(&h, &inst.abox));
        let sig = inst.target.signature().union(&inst.abox.signature());
        let names: Vec<Name> = sig.concepts.iter().cloned().collect();
        let roles: Vec<Name> = sig.roles.iter().cloned().collect();
        let inds: Vec<Name> = inst.abox.ind().iter().cloned().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let q = Query::iq(random_concept(&mut rng, &names, &roles, 3), inds[rng.gen_range(0..inds.len())].clone());
            prop_assert_eq!(reasoner::answers_in(&mt, &q).unwrap(), reasoner::answers_in(&mh, &q).unwrap());
        }
    }

    #[test]
    fn learners_are_positive_bounded_and_accounted(seed in any::<u64>(), lang in lang(), policy in policy()) {
        let inst = instance(seed);
        let mut s = Session::new(inst.target.clone(), inst.abox.clone(), lang, policy).unwrap();
        let run = learner::learn(&mut s, lang).unwrap();
        for ci in run.hypothesis.cis() {
            prop_assert!(entails_ci(&inst.target, &ci.lhs, &ci.rhs), "{} [= {}", ci.lhs.to_ascii(), ci.rhs.to_ascii());
        }
        for ri in run.hypothesis.ris() {
            prop_assert!(reasoner::entails_ri(&inst.target, &ri.sub, &ri.sup));
        }
        let c = s.counters();
        let total: u64 = s.transcript().iter().map(|e| e.input_size).sum();
        prop_assert_eq!(c.total_input_size(), total);
        prop_assert_eq!(c.calls(), s.transcript().len() as u64);
        let mut last = 0;
        for e in s.transcript() {
            prop_assert!(e.running_totals.calls() > last);
            last = e.running_totals.calls();
        }
        for it in &run.iterations {
            for (before, after) in &it.replacements {
                prop_assert!(after > before);
            }
        }
    }

    #[test]
    fn aq_with_and_without_inseparability_queries(seed in any::<u64>()) {
        let inst = instance(seed);
        for mq_only in [true, false] {
            let mut s = Session::new(inst.target.clone(), inst.abox.clone(), Lang::Aq, Policy::MinimalDeterministic).unwrap();
            let run = aq::learn(&mut s, &aq::AqOptions { mq_only, ..Default::default() }).unwrap();
            prop_assert!(inseparable(&inst.target, &run.hypothesis, &inst.abox, Lang::Aq).is_yes());
            if mq_only {
                prop_assert_eq!(s.counters().eq_count, 0);
            }
        }
    }

    #[test]
    fn generalisation_keeps_soundness_and_aq_inseparability(seed in any::<u64>()) {
        let inst = instance(seed);
        let mut s = Session::new(inst.target.clone(), inst.abox.clone(), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        let h = aq::learn(&mut s, &aq::AqOptions { mq_only: true, ..Default::default() }).unwrap().hypothesis;
        let g = generalise(&mut s, &h).unwrap().tbox;
        for ci in g.cis() {
            prop_assert!(entails_ci(&inst.target, &ci.lhs, &ci.rhs));
        }
        prop_assert!(inseparable(&inst.target, &g, &inst.abox, Lang::Aq).is_yes());
    }

    #[test]
    fn batch_replay_is_oracle_free_and_small(seed in any::<u64>(), lang in lang()) {
        let inst = instance(seed);
        let b = build_batch(&inst.target, &inst.abox, lang).unwrap();
        let n = inst.target.size().max(1);
        prop_assert!(b.size() <= n * n, "{} > {}", b.size(), n * n);
        let h = learn_from_batch(&b, lang).unwrap();
        prop_assert!(inseparable(&inst.target, &h, &inst.abox, lang).is_yes());
    }

    #[test]
    fn true_error_is_a_pseudometric(seed in any::<u64>(), lang in lang()) {
        let inst = instance(seed);
        let other = instance(seed.wrapping_add(7)).target;
        let support = random_support(&inst.target, &inst.abox, lang, 40, seed);
        prop_assume!(!support.is_empty());
        let d = Distribution::uniform(support, seed).unwrap();
        prop_assert!((d.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert_eq!(true_error(&inst.target, &inst.target, &d).unwrap(), 0.0);
        prop_assert_eq!(true_error(&other, &inst.target, &d).unwrap(), true_error(&inst.target, &other, &d).unwrap());
    }

    #[test]
    fn pac_draws_within_the_exact_learners_stages(seed in any::<u64>(), lang in lang()) {
        let inst = instance(seed);
        let mut exact = Session::new(inst.target.clone(), inst.abox.clone(), lang, Policy::MinimalDeterministic).unwrap();
        learner::learn(&mut exact, lang).unwrap();
        let stages = exact.counters().eq_count.max(1);
        let support = random_support(&inst.target, &inst.abox, lang, 100, seed);
        prop_assume!(!support.is_empty());
        let d = Distribution::uniform(support, seed).unwrap();
        let mut s = Session::new(inst.target.clone(), inst.abox.clone(), lang, Policy::MinimalDeterministic).unwrap();
        let (_, report) = pac_from_exact(&mut s, 0.1, 0.1, d).unwrap();
        let cap: u64 = (1..=stages).map(|i| sample_bound(0.1, 0.1, i)).sum();
        prop_assert!(report.samples_used <= cap, "{} > {}", report.samples_used, cap);
    }

    #[test]
    fn distributions_reject_bad_weights(w in prop::collection::vec(0.0f64..1.0, 1..6)) {
        let inst = instance(1);
        let support = random_support(&inst.target, &inst.abox, Lang::Iq, w.len(), 1);
        prop_assume!(support.len() == w.len());
        let sum: f64 = w.iter().sum();
        let ok = Distribution::new(support.clone(), w.clone(), 0).is_ok();
        prop_assert_eq!(ok, (sum - 1.0).abs() <= 1e-9);
        let normalized: Vec<f64> = w.iter().map(|x| x / sum).collect();
        prop_assume!(sum > 0.0);
        prop_assert!(Distribution::new(support, normalized, 0).is_ok());
    }

    #[test]
    fn sessions_are_deterministic_per_seed(seed in any::<u64>(), lang in lang(), k in any::<u64>()) {
        let inst = instance(seed);
        let mut outs = Vec::new();
        for _ in 0..2 {
            let mut s = Session::new(inst.target.clone(), inst.abox.clone(), lang, Policy::SeedRandomized(k)).unwrap();
            let h = learner::learn(&mut s, lang).unwrap().hypothesis;
            outs.push((h, s.transcript_jsonl()));
        }
        prop_assert_eq!(&outs[0], &outs[1]);
    }
}
