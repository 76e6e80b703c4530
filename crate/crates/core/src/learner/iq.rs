//! IQ learner: AQ phase, then per counterexample a reduction to a CI with a
//! concept name on the left, essentialization, and add-or-merge.

use super::{aq, ci_text, describe, Evidence, Iteration, Limits, Roles, Run};
use crate::error::{Error, Result};
use crate::reasoner::{self, Lang, Model};
use crate::syntax::{ABox, Assertion, Ci, Concept, ConceptTree, Name, Query, Signature, TBox};
use crate::teacher::Oracle;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, Default)]
pub struct IqOptions {
    pub limits: Limits,
}

/// The AQ-phase TBox plus one learned CI `A ⊑ C` per concept name.
#[derive(Clone, Debug, Default)]
pub struct Hypothesis {
    pub base: TBox,
    pub defs: BTreeMap<Name, Concept>,
}

impl Hypothesis {
    pub fn tbox(&self) -> TBox {
        let mut t = self.base.clone();
        for (a, c) in &self.defs {
            // The saturated definition repeats `a` itself at the root.
            let name = Concept::Name(a.clone());
            let rhs = match c {
                Concept::And(cs) => Concept::and(cs.iter().filter(|d| **d != name).cloned()),
                other => other.clone(),
            };
            if rhs != name && rhs != Concept::Top {
                t.add_ci(Ci::new(name, rhs));
            }
        }
        t
    }
}

fn root() -> Name {
    Name::from("a")
}

/// Membership query for the example `({lhs(a)}, c(a))`.
fn positive(oracle: &mut dyn Oracle, lhs: &Name, c: &Concept) -> Result<bool> {
    let abox = ABox::from_assertions([Assertion::concept(lhs.clone(), root())]);
    oracle.membership(&abox, &Query::iq(c.clone(), root()))
}

/// Everything `h` entails over the individuals of `a`, added to `a`.
pub fn saturate_aq(h: &TBox, a: &ABox) -> ABox {
    let m = Model::build(h, a);
    let mut out = a.clone();
    let inds: Vec<(Name, usize)> = m.individual_nodes().map(|(n, v)| (n.clone(), v)).collect();
    for (x, v) in &inds {
        for c in &m.labels[*v] {
            out.insert(Assertion::concept(c.clone(), x.clone()));
        }
        for (y, w) in &inds {
            for r in m.roles_between(*v, *w) {
                out.insert(Assertion::role(r, x.clone(), y.clone()));
            }
        }
    }
    out
}

/// Outcome of counterexample reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduced {
    /// `A ⊑ D`, entailed by the target and not by the hypothesis.
    Ci(Name, Concept),
    /// A concept name the target derives at an individual and the hypothesis does not.
    Atomic(Name, Name),
}

/// Walks the counterexample `c(ind)` along ABox edges until a single concept
/// assertion of `abox` yields a CI `A ⊑ D` the target entails and `h` does not.
pub fn reduce_counterexample(
    oracle: &mut dyn Oracle,
    abox: &ABox,
    c: &Concept,
    ind: &Name,
    h: &TBox,
) -> Result<Reduced> {
    let mh = Model::build(h, abox);
    let roles = reasoner::RoleHierarchy::of(h);
    let (mut c, mut ind) = (c.clone(), ind.clone());
    let budget = c.size() + 1;
    for _ in 0..budget {
        let v = mh.node_of(&ind).ok_or_else(|| Error::Contract(format!("`{ind}` not in the ABox")))?;
        let mut chosen = None;
        for d in c.conjuncts() {
            if let Concept::Exists(r, filler) = d {
                if !mh.holds_at(v, d) && oracle.membership(abox, &Query::iq(d.clone(), ind.clone()))? {
                    chosen = Some((d.clone(), r.clone(), (**filler).clone()));
                    break;
                }
            }
        }
        let Some((d, r, filler)) = chosen else {
            for b in c.conjuncts().into_iter().filter_map(Concept::as_name) {
                let q = Query::Aq(Assertion::concept(b.clone(), ind.clone()));
                if !mh.labels[v].contains(b) && oracle.membership(abox, &q)? {
                    return Ok(Reduced::Atomic(b.clone(), ind));
                }
            }
            return Err(Error::Contract(format!("{c}({ind}) is not a positive counterexample")));
        };
        let mut next = None;
        for (s, from, to) in abox.role_assertions() {
            if *from == ind
                && roles.entails(s, &r)
                && oracle.membership(abox, &Query::iq(filler.clone(), to.clone()))?
            {
                next = Some(to.clone());
                break;
            }
        }
        if let Some(b) = next {
            (c, ind) = (filler, b);
            continue;
        }
        let mut singles: Vec<(Name, Name)> =
            abox.concept_assertions().map(|(a, x)| (a.clone(), x.clone())).collect();
        singles.sort_by_key(|(_, x)| *x != ind);
        for (a, x) in singles {
            let single = ABox::from_assertions([Assertion::concept(a.clone(), x.clone())]);
            if oracle.membership(&single, &Query::iq(d.clone(), x))?
                && !reasoner::entails_ci(h, &Concept::Name(a.clone()), &d)
            {
                return Ok(Reduced::Ci(a, d));
            }
        }
        return Err(Error::Contract(format!("no singleton ABox entails {d}")));
    }
    Err(Error::Contract("counterexample reduction did not shrink".into()))
}

fn canon(t: &ConceptTree) -> ConceptTree {
    ConceptTree::of_concept(&t.concept_at(0))
}

/// Adds names to node labels while the example stays positive.
pub fn concept_saturate(oracle: &mut dyn Oracle, lhs: &Name, t: &ConceptTree, sig: &Signature) -> Result<(ConceptTree, bool)> {
    let mut t = t.clone();
    let mut changed = false;
    for v in t.bfs() {
        for b in &sig.concepts {
            if t.labels[v].contains(b) {
                continue;
            }
            let mut cand = t.clone();
            cand.labels[v].insert(b.clone());
            if positive(oracle, lhs, &cand.concept_at(0))? {
                t = cand;
                changed = true;
            }
        }
    }
    Ok((canon(&t), changed))
}

/// Replaces edge roles by strictly smaller ones while the example stays positive.
pub fn role_saturate(oracle: &mut dyn Oracle, lhs: &Name, t: &ConceptTree, roles: &Roles) -> Result<(ConceptTree, bool)> {
    let mut t = t.clone();
    let mut changed = false;
    for v in t.bfs() {
        for i in 0..t.children[v].len() {
            'edge: loop {
                let r = t.children[v][i].0.clone();
                for s in roles.below(&r) {
                    let mut cand = t.clone();
                    cand.children[v][i].0 = s;
                    if positive(oracle, lhs, &cand.concept_at(0))? {
                        t = cand;
                        changed = true;
                        continue 'edge;
                    }
                }
                break;
            }
        }
    }
    Ok((canon(&t), changed))
}

fn merge_siblings(t: &ConceptTree, v: usize, i: usize, j: usize) -> ConceptTree {
    let mut out = t.clone();
    let (_, w1) = out.children[v][i].clone();
    let (_, w2) = out.children[v].remove(j);
    let extra_labels = out.labels[w2].clone();
    let extra_children = out.children[w2].clone();
    out.labels[w1].extend(extra_labels);
    out.children[w1].extend(extra_children);
    canon(&out)
}

/// Merges pairs of same-role successors while the example stays positive.
pub fn sibling_merge(oracle: &mut dyn Oracle, lhs: &Name, t: &ConceptTree) -> Result<(ConceptTree, bool)> {
    let mut t = t.clone();
    let mut changed = false;
    'restart: loop {
        for v in t.bfs() {
            let kids = &t.children[v];
            for i in 0..kids.len() {
                for j in i + 1..kids.len() {
                    if kids[i].0 != kids[j].0 {
                        continue;
                    }
                    let cand = merge_siblings(&t, v, i, j);
                    if positive(oracle, lhs, &cand.concept_at(0))? {
                        t = cand;
                        changed = true;
                        continue 'restart;
                    }
                }
            }
        }
        return Ok((t, changed));
    }
}

/// Outcome of one decomposition step.
#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition {
    /// A CI with a different name on the left that `h` does not yet entail.
    Split(Name, Concept),
    /// A subtree `h` already derives from its parent's label, removed.
    Pruned(ConceptTree),
    Done,
}

/// Looks for one decomposition on the right.
pub fn decompose_right(
    oracle: &mut dyn Oracle,
    lhs: &Name,
    t: &ConceptTree,
    h: &TBox,
) -> Result<Decomposition> {
    let lhs_c = Concept::Name(lhs.clone());
    for v in t.bfs() {
        for (i, (r, w)) in t.children[v].iter().enumerate() {
            let d = Concept::exists(r.clone(), t.concept_at(*w));
            for a2 in &t.labels[v] {
                let a2_c = Concept::Name(a2.clone());
                if v == 0 && reasoner::entails_ci(h, &lhs_c, &a2_c) && reasoner::entails_ci(h, &a2_c, &lhs_c) {
                    continue;
                }
                if !positive(oracle, a2, &d)? {
                    continue;
                }
                if !reasoner::entails_ci(h, &a2_c, &d) {
                    return Ok(Decomposition::Split(a2.clone(), d));
                }
                let mut out = t.clone();
                out.children[v].remove(i);
                return Ok(Decomposition::Pruned(canon(&out)));
            }
        }
    }
    Ok(Decomposition::Done)
}

/// Applies concept saturation, role saturation, sibling merging and (optionally)
/// decomposition on the right until none applies.
pub fn essentialize(
    oracle: &mut dyn Oracle,
    lhs: &Name,
    c: &Concept,
    h: &TBox,
    roles: &Roles,
    decompose: bool,
    limits: &Limits,
) -> Result<(Name, Concept)> {
    let sig = oracle.signature().clone();
    let mut lhs = lhs.clone();
    let mut t = ConceptTree::of_concept(&c.rename_roles(roles.renaming()));
    for _ in 0..limits.max_inner_steps {
        let (t1, c1) = concept_saturate(oracle, &lhs, &t, &sig)?;
        let (t2, c2) = role_saturate(oracle, &lhs, &t1, roles)?;
        let (t3, c3) = sibling_merge(oracle, &lhs, &t2)?;
        t = t3;
        if decompose {
            match decompose_right(oracle, &lhs, &t, h)? {
                Decomposition::Split(a2, d) => {
                    lhs = a2;
                    t = ConceptTree::of_concept(&d);
                    continue;
                }
                Decomposition::Pruned(t4) => {
                    t = t4;
                    continue;
                }
                Decomposition::Done => {}
            }
        }
        if !(c1 || c2 || c3) {
            return Ok((lhs, t.concept_at(0)));
        }
    }
    Err(Error::Budget("essentialization did not reach a fixpoint".into()))
}

/// Combines two essential right-hand sides for `a` into one below both.
/// Also returns CIs for other names split off along the way.
#[allow(clippy::too_many_arguments)]
pub fn merge_essential(
    oracle: &mut dyn Oracle,
    a: &Name,
    c1: &Concept,
    c2: &Concept,
    h: &TBox,
    roles: &Roles,
    limits: &Limits,
) -> Result<(Concept, Vec<(Name, Concept)>)> {
    let both = Concept::and([c1.clone(), c2.clone()]);
    let empty = TBox::new();
    let (lhs, full) = essentialize(oracle, a, &both, h, roles, true, limits)?;
    if lhs == *a && reasoner::entails_ci(&empty, &full, &both) {
        return Ok((full, Vec::new()));
    }
    let (_, lite) = essentialize(oracle, a, &both, h, roles, false, limits)?;
    let extras = if lhs != *a { vec![(lhs, full)] } else { Vec::new() };
    Ok((lite, extras))
}

/// Counterexample preprocessing: turns whatever the teacher returned into an IQ.
pub type Convert<'c> = dyn FnMut(&mut dyn Oracle, &TBox, Query) -> Result<Query> + 'c;

/// Learns a hypothesis that is IQ-inseparable from the target over the fixed ABox.
pub fn learn(oracle: &mut dyn Oracle, opts: &IqOptions) -> Result<Run> {
    if oracle.lang() != Lang::Iq {
        return Err(Error::Config(format!("IQ learner needs an IQ teacher, got {}", oracle.lang())));
    }
    learn_with(oracle, opts, &mut |_, _, q| Ok(q))
}

/// The IQ loop with a custom counterexample conversion.
pub fn learn_with(oracle: &mut dyn Oracle, opts: &IqOptions, convert: &mut Convert<'_>) -> Result<Run> {
    let aq_run = aq::learn(oracle, &aq::AqOptions { mq_only: true, limits: opts.limits })?;
    refine(oracle, opts, aq_run, convert)
}

/// The counterexample loop on top of an AQ-inseparable `base`; counterexamples may come from any ABox.
pub fn refine(
    oracle: &mut dyn Oracle,
    opts: &IqOptions,
    prior: Run,
    convert: &mut Convert<'_>,
) -> Result<Run> {
    let Run { hypothesis: base, mut iterations, mut evidence, .. } = prior;
    let mut hyp = Hypothesis { base, defs: BTreeMap::new() };
    let roles = Roles::new(&hyp.base, oracle.signature());
    let empty = TBox::new();
    loop {
        if iterations.len() > opts.limits.max_iterations {
            return Err(Error::Budget("IQ learner exceeded its iteration limit".into()));
        }
        let h = hyp.tbox();
        let Some(ex) = oracle.equivalence(&h)? else { break };
        let mut it = Iteration { index: iterations.len(), counterexample: Some(describe(&ex.query)), ..Default::default() };
        evidence.push(Evidence::Counterexample { abox: ex.abox.clone(), query: ex.query.clone() });
        let q = if matches!(ex.query, Query::Cq(_)) {
            it.conversions += 1;
            convert(oracle, &h, ex.query)?
        } else {
            ex.query
        };
        let q = q.as_iq();
        let Query::Iq { concept, ind } = q else {
            return Err(Error::Contract(format!("unexpected counterexample {q} after the AQ phase")));
        };
        let concept = concept.rename_roles(roles.renaming());
        let sat = ex.abox.union(&saturate_aq(&h, &ex.abox));
        let reduced = match concept {
            Concept::Name(b) => Reduced::Atomic(b, ind),
            _ => reduce_counterexample(oracle, &sat, &concept, &ind, &h)?,
        };
        let (lhs, d) = match reduced {
            Reduced::Ci(lhs, d) => (lhs, d),
            Reduced::Atomic(..) => {
                // Only reachable when the teacher also checks ABoxes other than the fixed one.
                let (ci, shaped) = aq::shaped_ci(oracle, &ex.abox, &h, &opts.limits)?;
                let name = ci.rhs.as_name().expect("concept name").clone();
                let origin = shaped.abox.ind().iter().map(|x| (x.clone(), shaped.clones.origin(x).clone())).collect();
                evidence.push(Evidence::TreeShape { abox: shaped.abox, root: shaped.root, name, origin });
                it.minimized_individuals = shaped.sizes;
                it.added.push(ci_text(&ci));
                hyp.base.add_ci(ci);
                it.hypothesis_size = hyp.tbox().size();
                it.counters = oracle.counters();
                iterations.push(it);
                continue;
            }
        };
        let mut pending = vec![essentialize(oracle, &lhs, &d, &h, &roles, true, &opts.limits)?];
        let mut steps = 0;
        while let Some((a, d)) = pending.pop() {
            steps += 1;
            if steps > opts.limits.max_inner_steps {
                return Err(Error::Budget("too many split-off CIs".into()));
            }
            let h = hyp.tbox();
            if reasoner::entails_ci(&h, &Concept::Name(a.clone()), &d) {
                continue;
            }
            it.essential_sizes.push(d.size());
            let new = match hyp.defs.get(&a) {
                Some(old) => {
                    let (merged, extras) = merge_essential(oracle, &a, &d, old, &h, &roles, &opts.limits)?;
                    let before = ConceptTree::of_concept(old).len();
                    let after = ConceptTree::of_concept(&merged).len();
                    it.replacements.push((before, after));
                    debug_assert!(reasoner::entails_ci(&empty, &merged, old));
                    pending.extend(extras);
                    merged
                }
                None => d,
            };
            it.added.push(ci_text(&Ci::new(Concept::Name(a.clone()), new.clone())));
            evidence.push(Evidence::Definition { name: a.clone(), concept: new.clone() });
            hyp.defs.insert(a, new);
        }
        it.hypothesis_size = hyp.tbox().size();
        it.counters = oracle.counters();
        iterations.push(it);
    }
    Ok(Run { hypothesis: hyp.tbox(), iterations, counters: oracle.counters(), evidence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::inseparable;
    use crate::syntax::{parse_abox, parse_concept, parse_tbox};
    use crate::teacher::{Policy, Session};

    fn session(t: &str, a: &str) -> Session {
        Session::new(parse_tbox(t).unwrap(), parse_abox(a).unwrap(), Lang::Iq, Policy::MinimalDeterministic).unwrap()
    }

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    #[test]
    fn reduce_walks_to_the_singleton() {
        let mut s = session("CI: A [= some r.D", "A: r(a,b)\nA: A(b)");
        let a = parse_abox("A: r(a,b)\nA: A(b)").unwrap();
        let Reduced::Ci(lhs, d) = reduce_counterexample(&mut s, &a, &c("some r.some r.D"), &"a".into(), &TBox::new()).unwrap() else { panic!() };
        assert_eq!((lhs.as_str(), d), ("A", c("some r.D")));
    }

    #[test]
    fn reduce_without_recursion() {
        let mut s = session("CI: A [= some r.top", "A: A(a)");
        let a = parse_abox("A: A(a)").unwrap();
        let Reduced::Ci(lhs, d) = reduce_counterexample(&mut s, &a, &c("some r.top"), &"a".into(), &TBox::new()).unwrap() else { panic!() };
        assert_eq!((lhs.as_str(), d), ("A", c("some r.top")));
    }

    #[test]
    fn reduce_rejects_non_counterexample() {
        let mut s = session("CI: A [= some r.top", "A: A(a)");
        let a = parse_abox("A: A(a)").unwrap();
        let r = reduce_counterexample(&mut s, &a, &c("some r.A"), &"a".into(), &TBox::new());
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn saturation_example() {
        let t = "CI: B [= A\nCI: A [= some s.B\nRI: s [= r";
        let mut s = session(t, "A: A(a)");
        let h = parse_tbox("CI: B [= A\nRI: s [= r").unwrap();
        let roles = Roles::new(&h, s.signature());
        let sig = s.signature().clone();
        let a: Name = "A".into();
        let tree = ConceptTree::of_concept(&c("some r.A"));
        let (t1, changed) = concept_saturate(&mut s, &a, &tree, &sig).unwrap();
        assert!(changed);
        assert_eq!(t1.concept_at(0), c("A and some r.(A and B)"));
        let (t2, _) = role_saturate(&mut s, &a, &t1, &roles).unwrap();
        assert_eq!(t2.concept_at(0), c("A and some s.(A and B)"));
        let (t3, again) = concept_saturate(&mut s, &a, &t2, &sig).unwrap();
        assert!(!again);
        assert_eq!(t3, t2);
    }

    #[test]
    fn merge_of_equal_inputs() {
        let t = "CI: A [= some r.B";
        let mut s = session(t, "A: A(a)");
        let roles = Roles::new(&TBox::new(), s.signature());
        let x = c("A and some r.B");
        let (m, extras) = merge_essential(&mut s, &"A".into(), &x, &x, &TBox::new(), &roles, &Limits::default()).unwrap();
        assert!(extras.is_empty());
        assert!(reasoner::entails_ci(&TBox::new(), &m, &x) && reasoner::entails_ci(&TBox::new(), &x, &m));
    }

    #[test]
    fn merge_combines_successors() {
        let t = "CI: A [= some r.(B and C)";
        let mut s = session(t, "A: A(a)");
        let roles = Roles::new(&TBox::new(), s.signature());
        let (m, _) = merge_essential(
            &mut s,
            &"A".into(),
            &c("A and some r.B"),
            &c("A and some r.C"),
            &TBox::new(),
            &roles,
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(m, c("A and some r.(B and C)"));
    }

    fn check(t: &str, a0: &str) -> Run {
        let mut s = session(t, a0);
        let run = learn(&mut s, &IqOptions::default()).unwrap();
        let target = parse_tbox(t).unwrap();
        assert!(inseparable(&target, &run.hypothesis, &parse_abox(a0).unwrap(), Lang::Iq).is_yes(), "{}", run.hypothesis);
        run
    }

    #[test]
    fn learns_existential_rhs() {
        check("CI: A [= some r.B", "A: A(a)");
    }

    #[test]
    fn learns_example_one() {
        check("CI: some r.some s.B [= A\nCI: B [= some s.B", "A: r(a,b)\nA: B(b)");
    }

    #[test]
    fn learns_with_role_hierarchy_and_merges() {
        let run = check(
            "CI: A [= some r.(B and some s.C) and some t.C\nCI: B [= some s.C\nRI: s [= r\nRI: r [= u",
            "A: A(a)\nA: B(b)\nA: r(a,b)",
        );
        for it in &run.iterations {
            for (before, after) in &it.replacements {
                assert!(after > before);
            }
        }
    }

    #[test]
    fn empty_target() {
        let run = check("", "A: A(a)");
        assert!(run.hypothesis.is_empty());
    }
}
