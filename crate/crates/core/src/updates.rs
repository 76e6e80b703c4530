//! Robustness of learned hypotheses under data updates: bisimulation-based
//! preservation, left-hand-side generalisation, linear derivations and the
//! closure `g_T(A0)` of the fixed ABox.

use crate::error::{Error, Result};
use crate::learner::iq::{self, IqOptions};
use crate::learner::{aq, Run};
use crate::reasoner::{self, greatest_bisimulation, Lang, Model, RoleHierarchy};
use crate::syntax::{abox_of_concept, ABox, Assertion, Ci, Concept, ConceptTree, Name, Query, Signature, TBox};
use crate::teacher::Oracle;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preservation {
    /// Every individual of the new ABox is bisimilar to one of the fixed ABox.
    Preserved,
    NotApplicable,
}

/// Decides whether IQ-inseparability of `h` and `t` over `a0` carries over to `a`
/// by the bisimulation criterion.
pub fn check_bisim_preservation(t: &TBox, h: &TBox, a0: &ABox, a: &ABox) -> Result<Preservation> {
    let roles: BTreeSet<Name> = t.signature().roles.union(&h.signature().roles).cloned().collect();
    let (rt, rh) = (RoleHierarchy::of(t), RoleHierarchy::of(h));
    for r in &roles {
        for s in &roles {
            if rt.entails(r, s) != rh.entails(r, s) {
                return Err(Error::Contract(format!("the TBoxes disagree on {r} ⊑ {s}")));
            }
        }
    }
    if !reasoner::inseparable(t, h, a0, Lang::Iq).is_yes() {
        return Err(Error::Contract("hypothesis is not IQ-inseparable over the fixed ABox".into()));
    }
    let (m0, m) = (Model::of_abox(a0), Model::of_abox(a));
    let z = greatest_bisimulation(&m, &m0);
    let inds0: Vec<usize> = m0.individual_nodes().map(|(_, v)| v).collect();
    let all = m.individual_nodes().all(|(_, v)| inds0.iter().any(|w| z[v][*w]));
    Ok(if all { Preservation::Preserved } else { Preservation::NotApplicable })
}

/// `t ⊨ x ⊑ y` and every concept name above `x` is below `y`.
pub fn linear_concept_derivation(t: &TBox, x: &Name, y: &Name) -> bool {
    let entails = |a: &Name, b: &Name| reasoner::entails_ci(t, &Concept::Name(a.clone()), &Concept::Name(b.clone()));
    if !entails(x, y) {
        return false;
    }
    let mut names = t.signature().concepts;
    names.insert(x.clone());
    names.insert(y.clone());
    names.iter().filter(|z| entails(x, z)).all(|z| entails(z, y))
}

/// `t ⊨ r ⊑ s` and every role above `r` is below `s`.
pub fn linear_role_derivation(t: &TBox, r: &Name, s: &Name) -> bool {
    let h = RoleHierarchy::of(t);
    h.entails(r, s) && h.supers(r).iter().all(|z| h.entails(z, s))
}

/// Assertions reachable from `alpha` by one replacement step, in name order.
fn successors(t: &TBox, sig: &Signature, alpha: &Assertion) -> Vec<Assertion> {
    match alpha {
        Assertion::Concept { concept, ind } => sig
            .concepts
            .iter()
            .filter(|b| *b != concept && linear_concept_derivation(t, concept, b))
            .map(|b| Assertion::concept(b.clone(), ind.clone()))
            .collect(),
        Assertion::Role { role, from, to } => sig
            .roles
            .iter()
            .filter(|s| *s != role && linear_role_derivation(t, role, s))
            .map(|s| Assertion::role(s.clone(), from.clone(), to.clone()))
            .collect(),
    }
}

/// Whether `a ∈ g_T(a0)`.
///
/// Linear derivations compose, so every assertion of `a0` ends up either unchanged
/// or one linear step away; `a` is a member iff such a choice per assertion covers
/// `a` exactly. Coverage is a bipartite matching from `a` into `a0`.
pub fn in_generalised_closure(t: &TBox, a0: &ABox, a: &ABox) -> bool {
    if a0.ind() != a.ind() {
        return false;
    }
    let sig = t.signature();
    let src: Vec<&Assertion> = a0.assertions().collect();
    let dst: Vec<&Assertion> = a.assertions().collect();
    let index: BTreeMap<&Assertion, usize> = dst.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    // edges[i] lists the positions in `dst` that source assertion i may become.
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(src.len());
    for alpha in &src {
        let mut out: Vec<usize> = index.get(alpha).copied().into_iter().collect();
        out.extend(successors(t, &sig, alpha).iter().filter_map(|b| index.get(b).copied()));
        if out.is_empty() {
            return false;
        }
        edges.push(out);
    }
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); dst.len()];
    for (i, es) in edges.iter().enumerate() {
        for j in es {
            rev[*j].push(i);
        }
    }
    // Match every target assertion to a distinct source (Kuhn's augmenting paths);
    // unmatched sources then pick any of their edges.
    fn augment(j: usize, rev: &[Vec<usize>], target_of: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &i in &rev[j] {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            let free = match target_of[i] {
                None => true,
                Some(k) => augment(k, rev, target_of, seen),
            };
            if free {
                target_of[i] = Some(j);
                return true;
            }
        }
        false
    }
    let mut target_of: Vec<Option<usize>> = vec![None; src.len()];
    (0..dst.len()).all(|j| augment(j, &rev, &mut target_of, &mut vec![false; src.len()]))
}

/// Breadth-first enumeration of `g_T(a0)`, starting with `a0`, stopping after `cap` ABoxes.
pub fn enumerate_closure(t: &TBox, a0: &ABox, cap: usize) -> Vec<ABox> {
    let sig = t.signature();
    let mut seen: BTreeSet<Vec<Assertion>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([a0.clone()]);
    seen.insert(a0.assertions().cloned().collect());
    while let Some(a) = queue.pop_front() {
        if out.len() >= cap {
            break;
        }
        for alpha in a.assertions() {
            for beta in successors(t, &sig, alpha) {
                let mut next = a.clone();
                next.remove(alpha);
                next.insert(beta);
                if seen.insert(next.assertions().cloned().collect()) {
                    queue.push_back(next);
                }
            }
        }
        out.push(a);
    }
    out
}

/// A generalised TBox and the number of successful rewrite steps.
#[derive(Clone, Debug)]
pub struct Generalised {
    pub tbox: TBox,
    pub steps: usize,
}

/// Membership-query helper with memoized name and role subsumptions.
struct Subsumptions<'o> {
    oracle: &'o mut dyn Oracle,
    names: BTreeMap<(Name, Name), bool>,
    roles: BTreeMap<(Name, Name), bool>,
}

impl Subsumptions<'_> {
    fn concept(&mut self, a: &Name, b: &Name) -> Result<bool> {
        if let Some(x) = self.names.get(&(a.clone(), b.clone())) {
            return Ok(*x);
        }
        let x = a == b || {
            let abox = ABox::from_assertions([Assertion::concept(a.clone(), "a")]);
            self.oracle.membership(&abox, &Query::Aq(Assertion::concept(b.clone(), "a")))?
        };
        self.names.insert((a.clone(), b.clone()), x);
        Ok(x)
    }

    fn role(&mut self, r: &Name, s: &Name) -> Result<bool> {
        if let Some(x) = self.roles.get(&(r.clone(), s.clone())) {
            return Ok(*x);
        }
        let x = r == s || {
            let abox = ABox::from_assertions([Assertion::role(r.clone(), "a", "b")]);
            self.oracle.membership(&abox, &Query::IqRole { role: s.clone(), from: "a".into(), to: "b".into() })?
        };
        self.roles.insert((r.clone(), s.clone()), x);
        Ok(x)
    }

    /// `T ⊨ c ⊑ a`, asked on the tree ABox of `c`.
    fn below(&mut self, c: &Concept, a: &Name) -> Result<bool> {
        let (abox, root) = abox_of_concept(c);
        self.oracle.membership(&abox, &Query::Aq(Assertion::concept(a.clone(), root)))
    }
}

/// One generalisation step on the tree of a left-hand side, if any applies.
/// Concept names are tried before roles, nodes in breadth-first order.
fn generalise_once(
    sub: &mut Subsumptions<'_>,
    sig: &Signature,
    tree: &ConceptTree,
    rhs: &Name,
    keep: &mut dyn FnMut(&Concept) -> bool,
) -> Result<Option<ConceptTree>> {
    let order = tree.bfs();
    for &v in &order {
        for b in tree.labels[v].clone() {
            let mut cands: Vec<Option<Name>> = vec![None];
            for c in &sig.concepts {
                if *c != b && sub.concept(&b, c)? && !sub.concept(c, &b)? {
                    cands.push(Some(c.clone()));
                }
            }
            for cand in cands {
                let mut next = tree.clone();
                next.labels[v].remove(&b);
                if let Some(c) = cand {
                    next.labels[v].insert(c);
                }
                // `C' ⊑ A` with `A` a root conjunct of `C'` says nothing.
                if next.labels[0].contains(rhs) {
                    continue;
                }
                let c = next.concept_at(0);
                if sub.below(&c, rhs)? && keep(&c) {
                    return Ok(Some(next));
                }
            }
        }
    }
    for &v in &order {
        for (i, (r, _)) in tree.children[v].clone().iter().enumerate() {
            for s in &sig.roles {
                if s != r && sub.role(r, s)? && !sub.role(s, r)? {
                    let mut next = tree.clone();
                    next.children[v][i].0 = s.clone();
                    let c = next.concept_at(0);
                    if sub.below(&c, rhs)? && keep(&c) {
                        return Ok(Some(next));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustively generalises every CI `C ⊑ A` of `h` whose left side is not a
/// concept name; other CIs and RIs are kept. A rewrite is only taken if `h` keeps
/// every assertion it entailed over the fixed ABox.
pub fn generalise(oracle: &mut dyn Oracle, h: &TBox) -> Result<Generalised> {
    let sig = oracle.signature().clone();
    let a0 = oracle.fixed_abox().clone();
    let baseline = iq::saturate_aq(h, &a0);
    let mut cis: Vec<Ci> = h.cis().to_vec();
    let ris = h.ris().to_vec();
    let mut sub = Subsumptions { oracle, names: BTreeMap::new(), roles: BTreeMap::new() };
    let mut steps = 0;
    for i in 0..cis.len() {
        let Some(a) = cis[i].rhs.as_name().cloned() else { continue };
        if cis[i].lhs.is_name() {
            continue;
        }
        let mut tree = ConceptTree::of_concept(&cis[i].lhs);
        loop {
            let mut keep = |c: &Concept| {
                let mut trial = cis.clone();
                trial[i] = Ci::new(c.clone(), Concept::Name(a.clone()));
                let t = TBox::from_parts(trial, ris.iter().cloned());
                let sat = iq::saturate_aq(&t, &a0);
                baseline.assertions().all(|x| sat.contains(x))
            };
            let Some(next) = generalise_once(&mut sub, &sig, &tree, &a, &mut keep)? else { break };
            tree = next;
            steps += 1;
            cis[i] = Ci::new(tree.concept_at(0), Concept::Name(a.clone()));
        }
    }
    Ok(Generalised { tbox: TBox::from_parts(cis, ris), steps })
}

/// AQ phase by membership queries, generalisation, then the IQ loop; the
/// teacher may return counterexamples over any ABox of `g_T(A0)` it holds.
pub fn learn_with_updates(oracle: &mut dyn Oracle, opts: &IqOptions) -> Result<Run> {
    if oracle.lang() != Lang::Iq {
        return Err(Error::Config(format!("update learner needs an IQ teacher, got {}", oracle.lang())));
    }
    if !oracle.signature().is_subset(&oracle.fixed_abox().signature()) {
        return Err(Error::Config("the target uses names that do not occur in the fixed ABox".into()));
    }
    let aq_run = aq::learn(oracle, &aq::AqOptions { mq_only: true, limits: opts.limits })?;
    let g = generalise(oracle, &aq_run.hypothesis)?;
    log::debug!("generalisation took {} steps", g.steps);
    let prior = Run { hypothesis: g.tbox, ..aq_run };
    iq::refine(oracle, opts, prior, &mut |_, _, q| Ok(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner::inseparable;
    use crate::syntax::{parse_abox, parse_tbox};
    use crate::teacher::{Policy, Session};

    fn t(s: &str) -> TBox {
        parse_tbox(s).unwrap()
    }

    fn a(s: &str) -> ABox {
        parse_abox(s).unwrap()
    }

    const LOSSY_T: &str = "CI: some r.A1 [= B";
    const LOSSY_A0: &str = "A: r(a,b)\nA: A1(b)\nA: A2(b)";

    #[test]
    fn bisimulation_criterion() {
        let (tt, a0) = (t(LOSSY_T), a(LOSSY_A0));
        let h = t("CI: some r.(A1 and A2) [= B");
        assert_eq!(check_bisim_preservation(&tt, &h, &a0, &a0).unwrap(), Preservation::Preserved);
        let upd = a(&format!("{LOSSY_A0}\nA: r(a2,b2)\nA: A1(b2)"));
        assert_eq!(check_bisim_preservation(&tt, &h, &a0, &upd).unwrap(), Preservation::NotApplicable);
        assert!(!inseparable(&tt, &h, &upd, Lang::Iq).is_yes());
        let copy = a(&format!("{LOSSY_A0}\nA: r(c,d)\nA: A1(d)\nA: A2(d)"));
        assert_eq!(check_bisim_preservation(&tt, &h, &a0, &copy).unwrap(), Preservation::Preserved);
        assert!(inseparable(&tt, &h, &copy, Lang::Iq).is_yes());
    }

    #[test]
    fn bisimulation_precondition() {
        let r = check_bisim_preservation(&t(LOSSY_T), &TBox::new(), &a(LOSSY_A0), &a(LOSSY_A0));
        assert!(matches!(r, Err(Error::Contract(_))));
        let r = check_bisim_preservation(&t("RI: r [= s"), &TBox::new(), &a("A: A(a)"), &a("A: A(a)"));
        assert!(matches!(r, Err(Error::Contract(_))));
    }

    #[test]
    fn generalise_drops_the_extra_name() {
        let mut s = Session::new(t(LOSSY_T), a(LOSSY_A0), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        let g = generalise(&mut s, &t("CI: some r.(A1 and A2) [= B")).unwrap();
        assert_eq!(g.tbox, t(LOSSY_T));
        assert_eq!(g.steps, 1);
        let g = generalise(&mut s, &t(LOSSY_T)).unwrap();
        assert_eq!((g.tbox, g.steps), (t(LOSSY_T), 0));
    }

    #[test]
    fn generalise_uses_superroles_and_supernames() {
        let target = t("RI: r [= s\nCI: some s.C [= B\nCI: A [= C");
        let mut s = Session::new(target, a("A: r(a,b)\nA: A(b)"), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        let g = generalise(&mut s, &t("RI: r [= s\nCI: A [= C\nCI: some r.A [= B")).unwrap();
        assert_eq!(g.tbox, t("RI: r [= s\nCI: A [= C\nCI: some s.C [= B"));
    }

    #[test]
    fn linear_derivations() {
        let tb = t("CI: A [= B");
        assert!(linear_concept_derivation(&tb, &"A".into(), &"B".into()));
        assert!(!linear_concept_derivation(&tb, &"A".into(), &"A".into()));
        assert!(linear_concept_derivation(&tb, &"B".into(), &"B".into()));
        let tb = t("CI: A [= B and C");
        assert!(!linear_concept_derivation(&tb, &"A".into(), &"B".into()));
        let tb = t("RI: r [= s\nRI: s [= u");
        assert!(linear_role_derivation(&tb, &"r".into(), &"u".into()));
        assert!(!linear_role_derivation(&tb, &"r".into(), &"s".into()));
        let tb = t("RI: r [= s\nRI: r [= u");
        assert!(!linear_role_derivation(&tb, &"r".into(), &"s".into()));
    }

    #[test]
    fn closure_membership() {
        let tb = t("CI: A [= B");
        let a0 = a("A: A(a)\nA: r(a,b)");
        assert!(in_generalised_closure(&tb, &a0, &a0));
        assert!(in_generalised_closure(&tb, &a0, &a("A: B(a)\nA: r(a,b)")));
        assert!(!in_generalised_closure(&tb, &a0, &a("A: A(a)\nA: B(a)\nA: r(a,b)")));
        assert!(!in_generalised_closure(&tb, &a0, &a("A: A(a)\nA: r(a,b)\nA: A(c)")));
        // Two assertions may collapse into one.
        let a0 = a("A: A(a)\nA: B(a)");
        assert!(in_generalised_closure(&tb, &a0, &a("A: B(a)")));
        assert_eq!(enumerate_closure(&tb, &a0, 10).len(), 2);
    }

    #[test]
    fn closure_members_are_members() {
        let tb = t("CI: A [= B\nCI: B [= C\nRI: r [= s");
        let a0 = a("A: A(a)\nA: B(b)\nA: r(a,b)");
        let all = enumerate_closure(&tb, &a0, 100);
        assert!(all.len() > 4);
        for x in &all {
            assert!(in_generalised_closure(&tb, &a0, x), "{x}");
        }
    }

    #[test]
    fn lossy_target_learned_with_updates() {
        let tb = t(LOSSY_T);
        let a0 = a(&format!("{LOSSY_A0}\nA: B(c)"));
        let mut s = Session::new(tb.clone(), a0.clone(), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        let run = learn_with_updates(&mut s, &IqOptions::default()).unwrap();
        let upd = a(&format!("{a0}\nA: r(a2,b2)\nA: A1(b2)"));
        assert!(inseparable(&tb, &run.hypothesis, &upd, Lang::Iq).is_yes(), "{}", run.hypothesis);
    }

    #[test]
    fn chain_learned_over_the_closure() {
        let tb = t("CI: A [= B\nCI: some r.B [= D");
        let a0 = a("A: A(a)\nA: r(b,a)\nA: B(b)\nA: D(c)");
        let members = enumerate_closure(&tb, &a0, 50);
        let mut s = Session::new(tb.clone(), a0.clone(), Lang::Iq, Policy::MinimalDeterministic)
            .unwrap()
            .with_extra_aboxes(members.clone());
        let run = learn_with_updates(&mut s, &IqOptions::default()).unwrap();
        for m in &members {
            assert!(inseparable(&tb, &run.hypothesis, m, Lang::Iq).is_yes(), "{m}\n{}", run.hypothesis);
        }
    }

    #[test]
    fn signature_precondition() {
        let mut s = Session::new(t("CI: A [= B"), a("A: A(a)"), Lang::Iq, Policy::MinimalDeterministic).unwrap();
        assert!(matches!(learn_with_updates(&mut s, &IqOptions::default()), Err(Error::Config(_))));
    }
}
