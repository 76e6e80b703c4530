//! Entailment, canonical models, query answering, (bi)simulations and inseparability.

mod cq;
mod insep;
mod model;
mod simulation;

pub use cq::answers_cq;
pub use insep::{find_separator, inseparable, Inseparability, Lang, Separator};
pub use model::{Model, NodeKind, RoleHierarchy};
pub use simulation::{
    bisimilar, greatest_bisimulation, simulation, Chooser, FirstChoice, RandomChoice, SimulationTable,
};

use crate::error::Result;
use crate::syntax::{abox_of_concept, ABox, Assertion, Concept, Name, Query, TBox};
use std::collections::BTreeMap;

/// Canonical model of an ABox with no TBox.
pub fn canonical_abox_model(a: &ABox) -> Model {
    Model::of_abox(a)
}

pub fn entails_ri(t: &TBox, r: &Name, s: &Name) -> bool {
    RoleHierarchy::of(t).entails(r, s)
}

/// `t ⊨ c ⊑ d`.
pub fn entails_ci(t: &TBox, c: &Concept, d: &Concept) -> bool {
    let (a, root) = abox_of_concept(c);
    let m = Model::build(t, &a);
    m.holds_at(m.node_of(&root).expect("root declared"), d)
}

/// Whether `(t, a)` entails `q`.
pub fn answers(t: &TBox, a: &ABox, q: &Query) -> Result<bool> {
    answers_in(&Model::build(t, a), q)
}

/// Answers `q` in an already built model.
pub fn answers_in(m: &Model, q: &Query) -> Result<bool> {
    Ok(match q {
        Query::Aq(Assertion::Concept { concept, ind }) => {
            m.node_of(ind).is_some_and(|v| m.labels[v].contains(concept))
        }
        Query::Aq(Assertion::Role { role, from, to }) | Query::IqRole { role, from, to } => {
            match (m.node_of(from), m.node_of(to)) {
                (Some(x), Some(y)) => m.roles_between(x, y).contains(role),
                _ => false,
            }
        }
        Query::Iq { concept, ind } => m.node_of(ind).is_some_and(|v| m.holds_at(v, concept)),
        Query::Cq(q) => answers_cq(m, q)?,
    })
}

/// An assertion-preserving map from `src` to `dst`, found by backtracking in
/// name order.
pub fn abox_homomorphism(src: &ABox, dst: &ABox) -> Option<BTreeMap<Name, Name>> {
    let order: Vec<Name> = src.ind().iter().cloned().collect();
    let targets: Vec<Name> = dst.ind().iter().cloned().collect();
    let mut map = BTreeMap::new();
    fn consistent(src: &ABox, dst: &ABox, map: &BTreeMap<Name, Name>, x: &Name) -> bool {
        src.assertions().filter(|a| a.terms().contains(&x)).all(|a| {
            if !a.terms().iter().all(|t| map.contains_key(*t)) {
                return true;
            }
            let img = match a {
                Assertion::Concept { concept, ind } => Assertion::concept(concept.clone(), map[ind].clone()),
                Assertion::Role { role, from, to } => {
                    Assertion::role(role.clone(), map[from].clone(), map[to].clone())
                }
            };
            dst.contains(&img)
        })
    }
    fn go(
        k: usize,
        order: &[Name],
        targets: &[Name],
        src: &ABox,
        dst: &ABox,
        map: &mut BTreeMap<Name, Name>,
    ) -> bool {
        let Some(x) = order.get(k) else { return true };
        for t in targets {
            map.insert(x.clone(), t.clone());
            if consistent(src, dst, map, x) && go(k + 1, order, targets, src, dst, map) {
                return true;
            }
            map.remove(x);
        }
        false
    }
    go(0, &order, &targets, src, dst, &mut map).then_some(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_abox, parse_concept, parse_query, parse_tbox};

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    #[test]
    fn ci_entailment_examples() {
        assert!(entails_ci(&parse_tbox("CI: B [= A").unwrap(), &c("B"), &c("A")));
        let t = parse_tbox("CI: A [= some r.B\nCI: B [= C").unwrap();
        assert!(entails_ci(&t, &c("A"), &c("some r.C")));
        let ex1 = parse_tbox("CI: B [= some s.B\nCI: some r.some s.B [= A").unwrap();
        assert!(entails_ci(&ex1, &c("some r.B"), &c("A")));
        assert!(!entails_ci(&ex1, &c("some s.B"), &c("A")));
    }

    #[test]
    fn ri_entailment() {
        let t = parse_tbox("RI: r [= s\nRI: s [= u").unwrap();
        assert!(entails_ri(&t, &"r".into(), &"s".into()));
        assert!(entails_ri(&t, &"r".into(), &"u".into()));
        assert!(!entails_ri(&TBox::new(), &"r".into(), &"s".into()));
    }

    #[test]
    fn query_answers() {
        let ex1 = parse_tbox("CI: B [= some s.B\nCI: some r.some s.B [= A").unwrap();
        let a = parse_abox("A: r(a,b)\nA: B(b)").unwrap();
        assert!(answers(&ex1, &a, &parse_query("AQ A(a)").unwrap()).unwrap());
        let t = parse_tbox("CI: A [= some r.some s.top").unwrap();
        let a = parse_abox("A: A(a)").unwrap();
        assert!(answers(&t, &a, &parse_query("IQ some r.some s.top (a)").unwrap()).unwrap());
        assert!(!answers(&TBox::new(), &a, &parse_query("CQ ; exists x ; M(x)").unwrap()).unwrap());
    }

    #[test]
    fn homomorphisms() {
        let h = abox_homomorphism(&parse_abox("A: A(a)").unwrap(), &parse_abox("A: A(b)\nA: B(b)").unwrap());
        assert_eq!(h.unwrap()[&Name::from("a")], Name::from("b"));
        let h = abox_homomorphism(&parse_abox("A: r(a,b)").unwrap(), &parse_abox("A: r(c,c)").unwrap()).unwrap();
        assert_eq!(h[&Name::from("a")], Name::from("c"));
        assert_eq!(h[&Name::from("b")], Name::from("c"));
        assert!(abox_homomorphism(&parse_abox("A: A(a)").unwrap(), &parse_abox("A: B(b)").unwrap()).is_none());
    }

    #[test]
    fn abox_model_with_declared_individual() {
        let mut a = ABox::new();
        a.declare("a");
        let m = canonical_abox_model(&a);
        assert_eq!(m.len(), 1);
        assert!(m.labels[0].is_empty());
    }
}
