//! Conjunctive query matching over the lazily unravelled canonical model.

use super::model::Model;
use crate::error::{Error, Result};
use crate::syntax::{Assertion, Cq, Name};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Elements of the unravelling: individuals, and anonymous elements identified by
/// their parent element and model node.
struct Unravel<'m> {
    m: &'m Model,
    node: Vec<usize>,
    parent: Vec<Option<usize>>,
    child: HashMap<(usize, usize), usize>,
}

impl<'m> Unravel<'m> {
    fn new(m: &'m Model) -> Self {
        let n = m.n_named();
        Unravel { m, node: (0..n).collect(), parent: vec![None; n], child: HashMap::new() }
    }

    fn child_of(&mut self, e: usize, w: usize) -> usize {
        if let Some(&c) = self.child.get(&(e, w)) {
            return c;
        }
        let c = self.node.len();
        self.node.push(w);
        self.parent.push(Some(e));
        self.child.insert((e, w), c);
        c
    }

    fn successors(&mut self, e: usize, r: &Name) -> Vec<usize> {
        let v = self.node[e];
        let targets: Vec<usize> = self.m.edges[v]
            .iter()
            .filter(|(_, roles)| roles.contains(r))
            .map(|(w, _)| *w)
            .collect();
        targets
            .into_iter()
            .map(|w| if self.m.is_named(w) { w } else { self.child_of(e, w) })
            .collect()
    }

    fn has_edge(&self, e: usize, r: &Name, f: usize) -> bool {
        let (v, w) = (self.node[e], self.node[f]);
        let linked = if self.m.is_named(w) { self.m.is_named(v) } else { self.parent[f] == Some(e) };
        linked && self.m.edges[v].get(&w).is_some_and(|roles| roles.contains(r))
    }

    fn has_label(&self, e: usize, a: &Name) -> bool {
        self.m.labels[self.node[e]].contains(a)
    }
}

/// Decides whether the model entails `q`. Rooted CQs are matched exactly; the only
/// other shape accepted is a set of variable-disjoint `∃x (M₁(x) ∧ …)` components.
pub fn answers_cq(m: &Model, q: &Cq) -> Result<bool> {
    let inds = q.individuals();
    let mut reach: BTreeSet<Name> = inds.clone();
    loop {
        let before = reach.len();
        for a in &q.atoms {
            if let Assertion::Role { from, to, .. } = a {
                if reach.contains(from) {
                    reach.insert(to.clone());
                }
            }
        }
        if reach.len() == before {
            break;
        }
    }
    let floating: BTreeSet<&Name> = q.vars.iter().filter(|v| !reach.contains(*v)).collect();
    for a in &q.atoms {
        if let Assertion::Role { from, to, .. } = a {
            if floating.contains(from) || floating.contains(to) {
                return Err(Error::Unsupported(format!(
                    "query is not rooted and `{a}` is not a single-variable concept atom"
                )));
            }
        }
    }
    let reachable = m.reachable();
    for v in &floating {
        let names: Vec<&Name> = q
            .atoms
            .iter()
            .filter_map(|a| match a {
                Assertion::Concept { concept, ind } if ind == *v => Some(concept),
                _ => None,
            })
            .collect();
        let found = (0..m.len()).any(|w| reachable[w] && names.iter().all(|n| m.labels[w].contains(*n)));
        if !found {
            return Ok(false);
        }
    }
    let rooted: Vec<&Assertion> = q
        .atoms
        .iter()
        .filter(|a| a.terms().iter().all(|t| !floating.contains(t)))
        .collect();
    match_rooted(m, q, &rooted)
}

fn match_rooted(m: &Model, q: &Cq, atoms: &[&Assertion]) -> Result<bool> {
    let mut u = Unravel::new(m);
    let mut assign: BTreeMap<Name, usize> = BTreeMap::new();
    for a in q.individuals() {
        match m.node_of(&a) {
            Some(v) => {
                assign.insert(a, v);
            }
            None => return Ok(false),
        }
    }
    // Order variables so each is introduced as a successor of an earlier term.
    let mut order: Vec<(Name, Name, Name)> = Vec::new();
    let mut known: BTreeSet<Name> = assign.keys().cloned().collect();
    loop {
        let next = atoms.iter().find_map(|a| match a {
            Assertion::Role { role, from, to } if known.contains(from) && !known.contains(to) => {
                Some((to.clone(), role.clone(), from.clone()))
            }
            _ => None,
        });
        match next {
            Some(step) => {
                known.insert(step.0.clone());
                order.push(step);
            }
            None => break,
        }
    }
    if !atoms.iter().all(|a| a.terms().iter().all(|t| known.contains(*t))) {
        return Err(Error::Unsupported("query is not rooted".into()));
    }
    if !atoms.iter().filter(|a| a.terms().iter().all(|t| assign.contains_key(*t))).all(|a| holds(&u, &assign, a)) {
        return Ok(false);
    }
    Ok(search(&mut u, atoms, &order, 0, &mut assign))
}

fn holds(u: &Unravel<'_>, assign: &BTreeMap<Name, usize>, a: &Assertion) -> bool {
    match a {
        Assertion::Concept { concept, ind } => u.has_label(assign[ind], concept),
        Assertion::Role { role, from, to } => u.has_edge(assign[from], role, assign[to]),
    }
}

fn search(
    u: &mut Unravel<'_>,
    atoms: &[&Assertion],
    order: &[(Name, Name, Name)],
    k: usize,
    assign: &mut BTreeMap<Name, usize>,
) -> bool {
    let Some((x, r, from)) = order.get(k) else { return true };
    let candidates = u.successors(assign[from], r);
    for c in candidates {
        assign.insert(x.clone(), c);
        let ok = atoms
            .iter()
            .filter(|a| a.terms().contains(&x) && a.terms().iter().all(|t| assign.contains_key(*t)))
            .all(|a| holds(u, assign, a));
        if ok && search(u, atoms, order, k + 1, assign) {
            return true;
        }
        assign.remove(x);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_abox, parse_query, parse_tbox, Query};

    fn ans(t: &str, a: &str, q: &str) -> Result<bool> {
        let m = Model::build(&parse_tbox(t).unwrap(), &parse_abox(a).unwrap());
        let Query::Cq(q) = parse_query(q).unwrap() else { panic!() };
        answers_cq(&m, &q)
    }

    #[test]
    fn branching_query_entailed() {
        let q = "CQ a ; exists x1 x2 x3 x4 x5 ; r(a,x1), r(a,x2), s(x1,x3), s(x1,x4), s(x2,x4), s(x2,x5)";
        assert!(ans("CI: A [= some r.some s.top", "A: A(a)", q).unwrap());
    }

    #[test]
    fn distinct_roles_need_distinct_or_shared_edges() {
        let t = "CI: A [= some r.B and some s.B";
        assert!(!ans(t, "A: A(a)", "CQ a ; exists x ; r(a,x), s(a,x)").unwrap());
        assert!(ans(t, "A: A(a)", "CQ a ; exists x y ; r(a,x), s(a,y), B(x), B(y)").unwrap());
        let t2 = "CI: A [= some r.B\nRI: r [= s";
        assert!(ans(t2, "A: A(a)", "CQ a ; exists x ; r(a,x), s(a,x)").unwrap());
    }

    #[test]
    fn anonymous_elements_do_not_reach_individuals() {
        let t = "CI: A [= some r.top";
        assert!(!ans(t, "A: A(a)\nA: b", "CQ a b ; exists x ; r(a,x), r(x,b)").unwrap());
        assert!(ans("", "A: r(a,b)\nA: r(b,a)", "CQ a ; exists x ; r(a,x), r(x,a)").unwrap());
    }

    #[test]
    fn boolean_concept_query() {
        assert!(!ans("", "A: A(a)", "CQ ; exists x ; M(x)").unwrap());
        assert!(ans("CI: A [= some r.M", "A: A(a)", "CQ ; exists x ; M(x)").unwrap());
        assert!(matches!(ans("", "A: A(a)", "CQ ; exists x y ; r(x,y)"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cyclic_anonymous_part_unravels() {
        let t = "CI: B [= some s.B";
        assert!(ans(t, "A: B(b)", "CQ b ; exists x y z ; s(b,x), s(x,y), s(y,z), B(z)").unwrap());
        assert!(!ans(t, "A: B(b)", "CQ b ; exists x y ; s(b,x), s(x,y), s(y,x)").unwrap());
    }
}
