use crate::syntax::{ABox, Concept, Name, Signature, TBox};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Reflexive-transitive closure of the role inclusions of a TBox.
#[derive(Clone, Debug, Default)]
pub struct RoleHierarchy {
    sup: BTreeMap<Name, BTreeSet<Name>>,
}

impl RoleHierarchy {
    pub fn of(t: &TBox) -> RoleHierarchy {
        let mut sup: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
        for ri in t.ris() {
            sup.entry(ri.sub.clone()).or_default().insert(ri.sup.clone());
            sup.entry(ri.sup.clone()).or_default();
        }
        for (r, s) in sup.iter_mut() {
            s.insert(r.clone());
        }
        loop {
            let mut grew = false;
            let snapshot = sup.clone();
            for supers in sup.values_mut() {
                let extra: BTreeSet<Name> = supers
                    .iter()
                    .flat_map(|s| snapshot.get(s).into_iter().flatten().cloned())
                    .filter(|s| !supers.contains(s))
                    .collect();
                if !extra.is_empty() {
                    supers.extend(extra);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        RoleHierarchy { sup }
    }

    /// All `s` with `r ⊑ s` entailed, including `r`.
    pub fn supers(&self, r: &Name) -> BTreeSet<Name> {
        self.sup.get(r).cloned().unwrap_or_else(|| [r.clone()].into())
    }

    pub fn entails(&self, r: &Name, s: &Name) -> bool {
        r == s || self.sup.get(r).is_some_and(|x| x.contains(s))
    }

    /// Entailed inclusions between distinct roles.
    pub fn pairs(&self) -> Vec<(Name, Name)> {
        self.sup
            .iter()
            .flat_map(|(r, ss)| ss.iter().filter(move |s| *s != r).map(move |s| (r.clone(), s.clone())))
            .collect()
    }
}

/// What a node of the compact model stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Individual(Name),
    /// The anonymous element introduced for `∃role.filler`.
    Anon { role: Name, filler: Concept },
}

/// Finite presentation of the canonical model of a KB. Anonymous nodes are shared
/// per `(role, filler)` pair; unravelling from the individuals yields the canonical
/// model up to the tree shape of its anonymous part.
#[derive(Clone, Debug)]
pub struct Model {
    pub kinds: Vec<NodeKind>,
    pub labels: Vec<BTreeSet<Name>>,
    /// Per node: target node and the set of roles on that edge.
    pub edges: Vec<BTreeMap<usize, BTreeSet<Name>>>,
    individuals: BTreeMap<Name, usize>,
    n_named: usize,
    roles: RoleHierarchy,
    anon_index: HashMap<(Name, Concept), usize>,
}

impl Model {
    /// Canonical model of `(t, a)`.
    pub fn build(t: &TBox, a: &ABox) -> Model {
        let roles = RoleHierarchy::of(t);
        let mut m = Model {
            kinds: Vec::new(),
            labels: Vec::new(),
            edges: Vec::new(),
            individuals: BTreeMap::new(),
            n_named: 0,
            roles,
            anon_index: HashMap::new(),
        };
        for ind in a.ind() {
            m.individuals.insert(ind.clone(), m.kinds.len());
            m.kinds.push(NodeKind::Individual(ind.clone()));
            m.labels.push(BTreeSet::new());
            m.edges.push(BTreeMap::new());
        }
        m.n_named = m.kinds.len();
        for (c, i) in a.concept_assertions() {
            let v = m.individuals[i];
            m.labels[v].insert(c.clone());
        }
        for (r, x, y) in a.role_assertions() {
            let (vx, vy) = (m.individuals[x], m.individuals[y]);
            let sup = m.roles.supers(r);
            m.edges[vx].entry(vy).or_default().extend(sup);
        }
        m.saturate(t);
        m
    }

    /// Canonical model of an ABox alone.
    pub fn of_abox(a: &ABox) -> Model {
        Model::build(&TBox::new(), a)
    }

    fn anon(&mut self, r: &Name, filler: &Concept) -> usize {
        let key = (r.clone(), filler.clone());
        if let Some(&v) = self.anon_index.get(&key) {
            return v;
        }
        let v = self.kinds.len();
        self.anon_index.insert(key, v);
        self.kinds.push(NodeKind::Anon { role: r.clone(), filler: filler.clone() });
        self.labels.push(BTreeSet::new());
        self.edges.push(BTreeMap::new());
        self.apply(v, filler);
        v
    }

    /// Makes `c` true at `v` in the most economical way. Returns whether anything changed.
    fn apply(&mut self, v: usize, c: &Concept) -> bool {
        let mut changed = false;
        for part in c.conjuncts() {
            match part {
                Concept::Name(a) => changed |= self.labels[v].insert(a.clone()),
                Concept::Exists(r, d) => {
                    let w = self.anon(r, d);
                    let sup = self.roles.supers(r);
                    let roles = self.edges[v].entry(w).or_default();
                    let before = roles.len();
                    roles.extend(sup);
                    changed |= roles.len() != before;
                }
                Concept::Top | Concept::And(_) => {}
            }
        }
        changed
    }

    fn saturate(&mut self, t: &TBox) {
        let mut subs: Vec<Concept> = Vec::new();
        let mut seen = BTreeSet::new();
        for ci in t.cis() {
            for s in ci.lhs.subconcepts() {
                if seen.insert(s.clone()) {
                    subs.push(s);
                }
            }
        }
        // Children-first order across all left-hand sides.
        subs.sort_by_key(|c| c.depth());
        let lhs_idx: Vec<usize> = t
            .cis()
            .iter()
            .map(|ci| subs.iter().position(|s| *s == ci.lhs).unwrap())
            .collect();
        let mut applied: BTreeSet<(usize, usize)> = BTreeSet::new();
        loop {
            let vals = self.eval_many(&subs);
            let n = self.kinds.len();
            let mut changed = false;
            for (k, ci) in t.cis().iter().enumerate() {
                for v in 0..n {
                    if vals[lhs_idx[k]][v] && applied.insert((k, v)) {
                        self.apply(v, &ci.rhs);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Truth vectors for concepts given in an order where parts precede wholes.
    fn eval_many(&self, concepts: &[Concept]) -> Vec<Vec<bool>> {
        let mut memo: HashMap<&Concept, usize> = HashMap::new();
        let mut out: Vec<Vec<bool>> = Vec::with_capacity(concepts.len());
        for c in concepts {
            let vals = self.eval_with(c, &|d: &Concept| memo.get(d).map(|&i| &out[i]));
            memo.insert(c, out.len());
            out.push(vals);
        }
        out
    }

    fn eval_with<'a>(&self, c: &Concept, known: &dyn Fn(&Concept) -> Option<&'a Vec<bool>>) -> Vec<bool> {
        let n = self.kinds.len();
        if let Some(v) = known(c) {
            return v.clone();
        }
        match c {
            Concept::Top => vec![true; n],
            Concept::Name(a) => self.labels.iter().map(|l| l.contains(a)).collect(),
            Concept::And(items) => {
                let mut acc = vec![true; n];
                for d in items {
                    let dv = self.eval_with(d, known);
                    acc.iter_mut().zip(dv).for_each(|(x, y)| *x &= y);
                }
                acc
            }
            Concept::Exists(r, d) => {
                let dv = self.eval_with(d, known);
                self.edges
                    .iter()
                    .map(|es| es.iter().any(|(w, roles)| dv[*w] && roles.contains(r)))
                    .collect()
            }
        }
    }

    /// Nodes satisfying `c`.
    pub fn eval(&self, c: &Concept) -> Vec<bool> {
        let subs = c.subconcepts();
        self.eval_many(&subs).pop().unwrap_or_else(|| vec![true; self.kinds.len()])
    }

    pub fn holds_at(&self, v: usize, c: &Concept) -> bool {
        self.eval(c)[v]
    }

    pub fn node_of(&self, ind: &Name) -> Option<usize> {
        self.individuals.get(ind).copied()
    }

    pub fn individual_nodes(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.individuals.iter().map(|(n, v)| (n, *v))
    }

    pub fn is_named(&self, v: usize) -> bool {
        v < self.n_named
    }

    pub fn n_named(&self) -> usize {
        self.n_named
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn role_hierarchy(&self) -> &RoleHierarchy {
        &self.roles
    }

    pub fn roles_between(&self, x: usize, y: usize) -> BTreeSet<Name> {
        self.edges[x].get(&y).cloned().unwrap_or_default()
    }

    /// Same structure with names outside `sig` erased.
    pub fn restricted(&self, sig: &Signature) -> Model {
        let mut m = self.clone();
        for l in m.labels.iter_mut() {
            l.retain(|a| sig.concepts.contains(a));
        }
        for es in m.edges.iter_mut() {
            for roles in es.values_mut() {
                roles.retain(|r| sig.roles.contains(r));
            }
            es.retain(|_, roles| !roles.is_empty());
        }
        m
    }

    /// Nodes reachable from the individuals.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = (0..self.n_named).collect();
        stack.iter().for_each(|&v| seen[v] = true);
        while let Some(v) = stack.pop() {
            for w in self.edges[v].keys() {
                if !seen[*w] {
                    seen[*w] = true;
                    stack.push(*w);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_abox, parse_concept, parse_tbox};

    #[test]
    fn role_closure_is_transitive() {
        let t = parse_tbox("RI: r [= s\nRI: s [= u").unwrap();
        let h = RoleHierarchy::of(&t);
        assert!(h.entails(&"r".into(), &"u".into()));
        assert!(!h.entails(&"u".into(), &"r".into()));
        assert!(h.entails(&"q".into(), &"q".into()));
    }

    #[test]
    fn self_feeding_existential_is_finite() {
        let t = parse_tbox("CI: B [= some s.B").unwrap();
        let a = parse_abox("A: B(b)").unwrap();
        let m = Model::build(&t, &a);
        assert_eq!(m.len(), 2);
        let anon = 1;
        assert!(m.labels[anon].contains(&Name::from("B")));
        assert!(m.edges[anon].contains_key(&anon));
        assert!(m.holds_at(0, &parse_concept("some s.some s.some s.B").unwrap()));
    }

    #[test]
    fn chain_from_nested_existential() {
        let t = parse_tbox("CI: A [= some r.some s.top").unwrap();
        let m = Model::build(&t, &parse_abox("A: A(a)").unwrap());
        assert_eq!(m.len(), 3);
        assert!(m.labels[1].is_empty() && m.labels[2].is_empty());
        assert!(m.holds_at(0, &parse_concept("some r.some s.top").unwrap()));
        assert!(!m.holds_at(0, &parse_concept("some s.top").unwrap()));
    }

    #[test]
    fn left_hand_side_through_anonymous_part() {
        let t = parse_tbox("CI: B [= some s.B\nCI: some r.some s.B [= A").unwrap();
        let m = Model::build(&t, &parse_abox("A: r(a,b)\nA: B(b)").unwrap());
        let a = m.node_of(&"a".into()).unwrap();
        assert!(m.labels[a].contains(&Name::from("A")));
    }

    #[test]
    fn empty_tbox_gives_closed_abox_model() {
        let t = parse_tbox("RI: r [= s").unwrap();
        let m = Model::build(&t, &parse_abox("A: r(a,b)").unwrap());
        assert_eq!(m.roles_between(0, 1), BTreeSet::from(["r".into(), "s".into()]));
        assert_eq!(m.len(), 2);
    }
}
