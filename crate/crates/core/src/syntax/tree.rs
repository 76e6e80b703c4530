use super::{ABox, Assertion, Concept, Name};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Tree representation of a concept. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConceptTree {
    pub labels: Vec<BTreeSet<Name>>,
    /// Outgoing edges per node as `(role, child)`.
    pub children: Vec<Vec<(Name, usize)>>,
}

impl ConceptTree {
    pub fn of_concept(c: &Concept) -> ConceptTree {
        let mut t = ConceptTree { labels: vec![BTreeSet::new()], children: vec![vec![]] };
        t.add(c, 0);
        t
    }

    fn add(&mut self, c: &Concept, node: usize) {
        match c {
            Concept::Top => {}
            Concept::Name(a) => {
                self.labels[node].insert(a.clone());
            }
            Concept::And(items) => items.iter().for_each(|d| self.add(d, node)),
            Concept::Exists(r, d) => {
                let child = self.push_node();
                self.children[node].push((r.clone(), child));
                self.add(d, child);
            }
        }
    }

    pub fn push_node(&mut self) -> usize {
        self.labels.push(BTreeSet::new());
        self.children.push(Vec::new());
        self.labels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Checks for a single root, one parent per other node, and full reachability.
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() || self.children.len() != self.labels.len() {
            return Err(Error::Structure("tree has no root or mismatched tables".into()));
        }
        let mut parents = vec![0usize; self.len()];
        for edges in &self.children {
            for (_, c) in edges {
                if *c >= self.len() {
                    return Err(Error::Structure(format!("edge to missing node {c}")));
                }
                parents[*c] += 1;
            }
        }
        if parents[0] != 0 {
            return Err(Error::Structure("root has a parent (cycle)".into()));
        }
        if let Some(v) = (1..self.len()).find(|&v| parents[v] != 1) {
            return Err(Error::Structure(format!(
                "node {v} has {} parents; the graph is not a tree",
                parents[v]
            )));
        }
        let reached = self.reachable(0);
        if reached.len() != self.len() {
            return Err(Error::Structure("unreachable nodes or several roots".into()));
        }
        Ok(())
    }

    fn reachable(&self, from: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for (_, c) in &self.children[v] {
                if seen.insert(*c) {
                    stack.push(*c);
                }
            }
        }
        seen
    }

    pub fn to_concept(&self) -> Result<Concept> {
        self.validate()?;
        Ok(self.concept_at(0))
    }

    /// The concept rooted at `v`; callers must know the part below `v` is a tree.
    pub fn concept_at(&self, v: usize) -> Concept {
        let names = self.labels[v].iter().cloned().map(Concept::Name);
        let succ = self.children[v].iter().map(|(r, c)| Concept::exists(r.clone(), self.concept_at(*c)));
        Concept::and(names.chain(succ))
    }

    /// Nodes reachable from the root in breadth-first order.
    pub fn bfs(&self) -> Vec<usize> {
        let mut order = vec![0];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            order.extend(self.children[v].iter().map(|(_, c)| *c));
            i += 1;
        }
        order
    }
}

/// ABox encoding of `c` with individuals `x0, x1, …`; returns it with the root.
pub fn abox_of_concept(c: &Concept) -> (ABox, Name) {
    abox_of_concept_with_prefix(c, "x")
}

pub fn abox_of_concept_with_prefix(c: &Concept, prefix: &str) -> (ABox, Name) {
    let t = ConceptTree::of_concept(c);
    let ind = |v: usize| Name::from(format!("{prefix}{v}"));
    let mut a = ABox::new();
    a.declare(ind(0));
    for v in 0..t.len() {
        for l in &t.labels[v] {
            a.insert(Assertion::Concept { concept: l.clone(), ind: ind(v) });
        }
        for (r, w) in &t.children[v] {
            a.insert(Assertion::Role { role: r.clone(), from: ind(v), to: ind(*w) });
        }
    }
    (a, ind(0))
}

/// Reads the concept encoded by a tree-shaped ABox rooted at `root`.
pub fn concept_of_tree_abox(a: &ABox, root: &Name) -> Result<Concept> {
    let inds: Vec<Name> = a.ind().iter().cloned().collect();
    if !a.ind().contains(root) {
        return Err(Error::Structure(format!("root `{root}` not in the ABox")));
    }
    let index: BTreeMap<&Name, usize> = inds.iter().enumerate().map(|(i, n)| (n, i)).collect();
    // Re-number so the root is node 0.
    let mut order = vec![index[root]];
    order.extend((0..inds.len()).filter(|i| *i != index[root]));
    let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let mut t = ConceptTree {
        labels: vec![BTreeSet::new(); inds.len()],
        children: vec![Vec::new(); inds.len()],
    };
    for (c, i) in a.concept_assertions() {
        t.labels[pos[&index[i]]].insert(c.clone());
    }
    for (r, x, y) in a.role_assertions() {
        t.children[pos[&index[x]]].push((r.clone(), pos[&index[y]]));
    }
    t.validate()?;
    Ok(t.concept_at(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_concept;

    fn c(s: &str) -> Concept {
        parse_concept(s).unwrap()
    }

    #[test]
    fn encoding_does_not_merge_siblings() {
        let x = Concept::And(vec![
            Concept::And(vec![c("A"), c("some r.B")]),
            c("some r.B"),
        ]);
        let t = ConceptTree::of_concept(&x);
        assert_eq!(t.len(), 3);
        assert_eq!(t.children[0].len(), 2);
        assert_eq!(t.labels[0], BTreeSet::from([Name::from("A")]));
    }

    #[test]
    fn top_tree_and_abox() {
        let t = ConceptTree::of_concept(&Concept::Top);
        assert_eq!(t.len(), 1);
        assert!(t.labels[0].is_empty());
        assert_eq!(t.to_concept().unwrap(), Concept::Top);
        let (a, root) = abox_of_concept(&Concept::Top);
        assert!(a.is_empty());
        assert!(a.ind().contains(&root));
    }

    #[test]
    fn abox_encoding_of_chain() {
        let (a, root) = abox_of_concept(&c("some r.some s.B"));
        assert_eq!(root.as_str(), "x0");
        let expected = ABox::from_assertions([
            Assertion::role("r", "x0", "x1"),
            Assertion::role("s", "x1", "x2"),
            Assertion::concept("B", "x2"),
        ]);
        assert_eq!(a, expected);
        assert_eq!(concept_of_tree_abox(&a, &root).unwrap(), c("some r.some s.B"));
    }

    #[test]
    fn malformed_trees_rejected() {
        let mut t = ConceptTree::of_concept(&c("some r.A"));
        t.children[1].push(("r".into(), 0));
        assert!(matches!(t.to_concept(), Err(Error::Structure(_))));
        let mut u = ConceptTree::of_concept(&c("A"));
        u.push_node();
        assert!(u.to_concept().is_err());
        let cyc = ABox::from_assertions([Assertion::role("r", "a", "b"), Assertion::role("r", "b", "a")]);
        assert!(concept_of_tree_abox(&cyc, &"a".into()).is_err());
    }

    #[test]
    fn round_trip() {
        let x = c("A and some r.(B and some s.top) and some r.B");
        let t = ConceptTree::of_concept(&x);
        assert_eq!(t.to_concept().unwrap(), x);
        assert_eq!(ConceptTree::of_concept(&t.to_concept().unwrap()), t);
    }
}
