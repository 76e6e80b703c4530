//! Greatest simulations and bisimulations between finite models, with extraction of
//! distinguishing concepts when a pair is not simulated.

use super::model::Model;
use crate::syntax::{Concept, Name};
use std::collections::{BTreeMap, BTreeSet};

/// Picks one of `n` equally valid alternatives. Index 0 is the canonical choice.
pub trait Chooser {
    fn pick(&mut self, n: usize) -> usize;
}

/// Always the canonical choice.
pub struct FirstChoice;

impl Chooser for FirstChoice {
    fn pick(&mut self, _n: usize) -> usize {
        0
    }
}

/// Uniformly random choice from a seeded generator.
pub struct RandomChoice<'r, R: rand::Rng>(pub &'r mut R);

impl<R: rand::Rng> Chooser for RandomChoice<'_, R> {
    fn pick(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }
}

/// Outcome of refining the full relation `M₁ × M₂`: for each pair, the round in which it
/// was removed, or `None` if it belongs to the greatest simulation.
pub struct SimulationTable<'a> {
    pub left: &'a Model,
    pub right: &'a Model,
    removed: Vec<Vec<Option<u32>>>,
}

fn succ_by_role(m: &Model) -> Vec<BTreeMap<Name, Vec<usize>>> {
    m.edges
        .iter()
        .map(|es| {
            let mut by: BTreeMap<Name, Vec<usize>> = BTreeMap::new();
            for (w, roles) in es {
                for r in roles {
                    by.entry(r.clone()).or_default().push(*w);
                }
            }
            by
        })
        .collect()
}

impl<'a> SimulationTable<'a> {
    /// Greatest simulation from `left` to `right`.
    pub fn compute(left: &'a Model, right: &'a Model) -> Self {
        let (n1, n2) = (left.len(), right.len());
        let mut removed: Vec<Vec<Option<u32>>> = (0..n1)
            .map(|x| {
                (0..n2)
                    .map(|y| if left.labels[x].is_subset(&right.labels[y]) { None } else { Some(0) })
                    .collect()
            })
            .collect();
        let s1 = succ_by_role(left);
        let s2 = succ_by_role(right);
        let mut round = 0;
        loop {
            round += 1;
            let mut kill = Vec::new();
            for x in 0..n1 {
                for y in 0..n2 {
                    if removed[x][y].is_some() {
                        continue;
                    }
                    let ok = s1[x].iter().all(|(r, xs)| {
                        let ys = s2[y].get(r).map(Vec::as_slice).unwrap_or(&[]);
                        xs.iter().all(|x2| ys.iter().any(|y2| removed[*x2][*y2].is_none()))
                    });
                    if !ok {
                        kill.push((x, y));
                    }
                }
            }
            if kill.is_empty() {
                break;
            }
            for (x, y) in kill {
                removed[x][y] = Some(round);
            }
        }
        SimulationTable { left, right, removed }
    }

    pub fn simulates(&self, x: usize, y: usize) -> bool {
        self.removed[x][y].is_none()
    }

    /// The greatest simulation as a set of pairs.
    pub fn relation(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for (x, row) in self.removed.iter().enumerate() {
            for (y, r) in row.iter().enumerate() {
                if r.is_none() {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    /// A concept true at `x` in the left model and false at `y` in the right one,
    /// of role depth equal to the removal round. `None` if `y` simulates `x`.
    pub fn distinguishing_concept(&self, x: usize, y: usize, chooser: &mut dyn Chooser) -> Option<Concept> {
        self.removed[x][y]?;
        let s1 = succ_by_role(self.left);
        let s2 = succ_by_role(self.right);
        let mut memo = BTreeMap::new();
        Some(self.dist(x, y, &s1, &s2, chooser, &mut memo))
    }

    fn dist(
        &self,
        x: usize,
        y: usize,
        s1: &[BTreeMap<Name, Vec<usize>>],
        s2: &[BTreeMap<Name, Vec<usize>>],
        chooser: &mut dyn Chooser,
        memo: &mut BTreeMap<(usize, usize), Concept>,
    ) -> Concept {
        if let Some(c) = memo.get(&(x, y)) {
            return c.clone();
        }
        let k = self.removed[x][y].expect("pair is simulated");
        let c = if k == 0 {
            let missing: Vec<&Name> = self.left.labels[x].difference(&self.right.labels[y]).collect();
            Concept::Name(missing[chooser.pick(missing.len())].clone())
        } else {
            // Witnesses (r, x') all of whose r-partners below y were removed earlier.
            let mut witnesses: Vec<(i64, Name, usize)> = Vec::new();
            for (r, xs) in &s1[x] {
                let ys = s2[y].get(r).map(Vec::as_slice).unwrap_or(&[]);
                for &x2 in xs {
                    let rounds: Option<Vec<u32>> =
                        ys.iter().map(|&y2| self.removed[x2][y2].filter(|&j| j < k)).collect();
                    if let Some(rounds) = rounds {
                        let key = rounds.iter().max().map(|&j| j as i64).unwrap_or(-1);
                        witnesses.push((key, r.clone(), x2));
                    }
                }
            }
            witnesses.sort();
            let (_, r, x2) = witnesses[chooser.pick(witnesses.len())].clone();
            let ys: Vec<usize> = s2[y].get(&r).cloned().unwrap_or_default();
            let parts: Vec<Concept> = ys.iter().map(|&y2| self.dist(x2, y2, s1, s2, chooser, memo)).collect();
            Concept::exists(r, Concept::and(parts))
        };
        memo.insert((x, y), c.clone());
        c
    }
}

/// Greatest bisimulation between two models, as a membership table.
pub fn greatest_bisimulation(left: &Model, right: &Model) -> Vec<Vec<bool>> {
    let (n1, n2) = (left.len(), right.len());
    let mut z: Vec<Vec<bool>> =
        (0..n1).map(|x| (0..n2).map(|y| left.labels[x] == right.labels[y]).collect()).collect();
    let s1 = succ_by_role(left);
    let s2 = succ_by_role(right);
    loop {
        let mut kill = Vec::new();
        for x in 0..n1 {
            for y in 0..n2 {
                if !z[x][y] {
                    continue;
                }
                let forth = s1[x].iter().all(|(r, xs)| {
                    let ys = s2[y].get(r).map(Vec::as_slice).unwrap_or(&[]);
                    xs.iter().all(|x2| ys.iter().any(|y2| z[*x2][*y2]))
                });
                let back = s2[y].iter().all(|(r, ys)| {
                    let xs = s1[x].get(r).map(Vec::as_slice).unwrap_or(&[]);
                    ys.iter().all(|y2| xs.iter().any(|x2| z[*x2][*y2]))
                });
                if !(forth && back) {
                    kill.push((x, y));
                }
            }
        }
        if kill.is_empty() {
            break;
        }
        for (x, y) in kill {
            z[x][y] = false;
        }
    }
    z
}

/// The greatest simulation containing `(d, e)`, if any.
pub fn simulation(left: &Model, d: usize, right: &Model, e: usize) -> Option<BTreeSet<(usize, usize)>> {
    let t = SimulationTable::compute(left, right);
    t.simulates(d, e).then(|| t.relation())
}

/// The greatest bisimulation containing `(d, e)`, if any.
pub fn bisimilar(left: &Model, d: usize, right: &Model, e: usize) -> Option<BTreeSet<(usize, usize)>> {
    let z = greatest_bisimulation(left, right);
    z[d][e].then(|| {
        let mut out = BTreeSet::new();
        for (x, row) in z.iter().enumerate() {
            for (y, b) in row.iter().enumerate() {
                if *b {
                    out.insert((x, y));
                }
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_abox, parse_tbox};

    fn model(t: &str, a: &str) -> Model {
        Model::build(&parse_tbox(t).unwrap(), &parse_abox(a).unwrap())
    }

    #[test]
    fn identity_is_a_simulation() {
        let m = model("CI: A [= some r.B", "A: A(a)\nA: r(a,b)");
        let rel = simulation(&m, 0, &m, 0).unwrap();
        assert!((0..m.len()).all(|v| rel.contains(&(v, v))));
    }

    #[test]
    fn loop_not_simulated_by_finite_chain() {
        let l = Model::of_abox(&parse_abox("A: r(a,a)").unwrap());
        let r = Model::of_abox(&parse_abox("A: r(b,c)").unwrap());
        let t = SimulationTable::compute(&l, &r);
        let b = r.node_of(&"b".into()).unwrap();
        assert!(!t.simulates(0, b));
        let c = t.distinguishing_concept(0, b, &mut FirstChoice).unwrap();
        assert_eq!(c.to_ascii(), "some r.some r.top");
        assert!(l.holds_at(0, &c) && !r.holds_at(b, &c));
    }

    #[test]
    fn distinguishing_concept_on_label_gap() {
        let l = model("", "A: r(a,b)\nA: A1(b)\nA: A2(b)");
        let r = model("", "A: r(c,d)\nA: A1(d)");
        let t = SimulationTable::compute(&l, &r);
        let (a, c) = (l.node_of(&"a".into()).unwrap(), r.node_of(&"c".into()).unwrap());
        assert_eq!(t.distinguishing_concept(a, c, &mut FirstChoice).unwrap().to_ascii(), "some r.A2");
    }

    #[test]
    fn bisimulation_of_loops() {
        let l = Model::of_abox(&parse_abox("A: r(a,a)\nA: B(a)").unwrap());
        let r = Model::of_abox(&parse_abox("A: r(b,c)\nA: r(c,b)\nA: B(b)\nA: B(c)").unwrap());
        assert!(bisimilar(&l, 0, &r, 0).is_some());
        let r2 = Model::of_abox(&parse_abox("A: r(b,c)\nA: r(c,b)\nA: B(b)").unwrap());
        assert!(bisimilar(&l, 0, &r2, 0).is_none());
    }
}
