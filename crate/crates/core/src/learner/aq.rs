//! AQ learner: atomic bootstrap, tree shaping of counterexample ABoxes by
//! minimization and cycle unfolding, then one new CI per counterexample.

use super::{ci_text, describe, Evidence, Iteration, Limits, Run};
use crate::error::{Error, Result};
use crate::reasoner::{self, Lang, Model};
use crate::syntax::{concept_of_tree_abox, ABox, Assertion, Ci, Concept, Name, Query, Ri, Signature, TBox};
use crate::teacher::Oracle;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Copy, Debug)]
pub struct AqOptions {
    /// Find counterexamples by membership queries over the fixed ABox instead of asking inseparability queries.
    pub mq_only: bool,
    pub limits: Limits,
}

impl Default for AqOptions {
    fn default() -> Self {
        AqOptions { mq_only: false, limits: Limits::default() }
    }
}

/// All atomic CIs and RIs the target entails, found with one membership query per pair.
pub fn bootstrap_atomic(oracle: &mut dyn Oracle) -> Result<TBox> {
    let sig = oracle.signature().clone();
    let mut h = TBox::new();
    let a = Name::from("a");
    let b = Name::from("b");
    for x in &sig.concepts {
        for y in sig.concepts.iter().filter(|y| *y != x) {
            let abox = ABox::from_assertions([Assertion::concept(x.clone(), a.clone())]);
            if oracle.membership(&abox, &Query::Aq(Assertion::concept(y.clone(), a.clone())))? {
                h.add_ci(Ci::new(Concept::Name(x.clone()), Concept::Name(y.clone())));
            }
        }
    }
    for r in &sig.roles {
        for s in sig.roles.iter().filter(|s| *s != r) {
            let abox = ABox::from_assertions([Assertion::role(r.clone(), a.clone(), b.clone())]);
            if oracle.membership(&abox, &Query::Aq(Assertion::role(s.clone(), a.clone(), b.clone())))? {
                h.add_ri(Ri::new(r.clone(), s.clone()));
            }
        }
    }
    Ok(h)
}

/// An undirected cycle: `nodes[0]` back to itself, opened at the assertion `first = r(nodes[0], nodes[1])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub nodes: Vec<Name>,
    pub first: Assertion,
}

/// Shortest undirected cycle, ties broken by the node sequence.
pub fn find_cycle(a: &ABox) -> Option<Cycle> {
    let edges: Vec<(&Assertion, &Name, &Name)> = a
        .assertions()
        .filter_map(|x| match x {
            Assertion::Role { from, to, .. } => Some((x, from, to)),
            _ => None,
        })
        .collect();
    let mut adj: BTreeMap<&Name, Vec<(&Name, usize)>> = BTreeMap::new();
    for (i, (_, f, t)) in edges.iter().enumerate() {
        adj.entry(f).or_default().push((t, i));
        adj.entry(t).or_default().push((f, i));
    }
    for v in adj.values_mut() {
        v.sort();
    }
    let mut best: Option<(usize, Vec<Name>, &Assertion)> = None;
    for (i, (e, from, to)) in edges.iter().enumerate() {
        let nodes = if from == to {
            vec![(*from).clone()]
        } else {
            // BFS from `to` back to `from` avoiding this assertion.
            let mut prev: BTreeMap<&Name, &Name> = BTreeMap::new();
            let mut queue = VecDeque::from([*to]);
            let mut seen = BTreeSet::from([*to]);
            while let Some(u) = queue.pop_front() {
                if u == *from {
                    break;
                }
                for (w, j) in &adj[u] {
                    if *j != i && seen.insert(*w) {
                        prev.insert(*w, u);
                        queue.push_back(*w);
                    }
                }
            }
            if !seen.contains(*from) {
                continue;
            }
            let mut back = vec![(*from).clone()];
            let mut u = *from;
            while u != *to {
                u = prev[u];
                back.push(u.clone());
            }
            // back = from .. to; the cycle runs from, to, ..., from.
            let mut nodes = vec![(*from).clone()];
            nodes.extend(back.into_iter().skip(1).rev());
            nodes
        };
        let better = match &best {
            None => true,
            Some((len, seq, _)) => (nodes.len(), &nodes) < (*len, seq),
        };
        if better {
            best = Some((nodes.len(), nodes, e));
        }
    }
    best.map(|(_, nodes, first)| Cycle { nodes, first: first.clone() })
}

/// Doubles `c`: opens it at its first assertion, copies its nodes with their
/// labels and outgoing edges, and closes it again through the copies.
/// Returns the new ABox and a map from each copy to the node it copies.
pub fn unfold_cycle(a: &ABox, c: &Cycle) -> Result<(ABox, BTreeMap<Name, Name>)> {
    let Assertion::Role { role, from, to } = &c.first else {
        return Err(Error::Structure("cycle must start at a role assertion".into()));
    };
    let k = c.nodes.len();
    let mut well_formed = a.contains(&c.first)
        && c.nodes.first() == Some(from)
        && (k == 1 && from == to || k > 1 && c.nodes[1] == *to)
        && c.nodes.iter().collect::<BTreeSet<_>>().len() == k;
    // The remaining steps must use further, distinct assertions in either direction.
    let mut used = BTreeSet::from([&c.first]);
    for i in 1..k {
        let (x, y) = (&c.nodes[i], &c.nodes[(i + 1) % k]);
        let step = a.assertions().find(|e| {
            !used.contains(e)
                && matches!(e, Assertion::Role { from, to, .. } if (from == x && to == y) || (from == y && to == x))
        });
        match step {
            Some(e) => {
                used.insert(e);
            }
            None => well_formed = false,
        }
    }
    if !well_formed {
        return Err(Error::Structure(format!("not a cycle of the ABox starting with {}", c.first)));
    }
    let mut out = a.clone();
    out.remove(&c.first);
    let opened = out.clone();
    let on_cycle: BTreeSet<&Name> = c.nodes.iter().collect();
    let mut hat: BTreeMap<Name, Name> = BTreeMap::new();
    for b in &c.nodes {
        let h = out.fresh_individual(&format!("{b}h"));
        out.declare(h.clone());
        hat.insert(b.clone(), h);
    }
    for x in opened.assertions() {
        match x {
            Assertion::Concept { concept, ind } if on_cycle.contains(ind) => {
                out.insert(Assertion::concept(concept.clone(), hat[ind].clone()));
            }
            Assertion::Role { role, from, to } if on_cycle.contains(from) => {
                let target = hat.get(to).unwrap_or(to).clone();
                out.insert(Assertion::role(role.clone(), hat[from].clone(), target));
            }
            _ => {}
        }
    }
    out.insert(Assertion::role(role.clone(), from.clone(), hat[to].clone()));
    out.insert(Assertion::role(role.clone(), hat[from].clone(), to.clone()));
    Ok((out, hat.into_iter().map(|(b, h)| (h, b)).collect()))
}

/// Adds every concept assertion over the signature that `h` derives.
pub fn saturate(h: &TBox, a: &ABox, sig: &Signature) -> ABox {
    let m = Model::build(h, a);
    let mut out = a.clone();
    for (ind, v) in m.individual_nodes() {
        for c in m.labels[v].iter().filter(|c| sig.concepts.contains(*c)) {
            out.insert(Assertion::concept(c.clone(), ind.clone()));
        }
    }
    out
}

/// Tracks which individuals are copies made by unfolding.
#[derive(Clone, Debug, Default)]
pub struct Clones {
    origin: BTreeMap<Name, Name>,
}

impl Clones {
    pub fn is_clone(&self, x: &Name) -> bool {
        self.origin.contains_key(x)
    }

    /// The individual of the original ABox that `x` descends from.
    pub fn origin<'a>(&'a self, x: &'a Name) -> &'a Name {
        let mut x = x;
        while let Some(y) = self.origin.get(x) {
            x = y;
        }
        x
    }

    fn record(&mut self, copies: BTreeMap<Name, Name>) {
        self.origin.extend(copies);
    }

    fn order<'a>(&self, xs: impl Iterator<Item = &'a Name>) -> Vec<Name> {
        let (mut c, o): (Vec<Name>, Vec<Name>) = xs.cloned().partition(|x| self.is_clone(x));
        c.extend(o);
        c
    }
}

/// Removes individuals, then role assertions, while `q` stays entailed by the target; repeats until stable.
fn reduce(oracle: &mut dyn Oracle, mut a: ABox, q: &Query, keep: &Name, clones: &Clones) -> Result<ABox> {
    loop {
        let mut changed = false;
        for b in clones.order(a.ind().iter()) {
            if b == *keep || !a.ind().contains(&b) {
                continue;
            }
            let cand = a.without_individual(&b);
            if oracle.membership(&cand, q)? {
                a = cand;
                changed = true;
            }
        }
        let roles: Vec<Assertion> = a.assertions().filter(|x| matches!(x, Assertion::Role { .. })).cloned().collect();
        let (mut first, rest): (Vec<_>, Vec<_>) =
            roles.into_iter().partition(|x| x.terms().iter().any(|t| clones.is_clone(t)));
        first.extend(rest);
        for x in first {
            let mut cand = a.clone();
            cand.remove(&x);
            if oracle.membership(&cand, q)? {
                a = cand;
                changed = true;
            }
        }
        if !changed {
            return Ok(a);
        }
    }
}

/// Saturates with `h`, then minimizes for every name/individual pair the
/// target derives and `h` does not. Returns the ABox and the last such pair.
pub fn minimize(
    oracle: &mut dyn Oracle,
    a: &ABox,
    h: &TBox,
    clones: &Clones,
) -> Result<(ABox, Option<(Name, Name)>)> {
    let sig = oracle.signature().clone();
    let mut a = saturate(h, a, &sig);
    let mut inds = clones.order(a.ind().iter());
    let n_clones = inds.iter().filter(|x| clones.is_clone(x)).count();
    inds.rotate_left(n_clones);
    let mut witness = None;
    for ind in inds {
        for name in &sig.concepts {
            if !a.ind().contains(&ind) {
                break;
            }
            let atom = Assertion::concept(name.clone(), ind.clone());
            if a.contains(&atom) {
                continue;
            }
            let q = Query::Aq(atom);
            if !oracle.membership(&a, &q)? {
                continue;
            }
            a = reduce(oracle, a, &q, &ind, clones)?;
            witness = Some((name.clone(), ind.clone()));
        }
    }
    Ok((a, witness))
}

/// Result of tree shaping.
#[derive(Clone, Debug)]
pub struct Shaped {
    pub abox: ABox,
    pub root: Name,
    /// Individual counts after each Minimize call.
    pub sizes: Vec<usize>,
    pub clones: Clones,
}

/// Alternates minimization and cycle unfolding until the ABox is acyclic.
pub fn tree_shape(oracle: &mut dyn Oracle, a: &ABox, h: &TBox, limits: &Limits) -> Result<Shaped> {
    let mut clones = Clones::default();
    let (mut a, mut witness) = minimize(oracle, a, h, &clones)?;
    let mut sizes = vec![a.ind().len()];
    let mut steps = 0;
    while let Some(c) = find_cycle(&a) {
        steps += 1;
        if steps > limits.max_inner_steps {
            return Err(Error::Budget("tree shaping did not terminate".into()));
        }
        let (unfolded, copies) = unfold_cycle(&a, &c)?;
        clones.record(copies);
        (a, witness) = minimize(oracle, &unfolded, h, &clones)?;
        sizes.push(a.ind().len());
    }
    let (_, root) = witness.ok_or_else(|| Error::Contract("ABox carries no positive counterexample".into()))?;
    Ok(Shaped { abox: a, root, sizes, clones })
}

fn mq_counterexample(oracle: &mut dyn Oracle, h: &TBox) -> Result<Option<Query>> {
    let a0 = oracle.fixed_abox().clone();
    let sig = oracle.signature().clone();
    let mh = Model::build(h, &a0);
    for (ind, v) in mh.individual_nodes() {
        for name in sig.concepts.iter().filter(|n| !mh.labels[v].contains(*n)) {
            let q = Query::Aq(Assertion::concept(name.clone(), ind.clone()));
            if oracle.membership(&a0, &q)? {
                return Ok(Some(q));
            }
        }
    }
    Ok(None)
}

/// Tree-shapes `a` against `h` and returns the new CI `C_A ⊑ B` for the first
/// name `B` in signature order, with the individual counts after each Minimize.
pub fn shaped_ci(oracle: &mut dyn Oracle, a: &ABox, h: &TBox, limits: &Limits) -> Result<(Ci, Shaped)> {
    let shaped = tree_shape(oracle, a, h, limits)?;
    let lhs = concept_of_tree_abox(&shaped.abox, &shaped.root)?;
    let sig = oracle.signature().clone();
    for b in &sig.concepts {
        let rhs = Concept::Name(b.clone());
        if reasoner::entails_ci(h, &lhs, &rhs) {
            continue;
        }
        let q = Query::Aq(Assertion::concept(b.clone(), shaped.root.clone()));
        if oracle.membership(&shaped.abox, &q)? {
            return Ok((Ci::new(lhs, rhs), shaped));
        }
    }
    Err(Error::Contract("tree-shaped ABox yields no new CI".into()))
}

/// Learns a hypothesis that is AQ-inseparable from the target over the fixed ABox.
pub fn learn(oracle: &mut dyn Oracle, opts: &AqOptions) -> Result<Run> {
    if !opts.mq_only && oracle.lang() != Lang::Aq {
        return Err(Error::Config(format!("AQ learner needs an AQ teacher, got {}", oracle.lang())));
    }
    let mut h = bootstrap_atomic(oracle)?;
    let mut iterations = vec![Iteration {
        index: 0,
        added: h.cis().iter().map(ci_text).chain(h.ris().iter().map(|r| r.to_string())).collect(),
        hypothesis_size: h.size(),
        counters: oracle.counters(),
        ..Default::default()
    }];
    let a0 = oracle.fixed_abox().clone();
    let mut evidence = Vec::new();
    loop {
        if iterations.len() > opts.limits.max_iterations {
            return Err(Error::Budget("AQ learner exceeded its iteration limit".into()));
        }
        let ce = if opts.mq_only {
            mq_counterexample(oracle, &h)?
        } else {
            oracle.equivalence(&h)?.map(|ex| ex.query)
        };
        let Some(ce) = ce else { break };
        if !matches!(ce, Query::Aq(Assertion::Concept { .. })) {
            return Err(Error::Contract(format!("unexpected counterexample {ce}")));
        }
        let (ci, shaped) = shaped_ci(oracle, &a0, &h, &opts.limits)?;
        let name = ci.rhs.as_name().expect("concept name").clone();
        let origin = shaped.abox.ind().iter().map(|x| (x.clone(), shaped.clones.origin(x).clone())).collect();
                evidence.push(Evidence::TreeShape { abox: shaped.abox, root: shaped.root, name, origin });
        h.add_ci(ci.clone());
        iterations.push(Iteration {
            index: iterations.len(),
            counterexample: Some(describe(&ce)),
            added: vec![ci_text(&ci)],
            minimized_individuals: shaped.sizes,
            hypothesis_size: h.size(),
            counters: oracle.counters(),
            ..Default::default()
        });
    }
    Ok(Run { hypothesis: h, iterations, counters: oracle.counters(), evidence })
}
