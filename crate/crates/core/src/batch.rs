//! Learning from a finite batch of positive examples: the batch is built from a
//! full learning run against the target, and the hypothesis is rebuilt from it
//! without any teacher.

use crate::error::{Error, Result};
use crate::learner::{self, aq, Evidence, Limits, Run};
use crate::reasoner::{self, abox_homomorphism, Lang};
use crate::syntax::{concept_of_tree_abox, parse_abox, parse_query, ABox, Assertion, Ci, Concept, Name, Query, Ri, TBox};
use crate::teacher::{Policy, Session};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    /// Tree-shaped ABox from the AQ phase; yields `C_A ⊑ B`.
    TreeShape,
    /// `({A(a)}, B(a))`.
    Atomic,
    /// `({r(a,b)}, s(a,b))`.
    Role,
    /// A counterexample of the IQ loop.
    IqCounterexample,
    /// `({A(a)}, D(a))`: the IQ loop set the entry for `A` to `D`.
    IqEssential,
}

/// One positive example with its replay position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchExample {
    pub kind: ExampleKind,
    pub seq: usize,
    pub abox: ABox,
    pub query: Query,
}

#[derive(Serialize, Deserialize)]
struct Line {
    kind: ExampleKind,
    seq: usize,
    abox: String,
    query: String,
    label: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Batch {
    pub examples: Vec<BatchExample>,
}

impl Batch {
    /// Sum of `|A| + |q|` over all examples.
    pub fn size(&self) -> usize {
        self.examples.iter().map(|e| e.abox.size() + e.query.size()).sum()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    fn push(&mut self, kind: ExampleKind, abox: ABox, query: Query) {
        let seq = self.examples.len();
        self.examples.push(BatchExample { kind, seq, abox, query });
    }

    pub fn to_jsonl(&self) -> String {
        self.examples
            .iter()
            .map(|e| {
                let line = Line {
                    kind: e.kind,
                    seq: e.seq,
                    abox: e.abox.to_string(),
                    query: e.query.to_text(),
                    label: 1,
                };
                serde_json::to_string(&line).expect("serializable") + "\n"
            })
            .collect()
    }

    pub fn from_jsonl(src: &str) -> Result<Batch> {
        let mut examples = Vec::new();
        for (i, raw) in src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line: Line =
                serde_json::from_str(raw).map_err(|e| Error::Data(format!("batch line {}: {e}", i + 1)))?;
            if line.label != 1 {
                return Err(Error::Data(format!("batch line {}: only positive examples are supported", i + 1)));
            }
            examples.push(BatchExample {
                kind: line.kind,
                seq: line.seq,
                abox: parse_abox(&line.abox)?,
                query: parse_query(&line.query)?,
            });
        }
        Ok(Batch { examples })
    }
}

/// Makes a tree-shaped example map into `a0`: each node takes the labels its
/// original individual has in `a0`, then labels are dropped while the target
/// still puts `name` at `root`.
fn fit_into(
    t: &TBox,
    a0: &ABox,
    abox: ABox,
    root: &Name,
    name: &Name,
    origin: &BTreeMap<Name, Name>,
) -> Result<(ABox, Name)> {
    if abox_homomorphism(&abox, a0).is_some() {
        return Ok((abox, root.clone()));
    }
    let goal = Query::Aq(Assertion::concept(name.clone(), root.clone()));
    let mut a = ABox::new();
    for x in abox.assertions() {
        if let Assertion::Role { .. } = x {
            a.insert(x.clone());
        }
    }
    for x in abox.ind() {
        a.declare(x.clone());
        let o = origin.get(x).unwrap_or(x);
        for l in a0.labels_of(o) {
            a.insert(Assertion::concept(l, x.clone()));
        }
    }
    let mut goal = goal;
    let mut root = root.clone();
    if !reasoner::answers(t, &a, &goal)? {
        // A derived label depended on individuals outside the tree.
        let start = origin.get(&root).unwrap_or(&root);
        a = unravel_until(t, a0, start, name)?;
        root = Name::from("u0");
        goal = Query::Aq(Assertion::concept(name.clone(), root.clone()));
    }
    let concepts: Vec<Assertion> = a.assertions().filter(|x| matches!(x, Assertion::Concept { .. })).cloned().collect();
    for x in concepts {
        let mut cand = a.clone();
        cand.remove(&x);
        if reasoner::answers(t, &cand, &goal)? {
            a = cand;
        }
    }
    Ok((a, root))
}

const UNRAVEL_NODES: usize = 4096;

/// Forward unraveling of `a0` from `start` up to `depth`; individuals are `u0, u1, …` with root `u0`.
fn unravel(a0: &ABox, start: &Name, depth: usize) -> Option<(ABox, Vec<Vec<usize>>)> {
    let mut out = ABox::new();
    let mut nodes: Vec<(Name, usize)> = vec![(start.clone(), 0)];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let name = |i: usize| Name::from(format!("u{i}"));
    out.declare(name(0));
    let mut i = 0;
    while i < nodes.len() {
        let (o, d) = nodes[i].clone();
        for l in a0.labels_of(&o) {
            out.insert(Assertion::concept(l, name(i)));
        }
        if d < depth {
            for (r, _, to) in a0.role_assertions().filter(|(_, f, _)| **f == o) {
                let j = nodes.len();
                if j >= UNRAVEL_NODES {
                    return None;
                }
                nodes.push((to.clone(), d + 1));
                children.push(Vec::new());
                children[i].push(j);
                out.insert(Assertion::role(r.clone(), name(i), name(j)));
            }
        }
        i += 1;
    }
    Some((out, children))
}

/// The smallest-depth unraveling on which the target derives `name` at the root,
/// with subtrees pruned while that stays true.
fn unravel_until(t: &TBox, a0: &ABox, start: &Name, name: &Name) -> Result<ABox> {
    let goal = Query::Aq(Assertion::concept(name.clone(), "u0"));
    let mut last = 0;
    for depth in 0.. {
        let Some((mut a, children)) = unravel(a0, start, depth) else { break };
        if !reasoner::answers(t, &a, &goal)? {
            if children.len() == last {
                break;
            }
            last = children.len();
            continue;
        }
        for v in 1..children.len() {
            let mut stack = vec![v];
            let mut cand = a.clone();
            while let Some(w) = stack.pop() {
                cand = cand.without_individual(&Name::from(format!("u{w}")));
                stack.extend(&children[w]);
            }
            if cand.ind().len() < a.ind().len() && reasoner::answers(t, &cand, &goal)? {
                a = cand;
            }
        }
        return Ok(a);
    }
    Err(Error::Contract(format!("no bounded unraveling of the fixed ABox entails {goal}")))
}

/// Runs the learner for `lang` against `t` and collects the positive examples it
/// relied on. Every example ABox must map homomorphically into `a0`.
pub fn build_batch(t: &TBox, a0: &ABox, lang: Lang) -> Result<Batch> {
    let sig = t.signature();
    let mut session = Session::new(t.clone(), a0.clone(), lang, Policy::MinimalDeterministic)?;
    let run: Run = learner::learn(&mut session, lang)?;
    let mut batch = Batch::default();
    for a in &sig.concepts {
        for b in sig.concepts.iter().filter(|b| *b != a) {
            if reasoner::entails_ci(t, &Concept::Name(a.clone()), &Concept::Name(b.clone())) {
                let abox = ABox::from_assertions([Assertion::concept(a.clone(), "a")]);
                batch.push(ExampleKind::Atomic, abox, Query::Aq(Assertion::concept(b.clone(), "a")));
            }
        }
    }
    for r in &sig.roles {
        for s in sig.roles.iter().filter(|s| *s != r) {
            if reasoner::entails_ri(t, r, s) {
                let abox = ABox::from_assertions([Assertion::role(r.clone(), "a", "b")]);
                let q = Query::IqRole { role: s.clone(), from: "a".into(), to: "b".into() };
                batch.push(ExampleKind::Role, abox, q);
            }
        }
    }
    for ev in run.evidence {
        match ev {
            Evidence::TreeShape { abox, root, name, origin } => {
                push_tree(&mut batch, t, a0, abox, &root, name, &origin)?;
            }
            Evidence::Counterexample { abox, query } => batch.push(ExampleKind::IqCounterexample, abox, query),
            Evidence::Definition { name, concept } => {
                let abox = ABox::from_assertions([Assertion::concept(name, "a")]);
                batch.push(ExampleKind::IqEssential, abox, Query::iq(concept, "a"));
            }
        }
    }
    repair(&mut batch, &mut session, t, a0, lang)?;
    if let Some(e) = batch.examples.iter().find(|e| abox_homomorphism(&e.abox, a0).is_none()) {
        return Err(Error::Config(format!(
            "example ({}, {}) does not map into the fixed ABox; its names must occur there",
            e.abox.to_string().trim().replace('\n', " "),
            e.query
        )));
    }
    Ok(batch)
}

fn push_tree(
    batch: &mut Batch,
    t: &TBox,
    a0: &ABox,
    abox: ABox,
    root: &Name,
    name: Name,
    origin: &BTreeMap<Name, Name>,
) -> Result<()> {
    let (abox, root) = fit_into(t, a0, abox, root, &name, origin)?;
    batch.push(ExampleKind::TreeShape, abox, Query::Aq(Assertion::concept(name, root)));
    Ok(())
}

/// Fitting a tree into the fixed ABox can make its concept more specific than the
/// learner's, so the replayed hypothesis may miss names the learner's CI covered.
/// Each round adds the tree-shaped example the learner would have used for the
/// first missed name.
fn repair(batch: &mut Batch, session: &mut Session, t: &TBox, a0: &ABox, lang: Lang) -> Result<()> {
    let limit = t.signature().concepts.len() * a0.ind().len().max(1) + 1;
    for _ in 0..limit {
        let h = learn_from_batch(batch, lang)?;
        if reasoner::inseparable(t, &h, a0, lang).is_yes() {
            return Ok(());
        }
        if reasoner::inseparable(t, &h, a0, Lang::Aq).is_yes() {
            break;
        }
        let (ci, shaped) = aq::shaped_ci(session, a0, &h, &Limits::default())?;
        let name = ci.rhs.as_name().expect("concept name").clone();
        let origin = shaped.abox.ind().iter().map(|x| (x.clone(), shaped.clones.origin(x).clone())).collect();
        push_tree(batch, t, a0, shaped.abox, &shaped.root, name, &origin)?;
    }
    Err(Error::Contract("batch replay does not reach an inseparable hypothesis".into()))
}

fn single_label(a: &ABox, ind: &Name) -> Result<Name> {
    let labels = a.labels_of(ind);
    match (labels.len(), labels.into_iter().next()) {
        (1, Some(n)) => Ok(n),
        _ => Err(Error::Structure(format!("expected exactly one concept assertion on `{ind}`"))),
    }
}

/// Rebuilds a hypothesis from a batch made by [`build_batch`]; asks no queries.
pub fn learn_from_batch(b: &Batch, lang: Lang) -> Result<TBox> {
    let mut h = TBox::new();
    let mut defs: BTreeMap<Name, Concept> = BTreeMap::new();
    let mut examples: Vec<&BatchExample> = b.examples.iter().collect();
    examples.sort_by_key(|e| e.seq);
    for e in examples {
        match (e.kind, &e.query) {
            (ExampleKind::Atomic, Query::Aq(Assertion::Concept { concept: rhs, ind })) => {
                let lhs = single_label(&e.abox, ind)?;
                h.add_ci(Ci::new(Concept::Name(lhs), Concept::Name(rhs.clone())));
            }
            (ExampleKind::Role, Query::IqRole { role: sup, from, to }) => {
                let Some((sub, _, _)) = e.abox.role_assertions().find(|(_, x, y)| *x == from && *y == to) else {
                    return Err(Error::Structure("role example needs a matching role assertion".into()));
                };
                h.add_ri(Ri::new(sub.clone(), sup.clone()));
            }
            (ExampleKind::TreeShape, Query::Aq(Assertion::Concept { concept: rhs, ind })) => {
                let lhs = concept_of_tree_abox(&e.abox, ind)?;
                h.add_ci(Ci::new(lhs, Concept::Name(rhs.clone())));
            }
            (ExampleKind::IqCounterexample, _) => {}
            (ExampleKind::IqEssential, Query::Iq { concept, ind }) if lang != Lang::Aq => {
                let lhs = single_label(&e.abox, ind)?;
                defs.insert(lhs, concept.clone());
            }
            (ExampleKind::IqEssential, _) if lang == Lang::Aq => {}
            (kind, q) => return Err(Error::Structure(format!("{kind:?} example with query {q}"))),
        }
    }
    for (a, c) in defs {
        h.add_ci(Ci::new(Concept::Name(a), c));
    }
    Ok(h)
}
