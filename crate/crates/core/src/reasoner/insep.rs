//! Query inseparability of two KBs sharing an ABox, with counterexample extraction.

use super::cq::answers_cq;
use super::model::{Model, RoleHierarchy};
use super::simulation::{Chooser, FirstChoice, SimulationTable};
use crate::syntax::{ABox, Assertion, Cq, Name, Query, Signature, TBox};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

/// Query languages for which inseparability is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lang {
    Aq,
    Iq,
    Cqr,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lang::Aq => "AQ",
            Lang::Iq => "IQ",
            Lang::Cqr => "CQr",
        })
    }
}

impl std::str::FromStr for Lang {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Lang> {
        match s.to_ascii_lowercase().as_str() {
            "aq" => Ok(Lang::Aq),
            "iq" => Ok(Lang::Iq),
            "cqr" => Ok(Lang::Cqr),
            other => Err(crate::error::Error::Config(format!("unknown query language `{other}`"))),
        }
    }
}

/// A query on which the two KBs disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Separator {
    pub query: Query,
    /// The first KB entails the query and the second does not.
    pub positive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Inseparability {
    Yes,
    Counterexample(Separator),
}

impl Inseparability {
    pub fn is_yes(&self) -> bool {
        matches!(self, Inseparability::Yes)
    }
}

/// Canonical-choice inseparability check of `(t, a)` and `(h, a)`.
pub fn inseparable(t: &TBox, h: &TBox, a: &ABox, lang: Lang) -> Inseparability {
    match find_separator(t, h, a, lang, &mut FirstChoice) {
        Some(s) => Inseparability::Counterexample(s),
        None => Inseparability::Yes,
    }
}

/// Like [`inseparable`], with `chooser` selecting among valid separators.
/// Separators entailed by `t` are preferred over those entailed by `h`.
pub fn find_separator(t: &TBox, h: &TBox, a: &ABox, lang: Lang, chooser: &mut dyn Chooser) -> Option<Separator> {
    let sig = t.signature().union(&a.signature());
    let mt = Model::build(t, a).restricted(&sig);
    let mh = Model::build(h, a).restricted(&sig);
    match lang {
        Lang::Aq => aq_separator(&mt, &mh, chooser),
        Lang::Iq => iq_separator(&mt, &mh, chooser),
        Lang::Cqr => iq_separator(&mt, &mh, chooser).or_else(|| ri_separator(t, h, &mt, &mh, &sig)),
    }
}

fn pick(pos: Vec<Query>, neg: Vec<Query>, chooser: &mut dyn Chooser) -> Option<Separator> {
    if !pos.is_empty() {
        let i = chooser.pick(pos.len());
        return Some(Separator { query: pos[i].clone(), positive: true });
    }
    if !neg.is_empty() {
        let i = chooser.pick(neg.len());
        return Some(Separator { query: neg[i].clone(), positive: false });
    }
    None
}

fn named_differences(x: &Model, y: &Model, roles_only: bool, as_iq: bool) -> Vec<Query> {
    let mut out = Vec::new();
    for (a, va) in x.individual_nodes() {
        let vb = y.node_of(a).expect("same ABox");
        if !roles_only {
            for c in x.labels[va].difference(&y.labels[vb]) {
                out.push(Query::Aq(Assertion::concept(c.clone(), a.clone())));
            }
        }
        for (b, wa) in x.individual_nodes() {
            let wb = y.node_of(b).expect("same ABox");
            for r in x.roles_between(va, wa).difference(&y.roles_between(vb, wb)) {
                out.push(if as_iq {
                    Query::IqRole { role: r.clone(), from: a.clone(), to: b.clone() }
                } else {
                    Query::Aq(Assertion::role(r.clone(), a.clone(), b.clone()))
                });
            }
        }
    }
    out
}

fn aq_separator(mt: &Model, mh: &Model, chooser: &mut dyn Chooser) -> Option<Separator> {
    pick(named_differences(mt, mh, false, false), named_differences(mh, mt, false, false), chooser)
}

fn iq_separator(mt: &Model, mh: &Model, chooser: &mut dyn Chooser) -> Option<Separator> {
    if let Some(s) = pick(named_differences(mt, mh, true, true), named_differences(mh, mt, true, true), chooser) {
        return Some(s);
    }
    for (left, right, positive) in [(mt, mh, true), (mh, mt, false)] {
        let table = SimulationTable::compute(left, right);
        let failing: Vec<(Name, usize, usize)> = left
            .individual_nodes()
            .map(|(a, v)| (a.clone(), v, right.node_of(a).expect("same ABox")))
            .filter(|(_, v, w)| !table.simulates(*v, *w))
            .collect();
        if failing.is_empty() {
            continue;
        }
        let (a, v, w) = failing[chooser.pick(failing.len())].clone();
        let c = table.distinguishing_concept(v, w, chooser).expect("pair not simulated");
        return Some(Separator { query: Query::iq(c, a), positive });
    }
    None
}

/// For IQ-inseparable KBs whose role hierarchies differ: a CQ of the form
/// `path(a,x) ∧ r(x,y) ∧ s(x,y)` entailed by exactly one side.
fn ri_separator(t: &TBox, h: &TBox, mt: &Model, mh: &Model, sig: &Signature) -> Option<Separator> {
    let (rt, rh) = (RoleHierarchy::of(t), RoleHierarchy::of(h));
    for (x, y, xr, yr, positive) in [(mt, mh, &rt, &rh, true), (mh, mt, &rh, &rt, false)] {
        for (r, s) in xr.pairs() {
            if yr.entails(&r, &s) || !sig.roles.contains(&r) || !sig.roles.contains(&s) {
                continue;
            }
            for q in witness_paths(x, &r, &s) {
                if answers_cq(x, &q).unwrap_or(false) && !answers_cq(y, &q).unwrap_or(true) {
                    return Some(Separator { query: Query::Cq(q), positive });
                }
            }
        }
    }
    None
}

/// Shortest paths in the model from an individual to an `r ∧ s` edge, as rooted CQs.
fn witness_paths(m: &Model, r: &Name, s: &Name) -> Vec<Cq> {
    let mut out = Vec::new();
    for (a, v) in m.individual_nodes() {
        let mut seen = BTreeSet::from([v]);
        let mut queue = VecDeque::from([(v, Vec::<(Name, usize)>::new())]);
        while let Some((u, path)) = queue.pop_front() {
            for (w, roles) in &m.edges[u] {
                if roles.contains(r) && roles.contains(s) {
                    out.push(path_query(a, &path, r, s, m.is_named(*w).then(|| (*w, m))));
                }
                if seen.insert(*w) && !m.is_named(*w) {
                    let role = roles.iter().next().unwrap().clone();
                    let mut p = path.clone();
                    p.push((role, *w));
                    queue.push_back((*w, p));
                }
            }
        }
    }
    out
}

fn path_query(a: &Name, path: &[(Name, usize)], r: &Name, s: &Name, named_end: Option<(usize, &Model)>) -> Cq {
    let mut atoms = Vec::new();
    let mut vars = Vec::new();
    let mut answer = vec![a.clone()];
    let mut prev = a.clone();
    for (i, (role, _)) in path.iter().enumerate() {
        let x = Name::from(format!("p{i}"));
        atoms.push(Assertion::role(role.clone(), prev.clone(), x.clone()));
        vars.push(x.clone());
        prev = x;
    }
    let end = match named_end {
        Some((w, m)) => {
            let (b, _) = m.individual_nodes().find(|(_, v)| *v == w).unwrap();
            if !answer.contains(b) {
                answer.push(b.clone());
            }
            b.clone()
        }
        None => {
            let y = Name::from("p_end");
            vars.push(y.clone());
            y
        }
    };
    atoms.push(Assertion::role(r.clone(), prev.clone(), end.clone()));
    atoms.push(Assertion::role(s.clone(), prev, end));
    Cq::new(answer, vars, atoms).expect("well-formed path query")
}
