//! Rooted-CQ learner: rooted CQ counterexamples are normalized by membership
//! queries and turned into IQs, then handled by the IQ loop.

use super::iq::{self, IqOptions};
use super::{Roles, Run};
use crate::error::{Error, Result};
use crate::reasoner::{answers_in, Lang, Model};
use crate::syntax::{Assertion, Concept, ConceptTree, Cq, Name, Query, TBox};
use crate::teacher::Oracle;
use std::collections::{BTreeMap, BTreeSet};

/// Checks `(T, A0) ⊨ q` by membership query and `(H, A0) ⊭ q` locally.
struct Checker<'o> {
    oracle: &'o mut dyn Oracle,
    hyp_model: Model,
}

impl Checker<'_> {
    fn positive_counterexample(&mut self, q: &Cq) -> Result<bool> {
        let q = Query::Cq(q.clone());
        if answers_in(&self.hyp_model, &q)? {
            return Ok(false);
        }
        let a0 = self.oracle.fixed_abox().clone();
        self.oracle.membership(&a0, &q)
    }
}

/// Replaces variables by individuals of the fixed ABox while the query stays a positive counterexample.
fn individual_saturate(ck: &mut Checker<'_>, mut q: Cq) -> Result<(Cq, bool)> {
    let inds: Vec<Name> = ck.oracle.fixed_abox().ind().iter().cloned().collect();
    let mut changed = false;
    for x in q.vars.clone() {
        for a in &inds {
            let cand = q.substitute(&x, a, true);
            if ck.positive_counterexample(&cand)? {
                q = cand;
                changed = true;
                break;
            }
        }
    }
    Ok((q, changed))
}

/// Identifies pairs of variables while the query stays a positive counterexample.
fn merge_variables(ck: &mut Checker<'_>, mut q: Cq) -> Result<(Cq, bool)> {
    let mut changed = false;
    'restart: loop {
        let vars: Vec<Name> = q.vars.iter().cloned().collect();
        for x in &vars {
            for y in vars.iter().filter(|y| *y != x) {
                let cand = q.substitute(x, y, false);
                if ck.positive_counterexample(&cand)? {
                    q = cand;
                    changed = true;
                    continue 'restart;
                }
            }
        }
        return Ok((q, changed));
    }
}

/// Replaces role atoms by atoms over strictly smaller roles while the query stays a positive counterexample.
fn role_saturate(ck: &mut Checker<'_>, mut q: Cq, roles: &Roles) -> Result<(Cq, bool)> {
    let mut changed = false;
    'restart: loop {
        let atoms: Vec<Assertion> = q.atoms.iter().cloned().collect();
        for atom in &atoms {
            let Assertion::Role { role, from, to } = atom else { continue };
            for r in roles.below(role) {
                let mut cand = q.clone();
                cand.atoms.remove(atom);
                cand.atoms.insert(Assertion::role(r, from.clone(), to.clone()));
                if ck.positive_counterexample(&cand)? {
                    q = cand;
                    changed = true;
                    continue 'restart;
                }
            }
        }
        return Ok((q, changed));
    }
}

/// Applies individual saturation, variable merging and role saturation until none applies.
pub fn normalize(oracle: &mut dyn Oracle, q: &Cq, h: &TBox, roles: &Roles) -> Result<Cq> {
    let hyp_model = Model::build(h, oracle.fixed_abox());
    let mut ck = Checker { oracle, hyp_model };
    let renamed: BTreeSet<Assertion> = q
        .atoms
        .iter()
        .map(|a| match a {
            Assertion::Role { role, from, to } => Assertion::role(roles.rep(role).clone(), from.clone(), to.clone()),
            other => other.clone(),
        })
        .collect();
    let mut q = Cq { atoms: renamed, ..q.clone() };
    if !ck.positive_counterexample(&q)? {
        return Err(Error::Contract(format!("{} is not a positive counterexample", Query::Cq(q))));
    }
    loop {
        let (q1, c1) = individual_saturate(&mut ck, q)?;
        let (q2, c2) = merge_variables(&mut ck, q1)?;
        let (q3, c3) = role_saturate(&mut ck, q2, roles)?;
        q = q3;
        if !(c1 || c2 || c3) {
            return Ok(q);
        }
    }
}

/// The concept read off the variables reachable from `x`.
pub fn concept_at_var(q: &Cq, x: &Name) -> Result<Concept> {
    let mut index: BTreeMap<Name, usize> = BTreeMap::new();
    let mut t = ConceptTree { labels: Vec::new(), children: Vec::new() };
    let mut stack = vec![x.clone()];
    index.insert(x.clone(), t.push_node());
    while let Some(v) = stack.pop() {
        let i = index[&v];
        for atom in &q.atoms {
            match atom {
                Assertion::Concept { concept, ind } if *ind == v => {
                    t.labels[i].insert(concept.clone());
                }
                Assertion::Role { role, from, to } if *from == v => {
                    if !q.is_var(to) {
                        return Err(Error::Structure(format!("variable `{v}` has an edge to individual `{to}`")));
                    }
                    if index.contains_key(to) {
                        return Err(Error::Structure(format!("part of the query below `{x}` is not a tree")));
                    }
                    let j = t.push_node();
                    index.insert(to.clone(), j);
                    t.children[i].push((role.clone(), j));
                    stack.push(to.clone());
                }
                _ => {}
            }
        }
    }
    t.validate()?;
    Ok(t.concept_at(0))
}

/// Turns a rooted CQ positive counterexample into an IQ positive counterexample.
pub fn cq_to_iq(oracle: &mut dyn Oracle, q: &Cq, h: &TBox, roles: &Roles) -> Result<Query> {
    if !q.is_rooted() {
        return Err(Error::Unsupported("counterexample CQ is not rooted".into()));
    }
    let q = normalize(oracle, q, h, roles)?;
    let a0 = oracle.fixed_abox().clone();
    let mh = Model::build(h, &a0);
    for atom in &q.atoms {
        if let Assertion::Concept { concept, ind } = atom {
            let iq = Query::iq(Concept::Name(concept.clone()), ind.clone());
            if !q.is_var(ind) && !answers_in(&mh, &iq)? {
                return Ok(iq);
            }
        }
    }
    // Edges from individuals into variables first, then every combination.
    let mut candidates: Vec<(Name, Name, Name)> = q
        .atoms
        .iter()
        .filter_map(|a| match a {
            Assertion::Role { role, from, to } if !q.is_var(from) && q.is_var(to) => {
                Some((role.clone(), from.clone(), to.clone()))
            }
            _ => None,
        })
        .collect();
    let sig = oracle.signature().clone();
    for x in &q.vars {
        for r in &sig.roles {
            for a in a0.ind() {
                candidates.push((r.clone(), a.clone(), x.clone()));
            }
        }
    }
    for (r, a, x) in candidates {
        let iq = Query::iq(Concept::exists(r, concept_at_var(&q, &x)?), a);
        if !answers_in(&mh, &iq)? && oracle.membership(&a0, &iq)? {
            return Ok(iq);
        }
    }
    Err(Error::Contract("no IQ counterexample found in the normalized CQ".into()))
}

/// Learns a hypothesis that is rooted-CQ-inseparable from the target over the fixed ABox.
pub fn learn(oracle: &mut dyn Oracle, opts: &IqOptions) -> Result<Run> {
    if oracle.lang() != Lang::Cqr {
        return Err(Error::Config(format!("CQ learner needs a CQr teacher, got {}", oracle.lang())));
    }
    let mut roles: Option<Roles> = None;
    iq::learn_with(oracle, opts, &mut |oracle, h, q| {
        let Query::Cq(cq) = q else { return Ok(q) };
        let roles = roles.get_or_insert_with(|| Roles::new(h, oracle.signature()));
        cq_to_iq(oracle, &cq, h, roles)
    })
}
