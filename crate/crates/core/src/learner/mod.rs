//! Exact learners for AQ-, IQ- and rooted-CQ-inseparable terminologies.

pub mod aq;
pub mod cqr;
pub mod iq;

use crate::error::Result;
use crate::reasoner::{Lang, RoleHierarchy};
use crate::syntax::{ABox, Ci, Concept, Name, Query, Signature, TBox};
use std::collections::BTreeMap;
use crate::teacher::{Counters, Oracle};
use serde::Serialize;

/// What one round of a learning loop did.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Iteration {
    pub index: usize,
    pub counterexample: Option<String>,
    /// CIs added in this round, as text.
    pub added: Vec<String>,
    /// Individual counts after each Minimize call of the AQ tree-shaping step.
    pub minimized_individuals: Vec<usize>,
    /// Right-hand-side sizes of the essential CIs produced in this round.
    pub essential_sizes: Vec<usize>,
    /// Tree node counts `(before, after)` for each replaced CI.
    pub replacements: Vec<(usize, usize)>,
    /// Rooted CQ counterexamples converted to IQs in this round.
    pub conversions: usize,
    pub hypothesis_size: usize,
    pub counters: Counters,
}

/// A positive example a learner derived, kept so the run can be replayed without a teacher.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// A tree-shaped ABox whose root gets `name` under the target; yields `C_A ⊑ name`.
    /// `origin` maps each of its individuals to the one it was copied from.
    TreeShape { abox: ABox, root: Name, name: Name, origin: BTreeMap<Name, Name> },
    /// A counterexample returned by the teacher.
    Counterexample { abox: ABox, query: Query },
    /// The CI `name ⊑ concept` became the hypothesis entry for `name`.
    Definition { name: Name, concept: Concept },
}

/// Runs the learner for `lang` with default options.
pub fn learn(oracle: &mut dyn Oracle, lang: Lang) -> Result<Run> {
    match lang {
        Lang::Aq => aq::learn(oracle, &aq::AqOptions::default()),
        Lang::Iq => iq::learn(oracle, &iq::IqOptions::default()),
        Lang::Cqr => cqr::learn(oracle, &iq::IqOptions::default()),
    }
}

/// A finished run.
#[derive(Clone, Debug)]
pub struct Run {
    pub hypothesis: TBox,
    pub iterations: Vec<Iteration>,
    pub counters: Counters,
    pub evidence: Vec<Evidence>,
}

impl Run {
    pub fn largest_counterexample(&self) -> u64 {
        self.counters.largest_counterexample
    }
}

/// Safety net against non-termination; hitting it is a defect.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_iterations: usize,
    pub max_inner_steps: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_iterations: 2_000, max_inner_steps: 10_000 }
    }
}

pub(crate) fn describe(q: &Query) -> String {
    q.to_text().trim_start_matches("Q: ").to_string()
}

pub(crate) fn ci_text(ci: &Ci) -> String {
    ci.to_string()
}

/// Role names modulo mutual inclusion, each class named by its least member.
#[derive(Clone, Debug)]
pub struct Roles {
    hierarchy: RoleHierarchy,
    reps: BTreeMap<Name, Name>,
    names: Vec<Name>,
}

impl Roles {
    pub fn new(h: &TBox, sig: &Signature) -> Roles {
        let hierarchy = RoleHierarchy::of(h);
        let mut reps = BTreeMap::new();
        for r in &sig.roles {
            let rep = sig
                .roles
                .iter()
                .find(|s| hierarchy.entails(r, s) && hierarchy.entails(s, r))
                .unwrap_or(r);
            reps.insert(r.clone(), rep.clone());
        }
        let names = sig.roles.iter().filter(|r| reps[*r] == **r).cloned().collect();
        Roles { hierarchy, reps, names }
    }

    pub fn rep<'a>(&'a self, r: &'a Name) -> &'a Name {
        self.reps.get(r).unwrap_or(r)
    }

    pub fn renaming(&self) -> &BTreeMap<Name, Name> {
        &self.reps
    }

    /// Representatives strictly below `r`.
    pub fn below(&self, r: &Name) -> Vec<Name> {
        self.names
            .iter()
            .filter(|s| *s != r && self.hierarchy.entails(s, r) && !self.hierarchy.entails(r, s))
            .cloned()
            .collect()
    }

    pub fn entails(&self, r: &Name, s: &Name) -> bool {
        self.hierarchy.entails(r, s)
    }
}
