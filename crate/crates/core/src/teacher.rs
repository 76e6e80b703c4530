//! Simulated teachers: membership and inseparability queries against a hidden target.

use crate::error::{Error, Result};
use crate::reasoner::{self, FirstChoice, Lang, Model, RandomChoice, Separator};
use crate::syntax::{Assertion, ABox, Concept, ConceptTree, Cq, Name, Query, Signature, TBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// A labelled data point: an ABox and a query over it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Example {
    pub abox: ABox,
    pub query: Query,
}

impl Example {
    pub fn size(&self) -> usize {
        self.abox.size() + self.query.size()
    }
}

/// Which counterexample an inseparability query hands out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    MinimalDeterministic,
    SeedRandomized(u64),
    /// In CQ mode, blows IQ counterexamples up into CQs with duplicated branches.
    AdversarialCq,
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Policy> {
        match s {
            "minimal" | "minimal-deterministic" => Ok(Policy::MinimalDeterministic),
            "randomized" | "seed-randomized" => Ok(Policy::SeedRandomized(0)),
            "adversarial" | "adversarial-cq" => Ok(Policy::AdversarialCq),
            other => Err(Error::Config(format!("unknown oracle policy `{other}`"))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::MinimalDeterministic => f.write_str("minimal-deterministic"),
            Policy::SeedRandomized(s) => write!(f, "seed-randomized({s})"),
            Policy::AdversarialCq => f.write_str("adversarial-cq"),
        }
    }
}

/// Syntactic fragment of targets and hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    Elh,
    /// Only concept names on the right.
    ElhLhs,
    /// Only concept names on the left.
    ElhRhs,
}

impl Fragment {
    pub fn admits(&self, t: &TBox) -> bool {
        match self {
            Fragment::Elh => true,
            Fragment::ElhLhs => t.cis().iter().all(|ci| ci.rhs.is_name()),
            Fragment::ElhRhs => t.cis().iter().all(|ci| ci.lhs.is_name()),
        }
    }
}

/// The learning setting shared by teacher and learner.
#[derive(Clone, Debug)]
pub struct Framework {
    pub fragment: Fragment,
    pub fixed_abox: ABox,
    pub lang: Lang,
    pub signature: Signature,
}

/// Query counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Counters {
    pub mq_count: u64,
    pub eq_count: u64,
    pub mq_input_size_sum: u64,
    pub eq_input_size_sum: u64,
    pub largest_counterexample: u64,
}

impl Counters {
    pub fn total_input_size(&self) -> u64 {
        self.mq_input_size_sum + self.eq_input_size_sum
    }

    pub fn calls(&self) -> u64 {
        self.mq_count + self.eq_count
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptEntry {
    pub kind: &'static str,
    pub input_size: u64,
    pub answer: String,
    pub running_totals: Counters,
}

/// What a learner may ask.
pub trait Oracle {
    fn framework(&self) -> &Framework;

    fn membership(&mut self, abox: &ABox, q: &Query) -> Result<bool>;

    /// `None` means inseparable; otherwise an example the target entails and `h` does not.
    fn equivalence(&mut self, h: &TBox) -> Result<Option<Example>>;

    fn signature(&self) -> &Signature {
        &self.framework().signature
    }

    fn fixed_abox(&self) -> &ABox {
        &self.framework().fixed_abox
    }

    fn lang(&self) -> Lang {
        self.framework().lang
    }

    fn counters(&self) -> Counters;
}

/// A teacher holding the target, with accounting and a transcript.
pub struct Session {
    target: TBox,
    framework: Framework,
    policy: Policy,
    rng: ChaCha8Rng,
    counters: Counters,
    transcript: Vec<TranscriptEntry>,
    budget: Option<u64>,
    extra_aboxes: Vec<ABox>,
    fixed_model: Model,
    last_hypothesis: Option<TBox>,
}

impl Session {
    pub fn new(target: TBox, fixed_abox: ABox, lang: Lang, policy: Policy) -> Result<Session> {
        target.check_terminology()?;
        let seed = match policy {
            Policy::SeedRandomized(s) => s,
            _ => 0,
        };
        let fixed_model = Model::build(&target, &fixed_abox);
        Ok(Session {
            framework: Framework {
                fragment: Fragment::Elh,
                signature: target.signature(),
                fixed_abox,
                lang,
            },
            target,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: Counters::default(),
            transcript: Vec::new(),
            budget: None,
            extra_aboxes: Vec::new(),
            fixed_model,
            last_hypothesis: None,
        })
    }

    /// Caps the number of oracle calls; exceeding it raises a budget error.
    pub fn with_budget(mut self, calls: u64) -> Self {
        self.budget = Some(calls);
        self
    }

    /// Inseparability is additionally checked over these ABoxes, in order, after the fixed one.
    pub fn with_extra_aboxes(mut self, aboxes: Vec<ABox>) -> Self {
        self.extra_aboxes = aboxes;
        self
    }

    pub fn with_fragment(mut self, fragment: Fragment) -> Result<Self> {
        if !fragment.admits(&self.target) {
            return Err(Error::Config(format!("target is outside the fragment {fragment:?}")));
        }
        self.framework.fragment = fragment;
        Ok(self)
    }

    /// The hypothesis of the most recent inseparability query.
    pub fn last_hypothesis(&self) -> Option<&TBox> {
        self.last_hypothesis.as_ref()
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn transcript_jsonl(&self) -> String {
        self.transcript
            .iter()
            .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
            .collect()
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// For test harnesses and the CLI's independent verification only.
    pub fn target(&self) -> &TBox {
        &self.target
    }

    fn charge(&mut self) -> Result<()> {
        if let Some(b) = self.budget {
            if self.counters.calls() >= b {
                return Err(Error::Budget(format!("more than {b} oracle calls")));
            }
        }
        Ok(())
    }

    fn log(&mut self, kind: &'static str, input_size: u64, answer: String) {
        log::debug!("{kind} (size {input_size}) -> {answer}");
        self.transcript.push(TranscriptEntry {
            kind,
            input_size,
            answer,
            running_totals: self.counters.clone(),
        });
    }

    fn check_signature(&self, abox: &ABox, q: &Query) -> Result<()> {
        let allowed = self.framework.signature.union(&abox.signature());
        if !q.signature().is_subset(&allowed) {
            return Err(Error::Signature(format!("{q} uses names outside Σ_T ∪ Σ_A")));
        }
        Ok(())
    }

    fn separator_on(&mut self, h: &TBox, abox: &ABox, lang: Lang) -> Option<Separator> {
        match self.policy {
            Policy::SeedRandomized(_) => {
                reasoner::find_separator(&self.target, h, abox, lang, &mut RandomChoice(&mut self.rng))
            }
            _ => reasoner::find_separator(&self.target, h, abox, lang, &mut FirstChoice),
        }
    }

    /// Shapes a separator into the framework's query language according to the policy.
    fn shape(&mut self, abox: &ABox, q: Query) -> Query {
        let q = match (self.policy, &q) {
            (Policy::SeedRandomized(_), Query::Iq { concept, ind }) if self.rng.gen_bool(0.5) => {
                // Pad with names the target already derives at the root.
                let m = Model::build(&self.target, abox);
                let v = m.node_of(ind).expect("individual of the ABox");
                let extra: Vec<Concept> = m.labels[v]
                    .iter()
                    .filter(|n| self.framework.signature.concepts.contains(*n) && self.rng.gen_bool(0.5))
                    .cloned()
                    .map(Concept::Name)
                    .collect();
                Query::iq(Concept::and(std::iter::once(concept.clone()).chain(extra)), ind.clone())
            }
            _ => q,
        };
        if self.framework.lang != Lang::Cqr {
            return q;
        }
        match q {
            Query::Cq(_) => q,
            Query::Iq { concept, ind } => {
                let cq = if self.policy == Policy::AdversarialCq {
                    duplicated_cq(&concept, &ind)
                } else {
                    tree_cq(&concept, &ind)
                };
                Query::Cq(cq)
            }
            Query::IqRole { role, from, to } | Query::Aq(Assertion::Role { role, from, to }) => {
                let answer = if from == to { vec![from.clone()] } else { vec![from.clone(), to.clone()] };
                Query::Cq(Cq::new(answer, [], [Assertion::Role { role, from, to }]).expect("atom"))
            }
            Query::Aq(Assertion::Concept { concept, ind }) => {
                Query::Cq(Cq::new(vec![ind.clone()], [], [Assertion::Concept { concept, ind }]).expect("atom"))
            }
        }
    }
}

/// The tree-shaped CQ of `C(a)`.
pub fn tree_cq(c: &Concept, a: &Name) -> Cq {
    let t = ConceptTree::of_concept(c);
    let term = |v: usize| if v == 0 { a.clone() } else { Name::from(format!("x{v}")) };
    let mut atoms = Vec::new();
    for v in 0..t.len() {
        atoms.extend(t.labels[v].iter().map(|l| Assertion::concept(l.clone(), term(v))));
        atoms.extend(t.children[v].iter().map(|(r, w)| Assertion::role(r.clone(), term(v), term(*w))));
    }
    Cq::new(vec![a.clone()], (1..t.len()).map(term), atoms).expect("tree query")
}

/// CQ for `C(a)` in which a tree node whose parent has `k` copies gets `k + 1`
/// copies, copy `i` of the parent linking to copies `i - 1` and `i`.
pub fn duplicated_cq(c: &Concept, a: &Name) -> Cq {
    let t = ConceptTree::of_concept(c);
    let mut copies: Vec<Vec<Name>> = vec![Vec::new(); t.len()];
    copies[0] = vec![a.clone()];
    let mut atoms = Vec::new();
    let mut vars = Vec::new();
    let mut fresh = 0;
    for v in t.bfs() {
        for l in &t.labels[v] {
            atoms.extend(copies[v].iter().map(|x| Assertion::concept(l.clone(), x.clone())));
        }
        for (r, w) in &t.children[v] {
            let k = copies[v].len();
            let mine: Vec<Name> = (0..=k)
                .map(|_| {
                    fresh += 1;
                    Name::from(format!("x{fresh}"))
                })
                .collect();
            for (i, p) in copies[v].iter().enumerate() {
                atoms.push(Assertion::role(r.clone(), p.clone(), mine[i].clone()));
                atoms.push(Assertion::role(r.clone(), p.clone(), mine[i + 1].clone()));
            }
            vars.extend(mine.iter().cloned());
            copies[*w] = mine;
        }
    }
    Cq::new(vec![a.clone()], vars, atoms).expect("duplicated query")
}

impl Oracle for Session {
    fn framework(&self) -> &Framework {
        &self.framework
    }

    fn counters(&self) -> Counters {
        self.counters.clone()
    }

    fn membership(&mut self, abox: &ABox, q: &Query) -> Result<bool> {
        self.charge()?;
        self.check_signature(abox, q)?;
        let answer = if *abox == self.framework.fixed_abox {
            reasoner::answers_in(&self.fixed_model, q)?
        } else {
            reasoner::answers(&self.target, abox, q)?
        };
        let size = (abox.size() + q.size()) as u64;
        self.counters.mq_count += 1;
        self.counters.mq_input_size_sum += size;
        self.log("MQ", size, answer.to_string());
        Ok(answer)
    }

    fn equivalence(&mut self, h: &TBox) -> Result<Option<Example>> {
        self.last_hypothesis = Some(h.clone());
        self.charge()?;
        let size = h.size() as u64;
        self.counters.eq_count += 1;
        self.counters.eq_input_size_sum += size;
        let lang = self.framework.lang;
        let mut aboxes = vec![self.framework.fixed_abox.clone()];
        aboxes.extend(self.extra_aboxes.iter().cloned());
        for abox in aboxes {
            let Some(sep) = self.separator_on(h, &abox, lang) else { continue };
            if !sep.positive {
                return Err(Error::Contract(format!(
                    "hypothesis entails {} which the target does not",
                    sep.query
                )));
            }
            let query = self.shape(&abox, sep.query);
            let t_says = reasoner::answers(&self.target, &abox, &query)?;
            let h_says = reasoner::answers(h, &abox, &query)?;
            assert!(t_says && !h_says, "teacher produced an invalid counterexample {query}");
            let ex = Example { abox, query };
            self.counters.largest_counterexample = self.counters.largest_counterexample.max(ex.size() as u64);
            self.log("EQ", size, ex.query.to_text());
            return Ok(Some(ex));
        }
        self.log("EQ", size, "yes".into());
        Ok(None)
    }
}

/// Labels an example against `target`.
pub fn label(target: &TBox, ex: &Example) -> Result<bool> {
    reasoner::answers(target, &ex.abox, &ex.query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_abox, parse_concept, parse_query, parse_tbox};

    fn session(t: &str, a: &str, lang: Lang, policy: Policy) -> Session {
        Session::new(parse_tbox(t).unwrap(), parse_abox(a).unwrap(), lang, policy).unwrap()
    }

    #[test]
    fn membership_answers_and_counts() {
        let mut s = session("CI: B [= A", "A: B(b)", Lang::Aq, Policy::MinimalDeterministic);
        let x = parse_abox("A: B(x)").unwrap();
        assert!(s.membership(&x, &parse_query("AQ A(x)").unwrap()).unwrap());
        assert!(!s.membership(&x, &parse_query("AQ B(y)").unwrap()).unwrap());
        assert_eq!(s.counters().mq_count, 2);
        assert_eq!(s.counters().mq_input_size_sum, 16);
        let bad = s.membership(&x, &parse_query("AQ Z(x)").unwrap());
        assert!(matches!(bad, Err(Error::Signature(_))));
    }

    #[test]
    fn branching_cq_membership_and_counterexample() {
        let t = "CI: A [= some r.some s.top";
        let mut s = session(t, "A: A(a)", Lang::Cqr, Policy::AdversarialCq);
        let a = parse_abox("A: A(a)").unwrap();
        assert!(s.membership(&a, &parse_query("IQ some r.some s.top (a)").unwrap()).unwrap());
        let h = parse_tbox("CI: A [= some r.top").unwrap();
        let ex = s.equivalence(&h).unwrap().unwrap();
        let Query::Cq(q) = &ex.query else { panic!("{:?}", ex.query) };
        assert_eq!(q.atoms.len(), 6);
        assert_eq!(q.vars.len(), 5);
    }

    #[test]
    fn aq_counterexample_and_yes() {
        let mut s = session("CI: B [= A", "A: B(b)", Lang::Aq, Policy::MinimalDeterministic);
        let ex = s.equivalence(&TBox::new()).unwrap().unwrap();
        assert_eq!(ex.query.to_text(), "Q: AQ A(b)");
        let t = s.target().clone();
        assert!(s.equivalence(&t).unwrap().is_none());
        let total: u64 = s.transcript().iter().map(|e| e.input_size).sum();
        assert_eq!(total, s.counters().total_input_size());
    }

    #[test]
    fn budget_is_enforced() {
        let mut s = session("CI: B [= A", "A: B(b)", Lang::Aq, Policy::MinimalDeterministic).with_budget(1);
        s.equivalence(&TBox::new()).unwrap();
        assert!(matches!(s.equivalence(&TBox::new()), Err(Error::Budget(_))));
        assert_eq!(s.last_hypothesis(), Some(&TBox::new()));
    }

    #[test]
    fn duplicated_cq_shape() {
        let c = parse_concept("some r.some s.top").unwrap();
        let q = duplicated_cq(&c, &"a".into());
        let text = Query::Cq(q).to_text();
        assert_eq!(text, "Q: CQ a ; exists x1 x2 x3 x4 x5 ; r(a,x1), r(a,x2), s(x1,x3), s(x1,x4), s(x2,x4), s(x2,x5)");
    }

    #[test]
    fn randomized_counterexamples_are_valid() {
        for seed in 0..20 {
            let mut s = session(
                "CI: A [= some r.(B and some s.C)\nCI: B [= D",
                "A: A(a)\nA: B(b)",
                Lang::Iq,
                Policy::SeedRandomized(seed),
            );
            let ex = s.equivalence(&TBox::new()).unwrap().unwrap();
            assert!(label(s.target(), &ex).unwrap());
        }
    }
}
