//! PAC learning: example distributions, the EX oracle, exact-to-PAC conversion,
//! the σ-path fixture that separates PAC from exact learning, and shattering.

use crate::error::{Error, Result};
use crate::gen;
use crate::learner::{self, Run};
use crate::reasoner::{answers_in, Lang, Model};
use crate::syntax::{parse_abox, parse_query, ABox, Assertion, Ci, Concept, Cq, Name, Query, TBox};
use crate::teacher::{tree_cq, Counters, Example, Framework, Oracle, Session};
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::f64::consts::LN_2;

/// Number of EX draws replacing the `stage`-th inseparability query (stages count from 1).
pub fn sample_bound(eps: f64, delta: f64, stage: u64) -> u64 {
    let m = ((1.0 / delta).ln() + stage as f64 * LN_2) / eps;
    (m.ceil() as u64).max(1)
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// A finite-support distribution over examples.
#[derive(Clone, Debug)]
pub struct Distribution {
    examples: Vec<Example>,
    weights: Vec<f64>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ExampleFile {
    abox: String,
    query: String,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    examples: Vec<ExampleFile>,
    weights: Vec<f64>,
    seed: u64,
}

impl Distribution {
    pub fn new(examples: Vec<Example>, weights: Vec<f64>, seed: u64) -> Result<Distribution> {
        if examples.is_empty() {
            return Err(Error::Data("distribution with empty support".into()));
        }
        if examples.len() != weights.len() {
            return Err(Error::Data(format!("{} examples but {} weights", examples.len(), weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Data("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("weights sum to {total}, not 1")));
        }
        Ok(Distribution { examples, weights, seed })
    }

    pub fn uniform(examples: Vec<Example>, seed: u64) -> Result<Distribution> {
        let w = 1.0 / examples.len().max(1) as f64;
        let weights = vec![w; examples.len()];
        // Uniform weights can miss 1 by rounding; renormalize the last one.
        let mut d = Distribution { examples, weights, seed };
        if let Some(last) = d.weights.last_mut() {
            *last = 1.0 - w * (d.examples.len() - 1) as f64;
        }
        Distribution::new(d.examples, d.weights, d.seed)
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn to_json(&self) -> String {
        let file = DistributionFile {
            examples: self
                .examples
                .iter()
                .map(|e| ExampleFile { abox: e.abox.to_string(), query: e.query.to_text() })
                .collect(),
            weights: self.weights.clone(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&file).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Distribution> {
        let file: DistributionFile =
            serde_json::from_str(text).map_err(|e| Error::Data(format!("distribution file: {e}")))?;
        let examples = file
            .examples
            .iter()
            .map(|e| Ok(Example { abox: parse_abox(&e.abox)?, query: parse_query(&e.query)? }))
            .collect::<Result<Vec<_>>>()?;
        Distribution::new(examples, file.weights, file.seed)
    }
}

/// Models of one TBox, built once per distinct ABox.
struct ModelCache<'t> {
    tbox: &'t TBox,
    models: HashMap<ABox, Model>,
}

impl<'t> ModelCache<'t> {
    fn new(tbox: &'t TBox) -> Self {
        ModelCache { tbox, models: HashMap::new() }
    }

    fn answers(&mut self, e: &Example) -> Result<bool> {
        let tbox = self.tbox;
        let m = self.models.entry(e.abox.clone()).or_insert_with(|| Model::build(tbox, &e.abox));
        answers_in(m, &e.query)
    }
}

/// The EX oracle: draws examples from a distribution and labels them with the target.
pub struct ExOracle {
    dist: Distribution,
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
    labels: Vec<Option<bool>>,
    target: TBox,
    drawn: u64,
}

impl ExOracle {
    pub fn new(target: TBox, dist: Distribution) -> ExOracle {
        let index = WeightedIndex::new(&dist.weights).expect("validated weights");
        let rng = ChaCha8Rng::seed_from_u64(dist.seed);
        let labels = vec![None; dist.examples.len()];
        ExOracle { dist, index, rng, labels, target, drawn: 0 }
    }

    /// One classified example.
    pub fn draw(&mut self) -> Result<(Example, bool)> {
        let i = self.index.sample(&mut self.rng);
        self.drawn += 1;
        let e = &self.dist.examples[i];
        let label = match self.labels[i] {
            Some(l) => l,
            None => {
                let l = crate::reasoner::answers(&self.target, &e.abox, &e.query)?;
                self.labels[i] = Some(l);
                l
            }
        };
        Ok((e.clone(), label))
    }

    pub fn drawn(&self) -> u64 {
        self.drawn
    }
}

/// Probability mass of the support examples on which `h` and `t` disagree.
pub fn true_error(h: &TBox, t: &TBox, dist: &Distribution) -> Result<f64> {
    let (mut mh, mut mt) = (ModelCache::new(h), ModelCache::new(t));
    let mut err = 0.0;
    for (e, w) in dist.examples.iter().zip(&dist.weights) {
        if mh.answers(e)? != mt.answers(e)? {
            err += w;
        }
    }
    Ok(err)
}

/// Membership queries go to the session; each inseparability query is replaced by EX draws.
pub struct PacOracle<'s> {
    session: &'s mut Session,
    ex: ExOracle,
    eps: f64,
    delta: f64,
    schedule: Vec<u64>,
    eq_input: u64,
    largest: u64,
}

impl<'s> PacOracle<'s> {
    pub fn new(session: &'s mut Session, dist: Distribution, eps: f64, delta: f64) -> Result<Self> {
        check_unit("epsilon", eps)?;
        check_unit("delta", delta)?;
        let ex = ExOracle::new(session.target().clone(), dist);
        Ok(PacOracle { session, ex, eps, delta, schedule: Vec::new(), eq_input: 0, largest: 0 })
    }
}

impl Oracle for PacOracle<'_> {
    fn framework(&self) -> &Framework {
        self.session.framework()
    }

    fn membership(&mut self, abox: &ABox, q: &Query) -> Result<bool> {
        self.session.membership(abox, q)
    }

    fn equivalence(&mut self, h: &TBox) -> Result<Option<Example>> {
        let stage = self.schedule.len() as u64 + 1;
        let m = sample_bound(self.eps, self.delta, stage);
        self.schedule.push(m);
        self.eq_input += h.size() as u64;
        let mut hyp = ModelCache::new(h);
        for _ in 0..m {
            let (e, label) = self.ex.draw()?;
            if hyp.answers(&e)? == label {
                continue;
            }
            if !label {
                return Err(Error::Contract(format!("hypothesis entails {} which the target does not", e.query.to_text())));
            }
            self.largest = self.largest.max(e.size() as u64);
            return Ok(Some(e));
        }
        Ok(None)
    }

    fn counters(&self) -> Counters {
        let mut c = self.session.counters();
        c.eq_count = self.schedule.len() as u64;
        c.eq_input_size_sum = self.eq_input;
        c.largest_counterexample = self.largest;
        c
    }
}

/// Outcome of one PAC run.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PacReport {
    /// `m_i` for each stage that was reached.
    pub schedule: Vec<u64>,
    pub samples_used: u64,
    pub mq_count: u64,
    pub hypothesis_size: usize,
}

/// Runs the exact learner for the session's language with EX draws in place of
/// inseparability queries.
pub fn pac_from_exact(session: &mut Session, eps: f64, delta: f64, dist: Distribution) -> Result<(TBox, PacReport)> {
    let lang = session.lang();
    let mut oracle = PacOracle::new(session, dist, eps, delta)?;
    let run: Run = learner::learn(&mut oracle, lang)?;
    let report = PacReport {
        schedule: oracle.schedule.clone(),
        samples_used: oracle.ex.drawn(),
        mq_count: oracle.counters().mq_count,
        hypothesis_size: run.hypothesis.size(),
    };
    Ok((run.hypothesis, report))
}

/// A random concept that holds at model node `v`, reading labels and edges off the model.
fn walk<R: Rng>(m: &Model, v: usize, depth: usize, concepts: &BTreeSet<Name>, rng: &mut R) -> Concept {
    let mut parts: Vec<Concept> =
        m.labels[v].iter().filter(|n| concepts.contains(*n) && rng.gen_bool(0.5)).cloned().map(Concept::Name).collect();
    if depth > 0 && !m.edges[v].is_empty() && rng.gen_bool(0.6) {
        let edges: Vec<_> = m.edges[v].iter().collect();
        let (w, roles) = edges.choose(rng).expect("nonempty");
        let roles: Vec<&Name> = roles.iter().collect();
        let r = (*roles.choose(rng).expect("edges carry roles")).clone();
        parts.push(Concept::exists(r, walk(m, **w, depth - 1, concepts, rng)));
    }
    Concept::and(parts)
}

/// A random support of up to `size` distinct examples over `a0`, about half of them
/// positive for `t`, in the query language `lang`.
pub fn random_support(t: &TBox, a0: &ABox, lang: Lang, size: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = t.signature().union(&a0.signature());
    let concepts: Vec<Name> = sig.concepts.iter().cloned().collect();
    let roles: Vec<Name> = sig.roles.iter().cloned().collect();
    let inds: Vec<Name> = a0.ind().iter().cloned().collect();
    let model = Model::build(t, a0);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..50 * size {
        if out.len() >= size {
            break;
        }
        let a = inds.choose(&mut rng).expect("nonempty ABox").clone();
        let q = match lang {
            Lang::Aq => {
                if !roles.is_empty() && (concepts.is_empty() || rng.gen_bool(0.3)) {
                    let b = inds.choose(&mut rng).expect("nonempty").clone();
                    Query::Aq(Assertion::role(roles.choose(&mut rng).expect("nonempty").clone(), a, b))
                } else if let Some(c) = concepts.choose(&mut rng) {
                    Query::Aq(Assertion::concept(c.clone(), a))
                } else {
                    break;
                }
            }
            Lang::Iq | Lang::Cqr => {
                let c = if rng.gen_bool(0.5) {
                    let v = model.node_of(&a).expect("individual");
                    walk(&model, v, 3, &sig.concepts, &mut rng)
                } else {
                    gen::random_concept(&mut rng, &concepts, &roles, 2)
                };
                if c == Concept::Top {
                    continue;
                }
                if lang == Lang::Iq {
                    Query::iq(c, a)
                } else {
                    Query::Cq(tree_cq(&c.normalize(), &a))
                }
            }
        };
        if seen.insert(q.clone()) {
            out.push(Example { abox: a0.clone(), query: q });
        }
    }
    out
}

/// The target family `T_σ = {A ⊑ X_0 ⊓ ∃σ.M} ∪ T_0` over the fixed ABox `{A(a)}`,
/// where σ is a word over `{r, s}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaFixture {
    pub sigma: Vec<Name>,
}

fn x_name(i: usize) -> Name {
    Name::from(format!("X{i}"))
}

/// `∃w_1.∃w_2.….∃w_k.filler`.
pub fn path_concept(word: &[Name], filler: Concept) -> Concept {
    word.iter().rev().fold(filler, |c, r| Concept::exists(r.clone(), c))
}

impl SigmaFixture {
    pub fn new(sigma: Vec<Name>) -> Result<SigmaFixture> {
        if sigma.is_empty() || sigma.iter().any(|r| r.as_str() != "r" && r.as_str() != "s") {
            return Err(Error::Config("σ must be a nonempty word over {r, s}".into()));
        }
        Ok(SigmaFixture { sigma })
    }

    /// The `index`-th word of length `n` in lexicographic order (`r` < `s`).
    pub fn word(n: usize, index: u64) -> Vec<Name> {
        (0..n).map(|k| Name::from(if index >> (n - 1 - k) & 1 == 1 { "s" } else { "r" })).collect()
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> SigmaFixture {
        SigmaFixture { sigma: Self::word(n, rng.gen_range(0..1u64 << n)) }
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn abox() -> ABox {
        ABox::from_assertions([Assertion::concept("A", "a")])
    }

    /// The boolean query `∃x M(x)`.
    pub fn some_m() -> Query {
        let x = Name::from("x");
        Query::Cq(Cq::new(vec![], [x.clone()], [Assertion::concept("M", x)]).expect("well formed"))
    }

    /// `T_0` for paths of length `n`; with `word`, the definition of `A` also gets `∃word.M`.
    fn tbox(n: usize, word: Option<&[Name]>) -> TBox {
        let mut t = TBox::new();
        let mut a_rhs = vec![Concept::Name(x_name(0))];
        if let Some(w) = word {
            a_rhs.push(path_concept(w, Concept::name("M")));
        }
        t.add_ci(Ci::new(Concept::name("A"), Concept::and(a_rhs)));
        let m = Concept::name("M");
        t.add_ci(Ci::new(m.clone(), Concept::and([Concept::exists("r", m.clone()), Concept::exists("s", m)])));
        for i in 0..n {
            let next = Concept::Name(x_name(i + 1));
            t.add_ci(Ci::new(
                Concept::Name(x_name(i)),
                Concept::and([Concept::exists("r", next.clone()), Concept::exists("s", next)]),
            ));
        }
        t
    }

    pub fn t0(n: usize) -> TBox {
        Self::tbox(n, None)
    }

    pub fn target(&self) -> TBox {
        Self::tbox(self.n(), Some(&self.sigma))
    }

    pub fn with_word(n: usize, word: &[Name]) -> TBox {
        Self::tbox(n, Some(word))
    }
}

/// Nodes of the canonical model of `(T_τ, {A(a)})`, all elements of one kind being bisimilar.
#[derive(Clone, Copy)]
enum FixtureNode {
    Root,
    /// An element of the `X` tree at this depth.
    X(usize),
    /// The unlabelled element after this many steps along τ (fewer than `n`).
    Path(usize),
    M,
}

fn fixture_holds(tau: Option<&[Name]>, n: usize, v: FixtureNode, c: &Concept) -> bool {
    match c {
        Concept::Top => true,
        Concept::And(cs) => cs.iter().all(|c| fixture_holds(tau, n, v, c)),
        Concept::Name(a) => match v {
            FixtureNode::Root => a.as_str() == "A" || *a == x_name(0),
            FixtureNode::X(k) => *a == x_name(k),
            FixtureNode::Path(_) => false,
            FixtureNode::M => a.as_str() == "M",
        },
        Concept::Exists(r, d) => {
            if r.as_str() != "r" && r.as_str() != "s" {
                return false;
            }
            let mut succ = Vec::new();
            match v {
                FixtureNode::Root | FixtureNode::X(_) => {
                    let k = if let FixtureNode::X(k) = v { k } else { 0 };
                    if k < n {
                        succ.push(FixtureNode::X(k + 1));
                    }
                    if let (FixtureNode::Root, Some(t)) = (v, tau) {
                        if t[0] == *r {
                            succ.push(if n == 1 { FixtureNode::M } else { FixtureNode::Path(1) });
                        }
                    }
                }
                FixtureNode::Path(k) => {
                    let t = tau.expect("path nodes exist only with a word");
                    if t[k] == *r {
                        succ.push(if k + 1 == n { FixtureNode::M } else { FixtureNode::Path(k + 1) });
                    }
                }
                FixtureNode::M => succ.push(FixtureNode::M),
            }
            succ.into_iter().any(|w| fixture_holds(tau, n, w, d))
        }
    }
}

/// Whether `T_τ` (or `T_0` for `None`) entails the query over `{A(a)}`.
/// Only `∃x M(x)` and IQs at `a` occur in the fixture.
pub fn fixture_entails(tau: Option<&[Name]>, n: usize, q: &Query) -> Result<bool> {
    match q {
        Query::Cq(_) if *q == SigmaFixture::some_m() => Ok(tau.is_some()),
        Query::Iq { concept, ind } if ind.as_str() == "a" => Ok(fixture_holds(tau, n, FixtureNode::Root, concept)),
        Query::Aq(Assertion::Concept { concept, ind }) if ind.as_str() == "a" => {
            Ok(fixture_holds(tau, n, FixtureNode::Root, &Concept::Name(concept.clone())))
        }
        other => Err(Error::Unsupported(format!("{} is outside the fixture's query language", other.to_text()))),
    }
}

/// The first `n` roles of a branch of `c` that is longer than `n` or reaches `M`.
/// Such a branch can only be realised along σ.
fn deep_prefix(c: &Concept, n: usize, path: &mut Vec<Name>, steps: &mut u64) -> Option<Vec<Name>> {
    *steps += 1;
    match c {
        Concept::Name(a) if a.as_str() == "M" => Some(path.iter().take(n).cloned().collect()),
        Concept::Top | Concept::Name(_) => None,
        Concept::And(cs) => cs.iter().find_map(|d| deep_prefix(d, n, path, steps)),
        Concept::Exists(r, d) => {
            path.push(r.clone());
            let out = if path.len() > n { Some(path[..n].to_vec()) } else { deep_prefix(d, n, path, steps) };
            path.pop();
            out
        }
    }
}

fn query_prefix(q: &Query, n: usize, steps: &mut u64) -> Option<Vec<Name>> {
    match q {
        Query::Iq { concept, .. } => deep_prefix(concept, n, &mut Vec::new(), steps),
        _ => None,
    }
}

/// A labelled example of the fixture framework.
pub type Labelled = (Example, bool);

/// A random labelled sample of `size` examples for the fixture.
pub fn fixture_sample<R: Rng>(fx: &SigmaFixture, size: usize, rng: &mut R) -> Vec<Labelled> {
    let n = fx.n();
    let abox = SigmaFixture::abox();
    let random_word = |len: usize, rng: &mut R| -> Vec<Name> {
        (0..len).map(|_| Name::from(if rng.gen_bool(0.5) { "r" } else { "s" })).collect()
    };
    (0..size)
        .map(|_| {
            let query = match rng.gen_range(0..6) {
                0 => SigmaFixture::some_m(),
                1 | 2 => {
                    let mut w = if rng.gen_bool(0.25) { fx.sigma.clone() } else { random_word(n, rng) };
                    let extra = rng.gen_range(0..3);
                    w.extend(random_word(extra, rng));
                    let filler = if extra > 0 && rng.gen_bool(0.5) { Concept::Top } else { Concept::name("M") };
                    Query::iq(path_concept(&w, filler), "a")
                }
                3 | 4 => {
                    let k = rng.gen_range(0..=n);
                    let len = if rng.gen_bool(0.7) { k } else { k + 1 };
                    Query::iq(path_concept(&random_word(len, rng), Concept::Name(x_name(k))), "a")
                }
                _ => {
                    let names = ["A", "M", "X0", "X1"];
                    Query::iq(Concept::name(*names.choose(rng).expect("nonempty")), "a")
                }
            };
            let label = fixture_entails(Some(&fx.sigma), n, &query).expect("fixture query");
            (Example { abox: abox.clone(), query }, label)
        })
        .collect()
}

/// The polynomial-time learner for the fixture: `T_0` if that is consistent; otherwise
/// `T_σ` for the σ read off a positive example; otherwise `T_τ` for the first word τ
/// that no negative example rules out. Returns the hypothesis and a step count.
pub fn fixture_pac_learner(sample: &[Labelled], n: usize) -> Result<(TBox, u64)> {
    if n == 0 {
        return Err(Error::Config("path length must be positive".into()));
    }
    let mut steps = (n as u64) * 4;
    let mut sigma: Option<Vec<Name>> = None;
    let mut needs_word = false;
    for (e, label) in sample {
        steps += e.query.size() as u64;
        if !label {
            continue;
        }
        match query_prefix(&e.query, n, &mut steps) {
            Some(w) => {
                if w.len() < n || sigma.as_ref().is_some_and(|s| *s != w) {
                    return Err(Error::Data("sample is inconsistent with every fixture target".into()));
                }
                sigma = Some(w);
            }
            None => needs_word |= !fixture_entails(None, n, &e.query)?,
        }
    }
    if let Some(w) = sigma {
        return Ok((SigmaFixture::with_word(n, &w), steps));
    }
    if !needs_word {
        return Ok((SigmaFixture::t0(n), steps));
    }
    // Each negative example rules out at most one word per branch, so this loop
    // stops after polynomially many candidates.
    let negatives: Vec<&Query> = sample.iter().filter(|(_, label)| !label).map(|(e, _)| &e.query).collect();
    for i in 0..1u64 << n {
        let w = SigmaFixture::word(n, i);
        let mut consistent = true;
        for q in &negatives {
            steps += (n + q.size()) as u64;
            if fixture_entails(Some(&w), n, q)? {
                consistent = false;
                break;
            }
        }
        if consistent {
            return Ok((SigmaFixture::with_word(n, &w), steps));
        }
    }
    Err(Error::Data("every fixture target is ruled out by the sample".into()))
}

/// Answers for the exact-learning driver on the fixture. The adversary keeps every
/// word still consistent with its answers and never commits early.
pub struct FixtureAdversary {
    n: usize,
    candidates: Vec<Vec<Name>>,
    pub queries: u64,
    answers: Vec<Labelled>,
}

impl FixtureAdversary {
    pub fn new(n: usize) -> FixtureAdversary {
        let candidates = (0..1u64 << n).map(|i| SigmaFixture::word(n, i)).collect();
        FixtureAdversary { n, candidates, queries: 0, answers: Vec::new() }
    }

    /// Answers so that the larger set of candidates stays consistent.
    pub fn membership(&mut self, q: &Query) -> Result<bool> {
        self.queries += 1;
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for w in std::mem::take(&mut self.candidates) {
            if fixture_entails(Some(&w), self.n, q)? {
                yes.push(w);
            } else {
                no.push(w);
            }
        }
        let answer = yes.len() > no.len();
        self.candidates = if answer { yes } else { no };
        let e = Example { abox: SigmaFixture::abox(), query: q.clone() };
        self.answers.push((e, answer));
        Ok(answer)
    }

    /// `None` once `h` is the only remaining target; otherwise a labelled counterexample.
    /// `∃x M(x)` is used against hypotheses without a path, `∃τ.M(a)` against `T_τ`.
    pub fn equivalence(&mut self, h: &TBox) -> Result<Option<Labelled>> {
        self.queries += 1;
        let a_rhs = h.cis().iter().find(|ci| ci.lhs == Concept::name("A")).map(|ci| ci.rhs.clone());
        let word = a_rhs.and_then(|c| deep_prefix(&c, self.n, &mut Vec::new(), &mut 0));
        let abox = SigmaFixture::abox();
        let Some(w) = word else {
            let e = (Example { abox, query: SigmaFixture::some_m() }, true);
            self.answers.push(e.clone());
            return Ok(Some(e));
        };
        if self.candidates.len() == 1 && self.candidates[0] == w {
            return Ok(None);
        }
        self.candidates.retain(|c| *c != w);
        if self.candidates.is_empty() {
            return Err(Error::Contract("adversary ran out of consistent targets".into()));
        }
        let e = (Example { abox, query: Query::iq(path_concept(&w, Concept::name("M")), "a") }, false);
        self.answers.push(e.clone());
        Ok(Some(e))
    }

    pub fn remaining(&self) -> usize {
        self.candidates.len()
    }

    /// Every answer given so far, as labelled examples.
    pub fn transcript(&self) -> &[Labelled] {
        &self.answers
    }
}

/// How the exact driver searches for σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverStrategy {
    /// Ask `∃τ.M(a)` for each word τ in turn, then confirm.
    Membership,
    /// Propose `T_τ` for each word τ in turn.
    Equivalence,
}

/// Runs an exact learner restricted to the fixture's query language against the
/// adversary; returns the identified word and the number of queries asked.
pub fn exact_fixture_driver(n: usize, strategy: DriverStrategy) -> Result<(Vec<Name>, u64)> {
    let mut adv = FixtureAdversary::new(n);
    if adv.equivalence(&SigmaFixture::t0(n))?.is_none() {
        return Err(Error::Contract("T_0 accepted".into()));
    }
    for i in 0..1u64 << n {
        let w = SigmaFixture::word(n, i);
        if strategy == DriverStrategy::Membership
            && !adv.membership(&Query::iq(path_concept(&w, Concept::name("M")), "a"))?
        {
            continue;
        }
        if adv.equivalence(&SigmaFixture::with_word(n, &w))?.is_none() {
            return Ok((w, adv.queries));
        }
    }
    Err(Error::Contract("no word accepted".into()))
}

/// `{r(a_i,a_{i+1}), s(a_i,a_i) | 1 ≤ i < n} ∪ {r(a_n,a_1)}`.
pub fn cyclic_abox(n: usize) -> Result<ABox> {
    if n < 2 {
        return Err(Error::Config(format!("cyclic ABox needs n ≥ 2, got {n}")));
    }
    let a = |i: usize| Name::from(format!("a{i}"));
    let mut out = ABox::new();
    for i in 1..n {
        out.insert(Assertion::role("r", a(i), a(i + 1)));
        out.insert(Assertion::role("s", a(i), a(i)));
    }
    out.insert(Assertion::role("r", a(n), a(1)));
    Ok(out)
}

/// `∃r^{n−i}.∃s.⊤`, which holds at every individual of the cyclic ABox except `a_i`.
pub fn identifying_concept(n: usize, i: usize) -> Concept {
    let word = vec![Name::from("r"); n - i];
    path_concept(&word, Concept::exists("s", Concept::Top))
}

/// Hypotheses of at most two CIs `⊓_{i∈I} C_i ⊑ A` over the identifying concepts.
pub fn conjunction_hypotheses(n: usize) -> Vec<TBox> {
    let cis: Vec<Ci> = (1u64..1 << n)
        .map(|mask| {
            let lhs = Concept::and((1..=n).filter(|i| mask >> (i - 1) & 1 == 1).map(|i| identifying_concept(n, i)));
            Ci::new(lhs, Concept::name("A"))
        })
        .collect();
    let mut out = Vec::new();
    for (k, a) in cis.iter().enumerate() {
        out.push(TBox::from_parts([a.clone()], []));
        for b in &cis[k + 1..] {
            out.push(TBox::from_parts([a.clone(), b.clone()], []));
        }
    }
    out
}

/// Whether the hypotheses realise every subset of `examples` as the set they entail.
/// Gives up with a budget error after `budget` hypotheses.
pub fn shatters(hypotheses: &[TBox], examples: &[Example], budget: usize) -> Result<bool> {
    if examples.len() > 63 {
        return Err(Error::Config("at most 63 examples".into()));
    }
    let want = 1u64 << examples.len();
    let mut seen = BTreeSet::new();
    for (k, h) in hypotheses.iter().enumerate() {
        if seen.len() as u64 == want {
            break;
        }
        if k == budget {
            return Err(Error::Budget(format!(
                "{} of {want} behaviours seen after {budget} hypotheses",
                seen.len()
            )));
        }
        let mut cache = ModelCache::new(h);
        let mut bits = 0u64;
        for (j, e) in examples.iter().enumerate() {
            if cache.answers(e)? {
                bits |= 1 << j;
            }
        }
        seen.insert(bits);
    }
    Ok(seen.len() as u64 == want)
}

/// The AQ examples `A(a_i)` over `abox` for `i = 1..=n`.
pub fn vc_examples(abox: &ABox, n: usize) -> Vec<Example> {
    (1..=n)
        .map(|i| Example { abox: abox.clone(), query: Query::Aq(Assertion::concept("A", format!("a{i}"))) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoner;
    use crate::syntax::{parse_concept, parse_tbox};

    #[test]
    fn schedule_values() {
        assert_eq!(sample_bound(0.1, 0.1, 1), 30);
        assert_eq!(sample_bound(0.1, 0.1, 2), 37);
        assert_eq!(sample_bound(1.0 - 1e-9, 1.0 - 1e-9, 1), 1);
        for i in 1..20 {
            let m = sample_bound(0.05, 0.2, i);
            assert!((1.0 - 0.05f64).powi(m as i32) <= 0.2 / 2f64.powi(i as i32) + 1e-12);
        }
    }

    #[test]
    fn distribution_validation_and_json() {
        let e = Example { abox: SigmaFixture::abox(), query: parse_query("AQ A(a)").unwrap() };
        assert!(Distribution::new(vec![e.clone()], vec![0.5], 1).is_err());
        assert!(Distribution::new(vec![], vec![], 1).is_err());
        let d = Distribution::uniform(vec![e.clone(), e], 3).unwrap();
        let back = Distribution::from_json(&d.to_json()).unwrap();
        assert_eq!(back.examples(), d.examples());
        assert_eq!(back.weights(), d.weights());
        assert_eq!(back.seed(), 3);
    }

    #[test]
    fn true_error_cases() {
        let a0 = SigmaFixture::abox();
        let t = parse_tbox("CI: A [= B").unwrap();
        let h = TBox::new();
        let pos = Example { abox: a0.clone(), query: parse_query("AQ B(a)").unwrap() };
        let neg = Example { abox: a0, query: parse_query("AQ A(a)").unwrap() };
        assert_eq!(true_error(&t, &t, &Distribution::uniform(vec![pos.clone()], 0).unwrap()).unwrap(), 0.0);
        assert_eq!(true_error(&h, &t, &Distribution::uniform(vec![pos.clone()], 0).unwrap()).unwrap(), 1.0);
        let two = Distribution::uniform(vec![pos, neg], 0).unwrap();
        assert_eq!(true_error(&h, &t, &two).unwrap(), 0.5);
        assert_eq!(true_error(&t, &h, &two).unwrap(), 0.5);
    }

    #[test]
    fn ex_oracle_is_reproducible() {
        let t = parse_tbox("CI: A [= B").unwrap();
        let a0 = parse_abox("A: A(a)\nA: A(b)").unwrap();
        let support = random_support(&t, &a0, Lang::Iq, 20, 4);
        let d = Distribution::uniform(support, 9).unwrap();
        let mut x = ExOracle::new(t.clone(), d.clone());
        let mut y = ExOracle::new(t, d);
        for _ in 0..50 {
            assert_eq!(x.draw().unwrap(), y.draw().unwrap());
        }
        assert_eq!(x.drawn(), 50);
    }

    #[test]
    fn pac_run_respects_schedule() {
        let t = parse_tbox("CI: A [= some r.B\nCI: some r.B [= C").unwrap();
        let a0 = parse_abox("A: A(a)\nA: B(b)\nA: r(b,c)").unwrap();
        for lang in [Lang::Aq, Lang::Iq, Lang::Cqr] {
            let d = Distribution::uniform(random_support(&t, &a0, lang, 60, 1), 2).unwrap();
            let mut s = Session::new(t.clone(), a0.clone(), lang, crate::teacher::Policy::MinimalDeterministic).unwrap();
            let (h, rep) = pac_from_exact(&mut s, 0.1, 0.1, d.clone()).unwrap();
            assert!(rep.samples_used <= rep.schedule.iter().sum::<u64>());
            for (i, m) in rep.schedule.iter().enumerate() {
                assert_eq!(*m, sample_bound(0.1, 0.1, i as u64 + 1));
            }
            assert!(true_error(&h, &t, &d).unwrap() <= 0.1);
        }
    }

    #[test]
    fn fixture_model_matches_reasoner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let fx = SigmaFixture::random(n, &mut rng);
            let t = fx.target();
            let t0 = SigmaFixture::t0(n);
            for (e, label) in fixture_sample(&fx, 80, &mut rng) {
                assert_eq!(label, reasoner::answers(&t, &e.abox, &e.query).unwrap(), "{}", e.query.to_text());
                let in_t0 = reasoner::answers(&t0, &e.abox, &e.query).unwrap();
                assert_eq!(in_t0, fixture_entails(None, n, &e.query).unwrap());
            }
        }
    }

    #[test]
    fn fixture_learner_proof_steps() {
        let n = 2;
        let only_negative = vec![(
            Example { abox: SigmaFixture::abox(), query: Query::iq(parse_concept("some s.some s.M").unwrap(), "a") },
            false,
        )];
        assert_eq!(fixture_pac_learner(&only_negative, n).unwrap().0, SigmaFixture::t0(n));
        let rs = vec![Name::from("r"), Name::from("s")];
        let positive = vec![(
            Example { abox: SigmaFixture::abox(), query: Query::iq(path_concept(&rs, Concept::name("M")), "a") },
            true,
        )];
        let (h, _) = fixture_pac_learner(&positive, n).unwrap();
        assert_eq!(h, SigmaFixture::with_word(n, &rs));
        assert!(reasoner::entails_ci(&h, &Concept::name("A"), &parse_concept("some r.some s.M").unwrap()));
    }

    #[test]
    fn fixture_learner_needs_a_word_for_some_m() {
        let n = 1;
        let sample = vec![
            (Example { abox: SigmaFixture::abox(), query: SigmaFixture::some_m() }, true),
            (Example { abox: SigmaFixture::abox(), query: Query::iq(parse_concept("some r.M").unwrap(), "a") }, false),
        ];
        let (h, _) = fixture_pac_learner(&sample, n).unwrap();
        assert_eq!(h, SigmaFixture::with_word(n, &[Name::from("s")]));
    }

    #[test]
    fn fixture_learner_rejects_two_words() {
        let mk = |c: &str| (Example { abox: SigmaFixture::abox(), query: Query::iq(parse_concept(c).unwrap(), "a") }, true);
        let r = fixture_pac_learner(&[mk("some r.M"), mk("some s.M")], 1);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn adversary_forces_exponentially_many_queries() {
        for n in 1..=6 {
            for strategy in [DriverStrategy::Membership, DriverStrategy::Equivalence] {
                let (w, q) = exact_fixture_driver(n, strategy).unwrap();
                assert_eq!(w.len(), n);
                assert!(q >= 1 << (n - 1), "n={n} {strategy:?} {q}");
            }
        }
    }

    #[test]
    fn adversary_answers_stay_consistent() {
        let mut adv = FixtureAdversary::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let fx = SigmaFixture::random(3, &mut rng);
            adv.membership(&Query::iq(path_concept(&fx.sigma, Concept::name("M")), "a")).unwrap();
        }
        assert!(adv.remaining() >= 3);
        let survivor = adv.candidates[0].clone();
        for (e, label) in adv.transcript() {
            assert_eq!(fixture_entails(Some(&survivor), 3, &e.query).unwrap(), *label);
        }
    }

    #[test]
    fn cyclic_abox_shapes() {
        assert!(cyclic_abox(1).is_err());
        let a2 = cyclic_abox(2).unwrap();
        assert_eq!(a2, parse_abox("A: r(a1,a2)\nA: s(a1,a1)\nA: r(a2,a1)").unwrap());
        for n in 2..=5 {
            let a = cyclic_abox(n).unwrap();
            for i in 1..=n {
                for j in 1..=n {
                    let q = Query::iq(identifying_concept(n, i), format!("a{j}"));
                    assert_eq!(reasoner::answers(&TBox::new(), &a, &q).unwrap(), i != j, "n={n} C_{i} a{j}");
                }
            }
        }
    }

    #[test]
    fn cycle_shattering() {
        let a2 = cyclic_abox(2).unwrap();
        let x = vc_examples(&a2, 2);
        let hs: Vec<TBox> = [
            "CI: some s.top and some r.some s.top [= A",
            "CI: some r.some s.top [= A",
            "CI: some s.top [= A",
            "CI: some r.some s.top [= A\nCI: some s.top [= A",
        ]
        .iter()
        .map(|t| parse_tbox(t).unwrap())
        .collect();
        assert!(shatters(&hs, &x, 100).unwrap());
        assert!(shatters(&conjunction_hypotheses(2), &x, 100).unwrap());
        let mut looped = a2.clone();
        looped.insert(Assertion::role("s", "a2", "a2"));
        assert!(!shatters(&conjunction_hypotheses(2), &vc_examples(&looped, 2), 100).unwrap());
        assert!(shatters(&hs, &[], 100).unwrap());
    }

    #[test]
    fn three_cycle_is_shattered() {
        let a3 = cyclic_abox(3).unwrap();
        assert!(shatters(&conjunction_hypotheses(3), &vc_examples(&a3, 3), 1000).unwrap());
    }

    #[test]
    fn shattering_budget() {
        let a2 = cyclic_abox(2).unwrap();
        let r = shatters(&conjunction_hypotheses(2), &vc_examples(&a2, 2), 1);
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
