//! Concepts, TBoxes, ABoxes, queries and their sizes.

mod text;
mod tree;

pub use text::{
    parse_abox, parse_concept, parse_document, parse_query, parse_tbox, Document, ParseOptions,
};
pub use tree::{abox_of_concept, abox_of_concept_with_prefix, concept_of_tree_abox, ConceptTree};

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// A concept, role or individual name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

const RESERVED: [&str; 4] = ["some", "and", "top", "exists"];

impl Name {
    /// Checked constructor: letters, digits and underscores, starting with a letter.
    pub fn new(s: &str) -> Result<Name> {
        if is_valid_name(s) {
            Ok(Name(Arc::from(s)))
        } else {
            Err(Error::Data(format!("invalid name `{s}`")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_') && !RESERVED.contains(&s)
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name(Arc::from(s))
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s.as_str()))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ELH concept. Values built through [`Concept::and`] and [`Concept::normalize`]
/// keep conjunctions flat, sorted by serialized form and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Concept {
    Top,
    Name(Name),
    And(Vec<Concept>),
    Exists(Name, Box<Concept>),
}

impl Concept {
    pub fn name(n: impl Into<Name>) -> Concept {
        Concept::Name(n.into())
    }

    pub fn exists(r: impl Into<Name>, filler: Concept) -> Concept {
        Concept::Exists(r.into(), Box::new(filler))
    }

    /// Normalized conjunction of already-normalized parts.
    pub fn and(parts: impl IntoIterator<Item = Concept>) -> Concept {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Concept::Top => {}
                Concept::And(items) => flat.extend(items),
                other => flat.push(other),
            }
        }
        flat.sort_by_cached_key(|c| c.to_string());
        flat.dedup();
        match flat.len() {
            0 => Concept::Top,
            1 => flat.pop().unwrap(),
            _ => Concept::And(flat),
        }
    }

    pub fn normalize(&self) -> Concept {
        match self {
            Concept::Top | Concept::Name(_) => self.clone(),
            Concept::Exists(r, c) => Concept::exists(r.clone(), c.normalize()),
            Concept::And(items) => Concept::and(items.iter().map(Concept::normalize)),
        }
    }

    /// Top-level conjuncts; empty for ⊤.
    pub fn conjuncts(&self) -> Vec<&Concept> {
        match self {
            Concept::Top => vec![],
            Concept::And(items) => items.iter().collect(),
            other => vec![other],
        }
    }

    pub fn is_name(&self) -> bool {
        matches!(self, Concept::Name(_))
    }

    pub fn as_name(&self) -> Option<&Name> {
        match self {
            Concept::Name(n) => Some(n),
            _ => None,
        }
    }

    /// Symbol count of the canonical serialization, where a bracket pair counts once.
    pub fn size(&self) -> usize {
        match self {
            Concept::Top | Concept::Name(_) => 1,
            Concept::And(items) => {
                items.iter().map(Concept::size).sum::<usize>() + items.len().saturating_sub(1)
            }
            Concept::Exists(_, c) => {
                let parens = usize::from(matches!(**c, Concept::And(_)));
                3 + c.size() + parens
            }
        }
    }

    /// Role depth.
    pub fn depth(&self) -> usize {
        match self {
            Concept::Top | Concept::Name(_) => 0,
            Concept::And(items) => items.iter().map(Concept::depth).max().unwrap_or(0),
            Concept::Exists(_, c) => 1 + c.depth(),
        }
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        self.collect_signature(&mut sig);
        sig
    }

    fn collect_signature(&self, sig: &mut Signature) {
        match self {
            Concept::Top => {}
            Concept::Name(n) => {
                sig.concepts.insert(n.clone());
            }
            Concept::And(items) => items.iter().for_each(|c| c.collect_signature(sig)),
            Concept::Exists(r, c) => {
                sig.roles.insert(r.clone());
                c.collect_signature(sig);
            }
        }
    }

    /// All subconcepts, children before parents, without duplicates.
    pub fn subconcepts(&self) -> Vec<Concept> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_subconcepts(&mut out, &mut seen);
        out
    }

    fn collect_subconcepts(&self, out: &mut Vec<Concept>, seen: &mut BTreeSet<Concept>) {
        match self {
            Concept::And(items) => items.iter().for_each(|c| c.collect_subconcepts(out, seen)),
            Concept::Exists(_, c) => c.collect_subconcepts(out, seen),
            _ => {}
        }
        if seen.insert(self.clone()) {
            out.push(self.clone());
        }
    }

    /// Rename roles through `map`; names missing from the map are kept.
    pub fn rename_roles(&self, map: &BTreeMap<Name, Name>) -> Concept {
        match self {
            Concept::Top | Concept::Name(_) => self.clone(),
            Concept::And(items) => Concept::and(items.iter().map(|c| c.rename_roles(map))),
            Concept::Exists(r, c) => {
                let r = map.get(r).cloned().unwrap_or_else(|| r.clone());
                Concept::exists(r, c.rename_roles(map))
            }
        }
    }

    /// ASCII form used by the text format.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, true);
        s
    }

    fn write(&self, out: &mut String, ascii: bool) {
        match self {
            Concept::Top => out.push_str(if ascii { "top" } else { "⊤" }),
            Concept::Name(n) => out.push_str(n.as_str()),
            Concept::And(items) => {
                for (i, c) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(if ascii { " and " } else { "⊓" });
                    }
                    c.write(out, ascii);
                }
            }
            Concept::Exists(r, c) => {
                out.push_str(if ascii { "some " } else { "∃" });
                out.push_str(r.as_str());
                out.push('.');
                let paren = matches!(**c, Concept::And(_));
                if paren {
                    out.push('(');
                }
                c.write(out, ascii);
                if paren {
                    out.push(')');
                }
            }
        }
    }
}

/// Canonical Unicode serialization; [`Concept::size`] counts its symbols.
impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, false);
        f.write_str(&s)
    }
}

/// Concept and role names of an object.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub concepts: BTreeSet<Name>,
    pub roles: BTreeSet<Name>,
}

impl Signature {
    pub fn union(&self, other: &Signature) -> Signature {
        Signature {
            concepts: self.concepts.union(&other.concepts).cloned().collect(),
            roles: self.roles.union(&other.roles).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Signature) -> bool {
        self.concepts.is_subset(&other.concepts) && self.roles.is_subset(&other.roles)
    }

    pub fn len(&self) -> usize {
        self.concepts.len() + self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Concept inclusion `lhs ⊑ rhs`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ci {
    pub lhs: Concept,
    pub rhs: Concept,
}

impl Ci {
    pub fn new(lhs: Concept, rhs: Concept) -> Ci {
        Ci { lhs: lhs.normalize(), rhs: rhs.normalize() }
    }

    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size() + 1
    }
}

impl fmt::Display for Ci {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊑{}", self.lhs, self.rhs)
    }
}

/// Role inclusion `sub ⊑ sup`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ri {
    pub sub: Name,
    pub sup: Name,
}

impl Ri {
    pub fn new(sub: impl Into<Name>, sup: impl Into<Name>) -> Ri {
        Ri { sub: sub.into(), sup: sup.into() }
    }
}

impl fmt::Display for Ri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊑{}", self.sub, self.sup)
    }
}

/// A finite set of CIs and RIs, kept in insertion order without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TBox {
    cis: Vec<Ci>,
    ris: Vec<Ri>,
}

impl TBox {
    pub fn new() -> TBox {
        TBox::default()
    }

    pub fn from_parts(cis: impl IntoIterator<Item = Ci>, ris: impl IntoIterator<Item = Ri>) -> TBox {
        let mut t = TBox::new();
        cis.into_iter().for_each(|c| t.add_ci(c));
        ris.into_iter().for_each(|r| t.add_ri(r));
        t
    }

    pub fn add_ci(&mut self, ci: Ci) {
        let ci = Ci::new(ci.lhs, ci.rhs);
        if !self.cis.contains(&ci) {
            self.cis.push(ci);
        }
    }

    pub fn add_ri(&mut self, ri: Ri) {
        if !self.ris.contains(&ri) {
            self.ris.push(ri);
        }
    }

    pub fn cis(&self) -> &[Ci] {
        &self.cis
    }

    pub fn ris(&self) -> &[Ri] {
        &self.ris
    }

    pub fn is_empty(&self) -> bool {
        self.cis.is_empty() && self.ris.is_empty()
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        for ci in &self.cis {
            ci.lhs.collect_signature(&mut sig);
            ci.rhs.collect_signature(&mut sig);
        }
        for ri in &self.ris {
            sig.roles.insert(ri.sub.clone());
            sig.roles.insert(ri.sup.clone());
        }
        sig
    }

    pub fn size(&self) -> usize {
        self.cis.iter().map(Ci::size).sum::<usize>() + 3 * self.ris.len()
    }

    /// Checks that every CI has a name on one side and each name has at most one `A ⊑ C`.
    pub fn check_terminology(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for ci in &self.cis {
            match &ci.lhs {
                Concept::Name(a) => {
                    if !seen.insert(a.clone()) {
                        return Err(Error::Terminology(format!(
                            "more than one inclusion with left-hand side `{a}`"
                        )));
                    }
                }
                _ if ci.rhs.is_name() => {}
                _ => {
                    return Err(Error::Terminology(format!(
                        "`{ci}` has a concept name on neither side"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn is_terminology(&self) -> bool {
        self.check_terminology().is_ok()
    }

    /// Merges all `A ⊑ C_i` with the same name `A` into one `A ⊑ C_1 ⊓ … ⊓ C_n`.
    pub fn merged(&self) -> TBox {
        let mut defs: BTreeMap<Name, Vec<Concept>> = BTreeMap::new();
        let mut order = Vec::new();
        for ci in &self.cis {
            if let Concept::Name(a) = &ci.lhs {
                if !defs.contains_key(a) {
                    order.push(a.clone());
                }
                defs.entry(a.clone()).or_default().push(ci.rhs.clone());
            }
        }
        let mut out = TBox::new();
        let mut emitted = BTreeSet::new();
        for ci in &self.cis {
            match &ci.lhs {
                Concept::Name(a) => {
                    if emitted.insert(a.clone()) {
                        out.add_ci(Ci::new(ci.lhs.clone(), Concept::and(defs[a].clone())));
                    }
                }
                _ => out.add_ci(ci.clone()),
            }
        }
        for ri in &self.ris {
            out.add_ri(ri.clone());
        }
        out
    }
}

impl fmt::Display for TBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::tbox_to_text(self))
    }
}

/// A concept or role assertion; also used as a CQ atom over terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assertion {
    Concept { concept: Name, ind: Name },
    Role { role: Name, from: Name, to: Name },
}

/// CQ atoms share the assertion shape, with variables allowed as terms.
pub type Atom = Assertion;

impl Assertion {
    pub fn concept(concept: impl Into<Name>, ind: impl Into<Name>) -> Assertion {
        Assertion::Concept { concept: concept.into(), ind: ind.into() }
    }

    pub fn role(role: impl Into<Name>, from: impl Into<Name>, to: impl Into<Name>) -> Assertion {
        Assertion::Role { role: role.into(), from: from.into(), to: to.into() }
    }

    pub fn size(&self) -> usize {
        match self {
            Assertion::Concept { .. } => 4,
            Assertion::Role { .. } => 6,
        }
    }

    pub fn terms(&self) -> Vec<&Name> {
        match self {
            Assertion::Concept { ind, .. } => vec![ind],
            Assertion::Role { from, to, .. } => vec![from, to],
        }
    }

    /// Replace term `from` by `to`.
    pub fn substitute(&self, old: &Name, new: &Name) -> Assertion {
        let sub = |t: &Name| if t == old { new.clone() } else { t.clone() };
        match self {
            Assertion::Concept { concept, ind } => {
                Assertion::Concept { concept: concept.clone(), ind: sub(ind) }
            }
            Assertion::Role { role, from, to } => {
                Assertion::Role { role: role.clone(), from: sub(from), to: sub(to) }
            }
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Concept { concept, ind } => write!(f, "{concept}({ind})"),
            Assertion::Role { role, from, to } => write!(f, "{role}({from},{to})"),
        }
    }
}

/// A finite set of assertions plus declared individuals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ABox {
    assertions: BTreeSet<Assertion>,
    individuals: BTreeSet<Name>,
}

impl ABox {
    pub fn new() -> ABox {
        ABox::default()
    }

    pub fn from_assertions(items: impl IntoIterator<Item = Assertion>) -> ABox {
        let mut a = ABox::new();
        items.into_iter().for_each(|x| {
            a.insert(x);
        });
        a
    }

    pub fn insert(&mut self, a: Assertion) -> bool {
        for t in a.terms() {
            if !self.individuals.contains(t) {
                self.individuals.insert(t.clone());
            }
        }
        self.assertions.insert(a)
    }

    pub fn declare(&mut self, ind: impl Into<Name>) {
        self.individuals.insert(ind.into());
    }

    pub fn remove(&mut self, a: &Assertion) -> bool {
        self.assertions.remove(a)
    }

    /// The ABox without `ind` and every assertion mentioning it.
    pub fn without_individual(&self, ind: &Name) -> ABox {
        ABox {
            assertions: self
                .assertions
                .iter()
                .filter(|a| !a.terms().contains(&ind))
                .cloned()
                .collect(),
            individuals: self.individuals.iter().filter(|i| *i != ind).cloned().collect(),
        }
    }

    pub fn contains(&self, a: &Assertion) -> bool {
        self.assertions.contains(a)
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter()
    }

    pub fn concept_assertions(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.assertions.iter().filter_map(|a| match a {
            Assertion::Concept { concept, ind } => Some((concept, ind)),
            _ => None,
        })
    }

    pub fn role_assertions(&self) -> impl Iterator<Item = (&Name, &Name, &Name)> {
        self.assertions.iter().filter_map(|a| match a {
            Assertion::Role { role, from, to } => Some((role, from, to)),
            _ => None,
        })
    }

    pub fn labels_of(&self, ind: &Name) -> BTreeSet<Name> {
        self.concept_assertions()
            .filter(|(_, i)| *i == ind)
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Mentioned and declared individuals.
    pub fn ind(&self) -> &BTreeSet<Name> {
        &self.individuals
    }

    pub fn len(&self) -> usize {
        self.assertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assertions.is_empty()
    }

    pub fn size(&self) -> usize {
        self.assertions.iter().map(Assertion::size).sum()
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        for a in &self.assertions {
            match a {
                Assertion::Concept { concept, .. } => {
                    sig.concepts.insert(concept.clone());
                }
                Assertion::Role { role, .. } => {
                    sig.roles.insert(role.clone());
                }
            }
        }
        sig
    }

    pub fn union(&self, other: &ABox) -> ABox {
        let mut out = self.clone();
        other.assertions.iter().for_each(|a| {
            out.insert(a.clone());
        });
        other.individuals.iter().for_each(|i| out.declare(i.clone()));
        out
    }

    /// A name with prefix `base` not used as an individual here.
    pub fn fresh_individual(&self, base: &str) -> Name {
        (0..)
            .map(|i| Name::from(format!("{base}_{i}")))
            .find(|n| !self.individuals.contains(n))
            .unwrap()
    }
}

impl fmt::Display for ABox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::abox_to_text(self))
    }
}

/// A conjunctive query; answer terms are individuals, the rest are variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cq {
    pub answer: Vec<Name>,
    pub vars: BTreeSet<Name>,
    pub atoms: BTreeSet<Atom>,
}

impl Cq {
    pub fn new(
        answer: Vec<Name>,
        vars: impl IntoIterator<Item = Name>,
        atoms: impl IntoIterator<Item = Atom>,
    ) -> Result<Cq> {
        let cq = Cq { answer, vars: vars.into_iter().collect(), atoms: atoms.into_iter().collect() };
        cq.validate()?;
        Ok(cq)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.answer {
            if self.vars.contains(a) {
                return Err(Error::Data(format!("`{a}` is both an individual and a variable")));
            }
        }
        for atom in &self.atoms {
            for t in atom.terms() {
                if !self.vars.contains(t) && !self.answer.contains(t) {
                    return Err(Error::Data(format!("undeclared term `{t}` in CQ atom {atom}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_var(&self, t: &Name) -> bool {
        self.vars.contains(t)
    }

    pub fn individuals(&self) -> BTreeSet<Name> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms().into_iter().cloned().collect::<Vec<_>>())
            .filter(|t| !self.vars.contains(t))
            .chain(self.answer.iter().cloned())
            .collect()
    }

    /// Every variable reachable by a directed path from an individual term.
    pub fn is_rooted(&self) -> bool {
        let mut reached: BTreeSet<Name> = self.individuals();
        loop {
            let mut grew = false;
            for atom in &self.atoms {
                if let Assertion::Role { from, to, .. } = atom {
                    if reached.contains(from) && !reached.contains(to) {
                        reached.insert(to.clone());
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        self.vars.iter().all(|v| reached.contains(v))
    }

    pub fn size(&self) -> usize {
        self.atoms.iter().map(Assertion::size).sum()
    }

    /// Replace variable `var` by `term`, which may be a new individual or another variable.
    pub fn substitute(&self, var: &Name, term: &Name, term_is_individual: bool) -> Cq {
        let mut answer = self.answer.clone();
        if term_is_individual && !answer.contains(term) {
            answer.push(term.clone());
        }
        Cq {
            answer,
            vars: self.vars.iter().filter(|v| *v != var).cloned().collect(),
            atoms: self.atoms.iter().map(|a| a.substitute(var, term)).collect(),
        }
    }

    pub fn signature(&self) -> Signature {
        ABox::from_assertions(self.atoms.iter().cloned()).signature()
    }
}

/// A query of one of the supported languages.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Query {
    Aq(Assertion),
    Iq { concept: Concept, ind: Name },
    IqRole { role: Name, from: Name, to: Name },
    Cq(Cq),
}

impl Query {
    pub fn iq(concept: Concept, ind: impl Into<Name>) -> Query {
        Query::Iq { concept: concept.normalize(), ind: ind.into() }
    }

    pub fn size(&self) -> usize {
        match self {
            Query::Aq(a) => a.size(),
            Query::Iq { concept, .. } => concept.size() + 3,
            Query::IqRole { .. } => 6,
            Query::Cq(q) => q.size(),
        }
    }

    pub fn signature(&self) -> Signature {
        match self {
            Query::Aq(a) => ABox::from_assertions([a.clone()]).signature(),
            Query::Iq { concept, .. } => concept.signature(),
            Query::IqRole { role, .. } => {
                Signature { concepts: BTreeSet::new(), roles: [role.clone()].into() }
            }
            Query::Cq(q) => q.signature(),
        }
    }

    pub fn individuals(&self) -> BTreeSet<Name> {
        match self {
            Query::Aq(a) => a.terms().into_iter().cloned().collect(),
            Query::Iq { ind, .. } => [ind.clone()].into(),
            Query::IqRole { from, to, .. } => [from.clone(), to.clone()].into(),
            Query::Cq(q) => q.individuals(),
        }
    }

    /// Concept names and AQs read as IQs; other queries unchanged.
    pub fn as_iq(&self) -> Query {
        match self {
            Query::Aq(Assertion::Concept { concept, ind }) => {
                Query::Iq { concept: Concept::Name(concept.clone()), ind: ind.clone() }
            }
            Query::Aq(Assertion::Role { role, from, to }) => {
                Query::IqRole { role: role.clone(), from: from.clone(), to: to.clone() }
            }
            other => other.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        text::query_to_text(self)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Aq(a) => write!(f, "{a}"),
            Query::Iq { concept, ind } => match concept {
                Concept::Name(_) | Concept::Top => write!(f, "{concept}({ind})"),
                _ => write!(f, "({concept})({ind})"),
            },
            Query::IqRole { role, from, to } => write!(f, "{role}({from},{to})"),
            Query::Cq(q) => {
                let atoms: Vec<String> = q.atoms.iter().map(|a| a.to_string()).collect();
                let vars: Vec<&str> = q.vars.iter().map(Name::as_str).collect();
                write!(f, "∃{}.{}", vars.join(","), atoms.join("∧"))
            }
        }
    }
}
