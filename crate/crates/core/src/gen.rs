//! Seeded random terminologies, ABoxes and concepts for corpora and tests.

use crate::syntax::{ABox, Assertion, Ci, Concept, Name, Ri, Signature, TBox};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub concept_names: usize,
    pub role_names: usize,
    /// Upper bound on the TBox size.
    pub max_tbox_size: usize,
    pub max_depth: usize,
    /// Upper bound on the number of ABox assertions.
    pub max_assertions: usize,
    pub max_individuals: usize,
    /// Make every name of the TBox occur in the ABox.
    pub cover_signature: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            concept_names: 4,
            role_names: 2,
            max_tbox_size: 25,
            max_depth: 2,
            max_assertions: 10,
            max_individuals: 4,
            cover_signature: true,
        }
    }
}

pub fn concept_pool(n: usize) -> Vec<Name> {
    ["A", "B", "C", "D", "E", "F", "G", "H"].iter().take(n).map(|s| Name::from(*s)).collect()
}

pub fn role_pool(n: usize) -> Vec<Name> {
    ["r", "s", "t", "u", "v"].iter().take(n).map(|s| Name::from(*s)).collect()
}

/// A random concept of depth at most `depth` over the given names.
pub fn random_concept<R: Rng>(rng: &mut R, concepts: &[Name], roles: &[Name], depth: usize) -> Concept {
    let parts = rng.gen_range(1..=2);
    let mut out = Vec::new();
    for _ in 0..parts {
        let exists = depth > 0 && !roles.is_empty() && (concepts.is_empty() || rng.gen_bool(0.5));
        if exists {
            let r = roles.choose(rng).unwrap().clone();
            let filler = if rng.gen_bool(0.3) { Concept::Top } else { random_concept(rng, concepts, roles, depth - 1) };
            out.push(Concept::exists(r, filler));
        } else if let Some(a) = concepts.choose(rng) {
            out.push(Concept::Name(a.clone()));
        }
    }
    Concept::and(out)
}

/// A random terminology: at most one `A ⊑ C` per name, any number of `C ⊑ A`, a few RIs.
pub fn random_terminology<R: Rng>(rng: &mut R, cfg: &GenConfig) -> TBox {
    let concepts = concept_pool(cfg.concept_names);
    let roles = role_pool(cfg.role_names);
    let mut t = TBox::new();
    let mut defined = Vec::new();
    for _ in 0..40 {
        if t.size() >= cfg.max_tbox_size {
            break;
        }
        let mut next = t.clone();
        let pick = rng.gen_range(0..10);
        if pick == 0 && roles.len() > 1 {
            let r = roles.choose(rng).unwrap();
            let s = roles.choose(rng).unwrap();
            if r == s {
                continue;
            }
            next.add_ri(Ri::new(r.clone(), s.clone()));
        } else {
            let a = concepts.choose(rng).unwrap().clone();
            let depth = rng.gen_range(0..=cfg.max_depth);
            let c = random_concept(rng, &concepts, &roles, depth);
            if c == Concept::Name(a.clone()) || c == Concept::Top {
                continue;
            }
            if pick < 6 && !defined.contains(&a) {
                next.add_ci(Ci::new(Concept::Name(a.clone()), c));
                if !next.is_terminology() {
                    continue;
                }
                defined.push(a);
            } else {
                next.add_ci(Ci::new(c, Concept::Name(a)));
            }
        }
        if next.size() <= cfg.max_tbox_size && next.is_terminology() {
            t = next;
        }
    }
    t
}

/// A random ABox; with `cover`, each name of `must` occurs in it.
pub fn random_abox<R: Rng>(rng: &mut R, sig: &Signature, must: Option<&Signature>, cfg: &GenConfig) -> ABox {
    let inds: Vec<Name> = (0..cfg.max_individuals.max(1)).map(|i| Name::from(format!("a{i}"))).collect();
    let concepts: Vec<Name> = sig.concepts.iter().cloned().collect();
    let roles: Vec<Name> = sig.roles.iter().cloned().collect();
    let mut a = ABox::new();
    if let Some(m) = must {
        for c in &m.concepts {
            a.insert(Assertion::concept(c.clone(), inds.choose(rng).unwrap().clone()));
        }
        for r in &m.roles {
            a.insert(Assertion::role(r.clone(), inds.choose(rng).unwrap().clone(), inds.choose(rng).unwrap().clone()));
        }
    }
    let target = rng.gen_range(a.len().max(1)..=cfg.max_assertions.max(a.len()).max(1));
    for _ in 0..4 * cfg.max_assertions {
        if a.len() >= target {
            break;
        }
        if !roles.is_empty() && (concepts.is_empty() || rng.gen_bool(0.5)) {
            let r = roles.choose(rng).unwrap().clone();
            a.insert(Assertion::role(r, inds.choose(rng).unwrap().clone(), inds.choose(rng).unwrap().clone()));
        } else if let Some(c) = concepts.choose(rng) {
            a.insert(Assertion::concept(c.clone(), inds.choose(rng).unwrap().clone()));
        }
    }
    if a.ind().is_empty() {
        a.declare(inds[0].clone());
    }
    a
}

/// One corpus instance: target terminology and fixed ABox.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub target: TBox,
    pub abox: ABox,
}

/// `count` instances from consecutive seeds starting at `seed`.
pub fn corpus(seed: u64, count: usize, cfg: &GenConfig) -> Vec<Instance> {
    (0..count as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let target = random_terminology(&mut rng, cfg);
            let ts = target.signature();
            let pool = Signature {
                concepts: concept_pool(cfg.concept_names).into_iter().collect(),
                roles: role_pool(cfg.role_names).into_iter().collect(),
            };
            let must = cfg.cover_signature.then_some(&ts);
            let abox = random_abox(&mut rng, &pool, must, cfg);
            Instance { seed: s, target, abox }
        })
        .collect()
}
