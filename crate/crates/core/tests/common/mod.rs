//! Random instances shared by the integration tests.

#![allow(dead_code)]

use eqmat::dictionary::Dictionary;
use eqmat::engine::{materialise, EngineConfig, MaterialisationResult, Mode};
use eqmat::rules::{Atom, Program, Rule, RuleTerm};
use eqmat::sparql::{Bind, QueryTerm, SelectQuery, TriplePattern};
use eqmat::{ResourceId, Term, Triple, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PEX_DATA: &str = include_str!("../../../../data/pex.nt");
pub const PEX_RULES: &str = include_str!("../../../../data/pex.dlog");
pub const Q1: &str = include_str!("../../../../data/q1.rq");
pub const Q2: &str = include_str!("../../../../data/q2.rq");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub dict: Dictionary,
    pub vocab: Vocabulary,
    pub facts: Vec<Triple>,
    pub rules: Vec<Rule>,
}

impl Instance {
    pub fn program(&self) -> Program {
        Program::new(self.rules.iter().cloned())
    }

    pub fn bound(&self) -> usize {
        self.dict.len() + 1
    }

    pub fn run(&self, config: &EngineConfig) -> MaterialisationResult {
        materialise(
            self.facts.iter().copied(),
            &self.program(),
            self.vocab,
            self.bound(),
            config,
        )
        .unwrap()
    }

    pub fn run_mode(&self, mode: Mode, threads: usize) -> MaterialisationResult {
        self.run(&EngineConfig::new(mode, threads))
    }

    /// The resources a query may mention.
    pub fn resources(&self) -> Vec<ResourceId> {
        self.dict.ids().collect()
    }
}

/// At most 8 resources (the two OWL properties, up to five IRIs and one
/// literal), at most 12 facts, at most 6 rules of 1 to 3 body atoms.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let dict = Dictionary::with_builtins();
    let vocab = dict.vocabulary();
    let n_iris = rng.gen_range(2..=5);
    let mut plain: Vec<ResourceId> = (0..n_iris)
        .map(|i| dict.intern_iri(&format!("http://example.org/r{i}")))
        .collect();
    if rng.gen_bool(0.5) {
        plain.push(dict.intern(Term::literal(format!("lit{}", rng.gen_range(0..3)))));
    }
    let preds: Vec<ResourceId> = plain[..2].to_vec();
    let pick_pred = |rng: &mut dyn rand::RngCore| -> ResourceId {
        match rng.gen_range(0..10) {
            0..=2 => vocab.same_as,
            3 => vocab.different_from,
            4 => *plain.choose(rng).unwrap(),
            _ => *preds.choose(rng).unwrap(),
        }
    };
    // contradictions are rare but present
    let df_ok = rng.gen_bool(0.2);
    let pick_pred_safe = |rng: &mut dyn rand::RngCore| loop {
        let p = pick_pred(rng);
        if p != vocab.different_from || df_ok {
            return p;
        }
    };

    let n_facts = rng.gen_range(0..=12);
    let facts: Vec<Triple> = (0..n_facts)
        .map(|_| {
            let s = *plain.choose(rng).unwrap();
            let o = *plain.choose(rng).unwrap();
            Triple::new(s, pick_pred_safe(rng), o)
        })
        .collect();

    let n_rules = rng.gen_range(0..=6);
    let mut rules = Vec::new();
    for _ in 0..n_rules {
        let n_vars = rng.gen_range(1..=3u16);
        let body_len = rng.gen_range(1..=3);
        let term = |rng: &mut dyn rand::RngCore, allow_const: bool| -> RuleTerm {
            if allow_const && rng.gen_bool(0.3) {
                RuleTerm::Const(*plain.choose(rng).unwrap())
            } else {
                RuleTerm::Var(rng.gen_range(0..n_vars))
            }
        };
        let body: Vec<Atom> = (0..body_len)
            .map(|_| {
                let p = if rng.gen_bool(0.15) {
                    RuleTerm::Var(rng.gen_range(0..n_vars))
                } else {
                    RuleTerm::Const(pick_pred_safe(rng))
                };
                Atom::new(term(rng, true), p, term(rng, true))
            })
            .collect();
        let body_vars: Vec<u16> = {
            let mut v: Vec<u16> = body.iter().flat_map(|a| a.vars()).collect();
            v.sort();
            v.dedup();
            v
        };
        let head_term = |rng: &mut dyn rand::RngCore| -> RuleTerm {
            if body_vars.is_empty() || rng.gen_bool(0.25) {
                RuleTerm::Const(*plain.choose(rng).unwrap())
            } else {
                RuleTerm::Var(*body_vars.choose(rng).unwrap())
            }
        };
        let hp = if rng.gen_bool(0.35) {
            RuleTerm::Const(vocab.same_as)
        } else {
            RuleTerm::Const(*preds.choose(rng).unwrap())
        };
        let head = Atom::new(head_term(rng), hp, head_term(rng));
        let names = (0..n_vars).map(|i| format!("v{i}")).collect();
        rules.push(Rule::new(head, body, names).unwrap());
    }
    Instance {
        dict,
        vocab,
        facts,
        rules,
    }
}

/// A query of 1 to 3 patterns over the instance's resources, an optional
/// `BIND(STR(..))`, and a nonempty projection.
pub fn random_query(rng: &mut impl Rng, inst: &Instance) -> SelectQuery {
    let resources = inst.resources();
    let names = ["a", "b", "c"];
    let n_patterns = rng.gen_range(1..=3);
    let term = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.65) {
            QueryTerm::Var(names.choose(rng).unwrap().to_string())
        } else {
            let r = *resources.choose(rng).unwrap();
            QueryTerm::Const(inst.dict.lookup(r).unwrap())
        }
    };
    let patterns: Vec<TriplePattern> = (0..n_patterns)
        .map(|_| TriplePattern {
            s: term(rng),
            p: term(rng),
            o: term(rng),
        })
        .collect();
    let mut q = SelectQuery {
        projection: None,
        patterns,
        binds: Vec::new(),
    };
    let vars = q.pattern_vars();
    if vars.is_empty() {
        q.projection = None;
        return q;
    }
    if rng.gen_bool(0.4) {
        q.binds.push(Bind {
            source: vars.choose(rng).unwrap().clone(),
            target: "s".into(),
            line: 1,
        });
    }
    let all = q.all_vars();
    if rng.gen_bool(0.8) {
        let k = rng.gen_range(1..=all.len());
        let mut proj: Vec<String> = all.choose_multiple(rng, k).cloned().collect();
        proj.sort();
        q.projection = Some(proj);
    }
    q
}
