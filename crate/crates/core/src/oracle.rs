//! Slow, independent reference implementations used to check the engine.
//!
//! Nothing here uses the store's indexes or the engine's windows: rules are
//! applied round by round to a plain set until nothing changes.

use std::collections::{BTreeSet, HashMap};

use crate::dictionary::{Dictionary, ResourceId, Term, Vocabulary};
use crate::engine::{MaterialisationResult, Outcome};
use crate::repmap::RepresentativeMap;
use crate::rules::{eq_axiomatisation, Atom, Rule, RuleTerm};
use crate::sparql::{str_of, AnswerMultiset, QueryOptions, QueryTerm, SelectQuery};
use crate::store::{FactStore, Triple};

pub type FactSet = BTreeSet<Triple>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveResult {
    pub facts: FactSet,
    /// Some `[a, owl:differentFrom, a]` was derived.
    pub contradiction: bool,
}

/// Every binding of the rule's variables under which all body atoms are in
/// `facts`, found by trying each fact for each atom in turn.
pub fn body_matches(rule: &Rule, facts: &FactSet) -> Vec<Vec<Option<ResourceId>>> {
    let mut out = Vec::new();
    let mut binding = vec![None; rule.var_count()];
    matches_from(&rule.body, facts, &mut binding, &mut out);
    out
}

fn matches_from(
    atoms: &[Atom],
    facts: &FactSet,
    binding: &mut Vec<Option<ResourceId>>,
    out: &mut Vec<Vec<Option<ResourceId>>>,
) {
    let Some((atom, rest)) = atoms.split_first() else {
        out.push(binding.clone());
        return;
    };
    for fact in facts {
        let saved = binding.clone();
        let ok = atom.terms().into_iter().zip(fact.terms()).all(|(t, v)| match t {
            RuleTerm::Const(c) => c == v,
            RuleTerm::Var(x) => match binding[x as usize] {
                Some(b) => b == v,
                None => {
                    binding[x as usize] = Some(v);
                    true
                }
            },
        });
        if ok {
            matches_from(rest, facts, binding, out);
        }
        *binding = saved;
    }
}

fn instantiate(atom: &Atom, binding: &[Option<ResourceId>]) -> Triple {
    let v = |t: RuleTerm| match t {
        RuleTerm::Const(c) => c,
        RuleTerm::Var(x) => binding[x as usize].expect("unsafe rule"),
    };
    Triple::new(v(atom.s), v(atom.p), v(atom.o))
}

/// Least fixpoint of `rules` over `facts`, by rounds.
pub fn naive_materialise(facts: impl IntoIterator<Item = Triple>, rules: &[Rule]) -> FactSet {
    let mut current: FactSet = facts.into_iter().collect();
    loop {
        let mut next = current.clone();
        for rule in rules {
            for b in body_matches(rule, &current) {
                next.insert(instantiate(&rule.head, &b));
            }
        }
        if next.len() == current.len() {
            return current;
        }
        current = next;
    }
}

/// Fixpoint of `rules` together with the equality axioms, plus the
/// contradiction check.
pub fn naive_with_equality(facts: impl IntoIterator<Item = Triple>, rules: &[Rule], vocab: Vocabulary) -> NaiveResult {
    let ax = eq_axiomatisation(vocab.same_as, vocab.different_from);
    let mut all = rules.to_vec();
    all.extend(ax.rules);
    let facts = naive_materialise(facts, &all);
    let contradiction = facts.iter().any(|t| t.p == vocab.different_from && t.s == t.o);
    NaiveResult { facts, contradiction }
}

/// `{⟨s,p,o⟩ | ⟨ρ(s),ρ(p),ρ(o)⟩ ∈ T}` over the resources known to `map`.
pub fn expand(triples: impl IntoIterator<Item = Triple>, map: &RepresentativeMap) -> FactSet {
    let mut out = FactSet::new();
    for t in triples {
        // only ρ-normal facts have preimages
        if map.normalize_fact(t) != t {
            continue;
        }
        let [s, p, o] = t.terms().map(|r| map.clique_members(r));
        for &a in &s {
            for &b in &p {
                for &c in &o {
                    out.insert(Triple::new(a, b, c));
                }
            }
        }
    }
    out
}

pub fn expand_store(store: &FactStore, map: &RepresentativeMap) -> FactSet {
    expand(store.unmarked().map(|f| f.triple), map)
}

#[derive(Clone, Debug, Default)]
pub struct PropertyReport {
    /// Unmarked `sameAs` facts between distinct resources.
    pub unmerged_equalities: Vec<Triple>,
    /// Unmarked facts that mention a non-representative.
    pub non_normal: Vec<Triple>,
    /// In the reference materialisation but not in the expansion.
    pub missing: Vec<Triple>,
    /// In the expansion but not in the reference materialisation.
    pub unexpected: Vec<Triple>,
    pub contradiction_mismatch: bool,
}

impl PropertyReport {
    pub fn captures_equalities(&self) -> bool {
        self.unmerged_equalities.is_empty()
    }

    pub fn is_minimal(&self) -> bool {
        self.non_normal.is_empty()
    }

    pub fn represents_materialisation(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty() && !self.contradiction_mismatch
    }

    pub fn holds(&self) -> bool {
        self.captures_equalities() && self.is_minimal() && self.represents_materialisation()
    }
}

/// Checks the three correctness properties of a rewriting run against the
/// naive fixpoint of `rules` plus the equality axioms over `explicit`.
pub fn check_properties(
    result: &MaterialisationResult,
    explicit: &[Triple],
    rules: &[Rule],
    vocab: Vocabulary,
) -> PropertyReport {
    let map = &result.map;
    let same_as = map.resolve(vocab.same_as);
    let mut report = PropertyReport::default();
    for f in result.store.unmarked() {
        let t = f.triple;
        if t.p == same_as && t.s != t.o {
            report.unmerged_equalities.push(t);
        }
        if map.normalize_fact(t) != t {
            report.non_normal.push(t);
        }
    }
    let reference = naive_with_equality(explicit.iter().copied(), rules, vocab);
    let expanded = expand_store(&result.store, map);
    report.missing = reference.facts.difference(&expanded).copied().collect();
    report.unexpected = expanded.difference(&reference.facts).copied().collect();
    report.contradiction_mismatch = reference.contradiction != (result.outcome == Outcome::Contradiction);
    report
}

/// Counts derivations of the `n²` sameAs facts inside a clique of `n`
/// resources: the clique is seeded with `n − 1` chaining equalities (plus
/// `k1 ≈ k1` when there is no chain), closed under the equality axioms, and
/// then every ground instance of the replacement rules whose body holds and
/// whose head is an intra-clique `sameAs` fact is counted, plus one
/// reflexivity derivation per `k ≈ k`.
pub fn count_clique_derivations(n: usize) -> u64 {
    assert!(n >= 1);
    let dict = Dictionary::with_builtins();
    let vocab = dict.vocabulary();
    let clique: Vec<ResourceId> = (0..n).map(|i| dict.intern_iri(&format!("urn:k{i}"))).collect();
    let mut seed: Vec<Triple> = clique
        .windows(2)
        .map(|w| Triple::new(w[0], vocab.same_as, w[1]))
        .collect();
    if seed.is_empty() {
        seed.push(Triple::new(clique[0], vocab.same_as, clique[0]));
    }
    let ax = eq_axiomatisation(vocab.same_as, vocab.different_from);
    let closed = naive_materialise(seed, &ax.rules);
    let in_clique = |t: &Triple| t.p == vocab.same_as && clique.contains(&t.s) && clique.contains(&t.o);

    let mut count = 0u64;
    // the three replacement rules: every ground body match with a clique head
    for rule in &ax.rules[3..] {
        for b in body_matches(rule, &closed) {
            if in_clique(&instantiate(&rule.head, &b)) {
                count += 1;
            }
        }
    }
    // reflexivity: one derivation per reflexive clique fact
    count += closed.iter().filter(|t| in_clique(t) && t.s == t.o).count() as u64;
    count
}

/// Bag-semantics evaluation of `query` directly over `facts`.
pub fn reference_answer(
    facts: &FactSet,
    dict: &Dictionary,
    query: &SelectQuery,
    options: &QueryOptions,
) -> AnswerMultiset {
    let terms: HashMap<ResourceId, Term> = facts
        .iter()
        .flat_map(|t| t.terms())
        .map(|r| (r, dict.lookup(r).expect("fact uses unknown resource")))
        .collect();
    let mut solutions: Vec<HashMap<String, Term>> = vec![HashMap::new()];
    for pattern in &query.patterns {
        let mut next = Vec::new();
        for sol in &solutions {
            for fact in facts {
                let mut ext = sol.clone();
                let ok = pattern.terms().into_iter().zip(fact.terms()).all(|(qt, r)| {
                    let value = &terms[&r];
                    match qt {
                        QueryTerm::Const(c) => c == value,
                        QueryTerm::Var(v) => match ext.get(v) {
                            Some(bound) => bound == value,
                            None => {
                                ext.insert(v.clone(), value.clone());
                                true
                            }
                        },
                    }
                });
                if ok {
                    next.push(ext);
                }
            }
        }
        solutions = next;
    }
    for bind in &query.binds {
        for sol in &mut solutions {
            let v = str_of(&sol[&bind.source], options.strip_base.as_deref());
            sol.insert(bind.target.clone(), v);
        }
    }
    let vars = query.projected();
    let mut out = AnswerMultiset::new(vars.clone());
    for sol in solutions {
        out.insert(vars.iter().map(|v| sol[v].clone()).collect(), 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program_is_identity() {
        let facts = [Triple::raw(1, 2, 3), Triple::raw(3, 2, 1)];
        assert_eq!(naive_materialise(facts, &[]), facts.into_iter().collect());
    }

    #[test]
    fn clique_formula_small() {
        for n in 1..=4u64 {
            assert_eq!(count_clique_derivations(n as usize), 2 * n.pow(3) + n * n + n);
        }
    }

    #[test]
    fn expansion_size_is_product_of_cliques() {
        let map = RepresentativeMap::new(8);
        for (d, c) in [(2, 1), (4, 3), (5, 3), (7, 6)] {
            map.merge_into(ResourceId::new(d), ResourceId::new(c)).unwrap();
        }
        let e = expand([Triple::raw(1, 3, 6)], &map);
        assert_eq!(e.len(), 2 * 3 * 2);
        assert!(expand([Triple::raw(2, 3, 6)], &map).is_empty());
    }
}
