//! Rules, programs, annotated queries and the equality axioms.

mod parser;

use std::fmt;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::dictionary::{Dictionary, ResourceId};
use crate::error::{Error, Result};
use crate::repmap::RepresentativeMap;
use crate::store::{Pattern, Strictness, Triple};

pub(crate) use parser::bare_name_term;
pub use parser::{parse_rules, ParsedProgram};

pub type VarId = u16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum RuleTerm {
    Var(VarId),
    Const(ResourceId),
}

impl RuleTerm {
    pub fn as_const(self) -> Option<ResourceId> {
        match self {
            RuleTerm::Const(c) => Some(c),
            RuleTerm::Var(_) => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub s: RuleTerm,
    pub p: RuleTerm,
    pub o: RuleTerm,
}

impl Atom {
    pub fn new(s: RuleTerm, p: RuleTerm, o: RuleTerm) -> Self {
        Self { s, p, o }
    }

    pub fn terms(&self) -> [RuleTerm; 3] {
        [self.s, self.p, self.o]
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        self.terms().into_iter().filter_map(|t| match t {
            RuleTerm::Var(v) => Some(v),
            RuleTerm::Const(_) => None,
        })
    }

    fn map_consts(self, f: impl Fn(ResourceId) -> ResourceId) -> Self {
        let m = |t| match t {
            RuleTerm::Const(c) => RuleTerm::Const(f(c)),
            v => v,
        };
        Self::new(m(self.s), m(self.p), m(self.o))
    }

    /// Which of s/p/o are constants (bits 0/1/2) and their raw ids.
    fn signature(&self) -> (u8, [u32; 3]) {
        let mut mask = 0;
        let mut key = [0; 3];
        for (i, t) in self.terms().into_iter().enumerate() {
            if let RuleTerm::Const(c) = t {
                mask |= 1 << i;
                key[i] = c.get();
            }
        }
        (mask, key)
    }
}

/// A partial assignment of resources to a rule's variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Substitution(Vec<Option<ResourceId>>);

impl Substitution {
    pub fn empty(var_count: usize) -> Self {
        Self(vec![None; var_count])
    }

    pub fn get(&self, v: VarId) -> Option<ResourceId> {
        self.0.get(v as usize).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Option<ResourceId>] {
        &self.0
    }

    pub fn is_total(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    fn resolve(&self, t: RuleTerm) -> Option<ResourceId> {
        match t {
            RuleTerm::Const(c) => Some(c),
            RuleTerm::Var(v) => self.get(v),
        }
    }

    /// The store pattern for `atom` under this substitution.
    pub fn pattern(&self, atom: &Atom) -> Pattern {
        Pattern::new(self.resolve(atom.s), self.resolve(atom.p), self.resolve(atom.o))
    }

    pub fn instantiate(&self, atom: &Atom) -> Option<Triple> {
        Some(Triple::new(
            self.resolve(atom.s)?,
            self.resolve(atom.p)?,
            self.resolve(atom.o)?,
        ))
    }

    /// Extends the substitution so that `atom` maps to `fact`. On success
    /// returns the newly bound variables; on failure leaves `self` unchanged.
    pub fn unify(&mut self, atom: &Atom, fact: &Triple) -> Option<Bindings> {
        let mut bound = Bindings::default();
        for (term, value) in atom.terms().into_iter().zip(fact.terms()) {
            let ok = match term {
                RuleTerm::Const(c) => c == value,
                RuleTerm::Var(v) => match self.0[v as usize] {
                    Some(existing) => existing == value,
                    None => {
                        self.0[v as usize] = Some(value);
                        bound.push(v);
                        true
                    }
                },
            };
            if !ok {
                self.unbind(bound);
                return None;
            }
        }
        Some(bound)
    }

    pub fn unbind(&mut self, bound: Bindings) {
        for v in bound.iter() {
            self.0[v as usize] = None;
        }
    }
}

/// Up to three variables bound by one [`Substitution::unify`] call.
#[derive(Clone, Copy, Default, Debug)]
pub struct Bindings {
    vars: [VarId; 3],
    len: u8,
}

impl Bindings {
    fn push(&mut self, v: VarId) {
        self.vars[self.len as usize] = v;
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars[..self.len as usize].iter().copied()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Variable names, indexed by [`VarId`].
    pub vars: Vec<String>,
}

impl Rule {
    /// Checks that the body is nonempty and every head variable occurs in it.
    pub fn new(head: Atom, body: Vec<Atom>, vars: Vec<String>) -> Result<Self> {
        if body.is_empty() {
            return Err(Error::parse(0, "rule body must not be empty"));
        }
        for v in head.vars() {
            if !body.iter().any(|a| a.vars().any(|w| w == v)) {
                return Err(Error::UnsafeRule {
                    line: 0,
                    variable: vars.get(v as usize).cloned().unwrap_or_default(),
                });
            }
        }
        Ok(Self { head, body, vars })
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn constants(&self) -> impl Iterator<Item = ResourceId> + '_ {
        std::iter::once(&self.head)
            .chain(self.body.iter())
            .flat_map(|a| a.terms())
            .filter_map(RuleTerm::as_const)
    }

    /// The rule with every constant replaced by its representative.
    pub fn normalize(&self, map: &RepresentativeMap) -> Rule {
        let f = |c| map.resolve(c);
        Rule {
            head: self.head.map_consts(f),
            body: self.body.iter().map(|a| a.map_consts(f)).collect(),
            vars: self.vars.clone(),
        }
    }

    /// Every body atom annotated inclusive.
    pub fn body_annotated(&self) -> AnnotatedQuery {
        AnnotatedQuery(
            self.body
                .iter()
                .map(|&atom| AnnotatedAtom {
                    atom,
                    strictness: Strictness::Inclusive,
                })
                .collect(),
        )
    }

    /// Body atoms other than `i`: those before it strict, those after it
    /// inclusive.
    pub fn query_for_position(&self, i: usize) -> AnnotatedQuery {
        AnnotatedQuery(
            self.body
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &atom)| AnnotatedAtom {
                    atom,
                    strictness: if j < i {
                        Strictness::Strict
                    } else {
                        Strictness::Inclusive
                    },
                })
                .collect(),
        )
    }

    pub fn display<'a>(&'a self, dict: &'a Dictionary) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, dict }
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    dict: &'a Dictionary,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |t: RuleTerm| match t {
            RuleTerm::Var(v) => format!("?{}", self.rule.vars[v as usize]),
            RuleTerm::Const(c) => match self.dict.lookup(c) {
                Ok(term) => term.to_string(),
                Err(_) => format!("#{c}"),
            },
        };
        let atom = |a: &Atom| format!("[{}, {}, {}]", term(a.s), term(a.p), term(a.o));
        let body: Vec<_> = self.rule.body.iter().map(atom).collect();
        write!(f, "{} :- {} .", atom(&self.rule.head), body.join(", "))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct AnnotatedAtom {
    pub atom: Atom,
    pub strictness: Strictness,
}

/// A conjunction of atoms, each restricted to facts strictly before or up to
/// a window position.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct AnnotatedQuery(pub Vec<AnnotatedAtom>);

impl AnnotatedQuery {
    pub fn atoms(&self) -> &[AnnotatedAtom] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// The equality axioms over a given `owl:sameAs` id.
#[derive(Clone, Debug)]
pub struct EqualityAxioms {
    /// Three reflexivity rules followed by the three replacement rules.
    pub rules: Vec<Rule>,
    /// Body of the contradiction rule, `[?x, owl:differentFrom, ?x]`.
    pub contradiction: Atom,
}

pub fn eq_axiomatisation(same_as: ResourceId, different_from: ResourceId) -> EqualityAxioms {
    use RuleTerm::{Const, Var};
    let sa = Const(same_as);
    let (x1, x2, x3, y) = (Var(0), Var(1), Var(2), Var(3));
    let spo = Atom::new(x1, x2, x3);
    let names = |last: &str| vec!["x1".into(), "x2".into(), "x3".into(), last.into()];
    let mut rules = Vec::with_capacity(6);
    for x in [x1, x2, x3] {
        rules.push(Rule::new(Atom::new(x, sa, x), vec![spo], names("unused")).unwrap());
    }
    for i in 0..3 {
        let mut head = [x1, x2, x3];
        head[i] = y;
        let eq = Atom::new([x1, x2, x3][i], sa, y);
        let prime = format!("x{}'", i + 1);
        rules.push(Rule::new(Atom::new(head[0], head[1], head[2]), vec![spo, eq], names(&prime)).unwrap());
    }
    // reflexivity rules never mention the fourth variable
    for r in &mut rules[..3] {
        r.vars.truncate(3);
    }
    EqualityAxioms {
        rules,
        contradiction: Atom::new(Var(0), Const(different_from), Var(0)),
    }
}

/// One result of [`Program::rules_for`].
#[derive(Clone, Debug)]
pub struct RuleMatch<'a> {
    pub rule_index: usize,
    pub rule: &'a Arc<Rule>,
    pub body_position: usize,
    pub query: &'a AnnotatedQuery,
    pub sigma: Substitution,
}

/// Bound-position mask and constants of a body atom.
type Signature = (u8, [u32; 3]);

/// A deduplicated set of rules with an index from body-atom signatures to
/// (rule, body position) pairs.
#[derive(Clone, Debug, Default)]
pub struct Program {
    rules: Vec<Arc<Rule>>,
    members: FxHashSet<Arc<Rule>>,
    queries: Vec<Vec<AnnotatedQuery>>,
    index: FxHashMap<Signature, Vec<(u32, u32)>>,
}

impl Program {
    pub fn new(rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut program = Self::default();
        for r in rules {
            program.push(Arc::new(r));
        }
        program
    }

    fn push(&mut self, rule: Arc<Rule>) {
        if !self.members.insert(rule.clone()) {
            return;
        }
        let idx = self.rules.len() as u32;
        for (pos, atom) in rule.body.iter().enumerate() {
            self.index.entry(atom.signature()).or_default().push((idx, pos as u32));
        }
        self.queries
            .push((0..rule.body.len()).map(|i| rule.query_for_position(i)).collect());
        self.rules.push(rule);
    }

    pub fn rules(&self) -> &[Arc<Rule>] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn contains(&self, rule: &Rule) -> bool {
        self.members.contains(rule)
    }

    /// Every (rule, body position, annotated query, matching substitution)
    /// whose body atom unifies with `fact`, ordered by rule then position.
    pub fn rules_for(&self, fact: &Triple) -> Vec<RuleMatch<'_>> {
        let raw = [fact.s.get(), fact.p.get(), fact.o.get()];
        let mut hits: Vec<(u32, u32)> = Vec::new();
        for mask in 0u8..8 {
            let key = std::array::from_fn(|i| if mask & (1 << i) != 0 { raw[i] } else { 0 });
            if let Some(entries) = self.index.get(&(mask, key)) {
                hits.extend_from_slice(entries);
            }
        }
        hits.sort_unstable();
        hits.into_iter()
            .filter_map(|(r, pos)| {
                let rule = &self.rules[r as usize];
                let mut sigma = Substitution::empty(rule.var_count());
                sigma.unify(&rule.body[pos as usize], fact)?;
                Some(RuleMatch {
                    rule_index: r as usize,
                    rule,
                    body_position: pos as usize,
                    query: &self.queries[r as usize][pos as usize],
                    sigma,
                })
            })
            .collect()
    }

    /// `ρ(P)`, deduplicated.
    pub fn normalize(&self, map: &RepresentativeMap) -> Program {
        Program::new(self.rules.iter().map(|r| r.normalize(map)))
    }

    /// `{ρ(r) | r ∈ P, ρ(r) ∉ P}` in rule order, deduplicated.
    pub fn changed_rules(&self, map: &RepresentativeMap) -> Vec<Arc<Rule>> {
        let mut seen = FxHashSet::default();
        self.rules
            .iter()
            .map(|r| r.normalize(map))
            .filter(|r| !self.contains(r) && seen.insert(r.clone()))
            .map(Arc::new)
            .collect()
    }

    /// Returns `ρ(P)` together with the rules that rewriting changed.
    pub fn rewrite(&self, map: &RepresentativeMap) -> (Program, Vec<Arc<Rule>>) {
        (self.normalize(map), self.changed_rules(map))
    }

    pub fn extended(&self, extra: impl IntoIterator<Item = Rule>) -> Program {
        let mut p = self.clone();
        for r in extra {
            p.push(Arc::new(r));
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;
    use RuleTerm::{Const, Var};

    fn c(x: u32) -> RuleTerm {
        Const(ResourceId::new(x))
    }

    fn rule(head: Atom, body: Vec<Atom>) -> Rule {
        let n = std::iter::once(&head)
            .chain(&body)
            .flat_map(|a| a.vars())
            .max()
            .map_or(0, |v| v as usize + 1);
        Rule::new(head, body, (0..n).map(|i| format!("v{i}")).collect()).unwrap()
    }

    #[test]
    fn unsafe_rule_is_rejected() {
        let err = Rule::new(
            Atom::new(Var(1), c(1), c(2)),
            vec![Atom::new(Var(0), c(3), c(4))],
            vec!["x".into(), "y".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsafeRule { ref variable, .. } if variable == "y"));
    }

    #[test]
    fn axioms_have_seven_rules_without_symmetry() {
        let ax = eq_axiomatisation(ResourceId::new(1), ResourceId::new(2));
        assert_eq!(ax.rules.len() + 1, 7);
        // ≈2: [x1', x2, x3] :- [x1, x2, x3], [x1, sameAs, x1']
        let eq2 = &ax.rules[3];
        assert_eq!(eq2.head, Atom::new(Var(3), Var(1), Var(2)));
        assert_eq!(
            eq2.body,
            vec![Atom::new(Var(0), Var(1), Var(2)), Atom::new(Var(0), c(1), Var(3))]
        );
        // symmetry would be [y, sameAs, x] :- [x, sameAs, y] with a single body atom
        assert!(ax.rules.iter().all(|r| r.body.len() == 1 || r.body.len() == 2));
        assert!(ax.rules[..3]
            .iter()
            .all(|r| r.body == vec![Atom::new(Var(0), Var(1), Var(2))]));
        assert_eq!(ax.contradiction, Atom::new(Var(0), c(2), Var(0)));
    }

    #[test]
    fn rules_for_matches_positions_with_annotations() {
        // [?x, 9, ?y] :- [?x, 5, ?y], [?x, 5, ?y]
        let a = Atom::new(Var(0), c(5), Var(1));
        let p = Program::new([rule(Atom::new(Var(0), c(9), Var(1)), vec![a, a])]);
        let hits = p.rules_for(&Triple::raw(1, 5, 2));
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].query.atoms()[0].strictness, Strictness::Inclusive);
        assert_eq!(hits[1].query.atoms()[0].strictness, Strictness::Strict);
        assert!(p.rules_for(&Triple::raw(1, 6, 2)).is_empty());
    }

    #[test]
    fn repeated_variables_must_agree() {
        let p = Program::new([rule(
            Atom::new(Var(0), c(9), Var(0)),
            vec![Atom::new(Var(0), c(5), Var(0))],
        )]);
        assert!(p.rules_for(&Triple::raw(1, 5, 2)).is_empty());
        assert_eq!(p.rules_for(&Triple::raw(3, 5, 3)).len(), 1);
    }

    #[test]
    fn rewriting_reports_changed_rules_and_is_idempotent() {
        let map = RepresentativeMap::new(10);
        let r = rule(Atom::new(Var(0), c(1), c(8)), vec![Atom::new(c(6), c(4), Var(0))]);
        let s = rule(Atom::new(Var(0), c(1), c(6)), vec![Atom::new(Var(0), c(4), c(8))]);
        let p = Program::new([r.clone(), s.clone()]);
        let (same, changed) = p.rewrite(&map);
        assert!(changed.is_empty());
        assert_eq!(same.rules(), p.rules());

        map.merge_into(ResourceId::new(8), ResourceId::new(5)).unwrap();
        let (p2, changed) = p.rewrite(&map);
        assert_eq!(changed.len(), 2);
        assert_eq!(changed[0].head, Atom::new(Var(0), c(1), c(5)));
        let (p3, again) = p2.rewrite(&map);
        assert!(again.is_empty());
        assert_eq!(p3.rules(), p2.rules());
    }

    #[test]
    fn collapsed_rules_are_deduplicated() {
        let map = RepresentativeMap::new(10);
        let r1 = rule(Atom::new(Var(0), c(1), c(2)), vec![Atom::new(Var(0), c(3), c(4))]);
        let r2 = rule(Atom::new(Var(0), c(1), c(2)), vec![Atom::new(Var(0), c(3), c(5))]);
        let p = Program::new([r1, r2]);
        map.merge_into(ResourceId::new(5), ResourceId::new(4)).unwrap();
        assert_eq!(p.normalize(&map).len(), 1);
        assert!(p.changed_rules(&map).is_empty());
    }

    fn arb_term() -> impl Strategy<Value = RuleTerm> {
        prop_oneof![(0u16..3).prop_map(Var), (1u32..4).prop_map(c)]
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        (arb_term(), arb_term(), arb_term()).prop_map(|(s, p, o)| Atom::new(s, p, o))
    }

    proptest! {
        #[test]
        fn index_agrees_with_brute_force_unification(
            bodies in prop::collection::vec(prop::collection::vec(arb_atom(), 1..4), 1..6),
            fact in (1u32..4, 1u32..4, 1u32..4),
        ) {
            let rules: Vec<Rule> = bodies
                .into_iter()
                .map(|body| Rule::new(body[0], body, vec!["a".into(), "b".into(), "c".into()]).unwrap())
                .collect();
            let p = Program::new(rules);
            let fact = Triple::raw(fact.0, fact.1, fact.2);
            let got: BTreeSet<(usize, usize)> =
                p.rules_for(&fact).iter().map(|m| (m.rule_index, m.body_position)).collect();
            let mut want = BTreeSet::new();
            for (ri, r) in p.rules().iter().enumerate() {
                for (bi, atom) in r.body.iter().enumerate() {
                    if Substitution::empty(3).unify(atom, &fact).is_some() {
                        want.insert((ri, bi));
                    }
                }
            }
            prop_assert_eq!(got, want);
        }
    }
}
