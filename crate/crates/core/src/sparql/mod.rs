//! Query answering over a rewritten store.
//!
//! The pattern is matched against representatives only. Each variable is then
//! expanded to the members of its clique exactly once: just before a `BIND`
//! that reads it, or at projection. Variables projected away without being
//! expanded contribute their clique size as a multiplicity instead.

mod parser;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::dictionary::{Dictionary, ResourceId, Term, DEFAULT_BASE};
use crate::error::{Error, Result};
use crate::eval::evaluate_with;
use crate::repmap::RepresentativeMap;
use crate::rules::{AnnotatedAtom, AnnotatedQuery, Atom, RuleTerm, Substitution};
use crate::store::{FactStore, Strictness};

pub use parser::parse_query;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QueryTerm {
    Var(String),
    Const(Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub s: QueryTerm,
    pub p: QueryTerm,
    pub o: QueryTerm,
}

impl TriplePattern {
    pub fn terms(&self) -> [&QueryTerm; 3] {
        [&self.s, &self.p, &self.o]
    }
}

/// `BIND(STR(?source) AS ?target)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bind {
    pub source: String,
    pub target: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectQuery {
    /// `None` for `SELECT *`.
    pub projection: Option<Vec<String>>,
    pub patterns: Vec<TriplePattern>,
    pub binds: Vec<Bind>,
}

impl SelectQuery {
    /// Pattern variables in order of first occurrence.
    pub fn pattern_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in self.patterns.iter().flat_map(|p| p.terms()) {
            if let QueryTerm::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Pattern variables followed by bind targets.
    pub fn all_vars(&self) -> Vec<String> {
        let mut vars = self.pattern_vars();
        vars.extend(self.binds.iter().map(|b| b.target.clone()));
        vars
    }

    pub fn projected(&self) -> Vec<String> {
        self.projection.clone().unwrap_or_else(|| self.all_vars())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let mut known = self.pattern_vars();
        for b in &self.binds {
            if !known.contains(&b.source) {
                return Err(Error::Query(format!(
                    "line {}: ?{} is not bound before BIND",
                    b.line, b.source
                )));
            }
            if known.contains(&b.target) {
                return Err(Error::Query(format!(
                    "line {}: BIND target ?{} is already in use",
                    b.line, b.target
                )));
            }
            known.push(b.target.clone());
        }
        for v in self.projection.iter().flatten() {
            if !known.contains(v) {
                return Err(Error::Query(format!(
                    "projected variable ?{v} does not occur in the query"
                )));
            }
        }
        Ok(())
    }
}

/// `STR`: the lexical form, with `base` stripped from IRIs that start with it.
pub fn str_of(term: &Term, base: Option<&str>) -> Term {
    match term {
        Term::Iri(iri) => {
            let s = base.and_then(|b| iri.strip_prefix(b)).unwrap_or(iri);
            Term::literal(s)
        }
        Term::Literal(l) => Term::literal(l.clone()),
    }
}

#[derive(Clone, Debug)]
pub struct QueryOptions {
    /// Prefix removed by `STR`; `None` keeps full IRIs.
    pub strip_base: Option<String>,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self {
            strip_base: Some(DEFAULT_BASE.to_string()),
        }
    }
}

/// Bag of answers: each distinct binding of the projected variables with
/// its multiplicity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnswerMultiset {
    pub vars: Vec<String>,
    pub rows: BTreeMap<Vec<Term>, u64>,
}

impl AnswerMultiset {
    pub fn new(vars: Vec<String>) -> Self {
        Self {
            vars,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, binding: Vec<Term>, multiplicity: u64) {
        debug_assert_eq!(binding.len(), self.vars.len());
        if multiplicity > 0 {
            *self.rows.entry(binding).or_default() += multiplicity;
        }
    }

    /// Total number of answers, counting repeats.
    pub fn total(&self) -> u64 {
        self.rows.values().sum()
    }

    pub fn multiplicity(&self, binding: &[Term]) -> u64 {
        self.rows.get(binding).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header line of `?var` names, then one line per answer occurrence.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<_> = self.vars.iter().map(|v| format!("?{v}")).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for (binding, &n) in &self.rows {
            let line: Vec<_> = binding.iter().map(|t| t.to_string()).collect();
            let line = line.join("\t");
            for _ in 0..n {
                let _ = writeln!(out, "{line}");
            }
        }
        out
    }
}

/// A query whose constants have been replaced by representatives.
#[derive(Clone, Debug)]
pub struct NormalizedQuery {
    pub vars: Vec<String>,
    pub body: AnnotatedQuery,
    /// Some constant is unknown to the dictionary, so nothing can match.
    pub unsatisfiable: bool,
}

/// `ρ(Q)`: pattern constants mapped to representatives.
pub fn normalize_query(map: &RepresentativeMap, dict: &Dictionary, query: &SelectQuery) -> NormalizedQuery {
    let vars = query.pattern_vars();
    let mut unsatisfiable = false;
    let mut term = |t: &QueryTerm| match t {
        QueryTerm::Var(v) => RuleTerm::Var(vars.iter().position(|w| w == v).unwrap() as u16),
        QueryTerm::Const(c) => match dict.id_of(c) {
            Some(id) if id.index() < map.resource_bound() => RuleTerm::Const(map.resolve(id)),
            _ => {
                unsatisfiable = true;
                // any id works here; the query is never evaluated
                RuleTerm::Const(ResourceId::new(1))
            }
        },
    };
    let atoms = query
        .patterns
        .iter()
        .map(|p| AnnotatedAtom {
            atom: Atom::new(term(&p.s), term(&p.p), term(&p.o)),
            strictness: Strictness::Inclusive,
        })
        .collect();
    NormalizedQuery {
        vars,
        body: AnnotatedQuery(atoms),
        unsatisfiable,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Resource(ResourceId),
    Term(Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<Value>,
    pub multiplicity: u64,
}

/// Intermediate solutions with the expansion state of every variable.
#[derive(Clone, Debug)]
pub struct Solutions {
    pub vars: Vec<String>,
    pub expanded: Vec<bool>,
    pub rows: Vec<Solution>,
}

impl Solutions {
    fn index_of(&self, var: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| Error::Query(format!("unknown variable ?{var}")))
    }

    pub fn is_expanded(&self, var: &str) -> bool {
        self.index_of(var).is_ok_and(|i| self.expanded[i])
    }

    /// Replaces each solution by one copy per member of the clique bound to
    /// `var`. Expanding a variable a second time is an error.
    pub fn expand_variable(&mut self, var: &str, map: &RepresentativeMap) -> Result<()> {
        let i = self.index_of(var)?;
        if self.expanded[i] {
            return Err(Error::DoubleExpansion(var.to_string()));
        }
        self.expanded[i] = true;
        let mut out = Vec::with_capacity(self.rows.len());
        for row in self.rows.drain(..) {
            match &row.values[i] {
                Value::Resource(r) => {
                    for m in map.clique_members(*r) {
                        let mut copy = row.clone();
                        copy.values[i] = Value::Resource(m);
                        out.push(copy);
                    }
                }
                Value::Term(_) => out.push(row),
            }
        }
        self.rows = out;
        Ok(())
    }

    /// Extends every solution with `target ↦ STR(source)`; `source` must
    /// already be expanded.
    pub fn apply_bind(&mut self, bind: &Bind, dict: &Dictionary, options: &QueryOptions) -> Result<()> {
        let i = self.index_of(&bind.source)?;
        if !self.expanded[i] {
            return Err(Error::Query(format!(
                "?{} must be expanded before BIND reads it",
                bind.source
            )));
        }
        if self.vars.contains(&bind.target) {
            return Err(Error::Query(format!("BIND target ?{} is already in use", bind.target)));
        }
        self.vars.push(bind.target.clone());
        self.expanded.push(true);
        for row in &mut self.rows {
            let term = value_term(&row.values[i], dict)?;
            row.values
                .push(Value::Term(str_of(&term, options.strip_base.as_deref())));
        }
        Ok(())
    }
}

fn value_term(v: &Value, dict: &Dictionary) -> Result<Term> {
    match v {
        Value::Resource(r) => dict.lookup(*r),
        Value::Term(t) => Ok(t.clone()),
    }
}

/// Matches the normalised pattern against the unmarked facts of `store`.
pub fn match_bgp(store: &FactStore, query: &NormalizedQuery) -> Solutions {
    let mut rows = Vec::new();
    if !query.unsatisfiable {
        let mut sigma = Substitution::empty(query.vars.len());
        evaluate_with(store, &query.body, store.len(), &mut sigma, &mut |tau| {
            rows.push(Solution {
                values: tau
                    .values()
                    .iter()
                    .map(|v| Value::Resource(v.expect("pattern variable left unbound")))
                    .collect(),
                multiplicity: 1,
            });
        });
    }
    Solutions {
        expanded: vec![false; query.vars.len()],
        vars: query.vars.clone(),
        rows,
    }
}

/// Projects onto `vars`. Unexpanded variables that are dropped multiply the
/// answer by their clique size; unexpanded variables that are kept are
/// expanded here; expanded ones are output as they are.
pub fn project(
    mut solutions: Solutions,
    vars: &[String],
    map: &RepresentativeMap,
    dict: &Dictionary,
) -> Result<AnswerMultiset> {
    let mut out = AnswerMultiset::new(vars.to_vec());
    let projected: Vec<usize> = vars.iter().map(|v| solutions.index_of(v)).collect::<Result<_>>()?;
    let dropped: Vec<usize> = (0..solutions.vars.len())
        .filter(|i| !projected.contains(i) && !solutions.expanded[*i])
        .collect();
    for row in &mut solutions.rows {
        for &i in &dropped {
            if let Value::Resource(r) = row.values[i] {
                row.multiplicity *= map.clique_size(r) as u64;
            }
        }
    }
    for v in vars {
        if !solutions.is_expanded(v) {
            solutions.expand_variable(v, map)?;
        }
    }
    let mut cache: HashMap<ResourceId, Term> = HashMap::new();
    for row in solutions.rows {
        let binding = projected
            .iter()
            .map(|&i| match &row.values[i] {
                Value::Resource(r) => match cache.get(r) {
                    Some(t) => Ok(t.clone()),
                    None => {
                        let t = dict.lookup(*r)?;
                        cache.insert(*r, t.clone());
                        Ok(t)
                    }
                },
                Value::Term(t) => Ok(t.clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(binding, row.multiplicity);
    }
    Ok(out)
}

/// Answers `query` over the expansion of `store` under `map`, without
/// materialising the expansion.
pub fn answer(
    store: &FactStore,
    map: &RepresentativeMap,
    dict: &Dictionary,
    query: &SelectQuery,
    options: &QueryOptions,
) -> Result<AnswerMultiset> {
    let normalized = normalize_query(map, dict, query);
    let mut solutions = match_bgp(store, &normalized);
    for bind in &query.binds {
        if !solutions.is_expanded(&bind.source) {
            solutions.expand_variable(&bind.source, map)?;
        }
        solutions.apply_bind(bind, dict, options)?;
    }
    project(solutions, &query.projected(), map, dict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_select_with_bind() {
        let q = parse_query(
            "SELECT ?y WHERE { ?x presidentOf US . BIND(STR(?x) AS ?y) }",
            DEFAULT_BASE,
        )
        .unwrap();
        assert_eq!(q.projection, Some(vec!["y".to_string()]));
        assert_eq!(q.patterns.len(), 1);
        assert_eq!(q.patterns[0].o, QueryTerm::Const(Term::iri("http://example.org/US")));
        assert_eq!(q.binds[0].source, "x");
    }

    #[test]
    fn rejects_bad_queries() {
        for text in [
            "SELECT WHERE { ?x <p> ?y }",
            "SELECT ?z WHERE { ?x <p> ?y }",
            "SELECT ?x WHERE { ?x <p> ?y . BIND(STR(?x) AS ?y) }",
            "SELECT ?x WHERE { ?x <p> }",
            "SELECT ?x WHERE { ?x <p> ?y } extra",
            "SELECT ?x WHERE { ?x <p> ?y . BIND(STR(?q) AS ?w) }",
        ] {
            assert!(parse_query(text, DEFAULT_BASE).is_err(), "{text}");
        }
    }

    #[test]
    fn str_strips_base() {
        assert_eq!(
            str_of(&Term::iri("http://example.org/Obama"), Some(DEFAULT_BASE)),
            Term::literal("Obama")
        );
        assert_eq!(
            str_of(&Term::iri("http://x/Obama"), Some(DEFAULT_BASE)),
            Term::literal("http://x/Obama")
        );
        assert_eq!(str_of(&Term::literal("a"), None), Term::literal("a"));
    }

    #[test]
    fn double_expansion_is_an_error() {
        let map = RepresentativeMap::new(4);
        let mut s = Solutions {
            vars: vec!["x".into()],
            expanded: vec![false],
            rows: vec![Solution {
                values: vec![Value::Resource(ResourceId::new(1))],
                multiplicity: 1,
            }],
        };
        s.expand_variable("x", &map).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!(matches!(s.expand_variable("x", &map), Err(Error::DoubleExpansion(_))));
    }

    #[test]
    fn tsv_repeats_rows() {
        let mut a = AnswerMultiset::new(vec!["x".into()]);
        a.insert(vec![Term::literal("o")], 2);
        assert_eq!(a.to_tsv(), "?x\n\"o\"\n\"o\"\n");
        assert_eq!(a.total(), 2);
    }
}
