//! Loading, materialising and querying in one place; used by the command
//! line tool and the C interface.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, DEFAULT_BASE};
use crate::engine::{materialise, EngineConfig, MaterialisationResult, MaterialisationStats, Mode, Outcome};
use crate::error::Result;
use crate::ntriples;
use crate::oracle::{self, PropertyReport};
use crate::rules::{parse_rules, Program, Rule};
use crate::sparql::{answer, parse_query, AnswerMultiset, QueryOptions};
use crate::store::Triple;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub thread_count: usize,
    pub wall_time_seconds: f64,
    pub stats: MaterialisationStats,
    pub triples_after_unmarked: usize,
    pub triples_after_total: usize,
    pub outcome: Outcome,
}

pub struct Session {
    dict: Dictionary,
    facts: Vec<Triple>,
    rules: Vec<Rule>,
    base: String,
    run: Option<(MaterialisationResult, RunReport)>,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(DEFAULT_BASE)
    }
}

impl Session {
    /// `base` resolves bare names in rules and queries and is what `STR`
    /// strips from IRIs.
    pub fn new(base: &str) -> Self {
        Self {
            dict: Dictionary::with_builtins(),
            facts: Vec::new(),
            rules: Vec::new(),
            base: base.to_string(),
            run: None,
        }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn facts(&self) -> &[Triple] {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Returns the number of triples read.
    pub fn load_data(&mut self, text: &str) -> Result<usize> {
        let triples = ntriples::parse(text, &self.dict)?;
        let n = triples.len();
        self.facts.extend(triples);
        self.run = None;
        Ok(n)
    }

    /// Returns the number of rules read; ground statements become facts.
    pub fn load_rules(&mut self, text: &str) -> Result<usize> {
        let parsed = parse_rules(text, &self.dict, &self.base)?;
        let n = parsed.rules.len();
        self.rules.extend(parsed.rules);
        self.facts.extend(parsed.facts);
        self.run = None;
        Ok(n)
    }

    pub fn materialise(&mut self, config: &EngineConfig) -> Result<&RunReport> {
        let vocab = self.dict.vocabulary();
        let program = Program::new(self.rules.iter().cloned());
        let start = Instant::now();
        let result = materialise(self.facts.iter().copied(), &program, vocab, self.dict.len() + 1, config)?;
        let report = RunReport {
            mode: config.mode,
            thread_count: config.threads.max(1),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            stats: result.stats,
            triples_after_unmarked: result.store.len(),
            triples_after_total: result.total_facts,
            outcome: result.outcome,
        };
        self.run = Some((result, report));
        Ok(&self.run.as_ref().unwrap().1)
    }

    pub fn result(&self) -> Option<&MaterialisationResult> {
        self.run.as_ref().map(|(r, _)| r)
    }

    pub fn report(&self) -> Option<&RunReport> {
        self.run.as_ref().map(|(_, r)| r)
    }

    fn require_result(&self) -> Result<&MaterialisationResult> {
        self.result()
            .ok_or_else(|| crate::Error::Query("nothing has been materialised yet".into()))
    }

    pub fn query(&self, text: &str) -> Result<AnswerMultiset> {
        let result = self.require_result()?;
        let query = parse_query(text, &self.base)?;
        let options = QueryOptions {
            strip_base: Some(self.base.clone()),
        };
        answer(&result.store, &result.map, &self.dict, &query, &options)
    }

    /// The materialised facts, one N-Triples line each, in log order.
    pub fn export_plain(&self) -> Result<String> {
        let result = self.require_result()?;
        ntriples::export_to_string(&self.dict, result.store.unmarked().map(|f| f.triple))
    }

    /// Every fact of the expansion, sorted by resource ids.
    pub fn export_expanded(&self) -> Result<String> {
        let result = self.require_result()?;
        ntriples::export_to_string(&self.dict, oracle::expand_store(&result.store, &result.map))
    }

    /// Checks the last run against the naive reference materialisation.
    pub fn verify(&self) -> Result<PropertyReport> {
        let result = self.require_result()?;
        Ok(oracle::check_properties(
            result,
            &self.facts,
            &self.rules,
            self.dict.vocabulary(),
        ))
    }
}
