//! Parallel datalog materialisation over RDF triples with `owl:sameAs`
//! handled either by explicit axioms or by rewriting onto representatives.

mod append_vec;
mod syntax;

pub mod cli;
pub mod dictionary;
pub mod engine;
pub mod error;
pub mod eval;
pub mod ntriples;
pub mod oracle;
pub mod repmap;
pub mod rules;
pub mod session;
pub mod sparql;
pub mod store;

pub use dictionary::{Dictionary, ResourceId, Term, Vocabulary};
pub use engine::{materialise, Budget, EngineConfig, MaterialisationResult, MaterialisationStats, Mode, Outcome};
pub use error::{Error, Result};
pub use repmap::RepresentativeMap;
pub use rules::{Program, Rule};
pub use session::{RunReport, Session};
pub use store::{FactStore, Triple};
