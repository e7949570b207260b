//! The parallel materialisation controller.
//!
//! Workers repeatedly try, in order: evaluating a rule from the updated-rule
//! queue, rewriting the facts of an outdated resource, and applying the rules
//! to the next fact of the log. A worker that finds nothing to do parks at a
//! gate; the last one to park runs the serial phase, which rewrites the
//! program under the current representatives and restarts everyone if any
//! rule changed.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{fence, AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use crossbeam_queue::SegQueue;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dictionary::{ResourceId, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::evaluate_with;
use crate::repmap::RepresentativeMap;
use crate::rules::{eq_axiomatisation, Program, Rule, Substitution};
use crate::store::{Fact, FactStore, Pattern, Position, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Equality by explicit axioms; the map stays the identity.
    Ax,
    /// Equality by rewriting onto representatives.
    Rew,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ax" => Ok(Mode::Ax),
            "rew" => Ok(Mode::Rew),
            _ => Err(Error::parse(0, format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ax => "ax",
            Mode::Rew => "rew",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub mode: Mode,
    pub threads: usize,
    /// Record every (rule, full substitution) pair the workers consider.
    pub log_firings: bool,
    /// If set, workers yield at random points to perturb the schedule.
    pub jitter_seed: Option<u64>,
    /// Abandon the run once both limits are exceeded.
    pub budget: Option<Budget>,
}

/// Derivations and stored facts (marked ones included) only grow during a
/// run, so a run stopped by a budget has certainly gone past both limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub derivations: u64,
    pub facts: usize,
}

impl EngineConfig {
    pub fn new(mode: Mode, threads: usize) -> Self {
        Self {
            mode,
            threads,
            log_firings: false,
            jitter_seed: None,
            budget: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialisationStats {
    /// Rule/query tuples processed per fact, plus one per re-evaluated rule.
    pub rule_applications: u64,
    /// Head instantiations attempted, plus rewrites that produced a new fact.
    pub derivations: u64,
    /// Reflexive `sameAs` facts attempted by the rewriting mode.
    pub reflexive_derivations: u64,
    pub merged_resources: u64,
    pub marked_facts: u64,
}

impl std::ops::AddAssign for MaterialisationStats {
    fn add_assign(&mut self, o: Self) {
        self.rule_applications += o.rule_applications;
        self.derivations += o.derivations;
        self.reflexive_derivations += o.reflexive_derivations;
        self.merged_resources += o.merged_resources;
        self.marked_facts += o.marked_facts;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Consistent,
    Contradiction,
}

/// One rule firing: the rule as it stood when applied and the substitution,
/// indexed by the rule's variables. Variables absent from the body are `None`.
pub type Firing = (Rule, Vec<Option<ResourceId>>);

pub struct MaterialisationResult {
    /// Unmarked facts only, in log order.
    pub store: FactStore,
    pub map: RepresentativeMap,
    pub stats: MaterialisationStats,
    pub outcome: Outcome,
    /// Facts in the log before compaction, marked ones included.
    pub total_facts: usize,
    /// Present when [`EngineConfig::log_firings`] was set.
    pub firings: Option<Vec<Firing>>,
    /// The run was stopped by its budget; store and stats are partial.
    pub truncated: bool,
}

impl fmt::Debug for MaterialisationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialisationResult")
            .field("facts", &self.store.len())
            .field("stats", &self.stats)
            .field("outcome", &self.outcome)
            .field("truncated", &self.truncated)
            .finish()
    }
}

struct Epoch {
    program: Program,
    /// Last fact handed out before the program was rewritten.
    limit: Option<Position>,
}

struct Gate {
    epoch: Arc<Epoch>,
}

struct Shared<'a> {
    mode: Mode,
    threads: usize,
    vocab: Vocabulary,
    original: &'a Program,
    store: FactStore,
    map: RepresentativeMap,
    rules: SegQueue<Arc<Rule>>,
    outdated: SegQueue<ResourceId>,
    gate: Mutex<Gate>,
    wake: Condvar,
    waiting: AtomicUsize,
    run: AtomicBool,
    contradiction: AtomicBool,
    firings: Option<Mutex<Vec<Firing>>>,
    budget: Option<Budget>,
    derived: AtomicU64,
    truncated: AtomicBool,
}

impl Shared<'_> {
    fn notify(&self) {
        fence(Ordering::SeqCst);
        if self.waiting.load(Ordering::SeqCst) > 0 {
            let _g = self.gate.lock().unwrap();
            self.wake.notify_all();
        }
    }

    fn add(&self, t: Triple) -> bool {
        let added = self.store.add(t);
        if added {
            self.notify();
        }
        added
    }

    fn has_work(&self) -> bool {
        !self.rules.is_empty() || !self.outdated.is_empty() || self.store.has_next()
    }

    /// `R := {ρ(r) | r ∈ P′, ρ(r) ∉ P′}`, `L := last`, `P′ := ρ(P)`.
    fn serial_phase(&self, gate: &mut Gate) {
        let changed = gate.epoch.program.changed_rules(&self.map);
        let program = self.original.normalize(&self.map);
        let limit = self.store.last().ok().map(|f| f.position);
        let more = !changed.is_empty();
        for r in changed {
            self.rules.push(r);
        }
        gate.epoch = Arc::new(Epoch { program, limit });
        self.run
            .store(more && !self.truncated.load(Ordering::SeqCst), Ordering::SeqCst);
        self.wake.notify_all();
    }

    /// Publishes `delta` new derivations and stops the run if the budget is
    /// spent.
    fn charge(&self, delta: u64) {
        let Some(b) = self.budget else { return };
        let total = self.derived.fetch_add(delta, Ordering::SeqCst) + delta;
        if total > b.derivations && self.store.len() > b.facts && !self.truncated.swap(true, Ordering::SeqCst) {
            let _g = self.gate.lock().unwrap();
            self.run.store(false, Ordering::SeqCst);
            self.wake.notify_all();
        }
    }

    fn log_firing(&self, rule: &Rule, tau: &Substitution) {
        if let Some(log) = &self.firings {
            log.lock().unwrap().push((rule.clone(), tau.values().to_vec()));
        }
    }
}

struct Worker<'s, 'a> {
    shared: &'s Shared<'a>,
    epoch: Arc<Epoch>,
    stats: MaterialisationStats,
    charged: u64,
    rng: Option<StdRng>,
}

const CHARGE_EVERY: u64 = 1 << 12;

impl Worker<'_, '_> {
    fn jitter(&mut self) {
        if let Some(rng) = &mut self.rng {
            if rng.gen_ratio(1, 3) {
                std::thread::yield_now();
            }
        }
    }

    fn run(mut self) -> MaterialisationStats {
        let sh = self.shared;
        while sh.run.load(Ordering::SeqCst) {
            self.jitter();
            if self.stats.derivations - self.charged >= CHARGE_EVERY {
                sh.charge(self.stats.derivations - self.charged);
                self.charged = self.stats.derivations;
            }
            if self.evaluate_updated_rules() || self.rewrite_facts() || self.apply_rules() {
                continue;
            }
            sh.waiting.fetch_add(1, Ordering::SeqCst);
            fence(Ordering::SeqCst);
            let mut gate = sh.gate.lock().unwrap();
            while !sh.has_work() && sh.run.load(Ordering::SeqCst) {
                if sh.waiting.load(Ordering::SeqCst) == sh.threads {
                    sh.serial_phase(&mut gate);
                } else {
                    gate = sh.wake.wait(gate).unwrap();
                }
            }
            self.epoch = gate.epoch.clone();
            sh.waiting.fetch_sub(1, Ordering::SeqCst);
            drop(gate);
            sh.charge(self.stats.derivations - self.charged);
            self.charged = self.stats.derivations;
        }
        self.stats
    }

    fn evaluate_updated_rules(&mut self) -> bool {
        let sh = self.shared;
        let Some(rule) = sh.rules.pop() else {
            return false;
        };
        self.stats.rule_applications += 1;
        // a rule is only enqueued by a serial phase, which always sets a limit
        // when the log is nonempty; an empty log has nothing to match
        if let Some(limit) = self.epoch.limit {
            let mut sigma = Substitution::empty(rule.var_count());
            let stats = &mut self.stats;
            evaluate_with(&sh.store, &rule.body_annotated(), limit, &mut sigma, &mut |tau| {
                sh.log_firing(&rule, tau);
                stats.derivations += 1;
                if let Some(h) = tau.instantiate(&rule.head) {
                    sh.add(h);
                }
            });
        }
        true
    }

    fn rewrite_facts(&mut self) -> bool {
        let sh = self.shared;
        let Some(c) = sh.outdated.pop() else {
            return false;
        };
        for fact in sh.store.facts_containing(c) {
            self.jitter();
            self.rewrite(fact);
        }
        true
    }

    /// Marks `fact` and adds its normal form; counts a derivation only when
    /// this call both won the mark and created the new fact.
    fn rewrite(&mut self, fact: Fact) {
        let sh = self.shared;
        if sh.store.mark_outdated(fact.position).unwrap_or(false) {
            self.stats.marked_facts += 1;
            if sh.add(sh.map.normalize_fact(fact.triple)) {
                self.stats.derivations += 1;
            }
        }
    }

    fn apply_rules(&mut self) -> bool {
        let sh = self.shared;
        let Some(fact) = sh.store.next() else {
            return false;
        };
        if sh.store.is_marked(fact.position) {
            return true;
        }
        let f = fact.triple;
        match sh.mode {
            Mode::Rew => {
                let g = sh.map.normalize_fact(f);
                if f != g {
                    self.rewrite(fact);
                    return true;
                }
                let same_as = sh.map.resolve(sh.vocab.same_as);
                if f.p == same_as && f.s != f.o {
                    let (c, d) = if f.s < f.o { (f.s, f.o) } else { (f.o, f.s) };
                    if sh.map.merge_into(d, c).expect("merge direction") {
                        self.stats.merged_resources += 1;
                        sh.outdated.push(d);
                        sh.notify();
                    }
                    return true;
                }
                // reflexive equalities and inequalities still feed the rules
                if f.p == sh.map.resolve(sh.vocab.different_from) && f.s == f.o {
                    self.contradiction();
                }
                self.fire(&fact);
                for c in f.terms() {
                    self.stats.reflexive_derivations += 1;
                    sh.add(Triple::new(c, same_as, c));
                }
            }
            Mode::Ax => {
                if f.p == sh.vocab.different_from && f.s == f.o {
                    self.contradiction();
                }
                self.fire(&fact);
            }
        }
        true
    }

    fn contradiction(&self) {
        if !self.shared.contradiction.swap(true, Ordering::SeqCst) {
            self.shared.notify();
        }
    }

    fn fire(&mut self, fact: &Fact) {
        let sh = self.shared;
        let epoch = self.epoch.clone();
        for m in epoch.program.rules_for(&fact.triple) {
            self.stats.rule_applications += 1;
            let mut sigma = m.sigma;
            let stats = &mut self.stats;
            evaluate_with(&sh.store, m.query, fact.position, &mut sigma, &mut |tau| {
                sh.log_firing(m.rule, tau);
                stats.derivations += 1;
                if let Some(h) = tau.instantiate(&m.rule.head) {
                    sh.add(h);
                }
            });
        }
    }
}

/// Computes the materialisation of `program` over `facts`.
///
/// `resource_bound` must exceed every id used by the facts and the program.
/// The returned store is compacted.
pub fn materialise(
    facts: impl IntoIterator<Item = Triple>,
    program: &Program,
    vocab: Vocabulary,
    resource_bound: usize,
    config: &EngineConfig,
) -> Result<MaterialisationResult> {
    let threads = config.threads.max(1);
    let store = FactStore::from_triples(resource_bound, facts);
    let map = RepresentativeMap::new(resource_bound);
    let full;
    let original = match config.mode {
        Mode::Rew => program,
        Mode::Ax => {
            full = program.extended(eq_axiomatisation(vocab.same_as, vocab.different_from).rules);
            &full
        }
    };
    let shared = Shared {
        mode: config.mode,
        threads,
        vocab,
        original,
        store,
        map,
        rules: SegQueue::new(),
        outdated: SegQueue::new(),
        gate: Mutex::new(Gate {
            epoch: Arc::new(Epoch {
                program: original.clone(),
                limit: None,
            }),
        }),
        wake: Condvar::new(),
        waiting: AtomicUsize::new(0),
        run: AtomicBool::new(true),
        contradiction: AtomicBool::new(false),
        firings: config.log_firings.then(|| Mutex::new(Vec::new())),
        budget: config.budget,
        derived: AtomicU64::new(0),
        truncated: AtomicBool::new(false),
    };

    let mut stats = MaterialisationStats::default();
    {
        let _busy = shared.store.materialisation_guard();
        let epoch = shared.gate.lock().unwrap().epoch.clone();
        let per_thread: Vec<MaterialisationStats> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|i| {
                    let worker = Worker {
                        shared: &shared,
                        epoch: epoch.clone(),
                        stats: MaterialisationStats::default(),
                        charged: 0,
                        rng: config
                            .jitter_seed
                            .map(|s| StdRng::seed_from_u64(s.wrapping_add(i as u64))),
                    };
                    scope.spawn(move || worker.run())
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for s in per_thread {
            stats += s;
        }
    }

    if config.mode == Mode::Rew {
        // differentFrom may itself have been merged after a reflexive fact
        // over its new representative was processed
        let df = shared.map.resolve(vocab.different_from);
        let pattern = Pattern::new(None, Some(df), None);
        if shared.store.scan(pattern, None, true).any(|f| f.triple.s == f.triple.o) {
            shared.contradiction.store(true, Ordering::SeqCst);
        }
    }

    let Shared {
        store,
        map,
        contradiction,
        firings,
        truncated,
        ..
    } = shared;
    let total_facts = store.len();
    Ok(MaterialisationResult {
        store: store.compact()?,
        map,
        stats,
        outcome: if contradiction.into_inner() {
            Outcome::Contradiction
        } else {
            Outcome::Consistent
        },
        total_facts,
        firings: firings.map(|m| m.into_inner().unwrap()),
        truncated: truncated.into_inner(),
    })
}
