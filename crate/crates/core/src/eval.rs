//! Annotated query evaluation by nested index-loop joins.

use crate::rules::{AnnotatedQuery, Substitution};
use crate::store::{FactStore, Position};

/// Calls `emit` once for every minimal extension of `sigma` that matches each
/// annotated atom to an unmarked fact inside its window at `window`.
///
/// Atoms are joined in the order given. `sigma` is restored before returning.
pub fn evaluate_with(
    store: &FactStore,
    query: &AnnotatedQuery,
    window: Position,
    sigma: &mut Substitution,
    emit: &mut dyn FnMut(&Substitution),
) {
    join(store, query, 0, window, sigma, emit);
}

fn join(
    store: &FactStore,
    query: &AnnotatedQuery,
    depth: usize,
    window: Position,
    sigma: &mut Substitution,
    emit: &mut dyn FnMut(&Substitution),
) {
    let Some(step) = query.atoms().get(depth) else {
        emit(sigma);
        return;
    };
    let end = step.strictness.end(window);
    for fact in store.scan_before(sigma.pattern(&step.atom), end, true) {
        if let Some(bound) = sigma.unify(&step.atom, &fact.triple) {
            join(store, query, depth + 1, window, sigma, emit);
            sigma.unbind(bound);
        }
    }
}

/// Collecting form of [`evaluate_with`].
pub fn evaluate(
    store: &FactStore,
    query: &AnnotatedQuery,
    window: Position,
    sigma: &Substitution,
) -> Vec<Substitution> {
    let mut out = Vec::new();
    let mut sigma = sigma.clone();
    evaluate_with(store, query, window, &mut sigma, &mut |tau| out.push(tau.clone()));
    out
}
