#ifndef EQMAT_H
#define EQMAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EqmatStatus {
  EQMAT_STATUS_OK = 0,
  /**
   * Materialisation finished but derived a contradiction; results are
   * still available.
   */
  EQMAT_STATUS_CONTRADICTION = 1,
  EQMAT_STATUS_NULL_ARGUMENT = 2,
  EQMAT_STATUS_INVALID_UTF8 = 3,
  EQMAT_STATUS_PARSE_ERROR = 4,
  EQMAT_STATUS_QUERY_ERROR = 5,
  EQMAT_STATUS_NOT_MATERIALISED = 6,
  EQMAT_STATUS_INVALID_ARGUMENT = 7,
  EQMAT_STATUS_INTERNAL = 8,
} EqmatStatus;

typedef enum EqmatMode {
  EQMAT_MODE_AX = 0,
  EQMAT_MODE_REW = 1,
} EqmatMode;

typedef enum EqmatExport {
  EQMAT_EXPORT_PLAIN = 0,
  EQMAT_EXPORT_EXPANDED = 1,
} EqmatExport;

/**
 * Opaque session: loaded data and rules plus the last materialisation.
 */
typedef struct EqmatSession EqmatSession;

typedef struct EqmatStats {
  uint64_t rule_applications;
  uint64_t derivations;
  uint64_t reflexive_derivations;
  uint64_t merged_resources;
  uint64_t marked_facts;
  uint64_t triples_unmarked;
  uint64_t triples_total;
} EqmatStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a session. `base_iri` may be null for the default base.
 * Returns null if `base_iri` is not valid UTF-8.
 */
struct EqmatSession *eqmat_session_new(const char *base_iri);

void eqmat_session_free(struct EqmatSession *session);

/**
 * Adds N-Triples data. Load data before rules to keep ids in file order.
 */
enum EqmatStatus eqmat_load_data(struct EqmatSession *session, const char *ntriples);

enum EqmatStatus eqmat_load_rules(struct EqmatSession *session, const char *rules);

/**
 * Materialises with `threads` workers (at least 1). `stats` may be null.
 */
enum EqmatStatus eqmat_materialise(struct EqmatSession *session,
                                   enum EqmatMode mode,
                                   uint32_t threads,
                                   struct EqmatStats *stats);

/**
 * Answers a query; `*tsv_out` receives a header line and one line per
 * answer occurrence.
 */
enum EqmatStatus eqmat_query(struct EqmatSession *session, const char *query, char **tsv_out);

/**
 * Writes the materialised facts (or their expansion) as N-Triples.
 */
enum EqmatStatus eqmat_export(struct EqmatSession *session,
                              enum EqmatExport kind,
                              char **ntriples_out);

/**
 * Checks the last run against the reference materialisation; `*holds` is
 * set to whether every correctness property held.
 */
enum EqmatStatus eqmat_verify(struct EqmatSession *session, bool *holds);

void eqmat_string_free(char *s);

/**
 * Message for the last failure on this thread. Valid until the next call
 * into the library from the same thread.
 */
const char *eqmat_last_error(void);

const char *eqmat_status_message(enum EqmatStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQMAT_H */
