#include <stdio.h>
#include <string.h>
#include "eqmat.h"

static const char *DATA =
    "<http://example.org/Obama> <http://example.org/presidentOf> <http://example.org/US> .\n"
    "<http://example.org/Obama> <http://example.org/presidentOf> <http://example.org/America> .\n"
    "<http://example.org/USPresident> <http://example.org/presidentOf> <http://example.org/US> .\n";

static const char *RULES =
    "[?x, sameAs, USA] :- [Obama, presidentOf, ?x] .\n"
    "[?x, sameAs, Obama] :- [?x, presidentOf, USA] .\n";

int main(void) {
    EqmatSession *s = eqmat_session_new(NULL);
    if (!s) return 10;
    if (eqmat_load_data(s, DATA) != EQMAT_STATUS_OK) return 11;
    if (eqmat_load_rules(s, RULES) != EQMAT_STATUS_OK) return 12;
    if (eqmat_load_rules(s, "[?x, <p>, ?y] :- [?x, <q>, ?x] .") != EQMAT_STATUS_PARSE_ERROR) return 13;
    if (strstr(eqmat_last_error(), "?y") == NULL) return 14;

    EqmatStats stats;
    if (eqmat_materialise(s, EQMAT_MODE_REW, 2, &stats) != EQMAT_STATUS_OK) return 15;
    if (stats.derivations != 6 || stats.merged_resources != 3) return 16;

    char *tsv = NULL;
    if (eqmat_query(s, "SELECT ?x WHERE { ?x presidentOf ?y }", &tsv) != EQMAT_STATUS_OK) return 17;
    int rows = -1;
    for (const char *p = tsv; *p; p++) rows += *p == '\n';
    eqmat_string_free(tsv);
    if (rows != 6) return 18;

    bool holds = false;
    if (eqmat_verify(s, &holds) != EQMAT_STATUS_OK || !holds) return 19;
    eqmat_session_free(s);
    printf("ok\n");
    return 0;
}
