#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "chemospread.h"

static const char *CONFIG =
    "{\"params\": {\"chi\": 0.5, \"a\": 1.0, \"b\": 1.0, \"lambda\": 1.0, \"mu\": 1.0, \"dim\": 1},"
    " \"grid\": {\"lo\": [-60.0], \"hi\": [60.0], \"n\": [601], \"boundary\": \"neumann\"},"
    " \"initial\": {\"shape\": {\"kind\": \"compact_bump\", \"radius\": 10.0}},"
    " \"horizon\": 5.0}";

#define CHECK(expr)                                                                   \
    do {                                                                              \
        CsStatus s_ = (expr);                                                         \
        if (s_ != CS_STATUS_OK) {                                                     \
            fprintf(stderr, "%s failed (%d): %s\n", #expr, s_, cs_last_error_message()); \
            return 1;                                                                 \
        }                                                                             \
    } while (0)

int main(void) {
    if (strlen(cs_version()) == 0) return 1;
    if (fabs(cs_kpp_speed(1.0) - 2.0) > 1e-15) return 1;

    CsTheory th;
    CHECK(cs_theory_evaluate(1.0, 1, 0.5, &th));
    if (fabs(th.abar - 0.6875) > 1e-12 || fabs(th.eigenvalue_at_rest - 0.65625) > 1e-12) return 1;

    CsSimulation *sim = NULL;
    CHECK(cs_simulation_from_config(CONFIG, &sim));
    CHECK(cs_simulation_advance(sim, 5.0));
    double t = 0.0;
    CHECK(cs_simulation_time(sim, &t));
    if (t != 5.0) return 1;

    size_t n = 0;
    CHECK(cs_simulation_len(sim, &n));
    double *u = malloc(n * sizeof(double));
    CHECK(cs_simulation_copy_u(sim, u, n));
    for (size_t i = 0; i < n; i++) {
        if (!(u[i] >= 0.0)) return 1;
    }
    free(u);

    double xi[1] = {1.0};
    double front = 0.0;
    CHECK(cs_simulation_front_position(sim, 0.5, xi, 1, &front));
    if (!(front > 10.0 && front < 30.0)) return 1;

    if (cs_simulation_copy_v(sim, NULL, 0) != CS_STATUS_NULL_POINTER) return 1;
    if (strlen(cs_last_error_message()) == 0) return 1;
    cs_simulation_free(sim);

    printf("front %.6f\n", front);
    return 0;
}
