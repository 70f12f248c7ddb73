#include <stdio.h>
#include <stdlib.h>
#include "platosphere.h"

int main(void) {
    size_t counts[3];
    if (ps_compare_models("cube", "chiral", 3, true, counts) != PS_STATUS_OK) return 1;
    printf("gauge %zu hierarchy %zu main %zu\n", counts[0], counts[1], counts[2]);

    struct PsNetwork *net = NULL;
    if (ps_network_classifier_new("cube", "chiral", 8, 2, 0.5, 3, &net) != PS_STATUS_OK) return 1;
    size_t np, nin, written;
    ps_network_sizes(net, &np, &nin);
    double *w = malloc(np * sizeof(double)), *x = calloc(nin, sizeof(double)), y[3];
    ps_network_random_weights(net, 1, w, np);
    x[0] = 1.0;
    if (ps_network_forward(net, w, np, x, nin, y, 3, &written) != PS_STATUS_OK) return 1;
    printf("scores %zu: %f %f %f\n", written, y[0], y[1], y[2]);

    struct PsSymmetry *s = NULL;
    enum PsStatus st = ps_symmetry_new("dodecahedron", "chiral", &s);
    char msg[256];
    ps_last_error_message(msg, sizeof msg);
    printf("status %d: %s\n", (int)st, msg);
    ps_network_free(net);
    free(w);
    free(x);
    return st == PS_STATUS_UNSUPPORTED ? 0 : 1;
}
