#include <math.h>
#include <stdio.h>
#include <string.h>

#include "maxnorm.h"

static const char *MODEL =
    "#maxnorm checkpoint v1\n"
    "dims 2 2 2\n"
    "head identity\n"
    "loss square\n"
    "@w1 2 2\n"
    "1 0\n"
    "0 1\n"
    "@w2 2 2\n"
    "1 0\n"
    "0 1\n"
    "@b1 1 2\n"
    "0 0\n"
    "@b2 1 2\n"
    "0 0\n"
    "end\n";

int main(void) {
    MaxnormModel *m = NULL;
    if (maxnorm_model_from_text(MODEL, &m) != MAXNORM_STATUS_OK) {
        fprintf(stderr, "load: %s\n", maxnorm_last_error());
        return 1;
    }
    double x[2] = {0.2, 0.7};
    double z[2];
    size_t label = 99;
    if (maxnorm_model_logits(m, x, 2, z, 2) != MAXNORM_STATUS_OK) return 2;
    if (maxnorm_model_predict(m, x, 2, &label) != MAXNORM_STATUS_OK || label != 1) return 3;
    if (fabs(z[0] - 0.2) > 1e-15 || fabs(z[1] - 0.7) > 1e-15) return 4;
    if (maxnorm_model_logits(m, x, 2, z, 3) != MAXNORM_STATUS_DIMENSION) return 5;
    maxnorm_model_free(m);

    double r = 0.0;
    int vacuous = -1;
    if (maxnorm_bound_radius(0.2, 2, 784, 0.9996, 0.3097, MAXNORM_LOSS_CROSS_ENTROPY, &r, &vacuous) != MAXNORM_STATUS_OK) return 6;
    if (fabs(r - 9.579) > 0.002 || vacuous != 0) return 7;
    if (maxnorm_model_load("/nonexistent.ckpt", &m) != MAXNORM_STATUS_IO) return 8;
    printf("ok %s\n", maxnorm_version());
    return 0;
}
