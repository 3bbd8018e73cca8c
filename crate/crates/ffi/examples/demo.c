#include <stdio.h>
#include <stdlib.h>

#include "scatter_teleport.h"

int main(void) {
    StScatterConfig cfg = {
        .twice_spin = 1,
        .kind = ST_COUPLING_KIND_HEISENBERG,
        .dispersion = ST_DISPERSION_QUADRATIC,
        .couplings = {0.0, 1.5, 1.5},
        .wavevector = 1.0,
        .velocity = 1.0,
        .d12 = 3.141592653589793,
        .d23 = 3.141592653589793,
    };
    StKrausSet *ks = NULL;
    if (st_kraus_solve(&cfg, &ks) != ST_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", st_last_error_message());
        return 1;
    }
    double residual = 1.0;
    st_kraus_closure_residual(ks, &residual);
    size_t d = st_kraus_dim(ks);
    StComplex *t = calloc(d * d, sizeof *t);
    StStatus s = st_kraus_transmission(ks, 0, 0, t, d * d);
    st_kraus_free(ks);
    free(t);
    if (s != ST_STATUS_OK) {
        return 1;
    }

    StProtocolParams p = {
        .twice_spin = 1,
        .kind = ST_COUPLING_KIND_HEISENBERG,
        .dispersion = ST_DISPERSION_QUADRATIC,
        .jb_over_v = 1.5,
        .jc_over_v = 1.5,
        .n23 = 30,
        .n12 = 30,
        .kd12_over_pi = 1.0,
        .kd23_over_pi = 1.0,
    };
    StPerformance perf;
    if (st_average_performance(&p, ST_SAMPLER_HAAR_UNIFORM, 200, 1, &perf) != ST_STATUS_OK) {
        fprintf(stderr, "average: %s\n", st_last_error_message());
        return 1;
    }
    printf("version %s dim %zu residual %.3e F %.6f P %.6f\n", st_version(), d, residual, perf.mean_fidelity,
           perf.mean_probability);
    return 0;
}
