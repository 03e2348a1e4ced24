/* Phantom -> sense -> recover -> PSNR through the C API. */
#include <math.h>
#include <stdio.h>

#include "csrecon.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        CsStatus s_ = (call);                                            \
        if (s_ != CS_STATUS_OK) {                                        \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,      \
                    cs_last_error());                                    \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    CsFrame *frame = NULL, *recovered = NULL;
    CsOperator *op = NULL;
    CsMeasurements *meas = NULL;
    CsImage *truth = NULL, *image = NULL;
    size_t iterations = 0;
    bool converged = false;
    double db = 0.0;

    CHECK(cs_phantom_new(64, 4, 3, 3.0, 0.15, 7, &frame));
    CHECK(cs_operator_for_ratio(1, 2, 64, 3, &op));
    CHECK(cs_sense(frame, op, CS_DOMAIN_BMODE, &meas));

    CsSolverOptions opts = cs_solver_options_default();
    opts.solver = "bsbl-bo";
    opts.block_size = 8;
    CHECK(cs_recover(meas, &opts, NULL, &recovered, &iterations, &converged));

    CHECK(cs_display_image(frame, CS_DOMAIN_BMODE, &truth));
    CHECK(cs_display_image(recovered, CS_DOMAIN_BMODE, &image));
    CHECK(cs_psnr(image, truth, &db));

    if (cs_psnr(NULL, truth, &db) != CS_STATUS_NULL_POINTER) {
        fprintf(stderr, "null handle not rejected\n");
        return 1;
    }
    printf("psnr %.3f iterations %zu\n", db, iterations);

    cs_image_free(image);
    cs_image_free(truth);
    cs_frame_free(recovered);
    cs_measurements_free(meas);
    cs_operator_free(op);
    cs_frame_free(frame);
    return isfinite(db) || isinf(db) ? 0 : 1;
}
