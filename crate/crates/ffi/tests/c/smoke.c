#include <math.h>
#include <stdio.h>
#include "nuc_forge.h"

#define H 6
#define W 7

static double scene(int i, int j) { return (double)((i * 5 + j * 3) % 7); }
static double offset(int i, int j) { return 0.1 * (double)(i - j) - 0.05 * (double)((i * j) % 3); }

int main(void) {
    double base[H * W], sx[H * W], sy[H * W], out[H * W];
    double mean = 0.0;
    for (int i = 0; i < H; i++)
        for (int j = 0; j < W; j++)
            mean += offset(i, j) / (H * W);
    for (int i = 0; i < H; i++) {
        for (int j = 0; j < W; j++) {
            base[i * W + j] = scene(i, j) + offset(i, j);
            sx[i * W + j] = scene(i, j + 1) + offset(i, j);
            sy[i * W + j] = scene(i + 1, j) + offset(i, j);
        }
    }

    NfFrame *fb = NULL, *fx = NULL, *fy = NULL, *fc = NULL;
    NfEstimator *est = NULL;
    NfOffset *off = NULL;
    if (nf_frame_new(H, W, base, H * W, &fb) != NF_STATUS_OK) return 1;
    if (nf_frame_new(H, W, sx, H * W, &fx) != NF_STATUS_OK) return 1;
    if (nf_frame_new(H, W, sy, H * W, &fy) != NF_STATUS_OK) return 1;
    if (nf_estimator_new(H, W, &est) != NF_STATUS_OK) return 2;
    if (nf_estimator_add_pair(est, fb, fx, NF_AXIS_HORIZONTAL) != NF_STATUS_OK) return 2;
    if (nf_estimator_add_pair(est, fb, fy, NF_AXIS_VERTICAL) != NF_STATUS_OK) return 2;
    if (nf_estimator_reconstruct(est, &off, NULL) != NF_STATUS_OK) return 3;
    if (nf_correct(fb, off, &fc) != NF_STATUS_OK) return 4;
    if (nf_frame_copy(fc, out, H * W) != NF_STATUS_OK) return 5;
    for (int i = 0; i < H; i++)
        for (int j = 0; j < W; j++)
            if (fabs(out[i * W + j] - scene(i, j) - mean) > 1e-9) return 6;

    if (nf_frame_copy(fc, out, 3) != NF_STATUS_INVALID_ARGUMENT) return 7;
    if (nf_last_error() == NULL) return 8;

    nf_frame_free(fb);
    nf_frame_free(fx);
    nf_frame_free(fy);
    nf_frame_free(fc);
    nf_offset_free(off);
    nf_estimator_free(est);
    printf("ok %s\n", nf_version());
    return 0;
}
