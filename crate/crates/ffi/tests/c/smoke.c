#include "survival.h"

int smoke(void) {
    uint64_t counts[] = {10, 20, 30, 40, 50};
    SgDistribution *dist = NULL;
    SgFit fit;
    SgLevel level;
    SgScalingLine line;
    SgHardware hw;
    SgProjection projection;
    SgSandpile *pile = NULL;
    size_t site[2] = {1, 1};
    uint64_t topplings = 0;
    uint32_t heights[9];
    uint64_t sizes[16];
    uint64_t params[] = {1000000000000ull, 10000000000000ull};
    double alphas[] = {1.0, 1.1};

    if (sg_distribution_from_counts(counts, NULL, 5, &dist) != SG_STATUS_OK) return 1;
    (void)sg_distribution_support_len(dist);
    (void)sg_distribution_zero_mass(dist);
    (void)sg_fit_powerlaw(dist, 10, 100, 10, SG_FIT_METHOD_MLE_DISCRETE, &fit);
    sg_distribution_free(dist);
    (void)sg_classify_alpha(fit.alpha, &level);
    (void)sg_scaling_fit(params, alphas, 2, &line);
    (void)sg_hardware_defaults(&hw);
    (void)sg_scaling_project(&line, 3.0, &hw, &projection);
    (void)sg_sandpile_new(2, 3, &pile);
    (void)sg_sandpile_drive(pile, site, 2, &topplings);
    (void)sg_sandpile_heights(pile, heights, sg_sandpile_sites(pile));
    (void)sg_sandpile_conserves_grains(pile);
    sg_sandpile_free(pile);
    (void)sg_sandpile_run(2, 8, UINT64_MAX, 16, 7, sizes, 16);
    return sg_last_error() == NULL && sg_version() != NULL && level == SG_LEVEL_LIMITED ? 0 : 2;
}
