#include <stdio.h>
#include <string.h>

#include "fbmc_mimo.h"

#define CHECK(call)                                                       \
    do {                                                                  \
        FbmcStatus st_ = (call);                                          \
        if (st_ != FBMC_STATUS_OK) {                                      \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_,            \
                    fbmc_last_error() ? fbmc_last_error() : "");          \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    const char *src =
        "[fbmc]\nL = 16\nnum_symbols = 16\n[array]\nM = 8\nK = 2\n[run]\ntrials = 2\n";
    FbmcScenario *scenario = NULL;
    FbmcReport *report = NULL;
    double curve[16];
    double target = 0.0;
    size_t len = 0;

    CHECK(fbmc_scenario_parse(src, &scenario));
    CHECK(fbmc_scenario_set_seed(scenario, 11));
    CHECK(fbmc_run(scenario, &report));
    CHECK(fbmc_report_curve(report, FBMC_CURVE_MMSE_MEAN, NULL, 0, &len));
    if (len != 16) {
        fprintf(stderr, "curve length %zu\n", len);
        return 1;
    }
    CHECK(fbmc_report_curve(report, FBMC_CURVE_MMSE_MEAN, curve, 16, &len));
    CHECK(fbmc_report_target_sinr_db(report, &target));
    if (fbmc_report_curve(report, FBMC_CURVE_MF_MEAN, curve, 4, &len) != FBMC_STATUS_BUFFER_TOO_SMALL) {
        return 1;
    }
    if (fbmc_scenario_parse("[fbmc]\nL = 60\n[array]\nM = 8\nK = 1\n", &scenario) != FBMC_STATUS_CONFIG ||
        strstr(fbmc_last_error(), "power of two") == NULL) {
        return 1;
    }
    printf("%s target=%.2f first=%.2f\n", fbmc_version(), target, curve[0]);
    fbmc_report_free(report);
    fbmc_scenario_free(scenario);
    return 0;
}
