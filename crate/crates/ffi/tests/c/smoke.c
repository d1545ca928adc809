#include <math.h>
#include <stdio.h>
#include <string.h>

#include "featmatch.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, fm_last_error());                          \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    FmFeatureList *left = fm_features_new("imdb");
    FmFeatureList *right = fm_features_new("netflix");
    CHECK(left && right);
    CHECK(fm_features_push(left, "Director", NULL) == FM_STATUS_OK);
    CHECK(fm_features_push(left, "Released Year", "Year of release") == FM_STATUS_OK);
    CHECK(fm_features_push(right, "director", NULL) == FM_STATUS_OK);
    CHECK(fm_features_push(right, "Release year", NULL) == FM_STATUS_OK);
    CHECK(fm_features_push(right, "cast", NULL) == FM_STATUS_OK);
    CHECK(fm_features_push(right, "   ", NULL) == FM_STATUS_INVALID_ARGUMENT);
    CHECK(fm_features_len(right) == 3);

    FmMatcher *m = NULL;
    CHECK(fm_matcher_new_baseline(256, 0, &m) == FM_STATUS_OK);
    CHECK(fm_matcher_set_threshold(m, 1.5) == FM_STATUS_INVALID_ARGUMENT);
    CHECK(strstr(fm_last_error(), "threshold") != NULL);

    FmReport *r = NULL;
    CHECK(fm_match(m, left, right, &r) == FM_STATUS_OK);
    CHECK(fm_report_pairs_scored(r) == 6);
    CHECK(fm_report_len(r) == 2);
    FmRow row;
    CHECK(fm_report_row(r, 0, &row) == FM_STATUS_OK);
    CHECK(strcmp(row.left_feature, "Director") == 0);
    CHECK(strcmp(row.right_feature, "director") == 0);
    CHECK(row.left_id == NULL);
    CHECK(fabs(row.weighted_score - 1.0) < 1e-12);
    CHECK(fm_report_row(r, 2, &row) == FM_STATUS_INVALID_ARGUMENT);

    printf("%s %zu\n", fm_version(), fm_report_len(r));
    fm_report_free(r);
    fm_matcher_free(m);
    fm_features_free(left);
    fm_features_free(right);
    return 0;
}
