#include <stdio.h>
#include <string.h>

#include "cvwitness.h"

static int check(cvw_status s, const char *what) {
    if (s != CVW_STATUS_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, cvw_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    cvw_state *rho = NULL;
    if (check(cvw_state_random_structured(3, 6, "[[0,1,2]]", 2, 1.0, 7, &rho), "generate")) {
        return 1;
    }
    bool certified = false;
    double g = 0.0;
    char *json = NULL;
    if (check(cvw_certify(rho, NULL, 2, &certified, &g, &json), "certify")) {
        return 1;
    }
    double v = 0.0;
    if (check(cvw_van_loock(rho, &v), "van_loock")) {
        return 1;
    }
    size_t block[1] = {0};
    double pt = 0.0;
    if (check(cvw_ppt_min_eigenvalue(rho, block, 1, &pt), "ppt")) {
        return 1;
    }
    printf("cvwitness %s certified=%d g=%.3e V=%.3f pt=%.3e json=%zu bytes\n",
           cvw_version(), certified, g, v, pt, json ? strlen(json) : 0);
    cvw_string_free(json);
    cvw_state_free(rho);
    return certified ? 0 : 2;
}
