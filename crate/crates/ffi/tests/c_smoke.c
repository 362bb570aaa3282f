#include <math.h>
#include <stdio.h>
#include "comono.h"

int main(void) {
    ComonoProblem *p = NULL;
    if (comono_problem_rotation(1.0, 0.75 * M_PI, 2, &p) != COMONO_STATUS_OK) return 1;
    ComonoParams params = {COMONO_ALGORITHM_HALPERN, 0.85, sqrt(0.5), 20, 0, 1.0};
    double x0[2] = {1.0, 0.0}, x[2];
    ComonoReport *r = NULL;
    if (comono_solve(p, &params, x0, 2, &r) != COMONO_STATUS_OK) return 2;
    if (comono_report_len(r) != 20) return 3;
    if (comono_report_final_iterate(r, x, 2) != COMONO_STATUS_OK) return 4;
    double res = 0.0;
    if (comono_residual(p, x, 2, 0.85, 1e-12, &res) != COMONO_STATUS_OK) return 5;
    if (comono_solve(NULL, &params, x0, 2, &r) != COMONO_STATUS_NULL_POINTER) return 6;
    printf("%s %.6f %s\n", comono_version(), res, comono_last_error_message());
    comono_report_free(r);
    comono_problem_free(p);
    return 0;
}
