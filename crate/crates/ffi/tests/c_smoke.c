#include <math.h>
#include <stdio.h>
#include <string.h>

#include "corisk.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, \
              #cond);                                                 \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(int argc, char **argv) {
  CHECK(argc == 2);
  CoriskModel *model = NULL;
  CHECK(corisk_model_load(argv[1], &model) == CORISK_STATUS_OK);
  CHECK(corisk_model_dim(model) == 3);

  double tail[2] = {0.95, 0.95};
  CoriskRiskReport r;
  CHECK(corisk_contributions(model, 0, 0.95, tail, 2, NULL, 0, true, &r) ==
        CORISK_STATUS_OK);
  CHECK(r.has_median);
  CHECK(r.mcovar > r.var && r.mcoes > r.mcovar);
  CHECK(fabs(r.delta_r_mcovar - r.delta_mcovar / r.var) < 1e-12);
  printf("mcovar %.10g mcoes %.10g mmme %.10g\n", r.mcovar, r.mcoes, r.mmme);

  CoriskCopula *c = NULL;
  CoriskStatus st = corisk_copula_gumbel(3, 0.5, &c);
  CHECK(st == CORISK_STATUS_INVALID_PARAMETER);
  CHECK(c == NULL);
  CHECK(strcmp(corisk_status_name(st), "invalid_parameter") == 0);
  CHECK(corisk_last_error_message() != NULL);

  corisk_model_free(model);
  return 0;
}
