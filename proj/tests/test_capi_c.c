/* Compiled as plain C: the public header must stay C-clean. */
#include <stdio.h>
#include <string.h>

#include "gibbslab.h"

int main(void) {
  if (!gl_version() || strlen(gl_version()) == 0) return 1;

  gl_pair* bare = NULL;
  if (gl_pair_create(0, NULL, NULL, NULL, NULL, NULL, 0, &bare) != GL_OK) return 2;
  int dim = 0;
  if (gl_dimension(bare, 2, 1, &dim) != GL_OK || dim != 5) {
    gl_pair_free(bare);
    return 3;
  }

  gl_run_options opts;
  gl_run_options_init(&opts);
  opts.budget = 16000;
  gl_report* report = NULL;
  if (gl_stability_probe(bare, 1, 1, 1, 1, &opts, &report) != GL_OK) {
    gl_pair_free(bare);
    return 4;
  }
  int verdict = gl_report_verdict(report);
  gl_report_free(report);
  gl_pair_free(bare);
  if (verdict != GL_VERDICT_UNSTABLE_WITNESS) return 5;
  printf("c api smoke test ok\n");
  return 0;
}
