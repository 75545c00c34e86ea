#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>
#include <vector>

#include "gibbslab.h"

namespace {

struct PairGuard {
  gl_pair* pair = nullptr;
  ~PairGuard() { gl_pair_free(pair); }
};

struct ReportGuard {
  gl_report* report = nullptr;
  ~ReportGuard() { gl_report_free(report); }
};

PairGuard make_half_weights() {
  PairGuard g;
  const double re[3] = {0.0, 1.0, 0.0};
  const double im[3] = {0.0, 0.0, 0.0};
  const int inf[3] = {0, 0, 1};
  const long long num[3] = {1, 1, 1};
  const long long den[3] = {2, 2, 2};
  REQUIRE(gl_pair_create(0, re, im, inf, num, den, 3, &g.pair) == GL_OK);
  return g;
}

std::string text_of(const gl_report* report) {
  size_t needed = 0;
  REQUIRE(gl_report_text(report, nullptr, 0, &needed) == GL_OK);
  std::vector<char> buf(needed);
  REQUIRE(gl_report_text(report, buf.data(), buf.size(), &needed) == GL_OK);
  return std::string(buf.data());
}

}  // namespace

TEST_CASE("version and error strings are always available") {
  CHECK(gl_version() != nullptr);
  CHECK(std::strlen(gl_version()) > 0);
  CHECK(gl_last_error() != nullptr);
}

TEST_CASE("pair lifecycle and dimension counting") {
  PairGuard bare;
  CHECK(gl_pair_create(0, nullptr, nullptr, nullptr, nullptr, nullptr, 0, &bare.pair) == GL_OK);
  int dim = 0;
  CHECK(gl_dimension(bare.pair, 1, 1, &dim) == GL_OK);
  CHECK(dim == 3);

  PairGuard halves = make_half_weights();
  CHECK(gl_dimension(halves.pair, 2, 1, &dim) == GL_OK);
  CHECK(dim == 2);
  CHECK(gl_dimension(halves.pair, 1, 1, &dim) == GL_ERR_NOT_A_LINE_BUNDLE);

  gl_pair* bad = nullptr;
  CHECK(gl_pair_create(5, nullptr, nullptr, nullptr, nullptr, nullptr, 0, &bad) ==
        GL_ERR_UNSUPPORTED_GENUS);
  CHECK(bad == nullptr);
}

TEST_CASE("weight condition and lct through the C surface") {
  PairGuard halves = make_half_weights();
  int tri = -7;
  CHECK(gl_weight_condition(halves.pair, &tri) == GL_OK);
  CHECK(tri == 1);

  const double re[2] = {0.0, 0.0};
  const double im[2] = {0.0, 0.0};
  const int inf[2] = {0, 1};
  const long long cn[2] = {1, 1};
  const long long cd[2] = {1, 1};
  long long num = 0, den = 0;
  int infinite = -1, klt = -1;
  CHECK(gl_lct_divisor(re, im, inf, cn, cd, 2, &num, &den, &infinite, &klt) == GL_OK);
  CHECK(num == 1);
  CHECK(den == 1);
  CHECK(infinite == 0);
  CHECK(klt == 0);
}

TEST_CASE("slater log through the C surface") {
  PairGuard halves = make_half_weights();
  const double re[2] = {0.0, 0.0};
  const double im[2] = {0.0, 0.0};
  const int inf[2] = {0, 1};
  double value = 1.0;
  int zero = -1;
  CHECK(gl_slater_log(halves.pair, 2, 1, re, im, inf, 2, &value, &zero) == GL_OK);
  CHECK(zero == 0);
  CHECK(std::abs(value) < 1e-14);

  const int inf_same[2] = {0, 0};
  CHECK(gl_slater_log(halves.pair, 2, 1, re, im, inf_same, 2, &value, &zero) == GL_OK);
  CHECK(zero == 1);
}

TEST_CASE("stability probe verdict codes") {
  gl_run_options opts;
  gl_run_options_init(&opts);
  opts.budget = 20000;

  PairGuard bare;
  REQUIRE(gl_pair_create(0, nullptr, nullptr, nullptr, nullptr, nullptr, 0, &bare.pair) == GL_OK);
  ReportGuard unstable;
  CHECK(gl_stability_probe(bare.pair, 1, 1, 1, 1, &opts, &unstable.report) == GL_OK);
  CHECK(gl_report_verdict(unstable.report) == GL_VERDICT_UNSTABLE_WITNESS);

  PairGuard halves = make_half_weights();
  ReportGuard stable;
  CHECK(gl_stability_probe(halves.pair, 2, 1, 1, 1, &opts, &stable.report) == GL_OK);
  CHECK(gl_report_verdict(stable.report) == GL_VERDICT_STABLE_PROBE_PASSED);
  const std::string text = text_of(stable.report);
  CHECK(text.find("verdict: StableProbePassed") != std::string::npos);
  CHECK(text.find("Z:") != std::string::npos);

  double z = 0.0;
  CHECK(gl_report_number(stable.report, "Z", &z) == GL_OK);
  CHECK(z > 0.0);
  CHECK(gl_report_number(stable.report, "no_such_key", &z) == GL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("partition and ding through the C surface") {
  gl_run_options opts;
  gl_run_options_init(&opts);
  opts.budget = 20000;
  opts.resolution = 24;

  PairGuard halves = make_half_weights();
  ReportGuard quad;
  CHECK(gl_partition(halves.pair, 2, 1, 1, 1, 0, &opts, &quad.report) == GL_OK);
  double zq = 0.0;
  CHECK(gl_report_number(quad.report, "Z", &zq) == GL_OK);

  ReportGuard mc;
  CHECK(gl_partition(halves.pair, 2, 1, 1, 1, 1, &opts, &mc.report) == GL_OK);
  double zm = 0.0;
  CHECK(gl_report_number(mc.report, "Z", &zm) == GL_OK);
  CHECK(std::abs(zq - zm) / zq < 0.1);

  ReportGuard ding;
  CHECK(gl_ding_minimize(halves.pair, 2, 1, 1, 1, &opts, nullptr, &ding.report) == GL_OK);
  const std::string text = text_of(ding.report);
  CHECK(text.find("converged: yes") != std::string::npos);
  CHECK(text.find("non_coercive: no") != std::string::npos);
}

TEST_CASE("flow self-tests pass through the C surface") {
  ReportGuard flows;
  CHECK(gl_flows_selftest("intertwine", 50, 1, &flows.report) == GL_OK);
  const std::string text = text_of(flows.report);
  CHECK(text.find("ok: yes") != std::string::npos);
}

TEST_CASE("null arguments are rejected") {
  CHECK(gl_dimension(nullptr, 1, 1, nullptr) == GL_ERR_INVALID_ARGUMENT);
  CHECK(gl_report_verdict(nullptr) == -1);
  ReportGuard r;
  CHECK(gl_flows_selftest(nullptr, 10, 1, &r.report) == GL_ERR_INVALID_ARGUMENT);
}
