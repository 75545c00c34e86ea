#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "gibbslab/ding.hpp"

using namespace gibbslab;

namespace {

LogPairCurve half_weights() {
  return LogPairCurve::genus0({SpherePoint::from_chart(Cx(0, 0)),
                               SpherePoint::from_chart(Cx(1, 0)), SpherePoint::infinity()},
                              {Rat(1, 2), Rat(1, 2), Rat(1, 2)});
}

Eigen::MatrixXcd random_lower(int n, Rng& rng, double spread = 1.0) {
  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) lower(i, j) = 0.5 * rng.cgauss();
    lower(i, i) = std::exp(rng.uniform(-spread, spread));
  }
  return lower;
}

HermitianMetricMatrix random_metric(int n, Rng& rng, double spread = 1.0) {
  const Eigen::MatrixXcd lower = random_lower(n, rng, spread);
  return HermitianMetricMatrix((lower * lower.adjoint()).eval());
}

Eigen::MatrixXcd random_unitary(int n, Rng& rng) {
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.cgauss();
  return Eigen::HouseholderQR<Eigen::MatrixXcd>(a).householderQ();
}

struct Lab {
  SectionSpace space;
  DingContext ctx;
  Lab(const LogPairCurve& pair, const Rat& k, const Rat& gamma, int res)
      : space(SectionSpace::create(pair, k)), ctx(space, gamma, res) {}
};

}  // namespace

TEST_CASE("metric matrices are symmetrized and factor-cached") {
  Eigen::MatrixXcd h(2, 2);
  h << Cx(2, 0), Cx(0.5, 0.25), Cx(0.5, -0.25), Cx(1, 0);
  const HermitianMetricMatrix m(h);
  CHECK(std::abs(m.log_det() - std::log(h.determinant().real())) < 1e-12);

  Eigen::MatrixXcd bad = -Eigen::MatrixXcd::Identity(2, 2);
  CHECK_THROWS_AS(HermitianMetricMatrix{bad}, Error);
}

TEST_CASE("reference Bergman sum is constant on the sphere") {
  const Lab lab(LogPairCurve::projective_line(), Rat(1), Rat(1), 32);
  const auto id = HermitianMetricMatrix::identity(3);
  const double expected = std::log(3.0 / (3.0 * M_PI));  // (d+1)/(N pi) at k=1
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const double u = lab.ctx.fs_relative(id, random_point(rng));
    CHECK(std::abs(u - expected) < 1e-8);
  }
}

TEST_CASE("FS potential: scaling shift and factor independence") {
  const Lab lab(half_weights(), Rat(2), Rat(1), 32);
  Rng rng(2);
  const auto h = random_metric(2, rng);
  const double c = 1.9;
  for (int t = 0; t < 20; ++t) {
    const SpherePoint p = random_point(rng);
    // e^c H lowers the potential by c/k everywhere (k = 2 here).
    CHECK(std::abs(lab.ctx.fs_metric_log(h.scaled(std::exp(c)), p) -
                   (lab.ctx.fs_metric_log(h, p) - c / 2.0)) < 1e-12);
    // Any unitary re-factoring H = (LU)(LU)* is the same inner product.
    const Eigen::MatrixXcd lu = h.chol_lower() * random_unitary(2, rng);
    const HermitianMetricMatrix refactored((lu * lu.adjoint()).eval());
    CHECK(std::abs(lab.ctx.fs_metric_log(refactored, p) - lab.ctx.fs_metric_log(h, p)) < 1e-10);
  }
}

TEST_CASE("Ding functional invariances") {
  Rng rng(3);
  // N = 2, 3, 5 through the stable pair and the bare sphere at two levels.
  std::vector<std::unique_ptr<Lab>> labs;
  labs.emplace_back(new Lab(half_weights(), Rat(2), Rat(1), 32));
  labs.emplace_back(new Lab(LogPairCurve::projective_line(), Rat(1), Rat(1), 32));
  labs.emplace_back(new Lab(LogPairCurve::projective_line(), Rat(2), Rat(1), 32));

  for (const auto& lab : labs) {
    const int n = lab->space.dim();
    for (int t = 0; t < 17; ++t) {
      const auto h = random_metric(n, rng);
      const double d0 = lab->ctx.ding(h);
      CHECK(std::abs(lab->ctx.ding(h.scaled(std::exp(3.7))) - d0) < 1e-9);

      const Eigen::MatrixXcd lu = h.chol_lower() * random_unitary(n, rng);
      const HermitianMetricMatrix refactored((lu * lu.adjoint()).eval());
      CHECK(std::abs(lab->ctx.ding(refactored) - d0) < 1e-10);
    }
  }

  // True conjugation invariance: unitaries in the SU(2) representation image
  // act by isometries of the bare reference data, so D is conjugation
  // invariant up to the transport error of the quadrature (exact in the
  // continuum; the grid pays for evaluating a rotated integrand).
  for (int li = 1; li < 3; ++li) {
    const auto& lab = *labs[li];
    const Lab fine(lab.space.pair(), lab.space.level(), Rat(1), 64);
    for (int t = 0; t < 10; ++t) {
      const auto h = random_metric(lab.space.dim(), rng);
      const LiftedFlow lift(rng.su2(), lab.space.degree());
      const Eigen::MatrixXcd r = lift.rep_matrix_normalized(lab.space);
      const HermitianMetricMatrix conj((r.adjoint() * h.matrix() * r).eval());
      CHECK(std::abs(fine.ctx.ding(conj) - fine.ctx.ding(h)) < 1e-8);
    }
  }
}

TEST_CASE("Ding value at the identity matches independent quadrature") {
  // Closed form at k=1, gamma=1 on the bare sphere: D(I) = -2 log pi.
  const Lab fine(LogPairCurve::projective_line(), Rat(1), Rat(1), 64);
  const Lab coarse(LogPairCurve::projective_line(), Rat(1), Rat(1), 32);
  const auto id = HermitianMetricMatrix::identity(3);
  const double exact = -2.0 * std::log(M_PI);
  CHECK(std::abs(fine.ctx.ding(id) - exact) < 1e-6);
  CHECK(std::abs(fine.ctx.ding(id) - coarse.ctx.ding(id)) < 1e-6);
}

TEST_CASE("J functional: constants, scaling, exhaustion") {
  const Lab lab(LogPairCurve::projective_line(), Rat(1), Rat(1), 32);
  const auto id = HermitianMetricMatrix::identity(3);
  // Unit-determinant reference Gram: J is the sup of a constant.
  CHECK(std::abs(lab.ctx.j_functional(id) - std::log(1.0 / M_PI)) < 1e-8);

  Rng rng(4);
  const auto h = random_metric(3, rng);
  CHECK(std::abs(lab.ctx.j_functional(h.scaled(std::exp(2.3))) - lab.ctx.j_functional(h)) <
        1e-9);

  double previous = -std::numeric_limits<double>::infinity();
  for (double tau : {2.0, 4.0, 8.0}) {
    Eigen::VectorXcd diag(3);
    diag << std::exp(tau), Cx(1, 0), std::exp(-tau);
    const HermitianMetricMatrix ray(Eigen::MatrixXcd(diag.asDiagonal()));
    const double j = lab.ctx.j_functional(ray);
    CHECK(j > previous + 0.5);
    previous = j;
  }
}

TEST_CASE("analytic gradient matches central differences") {
  const Lab lab(half_weights(), Rat(2), Rat(1), 24);
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXcd lower = random_lower(2, rng, 0.8);
    const Eigen::VectorXd grad = lab.ctx.gradient_triangular(lower);

    // Parameters: [log L_00, log L_11, Re L_10, Im L_10].
    auto value = [&](double a, double b, double re, double im) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
      m(0, 0) = std::exp(a);
      m(1, 1) = std::exp(b);
      m(1, 0) = Cx(re, im);
      return lab.ctx.ding_of_lower(m);
    };
    const double a = std::log(lower(0, 0).real());
    const double b = std::log(lower(1, 1).real());
    const double re = lower(1, 0).real(), im = lower(1, 0).imag();
    const double h = 1e-5;
    const double fd[4] = {
        (value(a + h, b, re, im) - value(a - h, b, re, im)) / (2 * h),
        (value(a, b + h, re, im) - value(a, b - h, re, im)) / (2 * h),
        (value(a, b, re + h, im) - value(a, b, re - h, im)) / (2 * h),
        (value(a, b, re, im + h) - value(a, b, re, im - h)) / (2 * h)};
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(grad[i] - fd[i]) < 1e-5 * std::max(1.0, std::abs(fd[i])));
  }
}

TEST_CASE("minimization: descent, convergence, restart agreement") {
  const Lab lab(half_weights(), Rat(2), Rat(1), 48);
  MinimizeOptions tight;
  tight.rel_tol = 1e-15;
  tight.grad_tol = 1e-6;
  tight.max_iterations = 2000;

  const DingReport report = lab.ctx.minimize(tight);
  CHECK(report.converged);
  CHECK(report.grad_norm < 1e-6);
  CHECK(report.ding <= lab.ctx.ding(HermitianMetricMatrix::identity(2)) + 1e-12);
  CHECK(!report.non_coercive);

  // Iteration trace is monotone non-increasing.
  for (std::size_t i = 1; i < report.trace.size(); ++i)
    CHECK(report.trace[i].ding <= report.trace[i - 1].ding + 1e-12);

  Rng rng(6);
  for (int r = 0; r < 5; ++r) {
    const Eigen::MatrixXcd lower = random_lower(2, rng, 1.5);
    const DingReport restart = lab.ctx.minimize(tight, (lower * lower.adjoint()).eval());
    CHECK(std::abs(restart.ding - report.ding) < 1e-5);
  }
}

TEST_CASE("bare sphere at gamma = 1 is flagged non-coercive") {
  const Lab lab(LogPairCurve::projective_line(), Rat(1), Rat(1), 32);
  const DingReport report = lab.ctx.minimize();
  CHECK(report.non_coercive);
}

TEST_CASE("harmonicity of the flow pullback") {
  const Lab lab(LogPairCurve::projective_line(), Rat(1), Rat(1), 64);
  Rng rng(7);
  const Eigen::MatrixXcd lower = random_lower(3, rng, 0.5);
  const HermitianMetricMatrix h0((lower * lower.adjoint()).eval());

  const HarmonicityReport zero =
      harmonicity_probe(lab.ctx, VectorFieldSL2::from_chart_poly(0, 0, 0), h0);
  CHECK(zero.laplacian_residual < 1e-12);
  CHECK(zero.formula_residual < 1e-12);

  const HarmonicityReport rot =
      harmonicity_probe(lab.ctx, VectorFieldSL2::rotation_generator(), h0);
  CHECK(rot.laplacian_residual < 1e-5);
  CHECK(rot.formula_residual < 1e-7);
  CHECK(rot.pullback_integral_residual < 1e-7);

  // Twisting the lift by e^{c tau} rescales the pullback inner product, so
  // scale invariance forces the same zero shift as the canonical lift; the
  // determinant formula must be applied with the canonical (unimodular)
  // representation matrix.
  const Cx tau(0.2, 0.15);
  const Cx c(0.3, -0.1);
  const LiftedFlow flow(flow_matrix(VectorFieldSL2::rotation_generator(), tau), 2);
  Eigen::MatrixXcd r = flow.rep_matrix_normalized(lab.space);
  r *= std::exp(c * tau);
  const HermitianMetricMatrix pulled((r.adjoint() * h0.matrix() * r).eval());
  const double shift = lab.ctx.ding(pulled) - lab.ctx.ding(h0);
  CHECK(std::abs(shift) < 1e-7);
}

TEST_CASE("partition vs Ding-minimum inequality") {
  InequalityOptions opts;
  opts.partition.samples = 40000;
  opts.partition.n_seeds = 3;
  opts.partition.base_seed = 2;
  opts.partition.quad_resolution = 24;
  opts.resolution = 32;

  for (const Rat& gamma : {Rat(1), Rat(1, 2)}) {
    const InequalityResult r = inequality_check(half_weights(), Rat(2), gamma, opts);
    CHECK(r.holds);
    CHECK(r.lhs <= r.rhs + 2.0 * r.lhs_stderr + 1e-3);
  }

  CHECK_THROWS_AS(inequality_check(LogPairCurve::projective_line(), Rat(1), Rat(1), opts),
                  Error);
}

TEST_CASE("coercivity probe distinguishes the bare sphere from a stable pair") {
  Rng rng(8);
  const Lab bare(LogPairCurve::projective_line(), Rat(1), Rat(1), 32);
  const CoercivityTable unstable = coercivity_probe(bare.ctx, {0.05, 0.2}, 4, 8.0, rng);
  bool flagged = false;
  for (const auto& row : unstable.rows) flagged = flagged || row.non_coercive;
  CHECK(flagged);
  CHECK(unstable.rays[0].divergent);  // torus-weight ray

  const Lab stable(half_weights(), Rat(2), Rat(1), 32);
  const CoercivityTable ok = coercivity_probe(stable.ctx, {0.05}, 4, 8.0, rng);
  for (const auto& row : ok.rows) CHECK(!row.non_coercive);
  CHECK(std::isfinite(ok.rows[0].min_over_rays));
}
