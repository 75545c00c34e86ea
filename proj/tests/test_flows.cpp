#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gibbslab/flows.hpp"

using namespace gibbslab;

namespace {

VectorFieldSL2 random_field(Rng& rng) {
  return VectorFieldSL2::from_chart_poly(rng.cgauss(), rng.cgauss(), rng.cgauss());
}

}  // namespace

TEST_CASE("matrix and chart polynomial are inverse correspondences") {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const VectorFieldSL2 v = random_field(rng);
    const auto p = v.chart_poly();
    const VectorFieldSL2 back = VectorFieldSL2::from_chart_poly(p[0], p[1], p[2]);
    CHECK((v.A - back.A).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(std::abs(v.A.trace()) < 1e-15);
  }
  Eigen::Matrix2cd not_traceless = Eigen::Matrix2cd::Identity();
  CHECK_THROWS_AS(VectorFieldSL2::from_matrix(not_traceless), Error);
}

TEST_CASE("flow matrices: units, one-parameter law, normative sign") {
  const VectorFieldSL2 rot = VectorFieldSL2::rotation_generator();  // z d/dz

  CHECK((flow_matrix(rot, Cx(0, 0)) - Eigen::Matrix2cd::Identity()).norm() < 1e-15);

  // The flow of z d/dz moves chart points by e^{tau}.
  const Cx tau(0.6, 0.3);
  const Cx z(0.4, -0.1);
  const SpherePoint moved = flow_point(rot, tau, SpherePoint::from_chart(z));
  CHECK(std::abs(moved.chart() - std::exp(tau) * z) < 1e-12);

  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const VectorFieldSL2 v = random_field(rng);
    const Cx a = 0.4 * rng.cgauss(), b = 0.4 * rng.cgauss();
    CHECK((flow_matrix(v, a + b) - flow_matrix(v, a) * flow_matrix(v, b)).norm() < 1e-12);
  }
}

TEST_CASE("complex-step derivative of the flow is the chart polynomial") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const VectorFieldSL2 v = random_field(rng);
    const Cx z = rng.cgauss();
    const double h = 1e-8;
    // Wirtinger derivative at tau = 0 via central differences in both axes.
    const Cx fpx = flow_point(v, Cx(h, 0), SpherePoint::from_chart(z)).chart();
    const Cx fmx = flow_point(v, Cx(-h, 0), SpherePoint::from_chart(z)).chart();
    const Cx fpy = flow_point(v, Cx(0, h), SpherePoint::from_chart(z)).chart();
    const Cx fmy = flow_point(v, Cx(0, -h), SpherePoint::from_chart(z)).chart();
    const Cx da = (fpx - fmx) / (2 * h);
    const Cx db = (fpy - fmy) / (2 * h);
    const Cx derivative = 0.5 * (da - Cx(0, 1) * db);
    CHECK(std::abs(derivative - v.chart_value(z)) < 1e-6);
  }
}

TEST_CASE("three zeros force the zero field") {
  // Field vanishing at 0, 1, infinity must be trivial.
  const VectorFieldSL2 zero = VectorFieldSL2::from_chart_poly(0, 0, 0);
  CHECK(three_zeros_vanish(zero));

  const VectorFieldSL2 rot = VectorFieldSL2::rotation_generator();
  const auto zeros = rot.zeros();
  REQUIRE(zeros.size() == 2);
  CHECK(!three_zeros_vanish(rot));

  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const VectorFieldSL2 v = random_field(rng);
    if (v.is_zero(1e-12)) continue;
    CHECK(v.zeros().size() <= 2);
    CHECK(!three_zeros_vanish(v));
  }
}

TEST_CASE("canonical lift: identity, torus characters, evaluation identity") {
  const LiftedFlow identity(Eigen::Matrix2cd::Identity(), 2);
  CHECK((identity.rep_matrix() - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-15);

  // z d/dz acts diagonally on anticanonical sections with characters
  // e^{tau}, 1, e^{-tau} (pushforward weights of d/dz, z d/dz, z^2 d/dz).
  const double tau = 0.8;
  const LiftedFlow torus(flow_matrix(VectorFieldSL2::rotation_generator(), tau), 2);
  const Eigen::MatrixXcd r = torus.rep_matrix();
  CHECK(std::abs(r(0, 0) - std::exp(tau)) < 1e-12);
  CHECK(std::abs(r(1, 1) - 1.0) < 1e-12);
  CHECK(std::abs(r(2, 2) - std::exp(-tau)) < 1e-12);
  CHECK(std::abs(r(0, 1)) + std::abs(r(1, 0)) + std::abs(r(2, 1)) < 1e-14);
  CHECK(std::abs(r.determinant() - Cx(1, 0)) < 1e-12);  // canonical lift is unimodular

  // Pointwise equivariance (g . P)(g x) = P(x) on unnormalized data.
  Rng rng(5);
  const LogPairCurve bare = LogPairCurve::projective_line();
  const SectionSpace space = SectionSpace::create(bare, Rat(1));
  for (int t = 0; t < 30; ++t) {
    const Eigen::Matrix2cd g = rng.sl2(0.7);
    const LiftedFlow lift(g, 2);
    Eigen::VectorXcd coeffs(3);
    for (int j = 0; j < 3; ++j) coeffs[j] = rng.cgauss();
    const Eigen::VectorXcd acted = lift.act_on_section(coeffs);

    const SpherePoint x = random_point(rng);
    const Cx gx0 = g(0, 0) * x.z0 + g(0, 1) * x.z1;
    const Cx gx1 = g(1, 0) * x.z0 + g(1, 1) * x.z1;
    // Evaluate the binary forms on exact homogeneous data.
    auto eval = [](const Eigen::VectorXcd& c, Cx a, Cx b) {
      return c[0] * a * a + c[1] * a * b + c[2] * b * b;
    };
    const Cx lhs = eval(acted, gx0, gx1);
    const Cx rhs = eval(coeffs, x.z0, x.z1);
    CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(rhs)));
  }

  // Group law of the lift.
  for (int t = 0; t < 30; ++t) {
    const Eigen::Matrix2cd g = rng.sl2(0.5), h = rng.sl2(0.5);
    const LiftedFlow fg(g, 4), fh(h, 4), fgh((g * h).eval(), 4);
    CHECK((fg.rep_matrix() * fh.rep_matrix() - fgh.rep_matrix()).norm() < 1e-10);
  }
}

TEST_CASE("intertwining with the Veronese embedding") {
  Rng rng(6);
  for (Rat k : {Rat(1), Rat(2)}) {
    const SectionSpace space = SectionSpace::create(LogPairCurve::projective_line(), k);
    for (int t = 0; t < 100; ++t) {
      const Eigen::Matrix2cd g = rng.sl2(0.8);
      const SpherePoint x = random_point(rng);
      const Eigen::VectorXcd lhs = normalize_projective(
          (kodaira_intertwiner(g, space.degree()) * space.kodaira(x)).eval());
      const Eigen::VectorXcd rhs = space.kodaira(mobius_apply(g, x));
      CHECK(projective_distance(lhs, rhs) < 1e-10);
    }
  }
}

TEST_CASE("canonical measure is invariant under the diagonal action") {
  Rng rng(7);
  const SectionSpace space = SectionSpace::create(LogPairCurve::projective_line(), Rat(1));

  Configuration config(3);
  for (auto& p : config) p = random_point(rng);
  CHECK(mu_invariance_residual(space, Eigen::Matrix2cd::Identity(), config) < 1e-12);

  for (int t = 0; t < 25; ++t) {
    Configuration c(3);
    for (auto& p : c) p = random_point(rng);
    CHECK(mu_invariance_residual(space, rng.su2(), c) < 1e-8);
    CHECK(mu_invariance_residual(space, rng.sl2(1.0), c) < 1e-8);
  }
}

TEST_CASE("invariance norm: symmetry, homogeneity, toric divergence") {
  Rng rng(8);
  Eigen::VectorXcd s(3);
  s << Cx(0.4, 0.1), Cx(1.0, 0.0), Cx(-0.3, 0.2);

  const SingularMetricSpec fs{MetricKind::ReferenceFS, {}};
  const NEpsilonResult base = n_epsilon(s, 1, 0.5, fs, 96);
  REQUIRE(!base.divergent);

  // Rotations of the section leave the value unchanged.
  for (int t = 0; t < 5; ++t) {
    const LiftedFlow lift(rng.su2(), 2);
    const NEpsilonResult rotated = n_epsilon(lift.act_on_section(s), 1, 0.5, fs, 96);
    REQUIRE(!rotated.divergent);
    CHECK(std::abs(rotated.value - base.value) < 1e-8 * base.value);
  }

  // Positive one-homogeneity.
  const NEpsilonResult doubled = n_epsilon((2.0 * s).eval(), 1, 0.5, fs, 96);
  CHECK(std::abs(doubled.value / base.value - 2.0) < 1e-10);

  // The torus-invariant singular metric is not locally integrable.
  const NEpsilonResult toric = n_epsilon(s, 1, 0.5, {MetricKind::Toric, {}}, 64);
  CHECK(toric.divergent);

  // A klt weighted pair stays finite.
  const LogPairCurve halves = LogPairCurve::genus0(
      {SpherePoint::from_chart(Cx(0, 0)), SpherePoint::from_chart(Cx(1, 0)),
       SpherePoint::infinity()},
      {Rat(1, 2), Rat(1, 2), Rat(1, 2)});
  const NEpsilonResult pair = n_epsilon(s, 1, 0.25, {MetricKind::WeightedPair, halves}, 64);
  CHECK(!pair.divergent);
  CHECK(pair.value > 0.0);
}

TEST_CASE("generalized Hamiltonian: closed form and contraction identity") {
  const VectorFieldSL2 rot = VectorFieldSL2::rotation_generator();
  const SmoothMetric fs{2, 0.0, 0.0, 0.0};

  // Zero field: h vanishes identically.
  const VectorFieldSL2 zero = VectorFieldSL2::from_chart_poly(0, 0, 0);
  CHECK(std::abs(hamiltonian_value(zero, fs, Cx(0.3, 0.2))) < 1e-12);

  Rng rng(9);
  const SmoothMetric bumped{2, 0.2, -0.15, 0.1};
  for (int t = 0; t < 20; ++t) {
    const VectorFieldSL2 v = random_field(rng);
    const Cx z = 0.8 * rng.cgauss();
    for (const SmoothMetric& phi : {fs, bumped}) {
      const Cx numeric = hamiltonian_value(v, phi, z);
      const Cx closed = hamiltonian_closed_form(v, phi, z);
      CHECK(std::abs(numeric - closed) < 1e-5 * (1.0 + std::abs(closed)));
    }
  }

  const HamiltonianResult fs_probe = hamiltonian_probe(rot, fs, 256);
  CHECK(fs_probe.max_residual < 1e-4);
  const HamiltonianResult fs_fine = hamiltonian_probe(rot, fs, 512);
  CHECK(fs_fine.max_residual <= 0.5 * fs_probe.max_residual + 1e-12);

  // The imaginary part of z d/dz generates the circle of axis rotations,
  // which preserve both the reference metric and its axially symmetric
  // perturbations: h is real and the full differential identity holds.
  for (const SmoothMetric& phi : {fs, SmoothMetric{2, 0.3, 0.0, 0.0}}) {
    const HamiltonianResult real_case = hamiltonian_probe(rot, phi, 256);
    CHECK(real_case.max_im_h < 1e-9);
    CHECK(real_case.max_real_identity < 1e-4);
  }
}
