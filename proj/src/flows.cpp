#include "gibbslab/flows.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace gibbslab {

// ---------------------------------------------------------------------------
// Vector fields
// ---------------------------------------------------------------------------

VectorFieldSL2 VectorFieldSL2::from_matrix(const Eigen::Matrix2cd& A) {
  if (std::abs(A(0, 0) + A(1, 1)) > 1e-12) fail(Errc::InvalidArgument, "matrix must be traceless");
  VectorFieldSL2 v;
  v.A = A;
  return v;
}

VectorFieldSL2 VectorFieldSL2::from_chart_poly(Cx v0, Cx v1, Cx v2) {
  // With the point flow p -> exp(tau A) p and chart z = z1/z0, the induced
  // chart velocity of A = [[a,b],[c,d]] is c + (d-a) z - b z^2. Solving for
  // the requested polynomial gives the correspondence below; it is a linear
  // bijection with sl(2,C).
  Eigen::Matrix2cd A;
  A << -v1 / 2.0, -v2, v0, v1 / 2.0;
  VectorFieldSL2 v;
  v.A = A;
  return v;
}

std::array<Cx, 3> VectorFieldSL2::chart_poly() const {
  return {A(1, 0), A(1, 1) - A(0, 0), -A(0, 1)};
}

Cx VectorFieldSL2::chart_value(Cx z) const {
  const auto p = chart_poly();
  return p[0] + p[1] * z + p[2] * z * z;
}

bool VectorFieldSL2::is_zero(double tol) const { return A.cwiseAbs().maxCoeff() <= tol; }

std::vector<SpherePoint> VectorFieldSL2::zeros() const {
  // Zeros of the homogenized chart form v0 z0^2 + v1 z0 z1 + v2 z1^2.
  const auto p = chart_poly();
  std::vector<SpherePoint> out;
  const double scale = std::max({std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
  if (scale == 0.0) return out;  // identically zero field
  if (std::abs(p[2]) < 1e-14 * scale) {
    out.push_back(SpherePoint::infinity());
    if (std::abs(p[1]) >= 1e-14 * scale) out.push_back(SpherePoint::from_chart(-p[0] / p[1]));
    return out;
  }
  const Cx disc = std::sqrt(p[1] * p[1] - 4.0 * p[0] * p[2]);
  out.push_back(SpherePoint::from_chart((-p[1] + disc) / (2.0 * p[2])));
  out.push_back(SpherePoint::from_chart((-p[1] - disc) / (2.0 * p[2])));
  return out;
}

bool three_zeros_vanish(const VectorFieldSL2& v) {
  if (v.is_zero()) return true;
  const auto zeros = v.zeros();
  std::vector<SpherePoint> distinct;
  for (const auto& z : zeros) {
    bool seen = false;
    for (const auto& d : distinct) seen = seen || chordal(z, d) < 1e-9;
    if (!seen) distinct.push_back(z);
  }
  return distinct.size() >= 3;
}

Eigen::Matrix2cd flow_matrix(const VectorFieldSL2& v, Cx tau) {
  return Eigen::Matrix2cd(tau * v.A).exp();
}

SpherePoint flow_point(const VectorFieldSL2& v, Cx tau, const SpherePoint& p) {
  return mobius_apply(flow_matrix(v, tau), p);
}

// ---------------------------------------------------------------------------
// Canonical lifts
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> binomial_table(int n) {
  std::vector<std::vector<double>> c(n + 1);
  for (int i = 0; i <= n; ++i) {
    c[i].assign(i + 1, 1.0);
    for (int j = 1; j < i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
  }
  return c;
}

/// Coefficients of m_i o g over the monomial basis:
/// m_i(g(z0,z1)) = (a z0 + b z1)^{d-i} (c z0 + d z1)^{i} = sum_j M_{ji} m_j.
Eigen::MatrixXcd compose_matrix(const Eigen::Matrix2cd& g, int degree) {
  const int n = degree + 1;
  const auto binom = binomial_table(degree);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  const Cx a = g(0, 0), b = g(0, 1), c = g(1, 0), d = g(1, 1);
  for (int i = 0; i < n; ++i) {
    // (a z0 + b z1)^{d-i}: term r picks b^r z1^r; (c z0 + d z1)^i: term s picks d^s z1^s.
    for (int r = 0; r <= degree - i; ++r)
      for (int s = 0; s <= i; ++s) {
        const int j = r + s;  // z1 exponent
        const Cx coeff = binom[degree - i][r] * std::pow(a, degree - i - r) * std::pow(b, r) *
                         binom[i][s] * std::pow(c, i - s) * std::pow(d, s);
        m(j, i) += coeff;
      }
  }
  return m;
}

}  // namespace

LiftedFlow::LiftedFlow(const Eigen::Matrix2cd& g, int degree) : g_(g), degree_(degree) {
  if (std::abs(g.determinant() - Cx(1, 0)) > 1e-10)
    fail(Errc::NotUnimodular, "lift requires a unimodular base matrix");
  if (degree < 0) fail(Errc::InvalidArgument, "negative degree");
  rep_ = compose_matrix(g.inverse(), degree);
}

Eigen::MatrixXcd LiftedFlow::rep_matrix_normalized(const SectionSpace& space) const {
  if (space.degree() != degree_) fail(Errc::DegreeMismatch, "space degree mismatch");
  const int n = degree_ + 1;
  Eigen::MatrixXcd out = rep_;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) *= std::exp(space.l2_log_norm(i) - space.l2_log_norm(j));
  return out;
}

Eigen::VectorXcd LiftedFlow::act_on_section(const Eigen::VectorXcd& coeffs) const {
  if (coeffs.size() != degree_ + 1) fail(Errc::DegreeMismatch, "coefficient degree mismatch");
  return rep_ * coeffs;
}

Eigen::MatrixXcd kodaira_intertwiner(const Eigen::Matrix2cd& g, int degree) {
  // m_j(g x) = sum_i [compose(g)]_{ij} m_i(x), so evaluation vectors move by
  // the transpose.
  return compose_matrix(g, degree).transpose();
}

double mu_invariance_residual(const SectionSpace& space, const Eigen::Matrix2cd& g,
                              const Configuration& config) {
  if (!space.pair().bare()) fail(Errc::InvalidArgument, "invariance test targets the bare sphere");
  const int n = space.dim();
  const int d = space.degree();
  const double det_exp = -2.0 / to_double(space.level());

  const LogValue before = space.slater_log(config);
  Configuration moved;
  moved.reserve(n);
  for (const auto& p : config) moved.push_back(mobius_apply(g, p));
  const LogValue after = space.slater_log(moved);
  if (before.zero || after.zero)
    fail(Errc::InvalidArgument, "configuration on the singular locus");

  // The density relative to the reference product measure is ||det S||^{-2/k}
  // and the reference measure itself transports with the factor ||g x||^{-4}
  // per point. Measure invariance demands
  //   log h(g x) - log h(x) = 4 sum_j log||g x_j||,
  // every metric cocycle included; d = 2k makes the books balance.
  (void)d;
  double cocycle = 0.0;
  for (const auto& p : config) cocycle += log_push_scale(g, p);
  return std::abs(det_exp * (after.log_abs - before.log_abs) - 4.0 * cocycle);
}

// ---------------------------------------------------------------------------
// N_epsilon
// ---------------------------------------------------------------------------

NEpsilonResult n_epsilon(const Eigen::VectorXcd& section_coeffs, long long k, double epsilon,
                         const SingularMetricSpec& phi, int resolution) {
  if (epsilon <= 0.0) fail(Errc::InvalidArgument, "epsilon must be positive");
  if (k < 1) fail(Errc::InvalidArgument, "level must be positive");
  const int degree = static_cast<int>(section_coeffs.size()) - 1;
  if (degree != 2 * k) fail(Errc::DegreeMismatch, "section must have degree 2k");

  const LogPairCurve bare = LogPairCurve::projective_line();
  const SectionSpace space = SectionSpace::create(bare, Rat(k));

  // Local coefficients of the singular part of the metric: the weight enters
  // the norm with factor -2 k w and the measure with factor -2 w.
  std::vector<std::pair<SpherePoint, double>> sing;
  switch (phi.kind) {
    case MetricKind::ReferenceFS:
      break;
    case MetricKind::WeightedPair:
      for (std::size_t a = 0; a < phi.pair.points.size(); ++a)
        sing.emplace_back(phi.pair.points[a], to_double(phi.pair.weights[a]));
      break;
    case MetricKind::Toric: {
      const auto toric = AnticanonicalSection::toric();
      for (const auto& [p, m] : toric.roots) sing.emplace_back(p, static_cast<double>(m));
      break;
    }
  }

  auto log_integrand = [&](const SpherePoint& p) {
    // (|s|^2 e^{-k phi})^{eps/k} relative to the norm in the reference metric,
    // times the density of e^{-phi} relative to the reference measure.
    const Eigen::VectorXcd mono = space.monomials(p);
    Cx val(0, 0);
    for (int j = 0; j <= degree; ++j) val += section_coeffs[j] * mono[j];
    const double log_norm_ref = std::log(std::abs(val));
    double sing_norm = 0.0, sing_meas = 0.0;
    for (const auto& [q, w] : sing) {
      const double dist = std::max(chordal(p, q), 1e-300);
      sing_norm += -2.0 * k * w * std::log(dist);  // e^{-k(phi - phi_0)}
      sing_meas += -2.0 * w * std::log(dist);      // measure change
    }
    return (epsilon / k) * (2.0 * log_norm_ref + sing_norm) + sing_meas;
  };

  // Adapted nodes at the metric singularities and at the section's zeros
  // (the |s|^{2 eps/k} factor has cusps there that plain grids resolve
  // slowly). Coinciding locations merge with summed strengths.
  std::vector<SpherePoint> pts;
  std::vector<double> strengths;
  auto add_singular = [&](const SpherePoint& q, double strength) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (chordal(pts[i], q) < 1e-9) {
        strengths[i] += strength;
        return;
      }
    pts.push_back(q);
    strengths.push_back(strength);
  };
  for (const auto& [q, w] : sing) add_singular(q, 2.0 * w * (1.0 + epsilon));
  for (const auto& root : binary_form_roots(section_coeffs))
    add_singular(root, -2.0 * epsilon / k);

  auto level_value = [&](int res) {
    const QuadratureGrid grid = pts.empty()
                                    ? QuadratureGrid::make(res)
                                    : QuadratureGrid::make_adapted(res, pts, strengths);
    return grid.integrate_log(log_integrand);  // log of the integral
  };

  const double l1 = level_value(std::max(8, resolution / 4));
  const double l2 = level_value(std::max(8, resolution / 2));
  const double l3 = level_value(resolution);

  NEpsilonResult out;
  // Divergent integrals keep growing under refinement instead of settling.
  const double g12 = l2 - l1, g23 = l3 - l2;
  if (g23 > 0.05 && g23 > 0.5 * g12) {
    out.divergent = true;
    return out;
  }
  const double power = k / (2.0 * epsilon);
  out.value = std::exp(power * l3);
  out.error_est = std::abs(std::exp(power * l3) - std::exp(power * l2));
  return out;
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

double SmoothMetric::potential(Cx z) const {
  const double n2 = std::norm(z);
  const double denom = 1.0 + n2;
  const double m1 = (1.0 - n2) / denom;
  const double m2 = 2.0 * z.real() / denom;
  const double m3 = -2.0 * z.imag() / denom;
  return degree * std::log1p(n2) + a1 * m1 + a2 * m2 + a3 * m3;
}

Cx SmoothMetric::dz(Cx z) const {
  const double h = 1e-6;
  const double dre = (potential(z + Cx(h, 0)) - potential(z - Cx(h, 0))) / (2 * h);
  const double dim = (potential(z + Cx(0, h)) - potential(z - Cx(0, h))) / (2 * h);
  return 0.5 * Cx(dre, -dim);
}

double SmoothMetric::dzdzbar(Cx z) const {
  const double h = 1e-4;
  // 5-point Laplacian / 4 = d^2/dz dzbar for smooth functions.
  const double lap = (potential(z + Cx(h, 0)) + potential(z - Cx(h, 0)) +
                      potential(z + Cx(0, h)) + potential(z - Cx(0, h)) - 4.0 * potential(z)) /
                     (h * h);
  return 0.25 * lap;
}

namespace {

/// Pulled-back local potential of the lifted flow at chart point z:
/// phi_tau(z) = phi(F_tau z) - log |B(tau, z)|^2, where B is the cocycle of
/// the canonical lift acting on the chart trivialization.
double pullback_potential(const VectorFieldSL2& v, const SmoothMetric& phi, Cx tau, Cx z) {
  const Eigen::Matrix2cd g = flow_matrix(v, tau);
  const Eigen::Matrix2cd gi = g.inverse();
  const SpherePoint moved = mobius_apply(g, SpherePoint::from_chart(z));
  const Cx zeta = moved.chart();
  const Cx b = gi(0, 0) + gi(0, 1) * zeta;
  return phi.potential(zeta) - phi.degree * 2.0 * std::log(std::abs(b));
}

}  // namespace

Cx hamiltonian_value(const VectorFieldSL2& v, const SmoothMetric& phi, Cx z, double tau_step) {
  const double h = tau_step;
  const double da = (pullback_potential(v, phi, Cx(h, 0), z) -
                     pullback_potential(v, phi, Cx(-h, 0), z)) /
                    (2 * h);
  const double db = (pullback_potential(v, phi, Cx(0, h), z) -
                     pullback_potential(v, phi, Cx(0, -h), z)) /
                    (2 * h);
  return 0.5 * Cx(da, -db);
}

Cx hamiltonian_closed_form(const VectorFieldSL2& v, const SmoothMetric& phi, Cx z) {
  return v.chart_value(z) * phi.dz(z) +
         static_cast<double>(phi.degree) * (v.A(0, 0) + v.A(0, 1) * z);
}

HamiltonianResult hamiltonian_probe(const VectorFieldSL2& v, const SmoothMetric& phi,
                                    int resolution) {
  HamiltonianResult out;
  const double step = 0.5 / resolution;
  auto h_at = [&](Cx z) { return hamiltonian_value(v, phi, z); };

  // Probe points: a ring sweep of the chart-0 disc away from the seam.
  std::vector<Cx> probes;
  const int n_r = 6, n_t = 12;
  for (int i = 1; i <= n_r; ++i)
    for (int j = 0; j < n_t; ++j)
      probes.push_back(std::polar(0.85 * i / n_r, 2.0 * M_PI * (j + 0.37) / n_t));

  for (const Cx z : probes) {
    const Cx hz = h_at(z);
    out.max_h = std::max(out.max_h, std::abs(hz));
    out.max_im_h = std::max(out.max_im_h, std::abs(hz.imag()));

    // dbar h by central differences.
    const Cx dre = (h_at(z + Cx(step, 0)) - h_at(z - Cx(step, 0))) / (2 * step);
    const Cx dim = (h_at(z + Cx(0, step)) - h_at(z - Cx(0, step))) / (2 * step);
    const Cx h_zbar = 0.5 * (dre + Cx(0, 1) * dim);
    const Cx h_z = 0.5 * (dre - Cx(0, 1) * dim);

    const double curv = phi.dzdzbar(z);
    const Cx vv = v.chart_value(z);
    out.max_residual = std::max(out.max_residual, std::abs(h_zbar - vv * curv));

    // For an isometry generator h is real and the full differential identity
    // pairs the curvature with both components: h_z = curv conj(v).
    const double real_res = std::max(std::abs(h_z - curv * std::conj(vv)),
                                     std::abs(h_zbar - curv * vv));
    out.max_real_identity = std::max(out.max_real_identity, real_res);
  }
  return out;
}

}  // namespace gibbslab
