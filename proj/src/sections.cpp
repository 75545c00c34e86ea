#include "gibbslab/sections.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

namespace gibbslab {

// ---------------------------------------------------------------------------
// LogPairCurve
// ---------------------------------------------------------------------------

LogPairCurve LogPairCurve::genus0(std::vector<SpherePoint> pts, std::vector<Rat> ws) {
  if (pts.size() != ws.size())
    fail(Errc::InvalidArgument, "marked points and weights differ in length");
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      if (chordal(pts[a], pts[b]) < 1e-12)
        fail(Errc::InvalidArgument, "marked points must be pairwise distinct");
  LogPairCurve pair;
  pair.genus = 0;
  pair.points = std::move(pts);
  pair.weights = std::move(ws);
  return pair;
}

LogPairCurve LogPairCurve::genus1(std::vector<Rat> ws) {
  LogPairCurve pair;
  pair.genus = 1;
  pair.weights = std::move(ws);
  pair.points.resize(pair.weights.size());  // symbolic labels
  return pair;
}

Rat LogPairCurve::weight_sum() const {
  Rat s{0};
  for (const auto& w : weights) s += w;
  return s;
}

bool LogPairCurve::ample() const {
  if (genus == 0) return Rat(2) - weight_sum() > Rat(0);
  return -weight_sum() > Rat(0);
}

bool LogPairCurve::klt() const {
  for (const auto& w : weights)
    if (w >= Rat(1)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Dimension
// ---------------------------------------------------------------------------

int dimension(const LogPairCurve& pair, const Rat& k) {
  if (k <= Rat(0)) fail(Errc::InvalidArgument, "level must be positive");
  if (pair.genus == 0) {
    const Rat d = k * (Rat(2) - pair.weight_sum());
    if (d.denominator() != 1 || d.numerator() < 0)
      fail(Errc::NotALineBundle,
           "k(2 - sum w) = " + rational_to_string(d) + " is not a nonnegative integer");
    return static_cast<int>(d.numerator()) + 1;
  }
  if (pair.genus == 1) {
    const Rat d = -k * pair.weight_sum();
    if (d.denominator() != 1 || d.numerator() < 1)
      fail(Errc::NotALineBundle,
           "-k sum w = " + rational_to_string(d) + " is not a positive integer");
    return static_cast<int>(d.numerator());
  }
  fail(Errc::UnsupportedGenus, "genus " + std::to_string(pair.genus) + " is not supported");
}

// ---------------------------------------------------------------------------
// SectionSpace
// ---------------------------------------------------------------------------

SectionSpace SectionSpace::create(const LogPairCurve& pair, const Rat& level) {
  if (pair.genus != 0) fail(Errc::UnsupportedGenus, "section spaces are built on genus 0 only");
  SectionSpace space;
  space.pair_ = pair;
  space.level_ = level;
  space.degree_ = dimension(pair, level) - 1;
  const int d = space.degree_;
  // g_j = pi j!(d-j)!/(d+1)! via log-Gamma, exact enough at any degree.
  space.l2_log_norms_.resize(d + 1);
  double sum = 0.0;
  for (int j = 0; j <= d; ++j) {
    const double log_g = std::log(M_PI) + std::lgamma(j + 1.0) + std::lgamma(d - j + 1.0) -
                         std::lgamma(d + 2.0);
    space.l2_log_norms_[j] = 0.5 * log_g;
    sum += 0.5 * log_g;
  }
  space.l2_log_norm_sum_ = sum;
  return space;
}

Eigen::VectorXcd SectionSpace::monomials(const SpherePoint& p) const {
  const int n = dim();
  Eigen::VectorXcd v(n);
  // Powers accumulated from both ends; normalized coordinates keep them <= 1.
  Cx acc0(1.0, 0.0);
  std::vector<Cx> pow1(n);
  pow1[0] = Cx(1.0, 0.0);
  for (int j = 1; j < n; ++j) pow1[j] = pow1[j - 1] * p.z1;
  for (int j = n - 1; j >= 0; --j) {
    v[j] = acc0 * pow1[j];
    acc0 *= p.z0;
  }
  return v;
}

Eigen::VectorXcd SectionSpace::basis_values(const SpherePoint& p) const {
  Eigen::VectorXcd v = monomials(p);
  for (int j = 0; j < v.size(); ++j) v[j] *= std::exp(-l2_log_norms_[j]);
  return v;
}

namespace {

bool has_projective_collision(const Configuration& config) {
  for (std::size_t i = 0; i < config.size(); ++i)
    for (std::size_t j = i + 1; j < config.size(); ++j)
      if (chordal(config[i], config[j]) < 1e-15) return true;
  return false;
}

}  // namespace

LogValue SectionSpace::slater_log(const Configuration& config, bool l2_normalized) const {
  const int n = dim();
  if (static_cast<int>(config.size()) != n)
    fail(Errc::DimensionMismatch, "configuration has " + std::to_string(config.size()) +
                                      " points, expected " + std::to_string(n));
  if (has_projective_collision(config)) return LogValue::zero_value();

  Eigen::MatrixXcd m(n, n);
  for (int j = 0; j < n; ++j) m.col(j) = monomials(config[j]);

  // Columns span ~degree orders of magnitude; pull the per-column maximum
  // into the log before factorizing.
  double col_logs = 0.0;
  for (int j = 0; j < n; ++j) {
    const double s = m.col(j).cwiseAbs().maxCoeff();
    if (s == 0.0) return LogValue::zero_value();
    m.col(j) /= s;
    col_logs += std::log(s);
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  double diag_logs = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = std::abs(lu.matrixLU()(i, i));
    if (u < 1e-280) return LogValue::zero_value();
    diag_logs += std::log(u);
  }
  double out = col_logs + diag_logs;
  if (l2_normalized) out -= l2_log_norm_sum_;
  return LogValue{out, false};
}

LogValue SectionSpace::slater_log_product(const Configuration& config, bool l2_normalized) const {
  const int n = dim();
  if (static_cast<int>(config.size()) != n)
    fail(Errc::DimensionMismatch, "configuration size mismatch");
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double c = chordal(config[i], config[j]);
      if (c < 1e-15) return LogValue::zero_value();
      acc += std::log(c);
    }
  if (l2_normalized) acc -= l2_log_norm_sum_;
  return LogValue{acc, false};
}

double SectionSpace::basis_change_residual(const Eigen::MatrixXcd& A,
                                           const Configuration& config) const {
  const int n = dim();
  if (A.rows() != n || A.cols() != n) fail(Errc::DimensionMismatch, "basis matrix size mismatch");
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
  double log_det_a = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = std::abs(lu.matrixLU()(i, i));
    if (u < 1e-250) fail(Errc::SingularMatrix, "basis change matrix is singular");
    log_det_a += std::log(u);
  }

  Eigen::MatrixXcd m(n, n);
  for (int j = 0; j < n; ++j) m.col(j) = monomials(config[j]);
  Eigen::MatrixXcd ma = A * m;
  double col_logs = 0.0;
  for (int j = 0; j < n; ++j) {
    const double s = ma.col(j).cwiseAbs().maxCoeff();
    ma.col(j) /= s;
    col_logs += std::log(s);
  }
  Eigen::PartialPivLU<Eigen::MatrixXcd> lua(ma);
  double diag_logs = 0.0;
  for (int i = 0; i < n; ++i) diag_logs += std::log(std::abs(lua.matrixLU()(i, i)));

  const LogValue plain = slater_log(config);
  if (plain.zero) fail(Errc::InvalidArgument, "configuration lies on the zero locus");
  return std::abs((col_logs + diag_logs) - plain.log_abs - log_det_a);
}

Eigen::VectorXcd SectionSpace::kodaira(const SpherePoint& p) const {
  return normalize_projective(monomials(p));
}

Eigen::VectorXcd normalize_projective(Eigen::VectorXcd v) {
  const double n = v.norm();
  if (n == 0.0) fail(Errc::ZeroVector, "zero projective vector");
  v /= n;
  int arg = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  v *= std::conj(v[arg]) / best;
  return v;
}

std::vector<SpherePoint> binary_form_roots(const Eigen::VectorXcd& coeffs) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  if (degree < 0 || coeffs.cwiseAbs().maxCoeff() == 0.0)
    fail(Errc::ZeroVector, "zero binary form");
  std::vector<SpherePoint> roots;
  int eff = degree;
  while (eff > 0 && std::abs(coeffs[eff]) < 1e-12 * coeffs.cwiseAbs().maxCoeff()) --eff;
  for (int i = 0; i < degree - eff; ++i) roots.push_back(SpherePoint::infinity());
  if (eff > 0) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(eff, eff);
    for (int i = 1; i < eff; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < eff; ++i) comp(i, eff - 1) = -coeffs[i] / coeffs[eff];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    for (int i = 0; i < eff; ++i) roots.push_back(SpherePoint::from_chart(es.eigenvalues()[i]));
  }
  return roots;
}

double projective_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  // Norm of the component of b orthogonal to a; avoids the sqrt(eps) floor of
  // the 1 - cos^2 form.
  const Eigen::VectorXcd an = a / a.norm();
  const Eigen::VectorXcd bn = b / b.norm();
  const Cx inner = (an.adjoint() * bn)(0, 0);
  return (bn - inner * an).norm();
}

}  // namespace gibbslab
