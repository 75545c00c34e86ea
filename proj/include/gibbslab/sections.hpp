#ifndef GIBBSLAB_SECTIONS_HPP
#define GIBBSLAB_SECTIONS_HPP

#include <Eigen/Dense>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/geometry.hpp"
#include "gibbslab/pair.hpp"

namespace gibbslab {

using Configuration = std::vector<SpherePoint>;

/// Dimension of the section space at level k for genus 0 or 1 pairs.
/// Genus 0: degree d = k(2 - sum w) must be a nonnegative integer, dim = d+1.
/// Genus 1: degree d = -k sum w must be a positive integer, dim = d.
int dimension(const LogPairCurve& pair, const Rat& k);

/// The space of binary forms of degree d = k(2 - sum w) on the sphere, with
/// the monomial basis m_j = z0^{d-j} z1^j fixed once and for all. Pointwise
/// norms are taken in the degree-d Fubini-Study metric, which for normalized
/// homogeneous coordinates is just |form value|.
class SectionSpace {
 public:
  static SectionSpace create(const LogPairCurve& pair, const Rat& level);

  const LogPairCurve& pair() const { return pair_; }
  const Rat& level() const { return level_; }
  int degree() const { return degree_; }
  int dim() const { return degree_ + 1; }

  /// Raw monomial values m_j at the normalized representative.
  Eigen::VectorXcd monomials(const SpherePoint& p) const;

  /// L2-normalized basis values s_j = m_j / ||m_j||_{L2}. The reference Gram
  /// matrix of the monomials is diagonal with the closed-form Beta masses
  /// g_j = pi j! (d-j)! / (d+1)!, so the normalized basis is orthonormal.
  Eigen::VectorXcd basis_values(const SpherePoint& p) const;

  /// log sqrt(g_j) for the normalization above.
  double l2_log_norm(int j) const { return l2_log_norms_[j]; }
  double l2_log_norm_sum() const { return l2_log_norm_sum_; }

  /// log of the pointwise FS norm of det S at the configuration, computed by
  /// column-scaled LU with partial pivoting. Zero iff two points coincide
  /// projectively. Set `l2_normalized` to use the normalized basis instead of
  /// the raw monomials (a constant shift of -sum_j log sqrt(g_j)).
  LogValue slater_log(const Configuration& config, bool l2_normalized = false) const;

  /// Independent evaluation through the homogeneous Vandermonde product
  /// prod_{i<j} (z0_i z1_j - z1_i z0_j).
  LogValue slater_log_product(const Configuration& config, bool l2_normalized = false) const;

  /// | log|det S_A| - log|det S| - log|det A| | for the basis transformed by
  /// A (rows of the evaluation matrix mixed by A). Throws SingularMatrix.
  double basis_change_residual(const Eigen::MatrixXcd& A, const Configuration& config) const;

  /// Normalized projective image [m_0(p) : ... : m_d(p)].
  Eigen::VectorXcd kodaira(const SpherePoint& p) const;

 private:
  SectionSpace() = default;
  LogPairCurve pair_;
  Rat level_{1};
  int degree_ = 0;
  std::vector<double> l2_log_norms_;
  double l2_log_norm_sum_ = 0.0;
};

/// Normalizes a projective vector: unit Euclidean norm, largest-modulus entry
/// real positive.
Eigen::VectorXcd normalize_projective(Eigen::VectorXcd v);

/// Projective roots of a binary form sum c_j z0^{d-j} z1^j, listed with
/// multiplicity; degree drops place roots at infinity.
std::vector<SpherePoint> binary_form_roots(const Eigen::VectorXcd& coeffs);

/// Distance between projective vectors, insensitive to scale and phase.
double projective_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace gibbslab

#endif
