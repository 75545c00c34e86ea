#ifndef GIBBSLAB_FLOWS_HPP
#define GIBBSLAB_FLOWS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/geometry.hpp"
#include "gibbslab/sections.hpp"
#include "gibbslab/stability.hpp"

namespace gibbslab {

/// Holomorphic vector field on the sphere, stored as a traceless 2x2 matrix A.
/// The chart form is v(z) = v0 + v1 z + v2 z^2 and the correspondence is fixed
/// so that the point flow  F_tau(p) = mobius_apply(exp(tau A), p)  satisfies
/// d/dtau F_tau(z)|_0 = v(z); in particular z d/dz flows as z -> e^tau z.
struct VectorFieldSL2 {
  Eigen::Matrix2cd A = Eigen::Matrix2cd::Zero();

  static VectorFieldSL2 from_matrix(const Eigen::Matrix2cd& A);  // checks trace
  static VectorFieldSL2 from_chart_poly(Cx v0, Cx v1, Cx v2);
  static VectorFieldSL2 rotation_generator() { return from_chart_poly(0, 1, 0); }  // z d/dz

  /// Chart polynomial coefficients (v0, v1, v2).
  std::array<Cx, 3> chart_poly() const;

  Cx chart_value(Cx z) const;
  bool is_zero(double tol = 0.0) const;

  /// Projective zeros of the field (roots of the homogenized chart form).
  std::vector<SpherePoint> zeros() const;
};

/// True iff the field has three or more distinct projective zeros, which on
/// the sphere forces it to vanish identically. Exact on the coefficients.
bool three_zeros_vanish(const VectorFieldSL2& v);

/// exp(tau A), the one-parameter subgroup of the field.
Eigen::Matrix2cd flow_matrix(const VectorFieldSL2& v, Cx tau);

/// Point flow F_tau = mobius action of flow_matrix.
SpherePoint flow_point(const VectorFieldSL2& v, Cx tau, const SpherePoint& p);

/// Canonical lift of g in SL(2,C) to degree-d forms: P -> P o g^{-1}. For the
/// anticanonical identification this is exactly the pushforward action on
/// vector fields, so the torus section z d/dz is invariant under its own flow
/// and the lift of any sl2 flow has unit determinant.
class LiftedFlow {
 public:
  LiftedFlow(const Eigen::Matrix2cd& g, int degree);

  int degree() const { return degree_; }
  const Eigen::Matrix2cd& base() const { return g_; }

  /// Matrix R with (g . m_i) = sum_j R_{ji} m_j in the raw monomial basis.
  const Eigen::MatrixXcd& rep_matrix() const { return rep_; }

  /// Same action expressed in the L2-normalized basis of `space`.
  Eigen::MatrixXcd rep_matrix_normalized(const SectionSpace& space) const;

  /// Coefficients of g . s for s given by monomial coefficients.
  Eigen::VectorXcd act_on_section(const Eigen::VectorXcd& coeffs) const;

 private:
  Eigen::Matrix2cd g_;
  int degree_ = 0;
  Eigen::MatrixXcd rep_;
};

/// Matrix B with kodaira(g x) ~ B kodaira(x) projectively: the expansion of
/// m_j o g over the monomial basis.
Eigen::MatrixXcd kodaira_intertwiner(const Eigen::Matrix2cd& g, int degree);

/// Invariance defect of the canonical measure under the diagonal action:
/// | log h(g config) + sum_j log T(g, x_j) - log h(config) |, where h is the
/// unnormalized density relative to dFS^N and T is the transport factor of
/// the reference measure. Exact cocycle bookkeeping makes this vanish for the
/// bare sphere at any level. Throws OnSingularLocus-style errors via the
/// density's infinite flag.
double mu_invariance_residual(const SectionSpace& space, const Eigen::Matrix2cd& g,
                              const Configuration& config);

// ---------------------------------------------------------------------------
// Invariance norm N_epsilon
// ---------------------------------------------------------------------------

enum class MetricKind { ReferenceFS, WeightedPair, Toric };

/// Metric data for the N_epsilon functional on sections of -kK.
struct SingularMetricSpec {
  MetricKind kind = MetricKind::ReferenceFS;
  LogPairCurve pair;  // used for WeightedPair
};

struct NEpsilonResult {
  bool divergent = false;
  double value = 0.0;       // when !divergent
  double error_est = 0.0;
};

/// ( integral (|s|^2 e^{-k phi})^{eps/k} e^{-phi} )^{k / 2 eps} for a section
/// of -kK given by monomial coefficients of degree 2k. Divergence is detected
/// by unbounded growth across grid refinements.
NEpsilonResult n_epsilon(const Eigen::VectorXcd& section_coeffs, long long k, double epsilon,
                         const SingularMetricSpec& phi, int resolution);

// ---------------------------------------------------------------------------
// Generalized Hamiltonians
// ---------------------------------------------------------------------------

/// Smooth metric on O(d): the FS weight plus a linear combination of the
/// moment coordinates m1 = |z0|^2 - |z1|^2, m2 + i m3 = 2 z0 conj(z1).
struct SmoothMetric {
  int degree = 2;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;

  double potential(Cx z) const;          // chart-0 local potential
  Cx dz(Cx z) const;                     // d/dz of the potential (central differences)
  double dzdzbar(Cx z) const;            // mixed second derivative
};

struct HamiltonianResult {
  double max_residual = 0.0;       // max |dbar h - v * (d dbar phi)| over probe points
  double max_h = 0.0;
  double max_im_h = 0.0;           // for isometry generators h should be real
  double max_real_identity = 0.0;  // residual of dh = contraction with i d dbar phi
};

/// h(z) = d/dtau|_0 of the pulled-back potential of the lifted flow, computed
/// by Wirtinger central differences in tau. The result checks the contraction
/// identity dbar h = delta_V dbar d phi by finite differences on a probe set
/// drawn from the grid.
Cx hamiltonian_value(const VectorFieldSL2& v, const SmoothMetric& phi, Cx z, double tau_step = 1e-6);

/// Closed form of the same function: v(z) phi_z(z) + d (A_00 + A_01 z).
Cx hamiltonian_closed_form(const VectorFieldSL2& v, const SmoothMetric& phi, Cx z);

HamiltonianResult hamiltonian_probe(const VectorFieldSL2& v, const SmoothMetric& phi,
                                    int resolution);

}  // namespace gibbslab

#endif
