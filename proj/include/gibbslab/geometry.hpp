#ifndef GIBBSLAB_GEOMETRY_HPP
#define GIBBSLAB_GEOMETRY_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/rng.hpp"

namespace gibbslab {

/// Point of the projective line in normalized homogeneous coordinates:
/// |z0|^2 + |z1|^2 = 1, with the larger-modulus coordinate made real positive
/// (ties resolved toward z0). The affine chart coordinate is z = z1/z0, so the
/// point at infinity is [0:1] and needs no special casing anywhere.
struct SpherePoint {
  Cx z0{1.0, 0.0};
  Cx z1{0.0, 0.0};

  static SpherePoint make(Cx z0, Cx z1);  // normalizes; throws ZeroVector
  static SpherePoint from_chart(Cx z) { return make(Cx(1.0, 0.0), z); }
  static SpherePoint infinity() { return make(Cx(0.0, 0.0), Cx(1.0, 0.0)); }

  bool is_infinite() const { return std::abs(z0) < 1e-14; }
  Cx chart() const;         // z1/z0; throws for the point at infinity
  Cx chart_other() const;   // z0/z1, the coordinate of the swapped chart

  /// Chart index with the smaller coordinate modulus: 0 when |z1| <= |z0|.
  int canonical_chart() const { return std::abs(z1) <= std::abs(z0) ? 0 : 1; }
  Cx chart_coord(int chart) const { return chart == 0 ? z1 / z0 : z0 / z1; }
};

/// z0_a z1_b - z1_a z0_b; vanishes exactly when a and b coincide projectively.
inline Cx cross(const SpherePoint& a, const SpherePoint& b) {
  return a.z0 * b.z1 - a.z1 * b.z0;
}

/// Chordal (Fubini-Study) distance in [0, 1] for normalized points.
inline double chordal(const SpherePoint& a, const SpherePoint& b) { return std::abs(cross(a, b)); }

SpherePoint random_point(Rng& rng);

/// Applies g to homogeneous coordinates and renormalizes.
/// Requires |det g - 1| < 1e-10 (throws NotUnimodular).
SpherePoint mobius_apply(const Eigen::Matrix2cd& g, const SpherePoint& p);

/// log ||g p||_2 for a normalized representative p: the metric cocycle picked
/// up when a section norm or reference density is transported by g.
double log_push_scale(const Eigen::Matrix2cd& g, const SpherePoint& p);

/// Derivative of the induced chart map at p (chart 0 coordinates).
Cx mobius_chart_derivative(const Eigen::Matrix2cd& g, Cx z);

/// Reference Fubini-Study weight on O(d). In chart 0 the log weight is
/// phi_0(z) = d log(1+|z|^2); degree 2 is the anticanonical case, whose
/// associated measure has chart density (1+|z|^2)^{-2} and total mass pi.
struct ReferenceMetric {
  int degree = 2;

  /// Log density of the associated measure relative to Lebesgue measure of
  /// `chart`. For degree d: d log|zc|^2 in chart 0 and the Jacobian-corrected
  /// value in chart 1 (zc = the kept homogeneous coordinate of that chart).
  double log_density(const SpherePoint& p, int chart) const;

  /// Same, evaluated in the point's canonical chart.
  double log_density(const SpherePoint& p) const { return log_density(p, p.canonical_chart()); }

  /// Log of the pointwise FS weight e^{-phi} in the given chart (the factor
  /// multiplying |s_U|^2 of a local section function).
  double log_weight(const SpherePoint& p, int chart) const;
};

/// Node of a sphere quadrature rule. fs_w is the mass of the degree-2
/// reference measure attached to the node (partition-of-unity factors for
/// singular-point patches are folded in), so
///   integral f dFS  ~=  sum fs_w * f(p)
/// for any globally defined integrand f.
struct GridNode {
  SpherePoint p;
  int chart = 0;       // 0/1 for the two main charts, 2 for patch nodes
  double leb_w = 0.0;  // Lebesgue weight in the node's own chart
  double fs_w = 0.0;
};

/// Two-chart quadrature on the sphere: each chart contributes a polar grid
/// over its closed unit disc (Gauss-Legendre radial nodes x uniform shifted
/// angles), which makes the rule invariant under the z -> 1/z chart swap and
/// keeps every evaluation at |coordinate| <= 1. Optional patches place graded
/// polar sub-grids around prescribed singular points so densities behaving
/// like chordal^{-s} (s < 2) integrate accurately.
class QuadratureGrid {
 public:
  /// Plain grid: `resolution` radial nodes, 2*resolution angles per chart.
  static QuadratureGrid make(int resolution, double angle_offset = 0.0);

  /// Grid adapted to integrands with chordal^{-strength} singularities at the
  /// given points. Patches of chordal radius delta are cut out of the main
  /// grid by a smooth partition of unity.
  static QuadratureGrid make_adapted(int resolution, const std::vector<SpherePoint>& singular,
                                     const std::vector<double>& strengths,
                                     double angle_offset = 0.0);

  const std::vector<GridNode>& nodes() const { return nodes_; }
  int resolution() const { return resolution_; }

  double fs_mass() const { return fs_mass_; }

  /// Quadrature of a global function against the reference measure.
  double integrate(const std::function<double(const SpherePoint&)>& f) const;

  /// Log of the integral of a positive integrand supplied in log scale
  /// (logsumexp over the nodes, safe against over/underflow).
  double integrate_log(const std::function<double(const SpherePoint&)>& log_f) const;

 private:
  std::vector<GridNode> nodes_;
  int resolution_ = 0;
  double fs_mass_ = 0.0;
};

/// Value with a refinement-based error estimate |I(r) - I(r/2)|.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// Integrates with the plain grid at `resolution` and reports the refinement
/// error estimate against resolution/2.
Estimate integrate_with_error(int resolution, const std::function<double(const SpherePoint&)>& f);

/// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace gibbslab

#endif
