#ifndef GIBBSLAB_DING_HPP
#define GIBBSLAB_DING_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/flows.hpp"
#include "gibbslab/sections.hpp"
#include "gibbslab/stability.hpp"

namespace gibbslab {

/// Hermitian positive-definite inner product on the section space, stored in
/// the fixed L2-normalized monomial basis (so the reference inner product is
/// the identity matrix). Symmetrized on construction; the Cholesky factor is
/// cached. Throws NotPositiveDefinite.
class HermitianMetricMatrix {
 public:
  explicit HermitianMetricMatrix(const Eigen::MatrixXcd& h);
  static HermitianMetricMatrix identity(int n);

  int dim() const { return static_cast<int>(h_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return h_; }
  const Eigen::MatrixXcd& chol_lower() const { return chol_lower_; }
  double log_det() const { return log_det_; }

  /// v* H^{-1} v via the cached factorization.
  double inv_quadratic_form(const Eigen::VectorXcd& v) const;
  Eigen::VectorXcd solve(const Eigen::VectorXcd& v) const;

  HermitianMetricMatrix scaled(double factor) const { return HermitianMetricMatrix(factor * h_); }
  HermitianMetricMatrix det_normalized() const;

 private:
  Eigen::MatrixXcd h_;
  Eigen::MatrixXcd chol_lower_;
  double log_det_ = 0.0;
};

struct MinimizeOptions {
  int max_iterations = 400;
  double rel_tol = 1e-8;
  double grad_tol = 1e-6;
  double noncoercive_drop = 40.0;  // D falling this far below start flags divergence
  bool probe_rays_after = true;    // post-minimization non-coercivity ray check
};

struct DingIterate {
  int iter = 0;
  double ding = 0.0;
  double j = 0.0;
  double grad_norm = 0.0;
};

struct DingReport {
  Rat gamma{1};
  Rat k{1};
  double ding = 0.0;
  double j = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  bool non_coercive = false;
  Eigen::MatrixXcd minimizer;
  std::vector<DingIterate> trace;
};

/// Evaluates the twisted quantized Ding functional
///   D(H) = (1/kN) log det H - (1/gamma) log integral e^{-gamma u(H)} d(nu)
/// and J(H) = (1/kN) log det H + sup u(H), where u(H) = FS(H) - phi_0 is the
/// global function (1/k) log( v* H^{-1} v / N ) in the normalized basis and
/// nu is the pair reference measure. Node data are precomputed once.
class DingContext {
 public:
  DingContext(const SectionSpace& space, const Rat& gamma, int resolution);

  const SectionSpace& space() const { return space_; }
  const Rat& gamma() const { return gamma_; }
  int resolution() const { return resolution_; }
  double reference_mass() const { return mass_; }

  /// FS(H) - phi_0 at a point (chart free).
  double fs_relative(const HermitianMetricMatrix& h, const SpherePoint& p) const;

  /// FS(H) local potential in the point's canonical chart.
  double fs_metric_log(const HermitianMetricMatrix& h, const SpherePoint& p) const;

  /// integral e^{-gamma u(H)} d(nu).
  double twisted_integral(const HermitianMetricMatrix& h) const;

  double ding(const HermitianMetricMatrix& h) const;

  /// sup via grid scan plus six rounds of local polar refinement around the
  /// top five nodes.
  double sup_fs_relative(const HermitianMetricMatrix& h) const;
  double j_functional(const HermitianMetricMatrix& h) const;

  /// Gradient of D in the triangular coordinates of H = L L* (log-diagonal,
  /// real and imaginary strict lower entries).
  Eigen::VectorXd gradient_triangular(const Eigen::MatrixXcd& lower) const;
  double ding_of_lower(const Eigen::MatrixXcd& lower) const;

  /// One Gram re-anchoring step, det-normalized.
  HermitianMetricMatrix anchor_step(const HermitianMetricMatrix& h) const;

  DingReport minimize(const MinimizeOptions& options = {},
                      std::optional<Eigen::MatrixXcd> start = std::nullopt) const;

 private:
  struct Node {
    Eigen::VectorXcd v;   // normalized basis values
    double nu_w = 0.0;    // pair reference mass
    SpherePoint p;
  };
  Eigen::MatrixXcd anchor_matrix(const HermitianMetricMatrix& h) const;

  SectionSpace space_;
  Rat gamma_{1};
  int resolution_ = 0;
  std::vector<Node> nodes_;
  double mass_ = 0.0;
};

// ---------------------------------------------------------------------------
// Structure probes
// ---------------------------------------------------------------------------

struct HarmonicityReport {
  double laplacian_residual = 0.0;  // discrete Laplacian of tau -> D(F_tau* H0)
  double formula_residual = 0.0;    // defect of the explicit log|det R|^2 shift
  double pullback_integral_residual = 0.0;
};

/// Evaluates D at a 3x3 stencil of flow pullbacks F_tau* H0 = R(tau)* H0 R(tau)
/// and checks harmonicity plus the explicit determinant shift formula.
HarmonicityReport harmonicity_probe(const DingContext& ctx, const VectorFieldSL2& v,
                                    const HermitianMetricMatrix& h0, Cx tau_center = Cx(0.15, 0.1),
                                    double stencil = 0.1);

struct InequalityOptions {
  PartitionOptions partition;
  int resolution = 48;
  MinimizeOptions minimize;
};

struct InequalityResult {
  double lhs = 0.0;       // -(1/(gamma N)) log Z
  double lhs_stderr = 0.0;
  double rhs = 0.0;       // inf D + (1/(kN)) log N
  bool holds = false;
  PartitionResult partition;
  DingReport ding;
};

/// Checks -(1/(gamma N)) log Z <= inf D + (1/(kN)) log N with the partition
/// function estimated by importance sampling (quadrature cross-check for
/// N <= 3 folded into the stderr). Throws DivergentPartition when the
/// partition probe reports divergence.
InequalityResult inequality_check(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                                  const InequalityOptions& options = {});

struct RayProbe {
  int ray = 0;
  double tau_max = 0.0;
  std::vector<double> d_values;
  std::vector<double> j_values;
  bool divergent = false;  // D - eps J heading to -infinity along the ray
};

struct CoercivityRow {
  double epsilon = 0.0;
  double min_over_rays = 0.0;
  bool non_coercive = false;
};

struct CoercivityTable {
  std::vector<CoercivityRow> rows;
  std::vector<RayProbe> rays;  // for the smallest epsilon probed
};

/// Samples one-parameter families H_tau = A* e^{tau Lambda} A (Lambda real
/// traceless diagonal; the torus weight ray is always included) and tabulates
/// min over rays of D - eps J per epsilon. A profile decreasing to -infinity
/// flags NonCoercive; boundedness below supports coercivity without claiming
/// a proof.
CoercivityTable coercivity_probe(const DingContext& ctx, const std::vector<double>& epsilons,
                                 int n_random_rays, double tau_max, Rng& rng);

}  // namespace gibbslab

#endif
