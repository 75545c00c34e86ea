#include "gibbslab/ding.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace gibbslab {

// ---------------------------------------------------------------------------
// HermitianMetricMatrix
// ---------------------------------------------------------------------------

HermitianMetricMatrix::HermitianMetricMatrix(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) fail(Errc::InvalidArgument, "inner product matrix must be square");
  h_ = 0.5 * (h + h.adjoint());
  Eigen::LLT<Eigen::MatrixXcd> llt(h_);
  if (llt.info() != Eigen::Success)
    fail(Errc::NotPositiveDefinite, "inner product matrix is not positive definite");
  chol_lower_ = llt.matrixL();
  log_det_ = 0.0;
  for (int i = 0; i < h_.rows(); ++i) {
    const double d = chol_lower_(i, i).real();
    if (!(d > 0.0)) fail(Errc::NotPositiveDefinite, "nonpositive pivot in factorization");
    log_det_ += 2.0 * std::log(d);
  }
}

HermitianMetricMatrix HermitianMetricMatrix::identity(int n) {
  return HermitianMetricMatrix(Eigen::MatrixXcd::Identity(n, n));
}

double HermitianMetricMatrix::inv_quadratic_form(const Eigen::VectorXcd& v) const {
  const Eigen::VectorXcd y = chol_lower_.triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

Eigen::VectorXcd HermitianMetricMatrix::solve(const Eigen::VectorXcd& v) const {
  Eigen::VectorXcd y = chol_lower_.triangularView<Eigen::Lower>().solve(v);
  return chol_lower_.adjoint().triangularView<Eigen::Upper>().solve(y);
}

HermitianMetricMatrix HermitianMetricMatrix::det_normalized() const {
  const double scale = std::exp(-log_det_ / h_.rows());
  return HermitianMetricMatrix(scale * h_);
}

// ---------------------------------------------------------------------------
// DingContext
// ---------------------------------------------------------------------------

namespace {

Eigen::Matrix2cd rotation_to_origin(const SpherePoint& p) {
  Eigen::Matrix2cd u;
  u << std::conj(p.z0), std::conj(p.z1), -p.z1, p.z0;
  return u;
}

}  // namespace

DingContext::DingContext(const SectionSpace& space, const Rat& gamma, int resolution)
    : space_(space), gamma_(gamma), resolution_(resolution) {
  if (gamma <= Rat(0) || gamma > Rat(1)) fail(Errc::InvalidArgument, "gamma must lie in (0,1]");
  if (!space.pair().klt())
    fail(Errc::InvalidArgument, "pair reference measure requires weights below 1");

  std::vector<SpherePoint> sing;
  std::vector<double> strengths;
  for (std::size_t a = 0; a < space.pair().points.size(); ++a) {
    const double w = to_double(space.pair().weights[a]);
    if (w > 0.0) {
      sing.push_back(space.pair().points[a]);
      strengths.push_back(2.0 * w);
    }
  }
  const QuadratureGrid grid = sing.empty()
                                  ? QuadratureGrid::make(resolution)
                                  : QuadratureGrid::make_adapted(resolution, sing, strengths);

  nodes_.reserve(grid.nodes().size());
  for (const auto& gn : grid.nodes()) {
    Node node;
    node.p = gn.p;
    node.v = space.basis_values(gn.p);
    double log_w = std::log(gn.fs_w);
    bool dead = false;
    for (std::size_t a = 0; a < space.pair().points.size(); ++a) {
      const double w = to_double(space.pair().weights[a]);
      if (w == 0.0) continue;
      const double dist = chordal(gn.p, space.pair().points[a]);
      if (dist < 1e-15) {
        dead = true;
        break;
      }
      log_w += -2.0 * w * std::log(dist);
    }
    if (dead) continue;
    node.nu_w = std::exp(log_w);
    nodes_.push_back(std::move(node));
    mass_ += nodes_.back().nu_w;
  }
}

double DingContext::fs_relative(const HermitianMetricMatrix& h, const SpherePoint& p) const {
  const Eigen::VectorXcd v = space_.basis_values(p);
  const double q = h.inv_quadratic_form(v);
  if (!(q > 0.0)) fail(Errc::QuadratureUnderflow, "vanishing Bergman sum");
  return std::log(q / space_.dim()) / to_double(space_.level());
}

double DingContext::fs_metric_log(const HermitianMetricMatrix& h, const SpherePoint& p) const {
  const int chart = p.canonical_chart();
  const double e_l = space_.degree() / to_double(space_.level());
  const double phi0 = chart == 0 ? -e_l * std::log(std::norm(p.z0))
                                 : -e_l * std::log(std::norm(p.z1));
  return fs_relative(h, p) + phi0;
}

double DingContext::twisted_integral(const HermitianMetricMatrix& h) const {
  const double g = to_double(gamma_);
  const double invk = 1.0 / to_double(space_.level());
  const int n = space_.dim();
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double q = h.inv_quadratic_form(nodes_[i].v);
    const double u = invk * std::log(q / n);
    terms[i] = std::log(nodes_[i].nu_w) - g * u;
    max_term = std::max(max_term, terms[i]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return std::exp(max_term + std::log(acc));
}

double DingContext::ding(const HermitianMetricMatrix& h) const {
  const double kn = to_double(space_.level()) * space_.dim();
  const double g = to_double(gamma_);
  return h.log_det() / kn - std::log(twisted_integral(h)) / g;
}

double DingContext::sup_fs_relative(const HermitianMetricMatrix& h) const {
  // Grid scan, then pattern refinement around the top nodes.
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    best.emplace_back(fs_relative(h, nodes_[i].p), i);
  std::partial_sort(best.begin(), best.begin() + std::min<std::size_t>(5, best.size()), best.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  double sup = best.front().first;
  const int tops = static_cast<int>(std::min<std::size_t>(5, best.size()));
  for (int t = 0; t < tops; ++t) {
    SpherePoint center = nodes_[best[t].second].p;
    double value = best[t].first;
    double radius = 2.0 / resolution_;
    for (int round = 0; round < 6; ++round) {
      const Eigen::Matrix2cd back = rotation_to_origin(center).adjoint();
      SpherePoint improved = center;
      double improved_value = value;
      for (int j = 0; j < 8; ++j) {
        const double rr = radius / std::sqrt(std::max(1e-12, 1.0 - radius * radius));
        const Cx zeta = std::polar(rr, 2.0 * M_PI * j / 8.0);
        const SpherePoint q = mobius_apply(back, SpherePoint::make(Cx(1, 0), zeta));
        const double val = fs_relative(h, q);
        if (val > improved_value) {
          improved_value = val;
          improved = q;
        }
      }
      center = improved;
      value = improved_value;
      radius *= 0.5;
    }
    sup = std::max(sup, value);
  }
  return sup;
}

double DingContext::j_functional(const HermitianMetricMatrix& h) const {
  const double kn = to_double(space_.level()) * space_.dim();
  return h.log_det() / kn + sup_fs_relative(h);
}

// ---------------------------------------------------------------------------
// Gradient and minimization
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXcd lower_from_params(const Eigen::VectorXd& theta, int n) {
  Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i) lower(i, i) = std::exp(theta[idx++]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      lower(i, j) = Cx(theta[idx], theta[idx + 1]);
      idx += 2;
    }
  return lower;
}

Eigen::VectorXd params_from_lower(const Eigen::MatrixXcd& lower) {
  const int n = static_cast<int>(lower.rows());
  Eigen::VectorXd theta(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) theta[idx++] = std::log(lower(i, i).real());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      theta[idx++] = lower(i, j).real();
      theta[idx++] = lower(i, j).imag();
    }
  return theta;
}

}  // namespace

double DingContext::ding_of_lower(const Eigen::MatrixXcd& lower) const {
  return ding(HermitianMetricMatrix(lower * lower.adjoint()));
}

Eigen::VectorXd DingContext::gradient_triangular(const Eigen::MatrixXcd& lower) const {
  const int n = space_.dim();
  const HermitianMetricMatrix h(lower * lower.adjoint());
  const double kd = to_double(space_.level());
  const double g = to_double(gamma_);
  const double invk = 1.0 / kd;

  // G = (1/kN) H^{-1} - (1/k) W with W the Bergman-weighted projector average.
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n, n);
  double total = 0.0;
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(nodes_.size());
  std::vector<Eigen::VectorXcd> ys(nodes_.size());
  std::vector<double> qs(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    ys[i] = h.solve(nodes_[i].v);
    qs[i] = std::real(nodes_[i].v.dot(ys[i]));
    const double u = invk * std::log(qs[i] / n);
    logs[i] = std::log(nodes_[i].nu_w) - g * u;
    max_term = std::max(max_term, logs[i]);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double weight = std::exp(logs[i] - max_term);
    total += weight;
    w.noalias() += (weight / qs[i]) * (ys[i] * ys[i].adjoint());
  }
  w /= total;

  Eigen::MatrixXcd hinv(n, n);
  {
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    for (int c = 0; c < n; ++c) hinv.col(c) = h.solve(id.col(c));
  }
  const Eigen::MatrixXcd grad_h = hinv / (kd * n) - w / kd;
  const Eigen::MatrixXcd b = lower.adjoint() * grad_h;

  Eigen::VectorXd grad(n * n);
  int idx = 0;
  for (int i = 0; i < n; ++i) grad[idx++] = 2.0 * lower(i, i).real() * b(i, i).real();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      grad[idx++] = 2.0 * b(j, i).real();
      grad[idx++] = -2.0 * b(j, i).imag();
    }
  return grad;
}

Eigen::MatrixXcd DingContext::anchor_matrix(const HermitianMetricMatrix& h) const {
  const int n = space_.dim();
  const double g = to_double(gamma_);
  const double invk = 1.0 / to_double(space_.level());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  double total = 0.0;
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(nodes_.size());
  std::vector<double> qs(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    qs[i] = h.inv_quadratic_form(nodes_[i].v);
    const double u = invk * std::log(qs[i] / n);
    logs[i] = std::log(nodes_[i].nu_w) - g * u;
    max_term = std::max(max_term, logs[i]);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double weight = std::exp(logs[i] - max_term);
    total += weight;
    m.noalias() += (weight / qs[i]) * (nodes_[i].v * nodes_[i].v.adjoint());
  }
  return static_cast<double>(n) * m / total;
}

HermitianMetricMatrix DingContext::anchor_step(const HermitianMetricMatrix& h) const {
  return HermitianMetricMatrix(anchor_matrix(h)).det_normalized();
}

DingReport DingContext::minimize(const MinimizeOptions& options,
                                 std::optional<Eigen::MatrixXcd> start) const {
  const int n = space_.dim();
  DingReport report;
  report.gamma = gamma_;
  report.k = space_.level();

  HermitianMetricMatrix h = start ? HermitianMetricMatrix(*start).det_normalized()
                                  : HermitianMetricMatrix::identity(n);
  double d_cur = ding(h);
  const double d_start = d_cur;
  Eigen::VectorXd grad = gradient_triangular(h.chol_lower());
  report.trace.push_back({0, d_cur, 0.0, grad.norm()});

  bool converged = false;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    HermitianMetricMatrix h_next = anchor_step(h);
    double d_next = ding(h_next);

    if (!(d_next <= d_cur + 1e-12)) {
      // Anchor overshoot: damped descent on the triangular parameters.
      Eigen::VectorXd theta = params_from_lower(h.chol_lower());
      const Eigen::VectorXd g = gradient_triangular(h.chol_lower());
      double step = 1.0 / std::max(1.0, g.norm());
      bool accepted = false;
      for (int back = 0; back < 40; ++back) {
        const Eigen::MatrixXcd cand_lower = lower_from_params(theta - step * g, n);
        const double cand = ding_of_lower(cand_lower);
        if (cand <= d_cur - 1e-4 * step * g.squaredNorm()) {
          h = HermitianMetricMatrix(cand_lower * cand_lower.adjoint()).det_normalized();
          d_next = cand;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        converged = true;  // no descent direction resolvable beyond noise
        grad = gradient_triangular(h.chol_lower());
        report.trace.push_back({iter, d_cur, 0.0, grad.norm()});
        break;
      }
    } else {
      h = h_next;
    }

    const double change = std::abs(d_next - d_cur);
    d_cur = std::min(d_next, d_cur);
    grad = gradient_triangular(h.chol_lower());
    report.trace.push_back({iter, d_cur, 0.0, grad.norm()});

    if (d_cur < d_start - options.noncoercive_drop) {
      report.non_coercive = true;
      break;
    }
    if (change < options.rel_tol * std::max(1.0, std::abs(d_cur)) ||
        grad.norm() < options.grad_tol) {
      converged = true;
      break;
    }
  }

  report.converged = converged;
  report.ding = d_cur;
  report.minimizer = h.matrix();
  report.grad_norm = grad.norm();
  report.j = j_functional(h);
  for (auto& t : report.trace) t.j = report.j;  // final J attached to the trace tail

  if (options.probe_rays_after && !report.non_coercive) {
    // Torus-weight ray: D stays flat while J escapes iff the functional fails
    // to be coercive (vector-field direction).
    const int d = space_.degree();
    Eigen::VectorXd lambda(n);
    for (int j = 0; j < n; ++j) lambda[j] = 0.5 * (d - 2.0 * j);
    auto h_ray = [&](double tau) {
      Eigen::VectorXcd diag(n);
      for (int j = 0; j < n; ++j) diag[j] = std::exp(0.5 * tau * lambda[j]);
      const Eigen::MatrixXcd m = diag.asDiagonal();
      return HermitianMetricMatrix((m * report.minimizer * m.adjoint()).eval()).det_normalized();
    };
    const double tau_max = 6.0;
    const HermitianMetricMatrix far = h_ray(tau_max);
    const double d_far = ding(far);
    const double j_far = j_functional(far);
    if (std::abs(d_far - report.ding) < 1e-3 * (1.0 + std::abs(report.ding)) &&
        j_far > report.j + 1.0)
      report.non_coercive = true;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Harmonicity probe
// ---------------------------------------------------------------------------

HarmonicityReport harmonicity_probe(const DingContext& ctx, const VectorFieldSL2& v,
                                    const HermitianMetricMatrix& h0, Cx tau_center,
                                    double stencil) {
  if (ctx.gamma() != Rat(1))
    fail(Errc::InvalidArgument, "harmonicity probe runs on the untwisted functional");
  if (!ctx.space().pair().bare())
    fail(Errc::InvalidArgument, "harmonicity probe targets the bare sphere");
  const int degree = ctx.space().degree();
  const double kn = to_double(ctx.space().level()) * ctx.space().dim();

  auto pulled = [&](Cx tau) {
    const LiftedFlow flow(flow_matrix(v, tau), degree);
    const Eigen::MatrixXcd r = flow.rep_matrix_normalized(ctx.space());
    return HermitianMetricMatrix((r.adjoint() * h0.matrix() * r).eval());
  };
  auto d_at = [&](Cx tau) { return ctx.ding(pulled(tau)); };

  const double h = stencil;
  const double d0 = ctx.ding(h0);
  const double dc = d_at(tau_center);
  const double dpx = d_at(tau_center + Cx(h, 0));
  const double dmx = d_at(tau_center - Cx(h, 0));
  const double dpy = d_at(tau_center + Cx(0, h));
  const double dmy = d_at(tau_center - Cx(0, h));

  HarmonicityReport out;
  out.laplacian_residual = std::abs(dpx + dmx + dpy + dmy - 4.0 * dc) / (h * h);

  const LiftedFlow flow(flow_matrix(v, tau_center), degree);
  const Eigen::MatrixXcd r = flow.rep_matrix_normalized(ctx.space());
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(r);
  double log_abs_det = 0.0;
  for (int i = 0; i < r.rows(); ++i) log_abs_det += std::log(std::abs(lu.matrixLU()(i, i)));
  out.formula_residual = std::abs((dc - d0) - 2.0 * log_abs_det / kn);

  out.pullback_integral_residual =
      std::abs(std::log(ctx.twisted_integral(pulled(tau_center))) -
               std::log(ctx.twisted_integral(h0)));
  return out;
}

// ---------------------------------------------------------------------------
// Inequality check
// ---------------------------------------------------------------------------

InequalityResult inequality_check(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                                  const InequalityOptions& options) {
  DeformedDensityParams params;
  params.pair = pair;
  params.k = k;
  params.gamma = gamma;
  params.l2_normalized_basis = true;

  const int n = dimension(pair, k);
  for (int m = 2; m <= n; ++m)
    if (!collision_exponent(m, std::nullopt, params).integrable)
      fail(Errc::DivergentPartition, "partition function diverges on a generic cluster");
  for (int a = 0; a < static_cast<int>(params.singular_coefficients().size()); ++a)
    for (int m = 1; m <= n; ++m)
      if (!collision_exponent(m, a, params).integrable)
        fail(Errc::DivergentPartition, "partition function diverges at a marked point");

  InequalityResult out;
  out.partition = partition_estimate(params, PartitionMethod::ImportanceMC, options.partition);
  if (out.partition.divergent)
    fail(Errc::DivergentPartition, "importance sampling flagged the partition as divergent");

  double z = out.partition.value;
  double z_err = out.partition.stderr_est;
  if (n <= 3) {
    const PartitionResult quad =
        partition_estimate(params, PartitionMethod::TensorQuadrature, options.partition);
    z_err = std::max(z_err, std::abs(quad.value - z) / 2.0 + quad.stderr_est);
  }

  const double gd = to_double(gamma);
  out.lhs = -std::log(z) / (gd * n);
  out.lhs_stderr = z_err / (gd * n * z);

  const SectionSpace space = SectionSpace::create(pair, k);
  const DingContext ctx(space, gamma, options.resolution);
  out.ding = ctx.minimize(options.minimize);

  // Quadrature tolerance from a coarse re-evaluation of D at the minimizer.
  const DingContext coarse(space, gamma, std::max(12, options.resolution / 2));
  const HermitianMetricMatrix h_opt(out.ding.minimizer);
  const double quad_tol = std::abs(coarse.ding(h_opt) - ctx.ding(h_opt)) + 1e-9;

  out.rhs = out.ding.ding + std::log(static_cast<double>(n)) / (to_double(k) * n);
  out.holds = out.lhs <= out.rhs + 2.0 * out.lhs_stderr + quad_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Coercivity probe
// ---------------------------------------------------------------------------

CoercivityTable coercivity_probe(const DingContext& ctx, const std::vector<double>& epsilons,
                                 int n_random_rays, double tau_max, Rng& rng) {
  const int n = ctx.space().dim();
  const int d = ctx.space().degree();

  std::vector<Eigen::VectorXd> lambdas;
  Eigen::VectorXd torus(n);
  for (int j = 0; j < n; ++j) torus[j] = 0.5 * (d - 2.0 * j);
  lambdas.push_back(torus);
  for (int r = 1; r < n_random_rays; ++r) {
    Eigen::VectorXd l(n);
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += (l[j] = rng.gaussian());
    l.array() -= mean / n;
    lambdas.push_back(l);
  }

  std::vector<Eigen::MatrixXcd> frames;
  frames.push_back(Eigen::MatrixXcd::Identity(n, n));
  for (int r = 1; r < n_random_rays; ++r) {
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 0.35 * rng.cgauss();
    a += Eigen::MatrixXcd::Identity(n, n);
    frames.push_back(a);
  }

  const std::vector<double> taus = {0.0, tau_max / 4, tau_max / 2, 3 * tau_max / 4, tau_max};
  CoercivityTable table;
  std::vector<std::vector<double>> d_vals(lambdas.size()), j_vals(lambdas.size());
  for (std::size_t r = 0; r < lambdas.size(); ++r) {
    RayProbe probe;
    probe.ray = static_cast<int>(r);
    probe.tau_max = tau_max;
    for (double tau : taus) {
      Eigen::VectorXcd diag(n);
      for (int j = 0; j < n; ++j) diag[j] = std::exp(0.5 * tau * lambdas[r][j]);
      const Eigen::MatrixXcd e = diag.asDiagonal();
      const Eigen::MatrixXcd hm = frames[r].adjoint() * e.adjoint() * e * frames[r];
      const HermitianMetricMatrix h = HermitianMetricMatrix(hm).det_normalized();
      probe.d_values.push_back(ctx.ding(h));
      probe.j_values.push_back(ctx.j_functional(h));
    }
    d_vals[r] = probe.d_values;
    j_vals[r] = probe.j_values;
    table.rays.push_back(std::move(probe));
  }

  for (double eps : epsilons) {
    CoercivityRow row;
    row.epsilon = eps;
    row.min_over_rays = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < lambdas.size(); ++r) {
      std::vector<double> f(taus.size());
      for (std::size_t t = 0; t < taus.size(); ++t) f[t] = d_vals[r][t] - eps * j_vals[r][t];
      row.min_over_rays = std::min(row.min_over_rays, *std::min_element(f.begin(), f.end()));
      const bool tail_down = f.back() < f[f.size() - 2] && f[f.size() - 2] < f[f.size() - 3];
      if (tail_down && f.back() < f.front() - 0.5) {
        row.non_coercive = true;
        table.rays[r].divergent = true;
      }
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace gibbslab
