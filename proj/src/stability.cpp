#include "gibbslab/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace gibbslab {

// ---------------------------------------------------------------------------
// Exact thresholds
// ---------------------------------------------------------------------------

LctResult lct_curve_divisor(const CurveDivisor& divisor) {
  if (divisor.terms.empty()) fail(Errc::EmptyDivisor, "divisor has no terms");
  for (std::size_t a = 0; a < divisor.terms.size(); ++a)
    for (std::size_t b = a + 1; b < divisor.terms.size(); ++b)
      if (chordal(divisor.terms[a].first, divisor.terms[b].first) < 1e-12)
        fail(Errc::InvalidArgument, "divisor points must be distinct");

  LctResult out;
  Rat max_coeff{0};
  bool any_positive = false;
  out.klt = true;
  for (const auto& [p, c] : divisor.terms) {
    (void)p;
    if (c > Rat(0)) {
      any_positive = true;
      max_coeff = std::max(max_coeff, c);
    }
    if (c >= Rat(1)) out.klt = false;
  }
  if (!any_positive) {
    out.infinite = true;
    return out;
  }
  out.value = Rat(1) / max_coeff;
  return out;
}

Tribool weight_condition(const LogPairCurve& pair) {
  if (pair.genus != 0) fail(Errc::WrongGenus, "weight condition is a genus-0 criterion");
  if (pair.weights.empty()) return Tribool::NA;
  const Rat total = pair.weight_sum();
  if (!(Rat(2) - total > Rat(0))) return Tribool::False;
  for (const auto& w : pair.weights)
    if (!(w < total - w)) return Tribool::False;
  return Tribool::True;
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

AnticanonicalSection AnticanonicalSection::from_roots(
    std::vector<std::pair<SpherePoint, int>> roots) {
  int total = 0;
  for (const auto& [p, m] : roots) {
    (void)p;
    if (m <= 0) fail(Errc::InvalidArgument, "root multiplicities must be positive");
    total += m;
  }
  if (total != 2) fail(Errc::InvalidArgument, "anticanonical sections have divisor degree 2");
  AnticanonicalSection s;
  s.roots = std::move(roots);
  return s;
}

AnticanonicalSection AnticanonicalSection::toric() {
  return from_roots({{SpherePoint::make(Cx(1, 0), Cx(0, 0)), 1}, {SpherePoint::infinity(), 1}});
}

LogValue AnticanonicalSection::log_norm(const SpherePoint& p) const {
  double acc = 0.0;
  for (const auto& [root, mult] : roots) {
    const double c = chordal(p, root);
    if (c < 1e-15) return LogValue::zero_value();
    acc += mult * std::log(c);
  }
  return LogValue{acc, false};
}

std::vector<std::pair<SpherePoint, Rat>> DeformedDensityParams::singular_coefficients() const {
  std::vector<std::pair<SpherePoint, Rat>> out;
  if (section) {
    for (const auto& [root, mult] : section->roots)
      out.emplace_back(root, (Rat(1) - gamma) * Rat(mult));
  } else {
    for (std::size_t a = 0; a < pair.points.size(); ++a)
      out.emplace_back(pair.points[a], pair.weights[a]);
  }
  return out;
}

void DeformedDensityParams::validate() const {
  if (gamma < Rat(0) || gamma > Rat(1)) fail(Errc::InvalidArgument, "gamma must lie in [0,1]");
  if (k <= Rat(0)) fail(Errc::InvalidArgument, "level must be positive");
  if (section) {
    if (!pair.bare())
      fail(Errc::InvalidArgument, "section deformation applies to the bare sphere");
    if (gamma == Rat(1)) return;  // degenerates to the undeformed density
    if (gamma == Rat(0)) fail(Errc::InvalidArgument, "section deformation needs gamma > 0");
  }
}

DensityValue deformed_log_density(const SectionSpace& space, const DeformedDensityParams& params,
                                  const Configuration& config) {
  params.validate();
  const int n = space.dim();
  if (static_cast<int>(config.size()) != n)
    fail(Errc::DimensionMismatch, "configuration size mismatch");

  DensityValue out;
  const auto coeffs = params.singular_coefficients();
  double acc = 0.0;

  if (params.gamma > Rat(0)) {
    const LogValue det = space.slater_log(config, params.l2_normalized_basis);
    if (det.zero) {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (chordal(config[i], config[j]) < 1e-15) {
            out.infinite = true;
            out.stratum = "collision sites " + std::to_string(i) + "," + std::to_string(j);
            return out;
          }
      out.infinite = true;
      out.stratum = "zero locus";
      return out;
    }
    acc += -2.0 * to_double(params.gamma / params.k) * det.log_abs;
  }

  for (int i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < coeffs.size(); ++a) {
      const double c = to_double(coeffs[a].second);
      if (c == 0.0) continue;
      const double dist = chordal(config[i], coeffs[a].first);
      if (dist < 1e-15) {
        out.infinite = c > 0.0;
        out.stratum = "marked point " + std::to_string(a) + " site " + std::to_string(i);
        if (c < 0.0) out.log = LogValue::zero_value();
        return out;
      }
      acc += -2.0 * c * std::log(dist);
    }
  }
  out.log = LogValue{acc, false};
  return out;
}

// ---------------------------------------------------------------------------
// Stratum exponents
// ---------------------------------------------------------------------------

StratumExponent collision_exponent(int m, std::optional<int> marked,
                                   const DeformedDensityParams& params) {
  params.validate();
  const int n = dimension(params.pair, params.k);
  const Rat alpha = params.gamma / params.k;
  const Rat mm(m);
  StratumExponent out;
  if (!marked) {
    if (m < 2 || m > n) fail(Errc::BadStratum, "generic clusters need 2 <= m <= N");
    out.exponent = Rat(2) * (mm - 1) - alpha * mm * (mm - 1);
  } else {
    const auto coeffs = params.singular_coefficients();
    if (*marked < 0 || *marked >= static_cast<int>(coeffs.size()))
      fail(Errc::BadStratum, "marked point index out of range");
    if (m < 1 || m > n) fail(Errc::BadStratum, "marked clusters need 1 <= m <= N");
    const Rat c = coeffs[*marked].second;
    out.exponent = Rat(2) * mm - alpha * mm * (mm - 1) - Rat(2) * c * mm;
  }
  out.integrable = out.exponent > Rat(0);
  return out;
}

// ---------------------------------------------------------------------------
// Partition function
// ---------------------------------------------------------------------------

namespace {

struct McAccumulator {
  double max_log = -std::numeric_limits<double>::infinity();
  double sum = 0.0;     // sum of exp(log - max_log)
  double sum_sq = 0.0;  // sum of exp(2(log - max_log))
  long long count = 0;

  void add(double log_value) {
    if (log_value > max_log) {
      if (count > 0) {
        const double shift = std::exp(max_log - log_value);
        sum *= shift;
        sum_sq *= shift * shift;
      }
      max_log = log_value;
    }
    const double e = std::exp(log_value - max_log);
    sum += e;
    sum_sq += e * e;
    ++count;
  }

  double mean() const { return count ? std::exp(max_log) * (sum / count) : 0.0; }
  double stderr_est() const {
    if (count < 2) return 0.0;
    const double m = sum / count;
    const double var = std::max(0.0, sum_sq / count - m * m);
    return std::exp(max_log) * std::sqrt(var / count);
  }
  double max_share() const { return sum > 0.0 ? 1.0 / sum : 0.0; }
};

SeedDiagnostic run_mc_seed(const SectionSpace& space, const DeformedDensityParams& params,
                           long long samples, unsigned long long seed, unsigned long long stream) {
  Rng rng(seed, stream);
  const int n = space.dim();
  const double log_mass = n * std::log(M_PI);
  McAccumulator acc;
  Configuration config(n);
  for (long long it = 0; it < samples; ++it) {
    for (int i = 0; i < n; ++i) config[i] = random_point(rng);
    const DensityValue dv = deformed_log_density(space, params, config);
    if (dv.infinite) continue;  // measure-zero proposal set
    acc.add(dv.log.zero ? -745.0 : dv.log.log_abs);
  }
  SeedDiagnostic diag;
  diag.seed = seed + stream;
  diag.estimate = acc.mean() * std::exp(log_mass);
  diag.stderr_est = acc.stderr_est() * std::exp(log_mass);
  diag.max_share = acc.max_share();
  return diag;
}

PartitionResult partition_mc(const SectionSpace& space, const DeformedDensityParams& params,
                             const PartitionOptions& options) {
  PartitionResult out;
  out.seeds.resize(options.n_seeds);
  const int threads = std::max(1, std::min<int>(options.threads, options.n_seeds));
  if (threads <= 1) {
    for (int s = 0; s < options.n_seeds; ++s)
      out.seeds[s] = run_mc_seed(space, params, options.samples, options.base_seed, s);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int s = next.fetch_add(1); s < options.n_seeds; s = next.fetch_add(1))
          out.seeds[s] = run_mc_seed(space, params, options.samples, options.base_seed, s);
      });
    for (auto& th : pool) th.join();
  }

  double mean = 0.0;
  for (const auto& d : out.seeds) mean += d.estimate;
  mean /= options.n_seeds;
  double within = 0.0, across = 0.0;
  double lo = out.seeds[0].estimate, hi = out.seeds[0].estimate;
  std::vector<double> shares;
  for (const auto& d : out.seeds) {
    within += d.stderr_est * d.stderr_est;
    across += (d.estimate - mean) * (d.estimate - mean);
    lo = std::min(lo, d.estimate);
    hi = std::max(hi, d.estimate);
    shares.push_back(d.max_share);
  }
  within = std::sqrt(within) / options.n_seeds;
  across = options.n_seeds > 1 ? std::sqrt(across / (options.n_seeds - 1) / options.n_seeds) : 0.0;
  out.value = mean;
  out.stderr_est = std::max(within, across);

  // Divergence diagnostic: a single sample carrying a macroscopic fraction of
  // a seed's total, or wild disagreement between independent seeds.
  std::sort(shares.begin(), shares.end());
  const double median_share = shares[shares.size() / 2];
  const double spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  out.divergent = median_share > 0.1 || spread > 2.5;
  return out;
}

PartitionResult partition_quadrature(const SectionSpace& space,
                                     const DeformedDensityParams& params,
                                     const PartitionOptions& options) {
  const int n = space.dim();
  if (n > 3) fail(Errc::InvalidArgument, "tensor quadrature is limited to N <= 3");

  const auto coeffs = params.singular_coefficients();
  std::vector<SpherePoint> sing;
  std::vector<double> strengths;
  for (const auto& [p, c] : coeffs)
    if (c > Rat(0)) {
      sing.push_back(p);
      strengths.push_back(2.0 * to_double(c));
    }

  const double det_exp = -2.0 * to_double(params.gamma / params.k);
  const double norm_shift =
      params.l2_normalized_basis ? -det_exp * space.l2_log_norm_sum() : 0.0;

  auto evaluate = [&](int resolution) {
    struct FactorNode {
      SpherePoint p;
      double w;
      double marked_log;
    };
    std::vector<std::vector<FactorNode>> factors(n);
    for (int f = 0; f < n; ++f) {
      const double offset = 0.0137 * (f + 1);
      QuadratureGrid g = sing.empty() ? QuadratureGrid::make(resolution, offset)
                                      : QuadratureGrid::make_adapted(resolution, sing, strengths,
                                                                     offset);
      factors[f].reserve(g.nodes().size());
      for (const auto& node : g.nodes()) {
        double ml = 0.0;
        bool dead = false;
        for (const auto& [p, c] : coeffs) {
          const double dist = chordal(node.p, p);
          if (dist < 1e-15) {
            dead = true;
            break;
          }
          ml += -2.0 * to_double(c) * std::log(dist);
        }
        if (dead) continue;
        factors[f].push_back({node.p, node.fs_w, ml});
      }
    }

    double total = 0.0;
    if (n == 1) {
      for (const auto& a : factors[0]) total += a.w * std::exp(a.marked_log + norm_shift);
    } else if (n == 2) {
      for (const auto& a : factors[0])
        for (const auto& b : factors[1]) {
          const double c = chordal(a.p, b.p);
          if (c < 1e-15) continue;
          total += a.w * b.w * std::exp(a.marked_log + b.marked_log + det_exp * std::log(c) +
                                        norm_shift);
        }
    } else {
      for (const auto& a : factors[0])
        for (const auto& b : factors[1]) {
          const double cab = chordal(a.p, b.p);
          if (cab < 1e-15) continue;
          const double base = a.marked_log + b.marked_log + det_exp * std::log(cab) + norm_shift;
          for (const auto& c : factors[2]) {
            const double cac = chordal(a.p, c.p);
            const double cbc = chordal(b.p, c.p);
            if (cac < 1e-15 || cbc < 1e-15) continue;
            total += a.w * b.w * c.w *
                     std::exp(base + c.marked_log + det_exp * (std::log(cac) + std::log(cbc)));
          }
        }
    }
    return total;
  };

  PartitionResult out;
  const double fine = evaluate(options.quad_resolution);
  const double coarse = evaluate(std::max(8, options.quad_resolution / 2));
  out.value = fine;
  out.stderr_est = std::abs(fine - coarse);
  out.divergent = false;
  return out;
}

}  // namespace

PartitionResult partition_estimate(const DeformedDensityParams& params, PartitionMethod method,
                                   const PartitionOptions& options) {
  params.validate();
  const SectionSpace space = SectionSpace::create(params.pair, params.k);
  if (method == PartitionMethod::ImportanceMC) {
    if (options.samples < 10000)
      fail(Errc::InvalidArgument, "importance sampling needs at least 1e4 samples");
    return partition_mc(space, params, options);
  }
  return partition_quadrature(space, params, options);
}

// ---------------------------------------------------------------------------
// Probe
// ---------------------------------------------------------------------------

StabilityReport gibbs_stable_probe(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                                   const ProbeOptions& options) {
  StabilityReport report;
  report.pair = pair;
  report.k = k;
  report.gamma = gamma;

  DeformedDensityParams params;
  params.pair = pair;
  params.k = k;
  params.gamma = gamma;

  const int n = dimension(pair, k);
  report.weight_cond = pair.genus == 0 && !pair.points.empty() ? weight_condition(pair)
                                                               : Tribool::NA;

  bool witness = false;
  for (int m = 2; m <= n; ++m) {
    const auto e = collision_exponent(m, std::nullopt, params);
    report.strata.push_back({m, -1, e.exponent, e.integrable});
    witness = witness || !e.integrable;
  }
  const auto coeffs = params.singular_coefficients();
  for (int a = 0; a < static_cast<int>(coeffs.size()); ++a)
    for (int m = 1; m <= n; ++m) {
      const auto e = collision_exponent(m, a, params);
      report.strata.push_back({m, a, e.exponent, e.integrable});
      witness = witness || !e.integrable;
    }

  if (witness) {
    report.verdict = Verdict::UnstableWitness;
    return report;
  }
  if (!options.run_partition) {
    report.verdict = Verdict::Inconclusive;
    return report;
  }
  report.partition = partition_estimate(params, PartitionMethod::ImportanceMC, options.partition);
  report.verdict = report.partition.divergent ? Verdict::Inconclusive : Verdict::StableProbePassed;
  return report;
}

// ---------------------------------------------------------------------------
// Vanishing order along an anticanonical divisor
// ---------------------------------------------------------------------------

namespace {

SpherePoint point_at_chordal_distance(const SpherePoint& center, double rho, double phase) {
  Eigen::Matrix2cd u;
  u << std::conj(center.z0), std::conj(center.z1), -center.z1, center.z0;
  const double rr = rho / std::sqrt(std::max(1e-300, 1.0 - rho * rho));
  const SpherePoint local = SpherePoint::make(Cx(1, 0), std::polar(rr, phase));
  return mobius_apply(u.adjoint(), local);
}

}  // namespace

int vanishing_order(const SectionSpace& space, const AnticanonicalSection& s, int slot, Rng& rng,
                    const std::vector<SpherePoint>* frozen_in,
                    const VanishingOrderOptions& options) {
  const int n = space.dim();
  if (n < 2) fail(Errc::InvalidArgument, "vanishing order needs N >= 2");
  if (slot < 0 || slot >= n) fail(Errc::InvalidArgument, "slot out of range");

  const int attempts = frozen_in ? 1 : options.max_retries;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<SpherePoint> frozen;
    if (frozen_in) {
      frozen = *frozen_in;
      if (static_cast<int>(frozen.size()) != n - 1)
        fail(Errc::DimensionMismatch, "need N-1 frozen points");
    } else {
      frozen.resize(n - 1);
      for (auto& p : frozen) p = random_point(rng);
    }

    int order = -1;
    bool good = true;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (const auto& [root, mult] : s.roots) {
      (void)mult;
      auto log_at = [&](double rho) {
        Configuration config;
        config.reserve(n);
        for (int i = 0, f = 0; i < n; ++i)
          config.push_back(i == slot ? point_at_chordal_distance(root, rho, phase)
                                     : frozen[f++]);
        return space.slater_log(config);
      };
      const LogValue hi = log_at(options.radius_hi);
      const LogValue mid = log_at(options.radius_mid);
      const LogValue lo = log_at(options.radius_lo);
      if (hi.zero || mid.zero || lo.zero) {
        good = false;
        break;
      }
      const double s1 = (hi.log_abs - mid.log_abs) /
                        (std::log(options.radius_hi) - std::log(options.radius_mid));
      const double s2 = (mid.log_abs - lo.log_abs) /
                        (std::log(options.radius_mid) - std::log(options.radius_lo));
      if (std::abs(s1 - s2) > options.slope_tol) {
        good = false;
        break;
      }
      const int l = static_cast<int>(std::lround(s2));
      order = order < 0 ? l : std::min(order, l);
    }
    if (good && order >= 0) return order;
  }
  fail(Errc::DegenerateFreeze, "frozen points kept hitting the zero locus or unstable slopes");
}

// ---------------------------------------------------------------------------
// Genus 1 bookkeeping
// ---------------------------------------------------------------------------

Genus1Ledger genus1_exponent_bookkeeping(long long k) {
  if (k < 1) fail(Errc::InvalidArgument, "level must be positive");
  // Delta = -(1/k) x: the bundle has degree 1, its section space is a line,
  // and the unique section vanishes at x to order exactly 1.
  const LogPairCurve pair = LogPairCurve::genus1({Rat(-1, k)});
  const int n = dimension(pair, Rat(k));
  if (n != 1) fail(Errc::InvalidArgument, "unexpected section count");
  Genus1Ledger ledger;
  ledger.k = k;
  ledger.entries.push_back({"slater_determinant", 1, Rat(-2, k)});
  ledger.entries.push_back({"divisor_metric", 1, Rat(2, k)});
  ledger.total = Rat(0);
  for (const auto& e : ledger.entries) ledger.total += e.exponent * e.vanishing_order;
  ledger.klt = ledger.total == Rat(0);
  return ledger;
}

void genus1_check_line_bundle(long long k, const Rat& delta) {
  const Rat coeff = -(Rat(1) + delta) / Rat(k);
  const Rat degree = -Rat(k) * coeff;
  if (degree.denominator() != 1)
    fail(Errc::NotALineBundle,
         "degree " + rational_to_string(degree) + " is not an integer");
}

// ---------------------------------------------------------------------------
// Global threshold
// ---------------------------------------------------------------------------

GlobalLctResult global_lct_probe(int degree, int samples, Rng& rng) {
  if (degree < 1) fail(Errc::InvalidArgument, "degree must be at least 1");
  GlobalLctResult out;
  out.exact = Rat(1, degree);
  out.sampled_min = 1.0;

  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXcd coeffs(degree + 1);
    for (int j = 0; j <= degree; ++j) coeffs[j] = rng.cgauss();
    const std::vector<SpherePoint> roots = binary_form_roots(coeffs);

    int max_mult = 1;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      int mult = 0;
      for (std::size_t j = 0; j < roots.size(); ++j)
        if (chordal(roots[i], roots[j]) < 1e-6) ++mult;
      max_mult = std::max(max_mult, mult);
    }
    out.sampled_min = std::min(out.sampled_min, 1.0 / max_mult);
  }
  return out;
}

}  // namespace gibbslab
