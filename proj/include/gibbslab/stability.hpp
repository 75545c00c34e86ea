#ifndef GIBBSLAB_STABILITY_HPP
#define GIBBSLAB_STABILITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/pair.hpp"
#include "gibbslab/rng.hpp"
#include "gibbslab/sections.hpp"

namespace gibbslab {

// ---------------------------------------------------------------------------
// Exact log canonical thresholds on curves
// ---------------------------------------------------------------------------

struct CurveDivisor {
  std::vector<std::pair<SpherePoint, Rat>> terms;  // distinct points, exact coefficients
};

struct LctResult {
  Rat value{0};         // meaningful when !infinite
  bool infinite = false;  // no positive coefficient anywhere
  bool klt = false;       // all coefficients < 1
};

/// lct = 1 / max coefficient, exact. Throws EmptyDivisor.
LctResult lct_curve_divisor(const CurveDivisor& divisor);

enum class Tribool { False, True, NA };

/// Genus-0 criterion: 2 - sum w > 0 and w_i < sum_{j != i} w_j for every i.
/// NA when there are no marked points (vacuous; the cluster probe still
/// witnesses instability of the bare sphere). Throws WrongGenus for genus 1.
Tribool weight_condition(const LogPairCurve& pair);

// ---------------------------------------------------------------------------
// Deformed canonical densities
// ---------------------------------------------------------------------------

/// Anticanonical section on the sphere as a degree-2 binary form with exact
/// root data (multiplicities summing to 2).
struct AnticanonicalSection {
  std::vector<std::pair<SpherePoint, int>> roots;
  static AnticanonicalSection from_roots(std::vector<std::pair<SpherePoint, int>> roots);
  static AnticanonicalSection toric();  // roots {0, infinity}, the torus-invariant section

  /// log of the pointwise FS norm (product of chordal distances to the roots,
  /// one factor per multiplicity).
  LogValue log_norm(const SpherePoint& p) const;
};

/// Parameters of the unnormalized density relative to the product reference
/// measure dFS^N:
///   log h = -(2 gamma / k) log||det S|| - 2 sum_i sum_a c_a log chordal(x_i, p_a)
/// with c_a = w_a for a weighted pair, or c_b = (1-gamma) * (root multiplicity)
/// when an anticanonical section deforms the bare sphere. gamma = 0 is the
/// flat reference.
struct DeformedDensityParams {
  LogPairCurve pair;
  Rat k{1};
  Rat gamma{1};
  std::optional<AnticanonicalSection> section;
  bool l2_normalized_basis = false;

  /// Singular points of the per-factor reference with exact local coefficients.
  std::vector<std::pair<SpherePoint, Rat>> singular_coefficients() const;

  void validate() const;
};

struct DensityValue {
  LogValue log;            // finite unnormalized log density when !infinite
  bool infinite = false;   // configuration sits on the singular locus
  std::string stratum;     // which stratum was hit, empty when finite
};

DensityValue deformed_log_density(const SectionSpace& space, const DeformedDensityParams& params,
                                  const Configuration& config);

// ---------------------------------------------------------------------------
// One-cluster stratum analysis
// ---------------------------------------------------------------------------

/// Stratum of m points colliding at a generic center (marked = nullopt) or at
/// singular point #marked. The local integrability exponent is exact:
///   generic:   E = 2(m-1) - alpha m(m-1),        alpha = gamma/k
///   marked a:  E = 2m - alpha m(m-1) - 2 c_a m
/// Integrable iff E > 0 (E = 0 diverges logarithmically).
struct StratumExponent {
  Rat exponent{0};
  bool integrable = false;
};

StratumExponent collision_exponent(int m, std::optional<int> marked,
                                   const DeformedDensityParams& params);

struct StratumRecord {
  int m = 0;
  int marked = -1;  // -1 = generic cluster
  Rat exponent{0};
  bool integrable = false;
};

// ---------------------------------------------------------------------------
// Partition function estimation
// ---------------------------------------------------------------------------

enum class PartitionMethod { TensorQuadrature, ImportanceMC };

struct PartitionOptions {
  long long samples = 100000;  // per seed
  int n_seeds = 3;
  unsigned long long base_seed = 1;
  int quad_resolution = 24;
  int threads = 1;
};

struct SeedDiagnostic {
  unsigned long long seed = 0;
  double estimate = 0.0;
  double stderr_est = 0.0;
  double max_share = 0.0;   // largest single sample / total sum
};

struct PartitionResult {
  bool divergent = false;
  double value = 0.0;
  double stderr_est = 0.0;
  std::vector<SeedDiagnostic> seeds;
};

/// Z = integral of the deformed density over the N-fold product, against
/// dFS^N. Importance sampling draws from the product reference; tensor
/// quadrature (N <= 3) uses singularity-adapted per-factor grids with a
/// distinct angular offset per factor. Divergence is a reported outcome:
/// the estimate is declared DIVERGENT when single samples dominate the sums
/// or the independent seeds disagree wildly.
PartitionResult partition_estimate(const DeformedDensityParams& params, PartitionMethod method,
                                   const PartitionOptions& options);

// ---------------------------------------------------------------------------
// Stability probe
// ---------------------------------------------------------------------------

enum class Verdict { StableProbePassed, UnstableWitness, Inconclusive };

struct StabilityReport {
  LogPairCurve pair;
  Rat k{1};
  Rat gamma{1};
  Tribool weight_cond = Tribool::NA;
  std::vector<StratumRecord> strata;
  PartitionResult partition;
  Verdict verdict = Verdict::Inconclusive;
};

struct ProbeOptions {
  PartitionOptions partition;
  bool run_partition = true;
};

/// Enumerates every one-cluster stratum (all m, generic and every marked
/// point), combines with the weight criterion and the MC partition estimate.
/// One-cluster analysis is necessary, not sufficient, so a clean pass is
/// reported as StableProbePassed, never as a proof.
StabilityReport gibbs_stable_probe(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                                   const ProbeOptions& options = {});

// ---------------------------------------------------------------------------
// Factorization order and global thresholds
// ---------------------------------------------------------------------------

struct VanishingOrderOptions {
  double radius_hi = 1e-2;
  double radius_mid = 1e-3;
  double radius_lo = 1e-4;
  double slope_tol = 0.1;
  int max_retries = 8;
};

/// Order of vanishing of x -> det S(x, frozen...) at the roots of s, detected
/// by the slope of log|det| along shrinking chordal radii (two slopes must
/// agree before rounding; frozen points are resampled otherwise). `slot` is
/// the argument position sent to the root. Passing explicit degenerate frozen
/// points throws DegenerateFreeze after the retry budget.
int vanishing_order(const SectionSpace& space, const AnticanonicalSection& s, int slot, Rng& rng,
                    const std::vector<SpherePoint>* frozen = nullptr,
                    const VanishingOrderOptions& options = {});

struct Genus1LedgerEntry {
  std::string term;
  int vanishing_order = 0;
  Rat exponent{0};
};

struct Genus1Ledger {
  long long k = 1;
  std::vector<Genus1LedgerEntry> entries;
  Rat total{0};
  bool klt = false;
};

/// Symbolic exponent cancellation for the genus-1 pair with Delta = -(1/k) x:
/// the unique section of the degree-1 bundle vanishes at x to order 1, the
/// divisor metric contributes the opposite exponent, total 0, klt.
Genus1Ledger genus1_exponent_bookkeeping(long long k);

/// Degree check behind the ledger: coefficient -(1+delta)/k defines a line
/// bundle only when 1+delta is an integer. Throws NotALineBundle otherwise.
void genus1_check_line_bundle(long long k, const Rat& delta);

struct GlobalLctResult {
  Rat exact{1};        // 1 / degree, witnessed by a single e-fold zero
  double sampled_min = 0.0;  // smallest lct among sampled sections
};

/// Global threshold of O(e): exact value 1/e; random degree-e sections are
/// sampled and their per-root multiplicity thresholds confirm no smaller one.
GlobalLctResult global_lct_probe(int degree, int samples, Rng& rng);

}  // namespace gibbslab

#endif
