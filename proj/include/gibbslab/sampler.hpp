#ifndef GIBBSLAB_SAMPLER_HPP
#define GIBBSLAB_SAMPLER_HPP

#include <string>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/rng.hpp"
#include "gibbslab/sections.hpp"
#include "gibbslab/stability.hpp"

namespace gibbslab {

struct ChainParams {
  DeformedDensityParams density;
  double step_scale = 0.5;  // rotation angle of the single-site proposal, capped at pi/4
};

struct ChainState {
  Configuration config;
  LogValue log_density;
  double step_scale = 0.5;
  long long steps = 0;
  long long accepted = 0;
  long long recheck_interval = 10000;
};

ChainState make_chain_state(const SectionSpace& space, const DeformedDensityParams& params,
                            Rng& rng, double step_scale = 0.5);

/// One Metropolis-Hastings update: a uniformly chosen site is rotated by a
/// random SU(2) element of geodesic size up to step_scale. The proposal is
/// symmetric for the reference measure, so the acceptance ratio is a plain
/// density ratio; proposals on the singular locus are rejected. The stored
/// log density is recomputed every `recheck_interval` steps.
void mh_step(const SectionSpace& space, const DeformedDensityParams& params, ChainState& state,
             Rng& rng);

/// Both sides of the detailed-balance identity in log scale for a concrete
/// proposed move (unit-test hook).
std::pair<double, double> detailed_balance_logs(const SectionSpace& space,
                                                const DeformedDensityParams& params,
                                                const Configuration& from,
                                                const Configuration& to);

struct SampleBatch {
  std::vector<Configuration> configs;  // thinned
  double acceptance = 0.0;
  double step_scale = 0.0;
  double autocorr_time = 1.0;
  long long total_steps = 0;
  int thin = 1;
  std::vector<double> ess;  // per coordinate functional
};

struct RunOptions {
  long long budget = 100000;  // total MH steps
  unsigned long long seed = 1;
  bool force = false;         // sample even when the probe witnesses instability
  double initial_step = 0.5;
  int probe_resolution = 16;
};

/// Burn-in is 10% of the budget; the step scale is tuned there toward
/// acceptance in [0.2, 0.5] and then frozen; thinning uses the estimated
/// autocorrelation time. Refuses targets with an instability witness unless
/// forced (throws UnstableTarget).
SampleBatch run_chain(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                      const RunOptions& options);

struct Histogram {
  int bands = 0;
  int sectors = 0;
  std::vector<double> mass;      // row-major bands x sectors, sums to 1
  std::vector<double> stderr_est;
  long long count = 0;
};

/// Pooled one-point histogram over equal-reference-mass cells: uniform bands
/// in |z1|^2 times uniform sectors in arg(z1/z0).
Histogram pushforward_histogram(const SampleBatch& batch, int bands, int sectors);

/// Bin index helpers (exposed for the symmetry tests).
int histogram_bin(const SpherePoint& p, int bands, int sectors);

void write_samples_csv(const std::string& path, const SampleBatch& batch, int chain_id = 0);
std::string histogram_to_text(const Histogram& h);

}  // namespace gibbslab

#endif
