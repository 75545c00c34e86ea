#include "gibbslab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gibbslab {

namespace {

double log_or_reject(const DensityValue& dv, bool& finite) {
  finite = !dv.infinite && !dv.log.zero;
  return finite ? dv.log.log_abs : 0.0;
}

}  // namespace

ChainState make_chain_state(const SectionSpace& space, const DeformedDensityParams& params,
                            Rng& rng, double step_scale) {
  ChainState state;
  state.step_scale = std::min(step_scale, M_PI / 4.0);
  const int n = space.dim();
  for (int tries = 0; tries < 1000; ++tries) {
    Configuration config(n);
    for (auto& p : config) p = random_point(rng);
    const DensityValue dv = deformed_log_density(space, params, config);
    if (!dv.infinite && !dv.log.zero) {
      state.config = std::move(config);
      state.log_density = dv.log;
      return state;
    }
  }
  fail(Errc::UnstableTarget, "could not find a finite-density starting configuration");
}

void mh_step(const SectionSpace& space, const DeformedDensityParams& params, ChainState& state,
             Rng& rng) {
  const int n = space.dim();
  const int site = static_cast<int>(rng.uniform_int(n));
  const double angle = rng.uniform(0.0, std::min(state.step_scale, M_PI / 4.0));
  const Eigen::Matrix2cd rot = rng.su2_rotation(angle);

  Configuration proposal = state.config;
  proposal[site] = mobius_apply(rot, proposal[site]);

  const DensityValue dv = deformed_log_density(space, params, proposal);
  ++state.steps;
  bool finite = false;
  const double log_new = log_or_reject(dv, finite);
  if (finite) {
    const double log_ratio = log_new - state.log_density.log_abs;
    if (log_ratio >= 0.0 || std::log(rng.uniform() + 1e-300) < log_ratio) {
      state.config = std::move(proposal);
      state.log_density = dv.log;
      ++state.accepted;
    }
  }

  if (state.steps % state.recheck_interval == 0) {
    const DensityValue check = deformed_log_density(space, params, state.config);
    if (check.infinite || check.log.zero ||
        std::abs(check.log.log_abs - state.log_density.log_abs) > 1e-9)
      state.log_density = check.log;  // refresh against drift
  }
}

std::pair<double, double> detailed_balance_logs(const SectionSpace& space,
                                                const DeformedDensityParams& params,
                                                const Configuration& from,
                                                const Configuration& to) {
  const DensityValue a = deformed_log_density(space, params, from);
  const DensityValue b = deformed_log_density(space, params, to);
  if (a.infinite || b.infinite || a.log.zero || b.log.zero)
    fail(Errc::InvalidArgument, "singular endpoint in detailed balance check");
  const double la = a.log.log_abs, lb = b.log.log_abs;
  // Symmetric proposal: flow rate pi(x) alpha(x->y) against the reverse.
  const double forward = la + std::min(0.0, lb - la);
  const double backward = lb + std::min(0.0, la - lb);
  return {forward, backward};
}

// ---------------------------------------------------------------------------
// Full runs
// ---------------------------------------------------------------------------

namespace {

double integrated_autocorr(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 16) return 1.0;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= n;
  if (var <= 0.0) return 1.0;

  // Geyer initial positive sequence on paired lags.
  double tau = 1.0;
  const std::size_t max_lag = std::min<std::size_t>(n / 4, 2000);
  for (std::size_t t = 1; t + 1 < max_lag; t += 2) {
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) c1 += (series[i] - mean) * (series[i + t] - mean);
    for (std::size_t i = 0; i + t + 1 < n; ++i)
      c2 += (series[i] - mean) * (series[i + t + 1] - mean);
    const double pair = c1 / ((n - t) * var) + c2 / ((n - t - 1) * var);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(1.0, tau);
}

std::array<double, 3> moment_functionals(const Configuration& config) {
  double f1 = 0.0, f2 = 0.0, f3 = 0.0;
  for (const auto& p : config) {
    f1 += std::norm(p.z1);
    const Cx m = p.z0 * std::conj(p.z1);
    f2 += m.real();
    f3 += m.imag();
  }
  const double n = static_cast<double>(config.size());
  return {f1 / n, f2 / n, f3 / n};
}

}  // namespace

SampleBatch run_chain(const LogPairCurve& pair, const Rat& k, const Rat& gamma,
                      const RunOptions& options) {
  DeformedDensityParams params;
  params.pair = pair;
  params.k = k;
  params.gamma = gamma;

  if (!options.force && gamma > Rat(0)) {
    ProbeOptions probe_opts;
    probe_opts.run_partition = false;
    const StabilityReport probe = gibbs_stable_probe(pair, k, gamma, probe_opts);
    if (probe.verdict == Verdict::UnstableWitness)
      fail(Errc::UnstableTarget, "stability probe witnessed a non-integrable target");
  }

  const SectionSpace space = SectionSpace::create(pair, k);
  Rng rng(options.seed);
  ChainState state = make_chain_state(space, params, rng, options.initial_step);

  const long long burn = std::max<long long>(1, options.budget / 10);
  long long last_accepts = state.accepted;
  for (long long it = 1; it <= burn; ++it) {
    mh_step(space, params, state, rng);
    if (it % 200 == 0) {
      const double rate = static_cast<double>(state.accepted - last_accepts) / 200.0;
      if (rate < 0.2)
        state.step_scale = std::max(1e-3, state.step_scale * 0.8);
      else if (rate > 0.5)
        state.step_scale = std::min(M_PI / 4.0, state.step_scale * 1.25);
      last_accepts = state.accepted;
    }
  }

  const long long main_steps = options.budget - burn;
  std::vector<Configuration> kept;
  std::vector<std::array<double, 3>> series;
  kept.reserve(main_steps);
  series.reserve(main_steps);
  const long long accept_before = state.accepted;
  const long long steps_before = state.steps;
  for (long long it = 0; it < main_steps; ++it) {
    mh_step(space, params, state, rng);
    kept.push_back(state.config);
    series.push_back(moment_functionals(state.config));
  }

  SampleBatch batch;
  batch.total_steps = options.budget;
  batch.step_scale = state.step_scale;
  batch.acceptance = static_cast<double>(state.accepted - accept_before) /
                     static_cast<double>(state.steps - steps_before);

  std::vector<double> f1(series.size());
  double tau = 1.0;
  for (int f = 0; f < 3; ++f) {
    for (std::size_t i = 0; i < series.size(); ++i) f1[i] = series[i][f];
    const double t = integrated_autocorr(f1);
    batch.ess.push_back(series.size() / t);
    tau = std::max(tau, t);
  }
  batch.autocorr_time = tau;
  batch.thin = std::max(1, static_cast<int>(std::lround(tau)));
  for (std::size_t i = 0; i < kept.size(); i += batch.thin)
    batch.configs.push_back(std::move(kept[i]));
  return batch;
}

// ---------------------------------------------------------------------------
// Push-forward histograms
// ---------------------------------------------------------------------------

int histogram_bin(const SpherePoint& p, int bands, int sectors) {
  const double u = std::min(std::nextafter(1.0, 0.0), std::norm(p.z1));
  int band = static_cast<int>(u * bands);
  band = std::min(band, bands - 1);
  const Cx w = p.z1 * std::conj(p.z0);
  double phi = std::abs(w) > 0.0 ? std::arg(w) : 0.0;
  int sector = static_cast<int>((phi + M_PI) / (2.0 * M_PI) * sectors);
  sector = std::min(std::max(sector, 0), sectors - 1);
  return band * sectors + sector;
}

Histogram pushforward_histogram(const SampleBatch& batch, int bands, int sectors) {
  if (batch.configs.empty()) fail(Errc::InvalidArgument, "empty sample batch");
  Histogram h;
  h.bands = bands;
  h.sectors = sectors;
  h.mass.assign(static_cast<std::size_t>(bands) * sectors, 0.0);
  h.stderr_est.assign(h.mass.size(), 0.0);
  for (const auto& config : batch.configs)
    for (const auto& p : config) {
      ++h.mass[histogram_bin(p, bands, sectors)];
      ++h.count;
    }
  const double n_eff = std::max(1.0, static_cast<double>(h.count));
  for (std::size_t b = 0; b < h.mass.size(); ++b) {
    const double p = h.mass[b] / n_eff;
    h.mass[b] = p;
    h.stderr_est[b] = std::sqrt(std::max(0.0, p * (1.0 - p) / n_eff));
  }
  return h;
}

void write_samples_csv(const std::string& path, const SampleBatch& batch, int chain_id) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot open " + path);
  out << "chain,step,i,z0_re,z0_im,z1_re,z1_im\n";
  char buf[256];
  for (std::size_t s = 0; s < batch.configs.size(); ++s) {
    const auto& config = batch.configs[s];
    for (std::size_t i = 0; i < config.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d,%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", chain_id, s, i,
                    config[i].z0.real(), config[i].z0.imag(), config[i].z1.real(),
                    config[i].z1.imag());
      out << buf;
    }
  }
}

std::string histogram_to_text(const Histogram& h) {
  std::ostringstream out;
  out << "bands: " << h.bands << "\n";
  out << "sectors: " << h.sectors << "\n";
  out << "count: " << h.count << "\n";
  char buf[128];
  for (int b = 0; b < h.bands; ++b)
    for (int s = 0; s < h.sectors; ++s) {
      const std::size_t idx = static_cast<std::size_t>(b) * h.sectors + s;
      std::snprintf(buf, sizeof(buf), "bin %d %d: %.12g +- %.12g\n", b, s, h.mass[idx],
                    h.stderr_est[idx]);
      out << buf;
    }
  return out.str();
}

}  // namespace gibbslab
