#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "gibbslab/sampler.hpp"

using namespace gibbslab;

namespace {

SpherePoint pt(double re, double im = 0.0) { return SpherePoint::from_chart(Cx(re, im)); }

LogPairCurve half_weights() {
  return LogPairCurve::genus0({pt(0), pt(1), SpherePoint::infinity()},
                              {Rat(1, 2), Rat(1, 2), Rat(1, 2)});
}

LogPairCurve equator_thirds(Rat w) {
  const Cx omega = std::polar(1.0, 2.0 * M_PI / 3.0);
  return LogPairCurve::genus0(
      {pt(1), SpherePoint::from_chart(omega), SpherePoint::from_chart(std::conj(omega))},
      {w, w, w});
}

}  // namespace

TEST_CASE("flat target accepts every proposal") {
  const LogPairCurve bare = LogPairCurve::projective_line();
  const SectionSpace space = SectionSpace::create(bare, Rat(1));
  DeformedDensityParams params{bare, Rat(1), Rat(0), std::nullopt, false};
  Rng rng(1);
  ChainState state = make_chain_state(space, params, rng);
  for (int t = 0; t < 5000; ++t) mh_step(space, params, state, rng);
  CHECK(state.accepted == state.steps);
}

TEST_CASE("detailed balance holds in log scale") {
  const LogPairCurve halves = half_weights();
  const SectionSpace space = SectionSpace::create(halves, Rat(2));
  DeformedDensityParams params{halves, Rat(2), Rat(1), std::nullopt, false};
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    Configuration from(2);
    for (auto& p : from) p = random_point(rng);
    Configuration to = from;
    const int site = static_cast<int>(rng.uniform_int(2));
    to[site] = mobius_apply(rng.su2_rotation(0.3), to[site]);
    const DensityValue a = deformed_log_density(space, params, from);
    const DensityValue b = deformed_log_density(space, params, to);
    if (a.infinite || b.infinite) continue;
    const auto [forward, backward] = detailed_balance_logs(space, params, from, to);
    CHECK(std::abs(forward - backward) < 1e-12 * std::max(1.0, std::abs(forward)));
  }
}

TEST_CASE("discrete toy target matches exhaustive enumeration") {
  // Three sites, twelve states each, the real density evaluated once per
  // state tuple; the chain then runs on the cached table so the accept rule
  // faces its exact stationary law.
  const LogPairCurve pair = LogPairCurve::genus0(
      {pt(0), pt(1), SpherePoint::infinity()}, {Rat(1, 4), Rat(1, 4), Rat(1, 4)});
  const Rat k(8, 5);
  const SectionSpace space = SectionSpace::create(pair, k);
  REQUIRE(space.dim() == 3);
  DeformedDensityParams params{pair, k, Rat(1), std::nullopt, false};

  const int ring = 12;
  std::array<std::vector<SpherePoint>, 3> states;
  for (int site = 0; site < 3; ++site)
    for (int j = 0; j < ring; ++j) {
      const Cx z = Cx(0.25, 0.15) + std::polar(0.35, 2.0 * M_PI * j / ring + 0.05 * site);
      states[site].push_back(SpherePoint::from_chart(z));
    }

  std::vector<double> log_pi(ring * ring * ring);
  for (int a = 0; a < ring; ++a)
    for (int b = 0; b < ring; ++b)
      for (int c = 0; c < ring; ++c) {
        const DensityValue dv =
            deformed_log_density(space, params, {states[0][a], states[1][b], states[2][c]});
        REQUIRE(!dv.infinite);
        log_pi[(a * ring + b) * ring + c] = dv.log.log_abs;
      }

  std::vector<double> pi(log_pi.size());
  const double shift = *std::max_element(log_pi.begin(), log_pi.end());
  double total = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) total += (pi[s] = std::exp(log_pi[s] - shift));
  for (auto& p : pi) p /= total;

  Rng rng(3);
  int idx[3] = {0, 0, 0};
  std::vector<long long> visits(pi.size(), 0);
  const long long sweeps = 4000000;
  auto state_of = [&] { return (idx[0] * ring + idx[1]) * ring + idx[2]; };
  for (long long it = 0; it < sweeps; ++it) {
    for (int site = 0; site < 3; ++site) {
      const int proposal = static_cast<int>(rng.uniform_int(ring));
      const int old = idx[site];
      const double before = log_pi[state_of()];
      idx[site] = proposal;
      const double after = log_pi[state_of()];
      const double log_ratio = after - before;
      if (!(log_ratio >= 0.0 || std::log(rng.uniform() + 1e-300) < log_ratio)) idx[site] = old;
    }
    ++visits[state_of()];
  }

  double tv = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s)
    tv += std::abs(static_cast<double>(visits[s]) / sweeps - pi[s]);
  tv *= 0.5;
  CHECK(tv < 0.02);
}

TEST_CASE("flat-target moments match the closed form") {
  RunOptions opts;
  opts.budget = 60000;
  opts.seed = 4;
  const SampleBatch batch = run_chain(LogPairCurve::projective_line(), Rat(1), Rat(0), opts);
  CHECK(batch.acceptance > 0.99);

  // |z1|^2 of a reference-uniform point is uniform on [0,1].
  double mean = 0.0;
  long long count = 0;
  for (const auto& config : batch.configs)
    for (const auto& p : config) {
      mean += std::norm(p.z1);
      ++count;
    }
  mean /= count;
  const double ess = std::min(batch.ess[0], static_cast<double>(count));
  const double sigma = std::sqrt(1.0 / 12.0 / ess);
  CHECK(std::abs(mean - 0.5) < 3.0 * sigma);
}

TEST_CASE("stored density stays synchronized") {
  const LogPairCurve halves = half_weights();
  const SectionSpace space = SectionSpace::create(halves, Rat(2));
  DeformedDensityParams params{halves, Rat(2), Rat(1), std::nullopt, false};
  Rng rng(5);
  ChainState state = make_chain_state(space, params, rng);
  state.recheck_interval = 1000;
  for (int t = 0; t < 25000; ++t) mh_step(space, params, state, rng);
  const DensityValue check = deformed_log_density(space, params, state.config);
  CHECK(std::abs(check.log.log_abs - state.log_density.log_abs) < 1e-9);
  CHECK(state.accepted > 0);
  CHECK(state.accepted < state.steps);
}

TEST_CASE("unstable targets are refused unless forced") {
  RunOptions opts;
  opts.budget = 20000;
  opts.seed = 6;
  CHECK_THROWS_AS(run_chain(LogPairCurve::projective_line(), Rat(1), Rat(1), opts), Error);

  opts.force = true;
  const SampleBatch batch = run_chain(LogPairCurve::projective_line(), Rat(1), Rat(1), opts);
  CHECK(!batch.configs.empty());
}

TEST_CASE("run_chain tunes the step scale into the target window") {
  RunOptions opts;
  opts.budget = 80000;
  opts.seed = 7;
  const SampleBatch batch = run_chain(half_weights(), Rat(2), Rat(1), opts);
  CHECK(batch.acceptance > 0.15);
  CHECK(batch.acceptance < 0.6);
  CHECK(batch.step_scale <= M_PI / 4.0 + 1e-12);
  for (double e : batch.ess)
    CHECK(e <= static_cast<double>(batch.configs.size()) * batch.thin + 1);
}

TEST_CASE("histograms: normalization, seed consistency, exchangeability") {
  RunOptions opts;
  opts.budget = 120000;
  opts.seed = 8;
  const SampleBatch one = run_chain(half_weights(), Rat(2), Rat(1), opts);
  opts.seed = 108;
  const SampleBatch two = run_chain(half_weights(), Rat(2), Rat(1), opts);

  const Histogram h1 = pushforward_histogram(one, 6, 6);
  const Histogram h2 = pushforward_histogram(two, 6, 6);
  CHECK(std::abs(std::accumulate(h1.mass.begin(), h1.mass.end(), 0.0) - 1.0) < 1e-12);

  // Two independent seeds agree bin by bin at the MC scale; a handful of
  // 2-sigma excursions among 36 bins is expected noise.
  int outliers = 0;
  for (std::size_t b = 0; b < h1.mass.size(); ++b) {
    const double sigma = std::hypot(h1.stderr_est[b], h2.stderr_est[b]) *
                         std::sqrt(std::max(1.0, one.autocorr_time));
    if (std::abs(h1.mass[b] - h2.mass[b]) > 2.0 * sigma) ++outliers;
    CHECK(std::abs(h1.mass[b] - h2.mass[b]) < 6.0 * sigma + 1e-3);
  }
  CHECK(outliers <= 6);

  // Pooling one coordinate at a time gives compatible histograms.
  SampleBatch first_only = one, second_only = one;
  for (auto& c : first_only.configs) c.resize(1);
  for (auto& c : second_only.configs) c.erase(c.begin());
  const Histogram hf = pushforward_histogram(first_only, 6, 6);
  const Histogram hs = pushforward_histogram(second_only, 6, 6);
  int pool_outliers = 0;
  for (std::size_t b = 0; b < hf.mass.size(); ++b) {
    const double sigma = std::hypot(hf.stderr_est[b], hs.stderr_est[b]) *
                         std::sqrt(std::max(1.0, one.autocorr_time));
    if (std::abs(hf.mass[b] - hs.mass[b]) > 2.0 * sigma) ++pool_outliers;
  }
  CHECK(pool_outliers <= 6);
}

TEST_CASE("order-3 symmetric pair yields an order-3 symmetric histogram") {
  RunOptions opts;
  opts.budget = 150000;
  opts.seed = 9;
  const SampleBatch batch = run_chain(equator_thirds(Rat(1, 2)), Rat(2), Rat(1), opts);
  const Histogram h = pushforward_histogram(batch, 4, 12);

  // Rotation by 2 pi / 3 about the polar axis shifts sectors by 4.
  int outliers = 0;
  for (int b = 0; b < h.bands; ++b)
    for (int s = 0; s < h.sectors; ++s) {
      const std::size_t i = static_cast<std::size_t>(b) * h.sectors + s;
      const std::size_t j = static_cast<std::size_t>(b) * h.sectors + (s + 4) % h.sectors;
      const double sigma = std::hypot(h.stderr_est[i], h.stderr_est[j]) *
                           std::sqrt(std::max(1.0, batch.autocorr_time));
      if (std::abs(h.mass[i] - h.mass[j]) > 2.0 * sigma) ++outliers;
    }
  CHECK(outliers <= 8);
}

TEST_CASE("transported bins reproduce the histogram under the diagonal action") {
  RunOptions opts;
  opts.budget = 60000;
  opts.seed = 10;
  const SampleBatch batch = run_chain(half_weights(), Rat(2), Rat(1), opts);
  Rng rng(11);
  const Eigen::Matrix2cd g = rng.sl2(0.7);
  const Eigen::Matrix2cd g_inv = g.inverse();

  SampleBatch moved = batch;
  for (auto& config : moved.configs)
    for (auto& p : config) p = mobius_apply(g, p);

  const Histogram base = pushforward_histogram(batch, 6, 6);
  std::vector<double> transported(36, 0.0);
  long long count = 0;
  for (const auto& config : moved.configs)
    for (const auto& p : config) {
      ++transported[histogram_bin(mobius_apply(g_inv, p), 6, 6)];
      ++count;
    }
  for (auto& m : transported) m /= static_cast<double>(count);
  for (std::size_t b = 0; b < base.mass.size(); ++b)
    CHECK(std::abs(base.mass[b] - transported[b]) < 2.0 * base.stderr_est[b] + 1e-12);
}

TEST_CASE("repulsion from conical points grows with the weight") {
  // Mass near a marked point decreases as its weight increases, at fixed k.
  double previous = 1.0;
  for (int step = 0; step < 3; ++step) {
    const Rat w(step + 1, 5);  // 1/5, 2/5, 3/5
    const LogPairCurve pair =
        LogPairCurve::genus0({pt(0), pt(1), SpherePoint::infinity()}, {w, w, w});
    RunOptions opts;
    opts.budget = 120000;
    opts.seed = 12;
    const SampleBatch batch = run_chain(pair, Rat(5), Rat(1), opts);
    long long near = 0, total = 0;
    for (const auto& config : batch.configs)
      for (const auto& p : config) {
        near += chordal(p, pt(0)) < 0.45 ? 1 : 0;
        ++total;
      }
    const double fraction = static_cast<double>(near) / total;
    CHECK(fraction < previous);
    previous = fraction;
  }
}

TEST_CASE("sample CSV is byte-identical for identical seeds") {
  RunOptions opts;
  opts.budget = 20000;
  opts.seed = 13;
  const SampleBatch a = run_chain(half_weights(), Rat(2), Rat(1), opts);
  const SampleBatch b = run_chain(half_weights(), Rat(2), Rat(1), opts);
  write_samples_csv("sampler_test_a.csv", a);
  write_samples_csv("sampler_test_b.csv", b);
  std::ifstream fa("sampler_test_a.csv", std::ios::binary);
  std::ifstream fb("sampler_test_b.csv", std::ios::binary);
  const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  CHECK(ca.find("chain,step,i,z0_re") == 0);
  std::remove("sampler_test_a.csv");
  std::remove("sampler_test_b.csv");
}
