#ifndef GIBBSLAB_RNG_HPP
#define GIBBSLAB_RNG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "gibbslab/common.hpp"

namespace gibbslab {

/// Deterministic random source. All draws are built from raw mt19937_64 output
/// (never std::*_distribution, whose streams are implementation defined), so a
/// given (seed, stream) pair produces identical bytes on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : gen_(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1))) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  long long uniform_int(long long n) {
    return static_cast<long long>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller (cached pair).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = uniform();
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
  }

  Cx cgauss() { return Cx(gaussian(), gaussian()); }

  /// Haar-uniform SU(2) element (unit quaternion).
  Eigen::Matrix2cd su2() {
    double a = gaussian(), b = gaussian(), c = gaussian(), d = gaussian();
    double n = std::sqrt(a * a + b * b + c * c + d * d);
    a /= n; b /= n; c /= n; d /= n;
    Eigen::Matrix2cd m;
    m << Cx(a, b), Cx(c, d), Cx(-c, d), Cx(a, -b);
    return m;
  }

  /// Rotation by `angle` about a uniformly random axis.
  Eigen::Matrix2cd su2_rotation(double angle) {
    double z = 2.0 * uniform() - 1.0;
    double phi = 2.0 * M_PI * uniform();
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    double nx = s * std::cos(phi), ny = s * std::sin(phi), nz = z;
    double ch = std::cos(angle / 2.0), sh = std::sin(angle / 2.0);
    Eigen::Matrix2cd m;
    m << Cx(ch, sh * nz), Cx(sh * ny, sh * nx), Cx(-sh * ny, sh * nx), Cx(ch, -sh * nz);
    return m;
  }

  /// Random unimodular matrix: SU(2) * diag(e^s, e^-s) * SU(2), |s| <= spread.
  Eigen::Matrix2cd sl2(double spread) {
    double s = uniform(-spread, spread);
    Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
    d(0, 0) = std::exp(s);
    d(1, 1) = std::exp(-s);
    return su2() * d * su2();
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gibbslab

#endif
