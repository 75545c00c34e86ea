#ifndef GIBBSLAB_COMMON_HPP
#define GIBBSLAB_COMMON_HPP

#include <boost/rational.hpp>
#include <complex>
#include <stdexcept>
#include <string>

namespace gibbslab {

using Cx = std::complex<double>;
using Rat = boost::rational<long long>;

enum class Errc {
  InvalidArgument,
  ZeroVector,
  NotUnimodular,
  NotALineBundle,
  UnsupportedGenus,
  WrongGenus,
  DimensionMismatch,
  DegreeMismatch,
  SingularMatrix,
  NotPositiveDefinite,
  EmptyDivisor,
  BadStratum,
  DegenerateFreeze,
  UnstableTarget,
  DivergentPartition,
  MaxIterations,
  QuadratureUnderflow,
  NonSmoothMetric,
  ParseError,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline double to_double(const Rat& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Parses "p/q", "n", or a plain decimal ("0.5" -> 1/2). Exact, no float round-trip.
Rat parse_rational(const std::string& text);

/// Canonical form "p/q", or "p" when the denominator is 1.
std::string rational_to_string(const Rat& r);

/// Magnitude stored as a natural log so products over hundreds of factors
/// neither overflow nor underflow. `zero` poisons every product it enters.
struct LogValue {
  double log_abs = 0.0;
  bool zero = false;

  static LogValue from_value(double v) {
    if (v == 0.0) return LogValue{0.0, true};
    return LogValue{std::log(std::abs(v)), false};
  }
  static LogValue zero_value() { return LogValue{0.0, true}; }

  LogValue operator*(const LogValue& o) const {
    if (zero || o.zero) return zero_value();
    return LogValue{log_abs + o.log_abs, false};
  }
  LogValue operator/(const LogValue& o) const {
    if (zero) return zero_value();
    if (o.zero) fail(Errc::InvalidArgument, "division by a zero LogValue");
    return LogValue{log_abs - o.log_abs, false};
  }
  LogValue pow(double e) const {
    if (zero) return zero_value();
    return LogValue{e * log_abs, false};
  }
  double value() const { return zero ? 0.0 : std::exp(log_abs); }
};

}  // namespace gibbslab

#endif
