#ifndef GIBBSLAB_PAIR_HPP
#define GIBBSLAB_PAIR_HPP

#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/geometry.hpp"

namespace gibbslab {

/// A curve with weighted marked points. Genus 0 is the sphere with explicit
/// marked points; genus 1 is handled symbolically (marked points are labels
/// only, no embedding), which is all the exponent bookkeeping needs.
struct LogPairCurve {
  int genus = 0;
  std::vector<SpherePoint> points;
  std::vector<Rat> weights;

  static LogPairCurve projective_line() { return LogPairCurve{}; }
  static LogPairCurve genus0(std::vector<SpherePoint> pts, std::vector<Rat> ws);
  static LogPairCurve genus1(std::vector<Rat> ws);

  bool bare() const { return points.empty() && weights.empty(); }
  Rat weight_sum() const;

  /// Genus 0: -(K+Delta) ample iff 2 - sum w > 0.
  bool ample() const;

  /// All weights strictly below 1.
  bool klt() const;
};

}  // namespace gibbslab

#endif
