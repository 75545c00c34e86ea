#ifndef GIBBSLAB_REPORT_HPP
#define GIBBSLAB_REPORT_HPP

#include <string>
#include <utility>
#include <vector>

#include "gibbslab/common.hpp"
#include "gibbslab/pair.hpp"
#include "gibbslab/stability.hpp"

namespace gibbslab {

/// Ordered key/value record serialized as "key: value" lines. The emission
/// order is the canonical order; identical content is byte identical.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long long value);
  void add(const std::string& key, const Rat& value);

  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }
  std::string find(const std::string& key) const;  // empty when absent
  std::string to_text() const;

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

std::string format_double(double v);
std::string format_complex(Cx z);
std::string format_point(const SpherePoint& p);  // chart coordinate or "inf"
std::string format_pair(const LogPairCurve& pair);

Report stability_report_record(const StabilityReport& report);

int worker_count();  // GIBBSLAB_THREADS, clamped to [1, hardware]

}  // namespace gibbslab

#endif
