#include "gibbslab/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace gibbslab {

void Report::add(const std::string& key, const std::string& value) {
  fields_.emplace_back(key, value);
}
void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, long long value) { add(key, std::to_string(value)); }
void Report::add(const std::string& key, const Rat& value) { add(key, rational_to_string(value)); }

std::string Report::find(const std::string& key) const {
  for (const auto& [k, v] : fields_)
    if (k == key) return v;
  return {};
}

std::string Report::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : fields_) out << k << ": " << v << "\n";
  return out.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string format_complex(Cx z) {
  if (z.imag() == 0.0) return format_double(z.real());
  std::string out = format_double(z.real());
  out += z.imag() < 0.0 ? "-" : "+";
  out += format_double(std::abs(z.imag()));
  out += "i";
  return out;
}

std::string format_point(const SpherePoint& p) {
  if (p.is_infinite()) return "inf";
  return format_complex(p.chart());
}

std::string format_pair(const LogPairCurve& pair) {
  std::ostringstream out;
  out << "genus " << pair.genus;
  for (std::size_t a = 0; a < pair.points.size(); ++a) {
    out << (a == 0 ? ": " : ", ");
    if (pair.genus == 0) out << format_point(pair.points[a]) << " ";
    out << "w=" << rational_to_string(pair.weights[a]);
  }
  return out.str();
}

namespace {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::StableProbePassed: return "StableProbePassed";
    case Verdict::UnstableWitness: return "UnstableWitness";
    default: return "Inconclusive";
  }
}

const char* tribool_name(Tribool t) {
  switch (t) {
    case Tribool::True: return "true";
    case Tribool::False: return "false";
    default: return "NA";
  }
}

}  // namespace

Report stability_report_record(const StabilityReport& report) {
  Report out;
  out.add("pair", format_pair(report.pair));
  out.add("k", report.k);
  out.add("gamma", report.gamma);
  out.add("verdict", verdict_name(report.verdict));
  out.add("weight_condition", tribool_name(report.weight_cond));
  out.add("strata_count", static_cast<long long>(report.strata.size()));
  for (std::size_t s = 0; s < report.strata.size(); ++s) {
    const auto& st = report.strata[s];
    std::ostringstream line;
    line << "m=" << st.m << " at="
         << (st.marked < 0 ? std::string("generic") : "marked" + std::to_string(st.marked))
         << " E=" << rational_to_string(st.exponent)
         << " integrable=" << (st.integrable ? "yes" : "no");
    out.add("stratum_" + std::to_string(s), line.str());
  }
  if (!report.partition.seeds.empty() || report.partition.value != 0.0) {
    out.add("Z", report.partition.divergent ? std::string("DIVERGENT")
                                            : format_double(report.partition.value));
    out.add("Z_stderr", report.partition.stderr_est);
    std::ostringstream seeds;
    for (std::size_t i = 0; i < report.partition.seeds.size(); ++i) {
      if (i) seeds << ",";
      seeds << report.partition.seeds[i].seed;
    }
    out.add("seeds", seeds.str());
  }
  return out;
}

int worker_count() {
  const char* env = std::getenv("GIBBSLAB_THREADS");
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  if (!env) return hw;
  const int requested = std::atoi(env);
  if (requested < 1) return 1;
  return std::min(requested, hw);
}

}  // namespace gibbslab
