// Command-line surface for the gibbslab shared library. Everything below
// talks to the library through the C API in gibbslab.h only.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gibbslab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnstable = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitUsage = 64;
constexpr int kExitSoftware = 70;

struct Rational {
  long long num = 0;
  long long den = 1;
};

struct ParsedPoint {
  double re = 0.0;
  double im = 0.0;
  bool at_infinity = false;
  std::string canonical;
};

struct Config {
  int genus = 0;
  std::vector<ParsedPoint> points;
  std::vector<Rational> weights;
  std::vector<std::string> weight_text;
  Rational k{1, 1};
  Rational gamma{1, 1};
  std::string k_text = "1";
  std::string gamma_text = "1";
  unsigned long long seed = 1;
  int seeds = 3;
  long long budget = 100000;
  int resolution = 48;
  bool force = false;
  std::string out = "out";
};

class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(const std::string& what) : std::runtime_error(what) {}
};

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = strip(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Rational parse_rational(const std::string& text) {
  const std::string s = strip(text);
  if (s.empty()) throw ParseFailure("empty rational");
  const auto slash = s.find('/');
  auto to_ll = [](const std::string& t) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &pos);
    } catch (...) {
      throw ParseFailure("bad integer '" + t + "'");
    }
    if (pos != t.size()) throw ParseFailure("bad integer '" + t + "'");
    return v;
  };
  if (slash == std::string::npos) return Rational{to_ll(s), 1};
  Rational r{to_ll(strip(s.substr(0, slash))), to_ll(strip(s.substr(slash + 1)))};
  if (r.den == 0) throw ParseFailure("zero denominator in '" + text + "'");
  return r;
}

std::string rational_to_text(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

// Complex chart coordinates: "inf", "1", "-0.5", "i", "-i", "1+2i", "0.3-0.7i".
ParsedPoint parse_point(const std::string& text) {
  ParsedPoint p;
  std::string s = strip(text);
  if (s == "inf" || s == "Inf" || s == "INF") {
    p.at_infinity = true;
    p.canonical = "inf";
    return p;
  }
  if (s.empty()) throw ParseFailure("empty point");
  auto parse_real = [](const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (...) {
      throw ParseFailure("bad number '" + t + "'");
    }
    if (pos != t.size()) throw ParseFailure("bad number '" + t + "'");
    return v;
  };
  if (s.back() == 'i' || s.back() == 'I') {
    std::string body = s.substr(0, s.size() - 1);
    // Find the split between real and imaginary parts: the last +/- that is
    // not an exponent sign and not the leading sign.
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
      if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
        split = i;
        break;
      }
    }
    if (split == std::string::npos) {
      std::string imag = body;
      if (imag.empty() || imag == "+") imag = "1";
      else if (imag == "-") imag = "-1";
      p.im = parse_real(imag);
    } else {
      p.re = parse_real(body.substr(0, split));
      std::string imag = body.substr(split);
      if (imag == "+") imag = "1";
      else if (imag == "-") imag = "-1";
      p.im = parse_real(imag);
    }
  } else {
    p.re = parse_real(s);
  }
  char buf[96];
  if (p.im == 0.0)
    std::snprintf(buf, sizeof(buf), "%.17g", p.re);
  else
    std::snprintf(buf, sizeof(buf), "%.17g%s%.17gi", p.re, p.im < 0 ? "-" : "+",
                  std::abs(p.im));
  p.canonical = buf;
  return p;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseFailure("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = strip(line);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseFailure("expected 'key: value' in '" + line + "'");
    kv[strip(line.substr(0, colon))] = strip(line.substr(colon + 1));
  }

  Config cfg;
  if (kv.count("genus")) cfg.genus = static_cast<int>(parse_rational(kv["genus"]).num);
  if (kv.count("points"))
    for (const auto& token : split_list(kv["points"])) cfg.points.push_back(parse_point(token));
  if (kv.count("weights"))
    for (const auto& token : split_list(kv["weights"])) {
      cfg.weights.push_back(parse_rational(token));
      cfg.weight_text.push_back(rational_to_text(cfg.weights.back()));
    }
  if (cfg.genus == 0 && cfg.points.size() != cfg.weights.size())
    throw ParseFailure("points and weights must have equal length");
  if (kv.count("k")) {
    cfg.k = parse_rational(kv["k"]);
    cfg.k_text = rational_to_text(cfg.k);
  }
  if (kv.count("gamma")) {
    cfg.gamma = parse_rational(kv["gamma"]);
    cfg.gamma_text = rational_to_text(cfg.gamma);
  }
  if (kv.count("seed")) cfg.seed = std::stoull(kv["seed"]);
  if (kv.count("seeds")) cfg.seeds = std::stoi(kv["seeds"]);
  if (kv.count("budget")) cfg.budget = std::stoll(kv["budget"]);
  if (kv.count("resolution")) cfg.resolution = std::stoi(kv["resolution"]);
  if (kv.count("force")) cfg.force = kv["force"] == "1" || kv["force"] == "true";
  if (kv.count("out")) cfg.out = kv["out"];
  return cfg;
}

std::string serialize_config(const Config& cfg) {
  std::ostringstream out;
  out << "genus: " << cfg.genus << "\n";
  if (!cfg.points.empty()) {
    out << "points: ";
    for (std::size_t i = 0; i < cfg.points.size(); ++i)
      out << (i ? ", " : "") << cfg.points[i].canonical;
    out << "\n";
  }
  if (!cfg.weights.empty()) {
    out << "weights: ";
    for (std::size_t i = 0; i < cfg.weights.size(); ++i)
      out << (i ? ", " : "") << rational_to_text(cfg.weights[i]);
    out << "\n";
  }
  out << "k: " << rational_to_text(cfg.k) << "\n";
  out << "gamma: " << rational_to_text(cfg.gamma) << "\n";
  out << "seed: " << cfg.seed << "\n";
  out << "seeds: " << cfg.seeds << "\n";
  out << "budget: " << cfg.budget << "\n";
  out << "resolution: " << cfg.resolution << "\n";
  out << "force: " << (cfg.force ? 1 : 0) << "\n";
  out << "out: " << cfg.out << "\n";
  return out.str();
}

struct PairHandle {
  gl_pair* pair = nullptr;
  ~PairHandle() { gl_pair_free(pair); }
};

struct ReportHandle {
  gl_report* report = nullptr;
  ~ReportHandle() { gl_report_free(report); }
};

int make_pair(const Config& cfg, PairHandle& handle) {
  std::vector<double> re, im;
  std::vector<int> inf;
  std::vector<long long> wn, wd;
  for (const auto& p : cfg.points) {
    re.push_back(p.re);
    im.push_back(p.im);
    inf.push_back(p.at_infinity ? 1 : 0);
  }
  for (const auto& w : cfg.weights) {
    wn.push_back(w.num);
    wd.push_back(w.den);
  }
  const gl_status st =
      gl_pair_create(cfg.genus, re.data(), im.data(), inf.data(), wn.data(), wd.data(),
                     static_cast<int>(cfg.weights.size()), &handle.pair);
  if (st != GL_OK) {
    std::cerr << "pair construction failed: " << gl_last_error() << "\n";
    return st == GL_ERR_PARSE || st == GL_ERR_INVALID_ARGUMENT ? kExitUsage : kExitSoftware;
  }
  return kExitOk;
}

gl_run_options run_options(const Config& cfg) {
  gl_run_options o;
  gl_run_options_init(&o);
  o.budget = cfg.budget;
  o.n_seeds = cfg.seeds;
  o.seed = cfg.seed;
  o.resolution = cfg.resolution;
  o.force = cfg.force ? 1 : 0;
  return o;
}

std::string report_text(const gl_report* report) {
  size_t needed = 0;
  gl_report_text(report, nullptr, 0, &needed);
  std::string text(needed, '\0');
  gl_report_text(report, text.data(), text.size(), &needed);
  text.resize(needed ? needed - 1 : 0);
  return text;
}

int write_report_file(const Config& cfg, const std::string& command, const gl_report* report,
                      double wall_seconds) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  const std::string path = cfg.out + "/" + command + "_report.txt";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    return kExitSoftware;
  }
  out << "command: " << command << "\n";
  out << "version: " << gl_version() << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", wall_seconds);
  out << "wall_clock_s: " << buf << "\n";
  out << "--- config\n" << serialize_config(cfg) << "--- result\n";
  out << report_text(report);
  std::cout << report_text(report);
  return kExitOk;
}

int status_exit(gl_status st) {
  switch (st) {
    case GL_OK: return kExitOk;
    case GL_ERR_UNSTABLE_TARGET: return kExitUnstable;
    case GL_ERR_DIVERGENT_PARTITION: return kExitInconclusive;
    case GL_ERR_PARSE:
    case GL_ERR_INVALID_ARGUMENT:
    case GL_ERR_NOT_A_LINE_BUNDLE: return kExitUsage;
    default: return kExitSoftware;
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gibbslab: canonical point processes and quantized Ding functionals on the sphere"};
  app.set_version_flag("--version", std::string(gl_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<unsigned long long> seed_override;
  std::optional<long long> budget_override;
  std::optional<int> resolution_override;
  std::optional<std::string> out_override;
  bool force_flag = false;

  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed_override, "override the config seed");
  app.add_option("--budget", budget_override, "override the config budget");
  app.add_option("--resolution", resolution_override, "override the quadrature resolution");
  app.add_option("--out", out_override, "override the output directory");
  app.add_flag("--force", force_flag, "sample even against an instability witness");

  auto* cmd_stability = app.add_subcommand(
      "stability", "one-cluster klt probe; exit 0 = probe passed, 2 = unstable, 3 = inconclusive");
  auto* cmd_partition =
      app.add_subcommand("partition", "partition function estimate (MC + quadrature)");
  int partition_method = 1;
  cmd_partition->add_option("--method", partition_method,
                            "0 = tensor quadrature (N <= 3), 1 = importance MC");
  auto* cmd_sample = app.add_subcommand("sample", "MH sampling of the canonical measure");
  auto* cmd_ding = app.add_subcommand("ding", "minimize the quantized Ding functional");
  auto* cmd_flows = app.add_subcommand("flows", "flow and lift self-tests");
  std::string flows_suite = "all";
  int flows_trials = 100;
  cmd_flows->add_option("--test", flows_suite, "intertwine | lifts | nepsilon | hamiltonian | all");
  cmd_flows->add_option("--trials", flows_trials, "random trials per suite");
  auto* cmd_inequality =
      app.add_subcommand("inequality", "partition vs Ding-minimum inequality check");

  CLI11_PARSE(app, argc, argv);

  Config cfg;
  try {
    cfg = parse_config_file(config_path);
  } catch (const ParseFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (seed_override) cfg.seed = *seed_override;
  if (budget_override) cfg.budget = *budget_override;
  if (resolution_override) cfg.resolution = *resolution_override;
  if (out_override) cfg.out = *out_override;
  if (force_flag) cfg.force = true;

  const auto start = Clock::now();
  PairHandle pair;
  if (int rc = make_pair(cfg, pair); rc != kExitOk) return rc;
  const gl_run_options options = run_options(cfg);

  ReportHandle report;
  gl_status st = GL_OK;
  std::string command;

  if (*cmd_stability) {
    command = "stability";
    st = gl_stability_probe(pair.pair, cfg.k.num, cfg.k.den, cfg.gamma.num, cfg.gamma.den,
                            &options, &report.report);
  } else if (*cmd_partition) {
    command = "partition";
    st = gl_partition(pair.pair, cfg.k.num, cfg.k.den, cfg.gamma.num, cfg.gamma.den,
                      partition_method, &options, &report.report);
  } else if (*cmd_sample) {
    command = "sample";
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    const std::string csv = cfg.out + "/samples.csv";
    const std::string hist = cfg.out + "/histogram.txt";
    st = gl_sample(pair.pair, cfg.k.num, cfg.k.den, cfg.gamma.num, cfg.gamma.den, &options,
                   csv.c_str(), hist.c_str(), &report.report);
  } else if (*cmd_ding) {
    command = "ding";
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    const std::string trace = cfg.out + "/ding_trace.csv";
    st = gl_ding_minimize(pair.pair, cfg.k.num, cfg.k.den, cfg.gamma.num, cfg.gamma.den, &options,
                          trace.c_str(), &report.report);
  } else if (*cmd_flows) {
    command = "flows";
    st = gl_flows_selftest(flows_suite.c_str(), flows_trials, cfg.seed, &report.report);
  } else if (*cmd_inequality) {
    command = "inequality";
    st = gl_inequality(pair.pair, cfg.k.num, cfg.k.den, cfg.gamma.num, cfg.gamma.den, &options,
                       &report.report);
  }

  if (st != GL_OK && !report.report) {
    std::cerr << command << " failed: " << gl_last_error() << "\n";
    return status_exit(st);
  }
  if (int rc = write_report_file(cfg, command, report.report, seconds_since(start));
      rc != kExitOk)
    return rc;
  if (st != GL_OK) {
    std::cerr << command << ": " << gl_last_error() << "\n";
    return status_exit(st);
  }
  if (command == "stability") {
    const int verdict = gl_report_verdict(report.report);
    if (verdict == GL_VERDICT_UNSTABLE_WITNESS) return kExitUnstable;
    if (verdict == GL_VERDICT_INCONCLUSIVE) return kExitInconclusive;
  }
  return kExitOk;
}
