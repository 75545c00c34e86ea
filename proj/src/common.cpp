#include "gibbslab/common.hpp"

#include <boost/integer/common_factor_rt.hpp>
#include <cctype>
#include <cstdlib>

namespace gibbslab {

namespace {

bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Rat parse_rational(const std::string& text) {
  std::string s = strip(text);
  if (s.empty()) fail(Errc::ParseError, "empty rational");
  std::size_t slash = s.find('/');
  if (slash != std::string::npos) {
    long long num = 0, den = 0;
    if (!parse_ll(strip(s.substr(0, slash)), num) || !parse_ll(strip(s.substr(slash + 1)), den))
      fail(Errc::ParseError, "bad rational '" + text + "'");
    if (den == 0) fail(Errc::ParseError, "zero denominator in '" + text + "'");
    return Rat(num, den);
  }
  std::size_t dot = s.find('.');
  if (dot != std::string::npos) {
    std::string head = s.substr(0, dot);
    std::string tail = s.substr(dot + 1);
    if (tail.size() > 15) fail(Errc::ParseError, "decimal too long in '" + text + "'");
    for (char c : tail)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail(Errc::ParseError, "bad decimal '" + text + "'");
    bool neg = !head.empty() && head[0] == '-';
    if (neg) head = head.substr(1);
    if (head.empty()) head = "0";
    long long ip = 0;
    if (!parse_ll(head, ip)) fail(Errc::ParseError, "bad decimal '" + text + "'");
    long long den = 1;
    for (std::size_t i = 0; i < tail.size(); ++i) den *= 10;
    long long fp = 0;
    if (!tail.empty() && !parse_ll(tail, fp)) fail(Errc::ParseError, "bad decimal '" + text + "'");
    Rat r = Rat(ip) + Rat(fp, den);
    return neg ? -r : r;
  }
  long long v = 0;
  if (!parse_ll(s, v)) fail(Errc::ParseError, "bad rational '" + text + "'");
  return Rat(v);
}

std::string rational_to_string(const Rat& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace gibbslab
