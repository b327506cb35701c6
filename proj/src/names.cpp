#include "qn/names.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace qn {

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& text) {
  throw std::invalid_argument("cannot parse " + what + ": '" + text + "'");
}

double to_double(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    bad(what, text);
  }
  if (pos != text.size()) bad(what, text);
  return v;
}

// Splits "k1=v1,k2=v2,..." where values may themselves contain commas
// (nested potential specs): a segment whose key is not in `keys` is glued
// back onto the previous value.
std::vector<std::pair<std::string, std::string>> split_kv(
    const std::string& text, const std::vector<std::string>& keys,
    const std::string& what) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string segment;
  while (std::getline(in, segment, ',')) {
    const std::size_t eq = segment.find('=');
    std::string key = eq == std::string::npos ? "" : segment.substr(0, eq);
    const bool known =
        std::find(keys.begin(), keys.end(), key) != keys.end();
    if (known) {
      out.emplace_back(key, segment.substr(eq + 1));
    } else if (!out.empty()) {
      out.back().second += "," + segment;
    } else {
      bad(what, text);
    }
  }
  if (out.empty()) bad(what, text);
  return out;
}

}  // namespace

Potential parse_potential(const std::string& text) {
  if (text == "neglog") return make_neglog();
  const std::size_t colon = text.find(':');
  const std::string head = text.substr(0, colon);
  if (colon == std::string::npos || colon + 1 >= text.size()) {
    bad("potential", text);
  }
  const std::string args = text.substr(colon + 1);
  if (head == "power") {
    const auto kv = split_kv(args, {"gamma"}, "potential");
    if (kv.size() != 1 || kv[0].first != "gamma") bad("potential", text);
    return make_power(to_double(kv[0].second, "gamma"));
  }
  if (head == "bounded") {
    const auto kv = split_kv(args, {"a", "b"}, "potential");
    double a = 0.0, b = 0.0;
    bool have_a = false, have_b = false;
    for (const auto& [k, v] : kv) {
      if (k == "a") {
        a = to_double(v, "a");
        have_a = true;
      } else {
        b = to_double(v, "b");
        have_b = true;
      }
    }
    if (!have_a || !have_b) bad("potential", text);
    return make_bounded(a, b);
  }
  bad("potential", text);
}

UpdateFamily parse_family(const std::string& text,
                          const std::optional<Potential>& pot) {
  const Potential v = pot ? *pot : make_neglog();
  if (text == "vbfgs-b") return UpdateFamily::vbfgs_b(v);
  if (text == "vdfp-b") return UpdateFamily::vdfp_b(v);
  if (text == "vbfgs-h") return UpdateFamily::vbfgs_h(v);
  if (text == "vdfp-h") return UpdateFamily::vdfp_h(v);
  if (text.rfind("broyden:", 0) == 0) {
    const auto kv =
        split_kv(text.substr(8), {"theta", "v1", "v2"}, "family");
    double theta = 0.5;
    std::optional<Potential> v1, v2;
    bool have_theta = false;
    for (const auto& [k, val] : kv) {
      if (k == "theta") {
        theta = to_double(val, "theta");
        have_theta = true;
      } else if (k == "v1") {
        v1 = parse_potential(val);
      } else {
        v2 = parse_potential(val);
      }
    }
    if (!have_theta || !v1 || !v2) bad("family", text);
    return UpdateFamily::broyden(theta, *v1, *v2);
  }
  bad("family", text);
}

ProblemKind parse_problem(const std::string& text) {
  if (text == "p1") return ProblemKind::P1;
  if (text == "p2") return ProblemKind::P2;
  bad("problem", text);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    out.push_back(to_double(item, "number list"));
  }
  if (out.empty()) bad("number list", text);
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_double_list(text)) {
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) bad("integer list", text);
    out.push_back(i);
  }
  return out;
}

}  // namespace qn
