#include "sidehole/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace sidehole {

using nlohmann::json;

std::string to_string(EndCondition e) { return e == EndCondition::open ? "open" : "closed"; }

EndCondition end_condition_from_string(const std::string& s) {
  if (s == "open") return EndCondition::open;
  if (s == "closed") return EndCondition::closed;
  throw std::invalid_argument("end condition must be \"open\" or \"closed\", got \"" + s + "\"");
}

BoreProfile BoreProfile::constant_profile(double v) {
  BoreProfile b;
  b.kind = Kind::constant;
  b.value = v;
  return b;
}

BoreProfile BoreProfile::sampled_profile(std::vector<double> x, std::vector<double> g) {
  BoreProfile b;
  b.kind = Kind::sampled;
  b.x = std::move(x);
  b.g = std::move(g);
  return b;
}

BoreProfile BoreProfile::named_profile(std::string name, double parameter) {
  BoreProfile b;
  b.kind = Kind::named;
  b.name = std::move(name);
  b.parameter = parameter;
  return b;
}

double BoreProfile::operator()(double t) const {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::sampled: {
      if (t <= x.front()) return g.front();
      if (t >= x.back()) return g.back();
      const auto it = std::upper_bound(x.begin(), x.end(), t);
      const auto i = static_cast<std::size_t>(it - x.begin()) - 1;
      const double s = (t - x[i]) / (x[i + 1] - x[i]);
      return (1.0 - s) * g[i] + s * g[i + 1];
    }
    case Kind::named:
      if (name == "cone") return (1.0 + parameter * t) * (1.0 + parameter * t);
      if (name == "exponential") return std::exp(parameter * t);
      throw std::invalid_argument("unknown bore profile \"" + name + "\"");
  }
  return value;
}

std::vector<double> BoreProfile::breakpoints() const {
  std::vector<double> out;
  if (kind != Kind::sampled) return out;
  for (double t : x)
    if (t > 0.0 && t < 1.0) out.push_back(t);
  return out;
}

double ModelConfig::coupling(std::size_t i) const {
  const HoleSpec& h = holes.at(i);
  return h.alpha_override.value_or(alpha) * h.delta * h.open_fraction;
}

std::string Violation::message() const {
  return field + " " + constraint + " (got " + value + ")";
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join_messages(const std::vector<Violation>& v) {
  std::string out = "invalid configuration:";
  for (const auto& e : v) out += "\n  " + e.message();
  return out;
}

void check_bore(const BoreProfile& b, std::vector<Violation>& out) {
  using K = BoreProfile::Kind;
  switch (b.kind) {
    case K::constant:
      if (!(b.value > 0.0)) out.push_back({"tube.bore.value", "must be positive", fmt(b.value)});
      break;
    case K::sampled: {
      if (b.x.size() != b.g.size())
        out.push_back({"tube.bore", "sample arrays x and g must have equal length",
                       std::to_string(b.x.size()) + " vs " + std::to_string(b.g.size())});
      if (b.x.size() < 2)
        out.push_back({"tube.bore.x", "must hold at least 2 samples", std::to_string(b.x.size())});
      if (!b.x.empty() && (b.x.front() != 0.0 || b.x.back() != 1.0))
        out.push_back({"tube.bore.x", "must cover [0,1] exactly",
                       "[" + fmt(b.x.front()) + "," + fmt(b.x.back()) + "]"});
      for (std::size_t i = 1; i < b.x.size(); ++i)
        if (!(b.x[i] > b.x[i - 1])) {
          out.push_back({"tube.bore.x", "must be strictly increasing", "index " + std::to_string(i)});
          break;
        }
      for (std::size_t i = 0; i < b.g.size(); ++i)
        if (!(b.g[i] > 0.0)) {
          out.push_back({"tube.bore.g[" + std::to_string(i) + "]", "must be positive", fmt(b.g[i])});
        }
      break;
    }
    case K::named:
      if (b.name != "cone" && b.name != "exponential")
        out.push_back({"tube.bore.name", "must be one of cone, exponential", b.name});
      else if (b.name == "cone" && !(b.parameter > -1.0))
        out.push_back({"tube.bore.parameter", "must exceed -1 for a cone (positive area)", fmt(b.parameter)});
      break;
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> v)
    : std::runtime_error(join_messages(v)), violations_(std::move(v)) {}

std::vector<Violation> check(const ModelConfig& c) {
  std::vector<Violation> out;
  if (!(c.tube.length_L > 0.0)) out.push_back({"tube.length_L", "must be positive", fmt(c.tube.length_L)});
  if (!(c.tube.sound_speed_c > 0.0))
    out.push_back({"tube.sound_speed_c", "must be positive", fmt(c.tube.sound_speed_c)});
  check_bore(c.tube.bore, out);
  if (!(c.alpha > 0.0)) out.push_back({"alpha", "must be positive", fmt(c.alpha)});

  for (std::size_t i = 0; i < c.holes.size(); ++i) {
    const HoleSpec& h = c.holes[i];
    const std::string p = "holes[" + std::to_string(i) + "].";
    if (!(h.position_a > 0.0 && h.position_a < 1.0))
      out.push_back({p + "position_a", "must lie in (0,1)", fmt(h.position_a)});
    if (!(h.delta >= 0.0)) out.push_back({p + "delta", "must be nonnegative", fmt(h.delta)});
    if (!(h.open_fraction >= 0.0 && h.open_fraction <= 1.0))
      out.push_back({p + "open_fraction", "must lie in [0,1]", fmt(h.open_fraction)});
    if (h.alpha_override && !(*h.alpha_override > 0.0))
      out.push_back({p + "alpha_override", "must be positive", fmt(*h.alpha_override)});
    if (i > 0) {
      const double prev = c.holes[i - 1].position_a;
      if (h.position_a == prev)
        out.push_back({p + "position_a", "hole positions must be distinct", fmt(h.position_a)});
      else if (h.position_a < prev)
        out.push_back({p + "position_a", "hole positions must be strictly increasing",
                       fmt(prev) + " then " + fmt(h.position_a)});
    }
  }

  if (c.epsilon) {
    const double eps = *c.epsilon;
    if (!(eps > 0.0)) out.push_back({"epsilon", "must be positive", fmt(eps)});
    for (std::size_t i = 0; i < c.holes.size() && eps > 0.0; ++i) {
      const HoleSpec& h = c.holes[i];
      const std::string p = "holes[" + std::to_string(i) + "]";
      const double margin = std::min(h.position_a, 1.0 - h.position_a);
      if (!(eps < margin))
        out.push_back({"epsilon", "must be below min(position_a, 1-position_a) of " + p, fmt(eps)});
      if (!(h.delta * eps * eps < eps))
        out.push_back({p + ".delta", "hole side delta*epsilon^2 must be smaller than epsilon",
                       fmt(h.delta * eps * eps)});
    }
  }
  return out;
}

ModelConfig validate(ModelConfig config) {
  auto v = check(config);
  if (!v.empty()) throw ValidationError(std::move(v));
  return config;
}

double to_frequency_hz(double mu, const TubeSpec& tube) {
  if (!(mu > 0.0)) throw std::invalid_argument("to_frequency_hz: mu must be positive");
  return tube.sound_speed_c * mu / (2.0 * std::numbers::pi * tube.length_L);
}

double cents(double f, double f_ref) {
  if (!(f > 0.0) || !(f_ref > 0.0)) throw std::invalid_argument("cents: frequencies must be positive");
  return 1200.0 * std::log2(f / f_ref);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items())
    if (!ok.contains(k)) throw std::invalid_argument(std::string(where) + ": unknown key \"" + k + "\"");
}

}  // namespace

void to_json(json& j, const BoreProfile& b) {
  switch (b.kind) {
    case BoreProfile::Kind::constant:
      j = json{{"kind", "constant"}, {"value", b.value}};
      break;
    case BoreProfile::Kind::sampled:
      j = json{{"kind", "sampled"}, {"x", b.x}, {"g", b.g}};
      break;
    case BoreProfile::Kind::named:
      j = json{{"kind", "named"}, {"name", b.name}, {"parameter", b.parameter}};
      break;
  }
}

void from_json(const json& j, BoreProfile& b) {
  reject_unknown(j, {"kind", "value", "x", "g", "name", "parameter"}, "bore");
  const std::string kind = j.value("kind", std::string("constant"));
  if (kind == "constant") {
    b = BoreProfile::constant_profile(j.value("value", 1.0));
  } else if (kind == "sampled") {
    b = BoreProfile::sampled_profile(j.at("x").get<std::vector<double>>(), j.at("g").get<std::vector<double>>());
  } else if (kind == "named") {
    b = BoreProfile::named_profile(j.at("name").get<std::string>(), j.value("parameter", 0.0));
  } else {
    throw std::invalid_argument("bore: unknown kind \"" + kind + "\"");
  }
}

void to_json(json& j, const TubeSpec& t) {
  j = json{{"length_L", t.length_L},
           {"left_end", to_string(t.left_end)},
           {"right_end", to_string(t.right_end)},
           {"bore", t.bore},
           {"sound_speed_c", t.sound_speed_c}};
}

void from_json(const json& j, TubeSpec& t) {
  reject_unknown(j, {"length_L", "left_end", "right_end", "bore", "sound_speed_c"}, "tube");
  t = TubeSpec{};
  t.length_L = j.value("length_L", 1.0);
  if (j.contains("left_end")) t.left_end = end_condition_from_string(j.at("left_end").get<std::string>());
  if (j.contains("right_end")) t.right_end = end_condition_from_string(j.at("right_end").get<std::string>());
  if (j.contains("bore")) t.bore = j.at("bore").get<BoreProfile>();
  t.sound_speed_c = j.value("sound_speed_c", 343.0);
}

void to_json(json& j, const HoleSpec& h) {
  j = json{{"position_a", h.position_a}, {"delta", h.delta}, {"open_fraction", h.open_fraction}};
  if (h.alpha_override) j["alpha_override"] = *h.alpha_override;
}

void from_json(const json& j, HoleSpec& h) {
  reject_unknown(j, {"position_a", "delta", "open_fraction", "alpha_override"}, "hole");
  h = HoleSpec{};
  h.position_a = j.at("position_a").get<double>();
  h.delta = j.value("delta", 0.0);
  h.open_fraction = j.value("open_fraction", 1.0);
  if (j.contains("alpha_override") && !j.at("alpha_override").is_null())
    h.alpha_override = j.at("alpha_override").get<double>();
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"tube", c.tube}, {"holes", c.holes}, {"alpha", c.alpha}};
  if (c.epsilon) j["epsilon"] = *c.epsilon;
}

void from_json(const json& j, ModelConfig& c) {
  reject_unknown(j, {"tube", "holes", "alpha", "epsilon"}, "config");
  c = ModelConfig{};
  if (j.contains("tube")) c.tube = j.at("tube").get<TubeSpec>();
  if (j.contains("holes")) c.holes = j.at("holes").get<std::vector<HoleSpec>>();
  c.alpha = j.value("alpha", kSquareHoleAlpha);
  if (j.contains("epsilon") && !j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  return json::parse(in).get<ModelConfig>();
}

}  // namespace sidehole
