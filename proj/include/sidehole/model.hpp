#pragma once

// Domain types shared by every solver: tube geometry, side holes, model
// configuration, validation and unit conversions.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sidehole {

/// Acoustic end condition. An open end carries zero pressure (Dirichlet),
/// a closed end zero flux (Neumann).
enum class EndCondition { open, closed };

std::string to_string(EndCondition e);
EndCondition end_condition_from_string(const std::string& s);

/// Cross-section area profile g on the unit tube [0,1].
///
/// Three flavours: constant (g == value), sampled (piecewise linear through
/// strictly increasing abscissae covering [0,1]) and named closed forms:
///   "cone"        g(x) = (1 + p x)^2
///   "exponential" g(x) = exp(p x)
struct BoreProfile {
  enum class Kind { constant, sampled, named };

  Kind kind = Kind::constant;
  double value = 1.0;        // constant
  std::vector<double> x;     // sampled abscissae
  std::vector<double> g;     // sampled values
  std::string name;          // named
  double parameter = 0.0;    // named

  static BoreProfile constant_profile(double v = 1.0);
  static BoreProfile sampled_profile(std::vector<double> x, std::vector<double> g);
  static BoreProfile named_profile(std::string name, double parameter);

  bool is_constant() const { return kind == Kind::constant; }
  double operator()(double x) const;

  /// Points in (0,1) where g has a kink (sample abscissae); empty otherwise.
  std::vector<double> breakpoints() const;
};

struct TubeSpec {
  double length_L = 1.0;
  EndCondition left_end = EndCondition::open;
  EndCondition right_end = EndCondition::open;
  BoreProfile bore;
  double sound_speed_c = 343.0;
};

struct HoleSpec {
  double position_a = 0.5;
  double delta = 0.0;
  double open_fraction = 1.0;
  std::optional<double> alpha_override;
};

/// Square-hole capacity constant, the double-extrapolated finite-difference
/// value from the default hole-constant ladders (see hole_constant.hpp).
/// Regression-frozen; `sidehole alpha` recomputes it.
inline constexpr double kSquareHoleAlpha = 2.30846281882134;

struct ModelConfig {
  TubeSpec tube;
  std::vector<HoleSpec> holes;
  double alpha = kSquareHoleAlpha;
  std::optional<double> epsilon;

  /// Effective coupling alpha_i * delta_i * open_fraction_i of hole i.
  double coupling(std::size_t i) const;
};

struct Violation {
  std::string field;
  std::string constraint;
  std::string value;

  std::string message() const;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Every violated invariant of `config`, in field order. Empty when valid.
std::vector<Violation> check(const ModelConfig& config);

/// Returns `config` unchanged when valid, otherwise throws ValidationError
/// carrying the complete violation list.
ModelConfig validate(ModelConfig config);

/// Physical frequency c * mu / (2 pi L) of a tube-unit angular eigenfrequency.
double to_frequency_hz(double mu, const TubeSpec& tube);

/// Interval 1200 log2(f / f_ref) in cents.
double cents(double f, double f_ref);

// JSON mapping. Field names match the struct members; unknown keys throw.
void to_json(nlohmann::json& j, const BoreProfile& b);
void from_json(const nlohmann::json& j, BoreProfile& b);
void to_json(nlohmann::json& j, const TubeSpec& t);
void from_json(const nlohmann::json& j, TubeSpec& t);
void to_json(nlohmann::json& j, const HoleSpec& h);
void from_json(const nlohmann::json& j, HoleSpec& h);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

ModelConfig load_config(const std::string& path);

}  // namespace sidehole
