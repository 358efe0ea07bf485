#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sidehole/model.hpp"

using namespace sidehole;
using nlohmann::json;

namespace {

ModelConfig reference_config() {
  ModelConfig c;
  c.holes = {{0.7, 5.0, 1.0, std::nullopt}};
  return c;
}

bool mentions(const std::vector<Violation>& v, const std::string& text) {
  for (const auto& e : v)
    if (e.message().find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate accepts the reference configuration") {
  const ModelConfig c = reference_config();
  CHECK(check(c).empty());
  const ModelConfig v = validate(c);
  CHECK(v.holes.at(0).position_a == 0.7);
  // idempotent
  CHECK(json(validate(v)) == json(v));
}

TEST_CASE("validate reports every violation") {
  ModelConfig c = reference_config();
  c.holes[0].position_a = 0.0;
  auto v = check(c);
  REQUIRE(v.size() == 1);
  CHECK(mentions(v, "position_a must lie in (0,1)"));

  c = reference_config();
  c.holes = {{0.3, 1.0, 1.0, std::nullopt}, {0.3, 1.0, 1.0, std::nullopt}};
  CHECK(mentions(check(c), "hole positions must be distinct"));

  c = reference_config();
  c.tube.length_L = -1.0;
  c.tube.sound_speed_c = 0.0;
  c.alpha = 0.0;
  c.holes[0].delta = -1.0;
  c.holes[0].open_fraction = 2.0;
  v = check(c);
  CHECK(v.size() == 5);
  CHECK_THROWS_AS(validate(c), ValidationError);
  try {
    validate(c);
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() == 5);
    CHECK(std::string(e.what()).find("open_fraction") != std::string::npos);
  }
}

TEST_CASE("epsilon constraints") {
  ModelConfig c = reference_config();
  c.epsilon = 0.15;
  CHECK(check(c).empty());
  c.epsilon = 0.2;  // delta eps^2 = eps exactly
  CHECK(mentions(check(c), "smaller than epsilon"));
  c.epsilon = 0.35;  // wider than 1 - a
  CHECK(mentions(check(c), "epsilon must be below"));
  c.epsilon = 0.1;
  c.holes[0].delta = 20.0;  // delta eps^2 = 0.2 > eps
  CHECK(mentions(check(c), "smaller than epsilon"));
}

TEST_CASE("bore validation") {
  ModelConfig c;
  c.tube.bore = BoreProfile::sampled_profile({0.0, 0.5}, {1.0, 2.0});
  CHECK(mentions(check(c), "cover [0,1]"));
  c.tube.bore = BoreProfile::sampled_profile({0.0, 0.6, 0.5, 1.0}, {1.0, 1.0, 1.0, 1.0});
  CHECK(mentions(check(c), "strictly increasing"));
  c.tube.bore = BoreProfile::sampled_profile({0.0, 1.0}, {1.0, -1.0});
  CHECK(mentions(check(c), "must be positive"));
  c.tube.bore = BoreProfile::sampled_profile({0.0, 1.0}, {1.0, 3.0});
  CHECK(check(c).empty());
  CHECK(c.tube.bore(0.5) == doctest::Approx(2.0));
}

TEST_CASE("to_frequency_hz") {
  TubeSpec t;
  t.length_L = 1.0;
  t.sound_speed_c = 2.0;
  CHECK(to_frequency_hz(std::numbers::pi, t) == doctest::Approx(1.0).epsilon(1e-15));
  t.sound_speed_c = 2.0 * std::numbers::pi;
  CHECK(to_frequency_hz(std::numbers::pi, t) == doctest::Approx(std::numbers::pi).epsilon(1e-15));

  t.length_L = 0.33;
  t.sound_speed_c = 343.0;
  // 343 pi / (2 pi 0.33), evaluated independently in extended precision
  CHECK(to_frequency_hz(std::numbers::pi, t) == doctest::Approx(519.696969696969697).epsilon(1e-14));

  t.length_L = 1.0;
  CHECK(to_frequency_hz(2.0 * std::numbers::pi, t) == doctest::Approx(2.0 * to_frequency_hz(std::numbers::pi, t)));
  CHECK_THROWS(to_frequency_hz(0.0, t));
}

TEST_CASE("cents") {
  CHECK(cents(440.0, 440.0) == 0.0);
  CHECK(cents(880.0, 440.0) == doctest::Approx(1200.0));
  CHECK(cents(3.0, 1.0) == doctest::Approx(1901.95500086538742).epsilon(1e-14));
  CHECK_THROWS(cents(-1.0, 1.0));
}

TEST_CASE("frequency and cents properties") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  TubeSpec t;
  for (int i = 0; i < 200; ++i) {
    const double f = pos(rng), g = pos(rng);
    CHECK(cents(f, g) == doctest::Approx(-cents(g, f)));
    const double m1 = pos(rng), m2 = m1 * 1.001;
    CHECK(to_frequency_hz(m2, t) > to_frequency_hz(m1, t));
    TubeSpec longer = t;
    longer.length_L = t.length_L * 1.01;
    CHECK(to_frequency_hz(m1, longer) < to_frequency_hz(m1, t));
  }
}

TEST_CASE("config JSON round trip and unknown keys") {
  ModelConfig c = reference_config();
  c.tube.left_end = EndCondition::closed;
  c.tube.bore = BoreProfile::named_profile("cone", 0.5);
  c.holes[0].alpha_override = 3.0;
  c.epsilon = 0.1;
  const json j = c;
  const ModelConfig back = j.get<ModelConfig>();
  CHECK(json(back) == j);
  CHECK(back.tube.left_end == EndCondition::closed);
  CHECK(back.coupling(0) == doctest::Approx(15.0));

  json bad = j;
  bad["colour"] = "red";
  CHECK_THROWS_WITH(bad.get<ModelConfig>(), doctest::Contains("unknown key \"colour\""));
  bad = j;
  bad["holes"][0]["diameter"] = 1.0;
  CHECK_THROWS(bad.get<ModelConfig>());
}

TEST_CASE("coupling uses open fraction and alpha override") {
  ModelConfig c;
  c.alpha = 2.0;
  c.holes = {{0.3, 1.5, 0.5, std::nullopt}, {0.6, 1.0, 1.0, 4.0}};
  CHECK(c.coupling(0) == doctest::Approx(1.5));
  CHECK(c.coupling(1) == doctest::Approx(4.0));
}
