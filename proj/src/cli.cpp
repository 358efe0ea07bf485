#include "sidehole/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "sidehole/hole_constant.hpp"
#include "sidehole/model.hpp"
#include "sidehole/secular.hpp"
#include "sidehole/tube3d.hpp"

namespace sidehole {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunManifest::hash() const {
  const std::string text = json{{"subcommand", subcommand}, {"config", config}, {"solver", solver}, {"version", version}}.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void to_json(json& j, const RunManifest& m) {
  j = json{{"subcommand", m.subcommand}, {"config", m.config},       {"solver", m.solver},
           {"outputs", m.outputs},       {"cache_hit", m.cache_hit}, {"version", m.version},
           {"hash", m.hash()}};
}

fs::path alpha_cache_path() {
  if (const char* p = std::getenv("SIDEHOLE_CACHE"); p && *p) return fs::path(p);
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "sidehole" / "alpha.json";
  if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "sidehole" / "alpha.json";
  return fs::path(".sidehole-cache") / "alpha.json";
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<double> parse_fingering(const std::string& fingering) {
  std::vector<double> out;
  for (char c : fingering) {
    switch (c) {
      case 'o': out.push_back(1.0); break;
      case 'x': out.push_back(0.0); break;
      case 'h': out.push_back(0.5); break;
      default: throw std::invalid_argument(std::string("fingering characters must be o, x or h (got '") + c + "')");
    }
  }
  return out;
}

namespace {

// Errors mapped to exit codes by run_cli.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  bool json_stdout = false;
  std::uint64_t seed = 1;
  // model overrides (flags win over the config file)
  std::optional<double> alpha, position, delta, length, sound_speed;
  std::optional<std::string> left, right;
};

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ModelConfig resolve_config(const Common& c) {
  ModelConfig cfg;
  try {
    if (!c.config_path.empty()) cfg = load_config(c.config_path);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (c.alpha) cfg.alpha = *c.alpha;
  if (c.length) cfg.tube.length_L = *c.length;
  if (c.sound_speed) cfg.tube.sound_speed_c = *c.sound_speed;
  try {
    if (c.left) cfg.tube.left_end = end_condition_from_string(*c.left);
    if (c.right) cfg.tube.right_end = end_condition_from_string(*c.right);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if ((c.position || c.delta) && cfg.holes.empty()) cfg.holes.push_back(HoleSpec{});
  if (c.position) cfg.holes[0].position_a = *c.position;
  if (c.delta) cfg.holes[0].delta = *c.delta;
  return validate(cfg);
}

GeneralizedProblem sorted_problem(const ModelConfig& cfg) {
  GeneralizedProblem gp = GeneralizedProblem::from(cfg);
  std::sort(gp.holes.begin(), gp.holes.end(), [](const HolePoint& a, const HolePoint& b) { return a.a < b.a; });
  return gp;
}

void emit(const Common& c, RunManifest& m, const std::vector<std::pair<std::string, std::string>>& files) {
  const fs::path dir(c.out_dir);
  for (const auto& [name, content] : files) {
    write_atomic(dir / name, content);
    m.outputs.push_back((dir / name).string());
  }
  write_atomic(dir / (m.subcommand + ".manifest.json"), json(m).dump(2) + "\n");
}

std::string tagged_csv(const std::string& hash, const std::string& body, const std::string& extra = {}) {
  return "# manifest " + hash + "\n" + extra + body;
}

// ---------------------------------------------------------------------------

struct AlphaArgs {
  std::vector<double> ladder_R{4, 8, 16};
  std::vector<double> ladder_h{0.25, 0.125, 0.0625};
  int oracle_n = 16;
  double tol = 1e-10;
  bool no_cache = false;
};

int cmd_alpha(const Common& c, const AlphaArgs& a, std::ostream& out, std::ostream& err) {
  if (a.ladder_R.size() < 3 || a.ladder_h.size() < 3)
    throw UsageError("each ladder needs at least 3 entries (got " + std::to_string(a.ladder_R.size()) + " R, " +
                     std::to_string(a.ladder_h.size()) + " h)");
  if (a.oracle_n < 8) throw UsageError("--oracle-n must be at least 8");

  RunManifest m;
  m.subcommand = "alpha";
  m.config = {{"hole_shape", "square"}};
  m.solver = {{"ladder_R", a.ladder_R}, {"ladder_h", a.ladder_h}, {"tol", a.tol}, {"oracle_n", a.oracle_n}};
  const std::string key = "square:" + m.solver.dump();

  const fs::path cache = alpha_cache_path();
  json store = json::object();
  if (fs::exists(cache)) {
    try {
      std::ifstream f(cache);
      store = json::parse(f);
    } catch (const std::exception& e) {
      err << "warning: ignoring unreadable alpha cache " << cache << ": " << e.what() << "\n";
      store = json::object();
    }
  }
  if (!store.contains("entries")) store["entries"] = json::object();

  AlphaEstimate est;
  if (!a.no_cache && store["entries"].contains(key)) {
    est = store["entries"][key].get<AlphaEstimate>();
    m.cache_hit = true;
  } else {
    try {
      est = estimate_alpha(a.ladder_R, a.ladder_h, a.tol);
      est.oracle_alpha = capacitance_oracle(a.oracle_n);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    store["entries"][key] = est;
    write_atomic(cache, store.dump(2) + "\n");
  }

  json doc{{"manifest_hash", m.hash()}, {"estimate", est}};
  const double gap = std::abs(est.alpha - *est.oracle_alpha) / *est.oracle_alpha;
  doc["relative_gap_to_oracle"] = gap;
  emit(c, m, {{"alpha.json", doc.dump(2) + "\n"}});
  if (est.low_confidence) err << "warning: observed orders outside (0.5, 2.5); estimate flagged low-confidence\n";

  if (c.json_stdout) {
    out << doc.dump(2) << "\n";
  } else {
    out << "alpha        " << fmt12(est.alpha) << (m.cache_hit ? "  (cached)" : "") << "\n"
        << "oracle alpha " << fmt12(*est.oracle_alpha) << "\n"
        << "gap          " << fmt12(100 * gap) << " %\n"
        << "orders       R: " << fmt12(est.order_R) << "  h: " << fmt12(est.order_h) << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

std::string secular_curve_csv(double a, int count, double kappa_line, const std::string& hash) {
  constexpr double kPi = std::numbers::pi;
  constexpr int kPerPi = 400;
  constexpr double kGuard = 0.02;  // excluded half-width around each pole
  std::vector<double> poles;
  for (int k = 1; k * kPi / std::max(a, 1.0 - a) <= (count + 2) * kPi; ++k) {
    poles.push_back(k * kPi / a);
    poles.push_back(k * kPi / (1.0 - a));
  }
  std::string body = "mu,f_a\n";
  const int n = (count + 1) * kPerPi;
  for (int i = 1; i < n; ++i) {
    const double mu = i * kPi / kPerPi;
    const bool near_pole = std::any_of(poles.begin(), poles.end(), [&](double p) { return std::abs(mu - p) < kGuard; });
    if (near_pole) continue;
    body += fmt12(mu) + "," + fmt12(secular_quotient(mu, a)) + "\n";
  }
  char extra[96];
  std::snprintf(extra, sizeof extra, "# kappa_line %.17g\n", kappa_line);
  return tagged_csv(hash, body, extra);
}

int cmd_spectrum(const Common& c, int count, std::ostream& out) {
  if (count < 1) throw UsageError("--count must be at least 1");
  const ModelConfig cfg = resolve_config(c);

  const bool closed_form = cfg.tube.bore.is_constant() && cfg.holes.size() <= 1 &&
                           cfg.tube.left_end == EndCondition::open && cfg.tube.right_end == EndCondition::open;
  RunManifest m;
  m.subcommand = "spectrum";
  m.config = cfg;
  m.solver = {{"count", count}, {"method", closed_form ? "closed_form" : "shooting"}};
  const std::string hash = m.hash();

  Spectrum1D s;
  double kappa = 0.0, a = 0.5;
  if (!cfg.holes.empty()) {
    kappa = cfg.coupling(0);
    a = cfg.holes[0].position_a;
  }
  if (closed_form) {
    s = find_roots(SecularProblem{a, kappa, EndCondition::open, EndCondition::open}, count);
  } else {
    s = shooting_spectrum(sorted_problem(cfg), count);
  }

  std::vector<double> hz;
  for (double mu : s.mu) hz.push_back(to_frequency_hz(mu, cfg.tube));
  json doc{{"manifest_hash", hash}, {"spectrum", s}, {"frequency_hz", hz}};
  std::vector<std::pair<std::string, std::string>> files{{"spectrum.csv", tagged_csv(hash, spectrum_csv(s, cfg.tube))}};
  if (cfg.holes.size() == 1 && cfg.tube.bore.is_constant()) {
    doc["kappa_line"] = kappa;
    doc["secular_curve"] = "secular_curve.csv";
    files.emplace_back("secular_curve.csv", secular_curve_csv(a, count, kappa, hash));
  } else {
    doc["kappa_line"] = nullptr;
    doc["secular_curve"] = nullptr;
  }
  files.emplace_back("spectrum.json", doc.dump(2) + "\n");
  emit(c, m, files);

  if (c.json_stdout) {
    out << doc.dump(2) << "\n";
  } else {
    out << "k  mu                 freq_hz\n";
    for (std::size_t k = 0; k < s.mu.size(); ++k)
      out << k + 1 << "  " << fmt12(s.mu[k]) << "  " << fmt12(hz[k]) << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_fingering(const Common& c, const std::string& fingering, int count, std::ostream& out) {
  if (count < 1) throw UsageError("--count must be at least 1");
  ModelConfig cfg = resolve_config(c);
  std::vector<double> open;
  try {
    open = parse_fingering(fingering);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (open.size() != cfg.holes.size())
    throw UsageError("fingering has " + std::to_string(open.size()) + " characters but the configuration has " +
                     std::to_string(cfg.holes.size()) + " holes");

  ModelConfig closed = cfg;
  for (std::size_t i = 0; i < cfg.holes.size(); ++i) {
    cfg.holes[i].open_fraction = open[i];
    closed.holes[i].open_fraction = 0.0;
  }
  RunManifest m;
  m.subcommand = "fingering";
  m.config = cfg;
  m.solver = {{"count", count}, {"fingering", fingering}, {"method", "shooting"}};
  const std::string hash = m.hash();

  const Spectrum1D s = shooting_spectrum(sorted_problem(cfg), count);
  const Spectrum1D ref = shooting_spectrum(sorted_problem(closed), 1);
  const double f_ref = to_frequency_hz(ref.mu.front(), cfg.tube);

  std::string csv = "k,mu,freq_hz,cents_vs_closed\n";
  json rows = json::array();
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    const double f = to_frequency_hz(s.mu[k], cfg.tube);
    const double ct = cents(f, f_ref);
    csv += std::to_string(k + 1) + "," + fmt12(s.mu[k]) + "," + fmt12(f) + "," + fmt12(ct) + "\n";
    rows.push_back({{"k", k + 1}, {"mu", s.mu[k]}, {"freq_hz", f}, {"cents_vs_closed", ct}});
  }
  const json doc{{"manifest_hash", hash},
                 {"fingering", fingering},
                 {"open_fractions", open},
                 {"closed_fundamental_hz", f_ref},
                 {"notes", rows}};
  emit(c, m, {{"fingering.csv", tagged_csv(hash, csv)}, {"fingering.json", doc.dump(2) + "\n"}});

  if (c.json_stdout) {
    out << doc.dump(2) << "\n";
  } else {
    out << "fingering " << fingering << " (all-closed fundamental " << fmt12(f_ref) << " Hz)\n";
    out << "k  freq_hz  cents\n";
    for (const auto& r : rows)
      out << r["k"].get<int>() << "  " << fmt12(r["freq_hz"]) << "  " << fmt12(r["cents_vs_closed"]) << "\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

struct Verify3DArgs {
  std::vector<double> epsilons{0.3, 0.2, 0.15};
  int modes = 3;
  double slack = 1.1;
  GridControls grid;
  std::size_t node_budget = 500000;
  bool compare_no_hole = false;
};

int cmd_verify3d(const Common& c, const Verify3DArgs& v, std::ostream& out, std::ostream& err) {
  if (v.modes < 1) throw UsageError("--modes must be at least 1");
  const ModelConfig cfg = resolve_config(c);
  if (!cfg.tube.bore.is_constant()) throw UsageError("verify3d needs a constant bore");
  if (cfg.holes.size() > 1) throw UsageError("verify3d supports at most one hole");

  Tube3DConfig t;
  t.mouth = cfg.tube.left_end == EndCondition::open;
  t.right_end_dirichlet = cfg.tube.right_end == EndCondition::open;
  t.hole.delta = 0.0;
  if (!cfg.holes.empty()) t.hole = cfg.holes[0];
  t.alpha = cfg.alpha;
  t.modes = v.modes;
  t.grid = v.grid;
  t.node_budget = v.node_budget;
  t.epsilon = v.epsilons.empty() ? t.epsilon : v.epsilons.front();

  StudyOptions opt;
  opt.eig.seed = c.seed;
  opt.slack = v.slack;
  opt.compare_without_hole = v.compare_no_hole;

  RunManifest m;
  m.subcommand = "verify3d";
  m.config = cfg;
  m.solver = {{"epsilons", v.epsilons}, {"modes", v.modes}, {"slack", v.slack}, {"seed", c.seed}, {"tube", t}};
  const std::string hash = m.hash();

  const auto write_report = [&](const SweepReport& r) {
    json doc = r;
    doc["manifest_hash"] = hash;
    emit(c, m, {{"sweep.csv", tagged_csv(hash, sweep_csv(r))}, {"sweep.json", doc.dump(2) + "\n"}});
    return doc;
  };

  SweepReport rep;
  try {
    rep = convergence_study(t, v.epsilons, v.modes, opt);
  } catch (const StudyError& e) {
    write_report(e.partial);
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const json doc = write_report(rep);
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";

  if (c.json_stdout) {
    out << doc.dump(2) << "\n";
  } else {
    out << "epsilon  nodes  lambda1_3d  lambda1_1d  rel_dev\n";
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
      out << fmt12(rep.rows[i].epsilon) << "  " << rep.rows[i].nodes << "  " << fmt12(rep.rows[i].lambda_3d[0]) << "  "
          << fmt12(rep.lambda_1d[0]) << "  " << fmt12(rep.deviation(i, 0)) << "\n";
  }
  if (rep.trend_checked && !rep.trend_ok)
    throw AssertionFailure("k=1 deviation grew by more than the slack factor along the epsilon ladder");
  if (!rep.monotone_ok()) throw AssertionFailure("an eigenvalue decreased when the hole patch was added");
  return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_oracle1d(const Common& c, int n, int count, std::ostream& out) {
  if (count < 1) throw UsageError("--count must be at least 1");
  const ModelConfig cfg = resolve_config(c);
  RunManifest m;
  m.subcommand = "oracle1d";
  m.config = cfg;
  m.solver = {{"n", n}, {"count", count}};
  const std::string hash = m.hash();
  Spectrum1D s;
  try {
    s = fd_oracle(sorted_problem(cfg), n, count);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const json doc{{"manifest_hash", hash}, {"spectrum", s}};
  emit(c, m, {{"oracle1d.csv", tagged_csv(hash, spectrum_csv(s, cfg.tube))}, {"oracle1d.json", doc.dump(2) + "\n"}});
  if (c.json_stdout) {
    out << doc.dump(2) << "\n";
  } else {
    out << "k  lambda\n";
    const auto lam = s.lambda();
    for (std::size_t k = 0; k < lam.size(); ++k) out << k + 1 << "  " << fmt12(lam[k]) << "\n";
  }
  return exit_ok;
}

void add_common(CLI::App* sub, Common& c, bool model_flags) {
  sub->add_option("--config", c.config_path, "model configuration (JSON)");
  sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  sub->add_flag("--json", c.json_stdout, "print the result document as JSON");
  sub->add_option("--seed", c.seed, "seed for randomized start vectors")->capture_default_str();
  if (!model_flags) return;
  sub->add_option("--alpha", c.alpha, "hole constant override");
  sub->add_option("--position", c.position, "position of the first hole in (0,1)");
  sub->add_option("--delta", c.delta, "size parameter of the first hole");
  sub->add_option("--length", c.length, "tube length L");
  sub->add_option("--sound-speed", c.sound_speed, "speed of sound c");
  sub->add_option("--left", c.left, "left end: open|closed");
  sub->add_option("--right", c.right, "right end: open|closed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Side-hole tube spectra: 1-D model, hole constant and 3-D verification", "sidehole"};
  app.set_version_flag("--version", std::string("sidehole ") + kVersion);
  app.require_subcommand(1);

  Common common;
  AlphaArgs alpha;
  int count = 5;
  std::string fingering;
  Verify3DArgs v3;
  int oracle_n = 2000;

  auto* s_alpha = app.add_subcommand("alpha", "compute the square-hole constant");
  add_common(s_alpha, common, false);
  s_alpha->add_option("--ladder-R", alpha.ladder_R, "box radii (>= 3, constant ratio)")->capture_default_str();
  s_alpha->add_option("--ladder-h", alpha.ladder_h, "grid spacings (>= 3, constant ratio)")->capture_default_str();
  s_alpha->add_option("--oracle-n", alpha.oracle_n, "subareas per side for the capacitance oracle")->capture_default_str();
  s_alpha->add_option("--tol", alpha.tol, "CG relative residual")->capture_default_str();
  s_alpha->add_flag("--no-cache", alpha.no_cache, "recompute even if cached");

  auto* s_spec = app.add_subcommand("spectrum", "eigenvalues of the 1-D model and the secular curve");
  add_common(s_spec, common, true);
  s_spec->add_option("--count", count, "number of eigenvalues")->capture_default_str();

  auto* s_fing = app.add_subcommand("fingering", "note table for a fingering");
  add_common(s_fing, common, true);
  s_fing->add_option("fingering", fingering, "one of o/x/h per hole")->required();
  s_fing->add_option("--count", count, "fundamental plus overtones")->capture_default_str();

  auto* s_v3 = app.add_subcommand("verify3d", "3-D thin-tube convergence study");
  add_common(s_v3, common, true);
  s_v3->add_option("--epsilons", v3.epsilons, "strictly decreasing epsilon ladder")->capture_default_str();
  s_v3->add_option("--modes", v3.modes, "eigenvalues per epsilon")->capture_default_str();
  s_v3->add_option("--slack", v3.slack, "allowed growth factor of the k=1 deviation")->capture_default_str();
  s_v3->add_option("--hole-cells", v3.grid.hole_cells, "cells across the hole side (>= 4)")->capture_default_str();
  s_v3->add_option("--cells-width", v3.grid.cells_width, "cells across the tube width")->capture_default_str();
  s_v3->add_option("--mouth-cells", v3.grid.mouth_cells, "cells along the mouth patch")->capture_default_str();
  s_v3->add_option("--refine", v3.grid.refine, "multiplies every resolution control")->capture_default_str();
  s_v3->add_option("--node-budget", v3.node_budget, "largest allowed node count per grid")->capture_default_str();
  s_v3->add_flag("--compare-no-hole", v3.compare_no_hole, "also solve without the hole patch on each grid");

  auto* s_or = app.add_subcommand("oracle1d", "finite-difference oracle for the 1-D model");
  add_common(s_or, common, true);
  s_or->add_option("--n", oracle_n, "grid intervals (Richardson uses n and 2n)")->capture_default_str();
  s_or->add_option("--count", count, "number of eigenvalues")->capture_default_str();

  std::vector<std::string> argv_store{"sidehole"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_usage;
  }

  try {
    if (*s_alpha) return cmd_alpha(common, alpha, out, err);
    if (*s_spec) return cmd_spectrum(common, count, out);
    if (*s_fing) return cmd_fingering(common, fingering, count, out);
    if (*s_v3) return cmd_verify3d(common, v3, out, err);
    if (*s_or) return cmd_oracle1d(common, oracle_n, count, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const AssertionFailure& e) {
    err << "assertion failed: " << e.what() << "\n";
    return exit_assertion;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return exit_solver;
  } catch (const BracketError& e) {
    err << "solver failure: " << e.what() << "\n";
    return exit_solver;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return exit_solver;
  }
  return exit_usage;
}

}  // namespace sidehole
