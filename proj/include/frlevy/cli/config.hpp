#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/levy.hpp"
#include "frlevy/spde.hpp"

namespace frlevy::cli {

// Parameter/config failure: exit code 2 territory.  The message lists every
// offending key, not only the first.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Command {
  SimulateField,
  SolvePoisson,
  SolveHeat,
  SolveQuasilinear,
  Validate
};

inline std::string command_name(Command c) {
  switch (c) {
    case Command::SimulateField: return "simulate-field";
    case Command::SolvePoisson: return "solve-poisson";
    case Command::SolveHeat: return "solve-heat";
    case Command::SolveQuasilinear: return "solve-quasilinear";
    case Command::Validate: return "validate";
  }
  return "?";
}

inline std::optional<Command> command_from_name(const std::string& s) {
  for (Command c : {Command::SimulateField, Command::SolvePoisson,
                    Command::SolveHeat, Command::SolveQuasilinear,
                    Command::Validate})
    if (command_name(c) == s) return c;
  return std::nullopt;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

}  // namespace detail

// Flat "key = value" document with '#' comments.  Typed access collects
// diagnostics instead of throwing one key at a time.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text) {
    KeyValues kv;
    kv.raw_text_ = text;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        kv.errors_.push_back("line " + std::to_string(lineno) +
                             ": expected key = value");
        continue;
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string val = detail::trim(line.substr(eq + 1));
      if (key.empty() || val.empty()) {
        kv.errors_.push_back("line " + std::to_string(lineno) +
                             ": empty key or value");
        continue;
      }
      if (kv.kv_.count(key))
        kv.errors_.push_back("duplicate key '" + key + "'");
      kv.kv_[key] = val;
    }
    return kv;
  }

  const std::string& raw_text() const { return raw_text_; }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  double take_real(const std::string& key, double fallback) {
    auto v = take(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const double x = std::stod(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("");
      return x;
    } catch (...) {
      errors_.push_back("key '" + key + "': not a real number: " + *v);
      return fallback;
    }
  }
  std::int64_t take_int(const std::string& key, std::int64_t fallback) {
    auto v = take(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument("");
      return x;
    } catch (...) {
      errors_.push_back("key '" + key + "': not an integer: " + *v);
      return fallback;
    }
  }
  bool take_bool(const std::string& key, bool fallback) {
    auto v = take(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "off") return false;
    errors_.push_back("key '" + key + "': not a boolean: " + *v);
    return fallback;
  }
  std::vector<double> take_reals(const std::string& key,
                                 std::vector<double> fallback) {
    auto v = take(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& piece : detail::split(*v, ',')) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(piece, &pos));
        if (pos != piece.size()) throw std::invalid_argument("");
      } catch (...) {
        errors_.push_back("key '" + key + "': not a real list: " + *v);
        return fallback;
      }
    }
    if (out.empty()) {
      errors_.push_back("key '" + key + "': empty list");
      return fallback;
    }
    return out;
  }
  std::vector<int> take_ints(const std::string& key, std::vector<int> fallback) {
    auto v = take(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const auto& piece : detail::split(*v, ',')) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stoi(piece, &pos));
        if (pos != piece.size()) throw std::invalid_argument("");
      } catch (...) {
        errors_.push_back("key '" + key + "': not an integer list: " + *v);
        return fallback;
      }
    }
    if (out.empty()) {
      errors_.push_back("key '" + key + "': empty list");
      return fallback;
    }
    return out;
  }

  void add_error(std::string msg) { errors_.push_back(std::move(msg)); }

  // Every key that was never consumed is unknown.
  void finish() {
    for (const auto& [key, value] : kv_)
      if (!consumed_.count(key)) errors_.push_back("unknown key '" + key + "'");
    if (!errors_.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& e : errors_) msg += "\n  - " + e;
      throw ConfigError(msg);
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
  std::vector<std::string> errors_;
  std::string raw_text_;
};

struct RunConfig {
  Command command = Command::Validate;
  std::optional<LevyModel> model;
  double beta0 = 0.25;
  std::vector<double> beta{0.3};
  // field / source box
  std::vector<std::vector<double>> eval_points;
  double past = 8.0;
  double tail_tol = 0.25;
  int source_cells = 16;
  // domain
  std::vector<double> domain_lower{0.0}, domain_upper{1.0};
  std::vector<int> domain_cells{512};
  double horizon = 1.0;
  int time_steps = 64;
  double heat_const_forcing = 0.0;
  // quasilinear
  std::string quasi_f = "sin";
  double quasi_const = 0.0;
  std::string quasi_u0 = "gauss";
  double quasi_u0_const = 0.0;
  double quasi_tol = 1e-8;
  int quasi_max_iter = 25;
  bool quasi_allow_violation = false;
  // run controls
  std::uint64_t master_seed = 12345;
  int replicas = 1;
  std::string out_dir = ".";
  bool plots = false;
  // diagnostics produced at parse time
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct SeedOverrides {
  std::optional<std::uint64_t> cli_seed;
  std::optional<int> cli_replicas;
  std::optional<std::string> cli_out;
  std::optional<bool> cli_plots;
  std::optional<std::uint64_t> env_seed;  // lowest precedence
};

inline RunConfig parse_config(const std::string& text, Command command,
                              const SeedOverrides& over = {}) {
  KeyValues kv = KeyValues::parse(text);
  RunConfig cfg;
  cfg.command = command;
  cfg.config_hash = fnv1a64(text);

  if (auto c = kv.take("command")) {
    auto parsed = command_from_name(*c);
    if (!parsed)
      kv.add_error("key 'command': unknown command '" + *c + "'");
    else if (*parsed != command)
      kv.add_error("key 'command': config says '" + *c +
                   "' but the invoked command is '" + command_name(command) + "'");
  }

  // seeds and run controls (cli > config > env > default)
  if (kv.has("seed")) cfg.master_seed = static_cast<std::uint64_t>(kv.take_int("seed", 12345));
  else if (over.env_seed) cfg.master_seed = *over.env_seed;
  if (over.cli_seed) cfg.master_seed = *over.cli_seed;
  cfg.replicas = static_cast<int>(kv.take_int(
      "replicas", command == Command::Validate ? 10000 : 1));
  if (over.cli_replicas) cfg.replicas = *over.cli_replicas;
  if (cfg.replicas < 1) kv.add_error("key 'replicas': must be >= 1");
  if (auto o = kv.take("out")) cfg.out_dir = *o;
  if (over.cli_out) cfg.out_dir = *over.cli_out;
  cfg.plots = kv.take_bool("plots", false);
  if (over.cli_plots) cfg.plots = *over.cli_plots;

  // model
  const bool needs_model = command != Command::Validate;
  if (auto kind = kv.take("model.kind")) {
    if (*kind == "finite-activity") {
      const double rate = kv.take_real("model.rate", 2.0);
      const double eps = kv.take_real("model.epsilon", 0.0);
      std::vector<JumpAtom> atoms;
      if (auto jumps = kv.take("model.jumps")) {
        for (const auto& part : detail::split(*jumps, ',')) {
          const auto mp = detail::split(part, ':');
          if (mp.size() != 2) {
            kv.add_error("key 'model.jumps': expected mark:prob pairs");
            break;
          }
          try {
            atoms.push_back({std::stod(mp[0]), std::stod(mp[1])});
          } catch (...) {
            kv.add_error("key 'model.jumps': bad number in '" + part + "'");
          }
        }
      } else {
        atoms = {{1.0, 1.0}};
      }
      try {
        cfg.model = LevyModel::finite_activity(rate, atoms, eps);
      } catch (const std::exception& e) {
        kv.add_error(std::string("model: ") + e.what());
      }
    } else if (*kind == "tempered-stable") {
      try {
        cfg.model = LevyModel::tempered_stable(
            kv.take_real("model.alpha", 0.5),
            kv.take_real("model.lambda_plus", 1.0),
            kv.take_real("model.lambda_minus", 1.0),
            kv.take_real("model.scale", 1.0), kv.take_real("model.epsilon", 0.1));
      } catch (const std::exception& e) {
        kv.add_error(std::string("model: ") + e.what());
      }
    } else {
      kv.add_error("key 'model.kind': unknown kind '" + *kind + "'");
    }
  } else if (needs_model) {
    cfg.model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  }

  // exponents
  cfg.beta = kv.take_reals("beta", cfg.beta);
  for (std::size_t k = 0; k < cfg.beta.size(); ++k)
    if (!(cfg.beta[k] > 0.0 && cfg.beta[k] < 0.5))
      kv.add_error("beta[" + std::to_string(k + 1) + "] out of (0, 0.5)");
  cfg.beta0 = kv.take_real("beta0", cfg.beta0);
  if (command == Command::SolveHeat || command == Command::SolveQuasilinear)
    if (!(cfg.beta0 > 0.0 && cfg.beta0 < 0.5))
      kv.add_error("beta0 out of (0, 0.5)");

  // source box for the driving noise
  cfg.past = kv.take_real("field.past", cfg.past);
  cfg.tail_tol = kv.take_real("field.tail_tol", cfg.tail_tol);
  cfg.source_cells = static_cast<int>(kv.take_int("field.source_cells", cfg.source_cells));
  if (auto pts = kv.take("field.points")) {
    cfg.eval_points.clear();
    for (const auto& p : detail::split(*pts, ';')) {
      std::vector<double> point;
      for (const auto& comp : detail::split(p, ',')) {
        try {
          point.push_back(std::stod(comp));
        } catch (...) {
          kv.add_error("key 'field.points': bad coordinate '" + comp + "'");
        }
      }
      if (point.size() != cfg.beta.size())
        kv.add_error("key 'field.points': point dimension != beta dimension");
      cfg.eval_points.push_back(std::move(point));
    }
  } else if (command == Command::SimulateField) {
    cfg.eval_points = {std::vector<double>(cfg.beta.size(), 1.0)};
  }

  // domain
  cfg.domain_lower = kv.take_reals("domain.lower", cfg.domain_lower);
  cfg.domain_upper = kv.take_reals("domain.upper", cfg.domain_upper);
  cfg.domain_cells = kv.take_ints("domain.cells", cfg.domain_cells);
  cfg.horizon = kv.take_real("domain.horizon", cfg.horizon);
  cfg.time_steps = static_cast<int>(kv.take_int("domain.steps", cfg.time_steps));
  if (command == Command::SolvePoisson || command == Command::SolveHeat ||
      command == Command::SolveQuasilinear) {
    if (cfg.domain_lower.size() != cfg.beta.size() ||
        cfg.domain_upper.size() != cfg.beta.size())
      kv.add_error("domain.lower/upper dimension != beta dimension");
    if (cfg.domain_cells.size() == 1 && cfg.beta.size() > 1)
      cfg.domain_cells.assign(cfg.beta.size(), cfg.domain_cells[0]);
    if (cfg.domain_cells.size() != cfg.beta.size())
      kv.add_error("domain.cells dimension != beta dimension");
  }
  cfg.heat_const_forcing = kv.take_real("heat.forcing_const", 0.0);

  // quasilinear
  if (auto f = kv.take("quasi.f")) {
    const auto parts = detail::split(*f, ':');
    if (parts[0] == "sin" || parts[0] == "zero") {
      cfg.quasi_f = parts[0];
    } else if (parts[0] == "const" && parts.size() == 2) {
      cfg.quasi_f = "const";
      try {
        cfg.quasi_const = std::stod(parts[1]);
      } catch (...) {
        kv.add_error("key 'quasi.f': bad constant");
      }
    } else {
      kv.add_error("key 'quasi.f': expected sin | zero | const:<c>");
    }
  }
  if (auto u0 = kv.take("quasi.u0")) {
    const auto parts = detail::split(*u0, ':');
    if (parts[0] == "zero" || parts[0] == "gauss") {
      cfg.quasi_u0 = parts[0];
    } else if (parts[0] == "const" && parts.size() == 2) {
      cfg.quasi_u0 = "const";
      try {
        cfg.quasi_u0_const = std::stod(parts[1]);
      } catch (...) {
        kv.add_error("key 'quasi.u0': bad constant");
      }
    } else {
      kv.add_error("key 'quasi.u0': expected zero | gauss | const:<c>");
    }
  }
  cfg.quasi_tol = kv.take_real("quasi.tol", cfg.quasi_tol);
  cfg.quasi_max_iter = static_cast<int>(kv.take_int("quasi.max_iter", cfg.quasi_max_iter));
  cfg.quasi_allow_violation = kv.take_bool("quasi.allow_violation", false);

  // solvability conditions, reported at parse time
  if (command == Command::SolveHeat || command == Command::SolveQuasilinear) {
    if (!heat_l2_condition(cfg.beta0, cfg.beta))
      cfg.warnings.push_back(
          "heat L2 condition violated (2 beta0 + sum beta_i + 1 <= d/2): "
          "second moments may diverge under refinement");
  }
  if (command == Command::SolveQuasilinear) {
    if (!picard_condition(cfg.beta))
      cfg.warnings.push_back(
          "picard condition violated (some beta_i <= 1/2 - 1/d)");
  }

  kv.finish();
  return cfg;
}

}  // namespace frlevy::cli
