// End-to-end acceptance suite: one line per criterion, nonzero exit when any
// criterion fails.  Each check pins its tolerance in code.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "frlevy/cli/config.hpp"
#include "frlevy/cli/runner.hpp"
#include "frlevy/harness.hpp"

using namespace frlevy;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool pass,
            const std::string& detail, double seconds) {
  std::printf("%s criterion %2d: %-34s %s  (%.1fs)\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// 1. Var Xdot(1_[0,1]) within 3 sigma of 2.0 at 1e4 replicas.
void criterion_isometry() {
  Timer t;
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  GridSpec unit({0.0}, {1.0}, {8});
  const auto f = GridFunction::from_function(
      unit, [](std::span<const double>) { return 1.0; });
  const auto r = validate_isometry(model, f, 10000, 1001);
  report(1, "isometry of the noise pairing", r.pass && t.elapsed() <= 30.0,
         fmt("var=%.4f oracle=%.4f 3se=%.4f", r.estimate, r.oracle, r.bound),
         t.elapsed());
}

// 2. Empirical characteristic function at 5 probe thetas, 3 sigma per part.
void criterion_char() {
  Timer t;
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  GridSpec region({0.0}, {1.0}, {1});
  const auto rs =
      validate_char(model, region, {0.5, 1.0, M_PI, 2.5, 4.0}, 10000, 1002);
  bool pass = true;
  double worst = 0.0;
  for (const auto& r : rs) {
    pass = pass && r.pass;
    if (r.stderr_ > 1e-13)  // skip components that are exact zeros
      worst = std::max(worst, std::abs(r.estimate - r.oracle) / r.stderr_);
  }
  report(2, "characteristic functional", pass && t.elapsed() <= 30.0,
         fmt("5 thetas, worst deviation %.2f sigma", worst), t.elapsed());
}

// 3. Fractional operators: closed forms at 1e-8; integration by parts at 512
// cells below 1e-6 and not growing under refinement.
void criterion_fracops() {
  Timer t;
  bool pass = true;
  GridSpec g({-2.0}, {2.0}, {500});
  const auto f = GridFunction::from_function(g, [](std::span<const double> x) {
    return (x[0] >= 0.0 && x[0] < 1.0) ? 1.0 : 0.0;
  });
  const double b = 0.25, g1 = std::tgamma(b + 1.0);
  const auto minus = frac_integral_minus(f, BetaVector({b}));
  const auto plus = frac_integral_plus(f, BetaVector({b}));
  double worst = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double x = g.center(0, static_cast<int>(i));
    auto pw = [](double v, double e) { return v > 0 ? std::pow(v, e) : 0.0; };
    worst = std::max(worst, std::abs(minus.values.values[i] -
                                     (pw(1.0 - x, b) - pw(-x, b)) / g1));
    worst = std::max(worst, std::abs(plus.values.values[i] -
                                     (pw(x, b) - pw(x - 1.0, b)) / g1));
  }
  pass = pass && worst <= 1e-8;

  auto bump = [](const GridSpec& gg, double c, double w) {
    return GridFunction::from_function(gg, [=](std::span<const double> x) {
      const double z = (x[0] - c) / w;
      return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) * M_E : 0.0;
    });
  };
  GridSpec g512({0.0}, {4.0}, {512}), g1024({0.0}, {4.0}, {1024});
  const double r512 = check_integration_by_parts(bump(g512, 1.2, 0.8),
                                                 bump(g512, 2.6, 0.9),
                                                 BetaVector({0.3}));
  const double r1024 = check_integration_by_parts(bump(g1024, 1.2, 0.8),
                                                  bump(g1024, 2.6, 0.9),
                                                  BetaVector({0.3}));
  // the discrete scheme is self-adjoint, so both sit at the roundoff floor;
  // "decreases" is asserted up to that floor
  pass = pass && r512 <= 1e-6 && r1024 <= std::max(r512, 1e-10);
  report(3, "fractional operator correctness", pass && t.elapsed() <= 10.0,
         fmt("closed-form err %.1e, ibp %.1e -> %.1e", worst, r512, r1024),
         t.elapsed());
}

// 4. Wick homomorphism at 1e-10 and Skorohod identity at 1e-12, randomized.
void criterion_chaos() {
  Timer t;
  const auto wick = validate_wick_homomorphism(100, 10, 1004);
  const auto skor = validate_skorohod_identity(100, 5, 1005);
  report(4, "chaos algebra identities",
         wick.pass && skor.pass && t.elapsed() <= 10.0,
         fmt("wick %.1e <= 1e-10, skorohod %.1e <= 1e-12", wick.estimate,
             skor.estimate),
         t.elapsed());
}

// 5. Field covariance in d=1 and the anisotropy ratio in d=2, 3 sigma.
void criterion_field() {
  Timer t;
  const auto d1 = validate_field_covariance(10000, 1006);
  bool pass = d1.pass;

  const auto model = LevyModel::finite_activity(2.0, {{1.0, 0.5}, {-1.0, 0.5}});
  const BetaVector beta({0.2, 0.4});
  GridSpec source({-6.0, -6.0}, {1.5, 1.5}, {8, 8});
  const double h = 0.5;
  auto inc_stat = [&](int axis) {
    return [&, axis](std::uint64_t s) {
      std::vector<double> a{1.0, 1.0}, bpt{1.0, 1.0};
      a[static_cast<std::size_t>(axis)] += h;
      const auto r = sample_field(model, beta, {a, bpt}, source, s);
      return r.values[0] - r.values[1];
    };
  };
  const auto v1 = variance_stderr(mc_samples(inc_stat(0), 10000, 1007));
  const auto v2 = variance_stderr(mc_samples(inc_stat(1), 10000, 1008));
  auto inc_oracle = [&](int axis) {
    std::vector<double> a{1.0, 1.0}, bpt{1.0, 1.0};
    a[static_cast<std::size_t>(axis)] += h;
    const double lo[2] = {-6.0, -6.0};
    return covariance_oracle(model, beta, a, a, lo) -
           2.0 * covariance_oracle(model, beta, a, bpt, lo) +
           covariance_oracle(model, beta, bpt, bpt, lo);
  };
  const double o1 = inc_oracle(0), o2 = inc_oracle(1);
  const double ratio = v1.mean / v2.mean, oracle_ratio = o1 / o2;
  const double ratio_se =
      std::abs(ratio) * std::sqrt(std::pow(v1.stderr_ / v1.mean, 2) +
                                  std::pow(v2.stderr_ / v2.mean, 2));
  pass = pass && std::abs(ratio - oracle_ratio) <= 3.0 * ratio_se &&
         std::abs(oracle_ratio - 1.0) > 0.1;
  report(5, "field covariance and anisotropy", pass && t.elapsed() <= 120.0,
         fmt("d1 var=%.4f, d2 ratio %.3f vs %.3f", d1.estimate, ratio,
             oracle_ratio),
         t.elapsed());
}

// 6. Elliptic solve: MC variance 3 sigma, residual <= 1e-10, deterministic
// solve within 1e-6 of the spectral oracle.
void criterion_poisson() {
  Timer t;
  const auto mc = validate_poisson_variance(10000, 1009);
  bool pass = mc.pass;

  const BetaVector beta({0.3});
  DomainSpec domain(GridSpec({0.0}, {1.0}, {512}));
  GridSpec source({-8.0}, {1.0}, {16});
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  double res = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto sol = solve_poisson(sample_noise_grid(model, source, s), beta, domain);
    res = std::max(res, sol.residual_inf);
  }
  pass = pass && res <= 1e-10;

  const auto det = solve_poisson_deterministic(
      [](std::span<const double> x) { return std::sin(M_PI * x[0]); }, domain);
  const double probe[1] = {0.5};
  const double det_err = std::abs(det.value_at(probe) - 1.0 / (M_PI * M_PI));
  pass = pass && det_err <= 1e-6;
  report(6, "stochastic poisson solve", pass && t.elapsed() <= 120.0,
         fmt("var dev %.2f se, residual %.1e, det err %.1e",
             mc.stderr_ > 0 ? std::abs(mc.estimate - mc.oracle) / mc.stderr_ : 0.0,
             res, det_err),
         t.elapsed());
}

// 7. Heat solve: steady state 0.25 by t=5 within 1e-4; stochastic variance
// 3 sigma; d=3 refinement contrast for the L2 condition.
void criterion_heat() {
  Timer t;
  DomainSpec steady(GridSpec({0.0}, {1.0}, {128}), 5.0, 100);
  const auto det = solve_heat_deterministic(
      [](double, std::span<const double>) { return 1.0; }, steady);
  const double probe[1] = {0.5};
  const double steady_err =
      std::abs(det.value_at(steady.time_steps, probe) - 0.25);
  bool pass = steady_err <= 1e-4;

  const auto mc = validate_heat_variance(10000, 1010);
  pass = pass && mc.pass;

  const auto model = LevyModel::finite_activity(1.0, {{1.0, 1.0}});
  auto var_at = [&](double b, int level) {
    const int n = 8 << level, M = 8 << level;
    DomainSpec domain(GridSpec({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {n, n, n}),
                      0.5, M);
    const BetaVector beta3({b, b, b});
    GridSpec src({-1.0, -1.0, -1.0, -1.0}, {0.5, 1.0, 1.0, 1.0}, {2, 2, 2, 2});
    const double p3[3] = {0.5, 0.5, 0.5};
    return heat_variance_oracle(model, b, beta3, domain, p3, src);
  };
  std::vector<double> vt, vf;
  for (int level = 0; level < 3; ++level) {
    vt.push_back(var_at(0.45, level));
    vf.push_back(var_at(0.05, level));
  }
  const double rt = vt[2] / vt[1];
  const bool stable = rt <= 1.05 && vt[1] / vt[0] <= 1.10;
  const bool growing = vf[1] / vf[0] >= 1.15 && vf[2] / vf[1] >= 1.15;
  pass = pass && stable && growing;
  report(7, "stochastic heat solve", pass && t.elapsed() <= 300.0,
         fmt("steady err %.1e, contrast %.3f vs %.3f", steady_err, rt,
             vf[2] / vf[1]),
         t.elapsed());
}

// 8. Condition checkers reproduce the tabulated cases.
void criterion_conditions() {
  Timer t;
  const bool pass =
      heat_l2_condition(0.1, std::vector<double>{0.1}) &&
      !heat_l2_condition(0.01, std::vector<double>{0.01, 0.01, 0.01, 0.01}) &&
      heat_l2_condition(0.45, std::vector<double>{0.45, 0.45, 0.45}) &&
      picard_condition(std::vector<double>{0.1, 0.1}) &&
      !picard_condition(std::vector<double>{0.2, 0.2, 0.2, 0.2}) &&
      picard_condition(std::vector<double>{0.05});
  report(8, "solvability condition checkers", pass && t.elapsed() <= 1.0,
         "6 tabulated cases", t.elapsed());
}

// 9. Picard iteration with f = sin at T = 0.5: convergence within 15
// iterations, strictly decreasing after iteration 2, factorial-type decay.
void criterion_picard() {
  Timer t;
  const auto rs = validate_picard(1011);
  bool pass = true;
  for (const auto& r : rs) pass = pass && r.pass;
  std::string detail = rs.size() == 3 ? fmt("%.0f iterations, worst ratio %.3f",
                                            rs[0].estimate, rs[1].estimate)
                                      : "did not converge";
  report(9, "picard iteration decay", pass && t.elapsed() <= 180.0, detail,
         t.elapsed());
}

// 10. Two identical validation runs produce byte-identical outputs.
void criterion_determinism() {
  Timer t;
  namespace fs = std::filesystem;
  const auto base = fs::temp_directory_path() / "frlevy_acceptance";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto conf = base / "validate.conf";
  {
    std::ofstream out(conf);
    out << "replicas = 3000\nseed = 424242\n";
  }
  bool pass = true;
  for (const char* sub : {"a", "b"}) {
    const auto dir = base / sub;
    fs::create_directories(dir);
    const std::string cmd = std::string(FRLEVY_CLI_PATH) +
                            " validate --config " + conf.string() + " --out " +
                            dir.string() + " >/dev/null 2>&1";
    pass = pass && WEXITSTATUS(std::system(cmd.c_str())) == 0;
  }
  pass = pass && slurp(base / "a" / "validation.csv") ==
                     slurp(base / "b" / "validation.csv") &&
         !slurp(base / "a" / "validation.csv").empty();
  report(10, "byte-identical reruns", pass, "validate twice, same seed",
         t.elapsed());
}

int main() {
  criterion_isometry();
  criterion_char();
  criterion_fracops();
  criterion_chaos();
  criterion_field();
  criterion_poisson();
  criterion_heat();
  criterion_conditions();
  criterion_picard();
  criterion_determinism();
  if (failures == 0) {
    std::printf("acceptance: all criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failed\n", failures);
  return 1;
}
