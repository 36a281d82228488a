#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/chaos.hpp"
#include "frlevy/field.hpp"
#include "frlevy/fracops.hpp"
#include "frlevy/levy.hpp"
#include "frlevy/rng.hpp"
#include "frlevy/spde.hpp"

namespace frlevy {

struct McResult {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Raw replica values of a statistic over independent derived seeds.
inline std::vector<double> mc_samples(
    const std::function<double(std::uint64_t)>& statistic, int replicas,
    std::uint64_t master_seed) {
  if (replicas < 2) throw std::invalid_argument("mc: need >= 2 replicas");
  std::vector<double> out(static_cast<std::size_t>(replicas));
  for (int i = 0; i < replicas; ++i) {
    const std::uint64_t s = derive_seed(master_seed, static_cast<std::uint64_t>(i));
    const double v = statistic(s);
    if (!std::isfinite(v))
      throw std::runtime_error("mc: non-finite statistic at replica seed " +
                               std::to_string(s));
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

inline McResult mean_stderr(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n * (n - 1.0)))};
}

// Sample variance with its own standard error from the fourth central moment
// (no normality assumed).
inline McResult variance_stderr(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double s2 = m2 / (n - 1.0);
  m4 /= n;
  const double var_s2 = (m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
  return {s2, std::sqrt(std::max(0.0, var_s2))};
}

inline McResult mc_estimate(const std::function<double(std::uint64_t)>& statistic,
                            int replicas, std::uint64_t master_seed) {
  return mean_stderr(mc_samples(statistic, replicas, master_seed));
}

// Outcome of one validation check, self-contained enough to rerun it.
struct ValidationReport {
  std::string name;
  std::string identity;  // which equality/bound the check exercises
  double estimate = 0.0;
  double oracle = 0.0;
  double bound = 0.0;    // acceptance half-width (3 sigma, or deterministic tol)
  double stderr_ = 0.0;  // 0 for deterministic checks
  bool pass = false;
  int replicas = 0;
  std::uint64_t master_seed = 0;

  static ValidationReport make(std::string name, std::string identity,
                               double estimate, double oracle, double bound,
                               double se, int replicas, std::uint64_t seed) {
    ValidationReport r{std::move(name), std::move(identity), estimate, oracle,
                       bound,           se,                  false,    replicas,
                       seed};
    r.pass = std::abs(estimate - oracle) <= bound;
    return r;
  }
};

// Var of Xdot(f) = sum_jumps f(loc) mark - b1 int f against |f|_{L2}^2 m2.
inline ValidationReport validate_isometry(const LevyModel& model,
                                          const GridFunction& f, int replicas,
                                          std::uint64_t seed) {
  auto statistic = [&](std::uint64_t s) {
    const auto noise = sample_noise_grid(model, f.grid, s);
    double acc = 0.0;
    for (std::size_t j = 0; j < noise.jump_count(); ++j) {
      const std::int64_t c = f.grid.locate_cell(noise.jump_location(j));
      if (c >= 0)
        acc += f.values[static_cast<std::size_t>(c)] * noise.jump_marks[j];
    }
    return acc - model.first_moment() * f.integral();
  };
  const auto samples = mc_samples(statistic, replicas, seed);
  const auto var = variance_stderr(samples);
  double l2 = 0.0;
  for (double v : f.values) l2 += v * v;
  l2 *= f.grid.cell_volume();
  const double oracle = l2 * model.second_moment();
  return ValidationReport::make("isometry", "Var Xdot(f) = |f|_L2^2 * m2",
                                var.mean, oracle, 3.0 * var.stderr_, var.stderr_,
                                replicas, seed);
}

// Empirical characteristic function of the compensated box charge against
// exp(Leb(S) psi(theta)), component-wise.
inline std::vector<ValidationReport> validate_char(const LevyModel& model,
                                                   const GridSpec& region,
                                                   const std::vector<double>& thetas,
                                                   int replicas,
                                                   std::uint64_t seed) {
  const double leb = region.box_volume();
  // one sample of the compensated charge per replica, reused for every theta
  std::vector<double> charge(static_cast<std::size_t>(replicas));
  for (int i = 0; i < replicas; ++i) {
    const auto noise = sample_noise_grid(
        model, region, derive_seed(seed, static_cast<std::uint64_t>(i)));
    double s = 0.0;
    for (double m : noise.jump_marks) s += m;
    charge[static_cast<std::size_t>(i)] = s - leb * model.first_moment();
  }
  std::vector<ValidationReport> out;
  for (double theta : thetas) {
    std::vector<double> re(charge.size()), im(charge.size());
    for (std::size_t i = 0; i < charge.size(); ++i) {
      re[i] = std::cos(theta * charge[i]);
      im[i] = std::sin(theta * charge[i]);
    }
    const std::complex<double> oracle =
        std::exp(leb * model.levy_exponent(theta));
    const auto mre = mean_stderr(re);
    const auto mim = mean_stderr(im);
    // Both sides can be exact zeros (integer charges at theta = pi make
    // sin(theta X) vanish identically); the absolute floor covers the
    // trigonometric roundoff left in that case.
    const double floor = 1e-12;
    const std::string base = "char[theta=" + std::to_string(theta) + "]";
    out.push_back(ValidationReport::make(
        base + ".re", "E cos(theta X(S)) = Re exp(Leb(S) psi(theta))", mre.mean,
        oracle.real(), 3.0 * mre.stderr_ + floor, mre.stderr_, replicas, seed));
    out.push_back(ValidationReport::make(
        base + ".im", "E sin(theta X(S)) = Im exp(Leb(S) psi(theta))", mim.mean,
        oracle.imag(), 3.0 * mim.stderr_ + floor, mim.stderr_, replicas, seed));
  }
  return out;
}

namespace detail {

// Random chaos vector of the given order with entries in [-1, 1].
inline ChaosVector random_chaos(const std::shared_ptr<const DiscreteU>& u,
                                int order, Rng& rng) {
  ChaosVector F(u, order);
  for (int n = 0; n <= order; ++n)
    for (double& v : F.coeff(n).raw()) v = rng.uniform(-1.0, 1.0);
  return F;
}

inline TestFunction random_test_function(const std::shared_ptr<const DiscreteU>& u,
                                         Rng& rng, double amp = 0.5) {
  std::vector<double> v(u->cell_count());
  for (double& x : v) x = rng.uniform(-amp, amp);
  return TestFunction(u, std::move(v));
}

inline std::shared_ptr<const DiscreteU> small_u(int space_cells) {
  const auto model = LevyModel::finite_activity(
      2.0, {{1.0, 0.5}, {-1.0, 0.5}});
  GridSpec g({0.0}, {1.0}, {space_cells});
  return DiscreteU::create(g, model);
}

}  // namespace detail

// max |S(F<>G)(xi) - S(F)(xi) S(G)(xi)| over random order-<=2 instances.
inline ValidationReport validate_wick_homomorphism(int trials, int replicas_xi,
                                                   std::uint64_t seed) {
  auto u = detail::small_u(4);
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto F = detail::random_chaos(u, 2, rng);
    const auto G = detail::random_chaos(u, 2, rng);
    const auto FG = wick_product(F, G);
    for (int j = 0; j < replicas_xi; ++j) {
      const auto xi = detail::random_test_function(u, rng);
      worst = std::max(worst, std::abs(s_transform(FG, xi) -
                                       s_transform(F, xi) * s_transform(G, xi)));
    }
  }
  return ValidationReport::make("wick-homomorphism",
                                "S(F<>G) = S(F) S(G) pointwise", worst, 0.0,
                                1e-10, 0.0, trials, seed);
}

// max |S(delta F)(xi) - sum_u S(F(u))(xi) xi(u) pi(u)| over random families.
inline ValidationReport validate_skorohod_identity(int trials, int replicas_xi,
                                                   std::uint64_t seed) {
  auto u = detail::small_u(2);  // 4 U cells with 2 marks
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<ChaosVector> family;
    for (std::size_t c = 0; c < u->cell_count(); ++c)
      family.push_back(detail::random_chaos(u, 1, rng));
    const auto dF = skorohod_delta(family);
    for (int j = 0; j < replicas_xi; ++j) {
      const auto xi = detail::random_test_function(u, rng);
      double rhs = 0.0;
      for (std::size_t c = 0; c < family.size(); ++c)
        rhs += s_transform(family[c], xi) * xi.values[c] * u->pi_weight(c);
      worst = std::max(worst, std::abs(s_transform(dF, xi) - rhs));
    }
  }
  return ValidationReport::make("skorohod-identity",
                                "S(delta F)(xi) = int S(F(u))(xi) xi(u) pi(du)",
                                worst, 0.0, 1e-12, 0.0, trials, seed);
}

// Integration-by-parts residual on two offset bumps.
inline ValidationReport validate_integration_by_parts(int cells,
                                                      std::uint64_t seed) {
  GridSpec g({0.0}, {4.0}, {cells});
  auto bump = [](double c, double w) {
    return [c, w](std::span<const double> x) {
      const double z = (x[0] - c) / w;
      return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) * M_E : 0.0;
    };
  };
  const auto f = GridFunction::from_function(g, bump(1.2, 0.8));
  const auto gg = GridFunction::from_function(g, bump(2.6, 0.9));
  const double res = check_integration_by_parts(f, gg, BetaVector({0.3}));
  return ValidationReport::make("integration-by-parts",
                                "int f I+ g = int g I- f", res, 0.0, 1e-6, 0.0,
                                1, seed);
}

// Sample variance of the field at t=1 against the covariance quadrature.
inline ValidationReport validate_field_covariance(int replicas,
                                                  std::uint64_t seed) {
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  const BetaVector beta({0.3});
  GridSpec source({-8.0}, {1.0}, {16});
  auto statistic = [&](std::uint64_t s) {
    return sample_field(model, beta, {{1.0}}, source, s).values[0];
  };
  const auto var = variance_stderr(mc_samples(statistic, replicas, seed));
  const double t[1] = {1.0}, lo[1] = {-8.0};
  const double oracle = covariance_oracle(model, beta, t, t, lo);
  return ValidationReport::make("field-covariance",
                                "Var X_t = m2 |k_t|_L2^2 (shared truncation)",
                                var.mean, oracle, 3.0 * var.stderr_, var.stderr_,
                                replicas, seed);
}

// Var U(0.5) of the elliptic solve against the first-chaos oracle.
inline ValidationReport validate_poisson_variance(int replicas,
                                                  std::uint64_t seed,
                                                  int cells = 512) {
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  const BetaVector beta({0.3});
  DomainSpec domain(GridSpec({0.0}, {1.0}, {cells}));
  GridSpec source({-8.0}, {1.0}, {16});
  const double probe[1] = {0.5};
  const auto W = detail::poisson_probe_weights(domain, probe);
  auto statistic = [&](std::uint64_t s) {
    const auto noise = sample_noise_grid(model, source, s);
    const auto F = detail::fractional_noise_cells(noise, beta, domain.box);
    double v = 0.0;
    for (std::size_t c = 0; c < F.size(); ++c) v += W[c] * F[c];
    return v;
  };
  const auto var = variance_stderr(mc_samples(statistic, replicas, seed));
  const double oracle = poisson_variance_oracle(model, beta, domain, probe, source);
  return ValidationReport::make(
      "poisson-variance", "Var U(x) = m2 |int G(x,y) lambda_y dy|_pi^2",
      var.mean, oracle, 3.0 * var.stderr_, var.stderr_, replicas, seed);
}

// Var U(1, 0.5) of the linear heat solve against the first-chaos oracle.
inline ValidationReport validate_heat_variance(int replicas, std::uint64_t seed,
                                               int cells = 64, int steps = 64) {
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  const double beta0 = 0.25;
  const BetaVector beta({0.3});
  DomainSpec domain(GridSpec({0.0}, {1.0}, {cells}), 1.0, steps);
  GridSpec source({-4.0, -4.0}, {1.0, 1.0}, {4, 4});
  const double probe[1] = {0.5};
  const auto A = heat_probe_weights(domain, probe);
  auto statistic = [&](std::uint64_t s) {
    const auto noise = sample_noise_grid(model, source, s);
    const auto F = detail::fractional_forcing(noise, beta0, beta, domain);
    double v = 0.0;
    for (std::size_t c = 0; c < F.size(); ++c) v += A[c] * F[c];
    return v;
  };
  const auto var = variance_stderr(mc_samples(statistic, replicas, seed));
  const double oracle = heat_variance_oracle(model, beta0, beta, domain, probe, source);
  return ValidationReport::make(
      "heat-variance", "Var U(t,x) = m2 |int G_{t-s} lambda dy ds|_pi^2",
      var.mean, oracle, 3.0 * var.stderr_, var.stderr_, replicas, seed);
}

struct DecayFit {
  double A_fit = 0.0;
  double C_fit = 0.0;
  bool superlinear = false;
  bool degenerate = false;
};

// Fit log D_j = log A + j log(C T) - log j! and test for factorial-type
// (superlinear) decay via the second differences of log D_j.
inline DecayFit picard_decay_report(const PicardReport& report) {
  std::vector<double> d;
  for (double v : report.diffs) {
    if (v <= 0.0) break;  // converged exactly; later entries carry no signal
    d.push_back(v);
  }
  if (d.size() < 4)
    throw std::invalid_argument("picard_decay_report: need >= 4 positive differences");
  DecayFit fit;
  double dmin = d[0], dmax = d[0];
  for (double v : d) {
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  if (dmax - dmin <= 1e-12 * dmax) fit.degenerate = true;
  // regression of y_j = log d_j + log j! on j
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double logfact = 0.0;
  for (std::size_t j = 1; j <= d.size(); ++j) {
    logfact += std::log(static_cast<double>(j));
    const double x = static_cast<double>(j);
    const double y = std::log(d[j - 1]) + logfact;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(d.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  fit.A_fit = std::exp(intercept);
  fit.C_fit = std::exp(slope) / (report.horizon > 0 ? report.horizon : 1.0);
  double curv = 0.0;
  for (std::size_t j = 1; j + 1 < d.size(); ++j)
    curv += std::log(d[j + 1]) - 2.0 * std::log(d[j]) + std::log(d[j - 1]);
  curv /= static_cast<double>(d.size() - 2);
  fit.superlinear = !fit.degenerate && curv < -1e-6;
  return fit;
}

// Quasi-linear fixed point: convergence, monotone contraction, factorial decay.
inline std::vector<ValidationReport> validate_picard(std::uint64_t seed) {
  const auto model = LevyModel::finite_activity(2.0, {{0.5, 1.0}});
  const double beta0 = 0.25;
  const BetaVector beta({0.3});
  DomainSpec domain(GridSpec({-5.0}, {6.0}, {176}), 0.5, 32);
  GridFunction u0 = GridFunction::from_function(
      domain.box,
      [](std::span<const double> x) { return std::exp(-x[0] * x[0]); });
  Nonlinearity f{[](double v) { return std::sin(v); }, 1.0, 1.0, "sin"};
  QuasilinearOptions opt;
  opt.tol = 1e-8;
  opt.max_iter = 15;
  opt.seed = seed;
  std::vector<ValidationReport> out;
  try {
    const auto result = solve_quasilinear(f, u0, model, beta0, beta, domain, opt);
    const auto& diffs = result.report.diffs;
    out.push_back(ValidationReport::make(
        "picard-convergence", "sup-norm differences reach tol within 15 iterations",
        static_cast<double>(result.report.iterations), 0.0, 15.0, 0.0, 1, seed));
    double worst_ratio = 0.0;
    for (std::size_t j = 2; j < diffs.size(); ++j)
      if (diffs[j - 1] > 0) worst_ratio = std::max(worst_ratio, diffs[j] / diffs[j - 1]);
    out.push_back(ValidationReport::make(
        "picard-monotone", "differences strictly decreasing after iteration 2",
        worst_ratio, 0.0, 1.0 - 1e-12, 0.0, 1, seed));
    const auto fit = picard_decay_report(result.report);
    out.push_back(ValidationReport::make(
        "picard-superlinear", "log-differences concave (factorial-type decay)",
        fit.superlinear ? 1.0 : 0.0, 1.0, 0.5, 0.0, 1, seed));
  } catch (const PicardConvergenceError& e) {
    out.push_back(ValidationReport::make(
        "picard-convergence", "sup-norm differences reach tol within 15 iterations",
        static_cast<double>(e.diffs.size()) + 1.0, 0.0, 15.0, 0.0, 1, seed));
  }
  return out;
}

struct SuiteOptions {
  std::uint64_t master_seed = 20240101;
  int replicas = 10000;
};

// The default validation run: every closed-form identity with its Monte-Carlo
// or quadrature counterpart, at the documented tolerances.
inline std::vector<ValidationReport> default_validation_suite(SuiteOptions opt = {}) {
  std::vector<ValidationReport> out;
  const auto model = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  {
    GridSpec unit({0.0}, {1.0}, {8});
    auto f = GridFunction::from_function(
        unit, [](std::span<const double>) { return 1.0; });
    out.push_back(validate_isometry(model, f, opt.replicas,
                                    derive_seed(opt.master_seed, 1)));
  }
  {
    GridSpec region({0.0}, {1.0}, {1});
    const std::vector<double> thetas{0.5, 1.0, M_PI, 2.5, 4.0};
    auto reports = validate_char(model, region, thetas, opt.replicas,
                                 derive_seed(opt.master_seed, 2));
    out.insert(out.end(), reports.begin(), reports.end());
  }
  out.push_back(validate_wick_homomorphism(100, 10, derive_seed(opt.master_seed, 3)));
  out.push_back(validate_skorohod_identity(100, 5, derive_seed(opt.master_seed, 4)));
  out.push_back(validate_integration_by_parts(512, derive_seed(opt.master_seed, 5)));
  out.push_back(validate_field_covariance(opt.replicas, derive_seed(opt.master_seed, 6)));
  out.push_back(validate_poisson_variance(opt.replicas, derive_seed(opt.master_seed, 7)));
  out.push_back(validate_heat_variance(opt.replicas, derive_seed(opt.master_seed, 8)));
  {
    auto reports = validate_picard(derive_seed(opt.master_seed, 9));
    out.insert(out.end(), reports.begin(), reports.end());
  }
  return out;
}

}  // namespace frlevy
