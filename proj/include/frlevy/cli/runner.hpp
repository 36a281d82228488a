#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "frlevy/cli/config.hpp"
#include "frlevy/cli/svg.hpp"
#include "frlevy/harness.hpp"

namespace frlevy::cli {

namespace detail {

// 17 significant digits round-trip doubles exactly.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string header(const RunConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "# frlevy %s\n# config_hash=0x%016llx\n# master_seed=%llu\n",
                command_name(cfg.command).c_str(),
                static_cast<unsigned long long>(cfg.config_hash),
                static_cast<unsigned long long>(cfg.master_seed));
  return buf;
}

inline GridSpec field_source_grid(const RunConfig& cfg) {
  const std::size_t d = cfg.beta.size();
  std::vector<double> lo(d, -cfg.past), up(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double mx = 1.0;
    for (const auto& p : cfg.eval_points) mx = std::max(mx, p[k]);
    up[k] = mx;
  }
  return GridSpec(lo, up, std::vector<int>(d, cfg.source_cells));
}

inline GridSpec solver_source_grid(const RunConfig& cfg, bool with_time) {
  std::vector<double> lo, up;
  std::vector<int> cells;
  if (with_time) {
    lo.push_back(-cfg.past);
    up.push_back(cfg.horizon);
    cells.push_back(4);
  }
  for (std::size_t k = 0; k < cfg.beta.size(); ++k) {
    lo.push_back(cfg.domain_lower[k] - cfg.past);
    up.push_back(cfg.domain_upper[k]);
    cells.push_back(4);
  }
  return GridSpec(lo, up, cells);
}

}  // namespace detail

inline int run_simulate_field(const RunConfig& cfg, std::ostream& log) {
  const BetaVector beta(cfg.beta);
  const GridSpec source = detail::field_source_grid(cfg);
  // tail check via the kernel constructor (throws when past reach too small)
  for (const auto& p : cfg.eval_points)
    field_kernel(beta, p, source, cfg.past, {cfg.tail_tol});
  std::string csv = detail::header(cfg);
  const std::size_t d = cfg.beta.size();
  for (std::size_t k = 0; k < d; ++k) csv += "t" + std::to_string(k + 1) + ",";
  std::vector<double> plot_y(cfg.eval_points.size(), 0.0);
  if (cfg.replicas == 1) {
    csv += "value\n";
    const auto real = sample_field(*cfg.model, beta, cfg.eval_points, source,
                                   cfg.master_seed);
    plot_y = real.values;
    for (std::size_t p = 0; p < real.eval_points.size(); ++p) {
      for (double c : real.eval_points[p]) csv += detail::num(c) + ",";
      csv += detail::num(real.values[p]) + "\n";
    }
  } else {
    csv += "mean,variance,stderr\n";
    std::vector<std::vector<double>> per_point(cfg.eval_points.size());
    for (int i = 0; i < cfg.replicas; ++i) {
      const auto real =
          sample_field(*cfg.model, beta, cfg.eval_points, source,
                       derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
      for (std::size_t p = 0; p < real.values.size(); ++p)
        per_point[p].push_back(real.values[p]);
    }
    for (std::size_t p = 0; p < cfg.eval_points.size(); ++p) {
      const auto m = mean_stderr(per_point[p]);
      const auto v = variance_stderr(per_point[p]);
      plot_y[p] = m.mean;
      for (double c : cfg.eval_points[p]) csv += detail::num(c) + ",";
      csv += detail::num(m.mean) + "," + detail::num(v.mean) + "," +
             detail::num(m.stderr_) + "\n";
    }
  }
  const auto out = std::filesystem::path(cfg.out_dir) / "field.csv";
  detail::atomic_write(out, csv);
  log << "wrote " << out.string() << "\n";
  if (cfg.plots && d == 1 && cfg.eval_points.size() > 1) {
    std::vector<double> x;
    for (const auto& p : cfg.eval_points) x.push_back(p[0]);
    const auto plot = std::filesystem::path(cfg.out_dir) / "field.svg";
    detail::atomic_write(plot, svg_line_plot(x, plot_y, "field values"));
    log << "wrote " << plot.string() << "\n";
  }
  return 0;
}

inline int run_solve_poisson(const RunConfig& cfg, std::ostream& log) {
  const BetaVector beta(cfg.beta);
  DomainSpec domain(GridSpec(cfg.domain_lower, cfg.domain_upper, cfg.domain_cells));
  const GridSpec source = detail::solver_source_grid(cfg, false);
  std::string csv = detail::header(cfg);
  const std::size_t d = cfg.beta.size();
  const auto& box = domain.box;
  std::vector<int> idx(d);
  std::vector<double> plot_values;
  if (cfg.replicas == 1) {
    const auto noise = sample_noise_grid(*cfg.model, source, cfg.master_seed);
    const auto sol = solve_poisson(noise, beta, domain);
    plot_values = sol.u.values;
    csv += "# residual_inf=" + detail::num(sol.residual_inf) + "\n";
    for (std::size_t k = 0; k < d; ++k) csv += "x" + std::to_string(k + 1) + ",";
    csv += "value\n";
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      for (std::size_t k = 0; k < d; ++k)
        csv += detail::num(box.center(static_cast<int>(k), idx[k])) + ",";
      csv += detail::num(sol.u.values[static_cast<std::size_t>(c)]) + "\n";
    }
  } else {
    std::vector<std::vector<double>> cells(
        static_cast<std::size_t>(box.cell_count()));
    double res = 0.0;
    for (int i = 0; i < cfg.replicas; ++i) {
      const auto noise = sample_noise_grid(
          *cfg.model, source, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
      const auto sol = solve_poisson(noise, beta, domain);
      res = std::max(res, sol.residual_inf);
      for (std::size_t c = 0; c < cells.size(); ++c)
        cells[c].push_back(sol.u.values[c]);
    }
    csv += "# residual_inf=" + detail::num(res) + "\n";
    for (std::size_t k = 0; k < d; ++k) csv += "x" + std::to_string(k + 1) + ",";
    csv += "mean,variance,stderr\n";
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      const auto m = mean_stderr(cells[static_cast<std::size_t>(c)]);
      const auto v = variance_stderr(cells[static_cast<std::size_t>(c)]);
      for (std::size_t k = 0; k < d; ++k)
        csv += detail::num(box.center(static_cast<int>(k), idx[k])) + ",";
      csv += detail::num(m.mean) + "," + detail::num(v.mean) + "," +
             detail::num(m.stderr_) + "\n";
    }
  }
  const auto out = std::filesystem::path(cfg.out_dir) / "solution.csv";
  detail::atomic_write(out, csv);
  log << "wrote " << out.string() << "\n";
  if (cfg.plots && d == 1 && !plot_values.empty()) {
    std::vector<double> x;
    for (std::int64_t c = 0; c < box.cell_count(); ++c)
      x.push_back(box.center(0, static_cast<int>(c)));
    const auto plot = std::filesystem::path(cfg.out_dir) / "solution.svg";
    detail::atomic_write(plot, svg_line_plot(x, plot_values, "elliptic solution"));
    log << "wrote " << plot.string() << "\n";
  }
  if (cfg.plots && d == 2 && !plot_values.empty()) {
    const auto plot = std::filesystem::path(cfg.out_dir) / "solution.svg";
    detail::atomic_write(plot, svg_heatmap(plot_values, box.cells(0),
                                           box.cells(1), "elliptic solution"));
    log << "wrote " << plot.string() << "\n";
  }
  return 0;
}

// Forcing = fractional noise realization plus the optional constant term.
inline std::vector<double> spde_forcing(const RunConfig& cfg,
                                        const NoiseRealization& noise,
                                        const BetaVector& beta,
                                        const DomainSpec& domain) {
  auto F = frlevy::detail::fractional_forcing(noise, cfg.beta0, beta, domain);
  if (cfg.heat_const_forcing != 0.0)
    for (double& v : F) v += cfg.heat_const_forcing;
  return F;
}

inline int run_solve_heat(const RunConfig& cfg, std::ostream& log) {
  const BetaVector beta(cfg.beta);
  DomainSpec domain(GridSpec(cfg.domain_lower, cfg.domain_upper, cfg.domain_cells),
                    cfg.horizon, cfg.time_steps);
  const GridSpec source = detail::solver_source_grid(cfg, true);
  const std::size_t nc = static_cast<std::size_t>(domain.box.cell_count());
  auto solve_one = [&](std::uint64_t seed) {
    const auto noise = sample_noise_grid(*cfg.model, source, seed);
    auto F = spde_forcing(cfg, noise, beta, domain);
    return frlevy::detail::heat_evolve(
        domain,
        [&](int step) {
          return std::vector<double>(
              F.begin() + step * static_cast<std::ptrdiff_t>(nc),
              F.begin() + (step + 1) * static_cast<std::ptrdiff_t>(nc));
        },
        nullptr);
  };
  std::string csv = detail::header(cfg);
  const std::size_t d = cfg.beta.size();
  csv += "t";
  for (std::size_t k = 0; k < d; ++k) csv += ",x" + std::to_string(k + 1);
  const auto& box = domain.box;
  std::vector<int> idx(d);
  std::vector<double> plot_values;
  auto row_prefix = [&](double time, std::int64_t c) {
    box.unflatten(c, idx);
    std::string row = detail::num(time);
    for (std::size_t k = 0; k < d; ++k)
      row += "," + detail::num(box.center(static_cast<int>(k), idx[k]));
    return row;
  };
  if (cfg.replicas == 1) {
    csv += ",value\n";
    const auto sol = solve_one(cfg.master_seed);
    plot_values = sol.slices.back();
    for (std::size_t m = 0; m < sol.times.size(); ++m)
      for (std::int64_t c = 0; c < box.cell_count(); ++c)
        csv += row_prefix(sol.times[m], c) + "," +
               detail::num(sol.slices[m][static_cast<std::size_t>(c)]) + "\n";
  } else {
    csv += ",mean,variance,stderr\n";
    const std::size_t slots = static_cast<std::size_t>(domain.time_steps + 1) * nc;
    std::vector<std::vector<double>> samples(slots);
    std::vector<double> times;
    for (int i = 0; i < cfg.replicas; ++i) {
      const auto sol =
          solve_one(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
      times = sol.times;
      for (std::size_t m = 0; m < sol.times.size(); ++m)
        for (std::size_t c = 0; c < nc; ++c)
          samples[m * nc + c].push_back(sol.slices[m][c]);
    }
    plot_values.assign(nc, 0.0);
    for (std::size_t m = 0; m < times.size(); ++m)
      for (std::int64_t c = 0; c < box.cell_count(); ++c) {
        const auto& s = samples[m * nc + static_cast<std::size_t>(c)];
        const auto mean = mean_stderr(s);
        const auto var = variance_stderr(s);
        if (m + 1 == times.size()) plot_values[static_cast<std::size_t>(c)] = mean.mean;
        csv += row_prefix(times[m], c) + "," + detail::num(mean.mean) + "," +
               detail::num(var.mean) + "," + detail::num(mean.stderr_) + "\n";
      }
  }
  const auto out = std::filesystem::path(cfg.out_dir) / "solution.csv";
  detail::atomic_write(out, csv);
  log << "wrote " << out.string() << "\n";
  if (cfg.plots && d == 1) {
    std::vector<double> x;
    for (std::int64_t c = 0; c < box.cell_count(); ++c)
      x.push_back(box.center(0, static_cast<int>(c)));
    const auto plot = std::filesystem::path(cfg.out_dir) / "solution.svg";
    detail::atomic_write(plot, svg_line_plot(x, plot_values, "final slice"));
    log << "wrote " << plot.string() << "\n";
  }
  if (cfg.plots && d == 2) {
    const auto plot = std::filesystem::path(cfg.out_dir) / "solution.svg";
    detail::atomic_write(plot, svg_heatmap(plot_values, box.cells(0),
                                           box.cells(1), "final slice"));
    log << "wrote " << plot.string() << "\n";
  }
  return 0;
}

inline int run_solve_quasilinear(const RunConfig& cfg, std::ostream& log) {
  const BetaVector beta(cfg.beta);
  DomainSpec domain(GridSpec(cfg.domain_lower, cfg.domain_upper, cfg.domain_cells),
                    cfg.horizon, cfg.time_steps);
  Nonlinearity f;
  if (cfg.quasi_f == "sin")
    f = {[](double v) { return std::sin(v); }, 1.0, 1.0, "sin"};
  else if (cfg.quasi_f == "zero")
    f = {[](double) { return 0.0; }, 0.0, 0.0, "zero"};
  else {
    const double c = cfg.quasi_const;
    f = {[c](double) { return c; }, 0.0, std::abs(c), "const"};
  }
  GridFunction u0(domain.box);
  if (cfg.quasi_u0 == "gauss")
    u0 = GridFunction::from_function(domain.box, [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return std::exp(-s);
    });
  else if (cfg.quasi_u0 == "const")
    u0 = GridFunction::from_function(
        domain.box,
        [&](std::span<const double>) { return cfg.quasi_u0_const; });
  QuasilinearOptions opt;
  opt.tol = cfg.quasi_tol;
  opt.max_iter = cfg.quasi_max_iter;
  opt.seed = cfg.master_seed;
  opt.past_time = cfg.past;
  opt.past_space = cfg.past;
  opt.allow_condition_violation = cfg.quasi_allow_violation;
  const auto result = solve_quasilinear(f, u0, *cfg.model, cfg.beta0, beta,
                                        domain, opt);
  std::string csv = detail::header(cfg);
  csv += "iteration,sup_diff\n";
  for (std::size_t j = 0; j < result.report.diffs.size(); ++j)
    csv += std::to_string(j + 1) + "," + detail::num(result.report.diffs[j]) + "\n";
  detail::atomic_write(std::filesystem::path(cfg.out_dir) / "iterations.csv", csv);

  std::string sol_csv = detail::header(cfg);
  const std::size_t d = cfg.beta.size();
  sol_csv += "t";
  for (std::size_t k = 0; k < d; ++k)
    sol_csv += ",x" + std::to_string(k + 1);
  sol_csv += ",value\n";
  const auto& box = domain.box;
  std::vector<int> idx(d);
  for (std::size_t m = 0; m < result.solution.times.size(); ++m)
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      sol_csv += detail::num(result.solution.times[m]) + ",";
      for (std::size_t k = 0; k < d; ++k)
        sol_csv += detail::num(box.center(static_cast<int>(k), idx[k])) + ",";
      sol_csv += detail::num(result.solution.slices[m][static_cast<std::size_t>(c)]) + "\n";
    }
  const auto out = std::filesystem::path(cfg.out_dir) / "solution.csv";
  detail::atomic_write(out, sol_csv);
  log << "wrote " << out.string() << " and iterations.csv\n";
  return 0;
}

inline int run_validate(const RunConfig& cfg, std::ostream& log) {
  SuiteOptions opt;
  opt.master_seed = cfg.master_seed;
  opt.replicas = cfg.replicas;
  const auto reports = default_validation_suite(opt);
  std::string csv = detail::header(cfg);
  csv += "name,estimate,oracle,bound,stderr,pass,replicas,seed\n";
  std::string txt = detail::header(cfg);
  bool all_pass = true;
  for (const auto& r : reports) {
    all_pass = all_pass && r.pass;
    csv += r.name + "," + detail::num(r.estimate) + "," + detail::num(r.oracle) +
           "," + detail::num(r.bound) + "," + detail::num(r.stderr_) + "," +
           (r.pass ? "1" : "0") + "," + std::to_string(r.replicas) + "," +
           std::to_string(r.master_seed) + "\n";
    txt += "check " + r.name + "\n  identity: " + r.identity +
           "\n  estimate: " + detail::num(r.estimate) +
           "\n  oracle:   " + detail::num(r.oracle) +
           "\n  bound:    " + detail::num(r.bound) +
           "\n  stderr:   " + detail::num(r.stderr_) +
           "\n  replicas: " + std::to_string(r.replicas) +
           "\n  seed:     " + std::to_string(r.master_seed) +
           "\n  result:   " + (r.pass ? "pass" : "FAIL") + "\n";
    log << (r.pass ? "pass " : "FAIL ") << r.name << "\n";
  }
  detail::atomic_write(std::filesystem::path(cfg.out_dir) / "validation.csv", csv);
  detail::atomic_write(std::filesystem::path(cfg.out_dir) / "validation.txt", txt);
  log << "wrote validation.csv and validation.txt\n";
  return all_pass ? 0 : 1;
}

inline int run(const RunConfig& cfg, std::ostream& log = std::cout) {
  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  switch (cfg.command) {
    case Command::SimulateField: return run_simulate_field(cfg, log);
    case Command::SolvePoisson: return run_solve_poisson(cfg, log);
    case Command::SolveHeat: return run_solve_heat(cfg, log);
    case Command::SolveQuasilinear: return run_solve_quasilinear(cfg, log);
    case Command::Validate: return run_validate(cfg, log);
  }
  return 2;
}

}  // namespace frlevy::cli
