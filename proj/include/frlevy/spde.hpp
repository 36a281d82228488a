#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/field.hpp"
#include "frlevy/grid.hpp"
#include "frlevy/levy.hpp"
#include "frlevy/spectral.hpp"

namespace frlevy {

// Dirichlet box for the elliptic/parabolic problems.  For the quasi-linear
// problem the box stands in for the whole space and must be large enough
// that the heat kernel mass escaping it over [0, horizon] is negligible.
struct DomainSpec {
  GridSpec box;
  double horizon = 0.0;  // 0 for time-independent problems
  int time_steps = 0;

  DomainSpec(GridSpec b, double T = 0.0, int steps = 0)
      : box(std::move(b)), horizon(T), time_steps(steps) {
    for (int k = 0; k < box.dim(); ++k)
      if (box.cells(k) < 8)
        throw std::invalid_argument("DomainSpec: need >= 8 cells per axis");
    if (horizon > 0 && time_steps < 1)
      throw std::invalid_argument("DomainSpec: time-dependent problem needs steps");
    if (horizon < 0) throw std::invalid_argument("DomainSpec: negative horizon");
  }
  double dt() const { return time_steps > 0 ? horizon / time_steps : 0.0; }
};

// L2 solvability of the linear heat equation: 2 b0 + sum b_i + 1 > d/2.
inline bool heat_l2_condition(double beta0, std::span<const double> beta) {
  double s = 2.0 * beta0 + 1.0;
  for (double b : beta) s += b;
  return s > 0.5 * static_cast<double>(beta.size());
}

// Contractivity range of the quasi-linear fixed point: b_i > 1/2 - 1/d.
inline bool picard_condition(std::span<const double> beta) {
  const double bound = 0.5 - 1.0 / static_cast<double>(beta.size());
  for (double b : beta)
    if (!(b > bound)) return false;
  return true;
}

enum class GreenKind { DirichletLaplacian, HeatSemigroup };

// Green data of -Laplace (or of the heat operator) on the Dirichlet box:
// continuum sine series for pointwise values, discrete spectral solve for
// grid right-hand sides.  G(x,y) = G(y,x) by construction and the discrete
// inverse is positivity preserving.
class GreenOperator {
 public:
  GreenOperator(GreenKind kind, DomainSpec domain)
      : kind_(kind), domain_(std::move(domain)), spectral_(domain_.box),
        lambda_(spectral_.laplace_eigenvalues()) {}

  GreenKind kind() const { return kind_; }
  const DomainSpec& domain() const { return domain_; }
  const SpectralBox& spectral() const { return spectral_; }

  // Continuum series value of the Green function of -Laplace (one axis only;
  // the multi-axis series is not absolutely convergent pointwise).
  double value(double x, double y, double tol = 1e-6,
               int max_terms = 8'000'000) const {
    if (domain_.box.dim() != 1)
      throw std::invalid_argument("GreenOperator::value: series evaluation is 1-d");
    const double L = domain_.box.length(0);
    const double xr = x - domain_.box.lower(0), yr = y - domain_.box.lower(0);
    const int required = static_cast<int>(std::ceil(2.0 * L / (M_PI * M_PI * tol)));
    if (required > max_terms)
      throw std::runtime_error(
          "GreenOperator::value: cutoff too small for tolerance; need about " +
          std::to_string(required) + " terms");
    double s = 0.0;
    for (int m = required; m >= 1; --m) {  // small terms first
      const double lam = m * M_PI / L;
      s += 2.0 / L * std::sin(lam * xr) * std::sin(lam * yr) / (lam * lam);
    }
    return s;
  }

  // Solve -Laplace u = rhs with zero boundary values (exact discrete solve).
  GridFunction solve(const GridFunction& rhs) const {
    auto modes = spectral_.to_modes(rhs.values);
    for (std::size_t m = 0; m < modes.size(); ++m) modes[m] /= lambda_[m];
    return GridFunction(domain_.box, spectral_.to_cells(modes));
  }

  // Apply the semigroup e^{(t/2) Laplace} (HeatSemigroup kind).
  GridFunction heat_apply(const GridFunction& u0, double t) const {
    if (kind_ != GreenKind::HeatSemigroup)
      throw std::logic_error("GreenOperator::heat_apply: wrong kind");
    if (t < 0) throw std::invalid_argument("heat_apply: negative time");
    auto modes = spectral_.to_modes(u0.values);
    for (std::size_t m = 0; m < modes.size(); ++m)
      modes[m] *= std::exp(-0.5 * lambda_[m] * t);
    return GridFunction(domain_.box, spectral_.to_cells(modes));
  }

 private:
  GreenKind kind_;
  DomainSpec domain_;
  SpectralBox spectral_;
  std::vector<double> lambda_;
};

inline GreenOperator green_dirichlet(const DomainSpec& d) {
  return GreenOperator(GreenKind::DirichletLaplacian, d);
}

inline GreenOperator green_heat(const DomainSpec& d) {
  return GreenOperator(GreenKind::HeatSemigroup, d);
}

// Solution of the elliptic problem on the box, with the mode coefficients
// kept so values at off-lattice probes come from the sine interpolant.
struct PoissonSolution {
  DomainSpec domain;
  GridFunction u;
  std::vector<double> modes;
  double residual_inf = 0.0;  // max |Laplace_h u + forcing|

  double value_at(std::span<const double> x) const {
    SpectralBox sp(domain.box);
    const auto shapes = sp.modes_at(x);
    double s = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) s += modes[m] * shapes[m];
    return s;
  }
};

namespace detail {

// Cell-averaged realization of the d-parameter fractional noise on the
// domain box, from the exact jump locations:
//   F(c) = [ sum_j mark_j prod_k k_cell(u_jk) - b1 prod_k int k_cell ] / V_c.
inline std::vector<double> fractional_noise_cells(const NoiseRealization& noise,
                                                  const BetaVector& beta,
                                                  const GridSpec& box) {
  const int d = box.dim();
  if (noise.grid.dim() != d)
    throw std::invalid_argument("fractional noise: dimension mismatch");
  std::vector<double> F(static_cast<std::size_t>(box.cell_count()), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d));
  // per-axis kernel values for one jump, cached per axis/cell
  std::vector<std::vector<double>> kax(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    kax[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(box.cells(k)));
  for (std::size_t j = 0; j < noise.jump_count(); ++j) {
    const auto loc = noise.jump_location(j);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < box.cells(k); ++i)
        kax[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
            kernels::increment_kernel(box.edge(k, i), box.edge(k, i + 1),
                                      beta[k], loc[k]);
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      double v = noise.jump_marks[j];
      for (int k = 0; k < d && v != 0.0; ++k)
        v *= kax[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[k])];
      F[static_cast<std::size_t>(c)] += v;
    }
  }
  // compensator
  const double b1 = noise.compensator_first_moment;
  if (b1 != 0.0) {
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      double v = b1;
      for (int k = 0; k < d; ++k)
        v *= kernels::increment_kernel_integral(
            box.edge(k, idx[k]), box.edge(k, idx[k] + 1), beta[k],
            noise.grid.lower(k), noise.grid.upper(k));
      F[static_cast<std::size_t>(c)] -= v;
    }
  }
  const double vol = box.cell_volume();
  for (double& v : F) v /= vol;
  return F;
}

// Spectral solve of -Laplace u = F with one round of iterative refinement:
// the raw mode division leaves a roundoff residual amplified by the largest
// eigenvalue, refinement brings it down to the evaluation floor.
inline PoissonSolution spectral_elliptic_solve(std::vector<double> F,
                                               const DomainSpec& domain) {
  SpectralBox sp(domain.box);
  const auto lam = sp.laplace_eigenvalues();
  auto solve_once = [&](const std::vector<double>& rhs) {
    auto m = sp.to_modes(rhs);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] /= lam[i];
    return m;
  };
  auto modes = solve_once(F);
  auto u = sp.to_cells(modes);
  for (int pass = 0; pass < 2; ++pass) {
    const auto lap = sp.apply_laplacian(u);
    std::vector<double> r(F.size());
    for (std::size_t c = 0; c < F.size(); ++c) r[c] = F[c] + lap[c];
    const auto dm = solve_once(r);
    for (std::size_t i = 0; i < modes.size(); ++i) modes[i] += dm[i];
    const auto du = sp.to_cells(dm);
    for (std::size_t c = 0; c < u.size(); ++c) u[c] += du[c];
  }
  const auto lap = sp.apply_laplacian(u);
  double res = 0.0;
  for (std::size_t c = 0; c < F.size(); ++c)
    res = std::max(res, std::abs(lap[c] + F[c]));
  return {domain, GridFunction(domain.box, std::move(u)), std::move(modes), res};
}

}  // namespace detail

// Elliptic solve against a realized fractional noise: Laplace u = -noise on
// the box, zero boundary.
inline PoissonSolution solve_poisson(const NoiseRealization& noise,
                                     const BetaVector& beta,
                                     const DomainSpec& domain) {
  return detail::spectral_elliptic_solve(
      detail::fractional_noise_cells(noise, beta, domain.box), domain);
}

// Same solve for a deterministic right-hand side (Laplace u = -g).
template <class G>
inline PoissonSolution solve_poisson_deterministic(G&& g, const DomainSpec& domain) {
  GridFunction rhs = GridFunction::from_function(domain.box, std::forward<G>(g));
  return detail::spectral_elliptic_solve(rhs.values, domain);
}

// Time-stepped mild solution of du/dt = (1/2) Laplace u + forcing with zero
// boundary and initial data, by the per-mode exact exponential integrator for
// forcing held constant over each step (unconditionally stable).
struct HeatSolution {
  DomainSpec domain;
  std::vector<double> times;                 // size steps+1
  std::vector<std::vector<double>> slices;   // cell values per time
  std::vector<std::vector<double>> mode_slices;

  double value_at(int step, std::span<const double> x) const {
    SpectralBox sp(domain.box);
    const auto shapes = sp.modes_at(x);
    const auto& m = mode_slices[static_cast<std::size_t>(step)];
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * shapes[i];
    return s;
  }
};

namespace detail {

// Shared stepping core: forcing(m) supplies the cell array for step m.
template <class ForcingAt>
HeatSolution heat_evolve(const DomainSpec& domain, ForcingAt&& forcing_at,
                         const std::vector<double>* u0_cells) {
  if (!(domain.horizon > 0) || domain.time_steps < 1)
    throw std::invalid_argument("solve_heat: needs horizon > 0 and time steps");
  const double dt = domain.dt();
  if (!(dt > 0) || !std::isfinite(dt))
    throw std::runtime_error("solve_heat: stability violation at step size " +
                             std::to_string(dt));
  SpectralBox sp(domain.box);
  const auto lam = sp.laplace_eigenvalues();
  const std::size_t nc = lam.size();
  std::vector<double> decay(nc), gain(nc);
  for (std::size_t m = 0; m < nc; ++m) {
    decay[m] = std::exp(-0.5 * lam[m] * dt);
    gain[m] = (1.0 - decay[m]) / (0.5 * lam[m]);
  }
  HeatSolution out{domain, {}, {}, {}};
  std::vector<double> modes(nc, 0.0);
  if (u0_cells) modes = sp.to_modes(*u0_cells);
  out.times.push_back(0.0);
  out.mode_slices.push_back(modes);
  out.slices.push_back(u0_cells ? *u0_cells : std::vector<double>(nc, 0.0));
  for (int step = 0; step < domain.time_steps; ++step) {
    const auto fmodes = sp.to_modes(forcing_at(step));
    for (std::size_t m = 0; m < nc; ++m)
      modes[m] = decay[m] * modes[m] + gain[m] * fmodes[m];
    out.times.push_back((step + 1) * dt);
    out.mode_slices.push_back(modes);
    out.slices.push_back(sp.to_cells(modes));
  }
  return out;
}

// Cell averages of the (1+d)-parameter fractional noise over the time-space
// lattice of the domain, one realization.  Layout: step index slowest, then
// the space cells row-major.
inline std::vector<double> fractional_forcing(const NoiseRealization& noise,
                                              double beta0,
                                              const BetaVector& beta,
                                              const DomainSpec& domain) {
  const int d = domain.box.dim();
  if (noise.grid.dim() != d + 1)
    throw std::invalid_argument("fractional_forcing: noise must be (1+d)-dimensional");
  const int M = domain.time_steps;
  const double dt = domain.dt();
  const GridSpec& box = domain.box;
  const std::size_t nc = static_cast<std::size_t>(box.cell_count());
  std::vector<double> F(static_cast<std::size_t>(M) * nc, 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::vector<double> kt(static_cast<std::size_t>(M));
  std::vector<std::vector<double>> kx(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    kx[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(box.cells(k)));
  for (std::size_t j = 0; j < noise.jump_count(); ++j) {
    const auto loc = noise.jump_location(j);  // loc[0] = time
    for (int m = 0; m < M; ++m)
      kt[static_cast<std::size_t>(m)] =
          kernels::increment_kernel(m * dt, (m + 1) * dt, beta0, loc[0]);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < box.cells(k); ++i)
        kx[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
            kernels::increment_kernel(box.edge(k, i), box.edge(k, i + 1),
                                      beta[k], loc[1 + k]);
    for (std::int64_t c = 0; c < box.cell_count(); ++c) {
      box.unflatten(c, idx);
      double space = noise.jump_marks[j];
      for (int k = 0; k < d && space != 0.0; ++k)
        space *= kx[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[k])];
      if (space == 0.0) continue;
      for (int m = 0; m < M; ++m)
        F[static_cast<std::size_t>(m) * nc + static_cast<std::size_t>(c)] +=
            kt[static_cast<std::size_t>(m)] * space;
    }
  }
  const double b1 = noise.compensator_first_moment;
  if (b1 != 0.0) {
    for (int m = 0; m < M; ++m) {
      const double it = kernels::increment_kernel_integral(
          m * dt, (m + 1) * dt, beta0, noise.grid.lower(0), noise.grid.upper(0));
      for (std::int64_t c = 0; c < box.cell_count(); ++c) {
        box.unflatten(c, idx);
        double v = b1 * it;
        for (int k = 0; k < d; ++k)
          v *= kernels::increment_kernel_integral(
              box.edge(k, idx[k]), box.edge(k, idx[k] + 1), beta[k],
              noise.grid.lower(1 + k), noise.grid.upper(1 + k));
        F[static_cast<std::size_t>(m) * nc + static_cast<std::size_t>(c)] -= v;
      }
    }
  }
  const double scale = 1.0 / (dt * box.cell_volume());
  for (double& v : F) v *= scale;
  return F;
}

}  // namespace detail

inline HeatSolution solve_heat(const NoiseRealization& noise, double beta0,
                               const BetaVector& beta, const DomainSpec& domain) {
  auto F = detail::fractional_forcing(noise, beta0, beta, domain);
  const std::size_t nc = static_cast<std::size_t>(domain.box.cell_count());
  return detail::heat_evolve(
      domain,
      [&](int step) {
        return std::vector<double>(F.begin() + step * static_cast<std::ptrdiff_t>(nc),
                                   F.begin() + (step + 1) * static_cast<std::ptrdiff_t>(nc));
      },
      nullptr);
}

// Deterministic forcing f(t, x), sampled at step midpoints and cell centers.
template <class F>
inline HeatSolution solve_heat_deterministic(F&& f, const DomainSpec& domain) {
  const double dt = domain.dt();
  return detail::heat_evolve(
      domain,
      [&](int step) {
        const double tm = (step + 0.5) * dt;
        GridFunction g = GridFunction::from_function(
            domain.box,
            [&](std::span<const double> x) { return f(tm, x); });
        return g.values;
      },
      nullptr);
}

// ---------------------------------------------------------------------------
// First-chaos variance oracles for the stochastic solvers.  Both solvers are
// linear in the jump measure, so the probe value is sum_j mark_j Phi(loc_j)
// minus its compensator and
//   Var = m2 * int Phi^2 d(Lebesgue)
// with Phi a known combination of increment kernels.  The integral factorizes
// into per-axis Gram matrices of cell kernels contracted with the probe
// weights, evaluated here by panelled quadrature.

namespace detail {

inline std::vector<double> analysis_transpose(const SineAxis& ax) {
  const int n = ax.size();
  std::vector<double> tr(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      tr[static_cast<std::size_t>(i) * n + k] =
          ax.analysis()[static_cast<std::size_t>(k) * n + i];
  return tr;
}

// Weights W(c) with value_at(probe) = sum_c W(c) F(c) for the elliptic solve.
inline std::vector<double> poisson_probe_weights(const DomainSpec& domain,
                                                 std::span<const double> probe) {
  SpectralBox sp(domain.box);
  const auto lam = sp.laplace_eigenvalues();
  auto shapes = sp.modes_at(probe);
  for (std::size_t m = 0; m < shapes.size(); ++m) shapes[m] /= lam[m];
  // W(c) = sum_k shapes_k nu_k S_k(c): one analysis-transpose pass per axis.
  std::vector<double> W = shapes;
  for (int k = 0; k < domain.box.dim(); ++k)
    W = detail::apply_axis(domain.box, k, analysis_transpose(sp.axis(k)), W);
  return W;
}

// Per-axis Gram matrix of the cell increment kernels over [src_lo, src_hi].
inline std::vector<double> cell_gram(double lo_edge, double width, int n,
                                     double beta, double src_lo, double src_hi) {
  std::vector<double> G(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = kernels::increment_gram(
          lo_edge + i * width, lo_edge + (i + 1) * width,
          lo_edge + j * width, lo_edge + (j + 1) * width, beta, src_lo, src_hi);
      G[static_cast<std::size_t>(i) * n + j] = v;
      G[static_cast<std::size_t>(j) * n + i] = v;
    }
  return G;
}

}  // namespace detail

// Var U(probe) for the elliptic solve driven by the model's noise sampled on
// `source`.
inline double poisson_variance_oracle(const LevyModel& model,
                                      const BetaVector& beta,
                                      const DomainSpec& domain,
                                      std::span<const double> probe,
                                      const GridSpec& source) {
  const GridSpec& box = domain.box;
  auto W = detail::poisson_probe_weights(domain, probe);
  const double inv_vol = 1.0 / box.cell_volume();
  for (double& w : W) w *= inv_vol;
  std::vector<double> B = W;
  for (int k = 0; k < box.dim(); ++k) {
    auto G = detail::cell_gram(box.lower(k), box.width(k), box.cells(k), beta[k],
                               source.lower(k), source.upper(k));
    B = detail::apply_axis(box, k, G, B);
  }
  double v = 0.0;
  for (std::size_t c = 0; c < W.size(); ++c) v += W[c] * B[c];
  return model.second_moment() * v;
}

// Weights A(m,c) with U(horizon, probe) = sum A(m,c) F(m,c) for the heat
// solver's piecewise-constant-forcing integrator.
inline std::vector<double> heat_probe_weights(const DomainSpec& domain,
                                              std::span<const double> probe) {
  SpectralBox sp(domain.box);
  const auto lam = sp.laplace_eigenvalues();
  const std::size_t nc = lam.size();
  const int M = domain.time_steps;
  const double dt = domain.dt();
  const auto shapes = sp.modes_at(probe);
  std::vector<double> decay(nc), gain(nc);
  for (std::size_t m = 0; m < nc; ++m) {
    decay[m] = std::exp(-0.5 * lam[m] * dt);
    gain[m] = (1.0 - decay[m]) / (0.5 * lam[m]);
  }
  std::vector<std::vector<double>> tr;
  for (int k = 0; k < domain.box.dim(); ++k)
    tr.push_back(detail::analysis_transpose(sp.axis(k)));
  std::vector<double> A(static_cast<std::size_t>(M) * nc);
  std::vector<double> cur(nc);  // shapes * gain * decay^{M-1-m}
  for (std::size_t i = 0; i < nc; ++i) cur[i] = shapes[i] * gain[i];
  for (int m = M - 1; m >= 0; --m) {
    // analysis transpose per axis turns mode weights into cell weights
    std::vector<double> W = cur;
    for (int k = 0; k < domain.box.dim(); ++k)
      W = detail::apply_axis(domain.box, k, tr[static_cast<std::size_t>(k)], W);
    std::copy(W.begin(), W.end(), A.begin() + m * static_cast<std::ptrdiff_t>(nc));
    if (m > 0)
      for (std::size_t i = 0; i < nc; ++i) cur[i] *= decay[i];
  }
  return A;
}

// Var U(horizon, probe) for the linear heat solve; `source` is the (1+d)-dim
// box the noise is sampled on.
inline double heat_variance_oracle(const LevyModel& model, double beta0,
                                   const BetaVector& beta,
                                   const DomainSpec& domain,
                                   std::span<const double> probe,
                                   const GridSpec& source) {
  const GridSpec& box = domain.box;
  const int d = box.dim();
  const int M = domain.time_steps;
  const double dt = domain.dt();
  auto A = heat_probe_weights(domain, probe);
  const double scale = 1.0 / (dt * box.cell_volume());
  for (double& a : A) a *= scale;
  // time-space lattice for the contraction
  std::vector<double> lo{0.0}, up{domain.horizon};
  std::vector<int> cells{M};
  for (int k = 0; k < d; ++k) {
    lo.push_back(box.lower(k));
    up.push_back(box.upper(k));
    cells.push_back(box.cells(k));
  }
  GridSpec lattice(lo, up, cells);
  std::vector<double> B = A;
  {
    auto Gt = detail::cell_gram(0.0, dt, M, beta0, source.lower(0), source.upper(0));
    B = detail::apply_axis(lattice, 0, Gt, B);
  }
  for (int k = 0; k < d; ++k) {
    auto G = detail::cell_gram(box.lower(k), box.width(k), box.cells(k), beta[k],
                               source.lower(1 + k), source.upper(1 + k));
    B = detail::apply_axis(lattice, 1 + k, G, B);
  }
  double v = 0.0;
  for (std::size_t c = 0; c < A.size(); ++c) v += A[c] * B[c];
  return model.second_moment() * v;
}

// ---------------------------------------------------------------------------
// Quasi-linear problem.

struct Nonlinearity {
  std::function<double(double)> f;
  double lipschitz = 0.0;
  double growth = 0.0;
  std::string name;
};

struct LipschitzReport {
  double L_observed = 0.0;
  double C_observed = 0.0;
  bool pass = false;
};

// Empirical check of |f(x)-f(y)| <= L|x-y| and |f(x)| <= C(1+|x|) on a probe
// range.
inline LipschitzReport lipschitz_check(const Nonlinearity& f, double lo,
                                       double hi, int n_probes) {
  if (n_probes < 2) throw std::invalid_argument("lipschitz_check: need >= 2 probes");
  std::vector<double> x(static_cast<std::size_t>(n_probes)), fx(x.size());
  for (int i = 0; i < n_probes; ++i) {
    x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_probes - 1);
    fx[static_cast<std::size_t>(i)] = f.f(x[static_cast<std::size_t>(i)]);
  }
  LipschitzReport r;
  for (int i = 0; i < n_probes; ++i) {
    r.C_observed = std::max(r.C_observed,
                            std::abs(fx[static_cast<std::size_t>(i)]) /
                                (1.0 + std::abs(x[static_cast<std::size_t>(i)])));
    for (int j = i + 1; j < n_probes; ++j)
      r.L_observed = std::max(
          r.L_observed, std::abs(fx[static_cast<std::size_t>(i)] -
                                 fx[static_cast<std::size_t>(j)]) /
                            std::abs(x[static_cast<std::size_t>(i)] -
                                     x[static_cast<std::size_t>(j)]));
  }
  r.pass = r.L_observed <= f.lipschitz * (1.0 + 1e-9) + 1e-12 &&
           r.C_observed <= f.growth * (1.0 + 1e-9) + 1e-12;
  return r;
}

struct PicardReport {
  std::vector<double> diffs;  // sup-norm of successive iterates
  double horizon = 0.0;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;
  bool condition_ok = true;
};

struct PicardConvergenceError : std::runtime_error {
  std::vector<double> diffs;
  explicit PicardConvergenceError(std::string msg, std::vector<double> d)
      : std::runtime_error(std::move(msg)), diffs(std::move(d)) {}
};

struct QuasilinearOptions {
  double tol = 1e-8;
  int max_iter = 25;
  std::uint64_t seed = 1;
  double past_time = 2.0;
  double past_space = 2.0;
  bool allow_condition_violation = false;
  int lipschitz_probes = 512;
  double lipschitz_range = 50.0;
};

struct QuasilinearResult {
  HeatSolution solution;
  PicardReport report;
};

// Picard iteration for du/dt = (1/2) Laplace u + f(u) + noise on the box:
//   U_{j+1}(t) = S_t U0 + int_0^t S_{t-s} f(U_j(s)) ds + V(t)
// with the stochastic convolution V computed once per realization and reused
// across iterations.
inline QuasilinearResult solve_quasilinear(const Nonlinearity& f,
                                           const GridFunction& u0,
                                           const LevyModel& model, double beta0,
                                           const BetaVector& beta,
                                           const DomainSpec& domain,
                                           QuasilinearOptions opt = {}) {
  if (!(u0.grid == domain.box))
    throw std::invalid_argument("solve_quasilinear: u0 grid must match the box");
  const bool cond = picard_condition(beta.values());
  if (!cond && !opt.allow_condition_violation)
    throw std::invalid_argument(
        "solve_quasilinear: picard condition violated (needs beta_i > 1/2 - 1/d)");
  {
    const auto lr = lipschitz_check(f, -opt.lipschitz_range, opt.lipschitz_range,
                                    opt.lipschitz_probes);
    if (!lr.pass)
      throw std::invalid_argument(
          "solve_quasilinear: nonlinearity fails its declared Lipschitz/growth "
          "bounds (L_observed=" + std::to_string(lr.L_observed) +
          ", C_observed=" + std::to_string(lr.C_observed) + ")");
  }
  const int d = domain.box.dim();
  const int M = domain.time_steps;
  const double dt = domain.dt();
  const std::size_t nc = static_cast<std::size_t>(domain.box.cell_count());

  // stochastic convolution, one realization
  std::vector<double> lo{-opt.past_time}, up{domain.horizon};
  std::vector<int> cells{4};
  for (int k = 0; k < d; ++k) {
    lo.push_back(domain.box.lower(k) - opt.past_space);
    up.push_back(domain.box.upper(k));
    cells.push_back(4);
  }
  GridSpec source(lo, up, cells);
  const auto noise = sample_noise_grid(model, source, opt.seed);
  const HeatSolution V = solve_heat(noise, beta0, beta, domain);

  SpectralBox sp(domain.box);
  const auto lam = sp.laplace_eigenvalues();
  std::vector<double> decay(nc), gain(nc);
  for (std::size_t m = 0; m < nc; ++m) {
    decay[m] = std::exp(-0.5 * lam[m] * dt);
    gain[m] = (1.0 - decay[m]) / (0.5 * lam[m]);
  }
  // semigroup applied to u0, all time slices
  const auto u0_modes = sp.to_modes(u0.values);
  std::vector<std::vector<double>> su0(static_cast<std::size_t>(M) + 1);
  {
    std::vector<double> cur = u0_modes;
    su0[0] = sp.to_cells(cur);
    for (int m = 1; m <= M; ++m) {
      for (std::size_t i = 0; i < nc; ++i) cur[i] *= decay[i];
      su0[static_cast<std::size_t>(m)] = sp.to_cells(cur);
    }
  }

  // iterate full trajectories
  std::vector<std::vector<double>> U(static_cast<std::size_t>(M) + 1,
                                     u0.values);  // U_0(t,x) = U_0(x)
  PicardReport report;
  report.horizon = domain.horizon;
  report.tol = opt.tol;
  report.condition_ok = cond;
  std::vector<std::vector<double>> next(static_cast<std::size_t>(M) + 1);
  for (int it = 1; it <= opt.max_iter; ++it) {
    std::vector<double> modes(nc, 0.0);
    next[0] = su0[0];
    for (std::size_t c = 0; c < nc; ++c)
      next[0][c] += V.slices[0][c];
    for (int m = 0; m < M; ++m) {
      std::vector<double> fu(nc);
      for (std::size_t c = 0; c < nc; ++c)
        fu[c] = f.f(U[static_cast<std::size_t>(m)][c]);
      const auto fmodes = sp.to_modes(fu);
      for (std::size_t i = 0; i < nc; ++i)
        modes[i] = decay[i] * modes[i] + gain[i] * fmodes[i];
      auto cells_m = sp.to_cells(modes);
      next[static_cast<std::size_t>(m) + 1] = su0[static_cast<std::size_t>(m) + 1];
      for (std::size_t c = 0; c < nc; ++c)
        next[static_cast<std::size_t>(m) + 1][c] +=
            cells_m[c] + V.slices[static_cast<std::size_t>(m) + 1][c];
    }
    double diff = 0.0;
    for (std::size_t m = 0; m < next.size(); ++m)
      for (std::size_t c = 0; c < nc; ++c)
        diff = std::max(diff, std::abs(next[m][c] - U[m][c]));
    report.diffs.push_back(diff);
    U.swap(next);
    report.iterations = it;
    if (diff <= opt.tol) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged)
    throw PicardConvergenceError(
        "solve_quasilinear: no convergence within max_iter", report.diffs);

  HeatSolution sol{domain, {}, {}, {}};
  for (int m = 0; m <= M; ++m) {
    sol.times.push_back(m * dt);
    sol.slices.push_back(U[static_cast<std::size_t>(m)]);
    sol.mode_slices.push_back(sp.to_modes(U[static_cast<std::size_t>(m)]));
  }
  return {std::move(sol), std::move(report)};
}

}  // namespace frlevy
