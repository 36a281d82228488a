#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/chaos.hpp"
#include "frlevy/fracops.hpp"
#include "frlevy/grid.hpp"
#include "frlevy/levy.hpp"
#include "frlevy/quadrature.hpp"

namespace frlevy {

namespace kernels {

// Moving-average kernel of the field along one axis at corner t:
//   k_t(s) = ((t-s)_+^b - (-s)_+^b) / Gamma(b+1),   support s < t.
inline double ma_kernel(double t, double beta, double s) {
  const double a = t - s > 0 ? std::pow(t - s, beta) : 0.0;
  const double b = -s > 0 ? std::pow(-s, beta) : 0.0;
  return (a - b) / std::tgamma(beta + 1.0);
}

// Exact integral of ma_kernel over [s0, s1] (antiderivative of (c-s)^b is
// -(c-s)^{b+1}/(b+1)).
inline double ma_kernel_integral(double t, double beta, double s0, double s1) {
  auto anti = [&](double c, double s) {
    return c - s > 0 ? -std::pow(c - s, beta + 1.0) / (beta + 1.0) : 0.0;
  };
  const double g = std::tgamma(beta + 1.0);
  return ((anti(t, s1) - anti(t, s0)) - (anti(0.0, s1) - anti(0.0, s0))) / g;
}

// Increment kernel of the field over one cell [a,b] along one axis:
//   k_[a,b](u) = ((b-u)_+^b - (a-u)_+^b) / Gamma(b+1),  support u < b.
// This is ma_kernel with corners a and b; spelled out for the solvers.
inline double increment_kernel(double a, double b, double beta, double u) {
  const double hi = b - u > 0 ? std::pow(b - u, beta) : 0.0;
  const double lo = a - u > 0 ? std::pow(a - u, beta) : 0.0;
  return (hi - lo) / std::tgamma(beta + 1.0);
}

inline double increment_kernel_integral(double a, double b, double beta,
                                        double u0, double u1) {
  auto anti = [&](double c, double u) {
    return c - u > 0 ? -std::pow(c - u, beta + 1.0) / (beta + 1.0) : 0.0;
  };
  const double g = std::tgamma(beta + 1.0);
  return ((anti(b, u1) - anti(b, u0)) - (anti(a, u1) - anti(a, u0))) / g;
}

// int_{lo}^{min(b,d,hi)} k_[a,b](u) k_[c,d](u) du by panelled Gauss rules with
// grading towards the kernels' corners, where the integrand has unbounded
// derivatives.
inline double increment_gram(double a, double b, double c, double d,
                             double beta, double lo, double hi,
                             int panels_per_piece = 24) {
  const double up = std::min({b, d, hi});
  if (!(up > lo)) return 0.0;
  auto f = [&](double u) {
    return increment_kernel(a, b, beta, u) * increment_kernel(c, d, beta, u);
  };
  // Split at every corner inside the range; grade towards the right end of
  // each piece (the kernels' power singularities sit at u = a,b,c,d).
  std::vector<double> cuts{lo, up};
  for (double x : {a, b, c, d})
    if (x > lo && x < up) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i])
      s += gauss_graded_upper(f, cuts[i], cuts[i + 1], panels_per_piece);
  return s;
}

}  // namespace kernels

struct FieldOptions {
  double tail_tolerance = 1e-4;  // admissible neglected L2 kernel mass fraction
};

// The box-indicator image under the minus-type fractional integral: the
// deterministic kernel whose noise pairing is the field value at corner t.
struct FieldKernel {
  BetaVector beta;
  std::vector<double> t;
  GridFunction kernel;        // closed-form values at source cell centers
  double tail_fraction;       // neglected L2 mass outside the source box
  double past_truncation;
};

namespace detail {

// L2 mass of the one-axis kernel over [lo, t] and an upper bound for the
// neglected tail mass int_{-inf}^{lo} k^2 (k(s) <= beta t (-s)^{beta-1} for
// s <= -t).
struct KernelMass {
  double kept;
  double tail_bound;
};

inline KernelMass kernel_mass(double t, double beta, double lo, int panels = 512) {
  KernelMass out{0.0, 0.0};
  if (t <= 0) return out;
  auto k2 = [&](double s) {
    const double v = kernels::ma_kernel(t, beta, s);
    return v * v;
  };
  out.kept = gauss_panels(k2, lo, 0.0, panels) +
             gauss_graded_upper(k2, 0.0, t, 64);
  const double c = beta * t / std::tgamma(beta + 1.0);
  out.tail_bound = c * c * std::pow(-lo, 2.0 * beta - 1.0) / (1.0 - 2.0 * beta);
  return out;
}

}  // namespace detail

// Closed-form field kernel on a source grid reaching T_past into the past.
// Throws when the neglected tail mass fraction exceeds the configured
// tolerance; the message carries the required past reach.
inline FieldKernel field_kernel(const BetaVector& beta, std::span<const double> t,
                                const GridSpec& source, double T_past,
                                FieldOptions opt = {}) {
  const int d = beta.dim();
  if (static_cast<int>(t.size()) != d || source.dim() != d)
    throw std::invalid_argument("field_kernel: dimension mismatch");
  for (int k = 0; k < d; ++k) {
    if (t[k] < 0) throw std::invalid_argument("field_kernel: t must be >= 0");
    if (source.lower(k) > -T_past + 1e-12 && t[k] > 0)
      throw std::invalid_argument("field_kernel: source grid does not reach T_past");
  }
  double tail_fraction = 0.0;
  bool degenerate = false;
  for (int k = 0; k < d; ++k) {
    if (t[k] == 0.0) degenerate = true;
  }
  if (!degenerate) {
    for (int k = 0; k < d; ++k) {
      const auto m = detail::kernel_mass(t[k], beta[k], source.lower(k));
      tail_fraction += m.tail_bound / (m.kept + m.tail_bound);
    }
    if (tail_fraction > opt.tail_tolerance) {
      double t_req = 0.0;
      for (int k = 0; k < d; ++k) {
        const auto m = detail::kernel_mass(t[k], beta[k], source.lower(k));
        const double c = beta[k] * t[k] / std::tgamma(beta[k] + 1.0);
        const double need = std::pow(
            c * c / ((1.0 - 2.0 * beta[k]) * opt.tail_tolerance * m.kept / d),
            1.0 / (1.0 - 2.0 * beta[k]));
        t_req = std::max(t_req, need);
      }
      throw std::runtime_error(
          "field_kernel: neglected tail mass fraction " +
          std::to_string(tail_fraction) + " exceeds tolerance; required past reach ~" +
          std::to_string(t_req));
    }
  }
  GridFunction kf = GridFunction::from_function(source, [&](std::span<const double> s) {
    double v = 1.0;
    for (int k = 0; k < d; ++k) v *= kernels::ma_kernel(t[k], beta[k], s[k]);
    return v;
  });
  return {beta, std::vector<double>(t.begin(), t.end()), std::move(kf),
          tail_fraction, T_past};
}

// The first-chaos kernel of the noise at corner t: per U cell the exact
// space-cell integral of prod_k (t_k-u_k)_+^{beta_k-1}/Gamma(beta_k), times
// the mark.  Values are cell-integrated in u (the pointwise density is not
// square-integrable), so pairings against test functions weight by the mark
// weights only.
struct NoiseKernel {
  BetaVector beta;
  std::vector<double> t;
  std::shared_ptr<const DiscreteU> u;
  std::vector<double> values;

  double s_transform(const TestFunction& xi) const {
    if (xi.u->cell_count() != u->cell_count())
      throw std::invalid_argument("NoiseKernel: mismatched discretizations");
    double s = 0.0;
    for (std::size_t c = 0; c < values.size(); ++c)
      s += values[c] * xi.values[c] * u->mark_weight(c);
    return s;
  }
};

inline NoiseKernel noise_kernel(const BetaVector& beta, std::span<const double> t,
                                std::shared_ptr<const DiscreteU> u) {
  const int d = beta.dim();
  const GridSpec& g = u->base();
  if (static_cast<int>(t.size()) != d || g.dim() != d)
    throw std::invalid_argument("noise_kernel: dimension mismatch");
  NoiseKernel out{beta, std::vector<double>(t.begin(), t.end()), u,
                  std::vector<double>(u->cell_count(), 0.0)};
  // Exact per-axis integrals int_cell (t-u)^{beta-1} du
  //   = ((t-lo)_+^beta - (t-hi)_+^beta)/beta, divided by Gamma(beta).
  std::vector<int> idx(static_cast<std::size_t>(d));
  auto pw = [](double v, double b) { return v > 0 ? std::pow(v, b) : 0.0; };
  for (std::int64_t sc = 0; sc < g.cell_count(); ++sc) {
    g.unflatten(sc, idx);
    double space = 1.0;
    for (int k = 0; k < d; ++k) {
      const double lo = g.edge(k, idx[k]), hi = g.edge(k, idx[k] + 1);
      space *= (pw(t[k] - lo, beta[k]) - pw(t[k] - hi, beta[k])) /
               (beta[k] * beta.gamma(k));
    }
    for (int j = 0; j < u->mark_count(); ++j) {
      const std::size_t uc =
          static_cast<std::size_t>(sc) * u->mark_count() + j;
      out.values[uc] = u->mark(uc) * space;
    }
  }
  return out;
}

// One shared noise realization, many evaluation corners.
struct FieldRealization {
  std::vector<std::vector<double>> eval_points;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

// X_t = sum_jumps k_t(location) * mark - b1 * int_box k_t, with the exact
// closed-form kernel at exact jump locations.  All corners share one
// realization so increments carry the correct joint law.
inline FieldRealization sample_field(const LevyModel& model,
                                     const BetaVector& beta,
                                     const std::vector<std::vector<double>>& eval_points,
                                     const GridSpec& source, std::uint64_t seed) {
  const int d = beta.dim();
  if (source.dim() != d)
    throw std::invalid_argument("sample_field: source grid dimension mismatch");
  for (const auto& t : eval_points) {
    if (static_cast<int>(t.size()) != d)
      throw std::invalid_argument("sample_field: eval point dimension mismatch");
    for (int k = 0; k < d; ++k)
      if (t[k] > source.upper(k) + 1e-12)
        throw std::invalid_argument("sample_field: eval point beyond source box");
  }
  const NoiseRealization noise = sample_noise_grid(model, source, seed);
  FieldRealization out{eval_points, std::vector<double>(eval_points.size(), 0.0), seed};
  for (std::size_t p = 0; p < eval_points.size(); ++p) {
    const auto& t = eval_points[p];
    bool zero = false;
    for (int k = 0; k < d; ++k) zero = zero || t[k] == 0.0;
    if (zero) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j < noise.jump_count(); ++j) {
      const auto loc = noise.jump_location(j);
      double kv = 1.0;
      for (int k = 0; k < d && kv != 0.0; ++k)
        kv *= kernels::ma_kernel(t[k], beta[k], loc[k]);
      acc += kv * noise.jump_marks[j];
    }
    double comp = model.first_moment();
    for (int k = 0; k < d; ++k)
      comp *= kernels::ma_kernel_integral(t[k], beta[k], source.lower(k),
                                          source.upper(k));
    out.values[p] = acc - comp;
  }
  return out;
}

// Cov(X_t, X_s) = m2 * prod_k int k_{t_k} k_{s_k} du over the same truncated
// range the sampler uses.  High-resolution quadrature of the closed forms;
// `panels` controls the resolution.
inline double covariance_oracle(const LevyModel& model, const BetaVector& beta,
                                std::span<const double> t, std::span<const double> s,
                                std::span<const double> source_lower,
                                int panels = 512) {
  const int d = beta.dim();
  if (static_cast<int>(t.size()) != d || static_cast<int>(s.size()) != d ||
      static_cast<int>(source_lower.size()) != d)
    throw std::invalid_argument("covariance_oracle: dimension mismatch");
  double prod = model.second_moment();
  for (int k = 0; k < d; ++k) {
    if (t[k] == 0.0 || s[k] == 0.0) return 0.0;
    const double up = std::min(t[k], s[k]);
    auto f = [&](double x) {
      return kernels::ma_kernel(t[k], beta[k], x) *
             kernels::ma_kernel(s[k], beta[k], x);
    };
    // both pieces are graded into their singular corner (u = 0 resp. u = up)
    double axis = gauss_graded_upper(f, source_lower[k], 0.0, panels / 2);
    axis += gauss_graded_upper(f, 0.0, up, panels / 2);
    prod *= axis;
  }
  return prod;
}

// S X_t(xi) = int int y xi(s,y) k_t(s) nu(dy) ds with the exact cell
// integral of the closed-form kernel against the piecewise-constant xi.
inline double s_transform_field(const BetaVector& beta, std::span<const double> t,
                                const TestFunction& xi) {
  const auto& u = *xi.u;
  const GridSpec& g = u.base();
  const int d = beta.dim();
  if (g.dim() != d || static_cast<int>(t.size()) != d)
    throw std::invalid_argument("s_transform_field: dimension mismatch");
  std::vector<int> idx(static_cast<std::size_t>(d));
  double total = 0.0;
  for (std::int64_t sc = 0; sc < g.cell_count(); ++sc) {
    g.unflatten(sc, idx);
    double cell_int = 1.0;
    for (int k = 0; k < d && cell_int != 0.0; ++k)
      cell_int *= kernels::ma_kernel_integral(t[k], beta[k], g.edge(k, idx[k]),
                                              g.edge(k, idx[k] + 1));
    if (cell_int == 0.0) continue;
    double marks = 0.0;
    for (int j = 0; j < u.mark_count(); ++j) {
      const std::size_t uc = static_cast<std::size_t>(sc) * u.mark_count() + j;
      marks += u.mark(uc) * u.mark_weight(uc) * xi.values[uc];
    }
    total += cell_int * marks;
  }
  return total;
}

}  // namespace frlevy
