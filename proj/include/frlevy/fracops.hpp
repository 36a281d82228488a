#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/grid.hpp"

namespace frlevy {

// Anisotropy exponents: one beta per axis, each strictly inside (0, 1/2).
class BetaVector {
 public:
  explicit BetaVector(std::vector<double> beta) : beta_(std::move(beta)) {
    if (beta_.empty()) throw std::invalid_argument("BetaVector: empty");
    gamma_.reserve(beta_.size());
    for (std::size_t k = 0; k < beta_.size(); ++k) {
      if (!(beta_[k] > 0.0 && beta_[k] < 0.5))
        throw std::invalid_argument("beta[" + std::to_string(k + 1) +
                                    "] out of (0, 0.5)");
      gamma_.push_back(std::tgamma(beta_[k]));
    }
  }
  int dim() const { return static_cast<int>(beta_.size()); }
  double operator[](int k) const { return beta_[k]; }
  double gamma(int k) const { return gamma_[k]; }
  std::span<const double> values() const { return beta_; }

 private:
  std::vector<double> beta_;
  std::vector<double> gamma_;
};

struct MixedExponent {
  std::vector<double> p;
  explicit MixedExponent(std::vector<double> exps) : p(std::move(exps)) {
    for (std::size_t k = 0; k < p.size(); ++k)
      if (!(p[k] > 1.0))
        throw std::invalid_argument("MixedExponent: p[" + std::to_string(k) +
                                    "] must be > 1");
  }
};

struct FracResult {
  GridFunction values;
  // Set when the input has support in a boundary cell on the side the
  // operator integrates over, i.e. part of the kernel mass falls outside
  // the grid and is dropped.
  bool truncated_tail = false;
};

namespace detail {

// Per-axis weights of the exact cell integration of the one-sided power
// kernel against a piecewise-constant input, evaluated at output cell
// centers x_i:
//   minus:  w(i,j) = ((hi_j - x_i)_+^b - (lo_j - x_i)_+^b) / Gamma(b+1)
//   plus :  w(i,j) = ((x_i - lo_j)_+^b - (x_i - hi_j)_+^b) / Gamma(b+1)
inline std::vector<double> axis_weights(const GridSpec& g, int axis, double beta,
                                        bool minus) {
  const int n = g.cells(axis);
  const double inv_gamma1 = 1.0 / std::tgamma(beta + 1.0);
  std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
  auto pw = [&](double v) { return v > 0 ? std::pow(v, beta) : 0.0; };
  for (int i = 0; i < n; ++i) {
    const double x = g.center(axis, i);
    for (int j = 0; j < n; ++j) {
      const double lo = g.edge(axis, j), hi = g.edge(axis, j + 1);
      const double v = minus ? pw(hi - x) - pw(lo - x) : pw(x - lo) - pw(x - hi);
      w[static_cast<std::size_t>(i) * n + j] = v * inv_gamma1;
    }
  }
  return w;
}

// Apply a per-axis matrix along one axis of the row-major cell array.
inline std::vector<double> apply_axis(const GridSpec& g, int axis,
                                      const std::vector<double>& w,
                                      const std::vector<double>& in) {
  const int n = g.cells(axis);
  std::int64_t stride = 1;
  for (int k = axis + 1; k < g.dim(); ++k) stride *= g.cells(k);
  const std::int64_t block = stride * n;
  std::vector<double> out(in.size(), 0.0);
  for (std::int64_t base = 0; base < static_cast<std::int64_t>(in.size());
       base += block) {
    for (std::int64_t s = 0; s < stride; ++s) {
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* wrow = w.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) acc += wrow[j] * in[base + s + j * stride];
        out[base + s + i * stride] = acc;
      }
    }
  }
  return out;
}

inline bool support_touches(const GridFunction& f, bool minus) {
  const GridSpec& g = f.grid;
  std::vector<int> idx(g.dim());
  for (std::int64_t c = 0; c < g.cell_count(); ++c) {
    if (f.values[static_cast<std::size_t>(c)] == 0.0) continue;
    g.unflatten(c, idx);
    for (int k = 0; k < g.dim(); ++k)
      if (idx[k] == (minus ? g.cells(k) - 1 : 0)) return true;
  }
  return false;
}

inline FracResult frac_apply(const GridFunction& f, const BetaVector& beta,
                             bool minus) {
  if (f.grid.dim() != beta.dim())
    throw std::invalid_argument("fractional integral: beta/grid dimension mismatch");
  std::vector<double> cur = f.values;
  for (int k = 0; k < f.grid.dim(); ++k) {
    auto w = axis_weights(f.grid, k, beta[k], minus);
    cur = apply_axis(f.grid, k, w, cur);
  }
  return {GridFunction(f.grid, std::move(cur)), support_touches(f, minus)};
}

}  // namespace detail

// I^beta_{-..-} f(x) = (1/Gamma(beta)) int_{R+^d} f(x+y) y^{beta-1} dy,
// computed with exact per-cell integration of the power kernel against the
// piecewise-constant input, one axis at a time.
inline FracResult frac_integral_minus(const GridFunction& f,
                                      const BetaVector& beta) {
  return detail::frac_apply(f, beta, true);
}

// I^beta_{+..+} f(x) = (1/Gamma(beta)) int_{R+^d} f(x-y) y^{beta-1} dy.
inline FracResult frac_integral_plus(const GridFunction& f,
                                     const BetaVector& beta) {
  return detail::frac_apply(f, beta, false);
}

// Iterated norm: L^{p1} in axis 0 first, then L^{p2} in axis 1 of the result,
// and so on.  Coincides with the plain discrete L^p norm when all exponents
// are equal.
inline double mixed_norm(const GridFunction& f, const MixedExponent& p) {
  const GridSpec& g = f.grid;
  if (static_cast<int>(p.p.size()) != g.dim())
    throw std::invalid_argument("mixed_norm: exponent/grid dimension mismatch");
  std::vector<double> cur(f.values.size());
  for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = std::abs(f.values[i]);
  // Axis 0 is reduced first (innermost integral); after each reduction the
  // remaining row-major array starts at the next axis.
  std::vector<double> buf;
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int n = g.cells(axis);
    const double h = g.width(axis);
    std::int64_t stride = 1;
    for (int k = axis + 1; k < g.dim(); ++k) stride *= g.cells(k);
    buf.assign(static_cast<std::size_t>(stride), 0.0);
    // cur currently has shape [n, stride] collapsed over processed axes.
    for (std::int64_t s = 0; s < stride; ++s) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += std::pow(cur[static_cast<std::size_t>(i) * stride + s], p.p[axis]) * h;
      buf[static_cast<std::size_t>(s)] = std::pow(acc, 1.0 / p.p[axis]);
    }
    cur = buf;
  }
  return cur[0];
}

// |int f . I_+ g - int g . I_- f| with the shared midpoint cell quadrature on
// both sides.  The discrete scheme is exactly self-adjoint on a uniform grid,
// so the residual measures accumulation roundoff only; it stays at the
// floating-point floor under refinement.
inline double check_integration_by_parts(const GridFunction& f,
                                         const GridFunction& g,
                                         const BetaVector& beta) {
  if (!(f.grid == g.grid))
    throw std::invalid_argument("check_integration_by_parts: grids differ");
  const auto iplus_g = frac_integral_plus(g, beta);
  const auto iminus_f = frac_integral_minus(f, beta);
  const double vol = f.grid.cell_volume();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    lhs += f.values[c] * iplus_g.values.values[c];
    rhs += g.values[c] * iminus_f.values.values[c];
  }
  return std::abs(lhs - rhs) * vol;
}

// Values of the orthonormal Hermite functions xi_0..xi_nmax at the given
// points, by the stable three-term recurrence
//   xi_{n+1}(u) = sqrt(2/(n+1)) u xi_n(u) - sqrt(n/(n+1)) xi_{n-1}(u).
inline std::vector<std::vector<double>> hermite_functions(
    int nmax, std::span<const double> u) {
  std::vector<std::vector<double>> xi(static_cast<std::size_t>(nmax) + 1,
                                      std::vector<double>(u.size()));
  const double c0 = std::pow(M_PI, -0.25);
  for (std::size_t i = 0; i < u.size(); ++i)
    xi[0][i] = c0 * std::exp(-0.5 * u[i] * u[i]);
  if (nmax >= 1)
    for (std::size_t i = 0; i < u.size(); ++i)
      xi[1][i] = std::sqrt(2.0) * u[i] * xi[0][i];
  for (int n = 1; n < nmax; ++n) {
    const double a = std::sqrt(2.0 / (n + 1)), b = std::sqrt(double(n) / (n + 1));
    for (std::size_t i = 0; i < u.size(); ++i)
      xi[n + 1][i] = a * u[i] * xi[n][i] - b * xi[n - 1][i];
  }
  return xi;
}

struct HermiteBound {
  double value;        // int (t-u)_+^{beta-1} xi_n(u) du
  double bound_ratio;  // |value| / n^{2/3 - beta/2}
};

// Diagnostic for the growth of the fractional moment of Hermite functions.
// The u-integral uses exact power-kernel cell integration against midpoint
// samples of xi_n, which absorbs the integrable singularity at u = t.
inline HermiteBound hermite_kernel_bound(int n, double beta, double t) {
  if (n < 1) throw std::invalid_argument("hermite_kernel_bound: n >= 1");
  if (!(beta > 0 && beta < 0.5))
    throw std::invalid_argument("hermite_kernel_bound: beta out of (0, 0.5)");
  const double reach = std::sqrt(2.0 * n + 1.0) + 12.0;
  const double lo = -reach + std::min(0.0, t);
  const int cells = 200000;
  const double h = (t - lo) / cells;
  std::vector<double> mids(cells);
  for (int i = 0; i < cells; ++i) mids[i] = lo + (i + 0.5) * h;
  auto xi = hermite_functions(n, mids);
  double acc = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double a = t - (lo + i * h), b = t - (lo + (i + 1) * h);
    acc += xi[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)] *
           (std::pow(a, beta) - (b > 0 ? std::pow(b, beta) : 0.0)) / beta;
  }
  return {acc, std::abs(acc) / std::pow(double(n), 2.0 / 3.0 - beta / 2.0)};
}

}  // namespace frlevy
