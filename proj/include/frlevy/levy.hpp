#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/grid.hpp"
#include "frlevy/quadrature.hpp"
#include "frlevy/rng.hpp"

namespace frlevy {

enum class LevyKind { FiniteActivity, TruncatedTemperedStable };

struct JumpAtom {
  double mark;  // jump size, != 0
  double prob;
};

// One point of a discrete approximation of the jump measure: weight is the
// measure mass attached to the mark, so sum w_j y_j^2 tracks the second
// moment.
struct MarkPoint {
  double y;
  double weight;
};

// Mark points plus the half-open bins [lo_i, hi_i) that map a sampled mark
// to its point (needed when realizations are evaluated against the discrete
// algebra).  Points are sorted ascending.
struct MarkDiscretization {
  std::vector<MarkPoint> points;
  std::vector<double> bin_lo, bin_hi;

  int locate(double y) const {
    auto it = std::upper_bound(bin_hi.begin(), bin_hi.end(), y);
    if (it == bin_hi.end()) return static_cast<int>(points.size()) - 1;
    int i = static_cast<int>(it - bin_hi.begin());
    return i;
  }
};

// A square-integrable pure-jump measure with all mass on {|y| >= epsilon}.
// Small jumps below epsilon are removed outright and every derived quantity
// (moments, exponent, compensator, samples) refers to the truncated measure,
// so sampled statistics and the analytic values below describe the same
// object exactly.
//
// Two families:
//   FiniteActivity          rate * sum p_i * delta_{y_i}
//   TruncatedTemperedStable scale * e^{-lambda_pm |y|} |y|^{-1-alpha} dy
//                           on {|y| > epsilon}
class LevyModel {
 public:
  static LevyModel finite_activity(double rate, std::vector<JumpAtom> law,
                                   double epsilon = 0.0) {
    LevyModel m;
    m.kind_ = LevyKind::FiniteActivity;
    m.epsilon_ = epsilon;
    if (rate < 0) throw std::invalid_argument("LevyModel: rate must be >= 0");
    if (epsilon < 0) throw std::invalid_argument("LevyModel: epsilon must be >= 0");
    double psum = 0;
    for (const auto& a : law) {
      if (a.mark == 0.0)
        throw std::invalid_argument("LevyModel: zero mark in jump law");
      if (a.prob < 0) throw std::invalid_argument("LevyModel: negative probability");
      psum += a.prob;
    }
    if (rate > 0 && std::abs(psum - 1.0) > 1e-12)
      throw std::invalid_argument("LevyModel: jump probabilities must sum to 1");
    for (const auto& a : law)
      if (std::abs(a.mark) >= epsilon && a.prob > 0)
        m.atoms_.push_back({a.mark, rate * a.prob});
    m.finalize_atoms();
    return m;
  }

  static LevyModel tempered_stable(double alpha, double lambda_plus,
                                   double lambda_minus, double scale,
                                   double epsilon) {
    LevyModel m;
    m.kind_ = LevyKind::TruncatedTemperedStable;
    if (!(alpha > 0 && alpha < 2))
      throw std::invalid_argument("LevyModel: alpha must be in (0,2)");
    if (!(lambda_plus > 0) || !(lambda_minus > 0))
      throw std::invalid_argument("LevyModel: lambda must be > 0");
    if (!(scale > 0)) throw std::invalid_argument("LevyModel: scale must be > 0");
    if (!(epsilon > 0))
      throw std::invalid_argument("LevyModel: epsilon must be > 0 for tempered stable");
    m.alpha_ = alpha;
    m.lambda_plus_ = lambda_plus;
    m.lambda_minus_ = lambda_minus;
    m.scale_ = scale;
    m.epsilon_ = epsilon;
    m.build_tables();
    return m;
  }

  LevyKind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }

  // Total mass nu(R), the Poisson intensity per unit volume.
  double mass() const { return mass_; }
  // int y nu(dy): the compensator density of the first moment.
  double first_moment() const { return b1_; }
  // m2 = int y^2 nu(dy); finite by construction.
  double second_moment() const { return m2_; }

  // psi(theta) = int (e^{i theta y} - 1 - i theta y) nu(dy).
  std::complex<double> levy_exponent(double theta) const {
    if (theta == 0.0) return {0.0, 0.0};
    if (kind_ == LevyKind::FiniteActivity) {
      std::complex<double> s{0.0, 0.0};
      for (const auto& a : atoms_) {
        s += a.weight * std::complex<double>(std::cos(theta * a.mark) - 1.0,
                                             std::sin(theta * a.mark) -
                                                 theta * a.mark);
      }
      return s;
    }
    auto side = [&](double lam, double sign) {
      auto f_re = [&](double y) {
        return (std::cos(theta * sign * y) - 1.0) * density_one_sided(y, lam);
      };
      auto f_im = [&](double y) {
        return (std::sin(theta * sign * y) - theta * sign * y) *
               density_one_sided(y, lam);
      };
      return std::complex<double>(refined_integral(f_re),
                                  refined_integral(f_im));
    };
    return side(lambda_plus_, 1.0) + side(lambda_minus_, -1.0);
  }

  // Positive-side density at |y|, one-sided, including scale.
  double density(double y) const {
    if (kind_ != LevyKind::TruncatedTemperedStable)
      throw std::logic_error("LevyModel::density: discrete measure has no density");
    const double a = std::abs(y);
    if (a < epsilon_ || y == 0.0) return 0.0;
    return density_one_sided(a, y > 0 ? lambda_plus_ : lambda_minus_);
  }

  // One mark with law nu/mass.  Deterministic given the generator state.
  double sample_mark(Rng& rng) const {
    if (kind_ == LevyKind::FiniteActivity) {
      return atoms_[rng.categorical(atom_cdf_)].mark;
    }
    const double u = rng.uniform01() * mass_;
    if (u < mass_plus_) return invert_cdf(table_plus_, lambda_plus_, u);
    return -invert_cdf(table_minus_, lambda_minus_, u - mass_plus_);
  }

  // Discretization of the mark axis for the chaos algebra.  FiniteActivity
  // models expose their exact atoms (bins split halfway between neighbours).
  // Tempered-stable models are reduced to `points_per_sign` quantile bins per
  // sign; bin centroids are the nodes and the weights get a minimal-norm
  // correction so that the mass, first and second moment of the truncated
  // measure are reproduced exactly.
  MarkDiscretization mark_discretization(int points_per_sign = 16) const {
    struct Entry {
      double y, w, lo, hi;
    };
    std::vector<Entry> entries;
    if (kind_ == LevyKind::FiniteActivity) {
      for (const auto& a : atoms_) entries.push_back({a.mark, a.weight, 0, 0});
      std::sort(entries.begin(), entries.end(),
                [](const Entry& a, const Entry& b) { return a.y < b.y; });
      for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].lo = i == 0 ? -std::numeric_limits<double>::infinity()
                               : 0.5 * (entries[i - 1].y + entries[i].y);
        entries[i].hi = i + 1 == entries.size()
                            ? std::numeric_limits<double>::infinity()
                            : 0.5 * (entries[i].y + entries[i + 1].y);
      }
    } else {
      auto one_side = [&](const CdfTable& tab, double lam, double sign) {
        const double total = tab.cum_mass.back();
        if (total <= 0) return;
        for (int b = 0; b < points_per_sign; ++b) {
          const double m0 = total * b / points_per_sign;
          const double m1 = total * (b + 1) / points_per_sign;
          const double ylo = invert_cdf(tab, lam, m0);
          const double yhi =
              b + 1 == points_per_sign ? ymax_ : invert_cdf(tab, lam, m1);
          const double mom1 = adaptive_simpson(
              [&](double y) { return y * density_one_sided(y, lam); }, ylo, yhi,
              std::max(1e-14, 1e-11 * (m1 - m0) * yhi));
          const double node = sign * mom1 / (m1 - m0);
          entries.push_back({node, m1 - m0, std::min(sign * ylo, sign * yhi),
                             std::max(sign * ylo, sign * yhi)});
        }
      };
      one_side(table_plus_, lambda_plus_, 1.0);
      one_side(table_minus_, lambda_minus_, -1.0);
      std::sort(entries.begin(), entries.end(),
                [](const Entry& a, const Entry& b) { return a.y < b.y; });
      entries.front().lo = -std::numeric_limits<double>::infinity();
      entries.back().hi = std::numeric_limits<double>::infinity();
    }
    MarkDiscretization out;
    for (const auto& e : entries) {
      out.points.push_back({e.y, e.w});
      out.bin_lo.push_back(e.lo);
      out.bin_hi.push_back(e.hi);
    }
    if (kind_ == LevyKind::TruncatedTemperedStable) moment_match(out.points);
    return out;
  }

 private:
  struct Atom {
    double mark;
    double weight;  // nu({mark})
  };
  struct CdfTable {
    std::vector<double> y;
    std::vector<double> cum_mass;  // int_eps^y density
  };

  void finalize_atoms() {
    mass_ = b1_ = m2_ = 0.0;
    for (const auto& a : atoms_) {
      mass_ += a.weight;
      b1_ += a.weight * a.mark;
      m2_ += a.weight * a.mark * a.mark;
    }
    atom_cdf_.clear();
    double c = 0;
    for (const auto& a : atoms_) {
      c += mass_ > 0 ? a.weight / mass_ : 0.0;
      atom_cdf_.push_back(c);
    }
    if (!atom_cdf_.empty()) atom_cdf_.back() = 1.0;
  }

  double density_one_sided(double y, double lam) const {
    return scale_ * std::exp(-lam * y) * std::pow(y, -1.0 - alpha_);
  }

  // Adaptive integral over [epsilon, ymax] with the tolerance anchored to a
  // coarse first pass; a fixed absolute tolerance is unreachable when the
  // integrand scale blows up near the truncation radius.
  template <class F>
  double refined_integral(F&& f) const {
    const double rough = gauss_panels(f, epsilon_, ymax_, 96);
    const double tol = std::max(1e-13, 1e-11 * std::abs(rough));
    return adaptive_simpson(f, epsilon_, ymax_, tol);
  }

  void build_tables() {
    // Range upper end: beyond ymax_ the remaining mass is negligible
    // relative to the total (integrand decays like e^{-lam y}).
    const double lam_min = std::min(lambda_plus_, lambda_minus_);
    ymax_ = epsilon_;
    while (density_one_sided(ymax_, lam_min) * ymax_ >
           1e-16 * std::max(1.0, mass_estimate(lam_min)))
      ymax_ *= 1.5;
    ymax_ = std::max(ymax_, epsilon_ + 40.0 / lam_min);

    auto build = [&](double lam) {
      CdfTable tab;
      const int n = 4096;
      tab.y.resize(n + 1);
      tab.cum_mass.resize(n + 1);
      const double r = std::log(ymax_ / epsilon_) / n;
      tab.y[0] = epsilon_;
      tab.cum_mass[0] = 0.0;
      for (int i = 1; i <= n; ++i) {
        tab.y[i] = epsilon_ * std::exp(r * i);
        tab.cum_mass[i] =
            tab.cum_mass[i - 1] +
            gauss16([&](double y) { return density_one_sided(y, lam); },
                    tab.y[i - 1], tab.y[i]);
      }
      return tab;
    };
    table_plus_ = build(lambda_plus_);
    table_minus_ = build(lambda_minus_);
    mass_plus_ = table_plus_.cum_mass.back();
    mass_ = mass_plus_ + table_minus_.cum_mass.back();

    auto moment = [&](double lam, int p) {
      return refined_integral(
          [&](double y) { return std::pow(y, p) * density_one_sided(y, lam); });
    };
    try {
      b1_ = moment(lambda_plus_, 1) - moment(lambda_minus_, 1);
      m2_ = moment(lambda_plus_, 2) + moment(lambda_minus_, 2);
    } catch (const std::runtime_error&) {
      throw std::runtime_error("divergent second moment");
    }
  }

  double mass_estimate(double lam) const {
    return scale_ * std::exp(-lam * epsilon_) * std::pow(epsilon_, -alpha_) / alpha_;
  }

  // Solve cum_mass(y) = target on the table, refined by Newton steps on the
  // exact density.
  double invert_cdf(const CdfTable& tab, double lam, double target) const {
    if (target <= 0) return tab.y.front();
    if (target >= tab.cum_mass.back()) return tab.y.back();
    auto it = std::upper_bound(tab.cum_mass.begin(), tab.cum_mass.end(), target);
    std::size_t i = static_cast<std::size_t>(it - tab.cum_mass.begin());
    double y = tab.y[i - 1] + (tab.y[i] - tab.y[i - 1]) *
                                  (target - tab.cum_mass[i - 1]) /
                                  (tab.cum_mass[i] - tab.cum_mass[i - 1]);
    for (int k = 0; k < 3; ++k) {
      const double fy =
          tab.cum_mass[i - 1] +
          gauss16([&](double s) { return density_one_sided(s, lam); },
                  tab.y[i - 1], y);
      const double dy = density_one_sided(y, lam);
      y = std::clamp(y - (fy - target) / dy, tab.y[i - 1], tab.y[i]);
    }
    return y;
  }

  // Minimal L2 correction of the weights subject to matching moments 0,1,2.
  void moment_match(std::vector<MarkPoint>& pts) const {
    const int n = static_cast<int>(pts.size());
    double r[3] = {mass_, b1_, m2_};
    for (const auto& p : pts) {
      r[0] -= p.weight;
      r[1] -= p.weight * p.y;
      r[2] -= p.weight * p.y * p.y;
    }
    // Solve (M M^T) mu = r with M rows {1, y, y^2}; correction = M^T mu.
    double A[3][3] = {};
    for (const auto& p : pts) {
      const double m[3] = {1.0, p.y, p.y * p.y};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A[i][j] += m[i] * m[j];
    }
    double mu[3] = {r[0], r[1], r[2]};
    // Gaussian elimination, 3x3.
    int piv[3] = {0, 1, 2};
    for (int c = 0; c < 3; ++c) {
      int best = c;
      for (int i = c + 1; i < 3; ++i)
        if (std::abs(A[piv[i]][c]) > std::abs(A[piv[best]][c])) best = i;
      std::swap(piv[c], piv[best]);
      for (int i = c + 1; i < 3; ++i) {
        const double f = A[piv[i]][c] / A[piv[c]][c];
        for (int j = c; j < 3; ++j) A[piv[i]][j] -= f * A[piv[c]][j];
        mu[piv[i]] -= f * mu[piv[c]];
      }
    }
    double x[3];
    for (int c = 2; c >= 0; --c) {
      double s = mu[piv[c]];
      for (int j = c + 1; j < 3; ++j) s -= A[piv[c]][j] * x[j];
      x[c] = s / A[piv[c]][c];
    }
    for (int i = 0; i < n; ++i)
      pts[i].weight += x[0] + x[1] * pts[i].y + x[2] * pts[i].y * pts[i].y;
  }

  LevyKind kind_ = LevyKind::FiniteActivity;
  double epsilon_ = 0.0;
  std::vector<Atom> atoms_;
  std::vector<double> atom_cdf_;
  double alpha_ = 0, lambda_plus_ = 0, lambda_minus_ = 0, scale_ = 0;
  double ymax_ = 0, mass_plus_ = 0;
  CdfTable table_plus_, table_minus_;
  double mass_ = 0, b1_ = 0, m2_ = 0;
};

inline double second_moment(const LevyModel& m) { return m.second_moment(); }

// One sampled path of the compensated jump measure on a grid box.  Increments
// hold, per cell, (sum of marks of jumps in the cell) - cellVolume * b1.  The
// raw jumps are kept so that downstream consumers can evaluate kernels at
// exact jump locations.
struct NoiseRealization {
  GridSpec grid;
  std::vector<double> increments;
  std::vector<double> jump_coords;  // flattened, dim doubles per jump
  std::vector<double> jump_marks;
  double compensator_first_moment = 0.0;  // b1 of the generating model
  std::uint64_t seed = 0;

  std::size_t jump_count() const { return jump_marks.size(); }
  std::span<const double> jump_location(std::size_t j) const {
    return {jump_coords.data() + j * grid.dim(), static_cast<std::size_t>(grid.dim())};
  }
};

// Poisson point process on box x marks with intensity Lebesgue x nu, plus the
// per-cell compensation.  Jump locations are uniform inside the box; the cell
// of a jump is the half-open box containing it.
inline NoiseRealization sample_noise_grid(const LevyModel& model,
                                          const GridSpec& grid,
                                          std::uint64_t seed) {
  NoiseRealization out{grid, {}, {}, {}, model.first_moment(), seed};
  out.increments.assign(static_cast<std::size_t>(grid.cell_count()), 0.0);
  const double intensity = model.mass() * grid.box_volume();
  if (intensity > 1e8) throw std::runtime_error("intensity too large");
  Rng rng(seed);
  const std::int64_t n_jumps = intensity > 0 ? rng.poisson(intensity) : 0;
  const int d = grid.dim();
  std::vector<double> x(d);
  out.jump_coords.reserve(static_cast<std::size_t>(n_jumps) * d);
  out.jump_marks.reserve(static_cast<std::size_t>(n_jumps));
  for (std::int64_t j = 0; j < n_jumps; ++j) {
    for (int k = 0; k < d; ++k) x[k] = rng.uniform(grid.lower(k), grid.upper(k));
    const double y = model.sample_mark(rng);
    const std::int64_t cell = grid.locate_cell(x);
    out.increments[static_cast<std::size_t>(cell)] += y;
    out.jump_coords.insert(out.jump_coords.end(), x.begin(), x.end());
    out.jump_marks.push_back(y);
  }
  const double comp = grid.cell_volume() * model.first_moment();
  for (double& v : out.increments) v -= comp;
  return out;
}

}  // namespace frlevy
