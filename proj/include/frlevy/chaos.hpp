#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "frlevy/grid.hpp"
#include "frlevy/levy.hpp"

namespace frlevy {

struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Discretization of U = (space grid) x (mark points).  The product measure pi
// assigns cellVolume * w_j to the cell (space cell, mark j).  U-cell indices
// are space_cell * marks + mark_index.
class DiscreteU {
 public:
  DiscreteU(GridSpec base, MarkDiscretization marks, double model_m2,
            int max_order = 8)
      : base_(std::move(base)), marks_(std::move(marks)), max_order_(max_order) {
    double m2 = 0.0;
    for (const auto& p : marks_.points) {
      if (p.y == 0.0) throw std::invalid_argument("DiscreteU: zero mark");
      m2 += p.weight * p.y * p.y;
    }
    if (std::abs(m2 - model_m2) > 1e-10 * std::max(1.0, std::abs(model_m2)))
      throw std::invalid_argument(
          "DiscreteU: mark weights do not reproduce the second moment");
  }

  static std::shared_ptr<const DiscreteU> create(GridSpec base,
                                                 const LevyModel& model,
                                                 int marks_per_sign = 16,
                                                 int max_order = 8) {
    return std::make_shared<const DiscreteU>(std::move(base),
                                             model.mark_discretization(marks_per_sign),
                                             model.second_moment(), max_order);
  }

  const GridSpec& base() const { return base_; }
  int mark_count() const { return static_cast<int>(marks_.points.size()); }
  int max_order() const { return max_order_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(base_.cell_count()) * marks_.points.size();
  }
  double mark(std::size_t ucell) const {
    return marks_.points[ucell % marks_.points.size()].y;
  }
  double mark_weight(std::size_t ucell) const {
    return marks_.points[ucell % marks_.points.size()].weight;
  }
  double pi_weight(std::size_t ucell) const {
    return base_.cell_volume() * mark_weight(ucell);
  }
  std::int64_t space_cell(std::size_t ucell) const {
    return static_cast<std::int64_t>(ucell / marks_.points.size());
  }
  // U-cell containing a (location, mark) sample; -1 when outside the grid.
  std::int64_t locate(std::span<const double> location, double y) const {
    const std::int64_t sc = base_.locate_cell(location);
    if (sc < 0) return -1;
    return sc * mark_count() + marks_.locate(y);
  }

 private:
  GridSpec base_;
  MarkDiscretization marks_;
  int max_order_;
};

namespace detail {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

// Dense symmetric order-n tensor over m cells stored at non-decreasing
// multi-indices i_1 <= ... <= i_n (one representative per orbit).  Full-tensor
// contractions weight each representative by its orbit size n!/prod(rep!).
class SymmetricTensor {
 public:
  SymmetricTensor(int order, int dim)
      : order_(order), dim_(dim), vals_(size(order, dim), 0.0) {}

  static std::size_t size(int order, int dim) {
    return static_cast<std::size_t>(detail::binomial(dim + order - 1, order));
  }
  int order() const { return order_; }
  int dim() const { return dim_; }
  const std::vector<double>& raw() const { return vals_; }
  std::vector<double>& raw() { return vals_; }

  // Rank of a non-decreasing multi-index by the combinatorial number system
  // applied to the strictly increasing j_k = i_k + k (colex order).
  std::size_t rank(std::span<const int> idx) const {
    std::size_t r = 0;
    for (int k = 0; k < order_; ++k)
      r += detail::binomial(idx[k] + k, k + 1);
    return r;
  }

  double get(std::span<const int> sorted_idx) const {
    return vals_[rank(sorted_idx)];
  }
  double& at(std::span<const int> sorted_idx) { return vals_[rank(sorted_idx)]; }

  // Orbit size of a sorted multi-index: n! / prod over repeated runs.
  static double multiplicity(std::span<const int> sorted_idx) {
    double mult = 1.0;
    int run = 1, total = 0;
    for (std::size_t k = 0; k < sorted_idx.size(); ++k) {
      ++total;
      mult *= total;
      if (k > 0 && sorted_idx[k] == sorted_idx[k - 1])
        ++run;
      else
        run = 1;
      mult /= run;
    }
    return mult;
  }

  // Visit every stored entry with its sorted multi-index, in storage (colex)
  // order: increment the lowest position that stays non-decreasing and reset
  // the positions below it.
  template <class F>
  void for_each(F&& f) const {
    std::vector<int> idx(static_cast<std::size_t>(order_), 0);
    std::size_t r = 0;
    while (true) {
      f(std::span<const int>(idx), vals_[r]);
      if (++r == vals_.size()) break;
      int k = 0;
      while (k + 1 < order_ && idx[static_cast<std::size_t>(k)] ==
                                   idx[static_cast<std::size_t>(k + 1)])
        ++k;
      ++idx[static_cast<std::size_t>(k)];
      for (int j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = 0;
    }
  }

 private:
  int order_, dim_;
  std::vector<double> vals_;
};

// Test function xi on the U cells; the probe argument of the S-transform.
struct TestFunction {
  std::shared_ptr<const DiscreteU> u;
  std::vector<double> values;

  TestFunction(std::shared_ptr<const DiscreteU> uu, std::vector<double> v)
      : u(std::move(uu)), values(std::move(v)) {
    if (values.size() != u->cell_count())
      throw std::invalid_argument("TestFunction: value count mismatch");
  }
};

// Truncated Charlier chaos vector: coefficient tensors F_0..F_N over the
// U cells, F_n symmetric of order n.
class ChaosVector {
 public:
  explicit ChaosVector(std::shared_ptr<const DiscreteU> u, int order = 0)
      : u_(std::move(u)) {
    if (order > u_->max_order())
      throw TruncationError("ChaosVector: order beyond configured maximum");
    const int m = static_cast<int>(u_->cell_count());
    for (int n = 0; n <= order; ++n) coeffs_.emplace_back(n, m);
  }

  static ChaosVector scalar(std::shared_ptr<const DiscreteU> u, double c) {
    ChaosVector f(std::move(u), 0);
    f.coeffs_[0].raw()[0] = c;
    return f;
  }
  // <C_1, f> for a coefficient vector f over the U cells.
  static ChaosVector first_order(std::shared_ptr<const DiscreteU> u,
                                 std::span<const double> f) {
    ChaosVector out(std::move(u), 1);
    if (f.size() != out.u_->cell_count())
      throw std::invalid_argument("first_order: size mismatch");
    for (std::size_t i = 0; i < f.size(); ++i) out.coeffs_[1].raw()[i] = f[i];
    return out;
  }

  const std::shared_ptr<const DiscreteU>& u() const { return u_; }
  int order() const { return static_cast<int>(coeffs_.size()) - 1; }
  const SymmetricTensor& coeff(int n) const { return coeffs_[static_cast<std::size_t>(n)]; }
  SymmetricTensor& coeff(int n) { return coeffs_[static_cast<std::size_t>(n)]; }
  void extend(int order) {
    if (order > u_->max_order())
      throw TruncationError("ChaosVector: order beyond configured maximum");
    const int m = static_cast<int>(u_->cell_count());
    while (static_cast<int>(coeffs_.size()) <= order)
      coeffs_.emplace_back(static_cast<int>(coeffs_.size()), m);
  }

  ChaosVector& operator+=(const ChaosVector& o) {
    require_same_u(*this, o);
    extend(o.order());
    for (int n = 0; n <= o.order(); ++n) {
      auto& a = coeffs_[static_cast<std::size_t>(n)].raw();
      const auto& b = o.coeffs_[static_cast<std::size_t>(n)].raw();
      for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    }
    return *this;
  }
  ChaosVector& operator*=(double s) {
    for (auto& t : coeffs_)
      for (double& v : t.raw()) v *= s;
    return *this;
  }

  static void require_same_u(const ChaosVector& a, const ChaosVector& b) {
    if (a.u_ == b.u_) return;
    if (a.u_->cell_count() != b.u_->cell_count())
      throw std::invalid_argument("chaos: mismatched discretizations");
  }

 private:
  std::shared_ptr<const DiscreteU> u_;
  std::vector<SymmetricTensor> coeffs_;
};

// <<F, f>> = sum_n n! <F_n, f_n>_pi.
inline double pairing(const ChaosVector& F, const ChaosVector& f) {
  ChaosVector::require_same_u(F, f);
  const auto& u = *F.u();
  double total = 0.0;
  double factorial = 1.0;
  const int nmax = std::min(F.order(), f.order());
  for (int n = 0; n <= nmax; ++n) {
    if (n > 0) factorial *= n;
    double s = 0.0;
    const auto& a = F.coeff(n);
    const auto& b = f.coeff(n).raw();
    std::size_t r = 0;
    a.for_each([&](std::span<const int> idx, double va) {
      double w = SymmetricTensor::multiplicity(idx);
      for (int k = 0; k < n; ++k) w *= u.pi_weight(static_cast<std::size_t>(idx[k]));
      s += w * va * b[r];
      ++r;
    });
    total += factorial * s;
  }
  return total;
}

// S(F)(xi) = sum_n <F_n, xi^{tensor n}>_pi.
inline double s_transform(const ChaosVector& F, const TestFunction& xi) {
  if (xi.values.size() != F.u()->cell_count())
    throw std::invalid_argument("s_transform: mismatched discretizations");
  const auto& u = *F.u();
  std::vector<double> xw(xi.values.size());
  for (std::size_t i = 0; i < xw.size(); ++i)
    xw[i] = xi.values[i] * u.pi_weight(i);
  double total = 0.0;
  for (int n = 0; n <= F.order(); ++n) {
    double s = 0.0;
    F.coeff(n).for_each([&](std::span<const int> idx, double v) {
      if (v == 0.0) return;
      double w = SymmetricTensor::multiplicity(idx);
      for (int k = 0; k < n; ++k) w *= xw[static_cast<std::size_t>(idx[k])];
      s += w * v;
    });
    total += s;
  }
  return total;
}

// Wick product: (F <> G)_n = sum_{k+l=n} sym(F_k tensor G_l).  Exact in the
// discrete algebra; S(F<>G) = S(F) S(G) holds with no truncation error when
// the result order N_F + N_G is representable.
inline ChaosVector wick_product(const ChaosVector& F, const ChaosVector& G) {
  ChaosVector::require_same_u(F, G);
  const int n_out = F.order() + G.order();
  if (n_out > F.u()->max_order())
    throw TruncationError("wick_product: order " + std::to_string(n_out) +
                          " exceeds configured maximum " +
                          std::to_string(F.u()->max_order()));
  ChaosVector out(F.u(), n_out);
  std::vector<int> sub(static_cast<std::size_t>(n_out));
  std::vector<int> comp(static_cast<std::size_t>(n_out));
  for (int n = 0; n <= n_out; ++n) {
    auto& target = out.coeff(n);
    std::vector<int> idx(static_cast<std::size_t>(n));
    target.for_each([&](std::span<const int> I, double) {
      double acc = 0.0;
      for (int k = std::max(0, n - G.order()); k <= std::min(n, F.order()); ++k) {
        const auto& A = F.coeff(k);
        const auto& B = G.coeff(n - k);
        // Average A(I_S) B(I_{S^c}) over the C(n,k) position subsets S.
        double sum = 0.0;
        std::vector<int> sel(static_cast<std::size_t>(k));
        for (int s = 0; s < k; ++s) sel[static_cast<std::size_t>(s)] = s;
        while (true) {
          int si = 0, ci = 0;
          for (int pos = 0; pos < n; ++pos) {
            if (si < k && sel[static_cast<std::size_t>(si)] == pos)
              sub[static_cast<std::size_t>(si++)] = I[pos];
            else
              comp[static_cast<std::size_t>(ci++)] = I[pos];
          }
          sum += A.get(std::span<const int>(sub.data(), static_cast<std::size_t>(k))) *
                 B.get(std::span<const int>(comp.data(), static_cast<std::size_t>(n - k)));
          // next k-combination of positions
          int j = k - 1;
          while (j >= 0 && sel[static_cast<std::size_t>(j)] == n - k + j) --j;
          if (j < 0) break;
          ++sel[static_cast<std::size_t>(j)];
          for (int t = j + 1; t < k; ++t)
            sel[static_cast<std::size_t>(t)] = sel[static_cast<std::size_t>(t - 1)] + 1;
        }
        acc += sum / static_cast<double>(detail::binomial(n, k));
      }
      std::copy(I.begin(), I.end(), idx.begin());
      target.at(idx) = acc;
    });
  }
  return out;
}

// Wick exponential truncated at max_order terms: sum_{n<=max_order} F^{<>n}/n!.
// Throws TruncationError when a power would exceed the algebra's configured
// maximum order (never silently truncates a product).
inline ChaosVector wick_exp(const ChaosVector& F, int max_order) {
  if (max_order < 0) throw TruncationError("wick_exp: negative order");
  ChaosVector result = ChaosVector::scalar(F.u(), 1.0);
  if (F.order() == 0) {  // scalar series
    double p = 1.0;
    for (int n = 1; n <= max_order; ++n) {
      p *= F.coeff(0).raw()[0] / n;
      result.coeff(0).raw()[0] += p;
    }
    return result;
  }
  ChaosVector power = ChaosVector::scalar(F.u(), 1.0);
  double inv_fact = 1.0;
  for (int n = 1; n <= max_order; ++n) {
    power = wick_product(power, F);
    inv_fact /= n;
    ChaosVector term = power;
    term *= inv_fact;
    result += term;
  }
  return result;
}

// Skorohod integral of a U-cell indexed family: raises each order by one and
// symmetrizes over the new index.
inline ChaosVector skorohod_delta(const std::vector<ChaosVector>& family) {
  if (family.empty()) throw std::invalid_argument("skorohod_delta: empty family");
  const auto u = family.front().u();
  if (family.size() != u->cell_count())
    throw std::invalid_argument("skorohod_delta: need one integrand per U cell");
  int max_in = 0;
  for (const auto& f : family) {
    ChaosVector::require_same_u(f, family.front());
    max_in = std::max(max_in, f.order());
  }
  if (max_in + 1 > u->max_order())
    throw TruncationError("skorohod_delta: order overflow");
  ChaosVector out(u, max_in + 1);
  std::vector<int> rest;
  for (int n = 0; n <= max_in; ++n) {
    auto& target = out.coeff(n + 1);
    std::vector<int> idx(static_cast<std::size_t>(n + 1));
    // (delta F)_{n+1}(J) = (1/(n+1)) sum_p F(J_p)_n(J with position p removed)
    target.for_each([&](std::span<const int> J, double) {
      double acc = 0.0;
      for (int p = 0; p <= n; ++p) {
        rest.assign(J.begin(), J.end());
        rest.erase(rest.begin() + p);
        const auto& fam = family[static_cast<std::size_t>(J[p])];
        if (n <= fam.order()) acc += fam.coeff(n).get(rest);
      }
      std::copy(J.begin(), J.end(), idx.begin());
      target.at(idx) = acc / (n + 1);
    });
  }
  return out;
}

// Pathwise value of a chaos vector against one noise realization; defined for
// truncation order <= 1 (deterministic part plus the compensated linear
// term).  Higher-order coefficients have no pathwise evaluation here.
inline double evaluate_low_order(const ChaosVector& F,
                                 const NoiseRealization& noise) {
  for (int n = 2; n <= F.order(); ++n)
    for (double v : F.coeff(n).raw())
      if (v != 0.0)
        throw std::invalid_argument(
            "evaluate_low_order: order >= 2 coefficients present");
  const auto& u = *F.u();
  double val = F.coeff(0).raw()[0];
  if (F.order() < 1) return val;
  const auto& f1 = F.coeff(1).raw();
  for (std::size_t j = 0; j < noise.jump_count(); ++j) {
    const std::int64_t cell = u.locate(noise.jump_location(j), noise.jump_marks[j]);
    if (cell >= 0) val += f1[static_cast<std::size_t>(cell)];
  }
  for (std::size_t c = 0; c < f1.size(); ++c) val -= f1[c] * u.pi_weight(c);
  return val;
}

}  // namespace frlevy
