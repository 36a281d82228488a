#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace frlevy {

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m,
                    double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("adaptive quadrature did not converge");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with absolute tolerance.
template <class F>
double adaptive_simpson(F f, double a, double b, double abs_tol,
                        int max_depth = 48) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

// 16-point Gauss-Legendre nodes/weights on [-1,1].
struct GaussLegendre16 {
  static constexpr std::array<double, 8> x = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
      0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
      0.9445750230732326, 0.9894009349916499};
  static constexpr std::array<double, 8> w = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
      0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
      0.0622535239386479, 0.0271524594117541};
};

template <class F>
double gauss16(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i)
    s += GaussLegendre16::w[i] *
         (f(c - h * GaussLegendre16::x[i]) + f(c + h * GaussLegendre16::x[i]));
  return s * h;
}

// Composite Gauss-Legendre over [a,b] with uniform panels.
template <class F>
double gauss_panels(F&& f, double a, double b, int panels) {
  double s = 0.0;
  const double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) s += gauss16(f, a + i * h, a + (i + 1) * h);
  return s;
}

// Composite Gauss-Legendre over [a,b] with panel widths shrinking
// geometrically towards b (for integrands with an algebraic singularity of
// the derivative at the upper endpoint).
template <class F>
double gauss_graded_upper(F&& f, double a, double b, int panels,
                          double ratio = 0.75) {
  double s = 0.0;
  double left = a;
  double len = (b - a) * (1.0 - ratio);
  for (int i = 0; i < panels - 1 && len > 0; ++i) {
    s += gauss16(f, left, left + len);
    left += len;
    len *= ratio;
  }
  s += gauss16(f, left, b);
  return s;
}

// Integral of f over [a, inf) for integrands decaying at least exponentially:
// expands the range geometrically until a block contributes below rel_tail.
template <class F>
double integrate_decaying(F&& f, double a, double abs_tol, double block = 4.0) {
  double total = 0.0;
  double lo = a;
  for (int i = 0; i < 64; ++i) {
    const double hi = lo + block;
    const double piece = adaptive_simpson(f, lo, hi, abs_tol * 0.25);
    total += piece;
    if (std::abs(piece) < abs_tol * 0.25 && i > 0) return total;
    lo = hi;
    block *= 2.0;
  }
  throw std::runtime_error("integrate_decaying: no tail decay detected");
}

}  // namespace frlevy
