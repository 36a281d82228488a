#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "frlevy/fracops.hpp"
#include "frlevy/grid.hpp"

namespace frlevy {

// Discrete sine basis on a cell-centered Dirichlet axis: n cells of width h,
// modes k = 1..n with
//   S_k(i) = sin(k pi (i+1/2)/n),
// eigenvalues of the (ghost-reflected) three-point Laplacian
//   lambda_k = (2 - 2 cos(k pi/n)) / h^2.
// Mode k has squared norm n/2 (n for k = n), so the analysis weights are
// 2/n except 1/n for the last mode.
class SineAxis {
 public:
  SineAxis(int n, double length)
      : n_(n), length_(length), h_(length / n) {
    synth_.resize(static_cast<std::size_t>(n) * n);
    analysis_.resize(static_cast<std::size_t>(n) * n);
    lambda_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double mode = k + 1.0;
      lambda_[static_cast<std::size_t>(k)] =
          (2.0 - 2.0 * std::cos(mode * M_PI / n)) / (h_ * h_);
      const double nu = (k + 1 == n) ? 1.0 / n : 2.0 / n;
      for (int i = 0; i < n; ++i) {
        const double v = std::sin(mode * M_PI * (i + 0.5) / n);
        synth_[static_cast<std::size_t>(i) * n + k] = v;     // cells x modes
        analysis_[static_cast<std::size_t>(k) * n + i] = nu * v;  // modes x cells
      }
    }
  }

  int size() const { return n_; }
  double length() const { return length_; }
  double lambda(int k) const { return lambda_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& synthesis() const { return synth_; }
  const std::vector<double>& analysis() const { return analysis_; }
  // Continuum mode shape at offset x from the axis lower edge.
  double mode_at(int k, double x) const {
    return std::sin((k + 1.0) * M_PI * x / length_);
  }

 private:
  int n_;
  double length_, h_;
  std::vector<double> synth_, analysis_, lambda_;
};

// Mode-space calculus over all axes of a grid.  Mode arrays share the cell
// array layout (row-major over per-axis mode indices).
class SpectralBox {
 public:
  explicit SpectralBox(const GridSpec& g) : grid_(g) {
    for (int k = 0; k < g.dim(); ++k)
      axes_.emplace_back(g.cells(k), g.length(k));
  }

  const GridSpec& grid() const { return grid_; }
  const SineAxis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }

  std::vector<double> to_modes(const std::vector<double>& cells) const {
    std::vector<double> cur = cells;
    for (int k = 0; k < grid_.dim(); ++k)
      cur = detail::apply_axis(grid_, k, axes_[static_cast<std::size_t>(k)].analysis(), cur);
    return cur;
  }
  std::vector<double> to_cells(const std::vector<double>& modes) const {
    std::vector<double> cur = modes;
    for (int k = 0; k < grid_.dim(); ++k)
      cur = detail::apply_axis(grid_, k, axes_[static_cast<std::size_t>(k)].synthesis(), cur);
    return cur;
  }

  // Discrete Laplacian eigenvalue per flat mode index.
  std::vector<double> laplace_eigenvalues() const {
    std::vector<double> lam(static_cast<std::size_t>(grid_.cell_count()), 0.0);
    std::vector<int> idx(static_cast<std::size_t>(grid_.dim()));
    for (std::int64_t m = 0; m < grid_.cell_count(); ++m) {
      grid_.unflatten(m, idx);
      double s = 0.0;
      for (int k = 0; k < grid_.dim(); ++k)
        s += axes_[static_cast<std::size_t>(k)].lambda(idx[static_cast<std::size_t>(k)]);
      lam[static_cast<std::size_t>(m)] = s;
    }
    return lam;
  }

  // Continuum mode shapes at an arbitrary point, per flat mode index.
  std::vector<double> modes_at(std::span<const double> x) const {
    std::vector<double> out(static_cast<std::size_t>(grid_.cell_count()), 1.0);
    std::vector<int> idx(static_cast<std::size_t>(grid_.dim()));
    for (std::int64_t m = 0; m < grid_.cell_count(); ++m) {
      grid_.unflatten(m, idx);
      double v = 1.0;
      for (int k = 0; k < grid_.dim(); ++k)
        v *= axes_[static_cast<std::size_t>(k)].mode_at(
            idx[static_cast<std::size_t>(k)], x[k] - grid_.lower(k));
      out[static_cast<std::size_t>(m)] = v;
    }
    return out;
  }

  // Discrete Laplacian with ghost-cell Dirichlet reflection (u_ghost = -u_edge),
  // the operator whose eigenpairs the sine basis diagonalizes.
  std::vector<double> apply_laplacian(const std::vector<double>& v) const {
    std::vector<double> out(v.size(), 0.0);
    for (int axis = 0; axis < grid_.dim(); ++axis) {
      const int n = grid_.cells(axis);
      const double inv_h2 = 1.0 / (grid_.width(axis) * grid_.width(axis));
      std::int64_t stride = 1;
      for (int k = axis + 1; k < grid_.dim(); ++k) stride *= grid_.cells(k);
      const std::int64_t block = stride * n;
      for (std::int64_t base = 0; base < static_cast<std::int64_t>(v.size());
           base += block) {
        for (std::int64_t s = 0; s < stride; ++s) {
          for (int i = 0; i < n; ++i) {
            const double um = i > 0 ? v[base + s + (i - 1) * stride]
                                    : -v[base + s];
            const double up = i + 1 < n ? v[base + s + (i + 1) * stride]
                                        : -v[base + s + (n - 1) * stride];
            out[base + s + i * stride] +=
                (um - 2.0 * v[base + s + i * stride] + up) * inv_h2;
          }
        }
      }
    }
    return out;
  }

 private:
  GridSpec grid_;
  std::vector<SineAxis> axes_;
};

}  // namespace frlevy
