#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace frlevy {

// Rectangular lattice over a box [lower, upper), split into cells_per_axis
// uniform cells along each axis.  Cells are half-open boxes
// [edge_i, edge_{i+1}) so every point of the box belongs to exactly one cell.
// Flat cell indices are row-major with axis 0 slowest.
class GridSpec {
 public:
  GridSpec(std::vector<double> lower, std::vector<double> upper,
           std::vector<int> cells_per_axis)
      : lower_(std::move(lower)),
        upper_(std::move(upper)),
        cells_(std::move(cells_per_axis)) {
    if (lower_.empty() || lower_.size() != upper_.size() ||
        lower_.size() != cells_.size())
      throw std::invalid_argument("GridSpec: inconsistent axis counts");
    std::int64_t total = 1;
    for (std::size_t k = 0; k < lower_.size(); ++k) {
      if (!(lower_[k] < upper_[k]))
        throw std::invalid_argument("GridSpec: lower must be < upper on axis " +
                                    std::to_string(k));
      if (cells_[k] < 1)
        throw std::invalid_argument("GridSpec: cells_per_axis must be >= 1");
      if (total > (std::int64_t{1} << 31) / cells_[k])
        throw std::invalid_argument("GridSpec: total cell count too large");
      total *= cells_[k];
    }
    cell_count_ = total;
    volume_ = 1.0;
    widths_.resize(lower_.size());
    for (std::size_t k = 0; k < lower_.size(); ++k) {
      widths_[k] = (upper_[k] - lower_[k]) / cells_[k];
      volume_ *= widths_[k];
    }
  }

  int dim() const { return static_cast<int>(lower_.size()); }
  std::int64_t cell_count() const { return cell_count_; }
  double cell_volume() const { return volume_; }
  int cells(int axis) const { return cells_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double width(int axis) const { return widths_[axis]; }
  double length(int axis) const { return upper_[axis] - lower_[axis]; }
  double edge(int axis, int i) const { return lower_[axis] + i * widths_[axis]; }
  double center(int axis, int i) const {
    return lower_[axis] + (i + 0.5) * widths_[axis];
  }
  double box_volume() const { return volume_ * cell_count_; }

  std::int64_t flatten(std::span<const int> idx) const {
    std::int64_t flat = 0;
    for (int k = 0; k < dim(); ++k) flat = flat * cells_[k] + idx[k];
    return flat;
  }
  void unflatten(std::int64_t flat, std::span<int> idx) const {
    for (int k = dim() - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(flat % cells_[k]);
      flat /= cells_[k];
    }
  }

  // Half-open cell locator along one axis; -1 when outside the box.
  int locate(int axis, double x) const {
    if (x < lower_[axis] || x >= upper_[axis]) return -1;
    int i = static_cast<int>((x - lower_[axis]) / widths_[axis]);
    return i >= cells_[axis] ? cells_[axis] - 1 : i;
  }
  std::int64_t locate_cell(std::span<const double> point) const {
    std::int64_t flat = 0;
    for (int k = 0; k < dim(); ++k) {
      int i = locate(k, point[k]);
      if (i < 0) return -1;
      flat = flat * cells_[k] + i;
    }
    return flat;
  }

  bool operator==(const GridSpec& o) const {
    return lower_ == o.lower_ && upper_ == o.upper_ && cells_ == o.cells_;
  }

 private:
  std::vector<double> lower_, upper_;
  std::vector<int> cells_;
  std::vector<double> widths_;
  std::int64_t cell_count_ = 0;
  double volume_ = 0.0;
};

// A real function sampled on a grid, one value per cell (read as the cell
// average when the function is smooth on the grid scale).
struct GridFunction {
  GridSpec grid;
  std::vector<double> values;

  GridFunction(GridSpec g, std::vector<double> v)
      : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<std::int64_t>(values.size()) != grid.cell_count())
      throw std::invalid_argument("GridFunction: value count != cell count");
  }
  explicit GridFunction(GridSpec g)
      : grid(std::move(g)),
        values(static_cast<std::size_t>(grid.cell_count()), 0.0) {}

  // Sample a callable at all cell centers.
  template <class F>
  static GridFunction from_function(GridSpec g, F&& f) {
    GridFunction out(std::move(g));
    const int d = out.grid.dim();
    std::vector<int> idx(d);
    std::vector<double> x(d);
    for (std::int64_t c = 0; c < out.grid.cell_count(); ++c) {
      out.grid.unflatten(c, idx);
      for (int k = 0; k < d; ++k) x[k] = out.grid.center(k, idx[k]);
      out.values[static_cast<std::size_t>(c)] = f(std::span<const double>(x));
    }
    return out;
  }

  double integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
  }
};

}  // namespace frlevy
