#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varfit/error.hpp"

namespace varfit {

/// Per-axis affine map u = scale * x + offset taking raw coordinates into [0, 1].
struct Normalization {
  std::vector<double> scale;
  std::vector<double> offset;

  std::size_t dim() const { return scale.size(); }
};

/// m points in R^n stored row-major.
class PointCloud {
 public:
  /// Coordinates of normalized clouds must stay inside this band around [0, 1].
  static constexpr double kNormalizedSlack = 0.05;

  PointCloud() = default;
  explicit PointCloud(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InputError("point cloud dimension must be at least 1");
  }
  PointCloud(std::size_t dim, std::vector<double> coords) : PointCloud(dim) {
    if (coords.size() % dim != 0) {
      throw InputError("coordinate count " + std::to_string(coords.size()) +
                       " is not a multiple of dimension " + std::to_string(dim));
    }
    coords_ = std::move(coords);
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<double> point(std::size_t i) { return {coords_.data() + i * dim_, dim_}; }
  std::span<const double> coords() const { return coords_; }

  void push_back(std::span<const double> p) {
    if (p.size() != dim_) {
      throw InputError("point of dimension " + std::to_string(p.size()) +
                       " added to cloud of dimension " + std::to_string(dim_));
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  void reserve(std::size_t m) { coords_.reserve(m * dim_); }

  const std::optional<Normalization>& normalization() const { return normalization_; }
  void set_normalization(Normalization n) {
    if (n.dim() != dim_ || n.offset.size() != dim_) {
      throw InputError("normalization record dimension does not match cloud");
    }
    normalization_ = std::move(n);
  }

  bool operator==(const PointCloud& other) const {
    return dim_ == other.dim_ && coords_ == other.coords_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::optional<Normalization> normalization_;
};

}  // namespace varfit
