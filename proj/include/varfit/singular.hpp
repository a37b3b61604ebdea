#pragma once

#include <string>
#include <vector>

#include "varfit/error.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"

namespace varfit {

/// Outcome of the gradient-norm filter.
struct SingularityReport {
  double epsilon = 0.0;
  PointCloud accepted;                // input points with ||grad f|| < epsilon, input order
  std::vector<double> gradient_norms; // one per input point
  std::vector<std::size_t> accepted_indices;

  std::size_t accepted_count() const { return accepted.size(); }
};

/// Keeps the points where the gradient of f is small; these lie at or near the singular
/// locus of Z(f) when the cloud hugs Z(f) and epsilon exceeds the sampling threshold.
inline SingularityReport singularity_filter(const Poly& f, const PointCloud& cloud, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("singularity_filter: epsilon must be positive");
  if (cloud.dim() != f.num_vars()) {
    throw InputError("singularity_filter: cloud dimension " + std::to_string(cloud.dim()) +
                     " does not match polynomial in " + std::to_string(f.num_vars()) + " variables");
  }
  SingularityReport rep;
  rep.epsilon = epsilon;
  rep.accepted = PointCloud(cloud.dim());
  rep.gradient_norms.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double g = gradient_norm(f, cloud.point(i));
    rep.gradient_norms.push_back(g);
    if (g < epsilon) {
      rep.accepted.push_back(cloud.point(i));
      rep.accepted_indices.push_back(i);
    }
  }
  return rep;
}

}  // namespace varfit
