#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "varfit/error.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"
#include "varfit/rng.hpp"

namespace varfit {

namespace detail {
// Independent generator streams per data source.
enum : std::uint64_t {
  kStreamSphere = 11,
  kStreamPlane = 12,
  kStreamCircle = 13,
  kStreamLine = 14,
  kStreamNoise = 15,
};
}  // namespace detail

/// ((x-1/2)^2 + (y-1/2)^2 + (z-1/2)^2 - 1/4) * (x - y): a sphere of radius 1/2 centred in
/// the unit cube united with the plane x = y.
inline Poly sphere_plane_polynomial() {
  const Poly sphere = Poly::from_terms(3, {{{2, 0, 0}, 1.0},
                                           {{0, 2, 0}, 1.0},
                                           {{0, 0, 2}, 1.0},
                                           {{1, 0, 0}, -1.0},
                                           {{0, 1, 0}, -1.0},
                                           {{0, 0, 1}, -1.0},
                                           {{0, 0, 0}, 0.5}});
  const Poly plane = Poly::from_terms(3, {{{1, 0, 0}, 1.0}, {{0, 1, 0}, -1.0}});
  return product(sphere, plane);
}

/// Euclidean distance from p to the singular circle of the sphere-plane variety
/// (centre (1/2,1/2,1/2), radius 1/2, lying in the plane x = y).
inline double distance_to_singular_circle(std::span<const double> p) {
  const double dx = p[0] - 0.5, dy = p[1] - 0.5, dz = p[2] - 0.5;
  const double h = (dx - dy) / std::numbers::sqrt2;  // offset from the plane
  const double u = (dx + dy) / std::numbers::sqrt2;  // in-plane coordinates
  const double rho = std::hypot(u, dz);
  return std::hypot(h, rho - 0.5);
}

/// i.i.d. N(0, sigma^2) per coordinate, clamped to [0, 1].
inline PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InputError("add_gaussian_noise: sigma must be non-negative");
  if (sigma == 0.0) return cloud;
  RngStream rng(seed, detail::kStreamNoise);
  PointCloud out(cloud.dim());
  out.reserve(cloud.size());
  std::vector<double> p(cloud.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto q = cloud.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::clamp(q[j] + sigma * rng.normal(), 0.0, 1.0);
    out.push_back(p);
  }
  if (cloud.normalization()) out.set_normalization(*cloud.normalization());
  return out;
}

/// Samples from the sphere-plane variety: sphere points uniform on the sphere (normalized
/// Gaussians, rejected to the cube), plane points (t, t, z) uniform in the cube. With
/// noise_sigma > 0 isotropic Gaussian noise is added and clamped to [0,1]^3.
inline PointCloud gen_sphere_plane(std::size_t m_total, double plane_fraction, std::uint64_t seed,
                                   double noise_sigma = 0.0) {
  if (!(plane_fraction >= 0.0 && plane_fraction <= 1.0)) {
    throw InputError("gen_sphere_plane: plane_fraction must lie in [0, 1]");
  }
  const auto m_plane = static_cast<std::size_t>(std::llround(plane_fraction * static_cast<double>(m_total)));
  const std::size_t m_sphere = m_total - m_plane;
  PointCloud cloud(3);
  cloud.reserve(m_total);

  RngStream sphere_rng(seed, detail::kStreamSphere);
  while (cloud.size() < m_sphere) {
    std::array<double, 3> g{sphere_rng.normal(), sphere_rng.normal(), sphere_rng.normal()};
    const double r = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (r == 0.0) continue;
    std::array<double, 3> p{};
    for (int j = 0; j < 3; ++j) p[j] = 0.5 + 0.5 * g[j] / r;
    if (std::all_of(p.begin(), p.end(), [](double v) { return v >= 0.0 && v <= 1.0; })) cloud.push_back(p);
  }
  RngStream plane_rng(seed, detail::kStreamPlane);
  for (std::size_t i = 0; i < m_plane; ++i) {
    const double t = plane_rng.uniform();
    const double z = plane_rng.uniform();
    cloud.push_back(std::array<double, 3>{t, t, z});
  }
  return add_gaussian_noise(cloud, noise_sigma, seed);
}

/// Points on the singular circle of the sphere-plane variety, uniform in angle.
inline PointCloud gen_sphere_plane_singular(std::size_t m, std::uint64_t seed) {
  RngStream rng(seed, detail::kStreamCircle);
  PointCloud cloud(3);
  cloud.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    const double u = 0.5 * std::cos(th) / std::numbers::sqrt2;
    cloud.push_back(std::array<double, 3>{0.5 + u, 0.5 + u, 0.5 + 0.5 * std::sin(th)});
  }
  return cloud;
}

/// Noisy samples of the line (0,0,1) + t(1,1,-1), t uniform in [0,1], clipped to the cube.
inline PointCloud gen_noisy_line(std::size_t m, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InputError("gen_noisy_line: sigma must be non-negative");
  RngStream rng(seed, detail::kStreamLine);
  PointCloud cloud(3);
  cloud.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double t = rng.uniform();
    std::array<double, 3> p{t, t, 1.0 - t};
    if (sigma > 0.0) {
      for (double& v : p) v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
    }
    cloud.push_back(p);
  }
  return cloud;
}

/// Constraint residuals of a cyclooctane conformation (x1,y1,z1,...,x8,y8,z8): eight bond
/// equations |p_i - p_{i+1}|^2 - 2.21, then eight |p_i - p_{i+2}|^2 - (8/3) 2.21, indices mod 8.
inline std::vector<double> cyclooctane_residuals(std::span<const double> p) {
  constexpr double kBond = 2.21;
  if (p.size() != 24) {
    throw InputError("cyclooctane_residuals: expected 24 coordinates, got " + std::to_string(p.size()));
  }
  auto dist2 = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = p[3 * i + k] - p[3 * j + k];
      s += d * d;
    }
    return s;
  };
  std::vector<double> r(16);
  for (std::size_t i = 0; i < 8; ++i) {
    r[i] = dist2(i, (i + 1) % 8) - kBond;
    r[8 + i] = dist2(i, (i + 2) % 8) - 8.0 / 3.0 * kBond;
  }
  return r;
}

/// Per-axis min-max map into [0,1]. Axes without spread map to 0.5.
inline PointCloud normalize_to_unit_cube(const PointCloud& cloud) {
  if (cloud.empty()) throw InputError("normalize_to_unit_cube: empty cloud");
  const std::size_t n = cloud.dim();
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  }
  Normalization rec;
  rec.scale.resize(n);
  rec.offset.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (hi[j] > lo[j]) {
      rec.scale[j] = 1.0 / (hi[j] - lo[j]);
      rec.offset[j] = -lo[j] * rec.scale[j];
    } else {
      rec.scale[j] = 1.0;
      rec.offset[j] = 0.5 - lo[j];
    }
  }
  PointCloud out(n);
  out.reserve(cloud.size());
  std::vector<double> q(n);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      q[j] = hi[j] > lo[j] ? (p[j] - lo[j]) / (hi[j] - lo[j]) : 0.5;
    }
    out.push_back(q);
  }
  out.set_normalization(std::move(rec));
  return out;
}

/// Apply an existing normalization record to raw coordinates.
inline PointCloud apply_normalization(const PointCloud& raw, const Normalization& rec) {
  if (rec.dim() != raw.dim()) throw InputError("normalization record dimension does not match cloud");
  PointCloud out(raw.dim());
  out.reserve(raw.size());
  std::vector<double> q(raw.dim());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto p = raw.point(i);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = rec.scale[j] * p[j] + rec.offset[j];
    out.push_back(q);
  }
  out.set_normalization(rec);
  return out;
}

/// Inverse of the stored normalization; clouds without a record are returned unchanged.
inline PointCloud denormalize(const PointCloud& cloud) {
  if (!cloud.normalization()) return cloud;
  const auto& rec = *cloud.normalization();
  PointCloud out(cloud.dim());
  out.reserve(cloud.size());
  std::vector<double> q(cloud.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = (p[j] - rec.offset[j]) / rec.scale[j];
    out.push_back(q);
  }
  return out;
}

}  // namespace varfit
