#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "varfit/data.hpp"
#include "varfit/map_fit.hpp"

namespace {

using varfit::PointCloud;
using varfit::Poly;

double distance_to_l1(std::span<const double> p) {
  // L1 = (0,0,1) + t(1,1,-1)
  const Eigen::Vector3d d = Eigen::Vector3d(1, 1, -1).normalized();
  const Eigen::Vector3d v(p[0], p[1], p[2] - 1.0);
  return (v - v.dot(d) * d).norm();
}

TEST(GenSpherePlane, NoiseFreePointsOnVariety) {
  const Poly f = varfit::sphere_plane_polynomial();
  const PointCloud c = varfit::gen_sphere_plane(1600, 0.5, 41);
  ASSERT_EQ(c.size(), 1600u);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE(std::abs(varfit::eval(f, c.point(i))), 1e-10);
}

TEST(GenSpherePlane, ComponentSplitAndDeterminism) {
  const PointCloud c = varfit::gen_sphere_plane(1000, 0.3, 42);
  std::size_t plane = 0;
  for (std::size_t i = 0; i < c.size(); ++i) plane += c.point(i)[0] == c.point(i)[1];
  EXPECT_EQ(plane, 300u);
  EXPECT_EQ(c, varfit::gen_sphere_plane(1000, 0.3, 42));
  EXPECT_THROW(varfit::gen_sphere_plane(10, 1.5, 1), varfit::InputError);
}

TEST(GenSpherePlane, NoisyCloudSharesBasePoints) {
  const PointCloud clean = varfit::gen_sphere_plane(500, 0.5, 43);
  const PointCloud noisy = varfit::gen_sphere_plane(500, 0.5, 43, 0.025);
  EXPECT_EQ(noisy, varfit::add_gaussian_noise(clean, 0.025, 43));
  for (double v : noisy.coords()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GenSpherePlaneSingular, OnCircle) {
  const PointCloud c = varfit::gen_sphere_plane_singular(400, 44);
  ASSERT_EQ(c.size(), 400u);
  const Poly f = varfit::sphere_plane_polynomial();
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto p = c.point(i);
    EXPECT_LE(std::abs(p[0] - p[1]), 1e-10);
    EXPECT_LE(std::abs(2 * p[0] * p[0] - 2 * p[0] + p[2] * p[2] - p[2] + 0.5), 1e-10);
    for (double g : varfit::gradient(f, p)) EXPECT_LE(std::abs(g), 1e-8);
    EXPECT_LE(varfit::distance_to_singular_circle(p), 1e-12);
  }
}

TEST(DistanceToSingularCircle, KnownPoints) {
  EXPECT_NEAR(varfit::distance_to_singular_circle(std::vector<double>{0.5, 0.5, 0.5}), 0.5, 1e-15);
  // Off the plane x = y by h along its normal from a circle point.
  const double h = 0.1 / std::numbers::sqrt2;
  EXPECT_NEAR(varfit::distance_to_singular_circle(std::vector<double>{0.5 + h, 0.5 - h, 1.0}), 0.1, 1e-15);
}

TEST(GenNoisyLine, NoiseFreeOnLine) {
  const PointCloud c = varfit::gen_noisy_line(200, 0.0, 45);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE(distance_to_l1(c.point(i)), 1e-10);
  EXPECT_THROW(varfit::gen_noisy_line(10, -1.0, 1), varfit::InputError);
}

TEST(GenNoisyLine, TwoNearKernelDirections) {
  const PointCloud c = varfit::gen_noisy_line(100, 0.005, 46);
  const auto fit = varfit::fit_map(c, 1);
  const long below = std::count_if(fit.spectrum.begin(), fit.spectrum.end(), [](double v) { return v < 0.01; });
  EXPECT_GE(below, 2);
}

TEST(GenNoisyLine, NearbyPlanesCanMeetFarFromTheLine) {
  // The two planes reported for this configuration (coefficients to two decimals).
  // Both are near-kernel directions of the D = 1 fit, yet they meet in a different line.
  const PointCloud c = varfit::gen_noisy_line(100, 0.005, 46);
  auto basis = varfit::enumerate_monomials(3, 1);
  const Poly l1 = Poly(basis, {0.25, 0.38, 0.63, -0.63}).normalized();
  const Poly l2 = Poly(basis, {0.23, 0.39, 0.63, -0.63}).normalized();
  const auto G = varfit::gram_matrix(c, *basis);
  auto rayleigh = [&](const Poly& p) {
    const Eigen::Map<const Eigen::VectorXd> v(p.coeffs().data(), 4);
    return v.dot(G * v);
  };
  EXPECT_LT(rayleigh(l1), 0.01);
  EXPECT_LT(rayleigh(l2), 0.01);

  // Point-to-plane RMS of each plane over the data.
  auto rms = [&](const Poly& p) {
    const double g = std::hypot(p.coeffs()[0], p.coeffs()[1], p.coeffs()[2]);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += std::pow(varfit::eval(p, c.point(i)) / g, 2);
    return std::sqrt(s / static_cast<double>(c.size()));
  };
  const double plane_rms = std::max(rms(l1), rms(l2));

  // Intersection line direction n1 x n2 through (0,0,1), which lies on both planes.
  const Eigen::Vector3d n1(0.25, 0.38, 0.63), n2(0.23, 0.39, 0.63);
  const Eigen::Vector3d d = n1.cross(n2).normalized();
  EXPECT_NEAR(d.y() / d.x(), 2.02, 0.05);
  EXPECT_NEAR(d.z() / d.x(), -1.61, 0.05);
  double far = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    const Eigen::Vector3d p(t, t, 1 - t);
    const Eigen::Vector3d v = p - Eigen::Vector3d(0, 0, 1);
    far = std::max(far, (v - v.dot(d) * d).norm());
  }
  EXPECT_GT(far, 5.0 * plane_rms);
}

TEST(CyclooctaneResiduals, RegularOctagon) {
  // Planar regular octagon with side sqrt(2.21): circumradius R = s / (2 sin(pi/8)).
  const double s = std::sqrt(2.21);
  const double R = s / (2 * std::sin(std::numbers::pi / 8));
  std::vector<double> p;
  for (int i = 0; i < 8; ++i) {
    const double th = i * std::numbers::pi / 4;
    p.insert(p.end(), {R * std::cos(th), R * std::sin(th), 0.0});
  }
  const auto r = varfit::cyclooctane_residuals(p);
  ASSERT_EQ(r.size(), 16u);
  // i, i+2 chord of the octagon: 2R sin(pi/4).
  const double chord2 = std::pow(2 * R * std::sin(std::numbers::pi / 4), 2);
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(r[i], 0.0, 1e-10);
    EXPECT_NEAR(r[8 + i], chord2 - 8.0 / 3.0 * 2.21, 1e-10);
    EXPECT_GT(std::abs(r[8 + i]), 1e-3);
  }
}

TEST(CyclooctaneResiduals, RigidTranslationAndCyclicShift) {
  std::vector<double> p(24);
  for (int i = 0; i < 24; ++i) p[i] = std::sin(1.7 * i) + 0.3 * i;
  const auto r = varfit::cyclooctane_residuals(p);
  auto q = p;
  for (int i = 0; i < 24; i += 3) {
    q[i] += 1.5;
    q[i + 1] -= 0.7;
    q[i + 2] += 3.1;
  }
  const auto rt = varfit::cyclooctane_residuals(q);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(rt[i], r[i], 1e-10);

  std::vector<double> shifted(p.begin() + 3, p.end());
  shifted.insert(shifted.end(), p.begin(), p.begin() + 3);
  auto a = r, b = varfit::cyclooctane_residuals(shifted);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_THROW(varfit::cyclooctane_residuals(std::vector<double>(23)), varfit::InputError);
}

TEST(Normalize, IdentityOnTouchingUnitCloud) {
  const PointCloud c(2, {0.0, 1.0, 1.0, 0.0, 0.5, 0.25});
  const PointCloud u = varfit::normalize_to_unit_cube(c);
  ASSERT_TRUE(u.normalization());
  EXPECT_EQ(u.normalization()->scale, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(u.normalization()->offset, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(u.coords()[5], 0.25);
}

TEST(Normalize, ScaleAndOffset) {
  const PointCloud u = varfit::normalize_to_unit_cube(PointCloud(1, {-1.0, 3.0, 1.0}));
  EXPECT_EQ(u.normalization()->scale[0], 0.25);
  EXPECT_EQ(u.normalization()->offset[0], 0.25);
  EXPECT_EQ(u.coords()[2], 0.5);
}

TEST(Normalize, DegenerateAxisAndRoundTrip) {
  const PointCloud c(3, {2.0, -5.0, 7.0, 4.0, 10.0, 7.0, 3.0, 0.5, 7.0});
  const PointCloud u = varfit::normalize_to_unit_cube(c);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u.point(i)[2], 0.5);
  const PointCloud back = varfit::denormalize(u);
  for (std::size_t k = 0; k < c.coords().size(); ++k) EXPECT_NEAR(back.coords()[k], c.coords()[k], 1e-12);
  const PointCloud again = varfit::apply_normalization(c, *u.normalization());
  for (std::size_t k = 0; k < c.coords().size(); ++k) EXPECT_NEAR(again.coords()[k], u.coords()[k], 1e-15);
  EXPECT_THROW(varfit::normalize_to_unit_cube(PointCloud(2)), varfit::InputError);
}

TEST(AddGaussianNoise, ZeroSigmaIsIdentity) {
  const PointCloud c = varfit::gen_noisy_line(50, 0.0, 47);
  EXPECT_EQ(varfit::add_gaussian_noise(c, 0.0, 1), c);
  EXPECT_THROW(varfit::add_gaussian_noise(c, -0.1, 1), varfit::InputError);
}

TEST(AddGaussianNoise, VarianceOfPerturbations) {
  // Centre the cloud so clamping never triggers; then the perturbations are the raw draws.
  PointCloud c(2);
  for (int i = 0; i < 50000; ++i) c.push_back(std::vector<double>{0.5, 0.5});
  const double sigma = 0.025;
  const PointCloud n = varfit::add_gaussian_noise(c, sigma, 48);
  double s = 0.0, s2 = 0.0;
  for (double v : n.coords()) {
    s += v - 0.5;
    s2 += (v - 0.5) * (v - 0.5);
  }
  const double m = static_cast<double>(n.coords().size());
  const double var = s2 / m - (s / m) * (s / m);
  EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
}

TEST(AddGaussianNoise, OutputsClamped) {
  const PointCloud c = varfit::gen_noisy_line(2000, 0.0, 49);
  const PointCloud n = varfit::add_gaussian_noise(c, 0.2, 50);
  for (double v : n.coords()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace
