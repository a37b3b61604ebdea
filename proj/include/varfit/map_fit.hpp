#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "varfit/error.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"

namespace varfit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Multivariate Vandermonde matrix U_ij = x^{alpha_j}(a_i).
///
/// Coordinates may leave [0, 1] by at most PointCloud::kNormalizedSlack (noise band);
/// such points trigger a single warning. Anything further out is rejected.
inline Matrix vandermonde(const PointCloud& cloud, const MonomialBasis& basis) {
  if (cloud.empty()) throw InputError("vandermonde: empty point cloud");
  if (cloud.dim() != basis.num_vars()) {
    throw InputError("vandermonde: cloud dimension " + std::to_string(cloud.dim()) +
                     " does not match basis with " + std::to_string(basis.num_vars()) + " variables");
  }
  std::size_t excursions = 0;
  double worst = 0.0;
  for (double v : cloud.coords()) {
    const double out = std::max(-v, v - 1.0);
    if (out > 0.0) {
      ++excursions;
      worst = std::max(worst, out);
    }
  }
  if (worst > PointCloud::kNormalizedSlack) {
    throw InputError("vandermonde: coordinates leave [0,1] by " + std::to_string(worst) +
                     "; normalize the cloud to the unit cube first");
  }
  if (excursions > 0) {
    detail::warn(std::to_string(excursions) + " coordinate(s) outside [0,1] (max excursion " +
                 std::to_string(worst) + ")");
  }

  const auto m = static_cast<Eigen::Index>(cloud.size());
  const auto N = static_cast<Eigen::Index>(basis.size());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> U(m, N);
  for (Eigen::Index i = 0; i < m; ++i) {
    monomial_values(basis, cloud.point(static_cast<std::size_t>(i)), {U.row(i).data(), static_cast<std::size_t>(N)});
  }
  return U;
}

/// Smallest eigenvalue of a symmetric matrix and an orthonormal basis of its (banded) eigenspace.
struct EigenBand {
  double lambda_min = 0.0;
  Vector eigenvalues;  // eigenvalues of the returned vectors, ascending
  Matrix vectors;      // N x k, orthonormal columns
  double residual = 0.0;  // max_i ||G v_i - lambda_i v_i||

  std::size_t dimension() const { return static_cast<std::size_t>(vectors.cols()); }
};

/// Full ascending spectrum of a symmetric matrix.
struct Spectrum {
  Vector values;
  Matrix vectors;
};

namespace detail {

inline void check_symmetric(const Matrix& G) {
  if (G.rows() == 0 || G.cols() == 0) throw InputError("eigenproblem on an empty matrix");
  if (G.rows() != G.cols()) throw InputError("eigenproblem on a non-square matrix");
  const double scale = G.cwiseAbs().maxCoeff();
  const double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1e-300)) {
    throw InputError("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
}

// Deterministic sign: the first coefficient within 1e-8 (relative) of the largest magnitude is positive.
inline std::size_t sign_pivot(std::span<const double> c) {
  double big = 0.0;
  for (double v : c) big = std::max(big, std::abs(v));
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (std::abs(c[k]) >= (1.0 - 1e-8) * big) return k;
  }
  return 0;
}

}  // namespace detail

inline Spectrum symmetric_spectrum(const Matrix& G) {
  detail::check_symmetric(G);
  // Symmetrize exactly so the solver sees a bit-symmetric input.
  const Matrix S = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
  if (solver.info() != Eigen::Success) throw BudgetError("symmetric eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvectors of every eigenvalue within multiplicity_tol of the smallest one.
inline EigenBand smallest_eigenpairs(const Matrix& G, double multiplicity_tol) {
  if (multiplicity_tol < 0.0) throw InputError("multiplicity tolerance must be non-negative");
  Spectrum spec = symmetric_spectrum(G);
  EigenBand band;
  band.lambda_min = spec.values(0);
  Eigen::Index k = 1;
  while (k < spec.values.size() && spec.values(k) - band.lambda_min <= multiplicity_tol) ++k;
  band.eigenvalues = spec.values.head(k);
  band.vectors = spec.vectors.leftCols(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double r = (G * band.vectors.col(j) - band.eigenvalues(j) * band.vectors.col(j)).norm();
    band.residual = std::max(band.residual, r);
  }
  return band;
}

/// Result of fitting a degree-D polynomial to a cloud.
struct MapFit {
  double lambda = 0.0;               // smallest eigenvalue of U^T U
  std::vector<Poly> kernel_basis;    // orthonormal basis of E_lambda, unit coefficient norm
  int degree = 0;
  std::size_t m = 0;
  double residual = 0.0;             // max ||(U^T U) v - lambda v||
  double trace = 0.0;                // trace(U^T U)
  double multiplicity_tol = 0.0;
  Vector spectrum;                   // all eigenvalues of U^T U, ascending

  std::size_t kernel_dim() const { return kernel_basis.size(); }
};

/// U^T U for a cloud and basis.
inline Matrix gram_matrix(const PointCloud& cloud, const MonomialBasis& basis) {
  const Matrix U = vandermonde(cloud, basis);
  Matrix G = Matrix::Zero(U.cols(), U.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(U.transpose());
  return G.selfadjointView<Eigen::Lower>();
}

/// Default band width for merging eigenvalues into E_lambda.
inline double default_multiplicity_tol(const Matrix& G) { return 1e-9 * G.trace() / static_cast<double>(G.rows()); }

/// MAP model: minimizes sum_i f(a_i)^2 over unit-norm coefficient vectors, i.e. the
/// smallest eigenpair(s) of the Gram matrix U^T U. The degree bound is never inferred.
inline MapFit fit_map(const PointCloud& cloud, int degree, std::optional<double> multiplicity_tol = std::nullopt) {
  if (cloud.empty()) throw InputError("fit_map: empty point cloud");
  BasisPtr basis = enumerate_monomials(cloud.dim(), degree);
  const Matrix G = gram_matrix(cloud, *basis);

  MapFit fit;
  fit.degree = degree;
  fit.m = cloud.size();
  fit.trace = G.trace();
  fit.multiplicity_tol = multiplicity_tol.value_or(default_multiplicity_tol(G));

  Spectrum spec = symmetric_spectrum(G);
  fit.spectrum = spec.values;
  fit.lambda = spec.values(0);
  Eigen::Index k = 1;
  while (k < spec.values.size() && spec.values(k) - fit.lambda <= fit.multiplicity_tol) ++k;

  for (Eigen::Index j = 0; j < k; ++j) {
    Vector v = spec.vectors.col(j);
    fit.residual = std::max(fit.residual, (G * v - spec.values(j) * v).norm());
    std::vector<double> c(v.data(), v.data() + v.size());
    if (c[detail::sign_pivot(c)] < 0.0) {
      for (double& x : c) x = -x;
    }
    fit.kernel_basis.emplace_back(basis, std::move(c));
  }
  return fit;
}

/// Deterministic representative of E_lambda: the first (sign-fixed) kernel basis vector.
inline Poly map_polynomial(const MapFit& fit) {
  if (fit.kernel_basis.empty()) throw InputError("map_polynomial: fit has an empty kernel basis");
  return fit.kernel_basis.front();
}

/// Intersected MAP model: sum of squares of the kernel basis when lambda is (numerically) zero.
inline Poly intersected_map(const MapFit& fit) {
  if (fit.lambda > fit.multiplicity_tol) return map_polynomial(fit);
  return sum_of_squares(fit.kernel_basis);
}

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Best rational approximation p/q of x with 1 <= q <= max_denominator (continued fractions
/// with semiconvergents).
inline Rational best_rational(double x, std::int64_t max_denominator) {
  if (max_denominator < 1) throw InputError("max_denominator must be at least 1");
  const bool neg = x < 0.0;
  double r = std::abs(x);
  // Convergents h/k.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double frac = r;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(frac);
    if (a_real > 9e15) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_denominator) {
      // Largest admissible semiconvergent; keep it if closer than the last convergent.
      const std::int64_t t = (max_denominator - k0) / k1;
      const std::int64_t hs = t * h1 + h0, ks = t * k1 + k0;
      if (k1 > 0 &&
          std::abs(static_cast<double>(hs) / static_cast<double>(ks) - r) <
              std::abs(static_cast<double>(h1) / static_cast<double>(k1) - r)) {
        h1 = hs;
        k1 = ks;
      }
      break;
    }
    const std::int64_t h2 = a * h1 + h0;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double rem = frac - a_real;
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
  }
  if (k1 == 0) {
    h1 = static_cast<std::int64_t>(std::llround(r));
    k1 = 1;
  }
  return {neg ? -h1 : h1, k1};
}

/// Polynomial with exact rational coefficients, recovered from a floating point one.
struct RationalPoly {
  BasisPtr basis;
  std::vector<Rational> coeffs;
  double scale = 1.0;  // rational coefficients approximate scale * (original coefficients)

  Poly to_poly() const {
    std::vector<double> c;
    c.reserve(coeffs.size());
    for (const auto& q : coeffs) c.push_back(q.value());
    return Poly(basis, std::move(c));
  }
};

struct RationalizeOptions {
  std::int64_t max_denominator = 64;
  double drop_tol = 1e-6;
  /// Largest accepted |scaled coefficient - p/q|; beyond it the coefficient is not
  /// representable at this denominator cap and rationalization fails.
  double max_error = 1e-6;
};

/// Scale so the largest-magnitude coefficient is +-1, drop tiny entries, and snap the rest
/// to nearby rationals.
inline RationalPoly rationalize(const Poly& f, const RationalizeOptions& opt = {}) {
  const auto& c = f.coeffs();
  const std::size_t pivot = detail::sign_pivot(c);
  if (c.empty() || c[pivot] == 0.0) throw InputError("rationalize: zero polynomial");
  RationalPoly out;
  out.basis = f.basis_ptr();
  out.scale = 1.0 / std::abs(c[pivot]);
  out.coeffs.resize(c.size());
  bool any = false;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double s = c[k] * out.scale;
    if (std::abs(s) < opt.drop_tol) continue;
    const Rational q = best_rational(s, opt.max_denominator);
    if (std::abs(q.value() - s) > opt.max_error) {
      throw InputError("rationalize: coefficient " + std::to_string(s) + " has no rational approximation with denominator <= " +
                       std::to_string(opt.max_denominator) + " within " + std::to_string(opt.max_error));
    }
    out.coeffs[k] = q;
    any = any || q.num != 0;
  }
  if (!any) throw InputError("rationalize: every coefficient dropped");
  return out;
}

}  // namespace varfit
