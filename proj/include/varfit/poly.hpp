#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varfit/error.hpp"

namespace varfit {

using Exponent = std::vector<int>;

/// Ordered multi-indices alpha_k of all monomials of total degree <= D in n variables.
///
/// Ordering is graded lexicographic, descending: higher total degree first, ties broken
/// by lexicographically larger exponent vectors first. The constant monomial is last.
class MonomialBasis {
 public:
  MonomialBasis(std::size_t n, int degree);

  std::size_t num_vars() const { return n_; }
  int degree() const { return degree_; }
  std::size_t size() const { return exps_.size() / n_; }

  std::span<const int> exponent(std::size_t k) const { return {exps_.data() + k * n_, n_}; }

  /// Position of a multi-index in the ordering, or size() if absent.
  std::size_t index_of(std::span<const int> alpha) const {
    auto it = index_.find(Exponent(alpha.begin(), alpha.end()));
    return it == index_.end() ? size() : it->second;
  }

  bool operator==(const MonomialBasis& o) const { return n_ == o.n_ && degree_ == o.degree_; }

  /// binom(n + D, D)
  static std::size_t count(std::size_t n, int degree) {
    std::uint64_t r = 1;
    for (int i = 1; i <= degree; ++i) r = r * (n + static_cast<std::uint64_t>(i)) / i;
    return static_cast<std::size_t>(r);
  }

 private:
  std::size_t n_;
  int degree_;
  std::vector<int> exps_;
  std::map<Exponent, std::size_t> index_;
};

namespace detail {

// Appends all compositions of `total` into `parts` parts, lexicographically descending.
inline void compositions(int total, std::size_t parts, Exponent& cur, std::vector<int>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.insert(out.end(), cur.begin(), cur.end());
    cur.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    cur.push_back(first);
    compositions(total - first, parts - 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace detail

inline MonomialBasis::MonomialBasis(std::size_t n, int degree) : n_(n), degree_(degree) {
  if (n == 0) throw InputError("monomial basis needs at least one variable");
  if (degree < 0) throw InputError("degree bound must be non-negative");
  exps_.reserve(count(n, degree) * n);
  Exponent cur;
  for (int d = degree; d >= 0; --d) detail::compositions(d, n, cur, exps_);
  for (std::size_t k = 0; k < size(); ++k) {
    auto e = exponent(k);
    index_.emplace(Exponent(e.begin(), e.end()), k);
  }
}

/// Shared, immutable basis handle.
using BasisPtr = std::shared_ptr<const MonomialBasis>;

inline BasisPtr enumerate_monomials(std::size_t n, int degree) {
  return std::make_shared<const MonomialBasis>(n, degree);
}

/// Dense polynomial: coefficient vector c paired with a monomial basis.
class Poly {
 public:
  Poly(BasisPtr basis, std::vector<double> coeffs) : basis_(std::move(basis)), c_(std::move(coeffs)) {
    if (!basis_) throw InputError("polynomial requires a basis");
    if (c_.size() != basis_->size()) {
      throw InputError("coefficient vector of length " + std::to_string(c_.size()) +
                       " does not match basis of size " + std::to_string(basis_->size()));
    }
  }
  explicit Poly(BasisPtr basis) : Poly(basis, std::vector<double>(basis ? basis->size() : 0, 0.0)) {}

  /// Build from (exponent, coefficient) terms; the degree bound is the largest term degree
  /// unless a larger one is given.
  static Poly from_terms(std::size_t n, const std::vector<std::pair<Exponent, double>>& terms,
                         int degree = -1) {
    int d = std::max(degree, 0);
    for (const auto& [e, c] : terms) {
      if (e.size() != n) throw InputError("term exponent length does not match variable count");
      int s = 0;
      for (int a : e) s += a;
      d = std::max(d, s);
    }
    Poly p(enumerate_monomials(n, d));
    for (const auto& [e, c] : terms) p.c_[p.basis_->index_of(e)] += c;
    return p;
  }

  const MonomialBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  std::size_t num_vars() const { return basis_->num_vars(); }
  int degree() const { return basis_->degree(); }
  const std::vector<double>& coeffs() const { return c_; }
  double coeff(std::span<const int> alpha) const {
    std::size_t k = basis_->index_of(alpha);
    return k == c_.size() ? 0.0 : c_[k];
  }

  double norm() const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return std::sqrt(s);
  }
  /// Membership in Theta_D.
  bool is_normalized(double tol = 1e-12) const { return std::abs(norm() - 1.0) <= tol; }
  Poly normalized() const {
    const double r = norm();
    if (r == 0.0) throw InputError("cannot normalize the zero polynomial");
    std::vector<double> c = c_;
    for (double& v : c) v /= r;
    return Poly(basis_, std::move(c));
  }

  /// Re-express in a basis with a larger degree bound (same variables).
  Poly lifted(int degree) const {
    if (degree < this->degree()) throw InputError("cannot lift to a smaller degree bound");
    Poly out(enumerate_monomials(num_vars(), degree));
    for (std::size_t k = 0; k < c_.size(); ++k) out.c_[out.basis_->index_of(basis_->exponent(k))] = c_[k];
    return out;
  }

 private:
  BasisPtr basis_;
  std::vector<double> c_;
};

namespace detail {

inline void check_dim(const Poly& f, std::size_t dim) {
  if (dim != f.num_vars()) {
    throw InputError("point of dimension " + std::to_string(dim) + " passed to polynomial in " +
                     std::to_string(f.num_vars()) + " variables");
  }
}

// powers[j * (D + 1) + e] = a_j^e
inline void fill_powers(std::span<const double> a, std::size_t stride, double* pw) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    double v = 1.0;
    for (std::size_t e = 0; e < stride; ++e) {
      pw[j * stride + e] = v;
      v *= a[j];
    }
  }
}

// Calls fn(powers, stride); small tables live on the stack.
template <class Fn>
decltype(auto) with_powers(std::span<const double> a, int degree, Fn&& fn) {
  const std::size_t stride = static_cast<std::size_t>(degree) + 1;
  const std::size_t len = a.size() * stride;
  if (len <= 256) {
    double buf[256];
    fill_powers(a, stride, buf);
    return fn(static_cast<const double*>(buf), stride);
  }
  std::vector<double> heap(len);
  fill_powers(a, stride, heap.data());
  return fn(static_cast<const double*>(heap.data()), stride);
}

}  // namespace detail

/// Values of all basis monomials at a, written into out (size N).
inline void monomial_values(const MonomialBasis& basis, std::span<const double> a, std::span<double> out) {
  const std::size_t n = basis.num_vars();
  detail::with_powers(a, basis.degree(), [&](const double* pw, std::size_t stride) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      auto alpha = basis.exponent(k);
      double v = 1.0;
      for (std::size_t j = 0; j < n; ++j) v *= pw[j * stride + alpha[j]];
      out[k] = v;
    }
  });
}

inline double eval(const Poly& f, std::span<const double> a) {
  detail::check_dim(f, a.size());
  const auto& basis = f.basis();
  const std::size_t n = basis.num_vars();
  return detail::with_powers(a, basis.degree(), [&](const double* pw, std::size_t stride) {
    double sum = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double c = f.coeffs()[k];
      if (c == 0.0) continue;
      auto alpha = basis.exponent(k);
      double v = c;
      for (std::size_t j = 0; j < n; ++j) v *= pw[j * stride + alpha[j]];
      sum += v;
    }
    return sum;
  });
}

inline std::vector<double> gradient(const Poly& f, std::span<const double> a) {
  detail::check_dim(f, a.size());
  const auto& basis = f.basis();
  const std::size_t n = basis.num_vars();
  std::vector<double> g(n, 0.0);
  detail::with_powers(a, basis.degree(), [&](const double* pw, std::size_t stride) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double c = f.coeffs()[k];
      if (c == 0.0) continue;
      auto alpha = basis.exponent(k);
      for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] == 0) continue;
        double v = c * alpha[i];
        for (std::size_t j = 0; j < n; ++j) v *= pw[j * stride + (j == i ? alpha[j] - 1 : alpha[j])];
        g[i] += v;
      }
    }
  });
  return g;
}

inline double gradient_norm(const Poly& f, std::span<const double> a) {
  double s = 0.0;
  for (double v : gradient(f, a)) s += v * v;
  return std::sqrt(s);
}

/// Exact product by exponent-vector convolution.
inline Poly product(const Poly& a, const Poly& b) {
  if (a.num_vars() != b.num_vars()) throw InputError("product of polynomials in different variable counts");
  Poly out(enumerate_monomials(a.num_vars(), a.degree() + b.degree()));
  std::vector<double> c(out.basis().size(), 0.0);
  Exponent sum(a.num_vars());
  for (std::size_t i = 0; i < a.basis().size(); ++i) {
    const double ci = a.coeffs()[i];
    if (ci == 0.0) continue;
    auto ai = a.basis().exponent(i);
    for (std::size_t j = 0; j < b.basis().size(); ++j) {
      const double cj = b.coeffs()[j];
      if (cj == 0.0) continue;
      auto bj = b.basis().exponent(j);
      for (std::size_t v = 0; v < sum.size(); ++v) sum[v] = ai[v] + bj[v];
      c[out.basis().index_of(sum)] += ci * cj;
    }
  }
  return Poly(out.basis_ptr(), std::move(c));
}

/// f_1^2 + ... + f_k^2 over the degree-2D basis, D the largest input degree bound.
inline Poly sum_of_squares(std::span<const Poly> fs) {
  if (fs.empty()) throw InputError("sum_of_squares needs at least one polynomial");
  const std::size_t n = fs.front().num_vars();
  int degree = 0;
  for (const auto& f : fs) {
    if (f.num_vars() != n) throw InputError("sum_of_squares inputs differ in variable count");
    degree = std::max(degree, f.degree());
  }
  std::vector<double> c(MonomialBasis::count(n, 2 * degree), 0.0);
  BasisPtr basis;
  for (const auto& f : fs) {
    Poly sq = product(f.lifted(degree), f.lifted(degree));
    if (!basis) basis = sq.basis_ptr();
    for (std::size_t k = 0; k < c.size(); ++k) c[k] += sq.coeffs()[k];
  }
  return Poly(basis, std::move(c));
}

/// Default variable names: x, y, z for up to three variables, x1..xn otherwise.
inline std::vector<std::string> default_var_names(std::size_t n) {
  static const char* const xyz[] = {"x", "y", "z"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(n <= 3 ? xyz[i] : "x" + std::to_string(i + 1));
  return names;
}

}  // namespace varfit
