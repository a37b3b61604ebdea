#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "varfit/error.hpp"
#include "varfit/point_cloud.hpp"

namespace varfit {

// All distances here are 2-Wasserstein with Euclidean ground metric and uniform weights,
// reported as sqrt(sum_ij P_ij |a_i - b_j|^2).

enum class TransportMethod { exact_assignment, sinkhorn };

inline const char* to_string(TransportMethod m) {
  return m == TransportMethod::exact_assignment ? "exact" : "sinkhorn";
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TransportPlan {
  double cost = 0.0;
  Eigen::MatrixXd coupling;  // |A| x |B|, row sums 1/|A|, column sums 1/|B|
  TransportMethod method = TransportMethod::exact_assignment;
  std::size_t iterations = 0;            // sinkhorn only
  double marginal_error = 0.0;           // sinkhorn only: max row-sum violation
  std::vector<std::size_t> assignment;   // exact only: A[i] -> B[assignment[i]]
};

/// Squared Euclidean distances, row-major |A| x |B|.
inline RowMatrix squared_distances(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim()) {
    throw InputError("transport: clouds of dimension " + std::to_string(a.dim()) + " and " +
                     std::to_string(b.dim()));
  }
  RowMatrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto p = a.point(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      auto q = b.point(j);
      double s = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = p[k] - q[k];
        s += d * d;
      }
      c(i, j) = s;
    }
  }
  return c;
}

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting paths with
/// dual potentials, O(m^3)). Returns row -> column.
inline std::vector<std::size_t> solve_assignment(const RowMatrix& cost) {
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw InputError("assignment: cost matrix must be square");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      const double ui0 = u[i0];
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui0 - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct ExactOptions {
  std::size_t max_size = 4096;
};

/// Exact W2 between equal-size clouds via optimal assignment.
inline TransportPlan wasserstein_exact(const PointCloud& a, const PointCloud& b, const ExactOptions& opt = {}) {
  if (a.size() != b.size()) {
    throw InputError("wasserstein_exact: cloud sizes differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + "); use the sinkhorn method");
  }
  if (a.empty()) throw InputError("wasserstein_exact: empty clouds");
  if (a.size() > opt.max_size) {
    throw InputError("wasserstein_exact: " + std::to_string(a.size()) + " points exceed the exact-size cap of " +
                     std::to_string(opt.max_size) + "; use the sinkhorn method");
  }
  const RowMatrix c = squared_distances(a, b);
  TransportPlan plan;
  plan.method = TransportMethod::exact_assignment;
  plan.assignment = solve_assignment(c);
  const std::size_t m = a.size();
  plan.coupling = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    total += c(i, plan.assignment[i]);
    plan.coupling(i, plan.assignment[i]) = 1.0 / static_cast<double>(m);
  }
  plan.cost = std::sqrt(total / static_cast<double>(m));
  return plan;
}

struct SinkhornOptions {
  double reg = 1e-3;         // entropic regularization, squared-distance units
  std::size_t max_iters = 100000;
  double tol = 1e-7;         // max row-marginal violation
  bool epsilon_scaling = true;
};

/// Entropically regularized W2 (log-domain Sinkhorn); clouds may differ in size.
/// The reported cost is that of the regularized plan without the entropy term.
inline TransportPlan wasserstein_sinkhorn(const PointCloud& a, const PointCloud& b, const SinkhornOptions& opt = {}) {
  if (!(opt.reg > 0.0)) throw InputError("wasserstein_sinkhorn: reg must be positive");
  if (a.empty() || b.empty()) throw InputError("wasserstein_sinkhorn: empty cloud");
  const RowMatrix c = squared_distances(a, b);
  const RowMatrix ct = c.transpose();
  const auto m = c.rows();
  const auto k = c.cols();
  const double log_a = -std::log(static_cast<double>(m));
  const double log_b = -std::log(static_cast<double>(k));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m), g = Eigen::VectorXd::Zero(k);
  // Terms below exp(-50) relative to the largest cannot move a double sum.
  constexpr double kLogTiny = -50.0;

  // row_lse(i) = log sum_j exp((g_j - C_ij) / eps)
  auto update_f = [&](double eps) {
    for (Eigen::Index i = 0; i < m; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < k; ++j) mx = std::max(mx, (g(j) - c(i, j)) / eps);
      double s = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double x = (g(j) - c(i, j)) / eps - mx;
        if (x > kLogTiny) s += std::exp(x);
      }
      f(i) = eps * (log_a - mx - std::log(s));
    }
  };
  auto update_g = [&](double eps) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) mx = std::max(mx, (f(i) - ct(j, i)) / eps);
      double s = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double x = (f(i) - ct(j, i)) / eps - mx;
        if (x > kLogTiny) s += std::exp(x);
      }
      g(j) = eps * (log_b - mx - std::log(s));
    }
  };
  auto row_violation = [&](double eps) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) s += std::exp((f(i) + g(j) - c(i, j)) / eps);
      worst = std::max(worst, std::abs(s - std::exp(log_a)));
    }
    return worst;
  };

  std::vector<double> schedule;
  if (opt.epsilon_scaling) {
    for (double e = std::max(c.maxCoeff(), opt.reg); e > opt.reg; e *= 0.5) schedule.push_back(e);
  }
  schedule.push_back(opt.reg);

  TransportPlan plan;
  plan.method = TransportMethod::sinkhorn;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const double eps = schedule[s];
    const bool last = s + 1 == schedule.size();
    const double stage_tol = last ? opt.tol : std::max(opt.tol, 1e-4 / static_cast<double>(m));
    bool converged = false;
    while (plan.iterations < opt.max_iters) {
      update_f(eps);
      update_g(eps);
      ++plan.iterations;
      if (plan.iterations % 10 == 0 || plan.iterations == opt.max_iters) {
        plan.marginal_error = row_violation(eps);
        if (plan.marginal_error <= stage_tol) {
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      throw BudgetError("wasserstein_sinkhorn: no convergence within " + std::to_string(opt.max_iters) +
                        " iterations (reg " + std::to_string(eps) + ", marginal error " +
                        std::to_string(plan.marginal_error) + ")");
    }
  }

  plan.coupling.resize(m, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double pij = std::exp((f(i) + g(j) - c(i, j)) / opt.reg);
      plan.coupling(i, j) = pij;
      total += pij * c(i, j);
    }
  }
  plan.cost = std::sqrt(std::max(total, 0.0));
  return plan;
}

/// Median of all pairwise squared distances; the natural unit for the sinkhorn reg.
inline double median_pairwise_cost(const PointCloud& a, const PointCloud& b) {
  RowMatrix c = squared_distances(a, b);
  std::vector<double> v(c.data(), c.data() + c.size());
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

/// Exact when the clouds have equal size within the cap, sinkhorn otherwise
/// (reg = reg_fraction * median pairwise cost).
inline TransportPlan wasserstein(const PointCloud& a, const PointCloud& b, double reg_fraction = 1e-3,
                                 const ExactOptions& exact = {}) {
  if (a.size() == b.size() && a.size() <= exact.max_size) return wasserstein_exact(a, b, exact);
  SinkhornOptions opt;
  opt.reg = reg_fraction * median_pairwise_cost(a, b);
  return wasserstein_sinkhorn(a, b, opt);
}

}  // namespace varfit
