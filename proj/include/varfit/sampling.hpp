#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "varfit/error.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"
#include "varfit/rng.hpp"

namespace varfit {

enum class SamplingMode {
  single_stream,
  /// Proposals are split into index blocks processed by worker threads and merged by
  /// proposal index. Output is identical to single_stream for any worker count.
  indexed_parallel,
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t target_m = 1;
  double eta = 1e-3;  // direct-sampling threshold on |f(a)|
  /// Proposal budget; 0 means 10^6 proposals per requested point.
  std::uint64_t max_proposals = 0;
  SamplingMode mode = SamplingMode::single_stream;
  unsigned workers = 0;  // indexed_parallel only; 0 = hardware concurrency

  std::uint64_t budget() const {
    return max_proposals != 0 ? max_proposals : static_cast<std::uint64_t>(target_m) * 1'000'000ULL;
  }

  void validate() const {
    if (target_m < 1) throw InputError("sampler: target_m must be at least 1");
    if (!(eta > 0.0)) throw InputError("sampler: eta must be positive");
    if (budget() < target_m) throw InputError("sampler: max_proposals must be at least target_m");
  }
};

struct SampleResult {
  PointCloud cloud;
  std::vector<std::uint64_t> proposal_indices;  // index of the proposal behind each point
  std::uint64_t proposals = 0;                  // proposals drawn

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(cloud.size()) / static_cast<double>(proposals);
  }
};

/// Raised when the proposal budget runs out; carries everything accepted so far.
class SamplingBudgetError : public BudgetError {
 public:
  SamplingBudgetError(const std::string& what, SampleResult partial)
      : BudgetError(what), partial_(std::move(partial)) {}
  const SampleResult& partial() const { return partial_; }

 private:
  SampleResult partial_;
};

/// The shared proposal stream: proposal k occupies counters k*(n+1) .. k*(n+1)+n.
/// The first n draws are the point, the last is the rejection-sampling uniform alpha.
class ProposalStream {
 public:
  ProposalStream(std::uint64_t seed, std::size_t n) : rng_(seed), n_(n) {}

  void point(std::uint64_t k, std::span<double> out) const {
    const std::uint64_t base = k * (n_ + 1);
    for (std::size_t j = 0; j < n_; ++j) out[j] = rng_.uniform_at(base + j);
  }
  double alpha(std::uint64_t k) const { return rng_.uniform_at(k * (n_ + 1) + n_); }
  std::size_t dim() const { return n_; }

 private:
  CounterRng rng_;
  std::size_t n_;
};

namespace detail {

template <class Accept>
SampleResult run_sampler(const Poly& f, const SamplerConfig& cfg, const char* name, Accept accept) {
  cfg.validate();
  const std::size_t n = f.num_vars();
  const ProposalStream stream(cfg.seed, n);
  const std::uint64_t budget = cfg.budget();

  SampleResult res;
  res.cloud = PointCloud(n);
  res.cloud.reserve(cfg.target_m);

  auto scan = [&](std::uint64_t begin, std::uint64_t end, std::vector<std::uint64_t>& hits) {
    std::vector<double> a(n);
    for (std::uint64_t k = begin; k < end; ++k) {
      stream.point(k, a);
      if (accept(stream, k, std::span<const double>(a))) hits.push_back(k);
    }
  };
  auto take = [&](const std::vector<std::uint64_t>& hits, std::uint64_t block_end) {
    std::vector<double> a(n);
    for (std::uint64_t k : hits) {
      stream.point(k, a);
      res.cloud.push_back(a);
      res.proposal_indices.push_back(k);
      if (res.cloud.size() == cfg.target_m) {
        res.proposals = k + 1;
        return true;
      }
    }
    res.proposals = block_end;
    return false;
  };

  const unsigned workers = cfg.mode == SamplingMode::single_stream
                               ? 1u
                               : (cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency()));
  constexpr std::uint64_t kBlock = 8192;
  std::uint64_t next = 0;
  while (next < budget) {
    std::vector<std::vector<std::uint64_t>> hits(workers);
    std::vector<std::uint64_t> ends(workers);
    if (workers == 1) {
      ends[0] = std::min(budget, next + kBlock);
      scan(next, ends[0], hits[0]);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t b = std::min(budget, next + w * kBlock);
        ends[w] = std::min(budget, b + kBlock);
        pool.emplace_back([&, b, w] { scan(b, ends[w], hits[w]); });
      }
      for (auto& t : pool) t.join();
    }
    for (unsigned w = 0; w < workers; ++w) {
      if (take(hits[w], ends[w])) return res;
    }
    next = ends[workers - 1];
  }
  throw SamplingBudgetError(std::string(name) + ": proposal budget of " + std::to_string(budget) +
                                " exhausted after " + std::to_string(res.cloud.size()) + " of " +
                                std::to_string(cfg.target_m) + " points (acceptance rate " +
                                std::to_string(res.acceptance_rate()) + ")",
                            std::move(res));
}

}  // namespace detail

/// Rejection sampling against the unnormalized likelihood exp(-f(a)^2): a uniform proposal a
/// is kept when a uniform alpha satisfies alpha < exp(-f(a)^2).
inline SampleResult rejection_sample(const Poly& f, const SamplerConfig& cfg) {
  return detail::run_sampler(f, cfg, "rejection_sample",
                             [&f](const ProposalStream& s, std::uint64_t k, std::span<const double> a) {
                               const double v = eval(f, a);
                               return s.alpha(k) < std::exp(-v * v);
                             });
}

/// Direct sampling: uniform proposals kept iff |f(a)| < eta.
inline SampleResult direct_sample(const Poly& f, const SamplerConfig& cfg) {
  const double eta = cfg.eta;
  return detail::run_sampler(f, cfg, "direct_sample",
                             [&f, eta](const ProposalStream&, std::uint64_t, std::span<const double> a) {
                               return std::abs(eval(f, a)) < eta;
                             });
}

}  // namespace varfit
