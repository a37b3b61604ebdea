#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varfit/data.hpp"
#include "varfit/error.hpp"
#include "varfit/map_fit.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/rng.hpp"
#include "varfit/sampling.hpp"
#include "varfit/singular.hpp"
#include "varfit/transport.hpp"

namespace varfit {

/// Sub-seed k of repetition r; the same derivation is used by the CLI so runs are replayable.
inline std::uint64_t derive_seed(std::uint64_t seed, std::size_t repeat, std::uint64_t k) {
  return CounterRng(seed, 1000 + repeat).bits_at(k);
}

struct DegreeRun {
  int degree = 0;
  std::size_t repeat = 0;
  double lambda = 0.0;
  double trace = 0.0;
  std::size_t kernel_dim = 0;
  std::size_t sampled = 0;
  std::uint64_t proposals = 0;
  bool budget_exhausted = false;
  double distance = 0.0;  // W2(reference, sample)
  TransportMethod method = TransportMethod::exact_assignment;
  std::size_t singular_count = 0;
  std::optional<double> singular_distance;  // W2(singular set, singular reference)
  double seconds = 0.0;
};

struct PipelineConfig {
  std::vector<int> degrees{1, 2, 3, 4, 5};
  std::size_t repeats = 3;
  std::uint64_t seed = 1;
  double eta = 1e-3;
  double epsilon = 0.02;
  std::size_t sample_m = 0;  // 0: same size as the reference cloud
  std::uint64_t max_proposals = 0;
  bool intersected = false;
  bool compare_singular = false;
  double sinkhorn_reg_fraction = 1e-3;

  // sphere-plane data
  std::size_t m = 1600;
  double sigma = 0.0;
  double plane_fraction = 0.5;
  std::size_t singular_ref_m = 400;
};

struct DegreeSummary {
  int degree = 0;
  double mean_distance = 0.0;
  double mean_lambda = 0.0;
  double mean_singular_count = 0.0;
  std::optional<double> mean_singular_distance;
};

struct PipelineResult {
  std::vector<DegreeRun> runs;
  std::vector<DegreeSummary> summary;

  const DegreeSummary& at(int degree) const {
    for (const auto& s : summary) {
      if (s.degree == degree) return s;
    }
    throw InputError("pipeline: degree " + std::to_string(degree) + " was not run");
  }
  int best_degree() const {
    if (summary.empty()) throw InputError("pipeline: no runs");
    return std::min_element(summary.begin(), summary.end(),
                            [](const auto& a, const auto& b) { return a.mean_distance < b.mean_distance; })
        ->degree;
  }
};

/// fit -> direct sample -> singular filter -> compare, for one training cloud and degree.
/// The sample is compared with `reference` (the noise-free data), the singular set with
/// `singular_reference` when one is given.
inline DegreeRun run_degree(const PointCloud& train, const PointCloud& reference, int degree,
                            std::uint64_t sample_seed, const PipelineConfig& cfg,
                            const PointCloud* singular_reference = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  DegreeRun run;
  run.degree = degree;
  const MapFit fit = fit_map(train, degree);
  run.lambda = fit.lambda;
  run.trace = fit.trace;
  run.kernel_dim = fit.kernel_dim();
  const Poly f = cfg.intersected ? intersected_map(fit) : map_polynomial(fit);

  SamplerConfig sc;
  sc.seed = sample_seed;
  sc.target_m = cfg.sample_m != 0 ? cfg.sample_m : reference.size();
  sc.eta = cfg.eta;
  sc.max_proposals = cfg.max_proposals;
  SampleResult sample;
  try {
    sample = direct_sample(f, sc);
  } catch (const SamplingBudgetError& e) {
    detail::warn(e.what());
    sample = e.partial();
    run.budget_exhausted = true;
  }
  run.sampled = sample.cloud.size();
  run.proposals = sample.proposals;
  if (sample.cloud.empty()) {
    throw BudgetError("pipeline: degree " + std::to_string(degree) + " produced no samples");
  }

  const TransportPlan plan = wasserstein(reference, sample.cloud, cfg.sinkhorn_reg_fraction);
  run.distance = plan.cost;
  run.method = plan.method;

  const SingularityReport rep = singularity_filter(f, sample.cloud, cfg.epsilon);
  run.singular_count = rep.accepted_count();
  if (singular_reference != nullptr && cfg.compare_singular && !rep.accepted.empty()) {
    SinkhornOptions so;
    so.reg = cfg.sinkhorn_reg_fraction * median_pairwise_cost(rep.accepted, *singular_reference);
    run.singular_distance = wasserstein_sinkhorn(rep.accepted, *singular_reference, so).cost;
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

namespace detail {

inline std::vector<DegreeSummary> summarize(const std::vector<DegreeRun>& runs, const std::vector<int>& degrees) {
  std::vector<DegreeSummary> out;
  for (int d : degrees) {
    DegreeSummary s;
    s.degree = d;
    std::size_t count = 0, with_sing = 0;
    double sing = 0.0;
    for (const auto& r : runs) {
      if (r.degree != d) continue;
      ++count;
      s.mean_distance += r.distance;
      s.mean_lambda += r.lambda;
      s.mean_singular_count += static_cast<double>(r.singular_count);
      if (r.singular_distance) {
        ++with_sing;
        sing += *r.singular_distance;
      }
    }
    if (count == 0) continue;
    s.mean_distance /= static_cast<double>(count);
    s.mean_lambda /= static_cast<double>(count);
    s.mean_singular_count /= static_cast<double>(count);
    if (with_sing == count) s.mean_singular_distance = sing / static_cast<double>(count);
    out.push_back(s);
  }
  return out;
}

}  // namespace detail

/// Degree sweep on sphere-plane data. Repetition r uses data seed derive_seed(seed, r, 0),
/// circle reference seed derive_seed(seed, r, 1) and one sampler seed derive_seed(seed, r, 2)
/// shared by all degrees. Training data carries noise sigma; distances are always measured
/// against the noise-free cloud built from the same base points.
inline PipelineResult run_sphere_plane_pipeline(const PipelineConfig& cfg) {
  if (cfg.degrees.empty()) throw InputError("pipeline: no degrees given");
  if (cfg.repeats == 0) throw InputError("pipeline: repeats must be at least 1");
  PipelineResult res;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t data_seed = derive_seed(cfg.seed, r, 0);
    const PointCloud clean = gen_sphere_plane(cfg.m, cfg.plane_fraction, data_seed);
    const PointCloud train = cfg.sigma > 0.0 ? add_gaussian_noise(clean, cfg.sigma, data_seed) : clean;
    const PointCloud circle = gen_sphere_plane_singular(cfg.singular_ref_m, derive_seed(cfg.seed, r, 1));
    for (int d : cfg.degrees) {
      DegreeRun run = run_degree(train, clean, d, derive_seed(cfg.seed, r, 2), cfg, &circle);
      run.repeat = r;
      res.runs.push_back(run);
    }
  }
  res.summary = detail::summarize(res.runs, cfg.degrees);
  return res;
}

/// Degree sweep on a user-supplied cloud (already in the unit cube); the sample is
/// compared with the input itself.
inline PipelineResult run_cloud_pipeline(const PointCloud& cloud, const PipelineConfig& cfg,
                                         const PointCloud* singular_reference = nullptr) {
  if (cfg.degrees.empty()) throw InputError("pipeline: no degrees given");
  PipelineResult res;
  for (std::size_t r = 0; r < std::max<std::size_t>(cfg.repeats, 1); ++r) {
    for (int d : cfg.degrees) {
      DegreeRun run = run_degree(cloud, cloud, d, derive_seed(cfg.seed, r, 2), cfg, singular_reference);
      run.repeat = r;
      res.runs.push_back(run);
    }
  }
  res.summary = detail::summarize(res.runs, cfg.degrees);
  return res;
}

}  // namespace varfit
