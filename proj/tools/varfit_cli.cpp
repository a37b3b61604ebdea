// varfit command-line driver: gen, fit, sample, singular, compare, export-algebra, pipeline.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "varfit/varfit.hpp"

namespace {

using nlohmann::json;
using varfit::InputError;

constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;
constexpr const char* kVersion = "0.1.0";

struct Manifest {
  std::vector<std::string> argv;
  std::string command;
  json flags = json::object();
  json inputs = json::array();
  json outputs = json::array();
  json result = json::object();
  std::optional<std::uint64_t> seed;
  std::string path;  // where to write; empty selects a default
};

std::string manifest_path(const Manifest& man) {
  if (!man.path.empty()) return man.path;
  if (!man.outputs.empty()) return man.outputs.front().get<std::string>() + ".manifest.json";
  return "varfit_" + man.command + ".manifest.json";
}

void write_manifest(const Manifest& man, double seconds) {
  json j;
  j["tool"] = "varfit";
  j["version"] = kVersion;
  j["command"] = man.command;
  j["argv"] = man.argv;
  j["flags"] = man.flags;
  j["seed"] = man.seed ? json(*man.seed) : json(nullptr);
  j["inputs"] = man.inputs;
  j["outputs"] = man.outputs;
  j["timings"] = {{"total_seconds", seconds}};
  j["result"] = man.result;
  const std::string path = manifest_path(man);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write manifest " + path);
  out << j.dump(2) << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

varfit::ModelFile model_for(const varfit::MapFit& fit, const varfit::Poly& f, bool intersected,
                            const std::optional<varfit::Normalization>& norm) {
  varfit::ModelFile model{f};
  model.fit_degree = fit.degree;
  model.intersected = intersected;
  model.lambda = fit.lambda;
  model.kernel_dim = fit.kernel_dim();
  model.normalization = norm;
  return model;
}

json run_json(const varfit::DegreeRun& r) {
  json j = {{"degree", r.degree},
            {"repeat", r.repeat},
            {"lambda", r.lambda},
            {"trace", r.trace},
            {"kernel_dim", r.kernel_dim},
            {"sampled", r.sampled},
            {"proposals", r.proposals},
            {"budget_exhausted", r.budget_exhausted},
            {"distance", r.distance},
            {"method", varfit::to_string(r.method)},
            {"singular_count", r.singular_count},
            {"seconds", r.seconds}};
  j["singular_distance"] = r.singular_distance ? json(*r.singular_distance) : json(nullptr);
  return j;
}

struct Options {
  std::string kind = "sphere-plane";
  std::size_t m = 1600;
  double sigma = 0.0;
  double plane_fraction = 0.5;
  std::optional<std::uint64_t> seed;
  std::string input, reference, output, model, manifest;
  int degree = 3;
  std::vector<int> degrees{1, 2, 3, 4, 5};
  bool intersected = false;
  bool normalize = false;
  bool denormalize = false;
  bool header = false;
  std::string method = "direct";
  std::string compare_method = "auto";
  double eta = 1e-3;
  std::optional<double> eta_given;
  double epsilon = 0.02;
  std::uint64_t max_proposals = 0;
  unsigned workers = 1;
  double reg = 1e-3;
  std::int64_t max_denominator = 64;
  double drop_tol = 1e-6;
  std::size_t repeats = 3;
  std::size_t sample_m = 0;
  bool compare_singular = false;
  std::string singular_reference;
};

std::uint64_t require_seed(const Options& o, const std::string& cmd) {
  if (!o.seed) throw InputError(cmd + ": --seed is required for randomized commands");
  return *o.seed;
}

void warn_threshold_order(double epsilon, double eta) {
  if (epsilon <= eta) {
    varfit::detail::warn("epsilon (" + std::to_string(epsilon) + ") <= eta (" + std::to_string(eta) +
                         "): the gradient filter is unlikely to separate singular points");
  }
}

void cmd_gen(const Options& o, Manifest& man) {
  const std::uint64_t seed = require_seed(o, "gen");
  varfit::PointCloud cloud(3);
  if (o.kind == "sphere-plane") {
    cloud = varfit::gen_sphere_plane(o.m, o.plane_fraction, seed, o.sigma);
  } else if (o.kind == "sphere-plane-singular") {
    cloud = varfit::gen_sphere_plane_singular(o.m, seed);
  } else if (o.kind == "noisy-line") {
    cloud = varfit::gen_noisy_line(o.m, o.sigma, seed);
  } else {
    throw InputError("gen: unknown kind '" + o.kind + "' (sphere-plane, sphere-plane-singular, noisy-line)");
  }
  varfit::save_cloud(cloud, o.output, o.header);
  man.seed = seed;
  man.flags = {{"kind", o.kind}, {"m", o.m}, {"sigma", o.sigma}, {"plane_fraction", o.plane_fraction},
               {"header", o.header}};
  man.outputs.push_back(o.output);
  man.result = {{"points", cloud.size()}, {"dim", cloud.dim()}};
  std::cout << "wrote " << cloud.size() << " x " << cloud.dim() << " points to " << o.output << '\n';
}

void cmd_fit(const Options& o, Manifest& man) {
  varfit::PointCloud cloud = varfit::load_cloud(o.input);
  if (o.normalize) cloud = varfit::normalize_to_unit_cube(cloud);
  const varfit::MapFit fit = varfit::fit_map(cloud, o.degree);
  const varfit::Poly f = o.intersected ? varfit::intersected_map(fit) : varfit::map_polynomial(fit);
  varfit::save_model(model_for(fit, f, o.intersected, cloud.normalization()), o.output);
  man.flags = {{"degree", o.degree}, {"intersected", o.intersected}, {"normalize", o.normalize}};
  man.inputs.push_back(o.input);
  man.outputs.push_back(o.output);
  man.result = {{"lambda", fit.lambda},     {"trace", fit.trace},         {"lambda_over_trace", fit.lambda / fit.trace},
                {"kernel_dim", fit.kernel_dim()}, {"m", fit.m},         {"coefficients", f.coeffs().size()}};
  std::cout << "lambda " << fit.lambda << " (trace " << fit.trace << "), kernel_dim " << fit.kernel_dim() << '\n';
  std::cout << "f = " << varfit::to_string(f) << '\n';
}

void cmd_sample(const Options& o, Manifest& man) {
  const std::uint64_t seed = require_seed(o, "sample");
  const varfit::ModelFile model = varfit::load_model(o.model);
  varfit::SamplerConfig cfg;
  cfg.seed = seed;
  cfg.target_m = o.m;
  cfg.eta = o.eta;
  cfg.max_proposals = o.max_proposals;
  cfg.workers = o.workers;
  cfg.mode = o.workers > 1 ? varfit::SamplingMode::indexed_parallel : varfit::SamplingMode::single_stream;
  varfit::SampleResult res;
  if (o.method == "direct") {
    res = varfit::direct_sample(model.poly, cfg);
  } else if (o.method == "rejection") {
    res = varfit::rejection_sample(model.poly, cfg);
  } else {
    throw InputError("sample: unknown method '" + o.method + "' (direct, rejection)");
  }
  varfit::PointCloud out = res.cloud;
  if (o.denormalize && model.normalization) {
    out.set_normalization(*model.normalization);
    out = varfit::denormalize(out);
  }
  varfit::save_cloud(out, o.output, o.header);
  man.seed = seed;
  man.flags = {{"method", o.method}, {"m", o.m},         {"eta", o.eta},
               {"max_proposals", cfg.budget()}, {"workers", o.workers}, {"denormalize", o.denormalize}};
  man.inputs.push_back(o.model);
  man.outputs.push_back(o.output);
  man.result = {{"points", res.cloud.size()}, {"proposals", res.proposals}, {"acceptance_rate", res.acceptance_rate()}};
  std::cout << "accepted " << res.cloud.size() << " of " << res.proposals << " proposals (rate "
            << res.acceptance_rate() << ")\n";
}

void cmd_singular(const Options& o, Manifest& man) {
  const varfit::ModelFile model = varfit::load_model(o.model);
  const varfit::PointCloud cloud = varfit::load_cloud(o.input);
  if (o.eta_given) warn_threshold_order(o.epsilon, *o.eta_given);
  const varfit::SingularityReport rep = varfit::singularity_filter(model.poly, cloud, o.epsilon);
  varfit::save_cloud(rep.accepted, o.output, o.header);
  man.flags = {{"epsilon", o.epsilon}};
  man.inputs = {o.model, o.input};
  man.outputs.push_back(o.output);
  man.result = {{"input_points", cloud.size()}, {"accepted", rep.accepted_count()}};
  std::cout << rep.accepted_count() << " of " << cloud.size() << " points with gradient norm < " << o.epsilon << '\n';
}

void cmd_compare(const Options& o, Manifest& man) {
  const varfit::PointCloud a = varfit::load_cloud(o.input);
  const varfit::PointCloud b = varfit::load_cloud(o.reference);
  varfit::TransportPlan plan;
  if (o.compare_method == "exact") {
    plan = varfit::wasserstein_exact(a, b);
  } else if (o.compare_method == "sinkhorn") {
    varfit::SinkhornOptions so;
    so.reg = o.reg * varfit::median_pairwise_cost(a, b);
    plan = varfit::wasserstein_sinkhorn(a, b, so);
  } else if (o.compare_method == "auto") {
    plan = varfit::wasserstein(a, b, o.reg);
  } else {
    throw InputError("compare: unknown method '" + o.compare_method + "' (auto, exact, sinkhorn)");
  }
  man.flags = {{"method", o.compare_method}, {"reg_fraction", o.reg}};
  man.inputs = {o.input, o.reference};
  man.result = {{"distance", plan.cost},
                {"method", varfit::to_string(plan.method)},
                {"sizes", {a.size(), b.size()}},
                {"iterations", plan.iterations}};
  if (!o.output.empty()) {
    write_text(o.output, man.result.dump(2) + "\n");
    man.outputs.push_back(o.output);
  }
  std::printf("W2 = %.10g (%s)\n", plan.cost, varfit::to_string(plan.method));
}

void cmd_export(const Options& o, Manifest& man) {
  const varfit::ModelFile model = varfit::load_model(o.model);
  varfit::RationalizeOptions ro;
  ro.max_denominator = o.max_denominator;
  ro.drop_tol = o.drop_tol;
  const varfit::RationalPoly q = varfit::rationalize(model.poly.normalized(), ro);
  const std::string script = varfit::export_singular_script(q);
  write_text(o.output, script);
  man.flags = {{"max_denominator", o.max_denominator}, {"drop_tol", o.drop_tol}};
  man.inputs.push_back(o.model);
  man.outputs.push_back(o.output);
  man.result = {{"polynomial", varfit::to_string(q)}, {"scale", q.scale}};
  std::cout << varfit::to_string(q) << '\n';
}

void cmd_pipeline(const Options& o, Manifest& man) {
  const std::uint64_t seed = require_seed(o, "pipeline");
  warn_threshold_order(o.epsilon, o.eta);
  varfit::PipelineConfig cfg;
  cfg.degrees = o.degrees;
  cfg.repeats = o.repeats;
  cfg.seed = seed;
  cfg.eta = o.eta;
  cfg.epsilon = o.epsilon;
  cfg.sample_m = o.sample_m;
  cfg.max_proposals = o.max_proposals;
  cfg.intersected = o.intersected;
  cfg.compare_singular = o.compare_singular;
  cfg.sinkhorn_reg_fraction = o.reg;
  cfg.m = o.m;
  cfg.sigma = o.sigma;
  cfg.plane_fraction = o.plane_fraction;

  varfit::PipelineResult res;
  if (o.kind == "sphere-plane") {
    res = varfit::run_sphere_plane_pipeline(cfg);
  } else if (o.kind == "file") {
    if (o.input.empty()) throw InputError("pipeline: --kind file needs --input");
    varfit::PointCloud cloud = varfit::load_cloud(o.input);
    if (o.normalize) cloud = varfit::normalize_to_unit_cube(cloud);
    man.inputs.push_back(o.input);
    std::optional<varfit::PointCloud> sref;
    if (!o.singular_reference.empty()) {
      sref = varfit::load_cloud(o.singular_reference);
      if (cloud.normalization()) sref = varfit::apply_normalization(*sref, *cloud.normalization());
      man.inputs.push_back(o.singular_reference);
    }
    res = varfit::run_cloud_pipeline(cloud, cfg, sref ? &*sref : nullptr);
  } else {
    throw InputError("pipeline: unknown kind '" + o.kind + "' (sphere-plane, file)");
  }

  json runs = json::array();
  for (const auto& r : res.runs) runs.push_back(run_json(r));
  json summary = json::array();
  std::printf("%6s %12s %14s %10s %12s\n", "degree", "mean W2", "mean lambda", "singular", "singular W2");
  for (const auto& s : res.summary) {
    summary.push_back({{"degree", s.degree},
                       {"mean_distance", s.mean_distance},
                       {"mean_lambda", s.mean_lambda},
                       {"mean_singular_count", s.mean_singular_count},
                       {"mean_singular_distance",
                        s.mean_singular_distance ? json(*s.mean_singular_distance) : json(nullptr)}});
    std::printf("%6d %12.6f %14.6g %10.1f %12s\n", s.degree, s.mean_distance, s.mean_lambda, s.mean_singular_count,
                s.mean_singular_distance ? std::to_string(*s.mean_singular_distance).c_str() : "-");
  }
  std::printf("best degree: %d\n", res.best_degree());

  man.seed = seed;
  man.flags = {{"kind", o.kind},
               {"degrees", o.degrees},
               {"repeats", o.repeats},
               {"m", o.m},
               {"sigma", o.sigma},
               {"plane_fraction", o.plane_fraction},
               {"eta", o.eta},
               {"epsilon", o.epsilon},
               {"sample_m", o.sample_m},
               {"max_proposals", o.max_proposals},
               {"intersected", o.intersected},
               {"compare_singular", o.compare_singular},
               {"reg_fraction", o.reg},
               {"normalize", o.normalize}};
  man.result = {{"summary", summary}, {"best_degree", res.best_degree()}};
  if (!o.output.empty()) {
    write_text(o.output, json({{"runs", runs}, {"summary", summary}}).dump(2) + "\n");
    man.outputs.push_back(o.output);
  }
}

int run(std::vector<std::string> args);

int cmd_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path);
  json j;
  try {
    in >> j;
    auto argv = j.at("argv").get<std::vector<std::string>>();
    if (argv.size() < 2) throw InputError("manifest " + path + " has no command line");
    if (argv[1] == "replay") throw InputError("manifest " + path + " records a replay");
    return run(std::move(argv));
  } catch (const json::exception& e) {
    throw InputError("manifest " + path + ": " + e.what());
  }
}

int run(std::vector<std::string> args) {
  CLI::App app{"Fit algebraic varieties to point clouds, sample them and locate singular points."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed (required)"); };
  auto add_output = [&](CLI::App* c, const char* what, bool required = true) {
    auto* opt = c->add_option("--output,-o", o.output, what);
    if (required) opt->required();
  };
  auto add_manifest = [&](CLI::App* c) {
    c->add_option("--manifest", o.manifest, "Manifest path (default: <output>.manifest.json)");
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic point cloud");
  gen->add_option("--kind", o.kind, "sphere-plane | sphere-plane-singular | noisy-line")->required();
  gen->add_option("--m", o.m, "Number of points")->check(CLI::PositiveNumber);
  gen->add_option("--sigma", o.sigma, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("--plane-fraction", o.plane_fraction, "Share of sphere-plane points on the plane")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--header", o.header, "Write a header row");
  add_seed(gen);
  add_output(gen, "Output CSV");
  add_manifest(gen);

  auto* fit = app.add_subcommand("fit", "Fit a MAP model");
  fit->add_option("--input,-i", o.input, "Input CSV")->required();
  fit->add_option("--degree,-D", o.degree, "Degree bound")->required()->check(CLI::NonNegativeNumber);
  fit->add_flag("--intersected", o.intersected, "Sum of squares of the kernel basis");
  fit->add_flag("--normalize", o.normalize, "Min-max normalize the input to the unit cube first");
  add_output(fit, "Output model JSON");
  add_manifest(fit);

  auto* sample = app.add_subcommand("sample", "Sample points from a model");
  sample->add_option("--model", o.model, "Model JSON")->required();
  sample->add_option("--method", o.method, "direct | rejection");
  sample->add_option("--m", o.m, "Number of points")->check(CLI::PositiveNumber);
  sample->add_option("--eta", o.eta, "Direct-sampling threshold on |f|")->check(CLI::PositiveNumber);
  sample->add_option("--max-proposals", o.max_proposals, "Proposal budget (default 1e6 per point)");
  sample->add_option("--workers", o.workers, "Worker threads (output is identical for any count)")
      ->check(CLI::PositiveNumber);
  sample->add_flag("--denormalize", o.denormalize, "Map samples back through the model's normalization");
  sample->add_flag("--header", o.header, "Write a header row");
  add_seed(sample);
  add_output(sample, "Output CSV");
  add_manifest(sample);

  auto* singular = app.add_subcommand("singular", "Keep points where the model gradient is small");
  singular->add_option("--model", o.model, "Model JSON")->required();
  singular->add_option("--input,-i", o.input, "Input CSV (model coordinates)")->required();
  singular->add_option("--epsilon", o.epsilon, "Gradient-norm threshold")->check(CLI::PositiveNumber);
  singular->add_option("--eta", o.eta_given, "Sampling threshold used for the input, checked against epsilon");
  singular->add_flag("--header", o.header, "Write a header row");
  add_output(singular, "Output CSV");
  add_manifest(singular);

  auto* compare = app.add_subcommand("compare", "2-Wasserstein distance between two clouds");
  compare->add_option("--input,-i", o.input, "First cloud")->required();
  compare->add_option("--reference,-r", o.reference, "Second cloud")->required();
  compare->add_option("--method", o.compare_method, "auto | exact | sinkhorn");
  compare->add_option("--reg", o.reg, "Sinkhorn regularization as a fraction of the median squared distance")
      ->check(CLI::PositiveNumber);
  add_output(compare, "Optional JSON with the result", false);
  add_manifest(compare);

  auto* exp = app.add_subcommand("export-algebra", "Write a computer-algebra script for a model");
  exp->add_option("--model", o.model, "Model JSON")->required();
  exp->add_option("--max-denominator", o.max_denominator, "Largest denominator for rational coefficients")
      ->check(CLI::PositiveNumber);
  exp->add_option("--drop-tol", o.drop_tol, "Coefficients below this (after scaling) are dropped");
  add_output(exp, "Output script");
  add_manifest(exp);

  auto* pipe = app.add_subcommand("pipeline", "Degree sweep: gen -> fit -> sample -> singular -> compare");
  pipe->add_option("--kind", o.kind, "sphere-plane | file");
  pipe->add_option("--input,-i", o.input, "Input CSV for --kind file");
  pipe->add_option("--singular-reference", o.singular_reference, "Reference singular set for --kind file");
  pipe->add_option("--degrees", o.degrees, "Comma-separated degree list")->delimiter(',');
  pipe->add_option("--repeats", o.repeats, "Repetitions (independent data and sampler seeds)");
  pipe->add_option("--m", o.m, "Points in the generated cloud")->check(CLI::PositiveNumber);
  pipe->add_option("--sample-m", o.sample_m, "Points to sample (default: data size)");
  pipe->add_option("--sigma", o.sigma, "Noise on the training data")->check(CLI::NonNegativeNumber);
  pipe->add_option("--plane-fraction", o.plane_fraction, "Share of points on the plane")->check(CLI::Range(0.0, 1.0));
  pipe->add_option("--eta", o.eta, "Direct-sampling threshold")->check(CLI::PositiveNumber);
  pipe->add_option("--epsilon", o.epsilon, "Gradient-norm threshold")->check(CLI::PositiveNumber);
  pipe->add_option("--max-proposals", o.max_proposals, "Proposal budget per degree");
  pipe->add_option("--reg", o.reg, "Sinkhorn regularization fraction")->check(CLI::PositiveNumber);
  pipe->add_flag("--intersected", o.intersected, "Use the intersected MAP model");
  pipe->add_flag("--compare-singular", o.compare_singular, "Also compare singular sets with a reference");
  pipe->add_flag("--normalize", o.normalize, "Normalize --input to the unit cube");
  add_seed(pipe);
  add_output(pipe, "Optional JSON with all runs", false);
  add_manifest(pipe);

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path, "Manifest JSON")->required();

  const std::vector<std::string> argv = args;
  std::reverse(args.begin(), args.end());
  args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  if (replay->parsed()) return cmd_replay(replay_path);

  const auto t0 = std::chrono::steady_clock::now();
  Manifest man;
  man.argv = argv;
  man.path = o.manifest;
  CLI::App* sub = app.get_subcommands().front();
  man.command = sub->get_name();
  if (sub == gen) cmd_gen(o, man);
  else if (sub == fit) cmd_fit(o, man);
  else if (sub == sample) cmd_sample(o, man);
  else if (sub == singular) cmd_singular(o, man);
  else if (sub == compare) cmd_compare(o, man);
  else if (sub == exp) cmd_export(o, man);
  else if (sub == pipe) cmd_pipeline(o, man);
  write_manifest(man, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const varfit::InputError& e) {
    std::cerr << "varfit: error: " << e.what() << '\n';
    return kExitInput;
  } catch (const varfit::BudgetError& e) {
    std::cerr << "varfit: budget exhausted: " << e.what() << '\n';
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "varfit: " << e.what() << '\n';
    return 1;
  }
}
