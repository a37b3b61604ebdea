#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "varfit/error.hpp"
#include "varfit/map_fit.hpp"
#include "varfit/point_cloud.hpp"
#include "varfit/poly.hpp"

namespace varfit {

// ---------------------------------------------------------------------------
// Point clouds as CSV: one point per row, comma-separated decimals.

enum class CsvHeader { absent, present, detect };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline PointCloud parse_cloud_csv(std::istream& in, CsvHeader header = CsvHeader::detect,
                                  const std::string& source = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  std::vector<double> coords;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::trim(line);
    if (body.empty()) continue;
    const auto cells = detail::split_commas(body);
    if (first) {
      first = false;
      bool numeric = true;
      double tmp;
      for (auto c : cells) numeric = numeric && detail::parse_double(c, tmp);
      if (header == CsvHeader::present || (header == CsvHeader::detect && !numeric)) {
        dim = cells.size();
        continue;
      }
    }
    if (dim == 0) dim = cells.size();
    if (cells.size() != dim) {
      throw InputError(source + ":" + std::to_string(lineno) + ": ragged row with " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(dim));
    }
    for (auto c : cells) {
      double v;
      if (!detail::parse_double(c, v)) {
        throw InputError(source + ":" + std::to_string(lineno) + ": non-numeric cell '" + std::string(detail::trim(c)) +
                         "'");
      }
      coords.push_back(v);
    }
  }
  if (dim == 0) throw InputError(source + ": no data rows");
  return PointCloud(dim, std::move(coords));
}

inline PointCloud load_cloud(const std::string& path, CsvHeader header = CsvHeader::detect) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse_cloud_csv(in, header, path);
}

inline void write_cloud_csv(std::ostream& out, const PointCloud& cloud, bool header = false) {
  if (header) {
    for (std::size_t j = 0; j < cloud.dim(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
    out << '\n';
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << detail::format_double(p[j]);
    out << '\n';
  }
}

inline void save_cloud(const PointCloud& cloud, const std::string& path, bool header = false) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_cloud_csv(out, cloud, header);
  if (!out) throw InputError("error writing " + path);
}

// ---------------------------------------------------------------------------
// Model files: self-describing JSON.

struct ModelFile {
  Poly poly;
  int fit_degree = 0;
  bool intersected = false;
  double lambda = 0.0;
  std::size_t kernel_dim = 0;
  std::optional<std::uint64_t> seed;
  std::optional<Normalization> normalization;
};

inline nlohmann::json to_json(const ModelFile& model) {
  nlohmann::json j;
  const auto& basis = model.poly.basis();
  j["format"] = "varfit-model";
  j["version"] = 1;
  j["n"] = basis.num_vars();
  j["D"] = basis.degree();
  j["ordering"] = "grlex";
  auto exps = nlohmann::json::array();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    auto e = basis.exponent(k);
    exps.push_back(std::vector<int>(e.begin(), e.end()));
  }
  j["exponents"] = std::move(exps);
  j["coefficients"] = model.poly.coeffs();
  j["lambda"] = model.lambda;
  j["kernel_dim"] = model.kernel_dim;
  j["fit_degree"] = model.fit_degree;
  j["intersected"] = model.intersected;
  j["seed"] = model.seed ? nlohmann::json(*model.seed) : nlohmann::json(nullptr);
  if (model.normalization) {
    j["normalization"] = {{"scale", model.normalization->scale}, {"offset", model.normalization->offset}};
  } else {
    j["normalization"] = nullptr;
  }
  return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "varfit-model") throw InputError("not a varfit model file");
    if (j.at("ordering").get<std::string>() != "grlex") {
      throw InputError("unsupported monomial ordering '" + j.at("ordering").get<std::string>() + "'");
    }
    const auto n = j.at("n").get<std::size_t>();
    const int degree = j.at("D").get<int>();
    const auto exps = j.at("exponents").get<std::vector<std::vector<int>>>();
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (exps.size() != coeffs.size()) throw InputError("model file: exponent and coefficient counts differ");
    Poly poly(enumerate_monomials(n, degree));
    std::vector<double> c(poly.basis().size(), 0.0);
    for (std::size_t k = 0; k < exps.size(); ++k) {
      const std::size_t idx = poly.basis().index_of(exps[k]);
      if (exps[k].size() != n || idx == c.size()) throw InputError("model file: exponent outside the declared basis");
      c[idx] = coeffs[k];
    }
    ModelFile model{Poly(poly.basis_ptr(), std::move(c))};
    model.lambda = j.value("lambda", 0.0);
    model.kernel_dim = j.value("kernel_dim", std::size_t{0});
    model.fit_degree = j.value("fit_degree", degree);
    model.intersected = j.value("intersected", false);
    if (j.contains("seed") && !j["seed"].is_null()) model.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("normalization") && !j["normalization"].is_null()) {
      Normalization rec;
      rec.scale = j["normalization"].at("scale").get<std::vector<double>>();
      rec.offset = j["normalization"].at("offset").get<std::vector<double>>();
      if (rec.scale.size() != n || rec.offset.size() != n) throw InputError("model file: normalization dimension");
      model.normalization = std::move(rec);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

inline void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << to_json(model).dump(2) << '\n';
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Text forms of polynomials.

namespace detail {

inline std::string monomial_text(std::span<const int> alpha, const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] == 0) continue;
    if (!s.empty()) s += '*';
    s += names[j];
    if (alpha[j] > 1) s += '^' + std::to_string(alpha[j]);
  }
  return s;
}

}  // namespace detail

/// Human-readable form, terms in basis order, zero coefficients omitted.
inline std::string to_string(const Poly& f, const std::vector<std::string>& names = {}) {
  const auto vars = names.empty() ? default_var_names(f.num_vars()) : names;
  std::string s;
  for (std::size_t k = 0; k < f.basis().size(); ++k) {
    const double c = f.coeffs()[k];
    if (c == 0.0) continue;
    const std::string mono = detail::monomial_text(f.basis().exponent(k), vars);
    std::string mag = detail::format_double(std::abs(c));
    if (!s.empty()) s += c < 0 ? " - " : " + ";
    else if (c < 0) s += "-";
    if (mono.empty()) s += mag;
    else if (std::abs(c) == 1.0) s += mono;
    else s += mag + "*" + mono;
  }
  return s.empty() ? "0" : s;
}

/// Rational polynomial in computer-algebra syntax, e.g. "x^3-x^2*y+1/2*x".
inline std::string to_string(const RationalPoly& f, const std::vector<std::string>& names = {}) {
  const auto vars = names.empty() ? default_var_names(f.basis->num_vars()) : names;
  std::string s;
  for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
    const Rational q = f.coeffs[k];
    if (q.den <= 0) throw InputError("rational coefficient with non-positive denominator");
    if (q.num == 0) continue;
    const std::string mono = detail::monomial_text(f.basis->exponent(k), vars);
    const std::int64_t a = q.num < 0 ? -q.num : q.num;
    std::string mag = std::to_string(a);
    if (q.den != 1) mag += "/" + std::to_string(q.den);
    if (q.num < 0) s += '-';
    else if (!s.empty()) s += '+';
    if (mono.empty()) s += mag;
    else if (a == 1 && q.den == 1) s += mono;
    else s += mag + "*" + mono;
  }
  return s.empty() ? "0" : s;
}

/// Script for the SINGULAR computer-algebra system: real radical, minimal associated primes
/// and Krull dimension of the ideal generated by f, over Q with lexicographic ordering.
inline std::string export_singular_script(const RationalPoly& f) {
  const std::size_t n = f.basis->num_vars();
  std::vector<std::string> names;
  std::string ring_vars;
  if (n <= 3) {
    names = default_var_names(n);
    for (std::size_t j = 0; j < n; ++j) ring_vars += (j ? "," : "") + names[j];
  } else {
    for (std::size_t j = 1; j <= n; ++j) names.push_back("x(" + std::to_string(j) + ")");
    ring_vars = "x(1.." + std::to_string(n) + ")";
  }
  std::ostringstream out;
  out << "LIB \"realrad.lib\"; LIB \"primdec.lib\";\n";
  out << "ring R = 0,(" << ring_vars << "),lp;\n";
  out << "ideal I = " << to_string(f, names) << ";\n";
  out << "ideal I2 = realrad(I);\n";
  out << "minAssGTZ(I2);\n";
  out << "dim(I2);\n";
  return out.str();
}

}  // namespace varfit
