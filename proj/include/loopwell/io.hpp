#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopwell/error.hpp"
#include "loopwell/lab.hpp"
#include "loopwell/normal_form.hpp"
#include "loopwell/quantize.hpp"
#include "loopwell/series.hpp"

namespace loopwell::io {

using json = nlohmann::ordered_json;

// ---- config reading -------------------------------------------------------

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
}

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

inline const json& require_key(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + std::string(key) + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<long>();
}

inline double get_number(const json& j, const char* key, const std::string& where) {
  return number(require_key(j, key, where), where + "." + key);
}
inline double get_number(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}
inline long get_integer(const json& j, const char* key, const std::string& where) {
  return integer(require_key(j, key, where), where + "." + key);
}
inline long get_integer(const json& j, const char* key, long fallback, const std::string& where) {
  return j.contains(key) ? integer(j.at(key), where + "." + key) : fallback;
}
inline bool get_bool(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
  return j.at(key).get<bool>();
}
inline std::string get_string(const json& j, const char* key, const std::string& where) {
  const auto& v = require_key(j, key, where);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// ---- domain objects -------------------------------------------------------

// {"mean": a0, "cos": [a1, a2, ...], "sin": [b1, ...]}
inline FourierPotential potential_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return FourierPotential(j.get<double>());
  reject_unknown_keys(j, {"mean", "cos", "sin"}, where);
  const double mean = get_number(j, "mean", 0.0, where);
  const auto c = j.contains("cos") ? number_array(j.at("cos"), where + ".cos") : std::vector<double>{};
  const auto s = j.contains("sin") ? number_array(j.at("sin"), where + ".sin") : std::vector<double>{};
  return FourierPotential::from_trig(mean, c, s);
}

inline json potential_to_json(const FourierPotential& v) {
  json cos = json::array(), sin = json::array();
  for (int l = 1; l <= v.cut(); ++l) {
    cos.push_back(2.0 * v[l].real());
    sin.push_back(-2.0 * v[l].imag());
  }
  return json{{"mean", v.mean()}, {"cos", cos}, {"sin", sin}};
}

// {"b0", "I0", "g": [0, g1, g2, ...], "g1": [...], "v0": potential, "v1": potential}
inline SymbolModel model_from_json(const json& j, const std::string& where = "model") {
  reject_unknown_keys(j, {"b0", "I0", "g", "g1", "v0", "v1"}, where);
  SymbolModel m;
  m.b0 = get_number(j, "b0", 0.0, where);
  m.I0 = get_number(j, "I0", where);
  m.g = TaylorSeries(number_array(require_key(j, "g", where), where + ".g"));
  if (j.contains("g1")) m.g1 = TaylorSeries(number_array(j.at("g1"), where + ".g1"));
  if (j.contains("v0")) m.v0 = potential_from_json(j.at("v0"), where + ".v0");
  if (j.contains("v1")) m.v1 = potential_from_json(j.at("v1"), where + ".v1");
  try {
    m.validate();
  } catch (const ContractError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return m;
}

inline json taylor_to_json(const TaylorSeries& t) {
  return json{{"coeffs", t.coeffs()}, {"valid_order", t.valid_order()}};
}

// {"base_point", "K", "J", "coeffs": [[k, j, re, im], ...], "valid_order"?}
inline FourierTaylorSeries series_from_json(const json& j, const std::string& where = "series") {
  reject_unknown_keys(j, {"base_point", "K", "J", "coeffs", "valid_order"}, where);
  const double base = get_number(j, "base_point", where);
  const long K = get_integer(j, "K", where);
  const long J = get_integer(j, "J", where);
  if (K < 0 || J < 0) throw ConfigError(where + ": K and J must be nonnegative");
  FourierTaylorSeries s(base, static_cast<int>(K), static_cast<int>(J));
  const auto& coeffs = require_key(j, "coeffs", where);
  if (!coeffs.is_array()) throw ConfigError(where + ".coeffs: expected an array");
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const auto& e = coeffs[i];
    const std::string at = where + ".coeffs[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 4) throw ConfigError(at + ": expected [k, j, re, im]");
    const long k = integer(e[0], at + "[0]");
    const long jj = integer(e[1], at + "[1]");
    if (std::abs(k) > K || jj < 0 || jj > J) throw ConfigError(at + ": index outside the declared cuts");
    s.at(static_cast<int>(k), static_cast<int>(jj)) += cplx{number(e[2], at + "[2]"), number(e[3], at + "[3]")};
  }
  if (j.contains("valid_order")) s.set_valid_order(static_cast<int>(get_integer(j, "valid_order", where)));
  if (s.reality_defect() > 1e-12 * std::max(1.0, s.max_abs()))
    throw ConfigError(where + ": coefficients violate c(-k, j) = conj c(k, j)");
  return s;
}

inline json series_to_json(const FourierTaylorSeries& s) {
  json coeffs = json::array();
  s.for_each_nonzero([&](int k, int j, cplx c) { coeffs.push_back(json::array({k, j, c.real(), c.imag()})); });
  return json{{"base_point", s.base_point()},
              {"K", s.fourier_cut()},
              {"J", s.taylor_cut()},
              {"valid_order", s.valid_order()},
              {"coeffs", coeffs}};
}

inline json normal_form_to_json(const NormalFormResult& nf) {
  json g = json::array(), v = json::array(), gens = json::array();
  for (const auto& t : nf.g_eps) g.push_back(taylor_to_json(t));
  for (const auto& s : nf.v_eps) v.push_back(series_to_json(s));
  for (const auto& [N, a] : nf.generators) gens.push_back(json{{"N", N}, {"generator", series_to_json(a)}});
  return json{{"eps_cut", nf.eps_cut}, {"g_eps", g}, {"v_eps", v}, {"generators", gens}, {"residual", series_to_json(nf.residual)}};
}

// [[a, b, c], ...] for sum c x^a xi^b
inline PlanePolynomial plane_polynomial_from_json(const json& j, const std::string& where = "symbol") {
  if (!j.is_array()) throw ConfigError(where + ": expected [[a, b, coeff], ...]");
  PlanePolynomial p;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 3) throw ConfigError(at + ": expected [a, b, coeff]");
    const long a = integer(j[i][0], at + "[0]");
    const long b = integer(j[i][1], at + "[1]");
    if (a < 0 || b < 0) throw ConfigError(at + ": negative exponent");
    p.add_term(static_cast<int>(a), static_cast<int>(b), number(j[i][2], at + "[2]"));
  }
  return p;
}

// ---- output ---------------------------------------------------------------

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw ContractError("CsvTable: header is mandatory");
  }

  void add_row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw ContractError("CsvTable: row width differs from header");
    rows_.push_back(values);
  }

  std::string str() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

// Indented JSON text; doubles print as the shortest round-trip form.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Non-finite values become strings.
inline json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

// Writes to a sibling temp file and renames over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw ContractError("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

// (row, col, re, im) triplets of the stored band.
inline std::string matrix_triplets_csv(const OperatorMatrix& op) {
  CsvTable t({"row", "col", "re", "im"});
  const auto& a = op.entries;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = a.lo(i); j <= a.hi(i); ++j) {
      const auto v = a(i, j);
      if (v != cplx{0.0, 0.0}) t.add_row({static_cast<double>(i), static_cast<double>(j), v.real(), v.imag()});
    }
  return t.str();
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records, std::size_t m) {
  std::vector<std::string> header{"inv_hbar"};
  for (std::size_t i = 0; i < m; ++i) header.push_back("lambda_" + std::to_string(i));
  for (std::size_t i = 0; i < m; ++i) header.push_back("branch_" + std::to_string(i));
  CsvTable t(header);
  for (const auto& r : records) {
    if (r.eigenvalues.size() != m) throw ContractError("sweep_csv: record has fewer eigenvalues than m");
    std::vector<double> row{r.inv_hbar};
    row.insert(row.end(), r.eigenvalues.begin(), r.eigenvalues.end());
    for (int b : r.branch_ids) row.push_back(static_cast<double>(b));
    t.add_row(row);
  }
  return t.str();
}

}  // namespace loopwell::io
