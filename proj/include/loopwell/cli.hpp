#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "loopwell/io.hpp"
#include "loopwell/lab.hpp"
#include "loopwell/normal_form.hpp"
#include "loopwell/quantize.hpp"
#include "loopwell/random_deformation.hpp"

namespace loopwell::cli {

using io::json;

enum ExitCode : int { kOk = 0, kContractError = 1, kConfigError = 2 };

struct RunContext {
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

// file name -> content, written only once the whole command has succeeded
using Outputs = std::map<std::string, std::string>;

inline std::vector<double> read_grid(const json& cfg) {
  const bool has_grid = cfg.contains("grid");
  const bool has_list = cfg.contains("inv_hbar");
  if (has_grid == has_list) throw ConfigError("sweep: give exactly one of 'grid' or 'inv_hbar'");
  if (has_list) {
    auto g = io::number_array(cfg.at("inv_hbar"), "sweep.inv_hbar");
    for (double x : g)
      if (!(x > 0.0)) throw ConfigError("sweep.inv_hbar: values must be positive");
    if (!std::is_sorted(g.begin(), g.end())) throw ConfigError("sweep.inv_hbar: values must be sorted");
    return g;
  }
  const auto& g = cfg.at("grid");
  io::reject_unknown_keys(g, {"first", "last", "step"}, "sweep.grid");
  const double first = io::get_number(g, "first", "sweep.grid");
  const double last = io::get_number(g, "last", "sweep.grid");
  const double step = io::get_number(g, "step", "sweep.grid");
  if (!(first > 0.0) || !(step > 0.0)) throw ConfigError("sweep.grid: first and step must be positive");
  std::vector<double> out;
  if (last < first) return out;
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(first + static_cast<double>(i) * step);
  return out;
}

// {"recipe": "plane"|"spin"|"circle", "m", "grid"|"inv_hbar", recipe keys, "gap_window"?}
//   plane:  "symbol": [[a, b, c], ...], "N"
//   circle: "model", "window_top"
inline Outputs cmd_sweep(const json& cfg, const RunContext& ctx) {
  io::require_object(cfg, "sweep");
  const std::string recipe = io::get_string(cfg, "recipe", "sweep");
  const auto m = static_cast<std::size_t>(io::get_integer(cfg, "m", "sweep"));
  if (m == 0) throw ConfigError("sweep.m: must be positive");
  const auto grid = read_grid(cfg);

  SpectrumRecipe spectrum;
  if (recipe == "plane") {
    io::reject_unknown_keys(cfg, {"recipe", "m", "grid", "inv_hbar", "gap_window", "symbol", "N"}, "sweep");
    const auto symbol = io::plane_polynomial_from_json(io::require_key(cfg, "symbol", "sweep"), "sweep.symbol");
    const long N = io::get_integer(cfg, "N", "sweep");
    if (N < static_cast<long>(m)) throw ConfigError("sweep.N: must be at least m");
    if (symbol.degree() > kMaxPlaneDegree) throw ConfigError("sweep.symbol: degree above 8");
    spectrum = plane_recipe(symbol, static_cast<std::size_t>(N));
  } else if (recipe == "spin") {
    io::reject_unknown_keys(cfg, {"recipe", "m", "grid", "inv_hbar", "gap_window"}, "sweep");
    for (double x : grid)
      if (x != std::round(x)) throw ConfigError("sweep: spin grid values are 2S and must be integers");
    if (!grid.empty() && m > static_cast<std::size_t>(grid.front()) + 1)
      throw ConfigError("sweep.m: exceeds the smallest spin dimension 2S+1");
    spectrum = spin_recipe();
  } else if (recipe == "circle") {
    io::reject_unknown_keys(cfg, {"recipe", "m", "grid", "inv_hbar", "gap_window", "model", "window_top"}, "sweep");
    const auto model = io::model_from_json(io::require_key(cfg, "model", "sweep"), "sweep.model");
    const double top = io::get_number(cfg, "window_top", "sweep");
    spectrum = matrix_recipe([model, top](double x) {
      const double h = 1.0 / x;
      return build_circle_operator(model, h, circle_range_for_window(model, h, top), top);
    });
  } else {
    throw ConfigError("sweep.recipe: expected 'plane', 'spin' or 'circle', got '" + recipe + "'");
  }

  const auto records = sweep(spectrum, grid, m, ctx.threads);
  json report{{"recipe", recipe}, {"m", m}, {"points", records.size()}};
  json jumps = json::array();
  if (records.size() >= 3)
    for (double x : detect_jumps(records)) jumps.push_back(x);
  report["jumps"] = jumps;
  if (cfg.contains("gap_window")) {
    const auto gs = gap_scaling(records, io::get_number(cfg, "gap_window", "sweep"));
    report["gap_fit"] = json{{"exponent", io::finite_or_string(gs.fit.exponent)},
                             {"prefactor", gs.fit.prefactor},
                             {"r_squared", gs.fit.r_squared},
                             {"windows", gs.min_gap.size()}};
  }
  return {{"sweep.csv", io::sweep_csv(records, m)}, {"sweep_report.json", io::dump(report)}};
}

// {"model", "K", "J", "eps_cut", "perturbations": [series, ...], "pin_base_point"?}
// or {"random": {"reversible", "max_fourier_cut", "max_eps_cut"}, "pin_base_point"?} driven by --seed.
inline Outputs cmd_bnf(const json& cfg, const RunContext& ctx) {
  io::reject_unknown_keys(cfg, {"model", "K", "J", "eps_cut", "perturbations", "pin_base_point", "random"}, "bnf");
  NormalFormOptions options;
  options.pin_base_point = io::get_bool(cfg, "pin_base_point", true, "bnf");

  SymbolModel model;
  std::optional<FormalDeformation> p;
  if (cfg.contains("random")) {
    for (const char* k : {"model", "K", "J", "eps_cut", "perturbations"})
      if (cfg.contains(k)) throw ConfigError(std::string("bnf: '") + k + "' cannot be combined with 'random'");
    const auto& r = cfg.at("random");
    io::reject_unknown_keys(r, {"reversible", "max_fourier_cut", "max_eps_cut"}, "bnf.random");
    RandomDeformationOptions ro;
    ro.reversible = io::get_bool(r, "reversible", true, "bnf.random");
    ro.max_fourier_cut = static_cast<int>(io::get_integer(r, "max_fourier_cut", 6, "bnf.random"));
    ro.max_eps_cut = static_cast<int>(io::get_integer(r, "max_eps_cut", 4, "bnf.random"));
    auto rd = random_deformation(ctx.seed, ro);
    model = rd.model;
    p = rd.deformation;
  } else {
    model = io::model_from_json(io::require_key(cfg, "model", "bnf"), "bnf.model");
    const long K = io::get_integer(cfg, "K", "bnf");
    const long J = io::get_integer(cfg, "J", "bnf");
    const long eps_cut = io::get_integer(cfg, "eps_cut", "bnf");
    if (K < 0 || J < 1 || eps_cut < 1) throw ConfigError("bnf: need K >= 0, J >= 1, eps_cut >= 1");
    std::vector<FourierTaylorSeries> perts;
    if (cfg.contains("perturbations")) {
      const auto& arr = cfg.at("perturbations");
      if (!arr.is_array()) throw ConfigError("bnf.perturbations: expected an array of series");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        auto s = io::series_from_json(arr[i], "bnf.perturbations[" + std::to_string(i) + "]");
        if (s.base_point() != model.I0) throw ConfigError("bnf.perturbations: base_point must equal model.I0");
        perts.push_back(std::move(s));
      }
    }
    if (static_cast<long>(perts.size()) > eps_cut) throw ConfigError("bnf: more perturbations than eps_cut");
    p = FormalDeformation::of_model(model, static_cast<int>(K), static_cast<int>(J), static_cast<int>(eps_cut), perts);
  }

  const auto nf = birkhoff_normal_form(*p, model, options);
  json out{{"b0", model.b0}, {"I0", model.I0}, {"pin_base_point", options.pin_base_point}};
  out["result"] = io::normal_form_to_json(nf);
  return {{"bnf.json", io::dump(out)}};
}

// {"g0p", "g1p", "v": potential, "K", "sigma_points"}
inline Outputs cmd_model_a(const json& cfg, const RunContext&) {
  io::reject_unknown_keys(cfg, {"g0p", "g1p", "v", "K", "sigma_points"}, "model-a");
  ModelAParams params;
  params.g0p = io::get_number(cfg, "g0p", 1.0, "model-a");
  params.g1p = io::get_number(cfg, "g1p", 0.0, "model-a");
  if (cfg.contains("v")) params.v = io::potential_from_json(cfg.at("v"), "model-a.v");
  params.K = static_cast<int>(io::get_integer(cfg, "K", 40, "model-a"));
  const long n = io::get_integer(cfg, "sigma_points", 200, "model-a");
  if (n < 1 || params.K < 1) throw ConfigError("model-a: sigma_points and K must be positive");
  std::vector<double> sigmas;
  for (long i = 0; i < n; ++i) sigmas.push_back(static_cast<double>(i) / static_cast<double>(n));
  const auto prof = oscillation_profile(params, sigmas);
  io::CsvTable t({"sigma", "lowest_eigenvalue"});
  for (std::size_t i = 0; i < prof.sigma.size(); ++i) t.add_row({prof.sigma[i], prof.value[i]});
  json report{{"amplitude", prof.amplitude}, {"periodicity_defect", prof.periodicity_defect}, {"points", n}};
  return {{"model_a.csv", t.str()}, {"model_a_report.json", io::dump(report)}};
}

inline std::vector<double> dyadic_hbars(const json& cfg, const std::string& where) {
  const double base = io::get_number(cfg, "hbar_base", 1.0, where);
  const long j0 = io::get_integer(cfg, "j_first", where);
  const long j1 = io::get_integer(cfg, "j_last", where);
  if (j1 < j0 || !(base > 0.0)) throw ConfigError(where + ": need j_first <= j_last and hbar_base > 0");
  std::vector<double> h;
  for (long j = j0; j <= j1; ++j) h.push_back(base * std::ldexp(1.0, static_cast<int>(-j)));
  return h;
}

inline json fit_json(const ScalingFit& f) {
  return json{{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared}, {"points", f.points}};
}

// Fit on the strictly positive deviations; null when fewer than two remain.
inline json deviation_fit(const std::vector<double>& hbar, const std::vector<double>& dev) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < hbar.size(); ++i)
    if (dev[i] > 0.0) {
      x.push_back(hbar[i]);
      y.push_back(dev[i]);
    }
  if (x.size() < 2) return nullptr;
  return fit_json(loglog_fit(x, y));
}

// small: {"regime": "small", "model", "C", "hbar_base"?, "j_first", "j_last"}
// large: {"regime": "large", "model", "E": [...], "hbar_base"?, "j_first", "j_last", "c1"?, "c2"?}
inline Outputs cmd_compare_bs(const json& cfg, const RunContext& ctx) {
  io::require_object(cfg, "compare-bs");
  const std::string regime = io::get_string(cfg, "regime", "compare-bs");
  if (regime == "small") {
    io::reject_unknown_keys(cfg, {"regime", "model", "C", "hbar_base", "j_first", "j_last"}, "compare-bs");
    const auto model = io::model_from_json(io::require_key(cfg, "model", "compare-bs"), "compare-bs.model");
    const double C = io::get_number(cfg, "C", "compare-bs");
    const auto hs = dyadic_hbars(cfg, "compare-bs");
    std::vector<SpectralComparison> rows(hs.size());
    parallel_for(hs.size(), ctx.threads, [&](std::size_t i) { rows[i] = compare_small_energy(model, hs[i], C); });
    io::CsvTable t({"hbar", "max_deviation", "full_count", "model_count", "paired", "count_mismatch"});
    std::vector<double> dev;
    json mismatches = json::array();
    for (const auto& r : rows) {
      t.add_row({r.hbar, r.max_deviation, double(r.full_count), double(r.model_count), double(r.paired),
                 r.count_mismatch ? 1.0 : 0.0});
      dev.push_back(r.max_deviation);
      if (r.count_mismatch) mismatches.push_back(r.hbar);
    }
    json report{{"regime", "small"}, {"C", C}, {"fit", deviation_fit(hs, dev)}, {"count_mismatch_hbar", mismatches}};
    return {{"compare_small.csv", t.str()}, {"compare_small_report.json", io::dump(report)}};
  }
  if (regime == "large") {
    io::reject_unknown_keys(cfg, {"regime", "model", "E", "hbar_base", "j_first", "j_last", "c1", "c2"}, "compare-bs");
    const auto model = io::model_from_json(io::require_key(cfg, "model", "compare-bs"), "compare-bs.model");
    const auto Es = io::number_array(io::require_key(cfg, "E", "compare-bs"), "compare-bs.E");
    LargeEnergyWindow window;
    window.c1 = io::get_number(cfg, "c1", window.c1, "compare-bs");
    window.c2 = io::get_number(cfg, "c2", window.c2, "compare-bs");
    const auto hs = dyadic_hbars(cfg, "compare-bs");
    for (double E : Es)
      for (double h : hs)
        if (!(E >= h / window.c2 && E <= window.c1))
          throw ConfigError("compare-bs: E=" + io::format_number(E) + " outside [hbar/c2, c1] for hbar=" + io::format_number(h));
    std::vector<SpectralComparison> rows(Es.size() * hs.size());
    parallel_for(rows.size(), ctx.threads, [&](std::size_t i) {
      rows[i] = compare_large_energy(model, hs[i % hs.size()], Es[i / hs.size()], window);
    });
    io::CsvTable t({"E", "hbar", "max_deviation", "full_count", "model_count", "paired", "count_mismatch"});
    json fits = json::array();
    for (std::size_t e = 0; e < Es.size(); ++e) {
      std::vector<double> dev;
      for (std::size_t i = 0; i < hs.size(); ++i) {
        const auto& r = rows[e * hs.size() + i];
        t.add_row({Es[e], r.hbar, r.max_deviation, double(r.full_count), double(r.model_count), double(r.paired),
                   r.count_mismatch ? 1.0 : 0.0});
        dev.push_back(r.max_deviation);
      }
      fits.push_back(json{{"E", Es[e]}, {"fit", deviation_fit(hs, dev)}});
    }
    json report{{"regime", "large"}, {"fits", fits}};
    return {{"compare_large.csv", t.str()}, {"compare_large_report.json", io::dump(report)}};
  }
  throw ConfigError("compare-bs.regime: expected 'small' or 'large', got '" + regime + "'");
}

inline std::vector<std::pair<double, double>> point_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected [[x, y], ...]");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) throw ConfigError(at + ": expected [x, y]");
    pts.emplace_back(io::number(j[i][0], at), io::number(j[i][1], at));
  }
  return pts;
}

// {"curve": {"kind": "circle", "radius"} | {"kind": "cylinder_graph", "c": potential}
//           | {"kind": "sampled_circle", "radius", "samples"} | {"kind": "plane_points", "points"}
//           | {"kind": "cylinder_points", "points"}}
inline Outputs cmd_action(const json& cfg, const RunContext&) {
  io::reject_unknown_keys(cfg, {"curve"}, "action");
  const auto& c = io::require_key(cfg, "curve", "action");
  io::require_object(c, "action.curve");
  const std::string kind = io::get_string(c, "kind", "action.curve");
  CurveDescriptor curve;
  if (kind == "circle") {
    io::reject_unknown_keys(c, {"kind", "radius"}, "action.curve");
    curve = RadialCircle{io::get_number(c, "radius", "action.curve")};
  } else if (kind == "cylinder_graph") {
    io::reject_unknown_keys(c, {"kind", "c"}, "action.curve");
    curve = CylinderGraph{io::potential_from_json(io::require_key(c, "c", "action.curve"), "action.curve.c")};
  } else if (kind == "sampled_circle") {
    io::reject_unknown_keys(c, {"kind", "radius", "samples"}, "action.curve");
    const double r = io::get_number(c, "radius", "action.curve");
    const long n = io::get_integer(c, "samples", "action.curve");
    if (n < 3) throw ConfigError("action.curve.samples: need at least 3");
    SampledPlaneCurve s;
    for (long i = 0; i < n; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      s.points.emplace_back(r * std::cos(t), r * std::sin(t));
    }
    s.points.push_back(s.points.front());
    curve = s;
  } else if (kind == "plane_points") {
    io::reject_unknown_keys(c, {"kind", "points"}, "action.curve");
    curve = SampledPlaneCurve{point_list(io::require_key(c, "points", "action.curve"), "action.curve.points")};
  } else if (kind == "cylinder_points") {
    io::reject_unknown_keys(c, {"kind", "points"}, "action.curve");
    curve = SampledCylinderCurve{point_list(io::require_key(c, "points", "action.curve"), "action.curve.points")};
  } else {
    throw ConfigError("action.curve.kind: unknown kind '" + kind + "'");
  }
  json report{{"kind", kind}, {"I0", action_invariant(curve)}};
  return {{"action.json", io::dump(report)}};
}

inline Outputs dispatch(const std::string& command, const json& cfg, const RunContext& ctx) {
  if (command == "sweep") return cmd_sweep(cfg, ctx);
  if (command == "bnf") return cmd_bnf(cfg, ctx);
  if (command == "model-a") return cmd_model_a(cfg, ctx);
  if (command == "compare-bs") return cmd_compare_bs(cfg, ctx);
  if (command == "action") return cmd_action(cfg, ctx);
  throw ConfigError("unknown command '" + command + "'");
}

// Reads the config, runs the command and writes its outputs plus a run.meta.json
// sidecar into out_dir. Returns the process exit code.
inline int run(const std::string& command, const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
               const RunContext& ctx, std::ostream& err) {
  try {
    const auto cfg = io::parse_file(config_path);
    const auto outputs = dispatch(command, cfg, ctx);
    std::filesystem::create_directories(out_dir);
    json files = json::array();
    for (const auto& [name, content] : outputs) {
      io::atomic_write(out_dir / name, content);
      files.push_back(name);
    }
    json meta{{"command", command},
              {"config", config_path.string()},
              {"threads", ctx.threads},
              {"seed", ctx.seed},
              {"outputs", files}};
    io::atomic_write(out_dir / "run.meta.json", io::dump(meta));
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractError& e) {
    err << "contract error: " << e.what() << '\n';
    return kContractError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kContractError;
  }
}

}  // namespace loopwell::cli
