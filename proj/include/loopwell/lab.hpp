#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "loopwell/eigensolve.hpp"
#include "loopwell/error.hpp"
#include "loopwell/quantize.hpp"
#include "loopwell/series.hpp"

namespace loopwell {

struct SweepRecord {
  double hbar = 0.0;
  double inv_hbar = 0.0;
  std::vector<double> eigenvalues;  // m lowest, sorted
  std::vector<int> branch_ids;
};

// Lowest `m` eigenvalues at a given 1/hbar.
using SpectrumRecipe = std::function<std::vector<double>(double inv_hbar, std::size_t m)>;

// Runs `f(i)` for i in [0, n) on up to `threads` workers; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Labels eigenvalues with smooth-branch ids: each branch is extrapolated
// (quadratically in 1/hbar when three points are known) to the next grid
// point and matched greedily by distance; exact ties keep the previous rank.
// At the top rank of the m-window, where one branch can leave while another
// enters, a match also needs the miss to stay within 4 (|d2| + |d3|) of the
// branch's last second and third differences.
inline void assign_branches(std::vector<SweepRecord>& records) {
  struct Branch {
    std::vector<std::pair<double, double>> tail;  // last few (x, value)
    int last_record = -1;
    int last_rank = -1;
  };
  std::vector<Branch> branches;
  for (std::size_t r = 0; r < records.size(); ++r) {
    auto& rec = records[r];
    const double x = rec.inv_hbar;
    rec.branch_ids.assign(rec.eigenvalues.size(), -1);
    struct Candidate {
      double cost;
      int rank_shift;
      std::size_t eig;
      std::size_t branch;
    };
    std::vector<Candidate> cands;
    const int previous_size = r == 0 ? 0 : static_cast<int>(records[r - 1].eigenvalues.size());
    double scale = 0.0;
    for (double v : rec.eigenvalues) scale = std::max(scale, std::abs(v));
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const auto& br = branches[b];
      if (br.last_record != static_cast<int>(r) - 1) continue;
      const auto& t = br.tail;
      double pred = t.back().second;
      double tolerance = std::numeric_limits<double>::infinity();
      if (t.size() >= 3) {
        const auto [x0, y0] = t[t.size() - 3];
        const auto [x1, y1] = t[t.size() - 2];
        const auto [x2, y2] = t[t.size() - 1];
        pred = y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)) + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)) +
               y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
        if (t.size() >= 4) {
          const double ym = t[t.size() - 4].second;
          const double d2 = y2 - 2.0 * y1 + y0;
          const double d3 = y2 - 3.0 * y1 + 3.0 * y0 - ym;
          tolerance = 4.0 * (std::abs(d2) + std::abs(d3));
        }
      } else if (t.size() == 2) {
        const auto [x1, y1] = t[0];
        const auto [x2, y2] = t[1];
        pred = y2 + (y2 - y1) * (x - x2) / (x2 - x1);
      }
      for (std::size_t i = 0; i < rec.eigenvalues.size(); ++i) {
        double cost = std::abs(rec.eigenvalues[i] - pred);
        if (cost <= 1e-12 * std::max(scale, 1.0)) cost = 0.0;
        const bool at_top = i + 1 == rec.eigenvalues.size() || br.last_rank + 1 == previous_size;
        if (at_top && cost > tolerance) continue;
        cands.push_back({cost, std::abs(br.last_rank - static_cast<int>(i)), i, b});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.cost != b.cost) return a.cost < b.cost;
      if (a.rank_shift != b.rank_shift) return a.rank_shift < b.rank_shift;
      return a.branch < b.branch;
    });
    std::vector<bool> branch_taken(branches.size(), false);
    for (const auto& c : cands) {
      if (rec.branch_ids[c.eig] != -1 || branch_taken[c.branch]) continue;
      rec.branch_ids[c.eig] = static_cast<int>(c.branch);
      branch_taken[c.branch] = true;
    }
    for (std::size_t i = 0; i < rec.eigenvalues.size(); ++i) {
      if (rec.branch_ids[i] == -1) {
        rec.branch_ids[i] = static_cast<int>(branches.size());
        branches.emplace_back();
      }
      auto& br = branches[static_cast<std::size_t>(rec.branch_ids[i])];
      br.tail.emplace_back(x, rec.eigenvalues[i]);
      if (br.tail.size() > 4) br.tail.erase(br.tail.begin());
      br.last_record = static_cast<int>(r);
      br.last_rank = static_cast<int>(i);
    }
  }
}

// m lowest eigenvalues over a grid of 1/hbar values (sorted ascending),
// grid points computed independently, then branch-labelled in grid order.
inline std::vector<SweepRecord> sweep(const SpectrumRecipe& recipe, const std::vector<double>& inv_hbar_grid,
                                      std::size_t m, unsigned threads = 1) {
  if (!std::is_sorted(inv_hbar_grid.begin(), inv_hbar_grid.end()))
    throw ContractError("sweep: grid must be sorted in 1/hbar");
  std::vector<SweepRecord> records(inv_hbar_grid.size());
  parallel_for(inv_hbar_grid.size(), threads, [&](std::size_t i) {
    const double x = inv_hbar_grid[i];
    auto& rec = records[i];
    rec.inv_hbar = x;
    rec.hbar = 1.0 / x;
    try {
      rec.eigenvalues = recipe(x, m);
    } catch (const TruncationError& e) {
      throw TruncationError(std::string(e.what()) + " (at hbar=" + std::to_string(rec.hbar) + ")");
    }
  });
  assign_branches(records);
  return records;
}

// Recipe from a matrix builder, using the lowest-k Sturm path.
inline SpectrumRecipe matrix_recipe(std::function<OperatorMatrix(double inv_hbar)> build) {
  return [build = std::move(build)](double x, std::size_t m) {
    const auto op = build(x);
    return lowest_k(op.entries, std::min(m, op.dimension())).eigenvalues;
  };
}

// Recipe for Op_W(symbol) in N Hermite functions, checking eigenvector tails.
inline SpectrumRecipe plane_recipe(PlanePolynomial symbol, std::size_t N) {
  return [symbol = std::move(symbol), N](double x, std::size_t m) {
    const auto op = build_weyl_polynomial_plane(symbol, 1.0 / x, N);
    const auto s = lowest_k(op.entries, std::min(m, N), true);
    check_hermite_convergence(s, std::max<std::size_t>(2 * static_cast<std::size_t>(symbol.degree()), N / 10));
    return s.eigenvalues;
  };
}

// Spin recipe: 1/hbar = 2S.
inline SpectrumRecipe spin_recipe() {
  return [](double x, std::size_t m) {
    const auto op = build_spin_sz2(static_cast<int>(std::lround(x)));
    return lowest_k(op.entries, std::min(m, op.dimension())).eigenvalues;
  };
}

// Locations in 1/hbar where the lowest eigenvalue changes branch, refined by
// the linear crossing of the two competing branches between grid points.
inline std::vector<double> detect_jumps(const std::vector<SweepRecord>& records) {
  std::vector<double> jumps;
  auto value_of = [](const SweepRecord& r, int id) -> std::optional<double> {
    for (std::size_t i = 0; i < r.branch_ids.size(); ++i)
      if (r.branch_ids[i] == id) return r.eigenvalues[i];
    return std::nullopt;
  };
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = records[i + 1];
    if (a.branch_ids.empty() || b.branch_ids.empty()) continue;
    const int old_id = a.branch_ids[0];
    const int new_id = b.branch_ids[0];
    if (old_id == new_id) continue;
    const auto new_at_a = value_of(a, new_id);
    const auto old_at_b = value_of(b, old_id);
    double x = 0.5 * (a.inv_hbar + b.inv_hbar);
    if (new_at_a && old_at_b) {
      const double d0 = *new_at_a - a.eigenvalues[0];
      const double d1 = b.eigenvalues[0] - *old_at_b;
      if (d0 >= 0.0 && d1 <= 0.0 && d0 - d1 > 0.0) x = a.inv_hbar + d0 / (d0 - d1) * (b.inv_hbar - a.inv_hbar);
    }
    jumps.push_back(x);
  }
  return jumps;
}

struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

// Least squares log y = log prefactor + exponent log x.
inline ScalingFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_fit: need at least two paired points");
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ContractError("loglog_fit: nonpositive value");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double vx = sxx - sx * sx / dn;
  const double vy = syy - sy * sy / dn;
  ScalingFit f;
  f.exponent = cov / vx;
  f.prefactor = std::exp((sy - f.exponent * sx) / dn);
  f.r_squared = vy == 0.0 ? 1.0 : std::min(1.0, cov * cov / (vx * vy));
  f.points = n;
  return f;
}

struct GapScaling {
  ScalingFit fit;  // exponent = +inf when some window closes the gap exactly
  std::vector<double> hbar_at_min;
  std::vector<double> min_gap;
};

// Per-window minima of e1 - e0, windows of length `window` in 1/hbar starting at
// the first record; incomplete trailing windows are dropped.
inline GapScaling gap_scaling(const std::vector<SweepRecord>& records, double window, double zero_tolerance = 1e-12) {
  if (!(window > 0.0)) throw ContractError("gap_scaling: window must be positive");
  GapScaling out;
  if (records.empty()) return out;
  const double start = records.front().inv_hbar;
  const double end = records.back().inv_hbar;
  const auto windows = static_cast<std::size_t>(std::floor((end - start) / window + 1e-9));
  bool closed = false;
  for (std::size_t w = 0; w < windows; ++w) {
    const double lo = start + static_cast<double>(w) * window;
    const double hi = lo + window;
    double best = std::numeric_limits<double>::infinity();
    double best_hbar = 0.0;
    double scale = 1.0;
    for (const auto& r : records) {
      if (r.inv_hbar < lo || r.inv_hbar >= hi || r.eigenvalues.size() < 2) continue;
      const double gap = r.eigenvalues[1] - r.eigenvalues[0];
      if (gap < best) {
        best = gap;
        best_hbar = r.hbar;
        scale = std::max(1.0, std::abs(r.eigenvalues[0]));
      }
    }
    if (!std::isfinite(best)) continue;
    if (best <= zero_tolerance * scale) closed = true;
    out.hbar_at_min.push_back(best_hbar);
    out.min_gap.push_back(best);
  }
  if (closed) {
    out.fit.exponent = std::numeric_limits<double>::infinity();
    out.fit.points = out.min_gap.size();
    return out;
  }
  if (out.min_gap.size() < 5) throw ContractError("gap_scaling: fewer than five complete windows");
  out.fit = loglog_fit(out.hbar_at_min, out.min_gap);
  return out;
}

struct OscillationProfile {
  std::vector<double> sigma;
  std::vector<double> value;       // lowest eigenvalue of A(sigma)
  double amplitude = 0.0;          // max - min
  double periodicity_defect = 0.0; // max |f(sigma) - f(sigma + 1)|
};

inline OscillationProfile oscillation_profile(const ModelAParams& base, const std::vector<double>& sigmas) {
  OscillationProfile p;
  p.sigma = sigmas;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double s : sigmas) {
    auto params = base;
    params.sigma = s;
    const double f = lowest_k(build_model_a(params).entries, 1).eigenvalues[0];
    params.sigma = s + 1.0;
    const double f1 = lowest_k(build_model_a(params).entries, 1).eigenvalues[0];
    p.value.push_back(f);
    p.periodicity_defect = std::max(p.periodicity_defect, std::abs(f - f1));
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  p.amplitude = sigmas.empty() ? 0.0 : hi - lo;
  return p;
}

// Curve descriptors for the action invariant (enclosed area / 2 pi).
struct RadialCircle {
  double radius = 1.0;  // x^2 + xi^2 = radius^2
};
struct CylinderGraph {
  FourierPotential c;  // xi = c(theta)
};
struct SampledPlaneCurve {
  std::vector<std::pair<double, double>> points;  // (x, xi), last == first
};
struct SampledCylinderCurve {
  std::vector<std::pair<double, double>> points;  // (theta, xi), winding once: theta_last = theta_first +- 2 pi
};
using CurveDescriptor = std::variant<RadialCircle, CylinderGraph, SampledPlaneCurve, SampledCylinderCurve>;

inline double action_invariant(const CurveDescriptor& curve) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  struct Visitor {
    double operator()(const RadialCircle& c) const { return 0.5 * c.radius * c.radius; }
    double operator()(const CylinderGraph& g) const { return g.c.mean(); }
    double operator()(const SampledPlaneCurve& s) const {
      const auto& p = s.points;
      if (p.size() < 4) throw ContractError("action_invariant: sampled curve needs at least three distinct points");
      double scale = 0.0;
      for (const auto& [x, y] : p) scale = std::max({scale, std::abs(x), std::abs(y)});
      if (std::hypot(p.front().first - p.back().first, p.front().second - p.back().second) > 1e-9 * std::max(scale, 1.0))
        throw ContractError("action_invariant: sampled curve is not closed (last point != first point)");
      double twice_area = 0.0;
      for (std::size_t i = 0; i + 1 < p.size(); ++i)
        twice_area += p[i].first * p[i + 1].second - p[i + 1].first * p[i].second;
      return std::abs(0.5 * twice_area) / two_pi;
    }
    double operator()(const SampledCylinderCurve& s) const {
      const auto& p = s.points;
      if (p.size() < 3) throw ContractError("action_invariant: sampled curve needs at least two segments");
      const double winding = p.back().first - p.front().first;
      double scale = 1.0;
      for (const auto& [t, y] : p) scale = std::max(scale, std::abs(y));
      if (std::abs(std::abs(winding) - two_pi) > 1e-9 || std::abs(p.back().second - p.front().second) > 1e-9 * scale)
        throw ContractError("action_invariant: cylinder curve is not closed (must wind once around the circle)");
      double integral = 0.0;
      for (std::size_t i = 0; i + 1 < p.size(); ++i)
        integral += 0.5 * (p[i].second + p[i + 1].second) * (p[i + 1].first - p[i].first);
      return integral / winding;
    }
  };
  return std::visit(Visitor{}, curve);
}

struct SpectralComparison {
  double hbar = 0.0;
  double max_deviation = 0.0;       // over paired eigenvalues; 0 for an empty window
  std::size_t full_count = 0;       // full-operator eigenvalues in the window
  std::size_t model_count = 0;      // mapped model eigenvalues in the window
  std::size_t paired = 0;
  bool count_mismatch = false;
};

// Full circle operator vs H0 + sqrt(hbar) H1 mapped by lambda -> b0 + hbar lambda.
// Every full eigenvalue up to b0 + C hbar is paired, in sorted order from the
// bottom of both spectra, with the model eigenvalue of the same rank.
inline SpectralComparison compare_small_energy(const SymbolModel& model, double hbar, double C) {
  SpectralComparison out;
  out.hbar = hbar;
  const double top = model.b0 + C * hbar;
  const auto full_range = circle_range_for_window(model, hbar, top);
  const auto full = eigen_hermitian(build_circle_operator(model, hbar, full_range, top).entries).eigenvalues;
  const auto red_range = small_energy_range(model, hbar, C);
  const auto reduced = eigen_hermitian(build_small_energy_model(model, hbar, red_range).entries).eigenvalues;

  for (double v : full)
    if (v <= top) ++out.full_count;
  for (double l : reduced)
    if (model.b0 + hbar * l <= top) ++out.model_count;
  out.count_mismatch = out.full_count != out.model_count;
  out.paired = std::min(out.full_count, reduced.size());
  for (std::size_t i = 0; i < out.paired; ++i)
    out.max_deviation = std::max(out.max_deviation, std::abs(full[i] - (model.b0 + hbar * reduced[i])));
  return out;
}

// Full circle operator in [b0 + E/2, b0 + 2E] vs the rescaled model mapped back
// by lambda -> b0 + E lambda. Both matrices live on the same mode set (the model
// gauge-shifted), so eigenvalues are paired by global rank.
inline SpectralComparison compare_large_energy(const SymbolModel& model, double hbar, double E,
                                               const LargeEnergyWindow& window = {}) {
  SpectralComparison out;
  out.hbar = hbar;
  const double lo = model.b0 + 0.5 * E;
  const double top = model.b0 + 2.0 * E;
  const auto range = circle_range_for_window(model, hbar, top);
  const auto gauge = gauge_shift(model.I0, hbar);
  const ModeRange shifted{range.first - gauge.floor_index, range.last - gauge.floor_index};
  const auto full = eigen_hermitian(build_circle_operator(model, hbar, range, top).entries).eigenvalues;
  const auto rescaled = eigen_hermitian(build_large_energy_model(model, hbar, E, shifted, window).entries).eigenvalues;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double mapped = model.b0 + E * rescaled[i];
    const bool in_full = full[i] >= lo && full[i] <= top;
    if (in_full) ++out.full_count;
    if (mapped >= lo && mapped <= top) ++out.model_count;
    if (!in_full) continue;
    ++out.paired;
    out.max_deviation = std::max(out.max_deviation, std::abs(full[i] - mapped));
  }
  out.count_mismatch = out.full_count != out.model_count;
  return out;
}

}  // namespace loopwell
