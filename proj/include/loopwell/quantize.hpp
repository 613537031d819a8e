#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loopwell/eigensolve.hpp"
#include "loopwell/error.hpp"
#include "loopwell/hermitian_matrix.hpp"
#include "loopwell/series.hpp"

namespace loopwell {

enum class BasisKind { CircleFourier, Hermite, SpinZ, LatticeZ };

inline const char* to_string(BasisKind k) {
  switch (k) {
    case BasisKind::CircleFourier: return "circle-fourier";
    case BasisKind::Hermite: return "hermite";
    case BasisKind::SpinZ: return "spin-z";
    case BasisKind::LatticeZ: return "lattice-z";
  }
  return "?";
}

// Index range of a basis. For SpinZ the labels are 2m, stepping by 2.
struct Basis {
  BasisKind kind = BasisKind::CircleFourier;
  long first = 0;
  long last = -1;
  long step = 1;

  std::size_t dimension() const { return last < first ? 0 : static_cast<std::size_t>((last - first) / step + 1); }
  long label(std::size_t i) const { return first + static_cast<long>(i) * step; }
};

struct OperatorMatrix {
  Basis basis;
  double hbar = 0.0;   // semiclassical parameter the matrix is built at
  HermitianMatrix entries;
  std::optional<double> fractional_action;  // {I0}_hbar when a gauge shift was applied

  std::size_t dimension() const { return entries.size(); }

  void validate() const {
    if (!(hbar > 0.0)) throw ContractError("OperatorMatrix: hbar must be positive");
    if (basis.dimension() != entries.size()) throw ContractError("OperatorMatrix: basis range does not match dimension");
    require_hermitian(entries);
  }
};

// Contiguous range of Fourier modes k.
struct ModeRange {
  long first = 0;
  long last = -1;
  std::size_t size() const { return last < first ? 0 : static_cast<std::size_t>(last - first + 1); }
};

// Grows [center, center] outward until `diag(k)` exceeds `threshold` on each
// side, then pads by `pad` modes. The scan stops at the first crossing, so a
// polynomial extension of g that turns back further out is never reached.
template <typename Diag>
ModeRange scan_mode_range(Diag&& diag, long center, double threshold, long pad = 8, long max_half_width = 2'000'000) {
  long lo = center;
  long hi = center;
  while (diag(lo) <= threshold) {
    if (center - lo > max_half_width) throw TruncationError("mode range scan: window never closes below the center");
    --lo;
  }
  while (diag(hi) <= threshold) {
    if (hi - center > max_half_width) throw TruncationError("mode range scan: window never closes above the center");
    ++hi;
  }
  return {lo - pad, hi + pad};
}

namespace detail {

inline double circle_diagonal(const SymbolModel& m, double hbar, long k) {
  const double u = hbar * static_cast<double>(k) - m.I0;
  const double gh = m.g(u) + hbar * m.g1(u);
  return m.b0 + gh * gh + hbar * (m.v0.mean() + hbar * m.v1.mean());
}

inline double potential_spread(const FourierPotential& v) {
  double s = 0.0;
  for (int l = 1; l <= v.cut(); ++l) s += 2.0 * std::abs(v[l]);
  return s;
}

}  // namespace detail

// b0 + (g_hbar(hbar D))^2 + hbar V_hbar(theta) on e^{ik theta}, k in `range`,
// with g_hbar = g + hbar g1 and V_hbar = v0 + hbar v1. g and g1 are used as
// polynomials in I - I0 beyond their chart. If `window_top` is given, both
// edge diagonals must clear it by the potential's Gershgorin spread.
inline OperatorMatrix build_circle_operator(const SymbolModel& model, double hbar, ModeRange range,
                                            std::optional<double> window_top = std::nullopt) {
  model.validate();
  if (!(hbar > 0.0)) throw ContractError("build_circle_operator: hbar must be positive");
  if (range.size() == 0) throw ContractError("build_circle_operator: empty mode range");
  const int bw = std::max(model.v0.cut(), model.v1.cut());
  const std::size_t n = range.size();
  OperatorMatrix op;
  op.basis = {BasisKind::CircleFourier, range.first, range.last, 1};
  op.hbar = hbar;
  op.entries = HermitianMatrix(n, static_cast<std::size_t>(bw));
  for (std::size_t i = 0; i < n; ++i) {
    op.entries.set(i, i, detail::circle_diagonal(model, hbar, range.first + static_cast<long>(i)));
    for (int l = 1; l <= bw && i + static_cast<std::size_t>(l) < n; ++l) {
      // <e^{ik}| V |e^{i(k-l)}> = v_l for row k = i + l, column i.
      const cplx v = hbar * (model.v0[l] + hbar * model.v1[l]);
      if (v != cplx{0.0, 0.0}) op.entries.set_hermitian(i + static_cast<std::size_t>(l), i, v);
    }
  }
  if (window_top) {
    const double margin = hbar * (detail::potential_spread(model.v0) + hbar * detail::potential_spread(model.v1));
    const double lo = detail::circle_diagonal(model, hbar, range.first);
    const double hi = detail::circle_diagonal(model, hbar, range.last);
    if (std::min(lo, hi) < *window_top + margin) {
      throw TruncationError("build_circle_operator: edge diagonal " + std::to_string(std::min(lo, hi)) +
                            " below window top " + std::to_string(*window_top) + " + margin; enlarge the mode range");
    }
  }
  return op;
}

// Mode range around round(I0/hbar) whose edges clear `window_top`.
inline ModeRange circle_range_for_window(const SymbolModel& model, double hbar, double window_top, long pad = 8) {
  const double margin = hbar * (detail::potential_spread(model.v0) + hbar * detail::potential_spread(model.v1));
  const long center = std::lround(model.I0 / hbar);
  return scan_mode_range([&](long k) { return detail::circle_diagonal(model, hbar, k); }, center, window_top + margin,
                         pad);
}

// Polynomial symbol sum c_{a,b} x^a xi^b on T*R.
class PlanePolynomial {
 public:
  using Key = std::pair<int, int>;

  PlanePolynomial() = default;

  static PlanePolynomial monomial(int a, int b, double c = 1.0) {
    PlanePolynomial p;
    p.add_term(a, b, c);
    return p;
  }
  static PlanePolynomial constant(double c) { return monomial(0, 0, c); }

  void add_term(int a, int b, double c) {
    if (a < 0 || b < 0) throw ContractError("PlanePolynomial: negative exponent");
    terms_[{a, b}] += c;
  }

  int degree() const {
    int d = 0;
    for (const auto& [k, c] : terms_)
      if (c != 0.0) d = std::max(d, k.first + k.second);
    return d;
  }

  const std::map<Key, double>& terms() const { return terms_; }

  double operator()(double x, double xi) const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) s += c * std::pow(x, k.first) * std::pow(xi, k.second);
    return s;
  }

  friend PlanePolynomial operator+(const PlanePolynomial& a, const PlanePolynomial& b) {
    auto r = a;
    for (const auto& [k, c] : b.terms_) r.terms_[k] += c;
    return r;
  }
  friend PlanePolynomial operator*(double s, const PlanePolynomial& a) {
    auto r = a;
    for (auto& [k, c] : r.terms_) c *= s;
    return r;
  }
  friend PlanePolynomial operator-(const PlanePolynomial& a, const PlanePolynomial& b) { return a + (-1.0) * b; }
  friend PlanePolynomial operator*(const PlanePolynomial& a, const PlanePolynomial& b) {
    PlanePolynomial r;
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) r.terms_[{ka.first + kb.first, ka.second + kb.second}] += ca * cb;
    return r;
  }

 private:
  std::map<Key, double> terms_;
};

inline constexpr int kMaxPlaneDegree = 8;

namespace detail {

// Ladder word, leftmost factor first: true = creation, false = annihilation.
using LadderWord = std::vector<bool>;

// Weyl quantization of x^a xi^b as the average over all orderings of a X's and
// b Xi's, with X = s (A + A*), Xi = i s (A* - A), s = sqrt(hbar/2); expanded
// into ladder words.
inline void weyl_monomial(int a, int b, double coeff, double hbar, std::map<LadderWord, cplx>& out) {
  const int d = a + b;
  const double s = std::sqrt(hbar / 2.0);
  std::vector<bool> word(static_cast<std::size_t>(d), false);  // true = Xi
  std::fill(word.begin() + a, word.end(), true);
  double orderings = 0.0;
  std::vector<std::pair<LadderWord, cplx>> acc;
  do {
    orderings += 1.0;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      LadderWord lw(static_cast<std::size_t>(d));
      cplx c{1.0, 0.0};
      for (int i = 0; i < d; ++i) {
        const bool create = (mask >> i) & 1u;
        lw[static_cast<std::size_t>(i)] = create;
        if (word[static_cast<std::size_t>(i)]) c *= create ? cplx{0.0, s} : cplx{0.0, -s};
        else c *= s;
      }
      acc.emplace_back(std::move(lw), c);
    }
  } while (std::next_permutation(word.begin(), word.end()));
  for (auto& [lw, c] : acc) out[lw] += coeff * c / orderings;
}

}  // namespace detail

// Op_W^hbar(symbol) in the first N normalized Hermite functions. Entries are
// exact: ladder words are applied to |n> without intermediate truncation.
inline OperatorMatrix build_weyl_polynomial_plane(const PlanePolynomial& symbol, double hbar, std::size_t N) {
  if (!(hbar > 0.0)) throw ContractError("build_weyl_polynomial_plane: hbar must be positive");
  if (N == 0) throw ContractError("build_weyl_polynomial_plane: empty basis");
  const int deg = symbol.degree();
  if (deg > kMaxPlaneDegree) throw ContractError("build_weyl_polynomial_plane: symbol degree above 8");

  std::map<detail::LadderWord, cplx> words;
  for (const auto& [k, c] : symbol.terms())
    if (c != 0.0) detail::weyl_monomial(k.first, k.second, c, hbar, words);

  HermitianMatrix raw(N, static_cast<std::size_t>(deg));
  for (const auto& [lw, c] : words) {
    if (c == cplx{0.0, 0.0}) continue;
    for (std::size_t n = 0; n < N; ++n) {
      long level = static_cast<long>(n);
      double amp = 1.0;
      for (std::size_t i = lw.size(); i-- > 0;) {
        if (lw[i]) {
          amp *= std::sqrt(static_cast<double>(level + 1));
          ++level;
        } else {
          if (level == 0) {
            amp = 0.0;
            break;
          }
          amp *= std::sqrt(static_cast<double>(level));
          --level;
        }
      }
      if (amp == 0.0 || level >= static_cast<long>(N)) continue;
      raw.add(static_cast<std::size_t>(level), n, c * amp);
    }
  }
  require_hermitian(raw);
  OperatorMatrix op;
  op.basis = {BasisKind::Hermite, 0, static_cast<long>(N) - 1, 1};
  op.hbar = hbar;
  op.entries = HermitianMatrix(N, static_cast<std::size_t>(deg));
  for (std::size_t i = 0; i < N; ++i) {
    op.entries.set(i, i, raw(i, i).real());
    for (std::size_t j = raw.lo(i); j < i; ++j) op.entries.set_hermitian(i, j, 0.5 * (raw(i, j) + std::conj(raw(j, i))));
  }
  return op;
}

// Mass of each eigenvector on the top `tail` Hermite levels must stay below tol.
inline void check_hermite_convergence(const Spectrum& s, std::size_t tail, double tol = 1e-10) {
  for (std::size_t i = 0; i < s.eigenvectors.size(); ++i) {
    const auto& v = s.eigenvectors[i];
    double mass = 0.0;
    for (std::size_t k = v.size() > tail ? v.size() - tail : 0; k < v.size(); ++k) mass += std::norm(v[k]);
    if (mass > tol) {
      throw TruncationError("Hermite truncation N=" + std::to_string(v.size()) + " not converged: eigenvector " +
                            std::to_string(i) + " has tail mass " + std::to_string(mass) + "; enlarge N");
    }
  }
}

// m^2 / (4 (S+1)^2), m = -S..S, at hbar = 1/(2S). two_S = 2S.
inline OperatorMatrix build_spin_sz2(int two_S) {
  if (two_S < 1) throw ContractError("build_spin_sz2: 2S must be a positive integer");
  const double S = two_S / 2.0;
  const std::size_t n = static_cast<std::size_t>(two_S) + 1;
  OperatorMatrix op;
  op.basis = {BasisKind::SpinZ, -two_S, two_S, 2};
  op.hbar = 1.0 / two_S;
  op.entries = HermitianMatrix(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = op.basis.label(i) / 2.0;
    op.entries.set(i, i, m * m / (4.0 * (S + 1.0) * (S + 1.0)));
  }
  return op;
}

// l^2(Z) model with diagonal lambda_k + v_0 and off-diagonal v_{l-k},
// lambda_k = (k - sigma) g1p + (k - sigma)^2 g0p^2.
struct ModelAParams {
  double sigma = 0.0;
  double g0p = 1.0;
  double g1p = 0.0;
  FourierPotential v;
  int K = 40;
};

inline OperatorMatrix build_model_a(const ModelAParams& p) {
  if (p.K < 0) throw ContractError("build_model_a: K must be nonnegative");
  const long center = std::lround(p.sigma);
  const std::size_t n = static_cast<std::size_t>(2 * p.K + 1);
  OperatorMatrix op;
  op.basis = {BasisKind::LatticeZ, center - p.K, center + p.K, 1};
  op.hbar = 1.0;
  op.entries = HermitianMatrix(n, static_cast<std::size_t>(p.v.cut()));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(op.basis.label(i)) - p.sigma;
    op.entries.set(i, i, x * p.g1p + x * x * p.g0p * p.g0p + p.v.mean());
    // A_{k,l} = v_{l-k}: row i + l, column i gets v_{-l}.
    for (int l = 1; l <= p.v.cut() && i + static_cast<std::size_t>(l) < n; ++l)
      if (p.v[l] != cplx{0.0, 0.0}) op.entries.set_hermitian(i + static_cast<std::size_t>(l), i, p.v[-l]);
  }
  return op;
}

// Gauge data: floor(I0/hbar) and the fractional part {I0}_hbar.
struct GaugeShift {
  long floor_index;
  double fraction;
};

inline GaugeShift gauge_shift(double I0, double hbar) {
  const double s = I0 / hbar;
  const double f = std::floor(s);
  return {static_cast<long>(f), s - f};
}

namespace detail {

inline double small_energy_diagonal(const SymbolModel& m, double hbar, double fraction, long k) {
  const double rh = std::sqrt(hbar);
  const double g0p = m.g[1];
  const double g0pp = 2.0 * m.g[2];
  const double D = rh * (static_cast<double>(k) - fraction);
  return g0p * g0p * D * D + m.v0.mean() + rh * g0p * (2.0 * m.g1[0] + g0pp * D * D) * D;
}

inline double large_energy_diagonal(const SymbolModel& m, double hbar, double E, double fraction, long k) {
  const double rE = std::sqrt(E);
  const double heff = hbar / rE;
  const double eta = heff * (static_cast<double>(k) - fraction);
  const double f = m.g(rE * eta) / rE;  // f(sqrt E, eta) = g0(sqrt E eta + I0) / sqrt E
  return f * f + heff * 2.0 * f * m.g1(rE * eta) + (hbar / E) * m.v0.mean();
}

}  // namespace detail

// Reduced operator at the sqrt(hbar) scale on e^{ik theta} after the gauge
// shift k -> k - floor(I0/hbar):
//   g0'^2 D^2 + V0(theta) + sqrt(hbar) g0' [2 g1(I0) + g0''(I0) D^2] D,
//   D = sqrt(hbar) (k - {I0}_hbar).
// Spectrum in [0, C] maps to the full operator's by lambda -> b0 + hbar lambda.
inline OperatorMatrix build_small_energy_model(const SymbolModel& model, double hbar, ModeRange range) {
  model.validate();
  if (!(hbar > 0.0)) throw ContractError("build_small_energy_model: hbar must be positive");
  if (range.size() == 0) throw ContractError("build_small_energy_model: empty mode range");
  const auto gauge = gauge_shift(model.I0, hbar);
  const std::size_t n = range.size();
  OperatorMatrix op;
  op.basis = {BasisKind::CircleFourier, range.first, range.last, 1};
  op.hbar = std::sqrt(hbar);
  op.fractional_action = gauge.fraction;
  op.entries = HermitianMatrix(n, static_cast<std::size_t>(model.v0.cut()));
  for (std::size_t i = 0; i < n; ++i) {
    op.entries.set(i, i, detail::small_energy_diagonal(model, hbar, gauge.fraction, range.first + static_cast<long>(i)));
    for (int l = 1; l <= model.v0.cut() && i + static_cast<std::size_t>(l) < n; ++l)
      if (model.v0[l] != cplx{0.0, 0.0}) op.entries.set_hermitian(i + static_cast<std::size_t>(l), i, model.v0[l]);
  }
  return op;
}

inline ModeRange small_energy_range(const SymbolModel& model, double hbar, double C, long pad = 8) {
  const auto gauge = gauge_shift(model.I0, hbar);
  const double threshold = C + detail::potential_spread(model.v0) + 1.0;
  return scan_mode_range([&](long k) { return detail::small_energy_diagonal(model, hbar, gauge.fraction, k); },
                         std::lround(gauge.fraction), threshold, pad);
}

struct LargeEnergyWindow {
  double c1 = 0.25;  // largest admissible E
  double c2 = 0.5;   // largest admissible t = hbar / E
};

// Rescaled operator with hbar_eff = hbar / sqrt(E) on e^{ik theta} (gauge
// shifted by floor(I0/hbar)):
//   f^2(sqrt E, eta) + (hbar/E) V0(theta) + hbar_eff 2 f(sqrt E, eta) g1(sqrt E eta + I0),
//   f(x, y) = g0(x y + I0) / x,  eta = hbar_eff (k - {I0}_hbar).
// It equals (Q - b0) / E up to the hbar^2 (g1^2 + V1) / E remainder.
inline OperatorMatrix build_large_energy_model(const SymbolModel& model, double hbar, double E, ModeRange range,
                                               const LargeEnergyWindow& window = {}) {
  model.validate();
  if (!(hbar > 0.0)) throw ContractError("build_large_energy_model: hbar must be positive");
  if (!(E >= hbar / window.c2 && E <= window.c1)) {
    throw ContractError("build_large_energy_model: E=" + std::to_string(E) + " outside [hbar/c2, c1] = [" +
                        std::to_string(hbar / window.c2) + ", " + std::to_string(window.c1) + "]");
  }
  if (range.size() == 0) throw ContractError("build_large_energy_model: empty mode range");
  const auto gauge = gauge_shift(model.I0, hbar);
  const std::size_t n = range.size();
  const double t = hbar / E;
  OperatorMatrix op;
  op.basis = {BasisKind::CircleFourier, range.first, range.last, 1};
  op.hbar = hbar / std::sqrt(E);
  op.fractional_action = gauge.fraction;
  op.entries = HermitianMatrix(n, static_cast<std::size_t>(model.v0.cut()));
  for (std::size_t i = 0; i < n; ++i) {
    op.entries.set(i, i, detail::large_energy_diagonal(model, hbar, E, gauge.fraction, range.first + static_cast<long>(i)));
    for (int l = 1; l <= model.v0.cut() && i + static_cast<std::size_t>(l) < n; ++l)
      if (model.v0[l] != cplx{0.0, 0.0}) op.entries.set_hermitian(i + static_cast<std::size_t>(l), i, t * model.v0[l]);
  }
  return op;
}

}  // namespace loopwell
