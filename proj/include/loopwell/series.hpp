#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "loopwell/error.hpp"
#include "loopwell/taylor.hpp"

namespace loopwell {

using cplx = std::complex<double>;

// Truncated double expansion sum_{|k|<=K, 0<=j<=J} c_{k,j} e^{ik theta} (I - I0)^j,
// the local model of a symbol near the loop in angle/action coordinates.
class FourierTaylorSeries {
 public:
  FourierTaylorSeries() : FourierTaylorSeries(0.0, 0, 0) {}

  FourierTaylorSeries(double base_point, int fourier_cut, int taylor_cut)
      : base_(base_point), K_(fourier_cut), J_(taylor_cut), valid_(taylor_cut) {
    if (fourier_cut < 0 || taylor_cut < 0) throw ContractError("FourierTaylorSeries: negative truncation");
    c_.assign(static_cast<std::size_t>(2 * K_ + 1) * static_cast<std::size_t>(J_ + 1), cplx{0.0, 0.0});
  }

  static FourierTaylorSeries constant(double base_point, int K, int J, double value) {
    FourierTaylorSeries s(base_point, K, J);
    s.at(0, 0) = value;
    return s;
  }

  // c * (I - I0)^power
  static FourierTaylorSeries action_power(double base_point, int K, int J, int power, double c = 1.0) {
    FourierTaylorSeries s(base_point, K, J);
    if (power <= J) s.at(0, power) = c;
    return s;
  }

  // c * e^{ik theta} (I - I0)^j, not real unless k = 0.
  static FourierTaylorSeries monomial(double base_point, int K, int J, int k, int j, cplx c = 1.0) {
    FourierTaylorSeries s(base_point, K, J);
    if (std::abs(k) <= K && j <= J) s.at(k, j) = c;
    return s;
  }

  // Function of I alone.
  static FourierTaylorSeries from_action_function(double base_point, int K, const TaylorSeries& f) {
    FourierTaylorSeries s(base_point, K, f.cut());
    for (int j = 0; j <= f.cut(); ++j) s.at(0, j) = f[j];
    s.valid_ = f.valid_order();
    return s;
  }

  double base_point() const { return base_; }
  int fourier_cut() const { return K_; }
  int taylor_cut() const { return J_; }
  int valid_order() const { return valid_; }
  void set_valid_order(int v) { valid_ = std::min(v, J_); }

  cplx& at(int k, int j) { return c_[index(k, j)]; }
  cplx operator()(int k, int j) const {
    if (std::abs(k) > K_ || j < 0 || j > J_) return {0.0, 0.0};
    return c_[index(k, j)];
  }

  // The j-th Taylor block as a function of theta; or the k-th Fourier block as a function of I.
  ComplexTaylorSeries fourier_block(int k) const {
    std::vector<cplx> c(static_cast<std::size_t>(J_) + 1);
    for (int j = 0; j <= J_; ++j) c[static_cast<std::size_t>(j)] = (*this)(k, j);
    return ComplexTaylorSeries(std::move(c), valid_);
  }
  void set_fourier_block(int k, const ComplexTaylorSeries& f) {
    for (int j = 0; j <= J_; ++j) at(k, j) = f[j];
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : c_) m = std::max(m, std::abs(c));
    return m;
  }

  // max |c(-k,j) - conj c(k,j)|, zero for a real-valued function.
  double reality_defect() const {
    double d = 0.0;
    for (int k = 0; k <= K_; ++k)
      for (int j = 0; j <= J_; ++j) d = std::max(d, std::abs((*this)(-k, j) - std::conj((*this)(k, j))));
    return d;
  }

  bool is_zero() const { return max_abs() == 0.0; }

  // Value at (theta, I).
  cplx evaluate(double theta, double action) const {
    const double u = action - base_;
    cplx acc{0.0, 0.0};
    for (int k = -K_; k <= K_; ++k) {
      cplx poly{0.0, 0.0};
      for (int j = J_; j >= 0; --j) poly = poly * u + (*this)(k, j);
      acc += poly * std::polar(1.0, k * theta);
    }
    return acc;
  }

  // Copy with different cuts; coefficients outside are dropped or zero-filled.
  FourierTaylorSeries resized(int K, int J) const {
    FourierTaylorSeries s(base_, K, J);
    for (int k = -std::min(K, K_); k <= std::min(K, K_); ++k)
      for (int j = 0; j <= std::min(J, J_); ++j) s.at(k, j) = (*this)(k, j);
    s.valid_ = std::min(valid_, J);
    return s;
  }

  template <typename F>
  void for_each_nonzero(F&& f) const {
    for (int k = -K_; k <= K_; ++k)
      for (int j = 0; j <= J_; ++j)
        if (const auto c = (*this)(k, j); c != cplx{0.0, 0.0}) f(k, j, c);
  }

 private:
  std::size_t index(int k, int j) const {
    return static_cast<std::size_t>(k + K_) * static_cast<std::size_t>(J_ + 1) + static_cast<std::size_t>(j);
  }

  double base_;
  int K_;
  int J_;
  int valid_;
  std::vector<cplx> c_;
};

namespace detail {

inline void require_same_chart(const FourierTaylorSeries& a, const FourierTaylorSeries& b, const char* op) {
  if (a.base_point() != b.base_point()) {
    throw ContractError(std::string(op) + ": series expanded at different base points (" +
                        std::to_string(a.base_point()) + " vs " + std::to_string(b.base_point()) + ")");
  }
}

}  // namespace detail

inline FourierTaylorSeries add(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  detail::require_same_chart(a, b, "add");
  const int K = std::min(a.fourier_cut(), b.fourier_cut());
  const int J = std::min(a.taylor_cut(), b.taylor_cut());
  FourierTaylorSeries s(a.base_point(), K, J);
  for (int k = -K; k <= K; ++k)
    for (int j = 0; j <= J; ++j) s.at(k, j) = a(k, j) + b(k, j);
  s.set_valid_order(std::min(a.valid_order(), b.valid_order()));
  return s;
}

inline FourierTaylorSeries scale(const FourierTaylorSeries& a, cplx c) {
  auto s = a;
  for (int k = -a.fourier_cut(); k <= a.fourier_cut(); ++k)
    for (int j = 0; j <= a.taylor_cut(); ++j) s.at(k, j) *= c;
  return s;
}

inline FourierTaylorSeries subtract(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  return add(a, scale(b, -1.0));
}

// Cauchy product in both k and j, truncated to the smaller (K, J).
inline FourierTaylorSeries multiply(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  detail::require_same_chart(a, b, "multiply");
  const int K = std::min(a.fourier_cut(), b.fourier_cut());
  const int J = std::min(a.taylor_cut(), b.taylor_cut());
  FourierTaylorSeries s(a.base_point(), K, J);
  for (int k1 = -a.fourier_cut(); k1 <= a.fourier_cut(); ++k1) {
    for (int j1 = 0; j1 <= J; ++j1) {
      const cplx x = a(k1, j1);
      if (x == cplx{0.0, 0.0}) continue;
      for (int k2 = std::max(-b.fourier_cut(), -K - k1); k2 <= std::min(b.fourier_cut(), K - k1); ++k2)
        for (int j2 = 0; j1 + j2 <= J; ++j2) s.at(k1 + k2, j1 + j2) += x * b(k2, j2);
    }
  }
  // Real inputs give a real product; mirror k >= 0 so rounding cannot break that.
  if (a.reality_defect() == 0.0 && b.reality_defect() == 0.0) {
    for (int j = 0; j <= J; ++j) {
      s.at(0, j) = s(0, j).real();
      for (int k = 1; k <= K; ++k) s.at(-k, j) = std::conj(s(k, j));
    }
  }
  s.set_valid_order(std::min(a.valid_order(), b.valid_order()));
  return s;
}

inline FourierTaylorSeries d_action(const FourierTaylorSeries& a) {
  FourierTaylorSeries s(a.base_point(), a.fourier_cut(), a.taylor_cut());
  for (int k = -a.fourier_cut(); k <= a.fourier_cut(); ++k)
    for (int j = 0; j < a.taylor_cut(); ++j) s.at(k, j) = static_cast<double>(j + 1) * a(k, j + 1);
  s.set_valid_order(a.valid_order() - 1);
  return s;
}

inline FourierTaylorSeries d_angle(const FourierTaylorSeries& a) {
  auto s = a;
  for (int k = -a.fourier_cut(); k <= a.fourier_cut(); ++k)
    for (int j = 0; j <= a.taylor_cut(); ++j) s.at(k, j) *= cplx{0.0, static_cast<double>(k)};
  return s;
}

// {a, b} = d_I a d_theta b - d_theta a d_I b. With this sign,
// {b0 + g(I)^2, h} = 2 g'(I) g(I) d_theta h.
inline FourierTaylorSeries poisson_bracket(const FourierTaylorSeries& a, const FourierTaylorSeries& b) {
  detail::require_same_chart(a, b, "poisson_bracket");
  if (a.valid_order() < 1 || b.valid_order() < 1) {
    throw TruncationError("poisson_bracket: valid Taylor order exhausted (need >= 1, have " +
                        std::to_string(std::min(a.valid_order(), b.valid_order())) + ")");
  }
  auto s = subtract(multiply(d_action(a), d_angle(b)), multiply(d_angle(a), d_action(b)));
  s.set_valid_order(std::min(a.valid_order(), b.valid_order()) - 1);
  return s;
}

// Angle average: the k = 0 block.
inline FourierTaylorSeries average(const FourierTaylorSeries& h) {
  FourierTaylorSeries s(h.base_point(), h.fourier_cut(), h.taylor_cut());
  for (int j = 0; j <= h.taylor_cut(); ++j) s.at(0, j) = h(0, j);
  s.set_valid_order(h.valid_order());
  return s;
}

// h = kernel + image + boundary with
//   kernel   = h_0(I) - h_0(I0)                       (angle independent, zero on the loop)
//   image    = sum_{k != 0} (h_k(I) - h_k(I0)) e^{ik theta}
//   boundary = sum_k h_k(I0) e^{ik theta}               (function of theta only)
struct SplitResult {
  FourierTaylorSeries kernel_part;
  FourierTaylorSeries image_part;
  FourierTaylorSeries boundary_part;
};

inline SplitResult split(const FourierTaylorSeries& h) {
  const int K = h.fourier_cut();
  const int J = h.taylor_cut();
  SplitResult r{FourierTaylorSeries(h.base_point(), K, J), FourierTaylorSeries(h.base_point(), K, J),
                FourierTaylorSeries(h.base_point(), K, J)};
  for (int k = -K; k <= K; ++k) {
    r.boundary_part.at(k, 0) = h(k, 0);
    for (int j = 1; j <= J; ++j) (k == 0 ? r.kernel_part : r.image_part).at(k, j) = h(k, j);
  }
  for (auto* p : {&r.kernel_part, &r.image_part, &r.boundary_part}) p->set_valid_order(h.valid_order());
  return r;
}

// Coefficientwise max |a - b| over |k| <= min K and j <= through_order.
inline double max_abs_difference(const FourierTaylorSeries& a, const FourierTaylorSeries& b, int through_order) {
  const int K = std::max(a.fourier_cut(), b.fourier_cut());
  double d = 0.0;
  for (int k = -K; k <= K; ++k)
    for (int j = 0; j <= through_order; ++j) d = std::max(d, std::abs(a(k, j) - b(k, j)));
  return d;
}

// Real trigonometric polynomial sum_{|l|<=L} c_l e^{il theta} on the circle.
class FourierPotential {
 public:
  FourierPotential() : c_(1, cplx{0.0, 0.0}) {}
  explicit FourierPotential(double constant) : c_(1, cplx{constant, 0.0}) {}

  // coeffs[l] for l = 0..L; negative modes are the conjugates.
  static FourierPotential from_nonnegative_modes(std::vector<cplx> coeffs) {
    FourierPotential v;
    if (coeffs.empty()) coeffs.push_back(0.0);
    if (coeffs[0].imag() != 0.0) throw ContractError("FourierPotential: mean value must be real");
    const int L = static_cast<int>(coeffs.size()) - 1;
    v.c_.assign(static_cast<std::size_t>(2 * L + 1), 0.0);
    for (int l = 0; l <= L; ++l) {
      v.c_[static_cast<std::size_t>(L + l)] = coeffs[static_cast<std::size_t>(l)];
      v.c_[static_cast<std::size_t>(L - l)] = std::conj(coeffs[static_cast<std::size_t>(l)]);
    }
    return v;
  }

  // a0 + sum_l (a_l cos l theta + b_l sin l theta).
  static FourierPotential from_trig(double mean, const std::vector<double>& cos_coeffs,
                                    const std::vector<double>& sin_coeffs = {}) {
    const std::size_t L = std::max(cos_coeffs.size(), sin_coeffs.size());
    std::vector<cplx> c(L + 1, 0.0);
    c[0] = mean;
    for (std::size_t l = 1; l <= L; ++l) {
      const double a = l - 1 < cos_coeffs.size() ? cos_coeffs[l - 1] : 0.0;
      const double b = l - 1 < sin_coeffs.size() ? sin_coeffs[l - 1] : 0.0;
      c[l] = cplx{a / 2.0, -b / 2.0};
    }
    return from_nonnegative_modes(std::move(c));
  }

  int cut() const { return (static_cast<int>(c_.size()) - 1) / 2; }
  cplx operator[](int l) const {
    const int L = cut();
    return std::abs(l) <= L ? c_[static_cast<std::size_t>(l + L)] : cplx{0.0, 0.0};
  }
  double mean() const { return (*this)[0].real(); }
  bool is_constant() const {
    for (int l = 1; l <= cut(); ++l)
      if ((*this)[l] != cplx{0.0, 0.0}) return false;
    return true;
  }
  double operator()(double theta) const {
    double acc = mean();
    for (int l = 1; l <= cut(); ++l) acc += 2.0 * ((*this)[l] * std::polar(1.0, l * theta)).real();
    return acc;
  }

 private:
  std::vector<cplx> c_;
};

// Local data of a non-degenerate well on a loop: in folded action-angle
// coordinates the principal symbol is b0 + g(I)^2, with g expanded at the
// action invariant I0 (g(I0) = 0, g'(I0) != 0). For quantized models g1 and
// the potentials v0, v1 give g_hbar = g + hbar g1 and V_hbar = v0 + hbar v1.
struct SymbolModel {
  double b0 = 0.0;
  double I0 = 0.0;
  TaylorSeries g = TaylorSeries::identity(1);   // in u = I - I0
  TaylorSeries g1 = TaylorSeries::zero(0);      // in u = I - I0
  FourierPotential v0;
  FourierPotential v1;

  void validate() const {
    if (g[0] != 0.0) throw ContractError("SymbolModel: g(I0) must vanish exactly");
    if (g.cut() < 1 || g[1] == 0.0) throw ContractError("SymbolModel: g'(I0) must be nonzero");
  }

  double g_prime() const { return g[1]; }

  // g re-cut to J. A fully valid g is an exact polynomial, so zero padding keeps it valid.
  TaylorSeries g_series(int J) const {
    auto s = g.resized(J);
    if (g.valid_order() == g.cut()) s.set_valid_order(J);
    return s;
  }

  // b0 + g(I)^2 as a series at I0.
  FourierTaylorSeries principal_symbol(int K, int J) const {
    validate();
    const auto gj = g_series(J);
    auto sq = gj * gj;
    sq.coeff(0) += b0;
    sq.set_valid_order(J);
    return FourierTaylorSeries::from_action_function(I0, K, sq);
  }
};

// Output of the cohomological step: {p, generator} = r - q(g(I)) - potential.
struct CohomologicalSolution {
  FourierTaylorSeries generator;
  TaylorSeries q;  // in the variable s = g(I - I0); q(0) = 0
  FourierTaylorSeries potential;
};

// q(g(I)) as a series in I at the model's base point.
inline FourierTaylorSeries kernel_function(const TaylorSeries& q, const SymbolModel& model, int K) {
  auto f = compose(q, model.g_series(q.cut()));
  f.set_valid_order(q.valid_order());
  return FourierTaylorSeries::from_action_function(model.I0, K, f);
}

// Solves {p, a} = r - q o f - V for p = b0 + g(I)^2, f = g(I).
// Each Fourier mode k != 0 of the image part is divided by 2ik g g' (a
// Taylor division losing one valid order).
inline CohomologicalSolution solve_cohomological(const FourierTaylorSeries& r, const SymbolModel& model) {
  model.validate();
  if (r.base_point() != model.I0) throw ContractError("solve_cohomological: series base point differs from I0");
  if (r.reality_defect() > 1e-12 * std::max(1.0, r.max_abs()))
    throw ContractError("solve_cohomological: right-hand side is not a real function");

  const int K = r.fourier_cut();
  const int J = r.taylor_cut();
  const auto parts = split(r);

  // t(u) = 2 g(u) g'(u) / u, t(0) = 2 g'(I0)^2.
  const auto gj = model.g_series(J);
  auto t = divide_by_variable(gj * gj.derivative() * 2.0);
  t.set_valid_order(J);

  FourierTaylorSeries a(r.base_point(), K, J);
  for (int k = -K; k <= K; ++k) {
    if (k == 0) continue;
    const auto num = divide_by_variable(parts.image_part.fourier_block(k));
    const auto ak = divide(num, t) * cplx{0.0, -1.0 / k};
    for (int j = 0; j <= ak.cut(); ++j) a.at(k, j) = ak[j];
  }
  a.set_valid_order(r.valid_order() - 1);

  std::vector<double> kc(static_cast<std::size_t>(J) + 1, 0.0);
  for (int j = 1; j <= J; ++j) kc[static_cast<std::size_t>(j)] = parts.kernel_part(0, j).real();
  const TaylorSeries kernel(std::move(kc), r.valid_order());
  auto q = compose(kernel, reversion(gj));
  q.coeff(0) = 0.0;

  return {std::move(a), std::move(q), parts.boundary_part};
}

}  // namespace loopwell
