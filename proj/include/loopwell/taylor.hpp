#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "loopwell/error.hpp"

namespace loopwell {

// Truncated power series sum_j c_j x^j, j = 0..cut. Coefficients above
// valid_order() are kept for storage symmetry but are not trustworthy: they
// may have lost contributions from terms dropped at an earlier truncation.
template <typename T>
class BasicTaylorSeries {
 public:
  using value_type = T;

  BasicTaylorSeries() : coeffs_(1, T{0}), valid_(0) {}

  explicit BasicTaylorSeries(std::vector<T> coeffs)
      : BasicTaylorSeries(std::move(coeffs), -1) {}

  BasicTaylorSeries(std::vector<T> coeffs, int valid_order) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) coeffs_.push_back(T{0});
    valid_ = valid_order < 0 ? cut() : std::min(valid_order, cut());
  }

  static BasicTaylorSeries zero(int cut) {
    return BasicTaylorSeries(std::vector<T>(static_cast<std::size_t>(cut) + 1, T{0}));
  }

  // The series of x itself.
  static BasicTaylorSeries identity(int cut) {
    auto s = zero(cut);
    if (cut >= 1) s.coeffs_[1] = T{1};
    return s;
  }

  int cut() const { return static_cast<int>(coeffs_.size()) - 1; }
  int valid_order() const { return valid_; }
  void set_valid_order(int v) { valid_ = std::min(v, cut()); }

  T operator[](int j) const {
    return (j >= 0 && j <= cut()) ? coeffs_[static_cast<std::size_t>(j)] : T{0};
  }
  T& coeff(int j) { return coeffs_.at(static_cast<std::size_t>(j)); }
  const std::vector<T>& coeffs() const { return coeffs_; }

  template <typename X>
  auto operator()(X x) const {
    decltype(T{} * x) acc{0};
    for (int j = cut(); j >= 0; --j) acc = acc * x + coeffs_[static_cast<std::size_t>(j)];
    return acc;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  // Same coefficients re-cut to `cut` (zero padded, or dropped).
  BasicTaylorSeries resized(int new_cut) const {
    std::vector<T> c(static_cast<std::size_t>(new_cut) + 1, T{0});
    for (int j = 0; j <= std::min(new_cut, cut()); ++j) c[static_cast<std::size_t>(j)] = coeffs_[static_cast<std::size_t>(j)];
    BasicTaylorSeries out(std::move(c));
    out.valid_ = new_cut > cut() ? valid_ : std::min(valid_, new_cut);
    return out;
  }

  BasicTaylorSeries derivative() const {
    std::vector<T> c(coeffs_.size(), T{0});
    for (int j = 0; j + 1 <= cut(); ++j) c[static_cast<std::size_t>(j)] = T(static_cast<double>(j + 1)) * coeffs_[static_cast<std::size_t>(j) + 1];
    BasicTaylorSeries out(std::move(c));
    out.valid_ = valid_ - 1;
    return out;
  }

  BasicTaylorSeries& operator+=(const BasicTaylorSeries& o) {
    const int n = std::min(cut(), o.cut());
    coeffs_.resize(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) coeffs_[static_cast<std::size_t>(j)] += o.coeffs_[static_cast<std::size_t>(j)];
    valid_ = std::min({valid_, o.valid_, n});
    return *this;
  }
  BasicTaylorSeries& operator-=(const BasicTaylorSeries& o) { return *this += o * T{-1}; }
  BasicTaylorSeries& operator*=(T s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }

  friend BasicTaylorSeries operator+(BasicTaylorSeries a, const BasicTaylorSeries& b) { return a += b; }
  friend BasicTaylorSeries operator-(BasicTaylorSeries a, const BasicTaylorSeries& b) { return a -= b; }
  friend BasicTaylorSeries operator*(BasicTaylorSeries a, T s) { return a *= s; }
  friend BasicTaylorSeries operator*(T s, BasicTaylorSeries a) { return a *= s; }

  // Cauchy product truncated at the smaller cut.
  friend BasicTaylorSeries operator*(const BasicTaylorSeries& a, const BasicTaylorSeries& b) {
    const int n = std::min(a.cut(), b.cut());
    std::vector<T> c(static_cast<std::size_t>(n) + 1, T{0});
    for (int i = 0; i <= n; ++i) {
      if (a[i] == T{0}) continue;
      for (int j = 0; i + j <= n; ++j) c[static_cast<std::size_t>(i + j)] += a[i] * b[j];
    }
    BasicTaylorSeries out(std::move(c));
    out.valid_ = std::min({a.valid_, b.valid_, n});
    return out;
  }

 private:
  std::vector<T> coeffs_;
  int valid_;
};

using TaylorSeries = BasicTaylorSeries<double>;
using ComplexTaylorSeries = BasicTaylorSeries<std::complex<double>>;

inline constexpr double kDivisionTolerance = 1e-12;

// a(x)/x. The constant term must vanish relative to the largest coefficient.
template <typename T>
BasicTaylorSeries<T> divide_by_variable(const BasicTaylorSeries<T>& a, double tol = kDivisionTolerance) {
  const double scale = a.max_abs();
  if (std::abs(a[0]) > tol * scale) {
    throw ContractError("Taylor division by x: constant term " + std::to_string(std::abs(a[0])) +
                        " is not zero; component is not solvable at this truncation");
  }
  std::vector<T> c(static_cast<std::size_t>(a.cut()) + 1, T{0});
  for (int j = 0; j < a.cut(); ++j) c[static_cast<std::size_t>(j)] = a[j + 1];
  return BasicTaylorSeries<T>(std::move(c), a.valid_order() - 1);
}

// num/den for den(0) != 0.
template <typename T, typename U>
BasicTaylorSeries<T> divide(const BasicTaylorSeries<T>& num, const BasicTaylorSeries<U>& den) {
  if (den[0] == U{0}) throw ContractError("Taylor division: denominator has zero constant term");
  const int n = std::min(num.cut(), den.cut());
  std::vector<T> q(static_cast<std::size_t>(n) + 1, T{0});
  for (int j = 0; j <= n; ++j) {
    T acc = num[j];
    for (int i = 1; i <= j; ++i) acc -= T(den[i]) * q[static_cast<std::size_t>(j - i)];
    q[static_cast<std::size_t>(j)] = acc / T(den[0]);
  }
  return BasicTaylorSeries<T>(std::move(q), std::min(num.valid_order(), den.valid_order()));
}

// outer(inner(x)); requires inner(0) = 0 so every output order is finite.
template <typename T, typename U>
BasicTaylorSeries<T> compose(const BasicTaylorSeries<T>& outer, const BasicTaylorSeries<U>& inner) {
  if (std::abs(inner[0]) != 0.0) throw ContractError("Taylor composition: inner series must vanish at 0");
  const int n = inner.cut();
  std::vector<T> ic(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) ic[static_cast<std::size_t>(j)] = T(inner[j]);
  const BasicTaylorSeries<T> in(std::move(ic), inner.valid_order());
  auto acc = BasicTaylorSeries<T>::zero(n);
  for (int j = outer.cut(); j >= 0; --j) {
    acc = acc * in;
    acc.coeff(0) += outer[j];
  }
  acc.set_valid_order(std::min(outer.valid_order(), inner.valid_order()));
  return acc;
}

// Compositional inverse w of g: g(w(s)) = s. Needs g(0) = 0, g'(0) != 0.
inline TaylorSeries reversion(const TaylorSeries& g) {
  if (g[0] != 0.0) throw ContractError("reversion: series must vanish at 0");
  if (g.cut() < 1 || g[1] == 0.0) throw ContractError("reversion: linear coefficient must be nonzero");
  const int n = g.cut();
  // Fixed point w <- (s - (g(w) - g1 w)) / g1; each pass fixes one more order.
  auto nonlinear = g;
  nonlinear.coeff(1) = 0.0;
  auto w = TaylorSeries::identity(n) * (1.0 / g[1]);
  for (int pass = 1; pass < n; ++pass) {
    w = (TaylorSeries::identity(n) - compose(nonlinear, w)) * (1.0 / g[1]);
  }
  w.set_valid_order(g.valid_order());
  return w;
}

}  // namespace loopwell
