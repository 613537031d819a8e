#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "loopwell/error.hpp"

namespace loopwell {

// Square complex matrix stored as a band of half-width `bandwidth` (both
// triangles kept, so non-Hermitian input is representable and detectable).
// bandwidth = n - 1 is a dense matrix.
class HermitianMatrix {
 public:
  using cplx = std::complex<double>;

  HermitianMatrix() = default;
  HermitianMatrix(std::size_t n, std::size_t bandwidth)
      : n_(n), bw_(n == 0 ? 0 : std::min(bandwidth, n - 1)), a_(n * (2 * bw_ + 1), cplx{0.0, 0.0}) {}

  static HermitianMatrix dense(std::size_t n) { return HermitianMatrix(n, n == 0 ? 0 : n - 1); }

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }

  bool in_band(std::size_t i, std::size_t j) const { return (i > j ? i - j : j - i) <= bw_; }

  cplx operator()(std::size_t i, std::size_t j) const { return in_band(i, j) ? a_[index(i, j)] : cplx{0.0, 0.0}; }

  void set(std::size_t i, std::size_t j, cplx v) {
    if (!in_band(i, j)) throw ContractError("HermitianMatrix: entry outside the band");
    a_[index(i, j)] = v;
  }
  void add(std::size_t i, std::size_t j, cplx v) {
    if (!in_band(i, j)) throw ContractError("HermitianMatrix: entry outside the band");
    a_[index(i, j)] += v;
  }
  // Sets (i, j) and its mirror (j, i) = conj(v).
  void set_hermitian(std::size_t i, std::size_t j, cplx v) {
    set(i, j, v);
    set(j, i, std::conj(v));
  }
  void add_hermitian(std::size_t i, std::size_t j, cplx v) {
    if (i == j) {
      add(i, i, v.real());
      return;
    }
    add(i, j, v);
    add(j, i, std::conj(v));
  }

  // max-row-sum norm
  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = lo(i); j <= hi(i); ++j) s += std::abs(a_[index(i, j)]);
      m = std::max(m, s);
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  // max |A(i,j) - conj A(j,i)|
  double hermiticity_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = lo(i); j <= i; ++j) d = std::max(d, std::abs(a_[index(i, j)] - std::conj(a_[index(j, i)])));
    return d;
  }

  bool is_real() const {
    return std::all_of(a_.begin(), a_.end(), [](const cplx& x) { return x.imag() == 0.0; });
  }

  bool is_diagonal() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = lo(i); j <= hi(i); ++j)
        if (i != j && a_[index(i, j)] != cplx{0.0, 0.0}) return false;
    return true;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += a_[index(i, i)].real();
    return t;
  }

  std::vector<cplx> multiply(std::span<const cplx> x) const {
    std::vector<cplx> y(n_, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_; ++i) {
      cplx s{0.0, 0.0};
      for (std::size_t j = lo(i); j <= hi(i); ++j) s += a_[index(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

  // Row-major dense copy.
  std::vector<cplx> to_dense() const {
    std::vector<cplx> d(n_ * n_, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = lo(i); j <= hi(i); ++j) d[i * n_ + j] = a_[index(i, j)];
    return d;
  }

  std::size_t lo(std::size_t i) const { return i >= bw_ ? i - bw_ : 0; }
  std::size_t hi(std::size_t i) const { return n_ == 0 ? 0 : std::min(n_ - 1, i + bw_); }

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * (2 * bw_ + 1) + (j + bw_ - i); }

  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<cplx> a_;
};

}  // namespace loopwell
