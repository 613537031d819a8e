#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "loopwell/error.hpp"
#include "loopwell/hermitian_matrix.hpp"

namespace loopwell {

struct Spectrum {
  std::vector<double> eigenvalues;                          // nondecreasing
  std::vector<std::vector<std::complex<double>>> eigenvectors;  // eigenvectors[i] pairs with eigenvalues[i]
  std::optional<double> residual_bound;                     // max_i |A v_i - l_i v_i| / |A|, when vectors are present
};

inline constexpr int kMaxQlSweeps = 60;
inline constexpr double kHermitianTolerance = 1e-13;

// Real symmetric tridiagonal T (diag d, off-diagonal e[i] coupling i and i+1)
// together with the unitary Q such that A = Q T Q^*. Q = H_0 ... H_{n-3} P
// where H_k are Householder reflectors and P a diagonal phase matrix.
struct Tridiagonal {
  using cplx = std::complex<double>;

  std::vector<double> d;
  std::vector<double> e;  // size n - 1
  std::vector<cplx> phase;
  std::vector<std::vector<cplx>> reflectors;  // reflectors[k] acts on indices k+1 .. n-1; empty = identity
  double scale = 0.0;                         // inf-norm of the original matrix

  std::size_t size() const { return d.size(); }

  // Q y for a real eigenvector y of T.
  std::vector<cplx> back_transform(const std::vector<double>& y) const {
    const std::size_t n = size();
    std::vector<cplx> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = phase[i] * y[i];
    for (std::size_t k = reflectors.size(); k-- > 0;) {
      const auto& v = reflectors[k];
      if (v.empty()) continue;
      cplx dot{0.0, 0.0};
      double vv = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        dot += std::conj(v[i]) * z[k + 1 + i];
        vv += std::norm(v[i]);
      }
      const cplx f = 2.0 * dot / vv;
      for (std::size_t i = 0; i < v.size(); ++i) z[k + 1 + i] -= f * v[i];
    }
    return z;
  }
};

namespace detail {

// Householder reduction of a dense Hermitian (T = complex) or symmetric
// (T = double) matrix, row-major, overwritten.
template <typename T>
void householder_tridiagonalize(std::vector<T>& a, std::size_t n, Tridiagonal& out) {
  using std::abs;
  using std::conj;
  auto conj_t = [](const T& x) -> T {
    if constexpr (std::is_same_v<T, double>) return x;
    else return std::conj(x);
  };
  std::vector<T> sub(n > 0 ? n - 1 : 0);
  out.reflectors.assign(n >= 2 ? n - 2 : 0, {});
  std::vector<T> v, p;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double tail = 0.0;
    for (std::size_t i = 1; i < m; ++i) tail += std::norm(a[(k + 1 + i) * n + k]);
    const T x0 = a[(k + 1) * n + k];
    if (tail == 0.0) {
      sub[k] = x0;
      continue;
    }
    const double sigma = std::sqrt(tail + std::norm(x0));
    const T ph = abs(x0) == 0.0 ? T(1.0) : x0 / abs(x0);
    const T alpha = -ph * sigma;
    v.assign(m, T{});
    for (std::size_t i = 0; i < m; ++i) v[i] = a[(k + 1 + i) * n + k];
    v[0] -= alpha;
    double vv = 0.0;
    for (const auto& x : v) vv += std::norm(x);
    const double tau = 2.0 / vv;

    // p = tau B v, B the trailing block.
    p.assign(m, T{});
    for (std::size_t i = 0; i < m; ++i) {
      const T* row = &a[(k + 1 + i) * n + k + 1];
      T s{};
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      p[i] = tau * s;
    }
    T vp{};
    for (std::size_t i = 0; i < m; ++i) vp += conj_t(v[i]) * p[i];
    const double beta = 0.5 * tau * std::real(vp);
    for (std::size_t i = 0; i < m; ++i) p[i] -= beta * v[i];  // p is now w
    for (std::size_t i = 0; i < m; ++i) {
      T* row = &a[(k + 1 + i) * n + k + 1];
      const T vi = v[i];
      const T wi = p[i];
      for (std::size_t j = 0; j < m; ++j) row[j] -= vi * conj_t(p[j]) + wi * conj_t(v[j]);
    }
    sub[k] = alpha;
    std::vector<std::complex<double>> stored(m);
    for (std::size_t i = 0; i < m; ++i) stored[i] = std::complex<double>(v[i]);
    out.reflectors[k] = std::move(stored);
  }
  if (n >= 2) sub[n - 2] = a[(n - 1) * n + (n - 2)];

  out.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.d[i] = std::real(a[i * n + i]);
  out.e.resize(n > 0 ? n - 1 : 0);
  out.phase.assign(n, {1.0, 0.0});
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::complex<double> s(sub[k]);
    const double r = std::abs(s);
    out.e[k] = r;
    out.phase[k + 1] = r == 0.0 ? out.phase[k] : out.phase[k] * (s / r);
  }
}

inline double gershgorin_low(const Tridiagonal& t) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = (i > 0 ? t.e[i - 1] : 0.0) + (i + 1 < t.size() ? t.e[i] : 0.0);
    lo = std::min(lo, t.d[i] - r);
  }
  return lo;
}

inline double gershgorin_high(const Tridiagonal& t) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = (i > 0 ? t.e[i - 1] : 0.0) + (i + 1 < t.size() ? t.e[i] : 0.0);
    hi = std::max(hi, t.d[i] + r);
  }
  return hi;
}

}  // namespace detail

inline void require_hermitian(const HermitianMatrix& a) {
  const double defect = a.hermiticity_defect();
  if (defect > kHermitianTolerance * std::max(a.max_abs(), std::numeric_limits<double>::min())) {
    throw ContractError("eigensolver: matrix is not Hermitian (defect " + std::to_string(defect) + ")");
  }
}

// Unitary reduction A = Q T Q^*. Band width <= 1 needs only a phase gauge.
inline Tridiagonal tridiagonalize(const HermitianMatrix& a) {
  require_hermitian(a);
  const std::size_t n = a.size();
  Tridiagonal t;
  t.scale = a.norm_inf();
  if (a.bandwidth() <= 1) {
    t.d.resize(n);
    t.e.resize(n > 0 ? n - 1 : 0);
    t.phase.assign(n, {1.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) t.d[i] = a(i, i).real();
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const auto s = a(k + 1, k);
      const double r = std::abs(s);
      t.e[k] = r;
      t.phase[k + 1] = r == 0.0 ? t.phase[k] : t.phase[k] * (s / r);
    }
    return t;
  }
  if (a.is_real()) {
    std::vector<double> dense(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = a.lo(i); j <= a.hi(i); ++j) dense[i * n + j] = a(i, j).real();
    detail::householder_tridiagonalize(dense, n, t);
  } else {
    auto dense = a.to_dense();
    detail::householder_tridiagonalize(dense, n, t);
  }
  return t;
}

// Implicit-shift QL on a symmetric tridiagonal. If `vectors` is non-null it
// holds n rows (row i = i-th basis vector initially) and receives the
// eigenvectors as rows. Eigenvalues are returned unsorted.
inline std::vector<double> tridiagonal_ql(std::vector<double> d, std::vector<double> e_in,
                                          std::vector<std::vector<double>>* vectors) {
  const std::size_t n = d.size();
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = e_in[i];
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxQlSweeps)
          throw ContractError("eigensolver: QL iteration did not converge within " + std::to_string(kMaxQlSweeps) +
                              " sweeps");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::size_t i = m; i-- > l;) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (vectors) {
            auto& zi = (*vectors)[i];
            auto& zi1 = (*vectors)[i + 1];
            for (std::size_t k = 0; k < n; ++k) {
              f = zi1[k];
              zi1[k] = s * zi[k] + c * f;
              zi[k] = c * zi[k] - s * f;
            }
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return d;
}

// Number of eigenvalues of T strictly below x (Sturm sequence count).
inline std::size_t sturm_count(const Tridiagonal& t, double x) {
  const std::size_t n = t.size();
  const double tiny = std::numeric_limits<double>::min() * 4.0 + std::numeric_limits<double>::epsilon() * t.scale * 1e-3;
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double off = i > 0 ? t.e[i - 1] * t.e[i - 1] : 0.0;
    q = t.d[i] - x - (i > 0 ? off / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

// The i-th smallest eigenvalue (0-based) by Sturm bisection.
inline double bisect_eigenvalue(const Tridiagonal& t, std::size_t index) {
  double lo = detail::gershgorin_low(t);
  double hi = detail::gershgorin_high(t);
  const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  const double tol = 2.0 * std::numeric_limits<double>::epsilon() * scale;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) > index) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> sturm_eigenvalues(const Tridiagonal& t, std::size_t count) {
  std::vector<double> out(std::min(count, t.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bisect_eigenvalue(t, i);
  return out;
}

namespace detail {

// Solve (T - lambda) x = b in place, Gaussian elimination with partial pivoting.
inline void shifted_tridiagonal_solve(const std::vector<double>& d, const std::vector<double>& e, double lambda,
                                      double pivot_floor, std::vector<double>& b) {
  const std::size_t n = d.size();
  if (n == 0) return;
  std::vector<double> dl(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(n - 1));
  std::vector<double> du(dl);
  std::vector<double> dd(n), du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<unsigned char> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) dd[i] = d[i] - lambda;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(dd[i]) >= std::abs(dl[i])) {
      if (dd[i] == 0.0) dd[i] = pivot_floor;
      const double fact = dl[i] / dd[i];
      dl[i] = fact;
      dd[i + 1] -= fact * du[i];
    } else {
      const double fact = dd[i] / dl[i];
      dd[i] = dl[i];
      dl[i] = fact;
      const double temp = du[i];
      du[i] = dd[i + 1];
      dd[i + 1] = temp - fact * dd[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      swapped[i] = 1;
    }
  }
  if (dd[n - 1] == 0.0) dd[n - 1] = pivot_floor;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(b[i], b[i + 1]);
    b[i + 1] -= dl[i] * b[i];
  }
  b[n - 1] /= dd[n - 1];
  if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / dd[n - 2];
  for (std::size_t i = n >= 2 ? n - 2 : 0; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / dd[i];
}

inline void normalize(std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  s = std::sqrt(s);
  if (s > 0.0)
    for (double& v : x) v /= s;
}

// Eigenvectors of T for sorted eigenvalues `lambdas` by inverse iteration,
// splitting T into unreduced blocks and orthogonalizing within clusters.
inline std::vector<std::vector<double>> inverse_iteration(const Tridiagonal& t, const std::vector<double>& lambdas) {
  const std::size_t n = t.size();
  const double eps = std::numeric_limits<double>::epsilon();
  const double norm = std::max(t.scale, std::numeric_limits<double>::min());

  // Unreduced blocks [begin, end).
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  std::size_t begin = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(t.e[i]) <= eps * (std::abs(t.d[i]) + std::abs(t.d[i + 1]))) {
      blocks.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  blocks.emplace_back(begin, n);

  // Each block's eigenvalues, so every requested eigenvalue is owned by one block.
  struct Owned {
    double value;
    std::size_t block;
  };
  std::vector<Owned> candidates;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto [b0, b1] = blocks[bi];
    Tridiagonal sub;
    sub.d.assign(t.d.begin() + static_cast<std::ptrdiff_t>(b0), t.d.begin() + static_cast<std::ptrdiff_t>(b1));
    sub.e.assign(t.e.begin() + static_cast<std::ptrdiff_t>(b0), t.e.begin() + static_cast<std::ptrdiff_t>(b1 - 1));
    sub.scale = t.scale;
    const std::size_t want = std::min(lambdas.size(), b1 - b0);
    for (double v : sturm_eigenvalues(sub, want)) candidates.push_back({v, bi});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Owned& a, const Owned& b) { return a.value < b.value; });

  std::vector<std::vector<double>> out;
  out.reserve(lambdas.size());
  std::vector<std::size_t> owner;
  const double cluster = 1e-3 * norm;
  for (std::size_t idx = 0; idx < lambdas.size() && idx < candidates.size(); ++idx) {
    const auto [lambda, bi] = candidates[idx];
    const auto [b0, b1] = blocks[bi];
    const std::size_t m = b1 - b0;
    std::vector<double> bd(t.d.begin() + static_cast<std::ptrdiff_t>(b0), t.d.begin() + static_cast<std::ptrdiff_t>(b1));
    std::vector<double> be(m > 0 ? m - 1 : 0);
    for (std::size_t i = 0; i + 1 < m; ++i) be[i] = t.e[b0 + i];
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = 1.0 + 0.1 * std::sin(1.0 + 3.7 * static_cast<double>(i + idx));
    auto orthogonalize = [&]() {
      for (std::size_t prev = 0; prev < out.size(); ++prev) {
        if (owner[prev] != bi || std::abs(candidates[prev].value - lambda) > cluster) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += out[prev][b0 + i] * x[i];
        for (std::size_t i = 0; i < m; ++i) x[i] -= dot * out[prev][b0 + i];
      }
    };
    normalize(x);
    for (int it = 0; it < 4; ++it) {
      shifted_tridiagonal_solve(bd, be, lambda, eps * norm, x);
      orthogonalize();
      normalize(x);
    }
    std::vector<double> full(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) full[b0 + i] = x[i];
    out.push_back(std::move(full));
    owner.push_back(bi);
  }
  return out;
}

inline double residual_bound(const HermitianMatrix& a, const Spectrum& s) {
  const double norm = std::max(a.norm_inf(), std::numeric_limits<double>::min());
  double worst = 0.0;
  for (std::size_t i = 0; i < s.eigenvectors.size(); ++i) {
    const auto& v = s.eigenvectors[i];
    const auto av = a.multiply(v);
    double r = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) r += std::norm(av[k] - s.eigenvalues[i] * v[k]);
    worst = std::max(worst, std::sqrt(r) / norm);
  }
  return worst;
}

// Diagonal input: sorted diagonal and unit vectors, bit-exact.
inline Spectrum diagonal_spectrum(const HermitianMatrix& a, std::size_t m, bool want_vectors) {
  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });
  Spectrum s;
  for (std::size_t r = 0; r < m; ++r) {
    s.eigenvalues.push_back(a(order[r], order[r]).real());
    if (want_vectors) {
      std::vector<std::complex<double>> v(n, 0.0);
      v[order[r]] = 1.0;
      s.eigenvectors.push_back(std::move(v));
    }
  }
  if (want_vectors) s.residual_bound = 0.0;
  return s;
}

}  // namespace detail

// Full spectrum (and optionally eigenvectors) of a Hermitian matrix.
inline Spectrum eigen_hermitian(const HermitianMatrix& a, bool want_vectors = false) {
  if (a.is_diagonal()) {
    require_hermitian(a);
    return detail::diagonal_spectrum(a, a.size(), want_vectors);
  }
  const auto t = tridiagonalize(a);
  const std::size_t n = t.size();
  Spectrum s;
  if (!want_vectors) {
    s.eigenvalues = tridiagonal_ql(t.d, t.e, nullptr);
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    return s;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) z[i][i] = 1.0;
  auto values = tridiagonal_ql(t.d, t.e, &z);
  // Row idx of z is the tridiagonal eigenvector for values[idx].
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  s.eigenvalues.reserve(n);
  s.eigenvectors.reserve(n);
  for (std::size_t idx : order) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = z[idx][k];
    s.eigenvalues.push_back(values[idx]);
    s.eigenvectors.push_back(t.back_transform(y));
  }
  s.residual_bound = detail::residual_bound(a, s);
  return s;
}

// The m smallest eigenvalues (Sturm bisection) and optionally their vectors
// (inverse iteration on the tridiagonal, then back-transformed).
inline Spectrum lowest_k(const HermitianMatrix& a, std::size_t m, bool want_vectors = false) {
  if (m > a.size()) {
    throw ContractError("lowest_k: requested " + std::to_string(m) + " eigenvalues of a " + std::to_string(a.size()) +
                        "-dimensional matrix");
  }
  if (a.is_diagonal()) {
    require_hermitian(a);
    return detail::diagonal_spectrum(a, m, want_vectors);
  }
  const auto t = tridiagonalize(a);
  Spectrum s;
  s.eigenvalues = sturm_eigenvalues(t, m);
  if (want_vectors) {
    for (const auto& y : detail::inverse_iteration(t, s.eigenvalues)) s.eigenvectors.push_back(t.back_transform(y));
    s.residual_bound = detail::residual_bound(a, s);
  }
  return s;
}

}  // namespace loopwell
