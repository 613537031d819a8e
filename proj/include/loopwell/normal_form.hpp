#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "loopwell/error.hpp"
#include "loopwell/series.hpp"

namespace loopwell {

// p_eps = sum_n eps^n orders[n], n = 0..eps_cut, with orders[0] = b0 + (g o f)^2.
class FormalDeformation {
 public:
  // perturbations[i] is the coefficient of eps^(i+1); missing orders are zero.
  static FormalDeformation of_model(const SymbolModel& model, int K, int J, int eps_cut,
                                    const std::vector<FourierTaylorSeries>& perturbations) {
    if (eps_cut < 1) throw ContractError("FormalDeformation: eps cut must be >= 1");
    if (static_cast<int>(perturbations.size()) > eps_cut)
      throw ContractError("FormalDeformation: more perturbation orders than the eps cut");
    std::vector<FourierTaylorSeries> orders;
    orders.reserve(static_cast<std::size_t>(eps_cut) + 1);
    orders.push_back(model.principal_symbol(K, J));
    for (int n = 1; n <= eps_cut; ++n) {
      if (n <= static_cast<int>(perturbations.size())) {
        const auto& p = perturbations[static_cast<std::size_t>(n - 1)];
        if (p.base_point() != model.I0) throw ContractError("FormalDeformation: perturbation base point differs from I0");
        // a fully valid input is an exact polynomial
        auto q = p.resized(K, J);
        if (p.valid_order() == p.taylor_cut()) q.set_valid_order(J);
        orders.push_back(std::move(q));
      } else {
        orders.emplace_back(model.I0, K, J);
      }
    }
    return FormalDeformation(std::move(orders));
  }

  int eps_cut() const { return static_cast<int>(orders_.size()) - 1; }
  const FourierTaylorSeries& order(int n) const { return orders_.at(static_cast<std::size_t>(n)); }
  const std::vector<FourierTaylorSeries>& orders() const { return orders_; }

 private:
  explicit FormalDeformation(std::vector<FourierTaylorSeries> orders) : orders_(std::move(orders)) {}

  friend FormalDeformation lie_transform(const FormalDeformation&, const FourierTaylorSeries&, int);

  std::vector<FourierTaylorSeries> orders_;
};

// exp(eps^N ad_a) p = sum_m (eps^N ad_a)^m p / m!, ad_a h = {a, h}, cut at eps^eps_cut.
inline FormalDeformation lie_transform(const FormalDeformation& p, const FourierTaylorSeries& a, int N) {
  if (N < 1) throw ContractError("lie_transform: N must be >= 1");
  auto out = p.orders_;
  if (a.is_zero() || N > p.eps_cut()) return FormalDeformation(std::move(out));
  for (int n = 0; n + N <= p.eps_cut(); ++n) {
    auto term = p.order(n);
    for (int m = 1; n + m * N <= p.eps_cut(); ++m) {
      term = scale(poisson_bracket(a, term), 1.0 / m);
      auto& dst = out[static_cast<std::size_t>(n + m * N)];
      dst = add(dst, term);
    }
  }
  return FormalDeformation(std::move(out));
}

// Adds the eps^N block of g_eps that absorbs eps^N q(f) into the square:
// (g_eps + eps^N c)^2 = g_eps^2 + eps^N 2 g c + O(eps^(N+1)), so c = q(g(u)) / (2 g(u)).
// With pin_base_point, c(I0) = q'(0) / 2 must vanish so that g_eps(I0) = 0 at
// every order; otherwise the block is rejected.
inline std::vector<TaylorSeries> complete_square(std::vector<TaylorSeries> g_eps, const TaylorSeries& q, int N,
                                                 bool pin_base_point = true) {
  constexpr double kTol = 1e-11;
  if (g_eps.empty()) throw ContractError("complete_square: g_eps needs its order-0 term");
  if (N < 1) throw ContractError("complete_square: N must be >= 1");
  const double scale_q = std::max(q.max_abs(), 1e-300);
  if (std::abs(q[0]) > kTol * scale_q) throw ContractError("complete_square: q(0) must vanish");

  const auto g = g_eps.front();
  const int J = g.cut();
  while (static_cast<int>(g_eps.size()) <= N) g_eps.push_back(TaylorSeries::zero(J));
  if (q.max_abs() == 0.0) return g_eps;

  auto q0 = q.resized(J);
  q0.coeff(0) = 0.0;
  const auto qg = compose(q0, g);
  const auto half_g_over_u = divide_by_variable(g * 2.0);
  auto c = divide(divide_by_variable(qg, kTol), half_g_over_u);
  if (pin_base_point && std::abs(c[0]) > kTol * std::max(c.max_abs(), scale_q)) {
    throw ContractError("complete_square: eps^" + std::to_string(N) + " block would move g_eps(I0) by " +
                        std::to_string(c[0]) + "; q'(0) != 0 cannot be absorbed with g_eps(I0) = 0");
  }
  if (pin_base_point) c.coeff(0) = 0.0;
  g_eps[static_cast<std::size_t>(N)] += c;
  g_eps[static_cast<std::size_t>(N)].set_valid_order(std::min(g_eps[static_cast<std::size_t>(N)].valid_order(), c.valid_order()));
  return g_eps;
}

struct NormalFormOptions {
  // Enforce g_eps(I0) = 0 at every order (rejects corrections with q'(0) != 0).
  bool pin_base_point = true;
  // Relative tolerance for the per-step cancellation check.
  double step_tolerance = 1e-10;
};

struct NormalFormResult {
  int eps_cut = 1;
  std::vector<TaylorSeries> g_eps;                               // g_eps[n]: coefficient of eps^n
  std::vector<FourierTaylorSeries> v_eps;                        // v_eps[n]: coefficient of eps^n in V_eps
  std::vector<std::pair<int, FourierTaylorSeries>> generators;   // (N, a_N), applied in order
  FourierTaylorSeries residual;                                  // un-normalized eps^eps_cut term
};

// Order-n coefficient of b0 + (g_eps o f)^2 + eps V_eps.
inline FourierTaylorSeries normal_form_order(const NormalFormResult& nf, const SymbolModel& model, int n, int K) {
  const int J = nf.g_eps.front().cut();
  auto sq = TaylorSeries::zero(J);
  int valid = J;
  for (int i = 0; i <= n; ++i) {
    const int j = n - i;
    if (i >= static_cast<int>(nf.g_eps.size()) || j >= static_cast<int>(nf.g_eps.size())) continue;
    const auto prod = nf.g_eps[static_cast<std::size_t>(i)] * nf.g_eps[static_cast<std::size_t>(j)];
    sq += prod;
    valid = std::min(valid, prod.valid_order());
  }
  sq.set_valid_order(valid);
  if (n == 0) sq.coeff(0) += model.b0;
  auto out = FourierTaylorSeries::from_action_function(model.I0, K, sq);
  if (n >= 1 && n - 1 < static_cast<int>(nf.v_eps.size())) out = add(out, nf.v_eps[static_cast<std::size_t>(n - 1)].resized(K, J));
  return out;
}

// Iterated normal form: for N = 1 .. eps_cut - 1, the eps^N remainder r is
// split by the cohomological equation, the Lie generator a_N removes its image
// part, q is absorbed into g_eps and the angle-only part is appended to V_eps
// at eps^(N-1). Orders 0 .. eps_cut - 1 of the transformed symbol are then in
// normal form; the eps^eps_cut remainder is reported as the residual.
inline NormalFormResult birkhoff_normal_form(const FormalDeformation& p, const SymbolModel& model,
                                             const NormalFormOptions& options = {}) {
  model.validate();
  const int K = p.order(0).fourier_cut();
  const int J = p.order(0).taylor_cut();
  NormalFormResult nf;
  nf.eps_cut = p.eps_cut();
  nf.g_eps.push_back(model.g_series(J));

  auto current = p;
  for (int N = 1; N < p.eps_cut(); ++N) {
    const auto lower = normal_form_order(nf, model, N, K);
    const auto r = subtract(current.order(N), lower);
    const auto sol = solve_cohomological(r, model);

    current = lie_transform(current, sol.generator, N);

    const auto absorbed = add(kernel_function(sol.q, model, K), sol.potential);
    const auto leftover = subtract(subtract(current.order(N), lower), absorbed);
    const int through = std::max(leftover.valid_order(), 0);
    const double defect = max_abs_difference(leftover, FourierTaylorSeries(model.I0, K, J), through);
    if (defect > options.step_tolerance * std::max(1.0, r.max_abs())) {
      throw ContractError("birkhoff_normal_form: generator at eps^" + std::to_string(N) +
                          " does not cancel the image part (defect " + std::to_string(defect) + ")");
    }

    nf.g_eps = complete_square(std::move(nf.g_eps), sol.q, N, options.pin_base_point);
    nf.v_eps.push_back(sol.potential);
    nf.generators.emplace_back(N, sol.generator);
  }
  while (static_cast<int>(nf.g_eps.size()) < p.eps_cut()) nf.g_eps.push_back(TaylorSeries::zero(J));
  nf.residual = subtract(current.order(p.eps_cut()), normal_form_order(nf, model, p.eps_cut(), K));
  return nf;
}

}  // namespace loopwell
