#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "loopwell/normal_form.hpp"
#include "loopwell/series.hpp"

namespace loopwell {

struct RandomDeformationOptions {
  int max_fourier_cut = 6;
  int max_eps_cut = 4;
  int taylor_margin = 3;  // J = eps_cut + taylor_margin
  double scale = 1.0;     // coefficient magnitude bound
  // Restrict to symbols invariant under (theta, u) -> (-theta, -u) with g odd.
  // That symmetry is symplectic and forces q'(0) = 0 at every step, so the
  // normal form runs with the base point pinned.
  bool reversible = true;
};

struct RandomDeformation {
  SymbolModel model;
  FormalDeformation deformation;
};

inline RandomDeformation random_deformation(std::uint64_t seed, const RandomDeformationOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> pick_k(1, std::max(1, opt.max_fourier_cut));
  std::uniform_int_distribution<int> pick_n(2, std::max(2, opt.max_eps_cut));

  const int K = pick_k(rng);
  const int eps_cut = pick_n(rng);
  const int J = eps_cut + opt.taylor_margin;

  SymbolModel model;
  model.b0 = unit(rng);
  model.I0 = 0.5 + 0.5 * unit(rng);
  std::vector<double> g(static_cast<std::size_t>(J) + 1, 0.0);
  g[1] = (unit(rng) < 0 ? -1.0 : 1.0) * (0.5 + 0.5 * std::abs(unit(rng)));
  for (int j = 2; j <= J; ++j)
    if (!opt.reversible || j % 2 == 1) g[static_cast<std::size_t>(j)] = 0.3 * unit(rng);
  model.g = TaylorSeries(std::move(g));

  std::vector<FourierTaylorSeries> perturbations;
  for (int n = 1; n <= eps_cut; ++n) {
    FourierTaylorSeries p(model.I0, K, J);
    for (int j = 0; j <= J; ++j) {
      const double c0 = opt.scale * unit(rng);
      if (!opt.reversible || j % 2 == 0) p.at(0, j) = c0;
      for (int k = 1; k <= K; ++k) {
        cplx c{opt.scale * unit(rng), opt.scale * unit(rng)};
        if (opt.reversible) c = j % 2 == 0 ? cplx{c.real(), 0.0} : cplx{0.0, c.imag()};
        p.at(k, j) = c;
        p.at(-k, j) = std::conj(c);
      }
    }
    perturbations.push_back(std::move(p));
  }
  auto deformation = FormalDeformation::of_model(model, K, J, eps_cut, perturbations);
  return {std::move(model), std::move(deformation)};
}

}  // namespace loopwell
