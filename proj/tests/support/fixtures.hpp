#pragma once

#include <map>
#include <mutex>

#include "nlsprof/nlsprof.hpp"

namespace fixture {

using namespace nlsprof;

// Depth designed once on the reference grid and reused on every test grid.
inline double reference_depth() {
  static const double d = design_potential(make_grid(100, 1000), 0.1).potential.depth;
  return d;
}

inline SpectrumPtr spectrum(double r_max, int n, double depth = 0) {
  static std::map<std::tuple<double, int, double>, SpectrumPtr> cache;
  static std::mutex mu;
  if (depth == 0) depth = reference_depth();
  std::lock_guard lock(mu);
  auto key = std::make_tuple(r_max, n, depth);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto s = std::make_shared<const LinearSpectrum>(
      solve_bound_spectrum(assemble_hamiltonian(make_grid(r_max, n), Potential::gaussian(depth, 1.0))));
  cache[key] = s;
  return s;
}

// Reference grid for dynamics and resonance data.
inline SpectrumPtr reference() { return spectrum(100, 1000); }
// Small grid for algebraic checks.
inline SpectrumPtr small() { return spectrum(30, 299); }

inline const BoundStateFamily& excited_family(double top = 0.5) {
  static std::map<double, BoundStateFamily> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(top);
  if (it == cache.end()) it = cache.emplace(top, continue_excited_family(small(), 1.0, interpolation_grid(top))).first;
  return it->second;
}

inline RadialField random_field(const GridPtr& g, unsigned seed, double width = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  VectorXcd v(g->size());
  for (int i = 0; i < g->size(); ++i) {
    double r = g->nodes()[i];
    v[i] = cplx(n(rng), n(rng)) * std::exp(-r * r / (2 * width * width));
  }
  return RadialField(g, v);
}

}  // namespace fixture
