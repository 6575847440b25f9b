#pragma once

// Derivative-free maximization of the quantum value over planar measurement
// angles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mermin/bell.hpp"
#include "mermin/error.hpp"
#include "mermin/spectra.hpp"

namespace mermin {

enum class Objective { ghz_expectation, planar_spectral_max };

inline const char* to_string(Objective o) {
  return o == Objective::ghz_expectation ? "ghz" : "spectral";
}

struct OptimizeConfig {
  std::size_t n = 3;
  Objective objective = Objective::planar_spectral_max;
  std::size_t max_iters = 20000;  // per restart
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;     // objective spread across the simplex
  double simplex_tolerance = 1e-8;  // simplex diameter
  /// Particle (1-based) -> fixed included angle theta_j.
  std::map<std::size_t, double> pinned_thetas;
};

struct RestartOutcome {
  PlanarSettings angles;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct OptimizeResult {
  PlanarSettings best_angles;
  double best_value = 0.0;
  std::size_t iterations = 0;  // summed over restarts
  bool converged = false;      // the best restart converged
  std::size_t best_restart = 0;
  std::vector<RestartOutcome> restarts;
};

/// Quantum ceiling of the objective: 2^{2(n-1)} for B^2 diagonals, 2^{n-1} for <B>.
inline double objective_ceiling(std::size_t n, Objective o) {
  return o == Objective::planar_spectral_max ? pow2(2 * (static_cast<int>(n) - 1))
                                             : pow2(static_cast<int>(n) - 1);
}

/// Spectral: largest diagonal entry of B^2. GHZ: <Phi+|B|Phi+> with the state
/// phase phi_1 + ... + phi_n + pi/2.
inline double objective_eval(const PlanarSettings& angles, Objective objective) {
  if (objective == Objective::planar_spectral_max) return planar_spectral_max(angles);
  double phase = std::numbers::pi / 2;
  for (const auto& a : angles.angles()) phase += a.phi;
  return expectation(ghz_state({angles.n(), 1, phase}), mermin_operator(angles.to_measurement()));
}

// ---------------------------------------------------------------------------

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;  // minimized value
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes f from x0 with an axis-aligned initial simplex of edge `step`.
/// Coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double step, std::size_t max_iters,
                                    double ftol, double xtol) {
  const std::size_t dim = x0.size();
  NelderMeadResult r;
  if (dim == 0) {
    r.x = x0;
    r.value = f(x0);
    r.converged = true;
    return r;
  }
  std::vector<std::vector<double>> pts(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += step;
  std::vector<double> vals(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> idx(dim + 1);
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> p(dim);
    for (std::size_t k = 0; k < dim; ++k) p[k] = c[k] + t * (w[k] - c[k]);
    return p;
  };

  while (r.iterations < max_iters) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[dim - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= dim; ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d = std::max(d, std::abs(pts[i][k] - pts[best][k]));
      diameter = std::max(diameter, d);
    }
    if (vals[worst] - vals[best] < ftol || diameter < xtol) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i][k] / static_cast<double>(dim);
    }
    const auto reflected = point(centroid, pts[worst], -1.0);
    const double fr = f(reflected);
    if (fr < vals[best]) {
      const auto expanded = point(centroid, pts[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        vals[worst] = fe;
      } else {
        pts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const auto contracted = outside ? point(centroid, pts[worst], -0.5) : point(centroid, pts[worst], 0.5);
    const double fc = f(contracted);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      pts[i] = point(pts[best], pts[i], 0.5);
      vals[i] = f(pts[i]);
    }
  }
  const std::size_t best =
      static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  r.x = pts[best];
  r.value = vals[best];
  return r;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void validate_config(const OptimizeConfig& c) {
  if (c.max_iters < 1) throw ContractError("optimize_angles: max_iters must be >= 1");
  if (c.restarts < 1) throw ContractError("optimize_angles: restarts must be >= 1");
  const std::size_t hi = c.objective == Objective::ghz_expectation ? 12 : 20;
  if (c.n < 3 || c.n > hi) {
    throw ContractError(std::string("optimize_angles: n must be in 3..") + std::to_string(hi) +
                        " for the " + to_string(c.objective) + " objective");
  }
  for (const auto& [j, theta] : c.pinned_thetas) {
    if (j < 1 || j > c.n) throw ContractError("optimize_angles: pinned particle out of range");
    if (!std::isfinite(theta)) throw ContractError("optimize_angles: pinned angle must be finite");
  }
}

// Parameter layout: phi_1..phi_n, then theta_j for every unpinned particle.
inline PlanarSettings decode_angles(const OptimizeConfig& c, const std::vector<double>& x) {
  std::vector<double> phis(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(c.n));
  std::vector<double> thetas(c.n);
  std::size_t k = c.n;
  for (std::size_t j = 1; j <= c.n; ++j) {
    auto it = c.pinned_thetas.find(j);
    thetas[j - 1] = it != c.pinned_thetas.end() ? it->second : x[k++];
  }
  for (double& p : phis) p = wrap_angle(p);
  for (double& t : thetas) t = wrap_angle(t);
  return PlanarSettings::from_thetas(phis, thetas);
}

// splitmix64; one independent stream per restart.
inline std::uint64_t restart_seed(std::uint64_t seed, std::size_t restart) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (restart + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Multi-restart Nelder-Mead over (phi_j, theta_j). Each restart polishes its
/// optimum by rebuilding the simplex until the value stops improving.
inline OptimizeResult optimize_angles(const OptimizeConfig& config) {
  detail::validate_config(config);
  const std::size_t dim = config.n + (config.n - config.pinned_thetas.size());
  auto objective = [&](const std::vector<double>& x) {
    return -objective_eval(detail::decode_angles(config, x), config.objective);
  };

  std::vector<RestartOutcome> outcomes;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(detail::restart_seed(config.seed, r));
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<double> x(dim);
    for (double& v : x) v = angle(rng);

    NelderMeadResult nm = nelder_mead(objective, x, 0.5, config.max_iters, config.tolerance,
                                      config.simplex_tolerance);
    std::size_t iterations = nm.iterations;
    for (int polish = 0; polish < 3 && iterations < config.max_iters; ++polish) {
      NelderMeadResult next = nelder_mead(objective, nm.x, 0.05, config.max_iters - iterations,
                                          config.tolerance, config.simplex_tolerance);
      iterations += next.iterations;
      const bool improved = next.value < nm.value - config.tolerance;
      if (next.value <= nm.value) nm = std::move(next);
      if (!improved) break;
    }
    x = nm.x;
    const PlanarSettings angles = detail::decode_angles(config, x);
    outcomes.push_back({angles, objective_eval(angles, config.objective), iterations, nm.converged});
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < outcomes.size(); ++r) {
    if (outcomes[r].value > outcomes[best].value) best = r;  // lowest index wins ties
  }
  std::size_t total = 0;
  for (const auto& o : outcomes) total += o.iterations;
  return {outcomes[best].angles, outcomes[best].value, total, outcomes[best].converged, best,
          std::move(outcomes)};
}

}  // namespace mermin
