#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mermin/bell.hpp"
#include "mermin/pauli.hpp"

namespace mermin {

using Rng = std::mt19937_64;

/// Uniform on the sphere: a normalized standard Gaussian triple.
inline UnitVector3 random_direction(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const double x = g(rng), y = g(rng), z = g(rng);
    if (x * x + y * y + z * z > 1e-12) return UnitVector3::normalized(x, y, z);
  }
}

inline MeasurementSettings random_settings(std::size_t n, Rng& rng) {
  std::vector<SettingPair> pairs;
  pairs.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto a = random_direction(rng);
    const auto b = random_direction(rng);
    pairs.push_back({a, b});
  }
  return MeasurementSettings(std::move(pairs));
}

/// Independent uniform azimuths in [-pi, pi) for phi_j and phi_j'.
inline PlanarSettings random_planar(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::vector<PlanarAngles> a(n);
  for (auto& p : a) {
    p.phi = u(rng);
    p.phi_prime = u(rng);
  }
  return PlanarSettings(std::move(a));
}

/// Uniform phi_j with phi_j' = phi_j + pi/2.
inline PlanarSettings random_perpendicular_planar(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::vector<PlanarAngles> a(n);
  for (auto& p : a) {
    p.phi = u(rng);
    p.phi_prime = p.phi + std::numbers::pi / 2;
  }
  return PlanarSettings(std::move(a));
}

}  // namespace mermin
