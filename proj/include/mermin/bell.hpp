#pragma once

// Bell operators of the CHSH / Mermin family, their squared-operator
// expansions in terms of single-particle commutators, and the reduction law
// relating B^2(n | m vanishing commutators) to B^2(n - m).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mermin/eigen.hpp"
#include "mermin/error.hpp"
#include "mermin/pauli.hpp"

namespace mermin {

struct SettingPair {
  UnitVector3 a;  // primary direction n_j
  UnitVector3 b;  // primed direction n_j'
};

class MeasurementSettings {
 public:
  explicit MeasurementSettings(std::vector<SettingPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.size() < 2) throw ValidationError("MeasurementSettings: need at least 2 particles");
    if (pairs_.size() > kMaxParticles) throw ValidationError("MeasurementSettings: too many particles");
  }

  /// All n_j = x and n_j' = y.
  static MeasurementSettings canonical(std::size_t n) {
    return MeasurementSettings(
        std::vector<SettingPair>(n, SettingPair{UnitVector3::x_axis(), UnitVector3::y_axis()}));
  }

  std::size_t n() const { return pairs_.size(); }
  const std::vector<SettingPair>& pairs() const { return pairs_; }
  const SettingPair& operator[](std::size_t j) const { return pairs_[j]; }

  /// Settings of the listed particles (1-based), in the given order.
  MeasurementSettings subset(std::span<const std::size_t> particles) const {
    std::vector<SettingPair> out;
    out.reserve(particles.size());
    for (std::size_t p : particles) out.push_back(pairs_.at(p - 1));
    return MeasurementSettings(std::move(out));
  }

 private:
  std::vector<SettingPair> pairs_;
};

struct PlanarAngles {
  double phi = 0.0;
  double phi_prime = 0.0;
  double theta() const { return phi_prime - phi; }
};

/// Measurement directions confined to the x-y plane, given by azimuths.
class PlanarSettings {
 public:
  explicit PlanarSettings(std::vector<PlanarAngles> angles) : angles_(std::move(angles)) {
    if (angles_.empty()) throw ValidationError("PlanarSettings: need at least 1 particle");
    if (angles_.size() > kMaxParticles) throw ValidationError("PlanarSettings: too many particles");
    for (const auto& a : angles_) {
      if (!std::isfinite(a.phi) || !std::isfinite(a.phi_prime)) {
        throw ValidationError("PlanarSettings: angles must be finite");
      }
    }
  }

  /// phi_j = 0 and phi_j' = theta for every particle.
  static PlanarSettings uniform_theta(std::size_t n, double theta) {
    return PlanarSettings(std::vector<PlanarAngles>(n, PlanarAngles{0.0, theta}));
  }

  static PlanarSettings from_thetas(const std::vector<double>& phis, const std::vector<double>& thetas) {
    if (phis.size() != thetas.size()) throw ValidationError("PlanarSettings: size mismatch");
    std::vector<PlanarAngles> a(phis.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = {phis[j], phis[j] + thetas[j]};
    return PlanarSettings(std::move(a));
  }

  std::size_t n() const { return angles_.size(); }
  const std::vector<PlanarAngles>& angles() const { return angles_; }
  const PlanarAngles& operator[](std::size_t j) const { return angles_[j]; }

  std::vector<double> thetas() const {
    std::vector<double> t(angles_.size());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = angles_[j].theta();
    return t;
  }

  MeasurementSettings to_measurement() const {
    std::vector<SettingPair> pairs;
    pairs.reserve(angles_.size());
    for (const auto& a : angles_) {
      pairs.push_back({UnitVector3::planar(a.phi), UnitVector3::planar(a.phi_prime)});
    }
    return MeasurementSettings(std::move(pairs));
  }

 private:
  std::vector<PlanarAngles> angles_;
};

struct ExpansionReport {
  PauliOperator expansion;
  /// Order 2k -> number of 2k-fold commutator products summed in that group.
  std::map<std::size_t, std::size_t> group_term_counts;
  /// Even n only: the final group holds one commutator and one anticommutator product.
  std::size_t final_commutator_products = 0;
  std::size_t final_anticommutator_products = 0;
  /// Max coefficient deviation from the directly squared operator.
  double residual = 0.0;
};

enum class FactorOrder { ascending, descending };

// ---------------------------------------------------------------------------
// Building blocks

/// sigma(v) placed on particle j (1-based) of n.
inline PauliOperator spin_on(const UnitVector3& v, std::size_t j, std::size_t n) {
  return embed(single_spin_operator(v), j, n);
}

/// [sigma(n_j), sigma(n_j')] on particle j, embedded in n particles.
inline PauliOperator commutator_on(const MeasurementSettings& s, std::size_t j) {
  const auto& p = s[j - 1];
  return embed(commutator(single_spin_operator(p.a), single_spin_operator(p.b)), j, s.n());
}

/// {sigma(n_j), sigma(n_j')} on particle j, embedded in n particles.
inline PauliOperator anticommutator_on(const MeasurementSettings& s, std::size_t j) {
  const auto& p = s[j - 1];
  return embed(anticommutator(single_spin_operator(p.a), single_spin_operator(p.b)), j, s.n());
}

inline PauliOperator square(const PauliOperator& op) { return multiply(op, op); }

inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double pow2(int e) { return std::ldexp(1.0, e); }

namespace detail {

inline void require_n(const MeasurementSettings& s, std::size_t n, const char* what) {
  if (s.n() != n) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(n) +
                         " particles, got " + std::to_string(s.n()));
  }
}

// Product of per-particle factors over `members` (bit j-1 set = particle j).
inline PauliOperator product_over(const std::vector<PauliOperator>& factors, std::uint32_t members,
                                  std::size_t n, FactorOrder order) {
  PauliOperator acc = PauliOperator::identity(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order == FactorOrder::ascending ? k : n - 1 - k;
    if (members & (std::uint32_t{1} << j)) acc = multiply(acc, factors[j]);
  }
  return acc;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operators

/// s1 s2 + s1 s2' + s1' s2 - s1' s2'.
inline PauliOperator chsh_operator(const MeasurementSettings& s) {
  detail::require_n(s, 2, "chsh_operator");
  const auto a1 = spin_on(s[0].a, 1, 2), b1 = spin_on(s[0].b, 1, 2);
  const auto a2 = spin_on(s[1].a, 2, 2), b2 = spin_on(s[1].b, 2, 2);
  return a1 * a2 + a1 * b2 + b1 * a2 - b1 * b2;
}

inline ExpansionReport chsh_square_expansion(const MeasurementSettings& s) {
  detail::require_n(s, 2, "chsh_square_expansion");
  ExpansionReport r{PauliOperator::identity(2, 4.0) - commutator_on(s, 1) * commutator_on(s, 2),
                    {{2, 1}}};
  r.residual = max_deviation(r.expansion, square(chsh_operator(s)));
  return r;
}

/// s1' s2 s3 + s1 s2' s3 + s1 s2 s3' - s1' s2' s3'.
inline PauliOperator three_particle_operator(const MeasurementSettings& s) {
  detail::require_n(s, 3, "three_particle_operator");
  std::vector<PauliOperator> a, b;
  for (std::size_t j = 1; j <= 3; ++j) {
    a.push_back(spin_on(s[j - 1].a, j, 3));
    b.push_back(spin_on(s[j - 1].b, j, 3));
  }
  return b[0] * a[1] * a[2] + a[0] * b[1] * a[2] + a[0] * a[1] * b[2] - b[0] * b[1] * b[2];
}

inline ExpansionReport three_particle_square_expansion(const MeasurementSettings& s) {
  detail::require_n(s, 3, "three_particle_square_expansion");
  const auto c1 = commutator_on(s, 1), c2 = commutator_on(s, 2), c3 = commutator_on(s, 3);
  ExpansionReport r{PauliOperator::identity(3, 4.0) - c1 * c2 - c2 * c3 - c1 * c3, {{2, 3}}};
  r.residual = max_deviation(r.expansion, square(three_particle_operator(s)));
  return r;
}

/// (1/2i) (prod_j (s_j + i s_j') - prod_j (s_j - i s_j')).
inline PauliOperator mermin_operator(const MeasurementSettings& s) {
  const std::size_t n = s.n();
  const Complex i{0.0, 1.0};
  PauliOperator plus = PauliOperator::identity(n);
  PauliOperator minus = PauliOperator::identity(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const auto a = spin_on(s[j - 1].a, j, n);
    const auto b = spin_on(s[j - 1].b, j, n);
    plus = plus * (a + i * b);
    minus = minus * (a - i * b);
  }
  return scale(plus - minus, 1.0 / (2.0 * i));
}

inline PauliOperator canonical_mermin(std::size_t n) {
  if (n < 2) throw DimensionError("canonical_mermin: n must be at least 2");
  return mermin_operator(MeasurementSettings::canonical(n));
}

/// Alternating commutator expansion of B_M^2:
///   2^{n-1} I + sum_k (-1)^k 2^{n-2k-1} sum_{|S|=2k} prod_{j in S} [n_j, n_j']
/// with 2k <= n-1 (n odd) or 2k <= n-2 (n even); even n adds
///   (-1)^{n/2} (1/2) (prod_j [n_j, n_j'] - prod_j {n_j, n_j'}).
/// Subsets are enumerated directly.
inline ExpansionReport mermin_square_expansion(const MeasurementSettings& s,
                                               FactorOrder order = FactorOrder::ascending) {
  const std::size_t n = s.n();
  if (n < 3) throw ContractError("mermin_square_expansion: n must be at least 3");
  if (n > 20) throw ResourceError("mermin_square_expansion: subset enumeration limited to n <= 20");

  std::vector<PauliOperator> comm, anti;
  for (std::size_t j = 1; j <= n; ++j) {
    comm.push_back(commutator_on(s, j));
    anti.push_back(anticommutator_on(s, j));
  }

  ExpansionReport r{PauliOperator::identity(n, pow2(static_cast<int>(n) - 1)), {}};
  const std::size_t max_order = (n % 2 == 1) ? n - 1 : n - 2;
  for (std::size_t order2k = 2; order2k <= max_order; order2k += 2) {
    const std::size_t k = order2k / 2;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double coeff = sign * pow2(static_cast<int>(n) - static_cast<int>(order2k) - 1);
    detail::TermAccumulator group(n);
    std::size_t count = 0;
    for (std::uint32_t members = 0; members < (std::uint32_t{1} << n); ++members) {
      if (static_cast<std::size_t>(std::popcount(members)) != order2k) continue;
      const PauliOperator product = detail::product_over(comm, members, n, order);
      for (const auto& [str, c] : product.terms()) group.add(str, coeff * c);
      ++count;
    }
    r.group_term_counts[order2k] = count;
    r.expansion = r.expansion + std::move(group).finish();
  }
  if (n % 2 == 0) {
    const std::uint32_t all = (std::uint32_t{1} << n) - 1;
    const double sign = ((n / 2) % 2 == 0) ? 1.0 : -1.0;
    const auto last = detail::product_over(comm, all, n, order) - detail::product_over(anti, all, n, order);
    r.expansion = r.expansion + scale(last, 0.5 * sign);
    r.final_commutator_products = 1;
    r.final_anticommutator_products = 1;
  }
  r.residual = max_deviation(r.expansion, square(mermin_operator(s)));
  return r;
}

// ---------------------------------------------------------------------------
// Planar settings: B^2 is diagonal in the computational basis.

inline constexpr std::size_t kPlanarDiagonalLimit = 24;

/// Entry of B^2 on basis state `index` (bit n-j clear = particle j up, z_j = +1):
///   2^{n-1} [ (prod(1 + s_j z_j) + prod(1 - s_j z_j)) / 2 - [n even] (-1)^{n/2} prod cos theta_j ]
/// with s_j = sin theta_j.
inline double planar_diagonal_entry(const PlanarSettings& p, std::uint64_t index) {
  const std::size_t n = p.n();
  double plus = 1.0, minus = 1.0, cosines = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double th = p[j].theta();
    const double z = ((index >> (n - 1 - j)) & 1) ? -1.0 : 1.0;
    const double sz = std::sin(th) * z;
    plus *= 1.0 + sz;
    minus *= 1.0 - sz;
    cosines *= std::cos(th);
  }
  double e = 0.5 * (plus + minus);
  if (n % 2 == 0) e -= (((n / 2) % 2 == 0) ? 1.0 : -1.0) * cosines;
  return pow2(static_cast<int>(n) - 1) * e;
}

/// All 2^n diagonal entries of B^2, indexed by basis state.
inline std::vector<double> planar_square_diagonal(const PlanarSettings& p) {
  if (p.n() > kPlanarDiagonalLimit) {
    throw ResourceError("planar_square_diagonal: n exceeds " + std::to_string(kPlanarDiagonalLimit));
  }
  std::vector<double> d(std::size_t{1} << p.n());
  for (std::uint64_t i = 0; i < d.size(); ++i) d[i] = planar_diagonal_entry(p, i);
  return d;
}

/// Largest diagonal entry of B^2. Every even-order term is maximized at once
/// by z_j = sign(sin theta_j), so no enumeration is needed.
inline double planar_spectral_max(const PlanarSettings& p) {
  const std::size_t n = p.n();
  std::uint64_t index = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (std::sin(p[j].theta()) < 0) index |= std::uint64_t{1} << (n - 1 - j);
  }
  return planar_diagonal_entry(p, index);
}

// ---------------------------------------------------------------------------
// Degenerate settings and the reduction law

struct ReductionSpec {
  std::size_t m = 0;
  std::vector<std::size_t> degenerate_indices;  // 1-based
  std::vector<int> signs;                       // n_j' = sign * n_j
  std::optional<std::size_t> perpendicular_survivor;

  /// Last m particles degenerate with alternating signs (+, -, +, ...);
  /// odd m makes particle 1 the perpendicular survivor.
  static ReductionSpec standard(std::size_t n, std::size_t m) {
    ReductionSpec r;
    r.m = m;
    for (std::size_t k = 0; k < m; ++k) {
      r.degenerate_indices.push_back(n - m + 1 + k);
      r.signs.push_back(k % 2 == 0 ? 1 : -1);
    }
    if (m % 2 == 1) r.perpendicular_survivor = 1;
    return r;
  }

  /// Particles not listed as degenerate, ascending.
  std::vector<std::size_t> survivors(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 1; j <= n; ++j) {
      if (std::find(degenerate_indices.begin(), degenerate_indices.end(), j) == degenerate_indices.end()) {
        out.push_back(j);
      }
    }
    return out;
  }

  void validate(std::size_t n) const {
    if (n < 3 || m + 3 > n) {
      throw ContractError("ReductionSpec: need 0 <= m <= n-3 (n=" + std::to_string(n) +
                          ", m=" + std::to_string(m) + ")");
    }
    if (degenerate_indices.size() != m || signs.size() != m) {
      throw ContractError("ReductionSpec: index and sign lists must have m entries");
    }
    std::vector<bool> seen(n + 1, false);
    for (std::size_t j : degenerate_indices) {
      if (j < 1 || j > n) throw ContractError("ReductionSpec: particle index out of range");
      if (seen[j]) throw ContractError("ReductionSpec: repeated particle index");
      seen[j] = true;
    }
    long balance = 0;
    for (int s : signs) {
      if (s != 1 && s != -1) throw ContractError("ReductionSpec: signs must be +1 or -1");
      balance += s;
    }
    if (m % 2 == 0 && balance != 0) {
      throw ContractError("ReductionSpec: even m needs equal numbers of + and - signs");
    }
    if (m % 2 == 1) {
      if (std::abs(balance) != 1) {
        throw ContractError("ReductionSpec: odd m needs m-1 sign-paired indices");
      }
      if (!perpendicular_survivor) {
        throw ContractError("ReductionSpec: odd m requires a perpendicular survivor");
      }
    }
    if (perpendicular_survivor) {
      const std::size_t p = *perpendicular_survivor;
      if (p < 1 || p > n) throw ContractError("ReductionSpec: survivor index out of range");
      if (seen[p]) throw ContractError("ReductionSpec: survivor must not be degenerate");
    }
  }
};

namespace detail {

inline void force_degenerate(std::vector<SettingPair>& pairs, const ReductionSpec& spec) {
  for (std::size_t k = 0; k < spec.m; ++k) {
    auto& p = pairs[spec.degenerate_indices[k] - 1];
    p.b = spec.signs[k] > 0 ? p.a : -p.a;
  }
}

}  // namespace detail

/// Forces n_j' = sign * n_j on every degenerate particle (vanishing commutator,
/// anticommutator sign * 2I) and rotates the survivor's primed direction to be
/// perpendicular (vanishing anticommutator).
inline MeasurementSettings degenerate_settings(const MeasurementSettings& base, const ReductionSpec& spec) {
  spec.validate(base.n());
  std::vector<SettingPair> pairs = base.pairs();
  detail::force_degenerate(pairs, spec);
  if (spec.perpendicular_survivor) {
    auto& p = pairs[*spec.perpendicular_survivor - 1];
    const double d = dot(p.a, p.b);
    const auto& a = p.a.components();
    const auto& b = p.b.components();
    std::array<double, 3> w{b[0] - d * a[0], b[1] - d * a[1], b[2] - d * a[2]};
    if (std::hypot(w[0], w[1], w[2]) < 1e-8) {
      // b parallel to a: use any direction perpendicular to a.
      const std::array<double, 3> e =
          std::abs(a[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
      const double de = e[0] * a[0] + e[1] * a[1] + e[2] * a[2];
      w = {e[0] - de * a[0], e[1] - de * a[1], e[2] - de * a[2]};
    }
    p.b = UnitVector3::normalized(w[0], w[1], w[2]);
  }
  return MeasurementSettings(std::move(pairs));
}

/// Planar variant: the survivor gets phi' = phi + pi/2 exactly.
inline MeasurementSettings degenerate_settings(const PlanarSettings& base, const ReductionSpec& spec) {
  spec.validate(base.n());
  std::vector<PlanarAngles> angles = base.angles();
  if (spec.perpendicular_survivor) {
    auto& a = angles[*spec.perpendicular_survivor - 1];
    a.phi_prime = a.phi + std::numbers::pi / 2;
  }
  std::vector<SettingPair> pairs = PlanarSettings(std::move(angles)).to_measurement().pairs();
  detail::force_degenerate(pairs, spec);
  return MeasurementSettings(std::move(pairs));
}

struct ReductionReport {
  std::size_t n = 0;
  std::size_t m = 0;
  double factor = 1.0;     // 2^m
  double residual = 0.0;   // max coefficient deviation of B^2(n|m) - 2^m B^2(n-m) (x) I
  double mu_max_full = 0.0;     // largest eigenvalue of B^2(n|m)
  double mu_max_reduced = 0.0;  // largest eigenvalue of B^2(n-m)
  /// mu_max_full / (2^m mu_max_reduced); 1 when the law holds.
  double eigenvalue_law_ratio = 0.0;
  /// sqrt(mu_max_full / mu_max_reduced) = 2^{m/2}.
  double max_eigenvalue_ratio = 0.0;
  double observed_max_eigenvalue = 0.0;   // sqrt(mu_max_full)
  double perpendicular_max_eigenvalue = 0.0;  // 2^{-m/2} 2^{n-1}
  bool eigen_computed = false;
  std::vector<std::size_t> survivors;
};

/// Verifies B^2(n|m) = 2^m B^2(n-m) (x) I as an operator identity, with the
/// surviving particles kept in their original positions.
inline ReductionReport reduction_check(const MeasurementSettings& degenerate, const ReductionSpec& spec,
                                       std::size_t dense_limit = kDefaultDenseLimit) {
  spec.validate(degenerate.n());
  const std::size_t n = degenerate.n();
  ReductionReport r;
  r.n = n;
  r.m = spec.m;
  r.factor = pow2(static_cast<int>(spec.m));
  r.survivors = spec.survivors(n);

  const PauliOperator full = square(mermin_operator(degenerate));
  const PauliOperator reduced = square(mermin_operator(degenerate.subset(r.survivors)));
  const PauliOperator lifted = scale(embed_on(reduced, r.survivors, n), r.factor);
  r.residual = max_deviation(full, lifted);

  r.perpendicular_max_eigenvalue = pow2(static_cast<int>(n) - 1) / std::sqrt(r.factor);
  if (n <= dense_limit) {
    r.mu_max_full = jacobi_eigen(to_dense(full, dense_limit)).values.back();
    r.mu_max_reduced = jacobi_eigen(to_dense(reduced, dense_limit)).values.back();
    r.eigenvalue_law_ratio = r.mu_max_full / (r.factor * r.mu_max_reduced);
    r.max_eigenvalue_ratio = std::sqrt(r.mu_max_full / r.mu_max_reduced);
    r.observed_max_eigenvalue = std::sqrt(std::max(0.0, r.mu_max_full));
    r.eigen_computed = true;
  }
  return r;
}

inline ReductionReport reduction_check(const PlanarSettings& base, const ReductionSpec& spec,
                                       std::size_t dense_limit = kDefaultDenseLimit) {
  return reduction_check(degenerate_settings(base, spec), spec, dense_limit);
}

}  // namespace mermin
