#pragma once

// Eigen-analysis, GHZ states and expectation values, degeneracy checks and the
// brute-force local-hidden-variable bound.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <future>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mermin/bell.hpp"
#include "mermin/eigen.hpp"
#include "mermin/error.hpp"
#include "mermin/pauli.hpp"

namespace mermin {

inline constexpr double kClusterGap = 1e-7;

class StateVector {
 public:
  static constexpr double kNormTolerance = 1e-12;

  StateVector(std::size_t n, std::vector<Complex> amplitudes) : n_(n), amps_(std::move(amplitudes)) {
    if (n == 0 || n > kMaxParticles) throw ValidationError("StateVector: bad particle count");
    if (amps_.size() != (std::size_t{1} << n)) {
      throw DimensionError("StateVector: expected 2^n amplitudes");
    }
    double norm2 = 0.0;
    for (const auto& a : amps_) norm2 += std::norm(a);
    if (std::abs(norm2 - 1.0) > kNormTolerance) {
      throw ValidationError("StateVector: amplitudes are not unit norm");
    }
  }

  static StateVector basis(std::size_t n, std::uint64_t index) {
    std::vector<Complex> a(std::size_t{1} << n);
    a.at(index) = 1.0;
    return StateVector(n, std::move(a));
  }

  std::size_t n() const { return n_; }
  std::size_t dim() const { return amps_.size(); }
  const std::vector<Complex>& amplitudes() const { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

 private:
  std::size_t n_;
  std::vector<Complex> amps_;
};

inline Complex inner(const StateVector& a, const StateVector& b) {
  if (a.n() != b.n()) throw DimensionError("inner: particle counts differ");
  Complex s{};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

struct GhzSpec {
  std::size_t n = 3;
  int sign = 1;
  double phase = 0.0;
};

/// (|up...up> + sign e^{i phase} |down...down>) / sqrt(2).
inline StateVector ghz_state(const GhzSpec& spec) {
  if (spec.n < 2) throw ContractError("ghz_state: n must be at least 2");
  if (spec.sign != 1 && spec.sign != -1) throw ContractError("ghz_state: sign must be +1 or -1");
  std::vector<Complex> a(std::size_t{1} << spec.n);
  a.front() = 1.0 / std::numbers::sqrt2;
  a.back() = static_cast<double>(spec.sign) * std::polar(1.0 / std::numbers::sqrt2, spec.phase);
  return StateVector(spec.n, std::move(a));
}

/// op |psi>, evaluated string by string; only the support of psi is visited.
inline std::vector<Complex> apply(const PauliOperator& op, const StateVector& psi) {
  if (op.n() != psi.n()) throw DimensionError("apply: particle counts differ");
  std::vector<std::uint64_t> support;
  for (std::uint64_t c = 0; c < psi.dim(); ++c)
    if (psi[c] != Complex{}) support.push_back(c);
  std::vector<Complex> out(psi.dim());
  for (const auto& [s, coeff] : op.terms()) {
    const Complex base = coeff * i_power(std::popcount(s.x_bits() & s.z_bits()));
    for (std::uint64_t c : support) {
      const bool odd = (std::popcount(s.z_bits() & c) & 1) != 0;
      out[c ^ s.x_bits()] += (odd ? -base : base) * psi[c];
    }
  }
  return out;
}

/// <psi| op |psi> for Hermitian op, summed over Pauli strings.
inline double expectation(const StateVector& psi, const PauliOperator& op) {
  if (op.n() != psi.n()) throw DimensionError("expectation: particle counts differ");
  if (!is_hermitian(op, 1e-10)) throw ContractError("expectation: operator is not Hermitian");
  std::vector<std::uint64_t> support;
  for (std::uint64_t c = 0; c < psi.dim(); ++c)
    if (psi[c] != Complex{}) support.push_back(c);
  Complex total{};
  for (const auto& [s, coeff] : op.terms()) {
    const Complex base = i_power(std::popcount(s.x_bits() & s.z_bits()));
    Complex term{};
    for (std::uint64_t c : support) {
      const Complex bra = psi[c ^ s.x_bits()];
      if (bra == Complex{}) continue;
      const bool odd = (std::popcount(s.z_bits() & c) & 1) != 0;
      term += std::conj(bra) * (odd ? -base : base) * psi[c];
    }
    total += coeff * term;
  }
  if (std::abs(total.imag()) > 1e-10) {
    throw ContractError("expectation: imaginary part " + std::to_string(total.imag()));
  }
  return total.real();
}

// ---------------------------------------------------------------------------
// Spectra

struct EigenCluster {
  double value = 0.0;  // mean of the clustered eigenvalues
  std::size_t count = 0;
};

struct SpectralReport {
  std::vector<double> eigenvalues;  // ascending
  std::vector<EigenCluster> multiplicities;
  double max_abs = 0.0;
};

/// Groups sorted eigenvalues whose neighbours lie within `gap`.
inline std::vector<EigenCluster> cluster_eigenvalues(const std::vector<double>& sorted, double gap = kClusterGap) {
  std::vector<EigenCluster> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (out.empty() || sorted[i] - sorted[i - 1] > gap) {
      out.push_back({sorted[i], 1});
    } else {
      auto& c = out.back();
      c.count += 1;
      c.value += (sorted[i] - c.value) / static_cast<double>(c.count);
    }
  }
  return out;
}

inline SpectralReport eigen_hermitian(const DenseOperator& op, double tol = 1e-12) {
  if (!op.is_hermitian(std::max(tol, 1e-12))) throw ContractError("eigen_hermitian: operator is not Hermitian");
  SpectralReport r;
  r.eigenvalues = jacobi_eigen(op, tol).values;
  r.multiplicities = cluster_eigenvalues(r.eigenvalues);
  for (double v : r.eigenvalues) r.max_abs = std::max(r.max_abs, std::abs(v));
  return r;
}

/// Count of eigenvalues within kClusterGap of `value`.
inline std::size_t multiplicity_of(const SpectralReport& r, double value) {
  return static_cast<std::size_t>(std::count_if(r.eigenvalues.begin(), r.eigenvalues.end(),
                                                [&](double v) { return std::abs(v - value) <= kClusterGap; }));
}

// ---------------------------------------------------------------------------
// Maximal eigenvectors and degeneracy

inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

/// || B |Phi> - sign 2^{n-1} |Phi> || for the GHZ state with phase
/// phi = phi_1 + ... + phi_n + pi/2. Requires phi_j' = phi_j + pi/2.
inline double maximal_eigenvector_check(const PlanarSettings& planar, int sign) {
  for (const auto& a : planar.angles()) {
    if (std::abs(wrap_angle(a.theta() - std::numbers::pi / 2)) > 1e-9) {
      throw ContractError("maximal_eigenvector_check: needs phi_j' = phi_j + pi/2");
    }
  }
  if (planar.n() < 2) throw ContractError("maximal_eigenvector_check: n must be at least 2");
  double phase = std::numbers::pi / 2;
  for (const auto& a : planar.angles()) phase += a.phi;
  const StateVector phi = ghz_state({planar.n(), sign, phase});
  const auto b_phi = apply(mermin_operator(planar.to_measurement()), phi);
  const double lambda = sign * pow2(static_cast<int>(planar.n()) - 1);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < phi.dim(); ++i) norm2 += std::norm(b_phi[i] - lambda * phi[i]);
  return std::sqrt(norm2);
}

/// True iff every diagonal entry of B^2 equals the entry of the globally
/// spin-flipped basis state.
inline bool degeneracy_pairing(const PlanarSettings& planar, double tol = 1e-10) {
  const std::size_t n = planar.n();
  if (n > kPlanarDiagonalLimit) throw ResourceError("degeneracy_pairing: n too large");
  const std::uint64_t all = PauliString::full_mask(n);
  for (std::uint64_t i = 0; i <= all; ++i) {
    const std::uint64_t flipped = i ^ all;
    if (flipped < i) continue;
    const double a = planar_diagonal_entry(planar, i);
    const double b = planar_diagonal_entry(planar, flipped);
    if (std::abs(a - b) > tol * std::max(1.0, std::abs(a))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Local hidden variables

enum class BellFamily { mermin, chsh };

inline constexpr std::size_t kLhvEnumerationLimit = 12;

struct LhvAssignment {
  int a = 1;        // outcome for n_j
  int a_prime = 1;  // outcome for n_j'
};

struct LhvResult {
  long long max_value = 0;  // maximum |value| over deterministic assignments
  std::uint64_t encoding = 0;
  std::vector<LhvAssignment> witness;
};

/// Bit 2j holds a_j and bit 2j+1 holds a_j' (particle j+1); a set bit means -1.
inline std::vector<LhvAssignment> decode_assignment(std::uint64_t code, std::size_t n) {
  std::vector<LhvAssignment> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    w[j].a = (code >> (2 * j)) & 1 ? -1 : 1;
    w[j].a_prime = (code >> (2 * j + 1)) & 1 ? -1 : 1;
  }
  return w;
}

/// Mermin: Im prod_j (a_j + i a_j'). CHSH: a1 a2 + a1 a2' + a1' a2 - a1' a2'.
inline long long lhv_value(BellFamily family, const std::vector<LhvAssignment>& w) {
  if (family == BellFamily::chsh) {
    if (w.size() != 2) throw ContractError("lhv_value: CHSH needs 2 particles");
    return w[0].a * w[1].a + w[0].a * w[1].a_prime + w[0].a_prime * w[1].a -
           w[0].a_prime * w[1].a_prime;
  }
  long long re = 1, im = 0;
  for (const auto& x : w) {
    const long long r = re * x.a - im * x.a_prime;
    const long long i = re * x.a_prime + im * x.a;
    re = r;
    im = i;
  }
  return im;
}

namespace detail {

struct LhvBest {
  long long value = -1;
  std::uint64_t code = 0;
};

inline LhvBest lhv_scan(BellFamily family, std::size_t n, std::uint64_t begin, std::uint64_t end) {
  LhvBest best;
  for (std::uint64_t code = begin; code < end; ++code) {
    long long v;
    if (family == BellFamily::chsh) {
      v = lhv_value(family, decode_assignment(code, n));
    } else {
      long long re = 1, im = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const long long a = (code >> (2 * j)) & 1 ? -1 : 1;
        const long long ap = (code >> (2 * j + 1)) & 1 ? -1 : 1;
        const long long r = re * a - im * ap;
        im = re * ap + im * a;
        re = r;
      }
      v = im;
    }
    v = v < 0 ? -v : v;
    if (v > best.value) best = {v, code};  // strict: earliest code wins ties
  }
  return best;
}

}  // namespace detail

/// Exhaustive maximum of |value| over the 2^{2n} deterministic assignments.
/// The range is split into contiguous chunks; the reduction prefers the larger
/// value and then the smaller encoding.
inline LhvResult lhv_max(std::size_t n, BellFamily family = BellFamily::mermin,
                         std::size_t enumeration_limit = kLhvEnumerationLimit) {
  if (n < 2) throw ContractError("lhv_max: n must be at least 2");
  if (family == BellFamily::chsh && n != 2) throw ContractError("lhv_max: CHSH family needs n = 2");
  if (n > enumeration_limit) {
    throw ResourceError("lhv_max: n = " + std::to_string(n) + " exceeds enumeration limit " +
                        std::to_string(enumeration_limit));
  }
  const std::uint64_t total = std::uint64_t{1} << (2 * n);
  const std::size_t workers =
      total < (1u << 16) ? 1 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::uint64_t chunk = (total + workers - 1) / workers;

  std::vector<std::future<detail::LhvBest>> parts;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::uint64_t begin = std::min(total, w * chunk);
    const std::uint64_t end = std::min(total, begin + chunk);
    parts.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async,
                               detail::lhv_scan, family, n, begin, end));
  }
  detail::LhvBest best;
  for (auto& f : parts) {
    const auto b = f.get();
    if (b.value > best.value || (b.value == best.value && b.code < best.code)) best = b;
  }
  return {best.value, best.code, decode_assignment(best.code, n)};
}

/// 2^{n/2} for even n, 2^{(n-1)/2} for odd n.
inline long long classical_bound(std::size_t n) { return 1LL << (n / 2); }

inline long long quantum_max(std::size_t n) { return 1LL << (n - 1); }

struct ViolationRow {
  std::size_t n = 0;
  long long lhv_bound = 0;
  long long quantum_max = 0;
  long long ratio = 0;
  std::optional<long long> lhv_enumerated;  // set when n is within the enumeration limit
};

inline std::vector<ViolationRow> violation_table(std::size_t max_n,
                                                 std::size_t enumeration_limit = kLhvEnumerationLimit) {
  if (max_n < 3) throw ContractError("violation_table: max_n must be at least 3");
  if (max_n > 62) throw ResourceError("violation_table: max_n too large");
  std::vector<ViolationRow> rows;
  for (std::size_t n = 3; n <= max_n; ++n) {
    ViolationRow r{n, classical_bound(n), quantum_max(n), quantum_max(n) / classical_bound(n), {}};
    if (n <= enumeration_limit) {
      r.lhv_enumerated = lhv_max(n, BellFamily::mermin, enumeration_limit).max_value;
      if (*r.lhv_enumerated != r.lhv_bound) {
        throw std::logic_error("violation_table: enumerated bound disagrees at n = " + std::to_string(n));
      }
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace mermin
