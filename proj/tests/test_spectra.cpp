#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mermin/bell.hpp"
#include "mermin/eigen.hpp"
#include "mermin/random.hpp"
#include "mermin/spectra.hpp"
#include "oracle.hpp"

using namespace mermin;

namespace {

DenseOperator random_hermitian(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseOperator h(n);
  for (std::size_t i = 0; i < h.dim(); ++i) {
    h(i, i) = g(rng);
    for (std::size_t j = i + 1; j < h.dim(); ++j) {
      h(i, j) = Complex{g(rng), g(rng)};
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

// <psi|M|psi> on the Kronecker-built matrix.
double dense_expectation(const StateVector& psi, const PauliOperator& op) {
  const auto m = oracle::dense(op);
  Complex s{};
  for (std::size_t i = 0; i < psi.dim(); ++i)
    for (std::size_t j = 0; j < psi.dim(); ++j) s += std::conj(psi[i]) * m[i][j] * psi[j];
  return s.real();
}

// Mermin value of a deterministic assignment, summed string by string: each
// choice of primed particles with k primes carries sin(k pi / 2).
long long mermin_value_by_terms(const std::vector<LhvAssignment>& w) {
  const std::size_t n = w.size();
  long long total = 0;
  for (std::uint64_t primed = 0; primed < (std::uint64_t{1} << n); ++primed) {
    const int k = std::popcount(primed);
    if (k % 2 == 0) continue;
    long long term = ((k - 1) / 2) % 2 == 0 ? 1 : -1;
    for (std::size_t j = 0; j < n; ++j) term *= (primed >> j) & 1 ? w[j].a_prime : w[j].a;
    total += term;
  }
  return total;
}

}  // namespace

// --- eigensolver ----------------------------------------------------------------

TEST(Jacobi, RandomHermitianEigenpairs) {
  Rng rng(100);
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto h = random_hermitian(n, rng);
    const auto e = jacobi_eigen(h);
    ASSERT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
    double trace = 0.0, trace2 = 0.0, sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < h.dim(); ++i) {
      trace += h(i, i).real();
      for (std::size_t j = 0; j < h.dim(); ++j) trace2 += std::norm(h(i, j));
    }
    for (double v : e.values) {
      sum += v;
      sum2 += v * v;
    }
    EXPECT_NEAR(trace, sum, 1e-10);
    EXPECT_NEAR(trace2, sum2, 1e-9 * trace2);
    for (std::size_t k = 0; k < h.dim(); ++k) {
      double res = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < h.dim(); ++i) {
        Complex hv{};
        for (std::size_t j = 0; j < h.dim(); ++j) hv += h(i, j) * e.vectors(j, k);
        res += std::norm(hv - e.values[k] * e.vectors(i, k));
        norm += std::norm(e.vectors(i, k));
      }
      EXPECT_LT(std::sqrt(res), 1e-9);
      EXPECT_NEAR(norm, 1.0, 1e-10);
    }
  }
}

TEST(Jacobi, RejectsNonHermitian) {
  DenseOperator m(1);
  m(0, 1) = 1.0;
  EXPECT_THROW(jacobi_eigen(m), ContractError);
}

TEST(Spectrum, SingleZ) {
  const auto r = eigen_hermitian(to_dense(PauliOperator::from_terms({{"Z", 1}})));
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0], -1.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-12);
}

TEST(Spectrum, CanonicalThreeParticle) {
  const auto r = eigen_hermitian(to_dense(canonical_mermin(3)));
  ASSERT_EQ(r.multiplicities.size(), 3u);
  EXPECT_NEAR(r.multiplicities[0].value, -4.0, 1e-9);
  EXPECT_EQ(r.multiplicities[0].count, 1u);
  EXPECT_NEAR(r.multiplicities[1].value, 0.0, 1e-9);
  EXPECT_EQ(r.multiplicities[1].count, 6u);
  EXPECT_NEAR(r.multiplicities[2].value, 4.0, 1e-9);
  EXPECT_EQ(r.multiplicities[2].count, 1u);
  EXPECT_EQ(multiplicity_of(r, 0.0), 6u);
}

TEST(Spectrum, ChshCanonical) {
  const double h = 1 / std::sqrt(2.0);
  const MeasurementSettings s({{UnitVector3::x_axis(), UnitVector3::y_axis()},
                               {UnitVector3::make(h, h, 0), UnitVector3::make(h, -h, 0)}});
  EXPECT_NEAR(eigen_hermitian(to_dense(chsh_operator(s))).max_abs, 2 * std::sqrt(2.0), 1e-9);
}

TEST(Spectrum, SymmetricAndSquareConsistent) {
  // The planar spectrum is symmetric about zero and mu_max(B^2) = max |lambda(B)|^2.
  Rng rng(101);
  for (std::size_t n = 3; n <= 6; ++n) {
    const auto p = random_planar(n, rng);
    const auto b = to_dense(mermin_operator(p.to_measurement()));
    const auto spec = eigen_hermitian(b);
    const auto& v = spec.eigenvalues;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], -v[v.size() - 1 - i], 1e-9);
    const auto sq = eigen_hermitian(b * b);
    EXPECT_GE(sq.eigenvalues.front(), -1e-9);
    EXPECT_NEAR(sq.eigenvalues.back(), spec.max_abs * spec.max_abs, 1e-8 * sq.eigenvalues.back());
  }
}

TEST(Spectrum, MaxNeverExceedsQuantumBound) {
  Rng rng(102);
  for (std::size_t n = 3; n <= 6; ++n) {
    for (int t = 0; t < 5; ++t) {
      EXPECT_LE(eigen_hermitian(to_dense(mermin_operator(random_settings(n, rng)))).max_abs,
                pow2(static_cast<int>(n) - 1) + 1e-9);
    }
  }
}

// --- states and expectations ------------------------------------------------------

TEST(Ghz, AmplitudesAndNorm) {
  const auto g = ghz_state({3, -1, std::numbers::pi / 2});
  EXPECT_NEAR(std::abs(g[0] - 1 / std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g[7] - Complex{0, -1 / std::sqrt(2.0)}), 0.0, 1e-15);
  for (std::size_t i = 1; i < 7; ++i) EXPECT_EQ(g[i], Complex{});
  EXPECT_NEAR(std::abs(inner(g, g)), 1.0, 1e-15);
  EXPECT_THROW(ghz_state({3, 2, 0.0}), ContractError);
  EXPECT_THROW(StateVector(2, {1.0, 1.0, 0.0, 0.0}), ValidationError);
}

TEST(Expectation, CanonicalGhzReachesQuantumMax) {
  for (std::size_t n = 3; n <= 10; ++n) {
    const auto psi = ghz_state({n, 1, std::numbers::pi / 2});
    EXPECT_NEAR(expectation(psi, canonical_mermin(n)), pow2(static_cast<int>(n) - 1), 1e-9) << n;
  }
}

TEST(Expectation, AllUpGivesZero) {
  for (std::size_t n = 3; n <= 6; ++n) EXPECT_NEAR(expectation(StateVector::basis(n, 0), canonical_mermin(n)), 0.0, 1e-12);
}

TEST(Expectation, MatchesDenseOracle) {
  Rng rng(103);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<Complex> a(std::size_t{1} << n);
    double norm = 0.0;
    for (auto& x : a) {
      x = {g(rng), g(rng)};
      norm += std::norm(x);
    }
    for (auto& x : a) x /= std::sqrt(norm);
    const StateVector psi(n, a);
    const auto op = mermin_operator(random_settings(n, rng));
    EXPECT_NEAR(expectation(psi, op), dense_expectation(psi, op), 1e-12);
  }
}

TEST(Expectation, ChshOptimalEigenvector) {
  const double h = 1 / std::sqrt(2.0);
  const MeasurementSettings s({{UnitVector3::x_axis(), UnitVector3::y_axis()},
                               {UnitVector3::make(h, h, 0), UnitVector3::make(h, -h, 0)}});
  const auto op = chsh_operator(s);
  const auto e = jacobi_eigen(to_dense(op));
  std::vector<Complex> top(4);
  for (std::size_t i = 0; i < 4; ++i) top[i] = e.vectors(i, 3);
  EXPECT_NEAR(expectation(StateVector(2, top), op), 2 * std::sqrt(2.0), 1e-9);
}

TEST(Expectation, RejectsNonHermitian) {
  const auto op = PauliOperator::from_terms({{"ZZ", Complex{0, 1}}});
  EXPECT_THROW(expectation(StateVector::basis(2, 0), op), ContractError);
}

// --- maximal eigenvectors and degeneracy ----------------------------------------------

TEST(MaximalEigenvector, PerpendicularSettings) {
  Rng rng(104);
  for (std::size_t n = 3; n <= 8; ++n) {
    const auto p = random_perpendicular_planar(n, rng);
    EXPECT_LT(maximal_eigenvector_check(p, 1), 1e-9) << n;
    EXPECT_LT(maximal_eigenvector_check(p, -1), 1e-9) << n;
  }
}

TEST(MaximalEigenvector, NeedsPerpendicularPairs) {
  EXPECT_THROW(maximal_eigenvector_check(PlanarSettings::uniform_theta(4, 1.0), 1), ContractError);
}

TEST(MaximalEigenvector, PerpendicularSpectrum) {
  // Only the two GHZ states survive: +-2^{n-1} once each, zero elsewhere.
  Rng rng(105);
  for (std::size_t n = 3; n <= 6; ++n) {
    const auto r = eigen_hermitian(to_dense(mermin_operator(random_perpendicular_planar(n, rng).to_measurement())));
    const double top = pow2(static_cast<int>(n) - 1);
    EXPECT_EQ(multiplicity_of(r, top), 1u);
    EXPECT_EQ(multiplicity_of(r, -top), 1u);
    EXPECT_EQ(multiplicity_of(r, 0.0), r.eigenvalues.size() - 2);
  }
}

TEST(Degeneracy, GlobalFlipPairsDiagonal) {
  Rng rng(106);
  for (std::size_t n = 3; n <= 6; ++n)
    for (int t = 0; t < 20; ++t) EXPECT_TRUE(degeneracy_pairing(random_planar(n, rng)));
}

TEST(Degeneracy, DenseSpectrumHasEvenMultiplicities) {
  Rng rng(107);
  for (std::size_t n = 3; n <= 5; ++n) {
    const auto b = to_dense(mermin_operator(random_planar(n, rng).to_measurement()));
    for (const auto& c : eigen_hermitian(b * b).multiplicities) EXPECT_EQ(c.count % 2, 0u) << n;
  }
}

// --- local hidden variables ---------------------------------------------------------------

TEST(Lhv, ValueMatchesTermByTermSum) {
  std::mt19937_64 rng(108);
  for (std::size_t n = 2; n <= 7; ++n) {
    std::uniform_int_distribution<std::uint64_t> code(0, (std::uint64_t{1} << (2 * n)) - 1);
    for (int t = 0; t < 50; ++t) {
      const auto w = decode_assignment(code(rng), n);
      EXPECT_EQ(lhv_value(BellFamily::mermin, w), mermin_value_by_terms(w));
    }
  }
}

TEST(Lhv, MaximaForSmallN) {
  const long long expected[] = {2, 2, 4, 4, 8, 8, 16};
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto r = lhv_max(n);
    EXPECT_EQ(r.max_value, expected[n - 2]) << n;
    EXPECT_EQ(r.max_value, classical_bound(n));
    EXPECT_EQ(std::abs(mermin_value_by_terms(r.witness)), r.max_value);
    EXPECT_EQ(r.witness.size(), n);
  }
}

TEST(Lhv, ExhaustiveCheckOfWitnessMinimality) {
  // The witness is the smallest encoding attaining the maximum.
  const std::size_t n = 4;
  const auto r = lhv_max(n);
  for (std::uint64_t c = 0; c < r.encoding; ++c)
    EXPECT_LT(std::abs(mermin_value_by_terms(decode_assignment(c, n))), r.max_value);
}

TEST(Lhv, Chsh) {
  EXPECT_EQ(lhv_max(2, BellFamily::chsh).max_value, 2);
  EXPECT_THROW(lhv_max(3, BellFamily::chsh), ContractError);
}

TEST(Lhv, Limits) {
  EXPECT_THROW(lhv_max(1), ContractError);
  EXPECT_THROW(lhv_max(13), ResourceError);
  EXPECT_THROW(lhv_max(6, BellFamily::mermin, 5), ResourceError);
}

TEST(ViolationTable, Rows) {
  const auto rows = violation_table(8);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.quantum_max, 1LL << (r.n - 1));
    EXPECT_EQ(r.ratio, r.n % 2 ? 1LL << ((r.n - 1) / 2) : 1LL << ((r.n - 2) / 2));
    ASSERT_TRUE(r.lhv_enumerated.has_value());
    EXPECT_EQ(*r.lhv_enumerated, r.lhv_bound);
  }
  EXPECT_EQ(rows[0].ratio, 2);
  EXPECT_EQ(rows[1].ratio, 2);
  EXPECT_EQ(rows[2].ratio, 4);
  EXPECT_THROW(violation_table(2), ContractError);
  EXPECT_FALSE(violation_table(14, 8).back().lhv_enumerated.has_value());
}

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5 + 4 * std::numbers::pi), 0.5, 1e-12);
}
