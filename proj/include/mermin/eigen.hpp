#pragma once

// Cyclic Jacobi diagonalization of dense Hermitian matrices.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mermin/error.hpp"
#include "mermin/pauli.hpp"

namespace mermin {

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  DenseOperator vectors;       // column k is the eigenvector of values[k]
  std::size_t sweeps = 0;
};

namespace detail {

inline double off_diagonal_norm(const DenseOperator& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

inline double frobenius_norm(const DenseOperator& a) {
  double s = 0.0;
  for (const Complex& v : a.data()) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace detail

/// Diagonalizes a Hermitian matrix until the off-diagonal Frobenius norm falls
/// below `tol * max(1, ||A||_F)`.
///
/// Each rotation first removes the phase of a_pq and then applies the real
/// symmetric Schur rotation, so J = diag(1, e^{-i alpha}) * [[c, s], [-s, c]].
inline EigenDecomposition jacobi_eigen(DenseOperator a, double tol = 1e-12,
                                       std::size_t max_sweeps = 100) {
  if (!a.is_hermitian(1e-9 * std::max(1.0, detail::frobenius_norm(a)))) {
    throw ContractError("jacobi_eigen: matrix is not Hermitian");
  }
  const std::size_t d = a.dim();
  DenseOperator v = DenseOperator::identity(a.n());
  const double target = tol * std::max(1.0, detail::frobenius_norm(a));

  std::size_t sweep = 0;
  for (; sweep < max_sweeps && detail::off_diagonal_norm(a) > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag < 1e-300) continue;
        const Complex phase = apq / mag;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // J columns: (c, -s e^{-i alpha}) and (s, c e^{-i alpha}).
        const Complex jpp = c;
        const Complex jqp = -s * std::conj(phase);
        const Complex jpq = s;
        const Complex jqq = c * std::conj(phase);

        for (std::size_t k = 0; k < d; ++k) {  // A <- A J
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * jpp + akq * jqp;
          a(k, q) = akp * jpq + akq * jqq;
        }
        for (std::size_t k = 0; k < d; ++k) {  // A <- J^H A
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < d; ++k) {  // V <- V J
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * jpp + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }
  if (detail::off_diagonal_norm(a) > target) {
    throw ContractError("jacobi_eigen: no convergence within sweep limit");
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return a(l, l).real() < a(r, r).real(); });

  EigenDecomposition out{std::vector<double>(d), DenseOperator(a.n()), sweep};
  for (std::size_t k = 0; k < d; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < d; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

}  // namespace mermin
