#pragma once

// Exact algebra of n-qubit Pauli-string operators.
//
// A PauliString stores its letters as two bit masks (x, z) with
//   I = (0,0), X = (1,0), Y = (1,1), Z = (0,1).
// Particle 1 lives in the most significant bit (bit n-1), which is also the
// most significant bit of a dense basis index. |up> is bit 0, |down> bit 1.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mermin/error.hpp"

namespace mermin {

using Complex = std::complex<double>;

inline constexpr double kPruneThreshold = 1e-13;
inline constexpr std::size_t kMaxParticles = 32;

enum class Letter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char to_char(Letter l) {
  constexpr std::array<char, 4> chars{'I', 'X', 'Y', 'Z'};
  return chars[static_cast<std::size_t>(l)];
}

class PauliString {
 public:
  explicit PauliString(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxParticles) {
      throw ValidationError("PauliString: particle count must be in 1.." +
                            std::to_string(kMaxParticles));
    }
  }

  PauliString(std::size_t n, std::uint64_t x_bits, std::uint64_t z_bits)
      : PauliString(n) {
    const std::uint64_t mask = full_mask(n);
    if ((x_bits & ~mask) != 0 || (z_bits & ~mask) != 0) {
      throw ValidationError("PauliString: bits outside particle range");
    }
    x_ = x_bits;
    z_ = z_bits;
  }

  /// Parses a string such as "XIYZ" (particle 1 first).
  static PauliString parse(std::string_view letters) {
    PauliString s(letters.size());
    for (std::size_t i = 0; i < letters.size(); ++i) {
      switch (letters[i]) {
        case 'I': break;
        case 'X': s = s.with(i, Letter::X); break;
        case 'Y': s = s.with(i, Letter::Y); break;
        case 'Z': s = s.with(i, Letter::Z); break;
        default:
          throw ValidationError("PauliString: invalid letter '" +
                                std::string(1, letters[i]) + "'");
      }
    }
    return s;
  }

  static std::uint64_t full_mask(std::size_t n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  }

  std::size_t size() const { return n_; }
  std::uint64_t x_bits() const { return x_; }
  std::uint64_t z_bits() const { return z_; }
  bool is_identity() const { return (x_ | z_) == 0; }
  bool is_diagonal() const { return x_ == 0; }

  /// Letter on particle `i` (0-based; i = 0 is particle 1).
  Letter letter(std::size_t i) const {
    const std::uint64_t b = bit(i);
    const bool x = (x_ & b) != 0;
    const bool z = (z_ & b) != 0;
    if (x) return z ? Letter::Y : Letter::X;
    return z ? Letter::Z : Letter::I;
  }

  PauliString with(std::size_t i, Letter l) const {
    if (i >= n_) throw ValidationError("PauliString: particle index out of range");
    PauliString out = *this;
    const std::uint64_t b = bit(i);
    out.x_ &= ~b;
    out.z_ &= ~b;
    if (l == Letter::X || l == Letter::Y) out.x_ |= b;
    if (l == Letter::Z || l == Letter::Y) out.z_ |= b;
    return out;
  }

  std::string str() const {
    std::string s(n_, 'I');
    for (std::size_t i = 0; i < n_; ++i) s[i] = to_char(letter(i));
    return s;
  }

  /// Lexicographic over letters, particle 1 first, with I < X < Y < Z.
  friend std::strong_ordering operator<=>(const PauliString& a, const PauliString& b) {
    if (a.n_ != b.n_) return a.n_ <=> b.n_;
    const std::uint64_t diff = (a.x_ ^ b.x_) | (a.z_ ^ b.z_);
    if (diff == 0) return std::strong_ordering::equal;
    const std::uint64_t top = std::uint64_t{1} << (std::bit_width(diff) - 1);
    return code(a, top) <=> code(b, top);
  }
  friend bool operator==(const PauliString& a, const PauliString& b) = default;

 private:
  std::uint64_t bit(std::size_t i) const { return std::uint64_t{1} << (n_ - 1 - i); }

  static int code(const PauliString& s, std::uint64_t b) {
    const bool x = (s.x_ & b) != 0;
    const bool z = (s.z_ & b) != 0;
    return x ? (z ? 2 : 1) : (z ? 3 : 0);
  }

  std::size_t n_;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

/// Product of two strings: a*b = i^phase * result, phase in {0,1,2,3}.
inline std::pair<int, PauliString> multiply_strings(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw DimensionError("multiply: particle counts differ");
  const std::uint64_t ax = a.x_bits(), az = a.z_bits();
  const std::uint64_t bx = b.x_bits(), bz = b.z_bits();
  const std::uint64_t a_x = ax & ~az, a_y = ax & az, a_z = ~ax & az;
  const std::uint64_t b_x = bx & ~bz, b_y = bx & bz, b_z = ~bx & bz;
  // XY = iZ, YZ = iX, ZX = iY and the reversed orders carry -i.
  const std::uint64_t plus = (a_x & b_y) | (a_y & b_z) | (a_z & b_x);
  const std::uint64_t minus = (a_y & b_x) | (a_z & b_y) | (a_x & b_z);
  const int phase = (std::popcount(plus) - std::popcount(minus)) & 3;
  return {phase, PauliString(a.size(), ax ^ bx, az ^ bz)};
}

inline Complex i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

class PauliOperator {
 public:
  using TermMap = std::map<PauliString, Complex>;

  explicit PauliOperator(std::size_t n) : n_(n) {
    if (n == 0 || n > kMaxParticles) {
      throw ValidationError("PauliOperator: particle count must be in 1.." +
                            std::to_string(kMaxParticles));
    }
  }

  PauliOperator(std::size_t n, TermMap terms) : PauliOperator(n) {
    for (auto& [s, c] : terms) {
      if (s.size() != n) throw DimensionError("PauliOperator: term length differs from n");
      if (std::abs(c) >= kPruneThreshold) terms_.emplace_hint(terms_.end(), s, c);
    }
  }

  static PauliOperator zero(std::size_t n) { return PauliOperator(n); }

  static PauliOperator identity(std::size_t n, Complex c = 1.0) {
    return PauliOperator(n, {{PauliString(n), c}});
  }

  static PauliOperator from_terms(
      std::initializer_list<std::pair<std::string_view, Complex>> terms) {
    if (terms.size() == 0) throw ValidationError("from_terms: empty term list");
    const std::size_t n = terms.begin()->first.size();
    TermMap map;
    for (const auto& [letters, c] : terms) {
      auto s = PauliString::parse(letters);
      if (s.size() != n) throw DimensionError("from_terms: inconsistent string lengths");
      map[s] += c;
    }
    return PauliOperator(n, std::move(map));
  }

  std::size_t n() const { return n_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  Complex coefficient(const PauliString& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? Complex{} : it->second;
  }
  Complex coefficient(std::string_view letters) const {
    return coefficient(PauliString::parse(letters));
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [s, c] : terms_) {
      if (!out.empty()) out += " + ";
      out += "(" + std::to_string(c.real()) + "," + std::to_string(c.imag()) + ")" + s.str();
    }
    return out;
  }

 private:
  std::size_t n_;
  TermMap terms_;
};

namespace detail {

inline void require_same_n(const PauliOperator& a, const PauliOperator& b, const char* what) {
  if (a.n() != b.n()) {
    throw DimensionError(std::string(what) + ": particle counts differ (" +
                         std::to_string(a.n()) + " vs " + std::to_string(b.n()) + ")");
  }
}

// Accumulates coefficients keyed by the packed (x, z) bits. Small operators
// use a flat table of 4^n slots; larger ones fall back to a hash map.
class TermAccumulator {
 public:
  explicit TermAccumulator(std::size_t n) : n_(n) {
    if (2 * n <= kFlatBits) flat_.assign(std::size_t{1} << (2 * n), Complex{});
  }

  void add(const PauliString& s, Complex c) {
    const std::uint64_t key = (s.x_bits() << n_) | s.z_bits();
    if (!flat_.empty()) {
      flat_[key] += c;
    } else {
      sparse_[key] += c;
    }
  }

  PauliOperator finish() && {
    std::vector<std::pair<PauliString, Complex>> kept;
    const std::uint64_t zmask = PauliString::full_mask(n_);
    auto keep = [&](std::uint64_t key, Complex c) {
      if (std::abs(c) >= kPruneThreshold) {
        kept.emplace_back(PauliString(n_, key >> n_, key & zmask), c);
      }
    };
    if (!flat_.empty()) {
      for (std::uint64_t k = 0; k < flat_.size(); ++k) keep(k, flat_[k]);
    } else {
      for (const auto& [k, c] : sparse_) keep(k, c);
    }
    std::sort(kept.begin(), kept.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    PauliOperator::TermMap map;
    for (auto& [s, c] : kept) map.emplace_hint(map.end(), s, c);
    return PauliOperator(n_, std::move(map));
  }

 private:
  static constexpr std::size_t kFlatBits = 20;
  std::size_t n_;
  std::vector<Complex> flat_;
  std::unordered_map<std::uint64_t, Complex> sparse_;
};

}  // namespace detail

inline PauliOperator add(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "add");
  PauliOperator::TermMap map = a.terms();
  for (const auto& [s, c] : b.terms()) map[s] += c;
  return PauliOperator(a.n(), std::move(map));
}

inline PauliOperator scale(const PauliOperator& a, Complex c) {
  PauliOperator::TermMap map;
  for (const auto& [s, v] : a.terms()) map.emplace_hint(map.end(), s, v * c);
  return PauliOperator(a.n(), std::move(map));
}

inline PauliOperator subtract(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "subtract");
  PauliOperator::TermMap map = a.terms();
  for (const auto& [s, c] : b.terms()) map[s] -= c;
  return PauliOperator(a.n(), std::move(map));
}

inline PauliOperator multiply(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "multiply");
  detail::TermAccumulator acc(a.n());
  for (const auto& [sa, ca] : a.terms()) {
    for (const auto& [sb, cb] : b.terms()) {
      auto [phase, s] = multiply_strings(sa, sb);
      acc.add(s, i_power(phase) * ca * cb);
    }
  }
  return std::move(acc).finish();
}

inline PauliOperator operator+(const PauliOperator& a, const PauliOperator& b) { return add(a, b); }
inline PauliOperator operator-(const PauliOperator& a, const PauliOperator& b) { return subtract(a, b); }
inline PauliOperator operator*(const PauliOperator& a, const PauliOperator& b) { return multiply(a, b); }
inline PauliOperator operator*(Complex c, const PauliOperator& a) { return scale(a, c); }

inline PauliOperator commutator(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "commutator");
  return multiply(a, b) - multiply(b, a);
}

inline PauliOperator anticommutator(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "anticommutator");
  return multiply(a, b) + multiply(b, a);
}

/// Largest coefficient difference over the union of both term sets.
inline double max_deviation(const PauliOperator& a, const PauliOperator& b) {
  detail::require_same_n(a, b, "max_deviation");
  double dev = 0.0;
  auto ia = a.terms().begin();
  auto ib = b.terms().begin();
  while (ia != a.terms().end() || ib != b.terms().end()) {
    if (ib == b.terms().end() || (ia != a.terms().end() && ia->first < ib->first)) {
      dev = std::max(dev, std::abs(ia->second));
      ++ia;
    } else if (ia == a.terms().end() || ib->first < ia->first) {
      dev = std::max(dev, std::abs(ib->second));
      ++ib;
    } else {
      dev = std::max(dev, std::abs(ia->second - ib->second));
      ++ia;
      ++ib;
    }
  }
  return dev;
}

inline bool approx_equal(const PauliOperator& a, const PauliOperator& b, double tol) {
  return max_deviation(a, b) <= tol;
}

/// Every Pauli string is Hermitian, so the operator is iff all coefficients are real.
inline bool is_hermitian(const PauliOperator& op, double tol) {
  return std::all_of(op.terms().begin(), op.terms().end(),
                     [tol](const auto& t) { return std::abs(t.second.imag()) <= tol; });
}

/// Places a k-particle operator on the given (1-based, distinct) positions of an
/// n-particle register; all other particles carry I.
inline PauliOperator embed_on(const PauliOperator& op, std::span<const std::size_t> positions,
                              std::size_t n) {
  if (positions.size() != op.n()) {
    throw DimensionError("embed_on: position count differs from operator size");
  }
  std::vector<bool> used(n + 1, false);
  for (std::size_t p : positions) {
    if (p < 1 || p > n) throw ContractError("embed: particle index out of range");
    if (used[p]) throw ContractError("embed: repeated particle index");
    used[p] = true;
  }
  PauliOperator::TermMap map;
  for (const auto& [s, c] : op.terms()) {
    PauliString t(n);
    for (std::size_t i = 0; i < op.n(); ++i) t = t.with(positions[i] - 1, s.letter(i));
    map[t] += c;
  }
  return PauliOperator(n, std::move(map));
}

inline PauliOperator embed(const PauliOperator& op, std::size_t j, std::size_t n) {
  if (op.n() != 1) throw DimensionError("embed: expected a single-particle operator");
  const std::array<std::size_t, 1> pos{j};
  return embed_on(op, pos, n);
}

// ---------------------------------------------------------------------------
// Directions and spin operators

class UnitVector3 {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Throws ValidationError unless x^2 + y^2 + z^2 = 1 within 1e-12.
  static UnitVector3 make(double x, double y, double z) {
    const double norm2 = x * x + y * y + z * z;
    if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > kTolerance) {
      throw ValidationError("UnitVector3: not a unit vector (|v|^2 = " +
                            std::to_string(norm2) + ")");
    }
    return UnitVector3(x, y, z);
  }

  static UnitVector3 normalized(double x, double y, double z) {
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw ValidationError("UnitVector3: cannot normalize a zero vector");
    }
    return UnitVector3(x / norm, y / norm, z / norm);
  }

  /// Direction in the x-y plane at azimuth `phi`.
  static UnitVector3 planar(double phi) { return UnitVector3(std::cos(phi), std::sin(phi), 0.0); }

  static UnitVector3 x_axis() { return UnitVector3(1, 0, 0); }
  static UnitVector3 y_axis() { return UnitVector3(0, 1, 0); }
  static UnitVector3 z_axis() { return UnitVector3(0, 0, 1); }

  double x() const { return v_[0]; }
  double y() const { return v_[1]; }
  double z() const { return v_[2]; }
  const std::array<double, 3>& components() const { return v_; }

  UnitVector3 operator-() const { return UnitVector3(-v_[0], -v_[1], -v_[2]); }

  friend double dot(const UnitVector3& a, const UnitVector3& b) {
    return a.v_[0] * b.v_[0] + a.v_[1] * b.v_[1] + a.v_[2] * b.v_[2];
  }
  friend std::array<double, 3> cross(const UnitVector3& a, const UnitVector3& b) {
    return {a.v_[1] * b.v_[2] - a.v_[2] * b.v_[1], a.v_[2] * b.v_[0] - a.v_[0] * b.v_[2],
            a.v_[0] * b.v_[1] - a.v_[1] * b.v_[0]};
  }
  friend bool operator==(const UnitVector3&, const UnitVector3&) = default;

 private:
  UnitVector3(double x, double y, double z) : v_{x, y, z} {}
  std::array<double, 3> v_;
};

/// sigma(v) = v_x X + v_y Y + v_z Z on a single particle.
inline PauliOperator single_spin_operator(const UnitVector3& v) {
  PauliOperator::TermMap map;
  map[PauliString(1).with(0, Letter::X)] = v.x();
  map[PauliString(1).with(0, Letter::Y)] = v.y();
  map[PauliString(1).with(0, Letter::Z)] = v.z();
  return PauliOperator(1, std::move(map));
}

// ---------------------------------------------------------------------------
// Dense oracle backend

inline constexpr std::size_t kDefaultDenseLimit = 12;

class DenseOperator {
 public:
  explicit DenseOperator(std::size_t n) : n_(n), dim_(std::size_t{1} << n), data_(dim_ * dim_) {}

  DenseOperator(std::size_t n, std::vector<Complex> entries) : DenseOperator(n) {
    if (entries.size() != dim_ * dim_) {
      throw DimensionError("DenseOperator: expected 2^n x 2^n entries");
    }
    data_ = std::move(entries);
  }

  static DenseOperator identity(std::size_t n) {
    DenseOperator m(n);
    for (std::size_t i = 0; i < m.dim_; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  std::span<const Complex> data() const { return data_; }

  friend DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
    if (a.n_ != b.n_) throw DimensionError("DenseOperator: dimension mismatch");
    DenseOperator out(a.n_);
    const std::size_t d = a.dim_;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const Complex aik = a(i, k);
        if (aik == Complex{}) continue;
        for (std::size_t j = 0; j < d; ++j) out(i, j) += aik * b(k, j);
      }
    }
    return out;
  }

  friend double max_abs_diff(const DenseOperator& a, const DenseOperator& b) {
    if (a.n_ != b.n_) throw DimensionError("DenseOperator: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data_.size(); ++i) m = std::max(m, std::abs(a.data_[i] - b.data_[i]));
    return m;
  }

  bool is_hermitian(double tol) const {
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = i; j < dim_; ++j) {
        if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
      }
    }
    return true;
  }

  double max_off_diagonal() const {
    double m = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        if (i != j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
  }

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<Complex> data_;
};

/// Matrix element rule: P|c> = i^{|x&z|} (-1)^{|z&c|} |c ^ x>.
inline DenseOperator to_dense(const PauliOperator& op, std::size_t dense_limit = kDefaultDenseLimit) {
  if (op.n() > dense_limit) {
    throw ResourceError("to_dense: " + std::to_string(op.n()) +
                        " particles exceeds dense limit " + std::to_string(dense_limit));
  }
  DenseOperator m(op.n());
  for (const auto& [s, c] : op.terms()) {
    const std::uint64_t x = s.x_bits(), z = s.z_bits();
    const Complex base = c * i_power(std::popcount(x & z));
    for (std::uint64_t col = 0; col < m.dim(); ++col) {
      const bool odd = (std::popcount(z & col) & 1) != 0;
      m(col ^ x, col) += odd ? -base : base;
    }
  }
  return m;
}

}  // namespace mermin
