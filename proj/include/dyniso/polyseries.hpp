#pragma once

// Power series over GF(2) truncated at a fixed degree m, matrices of them,
// and the low-rank inverse/determinant update kernels built on top.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#if defined(__PCLMUL__)
#include <wmmintrin.h>
#endif

#include "dyniso/error.hpp"

namespace dyniso {

namespace detail {

using word = std::uint64_t;

inline void clmul64(word a, word b, word& lo, word& hi) {
#if defined(__PCLMUL__)
  __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  __m128i r = _mm_clmulepi64_si128(va, vb, 0x00);
  lo = static_cast<word>(_mm_cvtsi128_si64(r));
  hi = static_cast<word>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)));
#else
  lo = 0;
  hi = 0;
  for (int i = 0; i < 64; ++i) {
    if ((b >> i) & 1U) {
      lo ^= a << i;
      if (i != 0) hi ^= a >> (64 - i);
    }
  }
#endif
}

// out[0 .. na+nb) ^= a * b, schoolbook.
inline void mul_school(const word* a, std::size_t na, const word* b, std::size_t nb, word* out) {
  for (std::size_t i = 0; i < na; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < nb; ++j) {
      if (b[j] == 0) continue;
      word lo, hi;
      clmul64(a[i], b[j], lo, hi);
      out[i + j] ^= lo;
      out[i + j + 1] ^= hi;
    }
  }
}

inline constexpr std::size_t kKaratsubaThreshold = 24;

inline std::size_t karatsuba_scratch(std::size_t n) { return 16 * n + 256; }

// out[0 .. 2n) ^= a * b for equal-length operands; scratch needs
// karatsuba_scratch(n) words.
inline void mul_karatsuba(const word* a, const word* b, std::size_t n, word* out, word* scratch) {
  if (n <= kKaratsubaThreshold) {
    mul_school(a, n, b, n, out);
    return;
  }
  const std::size_t lo = n / 2;
  const std::size_t hi = n - lo;
  // a = a0 + a1 X, b = b0 + b1 X with X = x^(64*lo)
  word* z0 = scratch;
  word* z2 = z0 + 2 * lo;
  word* sa = z2 + 2 * hi;
  word* sb = sa + hi;
  word* mid = sb + hi;
  word* rest = mid + 2 * hi;
  std::fill(scratch, rest, 0);
  for (std::size_t i = 0; i < lo; ++i) {
    sa[i] = a[i];
    sb[i] = b[i];
  }
  for (std::size_t i = 0; i < hi; ++i) {
    sa[i] ^= a[lo + i];
    sb[i] ^= b[lo + i];
  }
  // z1 = (a0+a1)(b0+b1) + z0 + z2
  mul_karatsuba(a, b, lo, z0, rest);
  mul_karatsuba(a + lo, b + lo, hi, z2, rest);
  mul_karatsuba(sa, sb, hi, mid, rest);
  for (std::size_t i = 0; i < 2 * lo; ++i) {
    out[i] ^= z0[i];
    mid[i] ^= z0[i];
  }
  for (std::size_t i = 0; i < 2 * hi; ++i) {
    out[2 * lo + i] ^= z2[i];
    mid[i] ^= z2[i];
  }
  for (std::size_t i = 0; i < 2 * hi; ++i) out[lo + i] ^= mid[i];
}

}  // namespace detail

/// Polynomial over GF(2) truncated at degree m (coefficients of x^0..x^m).
/// Stored either as a sorted exponent list or as packed words, whichever is
/// smaller; the choice is invisible to callers.
class TruncPoly {
 public:
  using word = detail::word;

  TruncPoly() = default;
  explicit TruncPoly(std::size_t m) : m_(m) {}

  static TruncPoly zero(std::size_t m) { return TruncPoly(m); }
  static TruncPoly one(std::size_t m) { return monomial(m, 0); }
  static TruncPoly monomial(std::size_t m, std::size_t degree) {
    TruncPoly p(m);
    if (degree <= m) p.terms_.push_back(degree);
    return p;
  }
  static TruncPoly from_degrees(std::size_t m, std::initializer_list<std::size_t> degrees) {
    std::vector<std::size_t> t;
    for (std::size_t d : degrees)
      if (d <= m) t.push_back(d);
    return from_terms(m, std::move(t));
  }
  /// Exponents in any order; repeated exponents cancel in pairs.
  static TruncPoly from_terms(std::size_t m, std::vector<std::size_t> t) {
    std::sort(t.begin(), t.end());
    TruncPoly p(m);
    for (std::size_t i = 0; i < t.size();) {
      std::size_t j = i;
      while (j < t.size() && t[j] == t[i]) ++j;
      if ((j - i) % 2 == 1 && t[i] <= m) p.terms_.push_back(t[i]);
      i = j;
    }
    p.normalize();
    return p;
  }
  /// Packed little-endian words; bits above m are dropped.
  static TruncPoly from_words(std::size_t m, std::vector<word> w) {
    TruncPoly p(m);
    w.resize(word_len(m), 0);
    p.words_ = std::move(w);
    p.dense_ = true;
    p.mask_top();
    p.normalize();
    return p;
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t word_count() const noexcept { return word_len(m_); }
  bool is_dense() const noexcept { return dense_; }

  /// Packed copy of the coefficients, word_count() words.
  std::vector<word> words() const {
    if (dense_) return words_;
    std::vector<word> w(word_count(), 0);
    for (std::size_t d : terms_) w[d / 64] |= word{1} << (d % 64);
    return w;
  }

  bool coeff(std::size_t i) const {
    if (i > m_) return false;
    if (dense_) return (words_[i / 64] >> (i % 64)) & 1U;
    return std::binary_search(terms_.begin(), terms_.end(), i);
  }
  void set(std::size_t i, bool v) {
    require(i <= m_, ErrorKind::contract, "TruncPoly::set beyond truncation degree");
    if (coeff(i) != v) flip(i);
  }
  void flip(std::size_t i) {
    require(i <= m_, ErrorKind::contract, "TruncPoly::flip beyond truncation degree");
    if (dense_) {
      words_[i / 64] ^= word{1} << (i % 64);
      return;
    }
    auto it = std::lower_bound(terms_.begin(), terms_.end(), i);
    if (it != terms_.end() && *it == i)
      terms_.erase(it);
    else
      terms_.insert(it, i);
    normalize();
  }

  bool is_zero() const {
    if (!dense_) return terms_.empty();
    return std::all_of(words_.begin(), words_.end(), [](word w) { return w == 0; });
  }
  bool is_one() const { return coeff(0) && popcount() == 1; }

  std::size_t popcount() const {
    if (!dense_) return terms_.size();
    std::size_t c = 0;
    for (word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::optional<std::size_t> min_degree() const {
    if (!dense_) return terms_.empty() ? std::nullopt : std::optional<std::size_t>(terms_.front());
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] != 0) return i * 64 + static_cast<std::size_t>(std::countr_zero(words_[i]));
    return std::nullopt;
  }
  std::optional<std::size_t> max_degree() const {
    if (!dense_) return terms_.empty() ? std::nullopt : std::optional<std::size_t>(terms_.back());
    for (std::size_t i = words_.size(); i-- > 0;)
      if (words_[i] != 0) return i * 64 + 63 - static_cast<std::size_t>(std::countl_zero(words_[i]));
    return std::nullopt;
  }

  std::vector<std::size_t> degrees() const {
    if (!dense_) return terms_;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      word w = words_[i];
      while (w != 0) {
        out.push_back(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
    return out;
  }

  TruncPoly& operator+=(const TruncPoly& o) {
    check_same_m(o);
    if (!dense_ && !o.dense_) {
      std::vector<std::size_t> out;
      out.reserve(terms_.size() + o.terms_.size());
      std::set_symmetric_difference(terms_.begin(), terms_.end(), o.terms_.begin(), o.terms_.end(),
                                    std::back_inserter(out));
      terms_ = std::move(out);
      normalize();
      return *this;
    }
    if (!o.dense_) {
      for (std::size_t d : o.terms_) words_[d / 64] ^= word{1} << (d % 64);
    } else {
      make_dense();
      for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
    }
    normalize();
    return *this;
  }
  friend TruncPoly operator+(TruncPoly a, const TruncPoly& b) { return a += b; }
  // Characteristic two: subtraction is addition.
  TruncPoly& operator-=(const TruncPoly& o) { return *this += o; }
  friend TruncPoly operator-(TruncPoly a, const TruncPoly& b) { return a += b; }

  friend bool operator==(const TruncPoly& a, const TruncPoly& b) {
    if (a.m_ != b.m_) return false;
    if (a.dense_ == b.dense_) return a.dense_ ? a.words_ == b.words_ : a.terms_ == b.terms_;
    return a.degrees() == b.degrees();
  }

  /// this * x^k, truncated.
  TruncPoly shifted(std::size_t k) const {
    TruncPoly r(m_);
    r.add_shifted(*this, k);
    return r;
  }

  /// this += src * x^k (truncated). src may have a different m.
  void add_shifted(const TruncPoly& src, std::size_t k) {
    if (k > m_) return;
    if (!src.dense_) {
      std::vector<std::size_t> moved;
      moved.reserve(src.terms_.size());
      for (std::size_t d : src.terms_) {
        if (d > m_ - k) break;
        moved.push_back(d + k);
      }
      if (!dense_) {
        std::vector<std::size_t> out;
        out.reserve(terms_.size() + moved.size());
        std::set_symmetric_difference(terms_.begin(), terms_.end(), moved.begin(), moved.end(),
                                      std::back_inserter(out));
        terms_ = std::move(out);
      } else {
        for (std::size_t d : moved) words_[d / 64] ^= word{1} << (d % 64);
      }
      normalize();
      return;
    }
    make_dense();
    const std::size_t ws = k / 64, bs = k % 64;
    const std::size_t n = words_.size();
    const word* s = src.words_.data();
    const std::size_t sn = src.words_.size();
    for (std::size_t i = 0; i < sn && i + ws < n; ++i) {
      if (s[i] == 0) continue;
      words_[i + ws] ^= s[i] << bs;
      if (bs != 0 && i + ws + 1 < n) words_[i + ws + 1] ^= s[i] >> (64 - bs);
    }
    mask_top();
    normalize();
  }

  /// Change truncation degree (drops or zero-extends coefficients).
  TruncPoly retruncated(std::size_t new_m) const {
    std::vector<std::size_t> t;
    for (std::size_t d : degrees()) {
      if (d > new_m) break;
      t.push_back(d);
    }
    TruncPoly r(new_m);
    r.terms_ = std::move(t);
    r.normalize();
    return r;
  }

  std::string to_string() const {
    if (is_zero()) return "0";
    std::string s;
    for (std::size_t d : degrees()) {
      if (!s.empty()) s += "+";
      s += d == 0 ? "1" : (d == 1 ? "x" : "x^" + std::to_string(d));
    }
    return s;
  }

 private:
  static std::size_t word_len(std::size_t m) { return m / 64 + 1; }

  void check_same_m(const TruncPoly& o) const {
    require(m_ == o.m_, ErrorKind::contract,
            "truncation degree mismatch: " + std::to_string(m_) + " vs " + std::to_string(o.m_));
  }

  void mask_top() {
    const std::size_t used = (m_ + 1) % 64;
    if (dense_ && used != 0) words_.back() &= (word{1} << used) - 1;
  }

  void make_dense() {
    if (dense_) return;
    words_ = words();
    terms_.clear();
    terms_.shrink_to_fit();
    dense_ = true;
  }

  // Switch representation with hysteresis: lists past half the word count go
  // dense, packed forms under an eighth go back to lists.
  void normalize() {
    const std::size_t wc = word_count();
    if (!dense_) {
      if (terms_.size() > wc / 2 + 8) make_dense();
      return;
    }
    if (popcount() * 8 < wc) {
      terms_ = degrees();
      words_.clear();
      words_.shrink_to_fit();
      dense_ = false;
    }
  }

  std::size_t m_ = 0;
  bool dense_ = false;
  std::vector<std::size_t> terms_;
  std::vector<word> words_;
};

inline constexpr std::size_t kSparseTermLimit = 8;

/// f * g truncated at m. Term lists multiply pairwise; otherwise a few-term
/// operand becomes shifted sums and dense pairs go through Karatsuba.
inline TruncPoly poly_mul_trunc(const TruncPoly& f, const TruncPoly& g) {
  require(f.m() == g.m(), ErrorKind::contract, "poly_mul_trunc: truncation degree mismatch");
  const std::size_t m = f.m();
  if (f.is_zero() || g.is_zero()) return TruncPoly(m);
  const std::size_t fc = f.popcount(), gc = g.popcount();
  const std::size_t outw = f.word_count();
  if (fc * gc <= 4 * outw) {
    const auto fd = f.degrees(), gd = g.degrees();
    std::vector<std::size_t> t;
    t.reserve(fc * gc);
    for (std::size_t a : fd)
      for (std::size_t b : gd) {
        if (a + b > m) break;
        t.push_back(a + b);
      }
    return TruncPoly::from_terms(m, std::move(t));
  }
  const auto sparse_limit = std::max<std::size_t>(
      kSparseTermLimit, static_cast<std::size_t>(2.0 * std::sqrt(static_cast<double>(outw))));
  if (std::min(fc, gc) <= sparse_limit) {
    const TruncPoly& sparse = fc <= gc ? f : g;
    const TruncPoly& dense = fc <= gc ? g : f;
    TruncPoly out(m);
    for (std::size_t d : sparse.degrees()) out.add_shifted(dense, d);
    return out;
  }
  const auto fw_all = f.words(), gw_all = g.words();
  const std::size_t fw = *f.max_degree() / 64 + 1, gw = *g.max_degree() / 64 + 1;
  if (std::min(fw, gw) <= detail::kKaratsubaThreshold) {
    std::vector<detail::word> full(fw + gw + 1, 0);
    // truncated schoolbook: skip products landing beyond the output
    for (std::size_t i = 0; i < fw; ++i) {
      const detail::word a = fw_all[i];
      if (a == 0) continue;
      for (std::size_t j = 0; j < gw && i + j < outw; ++j) {
        const detail::word b = gw_all[j];
        if (b == 0) continue;
        detail::word lo, hi;
        detail::clmul64(a, b, lo, hi);
        full[i + j] ^= lo;
        full[i + j + 1] ^= hi;
      }
    }
    full.resize(outw, 0);
    return TruncPoly::from_words(m, std::move(full));
  }
  const std::size_t n = std::max(fw, gw);
  std::vector<detail::word> a(n, 0), b(n, 0), full(2 * n, 0), scratch(detail::karatsuba_scratch(n), 0);
  std::copy(fw_all.begin(), fw_all.begin() + static_cast<std::ptrdiff_t>(fw), a.begin());
  std::copy(gw_all.begin(), gw_all.begin() + static_cast<std::ptrdiff_t>(gw), b.begin());
  detail::mul_karatsuba(a.data(), b.data(), n, full.data(), scratch.data());
  full.resize(outw, 0);
  return TruncPoly::from_words(m, std::move(full));
}

/// f^2 truncated; in characteristic two this spreads coefficient i to 2i.
inline TruncPoly poly_square_trunc(const TruncPoly& f) {
  std::vector<std::size_t> t;
  for (std::size_t d : f.degrees()) {
    if (2 * d > f.m()) break;
    t.push_back(2 * d);
  }
  return TruncPoly::from_terms(f.m(), std::move(t));
}

/// Inverse modulo x^(m+1); requires constant term one.
inline TruncPoly poly_inv_trunc(const TruncPoly& h) {
  require(h.coeff(0), ErrorKind::non_invertible, "poly_inv_trunc: constant term is zero");
  const std::size_t m = h.m();
  // Newton iteration g <- h g^2 (characteristic two), doubling precision.
  TruncPoly g = TruncPoly::one(m);
  std::size_t precision = 1;
  while (precision <= m) {
    precision *= 2;
    g = poly_mul_trunc(h, poly_square_trunc(g));
  }
  return g;
}

struct MinDegree {
  std::size_t degree = 0;
  bool found = false;
};

inline MinDegree min_degree_term(const TruncPoly& f) {
  if (auto d = f.min_degree()) return {*d, true};
  return {};
}

/// Dense matrix of truncated polynomials sharing one m.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(std::size_t rows, std::size_t cols, std::size_t m)
      : rows_(rows), cols_(cols), m_(m), cells_(rows * cols, TruncPoly(m)) {}

  static PolyMatrix identity(std::size_t n, std::size_t m) {
    PolyMatrix r(n, n, m);
    for (std::size_t i = 0; i < n; ++i) r(i, i) = TruncPoly::one(m);
    return r;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t m() const noexcept { return m_; }

  TruncPoly& operator()(std::size_t i, std::size_t j) { return cells_[i * cols_ + j]; }
  const TruncPoly& operator()(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }

  PolyMatrix& operator+=(const PolyMatrix& o) {
    require(rows_ == o.rows_ && cols_ == o.cols_ && m_ == o.m_, ErrorKind::contract, "PolyMatrix +=: shape mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += o.cells_[i];
    return *this;
  }
  friend PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b) { return a += b; }
  friend bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.m_ == b.m_ && a.cells_ == b.cells_;
  }

  bool is_zero() const {
    return std::all_of(cells_.begin(), cells_.end(), [](const TruncPoly& p) { return p.is_zero(); });
  }

  PolyMatrix select_rows(const std::vector<std::size_t>& idx) const {
    PolyMatrix r(idx.size(), cols_, m_);
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t j = 0; j < cols_; ++j) r(a, j) = (*this)(idx[a], j);
    return r;
  }
  PolyMatrix select_cols(const std::vector<std::size_t>& idx) const {
    PolyMatrix r(rows_, idx.size(), m_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t b = 0; b < idx.size(); ++b) r(i, b) = (*this)(i, idx[b]);
    return r;
  }
  PolyMatrix submatrix(const std::vector<std::size_t>& ri, const std::vector<std::size_t>& ci) const {
    PolyMatrix r(ri.size(), ci.size(), m_);
    for (std::size_t a = 0; a < ri.size(); ++a)
      for (std::size_t b = 0; b < ci.size(); ++b) r(a, b) = (*this)(ri[a], ci[b]);
    return r;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0, m_ = 0;
  std::vector<TruncPoly> cells_;
};

inline PolyMatrix polymat_mul(const PolyMatrix& a, const PolyMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::contract, "polymat_mul: inner dimension mismatch");
  require(a.m() == b.m(), ErrorKind::contract, "polymat_mul: truncation degree mismatch");
  PolyMatrix r(a.rows(), b.cols(), a.m());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const TruncPoly& aik = a(i, k);
      if (aik.is_zero()) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (b(k, j).is_zero()) continue;
        r(i, j) += poly_mul_trunc(aik, b(k, j));
      }
    }
  return r;
}

namespace detail {

// Gauss-Jordan over truncated series with unit-constant-term pivots. When
// `inverse` is non-null it receives M^-1; the return value is det(M).
inline TruncPoly eliminate_units(PolyMatrix work, PolyMatrix* inverse) {
  const std::size_t n = work.rows();
  const std::size_t m = work.m();
  require(work.cols() == n, ErrorKind::contract, "square matrix required");
  PolyMatrix inv = PolyMatrix::identity(n, m);
  TruncPoly det = TruncPoly::one(m);
  auto swap_rows = [n](PolyMatrix& x, std::size_t r1, std::size_t r2) {
    for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(r1, j), x(r2, j));
    (void)n;
  };
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    for (std::size_t r = col; r < n; ++r)
      if (work(r, col).coeff(0)) {
        piv = r;
        break;
      }
    if (piv == n) fail(ErrorKind::singular, "constant-term matrix is singular at column " + std::to_string(col));
    swap_rows(work, col, piv);
    if (inverse) swap_rows(inv, col, piv);
    det = poly_mul_trunc(det, work(col, col));
    const TruncPoly pinv = poly_inv_trunc(work(col, col));
    for (std::size_t j = 0; j < n; ++j) {
      if (j >= col) work(col, j) = poly_mul_trunc(work(col, j), pinv);
      if (inverse) inv(col, j) = poly_mul_trunc(inv(col, j), pinv);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      if (!inverse && r < col) continue;
      const TruncPoly factor = work(r, col);
      if (factor.is_zero()) continue;
      for (std::size_t j = col; j < n; ++j)
        if (!work(col, j).is_zero()) work(r, j) += poly_mul_trunc(factor, work(col, j));
      if (inverse)
        for (std::size_t j = 0; j < n; ++j)
          if (!inv(col, j).is_zero()) inv(r, j) += poly_mul_trunc(factor, inv(col, j));
    }
  }
  if (inverse) *inverse = std::move(inv);
  return det;
}

}  // namespace detail

/// Inverse of a square polynomial matrix whose constant-term matrix is
/// invertible over GF(2).
inline PolyMatrix polymat_inv_small(const PolyMatrix& mat) {
  PolyMatrix inv;
  detail::eliminate_units(mat, &inv);
  return inv;
}

/// Determinant truncated at m; same invertibility requirement as the inverse.
inline TruncPoly polymat_det_small(const PolyMatrix& mat) { return detail::eliminate_units(mat, nullptr); }

/// One changed entry: A[row, col] += delta.
struct EntryDelta {
  std::size_t row = 0;
  std::size_t col = 0;
  TruncPoly delta;
};

/// Delta = U B V with U selecting `rows`, V selecting `cols`.
struct LowRankChange {
  std::size_t n = 0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  PolyMatrix B;

  std::size_t width() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }

  PolyMatrix U() const {
    PolyMatrix u(n, rows.size(), B.m());
    for (std::size_t a = 0; a < rows.size(); ++a) u(rows[a], a) = TruncPoly::one(B.m());
    return u;
  }
  PolyMatrix V() const {
    PolyMatrix v(cols.size(), n, B.m());
    for (std::size_t b = 0; b < cols.size(); ++b) v(b, cols[b]) = TruncPoly::one(B.m());
    return v;
  }
  PolyMatrix dense() const {
    PolyMatrix d(n, n, B.m());
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) d(rows[a], cols[b]) += B(a, b);
    return d;
  }
};

inline constexpr std::size_t kDefaultBatchCap = 16;

inline LowRankChange decompose_change(const std::vector<EntryDelta>& delta, std::size_t n, std::size_t m,
                                      std::size_t cap = kDefaultBatchCap) {
  LowRankChange chg;
  chg.n = n;
  for (const auto& e : delta) {
    require(e.row < n && e.col < n, ErrorKind::contract, "decompose_change: index out of range");
    require(e.delta.m() == m, ErrorKind::contract, "decompose_change: truncation degree mismatch");
    chg.rows.push_back(e.row);
    chg.cols.push_back(e.col);
  }
  auto uniq = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(chg.rows);
  uniq(chg.cols);
  require(chg.rows.size() <= cap && chg.cols.size() <= cap, ErrorKind::batch_too_large,
          "decompose_change: " + std::to_string(chg.rows.size()) + " rows / " + std::to_string(chg.cols.size()) +
              " cols exceed cap " + std::to_string(cap));
  chg.B = PolyMatrix(chg.rows.size(), chg.cols.size(), m);
  for (const auto& e : delta) {
    const auto a = static_cast<std::size_t>(std::lower_bound(chg.rows.begin(), chg.rows.end(), e.row) - chg.rows.begin());
    const auto b = static_cast<std::size_t>(std::lower_bound(chg.cols.begin(), chg.cols.end(), e.col) - chg.cols.begin());
    chg.B(a, b) += e.delta;
  }
  return chg;
}

namespace detail {

// B * (V C): the |rows| x n strip.
inline PolyMatrix bvc(const PolyMatrix& c, const LowRankChange& chg) {
  return polymat_mul(chg.B, c.select_rows(chg.cols));
}

// I + B V C U, given the B V C strip.
inline PolyMatrix capacitance(const PolyMatrix& bvc_strip, const LowRankChange& chg) {
  PolyMatrix s = bvc_strip.select_cols(chg.rows);
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += TruncPoly::one(s.m());
  return s;
}

}  // namespace detail

/// C' ~ (A + UBV)^-1 from C ~ A^-1.
inline PolyMatrix woodbury_update(const PolyMatrix& c, const LowRankChange& chg) {
  require(c.rows() == c.cols() && c.rows() == chg.n, ErrorKind::contract, "woodbury_update: dimension mismatch");
  if (chg.empty()) return c;
  require(c.m() == chg.B.m(), ErrorKind::contract, "woodbury_update: truncation degree mismatch");
  const PolyMatrix strip = detail::bvc(c, chg);
  PolyMatrix x;
  try {
    x = polymat_inv_small(detail::capacitance(strip, chg));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::singular) fail(ErrorKind::singular, "woodbury_update: I+BVCU not invertible");
    throw;
  }
  const PolyMatrix right = polymat_mul(x, strip);      // l x n
  const PolyMatrix left = c.select_cols(chg.rows);     // n x l
  PolyMatrix out = c;
  out += polymat_mul(left, right);
  return out;
}

/// d' ~ det(A + UBV) from d ~ det(A) and C ~ A^-1.
inline TruncPoly det_update(const TruncPoly& d, const PolyMatrix& c, const LowRankChange& chg) {
  if (chg.empty()) return d;
  // Only the l x l block C[cols, rows] is needed.
  const PolyMatrix block = c.submatrix(chg.cols, chg.rows);
  PolyMatrix s = polymat_mul(chg.B, block);
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += TruncPoly::one(s.m());
  return poly_mul_trunc(d, polymat_det_small(s));
}

}  // namespace dyniso
