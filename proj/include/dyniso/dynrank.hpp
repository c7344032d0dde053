#pragma once

// Rank of a square matrix over Z_p under batched entry changes, maintained
// through a basis B in which every vector is either in ker(A) or the only
// basis vector whose image hits some row (its principal component).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dyniso/error.hpp"
#include "dyniso/fieldcore.hpp"

namespace dyniso {

/// Dense row-major matrix of residues.
using ResidueMatrix = std::vector<std::vector<u64>>;

namespace rank_detail {

// Row echelon accumulator: add vectors one at a time, learn whether each one
// was independent of those before it.
class Echelon {
 public:
  Echelon(std::size_t len, u64 p) : len_(len), p_(p) {}

  // Returns true and keeps v when independent of the stored vectors.
  bool insert(std::vector<u64> v) {
    for (std::size_t b = 0; b < rows_.size(); ++b) {
      const u64 f = v[piv_[b]];
      if (f == 0) continue;
      const auto& r = rows_[b];
      for (std::size_t i = 0; i < len_; ++i)
        if (r[i] != 0) v[i] = sub_mod(v[i], mul_mod(f, r[i], p_), p_);
    }
    std::size_t lead = 0;
    while (lead < len_ && v[lead] == 0) ++lead;
    if (lead == len_) return false;
    const u64 inv = mod_inverse(v[lead], p_);
    for (auto& x : v) x = mul_mod(x, inv, p_);
    // keep reduced form so the next insert needs one pass
    for (auto& r : rows_) {
      const u64 f = r[lead];
      if (f == 0) continue;
      for (std::size_t i = 0; i < len_; ++i)
        if (v[i] != 0) r[i] = sub_mod(r[i], mul_mod(f, v[i], p_), p_);
    }
    rows_.push_back(std::move(v));
    piv_.push_back(lead);
    return true;
  }

  std::size_t rank() const noexcept { return rows_.size(); }

 private:
  std::size_t len_;
  u64 p_;
  std::vector<std::vector<u64>> rows_;
  std::vector<std::size_t> piv_;
};

inline std::vector<std::vector<u64>> reduce(const ResidueMatrix& m, u64 q) {
  auto out = m;
  for (auto& row : out)
    for (auto& x : row) x %= q;
  return out;
}

}  // namespace rank_detail

/// Rank mod p by elimination (the from-scratch baseline).
inline std::size_t rank_mod_p(ResidueMatrix a, u64 p) {
  const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  for (auto& row : a)
    for (auto& x : row) x %= p;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && a[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[rank], a[piv]);
    const u64 inv = mod_inverse(a[rank][c], p);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const u64 f = neg_mod(mul_mod(a[r][c], inv, p), p);
      if (f == 0) continue;
      const auto& src = a[rank];
      auto& dst = a[r];
      for (std::size_t j = c; j < cols; ++j) dst[j] = fma_mod(dst[j], f, src[j], p);
    }
    ++rank;
  }
  return rank;
}

enum class BasisMode { elimination, exhaustive };

inline constexpr std::size_t kExhaustiveRowCap = 4;
inline constexpr u64 kExhaustivePrimeCap = 7;

namespace rank_detail {

// Is v a combination of the rows in `basis`? Tries every coefficient vector.
inline bool in_span_exhaustive(const std::vector<std::vector<u64>>& basis, const std::vector<u64>& v, u64 q) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < basis.size(); ++i) total *= q;
  std::vector<u64> coef(basis.size(), 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (auto& x : coef) {
      x = c % q;
      c /= q;
    }
    bool equal = true;
    for (std::size_t i = 0; i < v.size() && equal; ++i) {
      u64 s = 0;
      for (std::size_t b = 0; b < basis.size(); ++b) s = add_mod(s, mul_mod(coef[b], basis[b][i], q), q);
      equal = s == v[i] % q;
    }
    if (equal) return true;
  }
  return false;
}

}  // namespace rank_detail

/// Greedy row basis of a small strip mod q: row i is kept iff it is
/// independent of the rows kept before it. 0-based indices.
inline std::vector<std::size_t> row_basis_small(const ResidueMatrix& m, u64 q,
                                                BasisMode mode = BasisMode::elimination) {
  std::vector<std::size_t> out;
  if (m.empty()) return out;
  const auto mq = rank_detail::reduce(m, q);
  if (mode == BasisMode::exhaustive) {
    require(m.size() <= kExhaustiveRowCap && q <= kExhaustivePrimeCap, ErrorKind::parameter,
            "exhaustive basis search limited to 4 rows and q <= 7");
    std::vector<std::vector<u64>> kept;
    for (std::size_t i = 0; i < mq.size(); ++i)
      if (!rank_detail::in_span_exhaustive(kept, mq[i], q)) {
        kept.push_back(mq[i]);
        out.push_back(i);
      }
    return out;
  }
  rank_detail::Echelon ech(mq[0].size(), q);
  for (std::size_t i = 0; i < mq.size(); ++i)
    if (ech.insert(mq[i])) out.push_back(i);
  return out;
}

/// Greedy prefix-rank column basis: column j is kept iff the rank of the
/// first j+1 columns exceeds that of the first j.
inline std::vector<std::size_t> col_basis_small(const ResidueMatrix& m, u64 q) {
  std::vector<std::size_t> out;
  if (m.empty()) return out;
  const std::size_t rows = m.size(), cols = m[0].size();
  rank_detail::Echelon ech(rows, q);
  std::vector<u64> col(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) col[i] = m[i][j] % q;
    if (ech.insert(col)) out.push_back(j);
  }
  return out;
}

inline const std::vector<u64>& small_prime_pool() {
  static const std::vector<u64> pool{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31};
  return pool;
}

/// Smallest pool prime preserving the rank of the strip; p itself otherwise.
inline u64 select_small_prime(const ResidueMatrix& m, u64 p) {
  const std::size_t target = rank_mod_p(m, p);
  for (u64 q : small_prime_pool()) {
    if (q >= p) break;
    if (rank_mod_p(rank_detail::reduce(m, q), q) == target) return q;
  }
  return p;
}

/// Y with Y[R,C] = X11, Y[R,~C] = X12, Y[~R,C] = X21, Y[~R,~C] = X22. R and C
/// are sorted 0-based index sets; complements keep their natural order.
inline ResidueMatrix combine_blocks(const ResidueMatrix& x11, const ResidueMatrix& x12, const ResidueMatrix& x21,
                                    const ResidueMatrix& x22, const std::vector<std::size_t>& r,
                                    const std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t nr = r.size(), nc = c.size();
  require(nr <= n && nc <= n, ErrorKind::contract, "combine_blocks: index set larger than n");
  auto shaped = [](const ResidueMatrix& x, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) return true;
    return x.size() == rows && std::all_of(x.begin(), x.end(), [cols](const auto& row) { return row.size() == cols; });
  };
  require(shaped(x11, nr, nc) && shaped(x12, nr, n - nc) && shaped(x21, n - nr, nc) && shaped(x22, n - nr, n - nc),
          ErrorKind::contract, "combine_blocks: block dimensions inconsistent with R, C and n");
  // pos_R(i): rank of i within R; pos_~R(i) = i - |{r in R : r < i}|
  std::vector<std::size_t> rpos(n), cpos(n);
  std::vector<bool> in_r(n, false), in_c(n, false);
  for (std::size_t a = 0; a < nr; ++a) in_r[r[a]] = true;
  for (std::size_t b = 0; b < nc; ++b) in_c[c[b]] = true;
  for (std::size_t i = 0, inside = 0; i < n; ++i) {
    rpos[i] = in_r[i] ? inside : i - inside;
    if (in_r[i]) ++inside;
  }
  for (std::size_t j = 0, inside = 0; j < n; ++j) {
    cpos[j] = in_c[j] ? inside : j - inside;
    if (in_c[j]) ++inside;
  }
  ResidueMatrix y(n, std::vector<u64>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const ResidueMatrix& src = in_r[i] ? (in_c[j] ? x11 : x12) : (in_c[j] ? x21 : x22);
      y[i][j] = src[rpos[i]][cpos[j]];
    }
  return y;
}

/// One entry assignment A[row, col] = value.
struct EntryUpdate {
  std::size_t row = 0;
  std::size_t col = 0;
  u64 value = 0;
};
using EntryBatch = std::vector<EntryUpdate>;

/// Sizes of the sets formed while absorbing one batch.
struct BatchStats {
  std::size_t r0 = 0, r1 = 0, c1 = 0, c2_candidates = 0, c2 = 0, r2 = 0;
  std::size_t lost_pc = 0;       // columns whose pc row was in R0
  std::size_t kept_in_c1 = 0;    // columns with a pc outside R0 that entered C1
  std::size_t pc_before = 0, pc_formula = 0, pc_recount = 0;
  std::size_t max_phase_col_nonzeros = 0;
};

/// Dense copies of the phase matrices, kept only when tracing.
struct PhaseTrace {
  ResidueMatrix d1, e1, d2, e2;
  ResidueMatrix m_after_d1, m_after_e1, m_after_d2, m_after_e2;
  std::vector<std::size_t> r0, r1, c1, c2_candidates, c2, r2;
};

inline constexpr std::size_t kDefaultRankBatchCap = 8;

/// Change in the number of principal components for one batch.
inline long pc_count_delta(const BatchStats& s) {
  return -static_cast<long>(s.lost_pc) + static_cast<long>(s.c1) + static_cast<long>(s.c2) -
         static_cast<long>(s.kept_in_c1);
}

class AGoodState {
 public:
  AGoodState(std::size_t n, FieldPrime p, std::size_t batch_cap = kDefaultRankBatchCap)
      : n_(n), p_(p.value()), cap_(batch_cap), a_(n * n, 0), b_(n * n, 0), m_(n * n, 0),
        pc_(n, kNone), rowcnt_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) b_[i * n + i] = 1;
  }

  std::size_t n() const noexcept { return n_; }
  u64 prime() const noexcept { return p_; }
  std::size_t batch_cap() const noexcept { return cap_; }

  u64 a(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  u64 basis(std::size_t i, std::size_t j) const { return b_[j * n_ + i]; }
  u64 image(std::size_t i, std::size_t j) const { return m_[j * n_ + i]; }
  bool in_kernel(std::size_t j) const { return pc_[j] == kNone; }
  std::optional<std::size_t> pc(std::size_t j) const {
    return pc_[j] == kNone ? std::nullopt : std::optional<std::size_t>(pc_[j]);
  }

  std::size_t rank() const noexcept { return pc_count_; }
  std::size_t kernel_columns() const {
    return static_cast<std::size_t>(std::count(pc_.begin(), pc_.end(), kNone));
  }

  const BatchStats& last_stats() const noexcept { return stats_; }
  void set_trace(bool on) { trace_on_ = on; }
  const PhaseTrace& last_trace() const noexcept { return trace_; }

  ResidueMatrix a_matrix() const {
    ResidueMatrix out(n_, std::vector<u64>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = a(i, j);
    return out;
  }
  ResidueMatrix basis_matrix() const {
    ResidueMatrix out(n_, std::vector<u64>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = basis(i, j);
    return out;
  }
  ResidueMatrix image_matrix() const {
    ResidueMatrix out(n_, std::vector<u64>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out[i][j] = image(i, j);
    return out;
  }

  /// Column reduction of A starting from B = I.
  void load(const ResidueMatrix& a) {
    require(a.size() == n_, ErrorKind::contract, "init: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) {
      require(a[i].size() == n_, ErrorKind::contract, "init: matrix must be square");
      for (std::size_t j = 0; j < n_; ++j) a_[i * n_ + j] = a[i][j] % p_;
    }
    std::fill(b_.begin(), b_.end(), 0);
    for (std::size_t i = 0; i < n_; ++i) b_[i * n_ + i] = 1;
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < n_; ++i) m_[j * n_ + i] = a_[i * n_ + j];
    std::vector<bool> pivoted(n_, false);
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t piv = n_;
      for (std::size_t j = 0; j < n_ && piv == n_; ++j)
        if (!pivoted[j] && m_[j * n_ + i] != 0) piv = j;
      if (piv == n_) continue;
      pivoted[piv] = true;
      const u64 inv = mod_inverse(m_[piv * n_ + i], p_);
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == piv) continue;
        const u64 v = m_[j * n_ + i];
        if (v == 0) continue;
        axpy_column(j, piv, neg_mod(mul_mod(v, inv, p_), p_));
      }
    }
    normalize();
    pc_count_ = count_pcs();
    stats_ = {};
  }

  /// Assign the batch atomically and restore A-goodness.
  void apply(const EntryBatch& batch) {
    stats_ = {};
    stats_.pc_before = pc_count_;
    std::vector<std::size_t> r0;
    for (const auto& u : batch) {
      require(u.row < n_ && u.col < n_, ErrorKind::contract, "entry index out of range");
      r0.push_back(u.row);
    }
    std::sort(r0.begin(), r0.end());
    r0.erase(std::unique(r0.begin(), r0.end()), r0.end());
    std::vector<std::size_t> cols;
    for (const auto& u : batch) cols.push_back(u.col);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    require(r0.size() <= cap_ && cols.size() <= cap_, ErrorKind::batch_too_large,
            "batch touches " + std::to_string(r0.size()) + " rows / " + std::to_string(cols.size()) +
                " columns, cap " + std::to_string(cap_));
    // later assignments to the same cell win
    std::vector<std::vector<u64>> row_delta(r0.size(), std::vector<u64>(n_, 0));
    {
      std::vector<u64> snapshot;
      snapshot.reserve(batch.size());
      for (const auto& u : batch) snapshot.push_back(a_[u.row * n_ + u.col]);
      for (const auto& u : batch) a_[u.row * n_ + u.col] = u.value % p_;
      for (std::size_t t = 0; t < batch.size(); ++t) {
        const auto& u = batch[t];
        // first occurrence of the cell carries the full difference
        bool first = true;
        for (std::size_t s = 0; s < t; ++s)
          if (batch[s].row == u.row && batch[s].col == u.col) first = false;
        if (!first) continue;
        const std::size_t ri = static_cast<std::size_t>(std::lower_bound(r0.begin(), r0.end(), u.row) - r0.begin());
        row_delta[ri][u.col] = sub_mod(a_[u.row * n_ + u.col], snapshot[t], p_);
      }
    }
    // drop rows whose net change vanished
    {
      std::vector<std::size_t> keep_rows;
      std::vector<std::vector<u64>> keep_delta;
      for (std::size_t a = 0; a < r0.size(); ++a)
        if (std::any_of(row_delta[a].begin(), row_delta[a].end(), [](u64 x) { return x != 0; })) {
          keep_rows.push_back(r0[a]);
          keep_delta.push_back(std::move(row_delta[a]));
        }
      r0 = std::move(keep_rows);
      row_delta = std::move(keep_delta);
    }
    stats_.r0 = r0.size();
    if (trace_on_) trace_ = {};
    if (r0.empty()) {
      stats_.pc_formula = stats_.pc_recount = pc_count_;
      if (trace_on_) record_identity_trace();
      return;
    }
    // M[r, *] += delta_r * B
    for (std::size_t a = 0; a < r0.size(); ++a) {
      const std::size_t r = r0[a];
      for (std::size_t c = 0; c < n_; ++c) {
        const u64 d = row_delta[a][c];
        if (d == 0) continue;
        for (std::size_t j = 0; j < n_; ++j) {
          const u64 bv = b_[j * n_ + c];
          if (bv != 0) m_[j * n_ + r] = add_mod(m_[j * n_ + r], mul_mod(d, bv, p_), p_);
        }
      }
    }
    std::vector<bool> in_r0(n_, false);
    for (std::size_t r : r0) in_r0[r] = true;
    std::vector<bool> was_kernel(n_, false);
    std::vector<bool> pc_in_r0(n_, false);
    for (std::size_t j = 0; j < n_; ++j) {
      was_kernel[j] = pc_[j] == kNone;
      pc_in_r0[j] = !was_kernel[j] && in_r0[pc_[j]];
      if (pc_in_r0[j]) ++stats_.lost_pc;
    }

    // Phase 1
    ResidueMatrix strip(r0.size(), std::vector<u64>(n_));
    for (std::size_t a = 0; a < r0.size(); ++a)
      for (std::size_t j = 0; j < n_; ++j) strip[a][j] = m_[j * n_ + r0[a]];
    std::vector<std::size_t> r1;
    for (std::size_t a : row_basis_small(strip, p_)) r1.push_back(r0[a]);
    ResidueMatrix r1rows(r1.size(), std::vector<u64>(n_));
    for (std::size_t a = 0; a < r1.size(); ++a)
      for (std::size_t j = 0; j < n_; ++j) r1rows[a][j] = m_[j * n_ + r1[a]];
    const std::vector<std::size_t> c1 = col_basis_small(r1rows, p_);
    require(c1.size() == r1.size(), ErrorKind::internal_invariant, "phase 1: row and column basis sizes differ");
    stats_.r1 = r1.size();
    stats_.c1 = c1.size();
    std::vector<bool> in_c1(n_, false);
    for (std::size_t c : c1) in_c1[c] = true;
    for (std::size_t c : c1)
      if (!was_kernel[c] && !pc_in_r0[c]) ++stats_.kept_in_c1;

    if (trace_on_) {
      trace_.r0 = r0;
      trace_.r1 = r1;
      trace_.c1 = c1;
    }
    const ResidueMatrix d1 = invert_block(r1, c1);
    note_block_sparsity(d1);
    scale_columns(c1, d1);
    if (trace_on_) {
      trace_.d1 = embed_block(c1, d1);
      trace_.m_after_d1 = image_matrix();
    }
    eliminate_outside(r1, c1, in_c1, trace_on_ ? &trace_.e1 : nullptr);
    if (trace_on_) trace_.m_after_e1 = image_matrix();

    // Phase 2: columns that lost their pc, or left the kernel
    std::vector<std::size_t> c2_candidates;
    for (std::size_t j = 0; j < n_; ++j) {
      if (in_c1[j]) continue;
      if (pc_in_r0[j] || (was_kernel[j] && !column_zero(j))) c2_candidates.push_back(j);
    }
    stats_.c2_candidates = c2_candidates.size();
    std::vector<std::size_t> c2;
    {
      rank_detail::Echelon ech(n_, p_);
      std::vector<u64> col(n_);
      for (std::size_t j : c2_candidates) {
        std::copy(m_.begin() + static_cast<std::ptrdiff_t>(j * n_),
                  m_.begin() + static_cast<std::ptrdiff_t>((j + 1) * n_), col.begin());
        if (ech.insert(col)) c2.push_back(j);
      }
    }
    std::vector<std::size_t> r2;
    {
      rank_detail::Echelon ech(c2.size(), p_);
      std::vector<u64> row(c2.size());
      for (std::size_t i = 0; i < n_ && r2.size() < c2.size(); ++i) {
        bool nz = false;
        for (std::size_t b = 0; b < c2.size(); ++b) {
          row[b] = m_[c2[b] * n_ + i];
          nz = nz || row[b] != 0;
        }
        if (nz && ech.insert(row)) r2.push_back(i);
      }
    }
    require(r2.size() == c2.size(), ErrorKind::internal_invariant, "phase 2: row and column basis sizes differ");
    stats_.c2 = c2.size();
    stats_.r2 = r2.size();
    std::vector<bool> in_c2(n_, false);
    for (std::size_t c : c2) in_c2[c] = true;
    if (trace_on_) {
      trace_.c2_candidates = c2_candidates;
      trace_.c2 = c2;
      trace_.r2 = r2;
    }
    const ResidueMatrix d2 = invert_block(r2, c2);
    note_block_sparsity(d2);
    scale_columns(c2, d2);
    if (trace_on_) {
      trace_.d2 = embed_block(c2, d2);
      trace_.m_after_d2 = image_matrix();
    }
    eliminate_outside(r2, c2, in_c2, trace_on_ ? &trace_.e2 : nullptr);
    if (trace_on_) trace_.m_after_e2 = image_matrix();

    const long formula = static_cast<long>(pc_count_) + pc_count_delta(stats_);
    normalize();
    const std::size_t recount = count_pcs();
    stats_.pc_formula = static_cast<std::size_t>(formula);
    stats_.pc_recount = recount;
    require(formula == static_cast<long>(recount), ErrorKind::internal_invariant,
            "pc count formula " + std::to_string(formula) + " disagrees with recount " + std::to_string(recount));
    pc_count_ = recount;
  }

  /// Full invariant check; O(n^3). Throws internal_invariant on violation.
  void check_invariants() const {
    // M = A B
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        u64 s = 0;
        for (std::size_t k = 0; k < n_; ++k) s = add_mod(s, mul_mod(a_[i * n_ + k], b_[j * n_ + k], p_), p_);
        require(s == m_[j * n_ + i], ErrorKind::internal_invariant, "image matrix out of sync with A*B");
      }
    require(rank_mod_p(basis_matrix(), p_) == n_, ErrorKind::internal_invariant, "basis matrix is singular");
    for (std::size_t j = 0; j < n_; ++j) {
      if (pc_[j] == kNone) {
        require(column_zero(j), ErrorKind::internal_invariant, "kernel-flagged column has nonzero image");
        continue;
      }
      const std::size_t i = pc_[j];
      require(m_[j * n_ + i] != 0, ErrorKind::internal_invariant, "pc entry is zero");
      for (std::size_t k = 0; k < n_; ++k)
        require(k == j || m_[k * n_ + i] == 0, ErrorKind::internal_invariant, "pc row hit by another column");
      for (std::size_t i2 = 0; i2 < i; ++i2) {
        bool unique = m_[j * n_ + i2] != 0;
        for (std::size_t k = 0; k < n_ && unique; ++k) unique = k == j || m_[k * n_ + i2] == 0;
        require(!unique, ErrorKind::internal_invariant, "pc is not the minimal unique row");
      }
    }
    require(pc_count_ == n_ - kernel_columns(), ErrorKind::internal_invariant, "pc counter out of sync");
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  bool column_zero(std::size_t j) const {
    const u64* c = &m_[j * n_];
    return std::all_of(c, c + n_, [](u64 x) { return x == 0; });
  }

  // col_dst += f * col_src in both B and M
  void axpy_column(std::size_t dst, std::size_t src, u64 f) {
    if (f == 0) return;
    u64* bd = &b_[dst * n_];
    const u64* bs = &b_[src * n_];
    u64* md = &m_[dst * n_];
    const u64* ms = &m_[src * n_];
    for (std::size_t i = 0; i < n_; ++i) {
      if (bs[i] != 0) bd[i] = add_mod(bd[i], mul_mod(f, bs[i], p_), p_);
      if (ms[i] != 0) md[i] = add_mod(md[i], mul_mod(f, ms[i], p_), p_);
    }
  }

  // inverse of M[rows, cols] (square, invertible by construction)
  ResidueMatrix invert_block(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const {
    const std::size_t r = rows.size();
    ResidueMatrix aug(r, std::vector<u64>(2 * r, 0));
    for (std::size_t a = 0; a < r; ++a) {
      for (std::size_t b = 0; b < r; ++b) aug[a][b] = m_[cols[b] * n_ + rows[a]];
      aug[a][r + a] = 1;
    }
    for (std::size_t c = 0; c < r; ++c) {
      std::size_t piv = c;
      while (piv < r && aug[piv][c] == 0) ++piv;
      require(piv < r, ErrorKind::internal_invariant, "basis block is singular");
      std::swap(aug[c], aug[piv]);
      const u64 inv = mod_inverse(aug[c][c], p_);
      for (auto& x : aug[c]) x = mul_mod(x, inv, p_);
      for (std::size_t a = 0; a < r; ++a) {
        if (a == c || aug[a][c] == 0) continue;
        const u64 f = aug[a][c];
        for (std::size_t b = 0; b < 2 * r; ++b) aug[a][b] = sub_mod(aug[a][b], mul_mod(f, aug[c][b], p_), p_);
      }
    }
    ResidueMatrix inv(r, std::vector<u64>(r));
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b < r; ++b) inv[a][b] = aug[a][r + b];
    return inv;
  }

  // columns cols <- columns cols * x
  void scale_columns(const std::vector<std::size_t>& cols, const ResidueMatrix& x) {
    const std::size_t r = cols.size();
    if (r == 0) return;
    std::vector<u64> oldb(r * n_), oldm(r * n_);
    for (std::size_t a = 0; a < r; ++a) {
      std::copy_n(&b_[cols[a] * n_], n_, &oldb[a * n_]);
      std::copy_n(&m_[cols[a] * n_], n_, &oldm[a * n_]);
    }
    for (std::size_t b = 0; b < r; ++b) {
      u64* bd = &b_[cols[b] * n_];
      u64* md = &m_[cols[b] * n_];
      std::fill_n(bd, n_, 0);
      std::fill_n(md, n_, 0);
      for (std::size_t a = 0; a < r; ++a) {
        const u64 f = x[a][b];
        if (f == 0) continue;
        for (std::size_t i = 0; i < n_; ++i) {
          if (oldb[a * n_ + i] != 0) bd[i] = add_mod(bd[i], mul_mod(f, oldb[a * n_ + i], p_), p_);
          if (oldm[a * n_ + i] != 0) md[i] = add_mod(md[i], mul_mod(f, oldm[a * n_ + i], p_), p_);
        }
      }
    }
  }

  // For j outside cols: col_j <- col_j - sum_a col_{cols[a]} * M[rows[a], j].
  void eliminate_outside(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols,
                         const std::vector<bool>& in_cols, ResidueMatrix* dense) {
    const std::size_t r = rows.size();
    if (dense) {
      *dense = ResidueMatrix(n_, std::vector<u64>(n_, 0));
      for (std::size_t j = 0; j < n_; ++j) (*dense)[j][j] = 1;
    }
    if (r == 0) return;
    std::vector<std::size_t> src;
    std::vector<u64> f;
    for (std::size_t j = 0; j < n_; ++j) {
      if (in_cols[j]) continue;
      src.clear();
      f.clear();
      for (std::size_t a = 0; a < r; ++a) {
        const u64 c = m_[j * n_ + rows[a]];
        if (c == 0) continue;
        src.push_back(cols[a]);
        f.push_back(neg_mod(c, p_));
        if (dense) (*dense)[cols[a]][j] = f.back();
      }
      stats_.max_phase_col_nonzeros = std::max(stats_.max_phase_col_nonzeros, src.size() + 1);
      combine_into(j, src, f);
    }
  }

  // col_dst += sum_t f[t] * col_{src[t]} in both B and M, one reduction per
  // entry when the sum cannot overflow.
  void combine_into(std::size_t dst, const std::vector<std::size_t>& src, const std::vector<u64>& f) {
    if (src.empty()) return;
    const bool lazy = (p_ >> 30) == 0 && src.size() <= 15;
    if (!lazy) {
      for (std::size_t t = 0; t < src.size(); ++t) axpy_column(dst, src[t], f[t]);
      return;
    }
    for (std::vector<u64>* store : {&b_, &m_}) {
      u64* d = &(*store)[dst * n_];
      for (std::size_t i = 0; i < n_; ++i) {
        u64 acc = d[i];
        for (std::size_t t = 0; t < src.size(); ++t) acc += f[t] * (*store)[src[t] * n_ + i];
        d[i] = acc % p_;
      }
    }
  }

  void note_block_sparsity(const ResidueMatrix& x) {
    for (std::size_t b = 0; b < x.size(); ++b) {
      std::size_t nz = 0;
      for (const auto& row : x) nz += row[b] != 0 ? 1 : 0;
      stats_.max_phase_col_nonzeros = std::max(stats_.max_phase_col_nonzeros, nz);
    }
  }

  ResidueMatrix embed_block(const std::vector<std::size_t>& cols, const ResidueMatrix& x) const {
    const std::size_t r = cols.size();
    ResidueMatrix zero12(r, std::vector<u64>(n_ - r, 0));
    ResidueMatrix zero21(n_ - r, std::vector<u64>(r, 0));
    ResidueMatrix eye(n_ - r, std::vector<u64>(n_ - r, 0));
    for (std::size_t i = 0; i < n_ - r; ++i) eye[i][i] = 1;
    return combine_blocks(x, zero12, zero21, eye, cols, cols, n_);
  }

  void record_identity_trace() {
    ResidueMatrix eye(n_, std::vector<u64>(n_, 0));
    for (std::size_t i = 0; i < n_; ++i) eye[i][i] = 1;
    trace_.d1 = trace_.e1 = trace_.d2 = trace_.e2 = eye;
    trace_.m_after_d1 = trace_.m_after_e1 = trace_.m_after_d2 = trace_.m_after_e2 = image_matrix();
  }

  // pc = minimal unique row for every column; kernel flag otherwise.
  void normalize() {
    std::fill(rowcnt_.begin(), rowcnt_.end(), 0);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < n_; ++i)
        if (m_[j * n_ + i] != 0) ++rowcnt_[i];
    for (std::size_t j = 0; j < n_; ++j) {
      pc_[j] = kNone;
      bool nonzero = false;
      for (std::size_t i = 0; i < n_; ++i) {
        if (m_[j * n_ + i] == 0) continue;
        nonzero = true;
        if (rowcnt_[i] == 1) {
          pc_[j] = i;
          break;
        }
      }
      require(!nonzero || pc_[j] != kNone, ErrorKind::internal_invariant,
              "column " + std::to_string(j) + " is neither in the kernel nor unique on any row");
    }
  }

  std::size_t count_pcs() const { return n_ - kernel_columns(); }

  std::size_t n_;
  u64 p_;
  std::size_t cap_;
  std::vector<u64> a_;   // row-major
  std::vector<u64> b_;   // column-major
  std::vector<u64> m_;   // column-major, M = A B
  std::vector<std::size_t> pc_;
  std::vector<std::size_t> rowcnt_;
  std::size_t pc_count_ = 0;
  BatchStats stats_;
  bool trace_on_ = false;
  PhaseTrace trace_;
};

inline AGoodState init_agood(const ResidueMatrix& a, FieldPrime p, std::size_t batch_cap = kDefaultRankBatchCap) {
  AGoodState s(a.size(), p, batch_cap);
  s.load(a);
  return s;
}

inline void apply_entry_batch(AGoodState& s, const EntryBatch& batch) { s.apply(batch); }

inline std::size_t rank(const AGoodState& s) { return s.rank(); }

/// Splits a batch into pieces each touching at most `cap` rows and columns.
/// Later assignments to the same cell stay in order.
inline std::vector<EntryBatch> split_batch(const EntryBatch& batch, std::size_t cap) {
  std::vector<EntryBatch> out;
  EntryBatch cur;
  std::vector<std::size_t> rows, cols;
  auto touches = [](std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (const auto& u : batch) {
    const std::size_t nr = rows.size() + (touches(rows, u.row) ? 0 : 1);
    const std::size_t nc = cols.size() + (touches(cols, u.col) ? 0 : 1);
    if (nr > cap || nc > cap) {
      out.push_back(std::move(cur));
      cur.clear();
      rows.clear();
      cols.clear();
    }
    if (!touches(rows, u.row)) rows.push_back(u.row);
    if (!touches(cols, u.col)) cols.push_back(u.col);
    cur.push_back(u);
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct RationalRank {
  std::size_t rank = 0;
  bool exact = false;
  u64 witness_prime = 0;
};

/// Max over the pool of rank mod p. Exact when the pool's product exceeds
/// n! * N^n, the largest possible nonzero minor.
inline RationalRank rank_over_Q(const std::vector<std::vector<i64>>& a, const std::vector<u64>& pool) {
  require(!pool.empty(), ErrorKind::parameter, "rank_over_Q: empty prime pool");
  const std::size_t n = a.size();
  u64 max_entry = 1;
  for (const auto& row : a)
    for (i64 v : row) max_entry = std::max<u64>(max_entry, static_cast<u64>(v < 0 ? -v : v));
  double bound_bits = static_cast<double>(n) * std::log2(static_cast<double>(max_entry));
  for (std::size_t i = 2; i <= n; ++i) bound_bits += std::log2(static_cast<double>(i));
  double pool_bits = 0;
  RationalRank out;
  for (u64 p : pool) {
    FieldPrime fp(p);
    pool_bits += std::log2(static_cast<double>(p));
    ResidueMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (i64 v : a[i]) m[i].push_back(reduce_signed(v, fp));
    const std::size_t r = rank_mod_p(std::move(m), fp);
    if (r > out.rank || out.witness_prime == 0) {
      out.witness_prime = p;
      out.rank = r;
    }
  }
  out.exact = pool_bits > bound_bits;
  return out;
}

}  // namespace dyniso
