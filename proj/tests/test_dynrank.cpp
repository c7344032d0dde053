#include <gtest/gtest.h>

#include <random>

#include "dyniso/dynrank.hpp"
#include "dyniso/oracles.hpp"

using namespace dyniso;

namespace {

ResidueMatrix zeros(std::size_t n) { return ResidueMatrix(n, std::vector<u64>(n, 0)); }

ResidueMatrix identity(std::size_t n) {
  auto m = zeros(n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

ResidueMatrix matmul(const ResidueMatrix& a, const ResidueMatrix& b, u64 p) {
  const std::size_t n = a.size();
  auto out = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) out[i][j] = (out[i][j] + a[i][k] * b[k][j]) % p;
  return out;
}

EntryBatch random_batch(std::mt19937_64& rng, std::size_t n, u64 p, std::size_t max_size, double zero_bias = 0.4) {
  EntryBatch b;
  const std::size_t size = 1 + rng() % max_size;
  std::bernoulli_distribution zero(zero_bias);
  for (std::size_t t = 0; t < size; ++t) b.push_back({rng() % n, rng() % n, zero(rng) ? 0 : rng() % p});
  return b;
}

// low-rank random start so kernels are nontrivial
ResidueMatrix random_low_rank(std::mt19937_64& rng, std::size_t n, u64 p, std::size_t r) {
  ResidueMatrix u(n, std::vector<u64>(r)), v(r, std::vector<u64>(n));
  for (auto& row : u)
    for (auto& x : row) x = rng() % p;
  for (auto& row : v)
    for (auto& x : row) x = rng() % p;
  auto out = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t j = 0; j < n; ++j) out[i][j] = (out[i][j] + u[i][k] * v[k][j]) % p;
  return out;
}

}  // namespace

TEST(InitAGood, Examples) {
  auto z = init_agood(zeros(3), FieldPrime(5));
  EXPECT_EQ(z.rank(), 0U);
  EXPECT_EQ(z.basis_matrix(), identity(3));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(z.in_kernel(j));

  auto i3 = init_agood(identity(3), FieldPrime(5));
  EXPECT_EQ(i3.rank(), 3U);
  EXPECT_EQ(i3.basis_matrix(), identity(3));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(*i3.pc(j), j);

  auto two = init_agood({{1, 2}, {2, 4}}, FieldPrime(5));
  EXPECT_EQ(two.rank(), 1U);
  EXPECT_NO_THROW(two.check_invariants());
}

TEST(InitAGood, RandomMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng() % 10;
    const u64 p = (t % 2) ? 7 : 1009;
    const auto a = random_low_rank(rng, n, p, rng() % (n + 1));
    auto s = init_agood(a, FieldPrime(p));
    EXPECT_NO_THROW(s.check_invariants());
    EXPECT_EQ(s.rank(), oracle::oracle_rank_mod(a, p));
  }
}

TEST(ApplyBatch, Examples) {
  auto s = init_agood(zeros(3), FieldPrime(5));
  s.apply({{0, 0, 1}});
  EXPECT_EQ(s.rank(), 1U);
  s.apply({{1, 2, 3}, {2, 1, 4}});
  EXPECT_EQ(s.rank(), 3U);
  s.apply({{1, 2, 0}, {2, 1, 0}});
  EXPECT_EQ(s.rank(), 1U);
  s.apply({});
  EXPECT_EQ(s.rank(), 1U);
  s.check_invariants();
}

TEST(ApplyBatch, RepeatedCellLastWins) {
  auto s = init_agood(zeros(2), FieldPrime(7));
  s.apply({{0, 0, 3}, {0, 0, 0}});
  EXPECT_EQ(s.a(0, 0), 0U);
  EXPECT_EQ(s.rank(), 0U);
  s.check_invariants();
}

TEST(ApplyBatch, OverCap) {
  auto s = init_agood(zeros(6), FieldPrime(7), 2);
  try {
    s.apply({{0, 0, 1}, {1, 1, 1}, {2, 2, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::batch_too_large);
  }
  const auto pieces = split_batch({{0, 0, 1}, {1, 1, 1}, {2, 2, 1}}, 2);
  ASSERT_EQ(pieces.size(), 2U);
  for (const auto& b : pieces) s.apply(b);
  EXPECT_EQ(s.rank(), 3U);
}

TEST(ApplyBatch, RandomSixBySixModSeven) {
  std::mt19937_64 rng(2);
  auto s = init_agood(zeros(6), FieldPrime(7));
  auto a = zeros(6);
  for (int step = 0; step < 200; ++step) {
    const auto batch = random_batch(rng, 6, 7, 2);
    for (const auto& u : batch) a[u.row][u.col] = u.value;
    s.apply(batch);
    ASSERT_EQ(s.rank(), oracle::oracle_rank_mod(a, 7)) << "step " << step;
    ASSERT_EQ(s.a_matrix(), a);
  }
  s.check_invariants();
}

TEST(ApplyBatch, InvariantsAcrossPrimesAndSizes) {
  std::mt19937_64 rng(3);
  for (u64 p : {5ULL, 97ULL, 1009ULL})
    for (std::size_t n : {3, 8, 16}) {
      auto a = random_low_rank(rng, n, p, n / 2);
      auto s = init_agood(a, FieldPrime(p));
      for (int step = 0; step < 150; ++step) {
        const auto batch = random_batch(rng, n, p, 4);
        for (const auto& u : batch) a[u.row][u.col] = u.value;
        s.apply(batch);
        ASSERT_NO_THROW(s.check_invariants());
        ASSERT_EQ(s.rank(), oracle::oracle_rank_mod(a, p));
        const auto& st = s.last_stats();
        EXPECT_EQ(st.pc_formula, st.pc_recount);
        EXPECT_EQ(s.rank(), n - s.kernel_columns());
      }
    }
}

TEST(ApplyBatch, RevertRestoresRank) {
  std::mt19937_64 rng(4);
  auto a = random_low_rank(rng, 8, 97, 3);
  auto s = init_agood(a, FieldPrime(97));
  for (int t = 0; t < 40; ++t) {
    const std::size_t before = s.rank();
    const auto batch = random_batch(rng, 8, 97, 3);
    EntryBatch revert;
    for (const auto& u : batch) revert.push_back({u.row, u.col, s.a(u.row, u.col)});
    std::reverse(revert.begin(), revert.end());
    s.apply(batch);
    s.apply(revert);
    EXPECT_EQ(s.rank(), before);
  }
}

TEST(PhaseTrace, PostconditionsAndProduct) {
  std::mt19937_64 rng(5);
  const u64 p = 97;
  std::size_t worst_sparsity = 0;
  for (std::size_t n : {4, 7, 12}) {
    auto a = random_low_rank(rng, n, p, n / 2);
    auto s = init_agood(a, FieldPrime(p));
    s.set_trace(true);
    for (int step = 0; step < 120; ++step) {
      const auto b_old = s.basis_matrix();
      const auto batch = random_batch(rng, n, p, 4);
      s.apply(batch);
      const auto& tr = s.last_trace();
      auto prod = matmul(matmul(matmul(matmul(b_old, tr.d1, p), tr.e1, p), tr.d2, p), tr.e2, p);
      ASSERT_EQ(prod, s.basis_matrix());
      for (std::size_t a1 = 0; a1 < tr.r1.size(); ++a1) {
        for (std::size_t b1 = 0; b1 < tr.c1.size(); ++b1)
          EXPECT_EQ(tr.m_after_d1[tr.r1[a1]][tr.c1[b1]], a1 == b1 ? 1U : 0U);
        for (std::size_t j = 0; j < n; ++j)
          if (std::find(tr.c1.begin(), tr.c1.end(), j) == tr.c1.end()) {
            EXPECT_EQ(tr.m_after_e1[tr.r1[a1]][j], 0U);
          }
      }
      // after phase 2: R1+R2 against C1+C2 is the identity
      std::vector<std::size_t> rr = tr.r1, cc = tr.c1;
      rr.insert(rr.end(), tr.r2.begin(), tr.r2.end());
      cc.insert(cc.end(), tr.c2.begin(), tr.c2.end());
      for (std::size_t x = 0; x < rr.size(); ++x)
        for (std::size_t y = 0; y < cc.size(); ++y) EXPECT_EQ(tr.m_after_e2[rr[x]][cc[y]], x == y ? 1U : 0U);
      for (std::size_t r : tr.r1)
        for (std::size_t j = 0; j < n; ++j)
          if (std::find(tr.c1.begin(), tr.c1.end(), j) == tr.c1.end()) {
            EXPECT_EQ(tr.m_after_e2[r][j], 0U);
          }
      for (std::size_t j : tr.c2_candidates)
        if (std::find(tr.c2.begin(), tr.c2.end(), j) == tr.c2.end()) {
          for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(tr.m_after_e2[i][j], 0U);
        }
      for (std::size_t r : tr.r1) EXPECT_EQ(std::count(tr.r2.begin(), tr.r2.end(), r), 0);
      for (std::size_t c : tr.c1) EXPECT_EQ(std::count(tr.c2_candidates.begin(), tr.c2_candidates.end(), c), 0);
      // per-column nonzeros of the four phase matrices
      for (const auto* d : {&tr.d1, &tr.e1, &tr.d2, &tr.e2})
        for (std::size_t j = 0; j < n; ++j) {
          std::size_t nz = 0;
          for (std::size_t i = 0; i < n; ++i) nz += (*d)[i][j] != 0;
          worst_sparsity = std::max(worst_sparsity, nz);
        }
      EXPECT_LE(s.last_stats().max_phase_col_nonzeros, 2 * s.last_stats().r0 + 1);
    }
  }
  RecordProperty("worst_phase_column_nonzeros", static_cast<int>(worst_sparsity));
  std::printf("worst phase column nonzeros with batch rows <= 4: %zu\n", worst_sparsity);
}

TEST(RowBasis, Examples) {
  EXPECT_EQ(row_basis_small({{1, 2}, {2, 4}}, 5), (std::vector<std::size_t>{0}));
  EXPECT_TRUE(row_basis_small({{0, 0}, {0, 0}}, 5).empty());
  EXPECT_EQ(row_basis_small(identity(3), 5), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(RowBasis, ExhaustiveAgreesWithElimination) {
  std::mt19937_64 rng(6);
  for (u64 q : {2ULL, 3ULL, 5ULL, 7ULL})
    for (int t = 0; t < 100; ++t) {
      const std::size_t k = 1 + rng() % 4, n = 1 + rng() % 6;
      ResidueMatrix m(k, std::vector<u64>(n));
      for (auto& row : m)
        for (auto& x : row) x = rng() % 3 == 0 ? 0 : rng() % q;
      if (k > 1 && rng() % 2) m[k - 1] = m[0];
      EXPECT_EQ(row_basis_small(m, q, BasisMode::exhaustive), row_basis_small(m, q));
    }
  EXPECT_THROW(row_basis_small(ResidueMatrix(5, std::vector<u64>(2, 1)), 3, BasisMode::exhaustive), Error);
}

TEST(ColBasis, Examples) {
  EXPECT_EQ(col_basis_small({{1, 2}}, 5), (std::vector<std::size_t>{0}));
  EXPECT_EQ(col_basis_small({{0, 1}}, 5), (std::vector<std::size_t>{1}));
  EXPECT_EQ(col_basis_small({{1, 2, 3}, {0, 1, 1}}, 5), (std::vector<std::size_t>{0, 1}));
}

TEST(ColBasis, PrefixRankDefinition) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng() % 4, n = 1 + rng() % 8;
    ResidueMatrix m(k, std::vector<u64>(n));
    for (auto& row : m)
      for (auto& x : row) x = rng() % 2 ? 0 : rng() % 7;
    std::vector<std::size_t> expected;
    std::size_t prev = 0;
    for (std::size_t j = 0; j < n; ++j) {
      ResidueMatrix prefix(k);
      for (std::size_t i = 0; i < k; ++i) prefix[i].assign(m[i].begin(), m[i].begin() + static_cast<long>(j + 1));
      const std::size_t r = oracle::oracle_rank_mod(prefix, 7);
      if (r > prev) expected.push_back(j);
      prev = r;
    }
    EXPECT_EQ(col_basis_small(m, 7), expected);
  }
}

TEST(SmallPrime, Examples) {
  EXPECT_EQ(select_small_prime({{0, 0}}, 97), 2U);
  EXPECT_EQ(select_small_prime({{1, 2}, {2, 4}}, 5), 2U);
  // determinant 6: singular mod 2 and 3, not mod 97
  EXPECT_EQ(select_small_prime({{2, 0}, {0, 3}}, 97), 5U);
}

TEST(CombineBlocks, Examples) {
  EXPECT_EQ(combine_blocks({{1}}, {{2}}, {{3}}, {{4}}, {0}, {0}, 2), (ResidueMatrix{{1, 2}, {3, 4}}));
  const ResidueMatrix x22{{5, 6}, {7, 8}};
  EXPECT_EQ(combine_blocks({}, {}, {}, x22, {}, {}, 2), x22);
  std::mt19937_64 rng(8);
  const std::vector<std::size_t> r{1, 3}, c{0, 2};
  auto rnd = [&](std::size_t a, std::size_t b) {
    ResidueMatrix m(a, std::vector<u64>(b));
    for (auto& row : m)
      for (auto& x : row) x = rng() % 100;
    return m;
  };
  const auto x11 = rnd(2, 2), x12 = rnd(2, 2), x21 = rnd(2, 2), y22 = rnd(2, 2);
  const auto y = combine_blocks(x11, x12, x21, y22, r, c, 4);
  const std::vector<std::size_t> rbar{0, 2}, cbar{1, 3};
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      EXPECT_EQ(y[r[a]][c[b]], x11[a][b]);
      EXPECT_EQ(y[r[a]][cbar[b]], x12[a][b]);
      EXPECT_EQ(y[rbar[a]][c[b]], x21[a][b]);
      EXPECT_EQ(y[rbar[a]][cbar[b]], y22[a][b]);
    }
  EXPECT_THROW(combine_blocks({{1, 2}}, {{2}}, {{3}}, {{4}}, {0}, {0}, 2), Error);
}

TEST(PcCountDelta, Examples) {
  BatchStats none;
  EXPECT_EQ(pc_count_delta(none), 0);
  BatchStats lost;
  lost.lost_pc = 1;
  EXPECT_EQ(pc_count_delta(lost), -1);
}

TEST(RankOverQ, Examples) {
  const std::vector<std::vector<i64>> i3{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (u64 p : {2ULL, 3ULL, 1009ULL}) EXPECT_EQ(rank_over_Q(i3, {p}).rank, 3U);
  EXPECT_EQ(rank_over_Q({{2, 4}, {1, 2}}, {2, 3, 5}).rank, 1U);
  const auto r = rank_over_Q({{2, 0}, {0, 3}}, {2, 3, 5});
  EXPECT_EQ(r.rank, 2U);
  EXPECT_EQ(r.witness_prime, 5U);
  EXPECT_EQ(oracle::oracle_rank_rational({{2, 0}, {0, 3}}), 2U);
}

TEST(RankOverQ, ExactFlagAndOracle) {
  std::mt19937_64 rng(9);
  const std::vector<u64> pool{1000003, 999983, 65537};
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<std::vector<i64>> a(n, std::vector<i64>(n));
    for (auto& row : a)
      for (auto& x : row) x = static_cast<i64>(rng() % 21) - 10;
    if (n > 1) a[n - 1] = a[0];
    const auto r = rank_over_Q(a, pool);
    EXPECT_TRUE(r.exact);
    EXPECT_EQ(r.rank, oracle::oracle_rank_rational(a));
  }
  EXPECT_FALSE(rank_over_Q({{1000, 0, 0}, {0, 1000, 0}, {0, 0, 1000}}, {2}).exact);
}

TEST(Oracles, RankExamples) {
  EXPECT_EQ(oracle::oracle_rank_mod(identity(3), 7), 3U);
  EXPECT_EQ(oracle::oracle_rank_mod(zeros(3), 7), 0U);
  EXPECT_EQ(oracle::oracle_rank_mod({{1, 2}, {2, 4}}, 5), 1U);
  EXPECT_EQ(oracle::oracle_rank_rational({{1, 2}, {2, 4}}), 1U);
}
