#pragma once

// Brute-force reference implementations. Nothing here calls into the engine
// headers beyond fieldcore scalars and the plain container types, so a bug in
// an engine cannot hide behind the same bug in its oracle.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dyniso/error.hpp"
#include "dyniso/fieldcore.hpp"
#include "dyniso/graph.hpp"
#include "dyniso/polyseries.hpp"

namespace dyniso::oracle {

// ---- GF(2) series, one byte per coefficient ----

using NaivePoly = std::vector<std::uint8_t>;
using NaiveMatrix = std::vector<std::vector<NaivePoly>>;

inline NaivePoly naive_from(const TruncPoly& p) {
  NaivePoly out(p.m() + 1, 0);
  for (std::size_t i = 0; i <= p.m(); ++i) out[i] = p.coeff(i) ? 1 : 0;
  return out;
}

inline TruncPoly naive_to(const NaivePoly& p) {
  TruncPoly out(p.size() - 1);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i]) out.set(i, true);
  return out;
}

inline NaivePoly naive_mul(const NaivePoly& a, const NaivePoly& b) {
  NaivePoly out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (std::size_t j = 0; i + j < out.size() && j < b.size(); ++j) out[i + j] ^= b[j];
  }
  return out;
}

inline void naive_add(NaivePoly& a, const NaivePoly& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

inline NaiveMatrix naive_from(const PolyMatrix& m) {
  NaiveMatrix out(m.rows(), std::vector<NaivePoly>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = naive_from(m(i, j));
  return out;
}

inline PolyMatrix naive_to(const NaiveMatrix& m, std::size_t trunc) {
  PolyMatrix out(m.size(), m.empty() ? 0 : m[0].size(), trunc);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = naive_to(m[i][j]);
  return out;
}

inline NaiveMatrix naive_matmul(const NaiveMatrix& a, const NaiveMatrix& b, std::size_t trunc) {
  const std::size_t r = a.size(), k = b.size(), c = b.empty() ? 0 : b[0].size();
  NaiveMatrix out(r, std::vector<NaivePoly>(c, NaivePoly(trunc + 1, 0)));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t j = 0; j < c; ++j) naive_add(out[i][j], naive_mul(a[i][t], b[t][j]));
  return out;
}

/// Sum_{i=0..m} A^i truncated at m; this is (I - A)^-1 when A has zero
/// constant term.
inline PolyMatrix oracle_series_inverse(const PolyMatrix& a, std::size_t m) {
  const std::size_t n = a.rows();
  const NaiveMatrix na = naive_from(a.m() == m ? a : PolyMatrix(n, n, m));
  NaiveMatrix acc(n, std::vector<NaivePoly>(n, NaivePoly(m + 1, 0)));
  NaiveMatrix power = acc;
  for (std::size_t i = 0; i < n; ++i) power[i][i][0] = 1;
  for (std::size_t k = 0; k <= m; ++k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) naive_add(acc[i][j], power[i][j]);
    power = naive_matmul(power, na, m);
  }
  return naive_to(acc, m);
}

/// Inverse of any matrix with invertible constant term: A^-1 = S (A0^-1) with
/// S the series of I - A0^-1 A.
inline PolyMatrix oracle_inverse(const PolyMatrix& a) {
  const std::size_t n = a.rows(), m = a.m();
  // constant-term inverse over GF(2), Gauss-Jordan on bytes
  std::vector<std::vector<std::uint8_t>> aug(n, std::vector<std::uint8_t>(2 * n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug[i][j] = a(i, j).coeff(0) ? 1 : 0;
    aug[i][n + i] = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && !aug[piv][c]) ++piv;
    if (piv == n) fail(ErrorKind::singular, "oracle_inverse: constant term singular");
    std::swap(aug[c], aug[piv]);
    for (std::size_t r = 0; r < n; ++r)
      if (r != c && aug[r][c])
        for (std::size_t j = 0; j < 2 * n; ++j) aug[r][j] ^= aug[c][j];
  }
  NaiveMatrix inv0(n, std::vector<NaivePoly>(n, NaivePoly(m + 1, 0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) inv0[i][j][0] = aug[i][n + j];
  NaiveMatrix t = naive_matmul(inv0, naive_from(a), m);
  for (std::size_t i = 0; i < n; ++i) t[i][i][0] ^= 1;  // I - A0^-1 A
  const PolyMatrix series = oracle_series_inverse(naive_to(t, m), m);
  return naive_to(naive_matmul(naive_from(series), inv0, m), m);
}

/// Determinant by expansion over column subsets (no signs in characteristic 2).
inline TruncPoly oracle_det(const PolyMatrix& a) {
  const std::size_t n = a.rows(), m = a.m();
  require(n <= 16, ErrorKind::oracle_scale, "oracle_det: n over 16");
  const NaiveMatrix na = naive_from(a);
  // dp[mask]: determinant of rows [0, popcount(mask)) restricted to columns mask
  std::vector<NaivePoly> dp(std::size_t{1} << n, NaivePoly(m + 1, 0));
  dp[0][0] = 1;
  for (std::size_t mask = 0; mask < dp.size(); ++mask) {
    const auto row = static_cast<std::size_t>(std::popcount(mask));
    if (row >= n) continue;
    bool zero = true;
    for (auto c : dp[mask]) zero = zero && c == 0;
    if (zero) continue;
    for (std::size_t c = 0; c < n; ++c)
      if (!(mask >> c & 1U)) naive_add(dp[mask | (std::size_t{1} << c)], naive_mul(dp[mask], na[row][c]));
  }
  return naive_to(dp.back());
}

// ---- rank ----

/// Rank over Z_p by Gaussian elimination.
inline std::size_t oracle_rank_mod(std::vector<std::vector<u64>> a, u64 p) {
  std::size_t rank = 0;
  const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && a[piv][c] % p == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[rank], a[piv]);
    const u64 inv = mod_inverse(a[rank][c] % p, p);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const u64 f = mul_mod(a[r][c] % p, inv, p);
      if (f == 0) continue;
      for (std::size_t j = c; j < cols; ++j) a[r][j] = sub_mod(a[r][j] % p, mul_mod(f, a[rank][j] % p, p), p);
    }
    ++rank;
  }
  return rank;
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
inline std::size_t oracle_rank_rational(const std::vector<std::vector<i64>>& in) {
  using boost::multiprecision::cpp_int;
  const std::size_t rows = in.size(), cols = rows ? in[0].size() : 0;
  require(rows <= 64 && cols <= 64, ErrorKind::oracle_scale, "oracle_rank_rational: over 64");
  std::vector<std::vector<cpp_int>> a(rows, std::vector<cpp_int>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) a[i][j] = in[i][j];
  cpp_int prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && a[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(a[rank], a[piv]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      for (std::size_t j = c + 1; j < cols; ++j) a[r][j] = (a[rank][c] * a[r][j] - a[r][c] * a[rank][j]) / prev;
      a[r][c] = 0;
    }
    prev = a[rank][c];
    ++rank;
  }
  return rank;
}

// ---- paths ----

inline constexpr std::uint64_t kInfinity = std::numeric_limits<std::uint64_t>::max();

/// Dijkstra from s; kInfinity when unreachable.
inline std::vector<std::uint64_t> oracle_dist_from(const Graph& g, std::size_t s) {
  const auto adj = g.adjacency();
  std::vector<std::uint64_t> dist(g.n(), kInfinity);
  using Item = std::pair<std::uint64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0;
  pq.push({0, s});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d != dist[u]) continue;
    for (auto [v, len] : adj[u])
      if (d + len < dist[v]) {
        dist[v] = d + len;
        pq.push({dist[v], v});
      }
  }
  return dist;
}

inline std::uint64_t oracle_dist(const Graph& g, std::size_t s, std::size_t t) { return oracle_dist_from(g, s)[t]; }

inline std::vector<std::vector<std::uint64_t>> oracle_floyd_warshall(const Graph& g) {
  const std::size_t n = g.n();
  std::vector<std::vector<std::uint64_t>> d(n, std::vector<std::uint64_t>(n, kInfinity));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [e, len] : g.edges()) {
    d[e.u][e.v] = std::min(d[e.u][e.v], len);
    if (!g.directed()) d[e.v][e.u] = std::min(d[e.v][e.u], len);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] != kInfinity && d[k][j] != kInfinity) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// Iterative DFS reachability.
inline bool oracle_reach(const Graph& g, std::size_t s, std::size_t t) {
  const auto adj = g.adjacency();
  std::vector<bool> seen(g.n(), false);
  std::vector<std::size_t> stack{s};
  seen[s] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (u == t) return true;
    for (auto [v, len] : adj[u]) {
      (void)len;
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return false;
}

/// True iff `path` is a walk of present edges from s to t with the given total length.
inline bool oracle_check_path(const Graph& g, std::size_t s, std::size_t t, const std::vector<Edge>& path,
                              std::uint64_t expected_length) {
  std::size_t at = s;
  std::uint64_t total = 0;
  for (const Edge& e : path) {
    if (e.u != at || !g.has(e.u, e.v)) return false;
    total += g.length(e.u, e.v);
    at = e.v;
  }
  return at == t && total == expected_length;
}

// ---- matchings ----

/// Maximum matching size by repeated augmenting-path search.
inline std::size_t oracle_mcm(const BipartiteGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.left());
  for (const auto& e : g.edges()) adj[e.u].push_back(e.v);
  std::vector<std::size_t> match_r(g.right(), g.left());
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t l, std::vector<bool>& seen) {
    for (std::size_t r : adj[l]) {
      if (seen[r]) continue;
      seen[r] = true;
      if (match_r[r] == g.left() || augment(match_r[r], seen)) {
        match_r[r] = l;
        return true;
      }
    }
    return false;
  };
  std::size_t size = 0;
  for (std::size_t l = 0; l < g.left(); ++l) {
    std::vector<bool> seen(g.right(), false);
    if (augment(l, seen)) ++size;
  }
  return size;
}

inline bool oracle_is_matching(const BipartiteGraph& g, const std::vector<Edge>& m) {
  std::vector<bool> usedl(g.left(), false), usedr(g.right(), false);
  for (const auto& e : m) {
    if (e.u >= g.left() || e.v >= g.right() || !g.has(e.u, e.v)) return false;
    if (usedl[e.u] || usedr[e.v]) return false;
    usedl[e.u] = usedr[e.v] = true;
  }
  return true;
}

struct WeightedMatching {
  std::vector<Edge> edges;
  std::uint64_t weight = 0;
};

inline constexpr std::size_t kEnumerationVertexCap = 12;

/// All matchings of g (each is a generalized perfect matching of the
/// pendant-augmented graph). Weights are summed over edges by edge index.
inline std::vector<WeightedMatching> oracle_enumerate_matchings(const BipartiteGraph& g,
                                                                const std::vector<std::uint64_t>& w) {
  require(g.left() + g.right() <= kEnumerationVertexCap, ErrorKind::oracle_scale, "enumeration over vertex cap");
  require(w.size() == g.edge_count(), ErrorKind::contract, "one weight per edge required");
  std::vector<WeightedMatching> out;
  WeightedMatching cur;
  std::vector<bool> usedl(g.left(), false), usedr(g.right(), false);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == g.edge_count()) {
      out.push_back(cur);
      return;
    }
    rec(i + 1);
    const Edge& e = g.edges()[i];
    if (usedl[e.u] || usedr[e.v]) return;
    usedl[e.u] = usedr[e.v] = true;
    cur.edges.push_back(e);
    cur.weight += w[i];
    rec(i + 1);
    cur.weight -= w[i];
    cur.edges.pop_back();
    usedl[e.u] = usedr[e.v] = false;
  };
  rec(0);
  return out;
}

/// Perfect matchings only (requires left() == right()).
inline std::vector<WeightedMatching> oracle_enumerate_pms(const BipartiteGraph& g, const std::vector<std::uint64_t>& w) {
  std::vector<WeightedMatching> out;
  if (g.left() != g.right()) return out;
  for (auto& m : oracle_enumerate_matchings(g, w))
    if (m.edges.size() == g.left()) out.push_back(std::move(m));
  return out;
}

}  // namespace dyniso::oracle
