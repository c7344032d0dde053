#pragma once

// Weight synthesis: skew circulations, prime-residue families for newly
// inserted edges, mixed-radix field concatenation and isolation checks.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dyniso/error.hpp"
#include "dyniso/fieldcore.hpp"
#include "dyniso/graph.hpp"
#include "dyniso/oracles.hpp"

namespace dyniso {

/// Edge -> nonnegative weight; edges not present weigh 0.
struct WeightAssignment {
  std::map<Edge, u64> weight;
  u64 max_weight = 0;

  u64 at(const Edge& e) const {
    auto it = weight.find(e);
    return it == weight.end() ? 0 : it->second;
  }
  void set(const Edge& e, u64 w) {
    weight[e] = w;
    max_weight = std::max(max_weight, w);
  }
  friend bool operator==(const WeightAssignment&, const WeightAssignment&) = default;
};

/// Signed value per oriented edge of a multigraph. Traversing edge i from
/// edges[i].u to edges[i].v adds value[i]; the reverse traversal subtracts it.
struct SkewWeights {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<i64> value;
  bool verified = false;

  i64 bound() const {
    i64 b = 0;
    for (i64 v : value) b = std::max(b, v < 0 ? -v : v);
    return b;
  }
  i64 at(const Edge& e) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i] == e) return value[i];
    return 0;
  }
};

inline constexpr std::size_t kCirculationVertexCap = 12;

namespace detail {

// Calls visit(sum) for every simple cycle with at least two distinct edges,
// each cycle once per direction. Stops when visit returns false.
inline bool for_each_cycle_sum(const SkewWeights& w, const std::function<bool(i64)>& visit) {
  const std::size_t n = w.n;
  struct Arc {
    std::size_t to, edge;
    i64 sign;
  };
  std::vector<std::vector<Arc>> adj(n);
  for (std::size_t i = 0; i < w.edges.size(); ++i) {
    const Edge& e = w.edges[i];
    if (e.u == e.v) continue;
    adj[e.u].push_back({e.v, i, +1});
    adj[e.v].push_back({e.u, i, -1});
  }
  std::vector<bool> on_path(n, false);
  bool keep_going = true;
  for (std::size_t s = 0; s < n && keep_going; ++s) {
    // cycles whose smallest vertex is s
    std::function<void(std::size_t, std::size_t, i64, std::size_t)> dfs = [&](std::size_t at, std::size_t via,
                                                                               i64 sum, std::size_t len) {
      for (const Arc& a : adj[at]) {
        if (!keep_going) return;
        if (a.edge == via || a.to < s) continue;
        const i64 next = sum + a.sign * w.value[a.edge];
        if (a.to == s) {
          if (len + 1 >= 2 && !visit(next)) keep_going = false;
          continue;
        }
        if (on_path[a.to]) continue;
        on_path[a.to] = true;
        dfs(a.to, a.edge, next, len + 1);
        on_path[a.to] = false;
      }
    };
    on_path[s] = true;
    dfs(s, w.edges.size(), 0, 0);
    on_path[s] = false;
  }
  return keep_going;
}

}  // namespace detail

/// True iff every simple cycle of the underlying multigraph has a nonzero
/// signed sum. Exhaustive; capped at kCirculationVertexCap vertices.
inline bool verify_nonzero_circulation(const SkewWeights& w) {
  require(w.n <= kCirculationVertexCap, ErrorKind::oracle_scale,
          "circulation check over " + std::to_string(kCirculationVertexCap) + " vertices");
  require(w.value.size() == w.edges.size(), ErrorKind::contract, "one value per edge required");
  return detail::for_each_cycle_sum(w, [](i64 sum) { return sum != 0; });
}

inline constexpr int kCirculationAttempts = 64;

/// Random values in [-bound, bound], resampled until the circulation check
/// passes.
inline SkewWeights circulation_search(std::size_t n, const std::vector<Edge>& edges, i64 bound, u64 seed,
                                      int attempts = kCirculationAttempts) {
  require(bound >= 0, ErrorKind::parameter, "circulation bound must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<i64> dist(-bound, bound);
  SkewWeights w{n, edges, std::vector<i64>(edges.size(), 0), false};
  for (int a = 0; a < attempts; ++a) {
    if (a > 0 || bound > 0)
      for (auto& v : w.value) v = dist(rng);
    if (verify_nonzero_circulation(w)) {
      w.verified = true;
      return w;
    }
  }
  fail(ErrorKind::search_failure, "no nonzero circulation with bound " + std::to_string(bound) + " after " +
                                      std::to_string(attempts) + " attempts");
}

/// Assigns edges one at a time in a seeded order, giving each the value of
/// least magnitude that keeps every cycle it closes nonzero. Always succeeds.
inline SkewWeights greedy_circulation(std::size_t n, const std::vector<Edge>& edges, u64 seed) {
  require(n <= kCirculationVertexCap, ErrorKind::oracle_scale,
          "circulation check over " + std::to_string(kCirculationVertexCap) + " vertices");
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  struct Arc {
    std::size_t to, edge;
    i64 sign;
  };
  std::vector<std::vector<Arc>> adj(n);
  std::vector<i64> value(edges.size(), 0);
  std::vector<bool> on_path(n, false);
  for (std::size_t idx : order) {
    const Edge& e = edges[idx];
    if (e.u == e.v) continue;
    // cycles closed by e: e from u to v, then a simple path v -> u over placed edges
    std::set<i64> forbidden;
    std::function<void(std::size_t, i64)> dfs = [&](std::size_t at, i64 sum) {
      if (at == e.u) {
        forbidden.insert(-sum);
        return;
      }
      for (const Arc& a : adj[at]) {
        if (on_path[a.to]) continue;
        on_path[a.to] = true;
        dfs(a.to, sum + a.sign * value[a.edge]);
        on_path[a.to] = false;
      }
    };
    on_path[e.v] = true;
    dfs(e.v, 0);
    on_path[e.v] = false;
    i64 pick = 1;
    for (i64 k = 1;; ++k) {
      if (!forbidden.count(k)) {
        pick = k;
        break;
      }
      if (!forbidden.count(-k)) {
        pick = -k;
        break;
      }
    }
    value[idx] = pick;
    adj[e.u].push_back({e.v, idx, +1});
    adj[e.v].push_back({e.u, idx, -1});
  }
  SkewWeights w{n, edges, value, false};
  w.verified = verify_nonzero_circulation(w);
  require(w.verified, ErrorKind::internal_invariant, "greedy circulation left a zero cycle");
  return w;
}

inline constexpr int kGreedyOrders = 4;

/// Best of a few greedy orders, then random search at smaller bounds growing by
/// a quarter per failed round. Graphs over the verification cap get a single
/// unverified sample with a wide bound.
inline SkewWeights find_circulation(std::size_t n, const std::vector<Edge>& edges, i64 initial_bound, u64 seed) {
  if (n > kCirculationVertexCap) {
    const i64 wide = static_cast<i64>(n * n * n);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<i64> dist(-wide, wide);
    SkewWeights w{n, edges, std::vector<i64>(edges.size(), 0), false};
    for (auto& v : w.value) v = dist(rng);
    return w;
  }
  SkewWeights best = greedy_circulation(n, edges, seed);
  for (int k = 1; k < kGreedyOrders; ++k) {
    SkewWeights w = greedy_circulation(n, edges, seed + static_cast<u64>(k) * 0x9e3779b97f4a7c15ULL);
    if (w.bound() < best.bound()) best = std::move(w);
  }
  i64 bound = std::max<i64>(initial_bound, 1);
  for (int round = 0; bound < best.bound(); ++round, bound += std::max<i64>(1, bound / 4)) {
    try {
      return circulation_search(n, edges, bound, seed + static_cast<u64>(round));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::search_failure) throw;
    }
  }
  return best;
}

// ---- prime-residue families over new edges ----

/// Candidate weights for new edges e_1..e_N, one vector per prime tuple.
struct FgtFamily {
  std::size_t num_new_edges = 0;
  std::vector<PrimeTuple> tuples;
  std::vector<std::vector<u64>> weights;  // [candidate][j - 1]
  u64 max_weight = 0;

  std::size_t size() const noexcept { return weights.size(); }
  friend bool operator==(const FgtFamily&, const FgtFamily&) = default;
};

inline std::size_t fgt_stages(std::size_t num_new_edges) {
  std::size_t l = 0;
  while ((std::size_t{1} << l) < num_new_edges) ++l;
  return std::max<std::size_t>(1, l);
}

inline constexpr std::size_t kDefaultMaxTuples = 256;

/// Bit budget giving at least a handful of tuples for N new edges.
inline unsigned default_prime_bits(std::size_t num_new_edges) {
  return static_cast<unsigned>(std::max<std::size_t>(3, fgt_stages(num_new_edges) + 2));
}

inline FgtFamily fgt_weight_family(std::size_t num_new_edges, unsigned prime_bits,
                                   std::size_t max_tuples = kDefaultMaxTuples) {
  require(num_new_edges >= 1, ErrorKind::parameter, "fgt_weight_family: need at least one new edge");
  require(prime_bits >= 2 && prime_bits <= 20, ErrorKind::parameter, "fgt_weight_family: prime_bits out of range");
  require(max_tuples >= 1, ErrorKind::parameter, "fgt_weight_family: max_tuples must be positive");
  const std::size_t l = fgt_stages(num_new_edges);
  const auto primes = primes_up_to((u64{1} << prime_bits) - 1);
  require(primes.size() >= l, ErrorKind::budget_exhausted,
          "fgt_weight_family: " + std::to_string(primes.size()) + " primes below 2^" + std::to_string(prime_bits) +
              ", need " + std::to_string(l));
  FgtFamily fam;
  fam.num_new_edges = num_new_edges;
  std::vector<std::size_t> idx(l);
  for (std::size_t i = 0; i < l; ++i) idx[i] = i;
  while (fam.tuples.size() < max_tuples) {
    PrimeTuple t{{}, prime_bits};
    for (std::size_t i : idx) t.primes.push_back(primes[i]);
    const u64 base = t.largest() * num_new_edges + 1;
    std::vector<u64> w(num_new_edges);
    for (std::size_t j = 1; j <= num_new_edges; ++j) {
      u128 acc = 0;
      for (u64 p : t.primes) acc = acc * base + mod_pow(2, j, p);
      require(acc <= kFksMagnitudeCap, ErrorKind::magnitude, "fgt_weight_family: weight overflow");
      w[j - 1] = static_cast<u64>(acc);
      fam.max_weight = std::max(fam.max_weight, w[j - 1]);
    }
    fam.tuples.push_back(std::move(t));
    fam.weights.push_back(std::move(w));
    // next combination in lexicographic order
    std::size_t pos = l;
    while (pos > 0 && idx[pos - 1] == primes.size() - l + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < l; ++i) idx[i] = idx[i - 1] + 1;
  }
  return fam;
}

/// A family of full assignments over old and new edges.
struct WeightFamily {
  std::vector<WeightAssignment> candidates;
  std::vector<PrimeTuple> provenance;
  std::size_t size() const noexcept { return candidates.size(); }
};

/// Old edges keep their weight; new edge j gets shift * candidate weight.
inline WeightFamily combine_with_old(const WeightAssignment& old, const std::vector<Edge>& new_edges,
                                     const FgtFamily* fam, u64 shift) {
  WeightFamily out;
  if (new_edges.empty() || fam == nullptr) {
    out.candidates.push_back(old);
    out.provenance.emplace_back();
    return out;
  }
  require(fam->num_new_edges == new_edges.size(), ErrorKind::contract, "combine_with_old: family size mismatch");
  for (const auto& e : new_edges)
    require(old.weight.count(e) == 0, ErrorKind::contract, "combine_with_old: old and new edges overlap");
  for (std::size_t c = 0; c < fam->size(); ++c) {
    WeightAssignment w = old;
    for (std::size_t j = 0; j < new_edges.size(); ++j) {
      const u128 v = static_cast<u128>(shift) * fam->weights[c][j];
      require(v < (u128{1} << 63), ErrorKind::magnitude, "combine_with_old: combined weight overflow");
      w.set(new_edges[j], static_cast<u64>(v));
    }
    out.candidates.push_back(std::move(w));
    out.provenance.push_back(fam->tuples[c]);
  }
  return out;
}

// ---- isolation ----

inline std::vector<u64> weights_by_index(const BipartiteGraph& g, const WeightAssignment& w) {
  std::vector<u64> out;
  out.reserve(g.edge_count());
  for (const auto& e : g.edges()) out.push_back(w.at(e));
  return out;
}

/// Exactly one perfect matching has minimum weight (vacuous without one).
inline bool verify_isolating_pm(const BipartiteGraph& g, const WeightAssignment& w) {
  const auto pms = oracle::oracle_enumerate_pms(g, weights_by_index(g, w));
  if (pms.empty()) return true;
  u64 best = ~u64{0};
  std::size_t count = 0;
  for (const auto& m : pms) {
    if (m.weight < best) {
      best = m.weight;
      count = 0;
    }
    if (m.weight == best) ++count;
  }
  return count == 1;
}

inline std::size_t select_isolating(const BipartiteGraph& g, const WeightFamily& fam) {
  for (std::size_t i = 0; i < fam.size(); ++i)
    if (verify_isolating_pm(g, fam.candidates[i])) return i;
  fail(ErrorKind::family_failure, "no isolating candidate among " + std::to_string(fam.size()));
}

// ---- field concatenation ----

/// Mixed-radix layout: weight = (..(f0 * r1 + f1) * r2 + f2 ..). radix[0] is
/// unused (top field is unbounded).
struct FieldLayout {
  std::vector<u64> radix;

  u64 scale(std::size_t field) const {
    u128 s = 1;
    for (std::size_t i = field + 1; i < radix.size(); ++i) s *= radix[i];
    require(s < (u128{1} << 63), ErrorKind::magnitude, "field layout scale overflow");
    return static_cast<u64>(s);
  }

  u64 encode(const std::vector<u64>& fields) const {
    require(fields.size() == radix.size(), ErrorKind::contract, "field count mismatch");
    u128 acc = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      require(i == 0 || fields[i] < radix[i], ErrorKind::magnitude, "field value exceeds radix");
      acc = i == 0 ? fields[0] : acc * radix[i] + fields[i];
      require(acc < (u128{1} << 63), ErrorKind::magnitude, "concatenated weight overflow");
    }
    return static_cast<u64>(acc);
  }

  std::vector<u64> decode(u64 weight) const {
    std::vector<u64> fields(radix.size(), 0);
    for (std::size_t i = radix.size(); i-- > 1;) {
      fields[i] = weight % radix[i];
      weight /= radix[i];
    }
    fields[0] = weight;
    return fields;
  }

  /// Top field of a sum; carries from lower fields only ever push this up.
  u64 top(u64 weight) const { return weight / scale(0); }
};

/// Per-arc concatenated weights.
struct ConcatWeights {
  FieldLayout layout;
  std::map<Edge, u64> arc_weight;
  u64 max_weight = 0;
};

/// Arc weights <length, candidate, offset + signed circulation> for shortest
/// path isolation. Undirected edges give two arcs whose low fields differ in
/// the circulation sign. Deleted edges are simply absent.
inline std::vector<ConcatWeights> distance_weights(const Graph& g, const std::set<Edge>& new_edges,
                                                   const FgtFamily* fam, const std::vector<Edge>& fam_order,
                                                   const SkewWeights& u) {
  const std::size_t n = g.n();
  const u64 b = static_cast<u64>(u.bound());
  const u64 offset = n * b + 1;
  const u64 span = n > 1 ? n - 1 : 1;
  const u64 low_radix = span * (offset + b) + 1;
  const u64 mid_max = fam ? fam->max_weight : 0;
  const u64 mid_radix = span * mid_max + 1;
  FieldLayout layout{{0, mid_radix, low_radix}};
  std::map<Edge, std::size_t> fam_index;
  for (std::size_t j = 0; j < fam_order.size(); ++j) fam_index[fam_order[j]] = j;

  std::vector<ConcatWeights> out;
  const std::size_t candidates = fam ? fam->size() : 1;
  for (std::size_t c = 0; c < candidates; ++c) {
    ConcatWeights cw{layout, {}, 0};
    for (const auto& [e, len] : g.edges()) {
      const bool fresh = new_edges.count(e) != 0;
      u64 mid = 0;
      if (fresh) {
        require(fam != nullptr && fam_index.count(e), ErrorKind::contract, "new edge missing from family order");
        mid = fam->weights[c][fam_index.at(e)];
      }
      const i64 skew = fresh ? 0 : u.at(e);
      auto add_arc = [&](Edge arc, i64 sign) {
        const u64 low = static_cast<u64>(static_cast<i64>(offset) + sign * skew);
        const u64 w = layout.encode({len, mid, low});
        cw.arc_weight[arc] = w;
        cw.max_weight = std::max(cw.max_weight, w);
      };
      add_arc(e, +1);
      if (!g.directed() && e.u != e.v) add_arc({e.v, e.u}, -1);
    }
    out.push_back(std::move(cw));
  }
  return out;
}

/// Oriented edge list of g for circulation purposes.
inline std::vector<Edge> circulation_edges(const Graph& g) {
  std::vector<Edge> out;
  for (const auto& [e, len] : g.edges()) {
    (void)len;
    if (e.u != e.v) out.push_back(e);
  }
  return out;
}

}  // namespace dyniso
