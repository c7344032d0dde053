#pragma once

// Bipartite maximum matching under edge batches, two ways.
// Route A keeps the generalized Tutte determinant as a series in y = 1/x
// after eliminating the pendant vertices; route B keeps the rank of the
// weighted Tutte matrix modulo a few primes.
//
// Matrix vertex order: left vertices 0..nl-1, then right vertices nl..nl+nr-1.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dyniso/dynrank.hpp"
#include "dyniso/error.hpp"
#include "dyniso/fieldcore.hpp"
#include "dyniso/graph.hpp"
#include "dyniso/isoweights.hpp"
#include "dyniso/polyseries.hpp"

namespace dyniso {

struct MatchOptions {
  std::size_t epoch_length = 8;
  std::size_t new_edge_cap = 1;
  std::size_t max_tuples = kDefaultMaxTuples;
  std::uint64_t seed = 1;
};

/// Isolating weights w''' for the current epoch: circulation values on the
/// edges present at the last rebuild, a shifted prime-residue family on the
/// edges inserted since.
class MatchEpoch {
 public:
  struct Removed {
    Edge e;
    std::vector<u64> weight;  // per candidate, as it was before removal
  };
  struct Outcome {
    bool rebuilt = false;
    bool family_changed = false;
    std::vector<Removed> removed;
    std::vector<Edge> added;  // present again without a family change
  };

  MatchEpoch(const BipartiteGraph& g, MatchOptions opt) : g_(g), opt_(opt) {
    require(opt_.new_edge_cap >= 1, ErrorKind::parameter, "new edge cap must be positive");
    require(opt_.epoch_length >= 1, ErrorKind::parameter, "epoch length must be positive");
    rebuild();
  }

  const BipartiteGraph& graph() const noexcept { return g_; }
  std::size_t n() const noexcept { return g_.left() + g_.right(); }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t candidate_count() const noexcept { return fam_ ? fam_->size() : 1; }
  const SkewWeights& circulation() const noexcept { return circ_; }
  bool is_old(const Edge& e) const { return old_w_.count(e) != 0; }

  /// Bound on w''' of any edge this epoch, whatever gets inserted.
  u64 weight_bound() const noexcept { return weight_bound_; }
  /// Bound on the w''' total of any matching this epoch.
  u64 matching_bound() const noexcept { return matching_bound_; }

  u64 weight(std::size_t c, const Edge& e) const {
    if (auto it = old_w_.find(e); it != old_w_.end()) return it->second;
    const auto idx = static_cast<std::size_t>(std::find(fam_order_.begin(), fam_order_.end(), e) - fam_order_.begin());
    require(fam_ && idx < fam_order_.size(), ErrorKind::contract, "weight of an edge outside the epoch");
    return shift_ * fam_->weights[c][idx];
  }

  std::vector<Edge> present_new() const { return {present_new_.begin(), present_new_.end()}; }
  std::vector<Edge> old_edges() const {
    std::vector<Edge> out;
    for (const auto& [e, w] : old_w_) out.push_back(e);
    return out;
  }

  std::optional<PrimeTuple> tuple(std::size_t c) const {
    if (fam_ && c < fam_->tuples.size()) return fam_->tuples[c];
    return std::nullopt;
  }

  Outcome apply(const std::vector<EdgeChange>& batch) {
    Outcome out;
    std::set<Edge> removed, added;
    for (const auto& ch : batch) {
      require(ch.u < g_.left() && ch.v < g_.right(), ErrorKind::contract,
              "bipartite vertex out of range: " + std::to_string(ch.u) + "," + std::to_string(ch.v));
      const Edge e{ch.u, ch.v};
      if (ch.insert) {
        if (g_.has(e.u, e.v)) continue;
        g_.insert(e.u, e.v);
        if (!removed.erase(e)) added.insert(e);
      } else {
        if (!g_.erase(e.u, e.v)) continue;
        if (!added.erase(e)) removed.insert(e);
      }
    }
    ++age_;
    std::size_t accumulated = fam_order_.size();
    for (const auto& e : added)
      if (!is_old(e) && std::find(fam_order_.begin(), fam_order_.end(), e) == fam_order_.end()) ++accumulated;
    if (age_ > opt_.epoch_length || accumulated > opt_.new_edge_cap) {
      rebuild();
      out.rebuilt = true;
      return out;
    }
    for (const auto& e : removed) {
      Removed r{e, {}};
      for (std::size_t c = 0; c < candidate_count(); ++c) r.weight.push_back(weight(c, e));
      out.removed.push_back(std::move(r));
      if (is_old(e))
        old_w_.erase(e);
      else
        present_new_.erase(e);
    }
    for (const auto& e : added) {
      present_new_.insert(e);
      if (std::find(fam_order_.begin(), fam_order_.end(), e) == fam_order_.end()) {
        fam_order_.push_back(e);
        out.family_changed = true;
      } else {
        out.added.push_back(e);
      }
    }
    if (out.family_changed) {
      fam_ = fgt_weight_family(fam_order_.size(), prime_bits_, opt_.max_tuples);
      out.added.clear();
    }
    return out;
  }

 private:
  void rebuild() {
    ++epoch_;
    age_ = 0;
    fam_.reset();
    fam_order_.clear();
    present_new_.clear();
    old_w_.clear();
    const std::size_t nl = g_.left();
    std::vector<Edge> arcs;
    for (const auto& e : g_.edges()) arcs.push_back({e.u, nl + e.v});
    circ_ = find_circulation(n(), arcs, 1, opt_.seed * 104729 + epoch_);
    const u64 b = static_cast<u64>(circ_.bound());
    u64 max_old = 0;
    for (std::size_t i = 0; i < g_.edges().size(); ++i) {
      const u64 w = static_cast<u64>(circ_.value[i] + static_cast<i64>(b));
      old_w_[g_.edges()[i]] = w;
      max_old = std::max(max_old, w);
    }
    const u64 side = std::min(g_.left(), g_.right());
    shift_ = max_old * side + 1;
    prime_bits_ = default_prime_bits(opt_.new_edge_cap);
    u64 fam_max = 0;
    for (std::size_t k = 1; k <= opt_.new_edge_cap; ++k)
      fam_max = std::max(fam_max, fgt_weight_family(k, prime_bits_, opt_.max_tuples).max_weight);
    weight_bound_ = std::max(max_old, shift_ * fam_max);
    matching_bound_ = side * max_old + std::min<u64>(side, opt_.new_edge_cap) * shift_ * fam_max;
  }

  BipartiteGraph g_;
  MatchOptions opt_;
  std::size_t epoch_ = 0, age_ = 0;
  SkewWeights circ_;
  std::map<Edge, u64> old_w_;
  std::vector<Edge> fam_order_;
  std::set<Edge> present_new_;
  std::optional<FgtFamily> fam_;
  u64 shift_ = 1, weight_bound_ = 0, matching_bound_ = 0;
  unsigned prime_bits_ = 3;
};

/// Maximum matching size with the weight data of the winning candidate.
struct MatchAnswer {
  std::size_t size = 0;
  u64 weight = 0;        // w''' total of the isolated matching
  u64 pendant_sum = 0;   // w'' total over unmatched vertices
  std::size_t candidate = 0;
  std::vector<u64> primes;  // candidate tuple, empty before any insertion
  u64 modulus = 0;          // route B: prime of the winning copy
};

// ---- route A ----

namespace match_detail {

// Woodbury for a symmetric C and a symmetric change: only the upper
// triangle of the correction is multiplied out.
inline PolyMatrix symmetric_woodbury(const PolyMatrix& c, const LowRankChange& chg) {
  if (chg.empty()) return c;
  const PolyMatrix strip = detail::bvc(c, chg);
  const PolyMatrix right = polymat_mul(polymat_inv_small(detail::capacitance(strip, chg)), strip);
  PolyMatrix out = c;
  const std::size_t n = c.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      TruncPoly acc = TruncPoly::zero(c.m());
      for (std::size_t a = 0; a < chg.rows.size(); ++a) {
        const TruncPoly& l = c(i, chg.rows[a]);
        if (!l.is_zero() && !right(a, j).is_zero()) acc += poly_mul_trunc(l, right(a, j));
      }
      if (acc.is_zero()) continue;
      out(i, j) += acc;
      if (j != i) out(j, i) += acc;
    }
  return out;
}

}  // namespace match_detail

/// Exponent layout of the pendant-eliminated generalized Tutte matrix.
/// A generalized perfect matching with edge set M costs
/// X/2 = (n - |M|) B1 + B2 * sum_{v unmatched} w''(v) + sum_{e in M} w'''(e)
/// and shows up in det as y^(n w_inf - X).
struct GenTutteLayout {
  std::size_t n = 0;
  u64 b1 = 0, b2 = 0, w_inf = 0;
  std::size_t m = 0;

  u64 pendant(std::size_t wpp) const { return b1 + wpp * b2; }
  u64 edge(u64 w3) const { return b1 + w3; }
};

class GenTutteState {
 public:
  GenTutteState(const BipartiteGraph& g, MatchOptions opt = {}) : ep_(g, opt) { rebuild(); }

  const BipartiteGraph& graph() const noexcept { return ep_.graph(); }
  const MatchEpoch& epoch() const noexcept { return ep_; }
  const GenTutteLayout& layout() const noexcept { return lay_; }
  std::size_t candidate_count() const noexcept { return c_.size(); }
  const PolyMatrix& candidate_inverse(std::size_t c) const { return c_.at(c); }
  const TruncPoly& candidate_det(std::size_t c) const { return d_.at(c); }

  /// T-hat for candidate c over the current graph, built from scratch.
  PolyMatrix matrix(std::size_t c) const {
    PolyMatrix t = PolyMatrix::identity(lay_.n, lay_.m);
    for (std::size_t v = 0; v < lay_.n; ++v) t(v, v).add_shifted(TruncPoly::one(lay_.m), diag_degree(v));
    for (const auto& e : graph().edges()) {
      const auto deg = edge_degree(ep_.weight(c, e));
      t(e.u, right(e.v)) = TruncPoly::monomial(lay_.m, deg);
      t(right(e.v), e.u) = TruncPoly::monomial(lay_.m, deg);
    }
    return t;
  }

  void apply(const std::vector<EdgeChange>& batch) {
    const auto out = ep_.apply(batch);
    if (out.rebuilt) {
      rebuild();
      return;
    }
    for (const auto& r : out.removed) {
      if (old_removed(r)) {
        const auto chg = edge_change(r.e, r.weight.front());
        base_d_ = det_update(base_d_, base_c_, chg);
        base_c_ = match_detail::symmetric_woodbury(base_c_, chg);
        base_edges_.erase(r.e);
        if (!out.family_changed)
          for (std::size_t c = 0; c < c_.size(); ++c) {
            d_[c] = det_update(d_[c], c_[c], chg);
            c_[c] = match_detail::symmetric_woodbury(c_[c], chg);
          }
      } else if (!out.family_changed) {
        for (std::size_t c = 0; c < c_.size(); ++c) {
          const auto chg = edge_change(r.e, r.weight[c]);
          d_[c] = det_update(d_[c], c_[c], chg);
          c_[c] = match_detail::symmetric_woodbury(c_[c], chg);
        }
      }
    }
    if (out.family_changed) {
      rebuild_candidates();
    } else {
      for (const auto& e : out.added)
        for (std::size_t c = 0; c < c_.size(); ++c) {
          const auto chg = edge_change(e, ep_.weight(c, e));
          d_[c] = det_update(d_[c], c_[c], chg);
          c_[c] = match_detail::symmetric_woodbury(c_[c], chg);
        }
    }
    check_nonzero();
  }

  /// Decode one determinant: (size, X/2) or nothing when d is zero.
  struct Decoded {
    std::size_t size = 0;
    u64 half = 0;
    u64 pendant_sum = 0;
    u64 weight = 0;
  };

  Decoded decode(const TruncPoly& d) const {
    const auto top = d.max_degree();
    require(top.has_value(), ErrorKind::internal_invariant, "generalized Tutte determinant vanished");
    const u64 x = static_cast<u64>(lay_.n) * lay_.w_inf - *top;
    require(x % 2 == 0, ErrorKind::internal_invariant, "odd minimum exponent: a self loop won");
    Decoded out;
    out.half = x / 2;
    const u64 unmatched_pairs = out.half / lay_.b1;
    require(unmatched_pairs <= lay_.n, ErrorKind::internal_invariant, "decoded more unmatched vertices than exist");
    out.size = lay_.n - static_cast<std::size_t>(unmatched_pairs);
    out.pendant_sum = (out.half % lay_.b1) / lay_.b2;
    out.weight = out.half % lay_.b2;
    // every unmatched vertex carries w'' >= 1, matched graphs carry none
    const std::size_t unmatched = lay_.n - 2 * out.size;
    require(2 * out.size <= lay_.n && (unmatched == 0) == (out.pendant_sum == 0) && out.pendant_sum >= unmatched,
            ErrorKind::internal_invariant, "pendant field disagrees with the unmatched count");
    return out;
  }

  MatchAnswer query() const {
    MatchAnswer best;
    bool have = false;
    u64 best_half = 0;
    for (std::size_t c = 0; c < c_.size(); ++c) {
      const auto dec = decode(d_[c]);
      if (!have || dec.size > best.size || (dec.size == best.size && dec.half < best_half)) {
        have = true;
        best_half = dec.half;
        best.size = dec.size;
        best.weight = dec.weight;
        best.pendant_sum = dec.pendant_sum;
        best.candidate = c;
      }
    }
    if (auto t = ep_.tuple(best.candidate)) best.primes = t->primes;
    return best;
  }

  /// Edges of the isolated min-weight maximum matching, found by probing
  /// each edge's removal on the winning candidate.
  std::vector<Edge> extract() const {
    const MatchAnswer ans = query();
    std::vector<std::size_t> order{ans.candidate};
    for (std::size_t c = 0; c < c_.size(); ++c)
      if (c != ans.candidate) order.push_back(c);
    std::string tried;
    for (std::size_t c : order) {
      const auto dec = decode(d_[c]);
      if (dec.size != ans.size) continue;
      std::vector<Edge> out;
      u64 total = 0;
      for (const auto& e : graph().edges()) {
        const u64 w = ep_.weight(c, e);
        const auto probe = decode(det_update(d_[c], c_[c], edge_change(e, w)));
        if (probe.size == dec.size && probe.half == dec.half) continue;
        out.push_back(e);
        total += w;
      }
      std::set<std::size_t> ls, rs;
      bool disjoint = true;
      for (const auto& e : out) disjoint = disjoint && ls.insert(e.u).second && rs.insert(e.v).second;
      if (disjoint && out.size() == dec.size && total == dec.weight) return out;
      tried += (tried.empty() ? "" : ",") + std::to_string(c);
    }
    fail(ErrorKind::isolation_failure, "probed edges do not form the decoded matching (candidates " + tried + ")");
  }

 private:
  std::size_t right(std::size_t r) const { return graph().left() + r; }

  std::size_t wpp(std::size_t v) const {
    const std::size_t nl = graph().left();
    return v < nl ? v + 1 : v - nl + 1;
  }
  u64 diag_degree(std::size_t v) const { return lay_.w_inf - 2 * lay_.pendant(wpp(v)); }
  u64 edge_degree(u64 w3) const { return lay_.w_inf - lay_.edge(w3); }

  LowRankChange edge_change(const Edge& e, u64 w3) const {
    const auto deg = edge_degree(w3);
    return decompose_change({{e.u, right(e.v), TruncPoly::monomial(lay_.m, deg)},
                             {right(e.v), e.u, TruncPoly::monomial(lay_.m, deg)}},
                            lay_.n, lay_.m);
  }

  // removed edges still inside the base inverse
  bool old_removed(const MatchEpoch::Removed& r) const { return base_edges_.count(r.e) != 0; }

  void rebuild() {
    const std::size_t nl = graph().left(), nr = graph().right();
    lay_.n = nl + nr;
    const u64 side_sum = nl * (nl + 1) / 2 + nr * (nr + 1) / 2;
    lay_.b2 = ep_.matching_bound() + 1;
    const u128 b1 = static_cast<u128>(lay_.b2) * (side_sum + 1);
    const u128 p_max = b1 + static_cast<u128>(std::max(nl, nr)) * lay_.b2;
    const u128 w_inf = 2 * p_max + b1;
    const u128 m = static_cast<u128>(lay_.n) * (w_inf - b1);
    require(m < (u128{1} << 36), ErrorKind::magnitude, "generalized Tutte truncation degree too large");
    lay_.b1 = static_cast<u64>(b1);
    lay_.w_inf = static_cast<u64>(w_inf);
    lay_.m = static_cast<std::size_t>(m);
    base_edges_.clear();
    for (const auto& e : ep_.old_edges()) base_edges_.insert(e);
    PolyMatrix t = PolyMatrix::identity(lay_.n, lay_.m);
    for (std::size_t v = 0; v < lay_.n; ++v) t(v, v).add_shifted(TruncPoly::one(lay_.m), diag_degree(v));
    for (const auto& e : graph().edges()) {
      const auto deg = edge_degree(ep_.weight(0, e));
      t(e.u, right(e.v)) = TruncPoly::monomial(lay_.m, deg);
      t(right(e.v), e.u) = TruncPoly::monomial(lay_.m, deg);
    }
    base_c_ = polymat_inv_small(t);
    base_d_ = polymat_det_small(t);
    c_.assign(1, base_c_);
    d_.assign(1, base_d_);
    check_nonzero();
  }

  void rebuild_candidates() {
    const std::size_t k = ep_.candidate_count();
    c_.assign(k, base_c_);
    d_.assign(k, base_d_);
    const auto fresh = ep_.present_new();
    if (fresh.empty()) return;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<EntryDelta> delta;
      for (const auto& e : fresh) {
        const auto deg = edge_degree(ep_.weight(c, e));
        delta.push_back({e.u, right(e.v), TruncPoly::monomial(lay_.m, deg)});
        delta.push_back({right(e.v), e.u, TruncPoly::monomial(lay_.m, deg)});
      }
      const auto chg = decompose_change(delta, lay_.n, lay_.m);
      d_[c] = det_update(base_d_, base_c_, chg);
      c_[c] = match_detail::symmetric_woodbury(base_c_, chg);
    }
  }

  void check_nonzero() const {
    for (std::size_t c = 0; c < d_.size(); ++c)
      require(!d_[c].is_zero(), ErrorKind::internal_invariant,
              "determinant of candidate " + std::to_string(c) + " vanished");
  }

  MatchEpoch ep_;
  GenTutteLayout lay_;
  std::set<Edge> base_edges_;
  PolyMatrix base_c_;
  TruncPoly base_d_;
  std::vector<PolyMatrix> c_;
  std::vector<TruncPoly> d_;
};

inline GenTutteState build_gen_tutte(const BipartiteGraph& g, const MatchOptions& opt = {}) {
  return GenTutteState(g, opt);
}

inline void apply_edge_batch_det(GenTutteState& s, const std::vector<EdgeChange>& batch) { s.apply(batch); }

inline MatchAnswer query_mcm(const GenTutteState& s) { return s.query(); }

inline std::vector<Edge> extract_matching(const GenTutteState& s) { return s.extract(); }

// ---- route B ----

inline constexpr u64 kRankPoolPrimes[] = {1000003, 999983, 65537};

/// Default pool plus one prime in [2^29, 2^30) drawn from seed.
inline std::vector<u64> default_rank_primes(u64 seed) {
  std::vector<u64> out(std::begin(kRankPoolPrimes), std::end(kRankPoolPrimes));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<u64> pick(u64{1} << 29, (u64{1} << 30) - 1);
  u64 p = pick(rng) | 1U;
  while (!is_prime(p) || std::find(out.begin(), out.end(), p) != out.end()) p += 2;
  out.push_back(p);
  return out;
}

class TutteRankState {
 public:
  TutteRankState(const BipartiteGraph& g, MatchOptions opt = {}, std::vector<u64> primes = {})
      : ep_(g, opt), primes_(std::move(primes)) {
    if (primes_.empty()) primes_ = default_rank_primes(opt.seed);
    for (u64 p : primes_) require(is_prime(p), ErrorKind::parameter, "rank prime is not prime: " + std::to_string(p));
    rebuild();
  }

  const BipartiteGraph& graph() const noexcept { return ep_.graph(); }
  const MatchEpoch& epoch() const noexcept { return ep_; }
  const std::vector<u64>& primes() const noexcept { return primes_; }
  std::size_t candidate_count() const noexcept { return st_.size(); }
  const AGoodState& copy(std::size_t c, std::size_t k) const { return st_.at(c).at(k); }
  bool last_rank_odd() const noexcept { return odd_; }

  void apply(const std::vector<EdgeChange>& batch) {
    const auto out = ep_.apply(batch);
    if (out.rebuilt) {
      rebuild();
      return;
    }
    const std::size_t k = ep_.candidate_count();
    if (out.family_changed && st_.size() != k) st_.resize(k, st_.front());
    for (std::size_t c = 0; c < st_.size(); ++c)
      for (std::size_t q = 0; q < primes_.size(); ++q) {
        EntryBatch upd;
        for (const auto& r : out.removed) put(upd, r.e, std::nullopt, q);
        std::vector<Edge> set_now = out.family_changed ? ep_.present_new() : out.added;
        for (const auto& e : set_now) put(upd, e, ep_.weight(c, e), q);
        for (const auto& part : split_batch(upd, st_[c][q].batch_cap())) st_[c][q].apply(part);
      }
  }

  /// Max over copies of rank / 2.
  MatchAnswer query() {
    MatchAnswer best;
    std::size_t best_rank = 0;
    bool have = false;
    for (std::size_t c = 0; c < st_.size(); ++c)
      for (std::size_t q = 0; q < primes_.size(); ++q) {
        const std::size_t r = st_[c][q].rank();
        if (!have || r > best_rank) {
          have = true;
          best_rank = r;
          best.candidate = c;
          best.modulus = primes_[q];
        }
      }
    odd_ = best_rank % 2 == 1;
    best.size = best_rank / 2;
    if (auto t = ep_.tuple(best.candidate)) best.primes = t->primes;
    return best;
  }

 private:
  std::size_t right(std::size_t r) const { return graph().left() + r; }

  void put(EntryBatch& upd, const Edge& e, std::optional<u64> w3, std::size_t q) const {
    const u64 p = primes_[q];
    const u64 v = w3 ? mod_pow(2, *w3, p) : 0;
    upd.push_back({e.u, right(e.v), v});
    upd.push_back({right(e.v), e.u, neg_mod(v, p)});
  }

  void rebuild() {
    const std::size_t n = ep_.n();
    st_.clear();
    st_.resize(1);
    for (std::size_t q = 0; q < primes_.size(); ++q) {
      ResidueMatrix b(n, std::vector<u64>(n, 0));
      const u64 p = primes_[q];
      for (const auto& e : graph().edges()) {
        const u64 v = mod_pow(2, ep_.weight(0, e), p);
        b[e.u][right(e.v)] = v;
        b[right(e.v)][e.u] = neg_mod(v, p);
      }
      st_[0].push_back(init_agood(b, FieldPrime(p)));
    }
  }

  MatchEpoch ep_;
  std::vector<u64> primes_;
  std::vector<std::vector<AGoodState>> st_;  // [candidate][prime]
  bool odd_ = false;
};

inline TutteRankState build_tutte_rank(const BipartiteGraph& g, const MatchOptions& opt = {},
                                       std::vector<u64> primes = {}) {
  return TutteRankState(g, opt, std::move(primes));
}

inline void apply_edge_batch_rank(TutteRankState& s, const std::vector<EdgeChange>& batch) { s.apply(batch); }

inline MatchAnswer query_mcm_rank(TutteRankState& s) { return s.query(); }

}  // namespace dyniso
