#pragma once

// Reachability and shortest distances under edge batches. Each weight
// candidate keeps C ~ (I + A_w)^-1 over GF(2)[[x]] with A_w[a,b] = x^{w(a->b)};
// the minimum-degree term of C[s,t] decodes the distance.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dyniso/error.hpp"
#include "dyniso/graph.hpp"
#include "dyniso/isoweights.hpp"
#include "dyniso/polyseries.hpp"

namespace dyniso {

inline constexpr std::uint64_t kUnreachable = ~std::uint64_t{0};

struct ReachOptions {
  std::size_t epoch_length = 8;
  std::size_t new_edge_cap = 2;
  std::size_t max_tuples = kDefaultMaxTuples;
  std::uint64_t seed = 1;
  std::uint64_t length_bound = 0;  // 0: max(current lengths, 1)
  i64 initial_circulation_bound = 1;
};

/// Where a query answer came from.
struct Provenance {
  std::size_t candidate = 0;
  std::vector<u64> primes;
};

namespace reach_detail {

// sum_{i} A^i truncated at m, by X <- I + X A with monomial A.
inline PolyMatrix walk_series(std::size_t n, const std::map<Edge, u64>& arcs, std::size_t m) {
  PolyMatrix x = PolyMatrix::identity(n, m);
  u64 min_w = ~u64{0};
  for (const auto& [arc, w] : arcs) min_w = std::min(min_w, w);
  if (arcs.empty()) return x;
  require(min_w >= 1, ErrorKind::contract, "arc weights must be positive");
  const std::size_t rounds = m / min_w + 1;
  for (std::size_t r = 0; r < rounds; ++r) {
    PolyMatrix y = PolyMatrix::identity(n, m);
    for (const auto& [arc, w] : arcs)
      for (std::size_t i = 0; i < n; ++i)
        if (!x(i, arc.u).is_zero()) y(i, arc.v).add_shifted(x(i, arc.u), w);
    if (y == x) break;
    x = std::move(y);
  }
  return x;
}

inline std::vector<EntryDelta> arc_deltas(const std::map<Edge, u64>& arcs, std::size_t m) {
  std::vector<EntryDelta> out;
  for (const auto& [arc, w] : arcs) out.push_back({arc.u, arc.v, TruncPoly::monomial(m, w)});
  return out;
}

}  // namespace reach_detail

class ReachDistState {
 public:
  ReachDistState(const Graph& g, ReachOptions opt = {}) : g_(g), opt_(opt) {
    require(opt_.new_edge_cap >= 1, ErrorKind::parameter, "new edge cap must be positive");
    require(opt_.epoch_length >= 1, ErrorKind::parameter, "epoch length must be positive");
    for (const auto& [e, len] : g_.edges()) require(len >= 1, ErrorKind::parameter, "edge lengths must be >= 1");
    rebuild();
  }

  const Graph& graph() const noexcept { return g_; }
  std::size_t n() const noexcept { return g_.n(); }
  std::size_t m() const noexcept { return m_; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t rebuilds() const noexcept { return rebuilds_; }
  std::size_t candidate_count() const noexcept { return cands_.size(); }
  const PolyMatrix& candidate_inverse(std::size_t c) const { return cands_.at(c); }
  const SkewWeights& circulation() const noexcept { return circ_; }

  /// Arc weights of candidate c over the current graph.
  std::map<Edge, u64> candidate_arcs(std::size_t c) const {
    std::map<Edge, u64> out = old_arcs_;
    for (const auto& e : present_new_) {
      for (const auto& [arc, w] : new_arc_weights(e, c)) out[arc] = w;
    }
    return out;
  }

  void apply(const std::vector<EdgeChange>& batch) {
    if (age_ >= opt_.epoch_length) rebuild();
    // normalise: length changes become delete + insert
    std::vector<Edge> dels;
    std::vector<std::pair<Edge, u64>> ins;
    for (const auto& ch : batch) {
      const Edge e = g_.key(ch.u, ch.v);
      if (ch.insert) {
        require(ch.len >= 1, ErrorKind::parameter, "edge lengths must be >= 1");
        ins.emplace_back(e, ch.len);
      } else {
        dels.push_back(e);
      }
    }
    // apply to the graph, tracking net effect
    std::set<Edge> removed, added;
    for (const auto& e : dels)
      if (g_.erase(e.u, e.v)) {
        if (added.count(e))
          added.erase(e);
        else
          removed.insert(e);
      }
    for (const auto& [e, len] : ins) {
      if (g_.has(e.u, e.v)) {
        if (g_.length(e.u, e.v) == len) continue;
        g_.erase(e.u, e.v);
        if (added.count(e))
          added.erase(e);
        else
          removed.insert(e);
      }
      g_.insert(e.u, e.v, len);
      added.insert(e);
    }
    ++age_;
    // edges removed then re-added unchanged cancel out
    for (auto it = added.begin(); it != added.end();) {
      if (removed.count(*it) && old_len_.count(*it) && old_len_.at(*it) == g_.length(it->u, it->v)) {
        removed.erase(*it);
        it = added.erase(it);
      } else if (removed.count(*it) && present_new_.count(*it) && new_len_.at(*it) == g_.length(it->u, it->v)) {
        removed.erase(*it);
        it = added.erase(it);
      } else {
        ++it;
      }
    }
    // insertions that overflow this epoch force a rebuild over the new graph
    std::size_t accumulated = fam_order_.size();
    for (const auto& e : added)
      if (std::find(fam_order_.begin(), fam_order_.end(), e) == fam_order_.end()) ++accumulated;
    bool overflow = accumulated > opt_.new_edge_cap;
    for (const auto& e : added) overflow = overflow || g_.length(e.u, e.v) > len_bound_;
    if (overflow) {
      rebuild();
      return;
    }
    // deletions
    for (const auto& e : removed) {
      if (old_len_.count(e)) {
        std::map<Edge, u64> arcs;
        for (const auto& arc : arcs_of(e)) arcs[arc] = old_arcs_.at(arc);
        for (const auto& arc : arcs_of(e)) old_arcs_.erase(arc);
        old_len_.erase(e);
        const auto chg = decompose_change(reach_detail::arc_deltas(arcs, m_), n(), m_);
        base_ = woodbury_update(base_, chg);
        if (!fam_ || present_new_.empty()) {
          for (auto& c : cands_) c = base_;
        } else {
          for (auto& c : cands_) c = woodbury_update(c, chg);
        }
      } else if (present_new_.count(e)) {
        for (std::size_t c = 0; c < cands_.size(); ++c) {
          const auto chg = decompose_change(reach_detail::arc_deltas(new_arc_weights(e, c), m_), n(), m_);
          cands_[c] = woodbury_update(cands_[c], chg);
        }
        present_new_.erase(e);
        new_len_.erase(e);
      }
    }
    if (added.empty()) return;
    for (const auto& e : added) {
      if (std::find(fam_order_.begin(), fam_order_.end(), e) == fam_order_.end()) fam_order_.push_back(e);
      present_new_.insert(e);
      new_len_[e] = g_.length(e.u, e.v);
    }
    derive_family();
    rebuild_candidates();
  }

  bool reach(std::size_t s, std::size_t t) const {
    check_vertex(s);
    check_vertex(t);
    for (const auto& c : cands_)
      if (!c(s, t).is_zero()) return true;
    return false;
  }

  /// Length of a shortest s-t path, or kUnreachable.
  std::uint64_t dist(std::size_t s, std::size_t t, Provenance* prov = nullptr) const {
    check_vertex(s);
    check_vertex(t);
    std::uint64_t best = kUnreachable;
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      const auto md = min_degree_term(cands_[c](s, t));
      if (!md.found) continue;
      const std::uint64_t d = layout_.top(md.degree);
      if (d < best) {
        best = d;
        if (prov) *prov = provenance(c);
      }
    }
    return best;
  }

  /// Edges of the isolated shortest path, in order from s.
  std::vector<Edge> path(std::size_t s, std::size_t t) const {
    const std::uint64_t d = dist(s, t);
    if (d == kUnreachable) fail(ErrorKind::no_path, "no path from " + std::to_string(s) + " to " + std::to_string(t));
    if (s == t) return {};
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      const auto md = min_degree_term(cands_[c](s, t));
      if (!md.found || layout_.top(md.degree) != d) continue;
      auto out = probe_path(c, s, t, md.degree);
      if (!out.empty()) return out;
    }
    fail(ErrorKind::isolation_failure, "no candidate isolates a shortest path");
  }

  Provenance provenance(std::size_t c) const {
    Provenance p{c, {}};
    if (fam_ && c < fam_->tuples.size()) p.primes = fam_->tuples[c].primes;
    return p;
  }

  /// From-scratch recomputation of every candidate (timing baseline).
  void recompute_from_scratch() {
    base_ = reach_detail::walk_series(n(), old_arcs_, m_);
    for (std::size_t c = 0; c < cands_.size(); ++c) cands_[c] = reach_detail::walk_series(n(), candidate_arcs(c), m_);
  }

 private:
  void check_vertex(std::size_t v) const {
    require(v < n(), ErrorKind::contract, "vertex out of range: " + std::to_string(v));
  }

  std::vector<Edge> arcs_of(const Edge& e) const {
    if (g_.directed() || e.u == e.v) return {e};
    return {e, {e.v, e.u}};
  }

  std::map<Edge, u64> new_arc_weights(const Edge& e, std::size_t c) const {
    const auto idx = static_cast<std::size_t>(std::find(fam_order_.begin(), fam_order_.end(), e) - fam_order_.begin());
    const u64 mid = fam_ ? fam_->weights[c][idx] : 0;
    std::map<Edge, u64> out;
    for (const auto& arc : arcs_of(e)) out[arc] = layout_.encode({new_len_.at(e), mid, offset_});
    return out;
  }

  // Probes every edge's removal; empty result when the arcs found do not chain.
  std::vector<Edge> probe_path(std::size_t cand, std::size_t s, std::size_t t, std::size_t weight) const {
    const PolyMatrix& c = cands_[cand];
    const auto arcs = candidate_arcs(cand);
    std::vector<Edge> on_path;
    for (const auto& [e, len] : g_.edges()) {
      (void)len;
      std::map<Edge, u64> probe;
      for (const auto& arc : arcs_of(e)) probe[arc] = arcs.at(arc);
      const auto chg = decompose_change(reach_detail::arc_deltas(probe, m_), n(), m_);
      const auto md = min_degree_term(entry_after(c, chg, s, t));
      if (md.found && md.degree == weight) continue;
      for (const auto& arc : arcs_of(e)) on_path.push_back(arc);
    }
    std::vector<Edge> out;
    std::size_t at = s;
    std::set<std::size_t> visited{s};
    while (at != t) {
      auto it = std::find_if(on_path.begin(), on_path.end(),
                             [&](const Edge& a) { return a.u == at && !visited.count(a.v); });
      if (it == on_path.end()) return {};
      out.push_back(*it);
      at = it->v;
      visited.insert(at);
    }
    return out;
  }

  // C'[s,t] after the change, from row s and column t of C only.
  TruncPoly entry_after(const PolyMatrix& c, const LowRankChange& chg, std::size_t s, std::size_t t) const {
    const std::size_t l = chg.rows.size();
    PolyMatrix cs(1, l, m_), ct(chg.cols.size(), 1, m_), block = c.submatrix(chg.cols, chg.rows);
    for (std::size_t a = 0; a < l; ++a) cs(0, a) = c(s, chg.rows[a]);
    for (std::size_t b = 0; b < chg.cols.size(); ++b) ct(b, 0) = c(chg.cols[b], t);
    PolyMatrix cap = polymat_mul(chg.B, block);
    for (std::size_t i = 0; i < cap.rows(); ++i) cap(i, i) += TruncPoly::one(m_);
    const PolyMatrix x = polymat_inv_small(cap);
    const PolyMatrix corr = polymat_mul(cs, polymat_mul(x, polymat_mul(chg.B, ct)));
    return c(s, t) + corr(0, 0);
  }

  void rebuild() {
    ++epoch_;
    ++rebuilds_;
    age_ = 0;
    fam_.reset();
    fam_order_.clear();
    present_new_.clear();
    new_len_.clear();
    old_len_.clear();
    for (const auto& [e, len] : g_.edges()) old_len_[e] = len;
    circ_ = find_circulation(n(), circulation_edges(g_), opt_.initial_circulation_bound, opt_.seed * 7919 + epoch_);
    // layout sized for up to new_edge_cap insertions this epoch
    u64 max_len = std::max<u64>(1, opt_.length_bound);
    for (const auto& [e, len] : g_.edges()) max_len = std::max(max_len, len);
    len_bound_ = max_len;
    const u64 span = n() > 1 ? n() - 1 : 1;
    const u64 b = static_cast<u64>(circ_.bound());
    offset_ = n() * b + 1;
    prime_bits_ = default_prime_bits(opt_.new_edge_cap);
    u64 mid_max = 0;
    for (std::size_t k = 1; k <= opt_.new_edge_cap; ++k)
      mid_max = std::max(mid_max, fgt_weight_family(k, prime_bits_, opt_.max_tuples).max_weight);
    // a simple path has at most n-1 arcs and at most new_edge_cap new ones
    const u64 mid_span = std::min<u64>(span, opt_.new_edge_cap);
    layout_ = FieldLayout{{0, mid_span * mid_max + 1, span * (offset_ + b) + 1}};
    const u64 max_w = layout_.encode({len_bound_, mid_max, offset_ + b});
    const u128 m = static_cast<u128>(span) * max_w;
    require(m < (u128{1} << 40), ErrorKind::magnitude, "truncation degree too large");
    m_ = static_cast<std::size_t>(m);
    old_arcs_.clear();
    for (const auto& [e, len] : g_.edges()) {
      const i64 skew = circ_.at(e);
      old_arcs_[e] = layout_.encode({len, 0, static_cast<u64>(static_cast<i64>(offset_) + skew)});
      if (!g_.directed() && e.u != e.v)
        old_arcs_[{e.v, e.u}] = layout_.encode({len, 0, static_cast<u64>(static_cast<i64>(offset_) - skew)});
    }
    base_ = reach_detail::walk_series(n(), old_arcs_, m_);
    cands_.assign(1, base_);
  }

  void derive_family() {
    fam_ = fgt_weight_family(fam_order_.size(), prime_bits_, opt_.max_tuples);
  }

  void rebuild_candidates() {
    cands_.assign(fam_->size(), base_);
    for (std::size_t c = 0; c < cands_.size(); ++c) {
      std::map<Edge, u64> arcs;
      for (const auto& e : present_new_)
        for (const auto& [arc, w] : new_arc_weights(e, c)) arcs[arc] = w;
      if (arcs.empty()) continue;
      cands_[c] = woodbury_update(base_, decompose_change(reach_detail::arc_deltas(arcs, m_), n(), m_));
    }
  }

  Graph g_;
  ReachOptions opt_;
  std::size_t epoch_ = 0, rebuilds_ = 0, age_ = 0;
  SkewWeights circ_;
  FieldLayout layout_;
  u64 offset_ = 1, len_bound_ = 1;
  unsigned prime_bits_ = 3;
  std::size_t m_ = 0;
  std::map<Edge, u64> old_len_;
  std::map<Edge, u64> old_arcs_;
  std::vector<Edge> fam_order_;
  std::set<Edge> present_new_;
  std::map<Edge, u64> new_len_;
  std::optional<FgtFamily> fam_;
  PolyMatrix base_;
  std::vector<PolyMatrix> cands_;
};

inline ReachDistState init_reachdist(const Graph& g, const ReachOptions& opt = {}) { return ReachDistState(g, opt); }

inline void apply_edge_batch(ReachDistState& s, const std::vector<EdgeChange>& batch) { s.apply(batch); }

inline bool query_reach(const ReachDistState& s, std::size_t a, std::size_t b) { return s.reach(a, b); }

inline std::uint64_t query_dist(const ReachDistState& s, std::size_t a, std::size_t b) { return s.dist(a, b); }

inline std::vector<Edge> extract_path(const ReachDistState& s, std::size_t a, std::size_t b) { return s.path(a, b); }

}  // namespace dyniso
