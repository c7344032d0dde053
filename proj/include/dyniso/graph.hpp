#pragma once

// Edge-keyed graphs shared by the engines, oracles and the scenario runner.
// Vertices are 0-based internally.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dyniso/error.hpp"

namespace dyniso {

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One edge insertion or deletion. For bipartite graphs u is the left index
/// and v the right index; len is ignored there.
struct EdgeChange {
  bool insert = true;
  std::size_t u = 0;
  std::size_t v = 0;
  std::uint64_t len = 1;
};

/// Simple graph with one nonnegative length per edge.
/// Undirected edges are stored with u <= v.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, bool directed) : n_(n), directed_(directed) {}

  std::size_t n() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::map<Edge, std::uint64_t>& edges() const noexcept { return edges_; }

  Edge key(std::size_t u, std::size_t v) const {
    require(u < n_ && v < n_, ErrorKind::contract,
            "vertex out of range: " + std::to_string(u) + "," + std::to_string(v));
    if (!directed_ && v < u) std::swap(u, v);
    return {u, v};
  }

  bool has(std::size_t u, std::size_t v) const { return edges_.count(key(u, v)) != 0; }
  std::uint64_t length(std::size_t u, std::size_t v) const { return edges_.at(key(u, v)); }

  void insert(std::size_t u, std::size_t v, std::uint64_t len = 1) { edges_[key(u, v)] = len; }
  bool erase(std::size_t u, std::size_t v) { return edges_.erase(key(u, v)) != 0; }

  /// Arcs in both directions for undirected graphs.
  std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, std::uint64_t>>> adj(n_);
    for (const auto& [e, len] : edges_) {
      adj[e.u].emplace_back(e.v, len);
      if (!directed_ && e.u != e.v) adj[e.v].emplace_back(e.u, len);
    }
    return adj;
  }

 private:
  std::size_t n_ = 0;
  bool directed_ = true;
  std::map<Edge, std::uint64_t> edges_;
};

/// Bipartite graph with left part [0, nl) and right part [0, nr); edge (l, r).
class BipartiteGraph {
 public:
  BipartiteGraph() = default;
  BipartiteGraph(std::size_t nl, std::size_t nr) : nl_(nl), nr_(nr) {}

  std::size_t left() const noexcept { return nl_; }
  std::size_t right() const noexcept { return nr_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool has(std::size_t l, std::size_t r) const {
    for (const auto& e : edges_)
      if (e.u == l && e.v == r) return true;
    return false;
  }
  void insert(std::size_t l, std::size_t r) {
    require(l < nl_ && r < nr_, ErrorKind::contract, "bipartite vertex out of range");
    if (!has(l, r)) edges_.push_back({l, r});
  }
  bool erase(std::size_t l, std::size_t r) {
    for (auto it = edges_.begin(); it != edges_.end(); ++it)
      if (it->u == l && it->v == r) {
        edges_.erase(it);
        return true;
      }
    return false;
  }

 private:
  std::size_t nl_ = 0, nr_ = 0;
  std::vector<Edge> edges_;
};

}  // namespace dyniso
