#pragma once

// Scenario files: parsing, replay against the dynamic engines, oracle
// cross-checks, reports, timing against from-scratch recomputation, and a
// seeded generator.
//
// The first batch of a scenario is the initial load: engines are built from
// the graph or matrix it produces. Every later batch is applied dynamically.

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dyniso/dynmatch.hpp"
#include "dyniso/dynrank.hpp"
#include "dyniso/dynreach.hpp"
#include "dyniso/error.hpp"
#include "dyniso/graph.hpp"
#include "dyniso/oracles.hpp"

namespace dyniso::harness {

using json = nlohmann::ordered_json;

enum class Mode { rank, reach, dist, match_det, match_rank };

inline constexpr std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::rank: return "rank";
    case Mode::reach: return "reach";
    case Mode::dist: return "dist";
    case Mode::match_det: return "match-det";
    case Mode::match_rank: return "match-rank";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::rank, Mode::reach, Mode::dist, Mode::match_det, Mode::match_rank})
    if (mode_name(m) == s) return m;
  return std::nullopt;
}

inline bool is_match_mode(Mode m) { return m == Mode::match_det || m == Mode::match_rank; }

// ---- scenario ----

struct Change {
  enum class Kind { ins, del, set } kind = Kind::ins;
  std::size_t a = 0, b = 0;  // 0-based
  u64 value = 1;             // length for ins, entry for set
  std::size_t line = 0;
};

struct Query {
  enum class Kind { reach, dist, path, match, witness, rank } kind = Kind::rank;
  std::size_t s = 0, t = 0;
  std::size_t line = 0;
};

inline constexpr std::string_view query_name(Query::Kind k) {
  switch (k) {
    case Query::Kind::reach: return "reach";
    case Query::Kind::dist: return "dist";
    case Query::Kind::path: return "path";
    case Query::Kind::match: return "match";
    case Query::Kind::witness: return "witness";
    case Query::Kind::rank: return "rank";
  }
  return "?";
}

/// Changes applied atomically, then the queries that follow them.
struct Batch {
  std::vector<Change> changes;
  std::vector<Query> queries;
  std::size_t line = 0;
};

struct Scenario {
  bool matrix = false;
  std::size_t n = 0;
  bool directed = false;
  bool weighted = false;
  u64 prime = 0;
  std::vector<Batch> batches;

  std::size_t query_count() const {
    std::size_t k = 0;
    for (const auto& b : batches) k += b.queries.size();
    return k;
  }
};

inline constexpr std::size_t kMaxGraphVertices = 512;
inline constexpr std::size_t kMaxMatrixDim = 4096;
inline constexpr std::size_t kMaxBatchChanges = std::size_t{1} << 22;

namespace parse_detail {

[[noreturn]] inline void error_at(std::size_t line, const std::string& what) {
  fail(ErrorKind::parse, "line " + std::to_string(line) + ": " + what);
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

struct Fields {
  std::vector<std::string_view> tok;
  std::size_t line;

  u64 number(std::size_t i, std::string_view field) const {
    if (i >= tok.size())
      error_at(line, std::string(tok[0]) + ": missing field <" + std::string(field) + ">");
    u64 v = 0;
    const auto* first = tok[i].data();
    const auto* last = first + tok[i].size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      error_at(line, std::string(tok[0]) + ": field <" + std::string(field) + "> is not a nonnegative integer: '" +
                         std::string(tok[i]) + "'");
    return v;
  }
  void max_fields(std::size_t k) const {
    if (tok.size() > k) error_at(line, std::string(tok[0]) + ": unexpected extra field '" + std::string(tok[k]) + "'");
  }
};

}  // namespace parse_detail

/// Parse scenario text; throws Error(parse) naming the first bad line.
inline Scenario parse_scenario(std::string_view text) {
  using namespace parse_detail;
  Scenario sc;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto vertex = [&](const Fields& f, std::size_t i, std::string_view name) {
    const u64 v = f.number(i, name);
    if (v < 1 || v > sc.n)
      error_at(f.line, "index " + std::to_string(v) + " out of range [1," + std::to_string(sc.n) + "]");
    return static_cast<std::size_t>(v - 1);
  };
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const Fields f{tokens(raw), line_no};
    if (f.tok.empty()) continue;
    const auto kw = f.tok[0];
    if (kw == "graph" || kw == "matrix") {
      if (have_header) error_at(line_no, "second header");
      have_header = true;
      if (kw == "graph") {
        const u64 n = f.number(1, "n");
        if (n < 1 || n > kMaxGraphVertices)
          error_at(line_no, "graph size " + std::to_string(n) + " outside [1," + std::to_string(kMaxGraphVertices) + "]");
        sc.n = static_cast<std::size_t>(n);
        if (f.tok.size() < 3) error_at(line_no, "graph: missing field <directed|undirected>");
        if (f.tok[2] == "directed")
          sc.directed = true;
        else if (f.tok[2] != "undirected")
          error_at(line_no, "graph: expected directed or undirected, got '" + std::string(f.tok[2]) + "'");
        if (f.tok.size() >= 4) {
          if (f.tok[3] != "weighted") error_at(line_no, "graph: unknown flag '" + std::string(f.tok[3]) + "'");
          sc.weighted = true;
        }
        f.max_fields(4);
      } else {
        sc.matrix = true;
        const u64 n = f.number(1, "n");
        if (n < 1 || n > kMaxMatrixDim)
          error_at(line_no, "matrix size " + std::to_string(n) + " outside [1," + std::to_string(kMaxMatrixDim) + "]");
        sc.n = static_cast<std::size_t>(n);
        sc.prime = f.number(2, "p");
        if (sc.prime >= (u64{1} << 62) || !is_prime(sc.prime))
          error_at(line_no, "matrix: modulus " + std::to_string(sc.prime) + " is not a prime below 2^62");
        f.max_fields(3);
      }
      continue;
    }
    if (!have_header) error_at(line_no, "'" + std::string(kw) + "' before the graph or matrix header");
    if (kw == "batch") {
      f.max_fields(1);
      sc.batches.push_back({{}, {}, line_no});
      continue;
    }
    if (kw == "ins" || kw == "del" || kw == "set") {
      if (sc.batches.empty()) error_at(line_no, std::string(kw) + " outside a batch");
      auto& b = sc.batches.back();
      if (!b.queries.empty()) error_at(line_no, std::string(kw) + " after a query in the same batch; start a new batch");
      if (b.changes.size() >= kMaxBatchChanges) error_at(line_no, "batch exceeds " + std::to_string(kMaxBatchChanges) + " changes");
      Change c;
      c.line = line_no;
      if (kw == "set") {
        if (!sc.matrix) error_at(line_no, "set needs a matrix scenario");
        c.kind = Change::Kind::set;
        c.a = vertex(f, 1, "i");
        c.b = vertex(f, 2, "j");
        c.value = f.number(3, "val");
        f.max_fields(4);
      } else {
        if (sc.matrix) error_at(line_no, std::string(kw) + " needs a graph scenario");
        c.kind = kw == "ins" ? Change::Kind::ins : Change::Kind::del;
        c.a = vertex(f, 1, "u");
        c.b = vertex(f, 2, "v");
        if (c.a == c.b) error_at(line_no, std::string(kw) + ": self loop " + std::to_string(c.a + 1));
        if (c.kind == Change::Kind::ins && f.tok.size() >= 4) {
          c.value = f.number(3, "len");
          if (!sc.weighted && c.value != 1) error_at(line_no, "ins: length " + std::to_string(c.value) + " but the graph is not weighted");
        }
        f.max_fields(c.kind == Change::Kind::ins ? 4 : 3);
      }
      b.changes.push_back(c);
      continue;
    }
    if (kw == "q") {
      if (f.tok.size() < 2) error_at(line_no, "q: missing field <kind>");
      if (sc.batches.empty()) sc.batches.push_back({{}, {}, line_no});
      Query q;
      q.line = line_no;
      const auto k = f.tok[1];
      if (k == "reach" || k == "dist" || k == "path") {
        if (sc.matrix) error_at(line_no, "q " + std::string(k) + " needs a graph scenario");
        q.kind = k == "reach" ? Query::Kind::reach : k == "dist" ? Query::Kind::dist : Query::Kind::path;
        q.s = vertex(f, 2, "s");
        q.t = vertex(f, 3, "t");
        f.max_fields(4);
      } else if (k == "match" || k == "witness") {
        if (sc.matrix) error_at(line_no, "q " + std::string(k) + " needs a graph scenario");
        q.kind = k == "match" ? Query::Kind::match : Query::Kind::witness;
        f.max_fields(2);
      } else if (k == "rank") {
        if (!sc.matrix) error_at(line_no, "q rank needs a matrix scenario");
        q.kind = Query::Kind::rank;
        f.max_fields(2);
      } else {
        error_at(line_no, "q: unknown query kind '" + std::string(k) + "'");
      }
      sc.batches.back().queries.push_back(q);
      continue;
    }
    error_at(line_no, "unknown directive '" + std::string(kw) + "'");
  }
  if (!have_header) fail(ErrorKind::parse, "line " + std::to_string(line_no) + ": missing graph or matrix header");
  return sc;
}

// ---- running ----

struct RunOptions {
  u64 seed = 1;
  std::size_t epoch_length = 8;
  std::size_t max_candidates = kDefaultMaxTuples;
  bool verify = false;
};

struct Record {
  std::size_t query_id = 0;
  Mode mode = Mode::rank;
  std::string query;
  std::size_t line = 0;
  json answer;
  json oracle;               // null without --verify
  std::optional<bool> match;
  u64 micros = 0;
  json candidate;
  json prime;
  std::string error;
  std::string warning;

  json to_json() const {
    json j{{"query_id", query_id},
           {"mode", std::string(mode_name(mode))},
           {"answer", answer},
           {"oracle", oracle},
           {"match", match ? json(*match) : json(nullptr)},
           {"micros", micros},
           {"candidate", candidate},
           {"prime", prime}};
    if (!error.empty()) j["error"] = error;
    if (!warning.empty()) j["warning"] = warning;
    return j;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "#" << query_id << " " << mode_name(mode) << " " << query << " (line " << line << ")";
    if (!error.empty()) {
      os << " ERROR " << error;
      return os.str();
    }
    os << " answer=" << answer.dump();
    if (match) os << " oracle=" << oracle.dump() << (*match ? " ok" : " MISMATCH");
    os << " candidate=" << candidate.dump() << " prime=" << prime.dump() << " micros=" << micros;
    if (!warning.empty()) os << " WARNING " << warning;
    return os.str();
  }
};

struct RunResult {
  std::vector<Record> records;
  std::size_t mismatches = 0;
  std::size_t errors = 0;
  std::string abort_reason;  // set when a batch could not be applied
  bool ok() const { return mismatches == 0 && errors == 0 && abort_reason.empty(); }
};

/// Per-batch update cost, dynamic against rebuilding from scratch.
struct TimingReport {
  Mode mode = Mode::rank;
  std::size_t n = 0;
  std::size_t batches = 0;  // dynamic batches timed (the initial load excluded)
  double dynamic_micros = 0;
  double scratch_micros = 0;

  double dynamic_per_batch() const { return batches ? dynamic_micros / static_cast<double>(batches) : 0; }
  double scratch_per_batch() const { return batches ? scratch_micros / static_cast<double>(batches) : 0; }
  double speedup() const { return dynamic_micros > 0 ? scratch_micros / dynamic_micros : 0; }

  json to_json() const {
    return json{{"timing", std::string(mode_name(mode))},
                {"n", n},
                {"batches", batches},
                {"dynamic_micros_per_batch", dynamic_per_batch()},
                {"scratch_micros_per_batch", scratch_per_batch()},
                {"speedup", speedup()}};
  }
};

namespace run_detail {

using clock = std::chrono::steady_clock;

inline u64 micros_since(clock::time_point t0) {
  return static_cast<u64>(std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - t0).count());
}

inline json edges_json(const std::vector<Edge>& edges, std::size_t right_offset = 0) {
  json out = json::array();
  for (const auto& e : edges) out.push_back({e.u + 1, e.v + right_offset + 1});
  return out;
}

inline json primes_json(const std::vector<u64>& p) { return json(p); }

/// Plain model of the scenario state, updated by every batch.
struct Model {
  Graph graph;
  ResidueMatrix matrix;
  u64 prime = 0;

  explicit Model(const Scenario& sc) {
    if (sc.matrix) {
      matrix.assign(sc.n, std::vector<u64>(sc.n, 0));
      prime = sc.prime;
    } else {
      graph = Graph(sc.n, sc.directed);
    }
  }
};

class Engine {
 public:
  virtual ~Engine() = default;
  /// Apply a batch dynamically.
  virtual void apply(const Batch& b) = 0;
  virtual void answer(const Query& q, Record& r, bool verify) = 0;
};

class RankEngine : public Engine {
 public:
  explicit RankEngine(const Scenario& sc, ResidueMatrix a)
      : p_(sc.prime), a_(std::move(a)), st_(init_agood(a_, FieldPrime(p_))) {}

  void apply(const Batch& b) override {
    EntryBatch upd;
    for (const auto& c : b.changes) {
      upd.push_back({c.a, c.b, c.value % p_});
      a_[c.a][c.b] = c.value % p_;
    }
    for (const auto& part : split_batch(upd, st_.batch_cap())) st_.apply(part);
  }

  void answer(const Query& q, Record& r, bool verify) override {
    require(q.kind == Query::Kind::rank, ErrorKind::domain, "rank mode answers only q rank");
    r.answer = st_.rank();
    r.prime = p_;
    if (verify) {
      st_.check_invariants();
      r.oracle = oracle::oracle_rank_mod(a_, p_);
      r.match = r.answer == r.oracle;
    }
  }

 private:
  u64 p_;
  ResidueMatrix a_;
  AGoodState st_;
};

class ReachEngine : public Engine {
 public:
  ReachEngine(const Graph& g, const RunOptions& opt, bool unit)
      : unit_(unit), opt_(opt), st_(g, options()) {}

  void apply(const Batch& b) override {
    std::vector<EdgeChange> batch;
    for (const auto& c : b.changes)
      batch.push_back({c.kind == Change::Kind::ins, c.a, c.b, unit_ ? 1 : c.value});
    st_.apply(batch);
  }

  void answer(const Query& q, Record& r, bool verify) override {
    const Graph& g = st_.graph();
    Provenance prov;
    const auto d = st_.dist(q.s, q.t, &prov);
    if (d != kUnreachable) {
      r.candidate = prov.candidate;
      r.prime = primes_json(prov.primes);
    }
    switch (q.kind) {
      case Query::Kind::reach: {
        r.answer = st_.reach(q.s, q.t);
        if (verify) r.oracle = oracle::oracle_reach(g, q.s, q.t);
        break;
      }
      case Query::Kind::dist: {
        r.answer = d == kUnreachable ? json("inf") : json(d);
        if (verify) {
          const auto o = oracle::oracle_dist(g, q.s, q.t);
          r.oracle = o == oracle::kInfinity ? json("inf") : json(o);
        }
        break;
      }
      case Query::Kind::path: {
        if (d == kUnreachable) {
          r.answer = nullptr;
          if (verify) {
            r.oracle = oracle::oracle_reach(g, q.s, q.t) ? json(oracle::oracle_dist(g, q.s, q.t)) : json(nullptr);
            r.match = r.oracle.is_null();
          }
          return;
        }
        const auto p = st_.path(q.s, q.t);
        r.answer = edges_json(p);
        if (verify) {
          const auto o = oracle::oracle_dist(g, q.s, q.t);
          r.oracle = o;
          r.match = o == d && oracle::oracle_check_path(g, q.s, q.t, p, o);
        }
        return;
      }
      default:
        fail(ErrorKind::domain, std::string("q ") + std::string(query_name(q.kind)) + " needs a match mode");
    }
    if (verify) r.match = r.answer == r.oracle;
  }

 private:
  ReachOptions options() const {
    ReachOptions o;
    o.epoch_length = opt_.epoch_length;
    o.max_tuples = opt_.max_candidates;
    o.seed = opt_.seed;
    return o;
  }

  bool unit_;
  RunOptions opt_;
  ReachDistState st_;
};

/// Bipartite view: left side is the first ceil(n/2) vertices.
struct Sides {
  std::size_t nl = 0, nr = 0;
  explicit Sides(std::size_t n) : nl((n + 1) / 2), nr(n / 2) {}

  EdgeChange change(const Change& c) const {
    std::size_t u = c.a, v = c.b;
    if (u >= nl) std::swap(u, v);
    if (!(u < nl && v >= nl))
      fail(ErrorKind::domain, "line " + std::to_string(c.line) + ": edge " + std::to_string(c.a + 1) + "-" +
                                  std::to_string(c.b + 1) + " does not join the two sides (left is 1.." +
                                  std::to_string(nl) + ")");
    return {c.kind == Change::Kind::ins, u, v - nl, 1};
  }

  BipartiteGraph graph(const Graph& g) const {
    BipartiteGraph b(nl, nr);
    for (const auto& [e, len] : g.edges()) {
      const auto ch = change({Change::Kind::ins, e.u, e.v, 1, 0});
      b.insert(ch.u, ch.v);
    }
    return b;
  }
};

inline MatchOptions match_options(const RunOptions& opt) {
  MatchOptions o;
  o.epoch_length = opt.epoch_length;
  o.max_tuples = opt.max_candidates;
  o.seed = opt.seed;
  return o;
}

class MatchDetEngine : public Engine {
 public:
  MatchDetEngine(const Scenario& sc, const Graph& g, const RunOptions& opt)
      : sides_(sc.n), opt_(opt), st_(sides_.graph(g), match_options(opt)) {}

  void apply(const Batch& b) override {
    std::vector<EdgeChange> batch;
    for (const auto& c : b.changes) batch.push_back(sides_.change(c));
    st_.apply(batch);
  }

  void answer(const Query& q, Record& r, bool verify) override {
    const auto a = st_.query();
    r.candidate = a.candidate;
    r.prime = primes_json(a.primes);
    if (q.kind == Query::Kind::match) {
      r.answer = a.size;
      if (verify) {
        r.oracle = oracle::oracle_mcm(st_.graph());
        r.match = r.answer == r.oracle;
      }
    } else if (q.kind == Query::Kind::witness) {
      const auto m = st_.extract();
      r.answer = edges_json(m, sides_.nl);
      if (verify) {
        const auto o = oracle::oracle_mcm(st_.graph());
        r.oracle = o;
        r.match = oracle::oracle_is_matching(st_.graph(), m) && m.size() == o;
      }
    } else {
      fail(ErrorKind::domain, std::string("q ") + std::string(query_name(q.kind)) + " is not a matching query");
    }
  }

 private:
  Sides sides_;
  RunOptions opt_;
  GenTutteState st_;
};

class MatchRankEngine : public Engine {
 public:
  MatchRankEngine(const Scenario& sc, const Graph& g, const RunOptions& opt)
      : sides_(sc.n), opt_(opt), st_(sides_.graph(g), match_options(opt)) {}

  void apply(const Batch& b) override {
    std::vector<EdgeChange> batch;
    for (const auto& c : b.changes) batch.push_back(sides_.change(c));
    st_.apply(batch);
  }

  void answer(const Query& q, Record& r, bool verify) override {
    if (q.kind == Query::Kind::witness) fail(ErrorKind::domain, "q witness needs match-det");
    if (q.kind != Query::Kind::match)
      fail(ErrorKind::domain, std::string("q ") + std::string(query_name(q.kind)) + " is not a matching query");
    const auto a = st_.query();
    r.answer = a.size;
    r.candidate = a.candidate;
    r.prime = a.modulus;
    if (st_.last_rank_odd()) r.warning = "odd maximum rank: primes or candidates may be insufficient";
    if (verify) {
      r.oracle = oracle::oracle_mcm(st_.graph());
      r.match = r.answer == r.oracle;
    }
  }

 private:
  Sides sides_;
  RunOptions opt_;
  TutteRankState st_;
};

inline void apply_to_model(Model& m, const Batch& b, bool unit) {
  for (const auto& c : b.changes) {
    switch (c.kind) {
      case Change::Kind::set: m.matrix[c.a][c.b] = c.value % m.prime; break;
      case Change::Kind::ins: m.graph.insert(c.a, c.b, unit ? 1 : c.value); break;
      case Change::Kind::del: m.graph.erase(c.a, c.b); break;
    }
  }
}

inline void check_mode(const Scenario& sc, Mode mode) {
  if (mode == Mode::rank) {
    require(sc.matrix, ErrorKind::domain, "rank mode needs a matrix scenario");
    return;
  }
  require(!sc.matrix, ErrorKind::domain, std::string(mode_name(mode)) + " mode needs a graph scenario");
  if (!is_match_mode(mode)) return;
  require(!sc.directed, ErrorKind::domain, "match modes need an undirected graph");
  const Sides sides(sc.n);
  for (const auto& b : sc.batches)
    for (const auto& c : b.changes) sides.change(c);  // throws on a same-side edge
}

inline std::unique_ptr<Engine> make_engine(const Scenario& sc, Mode mode, const Model& m, const RunOptions& opt) {
  switch (mode) {
    case Mode::rank: return std::make_unique<RankEngine>(sc, m.matrix);
    case Mode::reach: return std::make_unique<ReachEngine>(m.graph, opt, true);
    case Mode::dist: return std::make_unique<ReachEngine>(m.graph, opt, false);
    case Mode::match_det: return std::make_unique<MatchDetEngine>(sc, m.graph, opt);
    case Mode::match_rank: return std::make_unique<MatchRankEngine>(sc, m.graph, opt);
  }
  fail(ErrorKind::domain, "unknown mode");
}

}  // namespace run_detail

/// Replay the scenario in the given mode. Throws Error(domain) when the
/// scenario does not fit the mode; engine failures become error records.
inline RunResult run_scenario(const Scenario& sc, Mode mode, const RunOptions& opt = {}) {
  using namespace run_detail;
  check_mode(sc, mode);
  RunResult res;
  Model model(sc);
  std::unique_ptr<Engine> engine;
  const bool unit = mode != Mode::dist;
  std::size_t next_id = 1;
  for (std::size_t bi = 0; bi < sc.batches.size(); ++bi) {
    const Batch& b = sc.batches[bi];
    try {
      apply_to_model(model, b, unit);
      if (!engine)
        engine = make_engine(sc, mode, model, opt);
      else
        engine->apply(b);
    } catch (const Error& e) {
      res.abort_reason = "batch at line " + std::to_string(b.line) + ": " + e.what();
      return res;
    }
    for (const auto& q : b.queries) {
      Record r;
      r.query_id = next_id++;
      r.mode = mode;
      r.query = std::string(query_name(q.kind));
      r.line = q.line;
      const auto t0 = clock::now();
      try {
        engine->answer(q, r, opt.verify);
      } catch (const Error& e) {
        r.error = e.what();
      }
      r.micros = micros_since(t0);
      if (!r.error.empty()) ++res.errors;
      if (r.match && !*r.match) ++res.mismatches;
      res.records.push_back(std::move(r));
    }
  }
  return res;
}

/// Time every batch after the initial load twice: applied dynamically, and
/// by building the engine from scratch over the updated model. For rank the
/// from-scratch side is plain elimination.
inline TimingReport time_scenario(const Scenario& sc, Mode mode, const RunOptions& opt = {}) {
  using namespace run_detail;
  check_mode(sc, mode);
  TimingReport rep;
  rep.mode = mode;
  rep.n = sc.n;
  const bool unit = mode != Mode::dist;
  Model model(sc);
  std::unique_ptr<Engine> engine;
  for (const auto& b : sc.batches) {
    apply_to_model(model, b, unit);
    if (!engine) {
      engine = make_engine(sc, mode, model, opt);
      continue;
    }
    auto t0 = clock::now();
    engine->apply(b);
    rep.dynamic_micros += static_cast<double>(micros_since(t0));
    t0 = clock::now();
    if (mode == Mode::rank)
      (void)rank_mod_p(model.matrix, model.prime);
    else
      (void)make_engine(sc, mode, model, opt);
    rep.scratch_micros += static_cast<double>(micros_since(t0));
    ++rep.batches;
  }
  return rep;
}

// ---- generator ----

struct GenOptions {
  u64 prime = 97;       // rank scenarios
  u64 max_len = 4;      // dist scenarios
  double fill = 0.5;    // rank: density of the initial matrix
  std::size_t queries = 3;  // reach/dist: random pairs per batch
};

/// Deterministic scenario: same arguments, same bytes. The first batch is
/// the initial load; the remaining batches hold batch_size changes each
/// (rank) or 1..batch_size changes (graphs).
inline std::string gen_scenario(Mode kind, std::size_t n, std::size_t batches, std::size_t batch_size, u64 seed,
                                const GenOptions& go = {}) {
  require(batches >= 1 && batch_size >= 1, ErrorKind::parameter, "gen: need at least one batch of size at least one");
  std::mt19937_64 rng(seed);
  auto pick = [&](u64 k) { return static_cast<std::size_t>(rng() % k); };
  std::ostringstream os;
  os << "# generated: " << mode_name(kind) << " n=" << n << " batches=" << batches << " batch_size=" << batch_size
     << " seed=" << seed << "\n";

  if (kind == Mode::rank) {
    require(n >= 1 && n <= kMaxMatrixDim, ErrorKind::parameter, "gen: matrix size out of range");
    require(is_prime(go.prime), ErrorKind::parameter, "gen: modulus is not prime");
    os << "matrix " << n << " " << go.prime << "\nbatch\n";
    const u64 cut = static_cast<u64>(go.fill * 1e6);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (rng() % 1000000 < cut) os << "set " << i + 1 << " " << j + 1 << " " << 1 + rng() % (go.prime - 1) << "\n";
    os << "q rank\n";
    for (std::size_t b = 1; b < batches; ++b) {
      os << "batch\n";
      for (std::size_t k = 0; k < batch_size; ++k) {
        const u64 v = rng() % 4 == 0 ? 0 : 1 + rng() % (go.prime - 1);
        os << "set " << pick(n) + 1 << " " << pick(n) + 1 << " " << v << "\n";
      }
      os << "q rank\n";
    }
    return os.str();
  }

  require(n >= 2 && n <= kMaxGraphVertices, ErrorKind::parameter, "gen: graph size out of range");
  const bool match = is_match_mode(kind);
  const bool weighted = kind == Mode::dist;
  const std::size_t nl = (n + 1) / 2;
  Graph g(n, !match);
  os << "graph " << n << (match ? " undirected" : " directed") << (weighted ? " weighted" : "") << "\n";
  auto random_edge = [&]() -> std::pair<std::size_t, std::size_t> {
    if (match) return {pick(nl), nl + pick(n - nl)};
    std::size_t u = pick(n), v = pick(n - 1);
    if (v >= u) ++v;
    return {u, v};
  };
  auto emit_ins = [&]() {
    const auto [u, v] = random_edge();
    const u64 len = weighted ? 1 + rng() % go.max_len : 1;
    os << "ins " << u + 1 << " " << v + 1;
    if (weighted) os << " " << len;
    os << "\n";
    g.insert(u, v, len);
  };
  auto emit_queries = [&]() {
    if (match) {
      os << "q match\n";
      if (kind == Mode::match_det) os << "q witness\n";
      return;
    }
    for (std::size_t k = 0; k < go.queries; ++k) {
      const std::size_t s = pick(n), t = pick(n);
      os << "q " << (kind == Mode::reach ? "reach " : "dist ") << s + 1 << " " << t + 1 << "\n";
    }
    const std::size_t s = pick(n), t = pick(n);
    if (oracle::oracle_reach(g, s, t)) os << "q path " << s + 1 << " " << t + 1 << "\n";
  };
  // target density: about 1.5 n arcs for reach/dist, 0.75 n + 1 edges for matching
  const std::size_t target = match ? n * 3 / 4 + 1 : n * 3 / 2;
  os << "batch\n";
  for (std::size_t k = 0; k < target * 2 / 3; ++k) emit_ins();
  emit_queries();
  for (std::size_t b = 1; b < batches; ++b) {
    os << "batch\n";
    const std::size_t k = 1 + pick(batch_size);
    for (std::size_t i = 0; i < k; ++i) {
      const bool ins = g.edge_count() == 0 || (g.edge_count() < target ? rng() % 3 != 0 : rng() % 3 == 0);
      if (ins) {
        emit_ins();
      } else {
        auto it = g.edges().begin();
        std::advance(it, static_cast<std::ptrdiff_t>(pick(g.edge_count())));
        const Edge e = it->first;
        os << "del " << e.u + 1 << " " << e.v + 1 << "\n";
        g.erase(e.u, e.v);
      }
    }
    emit_queries();
  }
  return os.str();
}

}  // namespace dyniso::harness
